//! Problem instances: the device mesh, coflows with multi-source flows, routed
//! paths and the random generator used by the experiments.
//!
//! Units are fixed throughout the crate: bandwidth in Mbps, data in Mb and
//! every time in seconds, so a transmission time is simply `data / bandwidth`.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement attempts before the generator gives up on finding a connected mesh.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

/// Truncated normal draws are floored at this fraction of their mean.
pub const TRUNCATION_FLOOR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub usize);

/// Identifies flow `flow` of coflow `coflow`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowId {
    pub coflow: usize,
    pub flow: usize,
}

impl FlowId {
    pub fn new(coflow: usize, flow: usize) -> Self {
        Self { coflow, flow }
    }
}

impl std::fmt::Display for FlowId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.coflow, self.flow)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    /// Requests data; one coflow per requester.
    Requester,
    /// Holds data that flows can be sourced from.
    Generator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: DeviceId,
    pub x: f64,
    pub y: f64,
    pub kind: DeviceKind,
}

/// An undirected link. Endpoints are stored with `a < b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: DeviceId,
    pub b: DeviceId,
    /// Mbps.
    pub bandwidth: f64,
}

impl Link {
    pub fn new(u: DeviceId, v: DeviceId, bandwidth: f64) -> Self {
        let (a, b) = if u <= v { (u, v) } else { (v, u) };
        Self { a, b, bandwidth }
    }

    /// The endpoint opposite `d`, if `d` is an endpoint at all.
    pub fn other(&self, d: DeviceId) -> Option<DeviceId> {
        if d == self.a {
            Some(self.b)
        } else if d == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// A connected device mesh with positive link bandwidths.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGraph {
    devices: Vec<Device>,
    links: Vec<Link>,
    // neighbour lists sorted by neighbour id
    adjacency: Vec<Vec<(DeviceId, LinkId)>>,
}

impl NetworkGraph {
    pub fn new(devices: Vec<Device>, links: Vec<Link>) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::InvalidInstance("network has no devices".into()));
        }
        for (i, d) in devices.iter().enumerate() {
            if d.id.0 != i {
                return Err(Error::InvalidInstance(format!(
                    "device ids must be contiguous from 0, found {} at position {i}",
                    d.id.0
                )));
            }
            if !d.x.is_finite() || !d.y.is_finite() {
                return Err(Error::InvalidInstance(format!("device {i} has a non-finite position")));
            }
        }
        let mut adjacency = vec![Vec::new(); devices.len()];
        let mut seen = BTreeSet::new();
        for (i, l) in links.iter().enumerate() {
            if l.a.0 >= devices.len() || l.b.0 >= devices.len() {
                return Err(Error::InvalidInstance(format!("link {i} references an unknown device")));
            }
            if l.a >= l.b {
                return Err(Error::InvalidInstance(format!(
                    "link {i} must join two distinct devices with a < b"
                )));
            }
            if !(l.bandwidth.is_finite() && l.bandwidth > 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "link {i} has non-positive bandwidth {}",
                    l.bandwidth
                )));
            }
            if !seen.insert((l.a, l.b)) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate link between {} and {}",
                    l.a.0, l.b.0
                )));
            }
            adjacency[l.a.0].push((l.b, LinkId(i)));
            adjacency[l.b.0].push((l.a, LinkId(i)));
        }
        for nbrs in &mut adjacency {
            nbrs.sort();
        }
        let graph = Self {
            devices,
            links,
            adjacency,
        };
        if !graph.is_connected() {
            return Err(Error::InvalidInstance("network is not connected".into()));
        }
        Ok(graph)
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn device(&self, id: DeviceId) -> &Device {
        &self.devices[id.0]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// Neighbours of `d` with the connecting link, sorted by neighbour id.
    pub fn neighbors(&self, d: DeviceId) -> &[(DeviceId, LinkId)] {
        &self.adjacency[d.0]
    }

    pub fn is_connected(&self) -> bool {
        hop_distances(&self.adjacency, DeviceId(0))
            .iter()
            .all(|d| d.is_some())
    }
}

fn hop_distances(adjacency: &[Vec<(DeviceId, LinkId)>], from: DeviceId) -> Vec<Option<usize>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[from.0] = Some(0);
    queue.push_back(from);
    while let Some(u) = queue.pop_front() {
        let du = dist[u.0].unwrap();
        for &(v, _) in &adjacency[u.0] {
            if dist[v.0].is_none() {
                dist[v.0] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Minimum-hop path from `src` to `dst` as an ordered list of links.
///
/// Among equally short paths the one whose device sequence is
/// lexicographically smallest wins: each step moves to the smallest-id
/// neighbour that is one hop closer to `dst`.
pub fn route(network: &NetworkGraph, src: DeviceId, dst: DeviceId) -> Result<Vec<LinkId>> {
    let n = network.num_devices();
    if src.0 >= n {
        return Err(Error::UnknownDevice(src.0));
    }
    if dst.0 >= n {
        return Err(Error::UnknownDevice(dst.0));
    }
    if src == dst {
        return Err(Error::SelfRoute(src.0));
    }
    let dist = hop_distances(&network.adjacency, dst);
    let Some(mut remaining) = dist[src.0] else {
        return Err(Error::NoRoute {
            src: src.0,
            dst: dst.0,
        });
    };
    let mut path = Vec::with_capacity(remaining);
    let mut at = src;
    while remaining > 0 {
        let &(next, link) = network
            .neighbors(at)
            .iter()
            .find(|(v, _)| dist[v.0] == Some(remaining - 1))
            .expect("BFS distances are consistent");
        path.push(link);
        at = next;
        remaining -= 1;
    }
    Ok(path)
}

/// One candidate source for a flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceOption {
    pub device: DeviceId,
    /// Seconds.
    pub release: f64,
    /// Links from the source to the requester, hop 1 first.
    pub path: Vec<LinkId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    /// Mb.
    pub data: f64,
    pub sources: Vec<SourceOption>,
}

impl Flow {
    /// Time to push this flow across `hop` (0-based) of source `source`'s path.
    pub fn transmission_time(&self, network: &NetworkGraph, source: usize, hop: usize) -> f64 {
        let link = self.sources[source].path[hop];
        self.data / network.link(link).bandwidth
    }

    /// Sum of per-hop transmission times along source `source`'s path.
    pub fn path_time(&self, network: &NetworkGraph, source: usize) -> f64 {
        (0..self.sources[source].path.len())
            .map(|h| self.transmission_time(network, source, h))
            .sum()
    }

    /// Release plus congestion-free path time for `source`.
    pub fn uncongested_finish(&self, network: &NetworkGraph, source: usize) -> f64 {
        self.sources[source].release + self.path_time(network, source)
    }

    pub fn hops(&self, source: usize) -> usize {
        self.sources[source].path.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coflow {
    pub requester: DeviceId,
    pub flows: Vec<Flow>,
}

/// Parameters of the random instance generator. Defaults are the reference
/// experimental setting: 40 devices, 20 coflows, 3 flows per coflow and 3
/// candidate sources per flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub num_devices: usize,
    pub num_coflows: usize,
    pub flows_per_coflow: usize,
    pub sources_per_flow: usize,
    /// Mbps.
    pub mean_bandwidth: f64,
    /// Standard deviation as a fraction of the mean.
    pub bandwidth_spread: f64,
    /// Mb.
    pub mean_data: f64,
    pub data_spread: f64,
    /// Scales the mean release time `release_scale * mean_data / mean_bandwidth`.
    pub release_scale: f64,
    pub release_spread: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_devices: 40,
            num_coflows: 20,
            flows_per_coflow: 3,
            sources_per_flow: 3,
            mean_bandwidth: 20.0,
            bandwidth_spread: 0.3,
            mean_data: 2.0,
            data_spread: 0.3,
            release_scale: 1.0,
            release_spread: 0.3,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn num_generators(&self) -> usize {
        self.num_devices.saturating_sub(self.num_coflows)
    }

    /// Devices closer than this are linked.
    pub fn connection_radius(&self) -> f64 {
        2.0 * self.num_devices as f64 / 10.0
    }

    pub fn mean_release(&self) -> f64 {
        self.release_scale * self.mean_data / self.mean_bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_coflows == 0 {
            return bad("at least one coflow is required".into());
        }
        if self.num_coflows >= self.num_devices {
            return bad(format!(
                "coflows ({}) must be fewer than devices ({})",
                self.num_coflows, self.num_devices
            ));
        }
        if self.flows_per_coflow == 0 {
            return bad("flows_per_coflow must be at least 1".into());
        }
        if self.sources_per_flow == 0 {
            return bad("sources_per_flow must be at least 1".into());
        }
        if self.sources_per_flow > self.num_generators() {
            return bad(format!(
                "sources_per_flow ({}) exceeds the generator pool ({})",
                self.sources_per_flow,
                self.num_generators()
            ));
        }
        for (name, mean) in [
            ("mean_bandwidth", self.mean_bandwidth),
            ("mean_data", self.mean_data),
            ("release_scale", self.release_scale),
        ] {
            if !(mean.is_finite() && mean > 0.0) {
                return bad(format!("{name} must be positive, got {mean}"));
            }
        }
        for (name, spread) in [
            ("bandwidth_spread", self.bandwidth_spread),
            ("data_spread", self.data_spread),
            ("release_spread", self.release_spread),
        ] {
            if !(0.0..1.0).contains(&spread) {
                return bad(format!("{name} must lie in [0, 1), got {spread}"));
            }
        }
        Ok(())
    }
}

/// Normal draw with standard deviation `spread * mean`, floored at
/// `TRUNCATION_FLOOR * mean` so the result stays positive.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, spread: f64) -> f64 {
    let floor = TRUNCATION_FLOOR * mean;
    if spread == 0.0 {
        return mean;
    }
    let normal = Normal::new(mean, spread * mean).expect("finite positive std dev");
    normal.sample(rng).max(floor)
}

/// Index pairs of points strictly closer than `radius`.
pub fn pairs_within(positions: &[(f64, f64)], radius: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let (dx, dy) = (positions[i].0 - positions[j].0, positions[i].1 - positions[j].1);
            if (dx * dx + dy * dy).sqrt() < radius {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn pairs_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in pairs {
        adjacency[a].push((DeviceId(b), LinkId(0)));
        adjacency[b].push((DeviceId(a), LinkId(0)));
    }
    hop_distances(&adjacency, DeviceId(0)).iter().all(|d| d.is_some())
}

/// Uniform draws allowed per device when growing a connected placement.
pub const MAX_GROWTH_DRAWS: usize = 100_000;

/// Random geometric mesh: devices in an `N x N` square, linked when closer
/// than `2N/10`. Uniform placements are redrawn from `rng` until connected;
/// if none of `MAX_PLACEMENT_ATTEMPTS` is, the mesh is grown instead (see
/// [`grow_placement`]). Devices `0..num_coflows` are requesters, the rest
/// generators.
pub fn generate_network<R: Rng + ?Sized>(config: &GeneratorConfig, rng: &mut R) -> Result<NetworkGraph> {
    config.validate()?;
    let n = config.num_devices;
    let side = n as f64;
    let radius = config.connection_radius();
    let mut placed = None;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let positions: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.0..side), rng.random_range(0.0..side)))
            .collect();
        let pairs = pairs_within(&positions, radius);
        if pairs_connected(n, &pairs) {
            placed = Some((positions, pairs));
            break;
        }
    }
    let (positions, pairs) = match placed {
        Some(p) => p,
        None => {
            let positions = grow_placement(n, side, radius, rng).ok_or(Error::Disconnected {
                attempts: MAX_PLACEMENT_ATTEMPTS,
                devices: n,
                radius,
            })?;
            let pairs = pairs_within(&positions, radius);
            (positions, pairs)
        }
    };
    let devices = positions
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Device {
            id: DeviceId(i),
            x,
            y,
            kind: if i < config.num_coflows {
                DeviceKind::Requester
            } else {
                DeviceKind::Generator
            },
        })
        .collect();
    let links = pairs
        .iter()
        .map(|&(a, b)| {
            let bw = truncated_normal(rng, config.mean_bandwidth, config.bandwidth_spread);
            Link::new(DeviceId(a), DeviceId(b), bw)
        })
        .collect();
    NetworkGraph::new(devices, links)
}

/// Connected placement in a `side x side` square: the first device is
/// uniform, every later one is drawn uniformly until it lands strictly within
/// `radius` of a device already placed. The distance link rule is unchanged,
/// so the resulting mesh is connected by construction.
pub fn grow_placement<R: Rng + ?Sized>(n: usize, side: f64, radius: f64, rng: &mut R) -> Option<Vec<(f64, f64)>> {
    let mut positions: Vec<(f64, f64)> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut draws = 0;
        loop {
            if draws == MAX_GROWTH_DRAWS {
                return None;
            }
            draws += 1;
            let p = (rng.random_range(0.0..side), rng.random_range(0.0..side));
            let near = positions.is_empty()
                || positions
                    .iter()
                    .any(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() < radius);
            if near {
                positions.push(p);
                break;
            }
        }
    }
    Some(positions)
}

/// Generates a complete instance from `config`; a pure function of the config.
pub fn generate_instance(config: &GeneratorConfig) -> Result<ProblemInstance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let network = generate_network(config, &mut rng)?;
    let pool = config.num_generators();
    let mean_release = config.mean_release();
    let mut coflows = Vec::with_capacity(config.num_coflows);
    for i in 0..config.num_coflows {
        let requester = DeviceId(i);
        let mut flows = Vec::with_capacity(config.flows_per_coflow);
        for _ in 0..config.flows_per_coflow {
            let data = truncated_normal(&mut rng, config.mean_data, config.data_spread);
            let mut picked: Vec<usize> = index::sample(&mut rng, pool, config.sources_per_flow)
                .into_iter()
                .map(|k| config.num_coflows + k)
                .collect();
            picked.sort_unstable();
            let mut sources = Vec::with_capacity(picked.len());
            for device in picked {
                let release = truncated_normal(&mut rng, mean_release, config.release_spread);
                let path = route(&network, DeviceId(device), requester)?;
                sources.push(SourceOption {
                    device: DeviceId(device),
                    release,
                    path,
                });
            }
            flows.push(Flow { data, sources });
        }
        coflows.push(Coflow { requester, flows });
    }
    ProblemInstance::new(network, coflows, Some(config.clone()))
}

/// A validated, immutable problem instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    network: NetworkGraph,
    coflows: Vec<Coflow>,
    config: Option<GeneratorConfig>,
    // offsets[i] is the flat index of flow (i, 0)
    offsets: Vec<usize>,
    flow_ids: Vec<FlowId>,
}

impl ProblemInstance {
    pub fn new(network: NetworkGraph, coflows: Vec<Coflow>, config: Option<GeneratorConfig>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if coflows.is_empty() {
            return bad("instance has no coflows".into());
        }
        let mut requesters = BTreeSet::new();
        let mut offsets = Vec::with_capacity(coflows.len());
        let mut flow_ids = Vec::new();
        for (i, coflow) in coflows.iter().enumerate() {
            let req = coflow.requester;
            if req.0 >= network.num_devices() {
                return bad(format!("coflow {i} requester {} does not exist", req.0));
            }
            if network.device(req).kind != DeviceKind::Requester {
                return bad(format!("coflow {i} requester {} is not a requester device", req.0));
            }
            if !requesters.insert(req) {
                return bad(format!("device {} requests more than one coflow", req.0));
            }
            if coflow.flows.is_empty() {
                return bad(format!("coflow {i} has no flows"));
            }
            offsets.push(flow_ids.len());
            for (j, flow) in coflow.flows.iter().enumerate() {
                flow_ids.push(FlowId::new(i, j));
                check_flow(&network, req, flow).map_err(|m| Error::InvalidInstance(format!("flow ({i}, {j}): {m}")))?;
            }
        }
        Ok(Self {
            network,
            coflows,
            config,
            offsets,
            flow_ids,
        })
    }

    pub fn network(&self) -> &NetworkGraph {
        &self.network
    }

    pub fn coflows(&self) -> &[Coflow] {
        &self.coflows
    }

    pub fn config(&self) -> Option<&GeneratorConfig> {
        self.config.as_ref()
    }

    pub fn num_coflows(&self) -> usize {
        self.coflows.len()
    }

    pub fn num_flows(&self) -> usize {
        self.flow_ids.len()
    }

    /// All flows in canonical `(coflow, flow)` order.
    pub fn flow_ids(&self) -> &[FlowId] {
        &self.flow_ids
    }

    pub fn flat_index(&self, id: FlowId) -> usize {
        self.offsets[id.coflow] + id.flow
    }

    pub fn flow(&self, id: FlowId) -> &Flow {
        &self.coflows[id.coflow].flows[id.flow]
    }

    pub fn flow_at(&self, flat: usize) -> &Flow {
        self.flow(self.flow_ids[flat])
    }

    pub fn contains(&self, id: FlowId) -> bool {
        id.coflow < self.coflows.len() && id.flow < self.coflows[id.coflow].flows.len()
    }

    /// Transmission time of flow `id` at `hop` (0-based) when sent from `source`.
    pub fn transmission_time(&self, id: FlowId, source: usize, hop: usize) -> f64 {
        self.flow(id).transmission_time(&self.network, source, hop)
    }

    pub fn max_sources(&self) -> usize {
        self.coflows
            .iter()
            .flat_map(|c| c.flows.iter())
            .map(|f| f.sources.len())
            .max()
            .unwrap_or(0)
    }
}

fn check_flow(network: &NetworkGraph, requester: DeviceId, flow: &Flow) -> std::result::Result<(), String> {
    if !(flow.data.is_finite() && flow.data > 0.0) {
        return Err(format!("data size must be positive, got {}", flow.data));
    }
    if flow.sources.is_empty() {
        return Err("no source options".into());
    }
    let mut seen = BTreeSet::new();
    for (s, opt) in flow.sources.iter().enumerate() {
        if opt.device.0 >= network.num_devices() {
            return Err(format!("source {s} device {} does not exist", opt.device.0));
        }
        if network.device(opt.device).kind != DeviceKind::Generator {
            return Err(format!("source {s} device {} is not a generator", opt.device.0));
        }
        if !seen.insert(opt.device) {
            return Err(format!("duplicate source device {}", opt.device.0));
        }
        if !(opt.release.is_finite() && opt.release >= 0.0) {
            return Err(format!("source {s} release time {} is invalid", opt.release));
        }
        if opt.path.is_empty() {
            return Err(format!("source {s} has an empty path"));
        }
        let mut visited = BTreeSet::from([opt.device]);
        let mut at = opt.device;
        for &link in &opt.path {
            if link.0 >= network.num_links() {
                return Err(format!("source {s} path uses unknown link {}", link.0));
            }
            let Some(next) = network.link(link).other(at) else {
                return Err(format!("source {s} path is not contiguous at link {}", link.0));
            };
            if !visited.insert(next) {
                return Err(format!("source {s} path revisits device {}", next.0));
            }
            at = next;
        }
        if at != requester {
            return Err(format!(
                "source {s} path ends at device {} instead of requester {}",
                at.0, requester.0
            ));
        }
    }
    Ok(())
}
