//! Shared test support: a small random instance builder that does not use
//! the library generator, a discrete-event simulator of link contention and
//! exhaustive search helpers.
#![allow(dead_code)]

use coflow_core::instance::{route, Coflow, Device, DeviceId, DeviceKind, Flow, Link, NetworkGraph, ProblemInstance, SourceOption};
use coflow_core::schedule::{LinkOrders, PriorityOrder, SourceSelection};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct TinyShape {
    pub max_devices: usize,
    pub max_coflows: usize,
    pub max_flows: usize,
    pub max_sources: usize,
}

pub const TINY: TinyShape = TinyShape {
    max_devices: 8,
    max_coflows: 3,
    max_flows: 2,
    max_sources: 2,
};

/// Random connected graph (random spanning tree plus extra edges) with
/// requesters first. Sizes and values are drawn independently of the crate's
/// generator; some instances use small integers so ties are exercised.
pub fn tiny_instance<R: Rng>(rng: &mut R, shape: TinyShape) -> ProblemInstance {
    let coflows = rng.random_range(1..=shape.max_coflows);
    let sources = rng.random_range(1..=shape.max_sources);
    let min_devices = (coflows + sources).max(2);
    let n = rng.random_range(min_devices..=shape.max_devices.max(min_devices));
    let integral = rng.random_bool(0.3);
    let draw = |rng: &mut R, lo: f64, hi: f64| {
        if integral {
            rng.random_range(lo.ceil() as i64..=hi.floor() as i64) as f64
        } else {
            rng.random_range(lo..hi)
        }
    };

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        edges.push((parent.min(order[k]), parent.max(order[k])));
    }
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let e = (a.min(b), a.max(b));
        if a != b && !edges.contains(&e) {
            edges.push(e);
        }
    }
    let devices = (0..n)
        .map(|i| Device {
            id: DeviceId(i),
            x: i as f64,
            y: 0.0,
            kind: if i < coflows {
                DeviceKind::Requester
            } else {
                DeviceKind::Generator
            },
        })
        .collect();
    let links = edges
        .iter()
        .map(|&(a, b)| Link::new(DeviceId(a), DeviceId(b), draw(rng, 5.0, 40.0)))
        .collect();
    let network = NetworkGraph::new(devices, links).expect("spanning tree keeps the graph connected");

    let generators: Vec<usize> = (coflows..n).collect();
    let mut cfs = Vec::new();
    for c in 0..coflows {
        let k = rng.random_range(1..=shape.max_flows);
        let mut flows = Vec::new();
        for _ in 0..k {
            let mut chosen: Vec<usize> = generators.choose_multiple(rng, sources).copied().collect();
            chosen.sort_unstable();
            let options = chosen
                .into_iter()
                .map(|g| SourceOption {
                    device: DeviceId(g),
                    release: if integral { rng.random_range(0..=2) as f64 * 0.1 } else { rng.random_range(0.0..0.3) },
                    path: route(&network, DeviceId(g), DeviceId(c)).unwrap(),
                })
                .collect();
            flows.push(Flow {
                data: draw(rng, 1.0, 4.0),
                sources: options,
            });
        }
        cfs.push(Coflow {
            requester: DeviceId(c),
            flows,
        });
    }
    ProblemInstance::new(network, cfs, None).unwrap()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// `[flat flow][hop]`
    pub start: Vec<Vec<f64>>,
    pub finish: Vec<Vec<f64>>,
    pub cct: Vec<f64>,
    pub sum_cct: f64,
}

/// Event-driven simulation of store-and-forward transfers. Each link serves
/// flows strictly in its given sequence, one at a time; a flow can enter its
/// next hop once the previous hop is fully received. Returns `None` on
/// deadlock (no flow can ever start).
pub fn simulate(instance: &ProblemInstance, sources: &SourceSelection, seqs: &[Vec<usize>]) -> Option<SimResult> {
    let network = instance.network();
    let nf = instance.num_flows();
    let paths: Vec<_> = (0..nf).map(|f| sources.path(instance, f).to_vec()).collect();
    let mut next_hop = vec![0usize; nf];
    let mut ready: Vec<f64> = (0..nf)
        .map(|f| instance.flow_at(f).sources[sources.get(f)].release)
        .collect();
    let mut head = vec![0usize; seqs.len()];
    let mut link_free = vec![0.0f64; seqs.len()];
    let mut start: Vec<Vec<f64>> = paths.iter().map(|p| vec![f64::NAN; p.len()]).collect();
    let mut finish = start.clone();
    let total: usize = paths.iter().map(Vec::len).sum();

    for _ in 0..total {
        // every flow waiting at the head of its next link's queue
        let mut best: Option<(f64, usize)> = None;
        for f in 0..nf {
            let h = next_hop[f];
            if h == paths[f].len() {
                continue;
            }
            let l = paths[f][h].0;
            if seqs[l].get(head[l]) != Some(&f) {
                continue;
            }
            let t = ready[f].max(link_free[l]);
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, f));
            }
        }
        let (t, f) = best?;
        let h = next_hop[f];
        let l = paths[f][h].0;
        let dur = instance.flow_at(f).data / network.link(paths[f][h]).bandwidth;
        start[f][h] = t;
        finish[f][h] = t + dur;
        ready[f] = t + dur;
        link_free[l] = t + dur;
        head[l] += 1;
        next_hop[f] += 1;
    }
    let mut cct = vec![0.0f64; instance.num_coflows()];
    for (f, id) in instance.flow_ids().iter().enumerate() {
        let fct = *finish[f].last().unwrap();
        cct[id.coflow] = cct[id.coflow].max(fct);
    }
    let sum_cct = cct.iter().sum();
    Some(SimResult {
        start,
        finish,
        cct,
        sum_cct,
    })
}

/// Per-link sequences induced by a global priority, built without the
/// library's helpers.
pub fn induced_sequences(instance: &ProblemInstance, sources: &SourceSelection, priority: &PriorityOrder) -> Vec<Vec<usize>> {
    let mut seqs = vec![Vec::new(); instance.network().num_links()];
    for id in priority.as_slice() {
        let f = instance.flat_index(*id);
        for l in sources.path(instance, f) {
            seqs[l.0].push(f);
        }
    }
    seqs
}

pub fn link_orders_of(instance: &ProblemInstance, sources: &SourceSelection, seqs: &[Vec<usize>]) -> LinkOrders {
    LinkOrders::new(instance, sources, seqs.to_vec()).unwrap()
}

/// Every source assignment (mixed radix over the option counts).
pub fn all_selections(instance: &ProblemInstance) -> Vec<SourceSelection> {
    let radix: Vec<usize> = (0..instance.num_flows()).map(|f| instance.flow_at(f).sources.len()).collect();
    let mut out = Vec::new();
    let mut digits = vec![0usize; radix.len()];
    loop {
        out.push(SourceSelection::new(instance, digits.clone()).unwrap());
        let mut k = 0;
        loop {
            if k == radix.len() {
                return out;
            }
            digits[k] += 1;
            if digits[k] < radix[k] {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
}

pub fn priority_from_perm(instance: &ProblemInstance, perm: &[usize]) -> PriorityOrder {
    let ids = instance.flow_ids();
    PriorityOrder::new(instance, perm.iter().map(|&k| ids[k]).collect()).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
