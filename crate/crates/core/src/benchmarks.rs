//! Baseline schedulers and the scheduler registry.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{LinkId, ProblemInstance};
use crate::scasa::{initial_solution, scasa, RankTable};
use crate::schedule::{evaluate, PriorityOrder, Schedule, SourceSelection};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchedulerId {
    #[serde(rename = "RANDOM")]
    Random,
    #[serde(rename = "FLS")]
    Fls,
    #[serde(rename = "CFLS")]
    Cfls,
    #[serde(rename = "BAS")]
    Bas,
    #[serde(rename = "FLORD")]
    Flord,
    #[serde(rename = "SCASA")]
    Scasa,
    #[serde(rename = "SCASA_FLORD")]
    ScasaFlord,
}

impl SchedulerId {
    pub const ALL: [SchedulerId; 7] = [
        SchedulerId::Random,
        SchedulerId::Fls,
        SchedulerId::Cfls,
        SchedulerId::Bas,
        SchedulerId::Flord,
        SchedulerId::Scasa,
        SchedulerId::ScasaFlord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerId::Random => "RANDOM",
            SchedulerId::Fls => "FLS",
            SchedulerId::Cfls => "CFLS",
            SchedulerId::Bas => "BAS",
            SchedulerId::Flord => "FLORD",
            SchedulerId::Scasa => "SCASA",
            SchedulerId::ScasaFlord => "SCASA_FLORD",
        }
    }

    pub fn is_randomized(self) -> bool {
        self == SchedulerId::Random
    }
}

impl fmt::Display for SchedulerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '+'], "_");
        SchedulerId::ALL
            .into_iter()
            .find(|id| id.name() == norm)
            .ok_or_else(|| Error::UnknownScheduler(s.to_string()))
    }
}

/// Runs `scheduler` on `instance`. `seed` only matters for RANDOM.
pub fn solve(instance: &ProblemInstance, scheduler: SchedulerId, seed: u64) -> Schedule {
    match scheduler {
        SchedulerId::Random => random_schedule(instance, &mut ChaCha8Rng::seed_from_u64(seed)),
        SchedulerId::Fls => fls(instance),
        SchedulerId::Cfls => cfls(instance),
        SchedulerId::Bas => bas(instance),
        SchedulerId::Flord => flord(instance),
        SchedulerId::Scasa => scasa(instance),
        SchedulerId::ScasaFlord => scasa_flord(instance),
    }
}

/// Uniformly random source per flow and uniformly random priority.
pub fn random_schedule<R: Rng + ?Sized>(instance: &ProblemInstance, rng: &mut R) -> Schedule {
    let sources = SourceSelection::from_fn(instance, |id| rng.random_range(0..instance.flow(id).sources.len()))
        .expect("sampled indices are in range");
    let mut order = instance.flow_ids().to_vec();
    order.shuffle(rng);
    let priority = PriorityOrder::new(instance, order).expect("shuffled permutation");
    Schedule::from_priority(instance, sources, priority)
}

/// Rank-minimal sources, flows ordered by their own rank only.
pub fn fls(instance: &ProblemInstance) -> Schedule {
    let sources = RankTable::argmin_selection(instance);
    let priority = RankTable::for_selection(instance, &sources).flow_priority(instance);
    Schedule::from_priority(instance, sources, priority)
}

/// Same as the SCASA initial solution.
pub fn cfls(instance: &ProblemInstance) -> Schedule {
    initial_solution(instance)
}

/// Bottleneck-aware coflow ordering: repeatedly find the most loaded link
/// among the unordered coflows and place the coflow loading it most at the
/// back of the order. Flows within a coflow follow their rank.
pub fn bas(instance: &ProblemInstance) -> Schedule {
    let sources = RankTable::argmin_selection(instance);
    let ranks = RankTable::for_selection(instance, &sources);
    let network = instance.network();

    // load[c][l]: transmission time coflow c puts on link l
    let mut load = vec![vec![0.0f64; network.num_links()]; instance.num_coflows()];
    for (flat, &id) in instance.flow_ids().iter().enumerate() {
        let flow = instance.flow(id);
        let s = sources.get(flat);
        for (h, link) in flow.sources[s].path.iter().enumerate() {
            load[id.coflow][link.0] += flow.transmission_time(network, s, h);
        }
    }
    let mut remaining: Vec<usize> = (0..instance.num_coflows()).collect();
    let mut back_to_front = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let bottleneck = (0..network.num_links())
            .map(|l| (remaining.iter().map(|&c| load[c][l]).sum::<f64>(), l))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
            .map(|(_, l)| l)
            .expect("network has links");
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                load[a][bottleneck]
                    .total_cmp(&load[b][bottleneck])
                    .then(ranks.crank[a].total_cmp(&ranks.crank[b]))
                    .then(a.cmp(&b))
            })
            .expect("remaining is non-empty");
        back_to_front.push(remaining.remove(pos));
    }
    let mut order = Vec::with_capacity(instance.num_flows());
    for &c in back_to_front.iter().rev() {
        let mut flows: Vec<_> = instance.flow_ids().iter().copied().filter(|id| id.coflow == c).collect();
        flows.sort_by(|&a, &b| {
            ranks.frank[instance.flat_index(a)]
                .total_cmp(&ranks.frank[instance.flat_index(b)])
                .then(a.cmp(&b))
        });
        order.extend(flows);
    }
    let priority = PriorityOrder::new(instance, order).expect("every coflow placed once");
    Schedule::from_priority(instance, sources, priority)
}

/// Rank-minimal sources and FLS order, then link-level reordering.
pub fn flord(instance: &ProblemInstance) -> Schedule {
    flow_adjust(instance, fls(instance))
}

/// SCASA followed by link-level reordering with sources frozen.
pub fn scasa_flord(instance: &ProblemInstance) -> Schedule {
    flow_adjust(instance, scasa(instance))
}

/// Links carrying at least two flows, most congested first (total
/// transmission time crossing the link), lowest id on ties.
pub fn links_by_congestion(instance: &ProblemInstance, schedule: &Schedule) -> Vec<LinkId> {
    let network = instance.network();
    let mut links: Vec<(f64, LinkId)> = schedule
        .link_orders
        .iter()
        .filter(|(_, seq)| seq.len() >= 2)
        .map(|(l, seq)| {
            let busy: f64 = seq.iter().map(|&f| instance.flow_at(f).data / network.link(l).bandwidth).sum();
            (busy, l)
        })
        .collect();
    links.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    links.into_iter().map(|(_, l)| l).collect()
}

/// Shifting-bottleneck style local search over per-link sequences. Each pass
/// visits contended links in descending congestion and tries every adjacent
/// swap in the link's sequence, keeping a swap only if the sum of CCT drops
/// (swaps that would create a precedence cycle are rejected). Stops after a
/// pass without improvement or after one pass per network link.
pub fn flow_adjust(instance: &ProblemInstance, schedule: Schedule) -> Schedule {
    let max_passes = instance.network().num_links().max(1);
    flow_adjust_with_budget(instance, schedule, max_passes)
}

pub fn flow_adjust_with_budget(instance: &ProblemInstance, schedule: Schedule, max_passes: usize) -> Schedule {
    let links = links_by_congestion(instance, &schedule);
    let Schedule {
        sources,
        priority,
        link_orders: mut orders,
        evaluated: mut best,
    } = schedule;
    for _ in 0..max_passes {
        let mut improved = false;
        for &link in &links {
            for k in 0..orders.link(link).len() - 1 {
                orders.swap(link, k);
                match evaluate(instance, &sources, &orders) {
                    Ok(ev) if ev.sum_cct < best.sum_cct => {
                        best = ev;
                        improved = true;
                    }
                    _ => orders.swap(link, k),
                }
            }
        }
        if !improved {
            break;
        }
    }
    Schedule {
        sources,
        priority,
        link_orders: orders,
        evaluated: best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::FlowId;
    use crate::schedule::fixtures::{instance, FlowSpec};

    #[test]
    fn parses_scheduler_names() {
        assert_eq!("scasa".parse::<SchedulerId>().unwrap(), SchedulerId::Scasa);
        assert_eq!("SCASA+FLORD".parse::<SchedulerId>().unwrap(), SchedulerId::ScasaFlord);
        assert_eq!("scasa-flord".parse::<SchedulerId>().unwrap(), SchedulerId::ScasaFlord);
        assert!("relaxed".parse::<SchedulerId>().is_err());
        for id in SchedulerId::ALL {
            assert_eq!(id.name().parse::<SchedulerId>().unwrap(), id);
        }
    }

    /// Generator 1 feeds hub 0 over link 0; every coflow's requester hangs
    /// off the hub on a fast private link.
    fn single_link(datas: &[f64]) -> ProblemInstance {
        let n = datas.len();
        let mut edges = vec![(0, 1, 10.0)];
        edges.extend((0..n).map(|r| (0, r + 2, 1e6)));
        let requesters: Vec<usize> = (2..n + 2).collect();
        let flows: Vec<FlowSpec<'_>> =
            datas.iter().enumerate().map(|(c, &d)| (c, d, &[(1usize, 0.0f64)][..])).collect();
        instance(n + 2, &edges, &requesters, &flows)
    }

    #[test]
    fn fls_orders_by_flow_rank() {
        let inst = single_link(&[2.0, 1.0]);
        let s = fls(&inst);
        assert_eq!(s.priority.as_slice(), &[FlowId::new(1, 0), FlowId::new(0, 0)]);
    }

    #[test]
    fn single_coflow_orders_agree() {
        let inst = instance(
            4,
            &[(0, 1, 10.0), (0, 2, 20.0), (0, 3, 5.0)],
            &[0],
            &[(0, 1.0, &[(1, 0.0)]), (0, 1.0, &[(2, 0.0)]), (0, 1.0, &[(3, 0.0)])],
        );
        assert_eq!(fls(&inst).priority, cfls(&inst).priority);
        assert_eq!(bas(&inst).priority, cfls(&inst).priority);
    }

    #[test]
    fn flord_sorts_single_link_shortest_first() {
        let inst = single_link(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        // start from the worst order to make the search do work
        let sources = RankTable::argmin_selection(&inst);
        let mut order = inst.flow_ids().to_vec();
        order.sort_by(|a, b| inst.flow(*b).data.total_cmp(&inst.flow(*a).data));
        let start = Schedule::from_priority(&inst, sources, PriorityOrder::new(&inst, order).unwrap());
        let adjusted = flow_adjust(&inst, start);
        let seq: Vec<f64> = adjusted.link_orders.link(LinkId(0)).iter().map(|&f| inst.flow_at(f).data).collect();
        assert_eq!(seq, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn flord_on_conflict_free_instance_is_fls() {
        let inst = instance(
            4,
            &[(0, 2, 20.0), (1, 3, 20.0), (2, 3, 20.0)],
            &[0, 1],
            &[(0, 2.0, &[(2, 0.0)]), (1, 2.0, &[(3, 0.0)])],
        );
        assert_eq!(flord(&inst), fls(&inst));
    }

    #[test]
    fn random_is_seeded() {
        let inst = single_link(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        let a = solve(&inst, SchedulerId::Random, 9);
        let b = solve(&inst, SchedulerId::Random, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn random_without_freedom_matches_initial_solution() {
        let inst = instance(2, &[(0, 1, 20.0)], &[0], &[(0, 2.0, &[(1, 0.05)])]);
        assert_eq!(solve(&inst, SchedulerId::Random, 1), initial_solution(&inst));
    }

    #[test]
    fn bas_with_disjoint_coflows_is_deterministic() {
        let inst = instance(
            4,
            &[(0, 2, 20.0), (1, 3, 20.0), (2, 3, 20.0)],
            &[0, 1],
            &[(0, 2.0, &[(2, 0.0)]), (1, 4.0, &[(3, 0.0)])],
        );
        let a = bas(&inst);
        assert_eq!(a, bas(&inst));
        // the heavier coflow 1 owns the most loaded link, so it goes last
        assert_eq!(a.priority.as_slice(), &[FlowId::new(0, 0), FlowId::new(1, 0)]);
        let other = PriorityOrder::new(&inst, vec![FlowId::new(1, 0), FlowId::new(0, 0)]).unwrap();
        let swapped = Schedule::from_priority(&inst, a.sources.clone(), other);
        assert_eq!(swapped.sum_cct(), a.sum_cct());
    }
}

