//! Source and coflow-aware search and adjust.
//!
//! The initial solution picks every flow's fastest uncongested source and
//! orders flows by coflow rank, then flow rank. The adjustment pass then
//! revisits flows one at a time, longest path first, and moves a flow to
//! another source whenever that lowers the sum of CCT with the priority
//! re-derived from the updated ranks.

use std::cmp::Ordering;

use crate::instance::{FlowId, ProblemInstance};
use crate::schedule::{PriorityOrder, Schedule, SourceSelection};

/// Flow and coflow ranks for a given source selection.
#[derive(Clone, Debug, PartialEq)]
pub struct RankTable {
    /// Release plus path transmission time of each flow's selected source.
    pub frank: Vec<f64>,
    /// Largest `frank` within each coflow.
    pub crank: Vec<f64>,
    /// Source minimising release plus path time, lowest index on ties.
    pub argmin_source: Vec<usize>,
}

impl RankTable {
    /// Ranks of the rank-minimal source selection.
    pub fn initial(instance: &ProblemInstance) -> Self {
        let sel = Self::argmin_selection(instance);
        Self::for_selection(instance, &sel)
    }

    /// Ranks when every flow uses the source in `sources`.
    pub fn for_selection(instance: &ProblemInstance, sources: &SourceSelection) -> Self {
        let network = instance.network();
        let mut frank = Vec::with_capacity(instance.num_flows());
        let mut argmin_source = Vec::with_capacity(instance.num_flows());
        let mut crank = vec![f64::NEG_INFINITY; instance.num_coflows()];
        for (flat, &id) in instance.flow_ids().iter().enumerate() {
            let flow = instance.flow(id);
            let value = flow.uncongested_finish(network, sources.get(flat));
            frank.push(value);
            crank[id.coflow] = crank[id.coflow].max(value);
            argmin_source.push(fastest_source(instance, id));
        }
        Self {
            frank,
            crank,
            argmin_source,
        }
    }

    pub fn argmin_selection(instance: &ProblemInstance) -> SourceSelection {
        SourceSelection::from_fn(instance, |id| fastest_source(instance, id)).expect("argmin indices are in range")
    }

    /// Ascending coflow rank, then flow rank, then `(coflow, flow)`.
    pub fn coflow_priority(&self, instance: &ProblemInstance) -> PriorityOrder {
        let mut order = instance.flow_ids().to_vec();
        order.sort_by(|&a, &b| {
            self.crank[a.coflow]
                .total_cmp(&self.crank[b.coflow])
                .then_with(|| self.frank_of(instance, a).total_cmp(&self.frank_of(instance, b)))
                .then_with(|| a.cmp(&b))
        });
        PriorityOrder::new(instance, order).expect("sorted permutation")
    }

    /// Ascending flow rank alone, then `(coflow, flow)`.
    pub fn flow_priority(&self, instance: &ProblemInstance) -> PriorityOrder {
        let mut order = instance.flow_ids().to_vec();
        order.sort_by(|&a, &b| {
            self.frank_of(instance, a)
                .total_cmp(&self.frank_of(instance, b))
                .then_with(|| a.cmp(&b))
        });
        PriorityOrder::new(instance, order).expect("sorted permutation")
    }

    fn frank_of(&self, instance: &ProblemInstance, id: FlowId) -> f64 {
        self.frank[instance.flat_index(id)]
    }
}

fn fastest_source(instance: &ProblemInstance, id: FlowId) -> usize {
    let flow = instance.flow(id);
    let network = instance.network();
    (0..flow.sources.len())
        .map(|s| (flow.uncongested_finish(network, s), s))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, s)| s)
        .expect("flows have at least one source")
}

/// Path length and conflict count of every flow under the current sources.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostMatrix {
    /// Hops of the selected path; zero once the flow has been visited.
    pub flcost: Vec<usize>,
    /// Number of other flows sharing at least one link.
    pub flconf: Vec<usize>,
}

impl CostMatrix {
    pub fn new(instance: &ProblemInstance, sources: &SourceSelection) -> Self {
        let flcost = (0..instance.num_flows()).map(|f| sources.path(instance, f).len()).collect();
        Self {
            flcost,
            flconf: conflict_counts(instance, sources),
        }
    }

    /// Unvisited flow with the longest path, lowest flat index on ties.
    pub fn next_flow(&self) -> Option<usize> {
        self.flcost
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(f, _)| f)
    }

    pub fn recompute_conflicts(&mut self, instance: &ProblemInstance, sources: &SourceSelection) {
        self.flconf = conflict_counts(instance, sources);
    }
}

/// For each flow, how many other flows share a link with its selected path.
pub fn conflict_counts(instance: &ProblemInstance, sources: &SourceSelection) -> Vec<usize> {
    let n = instance.num_flows();
    let mut on_link: Vec<Vec<usize>> = vec![Vec::new(); instance.network().num_links()];
    for f in 0..n {
        for l in sources.path(instance, f) {
            on_link[l.0].push(f);
        }
    }
    let mut mark = vec![usize::MAX; n];
    (0..n)
        .map(|f| {
            let mut count = 0;
            for l in sources.path(instance, f) {
                for &g in &on_link[l.0] {
                    if g != f && mark[g] != f {
                        mark[g] = f;
                        count += 1;
                    }
                }
            }
            count
        })
        .collect()
}

/// Selection and priority derived from ranks, as used by the initial
/// solution and every candidate during adjustment.
pub fn rank_priority(instance: &ProblemInstance, sources: &SourceSelection) -> PriorityOrder {
    RankTable::for_selection(instance, sources).coflow_priority(instance)
}

pub fn initial_solution(instance: &ProblemInstance) -> Schedule {
    let sources = RankTable::argmin_selection(instance);
    let priority = rank_priority(instance, &sources);
    Schedule::from_priority(instance, sources, priority)
}

/// What happened to one flow during the adjustment pass.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjustStep {
    pub flow: FlowId,
    /// No other flow shared a link, so no alternative was tried.
    pub skipped: bool,
    pub candidates_evaluated: usize,
    pub sum_cct_before: f64,
    pub sum_cct_after: f64,
    pub source_before: usize,
    pub source_after: usize,
}

pub fn source_search_adjust(instance: &ProblemInstance, initial: Schedule) -> Schedule {
    source_search_adjust_traced(instance, initial).0
}

/// Greedy single pass over all flows. Each visited flow with conflicts tries
/// every other source with ranks and priority recomputed; the best strictly
/// better candidate replaces the incumbent.
pub fn source_search_adjust_traced(instance: &ProblemInstance, initial: Schedule) -> (Schedule, Vec<AdjustStep>) {
    let mut current = initial;
    let mut cost = CostMatrix::new(instance, &current.sources);
    let mut trace = Vec::with_capacity(instance.num_flows());
    for _ in 0..instance.num_flows() {
        let Some(f) = cost.next_flow() else { break };
        let id = instance.flow_ids()[f];
        let before = current.sum_cct();
        let s = current.sources.get(f);
        let mut step = AdjustStep {
            flow: id,
            skipped: cost.flconf[f] == 0,
            candidates_evaluated: 0,
            sum_cct_before: before,
            sum_cct_after: before,
            source_before: s,
            source_after: s,
        };
        if !step.skipped {
            let mut best: Option<Schedule> = None;
            for v in 0..instance.flow(id).sources.len() {
                if v == s {
                    continue;
                }
                let sources = current.sources.with(f, v);
                let priority = rank_priority(instance, &sources);
                let candidate = Schedule::from_priority(instance, sources, priority);
                step.candidates_evaluated += 1;
                let better = match &best {
                    Some(b) => candidate.sum_cct().total_cmp(&b.sum_cct()) == Ordering::Less,
                    None => true,
                };
                if better {
                    best = Some(candidate);
                }
            }
            if let Some(b) = best {
                if b.sum_cct() < before {
                    current = b;
                }
            }
            step.sum_cct_after = current.sum_cct();
            step.source_after = current.sources.get(f);
            cost.flcost[f] = 0;
            cost.recompute_conflicts(instance, &current.sources);
        } else {
            cost.flcost[f] = 0;
        }
        trace.push(step);
    }
    (current, trace)
}

pub fn scasa(instance: &ProblemInstance) -> Schedule {
    source_search_adjust(instance, initial_solution(instance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::fixtures::instance;

    #[test]
    fn frank_picks_smallest_release_plus_path() {
        // source 1: release 0 + 0.3 over a slow link; source 2: 0.5 + 0.1
        let inst = instance(
            3,
            &[(0, 1, 2.0 / 0.3), (0, 2, 20.0)],
            &[0],
            &[(0, 2.0, &[(1, 0.0), (2, 0.5)])],
        );
        let ranks = RankTable::initial(&inst);
        assert!((ranks.frank[0] - 0.3).abs() < 1e-12);
        assert_eq!(ranks.argmin_source, vec![0]);
        assert_eq!(initial_solution(&inst).sources.as_slice(), &[0]);
    }

    #[test]
    fn lower_crank_goes_first() {
        // coflow 0 rank 0.4, coflow 1 rank 0.2
        let inst = instance(
            4,
            &[(0, 2, 20.0), (1, 3, 20.0), (2, 3, 1000.0)],
            &[0, 1],
            &[(0, 8.0, &[(2, 0.0)]), (1, 4.0, &[(3, 0.0)])],
        );
        let ranks = RankTable::initial(&inst);
        assert!((ranks.crank[0] - 0.4).abs() < 1e-12);
        assert!((ranks.crank[1] - 0.2).abs() < 1e-12);
        let prio = ranks.coflow_priority(&inst);
        assert_eq!(prio.as_slice(), &[FlowId::new(1, 0), FlowId::new(0, 0)]);
    }

    #[test]
    fn degenerate_instance() {
        let inst = instance(2, &[(0, 1, 20.0)], &[0], &[(0, 2.0, &[(1, 0.05)])]);
        let s = scasa(&inst);
        assert_eq!(s.priority, PriorityOrder::identity(&inst));
        assert!((s.sum_cct() - 0.15).abs() < 1e-12);
        assert!((s.sum_cct() - RankTable::initial(&inst).frank[0]).abs() < 1e-12);
    }

    /// Two coflows with one flow each. Both fetch fastest from device 4 over
    /// the shared link 3-4; device 5 offers a disjoint but slightly slower
    /// route for coflow 1.
    fn collision() -> ProblemInstance {
        instance(
            5,
            &[(0, 2, 1000.0), (1, 2, 1000.0), (2, 3, 20.0), (1, 4, 15.0)],
            &[0, 1],
            &[(0, 2.0, &[(3, 0.0)]), (1, 2.0, &[(3, 0.0), (4, 0.0)])],
        )
    }

    #[test]
    fn adjust_moves_colliding_flow_to_disjoint_source() {
        let inst = collision();
        let init = initial_solution(&inst);
        assert_eq!(init.sources.as_slice(), &[0, 0]);
        let (adjusted, trace) = source_search_adjust_traced(&inst, init.clone());
        assert_eq!(trace.len(), 2);
        assert!(adjusted.sum_cct() < init.sum_cct());
        assert_eq!(adjusted.sources.as_slice(), &[0, 1]);
        // brute force over the 2 x 1 assignments and both priorities
        let mut best = f64::INFINITY;
        for s1 in 0..2 {
            let sel = SourceSelection::new(&inst, vec![0, s1]).unwrap();
            for order in [[FlowId::new(0, 0), FlowId::new(1, 0)], [FlowId::new(1, 0), FlowId::new(0, 0)]] {
                let p = PriorityOrder::new(&inst, order.to_vec()).unwrap();
                best = best.min(Schedule::from_priority(&inst, sel.clone(), p).sum_cct());
            }
        }
        assert!((adjusted.sum_cct() - best).abs() < 1e-12);
    }

    #[test]
    fn conflict_free_flows_are_skipped() {
        let inst = instance(
            4,
            &[(0, 2, 20.0), (1, 3, 20.0), (2, 3, 20.0)],
            &[0, 1],
            &[(0, 2.0, &[(2, 0.0), (3, 0.0)]), (1, 2.0, &[(3, 0.0), (2, 0.0)])],
        );
        let init = initial_solution(&inst);
        let (adjusted, trace) = source_search_adjust_traced(&inst, init.clone());
        assert!(trace.iter().all(|s| s.skipped));
        assert_eq!(adjusted, init);
    }

    #[test]
    fn visiting_order_is_longest_path_first() {
        let inst = collision();
        let cost = CostMatrix::new(&inst, &RankTable::argmin_selection(&inst));
        assert_eq!(cost.flcost, vec![2, 2]);
        assert_eq!(cost.flconf, vec![1, 1]);
        assert_eq!(cost.next_flow(), Some(0));
    }
}
