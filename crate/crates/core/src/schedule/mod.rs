//! Schedules: which source each flow uses and in what order flows cross each
//! link, plus the evaluator, validator and MILP export built on top.

mod graph;
mod milp;
mod validate;

pub use graph::{build_order_graph, calculate_cct, EdgeKind, OrderEdge, OrderGraph, Subflow, RELEASE_VERTEX};
pub use milp::{big_m, export_milp, MilpModel, MilpStats};
pub use validate::{validate, Violation, ViolationReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{FlowId, LinkId, ProblemInstance};

/// The chosen source index of every flow, in canonical flow order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SourceSelection(Vec<usize>);

impl SourceSelection {
    pub fn new(instance: &ProblemInstance, chosen: Vec<usize>) -> Result<Self> {
        if chosen.len() != instance.num_flows() {
            return Err(Error::InvalidSchedule(format!(
                "source selection covers {} flows, instance has {}",
                chosen.len(),
                instance.num_flows()
            )));
        }
        for (flat, &s) in chosen.iter().enumerate() {
            let options = instance.flow_at(flat).sources.len();
            if s >= options {
                return Err(Error::InvalidSchedule(format!(
                    "flow {} selects source {s} but has only {options}",
                    instance.flow_ids()[flat]
                )));
            }
        }
        Ok(Self(chosen))
    }

    /// Builds a selection from a per-flow chooser.
    pub fn from_fn(instance: &ProblemInstance, mut choose: impl FnMut(FlowId) -> usize) -> Result<Self> {
        let chosen = instance.flow_ids().iter().map(|&id| choose(id)).collect();
        Self::new(instance, chosen)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Source chosen for the flow at flat index `flat`.
    pub fn get(&self, flat: usize) -> usize {
        self.0[flat]
    }

    pub fn source_of(&self, instance: &ProblemInstance, id: FlowId) -> usize {
        self.0[instance.flat_index(id)]
    }

    /// Copy with flow `flat` switched to `source`.
    pub fn with(&self, flat: usize, source: usize) -> Self {
        let mut chosen = self.0.clone();
        chosen[flat] = source;
        Self(chosen)
    }

    pub fn path<'a>(&self, instance: &'a ProblemInstance, flat: usize) -> &'a [LinkId] {
        &instance.flow_at(flat).sources[self.0[flat]].path
    }
}

/// A total order over all flows; earlier flows win every shared link.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorityOrder(Vec<FlowId>);

impl PriorityOrder {
    pub fn new(instance: &ProblemInstance, order: Vec<FlowId>) -> Result<Self> {
        if order.len() != instance.num_flows() {
            return Err(Error::InvalidSchedule(format!(
                "priority order lists {} flows, instance has {}",
                order.len(),
                instance.num_flows()
            )));
        }
        let mut seen = vec![false; instance.num_flows()];
        for &id in &order {
            if !instance.contains(id) {
                return Err(Error::InvalidSchedule(format!("priority order names unknown flow {id}")));
            }
            let flat = instance.flat_index(id);
            if std::mem::replace(&mut seen[flat], true) {
                return Err(Error::InvalidSchedule(format!("priority order lists flow {id} twice")));
            }
        }
        Ok(Self(order))
    }

    /// Canonical `(coflow, flow)` order.
    pub fn identity(instance: &ProblemInstance) -> Self {
        Self(instance.flow_ids().to_vec())
    }

    pub fn as_slice(&self) -> &[FlowId] {
        &self.0
    }

    /// `rank[flat]` is the position of each flow in the order.
    pub fn positions(&self, instance: &ProblemInstance) -> Vec<usize> {
        let mut pos = vec![0; instance.num_flows()];
        for (rank, &id) in self.0.iter().enumerate() {
            pos[instance.flat_index(id)] = rank;
        }
        pos
    }
}

/// Per-link transmission sequence of flows (flat indices). Entry `l` lists
/// every flow whose chosen path crosses link `l`, first to transmit first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkOrders(Vec<Vec<usize>>);

impl LinkOrders {
    /// Sequences induced by a global priority.
    pub fn from_priority(instance: &ProblemInstance, sources: &SourceSelection, priority: &PriorityOrder) -> Self {
        let mut seqs = vec![Vec::new(); instance.network().num_links()];
        for &id in priority.as_slice() {
            let flat = instance.flat_index(id);
            for &link in sources.path(instance, flat) {
                seqs[link.0].push(flat);
            }
        }
        Self(seqs)
    }

    pub fn new(instance: &ProblemInstance, sources: &SourceSelection, seqs: Vec<Vec<usize>>) -> Result<Self> {
        let expected = Self::from_priority(instance, sources, &PriorityOrder::identity(instance));
        if seqs.len() != expected.0.len() {
            return Err(Error::InvalidSchedule(format!(
                "link orders cover {} links, network has {}",
                seqs.len(),
                expected.0.len()
            )));
        }
        for (l, (got, want)) in seqs.iter().zip(&expected.0).enumerate() {
            let mut sorted = got.clone();
            sorted.sort_unstable();
            if &sorted != want {
                return Err(Error::InvalidSchedule(format!(
                    "link {l} order does not match the flows routed over it"
                )));
            }
        }
        Ok(Self(seqs))
    }

    pub fn link(&self, link: LinkId) -> &[usize] {
        &self.0[link.0]
    }

    pub fn num_links(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (LinkId, &[usize])> {
        self.0.iter().enumerate().map(|(l, s)| (LinkId(l), s.as_slice()))
    }

    pub(crate) fn swap(&mut self, link: LinkId, k: usize) {
        self.0[link.0].swap(k, k + 1);
    }
}

/// Timing of every subflow plus the completion metrics derived from it.
/// Indices are `[flat flow][hop]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSchedule {
    pub start: Vec<Vec<f64>>,
    pub finish: Vec<Vec<f64>>,
    pub fct: Vec<f64>,
    pub cct: Vec<f64>,
    pub sum_cct: f64,
}

impl EvaluatedSchedule {
    /// Fills in FCT, CCT and the sum from per-subflow times.
    pub fn from_times(instance: &ProblemInstance, start: Vec<Vec<f64>>, finish: Vec<Vec<f64>>) -> Self {
        let fct: Vec<f64> = finish
            .iter()
            .map(|hops| hops.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut cct = vec![f64::NEG_INFINITY; instance.num_coflows()];
        for (flat, id) in instance.flow_ids().iter().enumerate() {
            cct[id.coflow] = cct[id.coflow].max(fct[flat]);
        }
        let sum_cct = cct.iter().sum();
        Self {
            start,
            finish,
            fct,
            cct,
            sum_cct,
        }
    }
}

/// A complete schedule: sources, the global priority it was built from, the
/// per-link sequences actually used and the resulting timing.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub sources: SourceSelection,
    pub priority: PriorityOrder,
    pub link_orders: LinkOrders,
    pub evaluated: EvaluatedSchedule,
}

impl Schedule {
    pub fn from_priority(instance: &ProblemInstance, sources: SourceSelection, priority: PriorityOrder) -> Self {
        let link_orders = LinkOrders::from_priority(instance, &sources, &priority);
        let evaluated = evaluate(instance, &sources, &link_orders).expect("priority-induced orders are acyclic");
        Self {
            sources,
            priority,
            link_orders,
            evaluated,
        }
    }

    /// Schedule with explicit link sequences; fails if they form a cycle.
    pub fn with_link_orders(
        instance: &ProblemInstance,
        sources: SourceSelection,
        priority: PriorityOrder,
        link_orders: LinkOrders,
    ) -> Result<Self> {
        let evaluated = evaluate(instance, &sources, &link_orders)?;
        Ok(Self {
            sources,
            priority,
            link_orders,
            evaluated,
        })
    }

    pub fn sum_cct(&self) -> f64 {
        self.evaluated.sum_cct
    }

    /// Links whose sequence differs from the one the priority induces.
    pub fn link_overrides(&self, instance: &ProblemInstance) -> Vec<(LinkId, Vec<usize>)> {
        let induced = LinkOrders::from_priority(instance, &self.sources, &self.priority);
        self.link_orders
            .iter()
            .zip(induced.iter())
            .filter(|((_, a), (_, b))| a != b)
            .map(|((l, a), _)| (l, a.to_vec()))
            .collect()
    }
}

/// Evaluates explicit link sequences. Only consecutive subflows on a link
/// get an ordering edge; the longest path is the same as with all pairs.
pub fn evaluate(instance: &ProblemInstance, sources: &SourceSelection, orders: &LinkOrders) -> Result<EvaluatedSchedule> {
    let graph = OrderGraph::from_link_orders(instance, sources, orders, false);
    calculate_cct(instance, &graph)
}

/// Sum of CCT for a priority-ordered schedule.
pub fn sum_cct(instance: &ProblemInstance, sources: &SourceSelection, priority: &PriorityOrder) -> f64 {
    Schedule::from_priority(instance, sources.clone(), priority.clone()).sum_cct()
}

/// Flows (flat indices) whose chosen paths share at least one link with
/// flow `flat`, excluding itself.
pub fn conflicting_flows(instance: &ProblemInstance, sources: &SourceSelection, flat: usize) -> Vec<usize> {
    let mine = sources.path(instance, flat);
    (0..instance.num_flows())
        .filter(|&other| other != flat && sources.path(instance, other).iter().any(|l| mine.contains(l)))
        .collect()
}


#[cfg(test)]
mod tests {
    use super::fixtures::instance;
    use super::*;

    #[test]
    fn selection_rejects_bad_index() {
        let inst = instance(2, &[(0, 1, 10.0)], &[0], &[(0, 1.0, &[(1, 0.0)])]);
        assert!(SourceSelection::new(&inst, vec![1]).is_err());
        assert!(SourceSelection::new(&inst, vec![0, 0]).is_err());
        assert!(SourceSelection::new(&inst, vec![0]).is_ok());
    }

    #[test]
    fn priority_must_be_permutation() {
        let inst = instance(3, &[(0, 2, 10.0), (1, 2, 10.0)], &[0, 1], &[(0, 1.0, &[(2, 0.0)]), (1, 1.0, &[(2, 0.0)])]);
        let a = FlowId::new(0, 0);
        let b = FlowId::new(1, 0);
        assert!(PriorityOrder::new(&inst, vec![a, a]).is_err());
        assert!(PriorityOrder::new(&inst, vec![a]).is_err());
        assert!(PriorityOrder::new(&inst, vec![a, FlowId::new(3, 0)]).is_err());
        assert!(PriorityOrder::new(&inst, vec![b, a]).is_ok());
    }

    #[test]
    fn link_orders_must_cover_routed_flows() {
        let inst = instance(3, &[(0, 2, 10.0), (1, 2, 10.0)], &[0, 1], &[(0, 1.0, &[(2, 0.0)]), (1, 1.0, &[(2, 0.0)])]);
        let sel = SourceSelection::new(&inst, vec![0, 0]).unwrap();
        assert!(LinkOrders::new(&inst, &sel, vec![vec![0], vec![1]]).is_ok());
        assert!(LinkOrders::new(&inst, &sel, vec![vec![1], vec![1]]).is_err());
        assert!(LinkOrders::new(&inst, &sel, vec![vec![0]]).is_err());
    }

    #[test]
    fn conflicts_are_symmetric() {
        // 0 and 1 request from 3 through 2
        let inst = instance(
            4,
            &[(0, 2, 10.0), (1, 2, 10.0), (2, 3, 10.0)],
            &[0, 1],
            &[(0, 1.0, &[(3, 0.0)]), (1, 1.0, &[(3, 0.0)])],
        );
        let sel = SourceSelection::new(&inst, vec![0, 0]).unwrap();
        assert_eq!(conflicting_flows(&inst, &sel, 0), vec![1]);
        assert_eq!(conflicting_flows(&inst, &sel, 1), vec![0]);
    }
}
