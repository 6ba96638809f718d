//! Feasibility check of a timed schedule against the model constraints:
//! link exclusivity, hop chaining, release bounds, completion bookkeeping,
//! source selection and pairwise ordering.

use std::fmt;

use serde::Serialize;

use crate::instance::{FlowId, LinkId, ProblemInstance};

use super::{EvaluatedSchedule, SourceSelection};

const REL_TOL: f64 = 1e-9;

fn tol(x: f64) -> f64 {
    REL_TOL * x.abs().max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Violation {
    /// Two subflows occupy the same link at the same time.
    Overlap {
        link: LinkId,
        first: (FlowId, usize),
        second: (FlowId, usize),
        first_interval: (f64, f64),
        second_interval: (f64, f64),
    },
    /// A hop finishes before its predecessor hop plus its own transmission time.
    HopChain {
        flow: FlowId,
        hop: usize,
        finish: f64,
        required: f64,
    },
    /// A first hop starts before the source's release time.
    Release {
        flow: FlowId,
        start: f64,
        release: f64,
    },
    /// A subflow's occupancy differs from its transmission time (preempted or stretched).
    Duration {
        flow: FlowId,
        hop: usize,
        occupied: f64,
        transmission: f64,
    },
    /// FCT, CCT or the sum disagree with the subflow finish times.
    Completion { what: String, reported: f64, expected: f64 },
    /// Missing or out-of-range source choice, or timing shape not matching the path.
    Source { flow: FlowId, detail: String },
    /// Two subflows on a link start together, so neither precedes the other.
    Ordering {
        link: LinkId,
        first: (FlowId, usize),
        second: (FlowId, usize),
    },
}

impl Violation {
    pub fn class(&self) -> &'static str {
        match self {
            Violation::Overlap { .. } => "overlap",
            Violation::HopChain { .. } => "hop_chain",
            Violation::Release { .. } => "release",
            Violation::Duration { .. } => "duration",
            Violation::Completion { .. } => "completion",
            Violation::Source { .. } => "source",
            Violation::Ordering { .. } => "ordering",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap {
                link,
                first,
                second,
                first_interval,
                second_interval,
            } => write!(
                f,
                "overlap on link {}: flow {} hop {} [{}, {}) and flow {} hop {} [{}, {})",
                link.0,
                first.0,
                first.1,
                first_interval.0,
                first_interval.1,
                second.0,
                second.1,
                second_interval.0,
                second_interval.1
            ),
            Violation::HopChain {
                flow,
                hop,
                finish,
                required,
            } => write!(f, "hop chain: flow {flow} hop {hop} finishes at {finish}, needs >= {required}"),
            Violation::Release { flow, start, release } => {
                write!(f, "release: flow {flow} starts at {start} before release {release}")
            }
            Violation::Duration {
                flow,
                hop,
                occupied,
                transmission,
            } => write!(
                f,
                "duration: flow {flow} hop {hop} occupies its link for {occupied}, transmission takes {transmission}"
            ),
            Violation::Completion {
                what,
                reported,
                expected,
            } => write!(f, "completion: {what} reported {reported}, expected {expected}"),
            Violation::Source { flow, detail } => write!(f, "source: flow {flow}: {detail}"),
            Violation::Ordering { link, first, second } => write!(
                f,
                "ordering: flow {} hop {} and flow {} hop {} on link {} start together",
                first.0, first.1, second.0, second.1, link.0
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, class: &str) -> usize {
        self.violations.iter().filter(|v| v.class() == class).count()
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks `evaluated` against the instance under `sources`. Infeasibility is
/// reported, never returned as an error.
pub fn validate(instance: &ProblemInstance, sources: &SourceSelection, evaluated: &EvaluatedSchedule) -> ViolationReport {
    let mut out = Vec::new();
    let ids = instance.flow_ids();
    let network = instance.network();

    if sources.as_slice().len() != ids.len() {
        out.push(Violation::Source {
            flow: FlowId::new(0, 0),
            detail: format!("{} sources selected for {} flows", sources.as_slice().len(), ids.len()),
        });
        return ViolationReport { violations: out };
    }
    if evaluated.start.len() != ids.len() || evaluated.finish.len() != ids.len() || evaluated.fct.len() != ids.len() {
        out.push(Violation::Source {
            flow: FlowId::new(0, 0),
            detail: format!("timing covers a different number of flows than the instance ({})", ids.len()),
        });
        return ViolationReport { violations: out };
    }

    // per link: (flow, hop, start, finish)
    let mut occupancy: Vec<Vec<(FlowId, usize, f64, f64)>> = vec![Vec::new(); network.num_links()];
    let mut shape_ok = vec![true; ids.len()];
    for (flat, &id) in ids.iter().enumerate() {
        let flow = instance.flow(id);
        let s = sources.get(flat);
        if s >= flow.sources.len() {
            out.push(Violation::Source {
                flow: id,
                detail: format!("selected source {s} of {}", flow.sources.len()),
            });
            shape_ok[flat] = false;
            continue;
        }
        let option = &flow.sources[s];
        let hops = option.path.len();
        if evaluated.start[flat].len() != hops || evaluated.finish[flat].len() != hops {
            out.push(Violation::Source {
                flow: id,
                detail: format!("timing has {} hops, chosen path has {hops}", evaluated.finish[flat].len()),
            });
            shape_ok[flat] = false;
            continue;
        }
        for h in 0..hops {
            let t = flow.transmission_time(network, s, h);
            let (st, fi) = (evaluated.start[flat][h], evaluated.finish[flat][h]);
            if (fi - st - t).abs() > tol(fi) {
                out.push(Violation::Duration {
                    flow: id,
                    hop: h,
                    occupied: fi - st,
                    transmission: t,
                });
            }
            if h == 0 {
                if st < option.release - tol(option.release) {
                    out.push(Violation::Release {
                        flow: id,
                        start: st,
                        release: option.release,
                    });
                }
            } else {
                let required = evaluated.finish[flat][h - 1] + t;
                if fi < required - tol(required) {
                    out.push(Violation::HopChain {
                        flow: id,
                        hop: h,
                        finish: fi,
                        required,
                    });
                }
            }
            occupancy[option.path[h].0].push((id, h, st, fi));
        }
    }

    for (l, subs) in occupancy.iter().enumerate() {
        for (a, &(fa, ha, sa, ea)) in subs.iter().enumerate() {
            for &(fb, hb, sb, eb) in &subs[a + 1..] {
                if sa == sb {
                    out.push(Violation::Ordering {
                        link: LinkId(l),
                        first: (fa, ha),
                        second: (fb, hb),
                    });
                }
                let a_first = ea <= sb + tol(sb);
                let b_first = eb <= sa + tol(sa);
                if !a_first && !b_first {
                    out.push(Violation::Overlap {
                        link: LinkId(l),
                        first: (fa, ha),
                        second: (fb, hb),
                        first_interval: (sa, ea),
                        second_interval: (sb, eb),
                    });
                }
            }
        }
    }

    let mut cct = vec![f64::NEG_INFINITY; instance.num_coflows()];
    for (flat, &id) in ids.iter().enumerate() {
        if !shape_ok[flat] {
            continue;
        }
        let expected = evaluated.finish[flat].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let reported = evaluated.fct[flat];
        if (reported - expected).abs() > tol(expected) {
            out.push(Violation::Completion {
                what: format!("FCT of flow {id}"),
                reported,
                expected,
            });
        }
        cct[id.coflow] = cct[id.coflow].max(reported);
    }
    if evaluated.cct.len() != instance.num_coflows() {
        out.push(Violation::Completion {
            what: "number of coflow completion times".into(),
            reported: evaluated.cct.len() as f64,
            expected: instance.num_coflows() as f64,
        });
    } else {
        for (i, (&reported, &expected)) in evaluated.cct.iter().zip(&cct).enumerate() {
            if expected.is_finite() && (reported - expected).abs() > tol(expected) {
                out.push(Violation::Completion {
                    what: format!("CCT of coflow {i}"),
                    reported,
                    expected,
                });
            }
        }
        let expected: f64 = evaluated.cct.iter().sum();
        if (evaluated.sum_cct - expected).abs() > tol(expected) {
            out.push(Violation::Completion {
                what: "sum of CCT".into(),
                reported: evaluated.sum_cct,
                expected,
            });
        }
    }

    ViolationReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::fixtures::instance;
    use crate::schedule::{PriorityOrder, Schedule};

    fn shared_link() -> ProblemInstance {
        // both requesters pull 2 Mb over link 2-3 (20 Mbps) then a fast last hop
        instance(
            4,
            &[(2, 3, 20.0), (0, 2, 20.0), (1, 2, 20.0)],
            &[0, 1],
            &[(0, 2.0, &[(3, 0.0)]), (1, 2.0, &[(3, 0.0)])],
        )
    }

    fn evaluated(inst: &ProblemInstance) -> (SourceSelection, EvaluatedSchedule) {
        let sel = SourceSelection::new(inst, vec![0, 0]).unwrap();
        let s = Schedule::from_priority(inst, sel.clone(), PriorityOrder::identity(inst));
        (sel, s.evaluated)
    }

    #[test]
    fn evaluator_output_is_feasible() {
        let inst = shared_link();
        let (sel, ev) = evaluated(&inst);
        let report = validate(&inst, &sel, &ev);
        assert!(report.is_feasible(), "{report}");
    }

    #[test]
    fn overlapping_intervals_are_reported() {
        let inst = shared_link();
        let (sel, mut ev) = evaluated(&inst);
        // pull the second flow's first hop back so it overlaps the first
        let shift = 0.05;
        for h in 0..2 {
            ev.start[1][h] -= shift;
            ev.finish[1][h] -= shift;
        }
        ev.fct[1] -= shift;
        ev.cct[1] -= shift;
        ev.sum_cct -= shift;
        let report = validate(&inst, &sel, &ev);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.count("overlap"), 1);
    }

    #[test]
    fn broken_hop_chain_is_reported() {
        let inst = shared_link();
        let (sel, mut ev) = evaluated(&inst);
        // second hop of flow 0 finishing too early
        ev.start[0][1] -= 0.02;
        ev.finish[0][1] -= 0.02;
        let report = validate(&inst, &sel, &ev);
        assert!(report.count("hop_chain") >= 1, "{report}");
    }

    #[test]
    fn early_start_violates_release() {
        let inst = instance(2, &[(0, 1, 20.0)], &[0], &[(0, 2.0, &[(1, 0.5)])]);
        let sel = SourceSelection::new(&inst, vec![0]).unwrap();
        let ev = EvaluatedSchedule::from_times(&inst, vec![vec![0.0]], vec![vec![0.1]]);
        let report = validate(&inst, &sel, &ev);
        assert_eq!(report.count("release"), 1);
        assert_eq!(report.violations.len(), 1);
    }

    #[test]
    fn wrong_cct_bookkeeping_is_reported() {
        let inst = shared_link();
        let (sel, mut ev) = evaluated(&inst);
        ev.cct[0] += 1.0;
        let report = validate(&inst, &sel, &ev);
        // the CCT itself and the stale sum
        assert_eq!(report.count("completion"), 2, "{report}");
    }

    #[test]
    fn simultaneous_start_breaks_ordering() {
        let inst = shared_link();
        let (sel, mut ev) = evaluated(&inst);
        ev.start[1][0] = ev.start[0][0];
        ev.finish[1][0] = ev.finish[0][0];
        let report = validate(&inst, &sel, &ev);
        assert_eq!(report.count("ordering"), 1, "{report}");
        assert_eq!(report.count("overlap"), 1);
    }

    #[test]
    fn mismatched_shape_is_a_source_violation() {
        let inst = shared_link();
        let (sel, mut ev) = evaluated(&inst);
        ev.finish[0].pop();
        let report = validate(&inst, &sel, &ev);
        assert_eq!(report.count("source"), 1);
    }
}
