//! Export of the full source-selection and ordering program as a mixed
//! integer linear model in CPLEX LP text format, readable by HiGHS, CBC,
//! GLPK, Gurobi and most other MILP solvers.
//!
//! The product `X * Ft` of the nonlinear formulation is removed with big-M
//! deactivation: an ordering constraint between two subflows is only
//! enforced when both of their sources are selected and the ordering
//! variable points the right way.

use std::fmt::Write;

use crate::instance::ProblemInstance;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MilpStats {
    pub x_vars: usize,
    pub y_vars: usize,
    pub ft_vars: usize,
    pub constraints: usize,
}

#[derive(Clone, Debug)]
pub struct MilpModel {
    pub text: String,
    pub big_m: f64,
    pub stats: MilpStats,
}

/// Upper bound on any finish time of a non-idling schedule, padded by the
/// largest single transmission time so deactivated rows stay slack.
pub fn big_m(instance: &ProblemInstance) -> f64 {
    let network = instance.network();
    let mut total = 0.0;
    let mut max_t: f64 = 0.0;
    for &id in instance.flow_ids() {
        let flow = instance.flow(id);
        let mut rel: f64 = 0.0;
        let mut path: f64 = 0.0;
        for s in 0..flow.sources.len() {
            rel = rel.max(flow.sources[s].release);
            path = path.max(flow.path_time(network, s));
            for h in 0..flow.hops(s) {
                max_t = max_t.max(flow.transmission_time(network, s, h));
            }
        }
        total += rel + path;
    }
    total + max_t
}

struct Rows {
    text: String,
    count: usize,
}

impl Rows {
    fn push(&mut self, name: &str, lhs: &str, rhs: &str) {
        let _ = writeln!(self.text, " {name}: {lhs} {rhs}");
        self.count += 1;
    }
}

fn term(coef: f64, var: &str) -> String {
    if coef < 0.0 {
        format!("- {} {var}", -coef)
    } else {
        format!("+ {coef} {var}")
    }
}

/// Renders the model. Hops are 1-based in variable names.
pub fn export_milp(instance: &ProblemInstance) -> MilpModel {
    let network = instance.network();
    let m = big_m(instance);
    let ids = instance.flow_ids();
    let mut stats = MilpStats::default();
    let mut rows = Rows {
        text: String::new(),
        count: 0,
    };
    let mut binaries = Vec::new();

    let x = |i: usize, j: usize, s: usize| format!("X_{i}_{j}_{s}");
    let ft = |i: usize, j: usize, h: usize| format!("Ft_{i}_{j}_{}", h + 1);

    for &id in ids {
        let (i, j) = (id.coflow, id.flow);
        let flow = instance.flow(id);
        let max_hops = (0..flow.sources.len()).map(|s| flow.hops(s)).max().unwrap_or(0);
        stats.ft_vars += max_hops;
        stats.x_vars += flow.sources.len();

        let choose: Vec<String> = (0..flow.sources.len()).map(|s| x(i, j, s)).collect();
        rows.push(&format!("one_source_{i}_{j}"), &choose.join(" + "), "= 1");
        binaries.extend(choose);

        for (s, option) in flow.sources.iter().enumerate() {
            let t1 = flow.transmission_time(network, s, 0);
            rows.push(
                &format!("release_{i}_{j}_{s}"),
                &format!("{} {}", ft(i, j, 0), term(-(option.release + t1), &x(i, j, s))),
                ">= 0",
            );
            for h in 1..option.path.len() {
                let t = flow.transmission_time(network, s, h);
                rows.push(
                    &format!("chain_{i}_{j}_{s}_{}", h + 1),
                    &format!("{} - {} {}", ft(i, j, h), ft(i, j, h - 1), term(-t, &x(i, j, s))),
                    ">= 0",
                );
            }
        }
        for h in 0..max_hops {
            rows.push(
                &format!("fct_{i}_{j}_{}", h + 1),
                &format!("FCT_{i}_{j} - {}", ft(i, j, h)),
                ">= 0",
            );
        }
        rows.push(&format!("cct_{i}_{j}"), &format!("CCT_{i} - FCT_{i}_{j}"), ">= 0");
    }

    // one Y per unordered pair of subflows that can meet on a link; Y = 1
    // puts the first-named subflow ahead, Y = 0 the second
    for (fa, &a) in ids.iter().enumerate() {
        let flow_a = instance.flow(a);
        for &b in &ids[fa + 1..] {
            let flow_b = instance.flow(b);
            for (s, opt_a) in flow_a.sources.iter().enumerate() {
                for (w, opt_b) in flow_b.sources.iter().enumerate() {
                    for (h, la) in opt_a.path.iter().enumerate() {
                        for (l, lb) in opt_b.path.iter().enumerate() {
                            if la != lb {
                                continue;
                            }
                            let y = format!(
                                "Y_{}_{}_{s}_{}_{}_{}_{w}_{}",
                                a.coflow,
                                a.flow,
                                h + 1,
                                b.coflow,
                                b.flow,
                                l + 1
                            );
                            let ta = flow_a.transmission_time(network, s, h);
                            let tb = flow_b.transmission_time(network, w, l);
                            let (fa_var, fb_var) = (ft(a.coflow, a.flow, h), ft(b.coflow, b.flow, l));
                            let (xa, xb) = (x(a.coflow, a.flow, s), x(b.coflow, b.flow, w));
                            // Y = 1: b finishes at least T_b after a
                            rows.push(
                                &format!("{y}_fwd"),
                                &format!("{fb_var} - {fa_var} - {m} {y} - {m} {xa} - {m} {xb}"),
                                &format!(">= {}", tb - 3.0 * m),
                            );
                            // Y = 0: a finishes at least T_a after b
                            rows.push(
                                &format!("{y}_rev"),
                                &format!("{fa_var} - {fb_var} + {m} {y} - {m} {xa} - {m} {xb}"),
                                &format!(">= {}", ta - 2.0 * m),
                            );
                            binaries.push(y);
                            stats.y_vars += 1;
                        }
                    }
                }
            }
        }
    }
    stats.constraints = rows.count;

    let mut text = String::new();
    let _ = writeln!(text, "\\ Multi-source coflow scheduling: minimise the sum of coflow completion times.");
    let _ = writeln!(text, "\\ Format: CPLEX LP. Hops are 1-based, times in seconds.");
    let _ = writeln!(text, "\\   X_i_j_s             binary, flow j of coflow i is sent from source s");
    let _ = writeln!(text, "\\   Ft_i_j_h            finish time of flow (i, j) at hop h of its chosen path");
    let _ = writeln!(text, "\\   FCT_i_j, CCT_i      flow and coflow completion times");
    let _ = writeln!(
        text,
        "\\   Y_i_j_s_h_u_v_w_l   binary, 1 if hop h of (i, j) via source s precedes hop l of (u, v)"
    );
    let _ = writeln!(text, "\\                       via source w on their shared link, 0 if it follows");
    let _ = writeln!(text, "\\ Ordering rows are deactivated by big-M = {m} unless both sources are selected.");
    let _ = writeln!(
        text,
        "\\ Counts: {} X, {} Y, {} Ft, {} constraints.",
        stats.x_vars, stats.y_vars, stats.ft_vars, stats.constraints
    );
    let _ = writeln!(text, "Minimize");
    let objective: Vec<String> = (0..instance.num_coflows()).map(|i| format!("CCT_{i}")).collect();
    let _ = write!(text, " sum_cct:");
    for (k, c) in objective.iter().enumerate() {
        if k > 0 && k % 8 == 0 {
            let _ = write!(text, "\n   ");
        }
        let _ = write!(text, " {}{c}", if k == 0 { "" } else { "+ " });
    }
    let _ = writeln!(text);
    let _ = writeln!(text, "Subject To");
    text.push_str(&rows.text);
    let _ = writeln!(text, "Binaries");
    for b in &binaries {
        let _ = writeln!(text, " {b}");
    }
    let _ = writeln!(text, "End");

    MilpModel { text, big_m: m, stats }
}
