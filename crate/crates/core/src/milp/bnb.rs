//! Branch and bound over LP relaxations.
//!
//! The search dives depth-first until the first incumbent is found, then
//! switches to best-bound node selection. Branching picks the most
//! fractional integral variable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::simplex::{solve_lp, LpOutcome, LpRow};
use super::{MilpModel, MilpSolution, SolveStatus};

pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const OBJECTIVE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveLimits {
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
}

impl Default for SolveLimits {
    fn default() -> SolveLimits {
        SolveLimits { max_nodes: 1_000_000, time_limit: None }
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// LP bound inherited from the parent.
    bound: f64,
    seq: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Node) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Node) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap on bound, older nodes first among equal bounds
    fn cmp(&self, other: &Node) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Solves `model` exactly (up to the LP and integrality tolerances) unless
/// a limit is hit first.
pub fn solve(model: &MilpModel, limits: SolveLimits) -> MilpSolution {
    let start = Instant::now();
    let n = model.num_vars();
    let c = model.objective();
    let rows: Vec<LpRow> = model
        .constraints()
        .iter()
        .map(|k| LpRow { terms: k.terms.iter().map(|(v, a)| (v.0, *a)).collect(), sense: k.sense, rhs: k.rhs })
        .collect();
    let integral: Vec<bool> = model.vars().iter().map(|v| v.is_integral()).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0;
    let mut seq = 0;
    let mut dive: Vec<Node> = vec![Node {
        lower: model.vars().iter().map(|v| v.lower).collect(),
        upper: model.vars().iter().map(|v| v.upper).collect(),
        bound: f64::INFINITY,
        seq,
    }];
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut hit_limit = false;

    loop {
        let node = if best.is_none() {
            match dive.pop() {
                Some(node) => node,
                None => break,
            }
        } else {
            if !dive.is_empty() {
                heap.extend(dive.drain(..));
            }
            match heap.pop() {
                Some(node) => node,
                None => break,
            }
        };
        let incumbent = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
        if node.bound <= incumbent + OBJECTIVE_TOL {
            continue;
        }
        if nodes >= limits.max_nodes || limits.time_limit.is_some_and(|t| start.elapsed() > t) {
            hit_limit = true;
            break;
        }
        nodes += 1;

        let (x, lp_obj) = match solve_lp(c, &rows, &node.lower, &node.upper) {
            LpOutcome::Optimal { x, objective } => (x, objective),
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                log::warn!("LP relaxation unbounded; stopping search");
                hit_limit = true;
                break;
            }
            LpOutcome::IterationLimit => {
                log::warn!("simplex iteration limit at node {nodes}; node dropped");
                hit_limit = true;
                continue;
            }
        };
        if lp_obj <= incumbent + OBJECTIVE_TOL {
            continue;
        }

        let mut branch: Option<(usize, f64)> = None;
        for j in 0..n {
            if integral[j] {
                let frac = x[j] - x[j].floor();
                let dist = frac.min(1.0 - frac);
                if dist > INTEGRALITY_TOL && branch.is_none_or(|(_, d)| dist > d + 1e-12) {
                    branch = Some((j, dist));
                }
            }
        }

        match branch {
            None => {
                let values: Vec<f64> = x.iter().zip(&integral).map(|(v, int)| if *int { v.round() } else { *v }).collect();
                let obj: f64 = c.iter().zip(&values).map(|(a, b)| a * b).sum();
                if obj > incumbent + OBJECTIVE_TOL || best.is_none() {
                    best = Some((obj, values));
                }
            }
            Some((j, _)) => {
                let mut down = Node { lower: node.lower.clone(), upper: node.upper.clone(), bound: lp_obj, seq: 0 };
                down.upper[j] = x[j].floor();
                let mut up = Node { lower: node.lower, upper: node.upper, bound: lp_obj, seq: 0 };
                up.lower[j] = x[j].ceil();
                // the child on the rounding side is explored first while diving
                let children = if x[j] - x[j].floor() >= 0.5 { [down, up] } else { [up, down] };
                for mut child in children {
                    seq += 1;
                    child.seq = seq;
                    if best.is_none() {
                        dive.push(child);
                    } else {
                        heap.push(child);
                    }
                }
            }
        }
    }

    let status = if hit_limit {
        SolveStatus::IterationLimit
    } else if best.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    match best {
        Some((obj, values)) => MilpSolution { status, objective: obj + model.objective_offset(), values, nodes },
        None => MilpSolution { status, objective: f64::NEG_INFINITY, values: Vec::new(), nodes },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Sense, VarId};

    #[test]
    fn knapsack_matches_enumeration() {
        let values = [10.0, 13.0, 7.0, 8.0, 9.0, 4.0];
        let weights = [5.0, 7.0, 3.0, 4.0, 5.0, 2.0];
        let cap = 12.0;
        let mut m = MilpModel::new();
        let vars: Vec<VarId> = (0..6).map(|i| m.add_binary(format!("x{i}"))).collect();
        for (v, val) in vars.iter().zip(values) {
            m.set_objective(*v, val);
        }
        m.add_constraint("cap", vars.iter().zip(weights).map(|(v, w)| (*v, w)).collect(), Sense::Le, cap).unwrap();
        let sol = solve(&m, SolveLimits::default());
        let mut best = 0.0f64;
        for mask in 0u32..64 {
            let (mut v, mut w) = (0.0, 0.0);
            for i in 0..6 {
                if mask >> i & 1 == 1 {
                    v += values[i];
                    w += weights[i];
                }
            }
            if w <= cap {
                best = best.max(v);
            }
        }
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - best).abs() < 1e-7);
        assert!(m.is_feasible(&sol.values, 1e-6));
    }

    #[test]
    fn infeasible_binaries() {
        let mut m = MilpModel::new();
        let a = m.add_binary("a11");
        let b = m.add_binary("a21");
        m.add_constraint("c", vec![(a, 1.0), (b, 1.0)], Sense::Ge, 3.0).unwrap();
        let sol = solve(&m, SolveLimits::default());
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(!sol.has_solution());
    }

    #[test]
    fn general_integers_and_offset() {
        // max 3g + h + 1 s.t. 2g + h <= 7.5, g in [0,5] integer, h in [0,1]
        let mut m = MilpModel::new();
        let g = m.add_integer("g", 0.0, 5.0).unwrap();
        let h = m.add_continuous("h", 0.0, 1.0);
        m.set_objective(g, 3.0);
        m.set_objective(h, 1.0);
        m.set_objective_offset(1.0);
        m.add_constraint("c", vec![(g, 2.0), (h, 1.0)], Sense::Le, 7.5).unwrap();
        let sol = solve(&m, SolveLimits::default());
        assert_eq!(sol.value(g), 3.0);
        assert!((sol.objective - 11.0).abs() < 1e-9);
    }

    #[test]
    fn node_limit_reports_iteration_limit() {
        let mut m = MilpModel::new();
        let vars: Vec<VarId> = (0..12).map(|i| m.add_binary(format!("x{i}"))).collect();
        for v in &vars {
            m.set_objective(*v, 1.0);
        }
        m.add_constraint("odd", vars.iter().map(|v| (*v, 2.0)).collect(), Sense::Le, 11.0).unwrap();
        let sol = solve(&m, SolveLimits { max_nodes: 1, time_limit: None });
        assert_eq!(sol.status, SolveStatus::IterationLimit);
    }
}
