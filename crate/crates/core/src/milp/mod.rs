//! Mixed-integer linear models and an exact branch-and-bound solver.
//!
//! Models are always maximisation problems. The LP relaxations are solved
//! with a dense two-phase simplex ([`simplex`]); [`bnb`] drives the search.
//! [`encode`] builds the winner determination models.

pub mod bnb;
pub mod encode;
pub mod simplex;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bnb::{solve, SolveLimits};
pub use encode::{build_ft_wdp, build_nn_wdp, build_reported_wdp, WdpModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn is_integral(&self) -> bool {
        self.kind != VarKind::Continuous
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A maximisation MIP.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<f64>,
    objective_offset: f64,
}

impl MilpModel {
    pub fn new() -> MilpModel {
        MilpModel::default()
    }

    fn push_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64) -> VarId {
        self.vars.push(Variable { name, kind, lower, upper });
        self.objective.push(0.0);
        VarId(self.vars.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.push_var(name.into(), VarKind::Continuous, lower, upper)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.push_var(name.into(), VarKind::Binary, 0.0, 1.0)
    }

    /// Integer variables must have finite bounds.
    pub fn add_integer(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::ModelBuild("integer variables need finite bounds".into()));
        }
        Ok(self.push_var(name.into(), VarKind::Integer, lower.ceil(), upper.floor()))
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Result<()> {
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= self.vars.len()) {
            return Err(Error::ModelBuild(format!("constraint references undeclared variable {}", v.0)));
        }
        self.constraints.push(Constraint { name: name.into(), terms, sense, rhs });
        Ok(())
    }

    pub fn set_objective(&mut self, var: VarId, coefficient: f64) {
        self.objective[var.0] = coefficient;
    }

    pub fn add_objective(&mut self, var: VarId, coefficient: f64) {
        self.objective[var.0] += coefficient;
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.objective_offset = offset;
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Objective value of an assignment, including the constant offset.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(values).map(|(c, x)| c * x).sum::<f64>()
    }

    /// Whether `values` satisfies every constraint, bound and integrality
    /// requirement within `tol`.
    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        let bounds_ok = self.vars.iter().zip(values).all(|(v, x)| {
            *x >= v.lower - tol && *x <= v.upper + tol && (!v.is_integral() || (x - x.round()).abs() <= tol)
        });
        bounds_ok
            && self.constraints.iter().all(|c| {
                let lhs: f64 = c.terms.iter().map(|(v, a)| a * values[v.0]).sum();
                match c.sense {
                    Sense::Le => lhs <= c.rhs + tol,
                    Sense::Ge => lhs >= c.rhs - tol,
                    Sense::Eq => (lhs - c.rhs).abs() <= tol,
                }
            })
    }

    /// Plain-text export in the style of the CPLEX LP format.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::from("Maximize\n obj:");
        let mut any = false;
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = write!(out, " {} {} {}", if *c < 0.0 { "-" } else { "+" }, c.abs(), self.vars[j].name);
                any = true;
            }
        }
        if self.objective_offset != 0.0 || !any {
            let _ = write!(out, " + {}", self.objective_offset);
        }
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            for (v, a) in &c.terms {
                let _ = write!(out, " {} {} {}", if *a < 0.0 { "-" } else { "+" }, a.abs(), self.vars[v.0].name);
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", c.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
        }
        let names = |kind: VarKind| self.vars.iter().filter(move |v| v.kind == kind).map(|v| v.name.as_str()).collect::<Vec<_>>();
        for (header, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
            let list = names(kind);
            if !list.is_empty() {
                let _ = writeln!(out, "{header}\n {}", list.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// The node or time budget ran out; the incumbent (if any) is returned.
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Objective including the model's constant offset; `-inf` when no
    /// feasible point is known.
    pub objective: f64,
    pub values: Vec<f64>,
    pub nodes: usize,
}

impl MilpSolution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn has_solution(&self) -> bool {
        self.objective > f64::NEG_INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_undeclared_variables_and_unbounded_integers() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        assert!(m.add_constraint("c", vec![(x, 1.0), (VarId(3), 1.0)], Sense::Le, 1.0).is_err());
        assert!(m.add_integer("g", 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn lp_export_lists_sections() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        let g = m.add_integer("g", 0.0, 3.0).unwrap();
        m.set_objective(x, 2.0);
        m.add_constraint("c1", vec![(x, 1.0), (g, -2.0)], Sense::Eq, 0.0).unwrap();
        let lp = m.to_lp_string();
        assert!(lp.contains("Maximize") && lp.contains("c1: + 1 x - 2 g = 0"));
        assert!(lp.contains("Binaries\n x") && lp.contains("Generals\n g"));
    }
}
