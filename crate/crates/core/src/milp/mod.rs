//! Linear and mixed-binary programming.
//!
//! A dense-inverse bounded revised simplex solves the relaxations and a
//! best-first branch-and-bound handles the binaries. Sized for desk-scale
//! planning models, not for general-purpose use.

mod bnb;
mod lpformat;
mod simplex;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::solve_milp;
pub use lpformat::write_lp;
pub use simplex::{solve_lp, solve_lp_with};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("row '{row}' references variable {var} but only {count} exist")]
    UnknownVariable { row: String, var: usize, count: usize },
    #[error("variable '{0}' has lower bound above upper bound")]
    EmptyDomain(String),
    #[error("non-finite coefficient in '{0}'")]
    NonFinite(String),
    #[error("binary variable '{0}' has bounds outside [0, 1]")]
    BinaryBounds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

/// `lower <= Σ coeffs·x <= upper`; either side may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// Minimization problem over bounded variables and ranged rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        self.vars.len() - 1
    }

    /// Adds a one-sided or equality row. Repeated variable indices are summed.
    pub fn add_row(&mut self, name: impl Into<String>, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> usize {
        let (lower, upper) = match sense {
            Sense::Le => (f64::NEG_INFINITY, rhs),
            Sense::Ge => (rhs, f64::INFINITY),
            Sense::Eq => (rhs, rhs),
        };
        self.add_range(name, coeffs, lower, upper)
    }

    pub fn add_range(&mut self, name: impl Into<String>, coeffs: &[(usize, f64)], lower: f64, upper: f64) -> usize {
        let mut merged: Vec<(usize, f64)> = coeffs.to_vec();
        merged.sort_by_key(|&(j, _)| j);
        merged.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Row {
            name: name.into(),
            coeffs: merged,
            lower,
            upper,
        });
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.vars[var].lower = lower;
        self.vars[var].upper = upper;
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        for r in &self.rows {
            let a = r.activity(x);
            worst = worst.max(r.lower - a).max(a - r.upper);
        }
        worst
    }

    pub fn check(&self) -> Result<(), ModelError> {
        for v in &self.vars {
            if v.lower > v.upper || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(ModelError::EmptyDomain(v.name.clone()));
            }
            if !v.cost.is_finite() || v.lower.is_nan() || v.upper.is_nan() {
                return Err(ModelError::NonFinite(v.name.clone()));
            }
        }
        for r in &self.rows {
            for &(j, a) in &r.coeffs {
                if j >= self.vars.len() {
                    return Err(ModelError::UnknownVariable {
                        row: r.name.clone(),
                        var: j,
                        count: self.vars.len(),
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite(r.name.clone()));
                }
            }
            if r.lower > r.upper || r.lower.is_nan() || r.upper.is_nan() {
                return Err(ModelError::EmptyDomain(r.name.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row; reduced cost of the row activity.
    pub row_duals: Vec<f64>,
    /// `c - Aᵀy` per variable.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpSettings {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub max_iterations: Option<usize>,
}

impl Default for LpSettings {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MILProblem {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

impl MILProblem {
    pub fn new(lp: LinearProgram, mut binaries: Vec<usize>) -> Result<Self, ModelError> {
        lp.check()?;
        binaries.sort_unstable();
        binaries.dedup();
        for &b in &binaries {
            let v = lp.vars.get(b).ok_or_else(|| ModelError::UnknownVariable {
                row: "binaries".into(),
                var: b,
                count: lp.vars.len(),
            })?;
            if v.lower < 0.0 || v.upper > 1.0 {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
        }
        Ok(Self { lp, binaries })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Most fractional binary, lowest index among equals.
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    /// Gap turning the strict trigger inequality into a weak one (MW).
    pub epsilon: f64,
    pub scal_max: f64,
    pub node_limit: usize,
    pub time_limit_s: Option<f64>,
    pub tie_break: TieBreak,
    /// Adds the valid production floor/ceiling rows at each eligible node-hour.
    pub bound_cuts: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            integrality_tol: 1e-6,
            epsilon: 1e-6,
            scal_max: 1000.0,
            node_limit: 100_000,
            time_limit_s: None,
            tie_break: TieBreak::LowestIndex,
            bound_cuts: true,
        }
    }
}

impl SolverConfig {
    pub fn lp_settings(&self) -> LpSettings {
        LpSettings {
            feasibility_tol: self.feasibility_tol,
            optimality_tol: self.optimality_tol,
            max_iterations: None,
        }
    }

    pub fn time_limit(&self) -> Option<Duration> {
        self.time_limit_s.map(Duration::from_secs_f64)
    }

    pub fn validate(&self) -> Result<(), String> {
        let tols = [
            ("feasibility_tol", self.feasibility_tol),
            ("optimality_tol", self.optimality_tol),
            ("integrality_tol", self.integrality_tol),
            ("epsilon", self.epsilon),
            ("scal_max", self.scal_max),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MILPSolution {
    pub status: MilpStatus,
    /// Empty unless an incumbent exists.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Best lower bound over open nodes at exit.
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    /// (node count, objective) each time the incumbent improved.
    pub incumbents: Vec<(usize, f64)>,
}

impl MILPSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.x.is_empty()
    }
}

/// Linear data of one node-hour's eligible aggregate, as `k0 + k1·scal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigMContext {
    pub avail: (f64, f64),
    pub cap: (f64, f64),
    pub residual: f64,
    pub fl: f64,
}

/// Constant large enough that every indicator row is slack when deactivated
/// for any `scal` in `[0, scal_max]`.
pub fn compute_big_m(ctx: &BigMContext, cfg: &SolverConfig) -> f64 {
    let s = cfg.scal_max;
    let avail = ctx.avail.0 + ctx.avail.1 * s;
    let cap = ctx.cap.0 + ctx.cap.1 * s;
    avail + ctx.fl * cap + ctx.residual + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_m_examples() {
        let cfg = SolverConfig {
            scal_max: 10.0,
            ..SolverConfig::default()
        };
        let empty = BigMContext {
            avail: (0.0, 0.0),
            cap: (0.0, 0.0),
            residual: 2.5,
            fl: 0.7,
        };
        assert_eq!(compute_big_m(&empty, &cfg), 3.5);
        let single = BigMContext {
            avail: (0.0, 1.0),
            cap: (0.0, 1.0),
            residual: 0.0,
            fl: 0.7,
        };
        assert!((compute_big_m(&single, &cfg) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn rows_merge_duplicate_indices() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 1.0, 0.0);
        let y = lp.add_var("y", 0.0, 1.0, 0.0);
        lp.add_row("r", &[(y, 1.0), (x, 2.0), (y, -1.0), (x, 0.5)], Sense::Le, 1.0);
        assert_eq!(lp.rows[0].coeffs, vec![(x, 2.5)]);
    }

    #[test]
    fn model_checks() {
        let mut lp = LinearProgram::new();
        lp.add_var("x", 1.0, 0.0, 0.0);
        assert!(matches!(lp.check(), Err(ModelError::EmptyDomain(_))));
        let mut lp = LinearProgram::new();
        lp.add_var("x", 0.0, 1.0, 0.0);
        lp.add_row("r", &[(3, 1.0)], Sense::Le, 1.0);
        assert!(matches!(lp.check(), Err(ModelError::UnknownVariable { .. })));
        let mut lp = LinearProgram::new();
        lp.add_var("b", 0.0, 2.0, 0.0);
        assert!(matches!(MILProblem::new(lp, vec![0]), Err(ModelError::BinaryBounds(_))));
    }

    #[test]
    fn config_rejects_nonpositive_tolerances() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            epsilon: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
