//! Solver-free reference evaluation of the feed-in rule.
//!
//! Once `scal` is fixed every node-hour's production follows the closed-form
//! rule, so feasibility is a forward evaluation of the linear network model.
//! Injections are nondecreasing in `scal`, which makes the feasible set an
//! interval and justifies bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{
    build_problem, curtailment_rule, is_eligible, node_terms, FormulationError, HourResult, NodeTerms, PlanResult,
    PlanStatus, Scenario,
};
use crate::grid::{GenKind, Grid, GridIndex};
use crate::milp::{solve_lp_with, LpStatus, SolverConfig};
use crate::network::{LinearNetworkModel, LinearState};

/// Limit violations smaller than this are ignored (MW and p.u.²).
pub const ORACLE_TOL: f64 = 1e-9;
pub const BISECTION_TOL: f64 = 1e-4;
pub const ENUMERATION_GUARD: usize = 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("{0} binaries exceed the enumeration guard of {ENUMERATION_GUARD}")]
    TooManyBinaries(usize),
    #[error("bisection tolerance must be positive, got {0}")]
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Thermal,
    VoltageHigh,
    VoltageLow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Line `from-to` or bus id.
    pub element: String,
    pub hour: usize,
    /// Excess beyond the limit (MW for lines, p.u.² for voltages).
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Per-hour data that does not depend on `scal`.
struct HourData {
    hour: usize,
    terms: Vec<NodeTerms>,
    /// Non-eligible generation minus scaled demand, per bus.
    fixed_p: Vec<f64>,
    inj_q: Vec<f64>,
}

/// Cached rule evaluation for one grid and scenario.
pub struct RuleModel<'a> {
    grid: &'a Grid,
    scenario: Scenario,
    index: GridIndex,
    model: LinearNetworkModel,
    hours: Vec<HourData>,
}

impl<'a> RuleModel<'a> {
    pub fn new(grid: &'a Grid, scenario: &Scenario) -> Result<Self, FormulationError> {
        scenario.validate()?;
        let index = grid.index()?;
        let model = LinearNetworkModel::build(grid)?;
        let mut hours = vec![];
        for h in scenario.hours_for(grid) {
            if h >= grid.hour_count {
                return Err(FormulationError::HourOutOfRange {
                    hour: h,
                    count: grid.hour_count,
                });
            }
            hours.push(hour_data(grid, &index, scenario, h));
        }
        Ok(RuleModel {
            grid,
            scenario: scenario.clone(),
            index,
            model,
            hours,
        })
    }

    pub fn model(&self) -> &LinearNetworkModel {
        &self.model
    }

    pub fn hours(&self) -> impl Iterator<Item = usize> + '_ {
        self.hours.iter().map(|d| d.hour)
    }

    fn injections(&self, d: &HourData, scal: f64) -> Vec<f64> {
        let fl = self.scenario.fl;
        d.fixed_p
            .iter()
            .zip(&d.terms)
            .map(|(&fixed, t)| {
                let (produced, _) = curtailment_rule(t.avail(scal), t.cap(scal), t.residual, fl);
                fixed + produced
            })
            .collect()
    }

    pub fn hour_count(&self) -> usize {
        self.hours.len()
    }

    /// Hour index, active injections and network state of the `k`-th
    /// modelled hour at `scal`.
    pub fn hour_state(&self, k: usize, scal: f64) -> (usize, Vec<f64>, LinearState) {
        let d = &self.hours[k];
        let (inj, state) = self.state(d, scal);
        (d.hour, inj, state)
    }

    pub fn injections_q(&self, k: usize) -> &[f64] {
        &self.hours[k].inj_q
    }

    fn state(&self, d: &HourData, scal: f64) -> (Vec<f64>, LinearState) {
        let inj = self.injections(d, scal);
        let state = self.model.evaluate(&inj, &d.inj_q).expect("dimensions fixed at construction");
        (inj, state)
    }

    fn violations(&self, d: &HourData, state: &LinearState) -> Vec<Violation> {
        let mut out = vec![];
        for (l, line) in self.grid.lines.iter().enumerate() {
            let excess = state.flow_p[l].abs() - line.s_max;
            if excess > ORACLE_TOL {
                out.push(Violation {
                    kind: ViolationKind::Thermal,
                    element: format!("{}-{}", line.from, line.to),
                    hour: d.hour,
                    magnitude: excess,
                });
            }
        }
        for (j, b) in self.grid.buses.iter().enumerate() {
            if j == self.model.topology.slack {
                continue;
            }
            let v = state.v_sq[j];
            if v - b.vmax * b.vmax > ORACLE_TOL {
                out.push(Violation {
                    kind: ViolationKind::VoltageHigh,
                    element: b.id.clone(),
                    hour: d.hour,
                    magnitude: v - b.vmax * b.vmax,
                });
            } else if b.vmin * b.vmin - v > ORACLE_TOL {
                out.push(Violation {
                    kind: ViolationKind::VoltageLow,
                    element: b.id.clone(),
                    hour: d.hour,
                    magnitude: b.vmin * b.vmin - v,
                });
            }
        }
        out
    }

    pub fn report(&self, scal: f64) -> FeasibilityReport {
        let per_hour: Vec<Vec<Violation>> = self
            .hours
            .par_iter()
            .map(|d| {
                let (_, state) = self.state(d, scal);
                self.violations(d, &state)
            })
            .collect();
        let violations: Vec<Violation> = per_hour.into_iter().flatten().collect();
        FeasibilityReport {
            feasible: violations.is_empty(),
            violations,
        }
    }

    pub fn is_feasible(&self, scal: f64) -> bool {
        self.hours.par_iter().all(|d| {
            let (_, state) = self.state(d, scal);
            self.violations(d, &state).is_empty()
        })
    }

    /// Largest feasible `scal` in `[0, scal_max]` to within `tol`.
    pub fn max_scal(&self, scal_max: f64, tol: f64) -> Result<Bisection, OracleError> {
        if !(tol > 0.0) {
            return Err(OracleError::Tolerance(tol));
        }
        if !self.is_feasible(0.0) {
            return Ok(Bisection::InfeasibleAtZero(self.report(0.0)));
        }
        if self.is_feasible(scal_max) {
            return Ok(Bisection::Feasible(scal_max));
        }
        let (mut lo, mut hi) = (0.0, scal_max);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.is_feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Bisection::Feasible(lo))
    }

    /// Rule-based dispatch at `scal`, decoded like a solver result. Node
    /// curtailment is split across eligible units in proportion to availability.
    pub fn plan_at(&self, scal: f64) -> PlanResult {
        let grid = self.grid;
        let mut hours = vec![];
        for d in &self.hours {
            let h = d.hour;
            let (inj, state) = self.state(d, scal);
            let available: Vec<f64> = grid
                .gens
                .iter()
                .map(|u| {
                    if u.kind == GenKind::PvCandidate {
                        u.available(h) * scal
                    } else {
                        u.available(h)
                    }
                })
                .collect();
            let mut curtailment = vec![0.0; grid.gens.len()];
            let mut alpha = vec![None; grid.buses.len()];
            for (i, t) in d.terms.iter().enumerate() {
                let avail = t.avail(scal);
                if !(t.has_capacity() && (t.a0 > 0.0 || t.a1 > 0.0)) {
                    continue;
                }
                let (_, curtailed) = curtailment_rule(avail, t.cap(scal), t.residual, self.scenario.fl);
                alpha[i] = Some(curtailed > 0.0);
                if curtailed > 0.0 {
                    for &g in &self.index.gens_at_bus[i] {
                        if is_eligible(grid.gens[g].kind, self.scenario.case) {
                            curtailment[g] = curtailed * available[g] / avail;
                        }
                    }
                }
            }
            let generation: Vec<f64> = available.iter().zip(&curtailment).map(|(a, c)| a - c).collect();
            let net: f64 = inj.iter().sum();
            let net_q: f64 = d.inj_q.iter().sum();
            let n = grid.buses.len();
            hours.push(HourResult {
                hour: h,
                available,
                generation,
                curtailment,
                imports_mw: (-net).max(0.0),
                exports_mw: net.max(0.0),
                imports_mvar: (-net_q).max(0.0),
                exports_mvar: net_q.max(0.0),
                injection_p: inj,
                injection_q: d.inj_q.clone(),
                flow_p: state.flow_p,
                flow_q: state.flow_q,
                v_sq: state.v_sq,
                alpha,
                pns: vec![0.0; n],
                qns: vec![0.0; n],
                eps: vec![0.0; n],
                eqs: vec![0.0; n],
            });
        }
        let c = &self.scenario.costs;
        let dh = grid.hour_duration_h;
        let objective = hours
            .iter()
            .map(|r| {
                dh * (c.c_imp * (r.imports_mw + r.imports_mvar) - c.c_exp * (r.exports_mw + r.exports_mvar))
            })
            .sum();
        PlanResult {
            status: PlanStatus::Optimal,
            scal_star: scal,
            added_capacity_mw: grid.candidate_base_mw() * scal,
            objective,
            slack_usage: 0.0,
            hour_duration_h: dh,
            hours,
            nodes: 0,
            gap: 0.0,
        }
    }
}

fn hour_data(grid: &Grid, index: &GridIndex, scenario: &Scenario, h: usize) -> HourData {
    let terms = node_terms(grid, index, scenario, h);
    let mult = scenario.demand_multiplier;
    let mut fixed_p: Vec<f64> = grid.buses.iter().map(|b| -mult * b.demand_p[h]).collect();
    for (g, u) in grid.gens.iter().enumerate() {
        if !is_eligible(u.kind, scenario.case) {
            fixed_p[index.gen_bus[g]] += u.available(h);
        }
    }
    let inj_q = grid.buses.iter().map(|b| -mult * b.demand_q[h]).collect();
    HourData {
        hour: h,
        terms,
        fixed_p,
        inj_q,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bisection {
    Feasible(f64),
    /// Limits are violated before any expansion.
    InfeasibleAtZero(FeasibilityReport),
}

impl Bisection {
    pub fn scal(&self) -> Option<f64> {
        match self {
            Bisection::Feasible(s) => Some(*s),
            Bisection::InfeasibleAtZero(_) => None,
        }
    }
}

/// Per-bus net injection (MW) at one hour under the feed-in rule.
pub fn rule_injections(grid: &Grid, scenario: &Scenario, scal: f64, hour: usize) -> Result<Vec<f64>, FormulationError> {
    let index = grid.index()?;
    let d = hour_data(grid, &index, scenario, hour);
    let fl = scenario.fl;
    Ok(d.fixed_p
        .iter()
        .zip(&d.terms)
        .map(|(&fixed, t)| fixed + curtailment_rule(t.avail(scal), t.cap(scal), t.residual, fl).0)
        .collect())
}

pub fn feasible_at(grid: &Grid, scenario: &Scenario, scal: f64) -> Result<FeasibilityReport, FormulationError> {
    Ok(RuleModel::new(grid, scenario)?.report(scal))
}

pub fn max_scal_bisection(grid: &Grid, scenario: &Scenario, scal_max: f64, tol: f64) -> Result<Bisection, OracleError> {
    RuleModel::new(grid, scenario)?.max_scal(scal_max, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub objective: f64,
    /// (variable index, value) per binary.
    pub assignment: Vec<(usize, bool)>,
    pub x: Vec<f64>,
    pub feasible_assignments: usize,
}

/// Exhaustive search over every indicator assignment, one LP each.
/// Returns `None` when no assignment is feasible.
pub fn enumerate_alpha(grid: &Grid, scenario: &Scenario, cfg: &SolverConfig) -> Result<Option<Enumeration>, OracleError> {
    let inst = build_problem(grid, scenario, cfg)?;
    let bins = &inst.mip.binaries;
    if bins.len() > ENUMERATION_GUARD {
        return Err(OracleError::TooManyBinaries(bins.len()));
    }
    let settings = cfg.lp_settings();
    let mut best: Option<Enumeration> = None;
    let mut feasible = 0;
    for mask in 0u32..(1u32 << bins.len()) {
        let mut lp = inst.mip.lp.clone();
        let assignment: Vec<(usize, bool)> = bins
            .iter()
            .enumerate()
            .map(|(bit, &b)| (b, (mask >> bit) & 1 == 1))
            .collect();
        for &(b, on) in &assignment {
            let v = if on { 1.0 } else { 0.0 };
            lp.set_bounds(b, v, v);
        }
        let sol = solve_lp_with(&lp, &settings);
        if sol.status != LpStatus::Optimal {
            continue;
        }
        feasible += 1;
        if best.as_ref().is_none_or(|b| sol.objective < b.objective) {
            best = Some(Enumeration {
                objective: sol.objective,
                assignment,
                x: sol.x,
                feasible_assignments: 0,
            });
        }
    }
    Ok(best.map(|mut b| {
        b.feasible_assignments = feasible;
        b
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourEnergy {
    pub hour: usize,
    /// PV energy over the hour (MWh).
    pub available_mwh: f64,
    pub generated_mwh: f64,
    pub curtailed_mwh: f64,
    pub imports_mwh: f64,
    pub exports_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualSeries {
    pub scal: f64,
    pub hours: Vec<HourEnergy>,
    pub violations: Vec<Violation>,
}

/// Rule-based dispatch over every scenario hour with `scal` fixed.
pub fn annual_simulate(grid: &Grid, scenario: &Scenario, scal: f64) -> Result<AnnualSeries, FormulationError> {
    let rm = RuleModel::new(grid, scenario)?;
    Ok(rm.annual(scal))
}

impl RuleModel<'_> {
    pub fn annual(&self, scal: f64) -> AnnualSeries {
        let grid = self.grid;
        let dh = grid.hour_duration_h;
        let fl = self.scenario.fl;
        let rows: Vec<(HourEnergy, Vec<Violation>)> = self
            .hours
            .par_iter()
            .map(|d| {
                let h = d.hour;
                let mut available = 0.0;
                let mut curtailed = 0.0;
                for t in &d.terms {
                    curtailed += curtailment_rule(t.avail(scal), t.cap(scal), t.residual, fl).1;
                }
                for u in grid.gens.iter().filter(|u| u.kind.is_pv()) {
                    available += if u.kind == GenKind::PvCandidate {
                        u.available(h) * scal
                    } else {
                        u.available(h)
                    };
                }
                let (inj, state) = self.state(d, scal);
                let net: f64 = inj.iter().sum();
                let energy = HourEnergy {
                    hour: h,
                    available_mwh: available * dh,
                    generated_mwh: (available - curtailed) * dh,
                    curtailed_mwh: curtailed * dh,
                    imports_mwh: (-net).max(0.0) * dh,
                    exports_mwh: net.max(0.0) * dh,
                };
                (energy, self.violations(d, &state))
            })
            .collect();
        let mut hours = Vec::with_capacity(rows.len());
        let mut violations = vec![];
        for (e, v) in rows {
            hours.push(e);
            violations.extend(v);
        }
        AnnualSeries { scal, hours, violations }
    }
}
