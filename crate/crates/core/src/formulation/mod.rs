//! The expansion-planning model with dynamic feed-in limitation.
//!
//! One uniform multiplier `scal` scales every candidate unit. At each
//! node-hour the eligible units may only feed `FL` times their installed
//! capacity on top of the local residual demand; a binary per node-hour
//! switches between "produce everything" and "produce exactly the cap".

mod scenario;

pub use scenario::{Case, Costs, Mode, Scenario, ScenarioError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GenKind, Grid, GridIndex};
use crate::milp::{compute_big_m, BigMContext, MILPSolution, MILProblem, MilpStatus, ModelError, Sense, SolverConfig};
use crate::network::{LinearNetworkModel, NetworkError};

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("hour {hour} outside the grid's {count} hours")]
    HourOutOfRange { hour: usize, count: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("solution decode mismatch: {0}")]
    Decode(String),
}

pub fn is_eligible(kind: GenKind, case: Case) -> bool {
    match case {
        Case::A => kind == GenKind::PvCandidate,
        Case::B => kind.is_pv(),
    }
}

/// Demand left after non-eligible generation at the bus (MW, clamped at zero).
pub fn residual_demand(grid: &Grid, scenario: &Scenario, hour: usize, bus: usize) -> f64 {
    let id = &grid.buses[bus].id;
    let fixed: f64 = grid
        .gens
        .iter()
        .filter(|g| &g.bus == id && !is_eligible(g.kind, scenario.case))
        .map(|g| g.available(hour))
        .sum();
    (scenario.demand_multiplier * grid.buses[bus].demand_p[hour] - fixed).max(0.0)
}

/// Closed-form dynamic feed-in limitation at one node-hour: `(produced, curtailed)`.
pub fn curtailment_rule(avail_eligible: f64, cap_eligible: f64, residual: f64, fl: f64) -> (f64, f64) {
    let curtailed = (avail_eligible - fl * cap_eligible - residual).max(0.0);
    (avail_eligible - curtailed, curtailed)
}

/// Eligible aggregate at one node-hour, affine in `scal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeTerms {
    /// Available eligible power: `a0 + a1·scal` (MW).
    pub a0: f64,
    pub a1: f64,
    /// Installed eligible capacity: `c0 + c1·scal` (MW).
    pub c0: f64,
    pub c1: f64,
    pub residual: f64,
}

impl NodeTerms {
    pub fn avail(&self, scal: f64) -> f64 {
        self.a0 + self.a1 * scal
    }

    pub fn cap(&self, scal: f64) -> f64 {
        self.c0 + self.c1 * scal
    }

    pub fn has_capacity(&self) -> bool {
        self.c0 > 0.0 || self.c1 > 0.0
    }
}

/// Per-bus eligible terms for one hour.
pub fn node_terms(grid: &Grid, index: &GridIndex, scenario: &Scenario, hour: usize) -> Vec<NodeTerms> {
    let mut terms = vec![
        NodeTerms {
            a0: 0.0,
            a1: 0.0,
            c0: 0.0,
            c1: 0.0,
            residual: 0.0,
        };
        grid.buses.len()
    ];
    for (g, unit) in grid.gens.iter().enumerate() {
        if !is_eligible(unit.kind, scenario.case) {
            continue;
        }
        let t = &mut terms[index.gen_bus[g]];
        if unit.kind == GenKind::PvCandidate {
            t.a1 += unit.available(hour);
            t.c1 += unit.p_max;
        } else {
            t.a0 += unit.available(hour);
            t.c0 += unit.p_max;
        }
    }
    for (b, t) in terms.iter_mut().enumerate() {
        t.residual = residual_demand(grid, scenario, hour, b);
    }
    terms
}

/// Variable indices for one modelled hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourVars {
    pub hour: usize,
    pub p_imp: usize,
    pub p_exp: usize,
    pub q_imp: usize,
    pub q_exp: usize,
    /// Per generator.
    pub p: Vec<usize>,
    pub sp: Vec<usize>,
    /// Per bus.
    pub pns: Vec<usize>,
    pub qns: Vec<usize>,
    pub eps: Vec<usize>,
    pub eqs: Vec<usize>,
    pub alpha: Vec<Option<usize>>,
    pub terms: Vec<NodeTerms>,
    /// Row index per line and per bus, with the constant removed from the row.
    pub thermal_rows: Vec<(usize, f64)>,
    pub voltage_rows: Vec<Option<(usize, f64)>>,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub mip: MILProblem,
    pub scal: usize,
    pub hours: Vec<HourVars>,
    pub scenario: Scenario,
    pub eligible: Vec<bool>,
    pub model: LinearNetworkModel,
}

/// Assembles the planning MILP for the scenario's hours.
pub fn build_problem(grid: &Grid, scenario: &Scenario, cfg: &SolverConfig) -> Result<ProblemInstance, FormulationError> {
    scenario.validate()?;
    cfg.validate().map_err(FormulationError::Config)?;
    let index = grid.index()?;
    let model = LinearNetworkModel::build(grid)?;
    let hours = scenario.hours_for(grid);
    for &h in &hours {
        if h >= grid.hour_count {
            return Err(FormulationError::HourOutOfRange {
                hour: h,
                count: grid.hour_count,
            });
        }
    }
    let eligible: Vec<bool> = grid.gens.iter().map(|g| is_eligible(g.kind, scenario.case)).collect();
    let n = grid.buses.len();
    let dh = grid.hour_duration_h;
    let c = &scenario.costs;
    let mult = scenario.demand_multiplier;
    let eps = cfg.epsilon;
    let fl = scenario.fl;

    let mut lp = crate::milp::LinearProgram::new();
    let mut binaries = vec![];
    let scal = lp.add_var("scal", 0.0, cfg.scal_max, 0.0);
    let mut hour_vars = Vec::with_capacity(hours.len());

    for &h in &hours {
        let terms = node_terms(grid, &index, scenario, h);
        let p_imp = lp.add_var(format!("p_imp[{h}]"), 0.0, f64::INFINITY, dh * c.c_imp);
        let p_exp = lp.add_var(format!("p_exp[{h}]"), 0.0, f64::INFINITY, -dh * c.c_exp);
        let q_imp = lp.add_var(format!("q_imp[{h}]"), 0.0, f64::INFINITY, dh * c.c_imp);
        let q_exp = lp.add_var(format!("q_exp[{h}]"), 0.0, f64::INFINITY, -dh * c.c_exp);

        let mut p = Vec::with_capacity(grid.gens.len());
        let mut sp = Vec::with_capacity(grid.gens.len());
        for (g, unit) in grid.gens.iter().enumerate() {
            let avail = unit.available(h);
            if eligible[g] {
                p.push(lp.add_var(format!("p[{h},{}]", unit.id), 0.0, f64::INFINITY, 0.0));
                sp.push(lp.add_var(format!("sp[{h},{}]", unit.id), 0.0, f64::INFINITY, 0.0));
            } else {
                p.push(lp.add_var(format!("p[{h},{}]", unit.id), avail, avail, 0.0));
                sp.push(lp.add_var(format!("sp[{h},{}]", unit.id), 0.0, 0.0, 0.0));
            }
        }
        let mut pns = Vec::with_capacity(n);
        let mut qns = Vec::with_capacity(n);
        let mut epsv = Vec::with_capacity(n);
        let mut eqs = Vec::with_capacity(n);
        for b in &grid.buses {
            let d = mult * b.demand_p[h];
            let dq = mult * b.demand_q[h];
            pns.push(lp.add_var(format!("pns[{h},{}]", b.id), 0.0, d.max(0.0), dh * c.c_pns_qns));
            qns.push(lp.add_var(format!("qns[{h},{}]", b.id), 0.0, dq.max(0.0), dh * c.c_pns_qns));
            epsv.push(lp.add_var(format!("eps[{h},{}]", b.id), 0.0, f64::INFINITY, dh * c.c_eps_eqs));
            eqs.push(lp.add_var(format!("eqs[{h},{}]", b.id), 0.0, f64::INFINITY, dh * c.c_eps_eqs));
        }
        let mut alpha = vec![None; n];
        for i in 0..n {
            let t = &terms[i];
            if t.has_capacity() && (t.a0 > 0.0 || t.a1 > 0.0) {
                let a = lp.add_var(format!("alpha[{h},{}]", grid.buses[i].id), 0.0, 1.0, 0.0);
                binaries.push(a);
                alpha[i] = Some(a);
            }
        }

        // Availability split (generation + curtailment = available).
        for (g, unit) in grid.gens.iter().enumerate() {
            if !eligible[g] {
                continue;
            }
            let avail = unit.available(h);
            let name = format!("avail[{h},{}]", unit.id);
            if unit.kind == GenKind::PvCandidate {
                lp.add_row(name, &[(p[g], 1.0), (sp[g], 1.0), (scal, -avail)], Sense::Eq, 0.0);
            } else {
                lp.add_row(name, &[(p[g], 1.0), (sp[g], 1.0)], Sense::Eq, avail);
            }
        }

        // Feed-in limitation per eligible node.
        for i in 0..n {
            let id = &grid.buses[i].id;
            let t = terms[i];
            let elig: Vec<usize> = index.gens_at_bus[i].iter().copied().filter(|&g| eligible[g]).collect();
            let Some(a) = alpha[i] else {
                for &g in &elig {
                    lp.set_bounds(sp[g], 0.0, 0.0);
                }
                continue;
            };
            let m = compute_big_m(
                &BigMContext {
                    avail: (t.a0, t.a1),
                    cap: (t.c0, t.c1),
                    residual: t.residual,
                    fl,
                },
                cfg,
            );
            let r = t.residual;
            lp.add_row(
                format!("trigger[{h},{id}]"),
                &[(scal, t.a1 - fl * t.c1), (a, -(m + eps))],
                Sense::Le,
                r - t.a0 + fl * t.c0 - eps,
            );
            let mut sum_p: Vec<(usize, f64)> = elig.iter().map(|&g| (p[g], 1.0)).collect();
            sum_p.push((scal, -fl * t.c1));
            let mut upper = sum_p.clone();
            upper.push((a, m));
            lp.add_row(format!("cap_hi[{h},{id}]"), &upper, Sense::Le, m + fl * t.c0 + r);
            let mut lower = sum_p.clone();
            lower.push((a, -m));
            lp.add_row(format!("cap_lo[{h},{id}]"), &lower, Sense::Ge, -m + fl * t.c0 + r);
            let mut curt: Vec<(usize, f64)> = elig.iter().map(|&g| (sp[g], 1.0)).collect();
            curt.push((a, -m));
            lp.add_row(format!("curtail[{h},{id}]"), &curt, Sense::Le, 0.0);
            if cfg.bound_cuts {
                let mut floor: Vec<(usize, f64)> = elig.iter().map(|&g| (p[g], 1.0)).collect();
                floor.push((scal, -t.a1.min(fl * t.c1)));
                lp.add_row(format!("floor[{h},{id}]"), &floor, Sense::Ge, t.a0.min(fl * t.c0));
                lp.add_row(format!("ceiling[{h},{id}]"), &sum_p, Sense::Le, fl * t.c0 + r);
            }
        }

        // Net injection per bus as (terms, constant).
        let injection = |i: usize| -> (Vec<(usize, f64)>, f64, Vec<(usize, f64)>, f64) {
            let mut ap: Vec<(usize, f64)> = index.gens_at_bus[i].iter().map(|&g| (p[g], 1.0)).collect();
            ap.push((pns[i], 1.0));
            ap.push((epsv[i], -1.0));
            let aq = vec![(qns[i], 1.0), (eqs[i], -1.0)];
            let b = &grid.buses[i];
            (ap, -mult * b.demand_p[h], aq, -mult * b.demand_q[h])
        };
        let inj: Vec<_> = (0..n).map(injection).collect();

        let mut thermal_rows = Vec::with_capacity(grid.lines.len());
        for (l, line) in grid.lines.iter().enumerate() {
            let mut coeffs = vec![];
            let mut constant = 0.0;
            for &k in &model.downstream[l] {
                coeffs.extend_from_slice(&inj[k].0);
                constant += inj[k].1;
            }
            let row = lp.add_range(
                format!("thermal[{h},{}-{}]", line.from, line.to),
                &coeffs,
                -line.s_max - constant,
                line.s_max - constant,
            );
            thermal_rows.push((row, constant));
        }

        let mut voltage_rows = vec![None; n];
        for j in 0..n {
            if j == model.topology.slack {
                continue;
            }
            let (vp, vq) = model.voltage_row(j);
            let mut coeffs = vec![];
            let mut constant = model.slack_v_sq();
            for k in 0..n {
                if vp[k] != 0.0 {
                    coeffs.extend(inj[k].0.iter().map(|&(v, a)| (v, a * vp[k])));
                    constant += vp[k] * inj[k].1;
                }
                if vq[k] != 0.0 {
                    coeffs.extend(inj[k].2.iter().map(|&(v, a)| (v, a * vq[k])));
                    constant += vq[k] * inj[k].3;
                }
            }
            let b = &grid.buses[j];
            let row = lp.add_range(
                format!("voltage[{h},{}]", b.id),
                &coeffs,
                b.vmin * b.vmin - constant,
                b.vmax * b.vmax - constant,
            );
            voltage_rows[j] = Some((row, constant));
        }

        // Slack exchange closes the balance.
        let mut bal_p = vec![(p_imp, 1.0), (p_exp, -1.0)];
        let mut bal_q = vec![(q_imp, 1.0), (q_exp, -1.0)];
        let (mut dp, mut dq) = (0.0, 0.0);
        for k in &inj {
            bal_p.extend_from_slice(&k.0);
            bal_q.extend_from_slice(&k.2);
            dp -= k.1;
            dq -= k.3;
        }
        lp.add_row(format!("balance_p[{h}]"), &bal_p, Sense::Eq, dp);
        lp.add_row(format!("balance_q[{h}]"), &bal_q, Sense::Eq, dq);

        hour_vars.push(HourVars {
            hour: h,
            p_imp,
            p_exp,
            q_imp,
            q_exp,
            p,
            sp,
            pns,
            qns,
            eps: epsv,
            eqs,
            alpha,
            terms,
            thermal_rows,
            voltage_rows,
        });
    }

    Ok(ProblemInstance {
        mip: MILProblem::new(lp, binaries)?,
        scal,
        hours: hour_vars,
        scenario: scenario.clone(),
        eligible,
        model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
    /// No feasible point even without expansion.
    InfeasibleAtZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourResult {
    pub hour: usize,
    /// Per generator (MW).
    pub available: Vec<f64>,
    pub generation: Vec<f64>,
    pub curtailment: Vec<f64>,
    pub imports_mw: f64,
    pub exports_mw: f64,
    pub imports_mvar: f64,
    pub exports_mvar: f64,
    /// Per bus (MW, MVAr).
    pub injection_p: Vec<f64>,
    pub injection_q: Vec<f64>,
    pub flow_p: Vec<f64>,
    pub flow_q: Vec<f64>,
    pub v_sq: Vec<f64>,
    /// Per bus; `None` where no indicator exists.
    pub alpha: Vec<Option<bool>>,
    pub pns: Vec<f64>,
    pub qns: Vec<f64>,
    pub eps: Vec<f64>,
    pub eqs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub scal_star: f64,
    pub added_capacity_mw: f64,
    pub objective: f64,
    /// Largest value of any penalized slack variable.
    pub slack_usage: f64,
    pub hour_duration_h: f64,
    pub hours: Vec<HourResult>,
    pub nodes: usize,
    pub gap: f64,
}

impl PlanResult {
    pub fn empty(status: PlanStatus, hour_duration_h: f64) -> Self {
        PlanResult {
            status,
            scal_star: f64::NAN,
            added_capacity_mw: f64::NAN,
            objective: f64::NAN,
            slack_usage: f64::NAN,
            hour_duration_h,
            hours: vec![],
            nodes: 0,
            gap: f64::NAN,
        }
    }

    pub fn has_values(&self) -> bool {
        !self.hours.is_empty()
    }
}

/// Decodes a solver result and cross-checks flows and voltages against the
/// network model evaluated on the decoded injections.
pub fn extract_solution(inst: &ProblemInstance, sol: &MILPSolution, grid: &Grid) -> Result<PlanResult, FormulationError> {
    let status = match sol.status {
        MilpStatus::Optimal => PlanStatus::Optimal,
        MilpStatus::Limit if sol.has_incumbent() => PlanStatus::Limit,
        MilpStatus::Limit => return Ok(PlanResult::empty(PlanStatus::Limit, grid.hour_duration_h)),
        MilpStatus::Infeasible => return Ok(PlanResult::empty(PlanStatus::Infeasible, grid.hour_duration_h)),
        MilpStatus::Unbounded => return Ok(PlanResult::empty(PlanStatus::Unbounded, grid.hour_duration_h)),
    };
    let x = &sol.x;
    let scal = x[inst.scal];
    let n = grid.buses.len();
    let mult = inst.scenario.demand_multiplier;
    let mut slack_usage: f64 = 0.0;
    let mut hours = Vec::with_capacity(inst.hours.len());
    for hv in &inst.hours {
        let h = hv.hour;
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
        let generation: Vec<f64> = hv.p.iter().map(|&v| x[v]).collect();
        let curtailment: Vec<f64> = hv.sp.iter().map(|&v| x[v]).collect();
        let pick = |vars: &[usize]| vars.iter().map(|&v| x[v]).collect::<Vec<f64>>();
        let (pns, qns, eps, eqs) = (pick(&hv.pns), pick(&hv.qns), pick(&hv.eps), pick(&hv.eqs));
        for v in pns.iter().chain(&qns).chain(&eps).chain(&eqs) {
            slack_usage = slack_usage.max(*v);
        }
        let mut inj_p = vec![0.0; n];
        let mut inj_q = vec![0.0; n];
        for (i, b) in grid.buses.iter().enumerate() {
            inj_p[i] = pns[i] - eps[i] - mult * b.demand_p[h];
            inj_q[i] = qns[i] - eqs[i] - mult * b.demand_q[h];
        }
        for (g, u) in grid.gens.iter().enumerate() {
            let b = grid.bus_index(&u.bus).expect("validated grid");
            inj_p[b] += generation[g];
        }
        let state = inst.model.evaluate(&inj_p, &inj_q)?;
        let lp = &inst.mip.lp;
        for (l, &(row, constant)) in hv.thermal_rows.iter().enumerate() {
            let from_row = lp.rows[row].activity(x) + constant;
            if (from_row - state.flow_p[l]).abs() > 1e-6 {
                return Err(FormulationError::Decode(format!(
                    "line {l} hour {h}: row flow {from_row} vs model {}",
                    state.flow_p[l]
                )));
            }
        }
        for (j, vr) in hv.voltage_rows.iter().enumerate() {
            if let Some((row, constant)) = vr {
                let from_row = lp.rows[*row].activity(x) + constant;
                if (from_row - state.v_sq[j]).abs() > 1e-6 {
                    return Err(FormulationError::Decode(format!(
                        "bus {j} hour {h}: row voltage {from_row} vs model {}",
                        state.v_sq[j]
                    )));
                }
            }
        }
        let alpha = hv.alpha.iter().map(|a| a.map(|v| x[v] > 0.5)).collect();
        hours.push(HourResult {
            hour: h,
            available,
            generation,
            curtailment,
            imports_mw: x[hv.p_imp],
            exports_mw: x[hv.p_exp],
            imports_mvar: x[hv.q_imp],
            exports_mvar: x[hv.q_exp],
            injection_p: inj_p,
            injection_q: inj_q,
            flow_p: state.flow_p,
            flow_q: state.flow_q,
            v_sq: state.v_sq,
            alpha,
            pns,
            qns,
            eps,
            eqs,
        });
    }
    Ok(PlanResult {
        status,
        scal_star: scal,
        added_capacity_mw: grid.candidate_base_mw() * scal,
        objective: sol.objective,
        slack_usage,
        hour_duration_h: grid.hour_duration_h,
        hours,
        nodes: sol.nodes,
        gap: sol.gap,
    })
}

/// Slack above this (MW or MVAr) means the limits cannot be met.
pub const SLACK_TOL: f64 = 1e-6;

/// Builds, solves and decodes in one step.
///
/// Penalized slack is never cheaper than not expanding, so an optimum that
/// uses it means the grid violates its limits before any new PV; such plans
/// are returned with [`PlanStatus::InfeasibleAtZero`] and their values kept.
pub fn plan(grid: &Grid, scenario: &Scenario, cfg: &SolverConfig) -> Result<PlanResult, FormulationError> {
    let inst = build_problem(grid, scenario, cfg)?;
    let sol = crate::milp::solve_milp(&inst.mip, cfg);
    let mut out = extract_solution(&inst, &sol, grid)?;
    if out.has_values() && out.slack_usage > SLACK_TOL {
        out.status = PlanStatus::InfeasibleAtZero;
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
