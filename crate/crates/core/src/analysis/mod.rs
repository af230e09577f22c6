//! Scenario sweeps over feed-in limit, curtailment case and demand level,
//! with energy accounts, bottleneck reports and report artifacts.

mod bottleneck;
mod energy;
mod report;

pub use bottleneck::{
    find_bottlenecks, natural_cmp, rule_bottlenecks, BindingElement, BindingReport, LINE_BINDING_FRACTION,
    VOLTAGE_BINDING_BAND,
};
pub use energy::{energy_account, plan_energy, EnergyAccount, CONSERVATION_TOL};
pub use report::{capacity_svg, emit_report, energy_svg, to_csv, to_json, ReportFormats, CSV_COLUMNS};

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{plan, Case, Costs, FormulationError, Mode, PlanStatus, Scenario};
use crate::grid::Grid;
use crate::milp::SolverConfig;
use crate::oracle::{Bisection, RuleModel, BISECTION_TOL};

pub const SCHEMA_VERSION: u32 = 1;
/// The MILP engine refuses series longer than this; use the oracle.
pub const MILP_HOUR_GUARD: usize = 168;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error("inconsistent series: {0}")]
    Series(String),
    #[error("grid has no candidate units to scale")]
    NoCandidates,
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Milp,
    Oracle,
    Both,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Milp => "milp",
            Engine::Oracle => "oracle",
            Engine::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub fl_values: Vec<f64>,
    pub cases: Vec<Case>,
    pub demand_multipliers: Vec<f64>,
    pub mode: Mode,
    pub engine: Engine,
    /// Pinned hours; in snapshot mode `None` selects the worst-case hour.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hours: Option<Vec<usize>>,
    pub costs: Costs,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            fl_values: vec![1.0, 0.9, 0.8, 0.7],
            cases: vec![Case::A, Case::B],
            demand_multipliers: vec![1.0, 1.1, 1.2],
            mode: Mode::Snapshot,
            engine: Engine::Both,
            hours: None,
            costs: Costs::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.fl_values.is_empty() || self.cases.is_empty() || self.demand_multipliers.is_empty() {
            return Err(AnalysisError::Spec("every axis needs at least one value".into()));
        }
        for &fl in &self.fl_values {
            for &m in &self.demand_multipliers {
                let mut s = Scenario::new(fl, Case::A).with_demand_multiplier(m);
                s.costs = self.costs;
                s.hours = self.hours.clone();
                s.validate().map_err(|e| AnalysisError::Spec(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.fl_values.len() * self.cases.len() * self.demand_multipliers.len()
    }
}

/// Hour maximizing total available generation (candidates at base size)
/// minus demand. A stand-in for a utility's worst-case construction.
pub fn worst_case_hour(grid: &Grid) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for h in 0..grid.hour_count {
        let avail: f64 = grid.gens.iter().map(|u| u.available(h)).sum();
        let v = avail - grid.total_demand(h);
        if v > best.1 {
            best = (h, v);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Optimal,
    InfeasibleAtZero,
    /// Node or time limit reached; values are the best incumbent, if any.
    Limit,
    Infeasible,
    Unbounded,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Optimal => "optimal",
            CellStatus::InfeasibleAtZero => "infeasible_at_zero",
            CellStatus::Limit => "limit",
            CellStatus::Infeasible => "infeasible",
            CellStatus::Unbounded => "unbounded",
            CellStatus::Failed => "failed",
        }
    }

    /// Whether the cell produced a definitive answer.
    pub fn is_complete(self) -> bool {
        matches!(self, CellStatus::Optimal | CellStatus::InfeasibleAtZero)
    }
}

impl From<PlanStatus> for CellStatus {
    fn from(s: PlanStatus) -> Self {
        match s {
            PlanStatus::Optimal => CellStatus::Optimal,
            PlanStatus::InfeasibleAtZero => CellStatus::InfeasibleAtZero,
            PlanStatus::Limit => CellStatus::Limit,
            PlanStatus::Infeasible => CellStatus::Infeasible,
            PlanStatus::Unbounded => CellStatus::Unbounded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub fl: f64,
    pub case: Case,
    pub demand_multiplier: f64,
    pub status: CellStatus,
    pub scal_star: Option<f64>,
    pub added_capacity_mw: Option<f64>,
    /// Added capacity relative to the FL = 1, case a cell of the same
    /// demand level, in percent.
    pub increase_pct: Option<f64>,
    pub milp_scal: Option<f64>,
    pub oracle_scal: Option<f64>,
    /// |MILP − oracle| when both engines ran.
    pub deviation: Option<f64>,
    pub slack_usage: Option<f64>,
    pub energy: Option<EnergyAccount>,
    pub bottlenecks: Option<BindingReport>,
    pub error: Option<String>,
}

impl CellResult {
    fn new(fl: f64, case: Case, demand_multiplier: f64) -> Self {
        CellResult {
            fl,
            case,
            demand_multiplier,
            status: CellStatus::Failed,
            scal_star: None,
            added_capacity_mw: None,
            increase_pct: None,
            milp_scal: None,
            oracle_scal: None,
            deviation: None,
            slack_usage: None,
            energy: None,
            bottlenecks: None,
            error: None,
        }
    }

    pub fn label(&self) -> String {
        format!("fl={} case={} mult={}", self.fl, self.case.as_str(), self.demand_multiplier)
    }
}

/// Cell order: case, then FL descending, then demand multiplier ascending.
fn cell_order(a: &(f64, Case, f64), b: &(f64, Case, f64)) -> Ordering {
    a.1.cmp(&b.1)
        .then_with(|| b.0.total_cmp(&a.0))
        .then_with(|| a.2.total_cmp(&b.2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHour {
    pub hour: usize,
    pub selection: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub buses: usize,
    pub lines: usize,
    pub hours: usize,
    pub candidates: usize,
    pub candidate_base_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub spec: SweepSpec,
    pub grid: GridSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_hour: Option<SnapshotHour>,
    pub cells: Vec<CellResult>,
}

impl SweepResult {
    pub fn failed_cells(&self) -> Vec<&CellResult> {
        self.cells.iter().filter(|c| !c.status.is_complete()).collect()
    }

    pub fn cell(&self, fl: f64, case: Case, demand_multiplier: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.fl == fl && c.case == case && c.demand_multiplier == demand_multiplier)
    }
}

fn oracle_cell(grid: &Grid, scenario: &Scenario, cfg: &SolverConfig, cell: &mut CellResult) -> Result<(), AnalysisError> {
    let rm = RuleModel::new(grid, scenario)?;
    match rm.max_scal(cfg.scal_max, BISECTION_TOL).map_err(|e| AnalysisError::Spec(e.to_string()))? {
        Bisection::InfeasibleAtZero(_) => {
            cell.status = CellStatus::InfeasibleAtZero;
        }
        Bisection::Feasible(s) => {
            cell.status = CellStatus::Optimal;
            cell.oracle_scal = Some(s);
            cell.scal_star = Some(s);
            cell.added_capacity_mw = Some(s * grid.candidate_base_mw());
            cell.slack_usage = Some(0.0);
            cell.energy = Some(energy_account(&rm.annual(s).hours)?);
            cell.bottlenecks = Some(rule_bottlenecks(&rm, grid, s));
        }
    }
    Ok(())
}

fn milp_cell(grid: &Grid, scenario: &Scenario, cfg: &SolverConfig, cell: &mut CellResult) -> Result<(), AnalysisError> {
    let hours = scenario.hours_for(grid).len();
    if hours > MILP_HOUR_GUARD {
        return Err(AnalysisError::Spec(format!(
            "{hours} hours exceed the MILP limit of {MILP_HOUR_GUARD}; use the oracle engine"
        )));
    }
    let p = plan(grid, scenario, cfg)?;
    cell.status = p.status.into();
    if p.has_values() {
        cell.milp_scal = Some(p.scal_star);
        cell.scal_star = Some(p.scal_star);
        cell.added_capacity_mw = Some(p.added_capacity_mw);
        cell.slack_usage = Some(p.slack_usage);
        cell.energy = Some(energy_account(&plan_energy(&p, grid)?)?);
        cell.bottlenecks = Some(find_bottlenecks(&p, grid));
    }
    Ok(())
}

fn run_cell(grid: &Grid, spec: &SweepSpec, hours: &Option<Vec<usize>>, key: (f64, Case, f64), cfg: &SolverConfig) -> CellResult {
    let (fl, case, m) = key;
    let mut cell = CellResult::new(fl, case, m);
    let scenario = Scenario {
        fl,
        case,
        demand_multiplier: m,
        hours: hours.clone(),
        costs: spec.costs,
        mode: spec.mode,
    };
    let outcome = match spec.engine {
        Engine::Oracle => oracle_cell(grid, &scenario, cfg, &mut cell),
        Engine::Milp => milp_cell(grid, &scenario, cfg, &mut cell),
        // Long series exceed the MILP guard; the oracle answers alone.
        Engine::Both if scenario.hours_for(grid).len() > MILP_HOUR_GUARD => oracle_cell(grid, &scenario, cfg, &mut cell),
        Engine::Both => {
            let mut oracle = CellResult::new(fl, case, m);
            oracle_cell(grid, &scenario, cfg, &mut oracle).and_then(|_| {
                milp_cell(grid, &scenario, cfg, &mut cell)?;
                cell.oracle_scal = oracle.oracle_scal;
                if let (Some(a), Some(b)) = (cell.milp_scal, oracle.oracle_scal) {
                    cell.deviation = Some((a - b).abs());
                }
                if cell.status != oracle.status && oracle.status == CellStatus::InfeasibleAtZero {
                    cell.error = Some("oracle: infeasible at zero; the MILP optimum relies on expansion relieving a limit".into());
                }
                Ok(())
            })
        }
    };
    if let Err(e) = outcome {
        cell.status = CellStatus::Failed;
        cell.error = Some(e.to_string());
    }
    cell
}

/// Evaluates every (FL, case, demand multiplier) cell. Cells run in
/// parallel; failures are stored in the cell and never abort the sweep.
pub fn run_sweep(grid: &Grid, spec: &SweepSpec, cfg: &SolverConfig) -> Result<SweepResult, AnalysisError> {
    spec.validate()?;
    cfg.validate().map_err(|e| AnalysisError::Spec(e.to_string()))?;
    if grid.candidates().next().is_none() {
        return Err(AnalysisError::NoCandidates);
    }
    let snapshot_hour = match (spec.mode, &spec.hours) {
        (Mode::Snapshot, None) => Some(SnapshotHour {
            hour: worst_case_hour(grid),
            selection: "heuristic: maximum available generation minus demand".into(),
        }),
        _ => None,
    };
    let hours = snapshot_hour.as_ref().map(|s| vec![s.hour]).or_else(|| spec.hours.clone());
    let mut keys = vec![];
    for &case in &spec.cases {
        for &fl in &spec.fl_values {
            for &m in &spec.demand_multipliers {
                keys.push((fl, case, m));
            }
        }
    }
    keys.sort_by(cell_order);
    let mut cells: Vec<CellResult> = keys.into_par_iter().map(|k| run_cell(grid, spec, &hours, k, cfg)).collect();

    let reference: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.fl == 1.0 && c.case == Case::A)
        .filter_map(|c| Some((c.demand_multiplier, c.added_capacity_mw?)))
        .collect();
    for c in &mut cells {
        let base = reference.iter().find(|r| r.0 == c.demand_multiplier).map(|r| r.1);
        if let (Some(base), Some(v)) = (base, c.added_capacity_mw) {
            if base > 0.0 {
                c.increase_pct = Some(100.0 * (v / base - 1.0));
            }
        }
    }
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        grid: GridSummary {
            buses: grid.buses.len(),
            lines: grid.lines.len(),
            hours: grid.hour_count,
            candidates: grid.candidates().count(),
            candidate_base_mw: grid.candidate_base_mw(),
        },
        snapshot_hour,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub rule: String,
    /// The cell expected to admit at least as much.
    pub expected_higher: String,
    pub expected_lower: String,
    pub higher_scal: f64,
    pub lower_scal: f64,
}

/// Slack for comparing two `scal*` values from bisection or the MILP.
pub fn monotonicity_tol(a: f64, b: f64) -> f64 {
    BISECTION_TOL + 1e-6 * (1.0 + a.abs().max(b.abs()))
}

/// Checks the cell-wise orderings: `scal*` nonincreasing in FL,
/// nondecreasing in demand, and case b at least case a. Cells that are
/// infeasible before expansion count as −∞; failed cells are skipped.
pub fn check_monotonicity(sweep: &SweepResult) -> Vec<MonotonicityViolation> {
    let value = |c: &CellResult| match c.status {
        CellStatus::Optimal => c.scal_star,
        CellStatus::InfeasibleAtZero => Some(f64::NEG_INFINITY),
        _ => None,
    };
    let mut out = vec![];
    let mut check = |rule: &str, hi: &CellResult, lo: &CellResult| {
        let (Some(h), Some(l)) = (value(hi), value(lo)) else { return };
        let ok = if h.is_finite() && l.is_finite() {
            h >= l - monotonicity_tol(h, l)
        } else {
            h >= l
        };
        if !ok {
            out.push(MonotonicityViolation {
                rule: rule.into(),
                expected_higher: hi.label(),
                expected_lower: lo.label(),
                higher_scal: h,
                lower_scal: l,
            });
        }
    };
    let cells = &sweep.cells;
    for a in cells {
        for b in cells {
            if a.case == b.case && a.demand_multiplier == b.demand_multiplier && a.fl < b.fl {
                check("scal* nonincreasing in FL", a, b);
            }
            if a.case == b.case && a.fl == b.fl && a.demand_multiplier > b.demand_multiplier {
                check("scal* nondecreasing in demand", a, b);
            }
            if a.case == Case::B && b.case == Case::A && a.fl == b.fl && a.demand_multiplier == b.demand_multiplier {
                check("case b at least case a", a, b);
            }
        }
    }
    out
}
