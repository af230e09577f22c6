//! Command-line front end. Exit codes: 0 success, 1 domain failure,
//! 2 I/O or usage error, 3 infeasible before any expansion.
//!
//! Scenario precedence: built-in defaults, then the scenario or sweep file,
//! then inline flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    self, check_monotonicity, emit_report, energy_account, find_bottlenecks, plan_energy, rule_bottlenecks,
    worst_case_hour, BindingReport, EnergyAccount, ReportFormats, SweepResult, SweepSpec, MILP_HOUR_GUARD,
};
use crate::fixtures::{synth_grid, FixtureKind, FixtureProfile};
use crate::formulation::{self, Case, Mode, PlanResult, PlanStatus, Scenario};
use crate::grid::{parse_grid, serialize_grid, validate_grid, Grid, GridError};
use crate::milp::SolverConfig;
use crate::oracle::{Bisection, RuleModel, BISECTION_TOL};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INFEASIBLE_AT_ZERO: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn domain(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "feedin", version, about = "PV hosting capacity under dynamic feed-in limits")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory for artifacts.
    #[arg(long, global = true, env = "FEEDIN_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
    /// Write CSV artifacts (all formats when none is chosen).
    #[arg(long, global = true)]
    pub csv: bool,
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true)]
    pub svg: bool,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a grid document and list its issues.
    Validate { grid: PathBuf },
    /// Maximum expansion factor for one scenario.
    Plan(PlanArgs),
    /// Evaluate every (FL, case, demand) cell and write the report.
    Sweep(SweepArgs),
    /// Rule-based dispatch over the whole series at a fixed expansion factor.
    Simulate(SimulateArgs),
    /// Re-render report artifacts from a saved sweep.json.
    Report { sweep: PathBuf },
    /// Write a synthetic study grid.
    Fixture(FixtureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    A,
    B,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Case {
        match c {
            CaseArg::A => Case::A,
            CaseArg::B => Case::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Snapshot,
    Annual,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Snapshot => Mode::Snapshot,
            ModeArg::Annual => Mode::Annual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Milp,
    Oracle,
    Both,
}

impl From<EngineArg> for analysis::Engine {
    fn from(e: EngineArg) -> analysis::Engine {
        match e {
            EngineArg::Milp => analysis::Engine::Milp,
            EngineArg::Oracle => analysis::Engine::Oracle,
            EngineArg::Both => analysis::Engine::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    pub grid: PathBuf,
    /// Scenario JSON file; inline flags override its values.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub fl: Option<f64>,
    #[arg(long, value_enum)]
    pub case: Option<CaseArg>,
    #[arg(long = "demand-mult")]
    pub demand_mult: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Comma-separated hour indices.
    #[arg(long, value_delimiter = ',')]
    pub hours: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long = "scal-max")]
    pub scal_max: Option<f64>,
    /// Wall-clock limit per MILP solve, seconds. Results may then depend on
    /// machine speed.
    #[arg(long = "time-limit")]
    pub time_limit: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> CliResult<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(s) = self.scal_max {
            cfg.scal_max = s;
        }
        cfg.time_limit_s = self.time_limit;
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub engine: EngineArg,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub grid: PathBuf,
    /// Sweep spec JSON file; inline flags override its values.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub fl: Option<Vec<f64>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub case: Option<Vec<CaseArg>>,
    #[arg(long = "demand-mult", value_delimiter = ',')]
    pub demand_mult: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long, value_delimiter = ',')]
    pub hours: Option<Vec<usize>>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Expansion factor applied to every candidate.
    #[arg(long)]
    pub scal: f64,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// rural_mv, urban_mv, hybrid_mv, lv or household.
    pub kind: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Series length; defaults to the kind's design length.
    #[arg(long)]
    pub hours: Option<usize>,
}

fn formats(cfg: &CliConfig) -> ReportFormats {
    if !(cfg.csv || cfg.json || cfg.svg) {
        ReportFormats::default()
    } else {
        ReportFormats {
            csv: cfg.csv,
            json: cfg.json,
            svg: cfg.svg,
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

fn load_grid(path: &Path) -> CliResult<Grid> {
    parse_grid(&read(path)?).map_err(|e| match e {
        GridError::Syntax { .. } | GridError::Unit { .. } => {
            CliError::usage(format!("{}: {e}", path.display()))
        }
        _ => CliError::domain(format!("{}: {e}", path.display())),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result serializes");
    s.push('\n');
    s
}

/// File values first, then inline flags; snapshot mode without pinned hours
/// falls back to the worst-case hour.
fn resolve_scenario(args: &ScenarioArgs, grid: &Grid) -> CliResult<Scenario> {
    let mut s = match &args.scenario {
        Some(p) => Scenario::parse(&read(p)?).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
        None => Scenario::default(),
    };
    if let Some(fl) = args.fl {
        s.fl = fl;
    }
    if let Some(c) = args.case {
        s.case = c.into();
    }
    if let Some(m) = args.demand_mult {
        s.demand_multiplier = m;
    }
    if let Some(m) = args.mode {
        s.mode = m.into();
    }
    if let Some(h) = &args.hours {
        s.hours = Some(h.clone());
    }
    if s.mode == Mode::Snapshot && s.hours.is_none() {
        s.hours = Some(vec![worst_case_hour(grid)]);
    }
    s.validate().map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(&h) = s.hours.iter().flatten().find(|&&h| h >= grid.hour_count) {
        return Err(CliError::usage(format!("hour {h} is outside the grid's {} hours", grid.hour_count)));
    }
    Ok(s)
}

pub fn cmd_validate(grid_path: &Path) -> CliResult<u8> {
    let text = read(grid_path)?;
    // Parse only the document structure here so every semantic issue is listed.
    let grid = match parse_grid(&text) {
        Ok(g) => g,
        Err(e @ (GridError::Syntax { .. } | GridError::Unit { .. })) => {
            return Err(CliError::usage(format!("{}: {e}", grid_path.display())))
        }
        Err(GridError::Invalid(issues)) => {
            for i in &issues {
                println!("{i}");
            }
            return Ok(EXIT_DOMAIN);
        }
        Err(e) => {
            println!("error: {e}");
            return Ok(EXIT_DOMAIN);
        }
    };
    let issues = validate_grid(&grid);
    for i in &issues {
        println!("{i}");
    }
    let errors = issues.iter().filter(|i| i.is_error()).count();
    println!(
        "{}: {} buses, {} lines, {} units, {} hours; {errors} error(s), {} warning(s)",
        grid_path.display(),
        grid.buses.len(),
        grid.lines.len(),
        grid.gens.len(),
        grid.hour_count,
        issues.len() - errors
    );
    Ok(if errors == 0 { EXIT_OK } else { EXIT_DOMAIN })
}

#[derive(Debug, Serialize)]
pub struct PlanOutput {
    pub schema_version: u32,
    pub engine: &'static str,
    pub scenario: Scenario,
    pub status: PlanStatus,
    pub scal_star: Option<f64>,
    pub added_capacity_mw: Option<f64>,
    pub milp_scal: Option<f64>,
    pub oracle_scal: Option<f64>,
    /// |MILP − oracle| when both engines ran.
    pub deviation: Option<f64>,
    pub energy: Option<EnergyAccount>,
    pub bottlenecks: Option<BindingReport>,
    pub plan: Option<PlanResult>,
}

fn plan_csv(plan: &PlanResult, grid: &Grid) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    w.write_record(["hour", "unit", "bus", "kind", "available_mw", "generation_mw", "curtailment_mw"])
        .expect("in-memory write");
    for hr in &plan.hours {
        for (g, u) in grid.gens.iter().enumerate() {
            w.write_record([
                hr.hour.to_string(),
                u.id.clone(),
                u.bus.clone(),
                u.kind.as_str().to_string(),
                hr.available[g].to_string(),
                hr.generation[g].to_string(),
                hr.curtailment[g].to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn oracle_plan(grid: &Grid, s: &Scenario, cfg: &SolverConfig) -> CliResult<(Option<f64>, Option<PlanResult>)> {
    let rm = RuleModel::new(grid, s).map_err(|e| CliError::domain(e.to_string()))?;
    match rm.max_scal(cfg.scal_max, BISECTION_TOL).map_err(|e| CliError::domain(e.to_string()))? {
        Bisection::InfeasibleAtZero(_) => Ok((None, None)),
        Bisection::Feasible(x) => Ok((Some(x), Some(rm.plan_at(x)))),
    }
}

pub fn cmd_plan(args: &PlanArgs, out: &Path, fmt: ReportFormats) -> CliResult<u8> {
    let grid = load_grid(&args.scenario.grid)?;
    let s = resolve_scenario(&args.scenario, &grid)?;
    let cfg = args.solver.config()?;
    let hours = s.hours_for(&grid).len();
    let mut engine = args.engine;
    if hours > MILP_HOUR_GUARD {
        match engine {
            EngineArg::Milp => {
                return Err(CliError::domain(format!(
                    "{hours} hours exceed the MILP limit of {MILP_HOUR_GUARD}; use --engine oracle"
                )))
            }
            EngineArg::Both => {
                log::warn!("{hours} hours exceed the MILP limit; running the oracle only");
                engine = EngineArg::Oracle;
            }
            EngineArg::Oracle => {}
        }
    }

    let (milp, oracle) = match engine {
        EngineArg::Milp => (Some(formulation::plan(&grid, &s, &cfg).map_err(|e| CliError::domain(e.to_string()))?), None),
        EngineArg::Oracle => (None, Some(oracle_plan(&grid, &s, &cfg)?)),
        EngineArg::Both => (
            Some(formulation::plan(&grid, &s, &cfg).map_err(|e| CliError::domain(e.to_string()))?),
            Some(oracle_plan(&grid, &s, &cfg)?),
        ),
    };
    let oracle_scal = oracle.as_ref().and_then(|o| o.0);
    let (status, plan) = match (milp, oracle) {
        (Some(p), _) => {
            let status = p.status;
            (status, p.has_values().then_some(p))
        }
        (None, Some((Some(_), p))) => (PlanStatus::Optimal, p),
        (None, _) => (PlanStatus::InfeasibleAtZero, None),
    };
    let milp_scal = match engine {
        EngineArg::Oracle => None,
        _ => plan.as_ref().map(|p| p.scal_star),
    };
    let energy = match &plan {
        Some(p) => Some(energy_account(&plan_energy(p, &grid).map_err(|e| CliError::domain(e.to_string()))?)
            .map_err(|e| CliError::domain(e.to_string()))?),
        None => None,
    };
    let bottlenecks = plan.as_ref().map(|p| match engine {
        EngineArg::Oracle => {
            let rm = RuleModel::new(&grid, &s).expect("scenario already accepted");
            rule_bottlenecks(&rm, &grid, p.scal_star)
        }
        _ => find_bottlenecks(p, &grid),
    });
    let result = PlanOutput {
        schema_version: analysis::SCHEMA_VERSION,
        engine: analysis::Engine::from(engine).as_str(),
        scenario: s.clone(),
        status,
        scal_star: plan.as_ref().map(|p| p.scal_star),
        added_capacity_mw: plan.as_ref().map(|p| p.added_capacity_mw),
        milp_scal,
        oracle_scal,
        deviation: match (milp_scal, oracle_scal) {
            (Some(a), Some(b)) if engine == EngineArg::Both => Some((a - b).abs()),
            _ => None,
        },
        energy,
        bottlenecks,
        plan,
    };

    let mut written = vec![];
    if fmt.json {
        written.push(write(&out.join("plan.json"), &to_json(&result))?);
    }
    if fmt.csv {
        if let Some(p) = &result.plan {
            written.push(write(&out.join("plan.csv"), &plan_csv(p, &grid))?);
        }
    }

    println!(
        "fl={} case={} demand_mult={} hours={} engine={}",
        s.fl,
        s.case.as_str(),
        s.demand_multiplier,
        hours,
        result.engine
    );
    println!("status: {}", serde_json::to_value(status).expect("status").as_str().unwrap_or("?"));
    if let (Some(x), Some(mw)) = (result.scal_star, result.added_capacity_mw) {
        println!("scal*: {x:.6}  added capacity: {mw:.6} MW");
    }
    if let Some(d) = result.deviation {
        println!("oracle scal*: {:.6}  deviation: {d:.2e}", oracle_scal.unwrap_or(f64::NAN));
    }
    if let Some(e) = &result.energy {
        println!(
            "energy: generated {:.6} MWh, curtailed {:.6} MWh of {:.6} MWh available",
            e.generated_mwh, e.curtailed_mwh, e.available_mwh
        );
    }
    if let Some(b) = &result.bottlenecks {
        let labels = b.labels();
        println!("bottlenecks: {}", if labels.is_empty() { "none".to_string() } else { labels.join(", ") });
    }
    for p in &written {
        println!("wrote {}", p.display());
    }

    Ok(match status {
        PlanStatus::Optimal => EXIT_OK,
        PlanStatus::InfeasibleAtZero => {
            eprintln!("grid violates its limits before any expansion");
            EXIT_INFEASIBLE_AT_ZERO
        }
        PlanStatus::Limit | PlanStatus::Infeasible | PlanStatus::Unbounded => EXIT_DOMAIN,
    })
}

fn resolve_sweep(args: &SweepArgs) -> CliResult<SweepSpec> {
    let mut spec = match &args.spec {
        Some(p) => serde_json::from_str::<SweepSpec>(&read(p)?)
            .map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
        None => SweepSpec::default(),
    };
    if let Some(v) = &args.fl {
        spec.fl_values = v.clone();
    }
    if let Some(v) = &args.case {
        spec.cases = v.iter().map(|&c| c.into()).collect();
    }
    if let Some(v) = &args.demand_mult {
        spec.demand_multipliers = v.clone();
    }
    if let Some(m) = args.mode {
        spec.mode = m.into();
    }
    if let Some(e) = args.engine {
        spec.engine = e.into();
    }
    if let Some(h) = &args.hours {
        spec.hours = Some(h.clone());
    }
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(spec)
}

fn print_sweep(sweep: &SweepResult) {
    if let Some(s) = &sweep.snapshot_hour {
        println!("snapshot hour {} ({})", s.hour, s.selection);
    }
    println!(
        "{:<5} {:<4} {:<5} {:<19} {:>12} {:>12} {:>9}  bottlenecks",
        "case", "fl", "mult", "status", "scal*", "added MW", "incr %"
    );
    let f = |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$}")).unwrap_or_else(|| "-".into());
    for c in &sweep.cells {
        let b = c.bottlenecks.as_ref().map(|b| b.labels().join(",")).unwrap_or_default();
        println!(
            "{:<5} {:<4} {:<5} {:<19} {:>12} {:>12} {:>9}  {}",
            c.case.as_str(),
            c.fl,
            c.demand_multiplier,
            c.status.as_str(),
            f(c.scal_star, 6),
            f(c.added_capacity_mw, 6),
            f(c.increase_pct, 1),
            if let Some(e) = &c.error { format!("error: {e}") } else { b }
        );
    }
}

pub fn cmd_sweep(args: &SweepArgs, out: &Path, fmt: ReportFormats) -> CliResult<u8> {
    let grid = load_grid(&args.grid)?;
    let spec = resolve_sweep(args)?;
    let cfg = args.solver.config()?;
    let sweep = analysis::run_sweep(&grid, &spec, &cfg).map_err(|e| match e {
        analysis::AnalysisError::Spec(_) => CliError::usage(e.to_string()),
        _ => CliError::domain(e.to_string()),
    })?;
    print_sweep(&sweep);
    let written = emit_report(&sweep, out, fmt).map_err(|e| CliError::usage(e.to_string()))?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    let mut code = EXIT_OK;
    let failed = sweep.failed_cells();
    if !failed.is_empty() {
        for c in &failed {
            eprintln!("cell {} did not complete: {}", c.label(), c.status.as_str());
        }
        code = EXIT_DOMAIN;
    }
    for v in check_monotonicity(&sweep) {
        eprintln!(
            "monotonicity violated ({}): {} has {} < {} at {}",
            v.rule, v.expected_higher, v.higher_scal, v.lower_scal, v.expected_lower
        );
        code = EXIT_DOMAIN;
    }
    Ok(code)
}

#[derive(Debug, Serialize)]
struct SimulationOutput {
    schema_version: u32,
    scenario: Scenario,
    scal: f64,
    account: EnergyAccount,
    violation_count: usize,
}

pub fn cmd_simulate(args: &SimulateArgs, out: &Path, fmt: ReportFormats) -> CliResult<u8> {
    let grid = load_grid(&args.scenario.grid)?;
    if grid.hour_count < 24 {
        return Err(CliError::domain(format!(
            "simulation needs a time series; the grid has {} hour(s)",
            grid.hour_count
        )));
    }
    if !(args.scal >= 0.0 && args.scal.is_finite()) {
        return Err(CliError::usage(format!("--scal must be finite and non-negative, got {}", args.scal)));
    }
    let mut s = resolve_scenario(&args.scenario, &grid)?;
    // A simulation covers the whole series unless hours are pinned inline.
    if args.scenario.hours.is_none() {
        s.mode = Mode::Annual;
        s.hours = None;
    }
    let rm = RuleModel::new(&grid, &s).map_err(|e| CliError::domain(e.to_string()))?;
    let series = rm.annual(args.scal);
    let account = energy_account(&series.hours).map_err(|e| CliError::domain(e.to_string()))?;

    let mut written = vec![];
    if fmt.csv {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(vec![]);
        w.write_record(["hour", "available_mwh", "generated_mwh", "curtailed_mwh", "imports_mwh", "exports_mwh"])
            .expect("in-memory write");
        for h in &series.hours {
            w.write_record([
                h.hour.to_string(),
                h.available_mwh.to_string(),
                h.generated_mwh.to_string(),
                h.curtailed_mwh.to_string(),
                h.imports_mwh.to_string(),
                h.exports_mwh.to_string(),
            ])
            .expect("in-memory write");
        }
        let text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        written.push(write(&out.join("simulate.csv"), &text)?);
    }
    if fmt.json {
        let result = SimulationOutput {
            schema_version: analysis::SCHEMA_VERSION,
            scenario: s.clone(),
            scal: args.scal,
            account,
            violation_count: series.violations.len(),
        };
        written.push(write(&out.join("simulate.json"), &to_json(&result))?);
    }

    println!(
        "fl={} case={} demand_mult={} scal={} hours={}",
        s.fl,
        s.case.as_str(),
        s.demand_multiplier,
        args.scal,
        series.hours.len()
    );
    println!("available  {:>16.6} MWh", account.available_mwh);
    println!("generated  {:>16.6} MWh", account.generated_mwh);
    println!("curtailed  {:>16.6} MWh  ({:.3}%)", account.curtailed_mwh, 100.0 * account.curtailed_share);
    println!(
        "check: generated + curtailed - available = {:.3e}",
        account.generated_mwh + account.curtailed_mwh - account.available_mwh
    );
    if !series.violations.is_empty() {
        println!("limit violations: {} element-hours", series.violations.len());
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(EXIT_OK)
}

pub fn cmd_report(path: &Path, out: &Path, fmt: ReportFormats) -> CliResult<u8> {
    let sweep: SweepResult = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if sweep.schema_version != analysis::SCHEMA_VERSION {
        return Err(CliError::usage(format!(
            "{}: schema version {} is not supported",
            path.display(),
            sweep.schema_version
        )));
    }
    for p in emit_report(&sweep, out, fmt).map_err(|e| CliError::usage(e.to_string()))? {
        println!("wrote {}", p.display());
    }
    Ok(EXIT_OK)
}

pub fn cmd_fixture(args: &FixtureArgs, out: &Path) -> CliResult<u8> {
    let kind: FixtureKind = args.kind.parse().map_err(|e: crate::fixtures::FixtureError| CliError::usage(e.to_string()))?;
    let mut profile = FixtureProfile::new(kind, args.seed);
    if let Some(h) = args.hours {
        profile = profile.with_hours(h);
    }
    let grid = synth_grid(&profile).map_err(|e| CliError::usage(e.to_string()))?;
    let path = write(&out.join(format!("{}.json", kind.as_str())), &serialize_grid(&grid))?;
    println!(
        "{}: {} buses, {} lines, {} units, {} hours, candidate base {:.6} MW",
        kind.as_str(),
        grid.buses.len(),
        grid.lines.len(),
        grid.gens.len(),
        grid.hour_count,
        grid.candidate_base_mw()
    );
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

/// Runs one invocation and returns the process exit code.
pub fn run(cfg: CliConfig) -> u8 {
    let level = match cfg.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let fmt = formats(&cfg);
    let outcome = match &cfg.command {
        Command::Validate { grid } => cmd_validate(grid),
        Command::Plan(a) => cmd_plan(a, &cfg.out, fmt),
        Command::Sweep(a) => cmd_sweep(a, &cfg.out, fmt),
        Command::Simulate(a) => cmd_simulate(a, &cfg.out, fmt),
        Command::Report { sweep } => cmd_report(sweep, &cfg.out, fmt),
        Command::Fixture(a) => cmd_fixture(a, &cfg.out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
