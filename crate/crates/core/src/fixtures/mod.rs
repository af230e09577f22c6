//! Deterministic synthetic study grids.
//!
//! Four radial grids reproduce the structural statistics of a rural, an
//! urban and a hybrid 20 kV feeder area and of a 0.4 kV neighbourhood:
//! node count, total length, demand and generator mix. The measured data
//! behind such grids is not public, so everything below the statistics
//! (topology, placement, series) is drawn from a seeded generator.
//!
//! Cable constants per km, converted to per-unit on the grid base:
//!
//! | conductor                      | r (Ω) | x (Ω) | rating             |
//! |--------------------------------|-------|-------|--------------------|
//! | NA2XS2Y 1x150 RM/25 12/20 kV   | 0.206 | 0.122 | 319 A = 11.05 MVA  |
//! | Al/St 95/15 overhead, 20 kV    | 0.306 | 0.357 | 350 A = 12.12 MVA  |
//! | NAYY 4x150 SE 0.6/1 kV         | 0.206 | 0.080 | 270 A = 0.187 MVA  |
//!
//! Ratings are used directly as active-power limits in MW.
//!
//! Medium-voltage fixtures are single worst-case hours (full sun, full
//! output of every other unit). Generator buses carry no demand, which keeps
//! curtailing every PV unit at least as permissive as curtailing only new
//! units. Candidates are placed as in the study protocol: an expansion unit
//! sized like the existing one at every scalable PV bus, and a unit of mean
//! scalable size at every demand bus without PV.
//!
//! Two fixtures are calibrated by scaling line impedance after synthesis:
//! the rural grid so that unlimited feed-in admits [`RURAL_ADDED_MW`] of new
//! PV before the upper voltage bound binds, and the hybrid grid so that its
//! existing units already push the worst bus to the voltage cap.

mod profiles;

pub use profiles::{
    clear_sky, household_demand, sample_hours, synth_profiles, Profiles, DESIGN_DAY, DESIGN_HOUR, HOURS_PER_YEAR,
};

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{Case, Scenario};
use crate::grid::{
    add_candidates, Bus, CandidateMode, CandidatePolicy, EligibleNodes, GenKind, GenUnit, Grid, GridError, Line,
};
use crate::oracle::{max_scal_bisection, Bisection, OracleError};

/// New PV admitted by the rural fixture at FL = 1, case a.
pub const RURAL_ADDED_MW: f64 = 1.05;
/// Margin (p.u.²) left below the voltage cap on the hybrid fixture.
pub const HYBRID_MARGIN: f64 = 1e-10;
const POWER_FACTOR_TAN: f64 = 0.3287;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture kind '{0}'")]
    UnknownKind(String),
    #[error("{0} hours cannot be sampled from a year of 8760")]
    Hours(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl From<OracleError> for FixtureError {
    fn from(e: OracleError) -> Self {
        FixtureError::Calibration(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    RuralMv,
    UrbanMv,
    HybridMv,
    Lv,
    Household,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 5] = [
        FixtureKind::RuralMv,
        FixtureKind::UrbanMv,
        FixtureKind::HybridMv,
        FixtureKind::Lv,
        FixtureKind::Household,
    ];

    /// The four study grids, without the single-household example.
    pub const STUDY: [FixtureKind; 4] = [
        FixtureKind::RuralMv,
        FixtureKind::UrbanMv,
        FixtureKind::HybridMv,
        FixtureKind::Lv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureKind::RuralMv => "rural_mv",
            FixtureKind::UrbanMv => "urban_mv",
            FixtureKind::HybridMv => "hybrid_mv",
            FixtureKind::Lv => "lv",
            FixtureKind::Household => "household",
        }
    }

    pub fn is_mv(self) -> bool {
        matches!(self, FixtureKind::RuralMv | FixtureKind::UrbanMv | FixtureKind::HybridMv)
    }

    pub fn default_hours(self) -> usize {
        match self {
            FixtureKind::Lv => HOURS_PER_YEAR,
            FixtureKind::Household => 24,
            _ => 1,
        }
    }
}

impl FromStr for FixtureKind {
    type Err = FixtureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FixtureError::UnknownKind(s.to_string()))
    }
}

/// Unit count and total capacity (kW or kWp).
pub type Fleet = (usize, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetStats {
    pub base_mva: f64,
    pub base_kv: f64,
    pub length_km: f64,
    pub nodes: usize,
    /// Worst-case hour demand (MW) for medium voltage, annual energy (MWh)
    /// for low voltage.
    pub demand: f64,
    pub run_of_river: Fleet,
    pub wind: Fleet,
    pub pv_scalable: Fleet,
    pub pv_fixed: Fleet,
    pub fossil: Fleet,
    pub vmin: f64,
    pub vmax: f64,
}

impl TargetStats {
    pub fn for_kind(kind: FixtureKind) -> TargetStats {
        let mv = |base_mva, length_km, nodes, demand, ror, wind, pv_scalable, pv_fixed, fossil| TargetStats {
            base_mva,
            base_kv: 20.0,
            length_km,
            nodes,
            demand,
            run_of_river: ror,
            wind,
            pv_scalable,
            pv_fixed,
            fossil,
            vmin: 0.95,
            vmax: 1.03,
        };
        match kind {
            FixtureKind::RuralMv => mv(25.0, 21.0, 158, 1.20, (1, 4.4), (3, 320.0), (53, 6838.0), (4, 1432.0), (0, 0.0)),
            FixtureKind::UrbanMv => mv(40.0, 4.0, 110, 2.00, (2, 208.0), (0, 0.0), (27, 2028.0), (2, 2622.0), (1, 300.0)),
            FixtureKind::HybridMv => mv(40.0, 78.0, 267, 2.51, (1, 80.0), (0, 0.0), (74, 8264.0), (1, 300.0), (0, 0.0)),
            FixtureKind::Lv => TargetStats {
                base_mva: 0.25,
                base_kv: 0.4,
                length_km: 6.9,
                nodes: 180,
                demand: 483.72,
                run_of_river: (0, 0.0),
                wind: (0, 0.0),
                pv_scalable: (0, 0.0),
                pv_fixed: (39, 352.0),
                fossil: (0, 0.0),
                vmin: 0.9,
                vmax: 1.1,
            },
            FixtureKind::Household => TargetStats {
                base_mva: 0.25,
                base_kv: 0.4,
                length_km: 0.03,
                nodes: 2,
                demand: 0.0014,
                run_of_river: (0, 0.0),
                wind: (0, 0.0),
                pv_scalable: (0, 0.0),
                pv_fixed: (0, 0.0),
                fossil: (0, 0.0),
                vmin: 0.9,
                vmax: 1.1,
            },
        }
    }

    /// Mismatches against `stats`: exact node count, 10% elsewhere.
    pub fn check(&self, stats: &GridStats) -> Vec<String> {
        let mut out = vec![];
        if stats.nodes != self.nodes {
            out.push(format!("nodes {} != {}", stats.nodes, self.nodes));
        }
        let near = |name: &str, got: f64, want: f64| {
            ((got - want).abs() > 0.1 * want.abs()).then(|| format!("{name} {got} not within 10% of {want}"))
        };
        out.extend(near("length_km", stats.length_km, self.length_km));
        if let Some(d) = stats.demand {
            out.extend(near("demand", d, self.demand));
        }
        for (name, got, want) in [
            ("run_of_river", stats.run_of_river, self.run_of_river),
            ("wind", stats.wind, self.wind),
            ("pv_scalable", stats.pv_scalable, self.pv_scalable),
            ("pv_fixed", stats.pv_fixed, self.pv_fixed),
            ("fossil", stats.fossil, self.fossil),
        ] {
            if got.0 != want.0 {
                out.push(format!("{name} count {} != {}", got.0, want.0));
            }
            out.extend(near(name, got.1, want.1));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub nodes: usize,
    pub length_km: f64,
    /// Same convention as [`TargetStats::demand`]; `None` when the series
    /// does not contain the worst-case hour.
    pub demand: Option<f64>,
    pub run_of_river: Fleet,
    pub wind: Fleet,
    pub pv_scalable: Fleet,
    pub pv_fixed: Fleet,
    pub fossil: Fleet,
    pub candidates: Fleet,
}

pub fn grid_stats(grid: &Grid, kind: FixtureKind) -> GridStats {
    let fleet = |k| {
        let (n, mw) = grid.capacity_by_kind(k);
        (n, mw * 1e3)
    };
    let demand = if kind == FixtureKind::Lv {
        Some((0..grid.hour_count).map(|h| grid.total_demand(h)).sum::<f64>() * grid.hour_duration_h)
    } else {
        design_position(grid.hour_count).map(|h| grid.total_demand(h))
    };
    GridStats {
        nodes: grid.buses.len(),
        length_km: grid.total_length_km(),
        demand,
        run_of_river: fleet(GenKind::RunOfRiver),
        wind: fleet(GenKind::Wind),
        pv_scalable: fleet(GenKind::PvExistingScalable),
        pv_fixed: fleet(GenKind::PvExistingFixed),
        fossil: fleet(GenKind::Fossil),
        candidates: fleet(GenKind::PvCandidate),
    }
}

/// Index of the worst-case hour within a sampled series, if sampled.
pub fn design_position(hours: usize) -> Option<usize> {
    let design = DESIGN_DAY * 24 + DESIGN_HOUR;
    sample_hours(hours).ok()?.iter().position(|&t| t == design)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureProfile {
    pub kind: FixtureKind,
    pub seed: u64,
    pub hours: usize,
    pub target: TargetStats,
}

impl FixtureProfile {
    pub fn new(kind: FixtureKind, seed: u64) -> Self {
        FixtureProfile {
            kind,
            seed,
            hours: kind.default_hours(),
            target: TargetStats::for_kind(kind),
        }
    }

    pub fn with_hours(mut self, hours: usize) -> Self {
        self.hours = hours;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Conductor {
    r_ohm_km: f64,
    x_ohm_km: f64,
    rating_mva: f64,
}

const MV_CABLE: Conductor = Conductor {
    r_ohm_km: 0.206,
    x_ohm_km: 0.122,
    rating_mva: 11.05,
};
const MV_OVERHEAD: Conductor = Conductor {
    r_ohm_km: 0.306,
    x_ohm_km: 0.357,
    rating_mva: 12.12,
};
const LV_CABLE: Conductor = Conductor {
    r_ohm_km: 0.206,
    x_ohm_km: 0.080,
    rating_mva: 0.187,
};

struct Layout {
    feeders: usize,
    /// Probability that a new node extends a feeder end rather than
    /// branching off an arbitrary node.
    extend: f64,
    /// Probability that a line is overhead (medium voltage only).
    overhead: f64,
}

fn layout(kind: FixtureKind) -> Layout {
    match kind {
        FixtureKind::RuralMv => Layout {
            feeders: 3,
            extend: 0.75,
            overhead: 1.0,
        },
        FixtureKind::UrbanMv => Layout {
            feeders: 4,
            extend: 0.6,
            overhead: 0.0,
        },
        FixtureKind::HybridMv => Layout {
            feeders: 4,
            extend: 0.75,
            overhead: 0.5,
        },
        FixtureKind::Lv => Layout {
            feeders: 5,
            extend: 0.45,
            overhead: 0.0,
        },
        FixtureKind::Household => Layout {
            feeders: 1,
            extend: 1.0,
            overhead: 0.0,
        },
    }
}

/// Random radial tree on buses `0..n` rooted at 0: (parent, child) pairs.
fn random_tree(n: usize, layout: &Layout, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let feeders = layout.feeders.min(n - 1);
    let mut tips: Vec<usize> = vec![];
    let mut edges = Vec::with_capacity(n - 1);
    for k in 1..n {
        let parent = if k <= feeders {
            tips.push(k);
            0
        } else if rng.gen_bool(layout.extend) {
            let f = rng.gen_range(0..tips.len());
            std::mem::replace(&mut tips[f], k)
        } else {
            rng.gen_range(1..k)
        };
        edges.push((parent, k));
    }
    edges
}

/// `n` positive weights summing to `total`.
fn split(total: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v * total / s).collect()
}

/// Multiplies r and x of every line by `k`.
pub fn scale_impedance(grid: &Grid, k: f64) -> Grid {
    let mut out = grid.clone();
    for l in &mut out.lines {
        l.r *= k;
        l.x *= k;
    }
    out
}

fn bus(id: usize, hours: usize, vmin: f64, vmax: f64, slack: bool) -> Bus {
    Bus {
        id: id.to_string(),
        demand_p: vec![0.0; hours],
        demand_q: vec![0.0; hours],
        vmin,
        vmax,
        is_slack: slack,
    }
}

fn set_demand(b: &mut Bus, series: Vec<f64>) {
    b.demand_q = series.iter().map(|d| d * POWER_FACTOR_TAN).collect();
    b.demand_p = series;
}

/// Topology, lines and buses without units or demand.
fn skeleton(p: &FixtureProfile, rng: &mut ChaCha8Rng) -> Grid {
    let t = &p.target;
    let lay = layout(p.kind);
    let n = t.nodes;
    let z_base = t.base_kv * t.base_kv / t.base_mva;
    let edges = random_tree(n, &lay, rng);
    let lengths = split(t.length_km, edges.len(), rng);
    let lines = edges
        .iter()
        .zip(lengths)
        .map(|(&(from, to), km)| {
            let c = if !p.kind.is_mv() {
                LV_CABLE
            } else if rng.gen_bool(lay.overhead) {
                MV_OVERHEAD
            } else {
                MV_CABLE
            };
            Line {
                from: from.to_string(),
                to: to.to_string(),
                r: c.r_ohm_km * km / z_base,
                x: c.x_ohm_km * km / z_base,
                s_max: c.rating_mva,
                length_km: km,
            }
        })
        .collect();
    Grid {
        base_mva: t.base_mva,
        base_kv: t.base_kv,
        hour_duration_h: 1.0,
        hour_count: p.hours,
        buses: (0..n).map(|i| bus(i, p.hours, t.vmin, t.vmax, i == 0)).collect(),
        lines,
        gens: vec![],
    }
}

fn push_fleet(
    grid: &mut Grid,
    kind: GenKind,
    prefix: &str,
    fleet: Fleet,
    buses: &[usize],
    profile: &[f64],
    rng: &mut ChaCha8Rng,
) {
    let caps = split(fleet.1 * 1e-3, fleet.0, rng);
    for (k, (&b, cap)) in buses.iter().zip(caps).enumerate() {
        grid.gens.push(GenUnit {
            id: format!("{prefix}{}", k + 1),
            bus: b.to_string(),
            kind,
            p_max: cap,
            profile: profile.to_vec(),
        });
    }
}

fn synth_mv(p: &FixtureProfile) -> Result<Grid, FixtureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let t = &p.target;
    let prof = synth_profiles(p.hours, p.seed)?;
    let mut grid = skeleton(p, &mut rng);
    let fleets = [
        (GenKind::PvExistingScalable, "pvs", t.pv_scalable),
        (GenKind::PvExistingFixed, "pvf", t.pv_fixed),
        (GenKind::Wind, "wind", t.wind),
        (GenKind::RunOfRiver, "ror", t.run_of_river),
        (GenKind::Fossil, "fossil", t.fossil),
    ];
    let n_units: usize = fleets.iter().map(|f| f.2 .0).sum();
    let mut nodes: Vec<usize> = (1..t.nodes).collect();
    nodes.shuffle(&mut rng);
    let (gen_nodes, demand_nodes) = nodes.split_at(n_units);

    let design = design_position(p.hours);
    let wind_cf: Vec<f64> = (0..p.hours)
        .map(|h| if Some(h) == design { 1.0 } else { rng.gen_range(0.0..1.0) })
        .collect();
    let mut start = 0;
    for (kind, prefix, fleet) in fleets {
        let cf = match kind {
            GenKind::PvExistingScalable | GenKind::PvExistingFixed => prof.pv_cf.clone(),
            GenKind::Wind => wind_cf.clone(),
            _ => vec![1.0; p.hours],
        };
        let at = &gen_nodes[start..start + fleet.0];
        push_fleet(&mut grid, kind, prefix, fleet, at, &cf, &mut rng);
        start += fleet.0;
    }

    // Demand is given at the worst-case hour; other hours follow the shape.
    let shape_ref = design.map_or(1.0, |d| prof.demand[d]);
    for (&b, d) in demand_nodes.iter().zip(split(t.demand, demand_nodes.len(), &mut rng)) {
        set_demand(&mut grid.buses[b], prof.demand.iter().map(|s| d * s / shape_ref).collect());
    }

    let expansions: Vec<(String, f64)> = grid
        .gens
        .iter()
        .filter(|g| g.kind == GenKind::PvExistingScalable)
        .map(|g| (g.bus.clone(), g.p_max))
        .collect();
    let (grid, _) = add_candidates(
        &grid,
        &CandidatePolicy {
            mode: CandidateMode::PerNodeList(expansions),
            eligible: EligibleNodes::ScalablePv,
            reference_profile: None,
        },
    )?;
    let (grid, _) = add_candidates(
        &grid,
        &CandidatePolicy {
            mode: CandidateMode::MeanOfScalable,
            eligible: EligibleNodes::DemandWithoutPv,
            reference_profile: None,
        },
    )?;
    Ok(grid)
}

/// The 0.4 kV grid. Every non-slack bus is a household; 39 of them own PV.
///
/// The stated 0.25 MVA transformer is used as the per-unit base even though
/// it is small for roughly 480 MWh of yearly demand plus the admitted PV.
/// The transformer itself is not modelled as a limit: the slack bus is its
/// low-voltage terminal.
fn synth_lv(p: &FixtureProfile) -> Result<Grid, FixtureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let t = &p.target;
    let prof = synth_profiles(p.hours, p.seed)?;
    let mut grid = skeleton(p, &mut rng);
    let mut households: Vec<usize> = (1..t.nodes).collect();
    let energy = split(t.demand, households.len(), &mut rng);
    for (&b, e) in households.iter().zip(energy) {
        let series = household_demand(&prof, e, &mut rng);
        set_demand(&mut grid.buses[b], series);
    }
    households.shuffle(&mut rng);
    push_fleet(
        &mut grid,
        GenKind::PvExistingFixed,
        "pv",
        t.pv_fixed,
        &households[..t.pv_fixed.0],
        &prof.pv_cf,
        &mut rng,
    );
    let (grid, _) = add_candidates(
        &grid,
        &CandidatePolicy {
            mode: CandidateMode::FixedCapacity { kwp: 1.0 },
            eligible: EligibleNodes::DemandWithoutPv,
            reference_profile: Some(prof.pv_cf.clone()),
        },
    )?;
    Ok(grid)
}

fn added_mw(grid: &Grid, scenario: &Scenario) -> Result<Option<f64>, FixtureError> {
    Ok(match max_scal_bisection(grid, scenario, 1000.0, 1e-7)? {
        Bisection::Feasible(s) => Some(s * grid.candidate_base_mw()),
        Bisection::InfeasibleAtZero(_) => None,
    })
}

/// Impedance scale at which unlimited feed-in admits `target_mw`.
fn calibrate_added(grid: &Grid, target_mw: f64) -> Result<Grid, FixtureError> {
    let s = Scenario::new(1.0, Case::A).with_hours(vec![design_position(grid.hour_count).unwrap_or(0)]);
    let (mut lo, mut hi) = (1e-3f64, 1e2f64);
    let admits = |k: f64| -> Result<bool, FixtureError> {
        Ok(added_mw(&scale_impedance(grid, k), &s)?.is_some_and(|mw| mw >= target_mw))
    };
    if !admits(lo)? || admits(hi)? {
        return Err(FixtureError::Calibration(format!("{target_mw} MW not bracketed")));
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if admits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(scale_impedance(grid, lo))
}

/// Scales impedance so the worst bus at the worst-case hour sits
/// [`HYBRID_MARGIN`] below its upper voltage bound with no new PV.
fn calibrate_preload(grid: &Grid) -> Result<Grid, FixtureError> {
    use crate::network::LinearNetworkModel;
    use crate::oracle::rule_injections;

    let h = design_position(grid.hour_count).unwrap_or(0);
    let s = Scenario::new(1.0, Case::A);
    let inj = rule_injections(grid, &s, 0.0, h).map_err(|e| FixtureError::Calibration(e.to_string()))?;
    let inj_q: Vec<f64> = grid.buses.iter().map(|b| -b.demand_q[h]).collect();
    let model = LinearNetworkModel::build(grid).map_err(|e| FixtureError::Calibration(e.to_string()))?;
    let state = model.evaluate(&inj, &inj_q).map_err(|e| FixtureError::Calibration(e.to_string()))?;
    // v² - 1 is linear in the impedance scale; take the tightest bus.
    let mut k = f64::INFINITY;
    for (j, b) in grid.buses.iter().enumerate() {
        let rise = state.v_sq[j] - model.slack_v_sq();
        if rise > 0.0 {
            k = k.min((b.vmax * b.vmax - HYBRID_MARGIN - model.slack_v_sq()) / rise);
        }
    }
    if !k.is_finite() {
        return Err(FixtureError::Calibration("no voltage rise to calibrate".into()));
    }
    Ok(scale_impedance(grid, k))
}

/// Builds the planning grid for a profile, candidates included.
pub fn synth_grid(profile: &FixtureProfile) -> Result<Grid, FixtureError> {
    let grid = match profile.kind {
        FixtureKind::Household => return Ok(household_grid()),
        FixtureKind::Lv => synth_lv(profile)?,
        _ => synth_mv(profile)?,
    };
    match profile.kind {
        FixtureKind::RuralMv => calibrate_added(&grid, RURAL_ADDED_MW),
        FixtureKind::HybridMv => calibrate_preload(&grid),
        _ => Ok(grid),
    }
}

/// Study fixture with its default hours and seed 1.
pub fn fixture(kind: FixtureKind) -> Result<Grid, FixtureError> {
    synth_grid(&FixtureProfile::new(kind, 1))
}

/// Demand at the household's peak PV hour (MW).
pub const EXAMPLE_DEMAND_MW: f64 = 0.0014;
pub const EXAMPLE_PV_MW: f64 = 0.007;

/// Single household on a design day: a 7 kWp candidate with CF = 1 and
/// 1.4 kW of demand at [`DESIGN_HOUR`]. Line limits are far from binding.
pub fn household_grid() -> Grid {
    let prof = synth_profiles(24, 1).expect("24 hours are always sampled");
    let t = TargetStats::for_kind(FixtureKind::Household);
    let z_base = t.base_kv * t.base_kv / t.base_mva;
    let mut house = bus(1, 24, t.vmin, t.vmax, false);
    let peak = prof.demand[DESIGN_HOUR];
    house.demand_p = prof.demand.iter().map(|d| EXAMPLE_DEMAND_MW * d / peak).collect();
    house.demand_q = vec![0.0; 24];
    Grid {
        base_mva: t.base_mva,
        base_kv: t.base_kv,
        hour_duration_h: 1.0,
        hour_count: 24,
        buses: vec![bus(0, 24, t.vmin, t.vmax, true), house],
        lines: vec![Line {
            from: "0".into(),
            to: "1".into(),
            r: LV_CABLE.r_ohm_km * t.length_km / z_base,
            x: LV_CABLE.x_ohm_km * t.length_km / z_base,
            s_max: LV_CABLE.rating_mva,
            length_km: t.length_km,
        }],
        gens: vec![GenUnit {
            id: "pv".into(),
            bus: "1".into(),
            kind: GenKind::PvCandidate,
            p_max: EXAMPLE_PV_MW,
            profile: prof.pv_cf,
        }],
    }
}

/// Size limits for [`random_small_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGridSpec {
    pub max_buses: usize,
    pub max_hours: usize,
}

impl Default for RandomGridSpec {
    fn default() -> Self {
        RandomGridSpec {
            max_buses: 10,
            max_hours: 3,
        }
    }
}

/// Small seeded radial grid with a mix of existing PV, wind and candidates,
/// for solver cross-checks. At least one candidate has sun in some hour.
pub fn random_small_grid(seed: u64, spec: RandomGridSpec) -> Grid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=spec.max_buses.max(2));
    let hours = rng.gen_range(1..=spec.max_hours.max(1));
    let lay = Layout {
        feeders: rng.gen_range(1..=2),
        extend: 0.6,
        overhead: 0.0,
    };
    let edges = random_tree(n, &lay, &mut rng);
    let mut buses: Vec<Bus> = (0..n).map(|i| bus(i, hours, 0.95, 1.05, i == 0)).collect();
    let lines = edges
        .iter()
        .map(|&(from, to)| {
            let r = rng.gen_range(0.005..0.03);
            Line {
                from: from.to_string(),
                to: to.to_string(),
                r,
                x: rng.gen_range(0.0..r),
                s_max: rng.gen_range(0.8..3.0),
                length_km: 1.0,
            }
        })
        .collect();
    let sun: Vec<f64> = (0..hours).map(|_| rng.gen_range(0.3..=1.0)).collect();
    let mut gens = vec![];
    for (i, b) in buses.iter_mut().enumerate().skip(1) {
        if rng.gen_bool(0.7) {
            let d: Vec<f64> = (0..hours).map(|_| rng.gen_range(0.0..0.4)).collect();
            b.demand_q = d.iter().map(|v| 0.2 * v).collect();
            b.demand_p = d;
        }
        let add = |gens: &mut Vec<GenUnit>, id: String, kind, p_max, profile: Vec<f64>| {
            gens.push(GenUnit {
                id,
                bus: i.to_string(),
                kind,
                p_max,
                profile,
            })
        };
        if rng.gen_bool(0.3) {
            let kind = if rng.gen_bool(0.5) {
                GenKind::PvExistingScalable
            } else {
                GenKind::PvExistingFixed
            };
            add(&mut gens, format!("pv{i}"), kind, rng.gen_range(0.1..0.8), sun.clone());
        }
        if rng.gen_bool(0.15) {
            let cf = (0..hours).map(|_| rng.gen_range(0.0..=1.0)).collect();
            add(&mut gens, format!("wind{i}"), GenKind::Wind, rng.gen_range(0.1..0.5), cf);
        }
        if rng.gen_bool(0.6) || (i == n - 1 && !gens.iter().any(|g| g.kind == GenKind::PvCandidate)) {
            add(&mut gens, format!("cand{i}"), GenKind::PvCandidate, rng.gen_range(0.1..1.0), sun.clone());
        }
    }
    Grid {
        base_mva: 1.0,
        base_kv: 20.0,
        hour_duration_h: 1.0,
        hour_count: hours,
        buses,
        lines,
        gens,
    }
}
