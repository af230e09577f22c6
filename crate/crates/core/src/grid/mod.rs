//! Grid data model: buses, radial lines, generation units and their series.
//!
//! All powers are stored in MW (MVAr for reactive quantities). Line
//! impedances are per-unit on the grid's `base_mva`/`base_kv`.

mod candidates;
mod document;
mod validate;

pub use candidates::{add_candidates, scale_demand, CandidateMode, CandidatePolicy, EligibleNodes};
pub use document::{parse_grid, serialize_grid};
pub use validate::{validate_grid, IssueCode, Severity, ValidationIssue};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown bus '{bus}' referenced by {element}")]
    UnknownBus { element: String, bus: String },
    #[error("duplicate {kind} id '{id}'")]
    DuplicateId { kind: &'static str, id: String },
    #[error("non-radial topology: {0}")]
    NonRadial(String),
    #[error("expected exactly one slack bus, found {0}")]
    SlackCount(usize),
    #[error("series length mismatch for {element}: expected {expected}, found {found}")]
    SeriesLength {
        element: String,
        expected: usize,
        found: usize,
    },
    #[error("unsupported unit '{unit}' for {field}")]
    Unit { field: String, unit: String },
    #[error("grid is invalid: {}", summarize(.0))]
    Invalid(Vec<ValidationIssue>),
    #[error("mean_of_scalable requires at least one scalable PV unit")]
    NoScalableUnits,
    #[error("candidate profile unavailable: {0}")]
    MissingProfile(String),
    #[error("demand factor must be positive, got {0}")]
    NonPositiveFactor(f64),
}

fn summarize(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    PvExistingScalable,
    PvExistingFixed,
    PvCandidate,
    Wind,
    RunOfRiver,
    Fossil,
}

impl GenKind {
    pub fn is_pv(self) -> bool {
        matches!(
            self,
            GenKind::PvExistingScalable | GenKind::PvExistingFixed | GenKind::PvCandidate
        )
    }

    pub fn is_existing_pv(self) -> bool {
        matches!(self, GenKind::PvExistingScalable | GenKind::PvExistingFixed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GenKind::PvExistingScalable => "pv_existing_scalable",
            GenKind::PvExistingFixed => "pv_existing_fixed",
            GenKind::PvCandidate => "pv_candidate",
            GenKind::Wind => "wind",
            GenKind::RunOfRiver => "run_of_river",
            GenKind::Fossil => "fossil",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    /// Active demand per hour (MW).
    pub demand_p: Vec<f64>,
    /// Reactive demand per hour (MVAr).
    pub demand_q: Vec<f64>,
    pub vmin: f64,
    pub vmax: f64,
    pub is_slack: bool,
}

impl Bus {
    pub fn has_demand(&self) -> bool {
        self.demand_p.iter().any(|&d| d > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from: String,
    pub to: String,
    pub r: f64,
    pub x: f64,
    /// Thermal limit on active power (MW).
    pub s_max: f64,
    pub length_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenUnit {
    pub id: String,
    pub bus: String,
    pub kind: GenKind,
    /// Installed capacity (MW). For candidates this is the base capacity
    /// that the system-wide scaling factor multiplies.
    pub p_max: f64,
    /// Capacity factor per hour, in [0, 1].
    pub profile: Vec<f64>,
}

impl GenUnit {
    /// Available power at `hour` for a unit whose capacity is `p_max`.
    pub fn available(&self, hour: usize) -> f64 {
        self.p_max * self.profile[hour]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub base_mva: f64,
    pub base_kv: f64,
    pub hour_duration_h: f64,
    pub hour_count: usize,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub gens: Vec<GenUnit>,
}

impl Grid {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.is_slack)
    }

    pub fn total_demand(&self, hour: usize) -> f64 {
        self.buses.iter().map(|b| b.demand_p[hour]).sum()
    }

    pub fn candidates(&self) -> impl Iterator<Item = &GenUnit> {
        self.gens.iter().filter(|g| g.kind == GenKind::PvCandidate)
    }

    /// Sum of candidate base capacities (MW); added capacity is this times `scal`.
    pub fn candidate_base_mw(&self) -> f64 {
        self.candidates().map(|g| g.p_max).sum()
    }

    pub fn capacity_by_kind(&self, kind: GenKind) -> (usize, f64) {
        self.gens
            .iter()
            .filter(|g| g.kind == kind)
            .fold((0, 0.0), |(n, s), g| (n + 1, s + g.p_max))
    }

    pub fn total_length_km(&self) -> f64 {
        self.lines.iter().map(|l| l.length_km).sum()
    }

    /// Resolved indices for a grid whose references are valid.
    pub fn index(&self) -> Result<GridIndex, GridError> {
        GridIndex::new(self)
    }
}

/// Position lookups for a grid with valid bus references.
#[derive(Debug, Clone)]
pub struct GridIndex {
    pub slack: usize,
    pub gen_bus: Vec<usize>,
    pub gens_at_bus: Vec<Vec<usize>>,
    /// (from, to) bus positions per line.
    pub line_ends: Vec<(usize, usize)>,
}

impl GridIndex {
    fn new(grid: &Grid) -> Result<Self, GridError> {
        let lookup: std::collections::HashMap<&str, usize> = grid
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect();
        let slacks: Vec<usize> = (0..grid.buses.len())
            .filter(|&i| grid.buses[i].is_slack)
            .collect();
        if slacks.len() != 1 {
            return Err(GridError::SlackCount(slacks.len()));
        }
        let resolve = |element: String, id: &str| {
            lookup.get(id).copied().ok_or_else(|| GridError::UnknownBus {
                element,
                bus: id.to_string(),
            })
        };
        let mut gen_bus = Vec::with_capacity(grid.gens.len());
        let mut gens_at_bus = vec![Vec::new(); grid.buses.len()];
        for (gi, g) in grid.gens.iter().enumerate() {
            let b = resolve(format!("generator '{}'", g.id), &g.bus)?;
            gen_bus.push(b);
            gens_at_bus[b].push(gi);
        }
        let mut line_ends = Vec::with_capacity(grid.lines.len());
        for (li, l) in grid.lines.iter().enumerate() {
            let f = resolve(format!("line {li}"), &l.from)?;
            let t = resolve(format!("line {li}"), &l.to)?;
            line_ends.push((f, t));
        }
        Ok(GridIndex {
            slack: slacks[0],
            gen_bus,
            gens_at_bus,
            line_ends,
        })
    }
}

#[cfg(test)]
pub(crate) mod test_grids {
    use super::*;

    pub fn bus(id: &str, demand: &[f64], slack: bool) -> Bus {
        Bus {
            id: id.to_string(),
            demand_p: demand.to_vec(),
            demand_q: vec![0.0; demand.len()],
            vmin: 0.9,
            vmax: 1.1,
            is_slack: slack,
        }
    }

    pub fn line(from: &str, to: &str, r: f64, s_max: f64) -> Line {
        Line {
            from: from.to_string(),
            to: to.to_string(),
            r,
            x: 0.0,
            s_max,
            length_km: 1.0,
        }
    }

    pub fn unit(id: &str, bus: &str, kind: GenKind, p_max: f64, profile: &[f64]) -> GenUnit {
        GenUnit {
            id: id.to_string(),
            bus: bus.to_string(),
            kind,
            p_max,
            profile: profile.to_vec(),
        }
    }

    pub fn two_bus() -> Grid {
        Grid {
            base_mva: 1.0,
            base_kv: 20.0,
            hour_duration_h: 1.0,
            hour_count: 1,
            buses: vec![bus("0", &[0.0], true), bus("1", &[0.5], false)],
            lines: vec![line("0", "1", 0.01, 5.0)],
            gens: vec![],
        }
    }
}
