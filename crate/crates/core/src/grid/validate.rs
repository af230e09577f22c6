use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueCode {
    NoHours,
    NonPositiveBase,
    DuplicateBusId,
    DuplicateGeneratorId,
    UnknownBus,
    SlackCount,
    SeriesLength,
    NonRadial,
    DegenerateVoltageBand,
    NegativeDemand,
    NonFinite,
    NegativeImpedance,
    ZeroImpedance,
    NonPositiveThermalLimit,
    NegativeCapacity,
    ProfileOutOfRange,
    NoEligibleNodes,
}

impl IssueCode {
    pub fn describe(self) -> &'static str {
        match self {
            IssueCode::NoHours => "no hours in series",
            IssueCode::NonPositiveBase => "non-positive base quantity",
            IssueCode::DuplicateBusId => "duplicate bus id",
            IssueCode::DuplicateGeneratorId => "duplicate generator id",
            IssueCode::UnknownBus => "unknown bus reference",
            IssueCode::SlackCount => "slack bus count is not one",
            IssueCode::SeriesLength => "series length mismatch",
            IssueCode::NonRadial => "non-radial topology",
            IssueCode::DegenerateVoltageBand => "degenerate voltage band",
            IssueCode::NegativeDemand => "negative demand",
            IssueCode::NonFinite => "non-finite value",
            IssueCode::NegativeImpedance => "negative impedance",
            IssueCode::ZeroImpedance => "zero-impedance line",
            IssueCode::NonPositiveThermalLimit => "non-positive thermal limit",
            IssueCode::NegativeCapacity => "negative capacity",
            IssueCode::ProfileOutOfRange => "profile out of [0,1]",
            IssueCode::NoEligibleNodes => "candidate policy selects no nodes",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub severity: Severity,
    pub location: String,
    pub detail: String,
}

impl ValidationIssue {
    pub(crate) fn error(code: IssueCode, location: impl Into<String>, detail: impl Into<String>) -> Self {
        ValidationIssue {
            code,
            severity: Severity::Error,
            location: location.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn warning(code: IssueCode, location: impl Into<String>, detail: impl Into<String>) -> Self {
        ValidationIssue {
            code,
            severity: Severity::Warning,
            location: location.into(),
            detail: detail.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {} at {}", self.code.describe(), self.location)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Checks every grid invariant and reports the violations as data.
pub fn validate_grid(grid: &Grid) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let hours = grid.hour_count;

    if hours == 0 {
        issues.push(ValidationIssue::error(IssueCode::NoHours, "grid", ""));
    }
    for (name, v) in [
        ("base_mva", grid.base_mva),
        ("base_kv", grid.base_kv),
        ("hour_duration_h", grid.hour_duration_h),
    ] {
        if !(v.is_finite() && v > 0.0) {
            issues.push(ValidationIssue::error(IssueCode::NonPositiveBase, name, format!("{v}")));
        }
    }

    let mut seen = HashSet::new();
    for b in &grid.buses {
        if !seen.insert(b.id.as_str()) {
            issues.push(ValidationIssue::error(
                IssueCode::DuplicateBusId,
                format!("bus '{}'", b.id),
                "",
            ));
        }
    }
    let mut seen_gen = HashSet::new();
    for g in &grid.gens {
        if !seen_gen.insert(g.id.as_str()) {
            issues.push(ValidationIssue::error(
                IssueCode::DuplicateGeneratorId,
                format!("generator '{}'", g.id),
                "",
            ));
        }
    }

    let slack_count = grid.buses.iter().filter(|b| b.is_slack).count();
    if slack_count != 1 {
        issues.push(ValidationIssue::error(
            IssueCode::SlackCount,
            "grid",
            format!("found {slack_count}"),
        ));
    }

    for b in &grid.buses {
        let loc = format!("bus '{}'", b.id);
        for (field, series) in [("demand_p", &b.demand_p), ("demand_q", &b.demand_q)] {
            if series.len() != hours {
                issues.push(ValidationIssue::error(
                    IssueCode::SeriesLength,
                    loc.clone(),
                    format!("{field}: expected {hours}, found {}", series.len()),
                ));
            }
            if let Some(h) = series.iter().position(|v| !v.is_finite()) {
                issues.push(ValidationIssue::error(
                    IssueCode::NonFinite,
                    loc.clone(),
                    format!("{field} at hour {h}"),
                ));
            }
        }
        if let Some(h) = b.demand_p.iter().position(|&d| d < 0.0) {
            issues.push(ValidationIssue::error(
                IssueCode::NegativeDemand,
                loc.clone(),
                format!("hour {h}: {}", b.demand_p[h]),
            ));
        }
        if !(b.vmin > 0.0 && b.vmin < b.vmax && b.vmax.is_finite()) {
            issues.push(ValidationIssue::error(
                IssueCode::DegenerateVoltageBand,
                loc,
                format!("vmin {} vmax {}", b.vmin, b.vmax),
            ));
        }
    }

    let bus_ids: HashSet<&str> = grid.buses.iter().map(|b| b.id.as_str()).collect();
    let mut refs_ok = true;
    for (li, l) in grid.lines.iter().enumerate() {
        let loc = format!("line {li} ({}-{})", l.from, l.to);
        for end in [&l.from, &l.to] {
            if !bus_ids.contains(end.as_str()) {
                refs_ok = false;
                issues.push(ValidationIssue::error(IssueCode::UnknownBus, loc.clone(), end.clone()));
            }
        }
        if !(l.r.is_finite() && l.x.is_finite() && l.s_max.is_finite()) {
            issues.push(ValidationIssue::error(IssueCode::NonFinite, loc.clone(), ""));
        }
        if l.r < 0.0 || l.x < 0.0 {
            issues.push(ValidationIssue::error(
                IssueCode::NegativeImpedance,
                loc.clone(),
                format!("r {} x {}", l.r, l.x),
            ));
        } else if l.r == 0.0 && l.x == 0.0 {
            issues.push(ValidationIssue::warning(IssueCode::ZeroImpedance, loc.clone(), ""));
        }
        if !(l.s_max > 0.0) {
            issues.push(ValidationIssue::error(
                IssueCode::NonPositiveThermalLimit,
                loc,
                format!("{}", l.s_max),
            ));
        }
    }

    for g in &grid.gens {
        let loc = format!("generator '{}'", g.id);
        if !bus_ids.contains(g.bus.as_str()) {
            issues.push(ValidationIssue::error(IssueCode::UnknownBus, loc.clone(), g.bus.clone()));
        }
        if !(g.p_max >= 0.0 && g.p_max.is_finite()) {
            issues.push(ValidationIssue::error(
                IssueCode::NegativeCapacity,
                loc.clone(),
                format!("{}", g.p_max),
            ));
        }
        if g.profile.len() != hours {
            issues.push(ValidationIssue::error(
                IssueCode::SeriesLength,
                loc.clone(),
                format!("profile: expected {hours}, found {}", g.profile.len()),
            ));
        }
        if let Some(h) = g.profile.iter().position(|&cf| !(0.0..=1.0).contains(&cf)) {
            issues.push(ValidationIssue::error(
                IssueCode::ProfileOutOfRange,
                loc,
                format!("hour {h}: {}", g.profile[h]),
            ));
        }
    }

    if refs_ok && slack_count == 1 {
        if let Some(detail) = radiality_violation(grid) {
            issues.push(ValidationIssue::error(IssueCode::NonRadial, "grid", detail));
        }
    }

    issues
}

/// Returns a description of why the line set is not a spanning tree.
fn radiality_violation(grid: &Grid) -> Option<String> {
    let n = grid.buses.len();
    let pos: HashMap<&str, usize> = grid
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let mut adj = vec![Vec::new(); n];
    for l in &grid.lines {
        let (f, t) = (pos[l.from.as_str()], pos[l.to.as_str()]);
        if f == t {
            return Some(format!("self-loop at bus '{}'", l.from));
        }
        adj[f].push(t);
        adj[t].push(f);
    }
    let slack = grid.buses.iter().position(|b| b.is_slack)?;
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([slack]);
    seen[slack] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    if grid.lines.len() + 1 != n {
        if reached == n {
            return Some(format!(
                "{} lines for {} buses forms a cycle",
                grid.lines.len(),
                n
            ));
        }
        return Some(format!("{} lines for {} buses", grid.lines.len(), n));
    }
    if reached != n {
        let first = seen.iter().position(|s| !s).unwrap_or(0);
        return Some(format!(
            "bus '{}' not connected to the slack bus (cycle elsewhere)",
            grid.buses[first].id
        ));
    }
    None
}
