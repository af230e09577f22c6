use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("feed-in limit must lie in (0, 1], got {0}")]
    FeedInLimit(f64),
    #[error("demand multiplier must be finite and non-negative, got {0}")]
    DemandMultiplier(f64),
    #[error("cost '{0}' must be finite and non-negative")]
    Cost(&'static str),
    #[error("hour list is empty")]
    NoHours,
    #[error("invalid scenario file: {0}")]
    Syntax(String),
}

/// Which PV may be curtailed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    /// Only candidate units.
    #[serde(rename = "a")]
    A,
    /// Every PV unit.
    #[serde(rename = "b")]
    B,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One worst-case hour.
    Snapshot,
    /// Every hour of the grid's series.
    Annual,
}

/// Prices in €/MWh (reactive terms in €/MVArh).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Costs {
    pub c_imp: f64,
    pub c_exp: f64,
    pub c_pns_qns: f64,
    pub c_eps_eqs: f64,
}

impl Default for Costs {
    fn default() -> Self {
        Costs {
            c_imp: 200.0,
            c_exp: 200.0,
            c_pns_qns: 100_000.0,
            c_eps_eqs: 200_000.0,
        }
    }
}

impl Costs {
    pub fn scaled(&self, k: f64) -> Costs {
        Costs {
            c_imp: self.c_imp * k,
            c_exp: self.c_exp * k,
            c_pns_qns: self.c_pns_qns * k,
            c_eps_eqs: self.c_eps_eqs * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub fl: f64,
    pub case: Case,
    pub demand_multiplier: f64,
    /// Hour indices to model; `None` means every hour of the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hours: Option<Vec<usize>>,
    pub costs: Costs,
    pub mode: Mode,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            fl: 1.0,
            case: Case::A,
            demand_multiplier: 1.0,
            hours: None,
            costs: Costs::default(),
            mode: Mode::Snapshot,
        }
    }
}

impl Scenario {
    pub fn new(fl: f64, case: Case) -> Self {
        Scenario {
            fl,
            case,
            ..Scenario::default()
        }
    }

    pub fn with_hours(mut self, hours: Vec<usize>) -> Self {
        self.hours = Some(hours);
        self
    }

    pub fn with_demand_multiplier(mut self, m: f64) -> Self {
        self.demand_multiplier = m;
        self
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.fl > 0.0 && self.fl <= 1.0) {
            return Err(ScenarioError::FeedInLimit(self.fl));
        }
        if !(self.demand_multiplier >= 0.0 && self.demand_multiplier.is_finite()) {
            return Err(ScenarioError::DemandMultiplier(self.demand_multiplier));
        }
        let c = &self.costs;
        for (name, v) in [
            ("c_imp", c.c_imp),
            ("c_exp", c.c_exp),
            ("c_pns_qns", c.c_pns_qns),
            ("c_eps_eqs", c.c_eps_eqs),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ScenarioError::Cost(name));
            }
        }
        if self.hours.as_ref().is_some_and(|h| h.is_empty()) {
            return Err(ScenarioError::NoHours);
        }
        Ok(())
    }

    pub fn hours_for(&self, grid: &Grid) -> Vec<usize> {
        match &self.hours {
            Some(h) => h.clone(),
            None => (0..grid.hour_count).collect(),
        }
    }
}
