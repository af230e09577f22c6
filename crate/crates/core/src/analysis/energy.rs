use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::formulation::PlanResult;
use crate::grid::Grid;
use crate::oracle::HourEnergy;

/// Relative tolerance of the identity generated + curtailed = available.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// PV energy totals over a series (MWh).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyAccount {
    pub generated_mwh: f64,
    pub curtailed_mwh: f64,
    pub available_mwh: f64,
    pub curtailed_share: f64,
    pub imports_mwh: f64,
    pub exports_mwh: f64,
}

impl EnergyAccount {
    pub fn conservation_gap(&self) -> f64 {
        (self.generated_mwh + self.curtailed_mwh - self.available_mwh).abs()
    }
}

pub fn energy_account(series: &[HourEnergy]) -> Result<EnergyAccount, AnalysisError> {
    if series.is_empty() {
        return Err(AnalysisError::Series("empty series".into()));
    }
    let mut acc = EnergyAccount::default();
    for h in series {
        acc.generated_mwh += h.generated_mwh;
        acc.curtailed_mwh += h.curtailed_mwh;
        acc.available_mwh += h.available_mwh;
        acc.imports_mwh += h.imports_mwh;
        acc.exports_mwh += h.exports_mwh;
    }
    if acc.conservation_gap() > CONSERVATION_TOL * acc.available_mwh.max(1.0) {
        return Err(AnalysisError::Series(format!(
            "generated {} + curtailed {} != available {}",
            acc.generated_mwh, acc.curtailed_mwh, acc.available_mwh
        )));
    }
    acc.curtailed_share = if acc.available_mwh > 0.0 {
        (acc.curtailed_mwh / acc.available_mwh).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(acc)
}

/// PV energy per hour of a decoded plan, weighted by the hour duration.
pub fn plan_energy(plan: &PlanResult, grid: &Grid) -> Result<Vec<HourEnergy>, AnalysisError> {
    let dh = plan.hour_duration_h;
    plan.hours
        .iter()
        .map(|hr| {
            let n = grid.gens.len();
            if hr.available.len() != n || hr.generation.len() != n || hr.curtailment.len() != n {
                return Err(AnalysisError::Series(format!(
                    "hour {} has {} generator entries, grid has {n}",
                    hr.hour,
                    hr.available.len()
                )));
            }
            let mut e = HourEnergy {
                hour: hr.hour,
                available_mwh: 0.0,
                generated_mwh: 0.0,
                curtailed_mwh: 0.0,
                imports_mwh: hr.imports_mw * dh,
                exports_mwh: hr.exports_mw * dh,
            };
            for (g, u) in grid.gens.iter().enumerate() {
                if u.kind.is_pv() {
                    e.available_mwh += hr.available[g] * dh;
                    e.curtailed_mwh += hr.curtailment[g] * dh;
                }
            }
            // Generation is defined as the remainder so the identity is exact
            // even where the solver leaves round-off in p + sp.
            e.generated_mwh = e.available_mwh - e.curtailed_mwh;
            Ok(e)
        })
        .collect()
}
