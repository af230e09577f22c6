use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::validate::{IssueCode, ValidationIssue};
use super::{GenKind, GenUnit, Grid, GridError};

/// How the base capacity of each added candidate is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    /// Arithmetic mean of all existing scalable PV capacities.
    MeanOfScalable,
    /// The same capacity at every selected node.
    FixedCapacity { kwp: f64 },
    /// Explicit (bus, base capacity in MW) pairs; overrides the eligibility rule.
    PerNodeList(Vec<(String, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EligibleNodes {
    /// Non-slack buses with demand and no existing PV.
    DemandWithoutPv,
    /// Buses hosting at least one existing scalable PV unit.
    ScalablePv,
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePolicy {
    pub mode: CandidateMode,
    pub eligible: EligibleNodes,
    /// Capacity-factor series for new units. When absent, the per-hour mean
    /// of the existing scalable profiles is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_profile: Option<Vec<f64>>,
}

fn mean_profile<'a>(units: impl Iterator<Item = &'a GenUnit>, hours: usize) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; hours];
    let mut n = 0usize;
    for u in units {
        for (s, v) in sum.iter_mut().zip(&u.profile) {
            *s += v;
        }
        n += 1;
    }
    (n > 0).then(|| sum.into_iter().map(|s| (s / n as f64).min(1.0)).collect())
}

/// Adds one `pv_candidate` unit per selected node. Existing units are untouched.
///
/// Returns the extended grid and any warning-level issues (a policy that
/// selects no node is reported, not rejected).
pub fn add_candidates(
    grid: &Grid,
    policy: &CandidatePolicy,
) -> Result<(Grid, Vec<ValidationIssue>), GridError> {
    let scalable: Vec<&GenUnit> = grid
        .gens
        .iter()
        .filter(|g| g.kind == GenKind::PvExistingScalable)
        .collect();

    if let Some(p) = &policy.reference_profile {
        if p.len() != grid.hour_count {
            return Err(GridError::SeriesLength {
                element: "reference profile".into(),
                expected: grid.hour_count,
                found: p.len(),
            });
        }
    }

    let nodes: Vec<(String, f64)> = match &policy.mode {
        CandidateMode::PerNodeList(list) => {
            for (bus, _) in list {
                if grid.bus_index(bus).is_none() {
                    return Err(GridError::UnknownBus {
                        element: "candidate policy".into(),
                        bus: bus.clone(),
                    });
                }
            }
            list.clone()
        }
        mode => {
            let base = match mode {
                CandidateMode::MeanOfScalable => {
                    if scalable.is_empty() {
                        return Err(GridError::NoScalableUnits);
                    }
                    scalable.iter().map(|g| g.p_max).sum::<f64>() / scalable.len() as f64
                }
                CandidateMode::FixedCapacity { kwp } => kwp * 1e-3,
                CandidateMode::PerNodeList(_) => unreachable!(),
            };
            eligible_buses(grid, &policy.eligible)?
                .into_iter()
                .map(|b| (b, base))
                .collect()
        }
    };

    let mut issues = Vec::new();
    if nodes.is_empty() {
        issues.push(ValidationIssue::warning(
            IssueCode::NoEligibleNodes,
            "candidate policy",
            format!("{:?}", policy.eligible),
        ));
    }

    let global_mean = mean_profile(scalable.iter().copied(), grid.hour_count);
    let mut out = grid.clone();
    let mut ids: HashSet<String> = grid.gens.iter().map(|g| g.id.clone()).collect();
    for (bus, base) in nodes {
        let profile = match (&policy.reference_profile, &policy.mode) {
            (Some(p), _) => p.clone(),
            (None, CandidateMode::PerNodeList(_)) => mean_profile(
                scalable.iter().copied().filter(|g| g.bus == bus),
                grid.hour_count,
            )
            .or_else(|| global_mean.clone())
            .ok_or_else(|| GridError::MissingProfile(format!("bus '{bus}'")))?,
            (None, _) => global_mean
                .clone()
                .ok_or_else(|| GridError::MissingProfile("no scalable units to average".into()))?,
        };
        let mut id = format!("cand_{bus}");
        let mut k = 2;
        while ids.contains(&id) {
            id = format!("cand_{bus}_{k}");
            k += 1;
        }
        ids.insert(id.clone());
        out.gens.push(GenUnit {
            id,
            bus,
            kind: GenKind::PvCandidate,
            p_max: base,
            profile,
        });
    }
    Ok((out, issues))
}

fn eligible_buses(grid: &Grid, rule: &EligibleNodes) -> Result<Vec<String>, GridError> {
    let with_kind = |pred: &dyn Fn(GenKind) -> bool| -> HashSet<&str> {
        grid.gens
            .iter()
            .filter(|g| pred(g.kind))
            .map(|g| g.bus.as_str())
            .collect()
    };
    Ok(match rule {
        EligibleNodes::DemandWithoutPv => {
            let pv = with_kind(&|k| k.is_existing_pv());
            grid.buses
                .iter()
                .filter(|b| !b.is_slack && b.has_demand() && !pv.contains(b.id.as_str()))
                .map(|b| b.id.clone())
                .collect()
        }
        EligibleNodes::ScalablePv => {
            let sc = with_kind(&|k| k == GenKind::PvExistingScalable);
            grid.buses
                .iter()
                .filter(|b| sc.contains(b.id.as_str()))
                .map(|b| b.id.clone())
                .collect()
        }
        EligibleNodes::Explicit(list) => {
            for b in list {
                if grid.bus_index(b).is_none() {
                    return Err(GridError::UnknownBus {
                        element: "candidate policy".into(),
                        bus: b.clone(),
                    });
                }
            }
            list.clone()
        }
    })
}

/// Multiplies every active and reactive demand entry by `factor`.
pub fn scale_demand(grid: &Grid, factor: f64) -> Result<Grid, GridError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(GridError::NonPositiveFactor(factor));
    }
    let mut out = grid.clone();
    for b in &mut out.buses {
        b.demand_p.iter_mut().for_each(|d| *d *= factor);
        b.demand_q.iter_mut().for_each(|d| *d *= factor);
    }
    Ok(out)
}
