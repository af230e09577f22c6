use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formulation::PlanResult;
use crate::grid::Grid;
use crate::oracle::RuleModel;

/// A line binds when |flow| reaches this fraction of its rating.
pub const LINE_BINDING_FRACTION: f64 = 1.0 - 1e-3;
/// A bus binds when its squared voltage is this close to a bound (p.u.²).
pub const VOLTAGE_BINDING_BAND: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingElement {
    /// `from-to` for lines, bus id for buses.
    pub element: String,
    pub worst_hour: usize,
    /// |flow| in MW, or squared voltage in p.u.².
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BindingReport {
    pub binding_lines: Vec<BindingElement>,
    pub binding_buses_high: Vec<BindingElement>,
    pub binding_buses_low: Vec<BindingElement>,
}

impl BindingReport {
    pub fn is_empty(&self) -> bool {
        self.binding_lines.is_empty() && self.binding_buses_high.is_empty() && self.binding_buses_low.is_empty()
    }

    /// Element ids, lines first, for one-line summaries.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = self.binding_lines.iter().map(|e| format!("line:{}", e.element)).collect();
        out.extend(self.binding_buses_high.iter().map(|e| format!("vmax:{}", e.element)));
        out.extend(self.binding_buses_low.iter().map(|e| format!("vmin:{}", e.element)));
        out
    }
}

/// Orders ids with embedded numbers numerically, so "9-10" precedes "10-11".
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = vec![];
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    if a.is_empty() || b.is_empty() {
        return a.cmp(b);
    }
    for (x, y) in chunks(a).into_iter().zip(chunks(b)) {
        let ord = match (x, y) {
            ((true, p), (true, q)) => p
                .trim_start_matches('0')
                .len()
                .cmp(&q.trim_start_matches('0').len())
                .then_with(|| p.trim_start_matches('0').cmp(q.trim_start_matches('0'))),
            ((_, p), (_, q)) => p.cmp(q),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Per-hour binding candidates: (element position, value).
#[derive(Default)]
struct HourHits {
    hour: usize,
    lines: Vec<(usize, f64)>,
    high: Vec<(usize, f64)>,
    low: Vec<(usize, f64)>,
}

fn hits(grid: &Grid, slack: usize, hour: usize, flow_p: &[f64], v_sq: &[f64]) -> HourHits {
    let mut h = HourHits {
        hour,
        ..HourHits::default()
    };
    for (l, line) in grid.lines.iter().enumerate() {
        if flow_p[l].abs() >= LINE_BINDING_FRACTION * line.s_max {
            h.lines.push((l, flow_p[l].abs()));
        }
    }
    for (j, b) in grid.buses.iter().enumerate() {
        if j == slack {
            continue;
        }
        if v_sq[j] >= b.vmax * b.vmax - VOLTAGE_BINDING_BAND {
            h.high.push((j, v_sq[j]));
        }
        if v_sq[j] <= b.vmin * b.vmin + VOLTAGE_BINDING_BAND {
            h.low.push((j, v_sq[j]));
        }
    }
    h
}

/// Keeps the worst value per element; earlier hours win ties.
fn reduce(
    hours: &[HourHits],
    pick: impl Fn(&HourHits) -> &Vec<(usize, f64)>,
    worse: impl Fn(f64, f64) -> bool,
) -> Vec<(usize, usize, f64)> {
    let mut best: Vec<(usize, usize, f64)> = vec![];
    for h in hours {
        for &(e, v) in pick(h) {
            match best.iter_mut().find(|b| b.0 == e) {
                Some(b) if worse(v, b.2) => *b = (e, h.hour, v),
                Some(_) => {}
                None => best.push((e, h.hour, v)),
            }
        }
    }
    best
}

fn assemble(grid: &Grid, hours: Vec<HourHits>) -> BindingReport {
    let line_id = |l: usize| format!("{}-{}", grid.lines[l].from, grid.lines[l].to);
    let mut lines: Vec<BindingElement> = reduce(&hours, |h| &h.lines, |a, b| a > b)
        .into_iter()
        .map(|(l, hour, value)| BindingElement {
            element: line_id(l),
            worst_hour: hour,
            value,
            limit: grid.lines[l].s_max,
        })
        .collect();
    let bus_elems = |list: Vec<(usize, usize, f64)>, high: bool| -> Vec<BindingElement> {
        let mut v: Vec<BindingElement> = list
            .into_iter()
            .map(|(j, hour, value)| {
                let b = &grid.buses[j];
                BindingElement {
                    element: b.id.clone(),
                    worst_hour: hour,
                    value,
                    limit: if high { b.vmax * b.vmax } else { b.vmin * b.vmin },
                }
            })
            .collect();
        v.sort_by(|a, b| natural_cmp(&a.element, &b.element));
        v
    };
    let high = bus_elems(reduce(&hours, |h| &h.high, |a, b| a > b), true);
    let low = bus_elems(reduce(&hours, |h| &h.low, |a, b| a < b), false);
    lines.sort_by(|a, b| natural_cmp(&a.element, &b.element));
    BindingReport {
        binding_lines: lines,
        binding_buses_high: high,
        binding_buses_low: low,
    }
}

/// Binding limits in a decoded plan, from its stored flows and voltages.
pub fn find_bottlenecks(plan: &PlanResult, grid: &Grid) -> BindingReport {
    let slack = grid.slack_index().unwrap_or(usize::MAX);
    let hours = plan
        .hours
        .iter()
        .map(|hr| hits(grid, slack, hr.hour, &hr.flow_p, &hr.v_sq))
        .collect();
    assemble(grid, hours)
}

/// Binding limits of the rule-based dispatch at `scal`, streamed hour by
/// hour so long series never hold every state at once.
pub fn rule_bottlenecks(rm: &RuleModel<'_>, grid: &Grid, scal: f64) -> BindingReport {
    let slack = grid.slack_index().unwrap_or(usize::MAX);
    let hours: Vec<HourHits> = (0..rm.hour_count())
        .into_par_iter()
        .map(|k| {
            let (hour, _, state) = rm.hour_state(k, scal);
            hits(grid, slack, hour, &state.flow_p, &state.v_sq)
        })
        .collect();
    assemble(grid, hours)
}
