//! JSON grid document.
//!
//! Scalar powers are either a bare number (MW) or `{"value": x, "unit": u}`;
//! series are either a bare array (MW) or `{"values": [...], "unit": u}`.
//! Accepted units: `MW`, `kW`, `MWp`, `kWp` for active power and capacity,
//! `MVAr`, `kVAr` for reactive demand. Serialization always writes MW.

use serde::{Deserialize, Serialize};

use super::validate::{validate_grid, IssueCode};
use super::{Bus, GenKind, GenUnit, Grid, GridError, Line};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Quantity {
    Bare(f64),
    Tagged { value: f64, unit: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Series {
    Bare(Vec<f64>),
    Tagged { values: Vec<f64>, unit: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dimension {
    Active,
    Reactive,
}

fn unit_scale(field: &str, unit: &str, dim: Dimension) -> Result<f64, GridError> {
    let scale = match (dim, unit) {
        (Dimension::Active, "MW" | "MWp") => Some(1.0),
        (Dimension::Active, "kW" | "kWp") => Some(1e-3),
        (Dimension::Reactive, "MVAr") => Some(1.0),
        (Dimension::Reactive, "kVAr") => Some(1e-3),
        _ => None,
    };
    scale.ok_or_else(|| GridError::Unit {
        field: field.to_string(),
        unit: unit.to_string(),
    })
}

impl Quantity {
    fn to_mw(&self, field: &str, dim: Dimension) -> Result<f64, GridError> {
        match self {
            Quantity::Bare(v) => Ok(*v),
            Quantity::Tagged { value, unit } => Ok(value * unit_scale(field, unit, dim)?),
        }
    }

    fn mw(v: f64) -> Self {
        Quantity::Tagged {
            value: v,
            unit: "MW".to_string(),
        }
    }
}

impl Series {
    fn to_mw(&self, field: &str, dim: Dimension) -> Result<Vec<f64>, GridError> {
        match self {
            Series::Bare(v) => Ok(v.clone()),
            Series::Tagged { values, unit } => {
                let s = unit_scale(field, unit, dim)?;
                Ok(values.iter().map(|v| v * s).collect())
            }
        }
    }
}

fn default_vmin() -> f64 {
    0.9
}

fn default_vmax() -> f64 {
    1.1
}

fn default_duration() -> f64 {
    1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusDoc {
    id: String,
    #[serde(default, skip_serializing_if = "is_false")]
    slack: bool,
    #[serde(default = "default_vmin")]
    vmin: f64,
    #[serde(default = "default_vmax")]
    vmax: f64,
    demand_p: Series,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    demand_q: Option<Series>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDoc {
    from: String,
    to: String,
    r: f64,
    x: f64,
    s_max: Quantity,
    #[serde(default)]
    length_km: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDoc {
    id: String,
    bus: String,
    kind: GenKind,
    p_max: Quantity,
    profile: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    base_mva: f64,
    base_kv: f64,
    #[serde(default = "default_duration")]
    hour_duration_h: f64,
    buses: Vec<BusDoc>,
    lines: Vec<LineDoc>,
    #[serde(default)]
    generators: Vec<GenDoc>,
}

/// Parses a grid document and rejects it unless every invariant holds.
pub fn parse_grid(document: &str) -> Result<Grid, GridError> {
    let doc: GridDoc = serde_json::from_str(document).map_err(|e| GridError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let hour_count = doc.buses.first().map_or(0, |b| match &b.demand_p {
        Series::Bare(v) => v.len(),
        Series::Tagged { values, .. } => values.len(),
    });

    let mut buses = Vec::with_capacity(doc.buses.len());
    for b in &doc.buses {
        let demand_p = b.demand_p.to_mw(&format!("bus '{}' demand_p", b.id), Dimension::Active)?;
        let demand_q = match &b.demand_q {
            Some(s) => s.to_mw(&format!("bus '{}' demand_q", b.id), Dimension::Reactive)?,
            None => vec![0.0; demand_p.len()],
        };
        buses.push(Bus {
            id: b.id.clone(),
            demand_p,
            demand_q,
            vmin: b.vmin,
            vmax: b.vmax,
            is_slack: b.slack,
        });
    }
    let mut lines = Vec::with_capacity(doc.lines.len());
    for (i, l) in doc.lines.iter().enumerate() {
        lines.push(Line {
            from: l.from.clone(),
            to: l.to.clone(),
            r: l.r,
            x: l.x,
            s_max: l.s_max.to_mw(&format!("line {i} s_max"), Dimension::Active)?,
            length_km: l.length_km,
        });
    }
    let mut gens = Vec::with_capacity(doc.generators.len());
    for g in &doc.generators {
        gens.push(GenUnit {
            id: g.id.clone(),
            bus: g.bus.clone(),
            kind: g.kind,
            p_max: g.p_max.to_mw(&format!("generator '{}' p_max", g.id), Dimension::Active)?,
            profile: g.profile.clone(),
        });
    }

    let grid = Grid {
        base_mva: doc.base_mva,
        base_kv: doc.base_kv,
        hour_duration_h: doc.hour_duration_h,
        hour_count,
        buses,
        lines,
        gens,
    };
    reject_invalid(&grid)?;
    Ok(grid)
}

/// Maps the most structural error issue onto a dedicated error variant.
fn reject_invalid(grid: &Grid) -> Result<(), GridError> {
    let issues: Vec<_> = validate_grid(grid).into_iter().filter(|i| i.is_error()).collect();
    if issues.is_empty() {
        return Ok(());
    }
    let find = |code| issues.iter().find(|i| i.code == code);
    if let Some(i) = find(IssueCode::DuplicateBusId) {
        return Err(GridError::DuplicateId {
            kind: "bus",
            id: strip_quotes(&i.location),
        });
    }
    if let Some(i) = find(IssueCode::DuplicateGeneratorId) {
        return Err(GridError::DuplicateId {
            kind: "generator",
            id: strip_quotes(&i.location),
        });
    }
    if let Some(i) = find(IssueCode::UnknownBus) {
        return Err(GridError::UnknownBus {
            element: i.location.clone(),
            bus: i.detail.clone(),
        });
    }
    if find(IssueCode::SlackCount).is_some() {
        return Err(GridError::SlackCount(grid.buses.iter().filter(|b| b.is_slack).count()));
    }
    if let Some(i) = find(IssueCode::SeriesLength) {
        let found = i
            .detail
            .rsplit("found ")
            .next()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        return Err(GridError::SeriesLength {
            element: i.location.clone(),
            expected: grid.hour_count,
            found,
        });
    }
    if let Some(i) = find(IssueCode::NonRadial) {
        return Err(GridError::NonRadial(i.detail.clone()));
    }
    Err(GridError::Invalid(issues))
}

fn strip_quotes(location: &str) -> String {
    location
        .split('\'')
        .nth(1)
        .unwrap_or(location)
        .to_string()
}

/// Writes the canonical document form (MW units, compact demand_q).
pub fn serialize_grid(grid: &Grid) -> String {
    let doc = GridDoc {
        base_mva: grid.base_mva,
        base_kv: grid.base_kv,
        hour_duration_h: grid.hour_duration_h,
        buses: grid
            .buses
            .iter()
            .map(|b| BusDoc {
                id: b.id.clone(),
                slack: b.is_slack,
                vmin: b.vmin,
                vmax: b.vmax,
                demand_p: Series::Tagged {
                    values: b.demand_p.clone(),
                    unit: "MW".into(),
                },
                demand_q: if b.demand_q.iter().all(|&q| q == 0.0) {
                    None
                } else {
                    Some(Series::Tagged {
                        values: b.demand_q.clone(),
                        unit: "MVAr".into(),
                    })
                },
            })
            .collect(),
        lines: grid
            .lines
            .iter()
            .map(|l| LineDoc {
                from: l.from.clone(),
                to: l.to.clone(),
                r: l.r,
                x: l.x,
                s_max: Quantity::mw(l.s_max),
                length_km: l.length_km,
            })
            .collect(),
        generators: grid
            .gens
            .iter()
            .map(|g| GenDoc {
                id: g.id.clone(),
                bus: g.bus.clone(),
                kind: g.kind,
                p_max: Quantity::mw(g.p_max),
                profile: g.profile.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("grid document serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{
        "base_mva": 1.0, "base_kv": 20.0,
        "buses": [
            {"id": "0", "slack": true, "demand_p": [0.0]},
            {"id": "1", "demand_p": {"values": [1.4], "unit": "kW"}}
        ],
        "lines": [{"from": "0", "to": "1", "r": 0.01, "x": 0.0, "s_max": {"value": 5, "unit": "MW"}}],
        "generators": [
            {"id": "pv", "bus": "1", "kind": "pv_candidate", "p_max": {"value": 7, "unit": "kWp"}, "profile": [1.0]}
        ]
    }"#;

    #[test]
    fn minimal_document_parses() {
        let g = parse_grid(TWO_BUS).unwrap();
        assert_eq!(g.buses.len(), 2);
        assert_eq!(g.lines.len(), 1);
        assert_eq!(g.hour_count, 1);
        assert!((g.buses[1].demand_p[0] - 0.0014).abs() < 1e-15);
        assert!((g.gens[0].p_max - 0.007).abs() < 1e-15);
        assert_eq!(g.buses[1].demand_q, vec![0.0]);
    }

    #[test]
    fn cycle_is_rejected() {
        let doc = TWO_BUS.replace(
            r#""lines": [{"from": "0", "to": "1","#,
            r#""lines": [{"from": "1", "to": "0", "r": 0.01, "x": 0.0, "s_max": 1.0}, {"from": "0", "to": "1","#,
        );
        assert!(matches!(parse_grid(&doc), Err(GridError::NonRadial(_))));
    }

    #[test]
    fn syntax_error_reports_position() {
        match parse_grid("{\n  \"base_mva\": 1.0,\n  oops }") {
            Err(GridError::Syntax { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structural_errors_map_to_variants() {
        let unknown = TWO_BUS.replace(r#""bus": "1""#, r#""bus": "7""#);
        assert!(matches!(parse_grid(&unknown), Err(GridError::UnknownBus { .. })));

        let dup = TWO_BUS.replace(r#"{"id": "1", "demand_p""#, r#"{"id": "0", "demand_p""#);
        assert!(matches!(parse_grid(&dup), Err(GridError::DuplicateId { kind: "bus", .. })));

        let no_slack = TWO_BUS.replace(r#""slack": true, "#, "");
        assert!(matches!(parse_grid(&no_slack), Err(GridError::SlackCount(0))));

        let two_slack = TWO_BUS.replace(r#"{"id": "1", "#, r#"{"id": "1", "slack": true, "#);
        assert!(matches!(parse_grid(&two_slack), Err(GridError::SlackCount(2))));

        let short = TWO_BUS.replace(r#""profile": [1.0]"#, r#""profile": [1.0, 0.5]"#);
        assert!(matches!(
            parse_grid(&short),
            Err(GridError::SeriesLength { expected: 1, found: 2, .. })
        ));

        let bad_unit = TWO_BUS.replace(r#""unit": "kWp""#, r#""unit": "hp""#);
        assert!(matches!(parse_grid(&bad_unit), Err(GridError::Unit { .. })));
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let bad = TWO_BUS.replace(r#""profile": [1.0]"#, r#""profile": [1.5]"#);
        match parse_grid(&bad) {
            Err(GridError::Invalid(issues)) => assert_eq!(issues[0].code, IssueCode::ProfileOutOfRange),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serialization_round_trips() {
        let g = parse_grid(TWO_BUS).unwrap();
        let text = serialize_grid(&g);
        assert_eq!(parse_grid(&text).unwrap(), g);
        assert_eq!(serialize_grid(&parse_grid(&text).unwrap()), text);
    }
}
