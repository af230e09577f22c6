use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{AnalysisError, CellResult, SweepResult};
use crate::formulation::Case;

/// Column order of the sweep CSV. Empty fields mean "not available".
pub const CSV_COLUMNS: [&str; 17] = [
    "fl",
    "case",
    "demand_multiplier",
    "status",
    "scal_star",
    "added_capacity_mw",
    "increase_pct",
    "oracle_scal",
    "deviation",
    "generated_mwh",
    "curtailed_mwh",
    "available_mwh",
    "curtailed_share",
    "imports_mwh",
    "exports_mwh",
    "binding_elements",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportFormats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for ReportFormats {
    fn default() -> Self {
        ReportFormats {
            csv: true,
            json: true,
            svg: true,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row(c: &CellResult) -> Vec<String> {
    let e = c.energy;
    vec![
        c.fl.to_string(),
        c.case.as_str().to_string(),
        c.demand_multiplier.to_string(),
        c.status.as_str().to_string(),
        opt(c.scal_star),
        opt(c.added_capacity_mw),
        opt(c.increase_pct),
        opt(c.oracle_scal),
        opt(c.deviation),
        opt(e.map(|e| e.generated_mwh)),
        opt(e.map(|e| e.curtailed_mwh)),
        opt(e.map(|e| e.available_mwh)),
        opt(e.map(|e| e.curtailed_share)),
        opt(e.map(|e| e.imports_mwh)),
        opt(e.map(|e| e.exports_mwh)),
        c.bottlenecks.as_ref().map(|b| b.labels().join(";")).unwrap_or_default(),
        c.error.clone().unwrap_or_default(),
    ]
}

pub fn to_csv(sweep: &SweepResult) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for c in &sweep.cells {
        w.write_record(row(c)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn to_json(sweep: &SweepResult) -> String {
    let mut s = serde_json::to_string_pretty(sweep).expect("sweep result serializes");
    s.push('\n');
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 6] = ["#b2182b", "#ef8a62", "#1b7837", "#7fbf7b", "#2166ac", "#67a9cf"];

/// Grouped bar chart as a standalone SVG document.
fn bar_chart(title: &str, y_label: &str, groups: &[String], series: &[(String, Vec<f64>)]) -> String {
    let (w, h) = (720.0, 400.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let max = series
        .iter()
        .flat_map(|s| s.1.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let y_max = if max > 0.0 { max * 1.1 } else { 1.0 };
    let y = |v: f64| top + ph * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    for k in 0..=5 {
        let v = y_max * k as f64 / 5.0;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"##,
            left + pw,
            left - 6.0,
            yy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );
    if groups.is_empty() || series.is_empty() {
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="#777777">no data</text>"##,
            left + pw / 2.0,
            top + ph / 2.0
        );
    } else {
        let gw = pw / groups.len() as f64;
        let bw = gw * 0.8 / series.len() as f64;
        for (gi, g) in groups.iter().enumerate() {
            let x0 = left + gi as f64 * gw + gw * 0.1;
            for (si, (_, values)) in series.iter().enumerate() {
                let v = values.get(gi).copied().unwrap_or(f64::NAN);
                if !v.is_finite() {
                    continue;
                }
                let v = v.max(0.0);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    x0 + si as f64 * bw,
                    y(v),
                    bw,
                    top + ph - y(v),
                    PALETTE[si % PALETTE.len()]
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                left + (gi as f64 + 0.5) * gw,
                top + ph + 18.0,
                escape(g)
            );
        }
        for (si, (name, _)) in series.iter().enumerate() {
            let ly = top + 10.0 + si as f64 * 18.0;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                left + pw + 14.0,
                ly,
                PALETTE[si % PALETTE.len()],
                left + pw + 32.0,
                ly + 10.0,
                escape(name)
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333"/>"##,
        top + ph,
        left + pw,
        top + ph
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">feed-in limit</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    s.push_str("</svg>\n");
    s
}

fn fl_groups(sweep: &SweepResult) -> Vec<f64> {
    let mut fls: Vec<f64> = sweep.cells.iter().map(|c| c.fl).collect();
    fls.sort_by(|a, b| b.total_cmp(a));
    fls.dedup();
    fls
}

fn cases(sweep: &SweepResult) -> Vec<Case> {
    let mut cs: Vec<Case> = sweep.cells.iter().map(|c| c.case).collect();
    cs.sort();
    cs.dedup();
    cs
}

/// Demand level used for single-level charts: 1.0 when swept, else the lowest.
fn base_multiplier(sweep: &SweepResult) -> Option<f64> {
    let ms: Vec<f64> = sweep.cells.iter().map(|c| c.demand_multiplier).collect();
    if ms.contains(&1.0) {
        Some(1.0)
    } else {
        ms.into_iter().min_by(|a, b| a.total_cmp(b))
    }
}

fn series_of(sweep: &SweepResult, fls: &[f64], case: Case, m: f64, f: impl Fn(&CellResult) -> Option<f64>) -> Vec<f64> {
    fls.iter()
        .map(|&fl| sweep.cell(fl, case, m).and_then(&f).unwrap_or(f64::NAN))
        .collect()
}

fn fl_labels(fls: &[f64]) -> Vec<String> {
    fls.iter().map(|fl| format!("{}%", (fl * 100.0).round())).collect()
}

/// Added capacity per FL, one bar per case and demand level.
pub fn capacity_svg(sweep: &SweepResult) -> String {
    let fls = fl_groups(sweep);
    let mut ms: Vec<f64> = sweep.cells.iter().map(|c| c.demand_multiplier).collect();
    ms.sort_by(|a, b| a.total_cmp(b));
    ms.dedup();
    let mut series = vec![];
    for case in cases(sweep) {
        for &m in &ms {
            series.push((
                format!("case {} x{}", case.as_str(), m),
                series_of(sweep, &fls, case, m, |c| c.added_capacity_mw),
            ));
        }
    }
    bar_chart("Added PV capacity", "MW", &fl_labels(&fls), &series)
}

/// Generated and curtailed PV energy per FL and case at the base demand.
pub fn energy_svg(sweep: &SweepResult) -> String {
    let fls = fl_groups(sweep);
    let mut series = vec![];
    if let Some(m) = base_multiplier(sweep) {
        for case in cases(sweep) {
            series.push((
                format!("generated, case {}", case.as_str()),
                series_of(sweep, &fls, case, m, |c| c.energy.map(|e| e.generated_mwh)),
            ));
            series.push((
                format!("curtailed, case {}", case.as_str()),
                series_of(sweep, &fls, case, m, |c| c.energy.map(|e| e.curtailed_mwh)),
            ));
        }
    }
    bar_chart("PV energy", "MWh", &fl_labels(&fls), &series)
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, AnalysisError> {
    fs::write(&path, text).map_err(|source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Writes `sweep.csv`, `sweep.json`, `capacity.svg` and `energy.svg` as
/// selected into `dir`, creating it if needed.
pub fn emit_report(sweep: &SweepResult, dir: &Path, formats: ReportFormats) -> Result<Vec<PathBuf>, AnalysisError> {
    fs::create_dir_all(dir).map_err(|source| AnalysisError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut out = vec![];
    if formats.csv {
        out.push(write(dir.join("sweep.csv"), &to_csv(sweep))?);
    }
    if formats.json {
        out.push(write(dir.join("sweep.json"), &to_json(sweep))?);
    }
    if formats.svg {
        out.push(write(dir.join("capacity.svg"), &capacity_svg(sweep))?);
        out.push(write(dir.join("energy.svg"), &energy_svg(sweep))?);
    }
    Ok(out)
}
