use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{LinearNetworkModel, NetworkError, RadialTopology};
use crate::grid::Grid;

/// Default per-bus apparent-power mismatch tolerance (p.u.).
pub const AC_TOLERANCE: f64 = 1e-8;
pub const AC_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcState {
    pub v_mag: Vec<f64>,
    /// Voltage angle per bus (rad).
    pub v_ang: Vec<f64>,
    /// Active flow per line at its downstream end, positive towards the slack (MW).
    pub flow_p: Vec<f64>,
    /// Reactive flow per line at its downstream end, positive towards the slack (MVAr).
    pub flow_q: Vec<f64>,
    pub losses_mw: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Largest per-bus apparent-power mismatch at exit (p.u.).
    pub max_mismatch: f64,
}

/// Backward/forward sweep from a flat start.
///
/// Injections are per-bus net MW and MVAr (slack entry ignored). Lines are
/// series `r + jx` only. Non-convergence is reported through `converged`.
pub fn ac_sweep(
    grid: &Grid,
    inj_p: &[f64],
    inj_q: &[f64],
    tolerance: f64,
    max_iter: usize,
) -> Result<AcState, NetworkError> {
    let topo = RadialTopology::new(grid)?;
    let n = topo.bus_count();
    for v in [inj_p, inj_q] {
        if v.len() != n {
            return Err(NetworkError::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    if let Some(l) = grid.lines.iter().position(|l| l.r == 0.0 && l.x == 0.0) {
        return Err(NetworkError::ZeroImpedance(l));
    }
    let base = grid.base_mva;
    let z: Vec<Complex64> = grid.lines.iter().map(|l| Complex64::new(l.r, l.x)).collect();
    let s: Vec<Complex64> = (0..n)
        .map(|k| {
            if k == topo.slack {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(inj_p[k], inj_q[k]) / base
            }
        })
        .collect();

    let v0 = Complex64::new(1.0, 0.0);
    let mut v = vec![v0; n];
    // Current from parent into each line's downstream bus, indexed by line.
    let mut branch = vec![Complex64::new(0.0, 0.0); topo.line_count()];
    let mut injected = vec![Complex64::new(0.0, 0.0); n];
    let mut iterations = 0;
    let mut mismatch = f64::INFINITY;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        for k in 0..n {
            injected[k] = (s[k] / v[k]).conj();
        }
        for &b in topo.order.iter().rev() {
            if let Some(l) = topo.parent_line[b] {
                let mut j = -injected[b];
                for &c in &topo.child_lines[b] {
                    j += branch[c];
                }
                branch[l] = j;
            }
        }
        let mut next = v.clone();
        for &b in &topo.order {
            if let Some(l) = topo.parent_line[b] {
                next[b] = next[topo.line_parent[l]] - z[l] * branch[l];
            }
        }
        mismatch = (0..n)
            .filter(|&k| k != topo.slack)
            .map(|k| (s[k] - next[k] * injected[k].conj()).norm())
            .fold(0.0, f64::max);
        v = next;
        if !mismatch.is_finite() || v.iter().any(|x| x.norm() < 0.1) {
            break;
        }
        if mismatch <= tolerance {
            converged = true;
            break;
        }
    }

    let mut flow_p = vec![0.0; topo.line_count()];
    let mut flow_q = vec![0.0; topo.line_count()];
    let mut losses = 0.0;
    for l in 0..topo.line_count() {
        let child = topo.line_child[l];
        let up = v[child] * (-branch[l]).conj() * base;
        flow_p[l] = up.re;
        flow_q[l] = up.im;
        losses += z[l].re * branch[l].norm_sqr() * base;
    }
    Ok(AcState {
        v_mag: v.iter().map(|x| x.norm()).collect(),
        v_ang: v.iter().map(|x| x.arg()).collect(),
        flow_p,
        flow_q,
        losses_mw: losses,
        converged,
        iterations,
        max_mismatch: mismatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    /// Largest |V_linear − V_ac| over buses (p.u.).
    pub max_dv_pu: f64,
    pub worst_bus: usize,
    /// Largest active-flow difference over lines (MW).
    pub max_dflow_mw: f64,
    pub worst_line: usize,
    pub ac_losses_mw: f64,
    pub ac_iterations: usize,
}

/// Compares the linear model against the AC sweep on identical injections.
pub fn compare_models(grid: &Grid, inj_p: &[f64], inj_q: &[f64]) -> Result<DeviationReport, NetworkError> {
    let model = LinearNetworkModel::build(grid)?;
    let lin = model.evaluate(inj_p, inj_q)?;
    let ac = ac_sweep(grid, inj_p, inj_q, AC_TOLERANCE, AC_MAX_ITER)?;
    if !ac.converged {
        return Err(NetworkError::NotConverged {
            iterations: ac.iterations,
            mismatch: ac.max_mismatch,
        });
    }
    let (mut max_dv, mut worst_bus) = (0.0, model.topology.slack);
    for (b, (&vs, &va)) in lin.v_sq.iter().zip(&ac.v_mag).enumerate() {
        let d = (vs.max(0.0).sqrt() - va).abs();
        if d > max_dv {
            max_dv = d;
            worst_bus = b;
        }
    }
    let (mut max_df, mut worst_line) = (0.0, 0);
    for (l, (&fl, &fa)) in lin.flow_p.iter().zip(&ac.flow_p).enumerate() {
        let d = (fl - fa).abs();
        if d > max_df {
            max_df = d;
            worst_line = l;
        }
    }
    Ok(DeviationReport {
        max_dv_pu: max_dv,
        worst_bus,
        max_dflow_mw: max_df,
        worst_line,
        ac_losses_mw: ac.losses_mw,
        ac_iterations: ac.iterations,
    })
}
