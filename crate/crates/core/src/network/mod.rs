//! Radial power-flow models.
//!
//! [`LinearNetworkModel`] is the lossless LinDistFlow linearization used
//! inside the optimization: line flows are sums of downstream injections and
//! squared voltages are affine in the injections. [`ac_sweep`] is a nonlinear
//! backward/forward sweep used to check the linear model after the fact.

mod ac;

pub use ac::{ac_sweep, compare_models, AcState, DeviationReport, AC_MAX_ITER, AC_TOLERANCE};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid, GridError};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("non-radial grid: {0}")]
    NonRadial(String),
    #[error("injection vector has {found} entries, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("line {0} has zero impedance")]
    ZeroImpedance(usize),
    #[error("AC sweep did not converge within {iterations} iterations (mismatch {mismatch:e})")]
    NotConverged { iterations: usize, mismatch: f64 },
}

/// Tree structure of a radial grid rooted at the slack bus.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTopology {
    pub slack: usize,
    /// Buses in breadth-first order from the slack bus.
    pub order: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    /// Line feeding each bus from its parent.
    pub parent_line: Vec<Option<usize>>,
    /// Downstream (child) bus of each line.
    pub line_child: Vec<usize>,
    /// Upstream (parent) bus of each line.
    pub line_parent: Vec<usize>,
    /// Lines leaving each bus towards its children.
    pub child_lines: Vec<Vec<usize>>,
}

impl RadialTopology {
    pub fn new(grid: &Grid) -> Result<Self, NetworkError> {
        let idx = grid.index()?;
        let n = grid.buses.len();
        if grid.lines.len() + 1 != n {
            return Err(NetworkError::NonRadial(format!(
                "{} lines for {} buses",
                grid.lines.len(),
                n
            )));
        }
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (l, &(f, t)) in idx.line_ends.iter().enumerate() {
            adj[f].push((t, l));
            adj[t].push((f, l));
        }
        let mut parent = vec![None; n];
        let mut parent_line = vec![None; n];
        let mut line_child = vec![usize::MAX; grid.lines.len()];
        let mut line_parent = vec![usize::MAX; grid.lines.len()];
        let mut child_lines = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([idx.slack]);
        seen[idx.slack] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, l) in &adj[u] {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                parent[v] = Some(u);
                parent_line[v] = Some(l);
                line_child[l] = v;
                line_parent[l] = u;
                child_lines[u].push(l);
                queue.push_back(v);
            }
        }
        if order.len() != n {
            return Err(NetworkError::NonRadial("grid is not connected".into()));
        }
        Ok(RadialTopology {
            slack: idx.slack,
            order,
            parent,
            parent_line,
            line_child,
            line_parent,
            child_lines,
        })
    }

    pub fn bus_count(&self) -> usize {
        self.parent.len()
    }

    pub fn line_count(&self) -> usize {
        self.line_child.len()
    }

    /// Lines on the path from the slack bus to `bus`, slack side first.
    pub fn path_lines(&self, bus: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut b = bus;
        while let Some(l) = self.parent_line[b] {
            path.push(l);
            b = self.line_parent[l];
        }
        path.reverse();
        path
    }
}

/// Lossless linear radial model in squared-voltage form.
#[derive(Debug, Clone)]
pub struct LinearNetworkModel {
    pub topology: RadialTopology,
    pub base_mva: f64,
    /// Slack voltage magnitude (p.u.).
    pub slack_voltage: f64,
    /// Per line, the sorted buses fed through it.
    pub downstream: Vec<Vec<usize>>,
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    /// Row-major n×n: squared-voltage change at bus j per MW injected at bus k.
    voltage_p: Vec<f64>,
    /// Row-major n×n: squared-voltage change at bus j per MVAr injected at bus k.
    voltage_q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearState {
    /// Active flow per line (MW), positive towards the slack bus.
    pub flow_p: Vec<f64>,
    /// Reactive flow per line (MVAr), positive towards the slack bus.
    pub flow_q: Vec<f64>,
    /// Squared voltage magnitude per bus (p.u.²).
    pub v_sq: Vec<f64>,
}

impl LinearNetworkModel {
    pub fn build(grid: &Grid) -> Result<Self, NetworkError> {
        Self::with_slack_voltage(grid, 1.0)
    }

    pub fn with_slack_voltage(grid: &Grid, slack_voltage: f64) -> Result<Self, NetworkError> {
        let topology = RadialTopology::new(grid)?;
        let n = topology.bus_count();
        let nl = topology.line_count();

        let mut downstream = vec![Vec::new(); nl];
        for &b in topology.order.iter().rev() {
            let mut set = vec![b];
            for &l in &topology.child_lines[b] {
                set.extend_from_slice(&downstream[l]);
            }
            if let Some(l) = topology.parent_line[b] {
                set.sort_unstable();
                downstream[l] = set;
            }
        }

        let r: Vec<f64> = grid.lines.iter().map(|l| l.r).collect();
        let x: Vec<f64> = grid.lines.iter().map(|l| l.x).collect();
        let scale = 2.0 / grid.base_mva;
        let mut voltage_p = vec![0.0; n * n];
        let mut voltage_q = vec![0.0; n * n];
        for j in 0..n {
            for l in topology.path_lines(j) {
                for &k in &downstream[l] {
                    voltage_p[j * n + k] += scale * r[l];
                    voltage_q[j * n + k] += scale * x[l];
                }
            }
        }

        Ok(LinearNetworkModel {
            topology,
            base_mva: grid.base_mva,
            slack_voltage,
            downstream,
            r,
            x,
            voltage_p,
            voltage_q,
        })
    }

    pub fn bus_count(&self) -> usize {
        self.topology.bus_count()
    }

    pub fn slack_v_sq(&self) -> f64 {
        self.slack_voltage * self.slack_voltage
    }

    /// Sensitivity of bus `j`'s squared voltage to MW and MVAr injections.
    pub fn voltage_row(&self, j: usize) -> (&[f64], &[f64]) {
        let n = self.bus_count();
        (
            &self.voltage_p[j * n..(j + 1) * n],
            &self.voltage_q[j * n..(j + 1) * n],
        )
    }

    /// Flows and squared voltages for per-bus net injections (MW, MVAr).
    /// The slack entry is ignored.
    pub fn evaluate(&self, inj_p: &[f64], inj_q: &[f64]) -> Result<LinearState, NetworkError> {
        let n = self.bus_count();
        for v in [inj_p, inj_q] {
            if v.len() != n {
                return Err(NetworkError::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        let topo = &self.topology;
        let nl = topo.line_count();
        let mut flow_p = vec![0.0; nl];
        let mut flow_q = vec![0.0; nl];
        for &b in topo.order.iter().rev() {
            if let Some(l) = topo.parent_line[b] {
                let (mut p, mut q) = (inj_p[b], inj_q[b]);
                for &c in &topo.child_lines[b] {
                    p += flow_p[c];
                    q += flow_q[c];
                }
                flow_p[l] = p;
                flow_q[l] = q;
            }
        }
        let mut v_sq = vec![0.0; n];
        v_sq[topo.slack] = self.slack_v_sq();
        let scale = 2.0 / self.base_mva;
        for &b in &topo.order {
            if let Some(l) = topo.parent_line[b] {
                let up = topo.line_parent[l];
                v_sq[b] = v_sq[up] + scale * (self.r[l] * flow_p[l] + self.x[l] * flow_q[l]);
            }
        }
        Ok(LinearState { flow_p, flow_q, v_sq })
    }

    /// Largest per-bus violation of "parent-line flow = injection + child-line flows".
    pub fn conservation_residual(&self, inj_p: &[f64], state: &LinearState) -> f64 {
        let topo = &self.topology;
        let mut worst: f64 = 0.0;
        for b in 0..topo.bus_count() {
            let Some(l) = topo.parent_line[b] else { continue };
            let out: f64 = topo.child_lines[b].iter().map(|&c| state.flow_p[c]).sum();
            let residual = (state.flow_p[l] - inj_p[b] - out) / self.base_mva;
            worst = worst.max(residual.abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::test_grids::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain() -> Grid {
        let mut g = two_bus();
        g.buses.push(bus("2", &[0.0], false));
        g.lines.push(line("2", "1", 0.02, 5.0));
        g
    }

    /// Random radial grid: every bus after the first hangs off an earlier one.
    pub(crate) fn random_tree(seed: u64, n: usize) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = two_bus();
        g.buses.truncate(1);
        g.lines.clear();
        for i in 1..n {
            g.buses.push(bus(&i.to_string(), &[0.0], false));
            let p = rng.gen_range(0..i);
            let mut l = line(&p.to_string(), &i.to_string(), rng.gen_range(0.001..0.05), 10.0);
            l.x = rng.gen_range(0.0..0.05);
            if rng.gen_bool(0.5) {
                std::mem::swap(&mut l.from, &mut l.to);
            }
            g.lines.push(l);
        }
        g
    }

    #[test]
    fn two_bus_downstream_set() {
        let m = LinearNetworkModel::build(&two_bus()).unwrap();
        assert_eq!(m.downstream, vec![vec![1]]);
    }

    #[test]
    fn chain_downstream_sets() {
        let m = LinearNetworkModel::build(&chain()).unwrap();
        assert_eq!(m.downstream[0], vec![1, 2]);
        assert_eq!(m.downstream[1], vec![2]);
    }

    #[test]
    fn downstream_sets_match_cut_enumeration() {
        // Oracle: cutting line l splits the tree; its downstream set is the
        // component that no longer reaches the slack bus.
        for seed in 0..20 {
            let g = random_tree(seed, 30);
            let m = LinearNetworkModel::build(&g).unwrap();
            let n = g.buses.len();
            for cut in 0..g.lines.len() {
                let mut reach = vec![false; n];
                reach[g.slack_index().unwrap()] = true;
                let mut changed = true;
                while changed {
                    changed = false;
                    for (li, l) in g.lines.iter().enumerate() {
                        if li == cut {
                            continue;
                        }
                        let f = g.bus_index(&l.from).unwrap();
                        let t = g.bus_index(&l.to).unwrap();
                        if reach[f] != reach[t] {
                            reach[f] = true;
                            reach[t] = true;
                            changed = true;
                        }
                    }
                }
                let expected: Vec<usize> = (0..n).filter(|&b| !reach[b]).collect();
                assert_eq!(m.downstream[cut], expected, "seed {seed} line {cut}");
                // every bus lies downstream of exactly the lines on its slack path
                for &b in &expected {
                    assert!(m.topology.path_lines(b).contains(&cut));
                }
            }
        }
    }

    #[test]
    fn zero_injection_gives_flat_state() {
        let m = LinearNetworkModel::build(&chain()).unwrap();
        let s = m.evaluate(&[0.0; 3], &[0.0; 3]).unwrap();
        assert!(s.flow_p.iter().all(|&f| f == 0.0));
        assert!(s.v_sq.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn one_step_voltage_drop() {
        let m = LinearNetworkModel::build(&two_bus()).unwrap();
        let s = m.evaluate(&[0.0, -0.1], &[0.0, 0.0]).unwrap();
        assert!((s.v_sq[1] - 0.998).abs() < 1e-15);
        assert!((s.flow_p[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = LinearNetworkModel::build(&two_bus()).unwrap();
        assert!(matches!(
            m.evaluate(&[0.0], &[0.0, 0.0]),
            Err(NetworkError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn dense_sensitivities_agree_with_recursion() {
        let g = random_tree(7, 25);
        let m = LinearNetworkModel::build(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = m.evaluate(&p, &q).unwrap();
        for j in 0..25 {
            let (vp, vq) = m.voltage_row(j);
            let dense: f64 = 1.0
                + (0..25)
                    .filter(|&k| k != m.topology.slack)
                    .map(|k| vp[k] * p[k] + vq[k] * q[k])
                    .sum::<f64>();
            assert!((dense - s.v_sq[j]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn superposition(seed in 0u64..1000, scale in 0.1f64..3.0) {
            let g = random_tree(seed, 12);
            let m = LinearNetworkModel::build(&g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let mut draw = || -> Vec<f64> { (0..12).map(|_| rng.gen_range(-scale..scale)).collect() };
            let (a, aq, b, bq) = (draw(), draw(), draw(), draw());
            let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let abq: Vec<f64> = aq.iter().zip(&bq).map(|(x, y)| x + y).collect();
            let sa = m.evaluate(&a, &aq).unwrap();
            let sb = m.evaluate(&b, &bq).unwrap();
            let s0 = m.evaluate(&[0.0; 12], &[0.0; 12]).unwrap();
            let sab = m.evaluate(&ab, &abq).unwrap();
            for j in 0..12 {
                prop_assert!((sab.v_sq[j] - (sa.v_sq[j] + sb.v_sq[j] - s0.v_sq[j])).abs() < 1e-12);
            }
            for l in 0..11 {
                prop_assert!((sab.flow_p[l] - (sa.flow_p[l] + sb.flow_p[l])).abs() < 1e-12);
            }
            prop_assert!(m.conservation_residual(&ab, &sab) < 1e-12);
        }

        #[test]
        fn raising_one_injection_never_lowers_a_voltage(seed in 0u64..1000, bus in 1usize..12, dp in 0.0f64..2.0) {
            let g = random_tree(seed, 12);
            let m = LinearNetworkModel::build(&g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut bumped = base.clone();
            bumped[bus] += dp;
            let s0 = m.evaluate(&base, &[0.0; 12]).unwrap();
            let s1 = m.evaluate(&bumped, &[0.0; 12]).unwrap();
            for j in 0..12 {
                prop_assert!(s1.v_sq[j] >= s0.v_sq[j] - 1e-15);
            }
        }

        #[test]
        fn slack_line_carries_total_injection(seed in 0u64..1000) {
            let g = random_tree(seed, 10);
            let m = LinearNetworkModel::build(&g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = m.evaluate(&p, &[0.0; 10]).unwrap();
            let total: f64 = (0..10).filter(|&b| b != m.topology.slack).map(|b| p[b]).sum();
            let head: f64 = m.topology.child_lines[m.topology.slack].iter().map(|&l| s.flow_p[l]).sum();
            prop_assert!((head - total).abs() < 1e-12);
        }
    }
}
