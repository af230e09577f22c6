use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::solve_with_bounds;
use super::{LpSettings, LpStatus, MILPSolution, MILProblem, MilpStatus, SolverConfig};

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: lowest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    mip: &'a MILProblem,
    settings: LpSettings,
    base_lo: Vec<f64>,
    base_hi: Vec<f64>,
    incumbent: Option<(Vec<f64>, f64)>,
    history: Vec<(usize, f64)>,
    nodes: usize,
}

impl Search<'_> {
    fn bounds_with(&self, fixings: &[(usize, f64)]) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.base_lo.clone();
        let mut hi = self.base_hi.clone();
        for &(j, v) in fixings {
            lo[j] = v;
            hi[j] = v;
        }
        (lo, hi)
    }

    /// Re-solves with every binary pinned to its rounded value. Returns false
    /// when the rounded assignment is infeasible.
    fn polish(&mut self, x: &[f64]) -> bool {
        let fixings: Vec<(usize, f64)> = self.mip.binaries.iter().map(|&b| (b, x[b].round())).collect();
        let (lo, hi) = self.bounds_with(&fixings);
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return false;
        }
        let sol = solve_with_bounds(&self.mip.lp, &lo, &hi, &self.settings);
        if sol.status != LpStatus::Optimal {
            return false;
        }
        let better = match &self.incumbent {
            None => true,
            Some((_, obj)) => sol.objective < *obj,
        };
        if better {
            self.history.push((self.nodes, sol.objective));
            self.incumbent = Some((sol.x, sol.objective));
        }
        true
    }

    fn most_fractional(&self, x: &[f64], tol: f64) -> Option<usize> {
        let mut pick = None;
        let mut best = tol;
        for &b in &self.mip.binaries {
            let frac = (x[b] - x[b].floor()).min(x[b].ceil() - x[b]);
            if frac > best {
                best = frac;
                pick = Some(b);
            }
        }
        pick
    }
}

/// Best-first branch-and-bound over the declared binaries.
///
/// Integral relaxations are re-solved with binaries fixed so the returned
/// point has exact 0/1 values. Prunes nodes whose bound is within the
/// optimality tolerance of the incumbent.
pub fn solve_milp(mip: &MILProblem, cfg: &SolverConfig) -> MILPSolution {
    let start = Instant::now();
    let time_limit = cfg.time_limit();
    let mut search = Search {
        mip,
        settings: cfg.lp_settings(),
        base_lo: mip.lp.vars.iter().map(|v| v.lower).collect(),
        base_hi: mip.lp.vars.iter().map(|v| v.upper).collect(),
        incumbent: None,
        history: vec![],
        nodes: 0,
    };
    let mut open = BinaryHeap::new();
    open.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
        fixings: vec![],
    });
    let mut next_id = 1;
    let mut hit_limit = false;
    let mut unreliable = false;

    while let Some(node) = open.pop() {
        if let Some((_, inc)) = &search.incumbent {
            if node.bound >= inc - cfg.optimality_tol {
                open.clear();
                break;
            }
        }
        let out_of_time = time_limit.is_some_and(|t| start.elapsed() >= t);
        if search.nodes >= cfg.node_limit || out_of_time {
            open.push(node);
            hit_limit = true;
            break;
        }
        search.nodes += 1;
        let (lo, hi) = search.bounds_with(&node.fixings);
        let sol = solve_with_bounds(&mip.lp, &lo, &hi, &search.settings);
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return MILPSolution {
                    status: MilpStatus::Unbounded,
                    x: vec![],
                    objective: f64::NEG_INFINITY,
                    bound: f64::NEG_INFINITY,
                    gap: f64::INFINITY,
                    nodes: search.nodes,
                    incumbents: search.history,
                };
            }
            LpStatus::IterationLimit | LpStatus::NumericalFailure => {
                log::warn!("relaxation at node {} ended with {:?}", node.id, sol.status);
                unreliable = true;
                continue;
            }
            LpStatus::Optimal => {}
        }
        if let Some((_, inc)) = &search.incumbent {
            if sol.objective >= inc - cfg.optimality_tol {
                continue;
            }
        }
        let mut branch = search.most_fractional(&sol.x, cfg.integrality_tol);
        if branch.is_none() && !search.polish(&sol.x) {
            // Integral within tolerance yet infeasible once rounded.
            branch = search.most_fractional(&sol.x, 0.0);
        }
        match branch {
            None => {}
            Some(j) => {
                if node.depth == 0 {
                    search.polish(&sol.x);
                }
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    open.push(Node {
                        bound: sol.objective,
                        depth: node.depth + 1,
                        id: next_id,
                        fixings,
                    });
                    next_id += 1;
                }
            }
        }
    }

    let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    match search.incumbent {
        None => MILPSolution {
            status: if hit_limit || unreliable {
                MilpStatus::Limit
            } else {
                MilpStatus::Infeasible
            },
            x: vec![],
            objective: f64::NAN,
            bound: open_bound,
            gap: f64::INFINITY,
            nodes: search.nodes,
            incumbents: search.history,
        },
        Some((x, obj)) => {
            let bound = if hit_limit { open_bound.min(obj) } else { obj };
            MILPSolution {
                status: if hit_limit || unreliable {
                    MilpStatus::Limit
                } else {
                    MilpStatus::Optimal
                },
                x,
                objective: obj,
                bound,
                gap: (obj - bound) / obj.abs().max(1.0),
                nodes: search.nodes,
                incumbents: search.history,
            }
        }
    }
}
