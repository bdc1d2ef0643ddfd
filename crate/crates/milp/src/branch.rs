//! LP-based branch and bound for mixed-integer programs.

use std::sync::Arc;
use std::time::{Duration, Instant};

use log::debug;

use crate::error::ModelError;
use crate::problem::{MipProblem, ObjectiveSense};
use crate::simplex::{solve_lp_with, Basis, LpOptions, LpStatus};

/// Order in which open nodes are explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeOrder {
    DepthFirst,
    BestBound,
    /// Depth-first until the first incumbent, best-bound afterwards.
    Hybrid,
}

/// Which child of a branching is explored first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchDirection {
    Up,
    Down,
}

#[derive(Debug, Clone)]
pub struct MipOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// Relative gap at which a node is pruned against the incumbent.
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub integrality_tol: f64,
    pub node_order: NodeOrder,
    pub branch_direction: BranchDirection,
    /// A known feasible point; ignored if it fails the feasibility check.
    pub initial_solution: Option<Vec<f64>>,
    /// Only solutions strictly better than this objective are of interest.
    pub cutoff: Option<f64>,
    pub lp: LpOptions,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self {
            time_limit: None,
            node_limit: None,
            rel_gap: 1e-9,
            abs_gap: 1e-9,
            integrality_tol: 1e-6,
            node_order: NodeOrder::DepthFirst,
            branch_direction: BranchDirection::Up,
            initial_solution: None,
            cutoff: None,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped on the time limit; an incumbent may still be present.
    TimeLimit,
    NodeLimit,
    /// LP failures prevented a proof either way.
    Numerical,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Best proven bound in the caller's objective sense.
    pub bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl MipSolution {
    /// Relative gap between incumbent and bound, `None` without an incumbent.
    pub fn gap(&self) -> Option<f64> {
        self.objective
            .map(|z| (z - self.bound).abs() / z.abs().max(1.0))
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Lower bound on the node objective (minimization form).
    bound: f64,
    depth: usize,
    basis: Option<Arc<Basis>>,
}

/// Solves `p` by branch and bound on LP relaxations.
pub fn solve_mip(p: &MipProblem, opts: &MipOptions) -> Result<MipSolution, ModelError> {
    p.validate()?;
    let start = Instant::now();
    let deadline = opts.time_limit.map(|d| start + d);
    let sign = if p.lp.sense == ObjectiveSense::Maximize { -1.0 } else { 1.0 };
    let int_vars: Vec<usize> = (0..p.lp.num_vars()).filter(|&j| p.kinds[j].is_integral()).collect();
    let integral_obj = p.has_integral_objective();
    let mut lp_opts = opts.lp.clone();
    lp_opts.deadline = deadline;

    let mut work = p.lp.clone();
    // Integer variables get integral bounds from the outset.
    for &j in &int_vars {
        let v = &mut work.variables[j];
        v.lower = v.lower.ceil();
        v.upper = v.upper.floor();
    }

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    if let Some(x0) = &opts.initial_solution {
        if x0.len() == work.num_vars() && is_integral(x0, &int_vars, opts.integrality_tol) && p.lp.max_violation(x0) <= 1e-6 {
            incumbent = Some((x0.clone(), sign * p.lp.objective_value(x0)));
        } else {
            debug!("initial solution rejected");
        }
    }
    let cutoff = opts.cutoff.map(|c| sign * c);

    // Minimization-form node bound adjusted for integral objectives.
    let effective = |b: f64| if integral_obj { (b - 1e-6).ceil() } else { b };
    let prune = |bound: f64, inc: &Option<(Vec<f64>, f64)>| -> bool {
        let b = effective(bound);
        if let Some(c) = cutoff {
            if b >= c - opts.abs_gap {
                return true;
            }
        }
        match inc {
            Some((_, z)) => b >= z - opts.abs_gap.max(opts.rel_gap * z.abs().max(1.0)),
            None => false,
        }
    };

    let root = Node {
        lower: int_vars.iter().map(|&j| work.variables[j].lower).collect(),
        upper: int_vars.iter().map(|&j| work.variables[j].upper).collect(),
        bound: f64::NEG_INFINITY,
        depth: 0,
        basis: None,
    };
    let mut open = vec![root];
    let mut nodes = 0usize;
    let mut lp_iterations = 0usize;
    let mut numerical = false;
    let mut stopped: Option<MipStatus> = None;

    while !open.is_empty() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            stopped = Some(MipStatus::TimeLimit);
            break;
        }
        if opts.node_limit.is_some_and(|l| nodes >= l) {
            stopped = Some(MipStatus::NodeLimit);
            break;
        }
        let best_first = match opts.node_order {
            NodeOrder::DepthFirst => false,
            NodeOrder::BestBound => true,
            NodeOrder::Hybrid => incumbent.is_some(),
        };
        let node = if best_first {
            let mut k = 0;
            for (i, nd) in open.iter().enumerate() {
                let cur = &open[k];
                if nd.bound < cur.bound || (nd.bound == cur.bound && nd.depth > cur.depth) {
                    k = i;
                }
            }
            open.swap_remove(k)
        } else {
            open.pop().expect("non-empty")
        };
        if prune(node.bound, &incumbent) {
            continue;
        }
        nodes += 1;

        for (k, &j) in int_vars.iter().enumerate() {
            work.variables[j].lower = node.lower[k];
            work.variables[j].upper = node.upper[k];
        }
        let mut sol = solve_lp_with(&work, node.basis.as_deref(), &lp_opts)?;
        if sol.status == LpStatus::Numerical {
            let mut retry = lp_opts.clone();
            retry.scaling = !retry.scaling;
            sol = solve_lp_with(&work, None, &retry)?;
        }
        lp_iterations += sol.iterations;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.depth == 0 && incumbent.is_none() {
                    return Ok(MipSolution {
                        status: MipStatus::Unbounded,
                        x: None,
                        objective: None,
                        bound: sign * f64::NEG_INFINITY,
                        nodes,
                        lp_iterations,
                    });
                }
                numerical = true;
                continue;
            }
            LpStatus::Interrupted => {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    open.push(node);
                    stopped = Some(MipStatus::TimeLimit);
                    break;
                }
                numerical = true;
                continue;
            }
            LpStatus::Numerical => {
                numerical = true;
                continue;
            }
        }
        let z = sign * sol.objective;
        let bound = z.max(node.bound);
        if prune(bound, &incumbent) {
            continue;
        }

        // Most fractional variable, lowest index on ties.
        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = opts.integrality_tol;
        for (k, &j) in int_vars.iter().enumerate() {
            let v = sol.x[j];
            let f = (v - v.floor()).min(v.ceil() - v);
            if f > best_frac + 1e-12 {
                best_frac = f;
                branch = Some((k, v));
            }
        }

        let Some((k, v)) = branch else {
            let mut x = sol.x.clone();
            for &j in &int_vars {
                x[j] = x[j].round();
            }
            let zx = sign * p.lp.objective_value(&x);
            if incumbent.as_ref().is_none_or(|(_, zi)| zx < *zi) {
                debug!("incumbent {:.9} at node {nodes}", sign * zx);
                incumbent = Some((x, zx));
            }
            continue;
        };

        let basis = Some(Arc::new(sol.basis));
        let mut down = Node {
            lower: node.lower.clone(),
            upper: node.upper.clone(),
            bound,
            depth: node.depth + 1,
            basis: basis.clone(),
        };
        down.upper[k] = v.floor();
        let mut up = Node {
            lower: node.lower,
            upper: node.upper,
            bound,
            depth: node.depth + 1,
            basis,
        };
        up.lower[k] = v.ceil();
        // The last pushed child is explored first under depth-first order.
        match opts.branch_direction {
            BranchDirection::Up => {
                open.push(down);
                open.push(up);
            }
            BranchDirection::Down => {
                open.push(up);
                open.push(down);
            }
        }
    }

    let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let (status, bound) = match (stopped, &incumbent) {
        (Some(s), Some((_, z))) => (s, open_bound.min(*z)),
        (Some(s), None) => (s, open_bound),
        (None, Some((_, z))) => (MipStatus::Optimal, *z),
        (None, None) if numerical => (MipStatus::Numerical, f64::NEG_INFINITY),
        (None, None) => (MipStatus::Infeasible, f64::INFINITY),
    };
    let bound = effective_bound(bound, integral_obj);
    Ok(MipSolution {
        status,
        objective: incumbent.as_ref().map(|(_, z)| sign * z),
        x: incumbent.map(|(x, _)| x),
        bound: sign * bound,
        nodes,
        lp_iterations,
    })
}

fn effective_bound(b: f64, integral: bool) -> f64 {
    if integral && b.is_finite() {
        (b - 1e-6).ceil()
    } else {
        b
    }
}

fn is_integral(x: &[f64], int_vars: &[usize], tol: f64) -> bool {
    int_vars.iter().all(|&j| (x[j] - x[j].round()).abs() <= tol)
}
