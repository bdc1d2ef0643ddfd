//! Phase 2: integer frames over a generated pool, bounds and validation.

use std::fmt;
use std::time::Duration;

use log::{debug, info, warn};
use mimoframe_milp::{solve_lp_with, solve_mip, LpOptions, LpStatus, MipOptions, MipProblem, MipStatus, NodeOrder, VarKind};
use serde::{Deserialize, Serialize};

use super::{covering_rows, covers, frame_lp, ColumnPool, MasterSolution};
use crate::error::Error;
use crate::model::{CompatibleSet, Direction, Instance, Precoder};
use crate::powerctl::PowerScheme;
use crate::pricing::{verify_candidate, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledSet {
    #[serde(flatten)]
    pub cset: CompatibleSet,
    pub blocks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpStatus {
    Optimal,
    /// Best schedule found before the time or node limit.
    Limit,
    /// Rounded-up relaxation, used when branch-and-bound returned nothing.
    Rounded,
}

/// Integer block counts per compatible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub sets: Vec<ScheduledSet>,
    pub frame: u64,
    pub status: IpStatus,
    /// Proven lower bound on the frame over the same pool.
    pub bound: f64,
    /// Number of candidate sets the integer program chose from.
    pub pool_size: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub struct IpOptions {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
}

impl Default for IpOptions {
    fn default() -> Self {
        Self {
            time_limit: Some(Duration::from_secs(120)),
            node_limit: None,
        }
    }
}

fn upper_bound(inst: &Instance, c: &CompatibleSet) -> f64 {
    let up = c.tx.iter().map(|&k| inst.devices[k].up_demand);
    let down = c.rx.iter().map(|&k| inst.devices[k].down_demand);
    f64::from(up.chain(down).max().unwrap_or(0))
}

fn schedule_from(cols: &[&CompatibleSet], blocks: &[u64], status: IpStatus, bound: f64, nodes: usize) -> Schedule {
    let sets: Vec<ScheduledSet> = cols
        .iter()
        .zip(blocks)
        .filter(|(_, &b)| b > 0)
        .map(|(c, &b)| ScheduledSet {
            cset: (*c).clone(),
            blocks: b,
        })
        .collect();
    Schedule {
        frame: sets.iter().map(|s| s.blocks).sum(),
        sets,
        status,
        bound,
        pool_size: cols.len(),
        nodes,
    }
}

fn rounded(t: &[f64]) -> Vec<u64> {
    t.iter().map(|v| (v - 1e-9).ceil().max(0.0) as u64).collect()
}

/// Rounds every block count of the master solution up. Always feasible.
pub fn rounded_schedule(pool: &ColumnPool, master: &MasterSolution) -> Schedule {
    let cols: Vec<&CompatibleSet> = pool.columns().iter().collect();
    schedule_from(&cols, &rounded(&master.t), IpStatus::Rounded, master.objective, 0)
}

/// Sequential rounding: commit part of the LP optimum over the residual
/// demands and re-solve until every demand is met. With `greedy`, the integer
/// part of every entry is committed at once; otherwise only the largest entry
/// is, rounded down, or up when below one.
fn residual_rounding(inst: &Instance, cols: &[&CompatibleSet], greedy: bool) -> Result<Option<Vec<u64>>, Error> {
    let (mut lp, rows) = frame_lp(inst, cols);
    let mut residual: Vec<f64> = rows.iter().map(|&(dir, k)| f64::from(inst.devices[k].demand(dir))).collect();
    let mut blocks = vec![0u64; cols.len()];
    let mut basis = None;
    while residual.iter().any(|&r| r > 0.0) {
        for (row, &r) in lp.constraints.iter_mut().zip(&residual) {
            row.rhs = r.max(0.0);
        }
        let sol = solve_lp_with(&lp, basis.as_ref(), &LpOptions::default())?;
        if sol.status != LpStatus::Optimal {
            return Ok(None);
        }
        let mut add: Vec<u64> = sol.x.iter().map(|v| (v + 1e-9).floor().max(0.0) as u64).collect();
        if !greedy {
            let top = (0..cols.len()).max_by(|&a, &b| sol.x[a].total_cmp(&sol.x[b]));
            for (j, a) in add.iter_mut().enumerate() {
                if Some(j) != top {
                    *a = 0;
                }
            }
        }
        if add.iter().all(|&a| a == 0) {
            let best = (0..cols.len()).max_by(|&a, &b| sol.x[a].total_cmp(&sol.x[b]));
            match best {
                Some(j) if sol.x[j] > 1e-9 => add[j] = 1,
                _ => return Ok(None),
            }
        }
        for (j, &a) in add.iter().enumerate().filter(|(_, &a)| a > 0) {
            blocks[j] += a;
            for (i, &(dir, k)) in rows.iter().enumerate() {
                if covers(cols[j], dir, k) {
                    residual[i] -= a as f64;
                }
            }
        }
        basis = Some(sol.basis);
    }
    Ok(Some(blocks))
}

fn solve_restricted(
    inst: &Instance,
    cols: Vec<&CompatibleSet>,
    t: Vec<f64>,
    incumbent: Option<Vec<u64>>,
    opts: &IpOptions,
) -> Result<Schedule, Error> {
    let (mut lp, _) = frame_lp(inst, &cols);
    let ubs: Vec<f64> = cols.iter().map(|c| upper_bound(inst, c)).collect();
    for (v, &ub) in lp.variables.iter_mut().zip(&ubs) {
        v.upper = ub;
    }
    let n = cols.len();
    let mut mip = MipProblem::from_lp(lp);
    mip.kinds = vec![VarKind::Integer; n];
    let mut start: Vec<u64> = rounded(&t).iter().zip(&ubs).map(|(&s, &ub)| s.min(ub as u64)).collect();
    let greedy = residual_rounding(inst, &cols, true)?;
    let dive = residual_rounding(inst, &cols, false)?;
    let candidates = greedy.into_iter().chain(dive).chain(incumbent);
    for inc in candidates {
        if inc.iter().sum::<u64>() < start.iter().sum::<u64>() {
            start = inc;
        }
    }
    debug!("frame IP over {n} sets starts from {} blocks", start.iter().sum::<u64>());
    let initial: Vec<f64> = start.iter().zip(&ubs).map(|(&s, &ub)| (s as f64).min(ub)).collect();
    let mip_opts = MipOptions {
        time_limit: opts.time_limit,
        node_limit: opts.node_limit,
        node_order: NodeOrder::Hybrid,
        initial_solution: Some(initial),
        ..MipOptions::default()
    };
    let sol = solve_mip(&mip, &mip_opts)?;
    let status = match sol.status {
        MipStatus::Optimal => IpStatus::Optimal,
        MipStatus::TimeLimit | MipStatus::NodeLimit => IpStatus::Limit,
        MipStatus::Infeasible => return Err(Error::Master("restricted pool does not cover all demands".into())),
        s => {
            warn!("frame IP ended with {s:?}; using rounded relaxation");
            IpStatus::Rounded
        }
    };
    let schedule = match (&sol.x, status) {
        (Some(x), IpStatus::Optimal | IpStatus::Limit) => {
            let blocks: Vec<u64> = x.iter().map(|v| v.round().max(0.0) as u64).collect();
            schedule_from(&cols, &blocks, status, sol.bound.max(0.0), sol.nodes)
        }
        _ => schedule_from(&cols, &start, IpStatus::Rounded, sol.bound.max(0.0), sol.nodes),
    };
    info!(
        "frame IP over {n} sets: frame {} ({:?}, bound {:.3}, {} nodes, {} LP iterations)",
        schedule.frame, schedule.status, schedule.bound, schedule.nodes, sol.lp_iterations
    );
    Ok(schedule)
}

/// Optimal integer frame over the whole pool. Branch-and-bound starts from the
/// shortest of the rounded relaxation, residual rounding and `incumbent` (a
/// schedule over sets of the pool).
pub fn solve_frame_ip(
    inst: &Instance,
    pool: &ColumnPool,
    master: &MasterSolution,
    incumbent: Option<&Schedule>,
    opts: &IpOptions,
) -> Result<Schedule, Error> {
    let start = incumbent.and_then(|s| {
        let mut blocks = vec![0; pool.len()];
        for e in &s.sets {
            blocks[pool.position(&e.cset)?] += e.blocks;
        }
        Some(blocks)
    });
    solve_restricted(inst, pool.columns().iter().collect(), master.t.clone(), start, opts)
}

/// Integer frame restricted to the sets used by the final master solution.
pub fn heuristic_frame_ip(inst: &Instance, pool: &ColumnPool, master: &MasterSolution, opts: &IpOptions) -> Result<Schedule, Error> {
    let support = master.support();
    let cols = support.iter().map(|&i| &pool.columns()[i]).collect();
    let t = support.iter().map(|&i| master.t[i]).collect();
    solve_restricted(inst, cols, t, None, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    /// Rounded-up optimum of the linear relaxation.
    pub lp_bound: u64,
    /// Blocks forced by the pilot budget alone.
    pub pigeonhole: u64,
}

pub fn pigeonhole_bound(inst: &Instance) -> u64 {
    let total: u64 = inst
        .devices
        .iter()
        .map(|d| u64::from(d.up_demand.max(d.down_demand)))
        .sum();
    total.div_ceil(u64::from(inst.params.num_pilots))
}

pub fn lower_bounds(inst: &Instance, lr_objective: f64) -> Bounds {
    Bounds {
        lp_bound: (lr_objective - 1e-6).ceil().max(0.0) as u64,
        pigeonhole: pigeonhole_bound(inst),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Sum over blocks of all active power coefficients.
    pub total_power: f64,
    /// Largest per-device sum of its own coefficients over the frame.
    pub max_node_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleViolation {
    Covering {
        device: usize,
        direction: Direction,
        served: u64,
        demand: u32,
    },
    Set { index: usize, violation: Violation },
    FrameMismatch { frame: u64, blocks: u64 },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleViolation::Covering {
                device,
                direction,
                served,
                demand,
            } => write!(f, "device {device} {direction:?} gets {served} of {demand} blocks"),
            ScheduleViolation::Set { index, violation } => write!(f, "set {index}: {violation}"),
            ScheduleViolation::FrameMismatch { frame, blocks } => {
                write!(f, "frame size {frame} differs from block total {blocks}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub violations: Vec<ScheduleViolation>,
    pub metrics: Metrics,
}

impl ScheduleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks demand covering and re-verifies every used set; computes power metrics.
pub fn validate_schedule(inst: &Instance, precoder: Precoder, scheme: PowerScheme, s: &Schedule) -> ScheduleReport {
    let mut violations = Vec::new();
    for &(dir, k) in &covering_rows(inst) {
        let served: u64 = s.sets.iter().filter(|e| covers(&e.cset, dir, k)).map(|e| e.blocks).sum();
        let demand = inst.devices[k].demand(dir);
        if served < u64::from(demand) {
            violations.push(ScheduleViolation::Covering {
                device: k,
                direction: dir,
                served,
                demand,
            });
        }
    }
    let blocks: u64 = s.sets.iter().map(|e| e.blocks).sum();
    if blocks != s.frame {
        violations.push(ScheduleViolation::FrameMismatch { frame: s.frame, blocks });
    }
    let mut node = vec![0.0; inst.num_devices()];
    let mut total = 0.0;
    for (i, e) in s.sets.iter().enumerate() {
        if e.blocks == 0 {
            continue;
        }
        for violation in verify_candidate(inst, precoder, scheme, &e.cset).violations {
            violations.push(ScheduleViolation::Set { index: i, violation });
        }
        let b = e.blocks as f64;
        total += b * e.cset.total_power();
        for (&k, &eta) in e.cset.tx.iter().zip(&e.cset.eta_up) {
            if let Some(p) = node.get_mut(k) {
                *p += b * eta;
            }
        }
        for (&k, &eta) in e.cset.rx.iter().zip(&e.cset.eta_down) {
            if let Some(p) = node.get_mut(k) {
                *p += b * eta;
            }
        }
    }
    ScheduleReport {
        violations,
        metrics: Metrics {
            total_power: total,
            max_node_power: node.into_iter().fold(0.0, f64::max),
        },
    }
}
