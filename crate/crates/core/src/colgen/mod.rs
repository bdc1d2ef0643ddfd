//! Column generation over compatible sets.
//!
//! Phase 1 solves the linear relaxation of the frame problem by alternating a
//! master LP over a pool of compatible sets with a pricing step that looks
//! for a set whose dual constraint is violated. Phase 2 ([`frame`]) solves
//! the integer frame problem restricted to the generated pool.

mod frame;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use mimoframe_milp::{solve_lp_with, Basis, LinearProgram, LpOptions, LpStatus, RowSense};
use serde::{Deserialize, Serialize};

pub use frame::{
    heuristic_frame_ip, lower_bounds, pigeonhole_bound, rounded_schedule, solve_frame_ip, validate_schedule, Bounds,
    IpOptions, IpStatus, Metrics, Schedule, ScheduleReport, ScheduleViolation, ScheduledSet,
};

use crate::error::Error;
use crate::model::{CompatibleSet, Direction, Instance, Precoder};
use crate::powerctl::{downlink_powers, scheme_set, uplink_powers, PowerScheme};
use crate::pricing::{solve_pricing, verify_candidate, DualPrices, PricingOptions, PricingStatus};

type Key = (Vec<usize>, Vec<usize>, Vec<i64>);

fn key(c: &CompatibleSet) -> Key {
    let powers = c
        .eta_up
        .iter()
        .chain(&c.eta_down)
        .map(|e| (e * 1e9).round() as i64)
        .collect();
    (c.tx.clone(), c.rx.clone(), powers)
}

/// An ordered, duplicate-free list of compatible sets.
#[derive(Debug, Clone, Default)]
pub struct ColumnPool {
    columns: Vec<CompatibleSet>,
    keys: HashMap<Key, usize>,
}

impl ColumnPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a set; returns false if an identical one is already present.
    pub fn push(&mut self, c: CompatibleSet) -> bool {
        let k = key(&c);
        if self.keys.contains_key(&k) {
            return false;
        }
        self.keys.insert(k, self.columns.len());
        self.columns.push(c);
        true
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[CompatibleSet] {
        &self.columns
    }

    pub fn contains(&self, c: &CompatibleSet) -> bool {
        self.keys.contains_key(&key(c))
    }

    /// Index of an identical set in the pool.
    pub fn position(&self, c: &CompatibleSet) -> Option<usize> {
        self.keys.get(&key(c)).copied()
    }
}

impl FromIterator<CompatibleSet> for ColumnPool {
    fn from_iter<I: IntoIterator<Item = CompatibleSet>>(iter: I) -> Self {
        let mut pool = ColumnPool::new();
        for c in iter {
            pool.push(c);
        }
        pool
    }
}

/// One singleton set per device with demand: the device transmits if it has
/// uplink demand and receives if it has downlink demand.
pub fn initial_pool(inst: &Instance, precoder: Precoder, scheme: PowerScheme) -> Result<ColumnPool, Error> {
    let mut pool = ColumnPool::new();
    for d in &inst.devices {
        let tx: Vec<usize> = if d.up_demand > 0 { vec![d.id] } else { vec![] };
        let rx: Vec<usize> = if d.down_demand > 0 { vec![d.id] } else { vec![] };
        if tx.is_empty() && rx.is_empty() {
            continue;
        }
        if !tx.is_empty() && uplink_powers(inst, precoder, scheme, &tx).is_none() {
            return Err(Error::InfeasibleDevice {
                device: d.id,
                direction: Direction::Up,
            });
        }
        if !rx.is_empty() && downlink_powers(inst, precoder, scheme, &rx).is_none() {
            return Err(Error::InfeasibleDevice {
                device: d.id,
                direction: Direction::Down,
            });
        }
        let c = scheme_set(inst, precoder, scheme, &tx, &rx)
            .ok_or_else(|| Error::Model(format!("singleton of device {} rejected", d.id)))?;
        pool.push(c);
    }
    Ok(pool)
}

/// Optimal master LP over a pool.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    /// Block counts aligned with the pool.
    pub t: Vec<f64>,
    pub duals: DualPrices,
    pub objective: f64,
    pub basis: Basis,
}

impl MasterSolution {
    pub fn support(&self) -> Vec<usize> {
        (0..self.t.len()).filter(|&i| self.t[i] > 1e-9).collect()
    }
}

/// Covering rows in a fixed order: uplink rows of devices with uplink demand,
/// then downlink rows of devices with downlink demand.
pub(crate) fn covering_rows(inst: &Instance) -> Vec<(Direction, usize)> {
    let up = inst.devices.iter().filter(|d| d.up_demand > 0).map(|d| (Direction::Up, d.id));
    let down = inst.devices.iter().filter(|d| d.down_demand > 0).map(|d| (Direction::Down, d.id));
    up.chain(down).collect()
}

pub(crate) fn covers(c: &CompatibleSet, dir: Direction, k: usize) -> bool {
    match dir {
        Direction::Up => c.tx.binary_search(&k).is_ok(),
        Direction::Down => c.rx.binary_search(&k).is_ok(),
    }
}

pub(crate) fn frame_lp(inst: &Instance, columns: &[&CompatibleSet]) -> (LinearProgram, Vec<(Direction, usize)>) {
    let rows = covering_rows(inst);
    let mut lp = LinearProgram::minimize();
    for _ in columns {
        lp.add_var(0.0, f64::INFINITY, 1.0);
    }
    for &(dir, k) in &rows {
        let coeffs = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| covers(c, dir, k))
            .map(|(j, _)| (j, 1.0))
            .collect();
        lp.add_constraint(coeffs, RowSense::Ge, f64::from(inst.devices[k].demand(dir)));
    }
    (lp, rows)
}

/// Solves the master LP, optionally warm-started from a basis of a smaller
/// pool (extra columns are appended nonbasic).
pub fn solve_master(inst: &Instance, pool: &ColumnPool, warm: Option<&Basis>) -> Result<MasterSolution, Error> {
    let cols: Vec<&CompatibleSet> = pool.columns().iter().collect();
    let (lp, rows) = frame_lp(inst, &cols);
    let n = cols.len();
    let start = warm.and_then(|b| {
        let old = b.status.len().checked_sub(rows.len())?;
        (old <= n).then(|| b.with_added_columns(old, n - old))
    });
    let sol = solve_lp_with(&lp, start.as_ref(), &LpOptions::default())?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Master("pool does not cover all demands".into())),
        s => return Err(Error::Master(format!("master LP ended with status {s:?}"))),
    }
    let mut duals = DualPrices::zeros(inst.num_devices());
    for (i, &(dir, k)) in rows.iter().enumerate() {
        let v = sol.duals[i].max(0.0);
        match dir {
            Direction::Up => duals.up[k] = v,
            Direction::Down => duals.down[k] = v,
        }
    }
    Ok(MasterSolution {
        t: sol.x.iter().map(|v| v.max(0.0)).collect(),
        duals,
        objective: sol.objective,
        basis: sol.basis,
    })
}

#[derive(Debug, Clone)]
pub struct CgOptions {
    pub pricing: PricingOptions,
    pub iter_cap: usize,
    /// Stop once the objective improves by less than 1e-3 over 10 iterations.
    pub early_stop: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            pricing: PricingOptions::default(),
            iter_cap: 2000,
            early_stop: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No set prices above `1 + eps_rc`: the relaxation is solved.
    Optimal,
    IterationCap,
    EarlyStop,
    /// Pricing returned a set already in the pool.
    Stall,
    /// Pricing hit its time limit without a usable set.
    PricingInconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Master objective before this iteration's column is added.
    pub objective: f64,
    /// Best price found, zero when none.
    pub price: f64,
    pub members: usize,
    pub proven: bool,
    pub pricing_s: f64,
    pub master_s: f64,
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub pool: ColumnPool,
    pub master: MasterSolution,
    pub log: Vec<IterationLog>,
    pub stop: StopReason,
    pub master_time: Duration,
    pub pricing_time: Duration,
}

impl CgResult {
    /// True when the final master objective is the optimum of the full relaxation.
    pub fn proven(&self) -> bool {
        self.stop == StopReason::Optimal
    }

    pub fn iterations(&self) -> usize {
        self.log.len()
    }
}

/// Runs column generation from the singleton pool.
pub fn run_cg(inst: &Instance, precoder: Precoder, scheme: PowerScheme, opts: &CgOptions) -> Result<CgResult, Error> {
    let pool = initial_pool(inst, precoder, scheme)?;
    run_cg_from(inst, precoder, scheme, pool, opts)
}

/// Runs column generation from a caller-supplied pool that covers every demand.
pub fn run_cg_from(
    inst: &Instance,
    precoder: Precoder,
    scheme: PowerScheme,
    mut pool: ColumnPool,
    opts: &CgOptions,
) -> Result<CgResult, Error> {
    let clock = Instant::now();
    let mut master = solve_master(inst, &pool, None)?;
    let mut master_time = clock.elapsed();
    let mut pricing_time = Duration::ZERO;
    let mut log: Vec<IterationLog> = Vec::new();
    let mut history = vec![master.objective];
    info!("CG start: {} sets, objective {:.6}", pool.len(), master.objective);

    let stop = loop {
        if log.len() >= opts.iter_cap {
            warn!("CG iteration cap {} reached", opts.iter_cap);
            break StopReason::IterationCap;
        }
        let clock = Instant::now();
        let cand = solve_pricing(inst, precoder, scheme, &master.duals, &opts.pricing);
        let pricing_s = clock.elapsed();
        pricing_time += pricing_s;
        let cand = match cand {
            Ok(c) => c,
            Err(Error::PricingInconclusive(msg)) => {
                warn!("CG stopped: {msg}");
                break StopReason::PricingInconclusive;
            }
            Err(e) => return Err(e),
        };
        let mut entry = IterationLog {
            iteration: log.len() + 1,
            objective: master.objective,
            price: 0.0,
            members: 0,
            proven: true,
            pricing_s: pricing_s.as_secs_f64(),
            master_s: 0.0,
        };
        let Some(cand) = cand else {
            log.push(entry);
            break StopReason::Optimal;
        };
        entry.price = cand.price;
        entry.members = cand.cset.members().len();
        entry.proven = cand.status == PricingStatus::Optimal;
        let report = verify_candidate(inst, precoder, scheme, &cand.cset);
        if !report.passed() {
            return Err(Error::Model(format!(
                "pricing produced an invalid set: {}",
                report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
            )));
        }
        if !pool.push(cand.cset) {
            warn!("pricing returned a set already in the pool (B = {:.6}); stopping", cand.price);
            log.push(entry);
            break StopReason::Stall;
        }
        let clock = Instant::now();
        let next = solve_master(inst, &pool, Some(&master.basis))?;
        let master_s = clock.elapsed();
        master_time += master_s;
        entry.master_s = master_s.as_secs_f64();
        if next.objective > master.objective + 1e-9 * (1.0 + master.objective.abs()) {
            warn!("master objective rose from {} to {}", master.objective, next.objective);
        }
        debug!(
            "iter {:4}: B = {:.6}, |c| = {}, objective {:.6}, pricing {:.3}s",
            entry.iteration,
            entry.price,
            entry.members,
            next.objective,
            entry.pricing_s
        );
        log.push(entry);
        master = next;
        history.push(master.objective);
        if opts.early_stop && history.len() > 10 {
            let past = history[history.len() - 11];
            if past - master.objective < 1e-3 {
                info!("CG early stop at iteration {}", log.len());
                break StopReason::EarlyStop;
            }
        }
    };
    info!(
        "CG done after {} iterations ({stop:?}): objective {:.6}, {} sets",
        log.len(),
        master.objective,
        pool.len()
    );
    Ok(CgResult {
        pool,
        master,
        log,
        stop,
        master_time,
        pricing_time,
    })
}
