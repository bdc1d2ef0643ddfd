//! End-to-end pipeline: column generation, integer frame, heuristic frame and validation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::colgen::{
    heuristic_frame_ip, lower_bounds, run_cg, solve_frame_ip, validate_schedule, Bounds, CgOptions, IpOptions,
    IpStatus, IterationLog, Metrics, ScheduledSet, StopReason,
};
use crate::error::Error;
use crate::model::{Instance, Precoder};
use crate::powerctl::PowerScheme;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub cg: CgOptions,
    pub ip: IpOptions,
    /// Also solve the frame restricted to the final master's support.
    pub heuristic: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cg: CgOptions::default(),
            ip: IpOptions::default(),
            heuristic: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub precoder: Precoder,
    pub scheme: PowerScheme,
    pub num_devices: usize,
    pub eps_rc: f64,
    pub iter_cap: usize,
    pub early_stop: bool,
    pub time_limit_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub master_s: f64,
    pub pricing_s: f64,
    pub ip_s: f64,
    pub heuristic_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeuristicResult {
    pub frame: u64,
    pub pool_size: usize,
    pub status: IpStatus,
    pub metrics: Metrics,
    pub valid: bool,
}

/// Everything a run produces. Serializes to the schedule export format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub csets: Vec<ScheduledSet>,
    pub frame: u64,
    pub ip_status: IpStatus,
    pub metrics: Metrics,
    pub bounds: Bounds,
    pub iterations: usize,
    pub cg_stop: StopReason,
    pub lr_objective: f64,
    pub pool_size: usize,
    pub heuristic: Option<HeuristicResult>,
    pub valid: bool,
    pub violations: Vec<String>,
    pub timings: Timings,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log: Vec<IterationLog>,
}

impl RunReport {
    /// Master objective after each iteration, starting with the singleton pool.
    pub fn objective_trace(&self) -> Vec<f64> {
        self.log.iter().map(|e| e.objective).collect()
    }
}

pub fn run_pipeline(inst: &Instance, precoder: Precoder, scheme: PowerScheme, opts: &RunOptions) -> Result<RunReport, Error> {
    let start = Instant::now();
    let cg = run_cg(inst, precoder, scheme, &opts.cg)?;
    let clock = Instant::now();
    let mut violations: Vec<String> = Vec::new();
    let (heuristic, seed) = if opts.heuristic {
        let h = heuristic_frame_ip(inst, &cg.pool, &cg.master, &opts.ip)?;
        let hr = validate_schedule(inst, precoder, scheme, &h);
        violations.extend(hr.violations.iter().map(|v| format!("heuristic: {v}")));
        let result = HeuristicResult {
            frame: h.frame,
            pool_size: h.pool_size,
            status: h.status,
            metrics: hr.metrics,
            valid: hr.passed(),
        };
        (Some(result), Some(h))
    } else {
        (None, None)
    };
    let heuristic_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let schedule = solve_frame_ip(inst, &cg.pool, &cg.master, seed.as_ref(), &opts.ip)?;
    let ip_s = clock.elapsed().as_secs_f64();
    let report = validate_schedule(inst, precoder, scheme, &schedule);
    violations.extend(report.violations.iter().map(|v| v.to_string()));

    Ok(RunReport {
        frame: schedule.frame,
        ip_status: schedule.status,
        csets: schedule.sets,
        metrics: report.metrics,
        bounds: lower_bounds(inst, cg.master.objective),
        iterations: cg.iterations(),
        cg_stop: cg.stop,
        lr_objective: cg.master.objective,
        pool_size: cg.pool.len(),
        heuristic,
        valid: violations.is_empty(),
        violations,
        timings: Timings {
            master_s: cg.master_time.as_secs_f64(),
            pricing_s: cg.pricing_time.as_secs_f64(),
            ip_s,
            heuristic_s,
            total_s: start.elapsed().as_secs_f64(),
        },
        config: RunConfig {
            precoder,
            scheme,
            num_devices: inst.num_devices(),
            eps_rc: opts.cg.pricing.eps_rc,
            iter_cap: opts.cg.iter_cap,
            early_stop: opts.cg.early_stop,
            time_limit_s: opts.cg.pricing.time_limit.map(|d| d.as_secs_f64()),
        },
        log: cg.log,
    })
}
