//! Pricing: find the compatible set whose dual constraint is most violated.
//!
//! Two engines are available. [`PricingEngine::Search`] is an exact
//! branch-and-bound over device roles that uses closed-form feasibility
//! tests. [`PricingEngine::Mip`] builds the linearized mixed-integer program
//! (see [`build_pricing`]) and solves it with the built-in MILP solver; it is
//! exact as well but much slower on large instances.

mod formulation;
mod search;
mod verify;

use std::time::Duration;

use log::debug;
use serde::{Deserialize, Serialize};

pub use formulation::{build_pricing, compare_engines, PricingModel, Product};
pub use search::{search_pricing, SearchOutcome};
pub use verify::{verify_candidate, VerifyReport, Violation};

use crate::error::Error;
use crate::model::{CompatibleSet, Instance, Precoder};
use crate::powerctl::{scheme_set, PowerScheme};

/// Dual prices of the uplink and downlink covering rows, by device id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPrices {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

impl DualPrices {
    pub fn zeros(k: usize) -> Self {
        Self {
            up: vec![0.0; k],
            down: vec![0.0; k],
        }
    }

    pub fn validate(&self, k: usize) -> Result<(), Error> {
        if self.up.len() != k || self.down.len() != k {
            return Err(Error::Precondition(format!("dual vectors must have {k} entries")));
        }
        if self.up.iter().chain(&self.down).any(|v| !v.is_finite() || *v < -1e-9) {
            return Err(Error::Precondition("dual prices must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Reduced-cost value of a set: the sum of its members' prices.
    pub fn value(&self, c: &CompatibleSet) -> f64 {
        c.tx.iter().map(|&k| self.up[k]).sum::<f64>() + c.rx.iter().map(|&k| self.down[k]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PricingEngine {
    Search,
    Mip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PricingStatus {
    /// The candidate is a proven maximizer.
    Optimal,
    /// Best found before a limit hit; improving but not necessarily maximal.
    Unproven,
}

#[derive(Debug, Clone)]
pub struct PricingOptions {
    pub engine: PricingEngine,
    /// Tolerance on the improvement test `B > 1 + eps_rc`.
    pub eps_rc: f64,
    pub time_limit: Option<Duration>,
}

impl Default for PricingOptions {
    fn default() -> Self {
        Self {
            engine: PricingEngine::Search,
            eps_rc: 1e-6,
            time_limit: Some(Duration::from_secs(60)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub cset: CompatibleSet,
    /// Sum of the members' dual prices.
    pub price: f64,
    pub status: PricingStatus,
}

/// Exact pricing optimum: the best value over all compatible sets (zero for
/// the empty set) and a set attaining it.
#[derive(Debug, Clone)]
pub struct PricingOptimum {
    pub value: f64,
    pub cset: Option<CompatibleSet>,
    pub status: PricingStatus,
}

/// Maximizes the set price, considering only sets priced above `floor` when given.
pub fn price_optimum(
    inst: &Instance,
    precoder: Precoder,
    scheme: PowerScheme,
    duals: &DualPrices,
    engine: PricingEngine,
    floor: Option<f64>,
    time_limit: Option<Duration>,
) -> Result<PricingOptimum, Error> {
    duals.validate(inst.num_devices())?;
    match engine {
        PricingEngine::Search => {
            let out = search_pricing(inst, precoder, scheme, duals, floor, time_limit);
            Ok(PricingOptimum {
                value: out.value,
                cset: out.cset,
                status: if out.complete {
                    PricingStatus::Optimal
                } else {
                    PricingStatus::Unproven
                },
            })
        }
        PricingEngine::Mip => {
            let model = build_pricing(inst, precoder, scheme, duals)?;
            let sol = model.solve(floor, time_limit)?;
            let (tx, rx) = match &sol.x {
                Some(x) => model.decode(x),
                None => (Vec::new(), Vec::new()),
            };
            let proven = sol.status == mimoframe_milp::MipStatus::Optimal
                || sol.status == mimoframe_milp::MipStatus::Infeasible;
            let status = if proven {
                PricingStatus::Optimal
            } else {
                PricingStatus::Unproven
            };
            if tx.is_empty() && rx.is_empty() {
                return Ok(PricingOptimum {
                    value: 0.0,
                    cset: None,
                    status,
                });
            }
            let cset = scheme_set(inst, precoder, scheme, &tx, &rx).ok_or_else(|| {
                Error::PricingInconclusive(format!(
                    "MIP returned tx={tx:?} rx={rx:?}, which fails the closed-form feasibility check"
                ))
            })?;
            Ok(PricingOptimum {
                value: duals.value(&cset),
                cset: Some(cset),
                status,
            })
        }
    }
}

/// Column-generation pricing step: an improving set with price above
/// `1 + eps_rc`, or `None` when no such set exists.
pub fn solve_pricing(
    inst: &Instance,
    precoder: Precoder,
    scheme: PowerScheme,
    duals: &DualPrices,
    opts: &PricingOptions,
) -> Result<Option<Candidate>, Error> {
    let floor = 1.0 + opts.eps_rc;
    let best = price_optimum(inst, precoder, scheme, duals, opts.engine, Some(floor), opts.time_limit)?;
    match best.cset {
        Some(cset) if best.value > floor => {
            debug!("pricing found B = {:.6} with {} members", best.value, cset.members().len());
            Ok(Some(Candidate {
                price: best.value,
                cset,
                status: best.status,
            }))
        }
        _ if best.status == PricingStatus::Unproven => Err(Error::PricingInconclusive(
            "limit reached without an improving set or a proof that none exists".into(),
        )),
        _ => Ok(None),
    }
}
