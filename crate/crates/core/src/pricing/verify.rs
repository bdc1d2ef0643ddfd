use std::fmt;

use crate::model::{effective_sinr, CompatibleSet, Direction, Instance, Precoder};
use crate::powerctl::{resolve_power, PowerScheme};

/// Relative slack on SINR thresholds accepted by [`verify_candidate`].
pub const VERIFY_SINR_TOL: f64 = 1e-6;
const POWER_SLACK: f64 = 1e-9;
const SCHEME_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Malformed(String),
    Pilots { used: usize, limit: usize },
    UplinkPower { device: usize, eta: f64 },
    DownlinkBudget { total: f64 },
    Sinr { device: usize, direction: Direction, sinr: f64, threshold: f64 },
    /// Coefficients differ from what the power scheme prescribes.
    Scheme { device: usize, direction: Direction, expected: f64, got: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Malformed(s) => write!(f, "malformed set: {s}"),
            Violation::Pilots { used, limit } => write!(f, "{used} members exceed {limit} pilots"),
            Violation::UplinkPower { device, eta } => write!(f, "device {device} uplink coefficient {eta} outside [0, 1]"),
            Violation::DownlinkBudget { total } => write!(f, "downlink coefficients sum to {total}"),
            Violation::Sinr {
                device,
                direction,
                sinr,
                threshold,
            } => write!(f, "device {device} {direction:?} SINR {sinr:.6} below threshold {threshold:.6}"),
            Violation::Scheme {
                device,
                direction,
                expected,
                got,
            } => write!(f, "device {device} {direction:?} coefficient {got} differs from scheme value {expected}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
    /// Smallest ratio SINR / threshold over the active members.
    pub min_margin: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-evaluates a compatible set from scratch: membership, pilot and power
/// budgets, the scheme's prescribed coefficients, and every active member's
/// effective SINR.
pub fn verify_candidate(inst: &Instance, precoder: Precoder, scheme: PowerScheme, c: &CompatibleSet) -> VerifyReport {
    let mut v = Vec::new();
    let k = inst.num_devices();
    let mut report = VerifyReport {
        violations: Vec::new(),
        min_margin: f64::INFINITY,
    };
    if c.is_empty() {
        v.push(Violation::Malformed("no members".into()));
    }
    if c.tx.len() != c.eta_up.len() || c.rx.len() != c.eta_down.len() {
        v.push(Violation::Malformed("coefficient count does not match membership".into()));
    }
    for list in [&c.tx, &c.rx] {
        if list.windows(2).any(|w| w[0] >= w[1]) || list.iter().any(|&d| d >= k) {
            v.push(Violation::Malformed("member ids must be sorted, unique and valid".into()));
        }
    }
    if !v.is_empty() {
        report.violations = v;
        return report;
    }
    let members = c.members().len();
    let limit = inst.params.num_pilots as usize;
    if members > limit {
        v.push(Violation::Pilots { used: members, limit });
    }
    for (&d, &e) in c.tx.iter().zip(&c.eta_up) {
        if !(0.0..=1.0 + POWER_SLACK).contains(&e) {
            v.push(Violation::UplinkPower { device: d, eta: e });
        }
    }
    let total: f64 = c.eta_down.iter().sum();
    if total > 1.0 + POWER_SLACK || c.eta_down.iter().any(|e| *e < 0.0) {
        v.push(Violation::DownlinkBudget { total });
    }

    if let Ok(pv) = resolve_power(scheme, inst, c, precoder) {
        if scheme != PowerScheme::Optimal {
            // resolve_power already forces full uplink power for the downlink-only scheme.
            for (&d, &e) in c.tx.iter().zip(&c.eta_up) {
                if (pv.up[d] - e).abs() > SCHEME_TOL {
                    v.push(Violation::Scheme {
                        device: d,
                        direction: Direction::Up,
                        expected: pv.up[d],
                        got: e,
                    });
                }
            }
        }
        if matches!(scheme, PowerScheme::Fair | PowerScheme::Static) {
            for (&d, &e) in c.rx.iter().zip(&c.eta_down) {
                if (pv.down[d] - e).abs() > SCHEME_TOL {
                    v.push(Violation::Scheme {
                        device: d,
                        direction: Direction::Down,
                        expected: pv.down[d],
                        got: e,
                    });
                }
            }
        }
    }

    let up = c.dense_up(k);
    let down = c.dense_down(k);
    for (dir, list) in [(Direction::Up, &c.tx), (Direction::Down, &c.rx)] {
        for &d in list.iter() {
            let threshold = inst.devices[d].sinr_threshold;
            match effective_sinr(inst, precoder, dir, &c.tx, &c.rx, &up, &down, d) {
                Ok(s) => {
                    report.min_margin = report.min_margin.min(s / threshold);
                    if s < threshold * (1.0 - VERIFY_SINR_TOL) {
                        v.push(Violation::Sinr {
                            device: d,
                            direction: dir,
                            sinr: s,
                            threshold,
                        });
                    }
                }
                Err(e) => v.push(Violation::Malformed(e.to_string())),
            }
        }
    }
    report.violations = v;
    report
}
