//! Power control schemes and the closed-form power coefficients they induce.
//!
//! Uplink quantities depend only on the transmitter set and downlink
//! quantities only on the receiver set, so every scheme is evaluated one
//! direction at a time. Vectors named `*_aligned` follow the order of the
//! member slice they were computed for; [`PowerVector`] is dense by device id.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{array_gain, residual_gain, CompatibleSet, Instance, Precoder};

/// Relative slack accepted on SINR thresholds by the closed-form checks.
pub const SINR_REL_TOL: f64 = 1e-9;
/// Absolute slack accepted on the unit power limits.
pub const POWER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerScheme {
    /// Coefficients optimized jointly with the set composition.
    Optimal,
    /// Max-min fair coefficients computed over the set's members.
    Fair,
    /// Fixed coefficients `min gamma / gamma(k)` over all devices.
    Static,
    /// Full uplink power, optimized downlink coefficients.
    Downlink,
}

impl PowerScheme {
    pub const ALL: [PowerScheme; 4] = [
        PowerScheme::Optimal,
        PowerScheme::Fair,
        PowerScheme::Static,
        PowerScheme::Downlink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PowerScheme::Optimal => "optimal",
            PowerScheme::Fair => "fair",
            PowerScheme::Static => "static",
            PowerScheme::Downlink => "downlink",
        }
    }

    /// True when every transmitter uses full uplink power.
    pub fn uplink_fixed_full(self) -> bool {
        self == PowerScheme::Downlink
    }
}

impl fmt::Display for PowerScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PowerScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "optimal" => Ok(PowerScheme::Optimal),
            "fair" => Ok(PowerScheme::Fair),
            "static" => Ok(PowerScheme::Static),
            "downlink" => Ok(PowerScheme::Downlink),
            _ => Err(Error::Parse(format!("unknown power scheme `{s}`"))),
        }
    }
}

/// Uplink and downlink coefficients indexed by device id.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

impl PowerVector {
    pub fn zeros(k: usize) -> Self {
        Self {
            up: vec![0.0; k],
            down: vec![0.0; k],
        }
    }
}

/// Max-min fair uplink coefficients `phi / gamma(k)` for every device, where
/// `phi` is the smallest channel estimate among `active_tx` (zero if empty).
/// Devices outside the set may get coefficients above one; they are unused.
pub fn fair_uplink(inst: &Instance, active_tx: &[usize]) -> Vec<f64> {
    let phi = active_tx
        .iter()
        .map(|&k| inst.devices[k].gamma)
        .fold(f64::INFINITY, f64::min);
    if !phi.is_finite() {
        return vec![0.0; inst.num_devices()];
    }
    inst.devices.iter().map(|d| phi / d.gamma).collect()
}

/// Max-min fair downlink coefficients; zero outside `active_rx`. They sum to
/// one and give every receiver the same SINR.
pub fn fair_downlink(inst: &Instance, active_rx: &[usize], precoder: Precoder) -> Vec<f64> {
    let mut eta = vec![0.0; inst.num_devices()];
    if active_rx.is_empty() {
        return eta;
    }
    let rho = inst.params.downlink_snr;
    let a = fair_downlink_denominator(inst, active_rx, precoder);
    for &k in active_rx {
        let d = &inst.devices[k];
        eta[k] = (1.0 + rho * residual_gain(precoder, d)) / (rho * d.gamma * a);
    }
    eta
}

/// `(1/rho) sum 1/gamma + sum residual/gamma` over the receivers.
fn fair_downlink_denominator(inst: &Instance, active_rx: &[usize], precoder: Precoder) -> f64 {
    let rho = inst.params.downlink_snr;
    active_rx
        .iter()
        .map(|&k| {
            let d = &inst.devices[k];
            (1.0 / rho + residual_gain(precoder, d)) / d.gamma
        })
        .sum()
}

/// Static coefficients `min gamma / gamma(k)` over the whole instance, used in
/// both directions.
pub fn static_coeffs(inst: &Instance) -> PowerVector {
    let g_min = inst.devices.iter().map(|d| d.gamma).fold(f64::INFINITY, f64::min);
    let c: Vec<f64> = inst.devices.iter().map(|d| g_min / d.gamma).collect();
    PowerVector { up: c.clone(), down: c }
}

/// Uplink SINRs of `tx` under `eta_aligned`, or `None` when the array gain is undefined.
pub fn uplink_sinrs(inst: &Instance, precoder: Precoder, tx: &[usize], eta_aligned: &[f64]) -> Option<Vec<f64>> {
    let gain = array_gain(inst, precoder, tx.len()).ok()?;
    let rho = inst.params.uplink_snr;
    let interference: f64 = tx
        .iter()
        .zip(eta_aligned)
        .map(|(&k, e)| residual_gain(precoder, &inst.devices[k]) * e)
        .sum();
    let den = 1.0 + rho * interference;
    Some(
        tx.iter()
            .zip(eta_aligned)
            .map(|(&k, e)| gain * rho * inst.devices[k].gamma * e / den)
            .collect(),
    )
}

/// Downlink SINRs of `rx` under `eta_aligned`.
pub fn downlink_sinrs(inst: &Instance, precoder: Precoder, rx: &[usize], eta_aligned: &[f64]) -> Option<Vec<f64>> {
    let gain = array_gain(inst, precoder, rx.len()).ok()?;
    let rho = inst.params.downlink_snr;
    let total: f64 = eta_aligned.iter().sum();
    Some(
        rx.iter()
            .zip(eta_aligned)
            .map(|(&k, e)| {
                let d = &inst.devices[k];
                gain * rho * d.gamma * e / (1.0 + rho * residual_gain(precoder, d) * total)
            })
            .collect(),
    )
}

fn meets_thresholds(inst: &Instance, members: &[usize], sinr: &[f64]) -> bool {
    members
        .iter()
        .zip(sinr)
        .all(|(&k, s)| *s >= inst.devices[k].sinr_threshold * (1.0 - SINR_REL_TOL))
}

/// Smallest uplink coefficients meeting every threshold in `tx`, if any
/// coefficients within `[0, 1]` do.
pub fn min_power_uplink(inst: &Instance, precoder: Precoder, tx: &[usize]) -> Option<Vec<f64>> {
    if tx.is_empty() {
        return Some(Vec::new());
    }
    let g = array_gain(inst, precoder, tx.len()).ok()?;
    let rho = inst.params.uplink_snr;
    let a: f64 = tx
        .iter()
        .map(|&k| {
            let d = &inst.devices[k];
            d.sinr_threshold * residual_gain(precoder, d) / (g * d.gamma)
        })
        .sum();
    if a >= 1.0 {
        return None;
    }
    let mut eta = Vec::with_capacity(tx.len());
    for &k in tx {
        let d = &inst.devices[k];
        let e = d.sinr_threshold / (g * rho * d.gamma * (1.0 - a));
        if e > 1.0 + POWER_TOL {
            return None;
        }
        eta.push(e.min(1.0));
    }
    Some(eta)
}

/// Smallest downlink coefficients meeting every threshold in `rx` with a
/// total of at most one, if any exist.
pub fn min_power_downlink(inst: &Instance, precoder: Precoder, rx: &[usize]) -> Option<Vec<f64>> {
    if rx.is_empty() {
        return Some(Vec::new());
    }
    let g = array_gain(inst, precoder, rx.len()).ok()?;
    let rho = inst.params.downlink_snr;
    let (mut a, mut b) = (0.0, 0.0);
    for &k in rx {
        let d = &inst.devices[k];
        a += d.sinr_threshold / (g * rho * d.gamma);
        b += d.sinr_threshold * residual_gain(precoder, d) / (g * d.gamma);
    }
    if a + b > 1.0 + POWER_TOL || b >= 1.0 {
        return None;
    }
    let total = a / (1.0 - b);
    Some(
        rx.iter()
            .map(|&k| {
                let d = &inst.devices[k];
                d.sinr_threshold * (1.0 + rho * residual_gain(precoder, d) * total) / (g * rho * d.gamma)
            })
            .collect(),
    )
}

/// Uplink coefficients the scheme assigns to `tx`, or `None` if some
/// transmitter then misses its threshold.
pub fn uplink_powers(inst: &Instance, precoder: Precoder, scheme: PowerScheme, tx: &[usize]) -> Option<Vec<f64>> {
    if tx.is_empty() {
        return Some(Vec::new());
    }
    let eta: Vec<f64> = match scheme {
        PowerScheme::Optimal => return min_power_uplink(inst, precoder, tx),
        PowerScheme::Downlink => vec![1.0; tx.len()],
        PowerScheme::Fair => {
            let phi = tx.iter().map(|&k| inst.devices[k].gamma).fold(f64::INFINITY, f64::min);
            tx.iter().map(|&k| phi / inst.devices[k].gamma).collect()
        }
        PowerScheme::Static => {
            let s = static_coeffs(inst);
            tx.iter().map(|&k| s.up[k]).collect()
        }
    };
    let sinr = uplink_sinrs(inst, precoder, tx, &eta)?;
    meets_thresholds(inst, tx, &sinr).then_some(eta)
}

/// Downlink coefficients the scheme assigns to `rx`, or `None` if infeasible.
pub fn downlink_powers(inst: &Instance, precoder: Precoder, scheme: PowerScheme, rx: &[usize]) -> Option<Vec<f64>> {
    if rx.is_empty() {
        return Some(Vec::new());
    }
    let eta: Vec<f64> = match scheme {
        PowerScheme::Optimal | PowerScheme::Downlink => return min_power_downlink(inst, precoder, rx),
        PowerScheme::Fair => {
            let dense = fair_downlink(inst, rx, precoder);
            rx.iter().map(|&k| dense[k]).collect()
        }
        PowerScheme::Static => {
            let s = static_coeffs(inst);
            let eta: Vec<f64> = rx.iter().map(|&k| s.down[k]).collect();
            if eta.iter().sum::<f64>() > 1.0 + POWER_TOL {
                return None;
            }
            eta
        }
    };
    let sinr = downlink_sinrs(inst, precoder, rx, &eta)?;
    meets_thresholds(inst, rx, &sinr).then_some(eta)
}

/// Coefficients a compatible set runs with under `scheme`.
///
/// Optimized schemes keep the set's own coefficients after a range check;
/// the downlink-only scheme forces full uplink power; fair and static
/// coefficients are recomputed from the membership.
pub fn resolve_power(scheme: PowerScheme, inst: &Instance, c: &CompatibleSet, precoder: Precoder) -> Result<PowerVector, Error> {
    let k = inst.num_devices();
    let mut pv = PowerVector::zeros(k);
    match scheme {
        PowerScheme::Optimal | PowerScheme::Downlink => {
            for (&d, &e) in c.tx.iter().zip(&c.eta_up) {
                pv.up[d] = if scheme.uplink_fixed_full() { 1.0 } else { e };
            }
            for (&d, &e) in c.rx.iter().zip(&c.eta_down) {
                pv.down[d] = e;
            }
        }
        PowerScheme::Fair => {
            let up = fair_uplink(inst, &c.tx);
            for &d in &c.tx {
                pv.up[d] = up[d];
            }
            pv.down = fair_downlink(inst, &c.rx, precoder);
        }
        PowerScheme::Static => {
            let s = static_coeffs(inst);
            for &d in &c.tx {
                pv.up[d] = s.up[d];
            }
            for &d in &c.rx {
                pv.down[d] = s.down[d];
            }
        }
    }
    for &d in &c.tx {
        let e = pv.up[d];
        if !(0.0..=1.0 + POWER_TOL).contains(&e) {
            return Err(Error::InfeasiblePower(format!("uplink coefficient {e} for device {d}")));
        }
    }
    let total: f64 = c.rx.iter().map(|&d| pv.down[d]).sum();
    if c.rx.iter().any(|&d| pv.down[d] < 0.0) || total > 1.0 + POWER_TOL {
        return Err(Error::InfeasiblePower(format!("downlink coefficients sum to {total}")));
    }
    Ok(pv)
}

/// The compatible set the scheme induces on `(tx, rx)`, if it is feasible.
pub fn scheme_set(inst: &Instance, precoder: Precoder, scheme: PowerScheme, tx: &[usize], rx: &[usize]) -> Option<CompatibleSet> {
    if tx.is_empty() && rx.is_empty() {
        return None;
    }
    let mut tx = tx.to_vec();
    let mut rx = rx.to_vec();
    tx.sort_unstable();
    rx.sort_unstable();
    let up = uplink_powers(inst, precoder, scheme, &tx)?;
    let down = downlink_powers(inst, precoder, scheme, &rx)?;
    Some(CompatibleSet {
        tx,
        rx,
        eta_up: up,
        eta_down: down,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Device, SystemParams};

    fn inst_with_gammas(gammas: &[f64]) -> Instance {
        let p = SystemParams::default();
        let devices = gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| Device {
                id: i,
                dist: None,
                beta: g * 2.0,
                gamma: g,
                up_demand: 1,
                down_demand: 1,
                sinr_threshold: 1.0,
            })
            .collect();
        Instance::new(p, devices).unwrap()
    }

    #[test]
    fn fair_uplink_examples() {
        let inst = inst_with_gammas(&[0.5, 0.1]);
        let eta = fair_uplink(&inst, &[0, 1]);
        assert!((eta[0] - 0.2).abs() < 1e-15);
        assert_eq!(eta[1], 1.0);
        assert_eq!(fair_uplink(&inst, &[]), vec![0.0, 0.0]);
        let same = inst_with_gammas(&[0.3, 0.3, 0.3]);
        assert_eq!(fair_uplink(&same, &[0, 2]), vec![1.0; 3]);
    }

    #[test]
    fn fair_downlink_single_receiver_gets_everything() {
        let inst = inst_with_gammas(&[0.5, 0.1, 2.0]);
        for p in Precoder::ALL {
            let eta = fair_downlink(&inst, &[1], p);
            assert!((eta[1] - 1.0).abs() < 1e-15);
            assert_eq!(eta[0], 0.0);
        }
    }

    #[test]
    fn static_examples() {
        let inst = inst_with_gammas(&[0.1, 0.5]);
        let s = static_coeffs(&inst);
        assert_eq!(s.up[0], 1.0);
        assert!((s.up[1] - 0.2).abs() < 1e-15);
        assert_eq!(s.up, s.down);
    }

    #[test]
    fn resolve_downlink_forces_full_uplink() {
        let inst = inst_with_gammas(&[0.1, 0.5]);
        let c = CompatibleSet {
            tx: vec![0],
            rx: vec![1],
            eta_up: vec![0.3],
            eta_down: vec![0.4],
        };
        let pv = resolve_power(PowerScheme::Downlink, &inst, &c, Precoder::Mrc).unwrap();
        assert_eq!(pv.up[0], 1.0);
        assert_eq!(pv.down[1], 0.4);
        let over = CompatibleSet {
            eta_down: vec![1.5],
            ..c
        };
        assert!(matches!(
            resolve_power(PowerScheme::Optimal, &inst, &over, Precoder::Mrc),
            Err(Error::InfeasiblePower(_))
        ));
    }

    #[test]
    fn min_power_meets_thresholds_exactly() {
        let inst = inst_with_gammas(&[0.5, 0.1, 2.0]);
        for p in Precoder::ALL {
            let tx = [0, 1, 2];
            let up = min_power_uplink(&inst, p, &tx).unwrap();
            for s in uplink_sinrs(&inst, p, &tx, &up).unwrap() {
                assert!((s - 1.0).abs() < 1e-12, "{s}");
            }
            let down = min_power_downlink(&inst, p, &tx).unwrap();
            for s in downlink_sinrs(&inst, p, &tx, &down).unwrap() {
                assert!((s - 1.0).abs() < 1e-12, "{s}");
            }
        }
    }
}
