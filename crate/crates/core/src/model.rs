//! System parameters, devices and effective SINR evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Linear precoding / combining scheme used at the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precoder {
    /// Maximum ratio combining / transmission.
    Mrc,
    /// Zero forcing.
    Zf,
}

impl Precoder {
    pub const ALL: [Precoder; 2] = [Precoder::Mrc, Precoder::Zf];

    pub fn name(self) -> &'static str {
        match self {
            Precoder::Mrc => "mrc",
            Precoder::Zf => "zf",
        }
    }
}

impl fmt::Display for Precoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "mrc" => Ok(Precoder::Mrc),
            "zf" => Ok(Precoder::Zf),
            _ => Err(Error::Parse(format!("unknown precoder `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// Coherence-block dimensions, kept for reporting only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMeta {
    pub duration_s: f64,
    pub bandwidth_hz: f64,
    pub samples: u32,
    pub pilot_samples: u32,
    pub uplink_samples: u32,
    pub downlink_samples: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub num_antennas: u32,
    /// Uplink SNR, linear scale.
    pub uplink_snr: f64,
    /// Downlink SNR, linear scale.
    pub downlink_snr: f64,
    pub pilot_len: u32,
    pub num_pilots: u32,
    pub pathloss_exp: f64,
    pub ref_dist: f64,
    /// With perfect CSI the channel estimate equals the channel gain.
    pub perfect_csi: bool,
    pub block_meta: Option<BlockMeta>,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            num_antennas: 100,
            uplink_snr: 10.0,
            downlink_snr: 10.0,
            pilot_len: 1,
            num_pilots: 12,
            pathloss_exp: 3.7,
            ref_dist: 200.0,
            perfect_csi: false,
            block_meta: None,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.num_pilots < 1 || self.num_antennas < self.num_pilots {
            return Err(Error::InvalidInstance(format!(
                "need M >= P >= 1, got M={} P={}",
                self.num_antennas, self.num_pilots
            )));
        }
        if self.pilot_len < 1 {
            return Err(Error::InvalidInstance("pilot length must be positive".into()));
        }
        for (name, v) in [
            ("uplink SNR", self.uplink_snr),
            ("downlink SNR", self.downlink_snr),
            ("path loss exponent", self.pathloss_exp),
            ("reference distance", self.ref_dist),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInstance(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(b) = &self.block_meta {
            if b.samples != b.pilot_samples + b.uplink_samples + b.downlink_samples {
                return Err(Error::InvalidInstance(
                    "block samples must equal pilot + uplink + downlink samples".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub id: usize,
    /// Distance to the base station in meters, when the gain was derived from it.
    pub dist: Option<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub up_demand: u32,
    pub down_demand: u32,
    /// SINR threshold, linear scale.
    pub sinr_threshold: f64,
}

impl Device {
    /// Builds a device from its large-scale gain, deriving the channel estimate quality.
    pub fn from_beta(id: usize, beta: f64, up: u32, down: u32, mu: f64, params: &SystemParams) -> Result<Self, Error> {
        Ok(Self {
            id,
            dist: None,
            beta,
            gamma: channel_gamma(beta, params)?,
            up_demand: up,
            down_demand: down,
            sinr_threshold: mu,
        })
    }

    pub fn from_distance(id: usize, dist: f64, up: u32, down: u32, mu: f64, params: &SystemParams) -> Result<Self, Error> {
        let beta = path_loss_beta(dist, params)?;
        let mut d = Self::from_beta(id, beta, up, down, mu, params)?;
        d.dist = Some(dist);
        Ok(d)
    }

    pub fn demand(&self, dir: Direction) -> u32 {
        match dir {
            Direction::Up => self.up_demand,
            Direction::Down => self.down_demand,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub params: SystemParams,
    pub devices: Vec<Device>,
}

impl Instance {
    pub fn new(params: SystemParams, devices: Vec<Device>) -> Result<Self, Error> {
        let inst = Self { params, devices };
        inst.validate()?;
        Ok(inst)
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.params.validate()?;
        if self.devices.is_empty() {
            return Err(Error::InvalidInstance("instance has no devices".into()));
        }
        for (k, d) in self.devices.iter().enumerate() {
            if d.id != k {
                return Err(Error::InvalidInstance(format!("device at position {k} has id {}", d.id)));
            }
            if !(d.beta.is_finite() && d.beta > 0.0) {
                return Err(Error::InvalidInstance(format!("device {k}: beta must be positive")));
            }
            if !(d.gamma > 0.0 && d.gamma <= d.beta) {
                return Err(Error::InvalidInstance(format!("device {k}: need 0 < gamma <= beta")));
            }
            if !(d.sinr_threshold.is_finite() && d.sinr_threshold > 0.0) {
                return Err(Error::InvalidInstance(format!("device {k}: SINR threshold must be positive")));
            }
            if d.up_demand + d.down_demand == 0 {
                return Err(Error::InvalidInstance(format!("device {k} has no demand")));
            }
        }
        Ok(())
    }

    /// Sum of per-device demands in both directions.
    pub fn total_demand(&self) -> u64 {
        self.devices.iter().map(|d| u64::from(d.up_demand + d.down_demand)).sum()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Large-scale gain `(r / R)^-alpha` of a device at distance `r`.
pub fn path_loss_beta(r: f64, params: &SystemParams) -> Result<f64, Error> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {r}")));
    }
    Ok((r / params.ref_dist).powf(-params.pathloss_exp))
}

/// Mean-square channel estimate `S rho beta^2 / (1 + S rho beta)`, or `beta`
/// with perfect CSI.
pub fn channel_gamma(beta: f64, params: &SystemParams) -> Result<f64, Error> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("channel gain must be non-negative, got {beta}")));
    }
    if params.perfect_csi {
        return Ok(beta);
    }
    let s = f64::from(params.pilot_len) * params.uplink_snr;
    Ok(s * beta * beta / (1.0 + s * beta))
}

/// Effective SINR of device `k` when `active_tx` transmit on the uplink and
/// `active_rx` receive on the downlink.
///
/// Power vectors are indexed by device id and must cover all devices. Only
/// active devices contribute interference; for zero forcing the array gain is
/// `M - L` with `L` the number of devices active in the same direction.
#[allow(clippy::too_many_arguments)]
pub fn effective_sinr(
    inst: &Instance,
    precoder: Precoder,
    direction: Direction,
    active_tx: &[usize],
    active_rx: &[usize],
    eta_up: &[f64],
    eta_down: &[f64],
    k: usize,
) -> Result<f64, Error> {
    let active = match direction {
        Direction::Up => active_tx,
        Direction::Down => active_rx,
    };
    if !active.contains(&k) {
        return Err(Error::Precondition(format!("device {k} is not active in the {direction:?} direction")));
    }
    let gain = array_gain(inst, precoder, active.len())?;
    let devs = &inst.devices;
    let dk = &devs[k];
    Ok(match direction {
        Direction::Up => {
            let rho = inst.params.uplink_snr;
            let interference: f64 = active_tx
                .iter()
                .map(|&j| residual_gain(precoder, &devs[j]) * eta_up[j])
                .sum();
            gain * rho * dk.gamma * eta_up[k] / (1.0 + rho * interference)
        }
        Direction::Down => {
            let rho = inst.params.downlink_snr;
            let total: f64 = active_rx.iter().map(|&j| eta_down[j]).sum();
            gain * rho * dk.gamma * eta_down[k] / (1.0 + rho * residual_gain(precoder, dk) * total)
        }
    })
}

/// `M` for MRC, `M - L` for ZF with `L` simultaneously active devices.
pub fn array_gain(inst: &Instance, precoder: Precoder, active: usize) -> Result<f64, Error> {
    let m = inst.params.num_antennas as usize;
    match precoder {
        Precoder::Mrc => Ok(m as f64),
        Precoder::Zf => {
            if active >= m {
                return Err(Error::Model(format!("zero forcing needs more antennas ({m}) than active devices ({active})")));
            }
            Ok((m - active) as f64)
        }
    }
}

/// The part of a device's gain that leaks as interference: `beta` under MRC,
/// the estimation error `beta - gamma` under ZF.
pub fn residual_gain(precoder: Precoder, d: &Device) -> f64 {
    match precoder {
        Precoder::Mrc => d.beta,
        Precoder::Zf => d.beta - d.gamma,
    }
}

/// A set of devices that can share one coherence block, with their power
/// coefficients. `eta_up[i]` belongs to `tx[i]` and `eta_down[i]` to `rx[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibleSet {
    pub tx: Vec<usize>,
    pub rx: Vec<usize>,
    pub eta_up: Vec<f64>,
    pub eta_down: Vec<f64>,
}

impl CompatibleSet {
    /// Builds a set with sorted members; coefficient vectors are indexed by device id.
    pub fn from_dense(tx: &[usize], rx: &[usize], eta_up: &[f64], eta_down: &[f64]) -> Self {
        let mut tx = tx.to_vec();
        let mut rx = rx.to_vec();
        tx.sort_unstable();
        rx.sort_unstable();
        let eu = tx.iter().map(|&k| eta_up[k]).collect();
        let ed = rx.iter().map(|&k| eta_down[k]).collect();
        Self {
            tx,
            rx,
            eta_up: eu,
            eta_down: ed,
        }
    }

    /// Devices holding a pilot: the union of transmitters and receivers.
    pub fn members(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.tx.iter().chain(&self.rx).copied().collect();
        m.sort_unstable();
        m.dedup();
        m
    }

    pub fn is_empty(&self) -> bool {
        self.tx.is_empty() && self.rx.is_empty()
    }

    pub fn dense_up(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; k];
        for (&d, &e) in self.tx.iter().zip(&self.eta_up) {
            v[d] = e;
        }
        v
    }

    pub fn dense_down(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; k];
        for (&d, &e) in self.rx.iter().zip(&self.eta_down) {
            v[d] = e;
        }
        v
    }

    pub fn up_power(&self, k: usize) -> f64 {
        self.tx.iter().position(|&d| d == k).map_or(0.0, |i| self.eta_up[i])
    }

    pub fn down_power(&self, k: usize) -> f64 {
        self.rx.iter().position(|&d| d == k).map_or(0.0, |i| self.eta_down[i])
    }

    /// Sum of all power coefficients of the set.
    pub fn total_power(&self) -> f64 {
        self.eta_up.iter().sum::<f64>() + self.eta_down.iter().sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_device(beta: f64) -> Instance {
        let p = SystemParams::default();
        let d = Device::from_beta(0, beta, 1, 1, 1.0, &p).unwrap();
        Instance::new(p, vec![d]).unwrap()
    }

    #[test]
    fn beta_at_reference_distance_is_one() {
        assert_eq!(path_loss_beta(200.0, &SystemParams::default()).unwrap(), 1.0);
        assert!(path_loss_beta(0.0, &SystemParams::default()).is_err());
    }

    #[test]
    fn gamma_formula() {
        let p = SystemParams::default();
        assert_eq!(channel_gamma(0.0, &p).unwrap(), 0.0);
        assert!((channel_gamma(1.0, &p).unwrap() - 10.0 / 11.0).abs() < 1e-15);
        assert!(channel_gamma(-1.0, &p).is_err());
        let perfect = SystemParams {
            perfect_csi: true,
            ..p
        };
        assert_eq!(channel_gamma(3.0, &perfect).unwrap(), 3.0);
    }

    #[test]
    fn single_device_sinrs() {
        let inst = one_device(1.0);
        let g = 10.0 / 11.0;
        let up = [1.0];
        let mrc = effective_sinr(&inst, Precoder::Mrc, Direction::Up, &[0], &[], &up, &[0.0], 0).unwrap();
        assert!((mrc - 1000.0 * g / 11.0).abs() < 1e-9);
        let zf = effective_sinr(&inst, Precoder::Zf, Direction::Up, &[0], &[], &up, &[0.0], 0).unwrap();
        assert!((zf - 99.0 * 10.0 * g / (1.0 + 10.0 * (1.0 - g))).abs() < 1e-9);
        let off = effective_sinr(&inst, Precoder::Mrc, Direction::Down, &[], &[0], &up, &[0.0], 0).unwrap();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn inactive_device_is_rejected() {
        let inst = one_device(1.0);
        let r = effective_sinr(&inst, Precoder::Mrc, Direction::Up, &[], &[0], &[1.0], &[1.0], 0);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn zf_needs_spare_antennas() {
        let mut p = SystemParams::default();
        p.num_antennas = 1;
        p.num_pilots = 1;
        let d = Device::from_beta(0, 1.0, 1, 0, 1.0, &p).unwrap();
        let inst = Instance::new(p, vec![d]).unwrap();
        let r = effective_sinr(&inst, Precoder::Zf, Direction::Up, &[0], &[], &[1.0], &[0.0], 0);
        assert!(matches!(r, Err(Error::Model(_))));
    }

    #[test]
    fn instance_validation() {
        let p = SystemParams::default();
        let mut d = Device::from_beta(0, 1.0, 0, 0, 1.0, &p).unwrap();
        assert!(Instance::new(p.clone(), vec![d.clone()]).is_err());
        d.up_demand = 1;
        d.id = 3;
        assert!(Instance::new(p.clone(), vec![d]).is_err());
        assert!(Instance::new(p, vec![]).is_err());
    }
}
