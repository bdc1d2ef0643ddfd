//! JSON instance files.
//!
//! ```json
//! {
//!   "params": {"M": 100, "ul_snr_db": 10, "dl_snr_db": 10, "S": 1, "P": 12, "alpha": 3.7, "ref_dist_m": 200},
//!   "devices": [
//!     {"id": 0, "dist_m": 50, "h_up": 10, "h_down": 10, "mu_db": 0},
//!     {"id": 1, "beta": 0.5, "h_up": 2, "h_down": 0, "mu": 1.0}
//!   ]
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{db_to_linear, linear_to_db, BlockMeta, Device, Instance, SystemParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub params: ParamsFile,
    pub devices: Vec<DeviceFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(rename = "M")]
    pub m: u32,
    pub ul_snr_db: f64,
    pub dl_snr_db: f64,
    #[serde(rename = "S")]
    pub s: u32,
    #[serde(rename = "P")]
    pub p: u32,
    pub alpha: f64,
    pub ref_dist_m: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub perfect_csi: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceFile {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub h_up: u32,
    pub h_down: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, Error> {
        let p = self.params;
        let params = SystemParams {
            num_antennas: p.m,
            uplink_snr: db_to_linear(p.ul_snr_db),
            downlink_snr: db_to_linear(p.dl_snr_db),
            pilot_len: p.s,
            num_pilots: p.p,
            pathloss_exp: p.alpha,
            ref_dist: p.ref_dist_m,
            perfect_csi: p.perfect_csi,
            block_meta: p.block,
        };
        params.validate()?;
        let mut devices = Vec::with_capacity(self.devices.len());
        for d in self.devices {
            let mu = match (d.mu, d.mu_db) {
                (Some(m), None) => m,
                (None, Some(db)) => db_to_linear(db),
                (None, None) => 1.0,
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidInstance(format!("device {}: give either mu or mu_db", d.id)));
                }
            };
            let dev = match (d.dist_m, d.beta) {
                (Some(r), None) => Device::from_distance(d.id, r, d.h_up, d.h_down, mu, &params)?,
                (None, Some(b)) => Device::from_beta(d.id, b, d.h_up, d.h_down, mu, &params)?,
                _ => {
                    return Err(Error::InvalidInstance(format!(
                        "device {}: give exactly one of dist_m and beta",
                        d.id
                    )));
                }
            };
            devices.push(dev);
        }
        devices.sort_by_key(|d| d.id);
        Instance::new(params, devices)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let p = &inst.params;
        Self {
            params: ParamsFile {
                m: p.num_antennas,
                ul_snr_db: linear_to_db(p.uplink_snr),
                dl_snr_db: linear_to_db(p.downlink_snr),
                s: p.pilot_len,
                p: p.num_pilots,
                alpha: p.pathloss_exp,
                ref_dist_m: p.ref_dist,
                perfect_csi: p.perfect_csi,
                block: p.block_meta.clone(),
            },
            devices: inst
                .devices
                .iter()
                .map(|d| DeviceFile {
                    id: d.id,
                    dist_m: d.dist,
                    beta: if d.dist.is_some() { None } else { Some(d.beta) },
                    h_up: d.up_demand,
                    h_down: d.down_demand,
                    mu_db: None,
                    mu: Some(d.sinr_threshold),
                })
                .collect(),
        }
    }
}

pub fn parse_instance(json: &str) -> Result<Instance, Error> {
    let f: InstanceFile = serde_json::from_str(json)?;
    f.into_instance()
}

pub fn load_instance(path: &Path) -> Result<Instance, Error> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn instance_to_json(inst: &Instance) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(&InstanceFile::from_instance(inst))?)
}
