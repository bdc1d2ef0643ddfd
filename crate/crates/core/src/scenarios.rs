//! The experiment and scenario library used in the evaluation.
//!
//! Devices are split into a near and a far group placed at fixed distances.
//! Near devices come first in id order.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{Device, Instance, SystemParams};

/// SINR thresholds swept in experiment 4.
pub const MU_SWEEP: [f64; 11] = [1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0];

/// Device counts swept in experiment 5.
pub const K_SWEEP: [usize; 10] = [4, 8, 12, 16, 20, 24, 28, 32, 36, 40];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: u8,
    pub near_dist: f64,
    pub far_dist: f64,
    pub num_near: usize,
    pub num_far: usize,
    /// Common SINR threshold, linear scale.
    pub mu: f64,
}

impl ExperimentConfig {
    /// Default configuration of an experiment. Experiments 4 and 5 start at
    /// the first point of their sweep; see [`ExperimentConfig::with_mu`] and
    /// [`ExperimentConfig::with_devices`].
    pub fn new(id: u8) -> Result<Self, Error> {
        let (near_dist, far_dist, k) = match id {
            1 => (50.0, 200.0, 40),
            2 => (200.0, 400.0, 40),
            3 => (50.0, 100.0, 40),
            4 => (50.0, 100.0, 20),
            5 => (50.0, 100.0, K_SWEEP[0]),
            6 => (50.0, 500.0, 40),
            _ => return Err(Error::Domain(format!("unknown experiment {id}, expected 1..=6"))),
        };
        let mut cfg = Self {
            id,
            near_dist,
            far_dist,
            num_near: 0,
            num_far: 0,
            mu: 1.0,
        };
        cfg.set_devices(k);
        Ok(cfg)
    }

    fn set_devices(&mut self, k: usize) {
        self.num_near = if self.id == 6 { k / 5 } else { k / 2 };
        self.num_far = k - self.num_near;
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    /// Sets the total device count, keeping the group proportions.
    pub fn with_devices(mut self, k: usize) -> Self {
        self.set_devices(k);
        self
    }

    pub fn num_devices(&self) -> usize {
        self.num_near + self.num_far
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u8,
    pub near_up: u32,
    pub near_down: u32,
    pub far_up: u32,
    pub far_down: u32,
}

impl ScenarioSpec {
    pub fn new(id: u8) -> Result<Self, Error> {
        let (near_up, near_down, far_up, far_down) = match id {
            1 => (10, 10, 2, 2),
            2 => (2, 2, 10, 10),
            3 => (2, 10, 10, 2),
            4 => (10, 2, 2, 10),
            5 => (10, 2, 10, 2),
            6 => (2, 10, 2, 10),
            _ => return Err(Error::Domain(format!("unknown scenario {id}, expected 1..=6"))),
        };
        Ok(Self {
            id,
            near_up,
            near_down,
            far_up,
            far_down,
        })
    }
}

/// Builds the instance for an experiment and scenario with default system parameters.
pub fn build_instance(exp: &ExperimentConfig, sc: &ScenarioSpec) -> Result<Instance, Error> {
    build_instance_with(exp, sc, SystemParams::default())
}

pub fn build_instance_with(exp: &ExperimentConfig, sc: &ScenarioSpec, params: SystemParams) -> Result<Instance, Error> {
    if exp.num_devices() == 0 {
        return Err(Error::InvalidInstance("experiment has no devices".into()));
    }
    let mut devices = Vec::with_capacity(exp.num_devices());
    for i in 0..exp.num_near {
        devices.push(Device::from_distance(i, exp.near_dist, sc.near_up, sc.near_down, exp.mu, &params)?);
    }
    for i in 0..exp.num_far {
        let id = exp.num_near + i;
        devices.push(Device::from_distance(id, exp.far_dist, sc.far_up, sc.far_down, exp.mu, &params)?);
    }
    Instance::new(params, devices)
}

/// Convenience wrapper: default configuration of experiment `exp`, scenario `sc`.
pub fn experiment_instance(exp: u8, sc: u8) -> Result<Instance, Error> {
    build_instance(&ExperimentConfig::new(exp)?, &ScenarioSpec::new(sc)?)
}
