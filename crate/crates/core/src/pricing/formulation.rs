//! The pricing problem as a linearized mixed-integer program.
//!
//! Binaries `u_up[k]`, `u_down[k]` select the transmitter and receiver roles
//! and `u[k]` the pilot holders. SINR rows are relaxed by a big-M term when
//! the device is not active in that direction. Products of a power
//! coefficient and a role binary are linearized with McCormick rows. For zero
//! forcing, the array-gain loss `L * eta_k` of device `k` is written as
//! `sum_k' eta_k * u[k']` so the product is taken with the owner's own power.

use std::collections::HashMap;
use std::time::Duration;

use log::{debug, warn};
use mimoframe_milp::{solve_mip, MipOptions, MipProblem, MipSolution, ObjectiveSense, RowSense, VarKind};

use super::search::search_pricing;
use super::DualPrices;
use crate::error::Error;
use crate::model::{residual_gain, Direction, Instance, Precoder};
use crate::powerctl::{downlink_powers, static_coeffs, uplink_powers, PowerScheme};

const PRICE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
enum Pow {
    Var(usize),
    Const(f64),
}

/// A linearized product `eta[owner] * binary`.
#[derive(Debug, Clone, Copy)]
pub struct Product {
    pub var: usize,
    pub eta: usize,
    pub binary: usize,
    pub owner_binary: usize,
}

/// A built pricing MIP together with its variable layout.
#[derive(Debug, Clone)]
pub struct PricingModel {
    pub precoder: Precoder,
    pub scheme: PowerScheme,
    /// Big-M constant of the SINR rows.
    pub delta: f64,
    pub gamma_max: f64,
    pub mu_max: f64,
    pub beta_max: f64,
    pub mip: MipProblem,
    pub u_up: Vec<usize>,
    pub u_down: Vec<usize>,
    pub u: Vec<usize>,
    pub eta_up: Vec<Option<usize>>,
    pub eta_down: Vec<Option<usize>>,
    pub phi: Option<usize>,
    pub z: Vec<Option<usize>>,
    pub y_up: Vec<Option<usize>>,
    pub products: Vec<Product>,
}

struct Builder {
    mip: MipProblem,
    products: Vec<Product>,
    index: HashMap<(Direction, usize, usize), usize>,
}

impl Builder {
    /// Linear expression for `eta[k] * b` where `b` is the role binary of `k2`.
    fn product(&mut self, dir: Direction, eta: Pow, k: usize, k2: usize, binary: usize, owner_binary: usize, eta_ub: f64) -> Vec<(usize, f64)> {
        if self.mip.lp.variables[binary].upper == 0.0 {
            return Vec::new();
        }
        match eta {
            Pow::Const(c) => vec![(binary, c)],
            Pow::Var(e) => {
                if let Some(&p) = self.index.get(&(dir, k, k2)) {
                    return vec![(p, 1.0)];
                }
                let p = self.mip.add_continuous(0.0, eta_ub.min(1.0), 0.0);
                let tag = if dir == Direction::Up { "xu" } else { "xd" };
                self.mip.set_name(p, format!("{tag}{k}_{k2}"));
                self.mip.add_constraint(vec![(p, 1.0), (binary, -1.0)], RowSense::Le, 0.0);
                self.mip.add_constraint(vec![(p, 1.0), (e, -1.0)], RowSense::Le, 0.0);
                // Coefficients above one only occur for inactive owners; relax the
                // lower McCormick row for them.
                let slack = (eta_ub - 1.0).max(0.0);
                let mut row = vec![(p, 1.0), (e, -1.0), (binary, -1.0)];
                if slack > 0.0 {
                    row.push((owner_binary, -slack));
                }
                self.mip.add_constraint(row, RowSense::Ge, -1.0 - slack);
                self.index.insert((dir, k, k2), p);
                self.products.push(Product {
                    var: p,
                    eta: e,
                    binary,
                    owner_binary,
                });
                vec![(p, 1.0)]
            }
        }
    }
}

/// Builds the pricing MIP for the given duals.
///
/// Roles whose dual price is zero, or that are infeasible for the device even
/// alone, are fixed to zero: feasibility is downward closed, so this never
/// removes an optimal solution.
pub fn build_pricing(inst: &Instance, precoder: Precoder, scheme: PowerScheme, duals: &DualPrices) -> Result<PricingModel, Error> {
    duals.validate(inst.num_devices())?;
    let k_n = inst.num_devices();
    let p = &inst.params;
    let m = f64::from(p.num_antennas);
    let (rho_u, rho_d) = (p.uplink_snr, p.downlink_snr);
    let devs = &inst.devices;
    let gamma_max = devs.iter().map(|d| d.gamma).fold(0.0, f64::max);
    let mu_max = devs.iter().map(|d| d.sinr_threshold).fold(0.0, f64::max);
    let beta_max = devs.iter().map(|d| d.beta).fold(0.0, f64::max);
    let statics = static_coeffs(inst);

    let free_up: Vec<bool> = (0..k_n)
        .map(|k| duals.up[k] > PRICE_EPS && uplink_powers(inst, precoder, scheme, &[k]).is_some())
        .collect();
    let free_down: Vec<bool> = (0..k_n)
        .map(|k| duals.down[k] > PRICE_EPS && downlink_powers(inst, precoder, scheme, &[k]).is_some())
        .collect();

    // Big-M: the paper-style constant, enlarged if it fails to dominate the
    // largest right-hand side an inactive device's row can see.
    let cap = |k: usize| if scheme == PowerScheme::Static { statics.up[k] } else { 1.0 };
    let interference_up: f64 = (0..k_n)
        .filter(|&k| free_up[k])
        .map(|k| residual_gain(precoder, &devs[k]) * cap(k))
        .sum();
    let mut required: f64 = 0.0;
    for (k, d) in devs.iter().enumerate() {
        if free_up[k] {
            required = required.max(d.sinr_threshold * (1.0 + rho_u * interference_up));
        }
        if free_down[k] {
            required = required.max(d.sinr_threshold * (1.0 + rho_d * residual_gain(precoder, d)));
        }
    }
    let mut delta = mu_max * (k_n as f64 * rho_u * beta_max + 1.0);
    if delta < required {
        warn!("big-M {delta} does not dominate SINR rows (needs {required}); enlarged");
        delta = required * (1.0 + 1e-6);
    }

    let mut b = Builder {
        mip: MipProblem::new(ObjectiveSense::Maximize),
        products: Vec::new(),
        index: HashMap::new(),
    };
    let mut u_up = Vec::with_capacity(k_n);
    let mut u_down = Vec::with_capacity(k_n);
    let mut u = Vec::with_capacity(k_n);
    for k in 0..k_n {
        let a = b.mip.add_var(VarKind::Binary, 0.0, if free_up[k] { 1.0 } else { 0.0 }, duals.up[k]);
        b.mip.set_name(a, format!("uu{k}"));
        let c = b.mip.add_var(VarKind::Binary, 0.0, if free_down[k] { 1.0 } else { 0.0 }, duals.down[k]);
        b.mip.set_name(c, format!("ud{k}"));
        let x = b.mip.add_binary(0.0);
        b.mip.set_name(x, format!("u{k}"));
        b.mip.add_constraint(vec![(x, 1.0), (a, -1.0)], RowSense::Ge, 0.0);
        b.mip.add_constraint(vec![(x, 1.0), (c, -1.0)], RowSense::Ge, 0.0);
        b.mip.add_constraint(vec![(x, 1.0), (a, -1.0), (c, -1.0)], RowSense::Le, 0.0);
        u_up.push(a);
        u_down.push(c);
        u.push(x);
    }
    b.mip.add_constraint(u.iter().map(|&x| (x, 1.0)).collect(), RowSense::Le, f64::from(p.num_pilots));

    // Uplink power coefficients.
    let mut eta_up: Vec<Option<usize>> = vec![None; k_n];
    let mut eta_up_ub = vec![1.0; k_n];
    let mut phi = None;
    let mut z = vec![None; k_n];
    let mut y_up = vec![None; k_n];
    let up_pow: Vec<Pow> = match scheme {
        PowerScheme::Downlink => vec![Pow::Const(1.0); k_n],
        PowerScheme::Static => statics.up.iter().map(|&s| Pow::Const(s)).collect(),
        PowerScheme::Optimal => (0..k_n)
            .map(|k| {
                if free_up[k] {
                    let e = b.mip.add_continuous(0.0, 1.0, 0.0);
                    b.mip.set_name(e, format!("eu{k}"));
                    eta_up[k] = Some(e);
                    Pow::Var(e)
                } else {
                    Pow::Const(0.0)
                }
            })
            .collect(),
        PowerScheme::Fair => {
            let free: Vec<usize> = (0..k_n).filter(|&k| free_up[k]).collect();
            if free.is_empty() {
                vec![Pow::Const(0.0); k_n]
            } else {
                let f = b.mip.add_continuous(0.0, gamma_max, 0.0);
                b.mip.set_name(f, "phi");
                phi = Some(f);
                let mut pows = vec![Pow::Const(0.0); k_n];
                let mut phi_lower = vec![(f, 1.0)];
                let mut sum_y = Vec::new();
                for &k in &free {
                    let g = devs[k].gamma;
                    let ub = gamma_max / g;
                    let e = b.mip.add_continuous(0.0, ub, 0.0);
                    b.mip.set_name(e, format!("eu{k}"));
                    eta_up[k] = Some(e);
                    eta_up_ub[k] = ub;
                    pows[k] = Pow::Var(e);
                    b.mip.add_constraint(vec![(e, g), (f, -1.0)], RowSense::Eq, 0.0);
                    b.mip.add_constraint(vec![(f, 1.0), (u_up[k], gamma_max - g)], RowSense::Le, gamma_max);
                    let zk = b.mip.add_binary(0.0);
                    b.mip.set_name(zk, format!("z{k}"));
                    let yk = b.mip.add_binary(0.0);
                    b.mip.set_name(yk, format!("yu{k}"));
                    b.mip.add_constraint(vec![(yk, 1.0), (u_up[k], -1.0)], RowSense::Le, 0.0);
                    b.mip.add_constraint(vec![(yk, 1.0), (zk, -1.0)], RowSense::Le, 0.0);
                    b.mip.add_constraint(vec![(yk, 1.0), (u_up[k], -1.0), (zk, -1.0)], RowSense::Ge, -1.0);
                    phi_lower.push((zk, -g));
                    sum_y.push((yk, 1.0));
                    z[k] = Some(zk);
                    y_up[k] = Some(yk);
                }
                b.mip.add_constraint(phi_lower, RowSense::Ge, 0.0);
                b.mip.add_constraint(sum_y.clone(), RowSense::Le, 1.0);
                for &k in &free {
                    let mut row = sum_y.clone();
                    row.push((u_up[k], -1.0));
                    b.mip.add_constraint(row, RowSense::Ge, 0.0);
                }
                pows
            }
        }
    };

    // Downlink power coefficients.
    let mut eta_down: Vec<Option<usize>> = vec![None; k_n];
    let down_pow: Vec<Pow> = match scheme {
        PowerScheme::Static => {
            b.mip.add_constraint(
                (0..k_n).filter(|&k| free_down[k]).map(|k| (u_down[k], statics.down[k])).collect(),
                RowSense::Le,
                1.0,
            );
            statics.down.iter().map(|&s| Pow::Const(s)).collect()
        }
        _ => {
            let mut pows = vec![Pow::Const(0.0); k_n];
            let mut budget = Vec::new();
            for k in (0..k_n).filter(|&k| free_down[k]) {
                let e = b.mip.add_continuous(0.0, 1.0, 0.0);
                b.mip.set_name(e, format!("ed{k}"));
                eta_down[k] = Some(e);
                pows[k] = Pow::Var(e);
                budget.push((e, 1.0));
            }
            if !budget.is_empty() {
                b.mip.add_constraint(budget, RowSense::Le, 1.0);
            }
            pows
        }
    };
    if scheme == PowerScheme::Fair {
        let free: Vec<usize> = (0..k_n).filter(|&k| free_down[k]).collect();
        for &k in &free {
            let dk = &devs[k];
            let mut row = Vec::new();
            for &k2 in &free {
                let d2 = &devs[k2];
                let a = (1.0 / rho_d + residual_gain(precoder, d2)) / d2.gamma;
                for (v, c) in b.product(Direction::Down, down_pow[k], k, k2, u_down[k2], u_down[k], 1.0) {
                    row.push((v, c * rho_d * dk.gamma * a));
                }
            }
            row.push((u_down[k], -(1.0 + rho_d * residual_gain(precoder, dk))));
            b.mip.add_constraint(row, RowSense::Eq, 0.0);
        }
    }

    // SINR rows.
    for dir in [Direction::Up, Direction::Down] {
        let (free, pows, roles, rho) = match dir {
            Direction::Up => (&free_up, &up_pow, &u_up, rho_u),
            Direction::Down => (&free_down, &down_pow, &u_down, rho_d),
        };
        let active: Vec<usize> = (0..k_n).filter(|&k| free[k]).collect();
        for &k in &active {
            let dk = &devs[k];
            let mu = dk.sinr_threshold;
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut rhs = mu - delta;
            // Array gain times own power.
            let own = rho * dk.gamma * m;
            match pows[k] {
                Pow::Var(e) => row.push((e, own)),
                Pow::Const(c) => rhs -= own * c,
            }
            if precoder == Precoder::Zf {
                for &k2 in &active {
                    let ub = if dir == Direction::Up { eta_up_ub[k] } else { 1.0 };
                    for (v, c) in b.product(dir, pows[k], k, k2, roles[k2], roles[k], ub) {
                        row.push((v, -rho * dk.gamma * c));
                    }
                }
            }
            // Interference from active devices.
            for &k2 in &active {
                let weight = match dir {
                    Direction::Up => residual_gain(precoder, &devs[k2]),
                    Direction::Down => residual_gain(precoder, dk),
                };
                let ub = if dir == Direction::Up { eta_up_ub[k2] } else { 1.0 };
                for (v, c) in b.product(dir, pows[k2], k2, k2, roles[k2], roles[k2], ub) {
                    row.push((v, -mu * rho * weight * c));
                }
            }
            row.push((roles[k], -delta));
            b.mip.add_constraint(row, RowSense::Ge, rhs);
        }
    }

    debug!(
        "pricing MIP: {} vars ({} integral), {} rows, delta {delta:.3e}",
        b.mip.lp.num_vars(),
        b.mip.num_integral(),
        b.mip.lp.num_rows()
    );
    Ok(PricingModel {
        precoder,
        scheme,
        delta,
        gamma_max,
        mu_max,
        beta_max,
        mip: b.mip,
        u_up,
        u_down,
        u,
        eta_up,
        eta_down,
        phi,
        z,
        y_up,
        products: b.products,
    })
}

impl PricingModel {
    /// Solves the MIP. With `floor`, only solutions priced above it are sought.
    pub fn solve(&self, floor: Option<f64>, time_limit: Option<Duration>) -> Result<MipSolution, Error> {
        let opts = MipOptions {
            time_limit,
            cutoff: floor,
            ..MipOptions::default()
        };
        Ok(solve_mip(&self.mip, &opts)?)
    }

    /// Transmitter and receiver sets of a MIP solution.
    pub fn decode(&self, x: &[f64]) -> (Vec<usize>, Vec<usize>) {
        let tx = (0..self.u_up.len()).filter(|&k| x[self.u_up[k]] > 0.5).collect();
        let rx = (0..self.u_down.len()).filter(|&k| x[self.u_down[k]] > 0.5).collect();
        (tx, rx)
    }

    /// Largest deviation of a linearized product from the literal product, over
    /// products whose owner is active.
    pub fn linearization_error(&self, x: &[f64]) -> f64 {
        self.products
            .iter()
            .filter(|p| x[p.owner_binary] > 0.5)
            .map(|p| (x[p.var] - x[p.eta] * x[p.binary].round()).abs())
            .fold(0.0, f64::max)
    }

    /// Counts of (binary, continuous power, product) variables.
    pub fn variable_counts(&self) -> (usize, usize, usize) {
        let powers = self.eta_up.iter().chain(&self.eta_down).filter(|e| e.is_some()).count();
        (self.mip.num_integral(), powers, self.products.len())
    }
}

/// Cross-checks the search engine against the MIP on one set of duals;
/// returns both optimal prices. Intended for diagnostics on small instances.
pub fn compare_engines(inst: &Instance, precoder: Precoder, scheme: PowerScheme, duals: &DualPrices) -> Result<(f64, f64), Error> {
    let s = search_pricing(inst, precoder, scheme, duals, None, None);
    let model = build_pricing(inst, precoder, scheme, duals)?;
    let sol = model.solve(None, None)?;
    Ok((s.value, sol.objective.unwrap_or(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Device, SystemParams};

    fn pair() -> (Instance, DualPrices) {
        let params = SystemParams::default();
        let devices = vec![
            Device::from_distance(0, 60.0, 2, 3, 1.0, &params).unwrap(),
            Device::from_distance(1, 180.0, 4, 1, 1.0, &params).unwrap(),
        ];
        let duals = DualPrices {
            up: vec![0.4, 0.3],
            down: vec![0.5, 0.2],
        };
        (Instance::new(params, devices).unwrap(), duals)
    }

    #[test]
    fn mrc_optimal_counts() {
        let (inst, duals) = pair();
        let m = build_pricing(&inst, Precoder::Mrc, PowerScheme::Optimal, &duals).unwrap();
        assert_eq!(m.variable_counts(), (6, 4, 4));
        assert!(m.phi.is_none());
    }

    #[test]
    fn static_has_no_power_variables() {
        let (inst, duals) = pair();
        for p in Precoder::ALL {
            let m = build_pricing(&inst, p, PowerScheme::Static, &duals).unwrap();
            let (bin, pow, prod) = m.variable_counts();
            assert_eq!((bin, pow, prod), (6, 0, 0));
        }
    }

    #[test]
    fn fair_adds_common_level() {
        let (inst, duals) = pair();
        let m = build_pricing(&inst, Precoder::Zf, PowerScheme::Fair, &duals).unwrap();
        assert!(m.phi.is_some());
        assert!(m.z.iter().all(Option::is_some));
        assert!(m.y_up.iter().all(Option::is_some));
        assert_eq!(m.variable_counts().0, 10);
    }

    #[test]
    fn zero_duals_fix_roles() {
        let (inst, mut duals) = pair();
        duals.up[1] = 0.0;
        let m = build_pricing(&inst, Precoder::Mrc, PowerScheme::Optimal, &duals).unwrap();
        assert_eq!(m.mip.lp.variables[m.u_up[1]].upper, 0.0);
        assert!(m.eta_up[1].is_none());
    }

    #[test]
    fn big_m_dominates_rows() {
        let (inst, duals) = pair();
        for p in Precoder::ALL {
            for s in PowerScheme::ALL {
                let m = build_pricing(&inst, p, s, &duals).unwrap();
                let bound = m.mu_max * (1.0 + inst.params.uplink_snr * 2.0 * m.beta_max);
                assert!(m.delta >= bound * (1.0 - 1e-12), "{p} {s}");
            }
        }
    }

    #[test]
    fn solutions_are_exact_products() {
        let (inst, duals) = pair();
        for p in Precoder::ALL {
            for s in PowerScheme::ALL {
                let m = build_pricing(&inst, p, s, &duals).unwrap();
                let sol = m.solve(None, None).unwrap();
                let x = sol.x.unwrap();
                assert!(m.linearization_error(&x) < 1e-6, "{p} {s}");
                let (tx, rx) = m.decode(&x);
                let value: f64 = tx.iter().map(|&k| duals.up[k]).sum::<f64>() + rx.iter().map(|&k| duals.down[k]).sum::<f64>();
                assert!((value - sol.objective.unwrap()).abs() < 1e-6);
                let (search, mip) = compare_engines(&inst, p, s, &duals).unwrap();
                assert!((search - mip).abs() < 1e-6, "{p} {s}: {search} vs {mip}");
            }
        }
    }
}
