//! Brute-force pricing oracle shared by the integration tests.

use mimoframe::model::{Device, Instance, Precoder, SystemParams};
use mimoframe::powerctl::PowerScheme;
use mimoframe::pricing::DualPrices;
use mimoframe_milp::{solve_lp, LinearProgram, LpStatus, RowSense};
pub use rand::rngs::StdRng;
pub use rand::{Rng, SeedableRng};

fn gain(inst: &Instance, p: Precoder, n: usize) -> f64 {
    let m = f64::from(inst.params.num_antennas);
    match p {
        Precoder::Mrc => m,
        Precoder::Zf => m - n as f64,
    }
}

fn resid(p: Precoder, d: &Device) -> f64 {
    match p {
        Precoder::Mrc => d.beta,
        Precoder::Zf => d.beta - d.gamma,
    }
}

fn up_sinrs(inst: &Instance, p: Precoder, t: &[usize], eta: &[f64]) -> Vec<f64> {
    let rho = inst.params.uplink_snr;
    let g = gain(inst, p, t.len());
    let i: f64 = t.iter().zip(eta).map(|(&j, e)| resid(p, &inst.devices[j]) * e).sum();
    t.iter()
        .zip(eta)
        .map(|(&k, e)| g * rho * inst.devices[k].gamma * e / (1.0 + rho * i))
        .collect()
}

fn down_sinrs(inst: &Instance, p: Precoder, r: &[usize], eta: &[f64]) -> Vec<f64> {
    let rho = inst.params.downlink_snr;
    let g = gain(inst, p, r.len());
    let tot: f64 = eta.iter().sum();
    r.iter()
        .zip(eta)
        .map(|(&k, e)| {
            let d = &inst.devices[k];
            g * rho * d.gamma * e / (1.0 + rho * resid(p, d) * tot)
        })
        .collect()
}

fn meets(inst: &Instance, set: &[usize], s: &[f64]) -> bool {
    set.iter().zip(s).all(|(&k, v)| *v >= inst.devices[k].sinr_threshold * (1.0 + 1e-9))
}

/// Existence of powers in [0,1] (and a unit budget downlink) meeting every threshold.
fn lp_feasible(inst: &Instance, p: Precoder, set: &[usize], up: bool) -> bool {
    let rho = if up { inst.params.uplink_snr } else { inst.params.downlink_snr };
    let g = gain(inst, p, set.len());
    let mut lp = LinearProgram::minimize();
    let v: Vec<usize> = set.iter().map(|_| lp.add_var(0.0, 1.0, 1.0)).collect();
    for (i, &k) in set.iter().enumerate() {
        let d = &inst.devices[k];
        let mu = d.sinr_threshold * (1.0 + 1e-9);
        let mut row = vec![(v[i], g * rho * d.gamma)];
        for (j, &k2) in set.iter().enumerate() {
            let w = if up { resid(p, &inst.devices[k2]) } else { resid(p, d) };
            row.push((v[j], -mu * rho * w));
        }
        lp.add_constraint(row, RowSense::Ge, mu);
    }
    if !up {
        lp.add_constraint(v.iter().map(|&x| (x, 1.0)).collect(), RowSense::Le, 1.0);
    }
    solve_lp(&lp).unwrap().status == LpStatus::Optimal
}

fn feasible(inst: &Instance, p: Precoder, s: PowerScheme, set: &[usize], up: bool) -> bool {
    if set.is_empty() {
        return true;
    }
    if gain(inst, p, set.len()) <= 0.0 {
        return false;
    }
    let devs = &inst.devices;
    match (s, up) {
        (PowerScheme::Optimal, _) | (PowerScheme::Downlink, false) => lp_feasible(inst, p, set, up),
        (PowerScheme::Downlink, true) => meets(inst, set, &up_sinrs(inst, p, set, &vec![1.0; set.len()])),
        (PowerScheme::Fair, true) => {
            let gmin = set.iter().map(|&k| devs[k].gamma).fold(f64::INFINITY, f64::min);
            let eta: Vec<f64> = set.iter().map(|&k| gmin / devs[k].gamma).collect();
            meets(inst, set, &up_sinrs(inst, p, set, &eta))
        }
        (PowerScheme::Fair, false) => {
            let rho = inst.params.downlink_snr;
            let g = gain(inst, p, set.len());
            let w: Vec<f64> = set
                .iter()
                .map(|&k| (1.0 + rho * resid(p, &devs[k])) / (g * rho * devs[k].gamma))
                .collect();
            let t = 1.0 / w.iter().sum::<f64>();
            let eta: Vec<f64> = w.iter().map(|x| x * t).collect();
            meets(inst, set, &down_sinrs(inst, p, set, &eta))
        }
        (PowerScheme::Static, _) => {
            let gmin = devs.iter().map(|d| d.gamma).fold(f64::INFINITY, f64::min);
            let eta: Vec<f64> = set.iter().map(|&k| gmin / devs[k].gamma).collect();
            if up {
                meets(inst, set, &up_sinrs(inst, p, set, &eta))
            } else {
                eta.iter().sum::<f64>() <= 1.0 + 1e-12 && meets(inst, set, &down_sinrs(inst, p, set, &eta))
            }
        }
    }
}

pub fn brute_force(inst: &Instance, p: Precoder, s: PowerScheme, duals: &DualPrices) -> f64 {
    let k = inst.num_devices();
    let limit = inst.params.num_pilots as usize;
    let mut best: f64 = 0.0;
    for code in 0..4usize.pow(k as u32) {
        let (mut t, mut r) = (Vec::new(), Vec::new());
        let mut c = code;
        for d in 0..k {
            match c % 4 {
                1 => t.push(d),
                2 => r.push(d),
                3 => {
                    t.push(d);
                    r.push(d)
                }
                _ => {}
            }
            c /= 4;
        }
        let members = (0..k).filter(|d| t.contains(d) || r.contains(d)).count();
        if members > limit {
            continue;
        }
        let v: f64 = t.iter().map(|&d| duals.up[d]).sum::<f64>() + r.iter().map(|&d| duals.down[d]).sum::<f64>();
        if v > best && feasible(inst, p, s, &t, true) && feasible(inst, p, s, &r, false) {
            best = v;
        }
    }
    best
}

pub fn random_instance(rng: &mut StdRng) -> (Instance, DualPrices) {
    let k = rng.gen_range(2..=6);
    let params = SystemParams {
        num_antennas: rng.gen_range(6..=24),
        num_pilots: rng.gen_range(2..=4),
        ..SystemParams::default()
    };
    let devices: Vec<Device> = (0..k)
        .map(|i| {
            let dist = rng.gen_range(40.0..260.0);
            let mu = rng.gen_range(0.5..4.0);
            Device::from_distance(i, dist, 1, 1, mu, &params).unwrap()
        })
        .collect();
    let price = |rng: &mut StdRng| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.05..1.0) };
    let duals = DualPrices {
        up: (0..k).map(|_| price(rng)).collect(),
        down: (0..k).map(|_| price(rng)).collect(),
    };
    (Instance::new(params, devices).unwrap(), duals)
}
