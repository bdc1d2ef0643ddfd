//! Exact pricing by depth-first search over device roles.
//!
//! Devices are visited in order of decreasing total price and each gets one
//! of the roles both / transmitter / receiver / idle. Feasibility of every
//! scheme is downward closed (removing a member never breaks the others), so
//! a partial assignment that is infeasible can be cut, and each direction is
//! checked in constant time from running aggregates. Nodes are bounded by
//! the pilot budget and by fractional knapsacks built from necessary
//! conditions that hold for every scheme.

use std::time::{Duration, Instant};

use log::{debug, warn};

use super::DualPrices;
use crate::model::{residual_gain, CompatibleSet, Instance, Precoder};
use crate::powerctl::{scheme_set, static_coeffs, PowerScheme};

const PRICE_EPS: f64 = 1e-12;
/// Directions of each role as bits (uplink 1, downlink 2), indexed by role.
const ROLE_DIRS: [u8; 4] = [3, 1, 2, 0];

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Best price found (zero for the empty set, or the floor when nothing beat it).
    pub value: f64,
    pub cset: Option<CompatibleSet>,
    /// False when the time limit stopped the search early.
    pub complete: bool,
    pub nodes: u64,
}

#[derive(Clone, Copy)]
struct Dev {
    id: usize,
    pi_up: f64,
    pi_down: f64,
    mu: f64,
    gamma: f64,
    /// mu * residual / gamma (uplink and downlink share it).
    c1: f64,
    /// mu / (rho_up * gamma)
    c2_up: f64,
    /// mu / (rho_down * gamma)
    c2_down: f64,
    /// residual gain
    res: f64,
    /// static coefficient
    s: f64,
    /// (1 / rho_down + residual) / gamma
    fair_a: f64,
}

#[derive(Clone, Copy, Default)]
struct UpAgg {
    n: usize,
    sum_c1: f64,
    max_c2: f64,
    sum_res: f64,
    min_gamma: f64,
    sum_res_over_gamma: f64,
    max_mu: f64,
    sum_res_s: f64,
}

#[derive(Clone, Copy, Default)]
struct DownAgg {
    n: usize,
    sum_c: f64,
    sum_a: f64,
    max_mu: f64,
    sum_s: f64,
}

struct Searcher<'a> {
    precoder: Precoder,
    scheme: PowerScheme,
    m: f64,
    pilots: usize,
    rho_up: f64,
    rho_down: f64,
    g_min: f64,
    devs: Vec<Dev>,
    same_as_prev: Vec<bool>,
    /// Earlier devices with identical channel data and prices at least as high in both directions.
    dominators: Vec<Vec<usize>>,
    /// prefix[i] = sum of total prices of devs[..i]
    prefix: Vec<f64>,
    /// Suffix items sorted by decreasing uplink price.
    top_up: Vec<Vec<f64>>,
    top_down: Vec<Vec<f64>>,
    /// Suffix (price, weight) items sorted by decreasing price per weight.
    knap_up: Vec<Vec<(f64, f64)>>,
    knap_down: Vec<Vec<(f64, f64)>>,
    role: Vec<u8>,
    tx: Vec<usize>,
    rx: Vec<usize>,
    best: f64,
    best_sets: Option<(Vec<usize>, Vec<usize>)>,
    nodes: u64,
    deadline: Option<Instant>,
    aborted: bool,
    _inst: &'a Instance,
}

/// Finds the best-priced compatible set. With `floor`, only sets priced
/// strictly above it are reported.
pub fn search_pricing(
    inst: &Instance,
    precoder: Precoder,
    scheme: PowerScheme,
    duals: &DualPrices,
    floor: Option<f64>,
    time_limit: Option<Duration>,
) -> SearchOutcome {
    let p = &inst.params;
    let statics = static_coeffs(inst);
    let mut devs: Vec<Dev> = inst
        .devices
        .iter()
        .filter(|d| duals.up[d.id] > PRICE_EPS || duals.down[d.id] > PRICE_EPS)
        .map(|d| {
            let res = residual_gain(precoder, d);
            Dev {
                id: d.id,
                pi_up: if duals.up[d.id] > PRICE_EPS { duals.up[d.id] } else { 0.0 },
                pi_down: if duals.down[d.id] > PRICE_EPS { duals.down[d.id] } else { 0.0 },
                mu: d.sinr_threshold,
                gamma: d.gamma,
                c1: d.sinr_threshold * res / d.gamma,
                c2_up: d.sinr_threshold / (p.uplink_snr * d.gamma),
                c2_down: d.sinr_threshold / (p.downlink_snr * d.gamma),
                res,
                s: statics.up[d.id],
                fair_a: (1.0 / p.downlink_snr + res) / d.gamma,
            }
        })
        .collect();
    devs.sort_by(|a, b| {
        (b.pi_up + b.pi_down)
            .total_cmp(&(a.pi_up + a.pi_down))
            .then(b.pi_up.total_cmp(&a.pi_up))
            .then(a.gamma.total_cmp(&b.gamma))
            .then(a.mu.total_cmp(&b.mu))
            .then(a.res.total_cmp(&b.res))
            .then(a.id.cmp(&b.id))
    });
    let n = devs.len();
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300);
    let same_as_prev: Vec<bool> = (0..n)
        .map(|i| {
            i > 0 && {
                let (a, b) = (&devs[i - 1], &devs[i]);
                close(a.pi_up, b.pi_up)
                    && close(a.pi_down, b.pi_down)
                    && close(a.gamma, b.gamma)
                    && close(a.mu, b.mu)
                    && close(a.res, b.res)
            }
        })
        .collect();
    let dominators: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            let b = &devs[j];
            (0..j)
                .filter(|&i| {
                    let a = &devs[i];
                    close(a.gamma, b.gamma)
                        && close(a.mu, b.mu)
                        && close(a.res, b.res)
                        && a.pi_up >= b.pi_up
                        && a.pi_down >= b.pi_down
                })
                .collect()
        })
        .collect();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + devs[i].pi_up + devs[i].pi_down;
    }
    let suffix_sorted = |f: &dyn Fn(&Dev) -> f64| -> Vec<Vec<f64>> {
        (0..=n)
            .map(|i| {
                let mut v: Vec<f64> = devs[i..].iter().map(f).filter(|x| *x > 0.0).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            })
            .collect()
    };
    let top_up = suffix_sorted(&|d| d.pi_up);
    let top_down = suffix_sorted(&|d| d.pi_down);
    let knap = |f: &dyn Fn(&Dev) -> (f64, f64)| -> Vec<Vec<(f64, f64)>> {
        (0..=n)
            .map(|i| {
                let mut v: Vec<(f64, f64)> = devs[i..].iter().map(f).filter(|x| x.0 > 0.0).collect();
                v.sort_by(|a, b| (b.0 * a.1).total_cmp(&(a.0 * b.1)));
                v
            })
            .collect()
    };
    let knap_up = knap(&|d| (d.pi_up, d.c1));
    let knap_down = knap(&|d| (d.pi_down, d.c1 + d.c2_down));

    let g_min = inst.devices.iter().map(|d| d.gamma).fold(f64::INFINITY, f64::min);
    let mut s = Searcher {
        precoder,
        scheme,
        m: f64::from(p.num_antennas),
        pilots: p.num_pilots as usize,
        rho_up: p.uplink_snr,
        rho_down: p.downlink_snr,
        g_min,
        devs,
        same_as_prev,
        dominators,
        prefix,
        top_up,
        top_down,
        knap_up,
        knap_down,
        role: vec![0; n],
        tx: Vec::new(),
        rx: Vec::new(),
        best: floor.unwrap_or(0.0),
        best_sets: None,
        nodes: 0,
        deadline: time_limit.map(|t| Instant::now() + t),
        aborted: false,
        _inst: inst,
    };
    s.dfs(0, UpAgg::default(), DownAgg::default(), 0.0, 0);
    debug!("pricing search: {} nodes, best {:.6}", s.nodes, s.best);

    let mut cset = None;
    let mut value = if floor.is_some() { s.best } else { s.best.max(0.0) };
    if let Some((tx, rx)) = &s.best_sets {
        match scheme_set(inst, precoder, scheme, tx, rx) {
            Some(c) => {
                value = duals.value(&c);
                cset = Some(c);
            }
            None => {
                warn!("search result tx={tx:?} rx={rx:?} rejected by the closed-form check");
                s.aborted = true;
            }
        }
    }
    SearchOutcome {
        value,
        cset,
        complete: !s.aborted,
        nodes: s.nodes,
    }
}

impl Searcher<'_> {
    fn gain(&self, n: usize) -> Option<f64> {
        match self.precoder {
            Precoder::Mrc => Some(self.m),
            Precoder::Zf => {
                let g = self.m - n as f64;
                (g > 0.0).then_some(g)
            }
        }
    }

    fn add_up(&self, a: UpAgg, d: &Dev) -> Option<UpAgg> {
        let b = UpAgg {
            n: a.n + 1,
            sum_c1: a.sum_c1 + d.c1,
            max_c2: a.max_c2.max(d.c2_up),
            sum_res: a.sum_res + d.res,
            min_gamma: if a.n == 0 { d.gamma } else { a.min_gamma.min(d.gamma) },
            sum_res_over_gamma: a.sum_res_over_gamma + d.res / d.gamma,
            max_mu: a.max_mu.max(d.mu),
            sum_res_s: a.sum_res_s + d.res * d.s,
        };
        let g = self.gain(b.n)?;
        let rho = self.rho_up;
        let ok = match self.scheme {
            PowerScheme::Optimal => b.sum_c1 + b.max_c2 <= g,
            PowerScheme::Downlink => b.max_c2 * (1.0 + rho * b.sum_res) <= g,
            PowerScheme::Fair => b.max_mu * (1.0 + rho * b.min_gamma * b.sum_res_over_gamma) <= g * rho * b.min_gamma,
            PowerScheme::Static => b.max_mu * (1.0 + rho * b.sum_res_s) <= g * rho * self.g_min,
        };
        ok.then_some(b)
    }

    fn add_down(&self, a: DownAgg, d: &Dev) -> Option<DownAgg> {
        let b = DownAgg {
            n: a.n + 1,
            sum_c: a.sum_c + d.c1 + d.c2_down,
            sum_a: a.sum_a + d.fair_a,
            max_mu: a.max_mu.max(d.mu),
            sum_s: a.sum_s + d.s,
        };
        let g = self.gain(b.n)?;
        let ok = match self.scheme {
            PowerScheme::Optimal | PowerScheme::Downlink => b.sum_c <= g,
            PowerScheme::Fair => b.max_mu * b.sum_a <= g,
            PowerScheme::Static => {
                let rho = self.rho_down;
                b.sum_s <= 1.0
                    && self
                        .rx
                        .iter()
                        .map(|&id| self.devs.iter().find(|x| x.id == id).expect("member"))
                        .chain(std::iter::once(d))
                        .all(|x| x.mu * (1.0 + rho * x.res * b.sum_s) <= g * rho * self.g_min)
            }
        };
        ok.then_some(b)
    }

    /// Upper bound on the price still obtainable from devices `i..`.
    fn bound(&self, i: usize, up: &UpAgg, dn: &DownAgg, slots: usize) -> f64 {
        let end = (i + slots).min(self.devs.len());
        let pilot = self.prefix[end] - self.prefix[i];
        let card = |v: &[f64]| v.iter().take(slots).sum::<f64>();
        // Fractional knapsack value and the price/weight ratio of the last item taken.
        let knapsack = |items: &[(f64, f64)], mut cap: f64| {
            let mut total = 0.0;
            let mut ratio = 0.0;
            for &(p, w) in items {
                if cap <= 0.0 {
                    break;
                }
                ratio = p / w;
                if w <= cap {
                    total += p;
                    cap -= w;
                } else {
                    total += p * cap / w;
                    cap = 0.0;
                }
            }
            if cap > 0.0 {
                ratio = 0.0;
            }
            (total, ratio)
        };
        let cap_up = (self.m - up.sum_c1 - up.max_c2).max(0.0);
        let cap_down = (self.m - dn.sum_c).max(0.0);
        let (k_up, r_up) = knapsack(&self.knap_up[i], cap_up);
        let (k_down, r_down) = knapsack(&self.knap_down[i], cap_down);
        let ub_up = card(&self.top_up[i]).min(k_up);
        let ub_down = card(&self.top_down[i]).min(k_down);
        let mut best = pilot.min(ub_up + ub_down);
        // Relax both knapsack rows with multipliers and keep the pilot budget exact.
        let mut values = Vec::with_capacity(self.devs.len() - i);
        for (tu, td) in [(r_up, r_down), (0.0, r_down), (r_up, 0.0)] {
            if tu == 0.0 && td == 0.0 {
                continue;
            }
            values.clear();
            values.extend(self.devs[i..].iter().map(|d| {
                let u = d.pi_up - tu * d.c1;
                let v = d.pi_down - td * (d.c1 + d.c2_down);
                u.max(0.0) + v.max(0.0)
            }));
            let k = slots.min(values.len());
            if k < values.len() {
                values.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
            }
            let lagrange = tu * cap_up + td * cap_down + values[..k].iter().sum::<f64>();
            best = best.min(lagrange);
        }
        best
    }

    fn improves(&self, v: f64) -> bool {
        v > self.best + 1e-12 * (1.0 + self.best.abs())
    }

    fn dfs(&mut self, i: usize, up: UpAgg, dn: DownAgg, cur: f64, used: usize) {
        self.nodes += 1;
        if self.aborted {
            return;
        }
        if self.nodes.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.aborted = true;
            return;
        }
        if self.improves(cur) {
            self.best = cur;
            self.best_sets = Some((self.tx.clone(), self.rx.clone()));
        }
        if i == self.devs.len() || used == self.pilots {
            return;
        }
        if !self.improves(cur + self.bound(i, &up, &dn, self.pilots - used)) {
            return;
        }
        let d = self.devs[i];
        let first_role = if self.same_as_prev[i] { self.role[i - 1] } else { 0 };
        'roles: for role in first_role..4u8 {
            for &j in &self.dominators[i] {
                let (a, b) = (ROLE_DIRS[self.role[j] as usize], ROLE_DIRS[role as usize]);
                if a & b == a && a != b {
                    continue 'roles;
                }
            }
            self.role[i] = role;
            let (want_up, want_down) = match role {
                0 => (true, true),
                1 => (true, false),
                2 => (false, true),
                _ => (false, false),
            };
            if (want_up && d.pi_up <= 0.0) || (want_down && d.pi_down <= 0.0) {
                continue;
            }
            let nu = if want_up {
                match self.add_up(up, &d) {
                    Some(a) => a,
                    None => continue,
                }
            } else {
                up
            };
            let nd = if want_down {
                match self.add_down(dn, &d) {
                    Some(a) => a,
                    None => continue,
                }
            } else {
                dn
            };
            let gain = if want_up { d.pi_up } else { 0.0 } + if want_down { d.pi_down } else { 0.0 };
            if want_up {
                self.tx.push(d.id);
            }
            if want_down {
                self.rx.push(d.id);
            }
            let used_next = used + usize::from(want_up || want_down);
            self.dfs(i + 1, nu, nd, cur + gain, used_next);
            if want_up {
                self.tx.pop();
            }
            if want_down {
                self.rx.pop();
            }
        }
    }
}
