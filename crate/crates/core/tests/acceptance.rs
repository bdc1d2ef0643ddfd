//! Acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! Reproduction targets (criteria 1 to 4 and 7) are reported but do not fail
//! the run. A wrong pricing optimum or a broken invariant does.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_force, random_instance, SeedableRng, StdRng};
use mimoframe::colgen::{
    heuristic_frame_ip, lower_bounds, rounded_schedule, run_cg, solve_frame_ip, validate_schedule, CgOptions, IpOptions,
    Schedule, StopReason,
};
use mimoframe::model::{effective_sinr, Direction, Instance, Precoder};
use mimoframe::powerctl::PowerScheme;
use mimoframe::pricing::{price_optimum, PricingEngine};
use mimoframe::scenarios::{build_instance, ExperimentConfig, ScenarioSpec, MU_SWEEP};

const CONFIGS: [(Precoder, PowerScheme); 8] = [
    (Precoder::Mrc, PowerScheme::Optimal),
    (Precoder::Mrc, PowerScheme::Fair),
    (Precoder::Mrc, PowerScheme::Static),
    (Precoder::Mrc, PowerScheme::Downlink),
    (Precoder::Zf, PowerScheme::Optimal),
    (Precoder::Zf, PowerScheme::Fair),
    (Precoder::Zf, PowerScheme::Static),
    (Precoder::Zf, PowerScheme::Downlink),
];

struct Outcome {
    lr: f64,
    frame: u64,
    heuristic: u64,
    total_power: f64,
    /// Master objective from the singleton pool on, one entry per iteration.
    trace: Vec<f64>,
    seconds: f64,
}

/// Invariant violations collected over every run.
#[derive(Default)]
struct Invariants {
    runs: usize,
    failures: Vec<String>,
}

impl Invariants {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn label(exp: &str, sc: u8, p: Precoder, s: PowerScheme) -> String {
    format!("exp {exp} sc {sc} {p} {s}")
}

fn check_fair_sets(inst: &Instance, p: Precoder, cols: &[mimoframe::model::CompatibleSet], inv: &mut Invariants, tag: &str) {
    for c in cols.iter().filter(|c| !c.rx.is_empty()) {
        let total: f64 = c.eta_down.iter().sum();
        inv.check((total - 1.0).abs() <= 1e-12, || format!("{tag}: fair downlink powers sum to {total}"));
        let eta = c.dense_down(inst.num_devices());
        let sinrs: Vec<f64> = c
            .rx
            .iter()
            .map(|&k| effective_sinr(inst, p, Direction::Down, &c.tx, &c.rx, &eta, &eta, k).unwrap())
            .collect();
        let lo = sinrs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sinrs.iter().copied().fold(0.0, f64::max);
        inv.check((hi - lo) <= 1e-9 * hi, || format!("{tag}: fair downlink SINRs differ: {sinrs:?}"));
    }
}

fn check_schedule(inst: &Instance, p: Precoder, s: PowerScheme, sched: &Schedule, lr: f64, inv: &mut Invariants, tag: &str) {
    let rep = validate_schedule(inst, p, s, sched);
    inv.check(rep.passed(), || {
        let v: Vec<String> = rep.violations.iter().map(|v| v.to_string()).collect();
        format!("{tag}: schedule fails validation: {}", v.join("; "))
    });
    let b = lower_bounds(inst, lr);
    let k = inst.num_devices() as u64;
    inv.check(b.lp_bound <= sched.frame && sched.frame <= b.lp_bound + 2 * k, || {
        format!("{tag}: frame {} outside [{}, {}]", sched.frame, b.lp_bound, b.lp_bound + 2 * k)
    });
}

fn solve(inst: &Instance, p: Precoder, s: PowerScheme, ip: &IpOptions, inv: &mut Invariants, tag: &str) -> Outcome {
    let clock = Instant::now();
    inv.runs += 1;
    let cg = run_cg(inst, p, s, &CgOptions::default()).unwrap_or_else(|e| panic!("{tag}: {e}"));
    inv.check(cg.stop == StopReason::Optimal, || format!("{tag}: CG stopped with {:?}", cg.stop));

    let mut trace: Vec<f64> = cg.log.iter().map(|e| e.objective).collect();
    trace.push(cg.master.objective);
    inv.check(trace.windows(2).all(|w| w[1] <= w[0] + 1e-7 * (1.0 + w[0])), || {
        format!("{tag}: master objective not monotone")
    });
    let support = cg.master.support().len();
    inv.check(support <= 2 * inst.num_devices(), || format!("{tag}: {support} positive block counts"));
    let rounded = rounded_schedule(&cg.pool, &cg.master);
    check_schedule(inst, p, s, &rounded, cg.master.objective, inv, &format!("{tag} rounded"));
    if s == PowerScheme::Fair {
        check_fair_sets(inst, p, cg.pool.columns(), inv, tag);
    }

    let h = heuristic_frame_ip(inst, &cg.pool, &cg.master, ip).unwrap_or_else(|e| panic!("{tag}: {e}"));
    check_schedule(inst, p, s, &h, cg.master.objective, inv, &format!("{tag} heuristic"));
    let full = solve_frame_ip(inst, &cg.pool, &cg.master, Some(&h), ip).unwrap_or_else(|e| panic!("{tag}: {e}"));
    check_schedule(inst, p, s, &full, cg.master.objective, inv, &format!("{tag} frame"));
    inv.check(full.frame <= h.frame, || format!("{tag}: full frame {} above heuristic {}", full.frame, h.frame));

    let total_power = validate_schedule(inst, p, s, &full).metrics.total_power;
    Outcome {
        lr: cg.master.objective,
        frame: full.frame,
        heuristic: h.frame,
        total_power,
        trace,
        seconds: clock.elapsed().as_secs_f64(),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn ip_options(seconds: u64) -> IpOptions {
    IpOptions {
        time_limit: Some(Duration::from_secs(seconds)),
        node_limit: None,
    }
}

fn criterion1(inv: &mut Invariants) -> bool {
    // (precoder, scheme, LR, IP frame, heuristic frame)
    let table = [
        (12.235, 13, 14),
        (12.245, 13, 14),
        (74.0, 74, 74),
        (15.333, 17, 17),
        (12.235, 13, 14),
        (12.235, 13, 14),
        (144.0, 144, 144),
        (14.0, 16, 16),
    ];
    let inst = build_instance(&ExperimentConfig::new(6).unwrap(), &ScenarioSpec::new(1).unwrap()).unwrap();
    let mut all = true;
    for (&(p, s), &(lr, frame, heur)) in CONFIGS.iter().zip(&table) {
        let tag = label("6", 1, p, s);
        let o = solve(&inst, p, s, &ip_options(60), inv, &tag);
        let ok = (o.lr - lr).abs() <= 5e-3
            && o.frame.abs_diff(frame) <= 1
            && o.heuristic.abs_diff(heur) <= 1
            && o.seconds <= 300.0;
        all &= ok;
        println!(
            "    {tag}: LR {:.4} (want {lr}), frame {} (want {frame}), heuristic {} (want {heur}), {:.1}s  {}",
            o.lr,
            o.frame,
            o.heuristic,
            o.seconds,
            verdict(ok)
        );
    }
    all
}

/// Runs experiments 1 to 3 once and evaluates criteria 2, 4 and 7 on them.
fn experiments_1_to_3(inv: &mut Invariants) -> (bool, bool, bool) {
    let (mut c2, mut c4, mut c7) = (true, true, true);
    let mut misses = Vec::new();
    for exp in 1..=3u8 {
        for sc in 1..=6u8 {
            let inst = build_instance(&ExperimentConfig::new(exp).unwrap(), &ScenarioSpec::new(sc).unwrap()).unwrap();
            let want = if sc <= 2 { 21 } else { 35 };
            let mut power = [[0.0; 4]; 2];
            for (i, &(p, s)) in CONFIGS.iter().enumerate() {
                let tag = label(&exp.to_string(), sc, p, s);
                let o = solve(&inst, p, s, &ip_options(10), inv, &tag);
                power[i / 4][i % 4] = o.total_power;
                if o.frame.abs_diff(want) > 1 {
                    c2 = false;
                    misses.push(format!("{tag}: {}", o.frame));
                }
                if exp == 1 {
                    let at20 = o.trace[o.trace.len().min(21) - 1];
                    let ok = at20 < 50.0;
                    c7 &= ok;
                    println!(
                        "    criterion 7 {tag}: start {:.1}, after 20 iterations {at20:.3}, {} iterations in all  {}",
                        o.trace[0],
                        o.trace.len() - 1,
                        verdict(ok)
                    );
                }
            }
            for (pi, p) in Precoder::ALL.iter().enumerate() {
                let [opt, fair, stat, _] = power[pi];
                let ok = opt < stat && stat < fair && opt * 10.0 <= fair;
                c4 &= ok;
                println!(
                    "    criterion 4 exp {exp} sc {sc} {p}: optimal {opt:.3}, static {stat:.3}, fair {fair:.3}  {}",
                    verdict(ok)
                );
            }
        }
    }
    println!("    criterion 2: {} of 144 frames outside the target band", misses.len());
    for m in &misses {
        println!("      {m}");
    }
    (c2, c4, c7)
}

fn criterion3(inv: &mut Invariants) -> bool {
    let mut all = true;
    for sc in [1u8] {
        for &(p, s) in CONFIGS.iter().filter(|(_, s)| *s == PowerScheme::Optimal || *s == PowerScheme::Downlink) {
            let frames: Vec<u64> = MU_SWEEP
                .iter()
                .map(|&mu| {
                    let cfg = ExperimentConfig::new(4).unwrap().with_mu(mu);
                    let inst = build_instance(&cfg, &ScenarioSpec::new(sc).unwrap()).unwrap();
                    let tag = format!("exp 4 mu {mu} sc {sc} {p} {s}");
                    solve(&inst, p, s, &ip_options(5), inv, &tag).frame
                })
                .collect();
            let ok = match p {
                Precoder::Mrc => {
                    let monotone = frames.windows(2).all(|w| w[0] <= w[1]);
                    let plateau = frames.windows(2).any(|w| w[0] == w[1]);
                    monotone && plateau
                }
                Precoder::Zf => frames.iter().all(|&f| f == frames[0]),
            };
            all &= ok;
            println!("    sc {sc} {p} {s}: frames {frames:?}  {}", verdict(ok));
        }
    }
    all
}

fn criterion5() -> (bool, f64, usize) {
    let clock = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let mut mismatches = 0;
    for _ in 0..50 {
        let (inst, duals) = random_instance(&mut rng);
        for &(p, s) in &CONFIGS {
            let want = brute_force(&inst, p, s, &duals);
            let got = price_optimum(&inst, p, s, &duals, PricingEngine::Search, None, None).unwrap();
            if (got.value - want).abs() > 1e-6 {
                mismatches += 1;
                println!("    {p} {s}: got {} want {want}", got.value);
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    (mismatches == 0 && secs < 120.0, secs, mismatches)
}

fn main() -> ExitCode {
    let mut inv = Invariants::default();
    let started = Instant::now();

    let (c5, secs, mismatches) = criterion5();
    println!("criterion 5 (pricing matches enumeration, 50 instances x 8 configurations): {mismatches} mismatches in {secs:.1}s  {}", verdict(c5));

    println!("criterion 1 (experiment 6, scenario 1):");
    let c1 = criterion1(&mut inv);
    println!("criterion 1 (experiment 6 table): {}", verdict(c1));

    println!("criteria 2, 4, 7 (experiments 1 to 3):");
    let (c2, c4, c7) = experiments_1_to_3(&mut inv);
    println!("criterion 2 (experiments 1-3 frames 21/35 within 1 block): {}", verdict(c2));

    println!("criterion 3 (experiment 4 threshold sweep):");
    let c3 = criterion3(&mut inv);
    println!("criterion 3 (MRC non-decreasing with plateaus, ZF constant): {}", verdict(c3));
    println!("criterion 4 (total power optimal < static < fair, optimal 10x below fair): {}", verdict(c4));

    let c6 = inv.failures.is_empty();
    for f in &inv.failures {
        println!("    {f}");
    }
    println!("criterion 6 (structural invariants over {} runs): {}", inv.runs, verdict(c6));
    println!("criterion 7 (experiment 1 master below 50 within 20 iterations): {}", verdict(c7));
    println!("acceptance finished in {:.0}s", started.elapsed().as_secs_f64());

    if c5 && c6 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
