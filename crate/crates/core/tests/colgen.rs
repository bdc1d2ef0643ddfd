//! Column generation and integer frame invariants on small random instances.

use mimoframe::colgen::{
    initial_pool, lower_bounds, rounded_schedule, run_cg, solve_frame_ip, validate_schedule, CgOptions, IpOptions,
    ScheduleViolation, StopReason,
};
use mimoframe::model::{Device, Instance, Precoder, SystemParams};
use mimoframe::powerctl::PowerScheme;
use mimoframe::scenarios::{build_instance, ExperimentConfig, ScenarioSpec};
use proptest::prelude::*;

fn instance(dists: &[f64], demands: &[(u32, u32)], antennas: u32, pilots: u32) -> Instance {
    let params = SystemParams {
        num_antennas: antennas,
        num_pilots: pilots,
        ..SystemParams::default()
    };
    let devices = dists
        .iter()
        .zip(demands)
        .enumerate()
        .map(|(i, (&r, &(up, down)))| Device::from_distance(i, r, up, down, 1.0, &params).unwrap())
        .collect();
    Instance::new(params, devices).unwrap()
}

fn arb_instance() -> impl Strategy<Value = Instance> {
    (2usize..=6)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(40.0f64..220.0, k),
                prop::collection::vec((0u32..5, 0u32..5), k),
                8u32..=32,
                2u32..=4,
            )
        })
        .prop_map(|(dists, mut demands, m, p)| {
            for d in &mut demands {
                if d.0 == 0 && d.1 == 0 {
                    d.0 = 1;
                }
            }
            instance(&dists, &demands, m, p)
        })
}

fn arb_config() -> impl Strategy<Value = (Precoder, PowerScheme)> {
    (prop::sample::select(Precoder::ALL.to_vec()), prop::sample::select(PowerScheme::ALL.to_vec()))
}

fn ip_opts() -> IpOptions {
    IpOptions {
        time_limit: None,
        node_limit: Some(20_000),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cg_and_frame_invariants(inst in arb_instance(), (p, s) in arb_config()) {
        let k = inst.num_devices();
        let init = initial_pool(&inst, p, s);
        prop_assume!(init.is_ok());
        let init = init.unwrap();
        let cg = run_cg(&inst, p, s, &CgOptions::default()).unwrap();
        prop_assert_eq!(cg.stop, StopReason::Optimal);

        // The generated pool extends the singleton pool.
        prop_assert_eq!(&cg.pool.columns()[..init.len()], init.columns());

        // Master objective never rises.
        let mut trace: Vec<f64> = cg.log.iter().map(|e| e.objective).collect();
        trace.push(cg.master.objective);
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-7, "objective rose: {:?}", trace);
        }

        // A basic optimum has at most one positive entry per covering row.
        prop_assert!(cg.master.support().len() <= 2 * k);

        let rounded = rounded_schedule(&cg.pool, &cg.master);
        let rep = validate_schedule(&inst, p, s, &rounded);
        prop_assert!(rep.passed(), "rounded: {:?}", rep.violations);

        let sched = solve_frame_ip(&inst, &cg.pool, &cg.master, None, &ip_opts()).unwrap();
        let rep = validate_schedule(&inst, p, s, &sched);
        prop_assert!(rep.passed(), "frame: {:?}", rep.violations);
        let b = lower_bounds(&inst, cg.master.objective);
        prop_assert!(b.lp_bound <= sched.frame);
        prop_assert!(sched.frame <= b.lp_bound + 2 * k as u64);
        prop_assert!(sched.frame <= rounded.frame);
        prop_assert!(b.pigeonhole <= sched.frame);
    }
}

#[test]
fn decremented_schedule_fails_validation() {
    let inst = build_instance(&ExperimentConfig::new(5).unwrap(), &ScenarioSpec::new(3).unwrap()).unwrap();
    let (p, s) = (Precoder::Mrc, PowerScheme::Optimal);
    let cg = run_cg(&inst, p, s, &CgOptions::default()).unwrap();
    let mut sched = solve_frame_ip(&inst, &cg.pool, &cg.master, None, &ip_opts()).unwrap();
    assert!(validate_schedule(&inst, p, s, &sched).passed());

    let i = sched.sets.iter().position(|e| e.blocks > 0).unwrap();
    sched.sets[i].blocks -= 1;
    sched.frame -= 1;
    let rep = validate_schedule(&inst, p, s, &sched);
    assert!(rep
        .violations
        .iter()
        .any(|v| matches!(v, ScheduleViolation::Covering { .. })));

    sched.frame += 5;
    let rep = validate_schedule(&inst, p, s, &sched);
    assert!(rep
        .violations
        .iter()
        .any(|v| matches!(v, ScheduleViolation::FrameMismatch { .. })));
}

#[test]
fn tampered_set_fails_validation() {
    let inst = build_instance(&ExperimentConfig::new(5).unwrap().with_devices(8), &ScenarioSpec::new(1).unwrap()).unwrap();
    let (p, s) = (Precoder::Zf, PowerScheme::Downlink);
    let cg = run_cg(&inst, p, s, &CgOptions::default()).unwrap();
    let mut sched = solve_frame_ip(&inst, &cg.pool, &cg.master, None, &ip_opts()).unwrap();
    let e = sched.sets.iter_mut().find(|e| !e.cset.rx.is_empty()).unwrap();
    for eta in &mut e.cset.eta_down {
        *eta = 2.0;
    }
    let rep = validate_schedule(&inst, p, s, &sched);
    assert!(rep.violations.iter().any(|v| matches!(v, ScheduleViolation::Set { .. })));
}

#[test]
fn single_device_needs_max_demand() {
    let inst = instance(&[120.0], &[(3, 7)], 16, 2);
    for p in Precoder::ALL {
        for s in PowerScheme::ALL {
            let cg = run_cg(&inst, p, s, &CgOptions::default()).unwrap();
            assert!((cg.master.objective - 7.0).abs() < 1e-9, "{p} {s}");
            let sched = solve_frame_ip(&inst, &cg.pool, &cg.master, None, &ip_opts()).unwrap();
            assert_eq!(sched.frame, 7);
        }
    }
}

#[test]
fn iteration_cap_stops_early() {
    let inst = build_instance(&ExperimentConfig::new(5).unwrap().with_devices(12), &ScenarioSpec::new(1).unwrap()).unwrap();
    let opts = CgOptions {
        iter_cap: 3,
        ..CgOptions::default()
    };
    let cg = run_cg(&inst, Precoder::Mrc, PowerScheme::Optimal, &opts).unwrap();
    assert_eq!(cg.stop, StopReason::IterationCap);
    assert_eq!(cg.iterations(), 3);
    assert!(!cg.proven());
}
