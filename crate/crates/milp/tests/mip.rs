use std::time::Duration;

use mimoframe_milp::{
    solve_mip, to_mps, BranchDirection, MipOptions, MipProblem, MipStatus, NodeOrder, ObjectiveSense, RowSense, VarKind,
};
use proptest::prelude::*;

#[test]
fn small_knapsack() {
    // max 5x + 4y, 3x + 2y <= 4, x, y binary
    let mut p = MipProblem::new(ObjectiveSense::Maximize);
    let x = p.add_binary(5.0);
    let y = p.add_binary(4.0);
    p.add_constraint(vec![(x, 3.0), (y, 2.0)], RowSense::Le, 4.0);
    let sol = solve_mip(&p, &MipOptions::default()).unwrap();
    assert_eq!(sol.status, MipStatus::Optimal);
    assert_eq!(sol.objective, Some(5.0));
    assert!((sol.bound - 5.0).abs() < 1e-9);
}

#[test]
fn general_integer_covering() {
    // min t1 + t2 + t3, 2 t1 + t2 >= 3, t2 + 2 t3 >= 3, t integer
    let mut p = MipProblem::new(ObjectiveSense::Minimize);
    let t: Vec<usize> = (0..3).map(|_| p.add_var(VarKind::Integer, 0.0, f64::INFINITY, 1.0)).collect();
    p.add_constraint(vec![(t[0], 2.0), (t[1], 1.0)], RowSense::Ge, 3.0);
    p.add_constraint(vec![(t[1], 1.0), (t[2], 2.0)], RowSense::Ge, 3.0);
    let sol = solve_mip(&p, &MipOptions::default()).unwrap();
    assert_eq!(sol.status, MipStatus::Optimal);
    assert_eq!(sol.objective, Some(3.0));
}

#[test]
fn infeasible_mip() {
    let mut p = MipProblem::new(ObjectiveSense::Minimize);
    let x = p.add_binary(1.0);
    let y = p.add_binary(1.0);
    p.add_constraint(vec![(x, 2.0), (y, 2.0)], RowSense::Eq, 1.0);
    let sol = solve_mip(&p, &MipOptions::default()).unwrap();
    assert_eq!(sol.status, MipStatus::Infeasible);
    assert!(sol.x.is_none());
}

#[test]
fn initial_solution_and_node_limit() {
    let mut p = MipProblem::new(ObjectiveSense::Maximize);
    let vars: Vec<usize> = (0..12).map(|k| p.add_binary(3.0 + k as f64)).collect();
    let coeffs = vars.iter().enumerate().map(|(k, &v)| (v, 2.0 + (k % 5) as f64)).collect();
    p.add_constraint(coeffs, RowSense::Le, 13.5);
    let start = vec![0.0; 12];
    let opts = MipOptions {
        node_limit: Some(1),
        initial_solution: Some(start),
        ..MipOptions::default()
    };
    let sol = solve_mip(&p, &opts).unwrap();
    assert_eq!(sol.status, MipStatus::NodeLimit);
    assert!(sol.objective.unwrap() >= 0.0);
    assert!(sol.bound >= sol.objective.unwrap());
}

#[test]
fn cutoff_rejects_worse_solutions() {
    let mut p = MipProblem::new(ObjectiveSense::Maximize);
    let x = p.add_binary(1.0);
    let y = p.add_binary(1.0);
    p.add_constraint(vec![(x, 1.0), (y, 1.0)], RowSense::Le, 1.0);
    let opts = MipOptions {
        cutoff: Some(1.5),
        ..MipOptions::default()
    };
    let sol = solve_mip(&p, &opts).unwrap();
    assert!(sol.objective.is_none());
}

#[test]
fn mps_roundtrip_shape() {
    let mut p = MipProblem::new(ObjectiveSense::Maximize);
    let x = p.add_binary(5.0);
    let y = p.add_continuous(0.0, 2.5, 4.0);
    p.add_constraint(vec![(x, 3.0), (y, 2.0)], RowSense::Le, 4.0);
    let text = to_mps(&p, "knap");
    let sections: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(sections, ["NAME          knap", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("knap.mps");
    mimoframe_milp::write_mps(&p, "knap", &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

/// Brute force over all binary assignments.
fn enumerate(p: &MipProblem) -> Option<f64> {
    let n = p.lp.num_vars();
    let mut best: Option<f64> = None;
    let max = p.lp.sense == ObjectiveSense::Maximize;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if p.lp.max_violation(&x) <= 1e-9 {
            let z = p.lp.objective_value(&x);
            best = Some(match best {
                None => z,
                Some(b) if max => b.max(z),
                Some(b) => b.min(z),
            });
        }
    }
    best
}

fn arb_binary_program() -> impl Strategy<Value = MipProblem> {
    (1usize..=12, 1usize..4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-6i32..10, n),
            prop::collection::vec(prop::collection::vec(-3i32..8, n), m),
            prop::collection::vec(0i32..20, m),
            prop::collection::vec(any::<bool>(), m),
            any::<bool>(),
        )
            .prop_map(move |(cost, rows, rhs, ge, maximize)| {
                let sense = if maximize { ObjectiveSense::Maximize } else { ObjectiveSense::Minimize };
                let mut p = MipProblem::new(sense);
                for c in &cost {
                    p.add_binary(*c as f64 * 0.5);
                }
                for i in 0..m {
                    let coeffs = rows[i].iter().enumerate().map(|(j, &a)| (j, a as f64)).collect();
                    if ge[i] {
                        p.add_constraint(coeffs, RowSense::Ge, rhs[i] as f64 * 0.3 - 4.0);
                    } else {
                        p.add_constraint(coeffs, RowSense::Le, rhs[i] as f64 * 0.7);
                    }
                }
                p
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn branch_and_bound_matches_enumeration(
        p in arb_binary_program(),
        order in prop_oneof![Just(NodeOrder::DepthFirst), Just(NodeOrder::BestBound), Just(NodeOrder::Hybrid)],
        dir in prop_oneof![Just(BranchDirection::Up), Just(BranchDirection::Down)],
    ) {
        let opts = MipOptions {
            node_order: order,
            branch_direction: dir,
            time_limit: Some(Duration::from_secs(20)),
            ..MipOptions::default()
        };
        let sol = solve_mip(&p, &opts).unwrap();
        match enumerate(&p) {
            None => prop_assert_eq!(sol.status, MipStatus::Infeasible),
            Some(z) => {
                prop_assert_eq!(sol.status, MipStatus::Optimal);
                let got = sol.objective.unwrap();
                prop_assert!((got - z).abs() < 1e-7, "bnb {} vs enumeration {}", got, z);
                prop_assert!(p.lp.max_violation(sol.x.as_ref().unwrap()) <= 1e-7);
            }
        }
    }
}
