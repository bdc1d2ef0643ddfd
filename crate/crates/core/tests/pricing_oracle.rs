//! Pricing engines against brute-force enumeration of all role patterns.

mod common;

use common::{brute_force, random_instance, SeedableRng, StdRng};
use mimoframe::model::Precoder;
use mimoframe::powerctl::PowerScheme;
use mimoframe::pricing::{price_optimum, verify_candidate, PricingEngine};

#[test]
fn engines_match_enumeration() {
    let mut rng = StdRng::seed_from_u64(7);
    for case in 0..50 {
        let (inst, duals) = random_instance(&mut rng);
        for p in Precoder::ALL {
            for s in PowerScheme::ALL {
                let want = brute_force(&inst, p, s, &duals);
                for engine in [PricingEngine::Search, PricingEngine::Mip] {
                    let got = price_optimum(&inst, p, s, &duals, engine, None, None).unwrap();
                    assert!(
                        (got.value - want).abs() < 1e-7,
                        "case {case} {p} {s} {engine:?}: got {} want {want}",
                        got.value
                    );
                    if let Some(c) = &got.cset {
                        let rep = verify_candidate(&inst, p, s, c);
                        assert!(rep.passed(), "case {case} {p} {s} {engine:?}: {:?}", rep.violations);
                    }
                }
            }
        }
    }
}
