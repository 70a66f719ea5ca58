use hyperlab::linops::RadialGrid;
use hyperlab::profiles::{japanese, w};
use hyperlab::weights::*;
use proptest::prelude::*;

#[test]
fn temperate_sweep_has_no_violations() {
    let v = temperate_check(100_000, 4.0, 1.0, 1, 2024).unwrap();
    assert!(v.is_empty(), "{} violations, first {:?}", v.len(), v.first());
    let proof_c = temperate_constant();
    assert!(proof_c > 1.0 && proof_c <= 4.0, "{proof_c}");
}

#[test]
fn temperate_negative_control() {
    let v = temperate_check(10_000, 0.01, 0.0, 1, 5).unwrap();
    assert!(!v.is_empty());
    assert!(v.iter().all(|x| x.lhs > x.rhs));
}

#[test]
fn temperate_is_seeded() {
    let a = temperate_check(5_000, 0.5, 0.5, 2, 11).unwrap();
    let b = temperate_check(5_000, 0.5, 0.5, 2, 11).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unboundedness_ladder() {
    let grid = RadialGrid::new(0.5, 12.0, 4000, 2).unwrap();
    let nus = [2f64.exp(), 4f64.exp(), 8f64.exp()];
    let rep = unboundedness_demo(&grid, 1.0, &nus, 0.0).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.strictly_increasing);
    for p in rep.ratios.windows(2) {
        let f = p[1] / p[0];
        assert!((1.6..=2.3).contains(&f), "{rep:?}");
    }
    assert!((rep.fitted_exponent - 1.0).abs() <= 0.15, "{rep:?}");
}

#[test]
fn unboundedness_far_bump() {
    let grid = RadialGrid::new(0.5, 40.0, 20_000, 2).unwrap();
    let nu = 2f64.exp();
    let c = 30.0;
    let rep = unboundedness_demo(&grid, 1.0, &[nu], c - 2.0).unwrap();
    let expect = japanese(c) / (c - 2.0);
    assert!((rep.ratios[0] / expect - 1.0).abs() < 0.01, "{} vs {expect}", rep.ratios[0]);
}

#[test]
fn factorization_identity_symbol() {
    let rep = quantize_and_factor_check(0.0, 0.0, FactorLadder::default(), AngularSymbol::One).unwrap();
    for l in &rep.levels {
        assert!(l.norm <= 1.0 + 1e-9, "{rep:?}");
        assert!(l.norm > 0.9, "{rep:?}");
    }
    assert!(rep.bounded);
}

#[test]
fn factorization_bounded_on_ladder() {
    for b in [AngularSymbol::One, AngularSymbol::Cosine { beta: 0.5 }] {
        let rep = quantize_and_factor_check(1.0, 0.0, FactorLadder::default(), b).unwrap();
        eprintln!("{b:?}: {:?}", rep.levels.iter().map(|l| l.norm).collect::<Vec<_>>());
        assert!(rep.bounded, "{rep:?}");
    }
}

#[test]
fn factorization_wrong_sign_grows() {
    let rep = quantize_and_factor_check(-1.0, 0.0, FactorLadder::default(), AngularSymbol::One).unwrap();
    eprintln!("{:?}", rep.levels.iter().map(|l| l.norm).collect::<Vec<_>>());
    assert!(rep.levels.windows(2).all(|p| p[1].norm > p[0].norm));
    assert!(!rep.bounded, "{rep:?}");
}

#[test]
fn factorization_sigma_growth() {
    let reps: Vec<_> = [0.0, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&sigma| {
            quantize_and_factor_check(1.0, sigma, FactorLadder::default(), AngularSymbol::Cosine { beta: 0.5 })
                .unwrap()
        })
        .collect();
    let n = fit_sigma_growth(&reps);
    eprintln!("fitted N = {n}; {:?}", reps.iter().map(|r| r.levels.last().unwrap().norm).collect::<Vec<_>>());
    assert!(n.is_finite() && n >= 0.0);
    assert!(reps.iter().all(|r| r.bounded));
}

#[test]
fn symbol_decay_constants() {
    for (i, s) in [0.0, 1.0, 2.0].into_iter().enumerate() {
        let rep = symbol_decay_check(s, 10_000, 100 + i as u64);
        eprintln!("{rep:?}");
        assert!(rep.finite);
        assert_eq!(symbol_decay_violations(&rep, 2.0, 900 + i as u64), 0, "{rep:?}");
    }
}

proptest! {
    #[test]
    fn weights_cancel(x in -20.0f64..40.0, s in -3.0f64..3.0) {
        let a = w(x).powf(s) * w(x).powf(-s);
        prop_assert!((a - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mode_weights_invert(nu in 1.0f64..1e4, s in -3.0f64..3.0) {
        let grid = RadialGrid::new(0.5, 20.0, 200, 2).unwrap();
        let a = mode_weight_vector(&grid, nu, s);
        let b = mode_weight_vector(&grid, nu, -s);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x * y - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn symbol_weight_positive(r in -50.0f64..50.0, e in -50.0f64..50.0, s in 0.0f64..3.0) {
        let v = symbol_weight(-s, r, &[e]);
        prop_assert!(v > 0.0 && v.is_finite());
    }
}
