use std::f64::consts::PI;

use gausslattice::theta::{self, eval_with, DisplacedSumInput, Method};
use gausslattice::verify::default_grids;
use gausslattice::{eval_auto, eval_direct, eval_transformed, oracle_eval, GridSpec};
use proptest::prelude::*;

const DISPLACEMENTS: [f64; 5] = [0.0, 0.1, 0.25, 0.4, 0.5];

fn auto(a: f64, s: f64, tol: f64) -> f64 {
    eval_auto(&DisplacedSumInput::new(a, s, tol).unwrap())
        .unwrap()
        .value
}

#[test]
fn representations_agree() {
    let grid = GridSpec::logarithmic(0.05, 20.0, 80).unwrap().points();
    for a in DISPLACEMENTS {
        for &s in &grid {
            let input = DisplacedSumInput::new(a, s, 1e-14).unwrap();
            let d = eval_direct(&input).unwrap();
            let t = eval_transformed(&input).unwrap();
            let allowed = d.truncation_bound + t.truncation_bound + 1e-13 * (1.0 + d.value);
            assert!(
                (d.value - t.value).abs() <= allowed,
                "a={a} s={s}: {} vs {}",
                d.value,
                t.value
            );
        }
    }
}

#[test]
fn monotone_in_scale() {
    let grid = GridSpec::linear_step(0.01, 10.0, 0.01).unwrap().points();
    for a in DISPLACEMENTS {
        let values: Vec<f64> = grid.iter().map(|&s| auto(a, s, 1e-14)).collect();
        for (w, s) in values.windows(2).zip(&grid) {
            assert!(w[0] <= w[1], "a={a} s={s}: {} > {}", w[0], w[1]);
        }
    }
    // Below s ≈ 0.17, y_0 - 1 is under one ulp, so strictness is only
    // observable above that.
    let grid = GridSpec::linear_step(0.2, 10.0, 0.01).unwrap().points();
    let values: Vec<f64> = grid.iter().map(|&s| auto(0.0, s, 1e-14)).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn truncation_bound_is_honest_at_loose_tolerances() {
    let grid = GridSpec::logarithmic(0.05, 20.0, 40).unwrap().points();
    for tol in [1e-2, 1e-4, 1e-7, 1e-10] {
        for method in [Method::Direct, Method::Transformed] {
            for a in DISPLACEMENTS {
                for &s in &grid {
                    let r = eval_with(method, &DisplacedSumInput::new(a, s, tol).unwrap()).unwrap();
                    let truth = oracle_eval(a, s).unwrap();
                    assert!(r.truncation_bound <= tol);
                    assert!(
                        (truth - r.value).abs() <= r.truncation_bound + 1e-13 * (1.0 + r.value),
                        "{method} a={a} s={s} tol={tol}: err {} bound {}",
                        (truth - r.value).abs(),
                        r.truncation_bound
                    );
                }
            }
        }
    }
}

#[test]
fn reports_identical_across_threads() {
    let grid = default_grids::identity().points();
    let serial: Vec<_> = grid
        .iter()
        .map(|&s| eval_auto(&DisplacedSumInput::new(0.3, s, 1e-13).unwrap()).unwrap())
        .collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..4)
            .map(|_| {
                scope.spawn(|| {
                    grid.iter()
                        .map(|&s| {
                            eval_auto(&DisplacedSumInput::new(0.3, s, 1e-13).unwrap()).unwrap()
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), serial);
        }
    });
}

#[test]
fn functional_equation_on_log_grid() {
    for s in default_grids::identity().points() {
        let lhs = auto(0.0, s, 1e-15);
        let rhs = theta::SQRT_PI * s * auto(0.0, 1.0 / (PI * s), 1e-15);
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs), "s={s}");
    }
}

proptest! {
    // Displacements on a dyadic lattice, where a, 1 - a and -a are all exact.
    #[test]
    fn symmetric_displacements_are_bit_identical(n in 0u32..(1 << 21), s in 0.0f64..25.0) {
        let a = n as f64 / (1u64 << 20) as f64;
        let base = auto(a, s, 1e-13);
        prop_assert_eq!(base.to_bits(), auto(1.0 - a, s, 1e-13).to_bits());
        prop_assert_eq!(base.to_bits(), auto(-a, s, 1e-13).to_bits());
        prop_assert_eq!(base.to_bits(), auto(a + 3.0, s, 1e-13).to_bits());
    }

    #[test]
    fn canonical_displacement_in_range(a in -1e6f64..1e6) {
        let c = theta::canonicalize_displacement(a).unwrap();
        prop_assert!((0.0..=0.5).contains(&c));
        let d = (a.abs().fract() - c).abs().min((1.0 - a.abs().fract() - c).abs());
        prop_assert!(d <= 1e-9);
    }

    #[test]
    fn displaced_sum_dominated_by_centered(a in -2.0f64..2.0, s in 0.0f64..30.0) {
        prop_assert!(auto(a, s, 1e-13) <= auto(0.0, s, 1e-13));
    }

    #[test]
    fn value_nonnegative_and_bound_within_tol(
        a in 0.0f64..1.0,
        s in 0.0f64..50.0,
        tol_exp in -15.0f64..-1.0,
    ) {
        let tol = 10f64.powf(tol_exp);
        let r = eval_auto(&DisplacedSumInput::new(a, s, tol).unwrap()).unwrap();
        prop_assert!(r.value >= 0.0);
        prop_assert!(r.truncation_bound <= tol);
        prop_assert!(r.terms <= theta::MAX_TERMS);
    }

    #[test]
    fn auto_is_the_cheaper_representation(s in 0.01f64..100.0) {
        let d = theta::truncation_terms(Method::Direct, s, 1e-14).unwrap();
        let t = theta::truncation_terms(Method::Transformed, s, 1e-14).unwrap();
        let r = eval_auto(&DisplacedSumInput::new(0.0, s, 1e-14).unwrap()).unwrap();
        prop_assert_eq!(r.terms, d.min(t));
    }
}
