//! End-to-end checks of the public API against the brute-force oracles in
//! `support`. Smaller than the acceptance run, so they stay in the default
//! harness.

mod support;

use iap_core::directions::{mu1, DirectionSet};
use iap_core::fitter::{fit_isometry, residual, FitParams};
use iap_core::generators::{iap_failure_experiment, FailureExperiment};
use iap_core::geom::{diameter, jung_constant, random_unit, smallest_enclosing_ball, IsometryTransform};
use iap_core::nearmetric::epsilon_of;
use proptest::prelude::*;
use rand::Rng;
use support::*;

#[test]
fn enclosing_ball_is_minimal_against_a_centre_grid() {
    let mut r = rng(1);
    for _ in 0..20 {
        let pts: Vec<_> = (0..30).map(|_| v(&[r.random_range(-3.0..3.0), r.random_range(-1.0..1.0)])).collect();
        let ball = smallest_enclosing_ball(&pts).unwrap();
        assert!(pts.iter().all(|p| (p - &ball.center).norm() <= ball.radius * (1.0 + 1e-9)));
        let mut best = f64::INFINITY;
        for i in -60..=60 {
            for j in -60..=60 {
                let c = v(&[i as f64 * 0.05, j as f64 * 0.05]);
                best = best.min(pts.iter().map(|p| (p - &c).norm()).fold(0.0, f64::max));
            }
        }
        assert!(ball.radius <= best + 1e-9, "ball {} vs grid {best}", ball.radius);
        assert!(ball.radius >= best - 0.05);
        assert!(ball.radius <= jung_constant(2).unwrap() * diameter(&pts) + 1e-12);
    }
}

#[test]
fn mu1_agrees_with_the_grid_oracle() {
    let mut r = rng(2);
    for n in [2, 3] {
        for _ in 0..10 {
            let k = r.random_range(n..8);
            let dirs: Vec<_> = (0..k).map(|_| random_unit(n, &mut r)).collect();
            let set = DirectionSet::from_unit_vectors(n, dirs.clone()).unwrap();
            let exact = mu1(&set);
            let grid = grid_min_max_abs(&dirs, 20_000);
            // The grid value is an upper bound that the zoom drives down to the minimum.
            assert!(exact <= grid + 1e-9, "n={n}: mu1 {exact} above grid {grid}");
            assert!(grid - exact < 1e-6, "n={n}: mu1 {exact} vs grid {grid}");
        }
    }
}

#[test]
fn noisy_half_space_fit_is_certified() {
    let mut r = rng(3);
    for n in [2, 3] {
        let pts = half_space(n, 800, 100.0, &mut r);
        let sample = noisy_isometry(&pts, 0.05, &mut r);
        let (t, cert) = fit_isometry(&sample, &FitParams::default()).unwrap();
        assert!(cert.passed, "n={n}: residual {} bound {}", cert.residual, cert.bound);
        assert!(cert.consistent());
        assert!((residual(&sample, &t).unwrap() - cert.residual).abs() < 1e-12);
        assert!(cert.eps <= 2.0 * 0.05 + 1e-12);
    }
}

#[test]
fn failure_experiment_beats_the_planar_brute_force() {
    let exp = FailureExperiment {
        m: 25.0,
        wedge_count: 60,
        ball_count: 20,
        ..FailureExperiment::default()
    };
    let report = iap_failure_experiment(&exp).unwrap();
    assert!(report.above_threshold);
    let brute = brute_force_isometry_residual(&exp.sample().unwrap(), 0.02, 9, [0.0, 2.5], 5.0, 12);
    assert!(brute >= report.threshold, "brute force {brute} below {}", report.threshold);
}

fn small_points(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0..50.0f64, n), 3..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isometries_have_zero_defect(pts in small_points(3), seed in 0u64..1000) {
        let mut r = rng(seed);
        let q = iap_core::geom::random_orthogonal(3, &mut r);
        let t = IsometryTransform::new(q, random_unit(3, &mut r) * 7.0).unwrap();
        let pairs = pts.iter().map(|c| {
            let x = v(c);
            let y = t.apply(&x).unwrap();
            (x, y)
        });
        if let Ok(sample) = iap_core::CorrespondenceSample::new(pairs.collect()) {
            prop_assert!(epsilon_of(&sample).unwrap() < 1e-10);
        }
    }

    #[test]
    fn inverse_undoes_apply(c in prop::collection::vec(-1e3..1e3f64, 2), seed in 0u64..1000) {
        let mut r = rng(seed);
        let t = IsometryTransform::new(iap_core::geom::random_orthogonal(2, &mut r), random_unit(2, &mut r)).unwrap();
        let x = v(&c);
        let back = t.inverse().apply(&t.apply(&x).unwrap()).unwrap();
        prop_assert!((back - x).norm() < 1e-9);
    }
}
