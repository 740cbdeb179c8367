//! Water-filling, eigen-decomposition, power split and steady-state filter
//! checked against closed forms and brute-force scans written here.

mod common;

use nalgebra::DMatrix;
use nrdf::gauss_source::stationary_state_cov;
use nrdf::nrdf_gauss::{diagonalize, rate_na, reverse_waterfill};
use nrdf::realization::{
    capacity_matched_power, solve_alpha, solve_fixed_point, solve_test_channel_fixed_point,
    total_distortion_residual, FixedPointConfig,
};
use nrdf::{Error, StateSpaceModel};
use proptest::prelude::*;

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, 1..=6)
}

proptest! {
    #[test]
    fn waterfill_kkt(lambda in spectrum(), frac in 0.001f64..0.999) {
        let total: f64 = lambda.iter().sum();
        let d = frac * total;
        let a = reverse_waterfill(&lambda, d).unwrap();
        prop_assert!((a.delta.iter().sum::<f64>() - d).abs() <= 1e-10);
        for (i, (&dl, &l)) in a.delta.iter().zip(&lambda).enumerate() {
            prop_assert!((dl - a.xi.min(l)).abs() <= 1e-10);
            prop_assert_eq!(a.active.contains(&i), l > a.xi);
        }
    }

    #[test]
    fn waterfill_scales_with_source(lambda in spectrum(), frac in 0.01f64..0.99, c in 0.1f64..10.0) {
        let d = frac * lambda.iter().sum::<f64>();
        let a = reverse_waterfill(&lambda, d).unwrap();
        let scaled: Vec<f64> = lambda.iter().map(|l| l * c).collect();
        let b = reverse_waterfill(&scaled, d * c).unwrap();
        prop_assert!((b.xi - c * a.xi).abs() <= 1e-9 * c * a.xi.max(1.0));
        let (ra, rb) = (rate_na(&a, &lambda).unwrap(), rate_na(&b, &scaled).unwrap());
        prop_assert!((ra - rb).abs() <= 1e-9);
    }

    #[test]
    fn rate_is_sum_of_active_log_ratios(lambda in spectrum(), frac in 0.01f64..0.99) {
        let d = frac * lambda.iter().sum::<f64>();
        let a = reverse_waterfill(&lambda, d).unwrap();
        let direct: f64 = lambda.iter().filter(|&&l| l > a.xi).map(|l| 0.5 * (l / a.xi).ln()).sum();
        prop_assert!((rate_na(&a, &lambda).unwrap() - direct).abs() <= 1e-10);
    }

    #[test]
    fn diagonalize_round_trip(seed in any::<u64>(), p in 1usize..=5) {
        let mut r = common::rng(seed);
        let f = DMatrix::from_fn(p, p, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let lam = &f * f.transpose() + DMatrix::identity(p, p) * 0.1;
        let dec = diagonalize(&lam).unwrap();
        let back = dec.e.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&dec.eigenvalues)) * &dec.e;
        prop_assert!((back - &lam).amax() <= 1e-10);
        prop_assert!((&dec.e * dec.e.transpose() - DMatrix::identity(p, p)).amax() <= 1e-12);
        prop_assert!(dec.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        for row in dec.e.row_iter() {
            let big = row.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            prop_assert!(big > 0.0);
        }
    }

    #[test]
    fn matched_power_equalizes_capacity(lambda in spectrum(), frac in 0.01f64..0.99, q in 0.05f64..5.0) {
        let d = frac * lambda.iter().sum::<f64>();
        let a = reverse_waterfill(&lambda, d).unwrap();
        let p = capacity_matched_power(&lambda, &a, q);
        let product: f64 = a.active.iter().map(|&i| lambda[i] / a.delta[i]).product();
        prop_assert!((p - q * (product - 1.0)).abs() <= 1e-9 * p.max(1.0));
        prop_assert!((0.5 * (1.0 + p / q).ln() - rate_na(&a, &lambda).unwrap()).abs() <= 1e-10);
    }

    /// Any split that satisfies the identity is recovered by the quadratic.
    #[test]
    fn power_split_recovers_planted_root(l2 in 0.1f64..5.0, ratio in 1.0f64..4.0, p in 0.1f64..3.0,
                                          q in 0.05f64..2.0, a2 in 0.0f64..1.0) {
        let l1 = l2 * ratio;
        let d = total_distortion_residual(&[l1, l2], &[1.0 - a2, a2], 0.0, p, q);
        let alpha = solve_alpha(&[l1, l2], d, p, q).unwrap();
        prop_assert!((alpha[0] + alpha[1] - 1.0).abs() <= 1e-12);
        prop_assert!(total_distortion_residual(&[l1, l2], &alpha, d, p, q).abs() <= 1e-8 * d.max(1.0));
        // a dense scan finds no better root than the one returned
        let best = (0..=100_000)
            .map(|i| i as f64 / 100_000.0)
            .map(|x| total_distortion_residual(&[l1, l2], &[1.0 - x, x], d, p, q).abs())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(best <= 1e-3 * d.max(1.0));
    }
}

#[test]
fn power_split_without_root_is_infeasible() {
    let (l, d, p, q) = ([4.0, 1.0], 2.0, 3.0, 1.0);
    let scan_min = (0..=1_000_000)
        .map(|i| i as f64 / 1_000_000.0)
        .map(|x| total_distortion_residual(&l, &[1.0 - x, x], d, p, q).abs())
        .fold(f64::INFINITY, f64::min);
    assert!(scan_min > 1.0, "dense scan reaches {scan_min}");
    assert!(matches!(solve_alpha(&l, d, p, q), Err(Error::Infeasible { .. })));
}

/// Expanding the identity with `alpha_1 = 1 - alpha_2` gives the constant
/// `l1 P (P + Q - 2)`; with `P + Q - 1` the planted root is missed by `l1 P`.
#[test]
fn quadratic_constant_matches_expansion() {
    let (l1, l2, p, q, a2) = (3.0, 1.0, 0.8, 0.4, 0.3);
    let d = total_distortion_residual(&[l1, l2], &[1.0 - a2, a2], 0.0, p, q);
    let [a, b, c] = nrdf::realization::two_mode_quadratic(l1, l2, d, p, q);
    assert!((a * a2 * a2 + b * a2 + c).abs() < 1e-12);
    let printed = c + l1 * p;
    assert!((a * a2 * a2 + b * a2 + printed).abs() > 1.0);
}

#[test]
fn symmetric_modes_split_evenly() {
    for (l, p, q) in [(1.0, 0.5, 1.0), (2.5, 1.2, 0.3), (0.7, 2.0, 2.0)] {
        let d = total_distortion_residual(&[l, l], &[0.5, 0.5], 0.0, p, q);
        let alpha = solve_alpha(&[l, l], d, p, q).unwrap();
        assert!((alpha[0] - 0.5).abs() < 1e-6 && (alpha[1] - 0.5).abs() < 1e-6, "{alpha:?}");
    }
}

#[test]
fn more_than_two_modes_unsupported() {
    assert!(matches!(solve_alpha(&[3.0, 2.0, 1.0], 1.0, 1.0, 1.0), Err(Error::UnsupportedModeCount(3))));
}

#[test]
fn stationary_covariance_of_scalar_ar() {
    let m = StateSpaceModel::scalar(0.8, 0.6, 1.0, 1.0);
    let pi = stationary_state_cov(&m).unwrap()[(0, 0)];
    assert!((pi - 0.36 / (1.0 - 0.64)).abs() < 1e-12);
}

/// Scalar steady state by direct iteration of
/// `S' = a^2 S - a^2 c^2 S^2 eta / L + b^2`, `L = c^2 S + g^2`, `eta = 1 - D/L`.
fn scalar_oracle(a: f64, b: f64, c: f64, g: f64, d: f64) -> (f64, f64) {
    let mut s = b * b / (1.0 - a * a);
    for _ in 0..1_000_000 {
        let l = c * c * s + g * g;
        let eta = (1.0 - d / l).max(0.0);
        let next = a * a * s - a * a * c * c * s * s * eta / l + b * b;
        // average consecutive iterates: the undamped map can overshoot
        let next = 0.5 * (s + next);
        if (next - s).abs() < 1e-15 {
            s = next;
            break;
        }
        s = next;
    }
    let l = c * c * s + g * g;
    (s, (0.5 * (l / d).ln()).max(0.0))
}

#[test]
fn scalar_steady_state_matches_direct_iteration() {
    for (a, b, c, g, d) in [(0.9, 1.0, 1.0, 1.0, 0.5), (0.5, 0.3, 2.0, 0.5, 0.1), (-0.7, 1.0, 0.5, 0.2, 0.3), (0.95, 0.2, 1.0, 1.0, 1.0)] {
        let model = StateSpaceModel::scalar(a, b, c, g);
        let (s, rate) = scalar_oracle(a, b, c, g, d);
        let tc = solve_test_channel_fixed_point(&model, d, &FixedPointConfig::default()).unwrap();
        assert!((tc.sigma[(0, 0)] - s).abs() < 1e-8, "test channel {} vs {s}", tc.sigma[(0, 0)]);
        assert!((tc.rate_nats - rate).abs() < 1e-8);
        let fp = solve_fixed_point(&model, d, &FixedPointConfig::default()).unwrap();
        assert!((fp.design.sigma[(0, 0)] - s).abs() < 1e-8, "realization {} vs {s}", fp.design.sigma[(0, 0)]);
        assert!((fp.design.rate_nats - rate).abs() < 1e-8);
    }
}

#[test]
fn rate_curve_is_monotone_for_random_models() {
    let mut r = common::rng(31);
    for _ in 0..10 {
        let model = common::random_stable_model(&mut r);
        let total = nrdf::nrdf_gauss::innovation_covariance(&stationary_state_cov(&model).unwrap(), &model).trace();
        let grid: Vec<f64> = (1..=12).map(|i| total * i as f64 / 12.0).collect();
        let curve = nrdf::nrdf_gauss::rdf_curve(&model, &grid, &FixedPointConfig::default()).unwrap();
        assert!(curve.windows(2).all(|w| w[1].rate_nats <= w[0].rate_nats + 1e-9));
        assert!(curve.last().unwrap().rate_nats <= 1e-9, "{:?}", curve.last());
    }
}

#[test]
fn fixed_points_converge_across_random_models() {
    use rand::Rng;
    let mut r = common::rng(22);
    for _ in 0..300 {
        let model = common::random_stable_model(&mut r);
        let sigma = stationary_state_cov(&model).unwrap_or_else(|e| panic!("{e}\n{}", model.to_json()));
        let total = nrdf::nrdf_gauss::innovation_covariance(&sigma, &model).trace();
        let d = r.random_range(0.05..0.999) * total;
        if let Err(e) = solve_test_channel_fixed_point(&model, d, &FixedPointConfig::default()) {
            panic!("test channel at D={d}: {e}\n{}", model.to_json());
        }
        match solve_fixed_point(&model, d, &FixedPointConfig::default()) {
            Ok(_) | Err(Error::Infeasible { .. }) | Err(Error::UnsupportedModeCount(_)) => {}
            Err(e) => panic!("realization at D={d}: {e}\n{}", model.to_json()),
        }
    }
}
