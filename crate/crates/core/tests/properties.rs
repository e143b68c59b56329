use proptest::prelude::*;

use sgdlab::landscape::{KCriticalSpec, Landscape};
use sgdlab::noise::{NoiseModel, Regime, SlowlyVarying};
use sgdlab::rrw::{exit_probability_bounds, exponential_roots, rrw_step, RrwSpec};
use sgdlab::sgd::{run_with, step, SgdRun, StopRule};
use sgdlab::stats::wilson;
use sgdlab::timescales::TimeScaleSpec;

/// Moment generating function of the two-sided exponential law.
fn phi(a: f64, b: f64, lambda: f64) -> f64 {
    let (q, r) = (a / (a + b), b / (a + b));
    r * b / (lambda + b) + q * a / (a - lambda)
}

fn brackets(g: &impl Fn(f64) -> f64, mu: f64) -> bool {
    let h = 8.0 * f64::EPSILON * mu;
    g(mu - h).signum() != g(mu + h).signum()
}

proptest! {
    #[test]
    fn rrw_step_follows_the_branch(x in -1e3f64..1e3, xi in -50f64..50.0, cl in 0.1f64..10.0, cr in 0.1f64..10.0) {
        let spec = RrwSpec::new(NoiseModel::double_exponential(1.0, 1.0).unwrap(), cl, cr).unwrap();
        let expected = if x >= 0.0 { x + xi + cr } else { x + xi - cl };
        prop_assert_eq!(rrw_step(x, xi, &spec), expected);
    }

    #[test]
    fn sgd_step_is_gradient_plus_scaled_noise(x in -1.8f64..1.8, xi in -100f64..100.0, eps in 1e-5f64..0.5) {
        let land = Landscape::double_well();
        let got = step(x, &land, eps, xi);
        let want = x - eps * land.derivative(x) + eps * xi;
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn double_well_derivative_is_continuous(x in -3f64..3.0) {
        let land = Landscape::double_well();
        let h = 1e-9;
        prop_assert!((land.derivative(x + h) - land.derivative(x - h)).abs() < 1e-6);
    }

    #[test]
    fn n_eps_grows_as_epsilon_shrinks(e in 1e-6f64..0.5, shrink in 1.01f64..10.0, alpha in 1.05f64..1.95) {
        for spec in [
            TimeScaleSpec::h1(alpha, SlowlyVarying::ONE),
            TimeScaleSpec::h2(SlowlyVarying::ONE),
            TimeScaleSpec::power_law(Regime::H1, 1.4, 3.0),
        ] {
            prop_assert!(spec.n_eps(e / shrink).unwrap() >= spec.n_eps(e).unwrap());
        }
    }

    #[test]
    fn cramer_roots_solve_their_equations(a in 0.3f64..3.0, b in 0.3f64..3.0, cl in 0.5f64..6.0, cr in 0.5f64..6.0) {
        let r = exponential_roots(a, b, cl, cr).unwrap();
        // Near a pole the residual is limited by float spacing, so accept a
        // sign change across a few ulps as well.
        let phi_down = |mu: f64| phi(a, b, -mu) * (-mu * cr).exp() - 1.0;
        let phi_up = |mu: f64| phi(a, b, mu) * (-mu * cl).exp() - 1.0;
        prop_assert!(r.residual_down <= 1e-10 || brackets(&phi_down, r.mu_down));
        prop_assert!(r.residual_up <= 1e-10 || brackets(&phi_up, r.mu_up));
        prop_assert!(r.mu_down > 0.0 && r.mu_down < b);
        prop_assert!(r.mu_up > 0.0 && r.mu_up < a);
        prop_assert!(r.p_down > 0.0 && r.p_down < 1.0 && r.p_up > 0.0 && r.p_up < 1.0);
        let (left, right) = exit_probability_bounds(r.p_down, r.p_up).unwrap();
        prop_assert!((0.0..=1.0).contains(&left) && (0.0..=1.0).contains(&right));
    }

    #[test]
    fn wilson_interval_covers_the_estimate(n in 1u64..100_000, frac in 0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (centre, half) = wilson(k, n, 1.96);
        let (lo, hi) = (centre - half, centre + half);
        let p = k as f64 / n as f64;
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
    }
}

#[test]
fn noiseless_sgd_descends_into_the_nearest_well() {
    let land = Landscape::double_well();
    for (x0, target) in [(0.3, 1.0), (1.7, 1.0), (-0.2, -1.0), (-1.5, -1.0)] {
        let cfg = SgdRun::new(0.01, x0, 5_000, 0);
        let s = run_with(&cfg, &land, StopRule::FixedSteps, || 0.0).unwrap();
        assert!((s.final_x - target).abs() < 1e-6, "{x0} -> {}", s.final_x);
        assert!(land.value(s.final_x) <= land.value(x0));
    }
}

#[test]
fn k_critical_landscape_is_flat_to_order_k_at_zero() {
    for k in [1u32, 2, 3] {
        let land = Landscape::k_critical(KCriticalSpec { k, c: 0.0, lead_coeff: -1.0, delta: 1.0 }).unwrap();
        assert!(land.derivative(0.0).abs() < 1e-12);
        let h = 1e-3;
        let ratio = land.derivative(h).abs() / h.powi(k as i32);
        assert!(ratio.is_finite() && ratio > 0.0, "k = {k}: ratio {ratio}");
    }
}
