use drcvar_safety::risk::{drcvar_affine_unbounded, empirical_cvar, empirical_mean, LossSamples};
use proptest::prelude::*;

fn losses() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..60)
}

fn cvar(values: &[f64], alpha: f64) -> f64 {
    empirical_cvar(&LossSamples::new(values.to_vec()).unwrap(), alpha).unwrap()
}

/// Grid minimisation of `τ + (1/(Nα)) Σ max(l − τ, 0)` with step 1e-4 of the
/// sample range.
fn grid_cvar(values: &[f64], alpha: f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let scale = 1.0 / (values.len() as f64 * alpha);
    let objective = |tau: f64| tau + scale * values.iter().map(|l| (l - tau).max(0.0)).sum::<f64>();
    if range == 0.0 {
        return objective(lo);
    }
    (0..=10_000)
        .map(|i| objective(lo + range * i as f64 * 1e-4))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn translation_equivariance(v in losses(), alpha in 0.01..=1.0f64, c in -50.0..50.0f64) {
        let shifted: Vec<f64> = v.iter().map(|l| l + c).collect();
        prop_assert!((cvar(&shifted, alpha) - cvar(&v, alpha) - c).abs() <= 1e-10 * (1.0 + c.abs()));
    }

    #[test]
    fn positive_homogeneity(v in losses(), alpha in 0.01..=1.0f64, c in 0.0..20.0f64) {
        let scaled: Vec<f64> = v.iter().map(|l| l * c).collect();
        let expected = c * cvar(&v, alpha);
        prop_assert!((cvar(&scaled, alpha) - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn monotone_in_alpha(v in losses(), a in 0.01..=1.0f64, b in 0.01..=1.0f64) {
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(cvar(&v, small) >= cvar(&v, large) - 1e-12);
    }

    #[test]
    fn mean_is_a_lower_bound(v in losses(), alpha in 0.01..=1.0f64) {
        let samples = LossSamples::new(v.clone()).unwrap();
        prop_assert!(empirical_mean(&samples) <= cvar(&v, alpha) + 1e-12);
        prop_assert!((cvar(&v, 1.0) - empirical_mean(&samples)).abs() <= 1e-10 * (1.0 + empirical_mean(&samples).abs()));
    }

    #[test]
    fn matches_tau_grid(v in prop::collection::vec(-5.0..5.0f64, 1..50), alpha in 0.05..=1.0f64) {
        let exact = cvar(&v, alpha);
        let grid = grid_cvar(&v, alpha);
        // the grid can only overshoot the true minimum
        prop_assert!(grid >= exact - 1e-9);
        prop_assert!(grid - exact <= 1e-3);
    }

    #[test]
    fn drcvar_exceeds_cvar_by_radius_over_alpha(
        points in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 1..40),
        angle in 0.0..std::f64::consts::TAU,
        alpha in 0.05..=1.0f64,
        eps in 0.0..0.5f64,
        g in -2.0..2.0f64,
    ) {
        let h = [angle.cos(), angle.sin()];
        let base = drcvar_affine_unbounded(&points, &h, g, alpha, 0.0).unwrap();
        let robust = drcvar_affine_unbounded(&points, &h, g, alpha, eps).unwrap();
        prop_assert!((robust - base - eps / alpha).abs() <= 1e-9);
    }
}

#[test]
fn worked_values() {
    let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
    assert!((cvar(&v, 0.2) - 9.5).abs() < 1e-12);
    assert!((cvar(&v, 0.25) - 9.2).abs() < 1e-12);
    assert!((cvar(&v, 1.0) - 5.5).abs() < 1e-12);
}
