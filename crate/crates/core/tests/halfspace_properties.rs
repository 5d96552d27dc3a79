use drcvar_safety::geometry::ConvexShape;
use drcvar_safety::halfspace::{compute_halfspace, evaluate_risk};
use drcvar_safety::program::{build_drcvar_program, DrcvarProblem, SolveStatus};
use drcvar_safety::risk::{RiskSpec, Support, SupportPolytope};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn disk() -> ConvexShape {
    ConvexShape::disk(0.3).unwrap()
}

fn cloud(count: usize, center: [f64; 2], spread: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            center
                .iter()
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + spread * z
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Instance {
    samples: Vec<Vec<f64>>,
    h: Vec<f64>,
    alpha: f64,
    delta: f64,
}

fn instance() -> impl Strategy<Value = Instance> {
    (
        any::<u64>(),
        prop::sample::select(vec![10usize, 50, 100]),
        0.0..std::f64::consts::TAU,
        0.05..=1.0f64,
        0.0..0.5f64,
        0.01..0.5f64,
    )
        .prop_map(|(seed, count, angle, alpha, delta, spread)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let center = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            Instance {
                samples: cloud(count, center, spread, &mut rng),
                h: vec![angle.cos(), angle.sin()],
                alpha,
                delta,
            }
        })
}

fn offset(inst: &Instance, spec: RiskSpec) -> f64 {
    compute_halfspace(&inst.samples, &inst.h, &spec, &disk(), &disk())
        .unwrap()
        .g_tilde
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn more_radius_is_more_conservative(inst in instance(), e1 in 0.0..0.5f64, e2 in 0.0..0.5f64) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = offset(&inst, RiskSpec::drcvar(inst.alpha, inst.delta, lo));
        let b = offset(&inst, RiskSpec::drcvar(inst.alpha, inst.delta, hi));
        prop_assert!(a <= b + 1e-12);
    }

    #[test]
    fn more_tolerance_is_less_conservative(inst in instance(), d1 in 0.0..0.5f64, d2 in 0.0..0.5f64, eps in 0.0..0.3f64) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        for spec in [
            |_a: f64, d: f64, _e: f64| RiskSpec::mean(d),
            |a: f64, d: f64, _e: f64| RiskSpec::cvar(a, d),
            |a: f64, d: f64, e: f64| RiskSpec::drcvar(a, d, e),
        ] {
            let loose = offset(&inst, spec(inst.alpha, hi, eps));
            let tight = offset(&inst, spec(inst.alpha, lo, eps));
            prop_assert!(loose <= tight + 1e-12);
        }
    }

    #[test]
    fn metrics_are_ordered(inst in instance(), eps in 1e-6..0.5f64) {
        let mean = offset(&inst, RiskSpec::mean(inst.delta));
        let cvar = offset(&inst, RiskSpec::cvar(inst.alpha, inst.delta));
        let dr = offset(&inst, RiskSpec::drcvar(inst.alpha, inst.delta, eps));
        prop_assert!(mean <= cvar + 1e-12);
        prop_assert!(cvar < dr);
    }

    #[test]
    fn risk_constraint_is_active(inst in instance(), eps in 0.0..0.3f64) {
        for spec in [
            RiskSpec::mean(inst.delta),
            RiskSpec::cvar(inst.alpha, inst.delta),
            RiskSpec::drcvar(inst.alpha, inst.delta, eps),
        ] {
            let hs = compute_halfspace(&inst.samples, &inst.h, &spec, &disk(), &disk()).unwrap();
            let risk = evaluate_risk(&hs, &inst.samples, &spec).unwrap();
            prop_assert!((risk - inst.delta).abs() <= 1e-6, "{:?}: {risk} vs {}", spec.kind, inst.delta);
            prop_assert!((hs.g_star - hs.g_tilde - 0.6).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_radius_collapses_to_cvar(inst in instance()) {
        let cvar = offset(&inst, RiskSpec::cvar(inst.alpha, inst.delta));
        let dr = offset(&inst, RiskSpec::drcvar(inst.alpha, inst.delta, 0.0));
        prop_assert!((cvar - dr).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn huge_box_program_matches_closed_form(inst in instance(), eps in 0.0..0.3f64) {
        let spec = RiskSpec::drcvar(inst.alpha, inst.delta, eps);
        let closed = offset(&inst, spec.clone());
        let boxed = offset(&inst, spec.with_support(Support::Polytope(SupportPolytope::square(-1e6, 1e6))));
        prop_assert!((closed - boxed).abs() <= 1e-5, "closed {closed} program {boxed}");
    }

    // A support that clips the samples' spread can only relax the bound.
    #[test]
    fn bounded_support_is_no_more_conservative(inst in instance(), eps in 0.01..0.3f64) {
        let spec = RiskSpec::drcvar(inst.alpha, inst.delta, eps);
        let closed = offset(&inst, spec.clone());
        let boxed = offset(&inst, spec.with_support(Support::Polytope(SupportPolytope::square(-3.5, 3.5))));
        prop_assert!(boxed <= closed + 1e-6);
    }
}

#[test]
fn program_certificates_up_to_1500_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let support = Support::Polytope(SupportPolytope::square(-1.5, 1.5));
    let (alpha, delta, epsilon) = (0.2, 0.1, 0.05);
    for count in [10, 100, 500, 1500] {
        let samples = cloud(count, [0.5, 0.0], 0.1, &mut rng);
        let h = [0.868_243_142_124_459, 0.496_138_938_356_834];
        let program = build_drcvar_program(&DrcvarProblem {
            samples: &samples,
            h: &h,
            alpha,
            delta,
            epsilon,
            support: &support,
            inflation: 0.6,
            ground_norm: Default::default(),
        })
        .unwrap();
        let solution = program.solve();
        assert_eq!(solution.status, SolveStatus::Optimal, "Ns = {count}");
        assert!(solution.residuals.gap <= 1e-7, "Ns = {count}: gap {}", solution.residuals.gap);
        assert!(program.max_violation(&solution.primal) <= 1e-6);

        // the risk budget binds at the optimum
        let lambda = solution.primal[program.block("lambda").unwrap().start];
        let eta = &solution.primal[program.block("eta").unwrap()];
        let budget = lambda * epsilon + eta.iter().sum::<f64>() / count as f64;
        assert!((budget - delta).abs() <= 1e-6, "Ns = {count}: budget {budget}");
    }
}

#[test]
fn example_offsets_differ_by_radius_over_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples = cloud(100, [0.5, 0.0], 0.1, &mut rng);
    let h = [0.868_243_142_124_459, 0.496_138_938_356_834];
    let cvar = compute_halfspace(&samples, &h, &RiskSpec::cvar(0.2, 0.1), &disk(), &disk()).unwrap();
    let dr = compute_halfspace(&samples, &h, &RiskSpec::drcvar(0.2, 0.1, 0.05), &disk(), &disk()).unwrap();
    assert!((dr.g_tilde - cvar.g_tilde - 0.25).abs() <= 1e-9);
}
