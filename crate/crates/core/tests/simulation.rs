use drcvar_safety::filter::FilterStatus;
use drcvar_safety::montecarlo::{monte_carlo, trial_rng, McReport};
use drcvar_safety::report::{emit_reports, McTrialRow, Report};
use drcvar_safety::risk::RiskKind;
use drcvar_safety::sim::{
    builtin_scenario, laplace, laplace_scale, run_closed_loop, sample_predictions, NormalAnchor,
    ObstacleMotion, SimRecord,
};
use drcvar_safety::stats::summarize;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn without_timings(mut record: SimRecord) -> SimRecord {
    record.timings.clear();
    record
}

#[test]
fn predictions_follow_the_nominal_track() {
    let mut scenario = builtin_scenario("head_on").unwrap();
    scenario.sample_count = 4000;
    let current = vec![vec![1.0, -0.5]];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bundle = sample_predictions(&scenario, &current, 7, &mut rng);
    assert_eq!(bundle.base_time, 7);
    assert_eq!(bundle.horizon(), scenario.horizon);
    assert_eq!(bundle.sample_count(), 4000);
    let ob = &scenario.obstacles[0];
    for k in [0, 4, 9] {
        let positions = bundle.positions_at(0, k);
        for axis in 0..2 {
            let values: Vec<f64> = positions.iter().map(|p| p[axis]).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let expected = current[0][axis] + (k + 1) as f64 * scenario.dt * ob.velocity[axis];
            let sd = ob.noise_variance[axis].sqrt();
            // four standard errors of the mean, and a 10% band on the variance
            assert!((mean - expected).abs() <= 4.0 * sd / n.sqrt(), "k {k} axis {axis}: {mean} vs {expected}");
            assert!((var / ob.noise_variance[axis] - 1.0).abs() <= 0.1);
        }
    }
}

#[test]
fn laplace_draws_match_variance_and_heavy_tails() {
    let variance = 0.01;
    let b = laplace_scale(variance);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws: Vec<f64> = (0..200_000).map(|_| laplace(b, &mut rng)).collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let m2 = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    assert!((m2 / variance - 1.0).abs() <= 0.05, "variance {m2}");
    assert!(m4 / (m2 * m2) - 3.0 > 2.0, "excess kurtosis {}", m4 / (m2 * m2) - 3.0);
}

#[test]
fn closed_loop_is_reproducible() {
    let scenario = builtin_scenario("intersection").unwrap().with_metric(RiskKind::Cvar);
    let a = run_closed_loop(&scenario, &mut trial_rng(9, RiskKind::Cvar, 2)).unwrap();
    let b = run_closed_loop(&scenario, &mut trial_rng(9, RiskKind::Cvar, 2)).unwrap();
    assert_eq!(a.timings.len(), scenario.step_count);
    assert_eq!(without_timings(a), without_timings(b));
}

#[test]
fn filtered_steps_respect_their_halfspaces() {
    let scenario = builtin_scenario("head_on").unwrap();
    for trial in 0..5 {
        let record = run_closed_loop(&scenario, &mut trial_rng(3, RiskKind::DrCvar, trial)).unwrap();
        assert_eq!(record.steps.len(), scenario.step_count);
        for step in &record.steps {
            assert_eq!(step.halfspaces.len(), scenario.horizon * scenario.obstacles.len());
            if step.status != FilterStatus::Fallback {
                assert!(step.next_step_residual <= 1e-6, "t {}: {}", step.t, step.next_step_residual);
            }
        }
        assert!(record.goal_distance < 0.1);
    }
}

#[test]
fn alternative_readings_still_run() {
    let base = builtin_scenario("head_on").unwrap();
    let mut walk = base.clone();
    walk.obstacle_motion = ObstacleMotion::RandomWalk;
    walk.step_count = 10;
    let mut anchored = base.clone();
    anchored.normal_anchor = NormalAnchor::Reference;
    anchored.step_count = 5;
    for scenario in [walk, anchored] {
        match run_closed_loop(&scenario, &mut ChaCha8Rng::seed_from_u64(1)) {
            Ok(record) => assert!(!record.steps.is_empty()),
            // the reference anchor can leave no safe control once normals flip
            Err(e) => assert!(matches!(
                e,
                drcvar_safety::Error::NoSafeControl | drcvar_safety::Error::StartupInfeasible(_)
            )),
        }
    }
}

#[test]
fn obstacle_truth_tracks_the_nominal_path_with_zero_noise() {
    let mut scenario = builtin_scenario("head_on").unwrap();
    scenario.obstacles[0].noise_variance = vec![0.0, 0.0];
    scenario.step_count = 6;
    let record = run_closed_loop(&scenario, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let ob = &scenario.obstacles[0];
    for step in &record.steps {
        let t = step.t as f64;
        let expected = [ob.start[0] + t * scenario.dt * ob.velocity[0], ob.start[1] + t * scenario.dt * ob.velocity[1]];
        assert!((step.obstacle_positions[0][0] - expected[0]).abs() < 1e-12);
        assert!((step.obstacle_positions[0][1] - expected[1]).abs() < 1e-12);
    }
}

fn small_monte_carlo(jobs: usize) -> Vec<McReport> {
    let mut scenario = builtin_scenario("overtake").unwrap();
    scenario.step_count = 15;
    monte_carlo(&scenario, &[RiskKind::Mean, RiskKind::DrCvar], 4, 17, jobs).unwrap()
}

#[test]
fn monte_carlo_is_independent_of_workers_and_consistent() {
    let serial = small_monte_carlo(1);
    assert_eq!(serial, small_monte_carlo(3));
    for report in &serial {
        assert_eq!(report.per_trial_min_distance.len(), report.trials);
        let distances = report.successful_distances();
        assert_eq!(report.collision_count, distances.iter().filter(|d| **d < 0.0).count());
        assert_eq!(report.summary, summarize(&distances));
        assert_eq!(report.traces.len(), distances.len());
    }
}

#[test]
fn first_trial_matches_a_single_run() {
    let scenario = builtin_scenario("head_on").unwrap();
    let reports = monte_carlo(&scenario, &[RiskKind::Cvar], 1, 4, 1).unwrap();
    let record = run_closed_loop(&scenario.with_metric(RiskKind::Cvar), &mut trial_rng(4, RiskKind::Cvar, 0)).unwrap();
    assert_eq!(reports[0].per_trial_min_distance, vec![Some(record.min_distance())]);
    assert_eq!(reports[0].traces[0], record.distance_trace());
}

fn read(dir: &std::path::Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn attribute(tag: &str, name: &str) -> f64 {
    let key = format!("{name}=\"");
    let start = tag.find(&key).unwrap() + key.len();
    let end = start + tag[start..].find('"').unwrap();
    tag[start..end].parse().unwrap()
}

#[test]
fn monte_carlo_reports_round_trip() {
    let reports = small_monte_carlo(1);
    let dir = tempfile::tempdir().unwrap();
    let manifest = emit_reports(&[Report::MonteCarlo(reports.clone())], dir.path()).unwrap();
    assert!(manifest.files.iter().all(|f| dir.path().join(f).is_file()));

    let parsed: Vec<McReport> = serde_json::from_str(&read(dir.path(), "montecarlo_overtake.json")).unwrap();
    assert_eq!(parsed, reports);

    let mut csv = csv::Reader::from_path(dir.path().join("montecarlo_overtake.csv")).unwrap();
    let rows: Vec<McTrialRow> = csv.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), reports.iter().map(|r| r.trials).sum::<usize>());
    for row in &rows {
        let report = reports.iter().find(|r| r.metric.as_str() == row.metric).unwrap();
        assert_eq!(row.min_distance, report.per_trial_min_distance[row.trial]);
    }

    // box-plot quartiles recomputed from the raw per-trial distances
    let svg = read(dir.path(), "montecarlo_overtake_boxplot.svg");
    let boxes: Vec<&str> = svg.lines().filter(|l| l.starts_with("<g class=\"box\"")).collect();
    assert_eq!(boxes.len(), reports.len());
    for (tag, report) in boxes.iter().zip(&reports) {
        let s = summarize(&report.successful_distances()).unwrap();
        for (name, value) in [("data-min", s.min), ("data-q1", s.q1), ("data-median", s.median), ("data-q3", s.q3), ("data-max", s.max)] {
            assert_eq!(attribute(tag, name), value, "{name}");
        }
    }
}

#[test]
fn simulation_reports_are_deterministic() {
    let scenario = builtin_scenario("head_on").unwrap();
    let record = run_closed_loop(&scenario, &mut trial_rng(1, RiskKind::DrCvar, 0)).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let reports = [Report::Simulation(record.clone())];
    let manifest = emit_reports(&reports, a.path()).unwrap();
    assert_eq!(manifest, emit_reports(&reports, b.path()).unwrap());
    for file in &manifest.files {
        assert_eq!(read(a.path(), file), read(b.path(), file), "{file}");
    }
    let parsed: SimRecord = serde_json::from_str(&read(a.path(), "sim_head_on_drcvar.json")).unwrap();
    assert_eq!(parsed, record);
}
