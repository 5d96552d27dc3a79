//! Scenario definitions, obstacle prediction sampling and true-motion
//! realisation, and the closed-loop planner → halfspaces → filter pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{double_integrator, reference_plan, PlannerConfig};
use crate::error::{Error, Result};
use crate::filter::{filter_step, FallbackBuffer, FilterConfig, FilterStatus};
use crate::geometry::{support, ConvexShape};
use crate::halfspace::{halfspaces_for_horizon, SafeHalfspace};
use crate::risk::{RiskKind, RiskSpec};
use crate::vector::{norm, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Realization {
    Gaussian,
    Laplace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleModel {
    pub start: Vec<f64>,
    pub velocity: Vec<f64>,
    pub shape: ConvexShape,
    /// Diagonal of the per-step position noise covariance.
    pub noise_variance: Vec<f64>,
    pub realization: Realization,
}

/// Sampled obstacle futures: `per_obstacle[i][s][k]` is the position of
/// obstacle `i` in sample `s` at step `base_time + k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionBundle {
    pub per_obstacle: Vec<Vec<Vec<Vec<f64>>>>,
    pub base_time: usize,
}

impl PredictionBundle {
    pub fn horizon(&self) -> usize {
        self.per_obstacle
            .first()
            .and_then(|samples| samples.first())
            .map_or(0, Vec::len)
    }

    pub fn sample_count(&self) -> usize {
        self.per_obstacle.first().map_or(0, Vec::len)
    }

    /// All sample positions of one obstacle at horizon index `k`.
    pub fn positions_at(&self, obstacle: usize, k: usize) -> Vec<Vec<f64>> {
        self.per_obstacle[obstacle]
            .iter()
            .map(|trajectory| trajectory[k].clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub dt: f64,
    /// Double-integrator states `(px, py, vx, vy)`.
    pub ego_start: Vec<f64>,
    pub ego_goal: Vec<f64>,
    pub ego_shape: ConvexShape,
    pub obstacles: Vec<ObstacleModel>,
    pub horizon: usize,
    pub sample_count: usize,
    pub risk: RiskSpec,
    pub step_count: usize,
    pub seed: u64,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub normal_anchor: NormalAnchor,
    #[serde(default)]
    pub obstacle_motion: ObstacleMotion,
}

/// How realised obstacle positions relate to the nominal constant-velocity
/// track.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleMotion {
    /// Each step moves from the current true position and adds fresh noise,
    /// so deviations accumulate; predictions start from the true position.
    RandomWalk,
    /// The true position is the nominal track plus independent noise at each
    /// step; predictions are drawn around the nominal track.
    #[default]
    AroundNominal,
}

/// Ego positions the halfspace normals are drawn from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalAnchor {
    /// The obstacle-unaware reference. Its normal flips once the reference
    /// passes through an obstacle, which makes the horizon constraints
    /// contradictory.
    Reference,
    /// The previous filtered trajectory advanced by one step; the current ego
    /// position on the first step.
    #[default]
    PreviousFiltered,
}

fn anchor_positions(
    anchor: NormalAnchor,
    reference_positions: &[Vec<f64>],
    previous_filtered: Option<&[Vec<f64>]>,
) -> Vec<Vec<f64>> {
    let horizon = reference_positions.len() - 1;
    match (anchor, previous_filtered) {
        (NormalAnchor::Reference, _) => reference_positions[1..].to_vec(),
        (NormalAnchor::PreviousFiltered, None) => vec![reference_positions[0].clone(); horizon],
        (NormalAnchor::PreviousFiltered, Some(prev)) => {
            let last = prev.last().cloned().unwrap_or_else(|| reference_positions[0].clone());
            (0..horizon)
                .map(|k| prev.get(k + 2).cloned().unwrap_or_else(|| last.clone()))
                .collect()
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("scenario '{}': {msg}", self.name)));
        if self.step_count == 0 {
            return bad("step_count must be at least 1");
        }
        if self.sample_count == 0 {
            return bad("sample_count must be at least 1");
        }
        if self.horizon == 0 || self.horizon != self.filter.horizon {
            return bad("horizon must be positive and match the filter horizon");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.ego_start.len() != 4 || self.ego_goal.len() != 4 {
            return bad("ego states must have 4 components");
        }
        self.ego_shape.validate()?;
        self.risk.validate()?;
        for ob in &self.obstacles {
            ob.shape.validate()?;
            if ob.start.len() != 2 || ob.velocity.len() != 2 || ob.noise_variance.len() != 2 {
                return bad("obstacle vectors must be 2-dimensional");
            }
            if ob.noise_variance.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad("noise variances must be nonnegative");
            }
        }
        Ok(())
    }

    pub fn with_metric(&self, kind: RiskKind) -> Self {
        ScenarioConfig {
            risk: self.risk.with_kind(kind),
            ..self.clone()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scenario: ScenarioConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        scenario.validate()?;
        Ok(scenario)
    }
}

fn gaussian_noise(variance: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    variance
        .iter()
        .map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            z * v.sqrt()
        })
        .collect()
}

/// Zero-mean Laplace draw with scale `b`, by inverse CDF.
pub fn laplace(scale: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Laplace scale with variance `variance` (`Var = 2 b²`).
pub fn laplace_scale(variance: f64) -> f64 {
    (variance / 2.0).sqrt()
}

/// Nominal constant-velocity futures from the current obstacle positions, each
/// step perturbed by independent Gaussian noise.
pub fn sample_predictions(
    scenario: &ScenarioConfig,
    current_positions: &[Vec<f64>],
    t: usize,
    rng: &mut impl Rng,
) -> PredictionBundle {
    let per_obstacle = scenario
        .obstacles
        .iter()
        .zip(current_positions)
        .map(|(ob, p)| {
            (0..scenario.sample_count)
                .map(|_| {
                    (1..=scenario.horizon)
                        .map(|k| {
                            let noise = gaussian_noise(&ob.noise_variance, rng);
                            (0..p.len())
                                .map(|j| p[j] + k as f64 * scenario.dt * ob.velocity[j] + noise[j])
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    PredictionBundle {
        per_obstacle,
        base_time: t,
    }
}

/// True next position: one constant-velocity step plus realisation noise with
/// the prediction covariance.
pub fn realize_step(obstacle: &ObstacleModel, current: &[f64], dt: f64, rng: &mut impl Rng) -> Vec<f64> {
    let noise: Vec<f64> = match obstacle.realization {
        Realization::Gaussian => gaussian_noise(&obstacle.noise_variance, rng),
        Realization::Laplace => obstacle
            .noise_variance
            .iter()
            .map(|v| laplace(laplace_scale(*v), rng))
            .collect(),
    };
    current
        .iter()
        .zip(&obstacle.velocity)
        .zip(noise)
        .map(|((p, v), n)| p + dt * v + n)
        .collect()
}

/// `‖y − p‖ − r_A − r_O`; negative values mean the bodies overlap.
pub fn distance_to_collision(y: &[f64], p: &[f64], ego_radius: f64, obstacle_radius: f64) -> f64 {
    norm(&sub(y, p)) - ego_radius - obstacle_radius
}

/// Radius of the smallest origin-centred disk containing the shape.
pub fn bounding_radius(shape: &ConvexShape) -> f64 {
    match shape {
        ConvexShape::Disk { radius } => *radius,
        ConvexShape::Polytope { .. } => (0..360)
            .map(|k| {
                let a = (k as f64).to_radians();
                support(shape, &[a.cos(), a.sin()]).unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// Ego state at `t`, before the control is applied.
    pub ego_state: Vec<f64>,
    pub obstacle_positions: Vec<Vec<f64>>,
    pub control: Vec<f64>,
    pub status: FilterStatus,
    pub reference_positions: Vec<Vec<f64>>,
    pub filtered_positions: Vec<Vec<f64>>,
    pub halfspaces: Vec<SafeHalfspace>,
    /// Ego residual of each step-`t+1` halfspace at the ego's next position.
    pub next_step_residual: f64,
    /// Distance to collision per obstacle after the step.
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub planner_ms: f64,
    pub halfspace_ms: f64,
    pub filter_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub scenario: String,
    pub metric: RiskKind,
    pub steps: Vec<StepRecord>,
    pub initial_distances: Vec<f64>,
    pub final_state: Vec<f64>,
    pub final_obstacle_positions: Vec<Vec<f64>>,
    pub goal_distance: f64,
    pub fallback_steps: usize,
    /// Wall-clock timings; excluded from determinism comparisons.
    pub timings: Vec<StepTiming>,
}

impl SimRecord {
    /// Smallest distance to collision over all obstacles and steps.
    pub fn min_distance(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(|s| s.distances.iter())
            .chain(&self.initial_distances)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Per-step minimum distance over obstacles, starting with the initial state.
    pub fn distance_trace(&self) -> Vec<f64> {
        std::iter::once(self.initial_distances.iter().copied().fold(f64::INFINITY, f64::min))
            .chain(
                self.steps
                    .iter()
                    .map(|s| s.distances.iter().copied().fold(f64::INFINITY, f64::min)),
            )
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write every filter program of the run in LP format under this directory.
    pub dump_dir: Option<PathBuf>,
}

pub fn run_closed_loop(scenario: &ScenarioConfig, rng: &mut impl Rng) -> Result<SimRecord> {
    run_closed_loop_with(scenario, rng, &RunOptions::default())
}

pub fn run_closed_loop_with(
    scenario: &ScenarioConfig,
    rng: &mut impl Rng,
    options: &RunOptions,
) -> Result<SimRecord> {
    scenario.validate()?;
    let sys = double_integrator(scenario.dt)?;
    let ego_radius = bounding_radius(&scenario.ego_shape);
    let radii: Vec<f64> = scenario.obstacles.iter().map(|o| bounding_radius(&o.shape)).collect();
    let shapes: Vec<ConvexShape> = scenario.obstacles.iter().map(|o| o.shape.clone()).collect();

    let mut x = scenario.ego_start.clone();
    let mut obstacles: Vec<Vec<f64>> = scenario.obstacles.iter().map(|o| o.start.clone()).collect();
    let mut nominal = obstacles.clone();
    let distances_now = |x: &[f64], obstacles: &[Vec<f64>]| -> Vec<f64> {
        obstacles
            .iter()
            .zip(&radii)
            .map(|(p, r)| distance_to_collision(&x[..2], p, ego_radius, *r))
            .collect()
    };
    let initial_distances = distances_now(&x, &obstacles);
    let mut buffer = FallbackBuffer::new();
    let mut previous_filtered: Option<Vec<Vec<f64>>> = None;
    let mut steps = Vec::with_capacity(scenario.step_count);
    let mut timings = Vec::with_capacity(scenario.step_count);
    let mut fallback_steps = 0;

    for t in 0..scenario.step_count {
        let clock = Instant::now();
        let mut plan = reference_plan(&sys, &x, &scenario.ego_goal, scenario.horizon, &scenario.planner)?;
        plan.trajectory.start_time = t;
        let planner_ms = clock.elapsed().as_secs_f64() * 1e3;

        let clock = Instant::now();
        let centres = match scenario.obstacle_motion {
            ObstacleMotion::RandomWalk => &obstacles,
            ObstacleMotion::AroundNominal => &nominal,
        };
        let bundle = sample_predictions(scenario, centres, t, rng);
        let reference_positions = plan.trajectory.positions(&sys)?;
        let halfspaces = halfspaces_for_horizon(
            &bundle,
            &anchor_positions(scenario.normal_anchor, &reference_positions, previous_filtered.as_deref()),
            &scenario.risk,
            &scenario.ego_shape,
            &shapes,
        )?;
        let halfspace_ms = clock.elapsed().as_secs_f64() * 1e3;

        let clock = Instant::now();
        if let Some(dir) = &options.dump_dir {
            let program = crate::filter::build_filter_qp(&plan.trajectory, &halfspaces, &sys, &scenario.filter)?;
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(format!("filter_t{t:04}.lp"));
            let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            program.write_lp(&mut file).map_err(|e| Error::io(&path, e))?;
        }
        let result = filter_step(&plan.trajectory, &halfspaces, &sys, &scenario.filter, &mut buffer)?;
        let filter_ms = clock.elapsed().as_secs_f64() * 1e3;
        if result.status == FilterStatus::Fallback {
            fallback_steps += 1;
        }

        let control = result.controls[0].clone();
        let next = sys.step(&x, &control)?;
        let next_step_residual = halfspaces
            .iter()
            .filter(|hs| hs.t == t + 1)
            .map(|hs| hs.ego_residual(&next[..2]))
            .fold(f64::NEG_INFINITY, f64::max);
        let next_obstacles: Vec<Vec<f64>> = scenario
            .obstacles
            .iter()
            .zip(&obstacles)
            .zip(&nominal)
            .map(|((model, p), centre)| match scenario.obstacle_motion {
                ObstacleMotion::RandomWalk => realize_step(model, p, scenario.dt, rng),
                ObstacleMotion::AroundNominal => realize_step(model, centre, scenario.dt, rng),
            })
            .collect();
        for (centre, model) in nominal.iter_mut().zip(&scenario.obstacles) {
            for (c, v) in centre.iter_mut().zip(&model.velocity) {
                *c += scenario.dt * v;
            }
        }

        let filtered_positions = result.trajectory.positions(&sys)?;
        steps.push(StepRecord {
            t,
            ego_state: x.clone(),
            obstacle_positions: obstacles.clone(),
            control,
            status: result.status,
            reference_positions,
            filtered_positions: filtered_positions.clone(),
            halfspaces,
            next_step_residual,
            distances: distances_now(&next, &next_obstacles),
        });
        timings.push(StepTiming {
            planner_ms,
            halfspace_ms,
            filter_ms,
        });
        previous_filtered = Some(filtered_positions);
        x = next;
        obstacles = next_obstacles;
    }

    let goal_distance = norm(&sub(&x[..2], &scenario.ego_goal[..2]));
    Ok(SimRecord {
        scenario: scenario.name.clone(),
        metric: scenario.risk.kind,
        steps,
        initial_distances,
        final_state: x,
        final_obstacle_positions: obstacles,
        goal_distance,
        fallback_steps,
        timings,
    })
}

pub const SCENARIO_NAMES: [&str; 4] = ["head_on", "overtake", "intersection", "multi"];

fn base_scenario(name: &str, obstacles: Vec<ObstacleModel>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        dt: 0.2,
        ego_start: vec![-2.0, 0.0, 0.0, 0.0],
        ego_goal: vec![2.0, 0.0, 0.0, 0.0],
        ego_shape: ConvexShape::Disk { radius: 0.3 },
        obstacles,
        horizon: 10,
        sample_count: 100,
        risk: RiskSpec::drcvar(0.2, 0.1, 0.05),
        step_count: 40,
        seed: 0,
        planner: PlannerConfig::default(),
        filter: FilterConfig::default(),
        normal_anchor: NormalAnchor::default(),
        obstacle_motion: ObstacleMotion::default(),
    }
}

fn obstacle(start: [f64; 2], velocity: [f64; 2]) -> ObstacleModel {
    ObstacleModel {
        start: start.to_vec(),
        velocity: velocity.to_vec(),
        shape: ConvexShape::Disk { radius: 0.3 },
        noise_variance: vec![0.01, 0.01],
        realization: Realization::Laplace,
    }
}

/// Head-on, overtaking, intersection, and a three-lane crossing.
///
/// The overtaken obstacle starts 1.5 m ahead with a 0.3 m lateral offset so
/// the ego begins outside the tightest halfspace margin. The crossing
/// obstacle starts 0.6 m below the ego's path so both reach the crossing
/// point together.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    vec![
        base_scenario("head_on", vec![obstacle([2.0, 0.0], [-0.5, 0.0])]),
        base_scenario("overtake", vec![obstacle([-0.5, 0.3], [0.25, 0.0])]),
        base_scenario("intersection", vec![obstacle([0.0, -0.6], [0.0, 0.5])]),
        ScenarioConfig {
            ego_start: vec![-2.0, -1.5, 0.0, 0.0],
            ego_goal: vec![2.0, 1.5, 0.0, 0.0],
            step_count: 50,
            ..base_scenario(
                "multi",
                vec![
                    obstacle([-1.5, -0.6], [0.4, 0.0]),
                    obstacle([1.5, 0.2], [-0.4, 0.0]),
                    obstacle([-0.5, 1.0], [0.4, 0.0]),
                ],
            )
        },
    ]
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioConfig> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distance_examples() {
        assert!((distance_to_collision(&[0.0, 0.0], &[1.0, 0.0], 0.3, 0.3) - 0.4).abs() < 1e-15);
        assert!(distance_to_collision(&[0.0, 0.0], &[0.6, 0.0], 0.3, 0.3).abs() < 1e-15);
        assert!((distance_to_collision(&[0.0, 0.0], &[0.3, 0.0], 0.3, 0.3) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn laplace_scale_matches_variance() {
        assert!((laplace_scale(0.01) - 0.005f64.sqrt()).abs() < 1e-15);
        assert!((laplace_scale(0.01) - 0.070_710_678).abs() < 1e-9);
    }

    #[test]
    fn zero_covariance_is_deterministic() {
        let mut scenario = builtin_scenario("head_on").unwrap();
        scenario.obstacles[0].noise_variance = vec![0.0, 0.0];
        scenario.sample_count = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bundle = sample_predictions(&scenario, &[vec![2.0, 0.0]], 0, &mut rng);
        for k in 0..scenario.horizon {
            for p in bundle.positions_at(0, k) {
                let expect = 2.0 - 0.5 * 0.2 * (k + 1) as f64;
                assert!((p[0] - expect).abs() < 1e-15 && p[1] == 0.0);
            }
        }
        let next = realize_step(&scenario.obstacles[0], &[2.0, 0.0], 0.2, &mut rng);
        assert!((next[0] - 1.9).abs() < 1e-15 && next[1] == 0.0);
    }

    #[test]
    fn builtin_scenarios_are_valid() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 4);
        for s in &all {
            s.validate().unwrap();
            assert_eq!(s.risk.epsilon, 0.05);
            assert_eq!(s.risk.alpha, 0.2);
            assert_eq!(s.risk.delta, 0.1);
            assert_eq!(s.horizon, 10);
        }
        assert_eq!(builtin_scenario("multi").unwrap().obstacles.len(), 3);
        assert!(builtin_scenario("nope").is_err());
    }
}
