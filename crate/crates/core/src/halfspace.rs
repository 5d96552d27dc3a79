//! Risk-bounded safe halfspaces from sampled obstacle positions.
//!
//! For a unit normal `h` pointing from the ego reference toward the obstacle,
//! the signed intrusion loss of an obstacle position `p` is
//! `ℓ(p) = −(h·p + g̃)`. The halfspace offset is the smallest `g̃` with
//! `R(ℓ(p)) <= δ`, and since `ℓ` is affine and decreasing in `g̃` the risk
//! constraint is tight at the optimum:
//!
//! | metric                 | `g̃`                                  |
//! |------------------------|--------------------------------------|
//! | mean                   | `mean(−h·pⁱ) − δ`                    |
//! | CVaR                   | `CVaR_α(−h·pⁱ) − δ`                  |
//! | DR-CVaR, `Ξ = ℝᵈ`      | `CVaR_α(−h·pⁱ) + ε‖h‖_*/α − δ`       |
//! | DR-CVaR, `Ξ` polytope  | finite conic reformulation           |
//!
//! The ego-side offset adds the shape inflation, `g* = g̃ + S_O(−h) + S_A(h)`,
//! so that an ego position `y` with `h·y + g* <= 0` keeps the ego body at least
//! the permitted risk margin away from the obstacle body. Offsets from the
//! obstacle side (`g̃`) and the ego side (`g*`) are kept separately.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pair_inflation, ConvexShape};
use crate::program::{build_drcvar_program, DrcvarProblem, SolveStatus};
use crate::risk::{
    affine_losses, drcvar_affine_unbounded_with_norm, empirical_cvar, empirical_mean, RiskKind,
    RiskSpec, Support,
};
use crate::sim::PredictionBundle;
use crate::vector::{dot, mean, norm, scale, sub};

const DEGENERATE_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeHalfspace {
    /// Unit normal from the ego reference toward the obstacle.
    pub h: Vec<f64>,
    /// Obstacle-side offset: obstacle positions with `h·p + g̃ >= 0` are clear.
    pub g_tilde: f64,
    /// Ego-side offset: ego positions must satisfy `h·y + g* <= 0`.
    pub g_star: f64,
    pub metric: RiskKind,
    pub obstacle_id: usize,
    pub t: usize,
}

impl SafeHalfspace {
    /// `h·y + g*`; nonpositive when the ego position is admissible.
    pub fn ego_residual(&self, y: &[f64]) -> f64 {
        dot(&self.h, y) + self.g_star
    }

    /// Signed intrusion `ℓ(p)` of an obstacle position.
    pub fn obstacle_loss(&self, p: &[f64]) -> f64 {
        -(dot(&self.h, p) + self.g_tilde)
    }

    pub fn inflation(&self) -> f64 {
        self.g_star - self.g_tilde
    }
}

/// Unit vector from `y_ref` to `p_nominal`; falls back to `previous`, then to
/// the first axis, when the two points coincide.
pub fn normal_from_positions(p_nominal: &[f64], y_ref: &[f64], previous: Option<&[f64]>) -> Vec<f64> {
    let diff = sub(p_nominal, y_ref);
    let len = norm(&diff);
    if len < DEGENERATE_DISTANCE || !len.is_finite() {
        if let Some(prev) = previous {
            return prev.to_vec();
        }
        let mut axis = vec![0.0; p_nominal.len()];
        if let Some(first) = axis.first_mut() {
            *first = 1.0;
        }
        return axis;
    }
    scale(&diff, 1.0 / len)
}

/// Wall-clock split of a single halfspace computation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HalfspaceTiming {
    pub build: Duration,
    pub solve: Duration,
    pub total: Duration,
}

pub fn compute_halfspace(
    positions: &[Vec<f64>],
    h: &[f64],
    spec: &RiskSpec,
    obstacle_shape: &ConvexShape,
    ego_shape: &ConvexShape,
) -> Result<SafeHalfspace> {
    compute_halfspace_timed(positions, h, spec, obstacle_shape, ego_shape).map(|(hs, _)| hs)
}

pub fn compute_halfspace_timed(
    positions: &[Vec<f64>],
    h: &[f64],
    spec: &RiskSpec,
    obstacle_shape: &ConvexShape,
    ego_shape: &ConvexShape,
) -> Result<(SafeHalfspace, HalfspaceTiming)> {
    let start = Instant::now();
    spec.validate()?;
    if positions.is_empty() {
        return Err(Error::EmptySamples);
    }
    // h points ego -> obstacle: the obstacle extends toward the ego by
    // S_O(-h) and the ego toward the obstacle by S_A(h) = S_{-A}(-h).
    let reversed: Vec<f64> = h.iter().map(|x| -x).collect();
    let inflation = pair_inflation(obstacle_shape, ego_shape, &reversed)?;
    let projected = affine_losses(positions, h, 0.0)?;

    let mut timing = HalfspaceTiming::default();
    let g_tilde = match (spec.kind, &spec.support) {
        (RiskKind::Mean, _) => empirical_mean(&projected) - spec.delta,
        (RiskKind::Cvar, _) => empirical_cvar(&projected, spec.alpha)? - spec.delta,
        (RiskKind::DrCvar, Support::Unbounded) => {
            // zero offset: drcvar(g̃) = drcvar(0) − g̃
            drcvar_affine_unbounded_with_norm(
                positions,
                h,
                0.0,
                spec.alpha,
                spec.epsilon,
                spec.ground_norm,
            )? - spec.delta
        }
        (RiskKind::DrCvar, support @ Support::Polytope(_)) => {
            let build_start = Instant::now();
            let program = build_drcvar_program(&DrcvarProblem {
                samples: positions,
                h,
                alpha: spec.alpha,
                delta: spec.delta,
                epsilon: spec.epsilon,
                support,
                inflation,
                ground_norm: spec.ground_norm,
            })?;
            timing.build = build_start.elapsed();
            let solve_start = Instant::now();
            let solution = program.solve();
            timing.solve = solve_start.elapsed();
            if solution.status != SolveStatus::Optimal {
                return Err(Error::Solver(solution.status));
            }
            let g = solution.primal[program.block("g").expect("g is always named").start];
            g - inflation
        }
    };
    timing.total = start.elapsed();
    Ok((
        SafeHalfspace {
            h: h.to_vec(),
            g_tilde,
            g_star: g_tilde + inflation,
            metric: spec.kind,
            obstacle_id: 0,
            t: 0,
        },
        timing,
    ))
}

/// Re-evaluates the halfspace's own metric on the obstacle losses at `g̃`.
/// For polytope supports the unbounded closed form is an upper bound.
pub fn evaluate_risk(halfspace: &SafeHalfspace, positions: &[Vec<f64>], spec: &RiskSpec) -> Result<f64> {
    let losses = affine_losses(positions, &halfspace.h, halfspace.g_tilde)?;
    match spec.kind {
        RiskKind::Mean => Ok(empirical_mean(&losses)),
        RiskKind::Cvar => empirical_cvar(&losses, spec.alpha),
        RiskKind::DrCvar => drcvar_affine_unbounded_with_norm(
            positions,
            &halfspace.h,
            halfspace.g_tilde,
            spec.alpha,
            spec.epsilon,
            spec.ground_norm,
        ),
    }
}

/// One halfspace per obstacle and horizon step `t' ∈ 1..=T`, ordered by
/// `(obstacle, t')`. `reference_positions[k]` is the reference position at
/// step `k + 1`.
pub fn halfspaces_for_horizon(
    bundle: &PredictionBundle,
    reference_positions: &[Vec<f64>],
    spec: &RiskSpec,
    ego_shape: &ConvexShape,
    obstacle_shapes: &[ConvexShape],
) -> Result<Vec<SafeHalfspace>> {
    let horizon = bundle.horizon();
    if horizon != reference_positions.len() {
        return Err(Error::HorizonMismatch {
            predictions: horizon,
            reference: reference_positions.len(),
        });
    }
    if obstacle_shapes.len() != bundle.per_obstacle.len() {
        return Err(Error::DimensionMismatch {
            expected: bundle.per_obstacle.len(),
            got: obstacle_shapes.len(),
        });
    }
    let mut out = Vec::with_capacity(horizon * obstacle_shapes.len());
    for (obstacle, shape) in obstacle_shapes.iter().enumerate() {
        let mut previous: Option<Vec<f64>> = None;
        for (k, y_ref) in reference_positions.iter().enumerate() {
            let positions = bundle.positions_at(obstacle, k);
            if positions.is_empty() {
                return Err(Error::EmptySamples);
            }
            let h = normal_from_positions(&mean(&positions), y_ref, previous.as_deref());
            let mut hs = compute_halfspace(&positions, &h, spec, shape, ego_shape)?;
            hs.obstacle_id = obstacle;
            hs.t = bundle.base_time + k + 1;
            previous = Some(h);
            out.push(hs);
        }
    }
    Ok(out)
}
