//! MPC safety filter: the smallest correction of a reference trajectory that
//! satisfies dynamics, input and workspace limits, and every safe halfspace
//! over the horizon.
//!
//! When the filter problem is infeasible the most recent optimal control
//! sequence is replayed one element per step until a solve succeeds again or
//! the sequence runs out.

use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout, CostMatrix, InputBox, LinearSystem, PositionRow, StateTrajectory, TrackingQp};
use crate::error::{Error, Result};
use crate::halfspace::SafeHalfspace;
use crate::program::{ConicProgram, SolveStatus};

pub const PASS_THROUGH_THRESHOLD: f64 = 1e-9;

/// Convex position set `{y | normals · y <= offsets}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSet {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl PositionSet {
    pub fn square(half_width: f64) -> Self {
        PositionSet {
            normals: vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            offsets: vec![half_width; 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub horizon: usize,
    pub q: CostMatrix,
    pub r: CostMatrix,
    pub input_box: InputBox,
    pub position_set: PositionSet,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            horizon: 10,
            q: CostMatrix::diag(&[10.0, 10.0, 1.0, 1.0]),
            r: CostMatrix::diag(&[0.1, 0.1]),
            input_box: InputBox::symmetric(3.0, 2),
            position_set: PositionSet::square(5.0),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self, sys: &LinearSystem) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("filter horizon must be at least 1".into()));
        }
        self.q.validate(sys.state_dim())?;
        self.r.validate(sys.input_dim())?;
        if self.position_set.normals.len() != self.position_set.offsets.len()
            || self
                .position_set
                .normals
                .iter()
                .any(|n| n.len() != sys.output_dim())
        {
            return Err(Error::InvalidParameter("position set is malformed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStatus {
    Filtered,
    PassedThrough,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub trajectory: StateTrajectory,
    pub controls: Vec<Vec<f64>>,
    pub status: FilterStatus,
    pub solver_status: SolveStatus,
    /// Tracking cost of the returned trajectory.
    pub objective: f64,
    /// Largest violation of the filter constraints by the returned trajectory.
    pub max_constraint_residual: f64,
}

/// Last optimal control sequence and how many of its entries have been used
/// beyond the first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FallbackBuffer {
    controls: Vec<Vec<f64>>,
    age_steps: usize,
}

impl FallbackBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn age_steps(&self) -> usize {
        self.age_steps
    }

    pub fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }

    pub fn refresh(&mut self, controls: Vec<Vec<f64>>) {
        self.controls = controls;
        self.age_steps = 0;
    }

    /// Advances to the next stored control, or `None` once exhausted.
    pub fn pop(&mut self) -> Option<Vec<f64>> {
        if self.age_steps + 1 >= self.controls.len() {
            self.age_steps = self.controls.len();
            return None;
        }
        self.age_steps += 1;
        Some(self.controls[self.age_steps].clone())
    }

    fn remaining(&self) -> Vec<Vec<f64>> {
        self.controls[self.age_steps.min(self.controls.len())..].to_vec()
    }
}

fn position_rows(
    reference: &StateTrajectory,
    halfspaces: &[SafeHalfspace],
    config: &FilterConfig,
) -> Result<Vec<PositionRow>> {
    let horizon = reference.horizon();
    let mut rows = Vec::new();
    for step in 1..=horizon {
        for (normal, offset) in config
            .position_set
            .normals
            .iter()
            .zip(&config.position_set.offsets)
        {
            rows.push(PositionRow {
                step,
                normal: normal.clone(),
                rhs: *offset,
            });
        }
    }
    for hs in halfspaces {
        let step = hs
            .t
            .checked_sub(reference.start_time)
            .filter(|s| (1..=horizon).contains(s))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "halfspace at t = {} lies outside the filter horizon starting at {}",
                    hs.t, reference.start_time
                ))
            })?;
        rows.push(PositionRow {
            step,
            normal: hs.h.clone(),
            rhs: -hs.g_star,
        });
    }
    Ok(rows)
}

/// Tracking QP with the halfspace constraints `h·(C x(t)) + g* <= 0`.
pub fn build_filter_qp(
    reference: &StateTrajectory,
    halfspaces: &[SafeHalfspace],
    sys: &LinearSystem,
    config: &FilterConfig,
) -> Result<ConicProgram> {
    let (q, r) = (config.q.to_matrix(), config.r.to_matrix());
    let qp = filter_tracking(reference, halfspaces, sys, config, &q, &r)?;
    qp.build()
}

fn filter_tracking<'a>(
    reference: &'a StateTrajectory,
    halfspaces: &[SafeHalfspace],
    sys: &'a LinearSystem,
    config: &'a FilterConfig,
    q: &'a nalgebra::DMatrix<f64>,
    r: &'a nalgebra::DMatrix<f64>,
) -> Result<TrackingQp<'a>> {
    config.validate(sys)?;
    if reference.horizon() != config.horizon {
        return Err(Error::HorizonMismatch {
            predictions: config.horizon,
            reference: reference.horizon(),
        });
    }
    Ok(TrackingQp {
        sys,
        x0: &reference.states[0],
        targets: &reference.states[1..],
        q,
        r,
        input_box: Some(&config.input_box),
        position_rows: position_rows(reference, halfspaces, config)?,
    })
}

pub fn filter_step(
    reference: &StateTrajectory,
    halfspaces: &[SafeHalfspace],
    sys: &LinearSystem,
    config: &FilterConfig,
    buffer: &mut FallbackBuffer,
) -> Result<FilterResult> {
    let (q, r) = (config.q.to_matrix(), config.r.to_matrix());
    let qp = filter_tracking(reference, halfspaces, sys, config, &q, &r)?;
    let program = qp.build()?;
    let solution = program.solve();

    if solution.status == SolveStatus::Optimal {
        let plan = qp.extract(&solution);
        let residual = program.max_violation(&solution.primal).max(0.0);
        buffer.refresh(plan.controls.clone());
        let status = if solution.objective_value <= PASS_THROUGH_THRESHOLD {
            FilterStatus::PassedThrough
        } else {
            FilterStatus::Filtered
        };
        let mut trajectory = plan.trajectory;
        trajectory.start_time = reference.start_time;
        return Ok(FilterResult {
            trajectory,
            controls: plan.controls,
            status,
            solver_status: solution.status,
            objective: solution.objective_value,
            max_constraint_residual: residual,
        });
    }

    if buffer.is_empty() {
        return Err(Error::StartupInfeasible(solution.status));
    }
    if buffer.pop().is_none() {
        return Err(Error::NoSafeControl);
    }
    let controls = buffer.remaining();
    let mut trajectory = rollout(sys, &reference.states[0], &controls)?;
    trajectory.start_time = reference.start_time;

    // Evaluate the replayed sequence against this step's constraints, padding
    // the tail with the last state so the program dimensions line up.
    let mut states = trajectory.states.clone();
    while states.len() < reference.states.len() {
        states.push(states.last().unwrap().clone());
    }
    states.truncate(reference.states.len());
    let mut us = controls.clone();
    us.resize(config.horizon, vec![0.0; sys.input_dim()]);
    let padded = qp.pack(&states, &us);
    let residual = program.max_violation(&padded).max(0.0);
    let objective = program.objective(&padded);

    Ok(FilterResult {
        trajectory,
        controls,
        status: FilterStatus::Fallback,
        solver_status: solution.status,
        objective,
        max_constraint_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::double_integrator;

    fn straight_reference(sys: &LinearSystem, speed: f64) -> StateTrajectory {
        rollout(sys, &[-1.0, 0.0, speed, 0.0], &vec![vec![0.0, 0.0]; 10]).unwrap()
    }

    #[test]
    fn no_obstacles_reproduces_reference() {
        let sys = double_integrator(0.2).unwrap();
        let reference = straight_reference(&sys, 0.5);
        let mut buffer = FallbackBuffer::new();
        let out = filter_step(&reference, &[], &sys, &FilterConfig::default(), &mut buffer).unwrap();
        assert!(out.objective.abs() < 1e-6);
        for (a, b) in out.trajectory.states.iter().zip(&reference.states) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-6));
        }
        assert_eq!(buffer.age_steps(), 0);
        assert_eq!(buffer.controls().len(), 10);
    }

    #[test]
    fn buffer_pops_until_exhausted() {
        let mut buffer = FallbackBuffer::new();
        assert!(buffer.pop().is_none());
        buffer.refresh((0..3).map(|i| vec![i as f64]).collect());
        assert_eq!(buffer.pop(), Some(vec![1.0]));
        assert_eq!(buffer.pop(), Some(vec![2.0]));
        assert_eq!(buffer.pop(), None);
        assert_eq!(buffer.age_steps(), 3);
    }

    #[test]
    fn halfspace_outside_horizon_is_rejected() {
        let sys = double_integrator(0.2).unwrap();
        let reference = straight_reference(&sys, 0.5);
        let hs = SafeHalfspace {
            h: vec![1.0, 0.0],
            g_tilde: 0.0,
            g_star: 0.0,
            metric: crate::risk::RiskKind::Mean,
            obstacle_id: 0,
            t: 11,
        };
        let mut buffer = FallbackBuffer::new();
        assert!(filter_step(&reference, &[hs], &sys, &FilterConfig::default(), &mut buffer).is_err());
    }
}
