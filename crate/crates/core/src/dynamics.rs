//! Discrete-time linear systems and the obstacle-agnostic reference planner.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::program::{ConicProgram, Solution, SolveStatus};

/// `x_{t+1} = A x_t + B u_t`, `y_t = C x_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub dt: f64,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, dt: f64) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() || c.ncols() != a.ncols() {
            return Err(Error::InvalidParameter(
                "system matrices have inconsistent dimensions".into(),
            ));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(LinearSystem { a, b, c, dt })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        if u.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: u.len(),
            });
        }
        let next = &self.a * DVector::from_column_slice(x) + &self.b * DVector::from_column_slice(u);
        Ok(next.as_slice().to_vec())
    }

    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        Ok((&self.c * DVector::from_column_slice(x)).as_slice().to_vec())
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Planar double integrator with state `(px, py, vx, vy)` and acceleration input.
pub fn double_integrator(dt: f64) -> Result<LinearSystem> {
    let i2 = DMatrix::<f64>::identity(2, 2);
    let mut a = DMatrix::<f64>::identity(4, 4);
    a.view_mut((0, 2), (2, 2)).copy_from(&(&i2 * dt));
    let mut b = DMatrix::<f64>::zeros(4, 2);
    b.view_mut((0, 0), (2, 2)).copy_from(&(&i2 * (0.5 * dt * dt)));
    b.view_mut((2, 0), (2, 2)).copy_from(&(&i2 * dt));
    let mut c = DMatrix::<f64>::zeros(2, 4);
    c.view_mut((0, 0), (2, 2)).copy_from(&i2);
    LinearSystem::new(a, b, c, dt)
}

/// Planar single integrator with velocity input.
pub fn single_integrator(dt: f64) -> Result<LinearSystem> {
    let i2 = DMatrix::<f64>::identity(2, 2);
    LinearSystem::new(i2.clone(), &i2 * dt, i2, dt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTrajectory {
    pub states: Vec<Vec<f64>>,
    pub start_time: usize,
}

impl StateTrajectory {
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn positions(&self, sys: &LinearSystem) -> Result<Vec<Vec<f64>>> {
        self.states.iter().map(|x| sys.output(x)).collect()
    }
}

pub fn rollout(sys: &LinearSystem, x0: &[f64], controls: &[Vec<f64>]) -> Result<StateTrajectory> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    sys.check_state(x0)?;
    states.push(x0.to_vec());
    for u in controls {
        let next = sys.step(states.last().unwrap(), u)?;
        states.push(next);
    }
    Ok(StateTrajectory {
        states,
        start_time: 0,
    })
}

/// Per-axis input bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InputBox {
    pub fn symmetric(limit: f64, dim: usize) -> Self {
        InputBox {
            lower: vec![-limit; dim],
            upper: vec![limit; dim],
        }
    }

    /// Largest bound violation of `u`.
    pub fn violation(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| (lo - x).max(x - hi))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }
}

/// Row-major square matrix with a diagonal constructor, serialisable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix(pub Vec<Vec<f64>>);

impl CostMatrix {
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        CostMatrix(
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { values[i] } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.0.len();
        DMatrix::from_fn(n, n, |i, j| self.0[i][j])
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.0.len() != dim || self.0.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.0.len(),
            });
        }
        let m = self.to_matrix();
        if (&m - m.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidParameter("cost matrix must be symmetric".into()));
        }
        if m.clone().symmetric_eigenvalues().min() < -1e-12 {
            return Err(Error::InvalidParameter(
                "cost matrix must be positive semidefinite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub q: CostMatrix,
    pub r: CostMatrix,
    pub input_box: InputBox,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            q: CostMatrix::diag(&[10.0, 10.0, 1.0, 1.0]),
            r: CostMatrix::diag(&[1.0, 1.0]),
            input_box: InputBox::symmetric(3.0, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub trajectory: StateTrajectory,
    pub controls: Vec<Vec<f64>>,
}

/// `a · y(step) <= b` on the position at a horizon step in `1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PositionRow {
    pub step: usize,
    pub normal: Vec<f64>,
    pub rhs: f64,
}

/// Finite-horizon tracking QP shared by the planner and the safety filter:
///
/// ```text
/// min  Σ_{t<T} uₜᵀ R uₜ + Σ_{t=1..T} (xₜ − x̄ₜ)ᵀ Q (xₜ − x̄ₜ)
/// s.t. x₀ = x_init, xₜ₊₁ = A xₜ + B uₜ, u ∈ U, position rows
/// ```
///
/// The program variables are the deviations `zₜ = xₜ − x̄ₜ` (with `x̄₀ = x_init`)
/// and the inputs, so the cost has no constant term. Expanded around absolute
/// states the constant can reach hundreds, and a relative duality gap then
/// stops the solver visibly short of a zero-cost optimum.
pub(crate) struct TrackingQp<'a> {
    pub sys: &'a LinearSystem,
    pub x0: &'a [f64],
    /// Targets for steps `1..=T`.
    pub targets: &'a [Vec<f64>],
    pub q: &'a DMatrix<f64>,
    pub r: &'a DMatrix<f64>,
    pub input_box: Option<&'a InputBox>,
    pub position_rows: Vec<PositionRow>,
}

impl TrackingQp<'_> {
    fn horizon(&self) -> usize {
        self.targets.len()
    }

    pub fn x_index(&self, t: usize, i: usize) -> usize {
        t * self.sys.state_dim() + i
    }

    pub fn u_index(&self, t: usize, j: usize) -> usize {
        (self.horizon() + 1) * self.sys.state_dim() + t * self.sys.input_dim() + j
    }

    pub fn build(&self) -> Result<ConicProgram> {
        let (n, m, horizon) = (self.sys.state_dim(), self.sys.input_dim(), self.horizon());
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.x0.len(),
            });
        }
        if let Some(bad) = self.targets.iter().find(|t| t.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        if self.q.nrows() != n || self.r.nrows() != m {
            return Err(Error::InvalidParameter("cost matrices do not match the system".into()));
        }
        let num_vars = n * (horizon + 1) + m * horizon;
        let mut program = ConicProgram::new(num_vars);
        program.name_block("dx", 0, n * (horizon + 1));
        program.name_block("u", n * (horizon + 1), m * horizon);

        for t in 0..horizon {
            for i in 0..m {
                for j in 0..m {
                    program.add_quadratic(self.u_index(t, i), self.u_index(t, j), 2.0 * self.r[(i, j)]);
                }
            }
        }
        for t in 1..=horizon {
            for i in 0..n {
                for j in 0..n {
                    program.add_quadratic(self.x_index(t, i), self.x_index(t, j), 2.0 * self.q[(i, j)]);
                }
            }
        }

        for i in 0..n {
            program.add_equality_row(&[(self.x_index(0, i), 1.0)], 0.0);
        }
        // z_{t+1} − A z_t − B u_t = A x̄_t − x̄_{t+1}
        for t in 0..horizon {
            let drift = &self.sys.a * DVector::from_column_slice(self.anchor(t)) - DVector::from_column_slice(self.anchor(t + 1));
            for i in 0..n {
                let mut terms = vec![(self.x_index(t + 1, i), 1.0)];
                for j in 0..n {
                    terms.push((self.x_index(t, j), -self.sys.a[(i, j)]));
                }
                for j in 0..m {
                    terms.push((self.u_index(t, j), -self.sys.b[(i, j)]));
                }
                program.add_equality_row(&terms, drift[i]);
            }
        }

        if let Some(bounds) = self.input_box {
            if bounds.lower.len() != m || bounds.upper.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: bounds.lower.len(),
                });
            }
            for t in 0..horizon {
                for j in 0..m {
                    program.add_inequality_row(&[(self.u_index(t, j), 1.0)], bounds.upper[j]);
                    program.add_inequality_row(&[(self.u_index(t, j), -1.0)], -bounds.lower[j]);
                }
            }
        }

        for row in &self.position_rows {
            if row.step == 0 || row.step > horizon || row.normal.len() != self.sys.output_dim() {
                return Err(Error::InvalidParameter("position constraint out of range".into()));
            }
            // a · (C x)
            let terms: Vec<(usize, f64)> = (0..n)
                .map(|j| {
                    let coeff: f64 = row
                        .normal
                        .iter()
                        .enumerate()
                        .map(|(d, a)| a * self.sys.c[(d, j)])
                        .sum();
                    (self.x_index(row.step, j), coeff)
                })
                .collect();
            let anchor = self.anchor(row.step);
            let shift: f64 = terms.iter().map(|&(col, c)| c * anchor[col - self.x_index(row.step, 0)]).sum();
            program.add_inequality_row(&terms, row.rhs - shift);
        }
        Ok(program)
    }

    /// State the deviation variables of step `t` are measured from.
    fn anchor(&self, t: usize) -> &[f64] {
        if t == 0 {
            self.x0
        } else {
            &self.targets[t - 1]
        }
    }

    /// Program variables for given states and inputs.
    pub fn pack(&self, states: &[Vec<f64>], controls: &[Vec<f64>]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.sys.state_dim() * states.len() + self.sys.input_dim() * controls.len());
        for (t, state) in states.iter().enumerate() {
            x.extend(state.iter().zip(self.anchor(t)).map(|(s, a)| s - a));
        }
        for u in controls {
            x.extend_from_slice(u);
        }
        x
    }

    /// Inputs from the solution; states are rolled out from them so that the
    /// returned trajectory satisfies the dynamics exactly.
    pub fn extract(&self, solution: &Solution) -> Plan {
        let (m, horizon) = (self.sys.input_dim(), self.horizon());
        let controls: Vec<Vec<f64>> = (0..horizon)
            .map(|t| (0..m).map(|j| solution.primal[self.u_index(t, j)]).collect())
            .collect();
        let trajectory = rollout(self.sys, self.x0, &controls).expect("dimensions were checked when building");
        Plan { trajectory, controls }
    }
}

/// Obstacle-agnostic receding-horizon plan from `x0` toward `goal`.
pub fn reference_plan(
    sys: &LinearSystem,
    x0: &[f64],
    goal: &[f64],
    horizon: usize,
    config: &PlannerConfig,
) -> Result<Plan> {
    config.q.validate(sys.state_dim())?;
    config.r.validate(sys.input_dim())?;
    let targets = vec![goal.to_vec(); horizon];
    let (q, r) = (config.q.to_matrix(), config.r.to_matrix());
    let qp = TrackingQp {
        sys,
        x0,
        targets: &targets,
        q: &q,
        r: &r,
        input_box: Some(&config.input_box),
        position_rows: Vec::new(),
    };
    let program = qp.build()?;
    let solution = program.solve();
    if solution.status != SolveStatus::Optimal {
        return Err(Error::Solver(solution.status));
    }
    Ok(qp.extract(&solution))
}
