//! Convex body geometry expressed in a body frame centred at the reference
//! point of the robot or obstacle.
//!
//! Only the support function is needed downstream: collision avoidance between
//! `y ⊕ A` and `p ⊕ O` is linearised along a unit normal by inflating the
//! separating halfspace with `S_O(·) + S_{-A}(·)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::program::{ConicProgram, SolveStatus, SparseMatrix};
use crate::vector::{all_finite, dot, norm};

/// Planar workspace dimension. Every shape and direction is checked against it.
pub const DIM: usize = 2;

/// Face counts up to this bound use exact enumeration; larger polytopes are
/// handed to the LP solver.
const ENUMERATION_FACE_LIMIT: usize = 16;

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexShape {
    Disk {
        radius: f64,
    },
    /// `{x | normals · x <= offsets}`.
    Polytope {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
}

impl ConvexShape {
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidShape(format!(
                "disk radius must be finite and nonnegative, got {radius}"
            )));
        }
        Ok(ConvexShape::Disk { radius })
    }

    /// A point robot.
    pub fn point() -> Self {
        ConvexShape::Disk { radius: 0.0 }
    }

    /// Builds a bounded, nonempty polytope, rejecting zero or non-finite rows.
    pub fn polytope(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let shape = ConvexShape::Polytope { normals, offsets };
        shape.validate()?;
        Ok(shape)
    }

    /// Axis-aligned box `[-half_x, half_x] × [-half_y, half_y]`.
    pub fn rectangle(half_x: f64, half_y: f64) -> Result<Self> {
        Self::polytope(
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            vec![half_x, half_x, half_y, half_y],
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexShape::Disk { radius } => {
                if radius.is_finite() && *radius >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidShape(format!("bad disk radius {radius}")))
                }
            }
            ConvexShape::Polytope { normals, offsets } => {
                if normals.is_empty() {
                    return Err(Error::InvalidShape("polytope has no faces".into()));
                }
                if normals.len() != offsets.len() {
                    return Err(Error::DimensionMismatch {
                        expected: normals.len(),
                        got: offsets.len(),
                    });
                }
                for row in normals {
                    if row.len() != DIM {
                        return Err(Error::DimensionMismatch {
                            expected: DIM,
                            got: row.len(),
                        });
                    }
                    if !all_finite(row) || norm(row) == 0.0 {
                        return Err(Error::InvalidShape(
                            "face normals must be finite and nonzero".into(),
                        ));
                    }
                }
                if !all_finite(offsets) {
                    return Err(Error::NonFinite("polytope offsets"));
                }
                // The conic hull of the normals is the whole plane iff the
                // four axis directions all have finite support.
                for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
                    if dual_enumeration(normals, offsets, &dir).is_none() {
                        return Err(Error::InvalidShape("polytope is unbounded".into()));
                    }
                }
                if !has_feasible_vertex(normals, offsets) {
                    return Err(Error::InvalidShape("polytope is empty".into()));
                }
                Ok(())
            }
        }
    }
}

/// `sup_{x ∈ shape} direction · x`.
pub fn support(shape: &ConvexShape, direction: &[f64]) -> Result<f64> {
    if direction.len() != DIM {
        return Err(Error::DimensionMismatch {
            expected: DIM,
            got: direction.len(),
        });
    }
    if !all_finite(direction) {
        return Err(Error::NonFinite("support direction"));
    }
    match shape {
        ConvexShape::Disk { radius } => Ok(radius * norm(direction)),
        ConvexShape::Polytope { normals, offsets } => {
            if norm(direction) == 0.0 {
                return Ok(0.0);
            }
            if normals.len() <= ENUMERATION_FACE_LIMIT {
                dual_enumeration(normals, offsets, direction).ok_or(Error::UnboundedSupport)
            } else {
                support_by_lp(normals, offsets, direction)
            }
        }
    }
}

/// Point reflection through the body-frame origin, i.e. `-S`.
pub fn reflected(shape: &ConvexShape) -> ConvexShape {
    match shape {
        ConvexShape::Disk { radius } => ConvexShape::Disk { radius: *radius },
        ConvexShape::Polytope { normals, offsets } => ConvexShape::Polytope {
            normals: normals
                .iter()
                .map(|row| row.iter().map(|x| -x).collect())
                .collect(),
            offsets: offsets.clone(),
        },
    }
}

/// `S_O(h) + S_{-A}(h)` for a unit direction `h`.
pub fn pair_inflation(obstacle: &ConvexShape, ego: &ConvexShape, h: &[f64]) -> Result<f64> {
    let len = norm(h);
    if (len - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidParameter(format!(
            "inflation direction must be unit length, got norm {len}"
        )));
    }
    Ok(support(obstacle, h)? + support(&reflected(ego), h)?)
}

/// Solves `min b·μ s.t. Nᵀμ = z, μ >= 0` over its basic solutions, which by LP
/// duality equals the support value whenever the polytope is nonempty.
/// `None` means the dual is infeasible, i.e. the support is unbounded.
fn dual_enumeration(normals: &[Vec<f64>], offsets: &[f64], z: &[f64]) -> Option<f64> {
    let scale = norm(z);
    let tol = 1e-12 * scale.max(1.0);
    let mut best: Option<f64> = None;
    let mut consider = |v: f64| {
        best = Some(best.map_or(v, |b: f64| b.min(v)));
    };
    for (j, nj) in normals.iter().enumerate() {
        // z = μ nj with μ >= 0
        let cross = nj[0] * z[1] - nj[1] * z[0];
        let along = dot(nj, z);
        if cross.abs() <= tol * norm(nj) && along > 0.0 {
            consider(along / dot(nj, nj) * offsets[j]);
        }
    }
    for i in 0..normals.len() {
        for j in (i + 1)..normals.len() {
            let (ni, nj) = (&normals[i], &normals[j]);
            let det = ni[0] * nj[1] - nj[0] * ni[1];
            if det.abs() <= 1e-14 * norm(ni) * norm(nj) {
                continue;
            }
            let mi = (z[0] * nj[1] - nj[0] * z[1]) / det;
            let mj = (ni[0] * z[1] - z[0] * ni[1]) / det;
            if mi >= -tol && mj >= -tol {
                consider(mi.max(0.0) * offsets[i] + mj.max(0.0) * offsets[j]);
            }
        }
    }
    best
}

fn has_feasible_vertex(normals: &[Vec<f64>], offsets: &[f64]) -> bool {
    let feasible = |x: &[f64]| {
        normals
            .iter()
            .zip(offsets)
            .all(|(n, b)| dot(n, x) <= b + 1e-9 * (1.0 + b.abs()))
    };
    for i in 0..normals.len() {
        for j in (i + 1)..normals.len() {
            let (ni, nj) = (&normals[i], &normals[j]);
            let det = ni[0] * nj[1] - nj[0] * ni[1];
            if det.abs() <= 1e-14 * norm(ni) * norm(nj) {
                continue;
            }
            let x = [
                (offsets[i] * nj[1] - offsets[j] * ni[1]) / det,
                (ni[0] * offsets[j] - nj[0] * offsets[i]) / det,
            ];
            if feasible(&x) {
                return true;
            }
        }
    }
    false
}

fn support_by_lp(normals: &[Vec<f64>], offsets: &[f64], z: &[f64]) -> Result<f64> {
    let mut program = ConicProgram::new(DIM);
    program.name_block("x", 0, DIM);
    program.linear_cost = z.iter().map(|c| -c).collect();
    let mut a = SparseMatrix::new(normals.len(), DIM);
    for (row, n) in normals.iter().enumerate() {
        for (col, v) in n.iter().enumerate() {
            a.push(row, col, *v);
        }
    }
    program.add_inequalities(a, offsets.to_vec());
    let solution = program.solve();
    match solution.status {
        SolveStatus::Optimal => Ok(-solution.objective_value),
        SolveStatus::Unbounded => Err(Error::UnboundedSupport),
        status => Err(Error::Solver(status)),
    }
}
