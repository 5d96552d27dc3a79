//! Sparse conic programs (LP, QP, second-order cone) and a uniform solver
//! contract over the Clarabel interior-point solver.
//!
//! A program is
//!
//! ```text
//! minimize    ½ xᵀ P x + qᵀ x + c
//! subject to  E x = e
//!             G x <= h
//!             (F_k x + f_k) ∈ SOC   for each cone block k
//! ```
//!
//! where `SOC = {(t, u) | ‖u‖₂ <= t}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::ops::Range;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{GroundNorm, Support};
use crate::vector::dot;

pub const MAX_ITERATIONS: u32 = 200;
pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const GAP_TOL: f64 = 1e-8;
/// Largest constraint violation tolerated when the backend stops at reduced accuracy.
pub const ALMOST_SOLVED_VIOLATION: f64 = 1e-6;

/// Coordinate-format sparse matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols, "entry out of range");
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &(r, c, v) in &self.entries {
            out[r] += v * x[c];
        }
        out
    }

    fn to_csc(&self, sign: f64) -> CscMatrix<f64> {
        let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        for &(r, c, v) in &self.entries {
            rows.push(r);
            cols.push(c);
            vals.push(sign * v);
        }
        CscMatrix::new_from_triplets(self.rows, self.cols, rows, cols, vals)
    }

    fn row_terms(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.entries {
            rows[r].push((c, v));
        }
        rows
    }
}

/// Affine map whose image must lie in a second-order cone; row 0 is the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub map: SparseMatrix,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// Solver-scaled primal residual.
    pub primal: f64,
    /// Solver-scaled dual residual.
    pub dual: f64,
    /// Absolute duality gap.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    pub residuals: Residuals,
    pub iterations: u32,
    /// Backend status name, kept for diagnostics.
    pub backend_status: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    pub num_vars: usize,
    /// Named index ranges (`g`, `tau`, `eta`, `x`, `u`, ...).
    pub blocks: BTreeMap<String, Range<usize>>,
    pub linear_cost: Vec<f64>,
    /// `P` in `½ xᵀ P x`; symmetric, positive semidefinite.
    pub quadratic_cost: Option<SparseMatrix>,
    pub cost_constant: f64,
    pub equalities: SparseMatrix,
    pub equality_rhs: Vec<f64>,
    pub inequalities: SparseMatrix,
    pub inequality_rhs: Vec<f64>,
    pub cones: Vec<ConeBlock>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        ConicProgram {
            num_vars,
            blocks: BTreeMap::new(),
            linear_cost: vec![0.0; num_vars],
            quadratic_cost: None,
            cost_constant: 0.0,
            equalities: SparseMatrix::new(0, num_vars),
            equality_rhs: Vec::new(),
            inequalities: SparseMatrix::new(0, num_vars),
            inequality_rhs: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn name_block(&mut self, name: &str, start: usize, len: usize) {
        assert!(start + len <= self.num_vars);
        self.blocks.insert(name.to_string(), start..start + len);
    }

    pub fn block(&self, name: &str) -> Option<Range<usize>> {
        self.blocks.get(name).cloned()
    }

    pub fn add_equalities(&mut self, a: SparseMatrix, rhs: Vec<f64>) {
        append_rows(&mut self.equalities, &mut self.equality_rhs, a, rhs);
    }

    pub fn add_inequalities(&mut self, a: SparseMatrix, rhs: Vec<f64>) {
        append_rows(&mut self.inequalities, &mut self.inequality_rhs, a, rhs);
    }

    pub fn add_equality_row(&mut self, terms: &[(usize, f64)], rhs: f64) {
        push_row(&mut self.equalities, &mut self.equality_rhs, terms, rhs);
    }

    pub fn add_inequality_row(&mut self, terms: &[(usize, f64)], rhs: f64) {
        push_row(&mut self.inequalities, &mut self.inequality_rhs, terms, rhs);
    }

    pub fn add_cone(&mut self, map: SparseMatrix, offset: Vec<f64>) {
        assert_eq!(map.cols, self.num_vars);
        assert_eq!(map.rows, offset.len());
        assert!(map.rows >= 1);
        self.cones.push(ConeBlock { map, offset });
    }

    /// Adds `½ xᵀ P x` contributions; `entries` are full (both triangles).
    pub fn add_quadratic(&mut self, row: usize, col: usize, value: f64) {
        let n = self.num_vars;
        self.quadratic_cost
            .get_or_insert_with(|| SparseMatrix::new(n, n))
            .push(row, col, value);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        let consistent = self.linear_cost.len() == n
            && self.equalities.cols == n
            && self.inequalities.cols == n
            && self.equalities.rows == self.equality_rhs.len()
            && self.inequalities.rows == self.inequality_rhs.len()
            && self
                .quadratic_cost
                .as_ref()
                .is_none_or(|p| p.rows == n && p.cols == n)
            && self
                .cones
                .iter()
                .all(|c| c.map.cols == n && c.map.rows == c.offset.len());
        if !consistent {
            return Err(Error::InvalidParameter(
                "program blocks are inconsistent with the variable count".into(),
            ));
        }
        if let Some(p) = &self.quadratic_cost {
            let mut summed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for &(r, c, v) in p.entries() {
                *summed.entry((r, c)).or_default() += v;
            }
            for (&(r, c), v) in &summed {
                let mirror = summed.get(&(c, r)).copied().unwrap_or(0.0);
                if (v - mirror).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::InvalidParameter("quadratic cost is not symmetric".into()));
                }
            }
            if n <= 512 {
                let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
                for (&(r, c), v) in &summed {
                    dense[(r, c)] = *v;
                }
                let min_eig = dense.symmetric_eigenvalues().min();
                let scale = dense.amax().max(1.0);
                if min_eig < -1e-9 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "quadratic cost is not positive semidefinite (eigenvalue {min_eig})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut value = dot(&self.linear_cost, x) + self.cost_constant;
        if let Some(p) = &self.quadratic_cost {
            value += 0.5 * dot(x, &p.mul_vec(x));
        }
        value
    }

    /// Largest violation of any constraint at `x` (unscaled).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (ax, b) in self.equalities.mul_vec(x).iter().zip(&self.equality_rhs) {
            worst = worst.max((ax - b).abs());
        }
        for (ax, b) in self.inequalities.mul_vec(x).iter().zip(&self.inequality_rhs) {
            worst = worst.max(ax - b);
        }
        for cone in &self.cones {
            let image: Vec<f64> = cone
                .map
                .mul_vec(x)
                .iter()
                .zip(&cone.offset)
                .map(|(a, b)| a + b)
                .collect();
            let tail = image[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(tail - image[0]);
        }
        worst
    }

    /// Largest constraint violation at `x`, each row divided by
    /// `1 + |rhs| + Σ|aᵢⱼ xⱼ|` so that rows with large data are judged
    /// relative to their own magnitude.
    pub fn scaled_violation(&self, x: &[f64]) -> f64 {
        let magnitudes = |m: &SparseMatrix, rhs: &[f64]| {
            let mut mag: Vec<f64> = rhs.iter().map(|b| 1.0 + b.abs()).collect();
            for &(r, c, v) in m.entries() {
                mag[r] += (v * x[c]).abs();
            }
            mag
        };
        let mut worst: f64 = 0.0;
        let eq_mag = magnitudes(&self.equalities, &self.equality_rhs);
        for ((ax, b), mag) in self.equalities.mul_vec(x).iter().zip(&self.equality_rhs).zip(eq_mag) {
            worst = worst.max((ax - b).abs() / mag);
        }
        let ineq_mag = magnitudes(&self.inequalities, &self.inequality_rhs);
        for ((ax, b), mag) in self.inequalities.mul_vec(x).iter().zip(&self.inequality_rhs).zip(ineq_mag) {
            worst = worst.max((ax - b) / mag);
        }
        for cone in &self.cones {
            let mag: f64 = magnitudes(&cone.map, &cone.offset).iter().sum();
            let image: Vec<f64> = cone
                .map
                .mul_vec(x)
                .iter()
                .zip(&cone.offset)
                .map(|(a, b)| a + b)
                .collect();
            let tail = image[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max((tail - image[0]) / mag);
        }
        worst
    }

    pub fn solve(&self) -> Solution {
        let n = self.num_vars;
        let p = match &self.quadratic_cost {
            Some(p) => p.to_csc(1.0),
            None => CscMatrix::zeros((n, n)),
        };

        let cone_rows: usize = self.cones.iter().map(|c| c.map.rows).sum();
        let m = self.equalities.rows + self.inequalities.rows + cone_rows;
        let mut stacked = SparseMatrix::new(m, n);
        let mut b = Vec::with_capacity(m);
        let mut offset = 0;
        for &(r, c, v) in self.equalities.entries() {
            stacked.push(r, c, v);
        }
        b.extend_from_slice(&self.equality_rhs);
        offset += self.equalities.rows;
        for &(r, c, v) in self.inequalities.entries() {
            stacked.push(offset + r, c, v);
        }
        b.extend_from_slice(&self.inequality_rhs);
        offset += self.inequalities.rows;
        // s = f + F x  =>  A = -F, b = f
        for cone in &self.cones {
            for &(r, c, v) in cone.map.entries() {
                stacked.push(offset + r, c, -v);
            }
            b.extend_from_slice(&cone.offset);
            offset += cone.map.rows;
        }

        let mut cones = Vec::new();
        // The KKT factorisation cannot handle an empty constraint matrix, so
        // unconstrained problems get a pinned auxiliary variable w = 0.
        let padded = m == 0;
        let mut p = p;
        let mut q = self.linear_cost.clone();
        if padded {
            stacked = SparseMatrix::new(1, n + 1);
            stacked.push(0, n, 1.0);
            b.push(0.0);
            cones.push(SupportedConeT::ZeroConeT(1));
            q.push(0.0);
            let mut p_pad = SparseMatrix::new(n + 1, n + 1);
            if let Some(p0) = &self.quadratic_cost {
                for &(r, c, v) in p0.entries() {
                    p_pad.push(r, c, v);
                }
            }
            p = p_pad.to_csc(1.0);
        }
        if self.equalities.rows > 0 {
            cones.push(SupportedConeT::ZeroConeT(self.equalities.rows));
        }
        if self.inequalities.rows > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(self.inequalities.rows));
        }
        for cone in &self.cones {
            cones.push(SupportedConeT::SecondOrderConeT(cone.map.rows));
        }

        let a = stacked.to_csc(1.0);
        let run = |refine: bool| {
            let settings = DefaultSettingsBuilder::default()
                .verbose(false)
                .max_iter(MAX_ITERATIONS)
                .tol_feas(FEASIBILITY_TOL)
                .tol_gap_abs(GAP_TOL)
                .tol_gap_rel(GAP_TOL)
                .iterative_refinement_enable(refine)
                .build()
                .expect("static solver settings are valid");
            let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings);
            solver.solve();
            solver
        };
        // Refinement roughly doubles solve time on the larger conic programs,
        // so it is only switched on when the plain solve falls short. Badly
        // scaled data such as very large support boxes need it.
        let mut solver = run(false);
        if solver.solution.status != SolverStatus::Solved {
            let refined = run(true);
            if matches!(
                refined.solution.status,
                SolverStatus::Solved | SolverStatus::AlmostSolved
            ) {
                solver = refined;
            }
        }

        let mut primal = solver.solution.x.clone();
        primal.truncate(n);
        let status = match solver.solution.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            // Reduced-accuracy convergence is accepted only with our own
            // feasibility certificate.
            SolverStatus::AlmostSolved if self.scaled_violation(&primal) <= ALMOST_SOLVED_VIOLATION => {
                SolveStatus::Optimal
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericalFailure,
        };
        let objective_value = if status == SolveStatus::Optimal {
            self.objective(&primal)
        } else {
            f64::NAN
        };
        Solution {
            status,
            objective_value,
            residuals: Residuals {
                primal: solver.info.res_primal,
                dual: solver.info.res_dual,
                gap: solver.info.gap_abs,
            },
            iterations: solver.info.iterations,
            backend_status: format!("{:?}", solver.solution.status),
            primal,
        }
    }

    fn var_name(&self, index: usize) -> String {
        for (name, range) in &self.blocks {
            if range.contains(&index) {
                return if range.len() == 1 {
                    name.clone()
                } else {
                    format!("{name}_{}", index - range.start)
                };
            }
        }
        format!("v{index}")
    }

    /// Writes the program in CPLEX LP format. Cone blocks become auxiliary
    /// equality-defined variables plus a quadratic constraint.
    pub fn write_lp(&self, out: &mut impl io::Write) -> io::Result<()> {
        let names: Vec<String> = (0..self.num_vars).map(|i| self.var_name(i)).collect();
        let mut text = String::new();
        let fmt_terms = |terms: &[(usize, f64)], names: &[String]| -> String {
            let mut s = String::new();
            for (i, &(c, v)) in terms.iter().enumerate() {
                let sign = if v < 0.0 { "-" } else if i == 0 { "" } else { "+" };
                let _ = write!(s, " {sign} {} {}", v.abs(), names[c]);
            }
            if s.is_empty() {
                s.push_str(" 0");
            }
            s
        };
        let _ = writeln!(text, "\\ {} variables", self.num_vars);
        let _ = writeln!(text, "Minimize");
        let linear: Vec<(usize, f64)> = self
            .linear_cost
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        let _ = write!(text, " obj:{}", fmt_terms(&linear, &names));
        if let Some(p) = &self.quadratic_cost {
            let mut quad = String::new();
            for &(r, c, v) in p.entries() {
                if r == c {
                    let _ = write!(quad, " + {v} {} ^2", names[r]);
                } else if r < c {
                    let _ = write!(quad, " + {} {} * {}", 2.0 * v, names[r], names[c]);
                }
            }
            if !quad.is_empty() {
                let _ = write!(text, " + [{quad} ] / 2");
            }
        }
        if self.cost_constant != 0.0 {
            let _ = write!(text, " + {} constant", self.cost_constant);
        }
        let _ = writeln!(text);
        let _ = writeln!(text, "Subject To");
        for (i, terms) in self.equalities.row_terms().iter().enumerate() {
            let _ = writeln!(
                text,
                " e{i}:{} = {}",
                fmt_terms(terms, &names),
                self.equality_rhs[i]
            );
        }
        for (i, terms) in self.inequalities.row_terms().iter().enumerate() {
            let _ = writeln!(
                text,
                " i{i}:{} <= {}",
                fmt_terms(terms, &names),
                self.inequality_rhs[i]
            );
        }
        let mut aux = Vec::new();
        for (k, cone) in self.cones.iter().enumerate() {
            let mut members = Vec::new();
            for (r, terms) in cone.map.row_terms().iter().enumerate() {
                let w = format!("soc{k}_{r}");
                let mut row = terms.clone();
                let mut extended = names.clone();
                extended.push(w.clone());
                row.push((names.len(), -1.0));
                let _ = writeln!(
                    text,
                    " d{k}_{r}:{} = {}",
                    fmt_terms(&row, &extended),
                    -cone.offset[r]
                );
                members.push(w);
            }
            let mut q = String::new();
            for w in &members[1..] {
                let _ = write!(q, " + {w} ^2");
            }
            let _ = writeln!(text, " q{k}: [{q} - {} ^2 ] <= 0", members[0]);
            aux.push(members);
        }
        let _ = writeln!(text, "Bounds");
        for name in &names {
            let _ = writeln!(text, " {name} free");
        }
        for members in &aux {
            let _ = writeln!(text, " {} >= 0", members[0]);
            for w in &members[1..] {
                let _ = writeln!(text, " {w} free");
            }
        }
        if self.cost_constant != 0.0 {
            let _ = writeln!(text, " constant = 1");
        }
        let _ = writeln!(text, "End");
        out.write_all(text.as_bytes())
    }
}

fn append_rows(target: &mut SparseMatrix, rhs_target: &mut Vec<f64>, a: SparseMatrix, rhs: Vec<f64>) {
    assert_eq!(a.cols, target.cols);
    assert_eq!(a.rows, rhs.len());
    let base = target.rows;
    target.rows += a.rows;
    for (r, c, v) in a.entries {
        target.push(base + r, c, v);
    }
    rhs_target.extend(rhs);
}

fn push_row(target: &mut SparseMatrix, rhs_target: &mut Vec<f64>, terms: &[(usize, f64)], rhs: f64) {
    let row = target.rows;
    target.rows += 1;
    for &(c, v) in terms {
        target.push(row, c, v);
    }
    rhs_target.push(rhs);
}

/// Inputs of the finite DR-CVaR halfspace program.
#[derive(Debug, Clone)]
pub struct DrcvarProblem<'a> {
    pub samples: &'a [Vec<f64>],
    pub h: &'a [f64],
    pub alpha: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub support: &'a Support,
    /// `S_O(h) + S_{-A}(h)`; the program variable is `g = g̃ + inflation`.
    pub inflation: f64,
    pub ground_norm: GroundNorm,
}

/// Builds the finite-dimensional reformulation of
/// `min g s.t. sup_{Q ∈ B_ε(P̂)} CVaR_α^Q(ℓ(p)) <= δ`.
///
/// Variables are laid out as `g, tau, lambda, eta[Ns], gamma[Ns][2][rows(V)]`,
/// with `gamma` stored rescaled per sample and support row.
/// The max-affine loss pieces are `a₁ = −h/α, b₁ = −1/α, c₁ = 1 − 1/α` and
/// `a₂ = 0, b₂ = 0, c₂ = 1`, giving for each sample `i` and piece `k`
///
/// ```text
/// a_k·pⁱ + b_k (g − inflation) + c_k τ + γ_ik·(v − V pⁱ) <= η_i
/// ‖Vᵀγ_ik − a_k‖_* <= λ,   γ_ik >= 0
/// λ ε + (1/Ns) Σ η_i <= δ
/// ```
///
/// With an unbounded support the `γ` block is absent and the dual-norm
/// constraint reduces to `λ >= ‖a_k‖_*`.
pub fn build_drcvar_program(problem: &DrcvarProblem<'_>) -> Result<ConicProgram> {
    let ns = problem.samples.len();
    if ns == 0 {
        return Err(Error::EmptySamples);
    }
    if !(problem.alpha > 0.0 && problem.alpha <= 1.0) {
        return Err(Error::InvalidAlpha(problem.alpha));
    }
    let d = problem.h.len();
    let alpha = problem.alpha;
    let a1: Vec<f64> = problem.h.iter().map(|x| -x / alpha).collect();
    let a2 = vec![0.0; d];
    let pieces = [(a1, -1.0 / alpha, 1.0 - 1.0 / alpha), (a2, 0.0, 1.0)];

    let rows = match problem.support {
        Support::Unbounded => 0,
        Support::Polytope(poly) => {
            poly.validate()?;
            if poly.matrix[0].len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: poly.matrix[0].len(),
                });
            }
            poly.rows()
        }
    };

    const G: usize = 0;
    const TAU: usize = 1;
    const LAMBDA: usize = 2;
    let eta0 = 3;
    let gamma0 = eta0 + ns;
    let num_vars = gamma0 + 2 * ns * rows;
    let gamma = |i: usize, k: usize, j: usize| gamma0 + (i * 2 + k) * rows + j;

    let mut program = ConicProgram::new(num_vars);
    program.name_block("g", G, 1);
    program.name_block("tau", TAU, 1);
    program.name_block("lambda", LAMBDA, 1);
    program.name_block("eta", eta0, ns);
    if rows > 0 {
        program.name_block("gamma", gamma0, 2 * ns * rows);
    }
    program.linear_cost[G] = 1.0;

    // The program stores γ̂ = σ γ with σ = √max(1, (v − V p)/100). Large
    // supports would otherwise put offsets up to the box size next to O(1)
    // data in the same row, beyond what the solver's equilibration absorbs.
    // The square root splits that range between these rows and the dual-norm
    // cones; scaling fully by the slack leaves γ̂ so cheap that interior
    // iterates keep it visibly positive. Supports of ordinary size are left
    // unscaled, which keeps their solves fastest.
    const SCALE_FROM: f64 = 100.0;
    let (slacks, sigma): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match problem.support {
        Support::Unbounded => (vec![Vec::new(); ns], vec![Vec::new(); ns]),
        Support::Polytope(poly) => problem
            .samples
            .iter()
            .map(|p| {
                let slack: Vec<f64> = (0..rows)
                    .map(|j| poly.offsets[j] - dot(&poly.matrix[j], p))
                    .collect();
                let sigma = slack.iter().map(|s| (s / SCALE_FROM).max(1.0).sqrt()).collect();
                (slack, sigma)
            })
            .unzip(),
    };

    let mut budget = vec![(LAMBDA, problem.epsilon)];
    budget.extend((0..ns).map(|i| (eta0 + i, 1.0 / ns as f64)));
    program.add_inequality_row(&budget, problem.delta);

    for (i, p) in problem.samples.iter().enumerate() {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        for (k, (a, b, c)) in pieces.iter().enumerate() {
            let mut terms = vec![(G, *b), (TAU, *c), (eta0 + i, -1.0)];
            for j in 0..rows {
                terms.push((gamma(i, k, j), slacks[i][j] / sigma[i][j]));
            }
            program.add_inequality_row(&terms, -dot(a, p) + b * problem.inflation);
        }
    }

    match problem.support {
        Support::Unbounded => {
            for (a, _, _) in &pieces {
                program.add_inequality_row(&[(LAMBDA, -1.0)], -problem.ground_norm.dual(a));
            }
        }
        Support::Polytope(poly) => {
            for (i, sigma_i) in sigma.iter().enumerate() {
                for (k, (a, _, _)) in pieces.iter().enumerate() {
                    for j in 0..rows {
                        program.add_inequality_row(&[(gamma(i, k, j), -1.0)], 0.0);
                    }
                    // components of Vᵀγ_ik − a_k
                    let component = |c: usize| -> Vec<(usize, f64)> {
                        (0..rows)
                            .map(|j| (gamma(i, k, j), poly.matrix[j][c] / sigma_i[j]))
                            .collect()
                    };
                    match problem.ground_norm {
                        GroundNorm::L2 => {
                            let mut map = SparseMatrix::new(d + 1, num_vars);
                            let mut offset = vec![0.0; d + 1];
                            map.push(0, LAMBDA, 1.0);
                            for (c, a_c) in a.iter().enumerate() {
                                for (col, v) in component(c) {
                                    map.push(c + 1, col, v);
                                }
                                offset[c + 1] = -a_c;
                            }
                            program.add_cone(map, offset);
                        }
                        GroundNorm::L1 => {
                            for (c, &a_c) in a.iter().enumerate() {
                                let mut plus = component(c);
                                plus.push((LAMBDA, -1.0));
                                program.add_inequality_row(&plus, a_c);
                                let mut minus: Vec<(usize, f64)> =
                                    component(c).into_iter().map(|(col, v)| (col, -v)).collect();
                                minus.push((LAMBDA, -1.0));
                                program.add_inequality_row(&minus, -a_c);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(program)
}
