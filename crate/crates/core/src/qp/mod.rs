//! Dense convex quadratic programming.
//!
//! Problems are stated as
//!
//! ```text
//!   minimize   ½ xᵀQx + cᵀx
//!   subject to G x ≤ h
//!              A x = b
//!              lower ≤ x ≤ upper
//! ```
//!
//! with `Q` symmetric positive semidefinite. [`solve_qp`] runs an
//! operator-splitting (ADMM) method with Ruiz equilibration and a final
//! active-set polish step, returning primal and dual solutions;
//! [`kkt_residuals`] recomputes optimality diagnostics for any candidate
//! solution independently of the solver loop.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{min_symmetric_eigenvalue, norm_inf, Mat};

mod scaling;
mod solver;

/// Relative tolerance for the symmetry check on `Q`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// `Q` must satisfy `λ_min(Q) ≥ -PSD_TOL · ‖Q‖` to count as convex.
pub const PSD_TOL: f64 = 1e-9;
/// Default convergence tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// Data of a convex QP. Fields are public; start from [`QpProblem::new`]
/// and fill in the constraint blocks that apply.
#[derive(Debug, Clone)]
pub struct QpProblem {
    /// Quadratic cost matrix, `n × n`, symmetric PSD.
    pub q: Mat,
    /// Linear cost vector, length `n`.
    pub c: Vec<f64>,
    /// Inequality matrix for `G x ≤ h`, `m × n` (may have zero rows).
    pub g: Mat,
    /// Inequality right-hand side, length `m`.
    pub h: Vec<f64>,
    /// Equality matrix for `A x = b`, `p × n` (may have zero rows).
    pub a: Mat,
    /// Equality right-hand side, length `p`.
    pub b: Vec<f64>,
    /// Per-variable lower bounds; `-inf` where absent.
    pub lower: Vec<f64>,
    /// Per-variable upper bounds; `+inf` where absent.
    pub upper: Vec<f64>,
}

impl QpProblem {
    /// Unconstrained problem `min ½xᵀQx + cᵀx`; add constraints by
    /// assigning to the public fields.
    pub fn new(q: Mat, c: Vec<f64>) -> Self {
        let n = c.len();
        QpProblem {
            q,
            c,
            g: Mat::zeros(0, n),
            h: Vec::new(),
            a: Mat::zeros(0, n),
            b: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// Number of decision variables.
    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Checks dimensions, symmetry, and positive semidefiniteness.
    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.n();
        let dims: [(&'static str, usize, usize); 7] = [
            ("Q rows", n, self.q.rows()),
            ("Q cols", n, self.q.cols()),
            ("G cols", n, self.g.cols()),
            ("h len", self.g.rows(), self.h.len()),
            ("A cols", n, self.a.cols()),
            ("b len", self.a.rows(), self.b.len()),
            ("lower len", n, self.lower.len()),
        ];
        for (what, expected, actual) in dims {
            if expected != actual {
                return Err(QpError::DimensionMismatch { what, expected, actual });
            }
        }
        if self.upper.len() != n {
            return Err(QpError::DimensionMismatch {
                what: "upper len",
                expected: n,
                actual: self.upper.len(),
            });
        }
        let gap = self.q.symmetry_gap();
        if gap > SYMMETRY_TOL * self.q.max_abs().max(1.0) {
            return Err(QpError::NotSymmetric { gap });
        }
        let min_eig = min_symmetric_eigenvalue(&self.q);
        if min_eig < -PSD_TOL * self.q.max_abs() {
            return Err(QpError::NonConvex { min_eigenvalue: min_eig });
        }
        Ok(())
    }

    /// Objective value `½xᵀQx + cᵀx` at an arbitrary point.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut qx = vec![0.0; n];
        self.q.matvec(x, &mut qx);
        0.5 * crate::linalg::dot(x, &qx) + crate::linalg::dot(&self.c, x)
    }
}

/// Outcome class of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// KKT conditions hold to the requested tolerance.
    Optimal,
    /// A certificate of primal infeasibility was found.
    Infeasible,
    /// Iteration budget exhausted before reaching the tolerance (also
    /// reported for unbounded problems, which never converge).
    MaxIterations,
}

/// Primal/dual solution returned by [`solve_qp`].
#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Primal point.
    pub x: Vec<f64>,
    /// Objective value `½xᵀQx + cᵀx` at `x`.
    pub objective: f64,
    pub status: SolveStatus,
    /// ADMM iterations performed.
    pub iterations: usize,
    /// Multipliers for `G x ≤ h` (nonnegative up to roundoff).
    pub ineq_duals: Vec<f64>,
    /// Multipliers for `A x = b` (free sign).
    pub eq_duals: Vec<f64>,
    /// Multipliers for `x ≥ lower` (nonnegative up to roundoff).
    pub lower_duals: Vec<f64>,
    /// Multipliers for `x ≤ upper` (nonnegative up to roundoff).
    pub upper_duals: Vec<f64>,
    /// Max constraint violation, each row scaled by `max(1, ‖row‖∞)`.
    pub primal_residual: f64,
    /// `‖Qx + c + Gᵀλ + Aᵀν + μᵘ − μˡ‖∞`.
    pub dual_residual: f64,
}

/// Errors from problem validation.
#[derive(Debug, Clone, PartialEq)]
pub enum QpError {
    /// `Q` has an eigenvalue below the PSD tolerance.
    NonConvex { min_eigenvalue: f64 },
    /// `Q` deviates from symmetry beyond [`SYMMETRY_TOL`].
    NotSymmetric { gap: f64 },
    /// Two dimensions that must agree do not.
    DimensionMismatch { what: &'static str, expected: usize, actual: usize },
}

impl fmt::Display for QpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QpError::NonConvex { min_eigenvalue } => {
                write!(f, "Q is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")
            }
            QpError::NotSymmetric { gap } => {
                write!(f, "Q is not symmetric (max |Q_ij - Q_ji| = {gap:e})")
            }
            QpError::DimensionMismatch { what, expected, actual } => {
                write!(f, "dimension mismatch: {what} should be {expected}, got {actual}")
            }
        }
    }
}

impl core::error::Error for QpError {}

/// Max-norm KKT diagnostics computed directly from problem data, with no
/// reference to solver internals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖Qx + c + Gᵀλ + Aᵀν + μᵘ − μˡ‖∞`.
    pub stationarity: f64,
    /// Largest raw constraint violation over all constraint classes.
    pub primal: f64,
    /// Largest complementary-slackness product `|multiplier · slack|`.
    pub complementarity: f64,
}

/// Solves the QP to absolute tolerance `tol` within `max_iter` iterations.
///
/// The returned duals satisfy the sign conventions of [`QpSolution`]; when
/// `status == Optimal` all KKT residuals are below `tol` and inequality
/// duals are above `-1e-10`.
pub fn solve_qp(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution, QpError> {
    problem.validate()?;
    Ok(solver::solve(problem, tol, max_iter))
}

/// Recomputes KKT residuals for a candidate solution.
pub fn kkt_residuals(problem: &QpProblem, solution: &QpSolution) -> Result<KktResiduals, QpError> {
    let n = problem.n();
    let checks: [(&'static str, usize, usize); 5] = [
        ("x len", n, solution.x.len()),
        ("ineq_duals len", problem.g.rows(), solution.ineq_duals.len()),
        ("eq_duals len", problem.a.rows(), solution.eq_duals.len()),
        ("lower_duals len", n, solution.lower_duals.len()),
        ("upper_duals len", n, solution.upper_duals.len()),
    ];
    for (what, expected, actual) in checks {
        if expected != actual {
            return Err(QpError::DimensionMismatch { what, expected, actual });
        }
    }

    let x = &solution.x;
    let mut grad = vec![0.0; n];
    problem.q.matvec(x, &mut grad);
    for (g, &ci) in grad.iter_mut().zip(&problem.c) {
        *g += ci;
    }
    problem.g.matvec_t_acc(&solution.ineq_duals, 1.0, &mut grad);
    problem.a.matvec_t_acc(&solution.eq_duals, 1.0, &mut grad);
    for j in 0..n {
        grad[j] += solution.upper_duals[j] - solution.lower_duals[j];
    }
    let stationarity = norm_inf(&grad);

    let mut primal = 0.0f64;
    let mut complementarity = 0.0f64;
    let mut gx = vec![0.0; problem.g.rows()];
    problem.g.matvec(x, &mut gx);
    for i in 0..problem.g.rows() {
        let slack = gx[i] - problem.h[i];
        primal = primal.max(slack);
        complementarity = complementarity.max((solution.ineq_duals[i] * slack).abs());
    }
    let mut ax = vec![0.0; problem.a.rows()];
    problem.a.matvec(x, &mut ax);
    for i in 0..problem.a.rows() {
        primal = primal.max((ax[i] - problem.b[i]).abs());
    }
    for j in 0..n {
        if problem.lower[j].is_finite() {
            let slack = problem.lower[j] - x[j];
            primal = primal.max(slack);
            complementarity = complementarity.max((solution.lower_duals[j] * slack).abs());
        }
        if problem.upper[j].is_finite() {
            let slack = x[j] - problem.upper[j];
            primal = primal.max(slack);
            complementarity = complementarity.max((solution.upper_duals[j] * slack).abs());
        }
    }

    Ok(KktResiduals { stationarity, primal, complementarity })
}
