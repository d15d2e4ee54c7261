//! Dense convex quadratic programming.
//!
//! ```text
//! minimize    1/2 x' P x + q' x
//! subject to  A x  = b          (equalities)
//!             G x <= h          (general inequalities)
//!             lo <= x <= hi     (boxes; +-inf entries drop a side)
//! ```
//!
//! P must be symmetric positive semidefinite. Problems here are small
//! (tens of variables) but solved many thousands of times per run, with
//! rank-deficient P common (envelope variables carry no cost), so the solver
//! is a primal-dual interior point method with static regularization rather
//! than an active-set scheme.

mod ipm;
pub mod reference;

pub use ipm::solve;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Problem data. Construct with [`QpProblem::new`] and add constraints via
/// the `with_*` helpers or by filling the fields directly, then `check()`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained shell with free variables.
    pub fn new(p: DMatrix<f64>, q: DVector<f64>) -> Self {
        let n = q.len();
        QpProblem {
            p,
            q,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.p * x)[(0, 0)] + self.q.dot(x)
    }

    /// Shape and finiteness validation.
    pub fn check(&self) -> Result<()> {
        let n = self.n();
        if self.p.nrows() != n || self.p.ncols() != n {
            return Err(Error::Parameter(format!(
                "P must be {n}x{n}, got {}x{}",
                self.p.nrows(),
                self.p.ncols()
            )));
        }
        if self.a_eq.ncols() != n || self.a_eq.nrows() != self.b_eq.len() {
            return Err(Error::Parameter("equality block shape mismatch".into()));
        }
        if self.a_in.ncols() != n || self.a_in.nrows() != self.b_in.len() {
            return Err(Error::Parameter("inequality block shape mismatch".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Parameter("bound vectors must have length n".into()));
        }
        for v in self
            .p
            .iter()
            .chain(self.q.iter())
            .chain(self.a_eq.iter())
            .chain(self.b_eq.iter())
            .chain(self.a_in.iter())
            .chain(self.b_in.iter())
        {
            if !v.is_finite() {
                return Err(Error::Parameter("problem data contains a non-finite value".into()));
            }
        }
        for i in 0..n {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::Parameter(format!("variable {i} has invalid bounds [{lo}, {hi}]")));
            }
            if lo > hi {
                return Err(Error::Parameter(format!(
                    "variable {i} has empty box [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    /// KKT residual below tolerance.
    Optimal,
    /// Iteration budget exhausted on a (numerically) feasible problem.
    MaxIter,
    /// Constraints proven inconsistent (elastic relaxation has positive
    /// minimum violation).
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: QpStatus,
    pub x: DVector<f64>,
    /// Multipliers of the equality rows.
    pub y_eq: DVector<f64>,
    /// Multipliers of the general inequality rows (non-negative).
    pub z_in: DVector<f64>,
    pub objective: f64,
    /// Max-norm KKT residual (stationarity, feasibility, complementarity).
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Worst constraint violation of the elastic relaxation when
    /// `status == Infeasible`; 0 otherwise.
    pub infeasibility: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    /// Absolute KKT tolerance on data scaled O(1)..O(100).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        // Interior point iterations are Newton steps; 100 is a generous
        // ceiling (typical solves take 10-25).
        QpOptions { tol: 1e-8, max_iter: 100 }
    }
}

/// Componentwise projection onto `[lower, upper]`.
pub fn project_box(x: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| x[i].max(lower[i]).min(upper[i]))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn dmat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn unconstrained_minimum() {
        // min 1/2 (x-1)^2 + 1/2 (y+2)^2
        let p = DMatrix::identity(2, 2);
        let q = DVector::from_column_slice(&[-1.0, 2.0]);
        let sol = solve(&QpProblem::new(p, q), &QpOptions::default(), None).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(sol.x[1], -2.0, epsilon = 1e-7);
    }

    #[test]
    fn box_clamps_separable_objective() {
        // min 1/2 ||x - c||^2 in a box: solution is clamp(c).
        let c = [3.0, -5.0, 0.25];
        let p = DMatrix::identity(3, 3);
        let q = -DVector::from_column_slice(&c);
        let mut prob = QpProblem::new(p, q);
        prob.lower = DVector::from_column_slice(&[0.0, -1.0, 0.0]);
        prob.upper = DVector::from_column_slice(&[1.0, 1.0, 1.0]);
        let sol = solve(&prob, &QpOptions::default(), None).unwrap();
        for (i, want) in [1.0, -1.0, 0.25].iter().enumerate() {
            assert_relative_eq!(sol.x[i], *want, epsilon = 1e-7);
        }
    }

    #[test]
    fn equality_constrained_split() {
        // min 1/2 ||x||^2 s.t. x0 + x1 = 2 -> (1, 1)
        let mut prob = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2));
        prob.a_eq = dmat(1, 2, &[1.0, 1.0]);
        prob.b_eq = DVector::from_column_slice(&[2.0]);
        let sol = solve(&prob, &QpOptions::default(), None).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(sol.x[1], 1.0, epsilon = 1e-7);
        // stationarity: x + A' y = 0 -> y = -1
        assert_relative_eq!(sol.y_eq[0], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn active_inequality() {
        // min 1/2 ||x||^2 s.t. -x0 - x1 <= -2: same optimum as the equality.
        let mut prob = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2));
        prob.a_in = dmat(1, 2, &[-1.0, -1.0]);
        prob.b_in = DVector::from_column_slice(&[-2.0]);
        let sol = solve(&prob, &QpOptions::default(), None).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-6);
        assert!(sol.z_in[0] > 0.5); // active row carries a positive multiplier
    }

    #[test]
    fn singular_p_block_is_fine() {
        // Envelope-style structure: x1 has no cost, pinned by an equality.
        let p = dmat(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let mut prob = QpProblem::new(p, DVector::from_column_slice(&[-2.0, 0.0]));
        prob.a_eq = dmat(1, 2, &[0.0, 1.0]);
        prob.b_eq = DVector::from_column_slice(&[3.0]);
        let sol = solve(&prob, &QpOptions::default(), None).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(sol.x[1], 3.0, epsilon = 1e-7);
    }

    #[test]
    fn inconsistent_rows_detected_infeasible() {
        // x <= 1 and x >= 2 cannot hold.
        let mut prob = QpProblem::new(DMatrix::identity(1, 1), DVector::zeros(1));
        prob.a_in = dmat(2, 1, &[1.0, -1.0]);
        prob.b_in = DVector::from_column_slice(&[1.0, -2.0]);
        let sol = solve(&prob, &QpOptions::default(), None).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
        assert!(sol.infeasibility > 0.4);
    }

    #[test]
    fn conflicting_equalities_detected_infeasible() {
        let mut prob = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2));
        prob.a_eq = dmat(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        prob.b_eq = DVector::from_column_slice(&[1.0, 2.0]);
        let sol = solve(&prob, &QpOptions::default(), None).unwrap();
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn nan_rejected() {
        let mut prob = QpProblem::new(DMatrix::identity(1, 1), DVector::zeros(1));
        prob.q[0] = f64::NAN;
        assert!(solve(&prob, &QpOptions::default(), None).is_err());
    }

    #[test]
    fn empty_box_rejected() {
        let mut prob = QpProblem::new(DMatrix::identity(1, 1), DVector::zeros(1));
        prob.lower[0] = 1.0;
        prob.upper[0] = 0.0;
        assert!(solve(&prob, &QpOptions::default(), None).is_err());
    }

    #[test]
    fn warm_and_cold_starts_agree_on_strictly_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let prob = random_pd_qp(&mut rng, 5);
            let cold = solve(&prob, &QpOptions::default(), None).unwrap();
            let hint = DVector::from_fn(5, |_, _| rng.gen_range(-2.0..2.0));
            let warm = solve(&prob, &QpOptions::default(), Some(&hint)).unwrap();
            assert!((&cold.x - &warm.x).amax() < 1e-6, "solutions diverge");
        }
    }

    #[test]
    fn matches_enumeration_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..30 {
            let n = rng.gen_range(2..=6);
            let prob = random_pd_qp(&mut rng, n);
            let sol = solve(&prob, &QpOptions::default(), None).unwrap();
            let (x_ref, obj_ref) = reference::enumerate_solve(&prob).unwrap().unwrap();
            assert!(
                (sol.objective - obj_ref).abs() <= 1e-6 * (1.0 + obj_ref.abs()),
                "trial {trial}: ipm {} vs oracle {}",
                sol.objective,
                obj_ref
            );
            assert!((&sol.x - &x_ref).amax() < 1e-4);
        }
    }

    #[test]
    fn sampled_feasible_points_never_beat_the_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = rng.gen_range(2..=5);
            let prob = random_pd_qp(&mut rng, n);
            let sol = solve(&prob, &QpOptions::default(), None).unwrap();
            let mut tested = 0;
            while tested < 200 {
                let x = DVector::from_fn(n, |i, _| {
                    rng.gen_range(prob.lower[i]..=prob.upper[i])
                });
                let ineq_ok = (0..prob.a_in.nrows())
                    .all(|r| (prob.a_in.row(r) * &x)[(0, 0)] <= prob.b_in[r] + 1e-12);
                if !ineq_ok {
                    continue;
                }
                tested += 1;
                assert!(prob.objective(&x) >= sol.objective - 1e-7);
            }
        }
    }

    #[test]
    fn iteration_budget_exhaustion_reports_maxiter() {
        let mut prob = QpProblem::new(DMatrix::identity(3, 3), DVector::from_element(3, -1.0));
        prob.lower = DVector::zeros(3);
        prob.upper = DVector::from_element(3, 2.0);
        let sol = solve(&prob, &QpOptions { tol: 1e-14, max_iter: 2 }, None).unwrap();
        assert_eq!(sol.status, QpStatus::MaxIter);
    }

    #[test]
    fn project_box_examples() {
        let x = DVector::from_column_slice(&[-1.0, 0.5, 9.0]);
        let lo = DVector::from_column_slice(&[0.0, 0.0, 0.0]);
        let hi = DVector::from_column_slice(&[1.0, 1.0, 1.0]);
        let p = project_box(&x, &lo, &hi);
        assert_eq!(p.as_slice(), &[0.0, 0.5, 1.0]);
        // idempotent
        assert_eq!(project_box(&p, &lo, &hi), p);
    }

    /// Random strictly convex QP with boxes and a couple of general rows,
    /// guaranteed feasible (rows are loose around the box center).
    fn random_pd_qp(rng: &mut ChaCha8Rng, n: usize) -> QpProblem {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let p = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
        let q = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let mut prob = QpProblem::new(p, q);
        prob.lower = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..-0.5));
        prob.upper = DVector::from_fn(n, |_, _| rng.gen_range(0.5..2.0));
        let rows = rng.gen_range(0..=2);
        prob.a_in = DMatrix::from_fn(rows, n, |_, _| rng.gen_range(-1.0..1.0));
        // b chosen so the box center is strictly inside every row
        prob.b_in = DVector::from_fn(rows, |r, _| {
            let center = (&prob.lower + &prob.upper) * 0.5;
            (prob.a_in.row(r) * center)[(0, 0)] + rng.gen_range(0.3..1.5)
        });
        prob
    }
}
