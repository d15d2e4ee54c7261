//! Exhaustive reference solver for tiny strictly convex QPs.
//!
//! Enumerates every subset of inequality rows (general rows plus finite box
//! sides), solves the equality-restricted stationarity system for each, and
//! keeps the best restricted minimizer that is primal feasible. For a
//! strictly convex objective the optimum's own active set appears in the
//! enumeration, and no other feasible candidate can undercut it, so the
//! minimum over candidates equals the true optimum. Intended as an
//! independent check of the interior point solver, not for production sizes.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qp::QpProblem;

/// Hard cap on 2^(inequality rows).
const MAX_SUBSETS: u64 = 1 << 22;

/// Returns `Ok(None)` when no feasible candidate exists (infeasible problem
/// or degenerate enumeration), `Ok(Some((x, objective)))` otherwise.
pub fn enumerate_solve(problem: &QpProblem) -> Result<Option<(DVector<f64>, f64)>> {
    problem.check()?;
    let n = problem.n();
    // Collect all inequality rows as (coefficients, rhs).
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for r in 0..problem.a_in.nrows() {
        rows.push((problem.a_in.row(r).transpose().into_owned(), problem.b_in[r]));
    }
    for i in 0..n {
        if problem.lower[i].is_finite() {
            let mut g = DVector::zeros(n);
            g[i] = -1.0;
            rows.push((g, -problem.lower[i]));
        }
        if problem.upper[i].is_finite() {
            let mut g = DVector::zeros(n);
            g[i] = 1.0;
            rows.push((g, problem.upper[i]));
        }
    }
    let m = rows.len();
    if m >= 63 || (1u64 << m) > MAX_SUBSETS {
        return Err(Error::Refused(format!(
            "enumeration over 2^{m} active sets exceeds the bound"
        )));
    }
    let m_eq = problem.a_eq.nrows();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u64..(1u64 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let rows_total = m_eq + active.len();
        // Stationarity with actives as equalities:
        //   [P  A'][x]   [-q]
        //   [A  0 ][l] = [ b ]
        let dim = n + rows_total;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&problem.p);
        for (r, row) in (0..m_eq).map(|r| (r, problem.a_eq.row(r).transpose())) {
            for c in 0..n {
                kkt[(n + r, c)] = row[c];
                kkt[(c, n + r)] = row[c];
            }
        }
        for (k, &ri) in active.iter().enumerate() {
            for c in 0..n {
                kkt[(n + m_eq + k, c)] = rows[ri].0[c];
                kkt[(c, n + m_eq + k)] = rows[ri].0[c];
            }
        }
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, n).copy_from(&(-&problem.q));
        for r in 0..m_eq {
            rhs[n + r] = problem.b_eq[r];
        }
        for (k, &ri) in active.iter().enumerate() {
            rhs[n + m_eq + k] = rows[ri].1;
        }
        let Some(sol) = kkt.clone().lu().solve(&rhs) else {
            continue;
        };
        // Reject spurious solutions of singular systems.
        if (&kkt * &sol - &rhs).amax() > 1e-7 * (1.0 + rhs.amax()) {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        let feasible = rows
            .iter()
            .all(|(g, h)| g.dot(&x) <= h + 1e-8)
            && (0..m_eq).all(|r| {
                ((problem.a_eq.row(r) * &x)[(0, 0)] - problem.b_eq[r]).abs() <= 1e-8
            });
        if !feasible {
            continue;
        }
        let obj = problem.objective(&x);
        if best.as_ref().map_or(true, |(_, b)| obj < *b - 0.0) {
            best = Some((x, obj));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    use super::*;

    #[test]
    fn clamped_separable_case() {
        let mut prob = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::from_column_slice(&[-3.0, 5.0]),
        );
        prob.lower = DVector::from_column_slice(&[0.0, 0.0]);
        prob.upper = DVector::from_column_slice(&[1.0, 1.0]);
        let (x, _) = enumerate_solve(&prob).unwrap().unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_returns_none() {
        let mut prob = QpProblem::new(DMatrix::identity(1, 1), DVector::zeros(1));
        prob.a_in = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        prob.b_in = DVector::from_column_slice(&[1.0, -2.0]);
        assert!(enumerate_solve(&prob).unwrap().is_none());
    }

    #[test]
    fn oversized_enumeration_refused() {
        let n = 30;
        let prob = {
            let mut p = QpProblem::new(DMatrix::identity(n, n), DVector::zeros(n));
            p.lower = DVector::zeros(n);
            p.upper = DVector::from_element(n, 1.0);
            p
        };
        assert!(matches!(enumerate_solve(&prob), Err(Error::Refused(_))));
    }
}
