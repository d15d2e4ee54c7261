//! Primal-dual interior point method (Mehrotra predictor-corrector).
//!
//! Inequalities are kept in three slack families: general rows `Gx + s = h`,
//! lower boxes `x - s = lo` and upper boxes `x + s = hi`. Eliminating slacks
//! and inequality duals reduces each Newton step to the saddle system
//!
//! ```text
//! [ P + G' D_g G + D_box + dI   A' ] [dx]   [rhs_x]
//! [ A                          -dI ] [dy] = [rhs_y]
//! ```
//!
//! solved by a Cholesky factorization of the (1,1) block and a Schur
//! complement over the equality rows. The static regularization `d` keeps
//! both factorizations alive when P is rank deficient, which is the normal
//! case here (envelope variables carry no cost).
//!
//! A failed solve falls back to an elastic relaxation (minimum constraint
//! violation); a strictly positive relaxed optimum certifies infeasibility.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::Result;
use crate::qp::{project_box, QpOptions, QpProblem, QpSolution, QpStatus};

const REG_PRIMAL: f64 = 1e-9;
const REG_DUAL: f64 = 1e-10;
/// Fraction-to-boundary factor.
const STEP_SCALE: f64 = 0.995;
/// Elastic violations above `FEAS_TOL * scale` certify infeasibility.
const FEAS_TOL: f64 = 1e-6;

/// Solves the QP. `warm` seeds the primal iterate (useful when the same
/// structure is re-solved with a perturbed linear term).
pub fn solve(
    problem: &QpProblem,
    options: &QpOptions,
    warm: Option<&DVector<f64>>,
) -> Result<QpSolution> {
    problem.check()?;
    match solve_inner(problem, options, warm) {
        Outcome::Converged(sol) => Ok(sol),
        Outcome::Stalled(sol) => classify_failure(problem, options, sol),
    }
}

enum Outcome {
    Converged(QpSolution),
    Stalled(QpSolution),
}

struct Family {
    s: DVector<f64>,
    z: DVector<f64>,
}

impl Family {
    fn len(&self) -> usize {
        self.s.len()
    }
}

fn solve_inner(problem: &QpProblem, options: &QpOptions, warm: Option<&DVector<f64>>) -> Outcome {
    let n = problem.n();
    let m_eq = problem.a_eq.nrows();
    let m_in = problem.a_in.nrows();
    let lo_idx: Vec<usize> = (0..n).filter(|&i| problem.lower[i].is_finite()).collect();
    let hi_idx: Vec<usize> = (0..n).filter(|&i| problem.upper[i].is_finite()).collect();

    let data_scale = data_scale(problem);
    let tol = options.tol * data_scale;

    // Strictly interior start: warm hint or box midpoint (0 for free vars).
    let mut x = match warm {
        Some(w) => w.clone(),
        None => DVector::from_fn(n, |i, _| {
            let (lo, hi) = (problem.lower[i], problem.upper[i]);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => 0.0,
            }
        }),
    };
    for i in 0..n {
        let (lo, hi) = (problem.lower[i], problem.upper[i]);
        if lo.is_finite() && hi.is_finite() {
            let margin = 1e-3 * (hi - lo).max(1e-9);
            x[i] = x[i].max(lo + margin).min(hi - margin);
        } else if lo.is_finite() {
            x[i] = x[i].max(lo + 1e-3);
        } else if hi.is_finite() {
            x[i] = x[i].min(hi - 1e-3);
        }
    }
    let mut y = DVector::zeros(m_eq);
    let slack0 = |raw: f64| raw.max(1.0);
    let gx = &problem.a_in * &x;
    let mut fam_g = Family {
        s: DVector::from_fn(m_in, |r, _| slack0(problem.b_in[r] - gx[r])),
        z: DVector::from_element(m_in, 1.0),
    };
    let mut fam_lo = Family {
        s: DVector::from_fn(lo_idx.len(), |k, _| slack0(x[lo_idx[k]] - problem.lower[lo_idx[k]])),
        z: DVector::from_element(lo_idx.len(), 1.0),
    };
    let mut fam_hi = Family {
        s: DVector::from_fn(hi_idx.len(), |k, _| slack0(problem.upper[hi_idx[k]] - x[hi_idx[k]])),
        z: DVector::from_element(hi_idx.len(), 1.0),
    };
    let m_total = fam_g.len() + fam_lo.len() + fam_hi.len();

    let mut best_residual = f64::INFINITY;
    let mut best_x = x.clone();
    let mut iterations = 0;

    for iter in 0..options.max_iter {
        iterations = iter;
        // Diverged into non-finite territory; let the elastic probe classify.
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
        // Residuals.
        let r_dual = residual_dual(problem, &x, &y, &fam_g, &fam_lo, &fam_hi, &lo_idx, &hi_idx);
        let r_eq = &problem.a_eq * &x - &problem.b_eq;
        let r_g = &problem.a_in * &x + &fam_g.s - &problem.b_in;
        let r_lo = DVector::from_fn(fam_lo.len(), |k, _| {
            problem.lower[lo_idx[k]] - x[lo_idx[k]] + fam_lo.s[k]
        });
        let r_hi = DVector::from_fn(fam_hi.len(), |k, _| {
            x[hi_idx[k]] + fam_hi.s[k] - problem.upper[hi_idx[k]]
        });
        let mu = if m_total > 0 {
            (fam_g.s.dot(&fam_g.z) + fam_lo.s.dot(&fam_lo.z) + fam_hi.s.dot(&fam_hi.z))
                / m_total as f64
        } else {
            0.0
        };
        let primal = r_eq
            .amax_or_zero()
            .max(r_g.amax_or_zero())
            .max(r_lo.amax_or_zero())
            .max(r_hi.amax_or_zero());
        let kkt = r_dual.amax_or_zero().max(primal).max(mu);
        if !kkt.is_finite() {
            break;
        }
        if kkt < best_residual {
            best_residual = kkt;
            best_x.copy_from(&x);
        }
        if kkt <= tol {
            return Outcome::Converged(finish(problem, x, y, fam_g, QpStatus::Optimal, kkt, iter));
        }
        // Divergence: complementarity collapsed but feasibility is stuck.
        if m_total > 0 && mu < 1e-12 * data_scale && primal > tol.max(1e2 * options.tol) {
            break;
        }

        // Normal matrix K and its factorization (shared by both passes).
        let mut k = problem.p.clone();
        for r in 0..m_in {
            let d = fam_g.z[r] / fam_g.s[r];
            let row = problem.a_in.row(r);
            for a in 0..n {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in 0..n {
                    k[(a, b)] += d * ra * row[b];
                }
            }
        }
        for (kk, &i) in lo_idx.iter().enumerate() {
            k[(i, i)] += fam_lo.z[kk] / fam_lo.s[kk];
        }
        for (kk, &i) in hi_idx.iter().enumerate() {
            k[(i, i)] += fam_hi.z[kk] / fam_hi.s[kk];
        }
        let (chol_k, chol_y) = match factor(&k, &problem.a_eq) {
            Some(f) => f,
            None => break, // hopeless conditioning; classify via elastic
        };

        // Predictor (affine scaling) pass.
        let rc_g = fam_g.s.component_mul(&fam_g.z);
        let rc_lo = fam_lo.s.component_mul(&fam_lo.z);
        let rc_hi = fam_hi.s.component_mul(&fam_hi.z);
        let aff = newton_step(
            problem, &chol_k, &chol_y, &r_dual, &r_eq, &r_g, &r_lo, &r_hi, &rc_g, &rc_lo, &rc_hi,
            &fam_g, &fam_lo, &fam_hi, &lo_idx, &hi_idx,
        );
        let (ap_raw, ad_raw) = max_steps(&fam_g, &fam_lo, &fam_hi, &aff);
        let (ap, ad) = (ap_raw.min(1.0), ad_raw.min(1.0));
        let mu_aff = if m_total > 0 {
            (shifted_dot(&fam_g.s, &aff.ds_g, &fam_g.z, &aff.dz_g, ap, ad)
                + shifted_dot(&fam_lo.s, &aff.ds_lo, &fam_lo.z, &aff.dz_lo, ap, ad)
                + shifted_dot(&fam_hi.s, &aff.ds_hi, &fam_hi.z, &aff.dz_hi, ap, ad))
                / m_total as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).clamp(0.0, 1.0) } else { 0.0 };

        // Corrector pass: recenter and cancel the affine product terms.
        let rc_g2 = &rc_g + aff.ds_g.component_mul(&aff.dz_g) - DVector::from_element(fam_g.len(), sigma * mu);
        let rc_lo2 = &rc_lo + aff.ds_lo.component_mul(&aff.dz_lo) - DVector::from_element(fam_lo.len(), sigma * mu);
        let rc_hi2 = &rc_hi + aff.ds_hi.component_mul(&aff.dz_hi) - DVector::from_element(fam_hi.len(), sigma * mu);
        let step = newton_step(
            problem, &chol_k, &chol_y, &r_dual, &r_eq, &r_g, &r_lo, &r_hi, &rc_g2, &rc_lo2,
            &rc_hi2, &fam_g, &fam_lo, &fam_hi, &lo_idx, &hi_idx,
        );
        let (ap_raw, ad_raw) = max_steps(&fam_g, &fam_lo, &fam_hi, &step);
        let ap = (STEP_SCALE * ap_raw).min(1.0);
        let ad = (STEP_SCALE * ad_raw).min(1.0);

        x += &step.dx * ap;
        y += &step.dy * ad;
        fam_g.s += &step.ds_g * ap;
        fam_g.z += &step.dz_g * ad;
        fam_lo.s += &step.ds_lo * ap;
        fam_lo.z += &step.dz_lo * ad;
        fam_hi.s += &step.ds_hi * ap;
        fam_hi.z += &step.dz_hi * ad;
    }

    let kkt = best_residual;
    Outcome::Stalled(finish(problem, best_x, y, fam_g, QpStatus::MaxIter, kkt, iterations))
}

/// Distinguishes "ran out of iterations" from genuine inconsistency by
/// minimizing the constraint violation directly.
fn classify_failure(
    problem: &QpProblem,
    options: &QpOptions,
    stalled: QpSolution,
) -> Result<QpSolution> {
    let n = problem.n();
    let m_eq = problem.a_eq.nrows();
    let m_in = problem.a_in.nrows();
    if m_eq + m_in == 0 {
        return Ok(stalled);
    }
    // Elastic program over (x, t_eq, t_in):
    //   min 1/2 ||t||^2 + eps/2 ||x||^2
    //   s.t. A x - t_eq = b ; G x - t_in <= h ; t_in >= 0 ; x in its box.
    let nt = n + m_eq + m_in;
    let mut p = DMatrix::zeros(nt, nt);
    for i in 0..n {
        p[(i, i)] = 1e-8;
    }
    for i in n..nt {
        p[(i, i)] = 1.0;
    }
    let mut prob = QpProblem::new(p, DVector::zeros(nt));
    let mut a_eq = DMatrix::zeros(m_eq, nt);
    a_eq.view_mut((0, 0), (m_eq, n)).copy_from(&problem.a_eq);
    for r in 0..m_eq {
        a_eq[(r, n + r)] = -1.0;
    }
    prob.a_eq = a_eq;
    prob.b_eq = problem.b_eq.clone();
    let mut a_in = DMatrix::zeros(m_in, nt);
    a_in.view_mut((0, 0), (m_in, n)).copy_from(&problem.a_in);
    for r in 0..m_in {
        a_in[(r, n + m_eq + r)] = -1.0;
    }
    prob.a_in = a_in;
    prob.b_in = problem.b_in.clone();
    let mut lower = DVector::from_element(nt, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(nt, f64::INFINITY);
    lower.rows_mut(0, n).copy_from(&problem.lower);
    upper.rows_mut(0, n).copy_from(&problem.upper);
    for r in 0..m_in {
        lower[n + m_eq + r] = 0.0;
    }
    prob.lower = lower;
    prob.upper = upper;

    let elastic = match solve_inner(&prob, &QpOptions { tol: options.tol.max(1e-9), max_iter: 200 }, None) {
        Outcome::Converged(s) | Outcome::Stalled(s) => s,
    };
    let x_feas = elastic.x.rows(0, n).into_owned();
    let viol = constraint_violation(problem, &x_feas);
    if viol > FEAS_TOL * data_scale(problem) {
        Ok(QpSolution {
            status: QpStatus::Infeasible,
            objective: problem.objective(&x_feas),
            x: x_feas,
            y_eq: DVector::zeros(m_eq),
            z_in: DVector::zeros(m_in),
            kkt_residual: stalled.kkt_residual,
            iterations: stalled.iterations,
            infeasibility: viol,
        })
    } else {
        Ok(stalled)
    }
}

fn constraint_violation(problem: &QpProblem, x: &DVector<f64>) -> f64 {
    let mut v: f64 = 0.0;
    let r_eq = &problem.a_eq * x - &problem.b_eq;
    v = v.max(r_eq.amax_or_zero());
    let gx = &problem.a_in * x;
    for r in 0..problem.a_in.nrows() {
        v = v.max(gx[r] - problem.b_in[r]);
    }
    let clamped = project_box(x, &problem.lower, &problem.upper);
    v.max((x - clamped).amax_or_zero())
}

fn data_scale(problem: &QpProblem) -> f64 {
    let mut s = 1.0f64;
    s = s.max(problem.q.amax_or_zero());
    s = s.max(problem.b_eq.amax_or_zero());
    s = s.max(problem.b_in.amax_or_zero());
    s
}

struct Step {
    dx: DVector<f64>,
    dy: DVector<f64>,
    ds_g: DVector<f64>,
    dz_g: DVector<f64>,
    ds_lo: DVector<f64>,
    dz_lo: DVector<f64>,
    ds_hi: DVector<f64>,
    dz_hi: DVector<f64>,
}

fn residual_dual(
    problem: &QpProblem,
    x: &DVector<f64>,
    y: &DVector<f64>,
    fam_g: &Family,
    fam_lo: &Family,
    fam_hi: &Family,
    lo_idx: &[usize],
    hi_idx: &[usize],
) -> DVector<f64> {
    let mut r = &problem.p * x + &problem.q;
    if problem.a_eq.nrows() > 0 {
        r += problem.a_eq.transpose() * y;
    }
    if fam_g.len() > 0 {
        r += problem.a_in.transpose() * &fam_g.z;
    }
    for (k, &i) in lo_idx.iter().enumerate() {
        r[i] -= fam_lo.z[k];
    }
    for (k, &i) in hi_idx.iter().enumerate() {
        r[i] += fam_hi.z[k];
    }
    r
}

fn factor(
    k: &DMatrix<f64>,
    a_eq: &DMatrix<f64>,
) -> Option<(Cholesky<f64, Dyn>, Option<(Cholesky<f64, Dyn>, DMatrix<f64>)>)> {
    let n = k.nrows();
    let m_eq = a_eq.nrows();
    let mut reg = REG_PRIMAL;
    for _ in 0..6 {
        let mut kr = k.clone();
        for i in 0..n {
            kr[(i, i)] += reg;
        }
        if let Some(chol) = Cholesky::new(kr) {
            if m_eq == 0 {
                return Some((chol, None));
            }
            // Schur complement Y = A K^-1 A' (+ dual regularization).
            let mut kinv_at = a_eq.transpose();
            for c in 0..m_eq {
                let mut col = kinv_at.column_mut(c);
                let solved = chol.solve(&col.clone_owned());
                col.copy_from(&solved);
            }
            let mut ymat = a_eq * &kinv_at;
            for i in 0..m_eq {
                ymat[(i, i)] += REG_DUAL.max(reg);
            }
            if let Some(chol_y) = Cholesky::new(ymat) {
                return Some((chol, Some((chol_y, kinv_at))));
            }
        }
        reg *= 100.0;
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn newton_step(
    problem: &QpProblem,
    chol_k: &Cholesky<f64, Dyn>,
    chol_y: &Option<(Cholesky<f64, Dyn>, DMatrix<f64>)>,
    r_dual: &DVector<f64>,
    r_eq: &DVector<f64>,
    r_g: &DVector<f64>,
    r_lo: &DVector<f64>,
    r_hi: &DVector<f64>,
    rc_g: &DVector<f64>,
    rc_lo: &DVector<f64>,
    rc_hi: &DVector<f64>,
    fam_g: &Family,
    fam_lo: &Family,
    fam_hi: &Family,
    lo_idx: &[usize],
    hi_idx: &[usize],
) -> Step {
    // rhs_x = -r_dual - G' S^-1 (Z r_g - rc_g)
    //         + scatter_lo(S^-1 (Z r_lo - rc_lo)) - scatter_hi(S^-1 (Z r_hi - rc_hi))
    let mut rhs_x = -r_dual.clone();
    if fam_g.len() > 0 {
        let w = DVector::from_fn(fam_g.len(), |r, _| {
            (fam_g.z[r] * r_g[r] - rc_g[r]) / fam_g.s[r]
        });
        rhs_x -= problem.a_in.transpose() * w;
    }
    for (k, &i) in lo_idx.iter().enumerate() {
        rhs_x[i] += (fam_lo.z[k] * r_lo[k] - rc_lo[k]) / fam_lo.s[k];
    }
    for (k, &i) in hi_idx.iter().enumerate() {
        rhs_x[i] -= (fam_hi.z[k] * r_hi[k] - rc_hi[k]) / fam_hi.s[k];
    }

    let (dx, dy) = match chol_y {
        Some((chol_y, kinv_at)) => {
            let rhs_y = -r_eq.clone();
            let kinv_rhs = chol_k.solve(&rhs_x);
            let dy = chol_y.solve(&(kinv_at.transpose() * &rhs_x - rhs_y));
            let dx = kinv_rhs - kinv_at * &dy;
            (dx, dy)
        }
        None => (chol_k.solve(&rhs_x), DVector::zeros(0)),
    };

    let ds_g = if fam_g.len() > 0 { -r_g - &problem.a_in * &dx } else { DVector::zeros(0) };
    let dz_g = DVector::from_fn(fam_g.len(), |r, _| {
        (-rc_g[r] - fam_g.z[r] * ds_g[r]) / fam_g.s[r]
    });
    let ds_lo = DVector::from_fn(fam_lo.len(), |k, _| dx[lo_idx[k]] - r_lo[k]);
    let dz_lo = DVector::from_fn(fam_lo.len(), |k, _| {
        (-rc_lo[k] - fam_lo.z[k] * ds_lo[k]) / fam_lo.s[k]
    });
    let ds_hi = DVector::from_fn(fam_hi.len(), |k, _| -r_hi[k] - dx[hi_idx[k]]);
    let dz_hi = DVector::from_fn(fam_hi.len(), |k, _| {
        (-rc_hi[k] - fam_hi.z[k] * ds_hi[k]) / fam_hi.s[k]
    });
    Step { dx, dy, ds_g, dz_g, ds_lo, dz_lo, ds_hi, dz_hi }
}

/// Largest primal/dual ratios to the boundary (may be infinite when nothing
/// blocks); callers cap and scale.
fn max_steps(fam_g: &Family, fam_lo: &Family, fam_hi: &Family, step: &Step) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    let families = [
        (&fam_g.s, &step.ds_g, &fam_g.z, &step.dz_g),
        (&fam_lo.s, &step.ds_lo, &fam_lo.z, &step.dz_lo),
        (&fam_hi.s, &step.ds_hi, &fam_hi.z, &step.dz_hi),
    ];
    for (s, ds, z, dz) in families {
        for i in 0..s.len() {
            if ds[i] < 0.0 {
                ap = ap.min(-s[i] / ds[i]);
            }
            if dz[i] < 0.0 {
                ad = ad.min(-z[i] / dz[i]);
            }
        }
    }
    (ap, ad)
}

fn shifted_dot(
    s: &DVector<f64>,
    ds: &DVector<f64>,
    z: &DVector<f64>,
    dz: &DVector<f64>,
    ap: f64,
    ad: f64,
) -> f64 {
    (0..s.len()).map(|i| (s[i] + ap * ds[i]) * (z[i] + ad * dz[i])).sum()
}

fn finish(
    problem: &QpProblem,
    x: DVector<f64>,
    y: DVector<f64>,
    fam_g: Family,
    status: QpStatus,
    kkt: f64,
    iterations: usize,
) -> QpSolution {
    QpSolution {
        status,
        objective: problem.objective(&x),
        x,
        y_eq: y,
        z_in: fam_g.z,
        kkt_residual: kkt,
        iterations: iterations + 1,
        infeasibility: 0.0,
    }
}

trait AmaxOrZero {
    fn amax_or_zero(&self) -> f64;
}

impl AmaxOrZero for DVector<f64> {
    fn amax_or_zero(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.amax()
        }
    }
}
