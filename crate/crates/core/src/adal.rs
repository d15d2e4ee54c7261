//! Distributed coordination of coupled quadratic programs.
//!
//! The comfort and ventilation subproblems both have the same shape: a set
//! of agents (one per zone, plus a slack agent for shared plant capacity),
//! each with a private convex QP, tied together by linear coupling rows
//!
//! ```text
//! sum_i A_i x_i = b
//! ```
//!
//! that no single agent owns (duct capacity, consensus between neighbour
//! temperature copies). The engine solves the stacked problem with an
//! accelerated distributed augmented Lagrangian scheme: at iteration q each
//! agent minimizes its own cost plus the augmented terms
//!
//! ```text
//! x_hat_i = argmin J_i(x_i) + a' A_i x_i
//!           + rho/2 || A_i x_i + sum_{j!=i} A_j x_j^q - b ||^2
//! x_i^{q+1} = (1 - tau) x_i^q + tau x_hat_i
//! a^{q+1}   = a^q + rho (sum_i A_i x_i^{q+1} - b)
//! ```
//!
//! All agents solve against the same snapshot of the others (a Jacobi
//! sweep), so per-iteration results do not depend on agent order and runs
//! are bit-reproducible.
//!
//! Internally every coupling row is rescaled to unit 2-norm before
//! iterating. Without this, a capacity row touching `I` agents has gain
//! proportional to `I` in the Jacobi sweep and the damped step `tau = 1/2`
//! stops contracting somewhere around ten agents. Unit rows have a cost,
//! though: they shrink each agent's share of the row to `O(1/sqrt I)`, so
//! the penalty curvature an agent feels is `rho / I`, and a wide row whose
//! participants all carry real objective curvature goes slack as the
//! problem grows (a 50-agent capacity row needs hundreds of iterations that
//! a 5-agent one does not). `row_scaling` compensates: row `r` shared by
//! `I_r` agents is penalized with `rho * max(1, I_r / 2)^row_scaling`, so a
//! two-agent consensus row always keeps `rho` while wide rows stiffen.
//!
//! The exponent defaults to zero (uniform penalty) because the scaling is
//! only safe when the agents on wide rows resist the penalty with their own
//! curvature. A flat-cost participant, such as a free slack variable,
//! recenters its row exactly each sweep no matter how small `rho` is; the
//! combined response of `I` curved agents at penalty `rho I / 2` plus one
//! flat agent then overshoots and the sweep settles into a constant-norm
//! limit cycle instead of converging. Callers whose wide rows couple only
//! curved agents (the comfort stage here) opt in; problems with free slack
//! on wide rows (the ventilation stage) stay uniform. Residuals and
//! multipliers are reported in physical units regardless.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qp::{self, project_box, QpOptions, QpProblem, QpStatus};

/// One nonzero of an agent's coupling block: the agent's local variable
/// `col` enters shared row `row` with the given coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub row: usize,
    pub col: usize,
    pub coeff: f64,
}

/// An agent: a private QP plus its nonzeros in the shared coupling rows.
#[derive(Debug, Clone)]
pub struct AdalAgent {
    pub qp: QpProblem,
    pub coupling: Vec<CouplingEntry>,
}

/// The coupled problem: agents plus the shared right-hand side.
#[derive(Debug, Clone)]
pub struct AdalProblem {
    pub agents: Vec<AdalAgent>,
    pub coupling_rhs: DVector<f64>,
}

impl AdalProblem {
    pub fn n_rows(&self) -> usize {
        self.coupling_rhs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_rows();
        if self.agents.is_empty() {
            return Err(Error::Parameter("coordination problem has no agents".into()));
        }
        for v in self.coupling_rhs.iter() {
            if !v.is_finite() {
                return Err(Error::Parameter("coupling rhs contains a non-finite value".into()));
            }
        }
        for (i, agent) in self.agents.iter().enumerate() {
            agent.qp.check()?;
            for e in &agent.coupling {
                if e.row >= m {
                    return Err(Error::Parameter(format!(
                        "agent {i} references coupling row {} but only {m} exist",
                        e.row
                    )));
                }
                if e.col >= agent.qp.n() {
                    return Err(Error::Parameter(format!(
                        "agent {i} references local variable {} but only {} exist",
                        e.col,
                        agent.qp.n()
                    )));
                }
                if !e.coeff.is_finite() {
                    return Err(Error::Parameter(format!(
                        "agent {i} has a non-finite coupling coefficient"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Sum of the agents' own objectives at the given iterate (coupling
    /// penalties excluded).
    pub fn objective(&self, x: &[DVector<f64>]) -> f64 {
        self.agents.iter().zip(x).map(|(a, xi)| a.qp.objective(xi)).sum()
    }

    /// Coupling residual `sum_i A_i x_i - b` in physical units.
    pub fn residual(&self, x: &[DVector<f64>]) -> DVector<f64> {
        let mut r = -self.coupling_rhs.clone();
        for (agent, xi) in self.agents.iter().zip(x) {
            for e in &agent.coupling {
                r[e.row] += e.coeff * xi[e.col];
            }
        }
        r
    }
}

/// Tuning for the coordination loop.
#[derive(Debug, Clone, Copy)]
pub struct AdalConfig {
    /// Penalty weight on the (unit-normalized) coupling rows.
    pub rho: f64,
    /// Damping of the primal aggregation step, in (0, 1].
    pub tau: f64,
    /// Exponent on the per-row width factor `max(1, I_r / 2)` multiplying
    /// `rho`. Zero (the default) penalizes every row uniformly; see the
    /// module docs for when widening is safe.
    pub row_scaling: f64,
    /// Stop when the physical coupling residual 2-norm falls below this.
    pub eps_coupling: f64,
    pub max_iters: usize,
    pub qp: QpOptions,
}

impl Default for AdalConfig {
    fn default() -> Self {
        AdalConfig {
            rho: 1.0,
            tau: 0.5,
            row_scaling: 0.0,
            eps_coupling: 1e-3,
            max_iters: 500,
            qp: QpOptions::default(),
        }
    }
}

/// Primal/dual iterate, usable as a warm start for a related problem of
/// identical shape. Multipliers are in physical row units.
#[derive(Debug, Clone)]
pub struct AdalState {
    pub x: Vec<DVector<f64>>,
    pub multipliers: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct AdalOutcome {
    pub state: AdalState,
    pub iterations: usize,
    /// True when the residual criterion was met within the budget.
    pub converged: bool,
    /// Physical coupling residual 2-norm at the returned iterate.
    pub final_residual: f64,
    /// Residual 2-norm after each iteration.
    pub residual_history: Vec<f64>,
    /// Sum of agents' own objectives at the returned iterate.
    pub objective: f64,
    /// Worst KKT residual reported by any local solve (diagnostic).
    pub worst_local_kkt: f64,
}

/// Runs the coordination loop. Stops at the first iterate whose physical
/// coupling residual meets `eps_coupling`; otherwise returns the last
/// iterate with `converged = false`. A local subproblem with inconsistent
/// private constraints surfaces as [`Error::Infeasible`].
pub fn solve(
    problem: &AdalProblem,
    config: &AdalConfig,
    warm: Option<&AdalState>,
) -> Result<AdalOutcome> {
    problem.validate()?;
    if !(config.tau > 0.0 && config.tau <= 1.0) {
        return Err(Error::Parameter(format!("tau must be in (0, 1], got {}", config.tau)));
    }
    if !(config.rho > 0.0) {
        return Err(Error::Parameter(format!("rho must be positive, got {}", config.rho)));
    }
    if !(config.row_scaling >= 0.0 && config.row_scaling.is_finite()) {
        return Err(Error::Parameter(format!(
            "row_scaling must be finite and nonnegative, got {}",
            config.row_scaling
        )));
    }
    let m = problem.n_rows();
    let n_agents = problem.agents.len();

    // With no shared rows the agents are independent: solve each exactly.
    if m == 0 {
        let mut x = Vec::with_capacity(n_agents);
        let mut worst_kkt: f64 = 0.0;
        for (i, agent) in problem.agents.iter().enumerate() {
            let sol = qp::solve(&agent.qp, &config.qp, None)?;
            if sol.status == QpStatus::Infeasible {
                return Err(Error::Infeasible(format!(
                    "agent {i}: local constraints inconsistent (violation {:.3e})",
                    sol.infeasibility
                )));
            }
            worst_kkt = worst_kkt.max(sol.kkt_residual);
            x.push(sol.x);
        }
        let objective = problem.objective(&x);
        return Ok(AdalOutcome {
            state: AdalState { x, multipliers: DVector::zeros(0) },
            iterations: 0,
            converged: true,
            final_residual: 0.0,
            residual_history: Vec::new(),
            objective,
            worst_local_kkt: worst_kkt,
        });
    }

    // Row norms across the whole stacked coupling matrix.
    let mut row_norm = vec![0.0f64; m];
    for agent in &problem.agents {
        for e in &agent.coupling {
            row_norm[e.row] += e.coeff * e.coeff;
        }
    }
    for (r, n2) in row_norm.iter_mut().enumerate() {
        if *n2 > 0.0 {
            *n2 = n2.sqrt();
        } else if problem.coupling_rhs[r].abs() > 0.0 {
            return Err(Error::Infeasible(format!(
                "coupling row {r} involves no variables but requires {}",
                problem.coupling_rhs[r]
            )));
        } else {
            *n2 = 1.0;
        }
    }
    let b_bar = DVector::from_fn(m, |r, _| problem.coupling_rhs[r] / row_norm[r]);

    // Per-row penalty: rho, optionally stiffened on wide rows (see module
    // docs for why this is opt-in).
    let rho_row: Vec<f64> = if config.row_scaling == 0.0 {
        vec![config.rho; m]
    } else {
        let mut sharers = vec![0usize; m];
        for agent in &problem.agents {
            let mut seen: Vec<usize> = agent.coupling.iter().map(|e| e.row).collect();
            seen.sort_unstable();
            seen.dedup();
            for r in seen {
                sharers[r] += 1;
            }
        }
        sharers
            .iter()
            .map(|&i| config.rho * (i as f64 / 2.0).max(1.0).powf(config.row_scaling))
            .collect()
    };

    // Per-agent working data with normalized coupling and the constant
    // penalty curvature sum_r rho_r * a_ir' a_ir folded into P once.
    struct Work {
        prob: QpProblem,
        q0: DVector<f64>,
        entries: Vec<CouplingEntry>,
    }
    let mut works: Vec<Work> = Vec::with_capacity(n_agents);
    for agent in &problem.agents {
        let mut prob = agent.qp.clone();
        let q0 = prob.q.clone();
        let entries: Vec<CouplingEntry> = agent
            .coupling
            .iter()
            .map(|e| CouplingEntry { row: e.row, col: e.col, coeff: e.coeff / row_norm[e.row] })
            .collect();
        for e1 in &entries {
            for e2 in &entries {
                if e1.row == e2.row {
                    prob.p[(e1.col, e2.col)] += rho_row[e1.row] * e1.coeff * e2.coeff;
                }
            }
        }
        works.push(Work { prob, q0, entries });
    }

    // Primal iterate: warm start or the box projection of the origin.
    let mut x: Vec<DVector<f64>> = match warm {
        Some(state) => {
            if state.x.len() != n_agents || state.multipliers.len() != m {
                return Err(Error::Parameter("warm start shape does not match problem".into()));
            }
            for (i, xi) in state.x.iter().enumerate() {
                if xi.len() != problem.agents[i].qp.n() {
                    return Err(Error::Parameter(format!(
                        "warm start for agent {i} has wrong length"
                    )));
                }
            }
            state.x.clone()
        }
        None => problem
            .agents
            .iter()
            .map(|a| project_box(&DVector::zeros(a.qp.n()), &a.qp.lower, &a.qp.upper))
            .collect(),
    };
    // Multipliers iterate in normalized row units.
    let mut alpha = match warm {
        Some(state) => DVector::from_fn(m, |r, _| state.multipliers[r] * row_norm[r]),
        None => DVector::zeros(m),
    };

    // S = sum_i A_i x_i in normalized units, maintained incrementally.
    let mut s: DVector<f64> = DVector::zeros(m);
    for (w, xi) in works.iter().zip(&x) {
        for e in &w.entries {
            s[e.row] += e.coeff * xi[e.col];
        }
    }

    let mut residual_history = Vec::new();
    let mut worst_kkt: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut proposals: Vec<DVector<f64>> = Vec::with_capacity(n_agents);

    for _ in 0..config.max_iters {
        iterations += 1;
        proposals.clear();
        for (i, w) in works.iter_mut().enumerate() {
            // t = alpha + rho_r * (S - A_i x_i - b), the gradient weight the
            // other agents and the running multipliers put on A_i x_i.
            let mut t = alpha.clone();
            for r in 0..m {
                t[r] += rho_row[r] * (s[r] - b_bar[r]);
            }
            for e in &w.entries {
                t[e.row] -= rho_row[e.row] * e.coeff * x[i][e.col];
            }
            w.prob.q.copy_from(&w.q0);
            for e in &w.entries {
                w.prob.q[e.col] += e.coeff * t[e.row];
            }
            let sol = qp::solve(&w.prob, &config.qp, Some(&x[i]))?;
            if sol.status == QpStatus::Infeasible {
                return Err(Error::Infeasible(format!(
                    "agent {i}: local constraints inconsistent (violation {:.3e})",
                    sol.infeasibility
                )));
            }
            worst_kkt = worst_kkt.max(sol.kkt_residual);
            proposals.push(sol.x);
        }
        // Damped aggregation, with S updated to match.
        for (i, w) in works.iter().enumerate() {
            for e in &w.entries {
                s[e.row] += config.tau * e.coeff * (proposals[i][e.col] - x[i][e.col]);
            }
            let xi = &mut x[i];
            xi.axpy(config.tau, &proposals[i], 1.0 - config.tau);
        }
        // Multiplier ascent on the new residual.
        let mut phys_sq = 0.0f64;
        for r in 0..m {
            let res = s[r] - b_bar[r];
            alpha[r] += rho_row[r] * res;
            let phys = res * row_norm[r];
            phys_sq += phys * phys;
        }
        let resid = phys_sq.sqrt();
        residual_history.push(resid);
        if resid <= config.eps_coupling {
            converged = true;
            break;
        }
    }

    let final_residual = *residual_history.last().unwrap_or(&0.0);
    let objective = problem.objective(&x);
    let multipliers = DVector::from_fn(m, |r, _| alpha[r] / row_norm[r]);
    Ok(AdalOutcome {
        state: AdalState { x, multipliers },
        iterations,
        converged,
        final_residual,
        residual_history,
        objective,
        worst_local_kkt: worst_kkt,
    })
}

/// Builds the equivalent centralized QP (block-diagonal locals, coupling
/// rows as equalities). Used by tests as an oracle and by callers that want
/// the exact optimum of small instances.
pub fn stack_centralized(problem: &AdalProblem) -> Result<QpProblem> {
    problem.validate()?;
    let sizes: Vec<usize> = problem.agents.iter().map(|a| a.qp.n()).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0usize, |acc, n| {
            let o = *acc;
            *acc += n;
            Some(o)
        })
        .collect();
    let n: usize = sizes.iter().sum();
    let m_couple = problem.n_rows();
    let m_eq: usize = problem.agents.iter().map(|a| a.qp.a_eq.nrows()).sum::<usize>() + m_couple;
    let m_in: usize = problem.agents.iter().map(|a| a.qp.a_in.nrows()).sum();

    let mut p = DMatrix::zeros(n, n);
    let mut q = DVector::zeros(n);
    let mut a_eq = DMatrix::zeros(m_eq, n);
    let mut b_eq = DVector::zeros(m_eq);
    let mut a_in = DMatrix::zeros(m_in, n);
    let mut b_in = DVector::zeros(m_in);
    let mut lower = DVector::zeros(n);
    let mut upper = DVector::zeros(n);

    let mut eq_row = 0;
    let mut in_row = 0;
    for (agent, &off) in problem.agents.iter().zip(&offsets) {
        let ni = agent.qp.n();
        p.view_mut((off, off), (ni, ni)).copy_from(&agent.qp.p);
        q.rows_mut(off, ni).copy_from(&agent.qp.q);
        lower.rows_mut(off, ni).copy_from(&agent.qp.lower);
        upper.rows_mut(off, ni).copy_from(&agent.qp.upper);
        let ne = agent.qp.a_eq.nrows();
        a_eq.view_mut((eq_row, off), (ne, ni)).copy_from(&agent.qp.a_eq);
        b_eq.rows_mut(eq_row, ne).copy_from(&agent.qp.b_eq);
        eq_row += ne;
        let ni_rows = agent.qp.a_in.nrows();
        a_in.view_mut((in_row, off), (ni_rows, ni)).copy_from(&agent.qp.a_in);
        b_in.rows_mut(in_row, ni_rows).copy_from(&agent.qp.b_in);
        in_row += ni_rows;
    }
    for (agent, &off) in problem.agents.iter().zip(&offsets) {
        for e in &agent.coupling {
            a_eq[(eq_row + e.row, off + e.col)] += e.coeff;
        }
    }
    b_eq.rows_mut(eq_row, m_couple).copy_from(&problem.coupling_rhs);

    Ok(QpProblem { p, q, a_eq, b_eq, a_in, b_in, lower, upper })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    use super::*;

    /// Agent minimizing 1/2 (x - target)^2 over a box, one variable.
    fn tracking_agent(target: f64, lo: f64, hi: f64) -> AdalAgent {
        let mut qp = QpProblem::new(DMatrix::identity(1, 1), DVector::from_element(1, -target));
        qp.lower = DVector::from_element(1, lo);
        qp.upper = DVector::from_element(1, hi);
        AdalAgent { qp, coupling: vec![CouplingEntry { row: 0, col: 0, coeff: 1.0 }] }
    }

    #[test]
    fn two_agents_share_a_resource() {
        // min (x-3)^2/2 + (y-2)^2/2 s.t. x + y = 4 -> (2.5, 1.5), dual 0.5.
        let problem = AdalProblem {
            agents: vec![
                tracking_agent(3.0, f64::NEG_INFINITY, f64::INFINITY),
                tracking_agent(2.0, f64::NEG_INFINITY, f64::INFINITY),
            ],
            coupling_rhs: DVector::from_element(1, 4.0),
        };
        let out = solve(&problem, &AdalConfig::default(), None).unwrap();
        assert!(out.converged, "residual history {:?}", out.residual_history);
        assert!(out.final_residual <= 1e-3);
        assert_relative_eq!(out.state.x[0][0], 2.5, epsilon = 5e-3);
        assert_relative_eq!(out.state.x[1][0], 1.5, epsilon = 5e-3);
        assert_relative_eq!(out.state.multipliers[0], 0.5, epsilon = 5e-3);
    }

    #[test]
    fn consensus_rows_average_disagreeing_agents() {
        // v1 = v2 = v3 with targets 1, 5, 9 -> all converge to 5.
        let mk = |target: f64, rows: Vec<CouplingEntry>| AdalAgent {
            qp: QpProblem::new(DMatrix::identity(1, 1), DVector::from_element(1, -target)),
            coupling: rows,
        };
        let problem = AdalProblem {
            agents: vec![
                mk(1.0, vec![CouplingEntry { row: 0, col: 0, coeff: 1.0 }]),
                mk(
                    5.0,
                    vec![
                        CouplingEntry { row: 0, col: 0, coeff: -1.0 },
                        CouplingEntry { row: 1, col: 0, coeff: 1.0 },
                    ],
                ),
                mk(9.0, vec![CouplingEntry { row: 1, col: 0, coeff: -1.0 }]),
            ],
            coupling_rhs: DVector::zeros(2),
        };
        let out = solve(&problem, &AdalConfig::default(), None).unwrap();
        assert!(out.converged);
        for i in 0..3 {
            assert_relative_eq!(out.state.x[i][0], 5.0, epsilon = 1e-2);
        }
    }

    #[test]
    fn local_boxes_shift_the_split() {
        // min (x^2 + y^2)/2 s.t. x + y = 3, x <= 1 -> (1, 2).
        let problem = AdalProblem {
            agents: vec![
                tracking_agent(0.0, f64::NEG_INFINITY, 1.0),
                tracking_agent(0.0, f64::NEG_INFINITY, f64::INFINITY),
            ],
            coupling_rhs: DVector::from_element(1, 3.0),
        };
        let out = solve(&problem, &AdalConfig::default(), None).unwrap();
        assert!(out.converged);
        assert_relative_eq!(out.state.x[0][0], 1.0, epsilon = 5e-3);
        assert_relative_eq!(out.state.x[1][0], 2.0, epsilon = 5e-3);
    }

    #[test]
    fn slack_agent_absorbs_spare_capacity() {
        // Zones want 0.4 and 0.3 of a 2.0 budget; a free nonnegative slack
        // takes the rest, so zone flows land on their targets.
        let problem = AdalProblem {
            agents: vec![
                tracking_agent(0.4, 0.0, 0.5),
                tracking_agent(0.3, 0.0, 0.5),
                AdalAgent {
                    qp: {
                        let mut qp = QpProblem::new(DMatrix::zeros(1, 1), DVector::zeros(1));
                        qp.lower = DVector::from_element(1, 0.0);
                        qp.upper = DVector::from_element(1, 2.0);
                        qp
                    },
                    coupling: vec![CouplingEntry { row: 0, col: 0, coeff: 1.0 }],
                },
            ],
            coupling_rhs: DVector::from_element(1, 2.0),
        };
        let out = solve(&problem, &AdalConfig::default(), None).unwrap();
        assert!(out.converged);
        assert_relative_eq!(out.state.x[0][0], 0.4, epsilon = 5e-3);
        assert_relative_eq!(out.state.x[1][0], 0.3, epsilon = 5e-3);
        assert_relative_eq!(out.state.x[2][0], 1.3, epsilon = 1e-2);
    }

    #[test]
    fn zero_residual_freezes_multipliers() {
        // Local equality already enforces the coupling row, and the warm
        // start sits on it, so the residual is zero from the first sweep and
        // the multiplier never moves.
        let mut qp = QpProblem::new(DMatrix::identity(1, 1), DVector::zeros(1));
        qp.a_eq = DMatrix::from_element(1, 1, 1.0);
        qp.b_eq = DVector::from_element(1, 1.0);
        let problem = AdalProblem {
            agents: vec![AdalAgent {
                qp,
                coupling: vec![CouplingEntry { row: 0, col: 0, coeff: 1.0 }],
            }],
            coupling_rhs: DVector::from_element(1, 1.0),
        };
        let warm = AdalState {
            x: vec![DVector::from_element(1, 1.0)],
            multipliers: DVector::from_element(1, 7.0),
        };
        let out = solve(&problem, &AdalConfig::default(), Some(&warm)).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        // Drift is bounded by the inner solver's KKT tolerance.
        assert_relative_eq!(out.state.multipliers[0], 7.0, epsilon = 1e-6);
    }

    #[test]
    fn inconsistent_local_constraints_surface_as_infeasible() {
        let mut qp = QpProblem::new(DMatrix::identity(1, 1), DVector::zeros(1));
        qp.lower = DVector::from_element(1, 0.0);
        qp.upper = DVector::from_element(1, 1.0);
        qp.a_eq = DMatrix::from_element(1, 1, 1.0);
        qp.b_eq = DVector::from_element(1, 2.0);
        let problem = AdalProblem {
            agents: vec![AdalAgent {
                qp,
                coupling: vec![CouplingEntry { row: 0, col: 0, coeff: 1.0 }],
            }],
            coupling_rhs: DVector::from_element(1, 2.0),
        };
        match solve(&problem, &AdalConfig::default(), None) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn iteration_count_is_insensitive_to_agent_count() {
        // Row normalization keeps the capacity-row contraction factor flat
        // as agents are added; without it tau = 1/2 diverges past ~10.
        let mut iters = Vec::new();
        for n in [3usize, 10, 30] {
            let mut agents: Vec<AdalAgent> =
                (0..n).map(|i| tracking_agent(0.1 + 0.01 * i as f64, 0.0, 0.5)).collect();
            agents.push(AdalAgent {
                qp: {
                    let mut qp = QpProblem::new(DMatrix::zeros(1, 1), DVector::zeros(1));
                    qp.lower = DVector::from_element(1, 0.0);
                    qp.upper = DVector::from_element(1, 1e3);
                    qp
                },
                coupling: vec![CouplingEntry { row: 0, col: 0, coeff: 1.0 }],
            });
            let problem = AdalProblem {
                agents,
                coupling_rhs: DVector::from_element(1, 0.4 * n as f64),
            };
            let out = solve(&problem, &AdalConfig::default(), None).unwrap();
            assert!(out.converged, "n={n} residuals {:?}", out.residual_history);
            iters.push(out.iterations);
        }
        for it in &iters {
            assert!(*it <= 100, "iteration counts {iters:?}");
        }
    }

    #[test]
    fn warm_start_is_no_slower_after_small_data_change() {
        let mk = |rhs: f64| AdalProblem {
            agents: vec![
                tracking_agent(0.4, 0.0, 0.5),
                tracking_agent(0.3, 0.0, 0.5),
                tracking_agent(0.0, 0.0, 2.0),
            ],
            coupling_rhs: DVector::from_element(1, rhs),
        };
        let cold = solve(&mk(2.0), &AdalConfig::default(), None).unwrap();
        let warm = solve(&mk(2.05), &AdalConfig::default(), Some(&cold.state)).unwrap();
        assert!(warm.converged);
        assert!(
            warm.iterations <= cold.iterations,
            "warm {} vs cold {}",
            warm.iterations,
            cold.iterations
        );
    }

    #[test]
    fn no_coupling_solves_agents_exactly() {
        let problem = AdalProblem {
            agents: vec![
                AdalAgent { qp: tracking_agent(1.25, 0.0, 2.0).qp, coupling: vec![] },
                AdalAgent { qp: tracking_agent(-3.0, -1.0, 2.0).qp, coupling: vec![] },
            ],
            coupling_rhs: DVector::zeros(0),
        };
        let out = solve(&problem, &AdalConfig::default(), None).unwrap();
        assert!(out.converged);
        assert_relative_eq!(out.state.x[0][0], 1.25, epsilon = 1e-7);
        assert_relative_eq!(out.state.x[1][0], -1.0, epsilon = 1e-7);
    }

    #[test]
    fn matches_centralized_solution_of_the_stacked_problem() {
        let problem = AdalProblem {
            agents: vec![
                tracking_agent(0.45, 0.0, 0.5),
                tracking_agent(0.2, 0.0, 0.5),
                tracking_agent(0.35, 0.0, 0.5),
            ],
            coupling_rhs: DVector::from_element(1, 0.8),
        };
        let central = qp::solve(
            &stack_centralized(&problem).unwrap(),
            &QpOptions::default(),
            None,
        )
        .unwrap();
        let out = solve(&problem, &AdalConfig::default(), None).unwrap();
        assert!(out.converged);
        let gap = (out.objective - central.objective).abs();
        assert!(gap <= 5e-3, "objective gap {gap}");
        for i in 0..3 {
            assert_relative_eq!(out.state.x[i][0], central.x[i], epsilon = 1e-2);
        }
    }

    #[test]
    fn empty_row_with_nonzero_target_is_infeasible() {
        let problem = AdalProblem {
            agents: vec![AdalAgent {
                qp: tracking_agent(0.0, 0.0, 1.0).qp,
                coupling: vec![],
            }],
            coupling_rhs: DVector::from_element(1, 1.0),
        };
        match solve(&problem, &AdalConfig::default(), None) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn bad_indices_are_rejected() {
        let mut agent = tracking_agent(0.0, 0.0, 1.0);
        agent.coupling[0].row = 3;
        let problem =
            AdalProblem { agents: vec![agent], coupling_rhs: DVector::zeros(1) };
        assert!(matches!(
            solve(&problem, &AdalConfig::default(), None),
            Err(Error::Parameter(_))
        ));
    }
}
