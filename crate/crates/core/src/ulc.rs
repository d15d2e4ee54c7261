//! Upper-level comfort control: schedules zone supply flows over the horizon
//! at minimum energy cost for a fixed recirculation profile.
//!
//! For each zone i the decision block over the horizon `k = 0..H-1` is
//!
//! ```text
//! T_i(1..H)       predicted temperature [degC]
//! m_i(0..H-1)     supply mass flow [kg/s]
//! W_i(0..H-1)     thermal load product, W = m * (T - T_c)
//! th_ij(1..H-1)   local copy of neighbor j's temperature
//! ```
//!
//! with linear dynamics `T_i(k+1) = a_ii T_i(k) + sum_j a_ij th_ij(k)
//! + c_i W_i(k) + d_i(k)` and the bilinear product W relaxed by its envelope
//! (exactly pinned at k = 0 where the temperature is the measurement). The
//! energy objective splits per zone as
//!
//! ```text
//! sum_k price_k dt_h c_p eta [ (1-dr_k)(T_o(k)-T_c) m_i(k) + dr_k W_i(k) ]
//! ```
//!
//! plus the fan term `kappa_f (sum_i m_i)^2`, which is nonseparable but turns
//! into a slack-agent-local cost on the capacity manifold
//! `sum_i m_i(k) + s(k) = m_max`. Zones agree on shared walls through
//! consensus rows `th_ij(k) - T_j(k) = 0`. The coupled problem is solved by
//! the coordination engine; afterwards flows are projected onto the exact
//! per-step capacity, rolled through the exact dynamics, and (rarely) locally
//! repaired if the envelope gap let a predicted ceiling slip.
//!
//! Hot-start handling: when the measured temperature is above the comfort
//! ceiling (pre-cooling), ceilings for early steps are relaxed along the
//! fastest feasible descent (an exact rollout at capacity-split maximum
//! flows), so the problem stays feasible while the band is enforced from the
//! first step that can reach it.

use nalgebra::{DMatrix, DVector};

use crate::adal::{self, AdalAgent, AdalConfig, AdalProblem, AdalState, CouplingEntry};
use crate::error::{Error, Result};
use crate::mccormick::EnvelopeBox;
use crate::model::{rollout, Building, ControlPlan, PlantState, Scenario, ThermalCoeffs};
use crate::qp::{self, QpProblem, QpStatus};

/// Tuning of the comfort solve.
#[derive(Debug, Clone, Copy)]
pub struct UlcConfig {
    pub adal: AdalConfig,
    /// Headroom added above the fastest-descent trajectory when relaxing
    /// pre-cooling ceilings [degC].
    pub descent_margin: f64,
    /// Extra envelope y-box padding above the per-step temperature ceiling
    /// [degC]. Zero keeps the product relaxation as tight as the ceilings
    /// allow; padding only widens the relaxation gap.
    pub envelope_pad: f64,
    /// Exact-rollout ceiling excess that triggers the local repair pass
    /// [degC].
    pub repair_tolerance: f64,
    /// Curvature floor added to every diagonal so each agent objective is
    /// strictly convex (unique argmins keep the coordination deterministic).
    pub regularization: f64,
    /// Weight of the flow tie-break term (sum of squared flows).
    pub flow_tiebreak: f64,
}

impl Default for UlcConfig {
    fn default() -> Self {
        UlcConfig {
            // Duct-capacity rows couple every zone plus the fan slack, all of
            // which carry objective curvature, so widening the row penalty is
            // safe here and keeps iteration counts nearly flat as zones are
            // added. The exponent sits in the window that still converges at
            // a hundred zones: much lower and wide rows crawl, much higher
            // and the sweep overshoots into a limit cycle.
            adal: AdalConfig { max_iters: 500, row_scaling: 0.75, ..AdalConfig::default() },
            descent_margin: 0.1,
            envelope_pad: 0.0,
            repair_tolerance: 0.1,
            regularization: 1e-9,
            flow_tiebreak: 1e-6,
        }
    }
}

/// Index helper for one zone agent's decision block.
#[derive(Debug, Clone, Copy)]
struct Layout {
    h: usize,
    deg: usize,
}

impl Layout {
    fn n(&self) -> usize {
        3 * self.h + self.deg * (self.h - 1).max(0)
    }
    /// Temperature T(k), k in 1..=H.
    fn t(&self, k: usize) -> usize {
        debug_assert!((1..=self.h).contains(&k));
        k - 1
    }
    /// Flow m(k), k in 0..H.
    fn m(&self, k: usize) -> usize {
        debug_assert!(k < self.h);
        self.h + k
    }
    /// Product W(k), k in 0..H.
    fn w(&self, k: usize) -> usize {
        debug_assert!(k < self.h);
        2 * self.h + k
    }
    /// Neighbor copy th(j_ord, k), k in 1..H.
    fn th(&self, j_ord: usize, k: usize) -> usize {
        debug_assert!(j_ord < self.deg && (1..self.h).contains(&k));
        3 * self.h + j_ord * (self.h - 1) + (k - 1)
    }
}

/// The assembled coupled problem plus the context needed to interpret it.
pub struct UlcProblem {
    pub coupled: AdalProblem,
    /// Relaxed per-step temperature ceilings, `relaxed_upper[i][k-1]` for
    /// k in 1..=H; equals `temp_max` once the pre-cooling transient passed.
    pub relaxed_upper: Vec<Vec<f64>>,
    layouts: Vec<Layout>,
    h: usize,
    n_zones: usize,
}

/// Outcome of one comfort solve.
#[derive(Debug, Clone)]
pub struct UlcResult {
    /// Flows per step and zone, `flows[k][i]`; satisfy boxes and per-step
    /// capacity exactly.
    pub flows: Vec<Vec<f64>>,
    /// Relaxed-model temperatures, `predicted_temps[k][i]`, k = 0..=H
    /// (k = 0 holds the measurement).
    pub predicted_temps: Vec<Vec<f64>>,
    /// Exact-dynamics rollout under the returned flows, same shape.
    pub recovered_temps: Vec<Vec<f64>>,
    /// Objective value of the relaxed iterate (a lower bound on the exact
    /// cost of any comfort-feasible plan on this instance).
    pub relaxed_cost: f64,
    /// Exact cost of the returned plan over the horizon.
    pub plan_cost: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// The single-pass ceiling repair ran.
    pub repaired: bool,
    /// Coordination state for warm-starting the next solve of equal shape.
    pub state: AdalState,
}

fn validate_inputs(
    building: &Building,
    scenario: &Scenario,
    state: &PlantState,
    dr: &[f64],
) -> Result<usize> {
    let h = building.horizon.horizon_steps;
    if dr.len() != h {
        return Err(Error::Input(format!(
            "recirculation profile must cover the horizon ({} steps), got {}",
            h,
            dr.len()
        )));
    }
    let (lo, hi) = (building.ahu.dr_min, building.ahu.dr_max);
    for (k, &d) in dr.iter().enumerate() {
        if !(d.is_finite() && d >= lo - 1e-9 && d <= hi + 1e-9) {
            return Err(Error::Input(format!(
                "dr[{k}] = {d} outside the recirculation bounds [{lo}, {hi}]"
            )));
        }
    }
    if state.time_index + h > scenario.len() {
        return Err(Error::Input(format!(
            "window [{}, {}) overruns scenario of length {}",
            state.time_index,
            state.time_index + h,
            scenario.len()
        )));
    }
    Ok(h)
}

/// Fastest feasible joint descent: exact rollout at capacity-split maximum
/// flows. Returns temps `[k][i]` for k = 0..=H.
fn fastest_descent(
    building: &Building,
    coeffs: &ThermalCoeffs,
    scenario: &Scenario,
    state: &PlantState,
    dr: &[f64],
) -> Vec<Vec<f64>> {
    let n = building.n_zones();
    let h = building.horizon.horizon_steps;
    let share = building.ahu.total_flow_max / n as f64;
    let flows: Vec<Vec<f64>> = (0..h)
        .map(|_| building.zones.iter().map(|z| z.flow_max.min(share)).collect())
        .collect();
    let plan = ControlPlan { flows, dr: dr.to_vec() };
    rollout(building, coeffs, scenario, state, &plan).temps
}

/// Assembles the coupled comfort problem for the window starting at
/// `state.time_index`, with the recirculation profile `dr` held fixed.
pub fn build_ulc(
    building: &Building,
    coeffs: &ThermalCoeffs,
    scenario: &Scenario,
    state: &PlantState,
    dr: &[f64],
    cfg: &UlcConfig,
) -> Result<UlcProblem> {
    let h = validate_inputs(building, scenario, state, dr)?;
    let n = building.n_zones();
    let t0 = state.time_index;
    let ahu = &building.ahu;
    let dt_h = building.horizon.step_hours();
    let neighbors = building.topology.neighbors(n);

    // Pre-cooling ceilings from the fastest feasible descent.
    let fd = fastest_descent(building, coeffs, scenario, state, dr);
    let relaxed_upper: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (1..=h)
                .map(|k| building.zones[i].temp_max.max(fd[k][i] + cfg.descent_margin))
                .collect()
        })
        .collect();

    // Coupling rows: per-step capacity, then two directed consensus blocks
    // per edge (each zone keeps a copy of the other's temperature).
    let n_edges = building.topology.edges.len();
    let n_rows = h + 2 * n_edges * (h - 1);
    let mut rhs = DVector::zeros(n_rows);
    for k in 0..h {
        rhs[k] = ahu.total_flow_max;
    }
    let consensus_row = |edge: usize, dir: usize, k: usize| h + (2 * edge + dir) * (h - 1) + (k - 1);

    let mut agents: Vec<AdalAgent> = Vec::with_capacity(n + 1);
    let mut layouts = Vec::with_capacity(n);
    for i in 0..n {
        let zone = &building.zones[i];
        let lay = Layout { h, deg: neighbors[i].len() };
        let nv = lay.n();
        let mut p = DMatrix::zeros(nv, nv);
        let mut q = DVector::zeros(nv);
        let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
        let mut upper = DVector::from_element(nv, f64::INFINITY);
        for d in 0..nv {
            p[(d, d)] = cfg.regularization;
        }

        let y_meas = state.temps[i] - ahu.supply_temp;
        for k in 0..h {
            let t = t0 + k;
            let weight = scenario.price[t] * dt_h * ahu.specific_heat * ahu.cop_inverse;
            q[lay.m(k)] =
                weight * (1.0 - dr[k]) * (scenario.outdoor_temp[t] - ahu.supply_temp);
            q[lay.w(k)] = weight * dr[k];
            p[(lay.m(k), lay.m(k))] += 2.0 * cfg.flow_tiebreak;
            lower[lay.m(k)] = zone.flow_min;
            upper[lay.m(k)] = zone.flow_max;
        }
        for k in 1..=h {
            lower[lay.t(k)] = zone.temp_min;
            upper[lay.t(k)] = relaxed_upper[i][k - 1];
        }
        for (j_ord, &(j, _)) in neighbors[i].iter().enumerate() {
            for k in 1..h {
                lower[lay.th(j_ord, k)] = building.zones[j].temp_min;
                upper[lay.th(j_ord, k)] = relaxed_upper[j][k - 1];
            }
        }

        // Product variable boxes and envelope rows. k = 0 is exact: the
        // temperature factor is the measurement.
        let w0_box = EnvelopeBox::new(zone.flow_min, zone.flow_max, y_meas, y_meas)?;
        let (w0_lo, w0_hi) = w0_box.z_bounds();
        lower[lay.w(0)] = w0_lo;
        upper[lay.w(0)] = w0_hi;
        let mut boxes = Vec::with_capacity(h.saturating_sub(1));
        for k in 1..h {
            let y_hi =
                (zone.temp_max + cfg.envelope_pad).max(relaxed_upper[i][k - 1]) - ahu.supply_temp;
            let b = EnvelopeBox::new(
                zone.flow_min,
                zone.flow_max,
                zone.temp_min - ahu.supply_temp,
                y_hi,
            )?;
            let (z_lo, z_hi) = b.z_bounds();
            lower[lay.w(k)] = z_lo;
            upper[lay.w(k)] = z_hi;
            boxes.push(b);
        }

        // Dynamics equalities plus the exact product row at k = 0.
        let mut a_eq = DMatrix::zeros(h + 1, nv);
        let mut b_eq = DVector::zeros(h + 1);
        for k in 0..h {
            let t = t0 + k;
            let gains: Vec<f64> =
                (0..n).map(|z| scenario.internal_gain[z][t]).collect();
            let d_k = coeffs.offset(scenario.outdoor_temp[t], &gains)[i];
            a_eq[(k, lay.t(k + 1))] = 1.0;
            a_eq[(k, lay.w(k))] = -coeffs.c_flow[i];
            if k == 0 {
                let mut pre = coeffs.a[(i, i)] * state.temps[i];
                for &(j, _) in &neighbors[i] {
                    pre += coeffs.a[(i, j)] * state.temps[j];
                }
                b_eq[k] = d_k + pre;
            } else {
                a_eq[(k, lay.t(k))] = -coeffs.a[(i, i)];
                for (j_ord, &(j, _)) in neighbors[i].iter().enumerate() {
                    a_eq[(k, lay.th(j_ord, k))] = -coeffs.a[(i, j)];
                }
                b_eq[k] = d_k;
            }
        }
        a_eq[(h, lay.w(0))] = 1.0;
        a_eq[(h, lay.m(0))] = -y_meas;

        // Envelope inequalities for k >= 1, shifted from y = T - T_c to T.
        let mut a_in = DMatrix::zeros(4 * (h - 1), nv);
        let mut b_in = DVector::zeros(4 * (h - 1));
        for (kb, b) in boxes.iter().enumerate() {
            let k = kb + 1;
            for (r, row) in b.rows().iter().enumerate() {
                let idx = 4 * kb + r;
                a_in[(idx, lay.m(k))] = row.cx;
                a_in[(idx, lay.t(k))] = row.cy;
                a_in[(idx, lay.w(k))] = row.cz;
                b_in[idx] = row.rhs + row.cy * ahu.supply_temp;
            }
        }

        let mut coupling = Vec::new();
        for k in 0..h {
            coupling.push(CouplingEntry { row: k, col: lay.m(k), coeff: 1.0 });
        }
        for (e, edge) in building.topology.edges.iter().enumerate() {
            for (dir, (copier, owner)) in
                [(edge.a, edge.b), (edge.b, edge.a)].into_iter().enumerate()
            {
                if copier == i {
                    let j_ord = neighbors[i].iter().position(|&(j, _)| j == owner).unwrap();
                    for k in 1..h {
                        coupling.push(CouplingEntry {
                            row: consensus_row(e, dir, k),
                            col: lay.th(j_ord, k),
                            coeff: 1.0,
                        });
                    }
                }
                if owner == i {
                    for k in 1..h {
                        coupling.push(CouplingEntry {
                            row: consensus_row(e, dir, k),
                            col: lay.t(k),
                            coeff: -1.0,
                        });
                    }
                }
            }
        }

        agents.push(AdalAgent {
            qp: QpProblem { p, q, a_eq, b_eq, a_in, b_in, lower, upper },
            coupling,
        });
        layouts.push(lay);
    }

    // Slack agent: absorbs spare duct capacity and owns the fan cost, which
    // equals kappa_f (m_max - s)^2 on the capacity manifold.
    {
        let mut p = DMatrix::zeros(h, h);
        let mut q = DVector::zeros(h);
        for k in 0..h {
            let weight = scenario.price[t0 + k] * dt_h * ahu.fan_coeff;
            p[(k, k)] = 2.0 * weight + cfg.regularization;
            q[k] = -2.0 * weight * ahu.total_flow_max;
        }
        let mut qp = QpProblem::new(p, q);
        qp.lower = DVector::zeros(h);
        qp.upper = DVector::from_element(h, ahu.total_flow_max);
        let coupling =
            (0..h).map(|k| CouplingEntry { row: k, col: k, coeff: 1.0 }).collect();
        agents.push(AdalAgent { qp, coupling });
    }

    Ok(UlcProblem {
        coupled: AdalProblem { agents, coupling_rhs: rhs },
        relaxed_upper,
        layouts,
        h,
        n_zones: n,
    })
}

/// Energy cost of a relaxed iterate (flows, products, slack) under the fixed
/// recirculation profile; the cooling term uses the relaxed products, the
/// fan term the slack complements.
fn relaxed_cost(
    building: &Building,
    scenario: &Scenario,
    t0: usize,
    dr: &[f64],
    problem: &UlcProblem,
    x: &[DVector<f64>],
) -> f64 {
    let ahu = &building.ahu;
    let dt_h = building.horizon.step_hours();
    let slack = &x[problem.n_zones];
    let mut cost = 0.0;
    for k in 0..problem.h {
        let t = t0 + k;
        let mut flow_sum = 0.0;
        let mut w_sum = 0.0;
        for i in 0..problem.n_zones {
            flow_sum += x[i][problem.layouts[i].m(k)];
            w_sum += x[i][problem.layouts[i].w(k)];
        }
        let cooling = ahu.specific_heat
            * ahu.cop_inverse
            * ((1.0 - dr[k]) * (scenario.outdoor_temp[t] - ahu.supply_temp) * flow_sum
                + dr[k] * w_sum);
        let fan = ahu.fan_coeff * (ahu.total_flow_max - slack[k]).powi(2);
        cost += scenario.price[t] * dt_h * (cooling.max(0.0) + fan);
    }
    cost
}

/// Scales each step's flows toward their lower bounds until the duct
/// capacity holds exactly.
fn project_capacity(building: &Building, flows: &mut [Vec<f64>]) -> Result<()> {
    let cap = building.ahu.total_flow_max;
    let floor: f64 = building.zones.iter().map(|z| z.flow_min).sum();
    if floor > cap + 1e-12 {
        return Err(Error::Infeasible(format!(
            "sum of flow minima {floor} exceeds duct capacity {cap}"
        )));
    }
    for step in flows.iter_mut() {
        let sum: f64 = step.iter().sum();
        if sum > cap {
            let excess_pool = sum - floor;
            if excess_pool <= 0.0 {
                continue;
            }
            let gamma = (cap - floor) / excess_pool;
            for (m, z) in step.iter_mut().zip(&building.zones) {
                *m = z.flow_min + (*m - z.flow_min) * gamma;
            }
        }
    }
    Ok(())
}

/// Per-zone ceiling repair: re-fit a violating zone's flows against the
/// exact rollout with the bilinear factor frozen at the rolled temperatures,
/// then re-roll so later zones see the update. The frozen factor is taken
/// from the warmer pre-repair trajectory and therefore overstates cooling,
/// so targets are backed off slightly and up to three sweeps run.
fn repair_ceilings(
    building: &Building,
    coeffs: &ThermalCoeffs,
    scenario: &Scenario,
    state: &PlantState,
    dr: &[f64],
    relaxed_upper: &[Vec<f64>],
    flows: &mut Vec<Vec<f64>>,
    cfg: &UlcConfig,
) -> Result<Vec<Vec<f64>>> {
    let n = building.n_zones();
    let h = building.horizon.horizon_steps;
    let t0 = state.time_index;
    let ahu = &building.ahu;
    let neighbors = building.topology.neighbors(n);
    let backoff = 0.5 * cfg.repair_tolerance;
    let mut temps = {
        let plan = ControlPlan { flows: flows.clone(), dr: dr.to_vec() };
        rollout(building, coeffs, scenario, state, &plan).temps
    };
    for _sweep in 0..3 {
        let mut any = false;
        for i in 0..n {
            let zone = &building.zones[i];
            let exceeded = (1..=h).any(|k| {
                temps[k][i] > relaxed_upper[i][k - 1] + cfg.repair_tolerance
            });
            if !exceeded {
                continue;
            }
            any = true;
            // Variables [T(1..=H) | m(0..H)]; frozen-factor dynamics.
            let nv = 2 * h;
            let mut p = DMatrix::zeros(nv, nv);
            let mut q = DVector::zeros(nv);
            let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
            let mut upper = DVector::from_element(nv, f64::INFINITY);
            let mut a_eq = DMatrix::zeros(h, nv);
            let mut b_eq = DVector::zeros(h);
            for k in 0..h {
                let t = t0 + k;
                p[(h + k, h + k)] = 2.0 + cfg.regularization;
                q[h + k] = -2.0 * flows[k][i];
                let headroom =
                    (ahu.total_flow_max - flows[k].iter().sum::<f64>()).max(0.0);
                lower[h + k] = zone.flow_min;
                upper[h + k] = zone.flow_max.min(flows[k][i] + headroom);
                lower[k] = zone.temp_min;
                upper[k] = (relaxed_upper[i][k] - backoff).max(zone.temp_min + backoff);
                p[(k, k)] = cfg.regularization;

                let gains: Vec<f64> = (0..n).map(|z| scenario.internal_gain[z][t]).collect();
                let d_k = coeffs.offset(scenario.outdoor_temp[t], &gains)[i];
                let mut rhs = d_k;
                for &(j, _) in &neighbors[i] {
                    rhs += coeffs.a[(i, j)] * temps[k][j];
                }
                a_eq[(k, k)] = 1.0; // T(k+1)
                a_eq[(k, h + k)] = -coeffs.c_flow[i] * (temps[k][i] - ahu.supply_temp);
                if k == 0 {
                    rhs += coeffs.a[(i, i)] * state.temps[i];
                } else {
                    a_eq[(k, k - 1)] = -coeffs.a[(i, i)];
                }
                b_eq[k] = rhs;
            }
            let prob = QpProblem {
                p,
                q,
                a_eq,
                b_eq,
                a_in: DMatrix::zeros(0, nv),
                b_in: DVector::zeros(0),
                lower,
                upper,
            };
            let sol = qp::solve(&prob, &cfg.adal.qp, None)?;
            if sol.status == QpStatus::Infeasible {
                continue; // leave this zone as-is; the excess is reported upstream
            }
            for k in 0..h {
                flows[k][i] = sol.x[h + k].clamp(zone.flow_min, zone.flow_max);
            }
            let plan = ControlPlan { flows: flows.clone(), dr: dr.to_vec() };
            temps = rollout(building, coeffs, scenario, state, &plan).temps;
        }
        if !any {
            break;
        }
    }
    Ok(temps)
}

/// Builds and solves the comfort problem, returning capacity-exact flows and
/// exact-rollout temperatures.
pub fn solve_ulc(
    building: &Building,
    coeffs: &ThermalCoeffs,
    scenario: &Scenario,
    state: &PlantState,
    dr: &[f64],
    cfg: &UlcConfig,
    warm: Option<&AdalState>,
) -> Result<UlcResult> {
    let problem = build_ulc(building, coeffs, scenario, state, dr, cfg)?;
    let outcome = adal::solve(&problem.coupled, &cfg.adal, warm)?;
    let n = problem.n_zones;
    let h = problem.h;
    let t0 = state.time_index;

    let mut flows: Vec<Vec<f64>> = (0..h)
        .map(|k| (0..n).map(|i| outcome.state.x[i][problem.layouts[i].m(k)]).collect())
        .collect();
    // Clamp tiny box violations left by the coupling tolerance, then make
    // the capacity exact.
    for step in flows.iter_mut() {
        for (m, z) in step.iter_mut().zip(&building.zones) {
            *m = m.clamp(z.flow_min, z.flow_max);
        }
    }
    project_capacity(building, &mut flows)?;

    let mut predicted = vec![state.temps.clone()];
    for k in 1..=h {
        predicted.push(
            (0..n).map(|i| outcome.state.x[i][problem.layouts[i].t(k)]).collect(),
        );
    }
    let relaxed = relaxed_cost(building, scenario, t0, dr, &problem, &outcome.state.x);

    let roll = {
        let plan = ControlPlan { flows: flows.clone(), dr: dr.to_vec() };
        rollout(building, coeffs, scenario, state, &plan)
    };
    let mut recovered = roll.temps;
    let mut plan_cost = roll.total_cost;
    let mut repaired = false;
    let needs_repair = (1..=h).any(|k| {
        (0..n).any(|i| recovered[k][i] > problem.relaxed_upper[i][k - 1] + cfg.repair_tolerance)
    });
    if needs_repair {
        repaired = true;
        recovered = repair_ceilings(
            building,
            coeffs,
            scenario,
            state,
            dr,
            &problem.relaxed_upper,
            &mut flows,
            cfg,
        )?;
        let plan = ControlPlan { flows: flows.clone(), dr: dr.to_vec() };
        plan_cost = rollout(building, coeffs, scenario, state, &plan).total_cost;
    }

    Ok(UlcResult {
        flows,
        predicted_temps: predicted,
        recovered_temps: recovered,
        relaxed_cost: relaxed,
        plan_cost,
        iterations: outcome.iterations,
        residual: outcome.final_residual,
        converged: outcome.converged,
        repaired,
        state: outcome.state,
    })
}
