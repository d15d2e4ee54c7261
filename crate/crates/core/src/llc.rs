//! Lower-level ventilation control: raises zone supply flows above the
//! comfort-optimal schedule just enough to keep CO2 under each zone's cap.
//!
//! With the supply concentration series `Cz(k)` estimated, the per-zone CO2
//! balance is linear in the flow `m` and the bilinear product `Z = m C`:
//!
//! ```text
//! C(k+1) = C(k) + e(k) m(k) + f Z(k) + g(k)
//! e(k) = Cz(k) dt / air_mass      f = -dt / air_mass
//! g(k) = occupants(k) C_g dt_h 1000 / air_mass
//! ```
//!
//! Each zone minimizes its squared deviation from the comfort schedule
//! `sum_k (m(k) - m_u(k))^2` subject to the balance, the cap `C(k) <= cap`,
//! and the product envelope; a zero-cost slack agent closes the duct
//! capacity row `sum_i m_i(k) + s(k) = m_max`. Because `Cz` itself depends
//! on the flows (return-air mixing), an outer fixed point re-estimates the
//! supply series from the relaxed iterate until it moves less than
//! `eps_supply`.
//!
//! The relaxation can leave small exact-dynamics excesses inside the
//! horizon; only the first step is executed by the receding-horizon loop,
//! so after the solve the first-step flows are projected onto the exact
//! one-step balance (a tiny fixed point on the mixing), making the executed
//! CO2 respect the caps to machine precision. A recirculation level that
//! cannot meet the caps even at maximal ventilation is reported as
//! `InfeasibleAtDr` so the caller can lower it.
//!
//! Concentrations are scaled to 1000 ppm units inside the agents so every
//! variable is O(1); inputs and outputs stay in ppm.

use nalgebra::{DMatrix, DVector};

use crate::adal::{self, AdalAgent, AdalConfig, AdalProblem, AdalState, CouplingEntry};
use crate::error::{Error, Result};
use crate::mccormick::EnvelopeBox;
use crate::model::{supply_co2, Building, Co2Coeffs, PlantState, Scenario};
use crate::qp::QpProblem;

/// Tuning of the ventilation solve.
#[derive(Debug, Clone, Copy)]
pub struct LlcConfig {
    pub adal: AdalConfig,
    /// Supply-series fixed-point tolerance [ppm, 2-norm over the horizon].
    pub eps_supply: f64,
    /// Maximum supply-series iterations.
    pub max_outer: usize,
    /// Exact max-ventilation excess beyond which the instance is declared
    /// infeasible without running the solver [ppm].
    pub precheck_margin: f64,
    /// Curvature floor added to every diagonal (strict convexity keeps the
    /// coordination deterministic).
    pub regularization: f64,
}

impl Default for LlcConfig {
    fn default() -> Self {
        LlcConfig {
            adal: AdalConfig { max_iters: 500, ..AdalConfig::default() },
            eps_supply: 1.0,
            max_outer: 20,
            precheck_margin: 50.0,
            regularization: 1e-9,
        }
    }
}

/// Ventilation schedule meeting the caps.
#[derive(Debug, Clone)]
pub struct LlcResult {
    /// Flows per step and zone, `flows[k][i]`; elementwise at or above the
    /// comfort schedule and within the duct capacity.
    pub flows: Vec<Vec<f64>>,
    /// Relaxed-model concentrations [ppm], `relaxed_co2[k][i]`, k = 0..=H
    /// (k = 0 holds the measurement).
    pub relaxed_co2: Vec<Vec<f64>>,
    /// Exact-dynamics rollout under the returned flows, same shape.
    pub recovered_co2: Vec<Vec<f64>>,
    /// Exact supply concentration per step under the returned flows [ppm].
    pub supply_co2: Vec<f64>,
    /// Final objective `sum (m - m_u)^2` of the relaxed iterate.
    pub relaxed_objective: f64,
    pub outer_iterations: usize,
    /// Coordination iterations summed over the supply fixed point.
    pub inner_iterations: usize,
    /// Capacity-coupling residual of the last coordination solve.
    pub residual: f64,
    /// Last supply-series movement [ppm, 2-norm].
    pub supply_gap: f64,
    pub converged: bool,
    /// The executed-step flows were adjusted onto the exact balance.
    pub first_step_projected: bool,
    /// Largest exact cap excess anywhere in the horizon [ppm] (relaxation
    /// gap on non-executed steps; 0 when the whole window is clean).
    pub max_recovered_excess: f64,
    /// Coordination state for warm-starting a solve of the same shape.
    pub state: AdalState,
}

/// Evidence that the caps cannot be met at the current recirculation level.
#[derive(Debug, Clone)]
pub struct LlcInfeasibility {
    /// Control steps k whose successor state exceeds a cap even at maximal
    /// ventilation (empty only when infeasibility surfaced inside the
    /// coordination solve without a witnessing rollout).
    pub violating_steps: Vec<usize>,
    /// Largest cap excess observed [ppm].
    pub max_excess_ppm: f64,
}

/// Outcome of a ventilation solve at a fixed recirculation profile.
#[derive(Debug)]
pub enum LlcOutcome {
    Solved(Box<LlcResult>),
    InfeasibleAtDr(LlcInfeasibility),
}

/// Warm-start bundle carried across solves of the same shape.
#[derive(Debug, Clone)]
pub struct LlcWarm {
    pub supply: Vec<f64>,
    pub adal: AdalState,
}

/// Per-zone balance coefficients for a given supply series; ppm units.
///
/// At `Cz = 450 ppm`, a 1800 s step and 1000 kg of zone air:
/// `e = 810 ppm/(kg/s)`, `f = -1.8 ppm/(ppm kg/s)`, and 10 occupants at
/// 40 g/h give `g = 200 ppm`.
pub fn co2_coeffs(
    building: &Building,
    scenario: &Scenario,
    zone: usize,
    t0: usize,
    supply: &[f64],
) -> Co2Coeffs {
    let dt = building.horizon.step_seconds;
    let air_mass = building.zones[zone].air_mass;
    let e = supply.iter().map(|cz| cz * dt / air_mass).collect();
    let f = -dt / air_mass;
    let g = (0..supply.len())
        .map(|k| {
            f64::from(scenario.occupancy[zone][t0 + k]) * scenario.co2_gen_rate
                * (dt / 3600.0)
                * 1000.0
                / air_mass
        })
        .collect();
    Co2Coeffs { e, f, g }
}

/// Exact CO2 rollout under the true mixing; returns concentrations
/// `[k][i]` for k = 0..=H and the supply series.
pub fn co2_rollout(
    building: &Building,
    scenario: &Scenario,
    t0: usize,
    co2_0: &[f64],
    flows: &[Vec<f64>],
    dr: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let dt = building.horizon.step_seconds;
    let mut co2 = vec![co2_0.to_vec()];
    let mut supply = Vec::with_capacity(flows.len());
    for (k, step_flows) in flows.iter().enumerate() {
        let t = t0 + k;
        let current = co2.last().unwrap().clone();
        let (cz, _) = supply_co2(dr[k], scenario.outdoor_co2[t], step_flows, &current);
        supply.push(cz);
        let next = (0..building.n_zones())
            .map(|i| {
                crate::model::co2_step(
                    &building.zones[i],
                    current[i],
                    step_flows[i],
                    cz,
                    scenario.occupancy[i][t],
                    scenario.co2_gen_rate,
                    dt,
                )
            })
            .collect();
        co2.push(next);
    }
    (co2, supply)
}

/// Decides whether the comfort schedule already keeps CO2 under the caps
/// with `guard` ppm to spare. Returns the exact rollout alongside.
pub fn needs_llc(
    building: &Building,
    scenario: &Scenario,
    state: &PlantState,
    flows: &[Vec<f64>],
    dr: &[f64],
    guard: f64,
) -> (bool, Vec<Vec<f64>>) {
    let (co2, _) = co2_rollout(building, scenario, state.time_index, &state.co2, flows, dr);
    let triggered = co2.iter().skip(1).any(|step| {
        step.iter()
            .zip(&building.zones)
            .any(|(&c, z)| c > z.co2_max - guard)
    });
    (triggered, co2)
}

/// Maximal-ventilation flows: duct capacity split equally, clipped to each
/// zone's range.
fn max_ventilation_flows(building: &Building, h: usize) -> Vec<Vec<f64>> {
    let share = building.ahu.total_flow_max / building.n_zones() as f64;
    (0..h)
        .map(|_| building.zones.iter().map(|z| z.flow_max.min(share)).collect())
        .collect()
}

/// Cap excesses of a rollout: per control step k, the largest excess of
/// `co2[k+1]` over the zone caps.
fn cap_excesses(building: &Building, co2: &[Vec<f64>]) -> Vec<f64> {
    (1..co2.len())
        .map(|k| {
            co2[k]
                .iter()
                .zip(&building.zones)
                .map(|(&c, z)| c - z.co2_max)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn validate_inputs(
    building: &Building,
    scenario: &Scenario,
    state: &PlantState,
    base_flows: &[Vec<f64>],
    dr: &[f64],
) -> Result<usize> {
    let h = building.horizon.horizon_steps;
    let n = building.n_zones();
    if dr.len() != h || base_flows.len() != h {
        return Err(Error::Input(format!(
            "profiles must cover the horizon ({} steps), got dr {} / flows {}",
            h,
            dr.len(),
            base_flows.len()
        )));
    }
    if state.time_index + h > scenario.len() {
        return Err(Error::Input(format!(
            "window [{}, {}) overruns scenario of length {}",
            state.time_index,
            state.time_index + h,
            scenario.len()
        )));
    }
    for (k, step) in base_flows.iter().enumerate() {
        if step.len() != n {
            return Err(Error::Input(format!(
                "flow row {k} has {} entries for {n} zones",
                step.len()
            )));
        }
        let total: f64 = step.iter().sum();
        if total > building.ahu.total_flow_max + 1e-6 {
            return Err(Error::Input(format!(
                "base flows at step {k} total {total}, beyond duct capacity"
            )));
        }
        for (i, (&m, z)) in step.iter().zip(&building.zones).enumerate() {
            if !(m.is_finite() && m >= z.flow_min - 1e-9 && m <= z.flow_max + 1e-6) {
                return Err(Error::Input(format!(
                    "base flow {m} for zone {i} at step {k} outside [{}, {}]",
                    z.flow_min, z.flow_max
                )));
            }
        }
    }
    Ok(h)
}

struct AgentQuantities {
    problem: AdalProblem,
}

/// Assembles the zone agents and slack agent for one supply estimate.
fn build_agents(
    building: &Building,
    scenario: &Scenario,
    state: &PlantState,
    base_flows: &[Vec<f64>],
    supply: &[f64],
    c_floor: f64,
    cfg: &LlcConfig,
) -> Result<AgentQuantities> {
    let h = building.horizon.horizon_steps;
    let n = building.n_zones();
    let t0 = state.time_index;
    // Layout per zone: [C(1..=H) | m(0..H) | Z(0..H)], concentrations and
    // products in 1000 ppm units.
    let c_of = |k: usize| k - 1;
    let m_of = |k: usize| h + k;
    let z_of = |k: usize| 2 * h + k;
    let nv = 3 * h;

    let mut agents = Vec::with_capacity(n + 1);
    for i in 0..n {
        let zone = &building.zones[i];
        let coeffs = co2_coeffs(building, scenario, i, t0, supply);
        let c_meas = state.co2[i] / 1000.0;
        let cap = zone.co2_max / 1000.0;
        let c_lo = c_floor / 1000.0;

        let mut p = DMatrix::zeros(nv, nv);
        let mut q = DVector::zeros(nv);
        let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
        let mut upper = DVector::from_element(nv, f64::INFINITY);
        for d in 0..nv {
            p[(d, d)] = cfg.regularization;
        }
        for k in 0..h {
            p[(m_of(k), m_of(k))] += 2.0;
            q[m_of(k)] = -2.0 * base_flows[k][i];
            lower[m_of(k)] = base_flows[k][i];
            upper[m_of(k)] = zone.flow_max;
        }
        for k in 1..=h {
            lower[c_of(k)] = c_lo;
            upper[c_of(k)] = cap;
        }

        // Product variable bounds and envelopes; k = 0 is pinned exactly.
        let exact0 = EnvelopeBox::new(base_flows[0][i], zone.flow_max, c_meas, c_meas)?;
        let (z0_lo, z0_hi) = exact0.z_bounds();
        lower[z_of(0)] = z0_lo;
        upper[z_of(0)] = z0_hi;
        let mut boxes = Vec::with_capacity(h.saturating_sub(1));
        for k in 1..h {
            let b = EnvelopeBox::new(base_flows[k][i], zone.flow_max, c_lo, cap)?;
            let (z_lo, z_hi) = b.z_bounds();
            lower[z_of(k)] = z_lo;
            upper[z_of(k)] = z_hi;
            boxes.push(b);
        }

        // Balance equalities (in 1000 ppm units) plus the exact product pin.
        let mut a_eq = DMatrix::zeros(h + 1, nv);
        let mut b_eq = DVector::zeros(h + 1);
        for k in 0..h {
            a_eq[(k, c_of(k + 1))] = 1.0;
            a_eq[(k, m_of(k))] = -coeffs.e[k] / 1000.0;
            a_eq[(k, z_of(k))] = -coeffs.f;
            let mut rhs = coeffs.g[k] / 1000.0;
            if k == 0 {
                rhs += c_meas;
            } else {
                a_eq[(k, c_of(k))] = -1.0;
            }
            b_eq[k] = rhs;
        }
        a_eq[(h, z_of(0))] = 1.0;
        a_eq[(h, m_of(0))] = -c_meas;

        let mut a_in = DMatrix::zeros(4 * (h - 1), nv);
        let mut b_in = DVector::zeros(4 * (h - 1));
        for (kb, b) in boxes.iter().enumerate() {
            let k = kb + 1;
            for (r, row) in b.rows().iter().enumerate() {
                let idx = 4 * kb + r;
                a_in[(idx, m_of(k))] = row.cx;
                a_in[(idx, c_of(k))] = row.cy;
                a_in[(idx, z_of(k))] = row.cz;
                b_in[idx] = row.rhs;
            }
        }

        let coupling = (0..h)
            .map(|k| CouplingEntry { row: k, col: m_of(k), coeff: 1.0 })
            .collect();
        agents.push(AdalAgent {
            qp: QpProblem { p, q, a_eq, b_eq, a_in, b_in, lower, upper },
            coupling,
        });
    }

    // Zero-cost slack agent absorbing spare duct capacity.
    {
        let mut p = DMatrix::zeros(h, h);
        for k in 0..h {
            p[(k, k)] = cfg.regularization.max(1e-12);
        }
        let mut qp = QpProblem::new(p, DVector::zeros(h));
        qp.lower = DVector::zeros(h);
        qp.upper = DVector::from_element(h, building.ahu.total_flow_max);
        let coupling =
            (0..h).map(|k| CouplingEntry { row: k, col: k, coeff: 1.0 }).collect();
        agents.push(AdalAgent { qp, coupling });
    }

    let rhs = DVector::from_element(h, building.ahu.total_flow_max);
    Ok(AgentQuantities { problem: AdalProblem { agents, coupling_rhs: rhs } })
}

/// Projects the executed-step flows onto the exact one-step balance so the
/// caps hold to machine precision after mixing feedback. Returns violating
/// evidence when even maximal flows cannot achieve that.
fn project_first_step(
    building: &Building,
    scenario: &Scenario,
    state: &PlantState,
    base0: &[f64],
    dr0: f64,
    flows0: &mut [f64],
) -> std::result::Result<bool, LlcInfeasibility> {
    let dt = building.horizon.step_seconds;
    let t0 = state.time_index;
    let n = building.n_zones();
    let gen: Vec<f64> = (0..n)
        .map(|i| {
            f64::from(scenario.occupancy[i][t0]) * scenario.co2_gen_rate * (dt / 3600.0)
                * 1000.0
                / building.zones[i].air_mass
        })
        .collect();
    let mut changed = false;
    for _ in 0..10 {
        let (cz, _) = supply_co2(dr0, scenario.outdoor_co2[t0], flows0, &state.co2);
        let mut any = false;
        for i in 0..n {
            let zone = &building.zones[i];
            let c0 = state.co2[i];
            let next = c0 + gen[i] + flows0[i] * (cz - c0) * dt / zone.air_mass;
            if next <= zone.co2_max + 1e-12 {
                continue;
            }
            any = true;
            if cz < c0 - 1e-9 {
                let required = (c0 + gen[i] - zone.co2_max) * zone.air_mass / (dt * (c0 - cz));
                let target = required.max(flows0[i]);
                if target > zone.flow_max + 1e-9 {
                    return Err(LlcInfeasibility {
                        violating_steps: vec![0],
                        max_excess_ppm: next - zone.co2_max,
                    });
                }
                flows0[i] = target.min(zone.flow_max);
                changed = true;
            } else {
                // Supply is no cleaner than the zone: flow cannot help, so
                // fall back to the comfort schedule and re-check.
                if flows0[i] > base0[i] + 1e-12 {
                    flows0[i] = base0[i];
                    changed = true;
                } else {
                    return Err(LlcInfeasibility {
                        violating_steps: vec![0],
                        max_excess_ppm: next - zone.co2_max,
                    });
                }
            }
        }
        if !any {
            break;
        }
    }
    // Final verification of the fixed point.
    let (cz, _) = supply_co2(dr0, scenario.outdoor_co2[t0], flows0, &state.co2);
    let mut max_excess: f64 = 0.0;
    for i in 0..n {
        let zone = &building.zones[i];
        let c0 = state.co2[i];
        let next = c0 + gen[i] + flows0[i] * (cz - c0) * dt / zone.air_mass;
        max_excess = max_excess.max(next - zone.co2_max);
    }
    if max_excess > 1e-6 {
        return Err(LlcInfeasibility { violating_steps: vec![0], max_excess_ppm: max_excess });
    }
    let total: f64 = flows0.iter().sum();
    if total > building.ahu.total_flow_max + 1e-9 {
        return Err(LlcInfeasibility {
            violating_steps: vec![0],
            max_excess_ppm: max_excess.max(0.0),
        });
    }
    Ok(changed)
}

/// Solves the ventilation problem above the comfort schedule `base_flows`
/// at the fixed recirculation profile `dr`.
pub fn solve_llc(
    building: &Building,
    scenario: &Scenario,
    state: &PlantState,
    base_flows: &[Vec<f64>],
    dr: &[f64],
    cfg: &LlcConfig,
    warm: Option<&LlcWarm>,
) -> Result<LlcOutcome> {
    let h = validate_inputs(building, scenario, state, base_flows, dr)?;
    let n = building.n_zones();
    let t0 = state.time_index;

    // Clearly hopeless recirculation levels are rejected on an exact
    // maximal-ventilation rollout before any optimization.
    let max_flows = max_ventilation_flows(building, h);
    let (max_co2, _) = co2_rollout(building, scenario, t0, &state.co2, &max_flows, dr);
    let excesses = cap_excesses(building, &max_co2);
    let max_excess = excesses.iter().cloned().fold(0.0f64, f64::max);
    let witness_steps: Vec<usize> = excesses
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0)
        .map(|(k, _)| k)
        .collect();
    if max_excess > cfg.precheck_margin {
        return Ok(LlcOutcome::InfeasibleAtDr(LlcInfeasibility {
            violating_steps: witness_steps,
            max_excess_ppm: max_excess,
        }));
    }

    // Concentration floor for the envelopes: nothing in the window can dip
    // below the cleanest air present, minus a small pad.
    let c_floor = {
        let outdoor_min = (0..h)
            .map(|k| scenario.outdoor_co2[t0 + k])
            .fold(f64::INFINITY, f64::min);
        let meas_min = state.co2.iter().cloned().fold(f64::INFINITY, f64::min);
        (outdoor_min.min(meas_min) - 10.0).max(0.0)
    };

    // Supply-series fixed point, seeded from the previous solve when its
    // shape matches, else from mixing the measured average return air.
    let mut supply: Vec<f64> = match warm {
        Some(w) if w.supply.len() == h => w.supply.clone(),
        _ => {
            let mean_meas = state.co2.iter().sum::<f64>() / n as f64;
            (0..h)
                .map(|k| {
                    let t = t0 + k;
                    (1.0 - dr[k]) * scenario.outdoor_co2[t] + dr[k] * mean_meas
                })
                .collect()
        }
    };

    let mut adal_state: Option<AdalState> = warm.map(|w| w.adal.clone());
    let mut outer_iterations = 0;
    let mut inner_iterations = 0;
    let mut supply_gap = f64::INFINITY;
    let mut last_outcome = None;
    for _ in 0..cfg.max_outer {
        outer_iterations += 1;
        let built =
            build_agents(building, scenario, state, base_flows, &supply, c_floor, cfg)?;
        let outcome = match adal::solve(&built.problem, &cfg.adal, adal_state.as_ref()) {
            Ok(o) => o,
            Err(Error::Infeasible(_)) => {
                let steps = if witness_steps.is_empty() {
                    (0..h).collect()
                } else {
                    witness_steps.clone()
                };
                return Ok(LlcOutcome::InfeasibleAtDr(LlcInfeasibility {
                    violating_steps: steps,
                    max_excess_ppm: max_excess.max(0.0),
                }));
            }
            Err(e) => return Err(e),
        };
        inner_iterations += outcome.iterations;
        adal_state = Some(outcome.state.clone());

        // Re-estimate the supply series from the relaxed trajectory.
        let mut relaxed_c = vec![state.co2.clone()];
        for k in 1..=h {
            relaxed_c.push(
                (0..n).map(|i| outcome.state.x[i][k - 1] * 1000.0).collect(),
            );
        }
        let flows_k: Vec<Vec<f64>> = (0..h)
            .map(|k| (0..n).map(|i| outcome.state.x[i][h + k]).collect())
            .collect();
        let new_supply: Vec<f64> = (0..h)
            .map(|k| {
                let t = t0 + k;
                supply_co2(dr[k], scenario.outdoor_co2[t], &flows_k[k], &relaxed_c[k]).0
            })
            .collect();
        supply_gap = supply
            .iter()
            .zip(&new_supply)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        supply = new_supply;
        last_outcome = Some(outcome);
        if supply_gap <= cfg.eps_supply {
            break;
        }
    }
    let outcome = last_outcome.expect("at least one supply iteration runs");

    // Extract flows; absorb the residual capacity slack toward the comfort
    // schedule, which is always capacity-feasible.
    let mut flows: Vec<Vec<f64>> = (0..h)
        .map(|k| (0..n).map(|i| outcome.state.x[i][h + k]).collect())
        .collect();
    for (k, step) in flows.iter_mut().enumerate() {
        for (i, m) in step.iter_mut().enumerate() {
            *m = m.clamp(base_flows[k][i], building.zones[i].flow_max);
        }
        let total: f64 = step.iter().sum();
        let cap = building.ahu.total_flow_max;
        if total > cap {
            let floor: f64 = base_flows[k].iter().sum();
            let pool = total - floor;
            if pool > 0.0 {
                let gamma = (cap - floor) / pool;
                for (m, &b) in step.iter_mut().zip(&base_flows[k]) {
                    *m = b + (*m - b) * gamma;
                }
            }
        }
    }

    let relaxed_objective: f64 = (0..h)
        .map(|k| {
            (0..n)
                .map(|i| (outcome.state.x[i][h + k] - base_flows[k][i]).powi(2))
                .sum::<f64>()
        })
        .sum();
    let mut relaxed_co2 = vec![state.co2.clone()];
    for k in 1..=h {
        relaxed_co2.push((0..n).map(|i| outcome.state.x[i][k - 1] * 1000.0).collect());
    }

    // Exact recovery and the executed-step projection.
    let first_step_projected = match project_first_step(
        building,
        scenario,
        state,
        &base_flows[0],
        dr[0],
        &mut flows[0],
    ) {
        Ok(changed) => changed,
        Err(inf) => return Ok(LlcOutcome::InfeasibleAtDr(inf)),
    };
    let (recovered_co2, supply_exact) =
        co2_rollout(building, scenario, t0, &state.co2, &flows, dr);
    let max_recovered_excess = cap_excesses(building, &recovered_co2)
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);

    let converged = outcome.converged && supply_gap <= cfg.eps_supply;
    Ok(LlcOutcome::Solved(Box::new(LlcResult {
        flows,
        relaxed_co2,
        recovered_co2,
        supply_co2: supply_exact,
        relaxed_objective,
        outer_iterations,
        inner_iterations,
        residual: outcome.final_residual,
        supply_gap,
        converged,
        first_step_projected,
        max_recovered_excess,
        state: outcome.state,
    })))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::model::{
        AhuParams, Building, BuildingTopology, HorizonConfig, PlantState, Scenario, ZoneParams,
    };
    use crate::scenario::benchmark5;

    fn simple_case(
        n: usize,
        horizon: usize,
        occupants: u32,
        co2_0: f64,
    ) -> (Building, Scenario, PlantState) {
        let building = Building {
            horizon: HorizonConfig {
                step_seconds: 1800.0,
                horizon_steps: horizon,
                day_steps: horizon,
            },
            ahu: AhuParams {
                supply_temp: 15.0,
                fan_coeff: 0.08,
                cop_inverse: 1.0,
                total_flow_max: 0.4 * n as f64,
                dr_min: 0.0,
                dr_max: 0.8,
                dr_step: 0.05,
                specific_heat: 1.012,
                air_density: 1.2,
            },
            zones: (0..n)
                .map(|_| ZoneParams {
                    heat_capacity: 1.5e3,
                    air_mass: 1000.0,
                    area: 100.0,
                    resistance_to_outside: 50.0,
                    flow_min: 0.0,
                    flow_max: 0.5,
                    temp_min: 24.0,
                    temp_max: 26.0,
                    co2_max: 800.0,
                })
                .collect(),
            topology: BuildingTopology { edges: vec![] },
        };
        let len = 2 * horizon;
        let scenario = Scenario {
            co2_gen_rate: 40.0,
            outdoor_temp: vec![30.0; len],
            outdoor_co2: vec![400.0; len],
            price: vec![0.2; len],
            occupancy: vec![vec![occupants; len]; n],
            internal_gain: vec![vec![0.3; len]; n],
        };
        let state = PlantState { temps: vec![25.0; n], co2: vec![co2_0; n], time_index: 0 };
        (building, scenario, state)
    }

    #[test]
    fn balance_coefficients_match_hand_values() {
        let (building, scenario, _) = simple_case(1, 2, 10, 400.0);
        let coeffs = co2_coeffs(&building, &scenario, 0, 0, &[450.0, 500.0]);
        assert_relative_eq!(coeffs.e[0], 810.0, max_relative = 1e-12);
        assert_relative_eq!(coeffs.e[1], 900.0, max_relative = 1e-12);
        assert_relative_eq!(coeffs.f, -1.8, max_relative = 1e-12);
        assert_relative_eq!(coeffs.g[0], 200.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_building_keeps_the_comfort_schedule() {
        let (building, scenario, state) = simple_case(2, 4, 0, 450.0);
        let base = vec![vec![0.15, 0.2]; 4];
        let dr = vec![0.5; 4];
        let out = solve_llc(
            &building,
            &scenario,
            &state,
            &base,
            &dr,
            &LlcConfig::default(),
            None,
        )
        .unwrap();
        let LlcOutcome::Solved(res) = out else {
            panic!("expected a solution")
        };
        assert!(res.converged);
        for (k, step) in res.flows.iter().enumerate() {
            for (i, &m) in step.iter().enumerate() {
                assert_relative_eq!(m, base[k][i], epsilon = 1e-3);
            }
        }
        assert!(res.relaxed_objective < 1e-5);
    }

    #[test]
    fn trigger_fires_only_near_the_cap() {
        let (building, scenario, state) = simple_case(1, 4, 0, 450.0);
        let flows = vec![vec![0.2]; 4];
        let dr = vec![0.5; 4];
        let (low, _) = needs_llc(&building, &scenario, &state, &flows, &dr, 5.0);
        assert!(!low);

        let (b2, s2, st2) = simple_case(1, 4, 12, 700.0);
        let (high, roll) = needs_llc(&b2, &s2, &st2, &flows, &dr, 5.0);
        assert!(high);
        assert!(roll[1][0] > 700.0);
    }

    #[test]
    fn binding_cap_raises_flows_and_executed_step_is_exact() {
        // 8 occupants at 760 ppm: generation 160 ppm/step forces far more
        // than the 0.05 kg/s comfort flow (the first step alone needs about
        // 0.26 kg/s).
        let (building, scenario, state) = simple_case(1, 4, 8, 760.0);
        let base = vec![vec![0.05]; 4];
        let dr = vec![0.3; 4];
        let out = solve_llc(
            &building,
            &scenario,
            &state,
            &base,
            &dr,
            &LlcConfig::default(),
            None,
        )
        .unwrap();
        let LlcOutcome::Solved(res) = out else {
            panic!("expected a solution")
        };
        assert!(res.converged, "gap {} residual {}", res.supply_gap, res.residual);
        assert!(res.flows[0][0] > 0.25, "first-step flow {}", res.flows[0][0]);
        for (k, step) in res.flows.iter().enumerate() {
            for (i, &m) in step.iter().enumerate() {
                assert!(m >= base[k][i] - 1e-12, "flow dropped below schedule");
            }
        }
        assert!(
            res.recovered_co2[1][0] <= building.zones[0].co2_max + 1e-6,
            "executed step {} ppm",
            res.recovered_co2[1][0]
        );
    }

    #[test]
    fn hopeless_recirculation_is_rejected_before_solving() {
        // Full recirculation ceiling with heavy occupancy: even maximal
        // flows cannot hold 800 ppm.
        let (building, scenario, state) = simple_case(1, 4, 20, 780.0);
        let base = vec![vec![0.1]; 4];
        let dr = vec![0.8; 4];
        let out = solve_llc(
            &building,
            &scenario,
            &state,
            &base,
            &dr,
            &LlcConfig::default(),
            None,
        )
        .unwrap();
        let LlcOutcome::InfeasibleAtDr(inf) = out else {
            panic!("expected infeasibility")
        };
        assert!(!inf.violating_steps.is_empty());
        assert!(inf.max_excess_ppm > 50.0);
    }

    #[test]
    fn relaxed_objective_lower_bounds_exact_grid_optimum() {
        // Single zone, H = 2: enumerate flows on a 41-level grid, keep the
        // plans whose exact rollout meets the cap, and compare objectives.
        let (building, scenario, state) = simple_case(1, 2, 10, 650.0);
        let base = vec![vec![0.1]; 2];
        let dr = vec![0.4; 2];
        let cfg = LlcConfig::default();
        let out = solve_llc(&building, &scenario, &state, &base, &dr, &cfg, None).unwrap();
        let LlcOutcome::Solved(res) = out else {
            panic!("expected a solution")
        };
        assert!(res.converged);

        let levels: Vec<f64> =
            (0..=40).map(|i| 0.1 + (0.5 - 0.1) * i as f64 / 40.0).collect();
        let mut best = f64::INFINITY;
        for &m0 in &levels {
            for &m1 in &levels {
                let flows = vec![vec![m0], vec![m1]];
                let (co2, _) = co2_rollout(&building, &scenario, 0, &state.co2, &flows, &dr);
                if co2[1][0] <= 800.0 + 1e-9 && co2[2][0] <= 800.0 + 1e-9 {
                    let obj = (m0 - 0.1).powi(2) + (m1 - 0.1).powi(2);
                    best = best.min(obj);
                }
            }
        }
        assert!(best.is_finite(), "no feasible grid plan");
        assert!(
            res.relaxed_objective <= best + 1e-6,
            "relaxed {} vs grid optimum {best}",
            res.relaxed_objective
        );
    }

    #[test]
    fn coordination_matches_centralized_stack_on_a_small_instance() {
        let (building, scenario, state) = simple_case(2, 2, 8, 620.0);
        let base = vec![vec![0.08, 0.12]; 2];
        let cfg = LlcConfig::default();

        // One supply estimate, solved both ways.
        let supply: Vec<f64> = vec![500.0, 500.0];
        let built =
            build_agents(&building, &scenario, &state, &base, &supply, 390.0, &cfg).unwrap();
        let outcome = adal::solve(&built.problem, &cfg.adal, None).unwrap();
        assert!(outcome.converged);

        let stacked = adal::stack_centralized(&built.problem).unwrap();
        let central = crate::qp::solve(&stacked, &cfg.adal.qp, None).unwrap();
        assert!(
            (outcome.objective - central.objective).abs()
                <= 5e-3 * (1.0 + central.objective.abs()),
            "distributed {} vs centralized {}",
            outcome.objective,
            central.objective
        );
    }

    #[test]
    fn supply_fixed_point_settles_within_budget_on_the_benchmark() {
        let case = benchmark5(0);
        let n = case.building.n_zones();
        // Mid-day occupied state near the cap.
        let state = PlantState {
            temps: vec![25.0; n],
            co2: vec![720.0, 700.0, 710.0, 690.0, 705.0],
            time_index: 22,
        };
        let base = vec![vec![0.12; n]; 10];
        // Peak occupancy caps the sustainable recirculation near 0.2.
        let dr = vec![0.15; 10];
        let out = solve_llc(
            &case.building,
            &case.scenario,
            &state,
            &base,
            &dr,
            &LlcConfig::default(),
            None,
        )
        .unwrap();
        let LlcOutcome::Solved(res) = out else {
            panic!("expected a solution")
        };
        assert!(res.converged, "gap {} after {} outer", res.supply_gap, res.outer_iterations);
        assert!(res.outer_iterations <= 20);
        assert!(res.supply_gap <= 1.0);
        assert!(res.residual <= 1e-3);
        // Executed step honors every cap exactly.
        for i in 0..n {
            assert!(res.recovered_co2[1][i] <= case.building.zones[i].co2_max + 1e-6);
        }
    }

    #[test]
    fn warm_start_reuses_prior_supply_and_state() {
        let case = benchmark5(0);
        let n = case.building.n_zones();
        let state = PlantState {
            temps: vec![25.0; n],
            co2: vec![680.0; n],
            time_index: 22,
        };
        let base = vec![vec![0.12; n]; 10];
        let dr = vec![0.15; 10];
        let cfg = LlcConfig::default();
        let LlcOutcome::Solved(cold) =
            solve_llc(&case.building, &case.scenario, &state, &base, &dr, &cfg, None).unwrap()
        else {
            panic!("expected a solution")
        };
        let warm = LlcWarm { supply: cold.supply_co2.clone(), adal: cold.state.clone() };
        let LlcOutcome::Solved(rewarmed) = solve_llc(
            &case.building,
            &case.scenario,
            &state,
            &base,
            &dr,
            &cfg,
            Some(&warm),
        )
        .unwrap()
        else {
            panic!("expected a solution")
        };
        assert!(rewarmed.converged);
        assert!(
            rewarmed.inner_iterations <= cold.inner_iterations,
            "warm {} vs cold {}",
            rewarmed.inner_iterations,
            cold.inner_iterations
        );
    }

    #[test]
    fn mismatched_schedule_is_rejected() {
        let (building, scenario, state) = simple_case(1, 4, 0, 450.0);
        let err = solve_llc(
            &building,
            &scenario,
            &state,
            &vec![vec![0.1]; 3],
            &[0.5; 4],
            &LlcConfig::default(),
            None,
        );
        assert!(matches!(err, Err(Error::Input(_))));
    }
}
