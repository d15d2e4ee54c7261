//! Exact plant rollout and comfort accounting.

use serde::Serialize;

use crate::error::Result;
use crate::model::{
    co2_step, power, step_cost, supply_co2, thermal_coeffs, thermal_step, Building, ControlPlan,
    PlantState, Scenario, ThermalCoeffs,
};

/// Per-epoch solver statistics attached to closed-loop reports.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EpochStats {
    /// Scenario step the epoch executed.
    pub step: usize,
    /// Ventilation-reset iterations (decrement loop count).
    pub dr_iterations: usize,
    pub llc_invoked: bool,
    /// Agreement-loop iterations spent in the comfort solve.
    pub ulc_inner_iterations: usize,
    /// Inner iterations across all CO2 solves of the epoch.
    pub llc_inner_iterations: usize,
    /// Supply-estimate fixed-point iterations of the final CO2 solve.
    pub llc_outer_iterations: usize,
    /// Final coupling residual of the last inner solve [kg/s | deg C].
    pub coupling_residual: f64,
    /// Final supply-estimate change of the last CO2 solve [ppm].
    pub supply_residual: f64,
    /// Reset ran out of decrement room while violations persisted.
    pub dr_floor_hit: bool,
    /// Epoch fell back to the shifted previous plan.
    pub fallback: bool,
    pub converged: bool,
    /// Wall-clock time of the epoch [ms]; not part of serialized outputs
    /// that must be reproducible.
    pub wall_ms: f64,
    /// Final recirculation profile over the epoch's planning window.
    pub dr_plan: Vec<f64>,
}

/// Trajectories, powers and costs of one rollout (open-loop plan or a full
/// closed-loop day). States have one more sample than controls.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    /// Scenario index of the first control step.
    pub start_index: usize,
    /// `temps[k][i]`: zone i temperature before control step k; length K+1.
    pub temps: Vec<Vec<f64>>,
    /// `co2[k][i]`: zone i CO2 before control step k; length K+1.
    pub co2: Vec<Vec<f64>>,
    pub flows: Vec<Vec<f64>>,
    pub dr: Vec<f64>,
    pub supply_co2: Vec<f64>,
    pub p_cool: Vec<f64>,
    pub p_fan: Vec<f64>,
    pub price: Vec<f64>,
    pub step_cost: Vec<f64>,
    pub total_cost: f64,
    /// Steps whose coil duty clamped at zero.
    pub clamped_steps: Vec<usize>,
    /// Steps that fell back to unweighted return-air mixing.
    pub degenerate_mixing_steps: Vec<usize>,
    /// Closed-loop solver statistics; empty for open-loop rollouts.
    pub epochs: Vec<EpochStats>,
}

impl RunReport {
    pub fn n_steps(&self) -> usize {
        self.dr.len()
    }
}

/// Rolls the exact bilinear dynamics forward under `plan`.
///
/// The scenario is indexed from `state.time_index`; the plan may be shorter
/// than the remaining scenario but not longer.
pub fn simulate(
    building: &Building,
    scenario: &Scenario,
    state: &PlantState,
    plan: &ControlPlan,
) -> Result<RunReport> {
    building.validate()?;
    state.validate(building)?;
    plan.validate(building, 1e-6)?;
    if state.time_index + plan.len() > scenario.len() {
        return Err(crate::error::Error::Input(format!(
            "plan of {} steps starting at {} overruns scenario of length {}",
            plan.len(),
            state.time_index,
            scenario.len()
        )));
    }
    let coeffs = thermal_coeffs(building)?;
    Ok(rollout(building, &coeffs, scenario, state, plan))
}

/// Validation-free rollout core; callers guarantee shapes and bounds.
pub(crate) fn rollout(
    building: &Building,
    coeffs: &ThermalCoeffs,
    scenario: &Scenario,
    state: &PlantState,
    plan: &ControlPlan,
) -> RunReport {
    let steps = plan.len();
    let n = building.n_zones();
    let dt = building.horizon.step_seconds;
    let dt_h = building.horizon.step_hours();
    let mut report = RunReport {
        start_index: state.time_index,
        temps: Vec::with_capacity(steps + 1),
        co2: Vec::with_capacity(steps + 1),
        flows: plan.flows.clone(),
        dr: plan.dr.clone(),
        supply_co2: Vec::with_capacity(steps),
        p_cool: Vec::with_capacity(steps),
        p_fan: Vec::with_capacity(steps),
        price: Vec::with_capacity(steps),
        step_cost: Vec::with_capacity(steps),
        ..Default::default()
    };
    let mut temps = state.temps.clone();
    let mut co2 = state.co2.clone();
    report.temps.push(temps.clone());
    report.co2.push(co2.clone());
    let mut gains_buf = vec![0.0; n];
    for k in 0..steps {
        let t = state.time_index + k;
        let flows = &plan.flows[k];
        let dr = plan.dr[k];
        let (c_z, degenerate) = supply_co2(dr, scenario.outdoor_co2[t], flows, &co2);
        if degenerate {
            report.degenerate_mixing_steps.push(t);
        }
        let p = power(&building.ahu, dr, flows, &temps, scenario.outdoor_temp[t]);
        if p.clamped {
            report.clamped_steps.push(t);
        }
        let cost = step_cost(scenario.price[t], &p, dt_h);
        for i in 0..n {
            gains_buf[i] = scenario.internal_gain[i][t];
        }
        let next_temps = thermal_step(coeffs, &temps, flows, scenario.outdoor_temp[t], &gains_buf);
        for i in 0..n {
            co2[i] = co2_step(
                &building.zones[i],
                co2[i],
                flows[i],
                c_z,
                scenario.occupancy[i][t],
                scenario.co2_gen_rate,
                dt,
            );
        }
        temps = next_temps;
        report.temps.push(temps.clone());
        report.co2.push(co2.clone());
        report.supply_co2.push(c_z);
        report.p_cool.push(p.cooling);
        report.p_fan.push(p.fan);
        report.price.push(scenario.price[t]);
        report.step_cost.push(cost);
        report.total_cost += cost;
    }
    report
}

/// Comfort and air-quality audit of a rollout.
#[derive(Debug, Clone, Serialize)]
pub struct ComfortSummary {
    /// Largest temperature excursion above any zone's max [deg C]; 0 if none.
    pub max_temp_above: f64,
    /// Largest temperature excursion below any zone's min [deg C]; 0 if none.
    pub max_temp_below: f64,
    /// Time-integrated temperature violation [deg C * h].
    pub integrated_temp_violation: f64,
    /// Largest CO2 reading [ppm] and excursion over the cap.
    pub max_co2: f64,
    pub max_co2_above: f64,
    /// Time-integrated CO2 violation [ppm * h].
    pub integrated_co2_violation: f64,
    pub temp_ok: bool,
    pub co2_ok: bool,
}

/// Audits every post-initial state sample against the zone bounds.
/// `tolerance` (deg C / ppm) sets how much excursion still counts as ok.
pub fn check_comfort(report: &RunReport, building: &Building, tolerance: f64) -> ComfortSummary {
    let dt_h = building.horizon.step_hours();
    let mut s = ComfortSummary {
        max_temp_above: 0.0,
        max_temp_below: 0.0,
        integrated_temp_violation: 0.0,
        max_co2: f64::NEG_INFINITY,
        max_co2_above: 0.0,
        integrated_co2_violation: 0.0,
        temp_ok: true,
        co2_ok: true,
    };
    for sample in 1..report.temps.len() {
        for (i, z) in building.zones.iter().enumerate() {
            let t = report.temps[sample][i];
            let above = (t - z.temp_max).max(0.0);
            let below = (z.temp_min - t).max(0.0);
            s.max_temp_above = s.max_temp_above.max(above);
            s.max_temp_below = s.max_temp_below.max(below);
            s.integrated_temp_violation += (above + below) * dt_h;
            let c = report.co2[sample][i];
            let c_above = (c - z.co2_max).max(0.0);
            s.max_co2 = s.max_co2.max(c);
            s.max_co2_above = s.max_co2_above.max(c_above);
            s.integrated_co2_violation += c_above * dt_h;
        }
    }
    if !s.max_co2.is_finite() {
        s.max_co2 = 0.0;
    }
    s.temp_ok = s.max_temp_above <= tolerance && s.max_temp_below <= tolerance;
    s.co2_ok = s.max_co2_above <= tolerance;
    s
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::model::{AhuParams, BuildingTopology, Edge, HorizonConfig, ZoneParams};

    fn building(n: usize) -> Building {
        let edges = (1..n).map(|i| Edge { a: i - 1, b: i, resistance: 14.0 }).collect();
        Building {
            horizon: HorizonConfig { step_seconds: 1800.0, horizon_steps: 4, day_steps: 4 },
            ahu: AhuParams {
                supply_temp: 15.0,
                fan_coeff: 0.08,
                cop_inverse: 1.0,
                total_flow_max: 2.0,
                dr_min: 0.0,
                dr_max: 0.8,
                dr_step: 0.05,
                specific_heat: 1.012,
                air_density: 1.2,
            },
            zones: vec![
                ZoneParams {
                    heat_capacity: 1.5e3,
                    air_mass: 1000.0,
                    area: 100.0,
                    resistance_to_outside: 50.0,
                    flow_min: 0.0,
                    flow_max: 0.5,
                    temp_min: 24.0,
                    temp_max: 26.0,
                    co2_max: 800.0,
                };
                n
            ],
            topology: BuildingTopology { edges },
        }
    }

    fn scenario(b: &Building, len: usize) -> Scenario {
        Scenario {
            co2_gen_rate: 40.0,
            outdoor_temp: vec![32.0; len],
            outdoor_co2: vec![400.0; len],
            price: vec![0.2; len],
            occupancy: vec![vec![0; len]; b.n_zones()],
            internal_gain: vec![vec![0.0; len]; b.n_zones()],
        }
    }

    fn state(b: &Building) -> PlantState {
        PlantState {
            temps: vec![25.0; b.n_zones()],
            co2: vec![500.0; b.n_zones()],
            time_index: 0,
        }
    }

    #[test]
    fn empty_plan_returns_initial_state_only() {
        let b = building(2);
        let sc = scenario(&b, 8);
        let r = simulate(&b, &sc, &state(&b), &ControlPlan { flows: vec![], dr: vec![] }).unwrap();
        assert_eq!(r.temps.len(), 1);
        assert_relative_eq!(r.total_cost, 0.0);
    }

    #[test]
    fn one_step_composes_the_primitive_updates() {
        let b = building(2);
        let mut sc = scenario(&b, 8);
        sc.occupancy[0][0] = 5;
        sc.internal_gain[1][0] = 0.7;
        let st = state(&b);
        let plan = ControlPlan { flows: vec![vec![0.3, 0.1]], dr: vec![0.5] };
        let r = simulate(&b, &sc, &st, &plan).unwrap();

        let coeffs = thermal_coeffs(&b).unwrap();
        let (cz, _) = supply_co2(0.5, 400.0, &plan.flows[0], &st.co2);
        let expect_t = thermal_step(&coeffs, &st.temps, &plan.flows[0], 32.0, &[0.0, 0.7]);
        let expect_c0 = co2_step(&b.zones[0], 500.0, 0.3, cz, 5, 40.0, 1800.0);
        let p = power(&b.ahu, 0.5, &plan.flows[0], &st.temps, 32.0);

        assert_relative_eq!(r.supply_co2[0], cz, max_relative = 1e-12);
        assert_relative_eq!(r.temps[1][0], expect_t[0], max_relative = 1e-12);
        assert_relative_eq!(r.temps[1][1], expect_t[1], max_relative = 1e-12);
        assert_relative_eq!(r.co2[1][0], expect_c0, max_relative = 1e-12);
        assert_relative_eq!(r.p_cool[0], p.cooling, max_relative = 1e-12);
        assert_relative_eq!(r.step_cost[0], 0.2 * p.total() * 0.5, max_relative = 1e-12);
    }

    #[test]
    fn total_cost_is_sum_of_steps() {
        let b = building(3);
        let sc = scenario(&b, 10);
        let plan = ControlPlan {
            flows: vec![vec![0.2, 0.3, 0.1], vec![0.4, 0.0, 0.2], vec![0.1, 0.1, 0.1]],
            dr: vec![0.5, 0.8, 0.2],
        };
        let r = simulate(&b, &sc, &state(&b), &plan).unwrap();
        let sum: f64 = r.step_cost.iter().sum();
        assert_relative_eq!(r.total_cost, sum, max_relative = 1e-12);
    }

    #[test]
    fn rollout_is_deterministic() {
        let b = building(3);
        let sc = scenario(&b, 10);
        let plan = ControlPlan {
            flows: vec![vec![0.21, 0.33, 0.11]; 6],
            dr: vec![0.47; 6],
        };
        let a = simulate(&b, &sc, &state(&b), &plan).unwrap();
        let c = simulate(&b, &sc, &state(&b), &plan).unwrap();
        assert_eq!(a.temps, c.temps);
        assert_eq!(a.co2, c.co2);
        assert_eq!(a.step_cost, c.step_cost);
    }

    #[test]
    fn overlong_plan_rejected() {
        let b = building(1);
        let sc = scenario(&b, 3);
        let plan = ControlPlan { flows: vec![vec![0.1]; 4], dr: vec![0.5; 4] };
        assert!(simulate(&b, &sc, &state(&b), &plan).is_err());
    }

    #[test]
    fn comfort_summary_hand_values() {
        let b = building(1);
        // One sample 0.81 over the max for one 810 s step.
        let mut bb = b.clone();
        bb.horizon.step_seconds = 810.0;
        let report = RunReport {
            temps: vec![vec![25.0], vec![26.81]],
            co2: vec![vec![500.0], vec![810.0]],
            dr: vec![0.5],
            ..Default::default()
        };
        let s = check_comfort(&report, &bb, 0.05);
        assert_relative_eq!(s.max_temp_above, 0.81, max_relative = 1e-12);
        assert_relative_eq!(s.integrated_temp_violation, 0.81 * 810.0 / 3600.0, max_relative = 1e-12);
        assert_relative_eq!(s.max_co2_above, 10.0, max_relative = 1e-12);
        assert!(!s.temp_ok);
        assert!(!s.co2_ok);
    }

    #[test]
    fn comfort_boundary_within_tolerance() {
        let b = building(1);
        let report = RunReport {
            temps: vec![vec![25.0], vec![26.0]],
            co2: vec![vec![500.0], vec![800.0]],
            dr: vec![0.5],
            ..Default::default()
        };
        let s = check_comfort(&report, &b, 0.05);
        assert!(s.temp_ok && s.co2_ok);
        assert_relative_eq!(s.max_co2, 800.0);
    }

    proptest! {
        /// Zone CO2 can never fall below the running minimum of outdoor CO2:
        /// every update is a convex combination of zone and supply air plus
        /// non-negative generation, and supply mixes outdoor with return air.
        #[test]
        fn co2_floor_respects_outdoor_minimum(
            seed_flows in proptest::collection::vec(0.0f64..0.5, 24),
            seed_dr in proptest::collection::vec(0.0f64..=0.8, 8),
            seed_out in proptest::collection::vec(380.0f64..450.0, 8),
            c0 in 450.0f64..900.0,
        ) {
            let b = building(3);
            let mut sc = scenario(&b, 8);
            sc.outdoor_co2 = seed_out.clone();
            let mut flows = Vec::new();
            for k in 0..8 {
                flows.push(vec![seed_flows[3 * (k % 8)], seed_flows[3 * (k % 8) + 1], seed_flows[3 * (k % 8) + 2]]);
            }
            let plan = ControlPlan { flows, dr: seed_dr };
            let mut st = state(&b);
            st.co2 = vec![c0; 3];
            let r = simulate(&b, &sc, &st, &plan).unwrap();
            let mut running_min = f64::INFINITY;
            for k in 0..8 {
                running_min = running_min.min(sc.outdoor_co2[k]).min(c0);
                for i in 0..3 {
                    prop_assert!(r.co2[k + 1][i] >= running_min - 1e-9);
                }
            }
        }
    }
}
