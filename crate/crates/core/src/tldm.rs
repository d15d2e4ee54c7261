//! Two-level epoch planning and the receding-horizon loop.
//!
//! Each epoch plans over the window `[t, t+H)` in up to `max_dr_iters`
//! ventilation-reset rounds:
//!
//! 1. solve the comfort problem at the current recirculation profile `dr`;
//! 2. roll the exact CO2 dynamics under the comfort flows: if every zone
//!    stays `co2_guard` below its cap, accept the comfort plan;
//! 3. otherwise solve the ventilation problem above the comfort flows; if
//!    the raised flows keep every zone at or above `temp_min - tol` on the
//!    exact thermal rollout, accept;
//! 4. otherwise lower `dr(k)` by `dr_step` on exactly the steps whose
//!    successor state violates (more fresh air shrinks the flow increase the
//!    caps demand), clamp at `dr_min`, and repeat.
//!
//! When every violating step already sits at `dr_min` the epoch keeps the
//! best plan it has and reports the residual violation instead of looping.
//! The receding-horizon harness executes the first planned step on the
//! exact plant, records per-epoch statistics, and falls back to the
//! previous epoch's shifted plan when an epoch fails outright.

use std::time::Instant;

use crate::adal::AdalState;
use crate::error::{Error, Result};
use crate::llc::{needs_llc, solve_llc, LlcOutcome, LlcWarm};
use crate::model::{
    rollout, thermal_coeffs, Building, ControlPlan, EpochStats, PlantState, RunReport, Scenario,
    ThermalCoeffs,
};
use crate::ulc::{solve_ulc, UlcConfig};

/// Tuning of the two-level epoch.
#[derive(Debug, Clone)]
pub struct TldmConfig {
    pub ulc: UlcConfig,
    pub llc: crate::llc::LlcConfig,
    /// Starting recirculation each epoch; defaults to the AHU maximum.
    pub dr_init: Option<f64>,
    /// Ventilation decrement per reset round; defaults to the AHU step.
    pub dr_step: Option<f64>,
    /// Bound on reset rounds per epoch.
    pub max_dr_iters: usize,
    /// Allowed undershoot below `temp_min` on the exact rollout [degC].
    pub temp_tolerance: f64,
    /// Clearance below the CO2 caps that skips the ventilation solve [ppm].
    pub co2_guard: f64,
    /// Carry coordination states across rounds and epochs.
    pub warm_start: bool,
}

impl Default for TldmConfig {
    fn default() -> Self {
        TldmConfig {
            ulc: UlcConfig::default(),
            llc: crate::llc::LlcConfig::default(),
            dr_init: None,
            dr_step: None,
            max_dr_iters: 40,
            temp_tolerance: 0.05,
            co2_guard: 5.0,
            warm_start: true,
        }
    }
}

/// Coordination state carried between solves.
#[derive(Debug, Clone, Default)]
pub struct TldmWarm {
    pub ulc: Option<AdalState>,
    pub llc: Option<LlcWarm>,
}

/// Accepted plan of one epoch plus its solver statistics.
#[derive(Debug, Clone)]
pub struct EpochResult {
    /// Plan over the full window; the harness executes step 0.
    pub plan: ControlPlan,
    /// Ventilation-reset rounds run (0 means the first profile stood).
    pub l_iterations: usize,
    pub llc_invoked: bool,
    /// Every violating step reached `dr_min` while violations persisted.
    pub dr_floor_hit: bool,
    /// Deepest exact-rollout undershoot below `temp_min - tol` [degC];
    /// 0 for a clean plan.
    pub residual_temp_violation: f64,
    /// Largest unresolvable CO2 cap excess [ppm]; 0 for a clean plan.
    pub residual_co2_excess: f64,
    /// Comfort-coordination iterations summed over the reset rounds.
    pub ulc_inner_iterations: usize,
    /// Ventilation-coordination iterations summed over the reset rounds.
    pub llc_inner_iterations: usize,
    /// Supply fixed-point iterations of the last ventilation solve.
    pub llc_outer_iterations: usize,
    /// Coupling residual of the last coordination solve that produced the
    /// plan.
    pub coupling_residual: f64,
    /// Supply-series movement of the last ventilation solve [ppm].
    pub supply_residual: f64,
    /// All participating solves met their tolerances.
    pub converged: bool,
}

/// Plans one epoch; any controller usable by the receding-horizon harness.
pub trait EpochController {
    fn plan_epoch(
        &mut self,
        building: &Building,
        scenario: &Scenario,
        state: &PlantState,
    ) -> Result<EpochResult>;
}

/// Runs Algorithm steps 1-6 for the window starting at `state.time_index`.
pub fn tldm_epoch(
    building: &Building,
    coeffs: &ThermalCoeffs,
    scenario: &Scenario,
    state: &PlantState,
    cfg: &TldmConfig,
    warm: &mut TldmWarm,
) -> Result<EpochResult> {
    let h = building.horizon.horizon_steps;
    let ahu = &building.ahu;
    let dr_init = cfg.dr_init.unwrap_or(ahu.dr_max);
    if !(dr_init >= ahu.dr_min - 1e-12 && dr_init <= ahu.dr_max + 1e-12) {
        return Err(Error::Parameter(format!(
            "dr_init {dr_init} outside [{}, {}]",
            ahu.dr_min, ahu.dr_max
        )));
    }
    let dr_step = cfg.dr_step.unwrap_or(ahu.dr_step);
    if !(dr_step > 0.0) {
        return Err(Error::Parameter(format!("dr_step must be positive, got {dr_step}")));
    }

    let mut dr = vec![dr_init; h];
    let mut ulc_inner = 0;
    let mut llc_inner = 0;
    let mut llc_ran = false;
    for l in 0..cfg.max_dr_iters {
        let ulc = solve_ulc(building, coeffs, scenario, state, &dr, &cfg.ulc, warm.ulc.as_ref())?;
        ulc_inner += ulc.iterations;
        if cfg.warm_start {
            warm.ulc = Some(ulc.state.clone());
        }

        let (triggered, _) =
            needs_llc(building, scenario, state, &ulc.flows, &dr, cfg.co2_guard);
        if !triggered {
            return Ok(EpochResult {
                plan: ControlPlan { flows: ulc.flows, dr },
                l_iterations: l,
                llc_invoked: llc_ran,
                dr_floor_hit: false,
                residual_temp_violation: 0.0,
                residual_co2_excess: 0.0,
                ulc_inner_iterations: ulc_inner,
                llc_inner_iterations: llc_inner,
                llc_outer_iterations: 0,
                coupling_residual: ulc.residual,
                supply_residual: 0.0,
                converged: ulc.converged,
            });
        }

        llc_ran = true;
        let outcome = solve_llc(
            building,
            scenario,
            state,
            &ulc.flows,
            &dr,
            &cfg.llc,
            warm.llc.as_ref(),
        )?;
        match outcome {
            LlcOutcome::Solved(res) => {
                if cfg.warm_start {
                    warm.llc =
                        Some(LlcWarm { supply: res.supply_co2.clone(), adal: res.state.clone() });
                }
                llc_inner += res.inner_iterations;
                let plan = ControlPlan { flows: res.flows.clone(), dr: dr.clone() };
                let temps = rollout(building, coeffs, scenario, state, &plan).temps;
                let mut violating = Vec::new();
                let mut worst: f64 = 0.0;
                for k in 0..h {
                    let mut depth: f64 = 0.0;
                    for (i, zone) in building.zones.iter().enumerate() {
                        depth = depth
                            .max(zone.temp_min - cfg.temp_tolerance - temps[k + 1][i]);
                    }
                    if depth > 0.0 {
                        violating.push(k);
                        worst = worst.max(depth);
                    }
                }
                if violating.is_empty() {
                    return Ok(EpochResult {
                        plan,
                        l_iterations: l,
                        llc_invoked: true,
                        dr_floor_hit: false,
                        residual_temp_violation: 0.0,
                        residual_co2_excess: res.max_recovered_excess,
                        ulc_inner_iterations: ulc_inner,
                        llc_inner_iterations: llc_inner,
                        llc_outer_iterations: res.outer_iterations,
                        coupling_residual: res.residual,
                        supply_residual: res.supply_gap,
                        converged: ulc.converged && res.converged,
                    });
                }
                let room: Vec<usize> = violating
                    .iter()
                    .copied()
                    .filter(|&k| dr[k] > ahu.dr_min + 1e-12)
                    .collect();
                if room.is_empty() {
                    // Physical floor: keep the ventilation plan, report the
                    // undershoot.
                    return Ok(EpochResult {
                        plan,
                        l_iterations: l,
                        llc_invoked: true,
                        dr_floor_hit: true,
                        residual_temp_violation: worst,
                        residual_co2_excess: res.max_recovered_excess,
                        ulc_inner_iterations: ulc_inner,
                        llc_inner_iterations: llc_inner,
                        llc_outer_iterations: res.outer_iterations,
                        coupling_residual: res.residual,
                        supply_residual: res.supply_gap,
                        converged: false,
                    });
                }
                for k in room {
                    dr[k] = (dr[k] - dr_step).max(ahu.dr_min);
                }
            }
            LlcOutcome::InfeasibleAtDr(inf) => {
                let witnesses: Vec<usize> = if inf.violating_steps.is_empty() {
                    (0..h).collect()
                } else {
                    inf.violating_steps.clone()
                };
                let room: Vec<usize> = witnesses
                    .iter()
                    .copied()
                    .filter(|&k| dr[k] > ahu.dr_min + 1e-12)
                    .collect();
                if room.is_empty() {
                    // Even all-fresh air cannot meet the caps: keep the
                    // comfort plan and report the excess.
                    return Ok(EpochResult {
                        plan: ControlPlan { flows: ulc.flows, dr },
                        l_iterations: l,
                        llc_invoked: true,
                        dr_floor_hit: true,
                        residual_temp_violation: 0.0,
                        residual_co2_excess: inf.max_excess_ppm,
                        ulc_inner_iterations: ulc_inner,
                        llc_inner_iterations: llc_inner,
                        llc_outer_iterations: 0,
                        coupling_residual: ulc.residual,
                        supply_residual: 0.0,
                        converged: false,
                    });
                }
                for k in room {
                    dr[k] = (dr[k] - dr_step).max(ahu.dr_min);
                }
            }
        }
    }
    Err(Error::NonConvergence(format!(
        "ventilation reset did not settle within {} rounds",
        cfg.max_dr_iters
    )))
}

/// The two-level controller with carried warm starts.
pub struct TldmController {
    pub config: TldmConfig,
    coeffs: ThermalCoeffs,
    warm: TldmWarm,
}

impl TldmController {
    pub fn new(building: &Building, config: TldmConfig) -> Result<Self> {
        building.validate()?;
        Ok(TldmController {
            config,
            coeffs: thermal_coeffs(building)?,
            warm: TldmWarm::default(),
        })
    }
}

impl EpochController for TldmController {
    fn plan_epoch(
        &mut self,
        building: &Building,
        scenario: &Scenario,
        state: &PlantState,
    ) -> Result<EpochResult> {
        tldm_epoch(building, &self.coeffs, scenario, state, &self.config, &mut self.warm)
    }
}

/// Shifts a plan one step forward, repeating the last entry and re-clamping
/// to the actuator boxes and the duct capacity.
fn shift_plan(building: &Building, plan: &ControlPlan) -> ControlPlan {
    let h = plan.flows.len();
    let mut flows: Vec<Vec<f64>> = (1..h).map(|k| plan.flows[k].clone()).collect();
    flows.push(plan.flows[h - 1].clone());
    let mut dr: Vec<f64> = (1..h).map(|k| plan.dr[k]).collect();
    dr.push(plan.dr[h - 1]);
    let ahu = &building.ahu;
    for d in dr.iter_mut() {
        *d = d.clamp(ahu.dr_min, ahu.dr_max);
    }
    for step in flows.iter_mut() {
        for (m, z) in step.iter_mut().zip(&building.zones) {
            *m = m.clamp(z.flow_min, z.flow_max);
        }
        let total: f64 = step.iter().sum();
        if total > ahu.total_flow_max {
            let floor: f64 = building.zones.iter().map(|z| z.flow_min).sum();
            let pool = total - floor;
            if pool > 0.0 {
                let gamma = (ahu.total_flow_max - floor) / pool;
                for (m, z) in step.iter_mut().zip(&building.zones) {
                    *m = z.flow_min + (*m - z.flow_min) * gamma;
                }
            }
        }
    }
    ControlPlan { flows, dr }
}

/// Closed-loop receding-horizon run: `steps` executed plant steps starting
/// at `initial.time_index`, each planned by `controller` and rolled on the
/// exact dynamics. Epoch failures fall back to the previous plan, shifted.
pub fn mpc_run(
    building: &Building,
    scenario: &Scenario,
    initial: &PlantState,
    controller: &mut dyn EpochController,
    steps: usize,
) -> Result<RunReport> {
    building.validate()?;
    initial.validate(building)?;
    scenario.validate(building)?;
    let h = building.horizon.horizon_steps;
    if initial.time_index + steps + h > scenario.len() + 1 {
        return Err(Error::Input(format!(
            "{} steps from {} need scenario length {}, got {}",
            steps,
            initial.time_index,
            initial.time_index + steps + h - 1,
            scenario.len()
        )));
    }
    let coeffs = thermal_coeffs(building)?;

    let mut report = RunReport {
        start_index: initial.time_index,
        temps: vec![initial.temps.clone()],
        co2: vec![initial.co2.clone()],
        ..RunReport::default()
    };
    let mut state = initial.clone();
    let mut prev_plan: Option<ControlPlan> = None;
    for step in 0..steps {
        let started = Instant::now();
        let (plan, mut stats) = match controller.plan_epoch(building, scenario, &state) {
            Ok(epoch) => {
                let stats = EpochStats {
                    step: state.time_index,
                    dr_iterations: epoch.l_iterations,
                    llc_invoked: epoch.llc_invoked,
                    ulc_inner_iterations: epoch.ulc_inner_iterations,
                    llc_inner_iterations: epoch.llc_inner_iterations,
                    llc_outer_iterations: epoch.llc_outer_iterations,
                    coupling_residual: epoch.coupling_residual,
                    supply_residual: epoch.supply_residual,
                    dr_floor_hit: epoch.dr_floor_hit,
                    fallback: false,
                    converged: epoch.converged,
                    wall_ms: 0.0,
                    dr_plan: epoch.plan.dr.clone(),
                };
                (epoch.plan, stats)
            }
            Err(err) => {
                let Some(prev) = prev_plan.as_ref() else {
                    return Err(err);
                };
                let plan = shift_plan(building, prev);
                let stats = EpochStats {
                    step: state.time_index,
                    fallback: true,
                    converged: false,
                    dr_plan: plan.dr.clone(),
                    ..EpochStats::default()
                };
                (plan, stats)
            }
        };
        stats.wall_ms = started.elapsed().as_secs_f64() * 1e3;

        // Execute the first planned step on the exact plant.
        let one = ControlPlan { flows: vec![plan.flows[0].clone()], dr: vec![plan.dr[0]] };
        let exec = rollout(building, &coeffs, scenario, &state, &one);
        report.temps.push(exec.temps[1].clone());
        report.co2.push(exec.co2[1].clone());
        report.flows.push(exec.flows[0].clone());
        report.dr.push(exec.dr[0]);
        report.supply_co2.push(exec.supply_co2[0]);
        report.p_cool.push(exec.p_cool[0]);
        report.p_fan.push(exec.p_fan[0]);
        report.price.push(exec.price[0]);
        report.step_cost.push(exec.step_cost[0]);
        report.total_cost += exec.total_cost;
        if !exec.clamped_steps.is_empty() {
            report.clamped_steps.push(step);
        }
        if !exec.degenerate_mixing_steps.is_empty() {
            report.degenerate_mixing_steps.push(step);
        }
        report.epochs.push(stats);

        state = PlantState {
            temps: exec.temps[1].clone(),
            co2: exec.co2[1].clone(),
            time_index: state.time_index + 1,
        };
        prev_plan = Some(plan);
    }
    Ok(report)
}
