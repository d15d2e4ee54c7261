//! File exchange: structured text for buildings and scenarios, CSV exports
//! for trajectories and method comparisons, and a line-oriented progress log.
//!
//! All numeric output goes through Rust's default float formatting (the
//! shortest representation that round-trips), so repeated runs over the same
//! values produce byte-identical files. Wall-clock timings never enter the
//! trajectory CSV or the progress log; the comparison table includes them
//! only on request.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Building, PlantState, RunReport, Scenario};

/// Serializes a building description to structured text.
pub fn building_to_toml(building: &Building) -> Result<String> {
    toml::to_string_pretty(building)
        .map_err(|e| Error::Input(format!("building serialization: {e}")))
}

/// Parses and validates a building description.
pub fn building_from_toml(text: &str) -> Result<Building> {
    let building: Building =
        toml::from_str(text).map_err(|e| Error::Input(format!("building parse: {e}")))?;
    building.validate()?;
    Ok(building)
}

/// Serializes a scenario to structured text.
pub fn scenario_to_toml(scenario: &Scenario) -> Result<String> {
    toml::to_string_pretty(scenario)
        .map_err(|e| Error::Input(format!("scenario serialization: {e}")))
}

/// Parses a scenario. Validation against a building happens separately,
/// once both files are loaded.
pub fn scenario_from_toml(text: &str) -> Result<Scenario> {
    toml::from_str(text).map_err(|e| Error::Input(format!("scenario parse: {e}")))
}

pub fn write_building(path: &Path, building: &Building) -> Result<()> {
    fs::write(path, building_to_toml(building)?)?;
    Ok(())
}

pub fn read_building(path: &Path) -> Result<Building> {
    building_from_toml(&fs::read_to_string(path)?)
}

pub fn write_scenario(path: &Path, scenario: &Scenario) -> Result<()> {
    fs::write(path, scenario_to_toml(scenario)?)?;
    Ok(())
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    scenario_from_toml(&fs::read_to_string(path)?)
}

pub fn write_initial_state(path: &Path, state: &PlantState) -> Result<()> {
    let text = toml::to_string_pretty(state)
        .map_err(|e| Error::Input(format!("initial-state serialization: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

/// Parses an initial plant state. Validation against a building happens
/// separately, once both files are loaded.
pub fn read_initial_state(path: &Path) -> Result<PlantState> {
    toml::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::Input(format!("initial-state parse: {e}")))
}

/// Trajectory export: one row per (executed step, zone).
///
/// `time_index` is the scenario step whose control the row describes;
/// `temp_C` and `co2_ppm` are the zone state that control produced at the
/// end of the step (the values the controller is accountable for). The AHU
/// columns (`dr`, powers, price, cost) repeat across a step's zone rows.
pub fn run_report_csv(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str("time_index,zone,temp_C,co2_ppm,flow_kg_s,dr,P_c_kW,P_f_kW,price,step_cost\n");
    let zones = report.temps.first().map_or(0, Vec::len);
    for k in 0..report.n_steps() {
        for i in 0..zones {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                report.start_index + k,
                i,
                report.temps[k + 1][i],
                report.co2[k + 1][i],
                report.flows[k][i],
                report.dr[k],
                report.p_cool[k],
                report.p_fan[k],
                report.price[k],
                report.step_cost[k],
            );
        }
    }
    out
}

/// One method's line in the comparison table.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub method: String,
    pub cost: f64,
    pub max_co2_ppm: f64,
    /// Worst band violation over executed steps, either side [deg C].
    pub max_temp_violation_c: f64,
    /// Mean epoch wall time [ms]; absent when timing is suppressed or the
    /// report carries no epoch statistics.
    pub mean_epoch_ms: Option<f64>,
}

/// Summarizes a run for the comparison table.
pub fn comparison_row(
    method: &str,
    building: &Building,
    report: &RunReport,
    include_timing: bool,
) -> ComparisonRow {
    let mut max_co2 = f64::NEG_INFINITY;
    let mut max_violation = 0.0f64;
    for sample in 1..report.temps.len() {
        for (i, zone) in building.zones.iter().enumerate() {
            let t = report.temps[sample][i];
            max_violation = max_violation.max(t - zone.temp_max).max(zone.temp_min - t);
            max_co2 = max_co2.max(report.co2[sample][i]);
        }
    }
    if !max_co2.is_finite() {
        max_co2 = 0.0;
    }
    let mean_epoch_ms = if include_timing && !report.epochs.is_empty() {
        Some(report.epochs.iter().map(|e| e.wall_ms).sum::<f64>() / report.epochs.len() as f64)
    } else {
        None
    };
    ComparisonRow {
        method: method.to_string(),
        cost: report.total_cost,
        max_co2_ppm: max_co2,
        max_temp_violation_c: max_violation,
        mean_epoch_ms,
    }
}

/// Renders the comparison table. With `include_timing` unset the timing
/// column is omitted entirely, keeping the file reproducible run to run.
pub fn comparison_csv(rows: &[ComparisonRow], include_timing: bool) -> String {
    let mut out = String::new();
    if include_timing {
        out.push_str("method,cost,max_co2_ppm,max_temp_violation_C,mean_epoch_ms\n");
    } else {
        out.push_str("method,cost,max_co2_ppm,max_temp_violation_C\n");
    }
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{}",
            row.method, row.cost, row.max_co2_ppm, row.max_temp_violation_c
        );
        if include_timing {
            match row.mean_epoch_ms {
                Some(ms) => {
                    let _ = write!(out, ",{ms}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Per-epoch solver progress as `key=value` lines (no wall-clock entries,
/// so files are reproducible). The recirculation profile is the epoch's
/// final planning-window decision.
pub fn progress_log(report: &RunReport) -> String {
    let mut out = String::new();
    for e in &report.epochs {
        let dr: Vec<String> = e.dr_plan.iter().map(f64::to_string).collect();
        let _ = writeln!(
            out,
            "step={} l={} llc={} floor={} fallback={} converged={} \
             ulc_inner={} llc_inner={} llc_outer={} coupling={} supply={} dr=[{}]",
            e.step,
            e.dr_iterations,
            e.llc_invoked,
            e.dr_floor_hit,
            e.fallback,
            e.converged,
            e.ulc_inner_iterations,
            e.llc_inner_iterations,
            e.llc_outer_iterations,
            e.coupling_residual,
            e.supply_residual,
            dr.join(","),
        );
    }
    out
}
