//! Command-line front end: scenario generation, single-method closed-loop
//! runs, multi-method comparisons, DCV calibration, and the brute-force
//! optimality oracle.
//!
//! Exit codes: 0 success, 2 input error, 3 solver non-convergence,
//! 4 comfort/air-quality infeasibility.
//!
//! All file outputs are reproducible: trajectory CSVs and progress logs
//! carry no wall-clock data, and the comparison table includes timing only
//! without `--no-timing`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info, LevelFilter};

use tldm::baselines::{
    brute_force_oracle, calibrate_dcv, DcvConfig, DcvController, DcvVariant, FixedVentController,
};
use tldm::error::Error;
use tldm::io::{
    comparison_csv, comparison_row, progress_log, read_building, read_initial_state,
    read_scenario, run_report_csv, write_building, write_initial_state, write_scenario,
    ComparisonRow,
};
use tldm::model::{check_comfort, simulate, Building, PlantState, RunReport, Scenario};
use tldm::scenario::{benchmark5, office, GeneratedCase};
use tldm::tldm::{mpc_run, EpochController, TldmConfig, TldmController};

const EXIT_INPUT: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "hvac-mpc",
    version,
    about = "Multi-zone HVAC control: comfort-optimal flows with CO2-driven ventilation reset",
    after_help = "Exit codes: 0 success, 2 input error, 3 solver non-convergence, \
                  4 comfort infeasibility."
)]
struct Cli {
    /// Stderr log verbosity.
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    log_level: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

impl From<LogLevel> for LevelFilter {
    fn from(level: LogLevel) -> LevelFilter {
        match level {
            LogLevel::Error => LevelFilter::Error,
            LogLevel::Warn => LevelFilter::Warn,
            LogLevel::Info => LevelFilter::Info,
            LogLevel::Debug => LevelFilter::Debug,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a building + scenario + initial-state file set.
    GenScenario {
        /// Case family: the five-zone reference ring, or a randomized
        /// office building.
        #[arg(long, value_enum, default_value_t = Profile::Benchmark5)]
        profile: Profile,
        /// Zone count (office profile; the reference case is always 5).
        #[arg(long, default_value_t = 5)]
        zones: usize,
        /// Seed for every random draw the generator makes.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one control method over a full closed-loop day.
    Run {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, value_enum)]
        method: Method,
        /// Output directory for the trajectory CSV and progress log.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Run several methods and write a comparison table.
    Compare {
        #[command(flatten)]
        case: CaseArgs,
        /// Comma-separated method list.
        #[arg(long, default_value = "tldm,fixed,dcv1,dcv2")]
        methods: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tuning: TuningArgs,
        /// Omit the wall-clock column so outputs are byte-reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Exhaustive discretized optimum on a tiny instance.
    Oracle {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value_t = 21)]
        flow_levels: usize,
        #[arg(long, default_value_t = 11)]
        dr_levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Bisect the per-person fresh-air rate until the day's CO2 peak lands
    /// just under the cap.
    CalibrateDcv {
        #[command(flatten)]
        case: CaseArgs,
        /// 1 = per-person demand only, 2 = per-person + per-area.
        #[arg(long, default_value_t = 1)]
        variant: u8,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
}

#[derive(Args)]
struct CaseArgs {
    /// Building description file.
    #[arg(long)]
    building: PathBuf,
    /// Exogenous-series file.
    #[arg(long)]
    scenario: PathBuf,
    /// Initial plant state file.
    #[arg(long)]
    initial: PathBuf,
}

#[derive(Args)]
struct TuningArgs {
    /// Configuration overrides as key=value (repeatable). Keys:
    /// ahu.{supply_temp,fan_coeff,cop_inverse,total_flow_max,dr_min,dr_max,dr_step},
    /// horizon.{horizon_steps,day_steps}, scenario.co2_gen_rate,
    /// zones.{flow_min,flow_max,temp_min,temp_max,co2_max,heat_capacity,air_mass},
    /// tldm.{dr_init,dr_step,max_dr_iters,temp_tolerance,co2_guard},
    /// ulc.{max_iters,eps_coupling,envelope_pad,repair_tolerance},
    /// llc.{max_iters,eps_coupling,eps_supply,max_outer,precheck_margin},
    /// dcv.{per_person_rate,per_area_rate}
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Benchmark5,
    Office,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Tldm,
    Fixed,
    Dcv1,
    Dcv2,
}

impl Method {
    fn parse_list(list: &str) -> Result<Vec<Method>, Error> {
        let mut methods = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            methods.push(match name {
                "tldm" => Method::Tldm,
                "fixed" => Method::Fixed,
                "dcv1" => Method::Dcv1,
                "dcv2" => Method::Dcv2,
                other => {
                    return Err(Error::Input(format!(
                        "unknown method '{other}' (expected tldm, fixed, dcv1, dcv2)"
                    )))
                }
            });
        }
        if methods.is_empty() {
            return Err(Error::Input("method list is empty".into()));
        }
        Ok(methods)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tldm => "tldm",
            Method::Fixed => "fixed",
            Method::Dcv1 => "dcv1",
            Method::Dcv2 => "dcv2",
        })
    }
}

/// Controller settings assembled from defaults plus `--set` overrides.
struct Knobs {
    tldm: TldmConfig,
    /// DCV fresh-air prescriptions [L/s per person, L/s per m^2].
    dcv_person: f64,
    dcv_area: f64,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs { tldm: TldmConfig::default(), dcv_person: 21.0, dcv_area: 0.03 }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, Error> {
    value
        .parse()
        .map_err(|_| Error::Input(format!("override {key}: '{value}' is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, Error> {
    value
        .parse()
        .map_err(|_| Error::Input(format!("override {key}: '{value}' is not a count")))
}

/// Applies `key=value` overrides to the loaded case and controller knobs.
fn apply_overrides(
    pairs: &[String],
    building: &mut Building,
    scenario: &mut Scenario,
    knobs: &mut Knobs,
) -> Result<(), Error> {
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("override '{pair}' is not key=value")))?;
        let f = || parse_f64(key, value);
        let u = || parse_usize(key, value);
        match key {
            "ahu.supply_temp" => building.ahu.supply_temp = f()?,
            "ahu.fan_coeff" => building.ahu.fan_coeff = f()?,
            "ahu.cop_inverse" => building.ahu.cop_inverse = f()?,
            "ahu.total_flow_max" => building.ahu.total_flow_max = f()?,
            "ahu.dr_min" => building.ahu.dr_min = f()?,
            "ahu.dr_max" => building.ahu.dr_max = f()?,
            "ahu.dr_step" => building.ahu.dr_step = f()?,
            "horizon.horizon_steps" => building.horizon.horizon_steps = u()?,
            "horizon.day_steps" => building.horizon.day_steps = u()?,
            "scenario.co2_gen_rate" => scenario.co2_gen_rate = f()?,
            "zones.flow_min" => {
                let v = f()?;
                building.zones.iter_mut().for_each(|z| z.flow_min = v);
            }
            "zones.flow_max" => {
                let v = f()?;
                building.zones.iter_mut().for_each(|z| z.flow_max = v);
            }
            "zones.temp_min" => {
                let v = f()?;
                building.zones.iter_mut().for_each(|z| z.temp_min = v);
            }
            "zones.temp_max" => {
                let v = f()?;
                building.zones.iter_mut().for_each(|z| z.temp_max = v);
            }
            "zones.co2_max" => {
                let v = f()?;
                building.zones.iter_mut().for_each(|z| z.co2_max = v);
            }
            "zones.heat_capacity" => {
                let v = f()?;
                building.zones.iter_mut().for_each(|z| z.heat_capacity = v);
            }
            "zones.air_mass" => {
                let v = f()?;
                building.zones.iter_mut().for_each(|z| z.air_mass = v);
            }
            "tldm.dr_init" => knobs.tldm.dr_init = Some(f()?),
            "tldm.dr_step" => knobs.tldm.dr_step = Some(f()?),
            "tldm.max_dr_iters" => knobs.tldm.max_dr_iters = u()?,
            "tldm.temp_tolerance" => knobs.tldm.temp_tolerance = f()?,
            "tldm.co2_guard" => knobs.tldm.co2_guard = f()?,
            "ulc.max_iters" => knobs.tldm.ulc.adal.max_iters = u()?,
            "ulc.eps_coupling" => knobs.tldm.ulc.adal.eps_coupling = f()?,
            "ulc.envelope_pad" => knobs.tldm.ulc.envelope_pad = f()?,
            "ulc.repair_tolerance" => knobs.tldm.ulc.repair_tolerance = f()?,
            "llc.max_iters" => knobs.tldm.llc.adal.max_iters = u()?,
            "llc.eps_coupling" => knobs.tldm.llc.adal.eps_coupling = f()?,
            "llc.eps_supply" => knobs.tldm.llc.eps_supply = f()?,
            "llc.max_outer" => knobs.tldm.llc.max_outer = u()?,
            "llc.precheck_margin" => knobs.tldm.llc.precheck_margin = f()?,
            "dcv.per_person_rate" => knobs.dcv_person = f()?,
            "dcv.per_area_rate" => knobs.dcv_area = f()?,
            other => {
                return Err(Error::Input(format!("unknown override key '{other}'")));
            }
        }
    }
    building.validate()?;
    scenario.validate(building)?;
    Ok(())
}

/// Loads the three case files and applies overrides.
fn load_case(
    case: &CaseArgs,
    tuning: &TuningArgs,
) -> Result<(Building, Scenario, PlantState, Knobs), Error> {
    let mut building = read_building(&case.building)?;
    let mut scenario = read_scenario(&case.scenario)?;
    let initial = read_initial_state(&case.initial)?;
    let mut knobs = Knobs::default();
    apply_overrides(&tuning.set, &mut building, &mut scenario, &mut knobs)?;
    initial.validate(&building)?;
    Ok((building, scenario, initial, knobs))
}

fn run_method(
    method: Method,
    building: &Building,
    scenario: &Scenario,
    initial: &PlantState,
    knobs: &Knobs,
) -> Result<RunReport, Error> {
    let steps = building.horizon.day_steps;
    let mut controller: Box<dyn EpochController> = match method {
        Method::Tldm => Box::new(TldmController::new(building, knobs.tldm.clone())?),
        Method::Fixed => Box::new(FixedVentController::new(building, knobs.tldm.ulc.clone())?),
        Method::Dcv1 => Box::new(DcvController::new(
            building,
            DcvConfig::variant_i(knobs.dcv_person),
            knobs.tldm.ulc.clone(),
        )?),
        Method::Dcv2 => Box::new(DcvController::new(
            building,
            DcvConfig::variant_ii(knobs.dcv_person, knobs.dcv_area),
            knobs.tldm.ulc.clone(),
        )?),
    };
    mpc_run(building, scenario, initial, controller.as_mut(), steps)
}

fn write_run_outputs(out: &Path, method: &str, report: &RunReport) -> Result<(), Error> {
    fs::create_dir_all(out)?;
    fs::write(out.join(format!("run_{method}.csv")), run_report_csv(report))?;
    fs::write(out.join(format!("progress_{method}.log")), progress_log(report))?;
    Ok(())
}

/// Deterministic one-line summary on stdout (no wall-clock content).
fn print_summary(method: &str, building: &Building, report: &RunReport) {
    let row = comparison_row(method, building, report, false);
    println!(
        "method={} steps={} cost={} max_co2_ppm={} max_temp_violation_C={}",
        row.method,
        report.n_steps(),
        row.cost,
        row.max_co2_ppm,
        row.max_temp_violation_c
    );
}

fn cmd_gen_scenario(profile: Profile, zones: usize, seed: u64, out: &Path) -> Result<(), Error> {
    let case: GeneratedCase = match profile {
        Profile::Benchmark5 => {
            if zones != 5 {
                return Err(Error::Input(format!(
                    "the reference case has exactly 5 zones (got --zones {zones})"
                )));
            }
            benchmark5(seed)
        }
        Profile::Office => office(zones, seed)?,
    };
    fs::create_dir_all(out)?;
    write_building(&out.join("building.toml"), &case.building)?;
    write_scenario(&out.join("scenario.toml"), &case.scenario)?;
    write_initial_state(&out.join("initial.toml"), &case.initial)?;
    println!(
        "wrote building.toml, scenario.toml, initial.toml for {} zones to {}",
        case.building.n_zones(),
        out.display()
    );
    Ok(())
}

fn cmd_run(
    case: &CaseArgs,
    method: Method,
    out: Option<&Path>,
    tuning: &TuningArgs,
) -> Result<(), Error> {
    let (building, scenario, initial, knobs) = load_case(case, tuning)?;
    info!("running {method} over {} steps", building.horizon.day_steps);
    let start = std::time::Instant::now();
    let report = run_method(method, &building, &scenario, &initial, &knobs)?;
    info!("{method} finished in {:.1} s", start.elapsed().as_secs_f64());
    let name = method.to_string();
    if let Some(dir) = out {
        write_run_outputs(dir, &name, &report)?;
    }
    print_summary(&name, &building, &report);
    Ok(())
}

fn cmd_compare(
    case: &CaseArgs,
    methods: &str,
    out: &Path,
    tuning: &TuningArgs,
    no_timing: bool,
) -> Result<(), u8> {
    let methods = Method::parse_list(methods).map_err(|e| report_error(&e))?;
    let (building, scenario, initial, knobs) =
        load_case(case, tuning).map_err(|e| report_error(&e))?;
    fs::create_dir_all(out).map_err(|e| report_error(&Error::Io(e)))?;

    let mut rows: Vec<ComparisonRow> = Vec::new();
    let mut worst: u8 = 0;
    for method in methods {
        let name = method.to_string();
        info!("running {name}");
        match run_method(method, &building, &scenario, &initial, &knobs) {
            Ok(report) => {
                if let Err(e) = write_run_outputs(out, &name, &report) {
                    return Err(report_error(&e));
                }
                rows.push(comparison_row(&name, &building, &report, !no_timing));
                print_summary(&name, &building, &report);
            }
            Err(e) => {
                error!("{name} failed: {e}");
                worst = worst.max(exit_class(&e));
            }
        }
    }
    let table = comparison_csv(&rows, !no_timing);
    fs::write(out.join("comparison.csv"), table).map_err(|e| report_error(&Error::Io(e)))?;
    if worst != 0 {
        Err(worst)
    } else {
        Ok(())
    }
}

fn cmd_oracle(
    case: &CaseArgs,
    flow_levels: usize,
    dr_levels: usize,
    out: Option<&Path>,
    tuning: &TuningArgs,
) -> Result<(), u8> {
    let (building, scenario, initial, _) = load_case(case, tuning).map_err(|e| report_error(&e))?;
    let report = brute_force_oracle(&building, &scenario, &initial, flow_levels, dr_levels)
        .map_err(|e| report_error(&e))?;
    match report.best {
        Some((plan, cost)) => {
            println!(
                "oracle cost={cost} evaluated={} feasible={}",
                report.evaluated, report.feasible_count
            );
            if let Some(dir) = out {
                let rollout = simulate(&building, &scenario, &initial, &plan)
                    .map_err(|e| report_error(&e))?;
                fs::create_dir_all(dir).map_err(|e| report_error(&Error::Io(e)))?;
                fs::write(dir.join("run_oracle.csv"), run_report_csv(&rollout))
                    .map_err(|e| report_error(&Error::Io(e)))?;
            }
            Ok(())
        }
        None => {
            let e = Error::Infeasible(format!(
                "no feasible plan on the control grid ({} candidates examined)",
                report.evaluated
            ));
            Err(report_error(&e))
        }
    }
}

fn cmd_calibrate(
    case: &CaseArgs,
    variant: u8,
    out: Option<&Path>,
    tuning: &TuningArgs,
) -> Result<(), Error> {
    let variant = match variant {
        1 => DcvVariant::I,
        2 => DcvVariant::II,
        other => {
            return Err(Error::Input(format!("--variant must be 1 or 2, got {other}")));
        }
    };
    let (building, scenario, initial, _) = load_case(case, tuning)?;
    let (cfg, report) = calibrate_dcv(&building, &scenario, &initial, variant)?;
    let comfort = check_comfort(&report, &building, 0.0);
    println!(
        "calibrated per_person_rate={} per_area_rate={} peak_co2_ppm={} cost={}",
        cfg.per_person_rate, cfg.per_area_rate, comfort.max_co2, report.total_cost
    );
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let name = match cfg.variant {
            DcvVariant::I => "dcv1",
            DcvVariant::II => "dcv2",
        };
        write_run_outputs(dir, name, &report)?;
        fs::write(
            dir.join("calibration.toml"),
            format!(
                "variant = {}\nper_person_rate = {}\nper_area_rate = {}\n",
                if cfg.variant == DcvVariant::I { 1 } else { 2 },
                cfg.per_person_rate,
                cfg.per_area_rate
            ),
        )?;
    }
    Ok(())
}

fn exit_class(err: &Error) -> u8 {
    match err {
        Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_INPUT,
    }
}

fn report_error(err: &Error) -> u8 {
    error!("{err}");
    exit_class(err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level.into())
        .format_timestamp(None)
        .init();

    let outcome: Result<(), u8> = match &cli.command {
        Command::GenScenario { profile, zones, seed, out } => {
            cmd_gen_scenario(*profile, *zones, *seed, out).map_err(|e| report_error(&e))
        }
        Command::Run { case, method, out, tuning } => {
            cmd_run(case, *method, out.as_deref(), tuning).map_err(|e| report_error(&e))
        }
        Command::Compare { case, methods, out, tuning, no_timing } => {
            cmd_compare(case, methods, out, tuning, *no_timing)
        }
        Command::Oracle { case, flow_levels, dr_levels, out, tuning } => {
            cmd_oracle(case, *flow_levels, *dr_levels, out.as_deref(), tuning)
        }
        Command::CalibrateDcv { case, variant, out, tuning } => {
            cmd_calibrate(case, *variant, out.as_deref(), tuning).map_err(|e| report_error(&e))
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
