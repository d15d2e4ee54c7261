//! Zone-level plant model: RC thermal network, well-mixed CO2 balances and
//! AHU power/cost accounting.
//!
//! Unit conventions used across the crate:
//!
//! - temperature        deg C
//! - heat capacity      kJ/K          (lumped zone capacitance)
//! - thermal resistance K/kW          (wall/partition conductances are 1/R)
//! - mass flow          kg/s          (per-zone supply air)
//! - specific heat      kJ/(kg K)
//! - power              kW, energy kWh
//! - CO2                ppm on a mass basis: 1 g CO2 per kg air = 1000 ppm
//! - CO2 generation     g/h per occupant
//! - price              currency per kWh
//!
//! Dynamics advance with an explicit step of `step_seconds`; costs integrate
//! with the step expressed in hours.

mod co2;
mod power;
mod simulate;
mod thermal;

pub use co2::{co2_step, supply_co2};
pub use power::{power, step_cost, PowerSplit};
pub(crate) use simulate::rollout;
pub use simulate::{check_comfort, simulate, ComfortSummary, EpochStats, RunReport};
pub use thermal::{thermal_coeffs, thermal_step, ThermalCoeffs};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// MPC timing: one plant step per `step_seconds`, plans span `horizon_steps`,
/// a closed-loop run executes `day_steps` epochs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HorizonConfig {
    pub step_seconds: f64,
    pub horizon_steps: usize,
    pub day_steps: usize,
}

impl HorizonConfig {
    pub fn step_hours(&self) -> f64 {
        self.step_seconds / 3600.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_seconds.is_finite() && self.step_seconds > 0.0) {
            return Err(Error::Parameter(format!(
                "step_seconds must be positive, got {}",
                self.step_seconds
            )));
        }
        if self.horizon_steps == 0 {
            return Err(Error::Parameter("horizon_steps must be >= 1".into()));
        }
        if self.day_steps == 0 {
            return Err(Error::Parameter("day_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Static parameters of one zone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZoneParams {
    /// Lumped thermal capacitance [kJ/K].
    pub heat_capacity: f64,
    /// Air mass of the zone volume [kg]; divisor of the CO2 balance.
    pub air_mass: f64,
    /// Floor area [m^2]; used by area-based ventilation rules.
    pub area: f64,
    /// Envelope resistance to outdoor air [K/kW].
    pub resistance_to_outside: f64,
    /// Supply flow bounds [kg/s].
    pub flow_min: f64,
    pub flow_max: f64,
    /// Comfort band [deg C].
    pub temp_min: f64,
    pub temp_max: f64,
    /// Indoor CO2 cap [ppm].
    pub co2_max: f64,
}

impl ZoneParams {
    fn validate(&self, step_seconds: f64) -> Result<()> {
        for (name, v) in [
            ("heat_capacity", self.heat_capacity),
            ("air_mass", self.air_mass),
            ("area", self.area),
            ("resistance_to_outside", self.resistance_to_outside),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0 <= self.flow_min && self.flow_min < self.flow_max) {
            return Err(Error::Parameter(format!(
                "flow bounds must satisfy 0 <= min < max, got [{}, {}]",
                self.flow_min, self.flow_max
            )));
        }
        if !(self.temp_min < self.temp_max) {
            return Err(Error::Parameter(format!(
                "temperature band must satisfy min < max, got [{}, {}]",
                self.temp_min, self.temp_max
            )));
        }
        if !(self.co2_max > 0.0) {
            return Err(Error::Parameter(format!(
                "co2_max must be positive, got {}",
                self.co2_max
            )));
        }
        // Explicit-Euler dilution guard: one step may not exchange more air
        // than the zone holds, otherwise the CO2 update can overshoot.
        if self.air_mass < self.flow_max * step_seconds {
            return Err(Error::Stability(format!(
                "air_mass {} kg < flow_max * step = {} kg; shrink the step or the flow cap",
                self.air_mass,
                self.flow_max * step_seconds
            )));
        }
        Ok(())
    }
}

/// Undirected thermal link between two zones.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Partition resistance [K/kW].
    pub resistance: f64,
}

/// Inter-zone adjacency with pairwise partition resistances.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BuildingTopology {
    pub edges: Vec<Edge>,
}

impl BuildingTopology {
    /// Neighbor lists, `neighbors[i]` sorted by zone index.
    pub fn neighbors(&self, n_zones: usize) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); n_zones];
        for e in &self.edges {
            out[e.a].push((e.b, e.resistance));
            out[e.b].push((e.a, e.resistance));
        }
        for list in &mut out {
            list.sort_by_key(|&(j, _)| j);
        }
        out
    }

    fn validate(&self, n_zones: usize) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if e.a >= n_zones || e.b >= n_zones {
                return Err(Error::Parameter(format!(
                    "edge ({}, {}) references a zone out of range (n={n_zones})",
                    e.a, e.b
                )));
            }
            if e.a == e.b {
                return Err(Error::Parameter(format!("edge ({}, {}) is a self-loop", e.a, e.b)));
            }
            if !(e.resistance.is_finite() && e.resistance > 0.0) {
                return Err(Error::Parameter(format!(
                    "edge ({}, {}) resistance must be positive, got {}",
                    e.a, e.b, e.resistance
                )));
            }
            let key = (e.a.min(e.b), e.a.max(e.b));
            if !seen.insert(key) {
                return Err(Error::Parameter(format!(
                    "duplicate edge between zones {} and {}",
                    key.0, key.1
                )));
            }
        }
        Ok(())
    }
}

/// Air-handling-unit parameters shared by all zones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AhuParams {
    /// Supply (coil outlet) temperature T_c [deg C].
    pub supply_temp: f64,
    /// Fan coefficient kappa_f in P_f = kappa_f * (sum flows)^2 [kW/(kg/s)^2].
    pub fan_coeff: f64,
    /// Inverse coefficient of performance of the coil (eta).
    pub cop_inverse: f64,
    /// Duct capacity: per-step cap on the sum of zone flows [kg/s].
    pub total_flow_max: f64,
    /// Recirculation (return-air) fraction bounds and reset decrement.
    pub dr_min: f64,
    pub dr_max: f64,
    pub dr_step: f64,
    /// Specific heat of air c_p [kJ/(kg K)].
    pub specific_heat: f64,
    /// Air density [kg/m^3]; converts volumetric ventilation rates to mass.
    pub air_density: f64,
}

impl AhuParams {
    fn validate(&self) -> Result<()> {
        if !(self.fan_coeff.is_finite() && self.fan_coeff >= 0.0) {
            return Err(Error::Parameter(format!(
                "fan_coeff must be >= 0, got {}",
                self.fan_coeff
            )));
        }
        for (name, v) in [
            ("cop_inverse", self.cop_inverse),
            ("total_flow_max", self.total_flow_max),
            ("specific_heat", self.specific_heat),
            ("air_density", self.air_density),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0 <= self.dr_min && self.dr_min < self.dr_max && self.dr_max <= 1.0) {
            return Err(Error::Parameter(format!(
                "recirculation bounds must satisfy 0 <= min < max <= 1, got [{}, {}]",
                self.dr_min, self.dr_max
            )));
        }
        if !(self.dr_step.is_finite() && self.dr_step > 0.0) {
            return Err(Error::Parameter(format!(
                "dr_step must be positive, got {}",
                self.dr_step
            )));
        }
        Ok(())
    }
}

/// Building = timing + AHU + zones + inter-zone topology.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Building {
    pub horizon: HorizonConfig,
    pub ahu: AhuParams,
    pub zones: Vec<ZoneParams>,
    pub topology: BuildingTopology,
}

impl Building {
    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.horizon.validate()?;
        self.ahu.validate()?;
        if self.zones.is_empty() {
            return Err(Error::Parameter("building needs at least one zone".into()));
        }
        for (i, z) in self.zones.iter().enumerate() {
            z.validate(self.horizon.step_seconds)
                .map_err(|e| Error::Parameter(format!("zone {i}: {e}")))?;
            if self.ahu.supply_temp >= z.temp_min {
                return Err(Error::Parameter(format!(
                    "supply_temp {} must lie below zone {i} temp_min {} (cooling regime)",
                    self.ahu.supply_temp, z.temp_min
                )));
            }
        }
        self.topology.validate(self.zones.len())?;
        // Rejecting an a_self outside (0,1) happens here so that every
        // consumer of a validated Building can step the dynamics safely.
        thermal_coeffs(self)?;
        Ok(())
    }
}

/// Exogenous series for one closed-loop run. Lengths must cover
/// `day_steps + horizon_steps` so the last epoch still sees a full window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    /// Occupant CO2 generation rate C_g [g/h per person].
    pub co2_gen_rate: f64,
    /// Outdoor air temperature [deg C], one entry per step.
    pub outdoor_temp: Vec<f64>,
    /// Outdoor CO2 [ppm], one entry per step.
    pub outdoor_co2: Vec<f64>,
    /// Electricity price [currency/kWh], one entry per step.
    pub price: Vec<f64>,
    /// Occupant head-count per zone per step.
    pub occupancy: Vec<Vec<u32>>,
    /// Internal heat gain per zone per step [kW] (occupants + equipment).
    pub internal_gain: Vec<Vec<f64>>,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.outdoor_temp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outdoor_temp.is_empty()
    }

    pub fn validate(&self, building: &Building) -> Result<()> {
        let need = building.horizon.day_steps + building.horizon.horizon_steps;
        let n = self.len();
        if n < need {
            return Err(Error::Input(format!(
                "scenario length {n} < day_steps + horizon_steps = {need}"
            )));
        }
        if !(self.co2_gen_rate.is_finite() && self.co2_gen_rate >= 0.0) {
            return Err(Error::Input(format!(
                "co2_gen_rate must be >= 0, got {}",
                self.co2_gen_rate
            )));
        }
        for (name, s) in [("outdoor_co2", &self.outdoor_co2), ("price", &self.price)] {
            if s.len() != n {
                return Err(Error::Input(format!("{name} length {} != {n}", s.len())));
            }
            if let Some(v) = s.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::Input(format!("{name} contains invalid value {v}")));
            }
        }
        if self.outdoor_temp.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("outdoor_temp contains a non-finite value".into()));
        }
        let nz = building.n_zones();
        if self.occupancy.len() != nz || self.internal_gain.len() != nz {
            return Err(Error::Input(format!(
                "per-zone series must have {nz} rows, got occupancy {} / internal_gain {}",
                self.occupancy.len(),
                self.internal_gain.len()
            )));
        }
        for i in 0..nz {
            if self.occupancy[i].len() != n || self.internal_gain[i].len() != n {
                return Err(Error::Input(format!("zone {i} series length != {n}")));
            }
            if self.internal_gain[i].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Input(format!("zone {i} internal_gain has invalid value")));
            }
        }
        Ok(())
    }
}

/// Measured plant state at the start of an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub temps: Vec<f64>,
    pub co2: Vec<f64>,
    /// Index into the scenario series.
    pub time_index: usize,
}

impl PlantState {
    pub fn validate(&self, building: &Building) -> Result<()> {
        let nz = building.n_zones();
        if self.temps.len() != nz || self.co2.len() != nz {
            return Err(Error::Input(format!(
                "state must have {nz} temps and co2 entries, got {} / {}",
                self.temps.len(),
                self.co2.len()
            )));
        }
        if self.temps.iter().chain(self.co2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("state contains a non-finite value".into()));
        }
        if self.co2.iter().any(|v| *v < 0.0) {
            return Err(Error::Input("state CO2 must be non-negative".into()));
        }
        Ok(())
    }
}

/// Open-loop control sequence: `flows[k][i]` is zone i's supply flow at step
/// k [kg/s], `dr[k]` the recirculation fraction at step k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub flows: Vec<Vec<f64>>,
    pub dr: Vec<f64>,
}

impl ControlPlan {
    pub fn len(&self) -> usize {
        self.dr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dr.is_empty()
    }

    /// Bounds check against the building. `tol` absorbs solver round-off on
    /// the box and capacity constraints (executed plans pass `tol = 1e-9`
    /// after exact projection; raw solver output may carry more slack).
    pub fn validate(&self, building: &Building, tol: f64) -> Result<()> {
        if self.flows.len() != self.dr.len() {
            return Err(Error::Input(format!(
                "plan has {} flow steps but {} dr steps",
                self.flows.len(),
                self.dr.len()
            )));
        }
        for (k, (flows, &dr)) in self.flows.iter().zip(&self.dr).enumerate() {
            if flows.len() != building.n_zones() {
                return Err(Error::Input(format!(
                    "step {k}: {} flows for {} zones",
                    flows.len(),
                    building.n_zones()
                )));
            }
            if !(dr >= building.ahu.dr_min - tol && dr <= building.ahu.dr_max + tol) {
                return Err(Error::Input(format!(
                    "step {k}: dr {dr} outside [{}, {}]",
                    building.ahu.dr_min, building.ahu.dr_max
                )));
            }
            let mut total = 0.0;
            for (i, (&m, z)) in flows.iter().zip(&building.zones).enumerate() {
                if !(m.is_finite() && m >= z.flow_min - tol && m <= z.flow_max + tol) {
                    return Err(Error::Input(format!(
                        "step {k} zone {i}: flow {m} outside [{}, {}]",
                        z.flow_min, z.flow_max
                    )));
                }
                total += m;
            }
            if total > building.ahu.total_flow_max + tol {
                return Err(Error::Input(format!(
                    "step {k}: total flow {total} exceeds duct capacity {}",
                    building.ahu.total_flow_max
                )));
            }
        }
        Ok(())
    }
}

/// Coefficients of the per-zone decoupled CO2 recursion
/// `C(k+1) = C(k) + e(k) m(k) + f(k) z(k) + g(k)`,
/// where `z` stands in for the flow*CO2 product.
#[derive(Debug, Clone)]
pub struct Co2Coeffs {
    /// ppm per (kg/s): supply-estimate term, `e(k) = Cz(k) * dt / air_mass`.
    pub e: Vec<f64>,
    /// ppm per (ppm kg/s): product term, `f(k) = -dt / air_mass` (constant over k).
    pub f: f64,
    /// ppm: occupant generation, `g(k) = occupants(k) * C_g * dt_hours / air_mass * 1000`.
    pub g: Vec<f64>,
}
