//! Discrete RC thermal network.
//!
//! One explicit step of the zone energy balance:
//!
//! ```text
//! T_i(k+1) = a_ii T_i(k) + sum_j a_ij T_j(k) + c_i m_i(k) (T_i(k) - T_c) + d_i(k)
//!
//! a_ij = dt / (R_ij C_i)                        (neighbor conductance)
//! a_ii = 1 - sum_j a_ij - dt / (R_oi C_i)       (self coefficient)
//! c_i  = -dt c_p / C_i                          (flow cooling, T_c < T_i)
//! d_i(k) = dt T_out(k) / (C_i R_oi) + dt Q_i(k) / C_i
//! ```
//!
//! with C_i in kJ/K, resistances in K/kW, flows in kg/s and dt in seconds.
//! The bilinear term uses the zone's own temperature: supply air enters at
//! T_c and leaves at T_i.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Building;

/// Precomputed coefficients of the thermal step.
#[derive(Debug, Clone)]
pub struct ThermalCoeffs {
    /// Dense inter-zone matrix `a` (diagonal holds a_ii).
    pub a: DMatrix<f64>,
    /// Flow cooling coefficient c_i per zone [K per (kg/s * K)].
    pub c_flow: DVector<f64>,
    /// dt / (C_i R_oi): multiplies outdoor temperature in d_i.
    pub outdoor_coef: DVector<f64>,
    /// dt / C_i: multiplies internal gain [K/kW] in d_i.
    pub gain_coef: DVector<f64>,
    /// Supply temperature T_c [deg C].
    pub supply_temp: f64,
}

impl ThermalCoeffs {
    pub fn n_zones(&self) -> usize {
        self.c_flow.len()
    }

    /// Offset d(k) for given outdoor temperature and per-zone gains [kW].
    pub fn offset(&self, t_out: f64, gains: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n_zones(), |i, _| {
            self.outdoor_coef[i] * t_out + self.gain_coef[i] * gains[i]
        })
    }
}

/// Builds the step coefficients, rejecting discretizations whose self
/// coefficient leaves (0,1): such a step can oscillate or diverge.
pub fn thermal_coeffs(building: &Building) -> Result<ThermalCoeffs> {
    let n = building.n_zones();
    let dt = building.horizon.step_seconds;
    let mut a = DMatrix::zeros(n, n);
    for e in &building.topology.edges {
        a[(e.a, e.b)] = dt / (e.resistance * building.zones[e.a].heat_capacity);
        a[(e.b, e.a)] = dt / (e.resistance * building.zones[e.b].heat_capacity);
    }
    for (i, z) in building.zones.iter().enumerate() {
        let row_sum: f64 = (0..n).map(|j| a[(i, j)]).sum();
        let a_ii = 1.0 - row_sum - dt / (z.heat_capacity * z.resistance_to_outside);
        if !(0.0 < a_ii && a_ii < 1.0) {
            return Err(Error::Stability(format!(
                "zone {i}: self coefficient {a_ii:.4} outside (0,1); \
                 shrink the step or check resistances"
            )));
        }
        a[(i, i)] = a_ii;
    }
    let c_flow = DVector::from_fn(n, |i, _| {
        -dt * building.ahu.specific_heat / building.zones[i].heat_capacity
    });
    let outdoor_coef = DVector::from_fn(n, |i, _| {
        dt / (building.zones[i].heat_capacity * building.zones[i].resistance_to_outside)
    });
    let gain_coef = DVector::from_fn(n, |i, _| dt / building.zones[i].heat_capacity);
    Ok(ThermalCoeffs {
        a,
        c_flow,
        outdoor_coef,
        gain_coef,
        supply_temp: building.ahu.supply_temp,
    })
}

/// Advances all zone temperatures by one step.
pub fn thermal_step(
    coeffs: &ThermalCoeffs,
    temps: &[f64],
    flows: &[f64],
    t_out: f64,
    gains: &[f64],
) -> Vec<f64> {
    let n = coeffs.n_zones();
    debug_assert_eq!(temps.len(), n);
    debug_assert_eq!(flows.len(), n);
    let t = DVector::from_column_slice(temps);
    let mut next = &coeffs.a * &t + coeffs.offset(t_out, gains);
    for i in 0..n {
        next[i] += coeffs.c_flow[i] * flows[i] * (temps[i] - coeffs.supply_temp);
    }
    next.data.into()
}
