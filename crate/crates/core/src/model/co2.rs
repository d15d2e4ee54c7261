//! Well-mixed CO2 balances and supply-air mixing.
//!
//! The AHU recirculates a fraction `dr` of the flow-weighted return air and
//! draws the remainder from outside:
//!
//! ```text
//! C_m(k) = sum_i m_i(k) C_i(k) / sum_i m_i(k)
//! C_z(k) = (1 - dr(k)) C_out(k) + dr(k) C_m(k)
//! ```
//!
//! Each zone then exchanges `m_i dt` kg of air at C_z against its own volume
//! and picks up occupant generation:
//!
//! ```text
//! C_i(k+1) = C_i(k) + [ N_i(k) C_g dt_h * 1000  +  m_i(k) (C_z - C_i(k)) dt ] / air_mass
//! ```
//!
//! (grams of CO2 per kg of zone air, expressed in ppm: 1 g/kg = 1000 ppm).

use crate::model::ZoneParams;

/// Total-flow threshold below which return-air mixing is degenerate.
pub const MIXING_FLOW_EPS: f64 = 1e-9;

/// Supply-air CO2 for a given recirculation fraction.
///
/// Returns `(c_z, degenerate)`; with (near-)zero total flow the
/// flow-weighted return mix is undefined, the unweighted mean of zone CO2
/// is substituted and `degenerate` is set.
pub fn supply_co2(dr: f64, outdoor_co2: f64, flows: &[f64], zone_co2: &[f64]) -> (f64, bool) {
    debug_assert_eq!(flows.len(), zone_co2.len());
    let total: f64 = flows.iter().sum();
    let (c_mix, degenerate) = if total <= MIXING_FLOW_EPS {
        let n = zone_co2.len().max(1);
        (zone_co2.iter().sum::<f64>() / n as f64, true)
    } else {
        let weighted: f64 = flows.iter().zip(zone_co2).map(|(m, c)| m * c).sum();
        (weighted / total, false)
    };
    ((1.0 - dr) * outdoor_co2 + dr * c_mix, degenerate)
}

/// One explicit CO2 step for a single zone.
///
/// `co2_gen_rate` is per-occupant generation in g/h; `step_seconds` the
/// plant step. The caller guarantees `flow * step_seconds <= air_mass`
/// (checked at building validation), which keeps the update a convex
/// combination of `co2` and `c_z` plus non-negative generation.
pub fn co2_step(
    zone: &ZoneParams,
    co2: f64,
    flow: f64,
    c_z: f64,
    occupants: u32,
    co2_gen_rate: f64,
    step_seconds: f64,
) -> f64 {
    let grams = f64::from(occupants) * co2_gen_rate * (step_seconds / 3600.0);
    let generation_ppm = grams / zone.air_mass * 1000.0;
    let dilution_ppm = flow * (c_z - co2) * step_seconds / zone.air_mass;
    co2 + generation_ppm + dilution_ppm
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn zone() -> ZoneParams {
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
        }
    }

    #[test]
    fn full_fresh_air_ignores_return_mix() {
        let (cz, degenerate) = supply_co2(0.0, 410.0, &[0.2, 0.3], &[900.0, 1200.0]);
        assert_relative_eq!(cz, 410.0, max_relative = 1e-12);
        assert!(!degenerate);
    }

    #[test]
    fn full_recirculation_with_equal_flows_is_mean() {
        let (cz, _) = supply_co2(1.0, 400.0, &[0.25, 0.25], &[600.0, 800.0]);
        assert_relative_eq!(cz, 700.0, max_relative = 1e-12);
    }

    #[test]
    fn half_recirculation_weighted_mix() {
        // C_m = (0.3*600 + 0.1*1000)/0.4 = 700; C_z = 0.5*400 + 0.5*700 = 550
        let (cz, degenerate) = supply_co2(0.5, 400.0, &[0.3, 0.1], &[600.0, 1000.0]);
        assert_relative_eq!(cz, 550.0, max_relative = 1e-12);
        assert!(!degenerate);
    }

    #[test]
    fn zero_flow_mixing_is_degenerate() {
        let (cz, degenerate) = supply_co2(1.0, 400.0, &[0.0, 0.0], &[600.0, 1000.0]);
        assert_relative_eq!(cz, 800.0, max_relative = 1e-12); // unweighted mean
        assert!(degenerate);
    }

    #[test]
    fn supply_is_convex_combination() {
        // dr in [0,1] keeps C_z between outdoor and the return mix.
        let flows = [0.1, 0.4, 0.2];
        let co2 = [500.0, 750.0, 900.0];
        for i in 0..=10 {
            let dr = i as f64 / 10.0;
            let (cz, _) = supply_co2(dr, 400.0, &flows, &co2);
            let (mix, _) = supply_co2(1.0, 400.0, &flows, &co2);
            assert!(cz >= 400.0f64.min(mix) - 1e-12 && cz <= 400.0f64.max(mix) + 1e-12);
        }
    }

    #[test]
    fn dilution_step_matches_hand_value() {
        // 600 + 0.3*(450-600)*1800/1000 = 600 - 81 = 519
        let next = co2_step(&zone(), 600.0, 0.3, 450.0, 0, 40.0, 1800.0);
        assert_relative_eq!(next, 519.0, max_relative = 1e-12);
    }

    #[test]
    fn generation_step_matches_hand_value() {
        // 20 occupants * 40 g/h * 0.5 h = 400 g in 1000 kg -> +400 ppm
        let next = co2_step(&zone(), 400.0, 0.0, 400.0, 20, 40.0, 1800.0);
        assert_relative_eq!(next, 800.0, max_relative = 1e-12);
    }

    #[test]
    fn equilibrium_when_supply_matches_zone() {
        let next = co2_step(&zone(), 650.0, 0.4, 650.0, 0, 40.0, 1800.0);
        assert_relative_eq!(next, 650.0, max_relative = 1e-12);
    }

    #[test]
    fn dilution_never_undershoots_supply() {
        // flow*dt <= air_mass makes the update a convex combination.
        let z = zone();
        let next = co2_step(&z, 900.0, 0.5, 420.0, 0, 40.0, 1800.0);
        assert!(next >= 420.0 && next <= 900.0);
    }
}
