//! AHU electric power and energy cost.
//!
//! ```text
//! P_c = c_p eta [ (1-dr) (T_out - T_c) sum_i m_i  +  dr sum_i m_i (T_i - T_c) ]
//! P_f = kappa_f (sum_i m_i)^2
//! ```
//!
//! P_c is the coil duty for cooling the fresh/recirculated mix down to T_c,
//! scaled by the inverse COP. In a cooling regime both bracketed terms are
//! non-negative; a negative sum (outdoor colder than supply setpoint) would
//! mean free cooling, which the coil model cannot credit, so it clamps at
//! zero and flags the step.

use crate::model::AhuParams;

/// Cooling and fan power for one step [kW].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub cooling: f64,
    pub fan: f64,
    /// Set when the raw coil duty came out negative and was clamped.
    pub clamped: bool,
}

impl PowerSplit {
    pub fn total(&self) -> f64 {
        self.cooling + self.fan
    }
}

/// Electric power drawn by the AHU for given flows and temperatures.
pub fn power(ahu: &AhuParams, dr: f64, flows: &[f64], temps: &[f64], t_out: f64) -> PowerSplit {
    debug_assert_eq!(flows.len(), temps.len());
    let total_flow: f64 = flows.iter().sum();
    let return_load: f64 = flows
        .iter()
        .zip(temps)
        .map(|(m, t)| m * (t - ahu.supply_temp))
        .sum();
    let raw = ahu.specific_heat
        * ahu.cop_inverse
        * ((1.0 - dr) * (t_out - ahu.supply_temp) * total_flow + dr * return_load);
    let clamped = raw < 0.0;
    PowerSplit {
        cooling: raw.max(0.0),
        fan: ahu.fan_coeff * total_flow * total_flow,
        clamped,
    }
}

/// Energy cost of one step: price [currency/kWh] * power [kW] * step [h].
pub fn step_cost(price: f64, p: &PowerSplit, step_hours: f64) -> f64 {
    price * p.total() * step_hours
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn ahu() -> AhuParams {
        AhuParams {
            supply_temp: 15.0,
            fan_coeff: 0.08,
            cop_inverse: 1.0,
            total_flow_max: 2.0,
            dr_min: 0.0,
            dr_max: 0.8,
            dr_step: 0.05,
            specific_heat: 1.012,
            air_density: 1.2,
        }
    }

    #[test]
    fn full_recirculation_hand_value() {
        // P_c = 1.012 * 1 * (25-15) = 10.12 kW at unit flow; P_f = 0.08 * 1^2
        let p = power(&ahu(), 1.0, &[1.0], &[25.0], 32.0);
        assert_relative_eq!(p.cooling, 10.12, max_relative = 1e-12);
        assert_relative_eq!(p.fan, 0.08, max_relative = 1e-12);
        assert!(!p.clamped);
    }

    #[test]
    fn zero_flow_zero_power() {
        let p = power(&ahu(), 0.5, &[0.0, 0.0], &[25.0, 26.0], 32.0);
        assert_relative_eq!(p.cooling, 0.0);
        assert_relative_eq!(p.fan, 0.0);
    }

    #[test]
    fn fresh_air_at_supply_temperature_is_free() {
        let p = power(&ahu(), 0.0, &[0.5], &[25.0], 15.0);
        assert_relative_eq!(p.cooling, 0.0);
        assert!(!p.clamped);
    }

    #[test]
    fn negative_duty_clamps_and_flags() {
        // Outdoor below the supply setpoint with full fresh air.
        let p = power(&ahu(), 0.0, &[0.5], &[25.0], 10.0);
        assert_relative_eq!(p.cooling, 0.0);
        assert!(p.clamped);
    }

    #[test]
    fn fan_power_strictly_increasing_in_total_flow() {
        let a = ahu();
        let mut last = -1.0;
        for i in 1..=8 {
            let m = 0.25 * i as f64;
            let p = power(&a, 0.5, &[m], &[25.0], 32.0);
            assert!(p.fan > last);
            last = p.fan;
        }
    }

    #[test]
    fn more_recirculation_is_cheaper_when_outdoor_hotter_than_zones() {
        let a = ahu();
        let lo = power(&a, 0.2, &[0.5], &[25.0], 33.0);
        let hi = power(&a, 0.7, &[0.5], &[25.0], 33.0);
        assert!(hi.cooling < lo.cooling);
    }

    #[test]
    fn step_cost_hand_values() {
        let p = PowerSplit { cooling: 10.12, fan: 0.08, clamped: false };
        // 0.2 $/kWh * 10.2 kW * 0.5 h = 1.02
        assert_relative_eq!(step_cost(0.2, &p, 0.5), 1.02, max_relative = 1e-12);
        assert_relative_eq!(step_cost(0.0, &p, 0.5), 0.0);
        // linear in price
        assert_relative_eq!(step_cost(0.4, &p, 0.5), 2.04, max_relative = 1e-12);
    }
}
