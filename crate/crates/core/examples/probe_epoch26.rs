//! Scratch probe: replay the benchmark epoch that floor-stalls and trace
//! every ventilation-reset round (dr vector, stage outcomes, witnesses).

use tldm::llc::{solve_llc, LlcOutcome};
use tldm::model::{thermal_coeffs, ControlPlan, PlantState};
use tldm::scenario::benchmark5;
use tldm::tldm::{mpc_run, needs_llc, rollout, TldmConfig, TldmController};
use tldm::ulc::solve_ulc;

fn main() {
    let case = benchmark5(0);
    let b = &case.building;
    let coeffs = thermal_coeffs(b).unwrap();
    let cfg = TldmConfig::default();

    // Closed-loop state entering step 26.
    let mut controller = TldmController::new(b, cfg.clone()).unwrap();
    let report = mpc_run(b, &case.scenario, &case.initial, &mut controller, 26).unwrap();
    let state = PlantState {
        temps: report.temps.last().unwrap().clone(),
        co2: report.co2.last().unwrap().clone(),
        time_index: 26,
    };
    println!("entering 26: temps {:?}", state.temps);
    println!("entering 26: co2   {:?}", state.co2);
    for i in 0..5 {
        print!("occ z{i}: ");
        for k in 26..36 {
            print!("{:>3}", case.scenario.occupancy[i][k]);
        }
        println!();
    }

    let h = b.horizon.horizon_steps;
    let ahu = &b.ahu;
    let mut dr = vec![ahu.dr_max; h];
    let mut warm_ulc = None;
    let mut warm_llc: Option<tldm::llc::LlcWarm> = None;
    for l in 0..cfg.max_dr_iters {
        let ulc = solve_ulc(b, &coeffs, &case.scenario, &state, &dr, &cfg.ulc, warm_ulc.as_ref())
            .unwrap();
        warm_ulc = Some(ulc.state.clone());
        let (triggered, _) = needs_llc(b, &case.scenario, &state, &ulc.flows, &dr, cfg.co2_guard);
        println!(
            "round {l:>2}: dr {:?} trigger {triggered}",
            dr.iter().map(|d| (d * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
        if !triggered {
            println!("  accepted without ventilation stage");
            return;
        }
        let outcome =
            solve_llc(b, &case.scenario, &state, &ulc.flows, &dr, &cfg.llc, warm_llc.as_ref())
                .unwrap();
        match outcome {
            LlcOutcome::Solved(res) => {
                warm_llc = Some(tldm::llc::LlcWarm {
                    supply: res.supply_co2.clone(),
                    adal: res.state.clone(),
                });
                let plan = ControlPlan { flows: res.flows.clone(), dr: dr.clone() };
                let temps = rollout(b, &coeffs, &case.scenario, &state, &plan).temps;
                let mut violating = Vec::new();
                let mut worst: f64 = 0.0;
                for k in 0..h {
                    let mut depth: f64 = 0.0;
                    for (i, zone) in b.zones.iter().enumerate() {
                        depth = depth.max(zone.temp_min - cfg.temp_tolerance - temps[k + 1][i]);
                    }
                    if depth > 0.0 {
                        violating.push(k);
                        worst = worst.max(depth);
                    }
                }
                println!(
                    "  solved: recovered_excess {:.2} temp-violating steps {:?} worst {:.3}",
                    res.max_recovered_excess, violating, worst
                );
                if violating.is_empty() {
                    println!("  ACCEPT");
                    return;
                }
                let room: Vec<usize> = violating
                    .iter()
                    .copied()
                    .filter(|&k| dr[k] > ahu.dr_min + 1e-12)
                    .collect();
                if room.is_empty() {
                    println!("  FLOOR STALL (temp)");
                    return;
                }
                for k in room {
                    dr[k] = (dr[k] - ahu.dr_step).max(ahu.dr_min);
                }
            }
            LlcOutcome::InfeasibleAtDr(inf) => {
                println!(
                    "  infeasible: witnesses {:?} excess {:.2}",
                    inf.violating_steps, inf.max_excess_ppm
                );
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
                    println!("  FLOOR STALL (co2)");
                    return;
                }
                for k in room {
                    dr[k] = (dr[k] - ahu.dr_step).max(ahu.dr_min);
                }
            }
        }
    }
    println!("walk exhausted");
}
