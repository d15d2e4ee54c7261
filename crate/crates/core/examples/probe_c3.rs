//! Scratch probe: where do the day's costs go for each controller on the
//! five-zone benchmark? Prints per-step totals and the calibrated baseline
//! comparison used by the cost-ordering acceptance check.

use tldm::baselines::{calibrate_dcv, run_fixed_vent, DcvVariant};
use tldm::model::RunReport;
use tldm::scenario::benchmark5;
use tldm::tldm::{mpc_run, TldmConfig, TldmController};

fn breakdown(name: &str, report: &RunReport, occupancy: &[Vec<u32>]) {
    println!("== {name}: total cost {:.3}", report.total_cost);
    println!("step  occ  dr     m_tot   fresh   cost");
    let steps = report.n_steps();
    for k in 0..steps {
        let occ: u32 = occupancy.iter().map(|z| z[k]).sum();
        let m_tot: f64 = report.flows[k].iter().sum();
        let dr = report.dr[k];
        let fresh = m_tot * (1.0 - dr);
        println!(
            "{k:>4}  {occ:>3}  {dr:.2}  {m_tot:7.3}  {fresh:6.3}  {:7.4}",
            report.step_cost[k]
        );
    }
}

fn main() {
    let case = benchmark5(0);
    let day = case.building.horizon.day_steps;

    let fixed = run_fixed_vent(&case.building, &case.scenario, &case.initial).unwrap();

    let mut controller = TldmController::new(&case.building, TldmConfig::default()).unwrap();
    let tldm = mpc_run(&case.building, &case.scenario, &case.initial, &mut controller, day).unwrap();

    let (cfg1, dcv1) =
        calibrate_dcv(&case.building, &case.scenario, &case.initial, DcvVariant::I).unwrap();
    let (cfg2, dcv2) =
        calibrate_dcv(&case.building, &case.scenario, &case.initial, DcvVariant::II).unwrap();

    breakdown("tldm", &tldm, &case.scenario.occupancy);
    breakdown("dcv-I", &dcv1, &case.scenario.occupancy);

    println!("== tldm per-zone CO2 peaks and epoch flags");
    let n = case.building.n_zones();
    for i in 0..n {
        let (peak_k, peak) = tldm
            .co2
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, row)| (k, row[i]))
            .fold((0, 0.0f64), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        println!("zone {i}: peak {peak:7.1} ppm entering step {peak_k}");
    }
    for (k, ep) in tldm.epochs.iter().enumerate() {
        if !ep.converged || ep.fallback || ep.dr_floor_hit {
            println!(
                "epoch {k}: converged {} fallback {} floor {} dr_iters {} coupling {:.2e}",
                ep.converged, ep.fallback, ep.dr_floor_hit, ep.dr_iterations, ep.coupling_residual
            );
        }
    }

    let worst_co2 = |r: &RunReport| -> f64 {
        r.co2.iter().skip(1).flatten().cloned().fold(0.0f64, f64::max)
    };
    println!();
    println!(
        "fixed   {:8.3}  peak co2 {:6.1}",
        fixed.total_cost,
        worst_co2(&fixed)
    );
    println!(
        "tldm    {:8.3}  peak co2 {:6.1}",
        tldm.total_cost,
        worst_co2(&tldm)
    );
    println!(
        "dcv-I   {:8.3}  peak co2 {:6.1}  (Rp {:.2})",
        dcv1.total_cost,
        worst_co2(&dcv1),
        cfg1.per_person_rate
    );
    println!(
        "dcv-II  {:8.3}  peak co2 {:6.1}  (Rp {:.2} Ra {:.3})",
        dcv2.total_cost,
        worst_co2(&dcv2),
        cfg2.per_person_rate,
        cfg2.per_area_rate
    );
    println!(
        "savings vs I {:.1}%  vs II {:.1}%",
        100.0 * (dcv1.total_cost - tldm.total_cost) / dcv1.total_cost,
        100.0 * (dcv2.total_cost - tldm.total_cost) / dcv2.total_cost
    );
}
