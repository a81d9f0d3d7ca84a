//! Ridgeless adversarial training tracked over iterations: the test MSE
//! dips and then rises again, so stopping early acts as regularization.

use kernel_robust::scenarios::{run_adv_iterations, ScenarioConfig, ScenarioKind};

fn main() {
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::AdvTrain);
    cfg.repetitions = 6; // fast demonstration; the defaults use 50
    let report = run_adv_iterations(&cfg).unwrap();
    println!(
        "setting-1 data, eps = {}, K = {}, {} repetitions:",
        cfg.epsilon, cfg.augmentation_count, cfg.repetitions
    );
    println!("{:<12} {:>12} {:>12} {:>12}", "iteration", "test MSE", "test Lip", "|f|_H");
    for &k in &cfg.adv.as_ref().unwrap().record_at {
        let a = report.aggregate_for("adversarial_gd", k as f64).unwrap();
        println!("{:<12} {:>12.4} {:>12.4} {:>12.4}", k, a.mse, a.lip, a.hnorm);
    }
    for v in &report.verdicts {
        println!(
            "{:<36} {}  ({})",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
}
