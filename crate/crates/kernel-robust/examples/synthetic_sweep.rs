//! Regularization-path sweep on synthetic setting 1: the augmented
//! estimator's U-shaped MSE against the flat-then-rising standard curve.

use kernel_robust::scenarios::{run_generic, ScenarioConfig, ScenarioKind};

fn main() {
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::Sweep1);
    cfg.repetitions = 8; // fast demonstration; the defaults use 25
    let report = run_generic(&cfg).unwrap();
    println!("setting 1, {} repetitions, eps = {}:", cfg.repetitions, cfg.epsilon);
    println!("{:<10} {:>14} {:>14} {:>12} {:>12}", "lambda", "std MSE", "aug MSE", "std Lip", "aug Lip");
    for &l in &cfg.lambda_grid {
        let s = report.aggregate_for("standard", l).unwrap();
        let a = report.aggregate_for("augmented", l).unwrap();
        println!(
            "{:<10.1e} {:>14.5} {:>14.5} {:>12.4} {:>12.4}",
            l, s.mse, a.mse, s.lip, a.lip
        );
    }
    for v in &report.verdicts {
        println!(
            "{:<48} {}  ({})",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
}
