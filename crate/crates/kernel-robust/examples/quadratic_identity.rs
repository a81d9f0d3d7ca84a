//! Identity-design quadratic kernel: the closed-form estimators and the
//! small-lambda Lipschitz blowup.

use kernel_robust::scenarios::{
    closed_form_quadratic, lip_unit_ball, run_quadratic_identity, ScenarioConfig, ScenarioKind,
};
use ndarray::prelude::*;

fn main() {
    // a single draw, inspected by hand
    let y = array![0.9, 0.4, 1.1, 0.7, 0.2, 0.8];
    let (a1, a2) = (1.0, 2.0);
    let eps = 0.01;
    let (f0, g0, glam) = closed_form_quadratic(&y, a1, a2, eps * eps, eps, y.len()).unwrap();
    println!("single draw, n = p = 6, a1 = {a1}, a2 = {a2}:");
    for (name, f) in [("ridgeless", &f0), ("g_0", &g0), ("g_lambda (lambda=eps^2)", &glam)] {
        println!(
            "  {:<24} |f|_H = {:>8.4}   Lip over unit ball = {:>8.4}",
            name,
            f.hnorm(),
            lip_unit_ball(f, 30, 5, &[])
        );
    }

    // the full scenario: blowup fraction across seeds
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::Quadratic);
    cfg.repetitions = 10;
    let report = run_quadratic_identity(&cfg).unwrap();
    println!("\nscenario over {} seeds (n = p = 60):", cfg.repetitions);
    for v in &report.verdicts {
        println!(
            "  {:<40} {}  ({})",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
}
