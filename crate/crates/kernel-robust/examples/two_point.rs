//! Two nearby points: how the regularization regime moves the segment
//! Lipschitz constant and MSE between the ridgeless fit and the
//! tangent-orthogonal blowup.

use kernel_robust::scenarios::{run_two_point, ScenarioConfig, ScenarioKind};

fn main() {
    // a separation where the three regime proxies straddle the correction
    // operator's spectrum, so the orderings are visible
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::TwoPoint);
    let tp = cfg.two_point.as_mut().unwrap();
    tp.r = 0.3;
    tp.y = [0.2, 1.0];
    let report = run_two_point(&cfg).unwrap();
    println!("r = 0.3, y = (0.2, 1.0):");
    println!(
        "{:<22} {:>12} {:>14} {:>12}",
        "estimator", "lambda", "segment MSE", "segment Lip"
    );
    for a in &report.aggregates {
        println!(
            "{:<22} {:>12.2e} {:>14.6e} {:>12.6}",
            a.estimator, a.lambda, a.mse, a.lip
        );
    }
    for v in &report.verdicts {
        println!(
            "{:<36} {}  margin {:+.2e}",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.margin
        );
    }
}
