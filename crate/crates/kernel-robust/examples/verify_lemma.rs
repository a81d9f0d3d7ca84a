//! Scaling checks for the perturbed ridge-system identities: the raw
//! deviation scales linearly in the perturbation size, and the residual
//! after the closed-form correction scales quadratically.

use kernel_robust::scenarios::lemma::run_verify_lemma;

fn main() {
    let report = run_verify_lemma(7, 10).unwrap();
    println!("part  instance  eps        deviation        slope");
    for r in report.rows.iter().take(9) {
        println!(
            "{:<5} {:<9} {:<10.2e} {:<16.6e} {:.3}",
            r.part, r.instance, r.eps, r.deviation, r.slope
        );
    }
    println!("... ({} rows total)", report.rows.len());
    println!(
        "min slope part (a) = {:.3}, part (b) = {:.3} -> {}",
        report.part_a_min_slope,
        report.part_b_min_slope,
        if report.pass { "PASS" } else { "FAIL" }
    );
}
