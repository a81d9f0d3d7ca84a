//! MNIST digit-pair table: standard vs augmented estimators across a grid
//! of tiny ridge values. Needs the idx files staged (see the README); runs
//! a single seed to stay quick.

use kernel_robust::scenarios::{run_mnist, ScenarioConfig, ScenarioKind};

fn main() {
    let mut cfg = ScenarioConfig::default_for(ScenarioKind::Mnist);
    cfg.repetitions = 1;
    match run_mnist(&cfg) {
        Ok(report) => {
            println!(
                "digits {:?}, {} train / {} test, eps = {}, K = {}:",
                cfg.mnist.as_ref().unwrap().digits,
                cfg.n_train,
                cfg.n_test,
                cfg.epsilon,
                cfg.augmentation_count
            );
            println!("{}", report.table.as_deref().unwrap_or(""));
            for v in &report.verdicts {
                println!(
                    "{:<44} {}  ({})",
                    v.name,
                    if v.pass { "PASS" } else { "FAIL" },
                    v.detail
                );
            }
        }
        Err(e) => {
            eprintln!("mnist run skipped: {e}");
            eprintln!("stage the four idx files under data/mnist (see README) and retry");
        }
    }
}
