//! Batch CLI over the experiment runners. Every subcommand maps straight
//! onto a library scenario; all logic lives in the library.
//!
//! Exit codes: 0 on success, 1 when an asserted ordering verdict fails,
//! 2 on input errors (bad flags, missing files, bad configs).

use clap::{Args, Parser, Subcommand};
use kernel_robust::data::report::{read_config, write_report_csv};
use kernel_robust::error::Error;
use kernel_robust::kernel::{check_derivatives, Kernel};
use kernel_robust::plot::{render_log_x, Curve};
use kernel_robust::scenarios::{
    self, run_adv_iterations, run_generic, run_mnist, run_quadratic_identity, run_two_point,
    ScenarioConfig, ScenarioKind, ScenarioReport,
};
use ndarray::Array1;
use rand::Rng;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "kernel-robust",
    about = "Kernel regression with noise augmentation and adversarial training: \
             experiment runners, limiting-formula estimators, and verification tools",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// TOML scenario config; omitted fields take the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated lambda grid override, e.g. "1e-9,1e-7,1e-5".
    #[arg(long, value_name = "LIST")]
    lambda_grid: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Repetition count override.
    #[arg(long)]
    reps: Option<usize>,
    /// CSV output path for the per-repetition records.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG chart of the aggregate curves.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Regularization-path sweep on a synthetic setting (1 or 2).
    Sweep {
        #[arg(long, default_value_t = 1)]
        setting: u8,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Two nearby points: segment Lipschitz/MSE regime orderings.
    TwoPoint {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Identity-design quadratic kernel: closed forms and Lip blowup rates.
    Quadratic {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// MNIST digit-pair table (standard vs augmented across the grid).
    Mnist {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Ridgeless adversarial training tracked over iterations.
    AdvTrain {
        #[command(flatten)]
        common: CommonOpts,
        /// "metrics" records per-checkpoint metrics only; "full" also dumps
        /// snapshot coefficient vectors next to --out.
        #[arg(long, default_value = "metrics")]
        snapshots: String,
    },
    /// Numerical scaling checks for the perturbed ridge-system identities.
    VerifyLemma {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare analytic kernel derivatives against central differences.
    CheckDerivatives {
        #[arg(long, default_value = "gaussian")]
        kernel: String,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        a1: f64,
        #[arg(long, default_value_t = 1.0)]
        a2: f64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn load_scenario_config(kind: ScenarioKind, common: &CommonOpts) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => read_config(path)?,
        None => ScenarioConfig::default_for(kind),
    };
    if cfg.scenario != kind {
        return Err(Error::Config(format!(
            "config is for scenario '{}', expected '{}'",
            cfg.scenario.as_str(),
            kind.as_str()
        )));
    }
    if let Some(grid) = &common.lambda_grid {
        let parsed: Result<Vec<f64>, _> =
            grid.split(',').map(|s| s.trim().parse::<f64>()).collect();
        cfg.lambda_grid = parsed.map_err(|e| Error::Config(format!("bad --lambda-grid: {e}")))?;
    }
    if let Some(eps) = common.epsilon {
        cfg.epsilon = eps;
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.repetitions = reps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &ScenarioReport) {
    println!("scenario: {} (config hash {:016x})", report.scenario, report.config_hash);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if let Some(table) = &report.table {
        println!("{table}");
    }
    if !report.aggregates.is_empty() && report.table.is_none() {
        println!(
            "{:<24} {:>12} {:>12} {:>12} {:>12}",
            "estimator", "lambda", "mse", "lip", "hnorm"
        );
        for a in &report.aggregates {
            println!(
                "{:<24} {:>12.4e} {:>12.5e} {:>12.5e} {:>12.5e}",
                a.estimator, a.lambda, a.mse, a.lip, a.hnorm
            );
        }
    }
    for v in &report.verdicts {
        println!(
            "verdict {:<40} {}  margin {:+.3e}  ({})",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.margin,
            v.detail
        );
    }
}

fn write_outputs(report: &ScenarioReport, common: &CommonOpts) -> Result<(), Error> {
    if let Some(out) = &common.out {
        write_report_csv(report, out)?;
        println!("wrote {}", out.display());
    }
    if let Some(plot) = &common.plot {
        let mut curves: Vec<Curve> = Vec::new();
        let mut estimators: Vec<String> = Vec::new();
        for a in &report.aggregates {
            if !estimators.contains(&a.estimator) {
                estimators.push(a.estimator.clone());
            }
        }
        for metric in ["mse", "lip"] {
            for est in &estimators {
                let points: Vec<(f64, f64)> = report
                    .aggregates
                    .iter()
                    .filter(|a| &a.estimator == est && a.lambda > 0.0)
                    .map(|a| (a.lambda, if metric == "mse" { a.mse } else { a.lip }))
                    .collect();
                if points.len() > 1 {
                    curves.push(Curve { label: format!("{est} {metric}"), points });
                }
            }
        }
        let svg = render_log_x(&report.scenario, &curves);
        std::fs::write(plot, svg)?;
        println!("wrote {}", plot.display());
    }
    Ok(())
}

fn run_scenario(
    kind: ScenarioKind,
    common: &CommonOpts,
    runner: impl Fn(&ScenarioConfig) -> Result<ScenarioReport, Error>,
) -> Result<bool, Error> {
    let cfg = load_scenario_config(kind, common)?;
    let report = runner(&cfg)?;
    print_report(&report);
    write_outputs(&report, common)?;
    Ok(report.all_verdicts_pass())
}

fn real_main() -> Result<bool, Error> {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("KERNEL_ROBUST_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    match cli.command {
        Command::Sweep { setting, common } => {
            let kind = match setting {
                1 => ScenarioKind::Sweep1,
                2 => ScenarioKind::Sweep2,
                other => {
                    return Err(Error::Config(format!("unknown setting {other}, expected 1 or 2")))
                }
            };
            run_scenario(kind, &common, run_generic)
        }
        Command::TwoPoint { common } => {
            run_scenario(ScenarioKind::TwoPoint, &common, run_two_point)
        }
        Command::Quadratic { common } => {
            run_scenario(ScenarioKind::Quadratic, &common, run_quadratic_identity)
        }
        Command::Mnist { common } => run_scenario(ScenarioKind::Mnist, &common, run_mnist),
        Command::AdvTrain { common, snapshots } => {
            if snapshots != "metrics" && snapshots != "full" {
                return Err(Error::Config(format!(
                    "--snapshots must be 'metrics' or 'full', got '{snapshots}'"
                )));
            }
            let mut cfg = load_scenario_config(ScenarioKind::AdvTrain, &common)?;
            if snapshots == "full" {
                cfg.adv.get_or_insert_with(Default::default).keep_snapshots = true;
            }
            let report = run_adv_iterations(&cfg)?;
            print_report(&report);
            write_outputs(&report, &common)?;
            if snapshots == "full" {
                let path = common
                    .out
                    .clone()
                    .map(|p| p.with_extension("snapshots.csv"))
                    .unwrap_or_else(|| PathBuf::from("snapshots.csv"));
                let mut text = String::from("repetition,iteration,coeff_index,value\n");
                for (rep, iter, coeffs) in &report.snapshots {
                    for (i, v) in coeffs.iter().enumerate() {
                        text.push_str(&format!("{rep},{iter},{i},{v:.16e}\n"));
                    }
                }
                std::fs::write(&path, text)?;
                println!("wrote {}", path.display());
            }
            Ok(report.all_verdicts_pass())
        }
        Command::VerifyLemma { seed, instances, out } => {
            let report = scenarios::lemma::run_verify_lemma(seed, instances)?;
            println!(
                "part (a) min slope {:.3}   part (b) min slope {:.3}   {}",
                report.part_a_min_slope,
                report.part_b_min_slope,
                if report.pass { "PASS" } else { "FAIL" }
            );
            if let Some(path) = out {
                let mut text = String::from("part,instance,eps,lambda,deviation,slope\n");
                for r in &report.rows {
                    text.push_str(&format!(
                        "{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                        r.part, r.instance, r.eps, r.lambda, r.deviation, r.slope
                    ));
                }
                std::fs::write(&path, text)?;
                println!("wrote {}", path.display());
            }
            Ok(report.pass)
        }
        Command::CheckDerivatives {
            kernel,
            gamma,
            a1,
            a2,
            dim,
            samples,
            step,
            tol,
            seed,
        } => {
            let k = match kernel.as_str() {
                "gaussian" => Kernel::gaussian(gamma, dim)?,
                "quadratic" => Kernel::quadratic(a1, a2, dim)?,
                "linear" => Kernel::linear(dim),
                other => return Err(Error::Config(format!("unknown kernel '{other}'"))),
            };
            let mut rng = kernel_robust::rng::cell_rng(seed, 0);
            let pairs: Vec<(Array1<f64>, Array1<f64>)> = (0..samples)
                .map(|_| {
                    (
                        Array1::from_shape_fn(dim, |_| rng.gen_range(-1.0..1.0)),
                        Array1::from_shape_fn(dim, |_| rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect();
            let report = check_derivatives(&k, &pairs, step, tol);
            println!(
                "max deviation {:.3e} over {} pairs (grad {:.3e}, hess {:.3e}); tolerance {:.1e}: {}",
                report.max_deviation(),
                report.samples,
                report.max_grad_deviation,
                report.max_hess_deviation,
                report.tolerance,
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
