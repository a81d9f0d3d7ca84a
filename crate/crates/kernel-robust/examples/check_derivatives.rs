//! Verify the analytic kernel derivatives against central finite
//! differences for every kernel family.

use kernel_robust::kernel::{check_derivatives, Kernel};
use kernel_robust::rng::cell_rng;
use ndarray::Array1;
use rand::Rng;

fn main() {
    let mut rng = cell_rng(7, 0);
    for (kernel, tol) in [
        (Kernel::gaussian(10.0, 3).unwrap(), 1e-6),
        (Kernel::gaussian(0.5, 3).unwrap(), 1e-6),
        (Kernel::quadratic(1.0, 3.1622776601, 3).unwrap(), 2e-5),
        (Kernel::linear(3), 2e-5),
    ] {
        let samples: Vec<(Array1<f64>, Array1<f64>)> = (0..500)
            .map(|_| {
                (
                    Array1::from_shape_fn(3, |_| rng.gen_range(-1.0..1.0)),
                    Array1::from_shape_fn(3, |_| rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let report = check_derivatives(&kernel, &samples, 1e-5, tol);
        println!(
            "{kernel:?}\n  max grad deviation {:.3e}, max hess deviation {:.3e} -> {}",
            report.max_grad_deviation,
            report.max_hess_deviation,
            if report.pass { "PASS" } else { "FAIL" }
        );
    }
}
