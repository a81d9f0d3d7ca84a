//! The central identity: a brute-force Monte-Carlo augmented fit converges
//! to the damped-correction limiting formula as the noise size shrinks.
//!
//! Prints the H-distance between the two estimators at a few noise sizes
//! together with the fitted log-log rate.

use kernel_robust::estimators::{fit_augmented, limit_augmented, AugmentationModel, Dataset};
use kernel_robust::kernel::Kernel;
use kernel_robust::rng::cell_rng;
use ndarray::prelude::*;
use rand::Rng;

fn main() {
    let p = 2;
    let mut rng = cell_rng(11, 0);
    let x = Array2::from_shape_fn((4, p), |_| rng.gen_range(-0.8..0.8));
    let y = Array1::from_shape_fn(4, |_| rng.gen_range(-1.0..1.0));
    let data = Dataset::new(x, y).unwrap();
    let kernel = Kernel::gaussian(1.0, p).unwrap();
    let moment = Array2::eye(p) / p as f64; // second moment of unit directions

    println!("eps        lambda      |f_aug - g_lambda|_H");
    let mut pts = Vec::new();
    for (k, eps) in [0.1, 0.05, 0.025].into_iter().enumerate() {
        let lambda = eps * eps;
        let mut draw_rng = cell_rng(12, k as u64);
        let aug = AugmentationModel::finite_sphere_sets(eps, 4, 2000, p, &mut draw_rng);
        let mc = fit_augmented(&data, &kernel, lambda, &aug).unwrap();
        let g = limit_augmented(&data, &kernel, lambda, eps, &moment).unwrap();
        let d = mc.f.distance(&g.f).unwrap();
        println!("{eps:<10} {lambda:<11.1e} {d:.6}");
        pts.push((eps.ln(), d.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    println!("log-log rate: {:.3}", sxy / sxx);
}
