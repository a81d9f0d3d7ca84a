//! Seeded synthetic data generation and file I/O (IDX ingestion, CSV
//! reports, TOML configs).

pub mod idx;
pub mod mnist;
pub mod report;

pub use mnist::mnist_data_dir;

use crate::error::{Error, Result};
use crate::estimators::Dataset;
use crate::rng::cell_rng;
use ndarray::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Synthetic regression task: rows uniform on the unit sphere, targets
/// `y = x_1 + x_2^2`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SyntheticSpec {
    pub p: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

/// The target rule `y = x_1 + x_2^2` (exact, no noise).
pub fn target_rule(x: ArrayView1<f64>) -> f64 {
    x[0] + x[1] * x[1]
}

/// I.i.d. uniform unit vectors (normalized isotropic Gaussian draws),
/// one per row.
pub fn sample_unit_sphere(p: usize, count: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((count, p));
    for mut row in out.rows_mut() {
        loop {
            for v in row.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
                break;
            }
        }
    }
    out
}

/// Generate disjoint train/test splits for the synthetic task.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Dataset)> {
    if spec.p < 2 {
        return Err(Error::InvalidParameter(format!(
            "the target rule needs p >= 2, got {}",
            spec.p
        )));
    }
    let mut rng = cell_rng(spec.seed, 0);
    let x_train = sample_unit_sphere(spec.p, spec.n_train, &mut rng);
    let x_test = sample_unit_sphere(spec.p, spec.n_test, &mut rng);
    let y_train = x_train.rows().into_iter().map(target_rule).collect();
    let y_test = x_test.rows().into_iter().map(target_rule).collect();
    Ok((Dataset::new(x_train, y_train)?, Dataset::new(x_test, y_test)?))
}
