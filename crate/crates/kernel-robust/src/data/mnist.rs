//! MNIST digit-pair loading from IDX files.
//!
//! Pixels are flattened to 784-vectors and scaled to `[0, 1]` (divide by
//! 255); the first digit of the pair is labeled `+1`, the second `-1`.
//! Subsampling is without replacement and seeded, with train and test
//! index sets disjoint when they come from the same files.

use super::idx::{read_idx, IdxFile, MAGIC_IMAGES, MAGIC_LABELS};
use crate::error::{Error, Result};
use crate::estimators::Dataset;
use crate::rng::cell_rng;
use ndarray::prelude::*;
use rand::seq::SliceRandom;
use std::path::Path;

fn validate_pair(images: &IdxFile, labels: &IdxFile) -> Result<()> {
    if images.magic != MAGIC_IMAGES {
        return Err(Error::IdxFormat {
            offset: 0,
            reason: format!("expected image magic 0x{MAGIC_IMAGES:08x}, got 0x{:08x}", images.magic),
        });
    }
    if labels.magic != MAGIC_LABELS {
        return Err(Error::IdxFormat {
            offset: 0,
            reason: format!("expected label magic 0x{MAGIC_LABELS:08x}, got 0x{:08x}", labels.magic),
        });
    }
    if images.items() != labels.items() {
        return Err(Error::IdxFormat {
            offset: 4,
            reason: format!(
                "image count {} does not match label count {}",
                images.items(),
                labels.items()
            ),
        });
    }
    Ok(())
}

/// Load a two-digit subsample. `digits.0` maps to `+1`, `digits.1` to `-1`;
/// a degenerate pair `(a, a)` labels every selected sample `+1`.
///
/// Counts are split per class as evenly as availability allows. The train
/// and test sets are drawn from the same files with disjoint indices;
/// callers wanting the official split load each side separately with one
/// of the counts set to zero.
pub fn load_mnist_pair(
    image_path: &Path,
    label_path: &Path,
    digits: (u8, u8),
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let images = read_idx(image_path)?;
    let labels = read_idx(label_path)?;
    validate_pair(&images, &labels)?;
    let item_len = images.item_len();

    let classes: Vec<u8> =
        if digits.0 == digits.1 { vec![digits.0] } else { vec![digits.0, digits.1] };
    let mut indices_per_class: Vec<Vec<usize>> = classes
        .iter()
        .map(|d| {
            labels
                .payload
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == *d)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let mut rng = cell_rng(seed, 0x6d6e_6973_7400);
    for idx in indices_per_class.iter_mut() {
        idx.shuffle(&mut rng);
    }

    // per-class takes: as balanced as availability allows, train first
    let want = |total: usize, k: usize| -> Vec<usize> {
        let mut out = vec![total / k; k];
        for slot in out.iter_mut().take(total % k) {
            *slot += 1;
        }
        out
    };
    let k = classes.len();
    let train_want = want(n_train, k);
    let test_want = want(n_test, k);
    for (c, digit) in classes.iter().enumerate() {
        let need = train_want[c] + test_want[c];
        let have = indices_per_class[c].len();
        if have < need {
            return Err(Error::InsufficientClass { digit: *digit, have, need });
        }
    }

    let build = |takes: &[usize], offset_takes: &[usize]| -> Result<Dataset> {
        let total: usize = takes.iter().sum();
        let mut x = Array2::zeros((total.max(1), item_len));
        let mut y = Array1::zeros(total.max(1));
        let mut r = 0;
        for (c, take) in takes.iter().enumerate() {
            let start = offset_takes[c];
            for &i in &indices_per_class[c][start..start + take] {
                let raw = &images.payload[i * item_len..(i + 1) * item_len];
                for (j, b) in raw.iter().enumerate() {
                    x[[r, j]] = *b as f64 / 255.0;
                }
                y[r] = if c == 0 { 1.0 } else { -1.0 };
                r += 1;
            }
        }
        if total == 0 {
            // dataset type requires n >= 1; callers treat an empty request
            // as "unused split" and never read it
            x.fill(0.0);
        }
        Dataset::new(x, y)
    };

    let zero_offsets = vec![0usize; k];
    let train = build(&train_want, &zero_offsets)?;
    let test = build(&test_want, &train_want)?;
    Ok((train, test))
}


/// Locate a staged MNIST directory: `KERNEL_ROBUST_MNIST_DIR` if set, else
/// `data/mnist` relative to the workspace root, else relative to the
/// current directory. Returns `None` when the files are absent.
pub fn mnist_data_dir() -> Option<std::path::PathBuf> {
    let candidates: Vec<std::path::PathBuf> = [
        std::env::var_os("KERNEL_ROBUST_MNIST_DIR").map(std::path::PathBuf::from),
        option_env!("CARGO_MANIFEST_DIR")
            .map(|m| std::path::Path::new(m).join("../../data/mnist")),
        Some(std::path::PathBuf::from("data/mnist")),
    ]
    .into_iter()
    .flatten()
    .collect();
    candidates
        .into_iter()
        .find(|c| c.join("train-images-idx3-ubyte").exists())
}
