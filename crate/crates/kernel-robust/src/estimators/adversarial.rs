//! Adversarial training by gradient descent over a fixed candidate attack
//! dictionary.
//!
//! Each iteration selects, per training point, the candidate attack that
//! currently maximizes the squared residual (ties break to the lowest
//! index), then takes an exact functional-gradient step on the resulting
//! objective. The fitted function's values at all candidate points are
//! maintained incrementally, so one iteration costs `O(n m)` instead of a
//! full `m x m` matrix-vector product.

use super::{AugmentationModel, Dataset, FitMode, FitResult};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::rkhs::{Dictionary, RkhsFunction};
use ndarray::prelude::*;

/// Step-size rule for the adversarial descent, as a function of the
/// 1-based iteration index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `max(floor, scale / sqrt(k))`: large early steps decaying to a floor.
    SqrtFloor { floor: f64, scale: f64 },
    /// `min(cap, scale / sqrt(k))`: capped early, decaying after
    /// `k > (scale/cap)^2`.
    SqrtCap { cap: f64, scale: f64 },
    Constant { step: f64 },
}

impl StepSchedule {
    pub fn step(&self, k: usize) -> f64 {
        let k = k.max(1) as f64;
        match *self {
            StepSchedule::SqrtFloor { floor, scale } => floor.max(scale / k.sqrt()),
            StepSchedule::SqrtCap { cap, scale } => cap.min(scale / k.sqrt()),
            StepSchedule::Constant { step } => step,
        }
    }
}

impl Default for StepSchedule {
    /// The schedule that reproduces the reference iteration trajectories:
    /// `max(0.04, 4/sqrt(k))`.
    fn default() -> Self {
        StepSchedule::SqrtFloor { floor: 0.04, scale: 4.0 }
    }
}

/// State recorded at a checkpoint iteration.
#[derive(Debug, Clone)]
pub struct TrajectorySnapshot {
    /// 1-based iteration count after which the snapshot was taken.
    pub iteration: usize,
    /// The fitted function after `iteration` steps.
    pub function: RkhsFunction,
    /// Per-point candidate indices selected during the step that produced
    /// this snapshot.
    pub selected: Vec<usize>,
}

/// Adversarial training over the fixed candidate set `{x_i + eps delta}`.
///
/// Coefficients start at zero. Snapshots are stored at the iterations in
/// `record_at`; a non-finite loss aborts with [`Error::Diverged`] carrying
/// the last finite iteration.
pub fn fit_adversarial_gd(
    data: &Dataset,
    kernel: &Kernel,
    lambda: f64,
    attacks: &AugmentationModel,
    schedule: StepSchedule,
    iters: usize,
    record_at: &[usize],
) -> Result<FitResult> {
    if iters == 0 {
        return Err(Error::InvalidParameter("iters must be >= 1".into()));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("negative lambda {lambda}")));
    }
    let (eps, directions) = match attacks {
        AugmentationModel::FiniteSets { eps, directions } => (*eps, directions),
        _ => {
            return Err(Error::InvalidParameter(
                "fit_adversarial_gd requires a finite candidate attack set per point".into(),
            ))
        }
    };
    let n = data.len();
    let p = data.dim();
    attacks.validate(n, p)?;
    if kernel.dim() != p {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: p });
    }

    // candidate points, point-major
    let m_total: usize = directions.iter().map(|d| d.nrows()).sum();
    let mut z = Array2::zeros((m_total, p));
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    let mut r = 0;
    for i in 0..n {
        for d in directions[i].rows() {
            let mut row = data.x().row(i).to_owned();
            row.scaled_add(eps, &d);
            z.row_mut(r).assign(&row);
            r += 1;
        }
        offsets.push(r);
    }
    let (zu, map) = super::unique_rows(&z);
    let mu = zu.nrows();
    let gram = {
        let g = kernel.point_gram(zu.view(), zu.view())?;
        (&g + &g.t()) * 0.5
    };

    let dict = Dictionary::from_points(kernel.clone(), zu.view())?;
    debug_assert_eq!(dict.len(), mu);

    let mut coeffs = Array1::<f64>::zeros(mu);
    let mut f_all = Array1::<f64>::zeros(mu);
    let record: std::collections::BTreeSet<usize> = record_at.iter().cloned().collect();
    let mut trajectory: Vec<TrajectorySnapshot> = Vec::with_capacity(record.len());
    let mut selected = vec![0usize; n];
    let inv_n = 1.0 / n as f64;

    for k in 1..=iters {
        let step = schedule.step(k);
        // inner maximization over the finite candidate set
        for i in 0..n {
            let (lo, hi) = (offsets[i], offsets[i + 1]);
            let yi = data.y()[i];
            let mut best_j = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (j, rr) in (lo..hi).enumerate() {
                let resid = yi - f_all[map[rr]];
                let val = resid * resid;
                if val > best_val {
                    best_val = val;
                    best_j = j;
                }
            }
            selected[i] = best_j;
        }
        // functional-gradient step: grad = -(2/n) sum_i resid_i K_{z_i*} + 2 lambda f
        if lambda > 0.0 {
            let gl = 2.0 * lambda * step;
            let gc = gram.dot(&coeffs);
            coeffs *= 1.0 - gl;
            f_all.scaled_add(-gl, &gc);
        }
        for i in 0..n {
            let rr = offsets[i] + selected[i];
            let u = map[rr];
            let resid = data.y()[i] - f_all[u];
            let coef = -2.0 * inv_n * resid;
            coeffs[u] -= step * coef;
            f_all.scaled_add(-step * coef, &gram.column(u));
        }
        if !f_all.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged { iteration: k - 1 });
        }
        if record.contains(&k) {
            trajectory.push(TrajectorySnapshot {
                iteration: k,
                function: RkhsFunction::new(dict.clone(), coeffs.clone())?,
                selected: selected.clone(),
            });
        }
    }

    let f = RkhsFunction::new(dict, coeffs)?;
    Ok(FitResult {
        f,
        mode: FitMode::AdversarialGd,
        lambda,
        eps,
        seed: 0,
        trajectory: Some(trajectory),
        warning: None,
    })
}
