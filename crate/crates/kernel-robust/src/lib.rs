//! Regularized kernel regression in an RKHS with three training modes —
//! standard ridge, data augmentation with input noise, and adversarial
//! training — plus closed-form limiting estimators and reproducible
//! experiment runners that measure generalization error and Lipschitz
//! constants across regularization paths.
//!
//! The crate is organized around a small set of layers:
//!
//! * [`kernel`] — positive-definite kernels with exact first and mixed
//!   second derivatives (Gaussian, quadratic, linear).
//! * [`rkhs`] — finite dictionaries of point atoms `K_x` and tangent atoms
//!   `T_x·u`, Gram assembly, inner products, projections, and regularized
//!   least squares in the Gram metric.
//! * [`estimators`] — the seven fitting routes: standard ridge, augmented,
//!   adversarial (sub)gradient descent, the two linearized objectives, and
//!   the two damped-correction limiting formulas.
//! * [`perturbation`] — standalone numerical verification of the perturbed
//!   ridge-system lemma and the 2x2 block inversion identity.
//! * [`metrics`] — empirical MSE, Lipschitz estimators, RKHS norm ratios,
//!   and closed-form quadratic generalization error for spherically
//!   symmetric laws.
//! * [`scenarios`] — seeded experiment runners (two-point, quadratic
//!   identity, synthetic sweeps, MNIST digit pairs, adversarial iteration
//!   trajectories) emitting CSV reports and ordering verdicts.
//! * [`data`] — synthetic data generation, IDX/MNIST ingestion, CSV and
//!   TOML config I/O.
//!
//! Every run is deterministic given its config and master seed; per-cell
//! RNG streams are derived by seed mixing so results are independent of
//! thread scheduling. See the `examples/` directory for one runnable
//! program per capability, and the `kernel-robust` binary for the batch
//! CLI over the same runners.

pub mod data;
pub mod error;
pub mod estimators;
pub mod kernel;
pub(crate) mod linalg;
pub mod metrics;
pub mod perturbation;
pub mod plot;
pub mod rkhs;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use rkhs::{Atom, Dictionary, RkhsFunction};
