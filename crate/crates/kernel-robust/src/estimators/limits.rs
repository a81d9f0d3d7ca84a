//! Damped-correction limiting formulas for the augmented and adversarial
//! estimators.
//!
//! Both estimators converge, as the perturbation size and the
//! regularization jointly shrink, to
//!
//! ```text
//! g_lambda = f_hat_0 - (P⊥ Σ P⊥ + (lambda/eps²) I)^{-1} P⊥ Σ P f_hat_0
//! ```
//!
//! where `P` projects onto the span of the point atoms, `P⊥ = I - P`, and
//! `Σ = (1/n) Σ_i T_{x_i} M T_{x_i}ᵀ` with `M` the second moment of the
//! perturbation directions (`M = I` for the adversarial unit ball). The
//! identity's `lambda/eps²` term acts on the whole span; at `lambda = 0`
//! the inverse is the cutoff pseudoinverse restricted to the range of
//! `P⊥ Σ P⊥`, which realizes the tangent-orthogonal interpolant `g_0`.
//!
//! Sign and base point: the correction is subtracted from the ridgeless
//! fit. This is the version produced by the perturbation lemma and by the
//! exact minimization of the linearized objectives (tangent orthogonality
//! of `g_0` pins both choices; the additive variant is not orthogonal and
//! does not match the brute-force augmented estimator).

use super::{check_psd, Dataset, FitMode, FitResult, KtSpan};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg;
use ndarray::prelude::*;

/// Which second-moment matrix enters the mixed term `P⊥ Σ P` of the
/// adversarial limit. The default uses the same `M = I` as the inverse
/// term; `Sigma(M)` keeps a caller-supplied augmentation moment in the
/// mixed term only.
#[derive(Debug, Clone)]
pub enum MixedTerm {
    SigmaPrime,
    Sigma(Array2<f64>),
}

fn limit_formula(
    span: &KtSpan,
    y: ArrayView1<f64>,
    lambda: f64,
    eps: f64,
    m_inverse: &Array2<f64>,
    m_mixed: Option<&Array2<f64>>,
) -> Result<Array1<f64>> {
    let u0 = span.standard_fit_coords(y, 0.0)?;
    let r = span.rank();
    let proj = span.point_projector()?;
    let perp = &Array2::eye(r) - &proj;
    let sigma = span.sigma(m_inverse);
    let a = perp.dot(&sigma).dot(&perp);
    let mixed = match m_mixed {
        Some(m) => span.sigma(m),
        None => sigma,
    };
    let b = perp.dot(&mixed.dot(&proj.dot(&u0)));
    let damping = lambda / (eps * eps);
    let w = linalg::solve_psd(&a, b.view(), damping)?;
    Ok(&u0 - &w)
}

/// The limiting formula `g_lambda` for the augmented estimator, with
/// perturbation second moment `M`.
pub fn limit_augmented(
    data: &Dataset,
    kernel: &Kernel,
    lambda: f64,
    eps: f64,
    m: &Array2<f64>,
) -> Result<FitResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("limit formulas require eps > 0".into()));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("negative lambda {lambda}")));
    }
    check_psd(m, data.dim())?;
    let span = KtSpan::build(data, kernel)?;
    let u = limit_formula(&span, data.y(), lambda, eps, m, None)?;
    let f = span.function_from_coords(u.view());
    Ok(FitResult::plain(f, FitMode::LimitAugmented, lambda, eps))
}

/// The limiting formula `g'_lambda` for the adversarial estimator
/// (unit-ball perturbations): `M = I` throughout.
pub fn limit_adversarial(
    data: &Dataset,
    kernel: &Kernel,
    lambda: f64,
    eps: f64,
) -> Result<FitResult> {
    limit_adversarial_mixed(data, kernel, lambda, eps, MixedTerm::SigmaPrime)
}

/// Adversarial limit with an explicit choice for the mixed term.
pub fn limit_adversarial_mixed(
    data: &Dataset,
    kernel: &Kernel,
    lambda: f64,
    eps: f64,
    mixed: MixedTerm,
) -> Result<FitResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("limit formulas require eps > 0".into()));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("negative lambda {lambda}")));
    }
    let p = data.dim();
    let eye = Array2::eye(p);
    let span = KtSpan::build(data, kernel)?;
    let u = match mixed {
        MixedTerm::SigmaPrime => limit_formula(&span, data.y(), lambda, eps, &eye, None)?,
        MixedTerm::Sigma(m) => {
            check_psd(&m, p)?;
            limit_formula(&span, data.y(), lambda, eps, &eye, Some(&m))?
        }
    };
    let f = span.function_from_coords(u.view());
    let mut res = FitResult::plain(f, FitMode::LimitAdversarial, lambda, eps);
    res.eps = eps;
    Ok(res)
}
