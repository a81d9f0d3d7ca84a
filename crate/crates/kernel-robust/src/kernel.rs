//! Positive-definite kernels with exact derivative evaluations.
//!
//! Every kernel exposes three evaluations: the value `k(x, y)`, the gradient
//! of `k` with respect to the second argument (`grad2`), and the mixed
//! second-derivative matrix `∂²k/∂x_i∂y_j` (`hess12`). These realize the
//! inner products between point atoms `K_x` and tangent atoms `T_x·u`:
//!
//! * `<K_x, K_y>   = k(x, y)`
//! * `<K_x, T_y u> = grad2(x, y)·u`
//! * `<T_x u, T_y v> = uᵀ hess12(x, y) v`
//!
//! Derivatives are analytic per variant; central finite differences exist
//! only as the test oracle behind [`check_derivatives`]. All arithmetic is
//! f64.

use crate::error::{Error, Result};
use ndarray::prelude::*;
use serde::{Deserialize, Serialize};

/// A positive-definite kernel on `R^p`.
///
/// Immutable value type; all evaluations are pure and thread-safe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    /// `k(x, y) = exp(-gamma * ||x - y||^2)` with `gamma > 0`; `k(x, x) = 1`.
    Gaussian { gamma: f64, dim: usize },
    /// `k(x, y) = a1^2 x·y + a2^2 (x·y)^2`, the explicit feature map
    /// `[a1 x, a2 x xᵀ]`; `a1, a2 >= 0`, not both zero.
    Quadratic { a1: f64, a2: f64, dim: usize },
    /// `k(x, y) = x·y`. Degenerate test kernel: the Lipschitz constant of a
    /// linear fit is analytic.
    Linear { dim: usize },
}

impl Kernel {
    pub fn gaussian(gamma: f64, dim: usize) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gaussian bandwidth must be positive and finite, got {gamma}"
            )));
        }
        Ok(Kernel::Gaussian { gamma, dim })
    }

    pub fn quadratic(a1: f64, a2: f64, dim: usize) -> Result<Self> {
        if a1 < 0.0 || a2 < 0.0 || !(a1.is_finite() && a2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quadratic coefficients must be nonnegative, got a1={a1}, a2={a2}"
            )));
        }
        if a1 == 0.0 && a2 == 0.0 {
            return Err(Error::InvalidParameter(
                "quadratic coefficients must not both be zero".into(),
            ));
        }
        Ok(Kernel::Quadratic { a1, a2, dim })
    }

    pub fn linear(dim: usize) -> Self {
        Kernel::Linear { dim }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Kernel::Gaussian { dim, .. } | Kernel::Quadratic { dim, .. } | Kernel::Linear { dim } => dim,
        }
    }

    fn check_dims(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<()> {
        let p = self.dim();
        if x.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: x.len() });
        }
        if y.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: y.len() });
        }
        Ok(())
    }

    /// `k(x, y)`; symmetric in its arguments.
    pub fn eval(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
        self.check_dims(x, y)?;
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        match *self {
            Kernel::Gaussian { gamma, .. } => {
                let mut sq = 0.0;
                for (a, b) in x.iter().zip(y.iter()) {
                    let d = a - b;
                    sq += d * d;
                }
                (-gamma * sq).exp()
            }
            Kernel::Quadratic { a1, a2, .. } => {
                let s = x.dot(&y);
                a1 * a1 * s + a2 * a2 * s * s
            }
            Kernel::Linear { .. } => x.dot(&y),
        }
    }

    /// Gradient of `k(x, ·)` with respect to the second argument.
    ///
    /// Realizes `<K_x, T_y e_j> = ∂k(x,y)/∂y_j`.
    pub fn grad2(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_dims(x, y)?;
        Ok(self.grad2_unchecked(x, y))
    }

    pub(crate) fn grad2_unchecked(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Array1<f64> {
        match *self {
            Kernel::Gaussian { gamma, .. } => {
                let k = self.eval_unchecked(x, y);
                let mut g = x.to_owned();
                g -= &y;
                g *= 2.0 * gamma * k;
                g
            }
            Kernel::Quadratic { a1, a2, .. } => {
                let s = x.dot(&y);
                let mut g = x.to_owned();
                g *= a1 * a1 + 2.0 * a2 * a2 * s;
                g
            }
            Kernel::Linear { .. } => x.to_owned(),
        }
    }

    /// Mixed second derivative `H[i][j] = ∂²k(x,y)/∂x_i∂y_j`.
    ///
    /// Satisfies `hess12(x, y) = hess12(y, x)ᵀ` and realizes
    /// `<T_x e_i, T_y e_j> = H[i][j]`.
    pub fn hess12(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<Array2<f64>> {
        self.check_dims(x, y)?;
        Ok(self.hess12_unchecked(x, y))
    }

    pub(crate) fn hess12_unchecked(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Array2<f64> {
        let p = self.dim();
        match *self {
            Kernel::Gaussian { gamma, .. } => {
                let k = self.eval_unchecked(x, y);
                let mut h = Array2::eye(p);
                let d = &x.to_owned() - &y;
                for i in 0..p {
                    for j in 0..p {
                        h[[i, j]] -= 2.0 * gamma * d[i] * d[j];
                    }
                }
                h *= 2.0 * gamma * k;
                h
            }
            Kernel::Quadratic { a1, a2, .. } => {
                let s = x.dot(&y);
                let c = a1 * a1 + 2.0 * a2 * a2 * s;
                let mut h = Array2::eye(p);
                h *= c;
                for i in 0..p {
                    for j in 0..p {
                        h[[i, j]] += 2.0 * a2 * a2 * y[i] * x[j];
                    }
                }
                h
            }
            Kernel::Linear { .. } => Array2::eye(p),
        }
    }

    /// Gram matrix of two point sets (rows are points), using BLAS-friendly
    /// whole-matrix formulas. Equals entrywise [`Kernel::eval`].
    pub fn point_gram(&self, xs: ArrayView2<f64>, ys: ArrayView2<f64>) -> Result<Array2<f64>> {
        let p = self.dim();
        if xs.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, got: xs.ncols() });
        }
        if ys.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, got: ys.ncols() });
        }
        let s = xs.dot(&ys.t());
        Ok(match *self {
            Kernel::Gaussian { gamma, .. } => {
                let xn: Array1<f64> = xs.rows().into_iter().map(|r| r.dot(&r)).collect();
                let yn: Array1<f64> = ys.rows().into_iter().map(|r| r.dot(&r)).collect();
                let mut g = s;
                for (i, mut row) in g.rows_mut().into_iter().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        let sq = (xn[i] + yn[j] - 2.0 * *v).max(0.0);
                        *v = (-gamma * sq).exp();
                    }
                }
                g
            }
            Kernel::Quadratic { a1, a2, .. } => s.mapv(|v| a1 * a1 * v + a2 * a2 * v * v),
            Kernel::Linear { .. } => s,
        })
    }
}

/// Outcome of comparing analytic derivatives against central differences.
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub samples: usize,
    pub max_grad_deviation: f64,
    pub max_hess_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DerivativeReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_grad_deviation.max(self.max_hess_deviation)
    }
}

/// Compare `grad2` and `hess12` against central finite differences with step
/// `h` over the given sample pairs. Never errors: failures are carried in
/// the report (`pass` is false whenever the max deviation exceeds `tol`).
pub fn check_derivatives(
    kernel: &Kernel,
    samples: &[(Array1<f64>, Array1<f64>)],
    h: f64,
    tol: f64,
) -> DerivativeReport {
    let p = kernel.dim();
    let mut max_grad = 0.0f64;
    let mut max_hess = 0.0f64;
    for (x, y) in samples {
        let g = kernel.grad2_unchecked(x.view(), y.view());
        let hm = kernel.hess12_unchecked(x.view(), y.view());
        for j in 0..p {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += h;
            ym[j] -= h;
            let fd = (kernel.eval_unchecked(x.view(), yp.view())
                - kernel.eval_unchecked(x.view(), ym.view()))
                / (2.0 * h);
            max_grad = max_grad.max((g[j] - fd).abs());
            for i in 0..p {
                let mut xpp = x.clone();
                let mut xmm = x.clone();
                xpp[i] += h;
                xmm[i] -= h;
                let fdd = (kernel.eval_unchecked(xpp.view(), yp.view())
                    - kernel.eval_unchecked(xpp.view(), ym.view())
                    - kernel.eval_unchecked(xmm.view(), yp.view())
                    + kernel.eval_unchecked(xmm.view(), ym.view()))
                    / (4.0 * h * h);
                max_hess = max_hess.max((hm[[i, j]] - fdd).abs());
            }
        }
    }
    let pass = max_grad.max(max_hess) <= tol;
    DerivativeReport {
        samples: samples.len(),
        max_grad_deviation: max_grad,
        max_hess_deviation: max_hess,
        tolerance: tol,
        pass,
    }
}
