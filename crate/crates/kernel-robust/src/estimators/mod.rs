//! The seven estimators: standard ridge, augmented ridge, adversarial
//! (sub)gradient descent, the linearized augmented and adversarial
//! objectives, and the two damped-correction limiting formulas.
//!
//! All fits are pure functions of their inputs (plus an explicit seed where
//! randomness is involved) and return a [`FitResult`] whose function lies in
//! the span of the dictionary derived from the training data and the
//! perturbation family.

mod adversarial;
mod limits;
mod linearized;

pub use adversarial::{fit_adversarial_gd, StepSchedule, TrajectorySnapshot};
pub use limits::{limit_adversarial, limit_adversarial_mixed, limit_augmented, MixedTerm};
pub use linearized::{fit_linearized_adversarial, fit_linearized_augmented, SolverBudget};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg;
use crate::rkhs::{Atom, Dictionary, RkhsFunction, SpanBasis};
use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use std::collections::HashMap;

/// Training pairs `(x_i, y_i)`, rows of `x`.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidParameter("dataset must have n >= 1 rows".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Dataset { x, y })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// The perturbation family `Delta = eps * Delta_0`.
#[derive(Debug, Clone)]
pub enum AugmentationModel {
    /// Per-point finite sets of unit directions; each is scaled by `eps`
    /// at use. `directions[i]` has one unit row per perturbation of point i.
    FiniteSets { eps: f64, directions: Vec<Array2<f64>> },
    /// Second-moment description `M = E[delta_0 delta_0ᵀ]` (symmetric PSD).
    SecondMoment { eps: f64, m: Array2<f64> },
    /// The unit Euclidean ball (analytic; accepted by the limiting
    /// formulas, where it amounts to `M = I`).
    UnitBall { eps: f64 },
}

impl AugmentationModel {
    pub fn eps(&self) -> f64 {
        match self {
            AugmentationModel::FiniteSets { eps, .. }
            | AugmentationModel::SecondMoment { eps, .. }
            | AugmentationModel::UnitBall { eps } => *eps,
        }
    }

    /// Finite sets of `k` uniform unit directions per point.
    pub fn finite_sphere_sets(
        eps: f64,
        n: usize,
        k: usize,
        p: usize,
        rng: &mut impl rand::Rng,
    ) -> Self {
        let directions = (0..n)
            .map(|_| crate::data::sample_unit_sphere(p, k, rng))
            .collect();
        AugmentationModel::FiniteSets { eps, directions }
    }

    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if self.eps() < 0.0 || !self.eps().is_finite() {
            return Err(Error::InvalidParameter(format!("eps must be >= 0, got {}", self.eps())));
        }
        match self {
            AugmentationModel::FiniteSets { directions, .. } => {
                if directions.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: directions.len() });
                }
                for (i, d) in directions.iter().enumerate() {
                    if d.nrows() == 0 {
                        return Err(Error::InvalidParameter(format!(
                            "point {i} has an empty perturbation list"
                        )));
                    }
                    if d.ncols() != p {
                        return Err(Error::DimensionMismatch { expected: p, got: d.ncols() });
                    }
                    for row in d.rows() {
                        let nrm = row.dot(&row).sqrt();
                        if (nrm - 1.0).abs() > 1e-9 {
                            return Err(Error::InvalidParameter(format!(
                                "perturbation directions must be unit vectors (point {i}, |v| = {nrm})"
                            )));
                        }
                    }
                }
            }
            AugmentationModel::SecondMoment { m, .. } => {
                check_psd(m, p)?;
            }
            AugmentationModel::UnitBall { .. } => {}
        }
        Ok(())
    }
}

pub(crate) fn check_psd(m: &Array2<f64>, p: usize) -> Result<()> {
    if m.nrows() != p || m.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, got: m.nrows().max(m.ncols()) });
    }
    let asym = (m - &m.t()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if asym > 1e-10 * m.diag().sum().abs().max(1.0) {
        return Err(Error::InvalidParameter("second-moment matrix not symmetric".into()));
    }
    let sym = (m + &m.t()) * 0.5;
    let (w, _) = sym.eigh(UPLO::Lower)?;
    let trace = m.diag().sum().max(f64::MIN_POSITIVE);
    if w[0] < -1e-10 * trace {
        return Err(Error::InvalidParameter(format!(
            "second-moment matrix not PSD (lambda_min = {})",
            w[0]
        )));
    }
    Ok(())
}

/// Which estimator produced a [`FitResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Standard,
    Augmented,
    AdversarialGd,
    LinearizedAugmented,
    LinearizedAdversarial,
    LimitAugmented,
    LimitAdversarial,
}

impl FitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMode::Standard => "standard",
            FitMode::Augmented => "augmented",
            FitMode::AdversarialGd => "adversarial_gd",
            FitMode::LinearizedAugmented => "linearized_augmented",
            FitMode::LinearizedAdversarial => "linearized_adversarial",
            FitMode::LimitAugmented => "limit_augmented",
            FitMode::LimitAdversarial => "limit_adversarial",
        }
    }
}

/// A fitted function with provenance and (for iterative fits) an optional
/// trajectory of snapshots.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub f: RkhsFunction,
    pub mode: FitMode,
    pub lambda: f64,
    pub eps: f64,
    pub seed: u64,
    pub trajectory: Option<Vec<TrajectorySnapshot>>,
    /// Set when an iterative solver stopped on budget before reaching its
    /// stationarity tolerance.
    pub warning: Option<String>,
}

impl FitResult {
    pub(crate) fn plain(f: RkhsFunction, mode: FitMode, lambda: f64, eps: f64) -> Self {
        FitResult { f, mode, lambda, eps, seed: 0, trajectory: None, warning: None }
    }
}

/// Standard kernel ridge regression.
///
/// Dual coefficients `alpha = (G + n lambda I)^{-1} y` over the dictionary
/// `{K_{x_i}}`; `lambda = 0` takes the cutoff pseudoinverse (minimum-norm
/// interpolant). The `1/n` data-term normalization is what puts the `n`
/// in front of `lambda` in the dual system.
pub fn fit_standard(data: &Dataset, kernel: &Kernel, lambda: f64) -> Result<FitResult> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("negative lambda {lambda}")));
    }
    if kernel.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: data.dim() });
    }
    let n = data.len();
    let dict = Dictionary::from_points(kernel.clone(), data.x())?;
    if dict.len() != n {
        return Err(Error::InvalidParameter(
            "duplicate training points are not supported by the dual solve".into(),
        ));
    }
    let g = dict.gram();
    let alpha = linalg::solve_psd(&g, data.y(), n as f64 * lambda)?;
    let f = RkhsFunction::new(dict, alpha)?;
    Ok(FitResult::plain(f, FitMode::Standard, lambda, 0.0))
}

/// Collapse bit-identical rows, returning the unique rows and the map from
/// original row index to unique index.
pub(crate) fn unique_rows(z: &Array2<f64>) -> (Array2<f64>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut order: Vec<usize> = Vec::new();
    let mut map = Vec::with_capacity(z.nrows());
    for (r, row) in z.rows().into_iter().enumerate() {
        let key: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        let next = seen.len();
        let idx = *seen.entry(key).or_insert_with(|| {
            order.push(r);
            next
        });
        map.push(idx);
    }
    let mut unique = Array2::zeros((order.len(), z.ncols()));
    for (u, &r) in order.iter().enumerate() {
        unique.row_mut(u).assign(&z.row(r));
    }
    (unique, map)
}

/// Ridge fit over the augmented dictionary `{K_{x_i + eps delta}}`.
///
/// Every augmented copy of point `i` enters the data term with weight
/// `1/(n |Delta_i|)`; bit-identical augmented points are merged with their
/// weights accumulated (weighted least squares is exact under this merge).
pub fn fit_augmented(
    data: &Dataset,
    kernel: &Kernel,
    lambda: f64,
    aug: &AugmentationModel,
) -> Result<FitResult> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("negative lambda {lambda}")));
    }
    let (eps, directions) = match aug {
        AugmentationModel::FiniteSets { eps, directions } => (*eps, directions),
        _ => {
            return Err(Error::InvalidParameter(
                "fit_augmented requires a finite perturbation set per point".into(),
            ))
        }
    };
    let n = data.len();
    let p = data.dim();
    aug.validate(n, p)?;
    if kernel.dim() != p {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: p });
    }
    let m_total: usize = directions.iter().map(|d| d.nrows()).sum();
    let mut z = Array2::zeros((m_total, p));
    let mut w = Array1::zeros(m_total);
    let mut t = Array1::zeros(m_total);
    let mut r = 0;
    for i in 0..n {
        let di = &directions[i];
        let wi = 1.0 / (n as f64 * di.nrows() as f64);
        for d in di.rows() {
            let mut row = data.x.row(i).to_owned();
            row.scaled_add(eps, &d);
            z.row_mut(r).assign(&row);
            w[r] = wi;
            t[r] = data.y[i];
            r += 1;
        }
    }
    let (zu, map) = unique_rows(&z);
    let mu = zu.nrows();
    let mut wu = Array1::<f64>::zeros(mu);
    let mut tu = Array1::<f64>::zeros(mu);
    for r in 0..m_total {
        wu[map[r]] += w[r];
        tu[map[r]] += w[r] * t[r];
    }
    for u in 0..mu {
        tu[u] /= wu[u];
    }
    let dict = Dictionary::from_points(kernel.clone(), zu.view())?;
    debug_assert_eq!(dict.len(), mu);
    let alpha = weighted_dual_solve(kernel, &dict, &zu, tu.view(), wu.view(), lambda)?;
    let f = RkhsFunction::new(dict, alpha)?;
    Ok(FitResult::plain(f, FitMode::Augmented, lambda, eps))
}

/// Ridge fits over the augmented dictionary for a whole `lambda` grid,
/// sharing the dictionary construction and one eigendecomposition across
/// all grid points. [`fit_augmented`] is the single-`lambda` case.
pub fn augmented_sweep(
    data: &Dataset,
    kernel: &Kernel,
    lambdas: &[f64],
    aug: &AugmentationModel,
) -> Result<Vec<FitResult>> {
    if let Some(l) = lambdas.iter().find(|l| **l < 0.0) {
        return Err(Error::InvalidParameter(format!("negative lambda {l}")));
    }
    let (eps, directions) = match aug {
        AugmentationModel::FiniteSets { eps, directions } => (*eps, directions),
        _ => {
            return Err(Error::InvalidParameter(
                "augmented fits require a finite perturbation set per point".into(),
            ))
        }
    };
    let n = data.len();
    let p = data.dim();
    aug.validate(n, p)?;
    if kernel.dim() != p {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: p });
    }
    let m_total: usize = directions.iter().map(|d| d.nrows()).sum();
    let mut z = Array2::zeros((m_total, p));
    let mut w = Array1::zeros(m_total);
    let mut t = Array1::zeros(m_total);
    let mut r = 0;
    for i in 0..n {
        let di = &directions[i];
        let wi = 1.0 / (n as f64 * di.nrows() as f64);
        for d in di.rows() {
            let mut row = data.x.row(i).to_owned();
            row.scaled_add(eps, &d);
            z.row_mut(r).assign(&row);
            w[r] = wi;
            t[r] = data.y[i];
            r += 1;
        }
    }
    let (zu, map) = unique_rows(&z);
    let mu = zu.nrows();
    let mut wu = Array1::<f64>::zeros(mu);
    let mut tu = Array1::<f64>::zeros(mu);
    for r in 0..m_total {
        wu[map[r]] += w[r];
        tu[map[r]] += w[r] * t[r];
    }
    for u in 0..mu {
        tu[u] /= wu[u];
    }
    let dict = Dictionary::from_points(kernel.clone(), zu.view())?;
    debug_assert_eq!(dict.len(), mu);
    let solver = WeightedDualSolver::new(kernel, &dict, &zu, wu.view(), lambdas)?;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let alpha = solver.solve(tu.view(), lambda)?;
        let f = RkhsFunction::new(dict.clone(), alpha)?;
        out.push(FitResult::plain(f, FitMode::Augmented, lambda, eps));
    }
    Ok(out)
}

/// Reusable weighted dual ridge solver over point atoms.
///
/// Uniform weights reduce to `(G + (lambda/w) I) alpha = y`; in general the
/// symmetric form `(B G B + lambda I) z = B y`, `alpha = B z` with
/// `B = diag(sqrt(w))` is solved through one symmetric eigendecomposition
/// reused across `lambda` values. For the quadratic kernel with many atoms
/// the solve drops into the explicit feature space (Woodbury form), which
/// is exact and much faster.
enum WeightedDualSolver {
    UniformEig { eig: linalg::SymEig, w: f64 },
    /// Large, strongly ridged systems: keep the Gram and run conjugate
    /// gradients per lambda instead of a cubic factorization.
    UniformCg { gram: Array2<f64>, w: f64 },
    UniformWoodbury { points: Array2<f64>, a1: f64, a2: f64, w: f64 },
    General { eig: linalg::SymEig, b: Array1<f64> },
}

impl WeightedDualSolver {
    fn new(
        kernel: &Kernel,
        dict: &Dictionary,
        points: &Array2<f64>,
        weights: ArrayView1<f64>,
        lambdas: &[f64],
    ) -> Result<Self> {
        let m = dict.len();
        let w0 = weights[0];
        let uniform = weights.iter().all(|w| (*w - w0).abs() <= 1e-15 * w0);
        if uniform {
            if let Kernel::Quadratic { a1, a2, .. } = *kernel {
                let p = points.ncols();
                if m > 4 * (p + p * p) && m > 512 {
                    return Ok(WeightedDualSolver::UniformWoodbury {
                        points: points.clone(),
                        a1,
                        a2,
                        w: w0,
                    });
                }
            }
            let g = dict.gram();
            if m >= 1500 {
                let trace = g.diag().sum();
                let min_ridge = lambdas
                    .iter()
                    .map(|l| l / w0)
                    .fold(f64::INFINITY, f64::min);
                if min_ridge > 1e-7 * trace / m as f64 {
                    return Ok(WeightedDualSolver::UniformCg { gram: g, w: w0 });
                }
            }
            return Ok(WeightedDualSolver::UniformEig { eig: linalg::SymEig::new(&g)?, w: w0 });
        }
        let g = dict.gram();
        let b: Array1<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let mut bgb = g;
        for i in 0..m {
            for j in 0..m {
                bgb[[i, j]] *= b[i] * b[j];
            }
        }
        Ok(WeightedDualSolver::General { eig: linalg::SymEig::new(&bgb)?, b })
    }

    fn solve(&self, targets: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
        match self {
            WeightedDualSolver::UniformEig { eig, w } => Ok(eig.solve_ridge(targets, lambda / w)),
            WeightedDualSolver::UniformCg { gram, w } => {
                let (x, _iters) =
                    linalg::solve_psd_cg(gram, targets, lambda / w, 1e-12, 10 * gram.nrows());
                Ok(x)
            }
            WeightedDualSolver::UniformWoodbury { points, a1, a2, w } => {
                quadratic_dual_woodbury(points, targets, lambda / w, *a1, *a2)
            }
            WeightedDualSolver::General { eig, b } => {
                let by: Array1<f64> =
                    targets.iter().zip(b.iter()).map(|(t, bi)| t * bi).collect();
                let z = eig.solve_ridge(by.view(), lambda);
                Ok(&z * b)
            }
        }
    }
}

fn weighted_dual_solve(
    kernel: &Kernel,
    dict: &Dictionary,
    points: &Array2<f64>,
    targets: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    lambda: f64,
) -> Result<Array1<f64>> {
    WeightedDualSolver::new(kernel, dict, points, weights, &[lambda])?.solve(targets, lambda)
}

/// Exact dual solve for the quadratic kernel via its explicit feature map.
///
/// With features `F` (rows `phi(z_r)`), `G = F Fᵀ` and for `ridge > 0`
/// `(G + ridge I)^{-1} y = (y - F (FᵀF + ridge I)^{-1} Fᵀ y) / ridge`;
/// at `ridge = 0` the minimum-norm interpolant is `F (FᵀF)^{+2} Fᵀ y`.
fn quadratic_dual_woodbury(
    points: &Array2<f64>,
    y: ArrayView1<f64>,
    ridge: f64,
    a1: f64,
    a2: f64,
) -> Result<Array1<f64>> {
    let (m, p) = (points.nrows(), points.ncols());
    let dim = p + p * p;
    let mut feats = Array2::zeros((m, dim));
    for (r, x) in points.rows().into_iter().enumerate() {
        for i in 0..p {
            feats[[r, i]] = a1 * x[i];
        }
        for i in 0..p {
            for j in 0..p {
                feats[[r, p + i * p + j]] = a2 * x[i] * x[j];
            }
        }
    }
    let ftf = feats.t().dot(&feats);
    let fty = feats.t().dot(&y);
    if ridge > 0.0 {
        let inner = linalg::solve_psd(&ftf, fty.view(), ridge)?;
        let mut alpha = y.to_owned();
        alpha -= &feats.dot(&inner);
        alpha /= ridge;
        Ok(alpha)
    } else {
        let eig = linalg::SymEig::new(&ftf)?;
        let cut = crate::rkhs::cutoff_for(&eig.vals);
        let inner =
            eig.apply_filtered(fty.view(), |d| if d > cut && cut > 0.0 { 1.0 / (d * d) } else { 0.0 });
        Ok(feats.dot(&inner))
    }
}

/// The joint span of the point atoms `K_{x_i}` and the canonical tangent
/// atoms `T_{x_i} e_j`, with orthonormal coordinates.
///
/// Atom order: `K_{x_1}, ..., K_{x_n}`, then tangent blocks in point-major,
/// coordinate-minor order.
pub struct KtSpan {
    basis: SpanBasis,
    n: usize,
    p: usize,
}

impl KtSpan {
    pub fn build(data: &Dataset, kernel: &Kernel) -> Result<Self> {
        let n = data.len();
        let p = data.dim();
        if kernel.dim() != p {
            return Err(Error::DimensionMismatch { expected: kernel.dim(), got: p });
        }
        let mut atoms = Vec::with_capacity(n * (1 + p));
        for i in 0..n {
            atoms.push(Atom::point(data.x.row(i).to_owned()));
        }
        for i in 0..n {
            for j in 0..p {
                let mut e = Array1::zeros(p);
                e[j] = 1.0;
                atoms.push(Atom::Tangent { x: data.x.row(i).to_owned(), dir: e });
            }
        }
        let dict = Dictionary::new(kernel.clone(), atoms)?;
        if dict.len() != n * (1 + p) {
            return Err(Error::InvalidParameter(
                "duplicate training points collapse tangent blocks; deduplicate the data".into(),
            ));
        }
        let basis = SpanBasis::new(dict)?;
        Ok(KtSpan { basis, n, p })
    }

    pub fn basis(&self) -> &SpanBasis {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Coordinates of the point atoms (r x n).
    pub fn point_coords(&self) -> ArrayView2<'_, f64> {
        self.basis.atom_coords().slice_move(s![.., ..self.n])
    }

    /// Coordinates of point i's tangent block (r x p).
    pub fn tangent_coords(&self, i: usize) -> ArrayView2<'_, f64> {
        let start = self.n + i * self.p;
        self.basis.atom_coords().slice_move(s![.., start..start + self.p])
    }

    /// Span coordinates of the standard ridge fit at the given `lambda`.
    pub fn standard_fit_coords(&self, y: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
        let n = self.n as f64;
        let k = self.point_coords();
        let a = k.dot(&k.t()) / n;
        let b = k.dot(&y) / n;
        linalg::solve_psd(&a, b.view(), lambda)
    }

    /// `Sigma = (1/n) sum_i Theta_i M Theta_iᵀ` in span coordinates.
    pub fn sigma(&self, m: &Array2<f64>) -> Array2<f64> {
        let r = self.rank();
        let mut sig = Array2::zeros((r, r));
        for i in 0..self.n {
            let th = self.tangent_coords(i);
            let tm = th.dot(m);
            sig += &tm.dot(&th.t());
        }
        sig /= self.n as f64;
        sig
    }

    /// Orthogonal projector onto the span of the point atoms.
    pub fn point_projector(&self) -> Result<Array2<f64>> {
        linalg::column_space_projector(&self.point_coords().to_owned())
    }

    pub fn function_from_coords(&self, u: ArrayView1<f64>) -> RkhsFunction {
        self.basis.function_from_coords(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::cell_rng;
    use rand::prelude::*;

    fn probe_points(rng: &mut impl Rng, count: usize, p: usize) -> Array2<f64> {
        Array2::from_shape_fn((count, p), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn one_point_closed_form() {
        // n=1, gaussian, y=2, lambda=1 -> f(x1) = 2/(1+1) = 1
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let data = Dataset::new(array![[0.3, -0.4]], array![2.0]).unwrap();
        let fit = fit_standard(&data, &k, 1.0).unwrap();
        let v = fit.f.evaluate(array![0.3, -0.4].view()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ridgeless_fit_interpolates() {
        let k = Kernel::gaussian(2.0, 2).unwrap();
        let mut rng = cell_rng(1, 0);
        let x = probe_points(&mut rng, 6, 2);
        let y = Array1::from_shape_fn(6, |_| rng.gen_range(-1.0..1.0));
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let fit = fit_standard(&data, &k, 0.0).unwrap();
        for i in 0..6 {
            let v = fit.f.evaluate(x.row(i)).unwrap();
            assert!((v - y[i]).abs() < 1e-8, "point {i}: {v} vs {}", y[i]);
        }
    }

    #[test]
    fn quadratic_ridgeless_matches_feature_closed_form() {
        // x_i = e_i: minimum-norm interpolant is (1/(a1^2+a2^2)) [a1 y, a2 diag(y)]
        let (a1, a2) = (1.0, 2.0);
        let (n, p) = (3, 5);
        let k = Kernel::quadratic(a1, a2, p).unwrap();
        let mut x = Array2::zeros((n, p));
        for i in 0..n {
            x[[i, i]] = 1.0;
        }
        let y = array![0.7, -1.2, 0.4];
        let data = Dataset::new(x, y.clone()).unwrap();
        let fit = fit_standard(&data, &k, 0.0).unwrap();
        let s = a1 * a1 + a2 * a2;
        let mut rng = cell_rng(2, 0);
        for _ in 0..50 {
            let xp = Array1::from_shape_fn(p, |_| rng.gen_range(-1.0..1.0));
            // f(x) = (1/s) (a1^2 sum y_i x_i + a2^2 sum y_i x_i^2)
            let mut expect = 0.0;
            for i in 0..n {
                expect += a1 * a1 * y[i] * xp[i] + a2 * a2 * y[i] * xp[i] * xp[i];
            }
            expect /= s;
            let got = fit.f.evaluate(xp.view()).unwrap();
            assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
        }
    }

    #[test]
    fn augmented_with_zero_eps_matches_standard() {
        let k = Kernel::gaussian(1.5, 3).unwrap();
        let mut rng = cell_rng(3, 0);
        let x = probe_points(&mut rng, 5, 3);
        let y = Array1::from_shape_fn(5, |_| rng.gen_range(-1.0..1.0));
        let data = Dataset::new(x, y).unwrap();
        let aug = AugmentationModel::finite_sphere_sets(0.0, 5, 7, 3, &mut rng);
        let lambda = 1e-3;
        let fa = fit_augmented(&data, &k, lambda, &aug).unwrap();
        let fs = fit_standard(&data, &k, lambda).unwrap();
        let probes = probe_points(&mut rng, 100, 3);
        for row in probes.rows() {
            let a = fa.f.evaluate(row).unwrap();
            let b = fs.f.evaluate(row).unwrap();
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn augmented_objective_beats_random_candidates() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let mut rng = cell_rng(4, 0);
        let x = probe_points(&mut rng, 5, 2);
        let y = Array1::from_shape_fn(5, |_| rng.gen_range(-1.0..1.0));
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let aug = AugmentationModel::finite_sphere_sets(0.2, 5, 3, 2, &mut rng);
        let lambda = 1e-3;
        let fit = fit_augmented(&data, &k, lambda, &aug).unwrap();
        let dict = fit.f.dictionary().clone();
        let g = dict.gram();
        let dirs = match &aug {
            AugmentationModel::FiniteSets { directions, .. } => directions.clone(),
            _ => unreachable!(),
        };
        // objective over coefficient vectors in the span of the augmented dictionary
        let objective = |c: &Array1<f64>| -> f64 {
            let f = RkhsFunction::new(dict.clone(), c.clone()).unwrap();
            let mut val = 0.0;
            for i in 0..5 {
                let di = &dirs[i];
                let mut avg = 0.0;
                for d in di.rows() {
                    let mut z = x.row(i).to_owned();
                    z.scaled_add(0.2, &d);
                    let r = y[i] - f.evaluate(z.view()).unwrap();
                    avg += r * r;
                }
                val += avg / di.nrows() as f64;
            }
            val / 5.0 + lambda * c.dot(&g.dot(c))
        };
        let c0 = fit.f.coeffs().to_owned();
        let best = objective(&c0);
        for _ in 0..1000 {
            let c = Array1::from_shape_fn(dict.len(), |_| rng.gen_range(-2.0..2.0));
            assert!(objective(&c) >= best - 1e-12);
        }
    }

    #[test]
    fn unique_rows_merges_bit_identical_only() {
        let z = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0 + 1e-16], [3.0, 4.0]];
        let (u, map) = unique_rows(&z);
        // 2.0 + 1e-16 rounds to 2.0 in f64, so rows 0..3 share bits
        assert_eq!(u.nrows(), 2);
        assert_eq!(map, vec![0, 0, 0, 1]);
    }

    #[test]
    fn woodbury_matches_eigh_dual_solve() {
        let (a1, a2) = (1.0, 1.7);
        let p = 3;
        let mut rng = cell_rng(5, 0);
        let pts = probe_points(&mut rng, 40, p);
        let y = Array1::from_shape_fn(40, |_| rng.gen_range(-1.0..1.0));
        let kq = Kernel::quadratic(a1, a2, p).unwrap();
        let g = kq.point_gram(pts.view(), pts.view()).unwrap();
        for ridge in [0.0, 1e-6, 1e-2, 1.0] {
            let direct = linalg::solve_psd(&g, y.view(), ridge).unwrap();
            let wood = quadratic_dual_woodbury(&pts, y.view(), ridge, a1, a2).unwrap();
            let pred_d = g.dot(&direct);
            let pred_w = g.dot(&wood);
            for (a, b) in pred_d.iter().zip(pred_w.iter()) {
                assert!((a - b).abs() < 1e-7, "ridge {ridge}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn standard_ridge_path_is_monotone() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let mut rng = cell_rng(6, 0);
        let x = probe_points(&mut rng, 8, 2);
        let y = Array1::from_shape_fn(8, |_| rng.gen_range(-1.0..1.0));
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let mut prev_norm = f64::INFINITY;
        let mut prev_resid = -1.0;
        for lambda in [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0] {
            let fit = fit_standard(&data, &k, lambda).unwrap();
            let norm = fit.f.norm();
            let mut resid = 0.0;
            for i in 0..8 {
                let v = fit.f.evaluate(x.row(i)).unwrap();
                resid += (y[i] - v) * (y[i] - v);
            }
            assert!(norm <= prev_norm + 1e-9);
            assert!(resid >= prev_resid - 1e-9);
            prev_norm = norm;
            prev_resid = resid;
        }
    }

    #[test]
    fn sweep_matches_single_lambda_fits() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let mut rng = cell_rng(7, 0);
        let x = probe_points(&mut rng, 6, 2);
        let y = Array1::from_shape_fn(6, |_| rng.gen_range(-1.0..1.0));
        let data = Dataset::new(x, y).unwrap();
        let aug = AugmentationModel::finite_sphere_sets(0.15, 6, 4, 2, &mut rng);
        let lambdas = [0.0, 1e-6, 1e-3, 1e-1];
        let sweep = augmented_sweep(&data, &k, &lambdas, &aug).unwrap();
        for (fit, &lambda) in sweep.iter().zip(lambdas.iter()) {
            let single = fit_augmented(&data, &k, lambda, &aug).unwrap();
            let d = fit.f.distance(&single.f).unwrap();
            assert!(d <= 1e-9 * single.f.norm().max(1.0), "lambda {lambda}: {d}");
        }
    }

    #[test]
    fn kt_span_rank_and_coords() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let data = Dataset::new(array![[0.0, 0.0], [0.5, 0.1]], array![-1.0, 1.0]).unwrap();
        let span = KtSpan::build(&data, &k).unwrap();
        assert_eq!(span.n(), 2);
        assert!(span.rank() <= 6);
        // standard coords reproduce the dual fit's predictions
        let u = span.standard_fit_coords(data.y(), 1e-3).unwrap();
        let f_span = span.function_from_coords(u.view());
        let f_dual = fit_standard(&data, &k, 1e-3).unwrap();
        for xp in [array![0.1, 0.0], array![0.4, 0.2]] {
            let a = f_span.evaluate(xp.view()).unwrap();
            let b = f_dual.f.evaluate(xp.view()).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
