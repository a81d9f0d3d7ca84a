//! Finite-dimensional representations of RKHS elements.
//!
//! Everything the estimators manipulate lives in the span of a
//! [`Dictionary`]: an ordered list of point atoms `K_x` and tangent atoms
//! `T_x·u` over a shared kernel. The Gram matrix of a dictionary is
//! assembled from the kernel pairing rules, and an [`RkhsFunction`] is a
//! coefficient vector over a dictionary. [`SpanBasis`] provides orthonormal
//! coordinates on the span (eigendecomposition of the Gram with a relative
//! cutoff), which is where the regularized solves happen.

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::{self, SymEig, RANK_CUTOFF};
use ndarray::prelude::*;
use rayon::prelude::*;
use std::sync::Arc;

/// A dictionary element: the kernel section at a point, or a directional
/// tangent atom (the first-order coefficient of `K_{x+t u}` at `t = 0`).
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Point(Array1<f64>),
    Tangent { x: Array1<f64>, dir: Array1<f64> },
}

impl Atom {
    pub fn point(x: Array1<f64>) -> Self {
        Atom::Point(x)
    }

    /// Tangent atom with the direction normalized to unit Euclidean norm.
    pub fn tangent(x: Array1<f64>, dir: Array1<f64>) -> Result<Self> {
        let n = dir.dot(&dir).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter(
                "tangent direction must be nonzero and finite".into(),
            ));
        }
        Ok(Atom::Tangent { x, dir: dir / n })
    }

    pub fn base_point(&self) -> ArrayView1<'_, f64> {
        match self {
            Atom::Point(x) => x.view(),
            Atom::Tangent { x, .. } => x.view(),
        }
    }

    fn dim(&self) -> usize {
        self.base_point().len()
    }

    fn bit_eq(&self, other: &Atom) -> bool {
        fn bits_eq(a: &Array1<f64>, b: &Array1<f64>) -> bool {
            a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        match (self, other) {
            (Atom::Point(a), Atom::Point(b)) => bits_eq(a, b),
            (Atom::Tangent { x: a, dir: u }, Atom::Tangent { x: b, dir: v }) => {
                bits_eq(a, b) && bits_eq(u, v)
            }
            _ => false,
        }
    }
}

/// Inner product of two atoms under the kernel pairing rules.
fn pair_inner(kernel: &Kernel, a: &Atom, b: &Atom) -> f64 {
    match (a, b) {
        (Atom::Point(x), Atom::Point(y)) => kernel.eval_unchecked(x.view(), y.view()),
        (Atom::Point(x), Atom::Tangent { x: y, dir }) => {
            kernel.grad2_unchecked(x.view(), y.view()).dot(dir)
        }
        (Atom::Tangent { x, dir }, Atom::Point(y)) => {
            kernel.grad2_unchecked(y.view(), x.view()).dot(dir)
        }
        (Atom::Tangent { x, dir: u }, Atom::Tangent { x: y, dir: v }) => {
            u.dot(&kernel.hess12_unchecked(x.view(), y.view()).dot(v))
        }
    }
}

/// An ordered list of atoms over one kernel. Atom order is stable;
/// coefficient vectors index into it positionally. Construction drops
/// exact-bit duplicates only (near-duplicates are legitimate and kept).
#[derive(Debug, Clone)]
pub struct Dictionary {
    kernel: Kernel,
    atoms: Arc<Vec<Atom>>,
}

impl Dictionary {
    pub fn new(kernel: Kernel, atoms: Vec<Atom>) -> Result<Self> {
        let p = kernel.dim();
        for a in &atoms {
            if a.dim() != p {
                return Err(Error::DimensionMismatch { expected: p, got: a.dim() });
            }
            if a.base_point().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dictionary atom"));
            }
        }
        let mut unique: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            if !unique.iter().any(|u| u.bit_eq(&a)) {
                unique.push(a);
            }
        }
        Ok(Dictionary { kernel, atoms: Arc::new(unique) })
    }

    /// Dictionary of point atoms, one per row of `xs`.
    pub fn from_points(kernel: Kernel, xs: ArrayView2<f64>) -> Result<Self> {
        let atoms = xs.rows().into_iter().map(|r| Atom::Point(r.to_owned())).collect();
        Dictionary::new(kernel, atoms)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// True if every atom is a point atom (enables batched fast paths).
    pub fn points_only(&self) -> bool {
        self.atoms.iter().all(|a| matches!(a, Atom::Point(_)))
    }

    /// Gram matrix `G[a][b] = <atom_a, atom_b>`.
    ///
    /// Assembled exactly symmetric: each upper-triangle entry is computed
    /// once and mirrored, in parallel over entries (bit-identical to the
    /// sequential order since entries are independent).
    pub fn gram(&self) -> Array2<f64> {
        let m = self.len();
        if self.points_only() && m > 64 {
            let xs = self.points_matrix();
            // point_gram computes each entry independently; symmetrize by
            // copying the upper triangle like the generic path does.
            let mut g = self
                .kernel
                .point_gram(xs.view(), xs.view())
                .expect("dimensions already validated");
            for i in 0..m {
                for j in 0..i {
                    g[[i, j]] = g[[j, i]];
                }
            }
            return g;
        }
        let entries: Vec<((usize, usize), f64)> = (0..m)
            .flat_map(|i| (i..m).map(move |j| (i, j)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(i, j)| ((i, j), pair_inner(&self.kernel, &self.atoms[i], &self.atoms[j])))
            .collect();
        let mut g = Array2::zeros((m, m));
        for ((i, j), v) in entries {
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
        g
    }

    /// Cross-Gram `X[a][b] = <self_a, other_b>`; kernels must match.
    pub fn cross_gram(&self, other: &Dictionary) -> Result<Array2<f64>> {
        if self.kernel != other.kernel {
            return Err(Error::KernelMismatch);
        }
        let (m, k) = (self.len(), other.len());
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (0..k)
                    .map(|j| pair_inner(&self.kernel, &self.atoms[i], &other.atoms[j]))
                    .collect()
            })
            .collect();
        let mut g = Array2::zeros((m, k));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                g[[i, j]] = v;
            }
        }
        Ok(g)
    }

    /// Base points of a points-only dictionary as a matrix (row per atom).
    pub(crate) fn points_matrix(&self) -> Array2<f64> {
        let p = self.kernel.dim();
        let mut xs = Array2::zeros((self.len(), p));
        for (i, a) in self.atoms.iter().enumerate() {
            xs.row_mut(i).assign(&a.base_point());
        }
        xs
    }
}

/// An RKHS element: a coefficient vector over a dictionary.
#[derive(Debug, Clone)]
pub struct RkhsFunction {
    dict: Dictionary,
    coeffs: Array1<f64>,
}

impl RkhsFunction {
    pub fn new(dict: Dictionary, coeffs: Array1<f64>) -> Result<Self> {
        if coeffs.len() != dict.len() {
            return Err(Error::DimensionMismatch { expected: dict.len(), got: coeffs.len() });
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient vector"));
        }
        Ok(RkhsFunction { dict, coeffs })
    }

    pub fn zero(dict: Dictionary) -> Self {
        let m = dict.len();
        RkhsFunction { dict, coeffs: Array1::zeros(m) }
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn coeffs(&self) -> ArrayView1<'_, f64> {
        self.coeffs.view()
    }

    pub fn kernel(&self) -> &Kernel {
        self.dict.kernel()
    }

    /// `f(x) = Σ_a c_a <K_x, atom_a>`; linear in the coefficients.
    pub fn evaluate(&self, x: ArrayView1<f64>) -> Result<f64> {
        let p = self.kernel().dim();
        if x.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: x.len() });
        }
        let k = self.kernel();
        let mut acc = 0.0;
        for (c, a) in self.coeffs.iter().zip(self.dict.atoms().iter()) {
            if *c == 0.0 {
                continue;
            }
            acc += c * match a {
                Atom::Point(y) => k.eval_unchecked(x, y.view()),
                Atom::Tangent { x: y, dir } => k.grad2_unchecked(x, y.view()).dot(dir),
            };
        }
        Ok(acc)
    }

    /// Exact gradient of [`RkhsFunction::evaluate`] in `x`.
    pub fn gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        let p = self.kernel().dim();
        if x.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: x.len() });
        }
        let k = self.kernel();
        let mut g = Array1::zeros(p);
        for (c, a) in self.coeffs.iter().zip(self.dict.atoms().iter()) {
            if *c == 0.0 {
                continue;
            }
            match a {
                // d/dx k(x, y) = grad2 of k(y, .) evaluated at x
                Atom::Point(y) => g.scaled_add(*c, &k.grad2_unchecked(y.view(), x)),
                Atom::Tangent { x: y, dir } => {
                    g.scaled_add(*c, &k.hess12_unchecked(x, y.view()).dot(dir))
                }
            }
        }
        Ok(g)
    }

    /// Evaluate at many points (rows of `xs`), batched for points-only
    /// dictionaries.
    pub fn evaluate_batch(&self, xs: ArrayView2<f64>) -> Result<Array1<f64>> {
        if self.dict.points_only() && self.dict.len() > 0 {
            let atoms = self.dict.points_matrix();
            let cross = self.kernel().point_gram(xs, atoms.view())?;
            return Ok(cross.dot(&self.coeffs));
        }
        xs.rows().into_iter().map(|r| self.evaluate(r)).collect()
    }

    /// Gradients at many points (row per input point).
    pub fn gradient_batch(&self, xs: ArrayView2<f64>) -> Result<Array2<f64>> {
        let p = self.kernel().dim();
        if self.dict.points_only() && self.dict.len() > 0 {
            let atoms = self.dict.points_matrix();
            match *self.kernel() {
                Kernel::Gaussian { gamma, .. } => {
                    // grad f(x) = 2 gamma [ (w·Z) - (Σw) x ],  w = k(x, z_a) c_a
                    let mut w = self.kernel().point_gram(xs, atoms.view())?;
                    for mut row in w.rows_mut() {
                        row *= &self.coeffs;
                    }
                    let sums: Array1<f64> = w.rows().into_iter().map(|r| r.sum()).collect();
                    let mut g = w.dot(&atoms);
                    for (i, mut row) in g.rows_mut().into_iter().enumerate() {
                        row.scaled_add(-sums[i], &xs.row(i));
                        row *= 2.0 * gamma;
                    }
                    return Ok(g);
                }
                Kernel::Quadratic { a1, a2, .. } => {
                    // grad f(x) = Σ c_a (a1² + 2 a2² x·z_a) z_a
                    let mut s = xs.dot(&atoms.t());
                    s.mapv_inplace(|v| a1 * a1 + 2.0 * a2 * a2 * v);
                    for mut row in s.rows_mut() {
                        row *= &self.coeffs;
                    }
                    return Ok(s.dot(&atoms));
                }
                Kernel::Linear { .. } => {
                    let g = self.coeffs.dot(&atoms);
                    let mut out = Array2::zeros((xs.nrows(), p));
                    for mut row in out.rows_mut() {
                        row.assign(&g);
                    }
                    return Ok(out);
                }
            }
        }
        let mut out = Array2::zeros((xs.nrows(), p));
        for (i, r) in xs.rows().into_iter().enumerate() {
            out.row_mut(i).assign(&self.gradient(r)?);
        }
        Ok(out)
    }

    /// Exact RKHS inner product; dictionaries may differ, kernels must match.
    pub fn inner(&self, other: &RkhsFunction) -> Result<f64> {
        let cross = self.dict.cross_gram(&other.dict)?;
        Ok(self.coeffs.dot(&cross.dot(&other.coeffs)))
    }

    /// `||f||_H = sqrt(max(<f, f>, 0))`.
    pub fn norm(&self) -> f64 {
        let g = self.dict.gram();
        self.coeffs.dot(&g.dot(&self.coeffs)).max(0.0).sqrt()
    }

    /// RKHS distance `||f - g||_H` computed through inner products.
    pub fn distance(&self, other: &RkhsFunction) -> Result<f64> {
        let ff = self.coeffs.dot(&self.dict.gram().dot(&self.coeffs));
        let gg = other.coeffs.dot(&other.dict.gram().dot(&other.coeffs));
        let fg = self.inner(other)?;
        Ok((ff + gg - 2.0 * fg).max(0.0).sqrt())
    }

    /// H-orthogonal projection onto the span of `sub`.
    ///
    /// Coefficients solve `Gram_sub c = cross(sub, f)` with eigenvalue
    /// cutoff `tol * lambda_max`; an empty sub-dictionary yields the zero
    /// function.
    pub fn project(&self, sub: &Dictionary, tol: f64) -> Result<RkhsFunction> {
        if sub.is_empty() {
            return Ok(RkhsFunction::zero(sub.clone()));
        }
        let g = sub.gram();
        let cross = sub.cross_gram(&self.dict)?;
        let rhs = cross.dot(&self.coeffs);
        let eig = SymEig::new(&g)?;
        let dmax = eig.vals.iter().cloned().fold(0.0f64, f64::max);
        let cut = tol * dmax;
        let coeffs = eig.apply_filtered(rhs.view(), |d| if d > cut && cut > 0.0 { 1.0 / d } else { 0.0 });
        RkhsFunction::new(sub.clone(), coeffs)
    }
}

/// Orthonormal coordinates on the span of a dictionary.
///
/// Built from the eigendecomposition of the Gram matrix with the relative
/// cutoff `RANK_CUTOFF`; coordinates `u` satisfy `||f||_H = ||u||_2` and
/// `<f, g>_H = u·v`.
pub struct SpanBasis {
    dict: Dictionary,
    kept_vals: Array1<f64>,
    kept_vecs: Array2<f64>,
    coords: Array2<f64>,
}

impl SpanBasis {
    pub fn new(dict: Dictionary) -> Result<Self> {
        let g = dict.gram();
        let eig = SymEig::new(&g)?;
        let dmax = eig.vals.iter().cloned().fold(0.0f64, f64::max);
        let cut = RANK_CUTOFF * dmax;
        let keep: Vec<usize> =
            (0..eig.vals.len()).filter(|&i| eig.vals[i] > cut && cut > 0.0).collect();
        let r = keep.len();
        let m = dict.len();
        let mut kept_vals = Array1::zeros(r);
        let mut kept_vecs = Array2::zeros((m, r));
        for (kk, &i) in keep.iter().enumerate() {
            kept_vals[kk] = eig.vals[i];
            kept_vecs.column_mut(kk).assign(&eig.vecs.column(i));
        }
        // coords S = Lambda^{1/2} V^T  (r x m); column a = coords of atom a
        let mut coords = kept_vecs.t().to_owned();
        for (mut row, d) in coords.rows_mut().into_iter().zip(kept_vals.iter()) {
            row *= d.sqrt();
        }
        Ok(SpanBasis { dict, kept_vals, kept_vecs, coords })
    }

    pub fn rank(&self) -> usize {
        self.kept_vals.len()
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    /// `r x m` matrix whose column `a` holds the coordinates of atom `a`.
    pub fn atom_coords(&self) -> ArrayView2<'_, f64> {
        self.coords.view()
    }

    /// Map span coordinates back to dictionary coefficients.
    pub fn coeffs_from_coords(&self, u: ArrayView1<f64>) -> Array1<f64> {
        let mut t = u.to_owned();
        for (ti, d) in t.iter_mut().zip(self.kept_vals.iter()) {
            *ti /= d.sqrt();
        }
        self.kept_vecs.dot(&t)
    }

    pub fn function_from_coords(&self, u: ArrayView1<f64>) -> RkhsFunction {
        RkhsFunction {
            dict: self.dict.clone(),
            coeffs: self.coeffs_from_coords(u),
        }
    }

    /// Coordinates of a coefficient vector over the same dictionary.
    pub fn coords_of_coeffs(&self, coeffs: ArrayView1<f64>) -> Array1<f64> {
        self.coords.dot(&coeffs)
    }
}

/// Weighted regularized least squares over the span of a dictionary.
///
/// Minimizes `Σ_i w_i (t_i - <f, row_i>)² + lambda ||f||²_H` where each
/// design row is a coefficient combination of dictionary atoms (an
/// `RkhsFunction` over the same dictionary fits a row directly). Solved by
/// Gram-metric normal equations in the span's orthonormal coordinates via
/// symmetric eigendecomposition; `lambda = 0` falls back to the cutoff
/// pseudoinverse (minimum-norm solution; a singular system is not an
/// error).
pub fn solve_regularized(
    dict: &Dictionary,
    design: ArrayView2<f64>,
    targets: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    lambda: f64,
) -> Result<RkhsFunction> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("negative lambda {lambda}")));
    }
    let k = design.nrows();
    if design.ncols() != dict.len() {
        return Err(Error::DimensionMismatch { expected: dict.len(), got: design.ncols() });
    }
    if targets.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: targets.len() });
    }
    if weights.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: weights.len() });
    }
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be nonnegative and finite".into()));
    }
    let basis = SpanBasis::new(dict.clone())?;
    solve_regularized_in_basis(&basis, design, targets, weights, lambda)
}

/// Same as [`solve_regularized`] but reusing an existing [`SpanBasis`].
pub fn solve_regularized_in_basis(
    basis: &SpanBasis,
    design: ArrayView2<f64>,
    targets: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    lambda: f64,
) -> Result<RkhsFunction> {
    // row i in span coordinates: S a_i  ->  M = A S^T (k x r)
    let m = design.dot(&basis.coords.t());
    let mut mw = m.clone();
    for (mut row, w) in mw.rows_mut().into_iter().zip(weights.iter()) {
        row *= *w;
    }
    let a = mw.t().dot(&m);
    let b = mw.t().dot(&targets);
    let u = linalg::solve_psd(&a, b.view(), lambda)?;
    Ok(basis.function_from_coords(u.view()))
}

/// Dual ridge solve `(G + ridge I) alpha = y` on a precomputed Gram matrix.
///
/// `ridge = 0` takes the cutoff pseudoinverse (minimum-norm interpolant).
pub fn dual_ridge_solve(gram: &Array2<f64>, y: ArrayView1<f64>, ridge: f64) -> Result<Array1<f64>> {
    linalg::solve_psd(gram, y, ridge)
}

/// Variant of [`dual_ridge_solve`] for large, strongly ridged systems:
/// conjugate gradients when the ridge dominates the cutoff scale, otherwise
/// the eigendecomposition path.
pub fn dual_ridge_solve_auto(
    gram: &Array2<f64>,
    y: ArrayView1<f64>,
    ridge: f64,
) -> Result<Array1<f64>> {
    let n = gram.nrows();
    let trace = gram.diag().sum();
    if n >= 1500 && ridge > 1e-6 * trace / n.max(1) as f64 {
        let (x, _iters) = linalg::solve_psd_cg(gram, y, ridge, 1e-12, 10 * n);
        return Ok(x);
    }
    linalg::solve_psd(gram, y, ridge)
}

pub(crate) fn cutoff_for(vals: &Array1<f64>) -> f64 {
    RANK_CUTOFF * vals.iter().cloned().fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn rand_vec(rng: &mut ChaCha12Rng, p: usize) -> Array1<f64> {
        Array1::from_shape_fn(p, |_| rng.gen_range(-1.0..1.0))
    }

    fn random_mixed_dict(rng: &mut ChaCha12Rng, kernel: Kernel, n_pts: usize, n_tan: usize) -> Dictionary {
        let p = kernel.dim();
        let mut atoms = Vec::new();
        for _ in 0..n_pts {
            atoms.push(Atom::point(rand_vec(rng, p)));
        }
        for _ in 0..n_tan {
            atoms.push(Atom::tangent(rand_vec(rng, p), rand_vec(rng, p)).unwrap());
        }
        Dictionary::new(kernel, atoms).unwrap()
    }

    #[test]
    fn single_point_gram_is_one_for_gaussian() {
        let k = Kernel::gaussian(2.0, 2).unwrap();
        let d = Dictionary::new(k, vec![Atom::point(array![0.3, -0.1])]).unwrap();
        let g = d.gram();
        assert_eq!(g, array![[1.0]]);
    }

    #[test]
    fn point_and_tangent_gram_at_same_point() {
        // dict {K_x, T_x e1}: [[1, 0], [0, 2 gamma]]
        let gamma = 4.0;
        let k = Kernel::gaussian(gamma, 2).unwrap();
        let x = array![0.7, 0.2];
        let d = Dictionary::new(
            k,
            vec![
                Atom::point(x.clone()),
                Atom::tangent(x, array![1.0, 0.0]).unwrap(),
            ],
        )
        .unwrap();
        let g = d.gram();
        assert!((g[[0, 0]] - 1.0).abs() < 1e-15);
        assert!(g[[0, 1]].abs() < 1e-15 && g[[1, 0]].abs() < 1e-15);
        assert!((g[[1, 1]] - 2.0 * gamma).abs() < 1e-12);
    }

    #[test]
    fn gram_matches_explicit_feature_map_for_quadratic() {
        // 10-atom random mixed dictionary vs feature-space inner products
        let (a1, a2) = (1.1, 0.6);
        let p = 3;
        let k = Kernel::quadratic(a1, a2, p).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let d = random_mixed_dict(&mut rng, k, 5, 5);

        // phi(K_x) = [a1 x, a2 x x^T]; phi(T_x u) = [a1 u, a2 (u x^T + x u^T)]
        let feat = |a: &Atom| -> (Array1<f64>, Array2<f64>) {
            match a {
                Atom::Point(x) => {
                    let mut m = Array2::zeros((p, p));
                    for i in 0..p {
                        for j in 0..p {
                            m[[i, j]] = a2 * x[i] * x[j];
                        }
                    }
                    (x * a1, m)
                }
                Atom::Tangent { x, dir } => {
                    let mut m = Array2::zeros((p, p));
                    for i in 0..p {
                        for j in 0..p {
                            m[[i, j]] = a2 * (dir[i] * x[j] + x[i] * dir[j]);
                        }
                    }
                    (dir * a1, m)
                }
            }
        };
        let g = d.gram();
        for i in 0..d.len() {
            for j in 0..d.len() {
                let (di, mi) = feat(&d.atoms()[i]);
                let (dj, mj) = feat(&d.atoms()[j]);
                let expect = di.dot(&dj) + (&mi * &mj).sum();
                assert!(
                    (g[[i, j]] - expect).abs() < 1e-10,
                    "entry ({i},{j}): {} vs {}",
                    g[[i, j]],
                    expect
                );
            }
        }
    }

    #[test]
    fn evaluate_reproduces_kernel_values() {
        let k = Kernel::gaussian(1.5, 2).unwrap();
        let x0 = array![0.4, -0.6];
        let d = Dictionary::new(k, vec![Atom::point(x0.clone())]).unwrap();
        let f = RkhsFunction::new(d, array![1.0]).unwrap();
        assert!((f.evaluate(x0.view()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_of_linear_kernel_section_is_constant() {
        let k = Kernel::linear(3);
        let x0 = array![1.0, -2.0, 0.5];
        let d = Dictionary::new(k, vec![Atom::point(x0.clone())]).unwrap();
        let f = RkhsFunction::new(d, array![1.0]).unwrap();
        let g = f.gradient(array![9.0, 9.0, 9.0].view()).unwrap();
        for (a, b) in g.iter().zip(x0.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let k = Kernel::gaussian(2.0, 3).unwrap();
        let d = random_mixed_dict(&mut rng, k, 4, 4);
        let coeffs = rand_vec(&mut rng, d.len());
        let f = RkhsFunction::new(d, coeffs).unwrap();
        let x = rand_vec(&mut rng, 3);
        let g = f.gradient(x.view()).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (f.evaluate(xp.view()).unwrap() - f.evaluate(xm.view()).unwrap()) / (2.0 * h);
            assert!((g[j] - fd).abs() < 1e-6, "coord {j}: {} vs {}", g[j], fd);
        }
    }

    #[test]
    fn evaluate_is_linear_in_coefficients() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let k = Kernel::quadratic(1.0, 0.5, 2).unwrap();
        let d = random_mixed_dict(&mut rng, k, 3, 3);
        let c1 = rand_vec(&mut rng, d.len());
        let c2 = rand_vec(&mut rng, d.len());
        let f1 = RkhsFunction::new(d.clone(), c1.clone()).unwrap();
        let f2 = RkhsFunction::new(d.clone(), c2.clone()).unwrap();
        let fs = RkhsFunction::new(d, &c1 + &c2).unwrap();
        let x = rand_vec(&mut rng, 2);
        let lhs = fs.evaluate(x.view()).unwrap();
        let rhs = f1.evaluate(x.view()).unwrap() + f2.evaluate(x.view()).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn inner_reproducing_property() {
        let k = Kernel::gaussian(0.8, 2).unwrap();
        let x = array![0.0, 0.0];
        let y = array![0.5, -0.5];
        let fx = RkhsFunction::new(
            Dictionary::new(k.clone(), vec![Atom::point(x.clone())]).unwrap(),
            array![1.0],
        )
        .unwrap();
        let fy = RkhsFunction::new(
            Dictionary::new(k.clone(), vec![Atom::point(y.clone())]).unwrap(),
            array![1.0],
        )
        .unwrap();
        let ip = fx.inner(&fy).unwrap();
        assert!((ip - k.eval(x.view(), y.view()).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let d = Dictionary::new(k, vec![Atom::point(array![1.0, 2.0])]).unwrap();
        assert_eq!(RkhsFunction::zero(d).norm(), 0.0);
    }

    #[test]
    fn kernel_mismatch_rejected_in_inner() {
        let f = RkhsFunction::zero(
            Dictionary::new(Kernel::gaussian(1.0, 2).unwrap(), vec![Atom::point(array![0.0, 0.0])])
                .unwrap(),
        );
        let g = RkhsFunction::zero(
            Dictionary::new(Kernel::gaussian(2.0, 2).unwrap(), vec![Atom::point(array![0.0, 0.0])])
                .unwrap(),
        );
        assert!(matches!(f.inner(&g), Err(Error::KernelMismatch)));
    }

    #[test]
    fn inner_on_merged_dictionaries_matches_feature_map() {
        let (a1, a2) = (1.0, 2.0);
        let k = Kernel::quadratic(a1, a2, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let d1 = random_mixed_dict(&mut rng, k.clone(), 3, 2);
        let d2 = random_mixed_dict(&mut rng, k, 2, 3);
        let c1 = rand_vec(&mut rng, d1.len());
        let c2 = rand_vec(&mut rng, d2.len());
        let f = RkhsFunction::new(d1.clone(), c1.clone()).unwrap();
        let g = RkhsFunction::new(d2.clone(), c2.clone()).unwrap();
        // feature-map oracle
        let feat = |d: &Dictionary, c: &Array1<f64>| -> (Array1<f64>, Array2<f64>) {
            let mut dv = Array1::zeros(2);
            let mut dm = Array2::zeros((2, 2));
            for (ci, a) in c.iter().zip(d.atoms().iter()) {
                match a {
                    Atom::Point(x) => {
                        dv.scaled_add(ci * a1, x);
                        for i in 0..2 {
                            for j in 0..2 {
                                dm[[i, j]] += ci * a2 * x[i] * x[j];
                            }
                        }
                    }
                    Atom::Tangent { x, dir } => {
                        dv.scaled_add(ci * a1, dir);
                        for i in 0..2 {
                            for j in 0..2 {
                                dm[[i, j]] += ci * a2 * (dir[i] * x[j] + x[i] * dir[j]);
                            }
                        }
                    }
                }
            }
            (dv, dm)
        };
        let (v1, m1) = feat(&d1, &c1);
        let (v2, m2) = feat(&d2, &c2);
        let expect = v1.dot(&v2) + (&m1 * &m2).sum();
        let got = f.inner(&g).unwrap();
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn projection_is_identity_on_members() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let sub = random_mixed_dict(&mut rng, k, 4, 2);
        let c = rand_vec(&mut rng, sub.len());
        let f = RkhsFunction::new(sub.clone(), c).unwrap();
        let pf = f.project(&sub, RANK_CUTOFF).unwrap();
        // agreement after evaluation at 100 probe points
        for _ in 0..100 {
            let x = rand_vec(&mut rng, 2);
            let a = f.evaluate(x.view()).unwrap();
            let b = pf.evaluate(x.view()).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        }
        assert!(pf.norm() <= f.norm() + 1e-8);
    }

    #[test]
    fn projection_of_orthogonal_feature_is_zero() {
        // quadratic kernel with disjoint supports: K_{e1} vs sub spanned by K_{e2}
        let k = Kernel::quadratic(1.0, 1.0, 2).unwrap();
        let f = RkhsFunction::new(
            Dictionary::new(k.clone(), vec![Atom::point(array![1.0, 0.0])]).unwrap(),
            array![1.0],
        )
        .unwrap();
        let sub = Dictionary::new(k, vec![Atom::point(array![0.0, 1.0])]).unwrap();
        let pf = f.project(&sub, RANK_CUTOFF).unwrap();
        assert!(pf.norm() < 1e-12);
    }

    #[test]
    fn projection_residual_is_orthogonal_to_sub() {
        let k = Kernel::gaussian(1.2, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let d = random_mixed_dict(&mut rng, k.clone(), 5, 3);
        let sub = random_mixed_dict(&mut rng, k, 3, 2);
        let f = RkhsFunction::new(d, rand_vec(&mut rng, 8)).unwrap();
        let pf = f.project(&sub, RANK_CUTOFF).unwrap();
        let fnorm = f.norm();
        for i in 0..sub.len() {
            let atom_f = RkhsFunction::new(
                sub.clone(),
                Array1::from_shape_fn(sub.len(), |j| if j == i { 1.0 } else { 0.0 }),
            )
            .unwrap();
            let r = f.inner(&atom_f).unwrap() - pf.inner(&atom_f).unwrap();
            assert!(r.abs() <= 1e-8 * fnorm.max(1.0), "atom {i}: residual {r}");
        }
    }

    #[test]
    fn empty_sub_projects_to_zero_function() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let d = Dictionary::new(k.clone(), vec![Atom::point(array![0.1, 0.2])]).unwrap();
        let f = RkhsFunction::new(d, array![2.0]).unwrap();
        let sub = Dictionary::new(k, vec![]).unwrap();
        let pf = f.project(&sub, RANK_CUTOFF).unwrap();
        assert_eq!(pf.evaluate(array![0.1, 0.2].view()).unwrap(), 0.0);
    }

    #[test]
    fn solve_one_point_closed_form() {
        // one row K_x, target y, weight 1: coefficient y/(1+lambda)
        let k = Kernel::gaussian(1.0, 1).unwrap();
        let d = Dictionary::new(k, vec![Atom::point(array![0.0])]).unwrap();
        let y = 2.0;
        let lambda = 1.0;
        let f = solve_regularized(
            &d,
            array![[1.0]].view(),
            array![y].view(),
            array![1.0].view(),
            lambda,
        )
        .unwrap();
        assert!((f.coeffs()[0] - y / (1.0 + lambda)).abs() < 1e-12);
        assert!((f.evaluate(array![0.0].view()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_lambda_shrinks_to_zero() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let d = random_mixed_dict(&mut rng, k, 5, 0);
        let m = d.len();
        let design = Array2::eye(m);
        let targets = rand_vec(&mut rng, m);
        let weights = Array1::ones(m);
        let f =
            solve_regularized(&d, design.view(), targets.view(), weights.view(), 1e12).unwrap();
        let tnorm = targets.dot(&targets).sqrt();
        assert!(f.norm() <= 1e-6 * tnorm);
    }

    #[test]
    fn solver_beats_random_candidates() {
        // convexity sampling oracle: objective at the solution is below the
        // objective at 1000 random coefficient vectors in the span
        let k = Kernel::gaussian(0.7, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        let xs = Array2::from_shape_fn((8, 2), |_| rng.gen_range(-1.0..1.0));
        let d = Dictionary::from_points(k, xs.view()).unwrap();
        let m = d.len();
        let design = Array2::eye(m);
        let targets = rand_vec(&mut rng, m);
        let weights = Array1::from_elem(m, 1.0 / m as f64);
        let lambda = 1e-3;
        let g = d.gram();
        let objective = |c: &Array1<f64>| -> f64 {
            let pred = g.dot(c);
            let mut val = 0.0;
            for i in 0..m {
                val += weights[i] * (targets[i] - pred[i]).powi(2);
            }
            val + lambda * c.dot(&g.dot(c))
        };
        let f = solve_regularized(&d, design.view(), targets.view(), weights.view(), lambda)
            .unwrap();
        let best = objective(&f.coeffs().to_owned());
        for _ in 0..1000 {
            let c = rand_vec(&mut rng, m) * 3.0;
            assert!(objective(&c) >= best - 1e-12);
        }
    }

    #[test]
    fn first_order_optimality_under_perturbations() {
        let k = Kernel::quadratic(1.0, 1.0, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let d = random_mixed_dict(&mut rng, k, 4, 2);
        let m = d.len();
        let design = Array2::eye(m);
        let targets = rand_vec(&mut rng, m);
        let weights = Array1::from_elem(m, 0.5);
        let lambda = 1e-2;
        let g = d.gram();
        let objective = |c: &Array1<f64>| -> f64 {
            let pred = g.dot(c);
            let mut val = 0.0;
            for i in 0..m {
                val += weights[i] * (targets[i] - pred[i]).powi(2);
            }
            val + lambda * c.dot(&g.dot(c))
        };
        let f = solve_regularized(&d, design.view(), targets.view(), weights.view(), lambda)
            .unwrap();
        let c0 = f.coeffs().to_owned();
        let base = objective(&c0);
        for _ in 0..20 {
            let h = rand_vec(&mut rng, m);
            for t in [1e-4, -1e-4] {
                let c = &c0 + &(&h * t);
                assert!(objective(&c) >= base - 1e-10);
            }
        }
    }

    #[test]
    fn ridge_path_is_monotone() {
        let k = Kernel::gaussian(2.0, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        let xs = Array2::from_shape_fn((6, 2), |_| rng.gen_range(-1.0..1.0));
        let d = Dictionary::from_points(k, xs.view()).unwrap();
        let m = d.len();
        let design = Array2::eye(m);
        let targets = rand_vec(&mut rng, m);
        let weights = Array1::from_elem(m, 1.0 / m as f64);
        let g = d.gram();
        let mut prev_norm = f64::INFINITY;
        let mut prev_resid = -1.0;
        for lambda in [0.0, 1e-6, 1e-4, 1e-2, 1.0, 100.0] {
            let f = solve_regularized(&d, design.view(), targets.view(), weights.view(), lambda)
                .unwrap();
            let pred = g.dot(&f.coeffs().to_owned());
            let resid: f64 = (0..m).map(|i| weights[i] * (targets[i] - pred[i]).powi(2)).sum();
            let norm = f.norm();
            assert!(norm <= prev_norm + 1e-9, "norm not nonincreasing at {lambda}");
            assert!(resid >= prev_resid - 1e-9, "residual not nondecreasing at {lambda}");
            prev_norm = norm;
            prev_resid = resid;
        }
    }

    #[test]
    fn negative_lambda_is_input_error() {
        let k = Kernel::gaussian(1.0, 1).unwrap();
        let d = Dictionary::new(k, vec![Atom::point(array![0.0])]).unwrap();
        assert!(solve_regularized(
            &d,
            array![[1.0]].view(),
            array![1.0].view(),
            array![1.0].view(),
            -0.1
        )
        .is_err());
    }

    #[test]
    fn dictionary_dedups_exact_duplicates_only() {
        let k = Kernel::gaussian(1.0, 1).unwrap();
        let x = array![0.25];
        let near = array![0.25 + 1e-10];
        let d = Dictionary::new(
            k,
            vec![Atom::point(x.clone()), Atom::point(x.clone()), Atom::point(near)],
        )
        .unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn span_coords_preserve_inner_products() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        let d = random_mixed_dict(&mut rng, k, 4, 3);
        let basis = SpanBasis::new(d.clone()).unwrap();
        let c1 = rand_vec(&mut rng, d.len());
        let c2 = rand_vec(&mut rng, d.len());
        let u1 = basis.coords_of_coeffs(c1.view());
        let u2 = basis.coords_of_coeffs(c2.view());
        let f1 = RkhsFunction::new(d.clone(), c1).unwrap();
        let f2 = RkhsFunction::new(d, c2).unwrap();
        let ip = f1.inner(&f2).unwrap();
        assert!((u1.dot(&u2) - ip).abs() < 1e-8 * ip.abs().max(1.0));
    }

    #[test]
    fn batch_eval_and_gradient_match_pointwise() {
        let mut rng = ChaCha12Rng::seed_from_u64(67);
        for kernel in [
            Kernel::gaussian(3.0, 3).unwrap(),
            Kernel::quadratic(1.0, 2.0, 3).unwrap(),
            Kernel::linear(3),
        ] {
            let xs = Array2::from_shape_fn((6, 3), |_| rng.gen_range(-1.0..1.0));
            let d = Dictionary::from_points(kernel, xs.view()).unwrap();
            let f = RkhsFunction::new(d, rand_vec(&mut rng, 6)).unwrap();
            let probes = Array2::from_shape_fn((5, 3), |_| rng.gen_range(-1.0..1.0));
            let vals = f.evaluate_batch(probes.view()).unwrap();
            let grads = f.gradient_batch(probes.view()).unwrap();
            for (i, row) in probes.rows().into_iter().enumerate() {
                let v = f.evaluate(row).unwrap();
                assert!((vals[i] - v).abs() < 1e-11, "value {i}");
                let g = f.gradient(row).unwrap();
                for j in 0..3 {
                    assert!((grads[[i, j]] - g[j]).abs() < 1e-10, "grad ({i},{j})");
                }
            }
        }
    }
}
