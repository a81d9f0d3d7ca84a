//! Shared symmetric-eigendecomposition solve helpers.
//!
//! Every regularized solve in the crate goes through one of these routines:
//! an `eigh`-based ridge/pseudoinverse (the default; handles the severely
//! ill-conditioned Gram matrices of nearby points), a Cholesky path for
//! strongly ridged systems, and a conjugate-gradient path for large
//! well-conditioned dual systems where a factorization would dominate the
//! runtime.

use crate::error::{Error, Result};
use ndarray::prelude::*;
use ndarray_linalg::{Eigh, FactorizeC, SolveC, UPLO};

/// Relative eigenvalue cutoff for all pseudoinverse-style solves:
/// eigenvalues below `RANK_CUTOFF * lambda_max` are treated as zero.
pub(crate) const RANK_CUTOFF: f64 = 1e-10;

/// Eigendecomposition of a symmetric PSD matrix (symmetrized on entry).
pub(crate) struct SymEig {
    pub vals: Array1<f64>,
    pub vecs: Array2<f64>,
}

impl SymEig {
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Linalg(format!(
                "matrix not square: {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Ok(SymEig { vals: Array1::zeros(0), vecs: Array2::zeros((0, 0)) });
        }
        let sym = (a + &a.t()) * 0.5;
        // the divide-and-conquer driver is several times faster than the
        // default QR-iteration path on the large Gram matrices here
        if sym.nrows() >= 256 {
            if let Some(out) = dsyevd(&sym) {
                return Ok(out);
            }
        }
        let (vals, vecs) = sym.eigh(UPLO::Lower)?;
        Ok(SymEig { vals, vecs })
    }

    /// `V f(d) Vᵀ b` with a scalar spectral filter `f`.
    pub fn apply_filtered<F: Fn(f64) -> f64>(&self, b: ArrayView1<f64>, f: F) -> Array1<f64> {
        let mut t = self.vecs.t().dot(&b);
        for (ti, d) in t.iter_mut().zip(self.vals.iter()) {
            *ti *= f(*d);
        }
        self.vecs.dot(&t)
    }

    /// Solve `(A + ridge I) x = b`. At `ridge = 0` this is the cutoff
    /// pseudoinverse (minimum-norm solution on the numerical range).
    pub fn solve_ridge(&self, b: ArrayView1<f64>, ridge: f64) -> Array1<f64> {
        if ridge > 0.0 {
            self.apply_filtered(b, |d| 1.0 / (d.max(0.0) + ridge))
        } else {
            let dmax = self.vals.iter().cloned().fold(0.0f64, f64::max);
            let cut = RANK_CUTOFF * dmax;
            self.apply_filtered(b, |d| if d > cut && cut > 0.0 { 1.0 / d } else { 0.0 })
        }
    }
}

/// Symmetric eigendecomposition via LAPACK's divide-and-conquer driver.
///
/// The input must already be symmetric. LAPACK works column-major; for a
/// symmetric input the layout does not matter, and the eigenvectors come
/// back as rows of the (row-major) working buffer, which this transposes
/// into the usual column convention. Returns `None` if the driver reports
/// a failure, letting the caller fall back to the default path.
fn dsyevd(sym: &Array2<f64>) -> Option<SymEig> {
    let n = sym.nrows();
    let mut buf: Vec<f64> = Vec::with_capacity(n * n);
    for row in sym.rows() {
        buf.extend(row.iter());
    }
    let mut w = vec![0.0f64; n];
    let mut info: i32 = 0;
    let nn = n as i32;
    let jobz = b'V' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    // workspace query
    let mut work_len = [0.0f64; 1];
    let mut iwork_len = [0i32; 1];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work_len.as_mut_ptr(),
            &(-1i32),
            iwork_len.as_mut_ptr(),
            &(-1i32),
            &mut info,
        );
    }
    if info != 0 {
        return None;
    }
    let lwork = work_len[0] as i32;
    let liwork = iwork_len[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return None;
    }
    // buf holds eigenvectors as LAPACK columns == rows of the row-major view
    let vecs_rows = Array2::from_shape_vec((n, n), buf).ok()?;
    Some(SymEig { vals: Array1::from(w), vecs: vecs_rows.reversed_axes() })
}

/// One-shot `(A + ridge I) x = b` for symmetric PSD `A`.
pub(crate) fn solve_psd(a: &Array2<f64>, b: ArrayView1<f64>, ridge: f64) -> Result<Array1<f64>> {
    if ridge < 0.0 {
        return Err(Error::InvalidParameter(format!("negative ridge {ridge}")));
    }
    Ok(SymEig::new(a)?.solve_ridge(b, ridge))
}

/// Cholesky solve of `(A + ridge I) x = b` with a single jitter retry.
///
/// If factorization of the nominally PSD matrix fails, add jitter
/// `1e-12 * trace / n` once and retry; a second failure is an error.
pub(crate) fn solve_spd_cholesky(
    a: &Array2<f64>,
    b: ArrayView1<f64>,
    ridge: f64,
) -> Result<Array1<f64>> {
    let n = a.nrows();
    let mut m = (a + &a.t()) * 0.5;
    if ridge > 0.0 {
        for i in 0..n {
            m[[i, i]] += ridge;
        }
    }
    match m.factorizec(UPLO::Lower) {
        Ok(f) => Ok(f.solvec(&b.to_owned())?),
        Err(_) => {
            let jitter = 1e-12 * m.diag().sum() / n.max(1) as f64;
            for i in 0..n {
                m[[i, i]] += jitter;
            }
            let f = m
                .factorizec(UPLO::Lower)
                .map_err(|e| Error::Linalg(format!("cholesky failed after jitter retry: {e}")))?;
            Ok(f.solvec(&b.to_owned())?)
        }
    }
}

/// Conjugate gradients on `(A + ridge I) x = b` for symmetric PSD `A`.
/// Used for large, strongly ridged dual systems.
pub(crate) fn solve_psd_cg(
    a: &Array2<f64>,
    b: ArrayView1<f64>,
    ridge: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (Array1<f64>, usize) {
    let n = b.len();
    let mut x = Array1::<f64>::zeros(n);
    let mut r = b.to_owned();
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    let b_norm = rs.sqrt().max(f64::MIN_POSITIVE);
    for it in 0..max_iter {
        if rs.sqrt() <= rel_tol * b_norm {
            return (x, it);
        }
        let mut ap = a.dot(&p);
        if ridge > 0.0 {
            ap.scaled_add(ridge, &p);
        }
        let alpha = rs / p.dot(&ap).max(f64::MIN_POSITIVE);
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &ap);
        let rs_new = r.dot(&r);
        let beta = rs_new / rs;
        rs = rs_new;
        p = &r + &(&p * beta);
    }
    (x, max_iter)
}

/// Orthogonal projector onto the column space of `m` (thin SVD with a
/// relative singular-value cutoff).
pub(crate) fn column_space_projector(m: &Array2<f64>) -> Result<Array2<f64>> {
    use ndarray_linalg::svd::SVD;
    let r = m.nrows();
    if m.ncols() == 0 {
        return Ok(Array2::zeros((r, r)));
    }
    let (u, s, _) = m.svd(true, false)?;
    let u = u.ok_or_else(|| Error::Linalg("svd returned no left vectors".into()))?;
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let cut = RANK_CUTOFF * smax;
    let mut proj = Array2::<f64>::zeros((r, r));
    for (k, sv) in s.iter().enumerate() {
        if *sv > cut && cut > 0.0 {
            let col = u.column(k);
            for i in 0..r {
                for j in 0..r {
                    proj[[i, j]] += col[i] * col[j];
                }
            }
        }
    }
    Ok(proj)
}

/// Least-squares log-log slope of `values` against `xs` (both positive).
pub(crate) fn loglog_slope(xs: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != values.len() || xs.len() < 2 {
        return None;
    }
    if values.iter().any(|v| *v <= 0.0) || xs.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let resid: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(a, b)| {
            let fit = my + slope * (a - mx);
            (b - fit) * (b - fit)
        })
        .sum::<f64>()
        .sqrt();
    Some((slope, resid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_solve_matches_direct_inverse() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let b = array![1.0, 2.0];
        let x = solve_psd(&a, b.view(), 0.5).unwrap();
        // (A + 0.5 I) x = b solved by hand
        let m = array![[4.5, 1.0], [1.0, 3.5]];
        let det = 4.5 * 3.5 - 1.0;
        let expect = array![(3.5 * 1.0 - 1.0 * 2.0) / det, (4.5 * 2.0 - 1.0 * 1.0) / det];
        for (u, v) in x.iter().zip(expect.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        let r = &m.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn pinv_gives_minimum_norm_solution() {
        // rank-1 matrix: pinv solution lies in the range
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let b = array![2.0, 2.0];
        let x = solve_psd(&a, b.view(), 0.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cg_agrees_with_eigh_on_well_conditioned_system() {
        let a = array![[5.0, 1.0, 0.0], [1.0, 4.0, 0.5], [0.0, 0.5, 6.0]];
        let b = array![1.0, -2.0, 0.3];
        let xe = solve_psd(&a, b.view(), 0.7).unwrap();
        let (xc, it) = solve_psd_cg(&a, b.view(), 0.7, 1e-14, 100);
        assert!(it < 20);
        for (u, v) in xe.iter().zip(xc.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_jitter_path_works() {
        let a = array![[1.0, 1.0], [1.0, 1.0]]; // singular but PSD
        let b = array![1.0, 1.0];
        let x = solve_spd_cholesky(&a, b.view(), 1e-6).unwrap();
        let resid = &a.dot(&x) + &(&x * 1e-6) - &b;
        assert!(resid.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn projector_is_idempotent() {
        let m = array![[1.0, 2.0], [0.0, 1.0], [1.0, 0.0]];
        let p = column_space_projector(&m).unwrap();
        let pp = p.dot(&p);
        for (a, b) in p.iter().zip(pp.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        // projects the columns onto themselves
        let pm = p.dot(&m);
        for (a, b) in pm.iter().zip(m.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn loglog_slope_recovers_power_law() {
        let xs = [0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let (slope, resid) = loglog_slope(&xs, &ys).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(resid < 1e-12);
    }
}
