//! Quality measures: empirical MSE and Lipschitz estimators, RKHS norm
//! ratios, and the closed-form quadratic generalization error for
//! spherically symmetric input laws.

use crate::error::{Error, Result};
use crate::estimators::Dataset;
use crate::rkhs::RkhsFunction;
use crate::rng::derive_seed;
use ndarray::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Mean squared error of `f` against the targets of a test set.
pub fn empirical_mse(f: &RkhsFunction, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidParameter("empty test set".into()));
    }
    let pred = f.evaluate_batch(test.x())?;
    let mut acc = 0.0;
    for (p, y) in pred.iter().zip(test.y().iter()) {
        let r = p - y;
        acc += r * r;
    }
    Ok(acc / test.len() as f64)
}

/// Test-point Lipschitz estimate: the maximum gradient norm over the rows
/// of `points`. Monotone under point-set inclusion.
pub fn empirical_lip(f: &RkhsFunction, points: ArrayView2<f64>) -> Result<f64> {
    if points.nrows() == 0 {
        return Err(Error::InvalidParameter("empty point set".into()));
    }
    let grads = f.gradient_batch(points)?;
    Ok(grads
        .rows()
        .into_iter()
        .map(|g| g.dot(&g).sqrt())
        .fold(0.0, f64::max))
}

/// Dense-grid Lipschitz estimate along the segment `[x1, x2]`: maximum
/// gradient norm over `grid` evenly spaced points. The segment supremum is
/// what the two-point comparisons are about; the test-point estimator would
/// under-measure it.
pub fn segment_lip(
    f: &RkhsFunction,
    x1: ArrayView1<f64>,
    x2: ArrayView1<f64>,
    grid: usize,
) -> Result<f64> {
    if grid < 2 {
        return Err(Error::InvalidParameter("segment grid needs >= 2 points".into()));
    }
    let pts = segment_points(x1, x2, grid);
    empirical_lip(f, pts.view())
}

pub(crate) fn segment_points(x1: ArrayView1<f64>, x2: ArrayView1<f64>, grid: usize) -> Array2<f64> {
    let p = x1.len();
    let mut pts = Array2::zeros((grid, p));
    for (k, mut row) in pts.rows_mut().into_iter().enumerate() {
        let t = k as f64 / (grid - 1) as f64;
        for j in 0..p {
            row[j] = x1[j] + t * (x2[j] - x1[j]);
        }
    }
    pts
}

/// `||f|| / ||g||` with a `+inf` sentinel when `||g||` is numerically zero.
pub fn norm_ratio(f: &RkhsFunction, g: &RkhsFunction) -> f64 {
    let gn = g.norm();
    if gn <= 1e-14 {
        return f64::INFINITY;
    }
    f.norm() / gn
}

/// Input law for the moment constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricLaw {
    GaussianIso,
    UniformSphere,
}

/// Second and fourth marginal moments of a spherically symmetric law:
/// `C1 = E x_1^2` and `C2 = E x_1^4 - (E x_1^2)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConstants {
    pub c1: f64,
    pub c2: f64,
    pub p: usize,
}

/// Closed-form moment constants.
///
/// Isotropic Gaussian: `C1 = 1`, `C2 = 2` (fourth moment 3). Uniform
/// sphere: `C1 = 1/p` and, from `E x_1^4 = 3/(p(p+2))`,
/// `C2 = 3/(p(p+2)) - 1/p^2`; both validated against Monte Carlo in the
/// tests.
pub fn moment_constants(law: SymmetricLaw, p: usize) -> MomentConstants {
    match law {
        SymmetricLaw::GaussianIso => MomentConstants { c1: 1.0, c2: 2.0, p },
        SymmetricLaw::UniformSphere => {
            let pf = p as f64;
            MomentConstants {
                c1: 1.0 / pf,
                c2: 3.0 / (pf * (pf + 2.0)) - 1.0 / (pf * pf),
                p,
            }
        }
    }
}

/// Exact `E (g(x))^2` for `g(x) = d·x + xᵀ D x` under a spherically
/// symmetric law with moment constants `mc`:
///
/// ```text
/// E g² = C1 ||d||² + ((C2 + C1²)/3) (2 Tr(D²) + Tr(D)²)
/// ```
///
/// For any spherically symmetric law `E x_1^4 = 3 E x_1^2 x_2^2`, which
/// collapses the general fourth-moment expansion to the form above; the
/// Gaussian case has `(C2 + C1²)/3 = 1`, giving the familiar
/// `C2 Tr(D²) + C1² Tr(D)²`.
pub fn quadratic_generalization(
    d: ArrayView1<f64>,
    dd: &Array2<f64>,
    mc: &MomentConstants,
) -> Result<f64> {
    let p = d.len();
    if dd.nrows() != p || dd.ncols() != p {
        return Err(Error::DimensionMismatch { expected: p, got: dd.nrows().max(dd.ncols()) });
    }
    let scale = dd.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let asym = (dd - &dd.t()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if asym > 1e-10 * scale {
        return Err(Error::InvalidParameter(format!("D not symmetric (deviation {asym:.2e})")));
    }
    let tr: f64 = dd.diag().sum();
    let tr2: f64 = dd.iter().map(|v| v * v).sum(); // Tr(D²) for symmetric D
    let m22 = (mc.c2 + mc.c1 * mc.c1) / 3.0;
    Ok(mc.c1 * d.dot(&d) + m22 * (2.0 * tr2 + tr * tr))
}

/// Monte-Carlo estimate of `E (d·x + xᵀDx)^2` with standard error.
///
/// Draws are split into fixed-size chunks with seeds derived per chunk, and
/// chunk sums are combined in chunk order, so the result does not depend on
/// the parallel schedule.
pub fn mc_quadratic_expectation(
    law: SymmetricLaw,
    d: ArrayView1<f64>,
    dd: &Array2<f64>,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let p = d.len();
    let chunk = 65_536usize;
    let chunks = draws.div_ceil(chunk);
    let partials: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, c as u64));
            let count = chunk.min(draws - c * chunk);
            let mut s = 0.0;
            let mut s2 = 0.0;
            let mut x = Array1::<f64>::zeros(p);
            for _ in 0..count {
                for v in x.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                if law == SymmetricLaw::UniformSphere {
                    let nrm = x.dot(&x).sqrt();
                    if nrm > 0.0 {
                        x /= nrm;
                    }
                }
                let g = d.dot(&x) + x.dot(&dd.dot(&x));
                let g2 = g * g;
                s += g2;
                s2 += g2 * g2;
            }
            (s, s2, count)
        })
        .collect();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut total = 0usize;
    for (s, s2, c) in partials {
        sum += s;
        sumsq += s2;
        total += c;
    }
    let n = total as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::rkhs::{Atom, Dictionary};
    use crate::rng::cell_rng;
    use rand::Rng;

    fn single_atom(kernel: Kernel, x: Array1<f64>, c: f64) -> RkhsFunction {
        RkhsFunction::new(
            Dictionary::new(kernel, vec![Atom::point(x)]).unwrap(),
            array![c],
        )
        .unwrap()
    }

    #[test]
    fn mse_zero_for_matching_zero_function() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let d = Dictionary::new(k, vec![Atom::point(array![0.0, 0.0])]).unwrap();
        let f = RkhsFunction::zero(d);
        let test = Dataset::new(array![[0.1, 0.2], [0.4, -0.3]], array![0.0, 0.0]).unwrap();
        assert_eq!(empirical_mse(&f, &test).unwrap(), 0.0);
    }

    #[test]
    fn mse_zero_for_interpolating_fit() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let data = Dataset::new(array![[0.0, 0.0], [0.8, 0.3]], array![1.0, -0.5]).unwrap();
        let fit = crate::estimators::fit_standard(&data, &k, 0.0).unwrap();
        let mse = empirical_mse(&fit.f, &data).unwrap();
        assert!(mse < 1e-16, "mse {mse}");
    }

    #[test]
    fn mse_matches_hand_summed_value() {
        let k = Kernel::linear(1);
        let f = single_atom(k, array![2.0], 1.0); // f(x) = 2x
        let test = Dataset::new(
            array![[0.0], [1.0], [2.0], [-1.0], [0.5]],
            array![0.5, 2.0, 3.0, -2.5, 1.5],
        )
        .unwrap();
        // residuals: -0.5, 0, 1, 0.5, -0.5 -> squares 0.25, 0, 1, 0.25, 0.25
        let expect = (0.25 + 0.0 + 1.0 + 0.25 + 0.25) / 5.0;
        let got = empirical_mse(&f, &test).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn mse_invariant_under_row_permutation() {
        let k = Kernel::gaussian(2.0, 2).unwrap();
        let f = single_atom(k, array![0.2, 0.1], 0.7);
        let x = array![[0.0, 0.0], [0.5, 0.5], [-0.5, 0.1]];
        let y = array![0.3, -0.2, 0.9];
        let a = empirical_mse(&f, &Dataset::new(x.clone(), y.clone()).unwrap()).unwrap();
        let xp = array![[-0.5, 0.1], [0.0, 0.0], [0.5, 0.5]];
        let yp = array![0.9, 0.3, -0.2];
        let b = empirical_mse(&f, &Dataset::new(xp, yp).unwrap()).unwrap();
        assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
    }

    #[test]
    fn empty_sets_are_errors() {
        let k = Kernel::gaussian(1.0, 1).unwrap();
        let f = single_atom(k, array![0.0], 1.0);
        assert!(empirical_lip(&f, Array2::zeros((0, 1)).view()).is_err());
    }

    #[test]
    fn lip_of_linear_fit_is_weight_norm() {
        // linear kernel: f(x) = w·x with w the atom point
        let w = array![3.0, -4.0];
        let f = single_atom(Kernel::linear(2), w.clone(), 1.0);
        let pts = array![[0.0, 0.0], [1.0, 1.0], [-2.0, 0.3]];
        let lip = empirical_lip(&f, pts.view()).unwrap();
        assert!((lip - 5.0).abs() < 1e-12);
    }

    #[test]
    fn lip_of_zero_function_is_zero() {
        let k = Kernel::gaussian(1.0, 2).unwrap();
        let d = Dictionary::new(k, vec![Atom::point(array![0.0, 0.0])]).unwrap();
        let f = RkhsFunction::zero(d);
        assert_eq!(empirical_lip(&f, array![[0.4, 0.2]].view()).unwrap(), 0.0);
    }

    #[test]
    fn segment_lip_matches_finite_difference_grid() {
        // single Gaussian atom on a segment through its center
        let gamma = 3.0;
        let k = Kernel::gaussian(gamma, 2).unwrap();
        let x0 = array![0.2, -0.1];
        let f = single_atom(k, x0.clone(), 1.0);
        let x1 = array![-0.8, -0.1];
        let x2 = array![1.2, -0.1];
        let lip = segment_lip(&f, x1.view(), x2.view(), 2001).unwrap();
        // brute-force central differences of evaluate along a dense grid
        let mut brute = 0.0f64;
        let h = 1e-6;
        for kk in 0..2001 {
            let t = kk as f64 / 2000.0;
            let x = &x1 + &((&x2 - &x1) * t);
            let mut g2 = 0.0;
            for j in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let d =
                    (f.evaluate(xp.view()).unwrap() - f.evaluate(xm.view()).unwrap()) / (2.0 * h);
                g2 += d * d;
            }
            brute = brute.max(g2.sqrt());
        }
        assert!((lip - brute).abs() <= 1e-4, "{lip} vs {brute}");
    }

    #[test]
    fn lip_is_monotone_under_inclusion() {
        let k = Kernel::gaussian(2.0, 2).unwrap();
        let f = single_atom(k, array![0.3, 0.4], 1.3);
        let mut rng = cell_rng(31, 0);
        let pts = Array2::from_shape_fn((40, 2), |_| rng.gen_range(-1.0..1.0));
        let small = empirical_lip(&f, pts.slice(s![..10, ..])).unwrap();
        let large = empirical_lip(&f, pts.view()).unwrap();
        assert!(large >= small);
    }

    #[test]
    fn norm_ratio_basics() {
        let k = Kernel::gaussian(1.0, 1).unwrap();
        let f = single_atom(k.clone(), array![0.0], 1.0);
        let f2 = single_atom(k.clone(), array![0.0], 2.0);
        assert!((norm_ratio(&f, &f) - 1.0).abs() < 1e-12);
        assert!((norm_ratio(&f2, &f) - 2.0).abs() < 1e-12);
        let z = RkhsFunction::zero(
            Dictionary::new(k, vec![Atom::point(array![0.0])]).unwrap(),
        );
        assert!(norm_ratio(&f, &z).is_infinite());
    }

    #[test]
    fn gaussian_moment_constants() {
        let mc = moment_constants(SymmetricLaw::GaussianIso, 7);
        assert_eq!((mc.c1, mc.c2), (1.0, 2.0));
    }

    #[test]
    fn sphere_moment_constants_p1() {
        // x1 = ±1: C1 = 1, C2 = 0
        let mc = moment_constants(SymmetricLaw::UniformSphere, 1);
        assert!((mc.c1 - 1.0).abs() < 1e-15);
        assert!(mc.c2.abs() < 1e-15);
    }

    #[test]
    fn sphere_c2_matches_monte_carlo() {
        let p = 5;
        let mc = moment_constants(SymmetricLaw::UniformSphere, p);
        // E x1^4 via MC on the first coordinate
        let mut rng = cell_rng(32, 0);
        let draws = 2_000_000usize;
        let mut s = 0.0;
        let mut s2 = 0.0;
        let mut x = Array1::<f64>::zeros(p);
        for _ in 0..draws {
            for v in x.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let nrm = x.dot(&x).sqrt();
            let c = x[0] / nrm;
            let c4 = c.powi(4);
            s += c4;
            s2 += c4 * c4;
        }
        let m4 = s / draws as f64;
        let se = ((s2 / draws as f64 - m4 * m4) / draws as f64).sqrt();
        let c2_mc = m4 - mc.c1 * mc.c1;
        assert!(
            (c2_mc - mc.c2).abs() <= 3.0 * se,
            "closed form {} vs MC {} (se {})",
            mc.c2,
            c2_mc,
            se
        );
    }

    #[test]
    fn generalization_closed_form_trivials() {
        let mc = moment_constants(SymmetricLaw::GaussianIso, 3);
        // D = 0 -> C1 ||d||^2
        let d = array![1.0, -2.0, 0.5];
        let v = quadratic_generalization(d.view(), &Array2::zeros((3, 3)), &mc).unwrap();
        assert!((v - d.dot(&d)).abs() < 1e-14);
        // d = 0, D = I (Gaussian): C2 p + C1^2 p^2
        let v = quadratic_generalization(Array1::zeros(3).view(), &Array2::eye(3), &mc).unwrap();
        assert!((v - (2.0 * 3.0 + 9.0)).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_d_rejected() {
        let mc = moment_constants(SymmetricLaw::GaussianIso, 2);
        let d = array![0.0, 0.0];
        let bad = array![[0.0, 1.0], [0.0, 0.0]];
        assert!(quadratic_generalization(d.view(), &bad, &mc).is_err());
    }

    #[test]
    fn generalization_matches_monte_carlo_for_both_laws() {
        let p = 6;
        let mut rng = cell_rng(33, 0);
        for law in [SymmetricLaw::GaussianIso, SymmetricLaw::UniformSphere] {
            let mc = moment_constants(law, p);
            for rep in 0..3 {
                let d = Array1::from_shape_fn(p, |_| rng.gen_range(-1.0..1.0));
                let mut m = Array2::from_shape_fn((p, p), |_| rng.gen_range(-1.0..1.0));
                m = (&m + &m.t()) * 0.5;
                let exact = quadratic_generalization(d.view(), &m, &mc).unwrap();
                let (est, se) =
                    mc_quadratic_expectation(law, d.view(), &m, 400_000, 1000 + rep as u64);
                assert!(
                    (exact - est).abs() <= 3.0 * se,
                    "{law:?} rep {rep}: exact {exact} vs MC {est} (se {se})"
                );
            }
        }
    }

    #[test]
    fn mc_estimate_is_schedule_independent() {
        let d = array![0.5, -0.3];
        let m = array![[0.2, 0.1], [0.1, -0.4]];
        let a = mc_quadratic_expectation(SymmetricLaw::GaussianIso, d.view(), &m, 200_000, 9);
        let b = mc_quadratic_expectation(SymmetricLaw::GaussianIso, d.view(), &m, 200_000, 9);
        assert_eq!(a, b);
    }
}
