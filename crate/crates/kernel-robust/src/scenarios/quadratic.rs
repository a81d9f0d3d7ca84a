//! The identity-design quadratic-kernel scenario (`x_i = e_i`, `n <= p`)
//! with closed-form estimators in explicit feature coordinates.
//!
//! For this design everything the limiting formula touches stays inside a
//! six-dimensional invariant subspace of feature space, spanned by
//!
//! ```text
//! [y, 0]  [0, diag y]  [0, y1ᵀ + 1yᵀ]  [1, 0]  [0, I]  [0, 11ᵀ]
//! ```
//!
//! (vectors padded over the occupied coordinates), so the damped correction
//! reduces to a 6x6 solve whatever `n` is. This is an independent route to
//! the same estimators as the Gram-based [`crate::estimators::limit_augmented`]
//! path and is used as its oracle.

use super::{RecordRow, ScenarioConfig, ScenarioReport, Verdict};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{moment_constants, quadratic_generalization, SymmetricLaw};
use crate::rng::cell_rng;
use ndarray::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// A quadratic-kernel RKHS element in feature coordinates:
/// `f(x) = a1 d·x + a2 xᵀ D x`.
#[derive(Debug, Clone)]
pub struct FeatureFunction {
    pub a1: f64,
    pub a2: f64,
    pub d: Array1<f64>,
    pub dd: Array2<f64>,
}

impl FeatureFunction {
    pub fn evaluate(&self, x: ArrayView1<f64>) -> f64 {
        self.a1 * self.d.dot(&x) + self.a2 * x.dot(&self.dd.dot(&x))
    }

    pub fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        &self.d * self.a1 + &(self.dd.dot(&x) * (2.0 * self.a2))
    }

    pub fn hnorm(&self) -> f64 {
        (self.d.dot(&self.d) + self.dd.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Plain representation `(d', D')` with `f(x) = d'·x + xᵀ D' x`.
    pub fn plain(&self) -> (Array1<f64>, Array2<f64>) {
        (&self.d * self.a1, &self.dd * self.a2)
    }
}

/// The six-dimensional invariant-subspace solve.
struct SixDim {
    n: usize,
    p: usize,
    y: Array1<f64>,
    a1: f64,
    a2: f64,
    gram: Array2<f64>,
    sig: Array2<f64>,
    proj: Array2<f64>,
}

impl SixDim {
    fn new(y: &Array1<f64>, a1: f64, a2: f64, p: usize) -> Self {
        let n = y.len();
        let nf = n as f64;
        let ys: f64 = y.sum();
        let y2: f64 = y.dot(y);
        let s = a1 * a1 + a2 * a2;
        let c1 = a1 * a2;
        let c2 = a2 * a2;

        // Gram of the basis elements under <[d,D],[d',D']> = d·d' + Tr(D D')
        let ip = |c: &[f64; 6], cc: &[f64; 6]| -> f64 {
            let mut t = c[0] * cc[0] * y2 + (c[0] * cc[3] + c[3] * cc[0]) * ys + c[3] * cc[3] * nf;
            t += c[1] * cc[1] * y2;
            t += (c[1] * cc[2] + c[2] * cc[1]) * 2.0 * y2;
            t += (c[1] * cc[4] + c[4] * cc[1]) * ys;
            t += (c[1] * cc[5] + c[5] * cc[1]) * ys;
            t += c[2] * cc[2] * (2.0 * nf * y2 + 2.0 * ys * ys);
            t += (c[2] * cc[4] + c[4] * cc[2]) * 2.0 * ys;
            t += (c[2] * cc[5] + c[5] * cc[2]) * 2.0 * nf * ys;
            t += c[4] * cc[4] * nf;
            t += (c[4] * cc[5] + c[5] * cc[4]) * nf;
            t += c[5] * cc[5] * nf * nf;
            t
        };
        let mut gram = Array2::zeros((6, 6));
        for i in 0..6 {
            for j in 0..6 {
                let mut ei = [0.0; 6];
                let mut ej = [0.0; 6];
                ei[i] = 1.0;
                ej[j] = 1.0;
                gram[[i, j]] = ip(&ei, &ej);
            }
        }

        // Sigma' = (1/n) sum_ij T_ij T_ijᵀ restricted to the subspace
        let mut sig = Array2::zeros((6, 6));
        sig.column_mut(0).assign(&array![a1 * a1, 0.0, c1 / nf, 0.0, 0.0, 0.0]);
        sig.column_mut(1).assign(&array![2.0 * c1 / nf, 4.0 * c2 / nf, 0.0, 0.0, 0.0, 0.0]);
        sig.column_mut(2)
            .assign(&array![2.0 * c1, 0.0, 4.0 * c2 / nf, 2.0 * c1 * ys / nf, 0.0, 0.0]);
        sig.column_mut(3).assign(&array![0.0, 0.0, 0.0, a1 * a1, 0.0, 2.0 * c1 / nf]);
        sig.column_mut(4).assign(&array![0.0, 0.0, 0.0, 2.0 * c1 / nf, 4.0 * c2 / nf, 0.0]);
        sig.column_mut(5).assign(&array![0.0, 0.0, 0.0, 2.0 * c1, 0.0, 4.0 * c2 / nf]);

        // projector onto span{K_{e_i}}
        let mut proj = Array2::zeros((6, 6));
        proj.column_mut(0).assign(&array![a1 * a1 / s, c1 / s, 0.0, 0.0, 0.0, 0.0]);
        proj.column_mut(1).assign(&array![c1 / s, c2 / s, 0.0, 0.0, 0.0, 0.0]);
        proj.column_mut(2).assign(&array![2.0 * c1 / s, 2.0 * c2 / s, 0.0, 0.0, 0.0, 0.0]);
        proj.column_mut(3).assign(&array![0.0, 0.0, 0.0, a1 * a1 / s, c1 / s, 0.0]);
        proj.column_mut(4).assign(&array![0.0, 0.0, 0.0, c1 / s, c2 / s, 0.0]);
        proj.column_mut(5).assign(&array![0.0, 0.0, 0.0, c1 / s, c2 / s, 0.0]);

        SixDim { n, p, y: y.clone(), a1, a2, gram, sig, proj }
    }

    /// Damped-correction coordinates at `mu = lambda/eps²` (`None` for the
    /// undamped pseudoinverse limit), solved in the metric induced by the
    /// basis Gram.
    fn g_coords(&self, mu: Option<f64>) -> Result<Array1<f64>> {
        let s = self.a1 * self.a1 + self.a2 * self.a2;
        let f0 = array![self.a1 / s, self.a2 / s, 0.0, 0.0, 0.0, 0.0];
        // orthonormalize the basis via the 6x6 Gram
        let eig = linalg::SymEig::new(&self.gram)?;
        let dmax = eig.vals.iter().cloned().fold(0.0f64, f64::max);
        let cut = 1e-12 * dmax;
        let keep: Vec<usize> = (0..6).filter(|&i| eig.vals[i] > cut).collect();
        let r = keep.len();
        let mut q = Array2::zeros((6, r));
        let mut sq = Array1::zeros(r);
        for (k, &i) in keep.iter().enumerate() {
            q.column_mut(k).assign(&eig.vecs.column(i));
            sq[k] = eig.vals[i].sqrt();
        }
        let to_u = |c: ArrayView1<f64>| -> Array1<f64> {
            let mut u = q.t().dot(&c);
            u *= &sq;
            u
        };
        let from_u = |u: ArrayView1<f64>| -> Array1<f64> {
            let mut t = u.to_owned();
            t /= &sq;
            q.dot(&t)
        };
        let op_u = |a: &Array2<f64>| -> Array2<f64> {
            // coordinate matrix -> matrix on orthonormal coords
            let mut m = q.t().dot(&a.dot(&q));
            for i in 0..r {
                for j in 0..r {
                    m[[i, j]] *= sq[i] / sq[j];
                }
            }
            m
        };
        let p_u = op_u(&self.proj);
        let sig_u = op_u(&self.sig);
        let eye = Array2::eye(r);
        let perp = &eye - &p_u;
        let a_u = {
            let m = perp.dot(&sig_u).dot(&perp);
            (&m + &m.t()) * 0.5
        };
        let u0 = to_u(f0.view());
        let b_u = perp.dot(&sig_u.dot(&p_u.dot(&u0)));
        let w_u = match mu {
            Some(m) => linalg::solve_psd(&a_u, b_u.view(), m)?,
            None => linalg::solve_psd(&a_u, b_u.view(), 0.0)?,
        };
        Ok(from_u((&u0 - &w_u).view()))
    }

    fn to_feature(&self, coords: ArrayView1<f64>) -> FeatureFunction {
        let (n, p) = (self.n, self.p);
        let mut d = Array1::zeros(p);
        let mut dd = Array2::zeros((p, p));
        for i in 0..n {
            d[i] += coords[0] * self.y[i] + coords[3];
            dd[[i, i]] += coords[1] * self.y[i] + coords[4];
            for j in 0..n {
                dd[[i, j]] +=
                    coords[2] * (self.y[i] + self.y[j]) + coords[5];
            }
        }
        FeatureFunction { a1: self.a1, a2: self.a2, d, dd }
    }
}

/// Exact feature-coordinate representation of a quadratic-kernel RKHS
/// function (point and tangent atoms both have explicit features). This
/// makes H distances between the Gram path and the closed form computable
/// without the cancellation of the norms-minus-cross-term route.
pub fn feature_of(f: &crate::rkhs::RkhsFunction) -> Result<FeatureFunction> {
    let (a1, a2, p) = match *f.kernel() {
        crate::kernel::Kernel::Quadratic { a1, a2, dim } => (a1, a2, dim),
        _ => {
            return Err(Error::InvalidParameter(
                "feature extraction requires the quadratic kernel".into(),
            ))
        }
    };
    let mut d = Array1::zeros(p);
    let mut dd = Array2::zeros((p, p));
    // atom features: K_x -> [a1 x, a2 x xᵀ]; T_x u -> [a1 u, a2 (u xᵀ + x uᵀ)]
    for (c, atom) in f.coeffs().iter().zip(f.dictionary().atoms().iter()) {
        match atom {
            crate::rkhs::Atom::Point(x) => {
                d.scaled_add(c * a1, x);
                for i in 0..p {
                    for j in 0..p {
                        dd[[i, j]] += c * a2 * x[i] * x[j];
                    }
                }
            }
            crate::rkhs::Atom::Tangent { x, dir } => {
                d.scaled_add(c * a1, dir);
                for i in 0..p {
                    for j in 0..p {
                        dd[[i, j]] += c * a2 * (dir[i] * x[j] + x[i] * dir[j]);
                    }
                }
            }
        }
    }
    Ok(FeatureFunction { a1, a2, d, dd })
}

/// H distance between two feature representations.
pub fn feature_distance(a: &FeatureFunction, b: &FeatureFunction) -> f64 {
    let dd = &a.d - &b.d;
    let dm = &a.dd - &b.dd;
    (dd.dot(&dd) + dm.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Closed-form estimators for the `x_i = e_i` design: the ridgeless fit,
/// the undamped limit `g_0`, and the damped limit `g_lambda` (at
/// `eps = 0` the damping is infinite and `g_lambda` equals the ridgeless
/// fit). Requires `n <= p`.
pub fn closed_form_quadratic(
    y: &Array1<f64>,
    a1: f64,
    a2: f64,
    lambda: f64,
    eps: f64,
    p: usize,
) -> Result<(FeatureFunction, FeatureFunction, FeatureFunction)> {
    let n = y.len();
    if n > p {
        return Err(Error::InvalidParameter(format!("need n <= p, got n={n}, p={p}")));
    }
    if lambda < 0.0 || eps < 0.0 {
        return Err(Error::InvalidParameter("lambda and eps must be >= 0".into()));
    }
    let six = SixDim::new(y, a1, a2, p);
    let s = a1 * a1 + a2 * a2;
    let f0 = six.to_feature(array![a1 / s, a2 / s, 0.0, 0.0, 0.0, 0.0].view());
    let g0 = six.to_feature(six.g_coords(None)?.view());
    let glam = if eps == 0.0 {
        f0.clone()
    } else {
        six.to_feature(six.g_coords(Some(lambda / (eps * eps)))?.view())
    };
    Ok((f0, g0, glam))
}

/// Maximum gradient norm of a feature function over the unit ball, by
/// projected gradient ascent from random restarts plus the analytic
/// near-optimal candidates.
pub fn lip_unit_ball(
    f: &FeatureFunction,
    restarts: usize,
    seed: u64,
    extra_candidates: &[Array1<f64>],
) -> f64 {
    let p = f.d.len();
    let dd = &f.dd * f.a2;
    let dv = &f.d * f.a1;
    let grad_norm = |x: &Array1<f64>| -> f64 {
        let g = &dv + &(dd.dot(x) * 2.0);
        g.dot(&g).sqrt()
    };
    let mut rng = cell_rng(seed, 0x11b);
    let mut candidates: Vec<Array1<f64>> = Vec::with_capacity(restarts + extra_candidates.len() + 2);
    for c in extra_candidates {
        candidates.push(c.clone());
        candidates.push(-c.clone());
    }
    if dv.dot(&dv) > 0.0 {
        candidates.push(dv.clone());
    }
    for _ in 0..restarts {
        candidates.push(Array1::from_shape_fn(p, |_| rng.sample::<f64, _>(StandardNormal)));
    }
    let mut best = 0.0f64;
    for c in candidates {
        let nrm = c.dot(&c).sqrt();
        if !(nrm > 0.0) {
            continue;
        }
        let mut x = c / nrm;
        let mut val = grad_norm(&x);
        for _ in 0..400 {
            // ascent direction of ||grad f(x)||^2 is 4 a2 D grad
            let g = &dv + &(dd.dot(&x) * 2.0);
            let step = dd.dot(&g);
            let sn = step.dot(&step).sqrt();
            if sn < 1e-15 {
                break;
            }
            let mut xn = &x + &(step * (0.08 / sn));
            let xnn = xn.dot(&xn).sqrt();
            if xnn > 1.0 {
                xn /= xnn;
            }
            let vn = grad_norm(&xn);
            if vn <= val * (1.0 + 1e-13) {
                break;
            }
            x = xn;
            val = vn;
        }
        best = best.max(val);
    }
    best
}

pub fn run_quadratic_identity(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let qc = cfg.quadratic.clone().unwrap_or_default();
    let (a1, a2) = match cfg.kernel {
        super::KernelSpec::Quadratic { a1, a2 } => (a1, a2),
        _ => {
            return Err(Error::Config(
                "the quadratic-identity scenario needs a quadratic kernel".into(),
            ))
        }
    };
    let n = qc.n;
    let p = n;
    let eps = cfg.epsilon;
    if !(eps > 0.0) {
        return Err(Error::Config("the quadratic-identity scenario needs epsilon > 0".into()));
    }
    let lambdas: Vec<f64> = qc.regime_factors.iter().map(|f| f * eps * eps).collect();
    let mc = moment_constants(SymmetricLaw::UniformSphere, p);

    struct Rep {
        rows: Vec<RecordRow>,
        blowup: bool,
        lip_ratio_21: f64,
        hnorm_ratio: f64,
        mse: [f64; 4],
    }

    let reps: Vec<Rep> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| -> Result<Rep> {
            let seed = crate::rng::derive_seed(cfg.master_seed, rep as u64);
            let mut rng = cell_rng(cfg.master_seed, rep as u64);
            let y = Array1::from_shape_fn(n, |_| {
                qc.y_mean + qc.y_sd * rng.sample::<f64, _>(StandardNormal)
            });
            let (f0, _g0, g1) = closed_form_quadratic(&y, a1, a2, lambdas[0], eps, p)?;
            let (_, _, g2) = closed_form_quadratic(&y, a1, a2, lambdas[1], eps, p)?;
            let (_, _, g3) = closed_form_quadratic(&y, a1, a2, lambdas[2], eps, p)?;

            // analytic near-optimal directions for the ball ascent
            let mut cand1 = Array1::from_shape_fn(p, |i| if i < n { y[i] * y[i] } else { 0.0 });
            let c1n = cand1.dot(&cand1).sqrt();
            if c1n > 0.0 {
                cand1 /= c1n;
            }
            let cand2 = Array1::from_elem(p, 1.0 / (p as f64).sqrt());
            let extras = vec![cand1, cand2];

            let fits = [&f0, &g1, &g2, &g3];
            let names = ["standard_ridgeless", "limit_lambda1", "limit_lambda2", "limit_lambda3"];
            let lamcol = [0.0, lambdas[0], lambdas[1], lambdas[2]];
            let mut rows = Vec::with_capacity(4);
            let mut lips = [0.0f64; 4];
            let mut mses = [0.0f64; 4];
            for (k, f) in fits.iter().enumerate() {
                let lip = lip_unit_ball(f, qc.lip_restarts, seed ^ (k as u64), &extras);
                let (pd, pdd) = f.plain();
                let mut diff_d = pd;
                for i in 0..n {
                    diff_d[i] -= y[i];
                }
                let mse = quadratic_generalization(diff_d.view(), &pdd, &mc)?;
                lips[k] = lip;
                mses[k] = mse;
                rows.push(RecordRow {
                    scenario: "quadratic".into(),
                    estimator: names[k].into(),
                    lambda: lamcol[k],
                    repetition: rep,
                    mse,
                    lip,
                    hnorm: f.hnorm(),
                    seed,
                });
            }
            Ok(Rep {
                rows,
                blowup: lips[1] > 1.9 * lips[2],
                lip_ratio_21: lips[1] / lips[2].max(1e-300),
                hnorm_ratio: fits[1].hnorm() / fits[2].hnorm().max(1e-300),
                mse: mses,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ScenarioReport {
        scenario: "quadratic".into(),
        config_hash: cfg.hash(),
        ..Default::default()
    };
    for rep in &reps {
        report.rows.extend(rep.rows.iter().cloned());
    }
    report.aggregates = ScenarioReport::build_aggregates(&report.rows);

    let frac = reps.iter().filter(|r| r.blowup).count() as f64 / reps.len() as f64;
    let med_ratio = {
        let mut v: Vec<f64> = reps.iter().map(|r| r.lip_ratio_21).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    report.verdicts.push(Verdict {
        name: "lip_lambda1_gt_1.9_lambda2_on_95pct".into(),
        pass: frac >= 0.95,
        margin: frac - 0.95,
        detail: format!("fraction {frac:.3}, median Lip ratio {med_ratio:.2}"),
    });
    let mean = |k: usize| reps.iter().map(|r| r.mse[k]).sum::<f64>() / reps.len() as f64;
    let (m0, m1, m2, m3) = (mean(0), mean(1), mean(2), mean(3));
    report.verdicts.push(Verdict::strict(
        "mse_lambda1_gt_lambda2",
        m1,
        m2,
        format!("mean MSE: l1={m1:.4e} l2={m2:.4e} ridgeless={m0:.4e} l3={m3:.4e}"),
    ));
    let mean_hr = reps.iter().map(|r| r.hnorm_ratio).sum::<f64>() / reps.len() as f64;
    report.verdicts.push(Verdict {
        name: "hnorm_ratio_lambda1_over_lambda2".into(),
        pass: mean_hr > 1.0,
        margin: mean_hr - 1.0,
        detail: format!("mean |g(l1)| / |g(l2)| = {mean_hr:.3}"),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{fit_standard, limit_augmented, Dataset};
    use crate::kernel::Kernel;
    use crate::scenarios::ScenarioKind;

    fn identity_data(n: usize, p: usize, y: &Array1<f64>) -> Dataset {
        let mut x = Array2::zeros((n, p));
        for i in 0..n {
            x[[i, i]] = 1.0;
        }
        Dataset::new(x, y.clone()).unwrap()
    }

    #[test]
    fn ridgeless_closed_form_interpolates() {
        let y = array![0.4, -1.1, 0.9];
        let (f0, _, _) = closed_form_quadratic(&y, 1.0, 2.0, 0.0, 0.01, 5).unwrap();
        for i in 0..3 {
            let mut e = Array1::zeros(5);
            e[i] = 1.0;
            assert!((f0.evaluate(e.view()) - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn centered_targets_leave_the_correction_small_in_the_mean_direction() {
        // sum y = 0 kills the mean component that drives the blowup
        let y = array![1.0, -1.0, 0.5, -0.5];
        let (_f0, g0_a, _) = closed_form_quadratic(&y, 1.0, 1.0, 0.0, 0.01, 4).unwrap();
        let ys: Array1<f64> = &y + &Array1::from_elem(4, 0.8);
        let (_f0b, g0_b, _) = closed_form_quadratic(&ys, 1.0, 1.0, 0.0, 0.01, 4).unwrap();
        // the shifted draw's correction is much larger relative to its fit
        let (f0a, _, _) = closed_form_quadratic(&y, 1.0, 1.0, 0.0, 0.01, 4).unwrap();
        let (f0b, _, _) = closed_form_quadratic(&ys, 1.0, 1.0, 0.0, 0.01, 4).unwrap();
        let rel_a = (g0_a.hnorm() - f0a.hnorm()).abs() / f0a.hnorm();
        let rel_b = (g0_b.hnorm() - f0b.hnorm()).abs() / f0b.hnorm();
        assert!(rel_b > rel_a, "shifted {rel_b} vs centered {rel_a}");
    }

    #[test]
    fn closed_form_matches_gram_path() {
        // the oracle equivalence behind the quadratic scenario
        let mut rng = cell_rng(90, 0);
        for trial in 0..4 {
            let n = 2 + (trial % 3);
            let p = n + (trial % 2);
            let a1 = 1.0 + 0.3 * trial as f64;
            let a2 = 2.0 - 0.3 * trial as f64;
            let y = Array1::from_shape_fn(n, |_| rng.gen_range(-1.0..1.0));
            let eps = 1e-3;
            let lambda = eps * eps * 10f64.powi(trial as i32 - 2);
            let (_, _, g_cf) = closed_form_quadratic(&y, a1, a2, lambda, eps, p).unwrap();
            let data = identity_data(n, p, &y);
            let kernel = Kernel::quadratic(a1, a2, p).unwrap();
            let g = limit_augmented(&data, &kernel, lambda, eps, &Array2::eye(p)).unwrap();
            // exact feature coordinates on both sides avoid the
            // cancellation of the norms-minus-cross-term distance
            let g_feat = feature_of(&g.f).unwrap();
            let dist = feature_distance(&g_feat, &g_cf);
            assert!(
                dist <= 1e-10 * g_cf.hnorm().max(1.0),
                "trial {trial}: H distance {dist}"
            );
        }
    }

    #[test]
    fn lip_ascent_finds_the_analytic_maximum_for_pure_linear() {
        let f = FeatureFunction {
            a1: 1.0,
            a2: 1.0,
            d: array![3.0, -4.0],
            dd: Array2::zeros((2, 2)),
        };
        let lip = lip_unit_ball(&f, 5, 0, &[]);
        assert!((lip - 5.0).abs() < 1e-9);
    }

    #[test]
    fn lip_ascent_handles_diagonal_quadratic() {
        // f = x^T diag(2, -1) x: grad = 2 diag(2,-1) x, max norm 4 at x = ±e1
        let f = FeatureFunction {
            a1: 1.0,
            a2: 1.0,
            d: Array1::zeros(2),
            dd: array![[2.0, 0.0], [0.0, -1.0]],
        };
        let lip = lip_unit_ball(&f, 10, 1, &[]);
        assert!((lip - 4.0).abs() < 1e-6, "lip {lip}");
    }

    #[test]
    fn generalization_matches_reference_bias_formula() {
        // independent closed form for the ridgeless fit's excess risk under
        // Gaussian moments: (a2²/s)² ((C1+C2) Σβ² + C1² (Σβ)²)
        let mc = moment_constants(SymmetricLaw::GaussianIso, 6);
        let y = array![0.3, -0.7, 1.1, 0.2];
        let (a1, a2) = (1.0, 1.0);
        let s: f64 = a1 * a1 + a2 * a2;
        let (f0, _, _) = closed_form_quadratic(&y, a1, a2, 0.0, 0.01, 6).unwrap();
        let (pd, pdd) = f0.plain();
        let mut diff_d = pd;
        for i in 0..4 {
            diff_d[i] -= y[i];
        }
        let mine = quadratic_generalization(diff_d.view(), &pdd, &mc).unwrap();
        let beta2: f64 = y.dot(&y);
        let betas: f64 = y.sum();
        let reference = (a2 * a2 / s).powi(2)
            * ((mc.c1 + mc.c2) * beta2 + mc.c1 * mc.c1 * betas * betas);
        assert!(
            (mine - reference).abs() <= 1e-10 * reference.abs().max(1.0),
            "{mine} vs {reference}"
        );
    }

    #[test]
    fn ridgeless_standard_fit_agrees_with_feature_formula() {
        let y = array![0.5, -0.2];
        let (f0, _, _) = closed_form_quadratic(&y, 1.0, 2.0, 0.0, 0.01, 3).unwrap();
        let data = identity_data(2, 3, &y);
        let kernel = Kernel::quadratic(1.0, 2.0, 3).unwrap();
        let fit = fit_standard(&data, &kernel, 0.0).unwrap();
        let mut rng = cell_rng(91, 0);
        for _ in 0..30 {
            let x = Array1::from_shape_fn(3, |_| rng.gen_range(-1.0..1.0));
            let a = f0.evaluate(x.view());
            let b = fit.f.evaluate(x.view()).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn scenario_reports_blowup_fraction() {
        let mut cfg = ScenarioConfig::default_for(ScenarioKind::Quadratic);
        cfg.repetitions = 6;
        cfg.quadratic.as_mut().unwrap().n = 24;
        cfg.quadratic.as_mut().unwrap().lip_restarts = 10;
        let report = run_quadratic_identity(&cfg).unwrap();
        assert_eq!(report.rows.len(), 6 * 4);
        assert!(report.verdicts.iter().any(|v| v.name.contains("1.9")));
    }
}
