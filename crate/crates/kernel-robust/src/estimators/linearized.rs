//! The linearized augmented and adversarial objectives over
//! `span(K_X, T_X)`.
//!
//! Replacing `K_{x+delta}` by its first-order expansion `K_x + T_x delta`
//! turns the augmented objective into a quadratic (solved in closed form in
//! span coordinates) and the adversarial one into the convex but
//! non-smooth functional
//!
//! ```text
//! (1/n) Σ_i (|y_i - <f, K_{x_i}>| + eps ||T_{x_i}ᵀ f||)² + lambda ||f||²
//! ```
//!
//! minimized here by subgradient descent followed by a damped-Newton
//! homotopy on a vanishing smoothing parameter (the kinks at exact
//! interpolation make plain subgradient steps stall long before the
//! stationarity tolerance).

use super::{check_psd, Dataset, FitMode, FitResult, KtSpan};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg;
use ndarray::prelude::*;

/// Effort limits for the non-smooth adversarial solve.
#[derive(Debug, Clone, Copy)]
pub struct SolverBudget {
    /// Plain subgradient iterations before the Newton phase.
    pub subgradient_iters: usize,
    /// Damped-Newton iterations per smoothing level.
    pub newton_iters: usize,
    /// First-order stationarity tolerance (relative to the target scale);
    /// exhausting the budget above it sets a warning flag, not an error.
    pub stationarity_tol: f64,
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget { subgradient_iters: 2000, newton_iters: 60, stationarity_tol: 1e-7 }
    }
}

/// Minimize the expectation-expanded augmented objective
/// `(1/n) Σ_i [(y_i - <f,K_{x_i}>)² + eps² fᵀ T_{x_i} M T_{x_i}ᵀ f] + lambda ||f||²`.
pub fn fit_linearized_augmented(
    data: &Dataset,
    kernel: &Kernel,
    lambda: f64,
    eps: f64,
    m: &Array2<f64>,
) -> Result<FitResult> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("negative lambda {lambda}")));
    }
    check_psd(m, data.dim())?;
    let span = KtSpan::build(data, kernel)?;
    let n = span.n() as f64;
    let k = span.point_coords();
    let mut a = k.dot(&k.t()) / n;
    if eps > 0.0 {
        a.scaled_add(eps * eps, &span.sigma(m));
    }
    let b = k.dot(&data.y()) / n;
    let u = linalg::solve_psd(&a, b.view(), lambda)?;
    let f = span.function_from_coords(u.view());
    Ok(FitResult::plain(f, FitMode::LinearizedAugmented, lambda, eps))
}

fn solve_columns(m: &Array2<f64>, rhs: &Array2<f64>) -> Result<Array2<f64>> {
    let eig = linalg::SymEig::new(m)?;
    let mut out = Array2::zeros(rhs.dim());
    for (j, col) in rhs.columns().into_iter().enumerate() {
        out.column_mut(j).assign(&eig.solve_ridge(col, 0.0));
    }
    Ok(out)
}

struct AdvObjective<'a> {
    k: ArrayView2<'a, f64>,          // r x n point-atom coords
    thetas: Vec<ArrayView2<'a, f64>>, // r x p tangent blocks
    y: ArrayView1<'a, f64>,
    lambda: f64,
    eps: f64,
    n: f64,
}

impl AdvObjective<'_> {
    fn value(&self, u: ArrayView1<f64>, mu: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.y.len() {
            let a = self.y[i] - self.k.column(i).dot(&u);
            let tv = self.thetas[i].t().dot(&u);
            let b2 = tv.dot(&tv);
            let s = (a * a + mu * mu).sqrt() + self.eps * (b2 + mu * mu).sqrt();
            total += s * s;
        }
        total / self.n + self.lambda * u.dot(&u)
    }

    /// Gradient of the mu-smoothed objective (the subgradient with the
    /// zero-at-kink convention as mu -> 0).
    fn gradient(&self, u: ArrayView1<f64>, mu: f64) -> Array1<f64> {
        let mut g = u.to_owned() * (2.0 * self.lambda);
        for i in 0..self.y.len() {
            let a = self.y[i] - self.k.column(i).dot(&u);
            let tv = self.thetas[i].t().dot(&u);
            let b2 = tv.dot(&tv);
            let sa = (a * a + mu * mu).sqrt();
            let sb = (b2 + mu * mu).sqrt();
            let s = sa + self.eps * sb;
            let scale = 2.0 / self.n;
            if sa > 0.0 {
                g.scaled_add(-scale * s * a / sa, &self.k.column(i));
            }
            if sb > 0.0 {
                g.scaled_add(scale * s * self.eps / sb, &self.thetas[i].dot(&tv));
            }
        }
        g
    }

    /// Norm of the minimum-norm subgradient: at near-interpolation kinks the
    /// sign of the |a_i| term is chosen (within [-1, 1]) to minimize the
    /// overall norm, by a few passes of coordinate descent.
    fn stationarity(&self, u: ArrayView1<f64>, kink_tol: f64) -> f64 {
        let mut base = u.to_owned() * (2.0 * self.lambda);
        let mut kink_dirs: Vec<Array1<f64>> = Vec::new();
        for i in 0..self.y.len() {
            let a = self.y[i] - self.k.column(i).dot(&u);
            let tv = self.thetas[i].t().dot(&u);
            let b = tv.dot(&tv).sqrt();
            let s_abs = a.abs() + self.eps * b;
            let scale = 2.0 / self.n;
            if b > 0.0 {
                base.scaled_add(scale * s_abs * self.eps / b, &self.thetas[i].dot(&tv));
            }
            if a.abs() > kink_tol {
                base.scaled_add(-scale * s_abs * a.signum(), &self.k.column(i));
            } else {
                // a at the kink: contribution t * (-s_abs * scale) * k_i, t in [-1, 1]
                kink_dirs.push(self.k.column(i).to_owned() * (-(scale * s_abs)));
            }
        }
        if kink_dirs.is_empty() {
            return base.dot(&base).sqrt();
        }
        let mut t = vec![0.0f64; kink_dirs.len()];
        for _ in 0..30 {
            for j in 0..kink_dirs.len() {
                // minimize ||base + sum t_l d_l|| over t_j in [-1, 1]
                let mut resid = base.clone();
                for (l, d) in kink_dirs.iter().enumerate() {
                    if l != j {
                        resid.scaled_add(t[l], d);
                    }
                }
                let dj = &kink_dirs[j];
                let denom = dj.dot(dj);
                if denom > 0.0 {
                    t[j] = (-resid.dot(dj) / denom).clamp(-1.0, 1.0);
                }
            }
        }
        let mut resid = base;
        for (l, d) in kink_dirs.iter().enumerate() {
            resid.scaled_add(t[l], d);
        }
        resid.dot(&resid).sqrt()
    }
}

/// Minimize the linearized adversarial objective by subgradient descent
/// with a smoothed damped-Newton polish.
pub fn fit_linearized_adversarial(
    data: &Dataset,
    kernel: &Kernel,
    lambda: f64,
    eps: f64,
    budget: SolverBudget,
) -> Result<FitResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(
            "the linearized adversarial objective requires lambda > 0".into(),
        ));
    }
    if eps < 0.0 {
        return Err(Error::InvalidParameter(format!("negative eps {eps}")));
    }
    let span = KtSpan::build(data, kernel)?;
    let r = span.rank();
    let n = span.n();
    let k = span.point_coords();
    let thetas: Vec<_> = (0..n).map(|i| span.tangent_coords(i)).collect();
    let obj = AdvObjective {
        k,
        thetas,
        y: data.y(),
        lambda,
        eps,
        n: n as f64,
    };

    let scale = data.y().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
    let mut u = Array1::<f64>::zeros(r);

    // phase 1: subgradient descent at a safe 1/L step
    let kn2: f64 = obj.k.iter().map(|v| v * v).sum();
    let tn2: f64 = obj.thetas.iter().map(|t| t.iter().map(|v| v * v).sum::<f64>()).sum();
    let lip = 2.0 * (kn2 / obj.n + eps * eps * tn2 / obj.n + lambda) * 4.0;
    let step = 1.0 / lip.max(1e-300);
    for _ in 0..budget.subgradient_iters {
        let g = obj.gradient(u.view(), 0.0);
        u.scaled_add(-step, &g);
    }

    // phase 2: damped Newton on a shrinking smoothing parameter
    for level in 0..6 {
        let mu = scale * 10f64.powi(-3 - 2 * level as i32);
        for _ in 0..budget.newton_iters {
            let g = obj.gradient(u.view(), mu);
            let gn = g.dot(&g).sqrt();
            if gn < 1e-14 * scale {
                break;
            }
            // finite-difference Hessian of the smoothed gradient
            let h = 1e-7 * u.dot(&u).sqrt().max(1.0);
            let mut hess = Array2::zeros((r, r));
            for j in 0..r {
                let mut up = u.clone();
                let mut um = u.clone();
                up[j] += h;
                um[j] -= h;
                let gp = obj.gradient(up.view(), mu);
                let gm = obj.gradient(um.view(), mu);
                for i in 0..r {
                    hess[[i, j]] = (gp[i] - gm[i]) / (2.0 * h);
                }
            }
            let hess = (&hess + &hess.t()) * 0.5;
            let f0 = obj.value(u.view(), mu);
            let mut damp = 1e-10 * (hess.diag().sum() / r as f64).abs().max(1e-300);
            let mut moved = false;
            for _ in 0..30 {
                match linalg::solve_spd_cholesky(&hess, g.view(), damp) {
                    Ok(stepv) => {
                        let cand = &u - &stepv;
                        if obj.value(cand.view(), mu) < f0 {
                            u = cand;
                            moved = true;
                            break;
                        }
                        damp *= 10.0;
                    }
                    Err(_) => damp *= 10.0,
                }
            }
            if !moved {
                break;
            }
        }
    }

    // Endgame: when every residual sits at its kink (the generic optimum of
    // this objective interpolates exactly), the minimizer on that face is an
    // equality-constrained quadratic solved in closed form. Accept the face
    // solution only if it does not increase the exact objective.
    let active_tol = 1e-6 * scale;
    let all_active =
        (0..n).all(|i| (data.y()[i] - obj.k.column(i).dot(&u)).abs() <= active_tol);
    if all_active {
        let mut m = span.sigma(&Array2::eye(span.dim()));
        m *= eps * eps;
        for i in 0..r {
            m[[i, i]] += lambda;
        }
        if let Ok(minv_k) = solve_columns(&m, &obj.k.to_owned()) {
            let kt_minv_k = obj.k.t().dot(&minv_k);
            if let Ok(alpha) = linalg::solve_psd(&kt_minv_k, data.y(), 0.0) {
                let face = minv_k.dot(&alpha);
                if obj.value(face.view(), 0.0) <= obj.value(u.view(), 0.0) {
                    u = face;
                }
            }
        }
    }

    let stat = obj.stationarity(u.view(), 1e-9 * scale);
    let warning = if stat > budget.stationarity_tol * scale {
        Some(format!(
            "stationarity {stat:.3e} above tolerance {:.3e} after budget",
            budget.stationarity_tol * scale
        ))
    } else {
        None
    };
    let f = span.function_from_coords(u.view());
    Ok(FitResult {
        f,
        mode: FitMode::LinearizedAdversarial,
        lambda,
        eps,
        seed: 0,
        trajectory: None,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{fit_augmented, fit_standard, limit_adversarial, AugmentationModel};
    use crate::rng::cell_rng;
    use rand::Rng;

    fn three_point_instance() -> (Dataset, Kernel) {
        let x = array![[0.0, 0.0], [1.2, 0.1], [0.3, 1.1]];
        let y = array![1.0, -1.0, 0.5];
        (Dataset::new(x, y).unwrap(), Kernel::gaussian(1.0, 2).unwrap())
    }

    #[test]
    fn zero_eps_matches_standard_fit() {
        let (data, k) = three_point_instance();
        let lambda = 1e-3;
        let lin = fit_linearized_augmented(&data, &k, lambda, 0.0, &Array2::eye(2)).unwrap();
        let std_fit = fit_standard(&data, &k, lambda).unwrap();
        let mut rng = cell_rng(20, 0);
        for _ in 0..50 {
            let xp = Array1::from_shape_fn(2, |_| rng.gen_range(-1.0..1.0));
            let a = lin.f.evaluate(xp.view()).unwrap();
            let b = std_fit.f.evaluate(xp.view()).unwrap();
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_moment_matrix_matches_standard_fit() {
        let (data, k) = three_point_instance();
        let lambda = 1e-3;
        let lin =
            fit_linearized_augmented(&data, &k, lambda, 0.3, &Array2::zeros((2, 2))).unwrap();
        let std_fit = fit_standard(&data, &k, lambda).unwrap();
        let d = lin.f.distance(&std_fit.f).unwrap();
        assert!(d <= 1e-10 * std_fit.f.norm().max(1.0));
    }

    #[test]
    fn non_psd_moment_rejected() {
        let (data, k) = three_point_instance();
        let m = array![[1.0, 0.0], [0.0, -0.5]];
        assert!(fit_linearized_augmented(&data, &k, 1e-3, 0.1, &m).is_err());
    }

    #[test]
    fn linearized_augmented_tracks_monte_carlo_augmentation() {
        // With M = I/p and a large direction sample the two objectives agree
        // to first order; check the fits are close at a small eps.
        let (data, k) = three_point_instance();
        let eps = 0.02;
        let lambda = eps * eps;
        let mut rng = cell_rng(21, 0);
        let aug = AugmentationModel::finite_sphere_sets(eps, 3, 800, 2, &mut rng);
        let mc = fit_augmented(&data, &k, lambda, &aug).unwrap();
        let m = Array2::eye(2) / 2.0;
        let lin = fit_linearized_augmented(&data, &k, lambda, eps, &m).unwrap();
        let d = lin.f.distance(&mc.f).unwrap();
        assert!(d < 0.05 * mc.f.norm(), "distance {d} vs norm {}", mc.f.norm());
    }

    #[test]
    fn adversarial_solver_with_zero_eps_matches_standard() {
        let (data, k) = three_point_instance();
        let lambda = 1e-4;
        let adv = fit_linearized_adversarial(&data, &k, lambda, 0.0, SolverBudget::default())
            .unwrap();
        let std_fit = fit_standard(&data, &k, lambda).unwrap();
        let d = adv.f.distance(&std_fit.f).unwrap();
        assert!(d <= 1e-8 * std_fit.f.norm().max(1.0), "distance {d}");
    }

    #[test]
    fn adversarial_solver_matches_limit_formula() {
        // eps = 1e-2, lambda = 1e-4 (lambda = o(eps) regime): the exact
        // minimizer coincides with g'_lambda
        let (data, k) = three_point_instance();
        let (lambda, eps) = (1e-4, 1e-2);
        let adv =
            fit_linearized_adversarial(&data, &k, lambda, eps, SolverBudget::default()).unwrap();
        let g = limit_adversarial(&data, &k, lambda, eps).unwrap();
        let d = adv.f.distance(&g.f).unwrap();
        assert!(d <= 1e-4 * g.f.norm(), "distance {d} vs norm {}", g.f.norm());
        assert!(adv.warning.is_none(), "unexpected warning: {:?}", adv.warning);
    }

    #[test]
    fn adversarial_objective_beats_random_candidates() {
        let (data, k) = three_point_instance();
        let (lambda, eps) = (1e-3, 0.05);
        let adv =
            fit_linearized_adversarial(&data, &k, lambda, eps, SolverBudget::default()).unwrap();
        let span = KtSpan::build(&data, &k).unwrap();
        let n = span.n();
        let kc = span.point_coords();
        let thetas: Vec<_> = (0..n).map(|i| span.tangent_coords(i)).collect();
        let obj = AdvObjective {
            k: kc,
            thetas,
            y: data.y(),
            lambda,
            eps,
            n: n as f64,
        };
        let u_star = span.basis().coords_of_coeffs(adv.f.coeffs());
        let best = obj.value(u_star.view(), 0.0);
        let mut rng = cell_rng(22, 0);
        for _ in 0..1000 {
            let u = Array1::from_shape_fn(span.rank(), |_| rng.gen_range(-2.0..2.0));
            assert!(obj.value(u.view(), 0.0) >= best - 1e-12);
        }
    }

    #[test]
    fn nonpositive_lambda_rejected() {
        let (data, k) = three_point_instance();
        assert!(
            fit_linearized_adversarial(&data, &k, 0.0, 0.1, SolverBudget::default()).is_err()
        );
    }

    #[test]
    fn exhausted_budget_sets_warning_flag() {
        let (data, k) = three_point_instance();
        let tiny = SolverBudget { subgradient_iters: 1, newton_iters: 0, stationarity_tol: 1e-7 };
        let adv = fit_linearized_adversarial(&data, &k, 1e-4, 1e-2, tiny).unwrap();
        assert!(adv.warning.is_some());
    }
}
