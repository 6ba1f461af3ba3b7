//! Likelihood fits for the logistic, Poisson and negative binomial models.

use nalgebra::DVector;
use statrs::function::gamma::{digamma, ln_gamma};

use super::{Fit, FitOptions, FitStatus};
use crate::error::{Error, Result};
use crate::linalg::{linear_predictor, solve_spd, xt_v, xt_w_x};
use crate::models::{logistic, Dataset};

const ETA_CLAMP: f64 = 700.0;
const SEPARATION_ETA: f64 = 30.0;

#[inline]
fn log1pexp(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn start_point(p: usize, warm: Option<&[f64]>) -> Vec<f64> {
    match warm {
        Some(w) if w.len() >= p && w[..p].iter().all(|v| v.is_finite()) => w[..p].to_vec(),
        _ => vec![0.0; p],
    }
}

/// One step of a monotone Newton/Fisher ascent: halve `step` until the
/// objective does not decrease. Returns the accepted point and its value.
fn ascend<F>(beta: &[f64], step: &DVector<f64>, f0: f64, max_halvings: usize, objective: F) -> (Vec<f64>, f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut t = 1.0;
    for _ in 0..=max_halvings {
        let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + t * s).collect();
        let f = objective(&cand);
        if f.is_finite() && f >= f0 - 1e-12 * f0.abs().max(1.0) {
            return (cand, f, t);
        }
        t *= 0.5;
    }
    (beta.to_vec(), f0, 0.0)
}

fn logistic_loglik(y: &[f64], eta: &[f64]) -> f64 {
    y.iter().zip(eta).map(|(&yi, &e)| yi * e - log1pexp(e)).sum()
}

/// Logistic maximum likelihood by Newton–Raphson (IRLS) with step halving.
///
/// Responses may be fractional (pseudo-values); the score equation is the
/// same. A linear predictor exceeding ±30 on a set of observations that
/// keeps growing for three iterations is reported as separation.
pub fn fit_logistic_mle(data: &Dataset, opts: &FitOptions, warm: Option<&[f64]>) -> Result<Fit> {
    let x = data.x();
    let y = &data.y;
    if let Some(i) = y.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain(format!("logistic response {} at row {i} outside [0, 1]", y[i])));
    }
    let p = data.p();
    let mut beta = start_point(p, warm);
    let mut eta = linear_predictor(x, &beta);
    let mut ll = logistic_loglik(y, &eta);
    let mut saturated = eta.iter().filter(|e| e.abs() > SEPARATION_ETA).count();
    let mut growth = 0;
    let mut score_norm = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let mu: Vec<f64> = eta.iter().map(|&e| logistic(e)).collect();
        let w: Vec<f64> = mu.iter().map(|m| (m * (1.0 - m)).max(1e-300)).collect();
        let resid: Vec<f64> = y.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let score = xt_v(x, &resid);
        score_norm = score.norm() / data.n() as f64;
        let info = xt_w_x(x, &w);
        let step = solve_spd(&info, &score, opts.ridge_jitter)?;
        let (next, ll_next, t) = ascend(&beta, &step, ll, opts.max_halvings, |b| logistic_loglik(y, &linear_predictor(x, b)));
        let moved = t * step.amax();
        beta = next;
        ll = ll_next;
        eta = linear_predictor(x, &beta);
        if moved <= opts.tolerance * (1.0 + max_abs(&beta)) {
            return Ok(Fit::converged(beta, it));
        }
        let now = eta.iter().filter(|e| e.abs() > SEPARATION_ETA).count();
        growth = if now > saturated { growth + 1 } else { 0 };
        saturated = now;
        if growth >= 3 {
            return Ok(Fit { theta: beta, status: FitStatus::Separation { score_norm }, iterations: it });
        }
    }
    Ok(Fit { theta: beta, status: FitStatus::MaxIterations { score_norm }, iterations: opts.max_iterations })
}

fn poisson_loglik(y: &[f64], eta: &[f64]) -> f64 {
    y.iter()
        .zip(eta)
        .map(|(&yi, &e)| {
            let e = e.min(ETA_CLAMP);
            yi * e - e.exp()
        })
        .sum()
}

/// Poisson maximum likelihood (log link) by IRLS with step halving.
pub fn fit_poisson_mle(data: &Dataset, opts: &FitOptions, warm: Option<&[f64]>) -> Result<Fit> {
    let x = data.x();
    let y = &data.y;
    check_counts(y)?;
    let mut beta = start_point(data.p(), warm);
    let mut eta = linear_predictor(x, &beta);
    let mut ll = poisson_loglik(y, &eta);
    let mut score_norm = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let mu: Vec<f64> = eta.iter().map(|e| e.min(ETA_CLAMP).exp()).collect();
        let resid: Vec<f64> = y.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let score = xt_v(x, &resid);
        score_norm = score.norm() / data.n() as f64;
        let step = solve_spd(&xt_w_x(x, &mu), &score, opts.ridge_jitter)?;
        let (next, ll_next, t) = ascend(&beta, &step, ll, opts.max_halvings, |b| poisson_loglik(y, &linear_predictor(x, b)));
        let moved = t * step.amax();
        beta = next;
        ll = ll_next;
        eta = linear_predictor(x, &beta);
        if moved <= opts.tolerance * (1.0 + max_abs(&beta)) {
            return Ok(Fit::converged(beta, it));
        }
    }
    Ok(Fit { theta: beta, status: FitStatus::MaxIterations { score_norm }, iterations: opts.max_iterations })
}

fn check_counts(y: &[f64]) -> Result<()> {
    if let Some(i) = y.iter().position(|v| !(*v >= 0.0 && v.fract() == 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("count response {} at row {i} is not a nonnegative integer", y[i])));
    }
    Ok(())
}

/// Moment dispersion estimate `Σμ² / (Σ(y−μ)² − Σμ)`.
pub fn moment_alpha(y: &[f64], mu: &[f64]) -> Result<f64> {
    let num: f64 = mu.iter().map(|m| m * m).sum();
    let ss: f64 = y.iter().zip(mu).map(|(a, b)| (a - b).powi(2)).sum();
    let denominator = ss - mu.iter().sum::<f64>();
    if !(denominator > 0.0) {
        return Err(Error::NoOverdispersion { denominator });
    }
    Ok(num / denominator)
}

/// Two-step estimator: Poisson slopes, then the moment dispersion from the
/// Poisson fitted means. Estimates above `alpha_cap` are capped and flagged.
pub fn fit_poisson_then_moment_alpha(data: &Dataset, opts: &FitOptions, warm_beta: Option<&[f64]>) -> Result<Fit> {
    let mut fit = fit_poisson_mle(data, opts, warm_beta)?;
    let mu: Vec<f64> = linear_predictor(data.x(), &fit.theta).into_iter().map(|e| e.min(ETA_CLAMP).exp()).collect();
    let alpha = moment_alpha(&data.y, &mu)?;
    if alpha > opts.alpha_cap {
        fit.theta.push(opts.alpha_cap);
        fit.status = FitStatus::DispersionCapped;
    } else {
        fit.theta.push(alpha);
    }
    Ok(fit)
}

// For integer counts the gamma-function differences are finite sums, which
// stay accurate when alpha is large. Past a few terms the special functions
// are cheaper; their cancellation error is about eps·alpha/y, harmless below
// the alpha cap.
const DIRECT_SUM_LIMIT: f64 = 16.0;

fn lgamma_ratio(y: f64, alpha: f64) -> f64 {
    if y < DIRECT_SUM_LIMIT {
        (0..y as u64).map(|k| (alpha + k as f64).ln()).sum()
    } else {
        ln_gamma(y + alpha) - ln_gamma(alpha)
    }
}

fn digamma_diff(y: f64, alpha: f64) -> f64 {
    if y < DIRECT_SUM_LIMIT {
        (0..y as u64).map(|k| 1.0 / (alpha + k as f64)).sum()
    } else {
        digamma(y + alpha) - digamma(alpha)
    }
}

fn trigamma_diff(y: f64, alpha: f64) -> f64 {
    if y < DIRECT_SUM_LIMIT {
        -(0..y as u64).map(|k| (alpha + k as f64).powi(-2)).sum::<f64>()
    } else {
        trigamma(y + alpha) - trigamma(alpha)
    }
}

/// ψ′(x) for x > 0 by upward recurrence and the asymptotic series.
pub(crate) fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0 + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0))))
}

/// Negative binomial log-likelihood (mean `μ`, dispersion `α`).
pub fn negbin_loglik(y: &[f64], mu: &[f64], alpha: f64) -> f64 {
    negbin_kernel(y, mu, alpha) - log_factorials(y)
}

fn log_factorials(y: &[f64]) -> f64 {
    y.iter().map(|&v| ln_gamma(v + 1.0)).sum()
}

/// Log-likelihood without the parameter-free `−Σ ln y!`.
fn negbin_kernel(y: &[f64], mu: &[f64], alpha: f64) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(&yi, &m)| {
            let mut l = lgamma_ratio(yi, alpha) - alpha * (m / alpha).ln_1p();
            if yi > 0.0 {
                l += yi * (m.ln() - (alpha + m).ln());
            }
            l
        })
        .sum()
}

/// First and second derivatives of the log-likelihood in `t = ln α`.
fn dispersion_derivatives(y: &[f64], mu: &[f64], alpha: f64) -> (f64, f64) {
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (&yi, &m) in y.iter().zip(mu) {
        let am = alpha + m;
        d1 += digamma_diff(yi, alpha) - (m / alpha).ln_1p() + (m - yi) / am;
        d2 += trigamma_diff(yi, alpha) + m / (alpha * am) - (m - yi) / (am * am);
    }
    (alpha * d1, alpha * alpha * d2 + alpha * d1)
}

#[derive(Debug, Clone)]
pub struct NegBinFit {
    pub fit: Fit,
    /// Log-likelihood after each (β, α) step; element 0 is the start.
    pub loglik_trace: Vec<f64>,
}

fn means(x: &nalgebra::DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    linear_predictor(x, beta).into_iter().map(|e| e.min(ETA_CLAMP).exp()).collect()
}

/// Negative binomial maximum likelihood. Newton on `(β, ln α)` jointly with
/// the observed information; when that is not positive definite the step
/// falls back to Fisher scoring for β and a safeguarded Newton step for
/// `ln α`. Every step is an ascent step, so the log-likelihood trace is
/// non-decreasing. `ln α` is held fixed while it sits on a bound its score
/// points past.
pub fn fit_negbin_mle(data: &Dataset, opts: &FitOptions, warm: Option<&[f64]>) -> Result<NegBinFit> {
    let x = data.x();
    let y = &data.y;
    let p = data.p();
    check_counts(y)?;
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::AllZero);
    }
    let t_max = opts.alpha_cap.ln();
    let t_min = (1e-8f64).ln();

    let (mut beta, mut t) = match warm {
        Some(w) if w.len() == p + 1 && w.iter().all(|v| v.is_finite()) && w[p] > 0.0 => (w[..p].to_vec(), w[p].ln().clamp(t_min, t_max)),
        _ => {
            let pois = fit_poisson_mle(data, opts, None)?;
            let mu = means(x, &pois.theta);
            let a0 = moment_alpha(y, &mu).unwrap_or(opts.alpha_cap).clamp(1e-2, opts.alpha_cap);
            (pois.theta, a0.ln())
        }
    };

    let shift = log_factorials(y);
    let mut mu = means(x, &beta);
    let mut ll = negbin_kernel(y, &mu, t.exp());
    let mut trace = vec![ll - shift];
    let mut score_norm = f64::INFINITY;
    let objective = |th: &[f64]| negbin_kernel(y, &means(x, &th[..p]), th[p].clamp(t_min, t_max).exp());

    for iter in 1..=opts.max_iterations {
        let alpha = t.exp();
        let n = y.len();
        let (mut r, mut d, mut c, mut w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let (yi, m) = (y[i], mu[i]);
            let am = alpha + m;
            r[i] = (yi - m) * alpha / am;
            d[i] = alpha * m * (alpha + yi) / (am * am);
            c[i] = alpha * m * (yi - m) / (am * am);
            w[i] = m * alpha / am;
        }
        let g_beta = xt_v(x, &r);
        let (g_t, h_t) = dispersion_derivatives(y, &mu, alpha);
        score_norm = (g_beta.norm_squared() + g_t * g_t).sqrt() / n as f64;
        let t_frozen = (t >= t_max && g_t > 0.0) || (t <= t_min && g_t < 0.0);

        let mut theta: Vec<f64> = beta.clone();
        theta.push(t);
        let mut g = g_beta.clone().insert_row(p, g_t);
        let block_step = || -> Result<DVector<f64>> {
            let sb = solve_spd(&xt_w_x(x, &w), &g_beta, opts.ridge_jitter)?;
            let st = if t_frozen {
                0.0
            } else if h_t < 0.0 {
                -g_t / h_t
            } else {
                g_t.signum()
            };
            Ok(sb.insert_row(p, st.clamp(-2.0, 2.0)))
        };
        let newton = if t_frozen {
            g[p] = 0.0;
            solve_spd(&xt_w_x(x, &d), &g_beta, opts.ridge_jitter).ok().map(|s| s.insert_row(p, 0.0))
        } else {
            let mut info = xt_w_x(x, &d).insert_row(p, 0.0).insert_column(p, 0.0);
            let cross = xt_v(x, &c);
            for j in 0..p {
                info[(j, p)] = -cross[j];
                info[(p, j)] = -cross[j];
            }
            info[(p, p)] = -h_t;
            info.cholesky().map(|ch| {
                let mut s = ch.solve(&g);
                if s[p].abs() > 2.0 {
                    s *= 2.0 / s[p].abs();
                }
                s
            })
        };

        let mut accepted = None;
        if let Some(step) = newton {
            let (next, l, s) = ascend(&theta, &step, ll, opts.max_halvings, objective);
            if s > 0.0 {
                accepted = Some((next, l, s * step.amax()));
            }
        }
        if accepted.is_none() {
            let step = block_step()?;
            let (next, l, s) = ascend(&theta, &step, ll, opts.max_halvings, objective);
            accepted = Some((next, l, s * step.amax()));
        }
        let (mut next, l, moved) = accepted.expect("set above");
        next[p] = next[p].clamp(t_min, t_max);
        t = next.pop().expect("p + 1 entries");
        beta = next;
        ll = l;
        mu = means(x, &beta);
        trace.push(ll - shift);

        if moved <= opts.tolerance * (1.0 + max_abs(&beta).max(t.abs())) {
            let mut theta = beta;
            theta.push(t.exp());
            return Ok(NegBinFit { fit: Fit::converged(theta, iter), loglik_trace: trace });
        }
    }
    let mut theta = beta;
    theta.push(t.exp());
    Ok(NegBinFit { fit: Fit { theta, status: FitStatus::MaxIterations { score_norm }, iterations: opts.max_iterations }, loglik_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_design, simulate_logistic, simulate_negbin, Design, DesignKind, DesignSpec, ScaleReading};
    use crate::seedstream::SeedId;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn intercept_only(y: Vec<f64>) -> Dataset {
        let n = y.len();
        Dataset::new(y, Arc::new(Design::new(DMatrix::from_element(n, 1, 1.0)))).unwrap()
    }

    fn design(kind: DesignKind, n: usize, slopes: usize, seed: u64) -> Arc<Design> {
        let spec = DesignSpec { kind, n, slopes, intercept: true, binary_columns: vec![], scale_reading: ScaleReading::Variance };
        Arc::new(make_design(&spec, &SeedId::new(seed)).unwrap())
    }

    /// Plain Newton on the logistic score with its own derivative code and no
    /// safeguards; independent of the IRLS path.
    fn newton_oracle(data: &Dataset, iters: usize) -> Vec<f64> {
        let x = data.x();
        let (n, p) = x.shape();
        let mut b = DVector::zeros(p);
        for _ in 0..iters {
            let mut g = DVector::zeros(p);
            let mut hmat = DMatrix::zeros(p, p);
            for i in 0..n {
                let xi = x.row(i).transpose();
                let m = 1.0 / (1.0 + (-(xi.dot(&b))).exp());
                g += &xi * (data.y[i] - m);
                hmat += &xi * xi.transpose() * (m * (1.0 - m));
            }
            b += hmat.lu().solve(&g).unwrap();
        }
        b.iter().cloned().collect()
    }

    #[test]
    fn logistic_intercept_closed_forms() {
        let opts = FitOptions::default();
        let half = fit_logistic_mle(&intercept_only(vec![0.5; 10]), &opts, None).unwrap();
        assert!(half.theta[0].abs() < 1e-12);
        let y = vec![1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let f = fit_logistic_mle(&intercept_only(y), &opts, None).unwrap();
        assert_eq!(f.status, FitStatus::Converged);
        assert!((f.theta[0] - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn logistic_matches_newton_oracle() {
        let d = design(DesignKind::GaussianScaled, 200, 5, 3);
        let data = simulate_logistic(&[0.2, 1.0, -1.0, 0.5, 0.0, 2.0], &d, &SeedId::new(8)).unwrap();
        let f = fit_logistic_mle(&data, &FitOptions::default(), None).unwrap();
        let oracle = newton_oracle(&data, 40);
        for (a, b) in f.theta.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        // warm start lands on the same solution
        let warm = fit_logistic_mle(&data, &FitOptions::default(), Some(&[1.0; 6])).unwrap();
        for (a, b) in warm.theta.iter().zip(&f.theta) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn separation_is_flagged_but_pseudo_values_are_finite() {
        let x = DMatrix::from_fn(20, 2, |i, j| if j == 0 { 1.0 } else { i as f64 - 9.5 });
        let y: Vec<f64> = (0..20).map(|i| if i >= 10 { 1.0 } else { 0.0 }).collect();
        let data = Dataset::new(y.clone(), Arc::new(Design::new(x))).unwrap();
        let raw = fit_logistic_mle(&data, &FitOptions::default(), None).unwrap();
        assert!(raw.is_flagged(), "{:?}", raw.status);
        let ps = crate::models::pseudo_values(&y, 0.05, crate::models::PseudoValueForm::Printed).unwrap();
        let fit = fit_logistic_mle(&data.with_responses(ps).unwrap(), &FitOptions::default(), None).unwrap();
        assert_eq!(fit.status, FitStatus::Converged);
        assert!(fit.theta.iter().all(|v| v.is_finite() && v.abs() < 100.0));
    }

    #[test]
    fn logistic_rejects_out_of_range() {
        assert!(fit_logistic_mle(&intercept_only(vec![1.2, 0.0]), &FitOptions::default(), None).is_err());
    }

    #[test]
    fn moment_alpha_arithmetic() {
        let mu = [1.0, 1.0, 1.0, 1.0, 2.0];
        let y = [1.0, 1.0, 1.0, 1.0, 2.0 + 10f64.sqrt()];
        assert!((moment_alpha(&y, &mu).unwrap() - 2.0).abs() < 1e-12);
        // Σ(y-μ)² = Σμ
        let y_eq = [2.0, 0.0, 1.0, 1.0, 4.0];
        let ss: f64 = y_eq.iter().zip(&mu).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!((ss - 6.0).abs() < 1e-12);
        assert!(matches!(moment_alpha(&y_eq, &mu), Err(Error::NoOverdispersion { .. })));
    }

    #[test]
    fn trigamma_reference_values() {
        // ψ'(1) = π²/6, ψ'(1/2) = π²/2
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((trigamma(1.0) - pi2 / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-12);
        assert!((trigamma(30.0) - (trigamma(31.0) + 1.0 / 900.0)).abs() < 1e-14);
    }

    #[test]
    fn negbin_loglik_matches_density() {
        // direct evaluation of the density with lgamma for a few points
        let (y, mu, a) = ([0.0, 3.0, 7.0], [1.5, 2.0, 6.0], 0.8);
        let direct: f64 = y
            .iter()
            .zip(&mu)
            .map(|(&yi, &m)| ln_gamma(yi + a) - ln_gamma(yi + 1.0) - ln_gamma(a) + a * (a / (a + m)).ln() + yi * (m / (a + m)).ln())
            .sum();
        assert!((negbin_loglik(&y, &mu, a) - direct).abs() < 1e-10);
    }

    #[test]
    fn negbin_dispersion_derivatives_match_finite_differences() {
        let (y, mu) = ([0.0, 3.0, 7.0, 1.0], [1.5, 2.0, 6.0, 0.7]);
        let t = 0.3f64;
        let h = 1e-4;
        let f = |t: f64| negbin_loglik(&y, &mu, t.exp());
        let (g, hess) = dispersion_derivatives(&y, &mu, t.exp());
        let g_fd = (f(t + h) - f(t - h)) / (2.0 * h);
        let h_fd = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
        assert!((g - g_fd).abs() < 1e-6, "{g} vs {g_fd}");
        assert!((hess - h_fd).abs() < 1e-4, "{hess} vs {h_fd}");
    }

    #[test]
    fn negbin_mle_large_sample() {
        let d = design(DesignKind::Uniform01, 10_000, 2, 5);
        let data = simulate_negbin(&[1.0, 2.0, -1.0], 2.0, &d, &SeedId::new(6)).unwrap();
        let f = fit_negbin_mle(&data, &FitOptions::default(), None).unwrap();
        assert_eq!(f.fit.status, FitStatus::Converged);
        assert!(f.loglik_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()));
        // 4 standard errors at n = 1e4: intercept ~0.05, slopes ~0.06, alpha ~0.1
        let truth = [1.0, 2.0, -1.0, 2.0];
        let se = [0.05, 0.06, 0.06, 0.1];
        for k in 0..4 {
            assert!((f.fit.theta[k] - truth[k]).abs() < 4.0 * se[k], "coord {k}: {}", f.fit.theta[k]);
        }
    }

    #[test]
    fn negbin_mle_is_stationary() {
        let d = design(DesignKind::Uniform01, 60, 2, 11);
        let data = simulate_negbin(&[1.0, 0.5, -0.5], 0.8, &d, &SeedId::new(12)).unwrap();
        let f = fit_negbin_mle(&data, &FitOptions::default(), None).unwrap();
        assert_eq!(f.fit.status, FitStatus::Converged);
        let th = f.fit.theta.clone();
        let ll = |th: &[f64]| negbin_loglik(&data.y, &means(data.x(), &th[..3]), th[3]);
        for k in 0..4 {
            let h = 1e-5 * th[k].abs().max(1.0);
            let (mut a, mut b) = (th.clone(), th.clone());
            a[k] += h;
            b[k] -= h;
            let g = (ll(&a) - ll(&b)) / (2.0 * h);
            assert!(g.abs() < 1e-5, "coord {k}: gradient {g}");
        }
    }

    #[test]
    fn negbin_mle_poisson_limit() {
        let d = design(DesignKind::Uniform01, 5000, 2, 7);
        // alpha = 1e9 is a Poisson draw for all practical purposes
        let data = simulate_negbin(&[0.5, 0.5, -0.5], 1e9, &d, &SeedId::new(3)).unwrap();
        let nb = fit_negbin_mle(&data, &FitOptions::default(), None).unwrap();
        let pois = fit_poisson_mle(&data, &FitOptions::default(), None).unwrap();
        assert!(nb.fit.theta[3] > 1e2, "alpha {}", nb.fit.theta[3]);
        for k in 0..3 {
            assert!((nb.fit.theta[k] - pois.theta[k]).abs() < 1e-3);
        }
    }

    #[test]
    fn negbin_all_zero() {
        assert_eq!(fit_negbin_mle(&intercept_only(vec![0.0; 5]), &FitOptions::default(), None).unwrap_err(), Error::AllZero);
    }

    #[test]
    fn two_step_alpha_large_sample() {
        let d = design(DesignKind::Uniform01, 10_000, 2, 11);
        let data = simulate_negbin(&[1.0, 2.0, -1.0], 2.0, &d, &SeedId::new(12)).unwrap();
        let f = fit_poisson_then_moment_alpha(&data, &FitOptions::default(), None).unwrap();
        assert!((f.theta[3] - 2.0).abs() / 2.0 < 0.25, "alpha {}", f.theta[3]);
    }
}
