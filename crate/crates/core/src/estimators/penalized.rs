//! Least squares and its ridge / lasso penalizations, all on the
//! `(1/n)‖y − Xβ‖² + λ‖β‖_φ^φ` scale.

use nalgebra::{DMatrix, DVector};

use super::{Fit, FitOptions, FitStatus};
use crate::error::{Error, Result};
use crate::linalg::{linear_predictor, lstsq, xt_v};
use crate::models::Dataset;

pub fn fit_ols(data: &Dataset) -> Result<Vec<f64>> {
    Ok(lstsq(data.x(), &data.y)?.iter().cloned().collect())
}

/// Ridge solution `(XᵀX + nλI)⁻¹ Xᵀy`.
///
/// With the `1/n` loss scaling, the classical identity
/// `β̂_ridge = [I + κ(XᵀX)⁻¹]⁻¹ β̂_OLS` holds with `κ = nλ`.
pub fn fit_ridge(data: &Dataset, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("ridge lambda {lambda} must be >= 0")));
    }
    if lambda == 0.0 {
        return fit_ols(data);
    }
    let x = data.x();
    let mut gram = x.transpose() * x;
    let kappa = data.n() as f64 * lambda;
    for i in 0..gram.nrows() {
        gram[(i, i)] += kappa;
    }
    let rhs = xt_v(x, &data.y);
    let ch = gram.cholesky().ok_or_else(|| Error::Singular("ridge normal equations".into()))?;
    Ok(ch.solve(&rhs).iter().cloned().collect())
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Smallest λ for which the lasso solution is identically zero: `(2/n)‖Xᵀy‖∞`.
pub fn lasso_lambda_max(data: &Dataset) -> f64 {
    2.0 / data.n() as f64 * xt_v(data.x(), &data.y).amax()
}

/// `2.5 √(ln p / n)`, the rule for the objective `(1/2n)‖y − Xβ‖² + λ‖β‖₁`.
/// Double it for [`fit_lasso`], which minimizes `(1/n)‖y − Xβ‖² + λ‖β‖₁`.
pub fn default_lasso_lambda(p: usize, n: usize) -> f64 {
    2.5 * ((p as f64).ln() / n as f64).sqrt()
}

/// Cyclic coordinate descent with an active-set inner loop. Coordinates that
/// the soft threshold sends to zero are stored as literal `0.0`.
pub fn fit_lasso(data: &Dataset, lambda: f64, opts: &FitOptions, warm: Option<&[f64]>) -> Result<Fit> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lasso lambda {lambda} must be > 0")));
    }
    let x = data.x();
    let (n, p) = (data.n(), data.p());
    let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let threshold = 0.5 * n as f64 * lambda;

    let mut beta = match warm {
        Some(w) if w.len() == p && w.iter().all(|v| v.is_finite()) => w.to_vec(),
        _ => vec![0.0; p],
    };
    let fitted = linear_predictor(x, &beta);
    let mut resid: Vec<f64> = data.y.iter().zip(&fitted).map(|(a, b)| a - b).collect();

    let update = |j: usize, beta: &mut [f64], resid: &mut [f64]| -> f64 {
        let old = beta[j];
        if col_sq[j] == 0.0 {
            beta[j] = 0.0;
            return old.abs();
        }
        let col = x.column(j);
        let rho = col.iter().zip(resid.iter()).map(|(a, r)| a * r).sum::<f64>() + col_sq[j] * old;
        let new = soft_threshold(rho, threshold) / col_sq[j];
        if new != old {
            let diff = new - old;
            for (r, a) in resid.iter_mut().zip(col.iter()) {
                *r -= a * diff;
            }
            beta[j] = new;
        }
        (new - old).abs()
    };

    let mut sweeps = 0;
    while sweeps < opts.max_iterations * 10 {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            max_change = max_change.max(update(j, &mut beta, &mut resid));
        }
        if max_change < opts.tolerance {
            return Ok(Fit::converged(beta, sweeps));
        }
        // iterate on the current support until it settles, then re-sweep all
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        while sweeps < opts.max_iterations * 10 {
            sweeps += 1;
            let mut change = 0.0f64;
            for &j in &active {
                change = change.max(update(j, &mut beta, &mut resid));
            }
            if change < opts.tolerance {
                break;
            }
        }
    }
    let kkt = kkt_violation(x, &data.y, &beta, lambda);
    Ok(Fit { theta: beta, status: FitStatus::MaxIterations { score_norm: kkt }, iterations: sweeps })
}

/// Largest violation of the lasso optimality conditions.
pub(crate) fn kkt_violation(x: &DMatrix<f64>, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = y.len() as f64;
    let fitted = linear_predictor(x, beta);
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let g: DVector<f64> = xt_v(x, &resid) * (2.0 / n);
    g.iter().zip(beta).map(|(gj, bj)| if *bj == 0.0 { (gj.abs() - lambda).max(0.0) } else { (gj - lambda * bj.signum()).abs() }).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_design, simulate_linear, Design, DesignKind, DesignSpec, ScaleReading};
    use crate::seedstream::SeedId;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn gaussian(n: usize, p: usize, seed: u64) -> Arc<Design> {
        let spec = DesignSpec {
            kind: DesignKind::LassoMixed,
            n,
            slopes: p,
            intercept: false,
            binary_columns: vec![],
            scale_reading: ScaleReading::Variance,
        };
        Arc::new(make_design(&spec, &SeedId::new(seed)).unwrap())
    }

    fn sample(n: usize, p: usize, seed: u64) -> Dataset {
        let d = gaussian(n, p, seed);
        let beta: Vec<f64> = (0..p).map(|j| if j < 3 { 2.0 - j as f64 } else { 0.0 }).collect();
        simulate_linear(&beta, 1.0, &d, &SeedId::new(seed + 1)).unwrap()
    }

    /// Orthogonal design with XᵀX = n I, built by Gram–Schmidt on a random matrix.
    fn orthogonal(n: usize, p: usize) -> Arc<Design> {
        let raw = gaussian(n, p, 99).matrix().clone();
        let q = raw.qr().q();
        Arc::new(Design::new(q * (n as f64).sqrt()))
    }

    #[test]
    fn ols_exact_and_orthogonal() {
        let d = gaussian(30, 4, 1);
        let beta = [1.0, -2.0, 0.5, 3.0];
        let exact = simulate_linear(&beta, 0.0, &d, &SeedId::new(0)).unwrap();
        let b = fit_ols(&exact).unwrap();
        for (a, t) in b.iter().zip(&beta) {
            assert!((a - t).abs() < 1e-12);
        }
        let raw = gaussian(20, 3, 5).matrix().clone();
        let q = raw.qr().q();
        let od = Dataset::new((0..20).map(|i| (i as f64).sin()).collect(), Arc::new(Design::new(q.clone()))).unwrap();
        let b = fit_ols(&od).unwrap();
        let qty = q.transpose() * DVector::from_column_slice(&od.y);
        for (a, t) in b.iter().zip(qty.iter()) {
            assert!((a - t).abs() < 1e-12);
        }
    }

    #[test]
    fn ols_residuals_orthogonal() {
        let data = sample(50, 6, 2);
        let b = fit_ols(&data).unwrap();
        let fitted = linear_predictor(data.x(), &b);
        let resid: Vec<f64> = data.y.iter().zip(&fitted).map(|(a, f)| a - f).collect();
        assert!(xt_v(data.x(), &resid).amax() < 1e-10);
    }

    #[test]
    fn ridge_matches_classical_identity() {
        let data = sample(40, 5, 3);
        let lambda = 0.3;
        let ridge = DVector::from_vec(fit_ridge(&data, lambda).unwrap());
        let ols = DVector::from_vec(fit_ols(&data).unwrap());
        let gram_inv = (data.x().transpose() * data.x()).try_inverse().unwrap();
        let kappa = data.n() as f64 * lambda;
        let a = (DMatrix::identity(5, 5) + gram_inv * kappa).try_inverse().unwrap();
        assert!((ridge - a * ols).amax() < 1e-10);
    }

    #[test]
    fn ridge_limits() {
        let data = sample(40, 5, 4);
        let r0 = fit_ridge(&data, 0.0).unwrap();
        assert_eq!(r0, fit_ols(&data).unwrap());
        let big = fit_ridge(&data, 1e9).unwrap();
        assert!(big.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
        assert!(fit_ridge(&data, -1.0).is_err());
    }

    #[test]
    fn lasso_zero_above_lambda_max() {
        let data = sample(60, 10, 5);
        let lmax = lasso_lambda_max(&data);
        let f = fit_lasso(&data, lmax * 1.0001, &FitOptions::default(), None).unwrap();
        assert!(f.theta.iter().all(|&v| v == 0.0));
        let below = fit_lasso(&data, lmax * 0.9, &FitOptions::default(), None).unwrap();
        assert!(below.theta.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn lasso_default_lambda_values() {
        assert!((default_lasso_lambda(500, 100) - 0.623228).abs() < 1e-6);
        assert!((default_lasso_lambda(500, 600) - 0.254432).abs() < 1e-6);
        assert!(default_lasso_lambda(500, 1_000_000_000) < 1e-3);
    }

    #[test]
    fn lasso_orthogonal_closed_form() {
        let n = 80;
        let d = orthogonal(n, 6);
        let data = simulate_linear(&[2.0, -1.0, 0.3, 0.0, 0.0, 0.1], 1.0, &d, &SeedId::new(8)).unwrap();
        let lambda = 0.4;
        let f = fit_lasso(&data, lambda, &FitOptions::default(), None).unwrap();
        let ols = fit_ols(&data).unwrap();
        // per coordinate: minimize (β_j − b_j)² + λ|β_j|  ⇒  S(b_j, λ/2)
        for (got, b) in f.theta.iter().zip(&ols) {
            assert!((got - soft_threshold(*b, lambda / 2.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn lasso_small_lambda_is_ols() {
        let data = sample(100, 5, 9);
        let opts = FitOptions { tolerance: 1e-13, ..Default::default() };
        let f = fit_lasso(&data, 1e-9, &opts, None).unwrap();
        let ols = fit_ols(&data).unwrap();
        for (a, b) in f.theta.iter().zip(&ols) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lasso_kkt_holds(seed in 0u64..1000, frac in 0.05f64..0.9) {
            let data = sample(40, 60, seed);
            let lambda = frac * lasso_lambda_max(&data);
            let f = fit_lasso(&data, lambda, &FitOptions::default(), None).unwrap();
            prop_assert_eq!(f.status.clone(), FitStatus::Converged);
            prop_assert!(kkt_violation(data.x(), &data.y, &f.theta, lambda) < 1e-6);
            let again = fit_lasso(&data, lambda, &FitOptions::default(), None).unwrap();
            prop_assert_eq!(f.theta, again.theta);
        }
    }
}
