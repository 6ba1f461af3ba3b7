//! Robust logistic M-estimator with Huber ψ on Pearson residuals, leverage
//! based design weights and the Fisher-consistency correction.
//!
//! For observation `i` with `μ = logistic(xᵢβ)`, `V = μ(1−μ)` and
//! `r(y) = (y − μ)/√V`, the estimating function is
//!
//! ```text
//! ψ_c(r(yᵢ)) · w(xᵢ) · √V · xᵢ  −  E[ψ_c(r(Y))] · w(xᵢ) · √V · xᵢ
//! ```
//!
//! (`V^{-1/2} ∂μ/∂β = √V xᵢ` under the logit link). Because `Y` is Bernoulli
//! the expectation is the two-point sum `μ ψ_c(r(1)) + (1−μ) ψ_c(r(0))`.

use nalgebra::DVector;

use super::{Fit, FitOptions, FitStatus};
use crate::error::{Error, Result};
use crate::linalg::{linear_predictor, norm2, solve_spd, xt_v, xt_w_x};
use crate::models::{logistic, Dataset};

#[inline]
pub fn huber_psi(r: f64, c: f64) -> f64 {
    r.clamp(-c, c)
}

/// Overrides of the default design weights, mostly for testing.
#[derive(Debug, Clone, Default)]
pub struct RobustOptions {
    /// Use `w(x) ≡ 1` instead of `√(1 − hᵢᵢ)`.
    pub unit_weights: bool,
}

/// `w(xᵢ) = √(1 − hᵢᵢ)`.
pub fn robust_weights(data: &Dataset) -> Result<Vec<f64>> {
    Ok(data.design.leverages()?.iter().map(|h| (1.0 - h).max(0.0).sqrt()).collect())
}

struct Pieces {
    /// ψ_c(rᵢ) − E ψ_c, times w √V
    centred: Vec<f64>,
    /// E[ψ_c] w √V
    expected: Vec<f64>,
    /// E[ψ_c(r)(Y − μ)] w √V, the Fisher-scoring weight
    fisher: Vec<f64>,
}

fn pieces(eta: &[f64], y: &[f64], w: &[f64], c: f64) -> Pieces {
    let n = eta.len();
    let mut out = Pieces { centred: Vec::with_capacity(n), expected: Vec::with_capacity(n), fisher: Vec::with_capacity(n) };
    for i in 0..n {
        let mu = logistic(eta[i]);
        let v = (mu * (1.0 - mu)).max(1e-300);
        let sv = v.sqrt();
        let psi1 = huber_psi((1.0 - mu) / sv, c);
        let psi0 = huber_psi(-mu / sv, c);
        let e_psi = mu * psi1 + (1.0 - mu) * psi0;
        let psi = huber_psi((y[i] - mu) / sv, c);
        let scale = w[i] * sv;
        out.centred.push((psi - e_psi) * scale);
        out.expected.push(e_psi * scale);
        out.fisher.push(v * (psi1 - psi0) * scale);
    }
    out
}

/// Consistency correction `a(β) = (1/n) Σ E[ψ_c(r(Yᵢ))] w(xᵢ) √Vᵢ xᵢ`.
pub fn consistency_correction(data: &Dataset, beta: &[f64], weights: &[f64], c: f64) -> DVector<f64> {
    let eta = linear_predictor(data.x(), beta);
    let pc = pieces(&eta, &data.y, weights, c);
    xt_v(data.x(), &pc.expected) / data.n() as f64
}

/// Solves the robust estimating equations by Fisher scoring. Steps are
/// halved while they increase the estimating-equation norm.
pub fn fit_logistic_robust(data: &Dataset, opts: &FitOptions, ropts: &RobustOptions, warm: Option<&[f64]>) -> Result<Fit> {
    let x = data.x();
    let y = &data.y;
    let (n, p) = (data.n(), data.p());
    if n <= p {
        return Err(Error::Domain(format!("robust fit needs n > p (n = {n}, p = {p})")));
    }
    if let Some(i) = y.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain(format!("logistic response {} at row {i} outside [0, 1]", y[i])));
    }
    let w = if ropts.unit_weights { vec![1.0; n] } else { robust_weights(data)? };
    let c = opts.huber_c;
    let mut beta = match warm {
        Some(v) if v.len() == p && v.iter().all(|b| b.is_finite()) => v.to_vec(),
        _ => vec![0.0; p],
    };
    let merit = |b: &[f64]| {
        let pc = pieces(&linear_predictor(x, b), y, &w, c);
        norm2(xt_v(x, &pc.centred).as_slice())
    };
    let mut current = merit(&beta);
    for it in 1..=opts.max_iterations {
        let pc = pieces(&linear_predictor(x, &beta), y, &w, c);
        let u = xt_v(x, &pc.centred);
        let b = xt_w_x(x, &pc.fisher);
        let step = solve_spd(&b, &u, opts.ridge_jitter)?;
        let mut t = 1.0;
        let mut best: Option<(Vec<f64>, f64, f64)> = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(bb, s)| bb + t * s).collect();
            let m = merit(&cand);
            if m.is_finite() && best.as_ref().is_none_or(|(_, bm, _)| m < *bm) {
                best = Some((cand, m, t));
            }
            if m.is_finite() && m <= current {
                break;
            }
            t *= 0.5;
        }
        let Some((cand, m, t)) = best else {
            return Ok(Fit { theta: beta, status: FitStatus::MaxIterations { score_norm: current / n as f64 }, iterations: it });
        };
        let moved = t * step.amax();
        beta = cand;
        current = m;
        if moved <= opts.tolerance * (1.0 + beta.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            return Ok(Fit::converged(beta, it));
        }
    }
    Ok(Fit { theta: beta, status: FitStatus::MaxIterations { score_norm: current / n as f64 }, iterations: opts.max_iterations })
}
