//! Post-estimation uncertainty and Monte-Carlo study summaries.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::csvfmt::fmt_f64;
use crate::error::{Error, Result};
use crate::estimators::AuxiliaryEstimator;
use crate::ibcore::{shifted_mean, Binding};
use crate::linalg::{condition_number, symmetrize};
use crate::models::Simulator;
use crate::seedstream::SeedId;

/// Path component under which [`estimate_sigma`] draws its samples, kept
/// apart from the observed/simulated/design streams.
pub const VARIANCE: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    pub sigma: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub h_used: usize,
    pub fd_step: f64,
}

/// `max(200, 4p)`.
pub fn default_h_var(p: usize) -> usize {
    200.max(4 * p)
}

/// `max(1e-4, n^{-1/2} / 10)`.
pub fn default_fd_step(n: usize) -> f64 {
    (0.1 / (n.max(1) as f64).sqrt()).max(1e-4)
}

/// `n ×` the sample covariance of `h_var` auxiliary fits at `theta_hat`.
/// `n` is the sample size of the simulated datasets.
pub fn estimate_sigma(theta_hat: &[f64], aux: &dyn AuxiliaryEstimator, sim: &dyn Simulator, h_var: usize, seed: &SeedId) -> Result<DMatrix<f64>> {
    let p = theta_hat.len();
    if h_var < p + 2 {
        return Err(Error::Domain(format!("H-var = {h_var} must be at least p + 2 = {}", p + 2)));
    }
    let fits: Vec<(usize, Vec<f64>)> = (0..h_var)
        .into_par_iter()
        .map(|h| {
            let data = sim.simulate(theta_hat, &seed.derive(&[VARIANCE, h as u64 + 1]))?;
            let fit = aux.fit(&data, None)?;
            if fit.is_flagged() {
                log::warn!("variance sample {} flagged: {:?}", h + 1, fit.status);
            }
            Ok((data.n(), fit.theta))
        })
        .collect::<Result<_>>()?;
    let n = fits[0].0 as f64;
    let m = fits.len() as f64;
    let rows: Vec<Vec<f64>> = fits.iter().map(|f| f.1.clone()).collect();
    let mean = shifted_mean(&rows, p);
    let mut cov = DMatrix::zeros(p, p);
    for (_, f) in &fits {
        for i in 0..p {
            for j in 0..p {
                cov[(i, j)] += (f[i] - mean[i]) * (f[j] - mean[j]);
            }
        }
    }
    cov *= n / (m - 1.0);
    let cov = symmetrize(&cov);
    if cov.clone().cholesky().is_none() && cov.iter().any(|v| *v != 0.0) {
        log::warn!("estimated Sigma is singular");
    }
    Ok(cov)
}

/// Central-difference Jacobian of `θ ↦ π̄(θ)`. The binding must use fixed
/// seeds so every evaluation shares its random numbers.
pub fn estimate_b(theta_hat: &[f64], binding: &dyn Binding, fd_step: f64) -> Result<DMatrix<f64>> {
    if !(fd_step > 0.0) {
        return Err(Error::Domain(format!("fd step {fd_step} must be > 0")));
    }
    let p = theta_hat.len();
    let mut b = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut plus = theta_hat.to_vec();
        let mut minus = theta_hat.to_vec();
        plus[j] += fd_step;
        minus[j] -= fd_step;
        let fp = binding.evaluate(&plus, None)?.mean;
        let fm = binding.evaluate(&minus, None)?.mean;
        for i in 0..p {
            let v = (fp[i] - fm[i]) / (2.0 * fd_step);
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "Jacobian entry", coord: i * p + j });
            }
            b[(i, j)] = v;
        }
    }
    Ok(b)
}

/// `(1 + 1/H) B⁻¹ Σ B⁻ᵀ`, symmetrized. `h = None` is the `H → ∞` limit.
pub fn xi_h(b: &DMatrix<f64>, sigma: &DMatrix<f64>, h: Option<usize>) -> Result<DMatrix<f64>> {
    let p = b.nrows();
    if b.shape() != (p, p) || sigma.shape() != (p, p) {
        return Err(Error::Dimension { what: "B and Sigma", expected: p, got: sigma.nrows() });
    }
    if condition_number(b) >= 1e12 {
        return Err(Error::Singular("B".into()));
    }
    let inv = b.clone().try_inverse().ok_or_else(|| Error::Singular("B".into()))?;
    let factor = match h {
        Some(0) => return Err(Error::Domain("H must be >= 1".into())),
        Some(h) => 1.0 + 1.0 / h as f64,
        None => 1.0,
    };
    Ok(symmetrize(&(&inv * sigma * inv.transpose() * factor)))
}

/// Full plug-in variance estimate at `theta_hat`.
#[allow(clippy::too_many_arguments)]
pub fn variance_estimate(
    theta_hat: &[f64],
    aux: &dyn AuxiliaryEstimator,
    sim: &dyn Simulator,
    binding: &dyn Binding,
    h: usize,
    h_var: usize,
    fd_step: f64,
    seed: &SeedId,
) -> Result<VarianceEstimate> {
    let sigma = estimate_sigma(theta_hat, aux, sim, h_var, seed)?;
    let b = estimate_b(theta_hat, binding, fd_step)?;
    let xi = xi_h(&b, &sigma, Some(h))?;
    Ok(VarianceEstimate { sigma, b, xi, h_used: h_var, fd_step })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub bias: Vec<f64>,
    pub rmse: Vec<f64>,
    pub mc_se: Vec<f64>,
    pub replications: usize,
    pub zero_proportion: f64,
}

/// Bias, RMSE and Monte-Carlo standard error (`SD / √R`) per coordinate.
/// Sums run over replications sorted per coordinate, so the output does not
/// depend on replication order.
pub fn mc_summary(estimates: &[Vec<f64>], theta0: &[f64]) -> Result<McSummary> {
    let r = estimates.len();
    if r < 2 {
        return Err(Error::Domain(format!("need at least 2 replications, got {r}")));
    }
    let p = theta0.len();
    if let Some(bad) = estimates.iter().find(|e| e.len() != p) {
        return Err(Error::Dimension { what: "estimate row", expected: p, got: bad.len() });
    }
    let rf = r as f64;
    let mut out = McSummary { bias: vec![], rmse: vec![], mc_se: vec![], replications: r, zero_proportion: zero_proportion(estimates) };
    for j in 0..p {
        let mut col: Vec<f64> = estimates.iter().map(|e| e[j]).collect();
        col.sort_by(f64::total_cmp);
        let mean = col.iter().sum::<f64>() / rf;
        let mse = col.iter().map(|v| (v - theta0[j]).powi(2)).sum::<f64>() / rf;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rf - 1.0);
        out.bias.push(mean - theta0[j]);
        out.rmse.push(mse.sqrt());
        out.mc_se.push((var / rf).sqrt());
    }
    Ok(out)
}

/// Percentage of entries that are exactly `0.0`.
pub fn zero_proportion(estimates: &[Vec<f64>]) -> f64 {
    let total: usize = estimates.iter().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    let zeros = estimates.iter().flatten().filter(|v| **v == 0.0).count();
    100.0 * zeros as f64 / total as f64
}

/// Row-major CSV, one matrix row per line.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut w: W) -> Result<()> {
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{Fit, Identity};
    use crate::ibcore::{ExactBinding, Remainder, SimulatedBinding, SyntheticBiasModel};
    use crate::models::{Dataset, Design};
    use nalgebra::DVector;
    use proptest::prelude::*;
    use std::sync::Arc;

    /// `n` draws of N(θ, 1); the auxiliary is the sample mean.
    struct NormalLocation {
        design: Arc<Design>,
    }

    impl Simulator for NormalLocation {
        fn dim(&self) -> usize {
            1
        }
        fn simulate(&self, theta: &[f64], seed: &SeedId) -> Result<Dataset> {
            let mut st = seed.stream();
            let y = (0..self.design.n()).map(|_| theta[0] + st.standard_normal()).collect();
            Dataset::new(y, Arc::clone(&self.design))
        }
    }

    struct SampleMean;

    impl AuxiliaryEstimator for SampleMean {
        fn name(&self) -> &str {
            "mean"
        }
        fn dim(&self, _: &Dataset) -> usize {
            1
        }
        fn fit(&self, data: &Dataset, _: Option<&[f64]>) -> Result<Fit> {
            Ok(Fit::converged(vec![data.y.iter().sum::<f64>() / data.n() as f64], 0))
        }
    }

    #[test]
    fn sigma_of_sample_mean() {
        let sim = NormalLocation { design: Arc::new(Design::new(DMatrix::zeros(40, 0))) };
        let h_var = 800;
        let s = estimate_sigma(&[0.7], &SampleMean, &sim, h_var, &SeedId::new(3)).unwrap();
        assert!((s[(0, 0)] - 1.0).abs() < 4.0 * (2.0 / h_var as f64).sqrt());
        assert!(estimate_sigma(&[0.7], &SampleMean, &sim, 2, &SeedId::new(3)).is_err());
    }

    #[test]
    fn sigma_deterministic_is_zero_and_symmetric() {
        let m = SyntheticBiasModel::affine(DMatrix::identity(3, 3) * 0.2, DVector::zeros(3), 0.0).unwrap();
        let s = estimate_sigma(&[1.0, 2.0, 3.0], &Identity, &m, 10, &SeedId::new(1)).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));
        let noisy = SyntheticBiasModel::affine(DMatrix::identity(3, 3) * 0.2, DVector::zeros(3), 1.0).unwrap();
        let s = estimate_sigma(&[1.0, 2.0, 3.0], &Identity, &noisy, 50, &SeedId::new(1)).unwrap();
        assert_eq!(s, s.transpose());
    }

    #[test]
    fn b_of_affine_and_identity() {
        let mm = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let model = SyntheticBiasModel::affine(mm.clone(), DVector::from_vec(vec![1.0, -1.0]), 0.0).unwrap();
        let binding = SimulatedBinding { aux: &Identity, sim: &model, j: 0, h: 5, base: SeedId::new(0) };
        let b = estimate_b(&[0.5, 0.5], &binding, 1e-3).unwrap();
        assert!((b - (DMatrix::identity(2, 2) + mm)).amax() < 1e-8);
        let id = ExactBinding { dim: 3, f: |t: &[f64]| Ok(t.to_vec()) };
        let b = estimate_b(&[1.0, 2.0, 3.0], &id, 1e-4).unwrap();
        assert!((b - DMatrix::identity(3, 3)).amax() < 1e-10);
        assert!(estimate_b(&[1.0], &id, 0.0).is_err());
    }

    #[test]
    fn b_central_difference_order() {
        let n = 50.0;
        let model =
            SyntheticBiasModel::new(DMatrix::zeros(2, 2), DVector::zeros(2), DMatrix::zeros(2, 2), DVector::zeros(2), Remainder::Tanh(1.0 / n), 0.0)
                .unwrap();
        let binding = SimulatedBinding { aux: &Identity, sim: &model, j: 0, h: 1, base: SeedId::new(0) };
        let theta = [0.8, -0.3];
        let exact = model.jacobian(&theta);
        let e1 = (estimate_b(&theta, &binding, 0.1).unwrap() - &exact).amax();
        let e2 = (estimate_b(&theta, &binding, 0.05).unwrap() - &exact).amax();
        // second order: halving the step quarters the error
        assert!((e1 / e2 - 4.0).abs() < 0.2, "{e1} {e2}");
    }

    #[test]
    fn xi_examples() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert!((xi_h(&i2, &i2, None).unwrap() - &i2).amax() < 1e-12);
        assert!((xi_h(&i2, &i2, Some(1)).unwrap() - &i2 * 2.0).amax() < 1e-12);
        assert!((xi_h(&(&i2 * 2.0), &i2, Some(1)).unwrap() - &i2 * 0.5).amax() < 1e-12);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(xi_h(&singular, &i2, Some(1)), Err(Error::Singular(_))));
    }

    #[test]
    fn summary_examples() {
        let s = mc_summary(&[vec![0.0], vec![2.0]], &[1.0]).unwrap();
        assert_eq!((s.bias[0], s.rmse[0]), (0.0, 1.0));
        let s = mc_summary(&[vec![1.0, 2.0], vec![1.0, 2.0]], &[1.0, 2.0]).unwrap();
        assert_eq!(s.bias, vec![0.0, 0.0]);
        assert_eq!(s.rmse, vec![0.0, 0.0]);
        assert!(mc_summary(&[vec![1.0]], &[1.0]).is_err());
    }

    #[test]
    fn zero_proportion_examples() {
        assert_eq!(zero_proportion(&[vec![0.0, 0.0], vec![0.0, -0.0]]), 100.0);
        assert_eq!(zero_proportion(&[vec![0.0, 1.0], vec![2.0, 3.0]]), 25.0);
        assert_eq!(zero_proportion(&[vec![1e-300]]), 0.0);
    }

    #[test]
    fn matrix_csv_row_major() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, -2.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "1.0000000000000000e0,0.0\n5.0000000000000000e-1,-2.0000000000000000e0\n");
    }

    proptest! {
        #[test]
        fn xi_scales_with_one_plus_inverse_h(
            d in prop::collection::vec(0.5f64..3.0, 3),
            s in prop::collection::vec(-1.0f64..1.0, 9),
            h in 1usize..1000,
        ) {
            let b = DMatrix::from_diagonal(&DVector::from_vec(d)) + DMatrix::from_element(3, 3, 0.1);
            let a = DMatrix::from_vec(3, 3, s);
            let sigma = &a * a.transpose();
            let lim = xi_h(&b, &sigma, None).unwrap();
            let xh = xi_h(&b, &sigma, Some(h)).unwrap();
            prop_assert!((xh - &lim * (1.0 + 1.0 / h as f64)).amax() <= 1e-12 * (1.0 + lim.amax()));
            let x1 = xi_h(&b, &sigma, Some(1)).unwrap();
            prop_assert!((x1 - lim * 2.0).amax() <= 1e-12 * (1.0 + sigma.amax()) * 10.0);
        }

        #[test]
        fn summary_permutation_invariant_and_rmse_identity(
            rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 2..30),
            shift in 0usize..29,
        ) {
            let theta0 = [0.5, -1.0];
            let a = mc_summary(&rows, &theta0).unwrap();
            let mut rotated = rows.clone();
            rotated.rotate_left(shift % rows.len());
            rotated.reverse();
            let b = mc_summary(&rotated, &theta0).unwrap();
            prop_assert_eq!(&a, &b);
            let r = rows.len() as f64;
            for j in 0..2 {
                let mean = rows.iter().map(|e| e[j]).sum::<f64>() / r;
                let pop = rows.iter().map(|e| (e[j] - mean).powi(2)).sum::<f64>() / r;
                prop_assert!((a.rmse[j].powi(2) - a.bias[j].powi(2) - pop).abs() < 1e-12 * (1.0 + a.rmse[j].powi(2)));
                prop_assert!(a.rmse[j].powi(2) >= a.bias[j].powi(2) - 1e-12);
            }
        }
    }
}
