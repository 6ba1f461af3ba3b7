//! Auxiliary estimators `π̂(·)`: deterministic maps from a [`Dataset`] to a
//! parameter vector, consumed by the IB engine through one trait.

mod glm;
mod penalized;
mod robust;

pub use glm::{fit_logistic_mle, fit_negbin_mle, fit_poisson_mle, fit_poisson_then_moment_alpha, moment_alpha, negbin_loglik, NegBinFit};
pub use penalized::{default_lasso_lambda, fit_lasso, fit_ols, fit_ridge, lasso_lambda_max, soft_threshold};
pub use robust::{consistency_correction, fit_logistic_robust, huber_psi, robust_weights, RobustOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{pseudo_values, Dataset, PseudoValueForm};

/// Knobs shared by the iterative fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative parameter change that counts as converged.
    pub tolerance: f64,
    /// Huber tuning constant of the robust logistic fit.
    pub huber_c: f64,
    /// Diagonal jitter (relative to the mean diagonal) used only when a
    /// weighted normal-equation matrix fails its Cholesky factorization.
    pub ridge_jitter: f64,
    /// Largest dispersion returned by the negative binomial fits.
    pub alpha_cap: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iterations: 100, tolerance: 1e-10, huber_c: 1.345, ridge_jitter: 1e-10, alpha_cap: 1e4, max_halvings: 30 }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain(format!("fit tolerance {} must be > 0", self.tolerance)));
        }
        if !(self.huber_c > 0.0) {
            return Err(Error::Domain(format!("huber c {} must be > 0", self.huber_c)));
        }
        if !(self.alpha_cap > 0.0) {
            return Err(Error::Domain("alpha cap must be > 0".into()));
        }
        Ok(())
    }
}

/// Outcome of an iterative fit. Flagged fits still carry their best iterate.
#[derive(Debug, Clone, PartialEq)]
pub enum FitStatus {
    Converged,
    /// Hit the iteration limit; `score_norm` is the last estimating-equation norm.
    MaxIterations {
        score_norm: f64,
    },
    /// Linear predictor diverging on a growing set of observations.
    Separation {
        score_norm: f64,
    },
    /// Two-step dispersion estimate hit the underdispersion fallback.
    DispersionCapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub theta: Vec<f64>,
    pub status: FitStatus,
    pub iterations: usize,
}

impl Fit {
    pub fn converged(theta: Vec<f64>, iterations: usize) -> Self {
        Fit { theta, status: FitStatus::Converged, iterations }
    }

    pub fn is_flagged(&self) -> bool {
        self.status != FitStatus::Converged
    }
}

/// The estimation contract: a deterministic map from data to a vector
/// whose length equals the dimension of the parameter being corrected.
pub trait AuxiliaryEstimator: Send + Sync {
    fn name(&self) -> &str;

    /// Output dimension on `data`.
    fn dim(&self, data: &Dataset) -> usize;

    /// `warm` is only a starting point; for problems with a unique solution
    /// the result does not depend on it beyond the fit tolerance.
    fn fit(&self, data: &Dataset, warm: Option<&[f64]>) -> Result<Fit>;
}

/// Binary-response transform applied before a logistic fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoValues {
    pub delta: f64,
    pub form: PseudoValueForm,
}

fn transformed<'a>(data: &'a Dataset, ps: Option<PseudoValues>) -> Result<std::borrow::Cow<'a, Dataset>> {
    match ps {
        None => Ok(std::borrow::Cow::Borrowed(data)),
        Some(PseudoValues { delta, form }) => {
            let y = pseudo_values(&data.y, delta, form)?;
            Ok(std::borrow::Cow::Owned(data.with_responses(y)?))
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticMle {
    pub name: String,
    pub pseudo: Option<PseudoValues>,
    pub opts: FitOptions,
}

impl AuxiliaryEstimator for LogisticMle {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.p()
    }

    fn fit(&self, data: &Dataset, warm: Option<&[f64]>) -> Result<Fit> {
        let d = transformed(data, self.pseudo)?;
        fit_logistic_mle(&d, &self.opts, warm)
    }
}

#[derive(Debug, Clone)]
pub struct LogisticRobust {
    pub name: String,
    pub pseudo: Option<PseudoValues>,
    pub opts: FitOptions,
}

impl AuxiliaryEstimator for LogisticRobust {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.p()
    }

    fn fit(&self, data: &Dataset, warm: Option<&[f64]>) -> Result<Fit> {
        let d = transformed(data, self.pseudo)?;
        fit_logistic_robust(&d, &self.opts, &RobustOptions::default(), warm)
    }
}

#[derive(Debug, Clone)]
pub struct NegBinMle {
    pub opts: FitOptions,
}

impl AuxiliaryEstimator for NegBinMle {
    fn name(&self) -> &str {
        "mle-negbin"
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.p() + 1
    }

    fn fit(&self, data: &Dataset, warm: Option<&[f64]>) -> Result<Fit> {
        Ok(fit_negbin_mle(data, &self.opts, warm)?.fit)
    }
}

/// Poisson slopes followed by the moment dispersion estimate. Underdispersed
/// samples are mapped to `alpha_cap` and flagged instead of failing.
#[derive(Debug, Clone)]
pub struct PoissonMoment {
    pub opts: FitOptions,
}

impl AuxiliaryEstimator for PoissonMoment {
    fn name(&self) -> &str {
        "poisson-moment"
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.p() + 1
    }

    fn fit(&self, data: &Dataset, warm: Option<&[f64]>) -> Result<Fit> {
        let warm_beta = warm.map(|w| &w[..data.p()]);
        match fit_poisson_then_moment_alpha(data, &self.opts, warm_beta) {
            Ok(fit) => Ok(fit),
            Err(Error::NoOverdispersion { .. }) => {
                let mut beta = fit_poisson_mle(data, &self.opts, warm_beta)?;
                beta.theta.push(self.opts.alpha_cap);
                beta.status = FitStatus::DispersionCapped;
                Ok(beta)
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ols;

impl AuxiliaryEstimator for Ols {
    fn name(&self) -> &str {
        "ols"
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.p()
    }

    fn fit(&self, data: &Dataset, _warm: Option<&[f64]>) -> Result<Fit> {
        Ok(Fit::converged(fit_ols(data)?, 1))
    }
}

#[derive(Debug, Clone)]
pub struct Ridge {
    pub lambda: f64,
}

impl AuxiliaryEstimator for Ridge {
    fn name(&self) -> &str {
        "ridge"
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.p()
    }

    fn fit(&self, data: &Dataset, _warm: Option<&[f64]>) -> Result<Fit> {
        Ok(Fit::converged(fit_ridge(data, self.lambda)?, 1))
    }
}

#[derive(Debug, Clone)]
pub struct Lasso {
    pub lambda: f64,
    pub opts: FitOptions,
}

impl AuxiliaryEstimator for Lasso {
    fn name(&self) -> &str {
        "lasso"
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.p()
    }

    fn fit(&self, data: &Dataset, warm: Option<&[f64]>) -> Result<Fit> {
        fit_lasso(data, self.lambda, &self.opts, warm)
    }
}

/// Returns the responses unchanged; pairs with simulators that emit the
/// auxiliary statistic directly.
#[derive(Debug, Clone)]
pub struct Identity;

impl AuxiliaryEstimator for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.n()
    }

    fn fit(&self, data: &Dataset, _warm: Option<&[f64]>) -> Result<Fit> {
        Ok(Fit::converged(data.y.clone(), 0))
    }
}

/// Estimator names accepted in study configs.
pub const ESTIMATOR_NAMES: &[&str] =
    &["mle-logistic", "mle-logistic-ps", "rob-logistic", "rob-logistic-ps", "mle-negbin", "poisson-moment", "ols", "ridge", "lasso", "identity"];

/// Settings needed to instantiate an estimator by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    pub delta: f64,
    pub pseudo_form: PseudoValueForm,
    pub lambda: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams { delta: 0.05, pseudo_form: PseudoValueForm::Printed, lambda: 0.0 }
    }
}

pub fn estimator_by_name(name: &str, params: &EstimatorParams, opts: &FitOptions) -> Result<Box<dyn AuxiliaryEstimator>> {
    opts.validate()?;
    let ps = Some(PseudoValues { delta: params.delta, form: params.pseudo_form });
    let est: Box<dyn AuxiliaryEstimator> = match name {
        "mle-logistic" => Box::new(LogisticMle { name: name.into(), pseudo: None, opts: *opts }),
        "mle-logistic-ps" => Box::new(LogisticMle { name: name.into(), pseudo: ps, opts: *opts }),
        "rob-logistic" => Box::new(LogisticRobust { name: name.into(), pseudo: None, opts: *opts }),
        "rob-logistic-ps" => Box::new(LogisticRobust { name: name.into(), pseudo: ps, opts: *opts }),
        "mle-negbin" => Box::new(NegBinMle { opts: *opts }),
        "poisson-moment" => Box::new(PoissonMoment { opts: *opts }),
        "ols" => Box::new(Ols),
        "ridge" => Box::new(Ridge { lambda: params.lambda }),
        "lasso" => Box::new(Lasso { lambda: params.lambda, opts: *opts }),
        "identity" => Box::new(Identity),
        other => return Err(Error::UnknownEstimator(other.to_string())),
    };
    Ok(est)
}
