//! Study configuration: TOML, every key documented in `docs/config.md`.
//!
//! Parsing happens in two passes. The TOML layer rejects syntax errors,
//! unknown keys and missing required keys; [`StudyConfig::validate`] then
//! checks cross-field consistency. Both report the offending key and, when
//! it can be found in the source text, its line.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimators::{default_lasso_lambda, EstimatorParams, FitOptions, ESTIMATOR_NAMES};
use crate::ibcore::{Damping, IBConfig, Projection};
use crate::models::{DesignKind, PseudoValueForm, ScaleReading};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Logistic,
    Negbin,
    Lasso,
    Synthetic,
}

impl StudyKind {
    fn accepts(self, aux: &str) -> bool {
        match self {
            StudyKind::Logistic => aux.contains("logistic"),
            StudyKind::Negbin => aux == "mle-negbin" || aux == "poisson-moment",
            StudyKind::Lasso => matches!(aux, "ols" | "ridge" | "lasso"),
            StudyKind::Synthetic => aux == "identity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ContaminationKind {
    /// Flip the most confident responses (largest-μ ones, smallest-μ zeros).
    #[default]
    Misclassify,
    /// Flip the most surprising responses (largest-μ zeros, smallest-μ ones).
    MisclassifySurprising,
    /// Flip uniformly chosen responses.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IbSection {
    #[serde(default = "d_max_it")]
    pub max_iterations: usize,
    #[serde(default = "d_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub j: u64,
    #[serde(default = "d_eps")]
    pub epsilon_schedule: Vec<f64>,
    #[serde(default = "d_true")]
    pub warm_start: bool,
    /// Half-width of the box `[−b, b]ᵖ` used as Θ; `0` disables projection.
    #[serde(default)]
    pub bound: f64,
    /// Iterations without a new smallest residual before giving up; `0` off.
    #[serde(default = "d_stall")]
    pub stall_window: usize,
}

fn d_max_it() -> usize {
    200
}
fn d_tol() -> f64 {
    1e-6
}
fn d_stall() -> usize {
    10
}
fn d_eps() -> Vec<f64> {
    vec![1.0]
}
fn d_true() -> bool {
    true
}

impl Default for IbSection {
    fn default() -> Self {
        IbSection {
            max_iterations: d_max_it(),
            tolerance: d_tol(),
            j: 0,
            epsilon_schedule: d_eps(),
            warm_start: true,
            bound: 0.0,
            stall_window: d_stall(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub kind: Option<DesignKind>,
    pub intercept: Option<bool>,
    #[serde(default)]
    pub scale_reading: ScaleReading,
    #[serde(default)]
    pub binary_columns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "d_fit_it")]
    pub max_iterations: usize,
    #[serde(default = "d_fit_tol")]
    pub tolerance: f64,
    #[serde(default = "d_huber")]
    pub huber_c: f64,
    #[serde(default = "d_cap")]
    pub alpha_cap: f64,
}

fn d_fit_it() -> usize {
    100
}
fn d_fit_tol() -> f64 {
    1e-10
}
fn d_huber() -> f64 {
    1.345
}
fn d_cap() -> f64 {
    1e4
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection { max_iterations: d_fit_it(), tolerance: d_fit_tol(), huber_c: d_huber(), alpha_cap: d_cap() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RemainderSpec {
    #[default]
    Zero,
    Tanh(f64),
    Square(f64),
}

/// Synthetic statistic `θ + Mθ + s + c + Lθ + r(θ) + (noise_scale/√n) z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    /// Rows of `M`.
    pub m: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    /// Rows of `L`; zero when omitted.
    #[serde(default)]
    pub l: Vec<Vec<f64>>,
    /// Zero when omitted.
    #[serde(default)]
    pub c: Vec<f64>,
    #[serde(default)]
    pub remainder: RemainderSpec,
    #[serde(default)]
    pub noise_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    #[serde(default)]
    pub setting: String,
    pub n: usize,
    /// Number of covariates, intercept excluded.
    pub p: usize,
    pub h: usize,
    /// Monte-Carlo replications.
    pub r: usize,
    /// Regression coefficients, intercept first when the design has one.
    pub theta0: Vec<f64>,
    /// Negative binomial dispersion (`Var = μ + μ²/α`).
    pub alpha0: Option<f64>,
    /// Noise standard deviation of the linear model.
    #[serde(default = "d_sigma")]
    pub sigma: f64,
    #[serde(default = "d_delta")]
    pub delta: f64,
    #[serde(default)]
    pub pseudo_form: PseudoValueForm,
    #[serde(default)]
    pub contamination_rate: f64,
    #[serde(default)]
    pub contamination: ContaminationKind,
    /// Penalty of the (1/n)·RSS objective; `5 √(ln p / n)` when omitted.
    pub lambda: Option<f64>,
    pub estimators: Vec<String>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "d_out")]
    pub output_dir: PathBuf,
    /// Worker threads; `0` uses every available core.
    #[serde(default)]
    pub workers: usize,
    /// Replication dumped by the `trace` command (1-based).
    #[serde(default = "d_trace")]
    pub trace_replication: usize,
    #[serde(default)]
    pub ib: IbSection,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub fit: FitSection,
    pub synthetic: Option<SyntheticSection>,
}

fn d_sigma() -> f64 {
    1.0
}
fn d_delta() -> f64 {
    0.05
}
fn d_out() -> PathBuf {
    PathBuf::from("results")
}
fn d_trace() -> usize {
    1
}

/// 1-based line of the first `key = …` assignment in `src`.
fn locate(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn key_on_line(src: &str, line: usize) -> Option<String> {
    let (lhs, _) = src.lines().nth(line - 1)?.split_once('=')?;
    let k = lhs.trim();
    (!k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')).then(|| k.to_string())
}

/// Pulls the key name out of serde messages such as "missing field `theta0`".
fn key_in_message(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

impl StudyConfig {
    /// Parses, fills defaults and validates.
    pub fn from_toml_str(src: &str) -> Result<Self, ConfigError> {
        let mut cfg: StudyConfig = toml::from_str(src).map_err(|e| {
            let message = e.message().trim().to_string();
            let mut key = key_in_message(&message);
            let line = match (e.span(), &key) {
                (Some(span), _) if span.start > 0 || message.contains("unknown") || message.contains("invalid") => {
                    Some(line_of_offset(src, span.start))
                }
                (_, Some(k)) => locate(src, k),
                _ => None,
            };
            // type errors name no key; take it from the assignment on that line
            if key.is_none() || message.starts_with("invalid type") {
                key = line.and_then(|l| key_on_line(src, l)).or(key);
            }
            ConfigError { key, line, message }
        })?;
        cfg.fill_defaults();
        cfg.validate().map_err(|mut e| {
            if e.line.is_none() {
                if let Some(k) = &e.key {
                    let leaf = k.rsplit('.').next().unwrap_or(k);
                    e.line = locate(src, leaf);
                }
            }
            e
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, Error> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(Self::from_toml_str(&src)?)
    }

    /// TOML with every default spelled out. Parsing it yields the same config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("study config serializes")
    }

    pub fn has_intercept(&self) -> bool {
        self.design.intercept.unwrap_or(false)
    }

    /// Length of the parameter vector each estimator returns.
    pub fn parameter_dim(&self) -> usize {
        let base = self.p + usize::from(self.has_intercept());
        match self.study {
            StudyKind::Negbin => base + 1,
            _ => base,
        }
    }

    /// True parameter as seen by the estimators (`α` appended for negbin).
    pub fn truth(&self) -> Vec<f64> {
        let mut t = self.theta0.clone();
        if let (StudyKind::Negbin, Some(a)) = (self.study, self.alpha0) {
            t.push(a);
        }
        t
    }

    fn fill_defaults(&mut self) {
        let (kind, intercept) = match self.study {
            StudyKind::Logistic => (Some(DesignKind::GaussianScaled), Some(true)),
            StudyKind::Negbin => (Some(DesignKind::Uniform01), Some(true)),
            StudyKind::Lasso => (Some(DesignKind::LassoMixed), Some(false)),
            StudyKind::Synthetic => (None, Some(false)),
        };
        if self.design.kind.is_none() {
            self.design.kind = kind;
        }
        if self.design.intercept.is_none() {
            self.design.intercept = intercept;
        }
        if self.lambda.is_none() {
            // The 2.5 √(ln p / n) rule is quoted for the (1/2n)·RSS scaling;
            // the lasso here minimizes (1/n)·RSS + λ‖β‖₁, so the rule doubles.
            self.lambda =
                Some(if self.study == StudyKind::Lasso && self.p > 0 && self.n > 0 { 2.0 * default_lasso_lambda(self.p, self.n) } else { 0.0 });
        }
        if let Some(s) = &mut self.synthetic {
            let p = s.s.len();
            if s.l.is_empty() {
                s.l = vec![vec![0.0; p]; p];
            }
            if s.c.is_empty() {
                s.c = vec![0.0; p];
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, message: String| ConfigError { key: Some(key.to_string()), line: None, message };
        for (key, v, min) in
            [("n", self.n, 1), ("p", self.p, 1), ("h", self.h, 1), ("r", self.r, 2), ("trace_replication", self.trace_replication, 1)]
        {
            if v < min {
                return Err(err(key, format!("must be >= {min}, got {v}")));
            }
        }
        if self.trace_replication > self.r {
            return Err(err("trace_replication", format!("must be <= r = {}", self.r)));
        }
        let coef = self.p + usize::from(self.has_intercept());
        if self.theta0.len() != coef {
            return Err(err(
                "theta0",
                format!("expected {coef} values (p = {} plus intercept = {}), got {}", self.p, self.has_intercept(), self.theta0.len()),
            ));
        }
        if self.theta0.iter().any(|v| !v.is_finite()) {
            return Err(err("theta0", "values must be finite".into()));
        }
        match (self.study, self.alpha0) {
            (StudyKind::Negbin, None) => return Err(err("alpha0", "required for negbin studies".into())),
            (StudyKind::Negbin, Some(a)) if !(a > 0.0) => return Err(err("alpha0", format!("must be > 0, got {a}"))),
            (StudyKind::Negbin, _) => {}
            (_, Some(_)) => return Err(err("alpha0", "only valid for negbin studies".into())),
            _ => {}
        }
        if !(self.sigma >= 0.0) {
            return Err(err("sigma", "must be >= 0".into()));
        }
        if !(0.0..0.5).contains(&self.delta) {
            return Err(err("delta", format!("must lie in [0, 0.5), got {}", self.delta)));
        }
        if !(0.0..1.0).contains(&self.contamination_rate) {
            return Err(err("contamination_rate", "must lie in [0, 1)".into()));
        }
        if self.contamination_rate > 0.0 && self.study != StudyKind::Logistic {
            return Err(err("contamination_rate", "contamination is only defined for logistic studies".into()));
        }
        match self.lambda {
            Some(l) if l >= 0.0 && l.is_finite() => {}
            _ => return Err(err("lambda", "must be a finite value >= 0".into())),
        }
        if self.estimators.is_empty() {
            return Err(err("estimators", "list at least one estimator".into()));
        }
        for (i, name) in self.estimators.iter().enumerate() {
            let aux = name.strip_prefix("jie-").unwrap_or(name);
            if !ESTIMATOR_NAMES.contains(&aux) {
                return Err(err("estimators", format!("unknown estimator `{name}`; known: {}", ESTIMATOR_NAMES.join(", "))));
            }
            if !self.study.accepts(aux) {
                return Err(err("estimators", format!("`{name}` does not apply to {:?} studies", self.study)));
            }
            if aux == "lasso" && self.lambda == Some(0.0) {
                return Err(err("lambda", "lasso needs lambda > 0".into()));
            }
            if self.estimators[..i].contains(name) {
                return Err(err("estimators", format!("`{name}` listed twice")));
            }
        }
        self.ib_config().validate().map_err(|e| err("ib", e.to_string()))?;
        self.fit_options().validate().map_err(|e| err("fit", e.to_string()))?;
        if self.study != StudyKind::Synthetic {
            self.design_spec().validate().map_err(|e| err("design", e.to_string()))?;
        }
        match (&self.synthetic, self.study) {
            (None, StudyKind::Synthetic) => return Err(err("synthetic", "section required for synthetic studies".into())),
            (Some(_), k) if k != StudyKind::Synthetic => return Err(err("synthetic", "section only valid for synthetic studies".into())),
            (Some(s), _) => {
                let p = self.p;
                let square = |m: &Vec<Vec<f64>>| m.len() == p && m.iter().all(|r| r.len() == p);
                if !square(&s.m) {
                    return Err(err("synthetic.m", format!("must be {p} rows of {p} values")));
                }
                if !square(&s.l) {
                    return Err(err("synthetic.l", format!("must be {p} rows of {p} values")));
                }
                if s.s.len() != p {
                    return Err(err("synthetic.s", format!("must have {p} values")));
                }
                if s.c.len() != p {
                    return Err(err("synthetic.c", format!("must have {p} values")));
                }
                if !(s.noise_scale >= 0.0) {
                    return Err(err("synthetic.noise_scale", "must be >= 0".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn ib_config(&self) -> IBConfig {
        let eps = &self.ib.epsilon_schedule;
        IBConfig {
            h: self.h,
            j: self.ib.j,
            max_iterations: self.ib.max_iterations,
            tolerance: self.ib.tolerance,
            damping: if eps.len() == 1 { Damping::Constant(eps[0]) } else { Damping::Schedule(eps.clone()) },
            projection: Projection::ClipToBox,
            warm_start: self.ib.warm_start,
            final_defect: false,
            stall_window: self.ib.stall_window,
        }
    }

    /// Θ as a box. The negbin dispersion is always kept positive.
    pub fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        let b = self.ib.bound;
        let dim = self.parameter_dim();
        let mut out = if b > 0.0 { vec![(-b, b); dim] } else { vec![(f64::NEG_INFINITY, f64::INFINITY); dim] };
        if self.study == StudyKind::Negbin {
            out[dim - 1] = (1e-6, self.fit.alpha_cap);
        } else if b <= 0.0 {
            return None;
        }
        Some(out)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_iterations: self.fit.max_iterations,
            tolerance: self.fit.tolerance,
            huber_c: self.fit.huber_c,
            alpha_cap: self.fit.alpha_cap,
            ..FitOptions::default()
        }
    }

    pub fn estimator_params(&self) -> EstimatorParams {
        EstimatorParams { delta: self.delta, pseudo_form: self.pseudo_form, lambda: self.lambda.unwrap_or(0.0) }
    }

    pub fn design_spec(&self) -> crate::models::DesignSpec {
        crate::models::DesignSpec {
            kind: self.design.kind.unwrap_or(DesignKind::GaussianScaled),
            n: self.n,
            slopes: self.p,
            intercept: self.has_intercept(),
            binary_columns: self.design.binary_columns.clone(),
            scale_reading: self.design.scale_reading,
        }
    }
}
