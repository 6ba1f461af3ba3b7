//! Data-generating processes, covariate designs and response transforms.

use std::io::{BufRead, Write};
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::csvfmt::{fmt_f64, parse_f64};
use crate::error::{Error, Result};
use crate::linalg;
use crate::seedstream::SeedId;

/// Fixed covariate matrix shared by every sample of one replication.
#[derive(Debug)]
pub struct Design {
    matrix: DMatrix<f64>,
    leverage: OnceLock<Result<Vec<f64>>>,
}

impl Design {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Design { matrix, leverage: OnceLock::new() }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }

    /// Hat-matrix diagonal, computed once per design.
    pub fn leverages(&self) -> Result<&[f64]> {
        match self.leverage.get_or_init(|| linalg::leverages(&self.matrix)) {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }
}

impl Clone for Design {
    fn clone(&self) -> Self {
        Design::new(self.matrix.clone())
    }
}

impl PartialEq for Design {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

/// One observed or simulated sample: responses plus the fixed design.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub design: Arc<Design>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, design: Arc<Design>) -> Result<Self> {
        if y.len() != design.n() {
            return Err(Error::Dimension { what: "responses vs design rows", expected: design.n(), got: y.len() });
        }
        Ok(Dataset { y, design })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        self.design.matrix()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self> {
        Dataset::new(y, Arc::clone(&self.design))
    }

    /// Writes `y,x1,...,xp` CSV with round-trip decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let p = self.p();
        let mut header = vec!["y".to_string()];
        header.extend((1..=p).map(|j| format!("x{j}")));
        writeln!(w, "{}", header.join(","))?;
        let x = self.x();
        for i in 0..self.n() {
            let mut row = vec![fmt_f64(self.y[i])];
            row.extend((0..p).map(|j| fmt_f64(x[(i, j)])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))??;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"y") {
            return Err(Error::Parse("first column must be `y`".into()));
        }
        let p = cols.len() - 1;
        let mut y = Vec::new();
        let mut flat = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| parse_f64(s).ok_or_else(|| Error::Parse(format!("line {}: bad number `{s}`", lineno + 2))))
                .collect::<Result<_>>()?;
            if vals.len() != p + 1 {
                return Err(Error::Parse(format!("line {}: expected {} fields, got {}", lineno + 2, p + 1, vals.len())));
            }
            y.push(vals[0]);
            flat.extend_from_slice(&vals[1..]);
        }
        let x = DMatrix::from_row_slice(y.len(), p, &flat);
        Dataset::new(y, Arc::new(Design::new(x)))
    }
}

/// How the `N(0, 4/√n)` covariate law is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleReading {
    /// `4/√n` is the variance.
    #[default]
    Variance,
    /// `4/√n` is the standard deviation.
    Sd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    GaussianScaled,
    Uniform01,
    LassoMixed,
}

/// Covariate design recipe. `slopes` counts the non-intercept columns; the
/// matrix has `slopes + intercept` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    pub slopes: usize,
    pub intercept: bool,
    /// 1-based slope columns drawn as Bernoulli(0.5) (lasso-mixed only).
    pub binary_columns: Vec<usize>,
    pub scale_reading: ScaleReading,
}

impl DesignSpec {
    pub fn columns(&self) -> usize {
        self.slopes + usize::from(self.intercept)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.columns() == 0 {
            return Err(Error::Domain("design needs n >= 1 and at least one column".into()));
        }
        if !self.binary_columns.is_empty() && self.kind != DesignKind::LassoMixed {
            return Err(Error::Domain("binary columns are only valid for lasso-mixed designs".into()));
        }
        for &c in &self.binary_columns {
            if c == 0 || c > self.slopes {
                return Err(Error::Domain(format!("binary column {c} outside 1..={}", self.slopes)));
            }
        }
        Ok(())
    }
}

/// Draws the covariate matrix column by column from the stream at `seed`.
pub fn make_design(spec: &DesignSpec, seed: &SeedId) -> Result<Design> {
    spec.validate()?;
    let mut stream = seed.stream();
    let n = spec.n;
    let offset = usize::from(spec.intercept);
    let mut x = DMatrix::zeros(n, spec.columns());
    if spec.intercept {
        x.column_mut(0).fill(1.0);
    }
    let gauss_sd = match spec.scale_reading {
        ScaleReading::Variance => (4.0 / (n as f64).sqrt()).sqrt(),
        ScaleReading::Sd => 4.0 / (n as f64).sqrt(),
    };
    for s in 0..spec.slopes {
        let binary = spec.binary_columns.contains(&(s + 1));
        let mut col = x.column_mut(s + offset);
        for v in col.iter_mut() {
            *v = match spec.kind {
                DesignKind::GaussianScaled => gauss_sd * stream.standard_normal(),
                DesignKind::Uniform01 => stream.uniform(),
                DesignKind::LassoMixed if binary => stream.bernoulli(0.5)?,
                DesignKind::LassoMixed => stream.standard_normal(),
            };
        }
    }
    Ok(Design::new(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Logistic,
    Negbin,
    GaussianLinear,
}

/// Family plus true parameter. For `Negbin` the last coordinate of `theta0`
/// is the dispersion α; for `GaussianLinear` the noise scale lives in `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub theta0: Vec<f64>,
    pub sigma: f64,
    pub design: DesignSpec,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        let cols = self.design.columns();
        let expected = match self.family {
            Family::Negbin => cols + 1,
            _ => cols,
        };
        if self.theta0.len() != expected {
            return Err(Error::Dimension { what: "theta0", expected, got: self.theta0.len() });
        }
        if self.family == Family::Negbin && !(self.theta0[cols] > 0.0) {
            return Err(Error::Domain("negative binomial alpha must be > 0".into()));
        }
        if self.family == Family::GaussianLinear && !(self.sigma >= 0.0) {
            return Err(Error::Domain("sigma must be >= 0".into()));
        }
        Ok(())
    }
}

fn check_dim(beta: &[f64], x: &DMatrix<f64>) -> Result<()> {
    if beta.len() != x.ncols() {
        return Err(Error::Dimension { what: "coefficients vs design columns", expected: x.ncols(), got: beta.len() });
    }
    Ok(())
}

/// Logistic function evaluated without overflow for any finite input.
#[inline]
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub fn mean_logistic(beta: &[f64], x: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_dim(beta, x)?;
    Ok(linalg::linear_predictor(x, beta).into_iter().map(logistic).collect())
}

pub fn simulate_logistic(beta: &[f64], design: &Arc<Design>, seed: &SeedId) -> Result<Dataset> {
    let mu = mean_logistic(beta, design.matrix())?;
    let mut stream = seed.stream();
    let y = mu.iter().map(|&m| stream.bernoulli(m)).collect::<Result<_>>()?;
    Dataset::new(y, Arc::clone(design))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PseudoValueForm {
    /// `(1 − δ) y + δ`
    #[default]
    Printed,
    /// `(1 − δ) y + δ / 2`
    Symmetric,
}

/// Affine pull of binary responses away from {0, 1}.
pub fn pseudo_values(y: &[f64], delta: f64, form: PseudoValueForm) -> Result<Vec<f64>> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::Domain(format!("pseudo-value delta {delta} outside [0, 0.5)")));
    }
    let shift = match form {
        PseudoValueForm::Printed => delta,
        PseudoValueForm::Symmetric => delta / 2.0,
    };
    Ok(y.iter().map(|&v| (1.0 - delta) * v + shift).collect())
}

pub fn mean_exp(beta: &[f64], x: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_dim(beta, x)?;
    Ok(linalg::linear_predictor(x, beta).into_iter().map(f64::exp).collect())
}

/// Gamma–Poisson mixture: `λ ~ Gamma(α, μ/α)`, `y ~ Poisson(λ)`.
pub fn simulate_negbin(beta: &[f64], alpha: f64, design: &Arc<Design>, seed: &SeedId) -> Result<Dataset> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("negative binomial alpha = {alpha}")));
    }
    let mu = mean_exp(beta, design.matrix())?;
    let mut stream = seed.stream();
    let mut y = Vec::with_capacity(mu.len());
    for &m in &mu {
        let lambda = stream.gamma(alpha, m / alpha)?;
        y.push(stream.poisson(lambda)?);
    }
    Dataset::new(y, Arc::clone(design))
}

pub fn simulate_linear(beta: &[f64], sigma: f64, design: &Arc<Design>, seed: &SeedId) -> Result<Dataset> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("sigma = {sigma}")));
    }
    check_dim(beta, design.matrix())?;
    let mut stream = seed.stream();
    let y = linalg::linear_predictor(design.matrix(), beta).into_iter().map(|m| m + sigma * stream.standard_normal()).collect();
    Dataset::new(y, Arc::clone(design))
}

/// Which responses a misclassification flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipRule {
    /// Ones with the largest `mu` become zeros, zeros with the smallest `mu`
    /// become ones: outliers against the model.
    Confident,
    /// Zeros with the largest `mu` become ones, ones with the smallest `mu`
    /// become zeros. This removes misfits and makes the sample look cleaner.
    Surprising,
}

/// Misclassification contamination: `m = round(rate·n)` zeros and `m` ones
/// change class, chosen by `rule`. Ties are broken by index.
pub fn contaminate_misclassify(y: &[f64], mu: &[f64], rate: f64, rule: FlipRule) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Domain(format!("contamination rate {rate} outside [0, 1)")));
    }
    if y.len() != mu.len() {
        return Err(Error::Dimension { what: "probabilities vs responses", expected: y.len(), got: mu.len() });
    }
    let m = (rate * y.len() as f64).round() as usize;
    let mut out = y.to_vec();
    if m == 0 {
        return Ok(out);
    }
    let mut zeros: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0.0).collect();
    let mut ones: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1.0).collect();
    if zeros.len() + ones.len() != y.len() {
        return Err(Error::Domain("misclassification needs binary responses".into()));
    }
    if zeros.len() < m {
        return Err(Error::Contamination { class: "zero", needed: m, available: zeros.len() });
    }
    if ones.len() < m {
        return Err(Error::Contamination { class: "one", needed: m, available: ones.len() });
    }
    let (up, down) = match rule {
        FlipRule::Confident => (&mut ones, &mut zeros),
        FlipRule::Surprising => (&mut zeros, &mut ones),
    };
    // `up` sorted by decreasing mu, `down` by increasing mu
    up.sort_by(|&a, &b| mu[b].total_cmp(&mu[a]).then(a.cmp(&b)));
    down.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]).then(a.cmp(&b)));
    for &i in &zeros[..m] {
        out[i] = 1.0;
    }
    for &i in &ones[..m] {
        out[i] = 0.0;
    }
    Ok(out)
}

/// Sensitivity variant: flips `round(rate·n)` responses chosen uniformly.
pub fn contaminate_random(y: &[f64], rate: f64, seed: &SeedId) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Domain(format!("contamination rate {rate} outside [0, 1)")));
    }
    let n = y.len();
    let m = (rate * n as f64).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut stream = seed.stream();
    for k in 0..m {
        let pick = k + (stream.uniform() * (n - k) as f64) as usize;
        idx.swap(k, pick.min(n - 1));
    }
    let mut out = y.to_vec();
    for &i in &idx[..m] {
        out[i] = 1.0 - out[i];
    }
    Ok(out)
}

/// A data-generating process `θ ↦ X(θ, n, ω)` with its covariates baked in.
pub trait Simulator: Send + Sync {
    fn dim(&self) -> usize;
    fn simulate(&self, theta: &[f64], seed: &SeedId) -> Result<Dataset>;
}

#[derive(Debug, Clone)]
pub struct LogisticSimulator {
    pub design: Arc<Design>,
}

impl Simulator for LogisticSimulator {
    fn dim(&self) -> usize {
        self.design.p()
    }

    fn simulate(&self, theta: &[f64], seed: &SeedId) -> Result<Dataset> {
        simulate_logistic(theta, &self.design, seed)
    }
}

/// `θ = (β, α)`.
#[derive(Debug, Clone)]
pub struct NegBinSimulator {
    pub design: Arc<Design>,
}

impl Simulator for NegBinSimulator {
    fn dim(&self) -> usize {
        self.design.p() + 1
    }

    fn simulate(&self, theta: &[f64], seed: &SeedId) -> Result<Dataset> {
        let p = self.design.p();
        if theta.len() != p + 1 {
            return Err(Error::Dimension { what: "negbin theta", expected: p + 1, got: theta.len() });
        }
        simulate_negbin(&theta[..p], theta[p], &self.design, seed)
    }
}

#[derive(Debug, Clone)]
pub struct LinearSimulator {
    pub design: Arc<Design>,
    pub sigma: f64,
}

impl Simulator for LinearSimulator {
    fn dim(&self) -> usize {
        self.design.p()
    }

    fn simulate(&self, theta: &[f64], seed: &SeedId) -> Result<Dataset> {
        simulate_linear(theta, self.sigma, &self.design, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(kind: DesignKind, n: usize, slopes: usize, intercept: bool, seed: u64) -> Arc<Design> {
        let spec = DesignSpec { kind, n, slopes, intercept, binary_columns: vec![], scale_reading: ScaleReading::Variance };
        Arc::new(make_design(&spec, &SeedId::new(seed)).unwrap())
    }

    fn sample_var(v: &[f64]) -> f64 {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn logistic_values() {
        let x = DMatrix::from_column_slice(3, 1, &[0.0, 3f64.ln(), 40.0]);
        let mu = mean_logistic(&[1.0], &x).unwrap();
        assert_eq!(mu[0], 0.5);
        assert!((mu[1] - 0.75).abs() < 1e-15);
        assert!((mu[2] - (1.0 - (-40f64).exp())).abs() <= f64::EPSILON);
        assert_eq!(logistic(700.0), 1.0);
        assert!(logistic(-700.0) > 0.0 && logistic(-700.0).is_finite());
        assert!(matches!(mean_logistic(&[1.0, 2.0], &x), Err(Error::Dimension { .. })));
    }

    #[test]
    fn logistic_simulation() {
        let d = design(DesignKind::GaussianScaled, 10_000, 3, true, 1);
        let data = simulate_logistic(&[0.0; 4], &d, &SeedId::new(5)).unwrap();
        let mean = data.y.iter().sum::<f64>() / 1e4;
        assert!((mean - 0.5).abs() < 4.0 * 0.5 / 100.0);
        let again = simulate_logistic(&[0.0; 4], &d, &SeedId::new(5)).unwrap();
        assert_eq!(data.y, again.y);
        let sat = simulate_logistic(&[1e6, 0.0, 0.0, 0.0], &d, &SeedId::new(6)).unwrap();
        assert!(sat.y.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn pseudo_value_map() {
        let ps = pseudo_values(&[0.0, 1.0], 0.05, PseudoValueForm::Printed).unwrap();
        assert!((ps[0] - 0.05).abs() < 1e-15);
        assert_eq!(ps[1], 1.0);
        let sym = pseudo_values(&[0.0, 1.0], 0.05, PseudoValueForm::Symmetric).unwrap();
        assert!((sym[0] - 0.025).abs() < 1e-15 && (sym[1] - 0.975).abs() < 1e-15);
        let y = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(pseudo_values(&y, 0.0, PseudoValueForm::Printed).unwrap(), y.to_vec());
        assert!(pseudo_values(&y, 0.5, PseudoValueForm::Printed).is_err());
        assert!(pseudo_values(&y, -0.1, PseudoValueForm::Printed).is_err());
    }

    #[test]
    fn negbin_moments() {
        let x = DMatrix::from_element(100_000, 1, 1.0);
        let d = Arc::new(Design::new(x));
        let beta = [2f64.ln()];
        let data = simulate_negbin(&beta, 2.0, &d, &SeedId::new(77)).unwrap();
        assert!(data.y.iter().all(|&v| v >= 0.0 && v.fract() == 0.0));
        let var = sample_var(&data.y);
        assert!((var - 4.0).abs() / 4.0 < 0.05, "variance {var}");
        let pois = simulate_negbin(&beta, 1e6, &d, &SeedId::new(78)).unwrap();
        let mean = pois.y.iter().sum::<f64>() / 1e5;
        let ratio = mean / sample_var(&pois.y);
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
        assert_eq!(data.y, simulate_negbin(&beta, 2.0, &d, &SeedId::new(77)).unwrap().y);
        assert!(simulate_negbin(&beta, 0.0, &d, &SeedId::new(77)).is_err());
    }

    #[test]
    fn linear_simulation() {
        let d = design(DesignKind::LassoMixed, 50, 3, false, 2);
        let beta = [1.0, -2.0, 0.5];
        let exact = simulate_linear(&beta, 0.0, &d, &SeedId::new(1)).unwrap();
        assert_eq!(exact.y, linalg::linear_predictor(d.matrix(), &beta));
        let big = design(DesignKind::LassoMixed, 100_000, 1, false, 3);
        let noise = simulate_linear(&[0.0], 1.0, &big, &SeedId::new(4)).unwrap();
        assert!((sample_var(&noise.y) - 1.0).abs() < 0.05);
        assert_eq!(noise.y, simulate_linear(&[0.0], 1.0, &big, &SeedId::new(4)).unwrap().y);
    }

    #[test]
    fn misclassification_counts() {
        let n = 100;
        let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let mu: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        for rule in [FlipRule::Confident, FlipRule::Surprising] {
            assert_eq!(contaminate_misclassify(&y, &mu, 0.0, rule).unwrap(), y);
            let c = contaminate_misclassify(&y, &mu, 0.02, rule).unwrap();
            let up = (0..n).filter(|&i| y[i] == 0.0 && c[i] == 1.0).count();
            let down = (0..n).filter(|&i| y[i] == 1.0 && c[i] == 0.0).count();
            assert_eq!((up, down), (2, 2));
            let hamming = y.iter().zip(&c).filter(|(a, b)| a != b).count();
            assert_eq!(hamming, 2 * 2);
        }
        // odd indices are ones; the most confident are 99 and 97, zeros 0 and 2
        let c = contaminate_misclassify(&y, &mu, 0.02, FlipRule::Confident).unwrap();
        assert_eq!((c[99], c[97], c[0], c[2]), (0.0, 0.0, 1.0, 1.0));
        let c = contaminate_misclassify(&y, &mu, 0.02, FlipRule::Surprising).unwrap();
        assert_eq!((c[98], c[96], c[1], c[3]), (1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn misclassification_class_shortage() {
        let y = vec![1.0; 99].into_iter().chain([0.0]).collect::<Vec<_>>();
        let mu = vec![0.5; 100];
        match contaminate_misclassify(&y, &mu, 0.02, FlipRule::Confident) {
            Err(Error::Contamination { class, .. }) => assert_eq!(class, "zero"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn random_contamination_count() {
        let y = vec![0.0; 200];
        let c = contaminate_random(&y, 0.02, &SeedId::new(1)).unwrap();
        assert_eq!(c.iter().filter(|&&v| v == 1.0).count(), 4);
    }

    #[test]
    fn design_recipes() {
        let d = design(DesignKind::GaussianScaled, 400, 20, true, 9);
        assert!(d.matrix().column(0).iter().all(|&v| v == 1.0));
        let mut vars = 0.0;
        for j in 1..=20 {
            let col: Vec<f64> = d.matrix().column(j).iter().cloned().collect();
            vars += sample_var(&col);
        }
        let avg = vars / 20.0;
        assert!((avg - 0.2).abs() / 0.2 < 0.1, "avg column variance {avg}");

        let spec = DesignSpec {
            kind: DesignKind::LassoMixed,
            n: 60,
            slopes: 25,
            intercept: false,
            binary_columns: vec![1, 2, 15, 16, 17, 18, 19, 20],
            scale_reading: ScaleReading::Variance,
        };
        let m = make_design(&spec, &SeedId::new(3)).unwrap();
        for &c in &spec.binary_columns {
            assert!(m.matrix().column(c - 1).iter().all(|&v| v == 0.0 || v == 1.0));
        }
        assert_eq!(m, make_design(&spec, &SeedId::new(3)).unwrap());
        let bad = DesignSpec { binary_columns: vec![26], ..spec.clone() };
        assert!(make_design(&bad, &SeedId::new(3)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = design(DesignKind::Uniform01, 7, 2, true, 4);
        let data = simulate_negbin(&[0.5, 1.0, -1.0], 2.0, &d, &SeedId::new(2)).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("y,x1,x2,x3\n"));
        let back = Dataset::read_csv(&buf[..]).unwrap();
        assert_eq!(back, data);
    }
}
