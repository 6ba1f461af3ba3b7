//! Iterative bootstrap (IB) computation of the just-identified indirect
//! inference estimator: find `θ` with `π̂_obs = (1/H) Σ_h π̂(θ, n, ω_{h+jH})`
//! by iterating `θ ← θ + ε_k (π̂_obs − π̄(θ))`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::csvfmt::fmt_f64;
use crate::error::{Error, Result};
use crate::estimators::{AuxiliaryEstimator, Fit};
use crate::linalg::norm2;
use crate::models::{Dataset, Design, Simulator};
use crate::seedstream::{seed_for_simulation, SeedId};

/// A point of the parameter space with optional per-coordinate box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParameterVector { values, bounds: None }
    }

    pub fn with_bounds(values: Vec<f64>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != values.len() {
            return Err(Error::Dimension { what: "bounds", expected: values.len(), got: bounds.len() });
        }
        if let Some(k) = bounds.iter().position(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::Domain(format!("empty box in coordinate {k}")));
        }
        Ok(ParameterVector { values, bounds: Some(bounds) })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Clips into the box; returns how many coordinates moved.
    pub fn project(&mut self) -> usize {
        clip(&mut self.values, self.bounds.as_deref())
    }
}

fn clip(values: &mut [f64], bounds: Option<&[(f64, f64)]>) -> usize {
    let Some(b) = bounds else { return 0 };
    let mut moved = 0;
    for (v, &(lo, hi)) in values.iter_mut().zip(b) {
        let c = v.clamp(lo, hi);
        if c != *v {
            *v = c;
            moved += 1;
        }
    }
    moved
}

/// Step-size schedule `ε_k`. A list shorter than the run repeats its last entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Damping {
    Constant(f64),
    Schedule(Vec<f64>),
}

impl Damping {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Damping::Constant(e) => *e,
            Damping::Schedule(list) => list[(k - 1).min(list.len() - 1)],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |e: f64| e > 0.0 && e <= 1.0;
        match self {
            Damping::Constant(e) if ok(*e) => Ok(()),
            Damping::Schedule(l) if !l.is_empty() && l.iter().all(|&e| ok(e)) => Ok(()),
            other => Err(Error::Domain(format!("damping {other:?} must lie in (0, 1]"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    ClipToBox,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IBConfig {
    /// Number of simulated samples `H` averaged per evaluation.
    pub h: usize,
    /// Seed block `j`.
    pub j: u64,
    pub max_iterations: usize,
    /// Relative ℓ₂ change that stops the iteration.
    pub tolerance: f64,
    pub damping: Damping,
    pub projection: Projection,
    /// Start each inner fit from the same sample's fit at the previous
    /// iterate. Samples are unchanged between iterations, only `θ` moves.
    pub warm_start: bool,
    /// Spend one extra evaluation to record `‖π̂_obs − π̄(θ̂)‖₂`.
    pub final_defect: bool,
    /// Stop once `w` iterations pass without a new smallest residual
    /// (`0` = never). With discrete responses `π̄` is a step function of `θ`
    /// and the iterates end up hopping between neighbouring cells.
    pub stall_window: usize,
}

impl Default for IBConfig {
    fn default() -> Self {
        IBConfig {
            h: 100,
            j: 0,
            max_iterations: 200,
            tolerance: 1e-6,
            damping: Damping::Constant(1.0),
            projection: Projection::ClipToBox,
            warm_start: true,
            final_defect: true,
            stall_window: 0,
        }
    }
}

impl IBConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h == 0 {
            return Err(Error::Domain("H must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain("IB tolerance must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("IB needs at least one iteration".into()));
        }
        self.damping.validate()
    }
}

/// Value of the empirical binding function at one `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiBar {
    pub mean: Vec<f64>,
    /// Non-converged inner fits that were averaged in anyway.
    pub flagged: usize,
    /// Inner fits that returned an error and were left out of the mean.
    pub failed: usize,
    /// Individual fits in `h` order (empty for analytic bindings).
    pub fits: Vec<Vec<f64>>,
}

/// Per-sample memory of the previous fit, used for warm starts.
pub type WarmState = Vec<Option<Vec<f64>>>;

/// `θ ↦ π̄(θ)`. Implementations must be deterministic.
pub trait Binding: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, theta: &[f64], warm: Option<&mut WarmState>) -> Result<PiBar>;
}

/// Binding given in closed form.
pub struct ExactBinding<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> Binding for ExactBinding<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, theta: &[f64], _warm: Option<&mut WarmState>) -> Result<PiBar> {
        Ok(PiBar { mean: (self.f)(theta)?, flagged: 0, failed: 0, fits: Vec::new() })
    }
}

/// Binding estimated by simulation with the fixed seeds `ω_{h+jH}`.
pub struct SimulatedBinding<'a> {
    pub aux: &'a dyn AuxiliaryEstimator,
    pub sim: &'a dyn Simulator,
    pub j: u64,
    pub h: usize,
    pub base: SeedId,
}

impl Binding for SimulatedBinding<'_> {
    fn dim(&self) -> usize {
        self.sim.dim()
    }

    fn evaluate(&self, theta: &[f64], warm: Option<&mut WarmState>) -> Result<PiBar> {
        let run = |h: usize, start: Option<&[f64]>| -> Result<Fit> {
            let seed = seed_for_simulation(&self.base, self.j, h as u64 + 1, self.h as u64)?;
            let data = self.sim.simulate(theta, &seed)?;
            let fit = self.aux.fit(&data, start)?;
            if fit.theta.len() != theta.len() {
                return Err(Error::Dimension { what: "auxiliary output", expected: theta.len(), got: fit.theta.len() });
            }
            Ok(fit)
        };
        let results: Vec<Result<Fit>> = match warm {
            Some(state) => {
                state.resize(self.h, None);
                state
                    .par_iter_mut()
                    .enumerate()
                    .map(|(h, slot)| {
                        let r = run(h, slot.as_deref());
                        if let Ok(f) = &r {
                            *slot = Some(f.theta.clone());
                        }
                        r
                    })
                    .collect()
            }
            None => (0..self.h).into_par_iter().map(|h| run(h, None)).collect(),
        };
        average_fits(results, theta.len())
    }
}

/// `π̄(θ)` computed from scratch (no warm starts): a pure function of its inputs.
pub fn pi_bar(theta: &[f64], aux: &dyn AuxiliaryEstimator, sim: &dyn Simulator, j: u64, h: usize, base: &SeedId) -> Result<PiBar> {
    SimulatedBinding { aux, sim, j, h, base: base.clone() }.evaluate(theta, None)
}

fn average_fits(results: Vec<Result<Fit>>, dim: usize) -> Result<PiBar> {
    let total = results.len();
    let mut fits = Vec::with_capacity(total);
    let mut flagged = 0;
    let mut failed = 0;
    let mut last_err = None;
    for r in results {
        match r {
            Ok(f) => {
                flagged += usize::from(f.is_flagged());
                fits.push(f.theta);
            }
            Err(e) => {
                failed += 1;
                last_err = Some(e);
            }
        }
    }
    if fits.is_empty() {
        return Err(last_err.map_or(Error::AllFitsFailed(total), |_| Error::AllFitsFailed(total)));
    }
    Ok(PiBar { mean: shifted_mean(&fits, dim), flagged, failed, fits })
}

/// `x₁ + (1/m) Σ (xᵢ − x₁)` with the deviations pairwise-summed in index
/// order. Identical rows average to themselves exactly.
pub(crate) fn shifted_mean(rows: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let first = &rows[0];
    let dev: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(first).map(|(a, b)| a - b).collect()).collect();
    let refs: Vec<&[f64]> = dev.iter().map(Vec::as_slice).collect();
    let m = rows.len() as f64;
    pairwise_sum(&refs, dim).iter().zip(first).map(|(d, f)| f + d / m).collect()
}

/// Pairwise summation of rows in index order.
pub(crate) fn pairwise_sum(rows: &[&[f64]], dim: usize) -> Vec<f64> {
    if rows.len() <= 8 {
        let mut acc = vec![0.0; dim];
        for r in rows {
            for (a, v) in acc.iter_mut().zip(r.iter()) {
                *a += v;
            }
        }
        return acc;
    }
    let (left, right) = rows.split_at(rows.len() / 2);
    let mut a = pairwise_sum(left, dim);
    for (x, y) in a.iter_mut().zip(pairwise_sum(right, dim)) {
        *x += y;
    }
    a
}

/// `θ_prev + ε (π̂_obs − π̄)`, then clipped to `bounds`. Returns the new point
/// and the number of clipped coordinates.
pub fn ib_step(theta_prev: &[f64], pi_obs: &[f64], pi_bar_value: &[f64], eps: f64, bounds: Option<&[(f64, f64)]>) -> Result<(Vec<f64>, usize)> {
    let p = theta_prev.len();
    for (what, v) in [("observed auxiliary", pi_obs), ("simulated average", pi_bar_value)] {
        if v.len() != p {
            return Err(Error::Dimension { what, expected: p, got: v.len() });
        }
    }
    let mut next = Vec::with_capacity(p);
    for k in 0..p {
        let v = theta_prev[k] + eps * (pi_obs[k] - pi_bar_value[k]);
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "IB iterate", coord: k });
        }
        next.push(v);
    }
    let moved = clip(&mut next, bounds);
    Ok((next, moved))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IBResult {
    pub theta_hat: ParameterVector,
    /// `θ^(0), θ^(1), …`
    pub trace: Vec<Vec<f64>>,
    /// `‖θ^(k) − θ^(k−1)‖₂` for `k = 1, 2, …`
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Stopped by the stall rule rather than the tolerance or `K`.
    pub stalled: bool,
    pub iterations: usize,
    pub flagged_fits: usize,
    pub failed_fits: usize,
    pub projections: usize,
    /// Number of auxiliary fits performed.
    pub fit_calls: usize,
    pub defect: Option<f64>,
}

impl IBResult {
    /// `k,residual,theta_1..theta_p`; the `k = 0` row has an empty residual.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let p = self.theta_hat.dim();
        let mut header = vec!["k".to_string(), "residual".to_string()];
        header.extend((1..=p).map(|i| format!("theta_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (k, theta) in self.trace.iter().enumerate() {
            let res = if k == 0 { String::new() } else { fmt_f64(self.residuals[k - 1]) };
            let mut row = vec![k.to_string(), res];
            row.extend(theta.iter().map(|v| fmt_f64(*v)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn summary_line(&self) -> String {
        let eps = match convergence_rate(&self.residuals, &self.theta_hat.values) {
            Ok(RateEstimate::Geometric { epsilon, .. }) => format!("{epsilon:.6}"),
            Ok(RateEstimate::Immediate) => "0".to_string(),
            Err(_) => "NA".to_string(),
        };
        format!(
            "converged={},stalled={},iterations={},epsilon_hat={},flagged_fits={},projections={}",
            self.converged, self.stalled, self.iterations, eps, self.flagged_fits, self.projections
        )
    }
}

/// Runs the IB from `theta_init` (default: `π̂_obs` clipped to the box).
pub fn solve_jie(
    pi_obs: &[f64],
    binding: &dyn Binding,
    config: &IBConfig,
    bounds: Option<&[(f64, f64)]>,
    theta_init: Option<&[f64]>,
) -> Result<IBResult> {
    config.validate()?;
    let p = binding.dim();
    if pi_obs.len() != p {
        return Err(Error::Dimension { what: "observed auxiliary", expected: p, got: pi_obs.len() });
    }
    let bounds = match config.projection {
        Projection::ClipToBox => bounds,
        Projection::None => None,
    };
    let mut theta = theta_init.unwrap_or(pi_obs).to_vec();
    if theta.len() != p {
        return Err(Error::Dimension { what: "initial value", expected: p, got: theta.len() });
    }
    let mut projections = clip(&mut theta, bounds);
    let mut warm: Option<WarmState> = config.warm_start.then(Vec::new);
    let mut trace = vec![theta.clone()];
    let mut residuals = Vec::new();
    let (mut flagged, mut failed, mut calls) = (0, 0, 0);
    let mut converged = false;
    let mut stalled = false;
    let (mut best, mut best_k) = (f64::INFINITY, 0);
    let mut k = 0;
    while k < config.max_iterations {
        k += 1;
        let pb = binding.evaluate(&theta, warm.as_mut())?;
        flagged += pb.flagged;
        failed += pb.failed;
        calls += pb.fits.len() + pb.failed;
        let (next, moved) = ib_step(&theta, pi_obs, &pb.mean, config.damping.at(k), bounds)?;
        projections += moved;
        let diff: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let res = norm2(&diff);
        theta = next;
        trace.push(theta.clone());
        residuals.push(res);
        if res <= config.tolerance * norm2(&theta).max(1.0) {
            converged = true;
            break;
        }
        if res < best {
            (best, best_k) = (res, k);
        } else if config.stall_window > 0 && k - best_k >= config.stall_window {
            stalled = true;
            break;
        }
    }
    let defect = if config.final_defect {
        let pb = binding.evaluate(&theta, warm.as_mut())?;
        calls += pb.fits.len() + pb.failed;
        let d: Vec<f64> = pi_obs.iter().zip(&pb.mean).map(|(a, b)| a - b).collect();
        Some(norm2(&d))
    } else {
        None
    };
    let theta_hat = ParameterVector { values: theta, bounds: bounds.map(<[_]>::to_vec) };
    Ok(IBResult {
        theta_hat,
        trace,
        residuals,
        converged,
        stalled,
        iterations: k,
        flagged_fits: flagged,
        failed_fits: failed,
        projections,
        fit_calls: calls,
        defect,
    })
}

/// Convenience wrapper: fit the auxiliary on the observed data, then solve.
pub fn solve_jie_simulated(
    observed: &Dataset,
    aux: &dyn AuxiliaryEstimator,
    sim: &dyn Simulator,
    config: &IBConfig,
    base: &SeedId,
    bounds: Option<&[(f64, f64)]>,
) -> Result<(Fit, IBResult)> {
    let obs = aux.fit(observed, None)?;
    let binding = SimulatedBinding { aux, sim, j: config.j, h: config.h, base: base.clone() };
    let res = solve_jie(&obs.theta, &binding, config, bounds, None)?;
    Ok((obs, res))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateEstimate {
    /// Residuals hit the numerical floor right after the first step.
    Immediate,
    Geometric {
        epsilon: f64,
        r_squared: f64,
        points: usize,
    },
}

/// Fits `ln residual_k ≈ a + k ln ε` over the leading residuals that are
/// above `100 · machine-eps · ‖θ̂‖`.
pub fn convergence_rate(residuals: &[f64], theta_hat: &[f64]) -> Result<RateEstimate> {
    let floor = 100.0 * f64::EPSILON * norm2(theta_hat).max(1.0);
    let usable: Vec<(f64, f64)> = residuals.iter().enumerate().take_while(|(_, &r)| r > floor).map(|(k, &r)| ((k + 1) as f64, r.ln())).collect();
    if usable.len() <= 1 && residuals.len() > usable.len() {
        return Ok(RateEstimate::Immediate);
    }
    if usable.len() < 5 {
        return Err(Error::TooFewIterations(usable.len()));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|u| u.0).sum::<f64>() / n;
    let my = usable.iter().map(|u| u.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = usable.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateEstimate::Geometric { epsilon: slope.exp(), r_squared, points: usable.len() })
}

/// The IB solver wrapped as an auxiliary estimator: fits the inner
/// auxiliary on the data and returns the resulting JIE.
pub struct JieEstimator<'a> {
    pub aux: &'a dyn AuxiliaryEstimator,
    pub sim: &'a dyn Simulator,
    pub config: IBConfig,
    pub base: SeedId,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub name: String,
}

impl AuxiliaryEstimator for JieEstimator<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self, data: &Dataset) -> usize {
        self.aux.dim(data)
    }

    fn fit(&self, data: &Dataset, _warm: Option<&[f64]>) -> Result<Fit> {
        let (_, res) = solve_jie_simulated(data, self.aux, self.sim, &self.config, &self.base, self.bounds.as_deref())?;
        let mut fit = Fit::converged(res.theta_hat.values, res.iterations);
        if !res.converged {
            fit.status = crate::estimators::FitStatus::MaxIterations { score_norm: res.residuals.last().copied().unwrap_or(f64::NAN) };
        }
        Ok(fit)
    }
}

/// Two-stage JIE: first the JIE of `π̂_obs`, then a second JIE that uses
/// the whole first-stage procedure as its auxiliary estimator. The second
/// stage simulates from seed block `j + 1`.
pub fn solve_jie_double(
    observed: &Dataset,
    aux: &dyn AuxiliaryEstimator,
    sim: &dyn Simulator,
    config: &IBConfig,
    base: &SeedId,
    bounds: Option<&[(f64, f64)]>,
) -> Result<(IBResult, IBResult)> {
    let (_, stage1) = solve_jie_simulated(observed, aux, sim, config, base, bounds)?;
    log::warn!("two-stage JIE: every second-stage evaluation runs {} inner IB solves", config.h);
    let inner = JieEstimator {
        aux,
        sim,
        config: IBConfig { final_defect: false, ..config.clone() },
        base: base.clone(),
        bounds: bounds.map(<[_]>::to_vec),
        name: format!("jie-{}", aux.name()),
    };
    let outer = SimulatedBinding { aux: &inner, sim, j: config.j + 1, h: config.h, base: base.clone() };
    let stage2 = solve_jie(&stage1.theta_hat.values, &outer, &IBConfig { warm_start: false, ..config.clone() }, bounds, None)?;
    Ok((stage1, stage2))
}

/// Nonlinear remainder `r(θ)` of the synthetic bias model, coordinatewise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Remainder {
    Zero,
    /// `scale · tanh(θ_k)`
    Tanh(f64),
    /// `scale · θ_k²`
    Square(f64),
}

impl Remainder {
    fn value(&self, t: f64) -> f64 {
        match *self {
            Remainder::Zero => 0.0,
            Remainder::Tanh(s) => s * t.tanh(),
            Remainder::Square(s) => s * t * t,
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match *self {
            Remainder::Zero => 0.0,
            Remainder::Tanh(s) => s * (1.0 - t.tanh().powi(2)),
            Remainder::Square(s) => 2.0 * s * t,
        }
    }
}

/// Auxiliary statistic with a prescribed bias structure:
/// `π̂(θ, ω) = θ + Mθ + s + c + Lθ + r(θ) + noise · z(ω)`, `z ~ N(0, I)`.
///
/// As a [`Simulator`] it emits `π̂` directly as the response vector of a
/// dataset with `p` rows and no covariates; pair it with
/// [`crate::estimators::Identity`].
#[derive(Debug, Clone)]
pub struct SyntheticBiasModel {
    pub m: DMatrix<f64>,
    pub s: DVector<f64>,
    pub l: DMatrix<f64>,
    pub c: DVector<f64>,
    pub r: Remainder,
    pub noise_scale: f64,
    design: std::sync::Arc<Design>,
}

impl SyntheticBiasModel {
    pub fn new(m: DMatrix<f64>, s: DVector<f64>, l: DMatrix<f64>, c: DVector<f64>, r: Remainder, noise_scale: f64) -> Result<Self> {
        let p = s.len();
        if m.shape() != (p, p) || l.shape() != (p, p) || c.len() != p || p == 0 {
            return Err(Error::Dimension { what: "synthetic model blocks", expected: p, got: m.nrows() });
        }
        if !(noise_scale >= 0.0) {
            return Err(Error::Domain("noise scale must be >= 0".into()));
        }
        let design = std::sync::Arc::new(Design::new(DMatrix::zeros(p, 0)));
        Ok(SyntheticBiasModel { m, s, l, c, r, noise_scale, design })
    }

    /// Affine bias `a(θ) = Mθ + s`, everything else zero.
    pub fn affine(m: DMatrix<f64>, s: DVector<f64>, noise_scale: f64) -> Result<Self> {
        let p = s.len();
        Self::new(m, s, DMatrix::zeros(p, p), DVector::zeros(p), Remainder::Zero, noise_scale)
    }

    pub fn p(&self) -> usize {
        self.s.len()
    }

    /// Noise-free statistic `θ + d(θ)`.
    pub fn expected(&self, theta: &[f64]) -> Vec<f64> {
        let t = DVector::from_column_slice(theta);
        let mut v = &t + &self.m * &t + &self.s + &self.c + &self.l * &t;
        for (k, x) in v.iter_mut().enumerate() {
            *x += self.r.value(theta[k]);
        }
        v.iter().cloned().collect()
    }

    /// Analytic Jacobian `I + M + L + diag(r′(θ))`.
    pub fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let p = self.p();
        let mut j = DMatrix::identity(p, p) + &self.m + &self.l;
        for k in 0..p {
            j[(k, k)] += self.r.derivative(theta[k]);
        }
        j
    }

    /// Fixed point `(I + M)⁻¹ (π̂_obs − s)` when `L = 0`, `c = 0`, `r = 0`.
    pub fn affine_solution(&self, pi_obs: &[f64]) -> Result<Vec<f64>> {
        let p = self.p();
        let a = DMatrix::identity(p, p) + &self.m + &self.l;
        let rhs = DVector::from_column_slice(pi_obs) - &self.s - &self.c;
        a.lu().solve(&rhs).map(|v| v.iter().cloned().collect()).ok_or_else(|| Error::Singular("I + M".into()))
    }
}

impl Simulator for SyntheticBiasModel {
    fn dim(&self) -> usize {
        self.p()
    }

    fn simulate(&self, theta: &[f64], seed: &SeedId) -> Result<Dataset> {
        if theta.len() != self.p() {
            return Err(Error::Dimension { what: "synthetic theta", expected: self.p(), got: theta.len() });
        }
        let mut y = self.expected(theta);
        if self.noise_scale > 0.0 {
            let mut st = seed.stream();
            for v in y.iter_mut() {
                *v += self.noise_scale * st.standard_normal();
            }
        }
        Dataset::new(y, std::sync::Arc::clone(&self.design))
    }
}
