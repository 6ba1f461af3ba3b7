//! Monte-Carlo study runner.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::{ContaminationKind, RemainderSpec, StudyConfig, StudyKind};
use super::plots::emit_plots;
use crate::csvfmt::fmt_f64;
use crate::error::{Error, Result};
use crate::estimators::{estimator_by_name, AuxiliaryEstimator};
use crate::ibcore::{solve_jie_simulated, IBResult, Remainder, SyntheticBiasModel};
use crate::inference::{mc_summary, McSummary};
use crate::models::{
    contaminate_misclassify, contaminate_random, make_design, mean_logistic, Dataset, FlipRule, LinearSimulator, LogisticSimulator, NegBinSimulator,
    Simulator,
};
use crate::seedstream::{seed_for_design, seed_for_observation, SeedId};

/// Path component of the per-replication IB seed base.
pub const IB_BLOCK: u64 = 4;

/// Path component of the random-contamination stream.
pub const CONTAMINATION: u64 = 5;

/// IB diagnostics of one JIE estimator, aggregated over replications.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IbStats {
    pub mean_iterations: f64,
    pub nonconverged: usize,
    /// Of the non-converged runs, those stopped by the stall rule.
    pub stalled: usize,
    pub flagged_fits: usize,
    pub failed_fits: usize,
    pub projections: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub name: String,
    /// `(replication, estimate)`, replications 1-based and ascending.
    pub rows: Vec<(usize, Vec<f64>)>,
    pub summary: McSummary,
    pub ib: Option<IbStats>,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub truth: Vec<f64>,
    pub results: Vec<EstimatorResult>,
    /// `(replication, reason)` of skipped replications.
    pub failures: Vec<(usize, String)>,
    pub wall_clock: Duration,
    /// Mean observed response of logistic studies.
    pub event_rate: Option<f64>,
}

impl StudyReport {
    pub fn result(&self, name: &str) -> Option<&EstimatorResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

struct IbRun {
    iterations: usize,
    converged: bool,
    stalled: bool,
    flagged: usize,
    failed: usize,
    projections: usize,
}

impl From<&IBResult> for IbRun {
    fn from(r: &IBResult) -> Self {
        IbRun {
            iterations: r.iterations,
            converged: r.converged,
            stalled: r.stalled,
            flagged: r.flagged_fits,
            failed: r.failed_fits,
            projections: r.projections,
        }
    }
}

struct Replication {
    estimates: Vec<(Vec<f64>, Option<IbRun>)>,
    event_rate: Option<f64>,
}

/// Estimators instantiated once and shared by all workers.
struct Plan {
    entries: Vec<(String, bool, Box<dyn AuxiliaryEstimator>)>,
}

impl Plan {
    fn new(cfg: &StudyConfig) -> Result<Self> {
        let params = cfg.estimator_params();
        let opts = cfg.fit_options();
        let entries = cfg
            .estimators
            .iter()
            .map(|name| {
                let (jie, aux) = match name.strip_prefix("jie-") {
                    Some(rest) => (true, rest),
                    None => (false, name.as_str()),
                };
                Ok((name.clone(), jie, estimator_by_name(aux, &params, &opts)?))
            })
            .collect::<Result<_>>()?;
        Ok(Plan { entries })
    }
}

fn synthetic_model(cfg: &StudyConfig) -> Result<SyntheticBiasModel> {
    let s = cfg.synthetic.as_ref().ok_or_else(|| Error::Config("missing [synthetic] section".into()))?;
    let p = cfg.p;
    let rows = |m: &Vec<Vec<f64>>| DMatrix::from_row_iterator(p, p, m.iter().flatten().cloned());
    let r = match s.remainder {
        RemainderSpec::Zero => Remainder::Zero,
        RemainderSpec::Tanh(a) => Remainder::Tanh(a),
        RemainderSpec::Square(a) => Remainder::Square(a),
    };
    SyntheticBiasModel::new(
        rows(&s.m),
        DVector::from_vec(s.s.clone()),
        rows(&s.l),
        DVector::from_vec(s.c.clone()),
        r,
        s.noise_scale / (cfg.n as f64).sqrt(),
    )
}

/// Data-generating process of replication `r` (its design is fixed by `r`).
pub fn build_simulator(cfg: &StudyConfig, r: usize) -> Result<Box<dyn Simulator>> {
    let master = SeedId::new(cfg.master_seed);
    if cfg.study == StudyKind::Synthetic {
        return Ok(Box::new(synthetic_model(cfg)?));
    }
    let design = Arc::new(make_design(&cfg.design_spec(), &seed_for_design(&master, r as u64))?);
    Ok(match cfg.study {
        StudyKind::Logistic => Box::new(LogisticSimulator { design }),
        StudyKind::Negbin => Box::new(NegBinSimulator { design }),
        StudyKind::Lasso => Box::new(LinearSimulator { design, sigma: cfg.sigma }),
        StudyKind::Synthetic => unreachable!(),
    })
}

/// Observed sample of replication `r`, contaminated if configured.
pub fn observed_sample(cfg: &StudyConfig, sim: &dyn Simulator, r: usize) -> Result<Dataset> {
    let master = SeedId::new(cfg.master_seed);
    let seed = seed_for_observation(&master, r as u64);
    let data = sim.simulate(&cfg.truth(), &seed)?;
    if cfg.contamination_rate == 0.0 {
        return Ok(data);
    }
    let y = match cfg.contamination {
        ContaminationKind::Misclassify | ContaminationKind::MisclassifySurprising => {
            let mu = mean_logistic(&cfg.theta0, data.x())?;
            let rule = match cfg.contamination {
                ContaminationKind::Misclassify => FlipRule::Confident,
                _ => FlipRule::Surprising,
            };
            contaminate_misclassify(&data.y, &mu, cfg.contamination_rate, rule)?
        }
        ContaminationKind::Random => contaminate_random(&data.y, cfg.contamination_rate, &seed.derive(&[CONTAMINATION]))?,
    };
    data.with_responses(y)
}

/// Seed base of the IB simulations in replication `r`.
pub fn ib_base(cfg: &StudyConfig, r: usize) -> SeedId {
    SeedId::new(cfg.master_seed).derive(&[IB_BLOCK, r as u64])
}

fn run_replication(cfg: &StudyConfig, plan: &Plan, r: usize) -> Result<Replication> {
    let sim = build_simulator(cfg, r)?;
    let observed = observed_sample(cfg, sim.as_ref(), r)?;
    let ib = cfg.ib_config();
    let bounds = cfg.bounds();
    let base = ib_base(cfg, r);
    let mut estimates = Vec::with_capacity(plan.entries.len());
    for (name, jie, aux) in &plan.entries {
        let out = if *jie {
            let (_, res) = solve_jie_simulated(&observed, aux.as_ref(), sim.as_ref(), &ib, &base, bounds.as_deref())
                .map_err(|e| Error::Domain(format!("{name}: {e}")))?;
            let run = IbRun::from(&res);
            (res.theta_hat.values, Some(run))
        } else {
            let fit = aux.fit(&observed, None).map_err(|e| Error::Domain(format!("{name}: {e}")))?;
            (fit.theta, None)
        };
        if let Some(k) = out.0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "estimate", coord: k });
        }
        estimates.push(out);
    }
    let event_rate = (cfg.study == StudyKind::Logistic).then(|| observed.y.iter().sum::<f64>() / observed.n() as f64);
    Ok(Replication { estimates, event_rate })
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every replication and summarizes. Replications that fail are
/// skipped; more than 5% failures abort the study.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let start = Instant::now();
    let plan = Plan::new(cfg)?;
    let outcomes: Vec<Result<Replication>> = in_pool(cfg.workers, || (1..=cfg.r).into_par_iter().map(|r| run_replication(cfg, &plan, r)).collect())?;

    let truth = cfg.truth();
    let mut failures = Vec::new();
    let mut rows: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); plan.entries.len()];
    let mut runs: Vec<Vec<IbRun>> = (0..plan.entries.len()).map(|_| Vec::new()).collect();
    let mut rates = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let r = i + 1;
        match outcome {
            Ok(rep) => {
                rates.extend(rep.event_rate);
                for (k, (est, run)) in rep.estimates.into_iter().enumerate() {
                    rows[k].push((r, est));
                    runs[k].extend(run);
                }
            }
            Err(e) => {
                log::warn!("replication {r} skipped: {e}");
                failures.push((r, e.to_string()));
            }
        }
    }
    if failures.len() * 20 > cfg.r || cfg.r - failures.len() < 2 {
        let detail: Vec<String> = failures.iter().take(5).map(|(r, e)| format!("replication {r}: {e}")).collect();
        log::error!("too many failed replications; first: {}", detail.join("; "));
        return Err(Error::TooManyFailures { failed: failures.len(), total: cfg.r });
    }

    let mut results = Vec::with_capacity(plan.entries.len());
    for (k, (name, jie, _)) in plan.entries.iter().enumerate() {
        let est: Vec<Vec<f64>> = rows[k].iter().map(|(_, e)| e.clone()).collect();
        let summary = mc_summary(&est, &truth)?;
        let ib = jie.then(|| {
            let rs = &runs[k];
            IbStats {
                mean_iterations: rs.iter().map(|x| x.iterations as f64).sum::<f64>() / rs.len() as f64,
                nonconverged: rs.iter().filter(|x| !x.converged).count(),
                stalled: rs.iter().filter(|x| x.stalled).count(),
                flagged_fits: rs.iter().map(|x| x.flagged).sum(),
                failed_fits: rs.iter().map(|x| x.failed).sum(),
                projections: rs.iter().map(|x| x.projections).sum(),
            }
        });
        results.push(EstimatorResult { name: name.clone(), rows: std::mem::take(&mut rows[k]), summary, ib });
    }
    debug_assert!(results.iter().all(|r| r.rows.len() == cfg.r - failures.len()));

    let event_rate = (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
    if let (Some(rate), "II") = (event_rate, cfg.setting.as_str()) {
        if !(0.85..=0.95).contains(&rate) {
            log::warn!("Setting II event rate {rate:.3} outside [0.85, 0.95]");
        }
    }
    Ok(StudyReport { config: cfg.clone(), truth, results, failures, wall_clock: start.elapsed(), event_rate })
}

/// IB trace of one JIE estimator on replication `cfg.trace_replication`.
/// `estimator` defaults to the first `jie-*` entry.
pub fn trace_study(cfg: &StudyConfig, estimator: Option<&str>) -> Result<(String, IBResult)> {
    cfg.validate()?;
    let name = match estimator {
        Some(e) => e.to_string(),
        None => cfg
            .estimators
            .iter()
            .find(|e| e.starts_with("jie-"))
            .cloned()
            .ok_or_else(|| Error::Config("key `estimators`: no jie-* estimator to trace".into()))?,
    };
    let aux_name = name.strip_prefix("jie-").ok_or_else(|| Error::Config(format!("key `estimators`: `{name}` is not a jie-* estimator")))?;
    let aux = estimator_by_name(aux_name, &cfg.estimator_params(), &cfg.fit_options())?;
    let r = cfg.trace_replication;
    let sim = build_simulator(cfg, r)?;
    let observed = observed_sample(cfg, sim.as_ref(), r)?;
    let ib = crate::ibcore::IBConfig { final_defect: true, ..cfg.ib_config() };
    let bounds = cfg.bounds();
    let (_, res) = in_pool(cfg.workers, || solve_jie_simulated(&observed, aux.as_ref(), sim.as_ref(), &ib, &ib_base(cfg, r), bounds.as_deref()))??;
    Ok((name, res))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?))
}

/// `replication,estimator,coord,value`
pub fn write_estimates_csv<W: Write>(report: &StudyReport, mut w: W) -> Result<()> {
    writeln!(w, "replication,estimator,coord,value")?;
    let reps: Vec<usize> = report.results.first().map(|r| r.rows.iter().map(|x| x.0).collect()).unwrap_or_default();
    for (i, rep) in reps.iter().enumerate() {
        for res in &report.results {
            for (c, v) in res.rows[i].1.iter().enumerate() {
                writeln!(w, "{rep},{},{},{}", res.name, c + 1, fmt_f64(*v))?;
            }
        }
    }
    Ok(())
}

/// `estimator,coord,bias,rmse,mc_se`
pub fn write_summary_csv<W: Write>(report: &StudyReport, mut w: W) -> Result<()> {
    writeln!(w, "estimator,coord,bias,rmse,mc_se")?;
    for res in &report.results {
        let s = &res.summary;
        for c in 0..s.bias.len() {
            writeln!(w, "{},{},{},{},{}", res.name, c + 1, fmt_f64(s.bias[c]), fmt_f64(s.rmse[c]), fmt_f64(s.mc_se[c]))?;
        }
    }
    Ok(())
}

/// Human-readable run statistics, including wall-clock time.
pub fn write_report_txt<W: Write>(report: &StudyReport, mut w: W) -> Result<()> {
    let cfg = &report.config;
    writeln!(w, "study: {:?}, setting: {}", cfg.study, cfg.setting)?;
    writeln!(w, "master_seed: {}", cfg.master_seed)?;
    writeln!(w, "replications: {} used, {} failed", cfg.r - report.failures.len(), report.failures.len())?;
    for (r, e) in &report.failures {
        writeln!(w, "  failed replication {r}: {e}")?;
    }
    if let Some(rate) = report.event_rate {
        writeln!(w, "event rate: {rate:.4}")?;
    }
    for res in &report.results {
        write!(w, "{}: zero proportion {:.2}%", res.name, res.summary.zero_proportion)?;
        if let Some(ib) = &res.ib {
            write!(
                w,
                ", mean IB iterations {:.2}, not converged {} (stalled {}), flagged inner fits {}, failed inner fits {}, projections {}",
                ib.mean_iterations, ib.nonconverged, ib.stalled, ib.flagged_fits, ib.failed_fits, ib.projections
            )?;
        }
        writeln!(w)?;
    }
    writeln!(w, "wall clock: {:.3} s", report.wall_clock.as_secs_f64())?;
    Ok(())
}

/// Writes `estimates.csv`, `summary.csv`, `config.toml`, `report.txt` and
/// the SVG panels into `dir`. Returns the written paths.
pub fn write_outputs(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let path = dir.join("estimates.csv");
    let mut w = create(&path)?;
    write_estimates_csv(report, &mut w)?;
    w.flush()?;
    written.push(path);
    let path = dir.join("summary.csv");
    let mut w = create(&path)?;
    write_summary_csv(report, &mut w)?;
    w.flush()?;
    written.push(path);
    let path = dir.join("config.toml");
    fs::write(&path, report.config.to_toml_string())?;
    written.push(path);
    let path = dir.join("report.txt");
    let mut w = create(&path)?;
    write_report_txt(report, &mut w)?;
    w.flush()?;
    written.push(path);
    written.extend(emit_plots(report, dir)?);
    Ok(written)
}
