//! Replication loop, deterministic parallel reduction and summaries.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Level, SimConfig};
use super::sample::{Sampler, StreamFactory};
use crate::canonical::{canonicalize, sufficient_stats, SufficientStats};
use crate::error::{EstimatorError, SimError};
use crate::estimators::{Estimator, EvalContext};

/// Replications per work unit. Results depend on this value, not on the
/// number of workers.
pub const CHUNK: u64 = 4096;

/// Environment variable read for the worker count when none is given.
pub const THREADS_ENV: &str = "EIVREG_THREADS";

/// Independent mode gives estimator `j` the streams `j·2⁴⁰ + i`.
const ESTIMATOR_STRIDE: u64 = 1 << 40;

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    /// Standard error of the mean; `None` with fewer than two values.
    pub fn se(&self) -> Option<f64> {
        (self.n >= 2).then(|| (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    err: Welford,
    sq: Welford,
    failures: u64,
}

impl Acc {
    fn push(&mut self, d: f64) {
        self.err.push(d);
        self.sq.push(d * d);
    }

    fn merge(&mut self, other: &Acc) {
        self.err.merge(&other.err);
        self.sq.merge(&other.sq);
        self.failures += other.failures;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub bias: f64,
    pub se_bias: Option<f64>,
    pub mse: f64,
    pub se_mse: Option<f64>,
    pub failures: u64,
    pub successes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub p: usize,
    pub m: usize,
    pub lambda: f64,
    pub rows: Vec<EstimatorSummary>,
}

impl SimResult {
    pub fn row(&self, id: &str) -> Option<&EstimatorSummary> {
        self.rows.iter().find(|r| r.estimator.eq_ignore_ascii_case(id))
    }
}

/// Mean and standard error of `MSE(a) − MSE(b)` under common random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedDiff {
    pub mean: f64,
    pub se: Option<f64>,
    /// Replications where either estimator failed; excluded from both.
    pub failures: u64,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    sampler: Sampler,
    streams: StreamFactory,
    ctx: EvalContext,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        Ok(Self { cfg, sampler: Sampler::new(cfg), streams: StreamFactory::new(cfg.seed), ctx: cfg.eval_context()? })
    }

    /// `None` for a draw that cannot be reduced, which has probability zero.
    fn draw(&self, stream: u64) -> Option<SufficientStats> {
        let mut rng = self.streams.stream(stream);
        match self.cfg.level {
            Level::Canonical => Some(self.sampler.stats(&mut rng)),
            Level::Raw => sufficient_stats(&canonicalize(&self.sampler.raw(&mut rng))).ok(),
        }
    }

    /// Error of one estimate, `None` on a pole.
    fn error(&self, est: &Estimator, st: &SufficientStats) -> Result<Option<f64>, SimError> {
        match est.slope(st, &self.ctx) {
            Ok(b) if b.is_finite() => Ok(Some(b - self.cfg.beta)),
            Ok(_) | Err(EstimatorError::Singular { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn chunk(&self, ests: &[Estimator], c: u64) -> Result<Vec<Acc>, SimError> {
        let mut accs = vec![Acc::default(); ests.len()];
        let end = ((c + 1) * CHUNK).min(self.cfg.reps);
        for i in c * CHUNK..end {
            if self.cfg.paired {
                let st = self.draw(i);
                for (est, acc) in ests.iter().zip(&mut accs) {
                    self.record(est, st.as_ref(), acc)?;
                }
            } else {
                for (j, (est, acc)) in ests.iter().zip(&mut accs).enumerate() {
                    let st = self.draw(j as u64 * ESTIMATOR_STRIDE + i);
                    self.record(est, st.as_ref(), acc)?;
                }
            }
        }
        Ok(accs)
    }

    fn record(&self, est: &Estimator, st: Option<&SufficientStats>, acc: &mut Acc) -> Result<(), SimError> {
        match st.map(|st| self.error(est, st)).transpose()?.flatten() {
            Some(d) => acc.push(d),
            None => acc.failures += 1,
        }
        Ok(())
    }
}

fn chunks(reps: u64) -> u64 {
    reps.div_ceil(CHUNK)
}

/// Worker count from the argument, then [`THREADS_ENV`]; `None` means the
/// global pool.
fn resolve_workers(workers: Option<usize>) -> Result<Option<usize>, SimError> {
    if let Some(w) = workers {
        return Ok(Some(w));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| SimError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    match resolve_workers(workers)? {
        None => Ok(f()),
        Some(0) => Err(SimError::Config("worker count must be positive".into())),
        Some(n) => {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| SimError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run_study(cfg: &SimConfig) -> Result<SimResult, SimError> {
    run_study_with_workers(cfg, None)
}

/// Runs every requested estimator over `cfg.reps` replications. The result is
/// bit-identical for any worker count.
pub fn run_study_with_workers(cfg: &SimConfig, workers: Option<usize>) -> Result<SimResult, SimError> {
    let engine = Engine::new(cfg)?;
    let ests = cfg.parsed_estimators()?;
    let parts: Vec<Result<Vec<Acc>, SimError>> =
        with_pool(workers, || (0..chunks(cfg.reps)).into_par_iter().map(|c| engine.chunk(&ests, c)).collect())?;
    let mut total = vec![Acc::default(); ests.len()];
    for part in parts {
        for (t, a) in total.iter_mut().zip(part?) {
            t.merge(&a);
        }
    }
    let mut rows = Vec::with_capacity(ests.len());
    for (est, acc) in ests.iter().zip(total) {
        if acc.err.n == 0 {
            return Err(SimError::AllReplicationsFailed(est.id()));
        }
        rows.push(EstimatorSummary {
            estimator: est.id(),
            bias: acc.err.mean,
            se_bias: acc.err.se(),
            mse: acc.sq.mean,
            se_mse: acc.sq.se(),
            failures: acc.failures,
            successes: acc.err.n,
        });
    }
    Ok(SimResult { config: cfg.clone(), p: cfg.p(), m: cfg.m(), lambda: cfg.lambda(), rows })
}

/// `MSE(a) − MSE(b)` from the same draws, replication `i` on stream `i`.
pub fn paired_mse_difference(
    cfg: &SimConfig,
    a: Estimator,
    b: Estimator,
    workers: Option<usize>,
) -> Result<PairedDiff, SimError> {
    let engine = Engine::new(cfg)?;
    let chunk = |c: u64| -> Result<(Welford, u64), SimError> {
        let mut w = Welford::default();
        let mut failures = 0;
        for i in c * CHUNK..((c + 1) * CHUNK).min(cfg.reps) {
            let Some(st) = engine.draw(i) else {
                failures += 1;
                continue;
            };
            match (engine.error(&a, &st)?, engine.error(&b, &st)?) {
                (Some(da), Some(db)) => w.push(da * da - db * db),
                _ => failures += 1,
            }
        }
        Ok((w, failures))
    };
    let parts: Vec<Result<(Welford, u64), SimError>> =
        with_pool(workers, || (0..chunks(cfg.reps)).into_par_iter().map(chunk).collect())?;
    let mut total = Welford::default();
    let mut failures = 0;
    for part in parts {
        let (w, f) = part?;
        total.merge(&w);
        failures += f;
    }
    if total.n == 0 {
        return Err(SimError::AllReplicationsFailed(format!("{a} - {b}")));
    }
    Ok(PairedDiff { mean: total.mean, se: total.se(), failures })
}
