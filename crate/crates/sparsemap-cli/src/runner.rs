//! Parallel Monte-Carlo trial execution.
//!
//! Per-trial seeds are derived up front from the master seed, the sweep
//! point, and the trial index, so a run's outputs are identical for any
//! worker count — scheduling can never change which random numbers a trial
//! sees. Within a trial, every algorithm is handed the same instance
//! `(Φ, x, w)`, matching how the algorithms are compared in practice.

use std::time::Instant;

use rayon::prelude::*;
use sparsemap::ensemble::{
    derive_seed, measure, NoiseModel, SensingMatrix, SignalPrior, SparseSignal,
};
use sparsemap::recovery::{recover, Algorithm, AlgorithmConfig, StopRule};

/// Seed stream tags; disjoint streams per purpose.
const STREAM_PHI: u64 = 0x50;
const STREAM_SIGNAL: u64 = 0x51;
const STREAM_NOISE: u64 = 0x52;

/// Exact-recovery threshold on the squared error.
pub const SUCCESS_EPS: f64 = 1e-12;

/// Outcome of one algorithm on one trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub experiment: &'static str,
    pub algorithm: &'static str,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub snr_db: Option<f64>,
    pub trial: usize,
    /// `||x - x_hat||^2 <= 1e-12`.
    pub success: bool,
    /// `||x_hat - x||^2 / ||x||^2`.
    pub sq_err_ratio: f64,
    pub seconds: f64,
    pub iterations: usize,
}

/// How the per-trial noise variance is chosen.
#[derive(Debug, Clone, Copy)]
pub enum NoiseSpec {
    /// Fixed per-component variance.
    Fixed(f64),
    /// Derived from the realized signal energy: `sigma_w^2 = ||Φx||^2 / snr`,
    /// with least-squares replaced by ridge at `1/snr`. An infinite SNR is
    /// the noise-free sentinel.
    FromSnrDb(f64),
}

/// One sweep point: fixed dimensions and a batch of trials.
#[derive(Debug, Clone)]
pub struct PointSpec<'a> {
    pub experiment: &'static str,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub prior: &'a SignalPrior,
    pub noise: NoiseSpec,
    pub algorithms: &'a [Algorithm],
    pub gomp_width: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Distinguishes sweep points so their random streams never collide.
    pub point_id: u64,
}

fn algorithm_config(
    spec: &PointSpec<'_>,
    algorithm: Algorithm,
    noise: NoiseModel,
    ridge_snr: Option<f64>,
    truth: &SparseSignal,
) -> AlgorithmConfig {
    let mut cfg = AlgorithmConfig::new(algorithm, spec.k, spec.prior.clone(), noise);
    cfg.width = spec.gomp_width;
    cfg.ridge_snr = ridge_snr;
    cfg.stopping = vec![StopRule::OracleError { eps: SUCCESS_EPS, truth: truth.clone() }];
    cfg
}

/// Runs every algorithm over `trials` independent instances and returns the
/// records grouped by trial then algorithm (a deterministic order).
pub fn run_point(spec: &PointSpec<'_>) -> anyhow::Result<Vec<TrialRecord>> {
    let snr_db = match spec.noise {
        NoiseSpec::FromSnrDb(db) => Some(db),
        NoiseSpec::Fixed(_) => None,
    };
    let results: Result<Vec<Vec<TrialRecord>>, sparsemap::Error> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| run_trial(spec, trial, snr_db))
        .collect();
    Ok(results?.into_iter().flatten().collect())
}

fn run_trial(
    spec: &PointSpec<'_>,
    trial: usize,
    snr_db: Option<f64>,
) -> Result<Vec<TrialRecord>, sparsemap::Error> {
    let words = |stream: u64| [stream, spec.point_id, trial as u64];
    let phi = SensingMatrix::gaussian(
        spec.m,
        spec.n,
        derive_seed(spec.master_seed, &words(STREAM_PHI)),
    );
    let x = SparseSignal::generate(
        spec.n,
        spec.k,
        spec.prior,
        derive_seed(spec.master_seed, &words(STREAM_SIGNAL)),
    )?;

    let (noise, ridge_snr) = match spec.noise {
        NoiseSpec::Fixed(sigma_w2) => (NoiseModel::new(sigma_w2, spec.m), None),
        NoiseSpec::FromSnrDb(db) if db.is_infinite() => (NoiseModel::noiseless(spec.m), None),
        NoiseSpec::FromSnrDb(db) => {
            let snr = 10f64.powf(db / 10.0);
            // The SNR definition uses the realized energy of this trial's
            // Φx, not its expectation.
            let clean = measure(&phi, &x, &NoiseModel::noiseless(spec.m), 0)?;
            let energy: f64 = clean.iter().map(|v| v * v).sum();
            (NoiseModel::new(energy / snr, spec.m), Some(snr))
        }
    };
    let y = measure(&phi, &x, &noise, derive_seed(spec.master_seed, &words(STREAM_NOISE)))?;

    let norm_sq = x.norm_sq();
    let mut records = Vec::with_capacity(spec.algorithms.len());
    for &algorithm in spec.algorithms {
        let cfg = algorithm_config(spec, algorithm, noise, ridge_snr, &x);
        let started = Instant::now();
        let result = recover(&y, &phi, &cfg)?;
        let seconds = started.elapsed().as_secs_f64();
        let sq_err = result.squared_error(&x);
        let sq_err_ratio = if norm_sq > 0.0 {
            sq_err / norm_sq
        } else if sq_err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        records.push(TrialRecord {
            experiment: spec.experiment,
            algorithm: algorithm.label(),
            k: spec.k,
            m: spec.m,
            n: spec.n,
            snr_db,
            trial,
            success: sq_err <= SUCCESS_EPS,
            sq_err_ratio,
            seconds,
            iterations: result.iterations,
        });
    }
    Ok(records)
}

/// Builds the worker pool; `None` uses all cores.
pub fn thread_pool(threads: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?)
}
