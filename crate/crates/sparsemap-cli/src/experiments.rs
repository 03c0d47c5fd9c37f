//! The benchmark experiments: recovery probability versus sparsity, NMSE
//! versus SNR, the measurement-scaling sweep against the analytic bound, and
//! the runtime comparison table. Each writes one CSV; with a fixed master
//! seed every column except the runtime ones is byte-identical across runs
//! and worker counts.

use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::Context;
use sparsemap::oracle::recovery_lower_bound;
use sparsemap::recovery::Algorithm;

use crate::config::{prior_label, Experiment, ExperimentConfig};
use crate::runner::{run_point, thread_pool, NoiseSpec, PointSpec, TrialRecord};

fn open_out(cfg: &ExperimentConfig) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(&cfg.out)
        .with_context(|| format!("cannot write output file {}", cfg.out.display()))?;
    Ok(BufWriter::new(file))
}

/// Formats an f64 with the shortest round-trip representation (plain
/// decimal), which keeps CSVs deterministic.
fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

struct AlgoSummary {
    success_rate: f64,
    mean_seconds: f64,
    mean_ratio: f64,
    median_seconds: f64,
}

fn summarize(records: &[TrialRecord], algorithm: Algorithm) -> AlgoSummary {
    let label = algorithm.label();
    let mut successes = 0usize;
    let mut seconds = Vec::new();
    let mut ratio_sum = 0.0;
    for r in records.iter().filter(|r| r.algorithm == label) {
        if r.success {
            successes += 1;
        }
        ratio_sum += r.sq_err_ratio;
        seconds.push(r.seconds);
    }
    let count = seconds.len().max(1);
    let mean_seconds = seconds.iter().sum::<f64>() / count as f64;
    seconds.sort_by(f64::total_cmp);
    let median_seconds = if seconds.is_empty() {
        0.0
    } else if seconds.len() % 2 == 1 {
        seconds[seconds.len() / 2]
    } else {
        0.5 * (seconds[seconds.len() / 2 - 1] + seconds[seconds.len() / 2])
    };
    AlgoSummary {
        success_rate: successes as f64 / count as f64,
        mean_seconds,
        mean_ratio: ratio_sum / count as f64,
        median_seconds,
    }
}

/// Success rate per sparsity level per algorithm.
pub fn run_recovery_prob(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let pool = thread_pool(cfg.threads)?;
    let mut out = open_out(cfg)?;
    writeln!(out, "experiment,algorithm,prior,K,M,N,trials,success_rate,mean_runtime_s")?;
    let prior = prior_label(&cfg.prior);
    for (idx, &k) in cfg.k_values.iter().enumerate() {
        let spec = PointSpec {
            experiment: "recovery_prob",
            m: cfg.m,
            n: cfg.n,
            k,
            prior: &cfg.prior,
            noise: NoiseSpec::Fixed(cfg.sigma_w2),
            algorithms: &cfg.algorithms,
            gomp_width: cfg.gomp_width,
            trials: cfg.trials,
            master_seed: cfg.master_seed,
            point_id: idx as u64,
        };
        let records = pool.install(|| run_point(&spec))?;
        for &algorithm in &cfg.algorithms {
            let s = summarize(&records, algorithm);
            writeln!(
                out,
                "recovery_prob,{},{},{},{},{},{},{},{:.6}",
                algorithm.label(),
                prior,
                k,
                cfg.m,
                cfg.n,
                cfg.trials,
                num(s.success_rate),
                s.mean_seconds,
            )?;
        }
    }
    Ok(())
}

/// NMSE (dB) per SNR point per algorithm, with ridge estimation at `1/SNR`.
pub fn run_nmse(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let pool = thread_pool(cfg.threads)?;
    let mut out = open_out(cfg)?;
    writeln!(out, "experiment,algorithm,prior,K,M,N,trials,snr_db,nmse_db,mean_runtime_s")?;
    let prior = prior_label(&cfg.prior);
    let k = cfg.k_values[0];
    for (idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let spec = PointSpec {
            experiment: "nmse",
            m: cfg.m,
            n: cfg.n,
            k,
            prior: &cfg.prior,
            noise: NoiseSpec::FromSnrDb(snr_db),
            algorithms: &cfg.algorithms,
            gomp_width: cfg.gomp_width,
            trials: cfg.trials,
            master_seed: cfg.master_seed,
            point_id: idx as u64,
        };
        let records = pool.install(|| run_point(&spec))?;
        for &algorithm in &cfg.algorithms {
            let s = summarize(&records, algorithm);
            let nmse_db = 10.0 * s.mean_ratio.log10();
            writeln!(
                out,
                "nmse,{},{},{},{},{},{},{},{},{:.6}",
                algorithm.label(),
                prior,
                k,
                cfg.m,
                cfg.n,
                cfg.trials,
                num(snr_db),
                num(nmse_db),
                s.mean_seconds,
            )?;
        }
    }
    Ok(())
}

/// MAP-MP success rate as the measurement count grows, against the analytic
/// lower bound evaluated with the normalized noise variance `M sigma_w^2`.
pub fn run_scaling(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let pool = thread_pool(cfg.threads)?;
    let mut out = open_out(cfg)?;
    writeln!(out, "M,K,N,sigma_w2,empirical_success,theory_lower_bound")?;
    let k = cfg.k_values[0];
    for (idx, &m) in cfg.m_values.iter().enumerate() {
        let spec = PointSpec {
            experiment: "scaling",
            m,
            n: cfg.n,
            k,
            prior: &cfg.prior,
            noise: NoiseSpec::Fixed(cfg.sigma_w2),
            algorithms: &cfg.algorithms,
            gomp_width: cfg.gomp_width,
            trials: cfg.trials,
            master_seed: cfg.master_seed,
            point_id: idx as u64,
        };
        let records = pool.install(|| run_point(&spec))?;
        let s = summarize(&records, Algorithm::MapMp);
        let bound = recovery_lower_bound(m, k, cfg.n, m as f64 * cfg.sigma_w2);
        writeln!(
            out,
            "{},{},{},{},{},{:e}",
            m,
            k,
            cfg.n,
            num(cfg.sigma_w2),
            num(s.success_rate),
            bound,
        )?;
    }
    Ok(())
}

/// Median runtimes at one operating point plus speedups over a baseline row.
pub fn run_runtime_table(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let pool = thread_pool(cfg.threads)?;
    let mut out = open_out(cfg)?;
    writeln!(out, "experiment,algorithm,prior,K,M,N,trials,median_runtime_s,speedup")?;
    let prior = prior_label(&cfg.prior);
    let k = cfg.k_values[0];
    let spec = PointSpec {
        experiment: "runtime",
        m: cfg.m,
        n: cfg.n,
        k,
        prior: &cfg.prior,
        noise: NoiseSpec::Fixed(cfg.sigma_w2),
        algorithms: &cfg.algorithms,
        gomp_width: cfg.gomp_width,
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        point_id: 0,
    };
    let records = pool.install(|| run_point(&spec))?;
    let baseline = summarize(&records, cfg.baseline).median_seconds;
    for &algorithm in &cfg.algorithms {
        let s = summarize(&records, algorithm);
        let speedup = if s.median_seconds > 0.0 { baseline / s.median_seconds } else { 0.0 };
        writeln!(
            out,
            "runtime,{},{},{},{},{},{},{:.6},{:.4}",
            algorithm.label(),
            prior,
            k,
            cfg.m,
            cfg.n,
            cfg.trials,
            s.median_seconds,
            speedup,
        )?;
    }
    Ok(())
}

/// Entry point used by `main` for the `bench` subcommands.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    match cfg.experiment {
        Experiment::RecoveryProb => run_recovery_prob(cfg),
        Experiment::Nmse => run_nmse(cfg),
        Experiment::Scaling => run_scaling(cfg),
        Experiment::Runtime => run_runtime_table(cfg),
        _ => anyhow::bail!("not a bench experiment"),
    }
}
