//! Binary-image recovery demo: compress a PBM bitmap through a random
//! Gaussian projection and reconstruct it with each configured algorithm.

use std::path::PathBuf;

use anyhow::Context;
use sparsemap::ensemble::{derive_seed, measure, NoiseModel, SensingMatrix, SignalPrior, SparseSignal};
use sparsemap::recovery::{recover, Algorithm, AlgorithmConfig, StopRule};

use crate::pbm::{self, Bitmap};

/// Threshold on recovered coefficients when mapping back to bits.
const BIT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ImageDemoConfig {
    pub input: PathBuf,
    pub m: usize,
    pub sigma_w2: f64,
    pub algorithms: Vec<Algorithm>,
    pub gomp_width: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ImageResult {
    pub algorithm: &'static str,
    pub precision: f64,
    pub recall: f64,
    pub exact: bool,
    pub output_path: PathBuf,
}

/// Runs the demo: writes `recovered_<algo>.pbm` per algorithm plus a
/// `metrics.csv` into `out_dir`, and returns the per-algorithm metrics.
pub fn run_image_demo(cfg: &ImageDemoConfig) -> anyhow::Result<Vec<ImageResult>> {
    let data = std::fs::read(&cfg.input)
        .with_context(|| format!("cannot read {}", cfg.input.display()))?;
    let bitmap = pbm::parse(&data).map_err(anyhow::Error::from)?;
    let results = recover_bitmap(&bitmap, cfg)?;

    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let metrics_path = cfg.out_dir.join("metrics.csv");
    let mut csv = String::from("algorithm,width,height,K,M,N,sigma_w2,precision,recall,exact\n");
    let k = bitmap.bits.iter().filter(|b| **b).count();
    let n = bitmap.width * bitmap.height;
    for r in &results {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.algorithm,
            bitmap.width,
            bitmap.height,
            k,
            cfg.m,
            n,
            cfg.sigma_w2,
            r.precision,
            r.recall,
            if r.exact { 1 } else { 0 },
        ));
    }
    std::fs::write(&metrics_path, csv)
        .with_context(|| format!("cannot write {}", metrics_path.display()))?;
    Ok(results)
}

/// Core of the demo, separated from file IO so tests can drive it directly.
pub fn recover_bitmap(
    bitmap: &Bitmap,
    cfg: &ImageDemoConfig,
) -> anyhow::Result<Vec<ImageResult>> {
    let n = bitmap.width * bitmap.height;
    let signal = bitmap.to_signal();
    let support: Vec<usize> =
        signal.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect();
    let k = support.len();
    if k == 0 {
        anyhow::bail!("image has no set pixels: nothing to recover");
    }
    if cfg.m >= n {
        eprintln!("note: M = {} >= N = {n}; the projection is not compressive", cfg.m);
    } else if 2 * k > cfg.m {
        eprintln!("note: K = {k} set pixels exceeds M/2 = {}; recovery may fail", cfg.m / 2);
    }

    let truth = SparseSignal::from_parts(n, support, vec![1.0; k], SignalPrior::Binary)?;
    let phi = SensingMatrix::gaussian(cfg.m, n, derive_seed(cfg.seed, &[0x1D]));
    let noise = NoiseModel::new(cfg.sigma_w2, cfg.m);
    let y = measure(&phi, &truth, &noise, derive_seed(cfg.seed, &[0x1E]))?;

    let truth_bits: Vec<bool> = signal.iter().map(|&v| v > 0.0).collect();
    let mut results = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let mut algo_cfg = AlgorithmConfig::new(algorithm, k, SignalPrior::Binary, noise);
        algo_cfg.width = cfg.gomp_width;
        algo_cfg.stopping =
            vec![StopRule::OracleError { eps: crate::runner::SUCCESS_EPS, truth: truth.clone() }];
        let recovered = recover(&y, &phi, &algo_cfg)?;
        let est_bits: Vec<bool> = recovered.xhat.iter().map(|&v| v >= BIT_THRESHOLD).collect();

        let true_positive = est_bits
            .iter()
            .zip(&truth_bits)
            .filter(|(e, t)| **e && **t)
            .count();
        let est_count = est_bits.iter().filter(|b| **b).count();
        let precision =
            if est_count > 0 { true_positive as f64 / est_count as f64 } else { 0.0 };
        let recall = true_positive as f64 / k as f64;
        let exact = est_bits == truth_bits;

        let out_img = Bitmap::from_signal_bits(bitmap.width, bitmap.height, &est_bits);
        let output_path = cfg.out_dir.join(format!("recovered_{}.pbm", algorithm.label()));
        std::fs::create_dir_all(&cfg.out_dir).ok();
        std::fs::write(&output_path, pbm::to_p1(&out_img))
            .with_context(|| format!("cannot write {}", output_path.display()))?;
        results.push(ImageResult {
            algorithm: algorithm.label(),
            precision,
            recall,
            exact,
            output_path,
        });
    }
    Ok(results)
}

/// Deterministic test pattern with `set` pixels on a `width x height` grid,
/// used by tests and handy for generating demo inputs.
pub fn test_pattern(width: usize, height: usize, set: usize, seed: u64) -> Bitmap {
    let n = width * height;
    assert!(set >= 1 && set < n, "pattern needs 1 <= set < width*height");
    let x = SparseSignal::generate(n, set, &SignalPrior::Binary, seed).expect("valid dims");
    let mut bits = vec![false; n];
    for &s in x.support() {
        bits[s] = true;
    }
    Bitmap::from_signal_bits(width, height, &bits)
}
