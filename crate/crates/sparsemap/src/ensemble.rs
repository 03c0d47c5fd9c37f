//! Seeded generation of the measurement model `y = Φx + w`.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed:
//! the same inputs always produce bit-identical output, which is what makes
//! parallel Monte-Carlo runs reproducible regardless of scheduling. Gaussian
//! variates come from a Box-Muller transform over a counter-based stream
//! cipher (ChaCha8), so seeds can be derived per trial without overlap.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::float;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from a master seed and a list of context
/// words (stream id, trial index, sweep point, ...).
///
/// Mixing happens word by word through SplitMix64, so distinct word lists
/// give unrelated streams and serial/parallel runs can pre-assign seeds.
pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0xA076_1D64_78BD_642F);
    for &w in words {
        h = splitmix64(h ^ w.wrapping_mul(GOLDEN));
    }
    h
}

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `(0, 1]`.
#[inline]
fn next_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
}

/// Standard normal via Box-Muller.
#[inline]
fn next_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = next_unit(rng);
    let u2 = next_unit(rng);
    float::sqrt(-2.0 * float::ln(u1)) * float::cos(float::TAU * u2)
}

/// Unbiased uniform index in `0..n`.
fn next_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as u64;
    let threshold = n.wrapping_neg() % n;
    loop {
        let v = rng.next_u64();
        if v >= threshold {
            return (v % n) as usize;
        }
    }
}

/// Dense `M x N` sensing matrix stored column-major, with cached column norms.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    col_norms: Vec<f64>,
}

impl SensingMatrix {
    /// Draws an `m x n` matrix with IID `N(0, 1/m)` entries.
    ///
    /// The compressive regime `m < n` is what experiments use, but square and
    /// tall shapes are allowed so unit tests can sense with the identity.
    pub fn gaussian(m: usize, n: usize, seed: u64) -> Self {
        assert!(m >= 1 && n >= 1, "matrix dimensions must be positive");
        let mut rng = rng_from(seed);
        let scale = 1.0 / float::sqrt(m as f64);
        let mut data = Vec::with_capacity(m * n);
        for _ in 0..m * n {
            data.push(scale * next_normal(&mut rng));
        }
        Self::from_data(m, n, data)
    }

    /// Wraps existing column-major data, computing column norms.
    pub fn from_data(m: usize, n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), m * n, "column-major data must be m*n long");
        let mut col_norms = Vec::with_capacity(n);
        for j in 0..n {
            let col = &data[j * m..(j + 1) * m];
            let mut s = 0.0;
            for &v in col {
                s += v * v;
            }
            col_norms.push(float::sqrt(s));
        }
        Self { rows: m, cols: n, data, col_norms }
    }

    /// `n x n` identity, handy as a sensing operator in tests.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            data[j * n + j] = 1.0;
        }
        Self::from_data(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column `j` as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_norm(&self, j: usize) -> f64 {
        self.col_norms[j]
    }

    pub fn col_norms(&self) -> &[f64] {
        &self.col_norms
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }
}

/// Distribution of the non-zero signal entries.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalPrior {
    /// Every non-zero entry equals one.
    Binary,
    /// Entries uniform on `[0, 1]`.
    Uniform01,
    /// Entries drawn uniformly from a finite set of distinct levels.
    FiniteAlphabet(Vec<f64>),
    /// Entries `N(mean, var)`.
    Gaussian { mean: f64, var: f64 },
}

impl SignalPrior {
    /// Rejects empty or duplicated alphabets and non-positive Gaussian variance.
    pub fn validate(&self) -> Result<()> {
        match self {
            SignalPrior::FiniteAlphabet(alphabet) => {
                if alphabet.is_empty() {
                    return Err(Error::InvalidArgument("alphabet must be non-empty"));
                }
                for (i, a) in alphabet.iter().enumerate() {
                    if !a.is_finite() {
                        return Err(Error::InvalidArgument("alphabet values must be finite"));
                    }
                    if alphabet[..i].contains(a) {
                        return Err(Error::InvalidArgument("alphabet values must be distinct"));
                    }
                }
                Ok(())
            }
            SignalPrior::Gaussian { var, .. } => {
                if *var > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("gaussian prior needs var > 0"))
                }
            }
            _ => Ok(()),
        }
    }

    /// `E[x]` of a non-zero entry.
    pub fn mean(&self) -> f64 {
        match self {
            SignalPrior::Binary => 1.0,
            SignalPrior::Uniform01 => 0.5,
            SignalPrior::FiniteAlphabet(c) => c.iter().sum::<f64>() / c.len() as f64,
            SignalPrior::Gaussian { mean, .. } => *mean,
        }
    }

    /// Second moment `E[x^2]` of a non-zero entry. The variance schedules are
    /// all driven by this, not by the central variance.
    pub fn second_moment(&self) -> f64 {
        match self {
            SignalPrior::Binary => 1.0,
            SignalPrior::Uniform01 => 1.0 / 3.0,
            SignalPrior::FiniteAlphabet(c) => c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64,
            SignalPrior::Gaussian { mean, var } => mean * mean + var,
        }
    }

    /// Central variance `E[x^2] - E[x]^2`.
    pub fn variance(&self) -> f64 {
        match self {
            SignalPrior::Binary => 0.0,
            SignalPrior::Uniform01 => 1.0 / 12.0,
            SignalPrior::FiniteAlphabet(_) => {
                let m = self.mean();
                self.second_moment() - m * m
            }
            SignalPrior::Gaussian { var, .. } => *var,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            SignalPrior::Binary => 1.0,
            SignalPrior::Uniform01 => (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0),
            SignalPrior::FiniteAlphabet(c) => c[next_index(rng, c.len())],
            SignalPrior::Gaussian { mean, var } => mean + float::sqrt(*var) * next_normal(rng),
        }
    }
}

/// A `K`-sparse signal: support set, the values on it, and the prior that
/// generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    dim: usize,
    support: Vec<usize>,
    values: Vec<f64>,
    prior: SignalPrior,
}

impl SparseSignal {
    /// Draws a `k`-sparse signal of dimension `n`: support uniform without
    /// replacement, values IID from `prior`.
    pub fn generate(n: usize, k: usize, prior: &SignalPrior, seed: u64) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::InvalidSparsity { k, n });
        }
        prior.validate()?;
        let mut rng = rng_from(seed);
        // Partial Fisher-Yates, then sort for a canonical support order.
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + next_index(&mut rng, n - i);
            idx.swap(i, j);
        }
        let mut support = idx[..k].to_vec();
        support.sort_unstable();
        let values = support.iter().map(|_| prior.draw(&mut rng)).collect();
        Ok(Self { dim: n, support, values, prior: prior.clone() })
    }

    /// Builds a signal from explicit parts (used by tests and the image demo).
    /// Unlike [`SparseSignal::generate`], `k = n` is allowed here.
    pub fn from_parts(
        n: usize,
        support: Vec<usize>,
        values: Vec<f64>,
        prior: SignalPrior,
    ) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: values.len(),
            });
        }
        if support.len() > n {
            return Err(Error::InvalidSparsity { k: support.len(), n });
        }
        for (i, &s) in support.iter().enumerate() {
            if s >= n {
                return Err(Error::InvalidArgument("support index out of range"));
            }
            if support[..i].contains(&s) {
                return Err(Error::InvalidArgument("support indices must be distinct"));
            }
        }
        Ok(Self { dim: n, support, values, prior })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prior(&self) -> &SignalPrior {
        &self.prior
    }

    /// Dense length-`n` vector with zeros off the support.
    pub fn dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for (&s, &v) in self.support.iter().zip(&self.values) {
            x[s] = v;
        }
        x
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Measurement-noise description. Both the per-component variance and the
/// normalized variance `M * sigma_w^2` are carried, since the detectors work
/// on the normalized scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma_w2: f64,
    sigma_w2_norm: f64,
}

impl NoiseModel {
    pub fn new(sigma_w2: f64, m: usize) -> Self {
        assert!(sigma_w2 >= 0.0, "noise variance must be non-negative");
        Self { sigma_w2, sigma_w2_norm: m as f64 * sigma_w2 }
    }

    pub fn noiseless(m: usize) -> Self {
        Self::new(0.0, m)
    }

    /// Per-component variance `sigma_w^2`.
    pub fn sigma_w2(&self) -> f64 {
        self.sigma_w2
    }

    /// Normalized variance `M * sigma_w^2`.
    pub fn sigma_w2_norm(&self) -> f64 {
        self.sigma_w2_norm
    }
}

/// Measures `y = Φx + w` with IID `N(0, sigma_w^2)` noise. A zero noise
/// variance yields exactly `y = Φx`.
pub fn measure(
    phi: &SensingMatrix,
    x: &SparseSignal,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<f64>> {
    if x.dim() != phi.cols() {
        return Err(Error::DimensionMismatch { expected: phi.cols(), got: x.dim() });
    }
    let mut y = vec![0.0; phi.rows()];
    for (&s, &v) in x.support().iter().zip(x.values()) {
        let col = phi.col(s);
        for (yi, &c) in y.iter_mut().zip(col) {
            *yi += v * c;
        }
    }
    if noise.sigma_w2() > 0.0 {
        let sd = float::sqrt(noise.sigma_w2());
        let mut rng = rng_from(seed);
        for yi in y.iter_mut() {
            *yi += sd * next_normal(&mut rng);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        let a = SensingMatrix::gaussian(4, 4, 1234);
        let b = SensingMatrix::gaussian(4, 4, 1234);
        assert_eq!(a, b);
        let c = SensingMatrix::gaussian(4, 4, 1235);
        assert_ne!(a, c);
    }

    #[test]
    fn entry_mean_within_clt_bound() {
        let m = 128;
        let n = 256;
        let phi = SensingMatrix::gaussian(m, n, 42);
        let count = (m * n) as f64;
        let mean: f64 = (0..n).map(|j| phi.col(j).iter().sum::<f64>()).sum::<f64>() / count;
        // Entries have variance 1/m, so the sample mean has sd 1/sqrt(m*n*m).
        let bound = 4.0 / (count * m as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} exceeds 4-sigma bound {bound}");
    }

    #[test]
    fn entry_variance_within_five_percent() {
        let m = 128;
        let n = 256;
        let phi = SensingMatrix::gaussian(m, n, 7);
        let count = (m * n) as f64;
        assert!(m * n >= 32768);
        let sum_sq: f64 = (0..n)
            .map(|j| phi.col(j).iter().map(|v| v * v).sum::<f64>())
            .sum();
        let var = sum_sq / count;
        let expected = 1.0 / m as f64;
        assert!((var - expected).abs() < 0.05 * expected, "var {var} vs {expected}");
    }

    #[test]
    fn column_norm_mean_matches_chi_expectation() {
        let m = 128;
        let phi = SensingMatrix::gaussian(m, 256, 99);
        let mean_norm: f64 = phi.col_norms().iter().sum::<f64>() / 256.0;
        // sqrt(2/M) * Gamma((1+M)/2) / Gamma(M/2) evaluated independently.
        let expected = 0.9980488009354713;
        assert!((mean_norm - 1.0).abs() < 0.05);
        assert!((mean_norm - expected).abs() < 0.02);
    }

    #[test]
    fn col_norms_match_columns() {
        let phi = SensingMatrix::gaussian(16, 32, 3);
        for j in 0..32 {
            let direct = phi.col(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((phi.col_norm(j) - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn sparse_signal_rejects_k_equal_n() {
        let err = SparseSignal::generate(10, 10, &SignalPrior::Binary, 5).unwrap_err();
        assert_eq!(err, Error::InvalidSparsity { k: 10, n: 10 });
    }

    #[test]
    fn binary_signal_is_all_ones() {
        let x = SparseSignal::generate(256, 40, &SignalPrior::Binary, 11).unwrap();
        assert_eq!(x.sparsity(), 40);
        assert!(x.values().iter().all(|&v| v == 1.0));
        let mut sorted = x.support().to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), 40);
        assert!(x.support().iter().all(|&s| s < 256));
    }

    #[test]
    fn uniform_signal_values_in_range() {
        let x = SparseSignal::generate(256, 40, &SignalPrior::Uniform01, 23).unwrap();
        assert!(x.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let mean: f64 = x.values().iter().sum::<f64>() / 40.0;
        assert!((mean - 0.5).abs() < 0.25);
    }

    #[test]
    fn finite_alphabet_values_from_alphabet() {
        let alphabet = vec![0.0, 1.0, 2.0, 3.0];
        let prior = SignalPrior::FiniteAlphabet(alphabet.clone());
        let x = SparseSignal::generate(64, 12, &prior, 17).unwrap();
        assert!(x.values().iter().all(|v| alphabet.contains(v)));
    }

    #[test]
    fn support_uniformity() {
        let n = 16;
        let k = 2;
        let draws = 10_000;
        let mut counts = vec![0usize; n];
        for t in 0..draws {
            let x = SparseSignal::generate(n, k, &SignalPrior::Binary, derive_seed(5, &[t])).unwrap();
            for &s in x.support() {
                counts[s] += 1;
            }
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.125).abs() < 0.01, "index {i}: freq {freq}");
        }
    }

    #[test]
    fn prior_moments() {
        assert_eq!(SignalPrior::Binary.mean(), 1.0);
        assert_eq!(SignalPrior::Binary.second_moment(), 1.0);
        assert_eq!(SignalPrior::Binary.variance(), 0.0);
        assert_eq!(SignalPrior::Uniform01.mean(), 0.5);
        assert!((SignalPrior::Uniform01.second_moment() - 1.0 / 3.0).abs() < 1e-15);
        assert!((SignalPrior::Uniform01.variance() - 1.0 / 12.0).abs() < 1e-15);
        let c = SignalPrior::FiniteAlphabet(vec![1.0, 3.0]);
        assert_eq!(c.mean(), 2.0);
        assert_eq!(c.second_moment(), 5.0);
        assert_eq!(c.variance(), 1.0);
        let g = SignalPrior::Gaussian { mean: 1.0, var: 0.25 };
        assert_eq!(g.mean(), 1.0);
        assert_eq!(g.second_moment(), 1.25);
        assert_eq!(g.variance(), 0.25);
    }

    #[test]
    fn prior_validation() {
        assert!(SignalPrior::FiniteAlphabet(vec![]).validate().is_err());
        assert!(SignalPrior::FiniteAlphabet(vec![0.5, 0.5]).validate().is_err());
        assert!(SignalPrior::FiniteAlphabet(vec![0.5, 1.5]).validate().is_ok());
        assert!(SignalPrior::Gaussian { mean: 0.0, var: 0.0 }.validate().is_err());
    }

    #[test]
    fn measure_zero_signal_noise_free() {
        let phi = SensingMatrix::gaussian(8, 16, 2);
        let x = SparseSignal::from_parts(16, vec![], vec![], SignalPrior::Binary).unwrap();
        let noise = NoiseModel::noiseless(8);
        let y = measure(&phi, &x, &noise, 0).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn measure_identity_single_spike() {
        let phi = SensingMatrix::identity(4);
        let x = SparseSignal::from_parts(4, vec![1], vec![5.0], SignalPrior::Binary).unwrap();
        let y = measure(&phi, &x, &NoiseModel::noiseless(4), 0).unwrap();
        assert_eq!(y, vec![0.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn measure_dimension_mismatch() {
        let phi = SensingMatrix::gaussian(8, 16, 2);
        let x = SparseSignal::from_parts(12, vec![0], vec![1.0], SignalPrior::Binary).unwrap();
        let err = measure(&phi, &x, &NoiseModel::noiseless(8), 0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn measured_energy_matches_expectation() {
        // E||y||^2 = K + M*sigma_w^2 for binary signals with entry variance 1/M.
        let m = 64;
        let n = 128;
        let k = 8;
        let sigma_w2 = 0.01;
        let expected = k as f64 + m as f64 * sigma_w2;
        let trials = 1000;
        let mut total = 0.0;
        for t in 0..trials {
            let phi = SensingMatrix::gaussian(m, n, derive_seed(3, &[0, t]));
            let x = SparseSignal::generate(n, k, &SignalPrior::Binary, derive_seed(3, &[1, t]))
                .unwrap();
            let noise = NoiseModel::new(sigma_w2, m);
            let y = measure(&phi, &x, &noise, derive_seed(3, &[2, t])).unwrap();
            total += y.iter().map(|v| v * v).sum::<f64>();
        }
        let mean = total / trials as f64;
        assert!((mean - expected).abs() < 0.1 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn derive_seed_distinguishes_contexts() {
        let a = derive_seed(1, &[0, 0]);
        let b = derive_seed(1, &[0, 1]);
        let c = derive_seed(1, &[1, 0]);
        let d = derive_seed(2, &[0, 0]);
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }

    #[test]
    fn noise_model_normalization_exact() {
        let nm = NoiseModel::new(0.005, 128);
        assert_eq!(nm.sigma_w2_norm(), 128.0 * 0.005);
        assert_eq!(nm.sigma_w2_norm(), 0.64);
    }
}
