//! Independent verifiers used as ground truth: Monte-Carlo moment checks for
//! the ensemble distributions, the analytic lower bound on exact binary
//! recovery, exhaustive small-instance support search, and direct quadrature
//! of the marginalized ratio.
//!
//! Everything here deliberately avoids the closed-form code paths it is used
//! to check: quadrature integrates raw densities, the search solves every
//! candidate support, and the moment checks only consume raw samples.

use alloc::vec;
use alloc::vec::Vec;

use crate::ensemble::{derive_seed, measure, NoiseModel, SensingMatrix, SignalPrior, SparseSignal};
use crate::error::{Error, Result};
use crate::float;
use crate::linalg::{norm2, RestrictedSystem};
use crate::special::ln_gamma;

/// Minimum Monte-Carlo size for the distribution verifiers; pass thresholds
/// are calibrated for a false-alarm rate around 1e-4 at this scale and above.
pub const MIN_TRIALS: usize = 1000;

/// Sample-versus-expected first and second moments of a scalar statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub sample_mean: f64,
    pub sample_var: f64,
    pub expected_mean: f64,
    pub expected_var: f64,
    pub n_samples: usize,
    /// `(sample_mean - expected_mean) / sqrt(expected_var / n)`.
    pub z_score_mean: f64,
    pub pass: bool,
}

impl MomentReport {
    fn from_samples(
        sum: f64,
        sum_sq: f64,
        n: usize,
        expected_mean: f64,
        expected_var: f64,
    ) -> Self {
        let nf = n as f64;
        let sample_mean = sum / nf;
        let sample_var = (sum_sq - nf * sample_mean * sample_mean) / (nf - 1.0);
        let z_score_mean = if expected_var > 0.0 {
            (sample_mean - expected_mean) / float::sqrt(expected_var / nf)
        } else if float::abs(sample_mean - expected_mean) < 1e-10 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            sample_mean,
            sample_var,
            expected_mean,
            expected_var,
            n_samples: n,
            z_score_mean,
            pass: false,
        }
    }

    fn var_within(&self, rel: f64) -> bool {
        if self.expected_var == 0.0 {
            self.sample_var <= 1e-20
        } else {
            float::abs(self.sample_var - self.expected_var) <= rel * self.expected_var
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument("verifier needs at least 1000 trials"));
    }
    Ok(())
}

/// Normalized inner product of two independent Gaussian columns:
/// `a_n^T a_l / ||a_n||` should be `N(0, 1/M)`.
pub fn verify_cross_correlation(m: usize, trials: usize, seed: u64) -> Result<MomentReport> {
    check_trials(trials)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..trials {
        let pair = SensingMatrix::gaussian(m, 2, derive_seed(seed, &[1, t as u64]));
        let mut dot = 0.0;
        for (a, b) in pair.col(0).iter().zip(pair.col(1)) {
            dot += a * b;
        }
        let s = dot / pair.col_norm(0);
        sum += s;
        sum_sq += s * s;
    }
    let expected_var = 1.0 / m as f64;
    let mut report = MomentReport::from_samples(sum, sum_sq, trials, 0.0, expected_var);
    report.pass = float::abs(report.z_score_mean) <= 4.0
        && (trials < 10_000 || report.var_within(0.1));
    Ok(report)
}

/// Column-norm distribution: `E||a_n||` is the scaled-chi mean
/// `sqrt(2/M) Gamma((1+M)/2) / Gamma(M/2)`.
pub fn verify_norm_mean(m: usize, trials: usize, seed: u64) -> Result<MomentReport> {
    check_trials(trials)?;
    let mf = m as f64;
    let expected_mean = float::exp(
        0.5 * float::ln(2.0 / mf) + ln_gamma((1.0 + mf) / 2.0)? - ln_gamma(mf / 2.0)?,
    );
    // E||a||^2 = 1 exactly, so Var||a|| = 1 - (E||a||)^2.
    let expected_var = 1.0 - expected_mean * expected_mean;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..trials {
        let col = SensingMatrix::gaussian(m, 1, derive_seed(seed, &[2, t as u64]));
        let norm = col.col_norm(0);
        sum += norm;
        sum_sq += norm * norm;
    }
    let mut report = MomentReport::from_samples(sum, sum_sq, trials, expected_mean, expected_var);
    report.pass = float::abs(report.z_score_mean) <= 4.0;
    Ok(report)
}

/// Empirical exceedance probabilities `P[| ||a|| - 1 | >= 0.1]` across a list
/// of measurement sizes; concentration says they must shrink as `M` grows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub entries: Vec<(usize, f64)>,
    pub trials: usize,
    pub pass: bool,
}

pub fn verify_norm_concentration(m_list: &[usize], trials: usize, seed: u64) -> Result<ConcentrationReport> {
    check_trials(trials)?;
    if m_list.len() < 2 || m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("m_list must be strictly increasing"));
    }
    const EPSILON: f64 = 0.1;
    let mut entries = Vec::with_capacity(m_list.len());
    for (i, &m) in m_list.iter().enumerate() {
        let mut exceed = 0usize;
        for t in 0..trials {
            let col = SensingMatrix::gaussian(m, 1, derive_seed(seed, &[3, i as u64, t as u64]));
            if float::abs(col.col_norm(0) - 1.0) >= EPSILON {
                exceed += 1;
            }
        }
        entries.push((m, exceed as f64 / trials as f64));
    }
    let se = |p: f64| float::sqrt(p * (1.0 - p) / trials as f64);
    let monotone = entries.windows(2).all(|w| {
        let (_, p0) = w[0];
        let (_, p1) = w[1];
        p1 <= p0 + 2.0 * (se(p0) + se(p1))
    });
    let shrunk = entries.last().unwrap().1 < entries.first().unwrap().1;
    Ok(ConcentrationReport { entries, trials, pass: monotone && shrunk })
}

/// Least-squares estimation error on a correct partial support of size `k`:
/// each coordinate of `x_hat - x` should have mean zero and variance
/// `(m2 (K - k) + sigma_w2_norm) / (M - k - 2)`.
pub fn verify_estimation_error(
    m: usize,
    sparsity: usize,
    k: usize,
    m2: f64,
    sigma_w2: f64,
    trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    check_trials(trials)?;
    if k == 0 || k > sparsity {
        return Err(Error::InvalidIteration { iteration: k, sparsity });
    }
    if m < k + 2 + 8 {
        return Err(Error::InvalidArgument("need M - k - 2 >= 8 for a stable variance"));
    }
    if m2 <= 0.0 || m2.is_nan() {
        return Err(Error::InvalidArgument("second moment must be positive"));
    }
    let value = float::sqrt(m2);
    let noise = NoiseModel::new(sigma_w2, m);
    let expected_var = (m2 * (sparsity - k) as f64 + noise.sigma_w2_norm()) / (m - k - 2) as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for t in 0..trials {
        let phi = SensingMatrix::gaussian(m, sparsity, derive_seed(seed, &[4, t as u64, 0]));
        let x = SparseSignal::from_parts(
            sparsity,
            (0..sparsity).collect(),
            vec![value; sparsity],
            SignalPrior::FiniteAlphabet(vec![value]),
        )?;
        let y = measure(&phi, &x, &noise, derive_seed(seed, &[4, t as u64, 1]))?;
        let sys = RestrictedSystem::new(&phi, (0..k).collect())?;
        let xhat = sys.least_squares(&y)?;
        for &est in &xhat {
            let e = est - value;
            sum += e;
            sum_sq += e * e;
            n += 1;
        }
    }
    let mut report = MomentReport::from_samples(sum, sum_sq, n, 0.0, expected_var);
    report.pass = float::abs(report.z_score_mean) <= 4.0
        && (trials < 10_000 || report.var_within(0.10));
    Ok(report)
}

/// Analytic lower bound on the probability that MAP-MP exactly recovers a
/// `K`-sparse binary signal in `K` iterations:
/// `(1 - exp(-M / (2(2K - 1 + 2 sigma_w2_norm))))^{K(N-K)}`,
/// evaluated in the log domain and clamped to zero when the inner
/// exponential reaches one.
pub fn recovery_lower_bound(m: usize, sparsity: usize, n: usize, sigma_w2_norm: f64) -> f64 {
    assert!(sparsity > 0 && sparsity < n, "requires 0 < K < N");
    let denom = 2.0 * (2.0 * sparsity as f64 - 1.0 + 2.0 * sigma_w2_norm);
    let inner = -(m as f64) / denom;
    if inner >= 0.0 {
        return 0.0;
    }
    let e = float::exp(inner);
    if e >= 1.0 {
        return 0.0;
    }
    let pairs = sparsity as f64 * (n - sparsity) as f64;
    float::exp(pairs * float::ln_1p(-e))
}

/// `C(n, k)` with saturation.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic iterator over all size-`k` subsets of `0..n`.
pub struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let state = if k <= n && k > 0 { Some((0..k).collect()) } else { None };
        Self { n, k, state }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.clone()?;
        // Advance to the lexicographic successor.
        let mut next = current.clone();
        let mut i = self.k;
        loop {
            if i == 0 {
                self.state = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - self.k + i {
                next[i] += 1;
                for j in (i + 1)..self.k {
                    next[j] = next[j - 1] + 1;
                }
                self.state = Some(next);
                break;
            }
        }
        Some(current)
    }
}

/// Budget guard for [`exhaustive_support_search`].
pub const SEARCH_BUDGET: u128 = 1_000_000;

/// Ground-truth support for small instances: the size-`k` column set whose
/// least-squares residual is smallest, ties resolved toward the
/// lexicographically smallest set.
pub fn exhaustive_support_search(
    y: &[f64],
    phi: &SensingMatrix,
    k: usize,
) -> Result<Vec<usize>> {
    let n = phi.cols();
    if k == 0 || k > n || k > phi.rows() {
        return Err(Error::InvalidArgument("need 1 <= k <= min(M, N)"));
    }
    let candidates = binomial(n, k);
    if candidates > SEARCH_BUDGET {
        return Err(Error::CombinatorialBudget { candidates, budget: SEARCH_BUDGET });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for support in Combinations::new(n, k) {
        let sys = RestrictedSystem::new(phi, support.clone())?;
        let norm = match sys.least_squares(y) {
            Ok(xhat) => norm2(&sys.residual(y, &xhat)?),
            Err(Error::SingularSystem) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(b, _)| norm < *b) {
            best = Some((norm, support));
        }
    }
    Ok(best.expect("at least one non-singular candidate").1)
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fb, fm, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (a + b);
    let lm = 0.5 * (a + mid);
    let rm = 0.5 * (mid + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || float::abs(delta) <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, mid, fa, fm, flm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, mid, b, fm, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

fn normal_pdf(z: f64, mean: f64, var: f64) -> f64 {
    let d = z - mean;
    float::exp(-d * d / (2.0 * var)) / float::sqrt(float::TAU * var)
}

/// Direct numerical evaluation of the marginalized log-MAP ratio
/// `ln(∫ N(z; u, sigma1^2) f(u) du) - ln N(z; 0, sigma0^2) + ln(K/(N-K))`,
/// used as the reference the closed forms are tested against.
pub fn llr_quadrature(
    z: f64,
    prior: &SignalPrior,
    sigma0_sq: f64,
    sigma1_sq: f64,
    prior_log_odds: f64,
) -> f64 {
    let marginal = match prior {
        SignalPrior::Binary => normal_pdf(z, 1.0, sigma1_sq),
        SignalPrior::Uniform01 => {
            let f = |u: f64| normal_pdf(z, u, sigma1_sq);
            // Scale the tolerance to the integrand's peak so far-tail values
            // keep relative accuracy.
            let peak = f(z.clamp(0.0, 1.0)).max(1e-280);
            adaptive_simpson(&f, 0.0, 1.0, 1e-12 * peak)
        }
        SignalPrior::FiniteAlphabet(c) => {
            c.iter().map(|&v| normal_pdf(z, v, sigma1_sq)).sum::<f64>() / c.len() as f64
        }
        SignalPrior::Gaussian { mean, var } => {
            // The integrand is a product of two Gaussians in u; cover the
            // support of that product generously.
            let total = var + sigma1_sq;
            let center = (z * var + mean * sigma1_sq) / total;
            let sd = float::sqrt(var * sigma1_sq / total);
            let f = |u: f64| normal_pdf(z, u, sigma1_sq) * normal_pdf(u, *mean, *var);
            let peak = f(center).max(1e-280);
            adaptive_simpson(&f, center - 12.0 * sd, center + 12.0 * sd, 1e-12 * peak * 24.0 * sd)
        }
    };
    float::ln(marginal) - float::ln(normal_pdf(z, 0.0, sigma0_sq)) + prior_log_odds
}
