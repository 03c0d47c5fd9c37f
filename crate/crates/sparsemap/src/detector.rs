//! Variance schedules and log-MAP ratios for support detection.
//!
//! At iteration `k` the correlation `z_n` of column `n` against the residual
//! is tested under two hypotheses: `n` outside the support (zero-mean
//! Gaussian, variance `sigma0^2`) versus `n` in the support (mean equal to
//! the signal value, variance `sigma1^2`). Both variances shrink as
//! iterations capture support elements, which is what the schedules track.
//! All ratios are evaluated in the log domain; with variances of order
//! `1/M`, direct exponentials underflow long before the tails of interest.

use alloc::vec;
use alloc::vec::Vec;

use crate::ensemble::{NoiseModel, SignalPrior};
use crate::error::{Error, Result};
use crate::float;
use crate::special;

/// Null/alternative variances for the exact binary ratio at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceSchedule {
    /// Variance of `z` when the index is not in the support.
    pub sigma0_sq: f64,
    /// Variance of `z` when the index is in the support.
    pub sigma1_sq: f64,
    /// One-based iteration index.
    pub iteration: usize,
    /// Selection width (1 for MP/OMP-style loops).
    pub width: usize,
}

/// Moment-matched variances for the general-prior ratio, carrying the
/// parameters they were derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralVarianceSchedule {
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
    pub iteration: usize,
    pub width: usize,
    pub measurements: usize,
    pub sparsity: usize,
    pub second_moment: f64,
    pub sigma_w2_norm: f64,
}

/// Static context for the ratio computations: dimensions, prior, noise, and
/// the prior log-odds `ln(K/(N-K))` that every ratio carries as an additive
/// constant.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrContext {
    pub dim: usize,
    pub sparsity: usize,
    pub measurements: usize,
    pub prior: SignalPrior,
    pub noise: NoiseModel,
    pub prior_log_odds: f64,
}

impl LlrContext {
    pub fn new(
        dim: usize,
        sparsity: usize,
        measurements: usize,
        prior: SignalPrior,
        noise: NoiseModel,
    ) -> Result<Self> {
        if sparsity == 0 || sparsity >= dim {
            return Err(Error::InvalidSparsity { k: sparsity, n: dim });
        }
        let prior_log_odds = float::ln(sparsity as f64 / (dim - sparsity).max(1) as f64);
        Ok(Self { dim, sparsity, measurements, prior, noise, prior_log_odds })
    }
}

/// Binary-signal schedule: `sigma0^2 = (K-k+1)/M + sigma_w^2` and
/// `sigma1^2 = sigma0^2 - 1/M`, so the two differ by exactly one
/// interferer's worth of variance.
pub fn binary_schedule(
    sparsity: usize,
    iteration: usize,
    measurements: usize,
    sigma_w2: f64,
) -> Result<VarianceSchedule> {
    if iteration == 0 || iteration > sparsity {
        return Err(Error::InvalidIteration { iteration, sparsity });
    }
    let m = measurements as f64;
    let sigma0_sq = (sparsity - iteration + 1) as f64 / m + sigma_w2;
    let sigma1_sq = sigma0_sq - 1.0 / m;
    Ok(VarianceSchedule { sigma0_sq, sigma1_sq, iteration, width: 1 })
}

/// Moment-matched schedule for the OMP/gOMP family at iteration `k` with
/// selection width `L`: `s = L(k-1)` columns were estimated so far, and the
/// least-squares estimation error on them feeds back into both variances
/// through the `(... )/(M - s - 2)` terms.
pub fn general_schedule(
    sparsity: usize,
    iteration: usize,
    width: usize,
    measurements: usize,
    second_moment: f64,
    sigma_w2_norm: f64,
) -> Result<GeneralVarianceSchedule> {
    if iteration == 0 {
        return Err(Error::InvalidIteration { iteration, sparsity });
    }
    if width == 0 {
        return Err(Error::InvalidArgument("selection width must be positive"));
    }
    let selected = width * (iteration - 1);
    if measurements <= selected + 2 {
        return Err(Error::ScheduleOverflow { iteration });
    }
    let m = measurements as f64;
    let s = selected as f64;
    // Remaining-support counts under the premise that past selections were
    // correct, clamped below: the loop only reaches iteration k while at
    // least one support is still missing, and a zero count would zero out
    // the null variance entirely once k exceeds K/L.
    let remaining0 = sparsity.saturating_sub(selected).max(1) as f64;
    let remaining1 = sparsity.saturating_sub(width * iteration) as f64;
    let feedback = (remaining0 * second_moment + sigma_w2_norm) / (m - s - 2.0);
    let sigma0_sq = (remaining0 * second_moment + sigma_w2_norm) / m * (1.0 + s / (m - s - 2.0));
    let sigma1_sq = (remaining1 * second_moment + sigma_w2_norm) / m + (s / m) * feedback;
    // A vanishing null variance (every support presumed captured, no noise)
    // leaves nothing to rank against; the caller must stop. A vanishing
    // alternative variance is legal: it is the noise-free last-round point
    // mass, which consumers handle explicitly.
    if sigma0_sq <= 0.0 || sigma0_sq.is_nan() {
        return Err(Error::ScheduleOverflow { iteration });
    }
    Ok(GeneralVarianceSchedule {
        sigma0_sq,
        sigma1_sq,
        iteration,
        width,
        measurements,
        sparsity,
        second_moment,
        sigma_w2_norm,
    })
}

/// Exact binary log-MAP ratio:
/// `z^2/(2 sigma0^2) - (z-1)^2/(2 sigma1^2) + ln(sigma0/sigma1) + ln(K/(N-K))`.
pub fn llr_binary(z: f64, sched: &VarianceSchedule, ctx: &LlrContext) -> Result<f64> {
    if sched.sigma1_sq <= 0.0 {
        return Err(Error::MustUseLastIteration);
    }
    Ok(z * z / (2.0 * sched.sigma0_sq) - (z - 1.0) * (z - 1.0) / (2.0 * sched.sigma1_sq)
        + 0.5 * float::ln(sched.sigma0_sq / sched.sigma1_sq)
        + ctx.prior_log_odds)
}

/// Noise-free binary ratio at the last iteration (`k = K`), where the
/// alternative density is degenerate: `M z^2 / 2 + ln(K/(N-K))`.
pub fn llr_binary_last(z: f64, measurements: usize, sparsity: usize, dim: usize) -> f64 {
    measurements as f64 * z * z / 2.0
        + float::ln(sparsity as f64 / (dim - sparsity).max(1) as f64)
}

/// High-noise approximation `(2z - 1)/(2 sigma_w^2)`; monotone in `z`, so it
/// reproduces plain correlation ranking.
pub fn llr_highnoise(z: f64, sigma_w2: f64) -> Result<f64> {
    if sigma_w2 <= 0.0 || sigma_w2.is_nan() {
        return Err(Error::InvalidArgument("high-noise ratio requires sigma_w2 > 0"));
    }
    Ok((2.0 * z - 1.0) / (2.0 * sigma_w2))
}

/// Ratio for entries uniform on `[0, 1]`. The alternative marginal is the
/// defining integral `∫_0^1 N(z; u, sigma1^2) du`, which closes to
/// `(erf((1-z)/(sqrt(2) sigma1)) + erf(z/(sqrt(2) sigma1)))/2`.
pub fn llr_uniform(z: f64, sched: &GeneralVarianceSchedule, ctx: &LlrContext) -> f64 {
    let s1 = float::sqrt(sched.sigma1_sq);
    let inv = 1.0 / (core::f64::consts::SQRT_2 * s1);
    let ln_numerator = special::ln_half_erf_sum((1.0 - z) * inv, z * inv);
    ln_numerator - special::ln_normal_pdf(z, 0.0, sched.sigma0_sq) + ctx.prior_log_odds
}

/// Ratio for entries drawn uniformly from a finite alphabet: a `|C|`-component
/// Gaussian mixture against the null density, summed by log-sum-exp.
pub fn llr_finite_alphabet(
    z: f64,
    alphabet: &[f64],
    sched: &GeneralVarianceSchedule,
    ctx: &LlrContext,
) -> Result<f64> {
    if alphabet.is_empty() {
        return Err(Error::InvalidArgument("alphabet must be non-empty"));
    }
    for (i, a) in alphabet.iter().enumerate() {
        if alphabet[..i].contains(a) {
            return Err(Error::InvalidArgument("alphabet values must be distinct"));
        }
    }
    let terms: Vec<f64> = alphabet
        .iter()
        .map(|&c| special::ln_normal_pdf(z, c, sched.sigma1_sq))
        .collect();
    let ln_mixture = special::log_sum_exp(&terms) - float::ln(alphabet.len() as f64);
    Ok(ln_mixture - special::ln_normal_pdf(z, 0.0, sched.sigma0_sq) + ctx.prior_log_odds)
}

/// Ratio for Gaussian entries `N(mean, var)`: the alternative marginal is
/// `N(mean, var + sigma1^2)` in closed form.
pub fn llr_gaussian(
    z: f64,
    mean: f64,
    var: f64,
    sched: &GeneralVarianceSchedule,
    ctx: &LlrContext,
) -> f64 {
    let total = var + sched.sigma1_sq;
    z * z / (2.0 * sched.sigma0_sq) - (z - mean) * (z - mean) / (2.0 * total)
        + 0.5 * float::ln(sched.sigma0_sq / total)
        + ctx.prior_log_odds
}

/// Ratio for whatever prior the context carries. Binary signals reduce to the
/// one-letter alphabet `{1}`, which recovers the exact binary ratio once the
/// schedules coincide.
pub fn llr(z: f64, sched: &GeneralVarianceSchedule, ctx: &LlrContext) -> Result<f64> {
    match &ctx.prior {
        SignalPrior::Binary => llr_finite_alphabet(z, &[1.0], sched, ctx),
        SignalPrior::Uniform01 => Ok(llr_uniform(z, sched, ctx)),
        SignalPrior::FiniteAlphabet(c) => llr_finite_alphabet(z, c, sched, ctx),
        SignalPrior::Gaussian { mean, var } => Ok(llr_gaussian(z, *mean, *var, sched, ctx)),
    }
}

/// Indices of the `l` largest scores outside `exclude`, in decreasing score
/// order; ties break toward the lower index.
pub fn select_top_l(scores: &[f64], l: usize, exclude: &[usize]) -> Result<Vec<usize>> {
    let n = scores.len();
    let mut excluded = vec![false; n];
    let mut n_excluded = 0usize;
    for &e in exclude {
        if e >= n {
            return Err(Error::InvalidArgument("excluded index out of range"));
        }
        if !excluded[e] {
            excluded[e] = true;
            n_excluded += 1;
        }
    }
    if l > n - n_excluded {
        return Err(Error::InvalidArgument("fewer candidates than requested"));
    }
    let mut idx: Vec<usize> = (0..n).filter(|&i| !excluded[i]).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx.truncate(l);
    Ok(idx)
}
