//! The greedy recovery loops: MAP-MP, MAP-OMP, MAP-gOMP, MAP-CoSaMP, MAP-SP,
//! and their conventional counterparts OMP, gOMP, CoSaMP, SP.
//!
//! Every algorithm shares the same skeleton — correlate the residual against
//! all columns, score the candidates, grow or re-estimate a support, solve on
//! it, update the residual — and the MAP and conventional variants differ
//! only in the score: log-MAP ratio versus correlation magnitude.

use alloc::vec;
use alloc::vec::Vec;

use crate::detector::{
    binary_schedule, general_schedule, llr, llr_binary, llr_binary_last, select_top_l, LlrContext,
};
use crate::ensemble::{NoiseModel, SensingMatrix, SignalPrior, SparseSignal};
use crate::error::{Error, Result};
use crate::linalg::{column_correlations, norm2, top_k_by_magnitude, RestrictedSystem};

/// Residuals below `1e-12 * ||y||` count as converged.
const RESIDUAL_STOP_REL: f64 = 1e-12;
/// Two equal-support iterations whose residuals agree to this relative
/// tolerance are a fixed point of the two-stage loop.
const STAGNATION_REL: f64 = 1e-12;
/// Two-stage iterations allowed without improving the best residual seen.
const STALL_LIMIT: usize = 16;

/// The available recovery algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    MapMp,
    MapOmp,
    MapGomp,
    MapCosamp,
    MapSp,
    Omp,
    Gomp,
    Cosamp,
    Sp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::MapMp,
        Algorithm::MapOmp,
        Algorithm::MapGomp,
        Algorithm::MapCosamp,
        Algorithm::MapSp,
        Algorithm::Omp,
        Algorithm::Gomp,
        Algorithm::Cosamp,
        Algorithm::Sp,
    ];

    /// True for the variants that score candidates by log-MAP ratio.
    pub fn is_map(&self) -> bool {
        matches!(
            self,
            Algorithm::MapMp
                | Algorithm::MapOmp
                | Algorithm::MapGomp
                | Algorithm::MapCosamp
                | Algorithm::MapSp
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::MapMp => "map_mp",
            Algorithm::MapOmp => "map_omp",
            Algorithm::MapGomp => "map_gomp",
            Algorithm::MapCosamp => "map_cosamp",
            Algorithm::MapSp => "map_sp",
            Algorithm::Omp => "omp",
            Algorithm::Gomp => "gomp",
            Algorithm::Cosamp => "cosamp",
            Algorithm::Sp => "sp",
        }
    }
}

impl core::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.label() == s)
            .ok_or(Error::InvalidArgument("unknown algorithm name"))
    }
}

/// A single stopping condition; recovery halts as soon as any one fires.
#[derive(Debug, Clone, PartialEq)]
pub enum StopRule {
    /// Stop when the residual 2-norm drops to `eps` or below.
    ResidualNorm(f64),
    /// Stop when `||x_true - x_hat||_2^2 <= eps` against a known truth.
    OracleError { eps: f64, truth: SparseSignal },
    /// Stop after this many iterations.
    MaxIterations(usize),
}

/// Everything a recovery run needs besides the instance itself.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    /// Target sparsity `K`.
    pub sparsity: usize,
    /// Selection width `L` for the gOMP variants.
    pub width: usize,
    pub prior: SignalPrior,
    pub noise: NoiseModel,
    pub stopping: Vec<StopRule>,
    /// When set, signal estimation uses ridge regression with regularizer
    /// `1/snr` instead of plain least squares.
    pub ridge_snr: Option<f64>,
}

impl AlgorithmConfig {
    pub fn new(
        algorithm: Algorithm,
        sparsity: usize,
        prior: SignalPrior,
        noise: NoiseModel,
    ) -> Self {
        Self {
            algorithm,
            sparsity,
            width: 2,
            prior,
            noise,
            stopping: Vec::new(),
            ridge_snr: None,
        }
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.sparsity == 0 || self.sparsity >= n {
            return Err(Error::InvalidSparsity { k: self.sparsity, n });
        }
        self.prior.validate()?;
        if let Some(snr) = self.ridge_snr {
            if snr <= 0.0 || snr.is_nan() {
                return Err(Error::InvalidArgument("ridge_snr must be positive"));
            }
        }
        match self.algorithm {
            Algorithm::MapMp if self.prior != SignalPrior::Binary => {
                Err(Error::InvalidArgument("map_mp requires the binary prior"))
            }
            Algorithm::MapGomp | Algorithm::Gomp
                if self.width == 0 || self.width > m / self.sparsity =>
            {
                Err(Error::InvalidArgument("gomp width must satisfy 1 <= L <= M/K"))
            }
            Algorithm::MapCosamp | Algorithm::Cosamp if 2 * self.sparsity > n => {
                Err(Error::InvalidArgument("cosamp needs 2K <= N candidates"))
            }
            _ => Ok(()),
        }
    }

    fn user_iteration_cap(&self) -> usize {
        self.stopping
            .iter()
            .filter_map(|r| match r {
                StopRule::MaxIterations(n) => Some(*n),
                _ => None,
            })
            .min()
            .unwrap_or(usize::MAX)
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// A residual/oracle rule fired or the iterate stopped improving.
    Stopped,
    /// The iteration budget ran out.
    MaxIter,
    /// The variance schedule became degenerate.
    ScheduleGuard,
    /// A restricted system was rank deficient; the result is the last good iterate.
    Singular,
}

/// Output of one recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Selected support, in the order the algorithm produced it.
    pub support: Vec<usize>,
    /// Dense estimate, zero off the support.
    pub xhat: Vec<f64>,
    /// Residual 2-norm after each completed iteration.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Least-squares/ridge solves performed.
    pub ls_solves: usize,
    /// Times the merged candidate set had to be clipped to `M` columns.
    pub merge_truncations: usize,
}

impl RecoveryResult {
    pub fn support_sorted(&self) -> Vec<usize> {
        let mut s = self.support.clone();
        s.sort_unstable();
        s
    }

    /// Squared error `||x_hat - x||^2` against a reference signal.
    pub fn squared_error(&self, truth: &SparseSignal) -> f64 {
        let dense = truth.dense();
        crate::linalg::dist_sq(&self.xhat, &dense)
    }
}

/// Runs the algorithm selected by `cfg` on the instance `(y, phi)`.
pub fn recover(y: &[f64], phi: &SensingMatrix, cfg: &AlgorithmConfig) -> Result<RecoveryResult> {
    cfg.validate(phi.rows(), phi.cols())?;
    if y.len() != phi.rows() {
        return Err(Error::DimensionMismatch { expected: phi.rows(), got: y.len() });
    }
    match cfg.algorithm {
        Algorithm::MapMp => run_matching_pursuit(y, phi, cfg),
        Algorithm::MapOmp | Algorithm::Omp => run_omp_family(y, phi, cfg, 1),
        Algorithm::MapGomp | Algorithm::Gomp => run_omp_family(y, phi, cfg, cfg.width),
        Algorithm::MapCosamp | Algorithm::Cosamp => run_two_stage(y, phi, cfg, false),
        Algorithm::MapSp | Algorithm::Sp => run_two_stage(y, phi, cfg, true),
    }
}

/// Per-iteration candidate scores: log-MAP ratios for the MAP variants,
/// correlation magnitudes for the conventional ones.
fn scores_for(
    cfg: &AlgorithmConfig,
    ctx: Option<&LlrContext>,
    m: usize,
    iteration: usize,
    schedule_width: usize,
    z: &[f64],
) -> Result<Vec<f64>> {
    match ctx {
        None => Ok(z.iter().map(|&v| crate::float::abs(v)).collect()),
        Some(ctx) => {
            let mut sched = general_schedule(
                cfg.sparsity,
                iteration,
                schedule_width,
                m,
                cfg.prior.second_moment(),
                cfg.noise.sigma_w2_norm(),
            )?;
            if sched.sigma1_sq == 0.0 {
                // Noise-free point mass (K = L at the first iteration). The
                // unit-norm approximation behind the schedule drops the
                // column-norm variance m2 * Var(||a||) ~ m2/(2M); restoring
                // it keeps the alternative density proper.
                sched.sigma1_sq = cfg.prior.second_moment() / (2.0 * m as f64);
            }
            z.iter().map(|&v| llr(v, &sched, ctx)).collect()
        }
    }
}

fn dense_estimate(n: usize, support: &[usize], values: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&s, &v) in support.iter().zip(values) {
        x[s] = v;
    }
    x
}

/// Evaluates the epsilon-type stopping rules (max-iterations is folded into
/// the loop bound instead).
fn eps_rule_fired(cfg: &AlgorithmConfig, resid_norm: f64, xhat: &[f64]) -> bool {
    cfg.stopping.iter().any(|rule| match rule {
        StopRule::ResidualNorm(eps) => resid_norm <= *eps,
        StopRule::OracleError { eps, truth } => {
            crate::linalg::dist_sq(xhat, &truth.dense()) <= *eps
        }
        StopRule::MaxIterations(_) => false,
    })
}

fn solve_system(
    sys: &RestrictedSystem<'_>,
    y: &[f64],
    ridge_snr: Option<f64>,
) -> Result<Vec<f64>> {
    match ridge_snr {
        Some(snr) => sys.ridge(y, snr),
        None => sys.least_squares(y),
    }
}

/// MAP-MP: one index per iteration by binary log-MAP ratio, estimate pinned
/// to one on the selected support, residual updated by direct subtraction.
fn run_matching_pursuit(
    y: &[f64],
    phi: &SensingMatrix,
    cfg: &AlgorithmConfig,
) -> Result<RecoveryResult> {
    let (m, n) = (phi.rows(), phi.cols());
    let k_total = cfg.sparsity;
    let ctx = LlrContext::new(n, k_total, m, cfg.prior.clone(), cfg.noise)?;
    let sigma_w2 = cfg.noise.sigma_w2();
    let cap = k_total.min(cfg.user_iteration_cap());
    let y_norm = norm2(y);

    let mut support: Vec<usize> = Vec::with_capacity(cap);
    let mut r = y.to_vec();
    let mut residual_norms = Vec::with_capacity(cap);
    let mut termination = Termination::MaxIter;

    for k in 1..=cap {
        let z = column_correlations(phi, &r)?;
        let sched = binary_schedule(k_total, k, m, sigma_w2)?;
        let scores: Vec<f64> = if sched.sigma1_sq > 0.0 {
            z.iter().map(|&v| llr_binary(v, &sched, &ctx)).collect::<Result<_>>()?
        } else {
            // Noise-free last iteration: the alternative density is degenerate.
            z.iter().map(|&v| llr_binary_last(v, m, k_total, n)).collect()
        };
        let picked = select_top_l(&scores, 1, &support)?[0];
        support.push(picked);

        r.copy_from_slice(y);
        for &s in &support {
            for (ri, &a) in r.iter_mut().zip(phi.col(s)) {
                *ri -= a;
            }
        }
        let norm = norm2(&r);
        residual_norms.push(norm);

        let ones = vec![1.0; support.len()];
        let xhat = dense_estimate(n, &support, &ones);
        if norm <= RESIDUAL_STOP_REL * y_norm || eps_rule_fired(cfg, norm, &xhat) {
            termination = Termination::Stopped;
            break;
        }
    }

    let iterations = residual_norms.len();
    let ones = vec![1.0; support.len()];
    let xhat = dense_estimate(n, &support, &ones);
    Ok(RecoveryResult {
        support,
        xhat,
        residual_norms,
        iterations,
        termination,
        ls_solves: 0,
        merge_truncations: 0,
    })
}

/// OMP and gOMP, MAP-scored or conventional: grow the support by `width`
/// indices per iteration and re-solve on the whole support.
fn run_omp_family(
    y: &[f64],
    phi: &SensingMatrix,
    cfg: &AlgorithmConfig,
    width: usize,
) -> Result<RecoveryResult> {
    let (m, n) = (phi.rows(), phi.cols());
    let ctx = if cfg.algorithm.is_map() {
        Some(LlrContext::new(n, cfg.sparsity, m, cfg.prior.clone(), cfg.noise)?)
    } else {
        None
    };
    // gOMP runs min(K, M/L) iterations; the same bound keeps |S| <= M for OMP.
    let cap = cfg.sparsity.min(m / width).min(cfg.user_iteration_cap());
    let y_norm = norm2(y);

    let mut support: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut r = y.to_vec();
    let mut residual_norms = Vec::new();
    let mut termination = Termination::MaxIter;
    let mut ls_solves = 0usize;

    for k in 1..=cap {
        let z = column_correlations(phi, &r)?;
        let scores = match scores_for(cfg, ctx.as_ref(), m, k, width, &z) {
            Ok(s) => s,
            Err(Error::ScheduleOverflow { .. }) => {
                termination = Termination::ScheduleGuard;
                break;
            }
            Err(e) => return Err(e),
        };
        let picked = select_top_l(&scores, width, &support)?;
        support.extend_from_slice(&picked);

        let sys = RestrictedSystem::new(phi, support.clone())?;
        match solve_system(&sys, y, cfg.ridge_snr) {
            Ok(xs) => {
                r = sys.residual(y, &xs)?;
                values = xs;
                ls_solves += 1;
            }
            Err(Error::SingularSystem) => {
                support.truncate(support.len() - picked.len());
                termination = Termination::Singular;
                break;
            }
            Err(e) => return Err(e),
        }
        let norm = norm2(&r);
        residual_norms.push(norm);

        let xhat = dense_estimate(n, &support, &values);
        if norm <= RESIDUAL_STOP_REL * y_norm || eps_rule_fired(cfg, norm, &xhat) {
            termination = Termination::Stopped;
            break;
        }
    }

    let iterations = residual_norms.len();
    let xhat = dense_estimate(n, &support, &values);
    Ok(RecoveryResult {
        support,
        xhat,
        residual_norms,
        iterations,
        termination,
        ls_solves,
        merge_truncations: 0,
    })
}

/// Sorted union of a sorted set with an arbitrary batch of new indices.
fn merge_union(sorted: &[usize], extra: &[usize]) -> Vec<usize> {
    let mut out = sorted.to_vec();
    out.extend_from_slice(extra);
    out.sort_unstable();
    out.dedup();
    out
}

/// CoSaMP and SP, MAP-scored or conventional. Both merge a batch of
/// candidates with the previous pruned support, solve, and prune back to
/// `K`; SP re-solves on the pruned support, CoSaMP keeps the pruned
/// coefficients. The exchange dynamics are not monotone far from
/// convergence, so iterations run until a stopping rule fires, the iterate
/// reaches a fixed point, or the best residual stops improving; the
/// lowest-residual iterate seen is what gets returned.
fn run_two_stage(
    y: &[f64],
    phi: &SensingMatrix,
    cfg: &AlgorithmConfig,
    resolve_on_pruned: bool,
) -> Result<RecoveryResult> {
    let (m, n) = (phi.rows(), phi.cols());
    let k_total = cfg.sparsity;
    let select_width = if resolve_on_pruned { k_total } else { 2 * k_total };
    let ctx = if cfg.algorithm.is_map() {
        Some(LlrContext::new(n, k_total, m, cfg.prior.clone(), cfg.noise)?)
    } else {
        None
    };
    let cap = (2 * k_total).min(cfg.user_iteration_cap());
    let y_norm = norm2(y);

    let mut pruned: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut r = y.to_vec();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut since_improvement = 0usize;
    let mut residual_norms: Vec<f64> = Vec::new();
    let mut termination = Termination::MaxIter;
    let mut ls_solves = 0usize;
    let mut merge_truncations = 0usize;
    let mut prev_norm = f64::INFINITY;

    for k in 1..=cap {
        let z = column_correlations(phi, &r)?;
        let scores = match scores_for(cfg, ctx.as_ref(), m, k, 1, &z) {
            Ok(s) => s,
            Err(Error::ScheduleOverflow { .. }) => {
                termination = Termination::ScheduleGuard;
                break;
            }
            Err(e) => return Err(e),
        };
        let omega = select_top_l(&scores, select_width, &[])?;
        let mut merged = merge_union(&pruned, &omega);
        if merged.len() > m {
            // Keep the M highest-scoring columns so the solve stays overdetermined.
            merged.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            merged.truncate(m);
            merged.sort_unstable();
            merge_truncations += 1;
        }

        let sys = RestrictedSystem::new(phi, merged.clone())?;
        let coarse = match solve_system(&sys, y, cfg.ridge_snr) {
            Ok(b) => {
                ls_solves += 1;
                b
            }
            Err(Error::SingularSystem) => {
                termination = Termination::Singular;
                break;
            }
            Err(e) => return Err(e),
        };
        let padded = dense_estimate(n, &merged, &coarse);
        let keep = top_k_by_magnitude(&padded, k_total)?;

        let (next_values, next_resid) = if resolve_on_pruned {
            let gsys = RestrictedSystem::new(phi, keep.clone())?;
            match solve_system(&gsys, y, cfg.ridge_snr) {
                Ok(xg) => {
                    ls_solves += 1;
                    let resid = gsys.residual(y, &xg)?;
                    (xg, resid)
                }
                Err(Error::SingularSystem) => {
                    termination = Termination::Singular;
                    break;
                }
                Err(e) => return Err(e),
            }
        } else {
            let vals: Vec<f64> = keep.iter().map(|&c| padded[c]).collect();
            let gsys = RestrictedSystem::new(phi, keep.clone())?;
            let resid = gsys.residual(y, &vals)?;
            (vals, resid)
        };

        let norm = norm2(&next_resid);
        let fixed_point = keep == pruned && (norm - prev_norm).abs() <= STAGNATION_REL * norm;
        let improved = best.as_ref().is_none_or(|(b, _, _)| norm < *b);
        if improved {
            best = Some((norm, keep.clone(), next_values.clone()));
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        pruned = keep;
        values = next_values;
        r = next_resid;
        prev_norm = norm;
        residual_norms.push(norm);

        let xhat = dense_estimate(n, &pruned, &values);
        if norm <= RESIDUAL_STOP_REL * y_norm || eps_rule_fired(cfg, norm, &xhat) {
            termination = Termination::Stopped;
            break;
        }
        if fixed_point || since_improvement >= STALL_LIMIT {
            termination = Termination::Stopped;
            break;
        }
    }

    // Return the best iterate seen, not necessarily the last one.
    if let Some((norm, keep, vals)) = best {
        if norm < prev_norm {
            pruned = keep;
            values = vals;
        }
    }
    let iterations = residual_norms.len();
    let xhat = dense_estimate(n, &pruned, &values);
    Ok(RecoveryResult {
        support: pruned,
        xhat,
        residual_norms,
        iterations,
        termination,
        ls_solves,
        merge_truncations,
    })
}
