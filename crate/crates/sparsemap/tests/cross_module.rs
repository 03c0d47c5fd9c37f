//! Cross-module checks: the recovery loops against the exhaustive oracle,
//! end-to-end determinism, and the closed-form ratios against quadrature on
//! schedules the algorithms actually produce.

use sparsemap::detector::{general_schedule, llr_gaussian, llr_uniform, LlrContext};
use sparsemap::ensemble::{
    derive_seed, measure, NoiseModel, SensingMatrix, SignalPrior, SparseSignal,
};
use sparsemap::oracle::{exhaustive_support_search, llr_quadrature};
use sparsemap::recovery::{recover, Algorithm, AlgorithmConfig, StopRule};

#[test]
fn map_omp_matches_exhaustive_search_on_small_instances() {
    let trials = 500u64;
    let mut agree = 0;
    for t in 0..trials {
        let n = 12;
        let m = n;
        let k = 1 + (t % 2) as usize; // 1 or 2
        let seed = derive_seed(9001, &[t]);
        let phi = SensingMatrix::gaussian(m, n, derive_seed(seed, &[0]));
        let x = SparseSignal::generate(n, k, &SignalPrior::Uniform01, derive_seed(seed, &[1]))
            .unwrap();
        let y = measure(&phi, &x, &NoiseModel::noiseless(m), 0).unwrap();
        let cfg = AlgorithmConfig::new(Algorithm::MapOmp, k, SignalPrior::Uniform01,
            NoiseModel::noiseless(m));
        let res = recover(&y, &phi, &cfg).unwrap();
        let oracle = exhaustive_support_search(&y, &phi, k).unwrap();
        if res.support_sorted() == oracle {
            agree += 1;
        }
    }
    let rate = agree as f64 / trials as f64;
    assert!(rate >= 0.99, "oracle agreement rate {rate}");
}

#[test]
fn exhaustive_search_residual_never_beaten_by_greedy() {
    for t in 0..20u64 {
        let m = 10;
        let n = 14;
        let k = 2;
        let seed = derive_seed(88, &[t]);
        let phi = SensingMatrix::gaussian(m, n, derive_seed(seed, &[0]));
        let x =
            SparseSignal::generate(n, k, &SignalPrior::Uniform01, derive_seed(seed, &[1])).unwrap();
        let y = measure(&phi, &x, &NoiseModel::new(0.02, m), derive_seed(seed, &[2])).unwrap();

        let best = exhaustive_support_search(&y, &phi, k).unwrap();
        let best_norm = restricted_residual_norm(&phi, &best, &y);
        for algorithm in [Algorithm::MapOmp, Algorithm::Omp, Algorithm::Sp] {
            let cfg = AlgorithmConfig::new(algorithm, k, SignalPrior::Uniform01,
                NoiseModel::new(0.02, m));
            let res = recover(&y, &phi, &cfg).unwrap();
            if res.support.len() == k {
                let greedy_norm = restricted_residual_norm(&phi, &res.support_sorted(), &y);
                assert!(
                    best_norm <= greedy_norm + 1e-10,
                    "{algorithm:?}: oracle {best_norm} vs greedy {greedy_norm}"
                );
            }
        }
    }
}

fn restricted_residual_norm(phi: &SensingMatrix, support: &[usize], y: &[f64]) -> f64 {
    let sys = sparsemap::linalg::RestrictedSystem::new(phi, support.to_vec()).unwrap();
    let xhat = sys.least_squares(y).unwrap();
    sparsemap::linalg::norm2(&sys.residual(y, &xhat).unwrap())
}

#[test]
fn full_pipeline_deterministic() {
    let run = || {
        let phi = SensingMatrix::gaussian(96, 192, 4242);
        let x = SparseSignal::generate(192, 12, &SignalPrior::Uniform01, 77).unwrap();
        let noise = NoiseModel::new(0.001, 96);
        let y = measure(&phi, &x, &noise, 99).unwrap();
        let mut cfg = AlgorithmConfig::new(Algorithm::MapSp, 12, SignalPrior::Uniform01, noise);
        cfg.stopping = vec![StopRule::OracleError { eps: 1e-12, truth: x.clone() }];
        recover(&y, &phi, &cfg).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn closed_forms_match_quadrature_on_algorithm_schedules() {
    // 100 random (z, schedule) pairs drawn from the schedules the loops
    // really produce, checked against direct numerical integration.
    let mut state = 0xDEADBEEFu64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let m = 128;
    for i in 0..100 {
        let k_sparsity = 10 + (i % 40);
        let iter = 1 + (i % 5);
        let sigma_w2_norm = if i % 3 == 0 { 0.0 } else { next() };
        let z = next() * 4.0 - 1.5;

        let uctx = LlrContext::new(
            256,
            k_sparsity,
            m,
            SignalPrior::Uniform01,
            NoiseModel::new(sigma_w2_norm / m as f64, m),
        )
        .unwrap();
        let us = general_schedule(k_sparsity, iter, 1, m, 1.0 / 3.0, sigma_w2_norm).unwrap();
        let closed = llr_uniform(z, &us, &uctx);
        let quad = llr_quadrature(
            z,
            &SignalPrior::Uniform01,
            us.sigma0_sq,
            us.sigma1_sq,
            uctx.prior_log_odds,
        );
        assert!((closed - quad).abs() < 1e-6, "uniform i={i}: {closed} vs {quad}");

        let prior = SignalPrior::Gaussian { mean: 1.0, var: 0.3 + next() };
        let gctx = LlrContext::new(
            256,
            k_sparsity,
            m,
            prior.clone(),
            NoiseModel::new(sigma_w2_norm / m as f64, m),
        )
        .unwrap();
        let gs =
            general_schedule(k_sparsity, iter, 1, m, prior.second_moment(), sigma_w2_norm).unwrap();
        let (mean, var) = match prior {
            SignalPrior::Gaussian { mean, var } => (mean, var),
            _ => unreachable!(),
        };
        let closed = llr_gaussian(z, mean, var, &gs, &gctx);
        let quad = llr_quadrature(z, &prior, gs.sigma0_sq, gs.sigma1_sq, gctx.prior_log_odds);
        assert!((closed - quad).abs() < 1e-6, "gaussian i={i}: {closed} vs {quad}");
    }
}
