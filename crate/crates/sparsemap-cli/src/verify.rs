//! Driver for the ensemble distribution verifiers: runs every check at the
//! requested trial count, prints one line per check, and reports whether all
//! of them passed.

use std::io::Write;

use sparsemap::oracle::{
    verify_cross_correlation, verify_norm_mean, verify_norm_concentration, verify_estimation_error, MomentReport, MIN_TRIALS,
};

use crate::config::ConfigError;

fn status(pass: bool) -> &'static str {
    if pass { "PASS" } else { "FAIL" }
}

fn moment_line(name: &str, detail: &str, r: &MomentReport) -> String {
    format!(
        "{} {name} {detail} n={} mean={:.6e} z={:.3} var={:.6e} expected_var={:.6e}",
        status(r.pass),
        r.n_samples,
        r.sample_mean,
        r.z_score_mean,
        r.sample_var,
        r.expected_var,
    )
}

/// Runs all verifier checks; returns `Ok(true)` when every one passed.
pub fn run_verify(trials: usize, seed: u64, out: &mut dyn Write) -> anyhow::Result<bool> {
    if trials < MIN_TRIALS {
        return Err(
            ConfigError::new("trials", format!("verifiers need at least {MIN_TRIALS} trials"))
                .into(),
        );
    }
    let mut all = true;
    let mut emit = |line: String, pass: bool, all: &mut bool| -> anyhow::Result<()> {
        *all = *all && pass;
        writeln!(out, "{line}")?;
        Ok(())
    };

    let r = verify_cross_correlation(64, trials, seed)?;
    emit(moment_line("column_inner_product", "M=64", &r), r.pass, &mut all)?;

    for m in [2usize, 128] {
        let r = verify_norm_mean(m, trials, seed)?;
        emit(
            moment_line("column_norm_mean", &format!("M={m}"), &r),
            r.pass,
            &mut all,
        )?;
    }

    let r = verify_norm_concentration(&[4, 64, 1024], trials, seed)?;
    let entries: Vec<String> =
        r.entries.iter().map(|(m, p)| format!("M={m}:{p:.4}")).collect();
    emit(
        format!("{} norm_concentration {}", status(r.pass), entries.join(" ")),
        r.pass,
        &mut all,
    )?;

    // Least-squares error variance with and without noise.
    let clean = verify_estimation_error(64, 8, 4, 1.0, 0.0, trials, seed)?;
    emit(
        moment_line("ls_error_variance", "M=64 K=8 k=4 noise=0", &clean),
        clean.pass,
        &mut all,
    )?;
    let noisy = verify_estimation_error(64, 8, 4, 1.0, 2.0 / 64.0, trials, seed)?;
    emit(
        moment_line("ls_error_variance", "M=64 K=8 k=4 noise_norm=2", &noisy),
        noisy.pass,
        &mut all,
    )?;

    writeln!(out, "{}", if all { "ALL CHECKS PASSED" } else { "SOME CHECKS FAILED" })?;
    Ok(all)
}
