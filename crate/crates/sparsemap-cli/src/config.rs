//! Experiment configuration: CLI flags, the optional TOML config file, and
//! the merged/validated form the runners consume. Flags override file values;
//! validation failures always name the offending field.

use std::fmt;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;
use sparsemap::ensemble::SignalPrior;
use sparsemap::recovery::Algorithm;

/// Which experiment a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    RecoveryProb,
    Nmse,
    Scaling,
    Runtime,
    Image,
    Verify,
}

impl Experiment {
    pub fn label(&self) -> &'static str {
        match self {
            Experiment::RecoveryProb => "recovery_prob",
            Experiment::Nmse => "nmse",
            Experiment::Scaling => "scaling",
            Experiment::Runtime => "runtime",
            Experiment::Image => "image",
            Experiment::Verify => "verify",
        }
    }
}

/// Validation failure carrying the field it concerns.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self { field, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// Flags shared by the `bench` subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Measurement count M
    #[arg(long)]
    pub m: Option<usize>,
    /// Signal dimension N
    #[arg(long)]
    pub n: Option<usize>,
    /// Sparsity level K
    #[arg(long)]
    pub k: Option<usize>,
    /// Sparsity sweep, inclusive "start:end:step"
    #[arg(long, value_name = "A:B:STEP")]
    pub k_range: Option<String>,
    /// Measurement sweep, inclusive "start:end:step"
    #[arg(long, value_name = "A:B:STEP")]
    pub m_range: Option<String>,
    /// Independent trials per sweep point
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed; everything downstream derives from it
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated algorithms (map_mp, map_omp, map_gomp, map_cosamp,
    /// map_sp, omp, gomp, cosamp, sp)
    #[arg(long)]
    pub algos: Option<String>,
    /// Signal prior: binary | uniform | alphabet:c1,c2,... | gaussian:mu,var
    #[arg(long)]
    pub prior: Option<String>,
    /// Per-component noise variance
    #[arg(long)]
    pub sigma_w2: Option<f64>,
    /// SNR sweep in dB, inclusive "start:end:step" ("inf" allowed as a point)
    #[arg(long, value_name = "A:B:STEP")]
    pub snr_db_range: Option<String>,
    /// Selection width L for the gOMP variants
    #[arg(long)]
    pub gomp_l: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores); results do not depend on this
    #[arg(long)]
    pub threads: Option<usize>,
    /// Baseline algorithm for runtime speedup ratios (default: first in --algos)
    #[arg(long)]
    pub baseline: Option<String>,
    /// TOML config file with the same keys as the flags; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// The config-file mirror of [`CommonArgs`]. All keys optional.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    m: Option<usize>,
    n: Option<usize>,
    k: Option<usize>,
    k_range: Option<String>,
    m_range: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    algos: Option<String>,
    prior: Option<String>,
    sigma_w2: Option<f64>,
    snr_db_range: Option<String>,
    gomp_l: Option<usize>,
    out: Option<String>,
    threads: Option<usize>,
    baseline: Option<String>,
}

/// Fully resolved experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub m: usize,
    pub n: usize,
    pub k_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub prior: SignalPrior,
    pub sigma_w2: f64,
    pub snr_db: Vec<f64>,
    pub gomp_width: usize,
    pub master_seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub baseline: Algorithm,
}

fn load_file(path: &std::path::Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))
}

/// Inclusive integer range "a:b:step" (step defaults to 1 when omitted).
pub fn parse_usize_range(text: &str, field: &'static str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(ConfigError::new(field, format!("expected a:b[:step], got `{text}`")));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| ConfigError::new(field, format!("`{s}` is not a non-negative integer")))
    };
    let start = parse(parts[0])?;
    let end = parse(parts[1])?;
    let step = if parts.len() == 3 { parse(parts[2])? } else { 1 };
    if step == 0 {
        return Err(ConfigError::new(field, "step must be positive"));
    }
    if end < start {
        return Err(ConfigError::new(field, "range end below start"));
    }
    Ok((start..=end).step_by(step).collect())
}

/// Inclusive dB range "a:b:step"; the single token "inf" gives the
/// noise-free sentinel point.
pub fn parse_snr_range(text: &str, field: &'static str) -> Result<Vec<f64>> {
    if text.trim() == "inf" {
        return Ok(vec![f64::INFINITY]);
    }
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(ConfigError::new(field, format!("expected a:b:step, got `{text}`")));
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| ConfigError::new(field, format!("`{s}` is not a number")))
    };
    let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step <= 0.0 || step.is_nan() {
        return Err(ConfigError::new(field, "step must be positive"));
    }
    if end < start {
        return Err(ConfigError::new(field, "range end below start"));
    }
    let mut out = Vec::new();
    let mut v = start;
    let mut i = 0;
    while v <= end + 1e-9 {
        out.push(v);
        i += 1;
        v = start + step * i as f64;
    }
    Ok(out)
}

/// Parses `binary | uniform | alphabet:c1,c2,... | gaussian:mu,var`.
pub fn parse_prior(text: &str, field: &'static str) -> Result<SignalPrior> {
    let t = text.trim();
    let prior = if t == "binary" {
        SignalPrior::Binary
    } else if t == "uniform" {
        SignalPrior::Uniform01
    } else if let Some(rest) = t.strip_prefix("alphabet:") {
        let values: std::result::Result<Vec<f64>, _> =
            rest.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match values {
            Ok(v) => SignalPrior::FiniteAlphabet(v),
            Err(_) => {
                return Err(ConfigError::new(field, format!("bad alphabet list `{rest}`")));
            }
        }
    } else if let Some(rest) = t.strip_prefix("gaussian:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(ConfigError::new(field, "gaussian prior needs `gaussian:mu,var`"));
        }
        let mean = parts[0].trim().parse::<f64>().map_err(|_| {
            ConfigError::new(field, format!("`{}` is not a number", parts[0]))
        })?;
        let var = parts[1].trim().parse::<f64>().map_err(|_| {
            ConfigError::new(field, format!("`{}` is not a number", parts[1]))
        })?;
        SignalPrior::Gaussian { mean, var }
    } else {
        return Err(ConfigError::new(
            field,
            format!("unknown prior `{t}` (binary | uniform | alphabet:... | gaussian:mu,var)"),
        ));
    };
    prior
        .validate()
        .map_err(|e| ConfigError::new(field, e.to_string()))?;
    Ok(prior)
}

pub fn parse_algorithms(text: &str, field: &'static str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for name in text.split(',') {
        let name = name.trim();
        if name.is_empty() {
            continue;
        }
        let algorithm = name
            .parse::<Algorithm>()
            .map_err(|_| ConfigError::new(field, format!("unknown algorithm `{name}`")))?;
        if !out.contains(&algorithm) {
            out.push(algorithm);
        }
    }
    if out.is_empty() {
        return Err(ConfigError::new(field, "algorithm list is empty"));
    }
    Ok(out)
}

/// A user-facing label for each prior, free of commas so it embeds in CSV.
pub fn prior_label(prior: &SignalPrior) -> String {
    match prior {
        SignalPrior::Binary => "binary".into(),
        SignalPrior::Uniform01 => "uniform".into(),
        SignalPrior::FiniteAlphabet(c) => {
            let items: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
            format!("alphabet({})", items.join(";"))
        }
        SignalPrior::Gaussian { mean, var } => format!("gaussian({mean};{var})"),
    }
}

impl CommonArgs {
    /// Resolves flags over the optional config file into an
    /// [`ExperimentConfig`] with per-experiment defaults, then validates it.
    pub fn resolve(&self, experiment: Experiment) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let m = self.m.or(file.m).unwrap_or(128);
        let n = self.n.or(file.n).unwrap_or(256);
        let trials = self.trials.or(file.trials).unwrap_or(200);
        let master_seed = self.seed.or(file.seed).unwrap_or(0);
        let gomp_width = self.gomp_l.or(file.gomp_l).unwrap_or(2);
        let sigma_w2 = self.sigma_w2.or(file.sigma_w2).unwrap_or(0.0);
        let threads = self.threads.or(file.threads);

        let prior_text = self.prior.clone().or(file.prior);
        let prior = match prior_text {
            Some(t) => parse_prior(&t, "prior")?,
            None => match experiment {
                // The noisy benchmark defaults to the near-constant Gaussian
                // prior with mean one and variance 1/M^2.
                Experiment::Nmse => {
                    SignalPrior::Gaussian { mean: 1.0, var: 1.0 / (m as f64 * m as f64) }
                }
                Experiment::Scaling | Experiment::Image => SignalPrior::Binary,
                _ => SignalPrior::Binary,
            },
        };

        let algos_text = self.algos.clone().or(file.algos);
        let algorithms = match algos_text {
            Some(t) => parse_algorithms(&t, "algos")?,
            None => match experiment {
                Experiment::Scaling => vec![Algorithm::MapMp],
                Experiment::Nmse => vec![
                    Algorithm::MapGomp,
                    Algorithm::MapSp,
                    Algorithm::Gomp,
                    Algorithm::Sp,
                ],
                _ => vec![
                    Algorithm::MapOmp,
                    Algorithm::MapGomp,
                    Algorithm::MapCosamp,
                    Algorithm::MapSp,
                    Algorithm::Omp,
                    Algorithm::Gomp,
                    Algorithm::Cosamp,
                    Algorithm::Sp,
                ],
            },
        };

        let k_single = self.k.or(file.k);
        let k_range_text = self.k_range.clone().or(file.k_range);
        let k_values = match (&k_range_text, k_single) {
            (Some(range), _) => parse_usize_range(range, "k_range")?,
            (None, Some(k)) => vec![k],
            (None, None) => match experiment {
                // Sweep the phase-transition region, which scales with M.
                Experiment::RecoveryProb => (4..=m / 2).step_by(4).collect(),
                Experiment::Nmse | Experiment::Runtime => vec![40],
                Experiment::Scaling => vec![5],
                _ => vec![40],
            },
        };

        let m_range_text = self.m_range.clone().or(file.m_range);
        let m_values = match &m_range_text {
            Some(range) => parse_usize_range(range, "m_range")?,
            None => match experiment {
                Experiment::Scaling => (40..=160).step_by(20).collect(),
                _ => vec![m],
            },
        };

        let snr_text = self.snr_db_range.clone().or(file.snr_db_range);
        let snr_db = match &snr_text {
            Some(range) => parse_snr_range(range, "snr_db_range")?,
            None => match experiment {
                Experiment::Nmse => vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                _ => Vec::new(),
            },
        };

        let out = self
            .out
            .clone()
            .or(file.out.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", experiment.label())));

        let baseline_text = self.baseline.clone().or(file.baseline);
        let baseline = match baseline_text {
            Some(t) => t
                .trim()
                .parse::<Algorithm>()
                .map_err(|_| ConfigError::new("baseline", format!("unknown algorithm `{t}`")))?,
            None => algorithms[0],
        };

        let cfg = ExperimentConfig {
            experiment,
            m,
            n,
            k_values,
            m_values,
            trials,
            algorithms,
            prior,
            sigma_w2,
            snr_db,
            gomp_width,
            master_seed,
            out,
            threads,
            baseline,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(ConfigError::new("m", "must be positive"));
        }
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be positive"));
        }
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        if self.k_values.is_empty() {
            return Err(ConfigError::new("k_range", "sweep is empty"));
        }
        if self.m_values.is_empty() {
            return Err(ConfigError::new("m_range", "sweep is empty"));
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::new("algos", "algorithm list is empty"));
        }
        if self.sigma_w2 < 0.0 {
            return Err(ConfigError::new("sigma_w2", "must be non-negative"));
        }
        if self.gomp_width == 0 {
            return Err(ConfigError::new("gomp_l", "must be positive"));
        }
        match self.experiment {
            Experiment::RecoveryProb | Experiment::Runtime | Experiment::Nmse => {
                if self.m >= self.n {
                    return Err(ConfigError::new("m", "compressive experiments need M < N"));
                }
                for &k in &self.k_values {
                    if k == 0 || k >= self.n {
                        return Err(ConfigError::new("k_range", format!("K={k} not in 1..N")));
                    }
                }
            }
            Experiment::Scaling => {
                for &k in &self.k_values {
                    if k == 0 || k >= self.n {
                        return Err(ConfigError::new("k", format!("K={k} not in 1..N")));
                    }
                }
                if self.algorithms != vec![Algorithm::MapMp] {
                    return Err(ConfigError::new(
                        "algos",
                        "the scaling experiment runs map_mp only",
                    ));
                }
                if self.prior != SignalPrior::Binary {
                    return Err(ConfigError::new("prior", "the scaling experiment is binary"));
                }
            }
            _ => {}
        }
        if self.experiment == Experiment::Nmse && self.snr_db.is_empty() {
            return Err(ConfigError::new("snr_db_range", "sweep is empty"));
        }
        if self.experiment == Experiment::Runtime && self.algorithms.len() < 2 {
            return Err(ConfigError::new("algos", "runtime comparison needs >= 2 algorithms"));
        }
        if self.experiment == Experiment::Runtime && !self.algorithms.contains(&self.baseline) {
            return Err(ConfigError::new("baseline", "baseline must appear in --algos"));
        }
        if self.algorithms.contains(&Algorithm::MapMp) && self.prior != SignalPrior::Binary {
            return Err(ConfigError::new("algos", "map_mp requires the binary prior"));
        }
        let needs_gomp = self
            .algorithms
            .iter()
            .any(|a| matches!(a, Algorithm::MapGomp | Algorithm::Gomp));
        if needs_gomp {
            for (&k, mcand) in self
                .k_values
                .iter()
                .flat_map(|k| self.m_values.iter().map(move |m| (k, *m)))
            {
                if self.gomp_width > mcand / k {
                    return Err(ConfigError::new(
                        "gomp_l",
                        format!("L={} exceeds M/K = {}/{}", self.gomp_width, mcand, k),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_usize_range("1:9:3", "k_range").unwrap(), vec![1, 4, 7]);
        assert_eq!(parse_usize_range("5:5", "k_range").unwrap(), vec![5]);
        assert!(parse_usize_range("5:1:1", "k_range").is_err());
        assert!(parse_usize_range("1:5:0", "k_range").is_err());
        assert!(parse_usize_range("a:b", "k_range").is_err());
        assert_eq!(
            parse_snr_range("5:30:5", "snr_db_range").unwrap(),
            vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
        );
        assert_eq!(parse_snr_range("inf", "snr_db_range").unwrap(), vec![f64::INFINITY]);
    }

    #[test]
    fn priors_parse() {
        assert_eq!(parse_prior("binary", "prior").unwrap(), SignalPrior::Binary);
        assert_eq!(parse_prior("uniform", "prior").unwrap(), SignalPrior::Uniform01);
        assert_eq!(
            parse_prior("alphabet:0,1,2", "prior").unwrap(),
            SignalPrior::FiniteAlphabet(vec![0.0, 1.0, 2.0])
        );
        assert_eq!(
            parse_prior("gaussian:1,0.5", "prior").unwrap(),
            SignalPrior::Gaussian { mean: 1.0, var: 0.5 }
        );
        assert!(parse_prior("alphabet:0.5,0.5", "prior").is_err());
        assert!(parse_prior("gaussian:1", "prior").is_err());
        assert!(parse_prior("weird", "prior").is_err());
    }

    #[test]
    fn algorithms_parse() {
        let algos = parse_algorithms("map_omp, sp,map_omp", "algos").unwrap();
        assert_eq!(algos, vec![Algorithm::MapOmp, Algorithm::Sp]);
        assert!(parse_algorithms("nope", "algos").is_err());
        assert!(parse_algorithms(" , ", "algos").is_err());
    }

    #[test]
    fn defaults_resolve_per_experiment() {
        let args = CommonArgs::default();
        let rp = args.resolve(Experiment::RecoveryProb).unwrap();
        assert_eq!(rp.m, 128);
        assert_eq!(rp.n, 256);
        assert_eq!(rp.trials, 200);
        assert_eq!(rp.algorithms.len(), 8);
        let sc = args.resolve(Experiment::Scaling).unwrap();
        assert_eq!(sc.algorithms, vec![Algorithm::MapMp]);
        assert_eq!(sc.m_values, vec![40, 60, 80, 100, 120, 140, 160]);
        let nm = args.resolve(Experiment::Nmse).unwrap();
        assert_eq!(nm.snr_db.len(), 6);
        assert!(matches!(nm.prior, SignalPrior::Gaussian { .. }));
    }

    #[test]
    fn flags_override_file() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "m = 64\nn = 128\ntrials = 7\nseed = 3\nprior = \"uniform\"").unwrap();
        let args = CommonArgs {
            trials: Some(11),
            config: Some(file.path().to_path_buf()),
            ..Default::default()
        };
        let cfg = args.resolve(Experiment::RecoveryProb).unwrap();
        assert_eq!(cfg.m, 64);
        assert_eq!(cfg.trials, 11);
        assert_eq!(cfg.master_seed, 3);
        assert_eq!(cfg.prior, SignalPrior::Uniform01);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "bogus = 1").unwrap();
        let args =
            CommonArgs { config: Some(file.path().to_path_buf()), ..Default::default() };
        let err = args.resolve(Experiment::RecoveryProb).unwrap_err();
        assert_eq!(err.field, "config");
    }

    #[test]
    fn validation_names_fields() {
        let args = CommonArgs { m: Some(300), ..Default::default() };
        let err = args.resolve(Experiment::RecoveryProb).unwrap_err();
        assert_eq!(err.field, "m");

        let args = CommonArgs { algos: Some("map_mp".into()), prior: Some("uniform".into()), ..Default::default() };
        let err = args.resolve(Experiment::RecoveryProb).unwrap_err();
        assert_eq!(err.field, "algos");

        let args = CommonArgs { gomp_l: Some(9), k: Some(40), ..Default::default() };
        let err = args.resolve(Experiment::RecoveryProb).unwrap_err();
        assert_eq!(err.field, "gomp_l");
    }
}
