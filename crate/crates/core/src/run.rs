//! Batch runs: configuration files, execution over a list of rates, and run
//! manifests.
//!
//! A configuration is a flat TOML file:
//!
//! ```toml
//! d = 3
//! L = 6
//! p = [0.05, 0.1, 0.15]
//! runtime_factor = 2
//! samples = 2000
//! master_seed = 1
//! workers = 8
//! output_dir = "runs/L6"
//! outcome_mode = "forced"
//! ```
//!
//! `HYPERDIAMOND_WORKERS` overrides `workers`, and a relative `output_dir`
//! is resolved against `HYPERDIAMOND_OUTPUT_ROOT` when that is set.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::circuit::OutcomeMode;
use crate::error::{Error, Result};
use crate::experiment::{run_ensemble_persisted, write_observables_csv, write_profile_csv, EnsembleSummary, ProtocolConfig};
use crate::seeding::sample_seed;

pub const WORKERS_ENV: &str = "HYPERDIAMOND_WORKERS";
pub const OUTPUT_ROOT_ENV: &str = "HYPERDIAMOND_OUTPUT_ROOT";

pub const PROFILE_FILE: &str = "profiles.csv";
pub const OBSERVABLES_FILE: &str = "observables.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn default_runtime_factor() -> usize {
    2
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub p: Vec<f64>,
    #[serde(default = "default_runtime_factor")]
    pub runtime_factor: usize,
    pub samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub outcome_mode: OutcomeMode,
    #[serde(default)]
    pub time_window: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a TOML configuration, or the configuration stored in a run
    /// manifest (`.json`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let m: RunManifest =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            m.config.validate()?;
            return Ok(m.config);
        }
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies the environment overrides.
    pub fn with_env(mut self) -> Result<Self> {
        if let Ok(w) = std::env::var(WORKERS_ENV) {
            let w: usize = w
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{w}`")))?;
            self.workers = Some(w);
        }
        if let Ok(root) = std::env::var(OUTPUT_ROOT_ENV) {
            if self.output_dir.is_relative() {
                self.output_dir = Path::new(&root).join(&self.output_dir);
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() {
            return Err(Error::Config("p must list at least one rate".into()));
        }
        let mut sorted = self.p.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("p contains duplicate rates".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        for &p in &self.p {
            self.protocol(p).validate()?;
        }
        Ok(())
    }

    pub fn protocol(&self, p: f64) -> ProtocolConfig {
        ProtocolConfig {
            d: self.d,
            l: self.l,
            p,
            runtime_factor: self.runtime_factor,
            samples: self.samples,
            master_seed: self.master_seed,
            time_window: self.time_window.clone(),
            outcome_mode: self.outcome_mode,
        }
    }

    /// Directory holding the per-sample records of rate `p`.
    pub fn sample_dir(&self, p: f64) -> PathBuf {
        self.output_dir.join("samples").join(format!("d{}_L{}_p{p}", self.d, self.l))
    }
}

/// Everything needed to reproduce a run. Sample `i` uses seed
/// `sample_seeds[i]` at every rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub sample_seeds: Vec<u64>,
    pub outputs: Vec<PathBuf>,
    /// Wall-clock seconds per rate, in the order of `config.p`.
    pub seconds_per_rate: Vec<f64>,
    pub total_seconds: f64,
}

/// Runs every rate of `config`, reusing stored samples, and writes the
/// profile table, the observable table and the manifest to `output_dir`.
pub fn execute_run(config: &RunConfig) -> Result<(RunManifest, Vec<EnsembleSummary>)> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&config.output_dir)?;
    let mut summaries = Vec::with_capacity(config.p.len());
    let mut seconds = Vec::with_capacity(config.p.len());
    for &p in &config.p {
        let t0 = Instant::now();
        summaries.push(run_ensemble_persisted(&config.protocol(p), config.workers, &config.sample_dir(p))?);
        seconds.push(t0.elapsed().as_secs_f64());
    }
    let refs: Vec<&EnsembleSummary> = summaries.iter().collect();
    let profile_path = config.output_dir.join(PROFILE_FILE);
    let observables_path = config.output_dir.join(OBSERVABLES_FILE);
    write_profile_csv(&refs, fs::File::create(&profile_path)?)?;
    write_observables_csv(&refs, fs::File::create(&observables_path)?)?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        master_seed: config.master_seed,
        sample_seeds: (0..config.samples as u64).map(|i| sample_seed(config.master_seed, i)).collect(),
        outputs: vec![profile_path, observables_path],
        seconds_per_rate: seconds,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    fs::write(
        config.output_dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok((manifest, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "d = 3\nL = 2\np = [0.0, 0.2]\nsamples = 2\nmaster_seed = 5\n";

    #[test]
    fn parse_defaults_and_errors() {
        let c = RunConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(c.runtime_factor, 2);
        assert_eq!(c.outcome_mode, OutcomeMode::Forced);
        assert_eq!(c.output_dir, PathBuf::from("output"));
        let odd = BASIC.replace("L = 2", "L = 3");
        assert!(matches!(RunConfig::from_toml_str(&odd), Err(Error::Config(_))));
        let bad_p = BASIC.replace("0.2]", "1.2]");
        assert!(matches!(RunConfig::from_toml_str(&bad_p), Err(Error::Config(_))));
        let unknown = format!("{BASIC}colour = 1\n");
        assert!(RunConfig::from_toml_str(&unknown).is_err());
        let dup = BASIC.replace("0.2]", "0.0]");
        assert!(RunConfig::from_toml_str(&dup).is_err());
    }

    #[test]
    fn run_writes_reproducible_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::from_toml_str(BASIC).unwrap();
        c.output_dir = dir.path().join("a");
        c.workers = Some(1);
        let (m, s) = execute_run(&c).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(m.sample_seeds.len(), 2);
        let first = fs::read(c.output_dir.join(PROFILE_FILE)).unwrap();
        let manifest_path = c.output_dir.join(MANIFEST_FILE);
        let mut again = RunConfig::load(&manifest_path).unwrap();
        assert_eq!(again, c);
        again.output_dir = dir.path().join("b");
        again.workers = Some(3);
        execute_run(&again).unwrap();
        assert_eq!(first, fs::read(again.output_dir.join(PROFILE_FILE)).unwrap());
        assert_eq!(
            fs::read(c.output_dir.join(OBSERVABLES_FILE)).unwrap(),
            fs::read(again.output_dir.join(OBSERVABLES_FILE)).unwrap()
        );
    }
}
