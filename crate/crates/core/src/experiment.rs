//! The joined-halves protocol and its disorder ensembles.
//!
//! Two halves of the `4L x L^(d-1)` lattice are scrambled independently, the
//! circuit runs for `T = r L` steps, and at the recorded times the entropy
//! `S(x, t)` of every cut perpendicular to `x` is stored, with `x = 0` the
//! central cut. Per realization, `dS(+-k) = [S(k) - S(0) + S(-k) - S(0)] / 2`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{ratio_r12, ratio_r1d1, DeltaStats, Estimate};
use crate::circuit::{sample_realization, OutcomeMode};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::seeding::{sample_seed, splitmix64, stream_rng, Stream};
use crate::stabilizer::Tableau;

const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub p: f64,
    pub runtime_factor: usize,
    pub samples: usize,
    pub master_seed: u64,
    /// Even times at which profiles are recorded; all even `t <= T` (from
    /// 0) when absent.
    pub time_window: Option<Vec<usize>>,
    pub outcome_mode: OutcomeMode,
}

impl ProtocolConfig {
    /// Defaults: `r = 2`, one sample, seed 0, every even time, forced
    /// outcomes.
    pub fn new(d: usize, l: usize, p: f64) -> Self {
        Self {
            d,
            l,
            p,
            runtime_factor: 2,
            samples: 1,
            master_seed: 0,
            time_window: None,
            outcome_mode: OutcomeMode::Forced,
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn with_window(mut self, times: Vec<usize>) -> Self {
        self.time_window = Some(times);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.l < 2 || self.l % 2 == 1 {
            return bad(format!("L must be even and at least 2, got {}", self.l));
        }
        if !(1..=3).contains(&self.d) {
            return bad(format!("d must be 1, 2 or 3, got {}", self.d));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1], got {}", self.p));
        }
        if self.runtime_factor == 0 {
            return bad("runtime_factor must be positive".into());
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if let Some(w) = &self.time_window {
            if w.is_empty() {
                return bad("time_window is empty".into());
            }
            if let Some(t) = w.iter().find(|&&t| t % 2 == 1 || t > self.steps()) {
                return bad(format!("window time {t} is odd or beyond T = {}", self.steps()));
            }
        }
        Ok(())
    }

    /// `T = r L`.
    pub fn steps(&self) -> usize {
        self.runtime_factor * self.l
    }

    pub fn lattice(&self) -> Result<LatticeSpec> {
        LatticeSpec::protocol(self.d, self.l)
    }

    /// Sorted, deduplicated recording times.
    pub fn recorded_times(&self) -> Vec<usize> {
        let mut times = match &self.time_window {
            Some(w) => w.clone(),
            None => (0..=self.steps()).step_by(2).collect(),
        };
        times.sort_unstable();
        times.dedup();
        times
    }

    /// Last time of the default analysis window: `2L`, or `T` if shorter.
    pub fn analysis_end(&self) -> usize {
        (2 * self.l).min(self.steps()) / 2 * 2
    }

    /// `{e - 4, e - 2, e}` for the window end `e`, restricted to `t >= 0`.
    pub fn analysis_window(&self) -> Vec<usize> {
        let e = self.analysis_end();
        [4usize, 2, 0].iter().filter(|&&k| k <= e).map(|k| e - k).collect()
    }

    /// Centre and half-width of [`Self::analysis_window`].
    pub fn analysis_center(&self) -> (usize, usize) {
        analysis_center_for(self.l, self.steps())
    }
}

pub(crate) fn analysis_center_for(l: usize, steps: usize) -> (usize, usize) {
    let e = (2 * l).min(steps) / 2 * 2;
    let s = e.saturating_sub(4);
    ((s + e) / 2, (e - s) / 2)
}

/// Entropy profiles of one realization. `profiles[i][k]` is `S` at time
/// `times[i]` for the cut at `x = k - 2L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub sample_seed: u64,
    pub times: Vec<usize>,
    pub profiles: Vec<Vec<u32>>,
}

impl EntropyRecord {
    pub fn profile_at(&self, t: usize) -> Option<&[u32]> {
        self.times.iter().position(|&s| s == t).map(|i| self.profiles[i].as_slice())
    }

    /// `dS(+-k)` at time `t`.
    pub fn delta(&self, t: usize, k: usize) -> Option<f64> {
        let prof = self.profile_at(t)?;
        let c = prof.len() / 2;
        if k > c {
            return None;
        }
        let s0 = prof[c] as f64;
        Some(((prof[c + k] as f64 - s0) + (prof[c - k] as f64 - s0)) / 2.0)
    }
}

/// `|0...0>` with each half independently replaced by a uniformly random
/// stabilizer state.
pub fn prepare_initial_state<R: rand::Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> Result<Tableau> {
    config.validate()?;
    let n = config.lattice()?.num_sites();
    let mut t = Tableau::new_computational_basis(n)?;
    let left: Vec<usize> = (0..n / 2).collect();
    let right: Vec<usize> = (n / 2..n).collect();
    t.scramble_random_clifford(&left, rng)?;
    t.scramble_random_clifford(&right, rng)?;
    Ok(t)
}

pub fn run_realization(config: &ProtocolConfig, sample_seed: u64) -> Result<EntropyRecord> {
    config.validate()?;
    let spec = config.lattice()?;
    let groups = spec.cut_prefix_groups();
    let times = config.recorded_times();
    let mut tableau = prepare_initial_state(config, &mut stream_rng(sample_seed, Stream::Scramble))?;
    let circuit = sample_realization(&spec, config.p, config.steps(), sample_seed)?;
    let mut profiles = Vec::with_capacity(times.len());
    let mut failure = None;
    let mut record = |tab: &Tableau| match tab.entropy_profile(&groups) {
        Ok(p) => profiles.push(p.into_iter().map(|s| s as u32).collect::<Vec<u32>>()),
        Err(e) => failure = Some(e),
    };
    if times.first() == Some(&0) {
        record(&tableau);
    }
    let last = *times.last().expect("validated window is non-empty");
    circuit.apply(&mut tableau, last, config.outcome_mode, |t, tab| {
        if times.binary_search(&t).is_ok() {
            record(tab);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(EntropyRecord {
        sample_seed,
        times,
        profiles,
    })
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Records for samples `indices`, in index order. `workers = None` uses the
/// global pool.
pub fn run_records(
    config: &ProtocolConfig,
    indices: std::ops::Range<u64>,
    workers: Option<usize>,
) -> Result<Vec<EntropyRecord>> {
    config.validate()?;
    with_pool(workers, || {
        indices
            .into_par_iter()
            .map(|i| run_realization(config, sample_seed(config.master_seed, i)))
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn run_ensemble(config: &ProtocolConfig, workers: Option<usize>) -> Result<EnsembleSummary> {
    let records = run_records(config, 0..config.samples as u64, workers)?;
    EnsembleSummary::from_records(config, &records)
}

#[derive(Serialize, Deserialize)]
struct StoredSample {
    index: u64,
    record: EntropyRecord,
}

fn sample_path(dir: &Path, index: u64) -> PathBuf {
    dir.join(format!("sample_{index:07}.json"))
}

/// Like [`run_ensemble`], but each record is stored in `dir` as
/// `sample_NNNNNNN.json` and existing files are reused. The directory also
/// keeps the configuration (without the sample count) and refuses to mix
/// records from a different one.
pub fn run_ensemble_persisted(config: &ProtocolConfig, workers: Option<usize>, dir: &Path) -> Result<EnsembleSummary> {
    config.validate()?;
    fs::create_dir_all(dir)?;
    let key_path = dir.join("ensemble.json");
    let mut key = config.clone();
    key.samples = 0;
    let key_json = serde_json::to_string_pretty(&key)?;
    match fs::read_to_string(&key_path) {
        Ok(existing) if existing != key_json => {
            return Err(Error::Config(format!(
                "{} holds samples of a different configuration",
                dir.display()
            )))
        }
        Ok(_) => {}
        Err(_) => fs::write(&key_path, &key_json)?,
    }
    let records = with_pool(workers, || {
        (0..config.samples as u64)
            .into_par_iter()
            .map(|i| -> Result<EntropyRecord> {
                let seed = sample_seed(config.master_seed, i);
                let path = sample_path(dir, i);
                if let Ok(text) = fs::read_to_string(&path) {
                    if let Ok(stored) = serde_json::from_str::<StoredSample>(&text) {
                        if stored.index == i && stored.record.sample_seed == seed {
                            return Ok(stored.record);
                        }
                    }
                }
                let record = run_realization(config, seed)?;
                let tmp = path.with_extension("tmp");
                let mut f = fs::File::create(&tmp)?;
                f.write_all(serde_json::to_string(&StoredSample { index: i, record: record.clone() })?.as_bytes())?;
                drop(f);
                fs::rename(&tmp, &path)?;
                Ok(record)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    EnsembleSummary::from_records(config, &records)
}

/// Ratio observables of one recorded time (or time window).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeObservables {
    pub t: usize,
    /// 0 for a single time; the window half-width for window averages.
    pub half_width: usize,
    pub stats: DeltaStats,
    /// `None` when `E[dS(+-2)] = 0`.
    pub r12: Option<Estimate>,
    /// `None` when `sigma[dS(+-1)] = 0` or fewer than two samples.
    pub r1d1: Option<Estimate>,
}

impl TimeObservables {
    fn from_deltas(config: &ProtocolConfig, t: usize, half_width: usize, deltas: &[[f64; 2]]) -> Self {
        let stats = DeltaStats::from_pairs(deltas);
        let ds1: Vec<f64> = deltas.iter().map(|d| d[0]).collect();
        let boot_seed = splitmix64(config.master_seed ^ ((t as u64) << 32 | half_width as u64));
        Self {
            t,
            half_width,
            stats,
            r12: ratio_r12(&stats).ok(),
            r1d1: ratio_r1d1(&ds1, BOOTSTRAP_RESAMPLES, boot_seed).ok(),
        }
    }
}

/// Disorder averages of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub config: ProtocolConfig,
    pub n_samples: usize,
    pub times: Vec<usize>,
    /// Cut positions, `-2L..=2L`.
    pub xs: Vec<i64>,
    /// `mean_s[i][k]`: mean of `S(xs[k], times[i])`.
    pub mean_s: Vec<Vec<f64>>,
    /// Sample standard deviation; `NaN` for a single sample.
    pub std_s: Vec<Vec<f64>>,
    pub observables: Vec<TimeObservables>,
    /// `deltas[i][j]` = `(dS(+-1), dS(+-2))` of sample `j` at `times[i]`.
    pub deltas: Vec<Vec<[f64; 2]>>,
}

impl EnsembleSummary {
    /// Aggregates in record order; the result does not depend on how the
    /// records were produced.
    pub fn from_records(config: &ProtocolConfig, records: &[EntropyRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Analysis("ensemble has no records".into()))?;
        let times = first.times.clone();
        if records.iter().any(|r| r.times != times) {
            return Err(Error::Analysis("records cover different times".into()));
        }
        let width = 4 * config.l + 1;
        if records.iter().flat_map(|r| &r.profiles).any(|p| p.len() != width) {
            return Err(Error::Analysis(format!("profiles must have {width} entries")));
        }
        let n = records.len();
        let nf = n as f64;
        let mut mean_s = Vec::with_capacity(times.len());
        let mut std_s = Vec::with_capacity(times.len());
        let mut deltas = Vec::with_capacity(times.len());
        let mut observables = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            let mut mean = vec![0.0; width];
            for r in records {
                for (m, &s) in mean.iter_mut().zip(&r.profiles[i]) {
                    *m += s as f64;
                }
            }
            mean.iter_mut().for_each(|m| *m /= nf);
            let std: Vec<f64> = if n < 2 {
                vec![f64::NAN; width]
            } else {
                (0..width)
                    .map(|k| {
                        let ss: f64 = records.iter().map(|r| (r.profiles[i][k] as f64 - mean[k]).powi(2)).sum();
                        (ss / (nf - 1.0)).sqrt()
                    })
                    .collect()
            };
            let d: Vec<[f64; 2]> = records
                .iter()
                .map(|r| [r.delta(t, 1).unwrap_or(f64::NAN), r.delta(t, 2).unwrap_or(f64::NAN)])
                .collect();
            observables.push(TimeObservables::from_deltas(config, t, 0, &d));
            mean_s.push(mean);
            std_s.push(std);
            deltas.push(d);
        }
        let l = config.l as i64;
        Ok(Self {
            config: config.clone(),
            n_samples: n,
            times,
            xs: (-2 * l..=2 * l).collect(),
            mean_s,
            std_s,
            observables,
            deltas,
        })
    }

    pub fn time_index(&self, t: usize) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }

    pub fn observables_at(&self, t: usize) -> Option<&TimeObservables> {
        self.observables.iter().find(|o| o.t == t)
    }

    /// Observables averaged over the default analysis window.
    pub fn analysis_observables(&self) -> Result<WindowAverage> {
        let (c, hw) = self.config.analysis_center();
        time_window_average(self, c, hw)
    }
}

/// Observables averaged over the recorded even times in
/// `[center - half_width, center + half_width]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowAverage {
    pub times: Vec<usize>,
    /// Mean profile averaged over the window, indexed like
    /// [`EnsembleSummary::xs`].
    pub mean_s: Vec<f64>,
    /// Statistics of the per-sample window-averaged `dS(+-1)`, `dS(+-2)`.
    pub observables: TimeObservables,
    /// Per-sample window averages.
    pub deltas: Vec<[f64; 2]>,
}

pub fn time_window_average(summary: &EnsembleSummary, center: usize, half_width: usize) -> Result<WindowAverage> {
    let lo = center.saturating_sub(half_width);
    let hi = center + half_width;
    let idx: Vec<usize> = summary
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= lo && t <= hi && t % 2 == 0)
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(Error::Analysis(format!(
            "no recorded times in [{lo}, {hi}] (recorded: {:?})",
            summary.times
        )));
    }
    let k = idx.len() as f64;
    let width = summary.xs.len();
    let mut mean_s = vec![0.0; width];
    for &i in &idx {
        for (m, v) in mean_s.iter_mut().zip(&summary.mean_s[i]) {
            *m += v;
        }
    }
    mean_s.iter_mut().for_each(|m| *m /= k);
    let deltas: Vec<[f64; 2]> = (0..summary.n_samples)
        .map(|j| {
            let mut acc = [0.0; 2];
            for &i in &idx {
                acc[0] += summary.deltas[i][j][0];
                acc[1] += summary.deltas[i][j][1];
            }
            [acc[0] / k, acc[1] / k]
        })
        .collect();
    Ok(WindowAverage {
        times: idx.iter().map(|&i| summary.times[i]).collect(),
        mean_s,
        observables: TimeObservables::from_deltas(&summary.config, center, half_width, &deltas),
        deltas,
    })
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

/// Profile table: one row per (t, x) with columns
/// `L,d,p,t,x,mean_S,std_S,n_samples`. A `NaN` standard deviation marks a
/// single-sample ensemble.
pub fn write_profile_csv<W: std::io::Write>(summaries: &[&EnsembleSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_COLUMNS)?;
    for s in summaries {
        let c = &s.config;
        for (i, &t) in s.times.iter().enumerate() {
            for (k, &x) in s.xs.iter().enumerate() {
                w.write_record([
                    c.l.to_string(),
                    c.d.to_string(),
                    fmt_f64(c.p),
                    t.to_string(),
                    x.to_string(),
                    fmt_f64(s.mean_s[i][k]),
                    fmt_f64(s.std_s[i][k]),
                    s.n_samples.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub const PROFILE_COLUMNS: [&str; 8] = ["L", "d", "p", "t", "x", "mean_S", "std_S", "n_samples"];

pub const OBSERVABLE_COLUMNS: [&str; 16] = [
    "L", "d", "p", "t", "half_width", "mean_dS1", "mean_dS2", "std_dS1", "std_dS2", "cov_dS12", "R12", "R12_se",
    "R1d1", "R1d1_se", "n_samples", "T",
];

/// Observable table: one row per recorded time (`half_width = 0`) plus one
/// row for the default analysis window. Missing ratios are written as `NaN`.
pub fn write_observables_csv<W: std::io::Write>(summaries: &[&EnsembleSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OBSERVABLE_COLUMNS)?;
    for s in summaries {
        let mut rows: Vec<TimeObservables> = s.observables.clone();
        if let Ok(win) = s.analysis_observables() {
            rows.push(win.observables);
        }
        let c = &s.config;
        for o in rows {
            let est = |e: Option<Estimate>| e.map_or((f64::NAN, f64::NAN), |e| (e.value, e.se));
            let (r12, r12se) = est(o.r12);
            let (r1d1, r1d1se) = est(o.r1d1);
            w.write_record([
                c.l.to_string(),
                c.d.to_string(),
                fmt_f64(c.p),
                o.t.to_string(),
                o.half_width.to_string(),
                fmt_f64(o.stats.mean1),
                fmt_f64(o.stats.mean2),
                fmt_f64(o.stats.std1),
                fmt_f64(o.stats.std2),
                fmt_f64(o.stats.cov12),
                fmt_f64(r12),
                fmt_f64(r12se),
                fmt_f64(r1d1),
                fmt_f64(r1d1se),
                o.stats.n.to_string(),
                c.steps().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A row of the observable table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    pub p: f64,
    pub t: usize,
    pub half_width: usize,
    #[serde(rename = "mean_dS1")]
    pub mean_ds1: f64,
    #[serde(rename = "mean_dS2")]
    pub mean_ds2: f64,
    #[serde(rename = "std_dS1")]
    pub std_ds1: f64,
    #[serde(rename = "std_dS2")]
    pub std_ds2: f64,
    #[serde(rename = "cov_dS12")]
    pub cov_ds12: f64,
    #[serde(rename = "R12")]
    pub r12: f64,
    #[serde(rename = "R12_se")]
    pub r12_se: f64,
    #[serde(rename = "R1d1")]
    pub r1d1: f64,
    #[serde(rename = "R1d1_se")]
    pub r1d1_se: f64,
    pub n_samples: usize,
    #[serde(rename = "T")]
    pub steps: usize,
}

/// A row of the profile table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    pub p: f64,
    pub t: usize,
    pub x: i64,
    #[serde(rename = "mean_S")]
    pub mean_s: f64,
    #[serde(rename = "std_S")]
    pub std_s: f64,
    pub n_samples: usize,
}

fn read_table<T: serde::de::DeserializeOwned>(path: &Path, columns: &[&str]) -> Result<Vec<T>> {
    let schema = |message: String| Error::Schema {
        path: path.display().to_string(),
        message,
    };
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    for col in columns {
        if !headers.iter().any(|h| h == *col) {
            return Err(schema(format!("missing column `{col}`")));
        }
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| schema(format!("row {}: {e}", i + 1))))
        .collect()
}

pub fn read_observables_csv(path: &Path) -> Result<Vec<ObservableRow>> {
    read_table(path, &OBSERVABLE_COLUMNS)
}

pub fn read_profile_csv(path: &Path) -> Result<Vec<ProfileRow>> {
    read_table(path, &PROFILE_COLUMNS)
}

/// Groups observable rows by system size. With `t = None` the rows of the
/// default analysis window are kept; otherwise the rows at time `t` with the
/// given half-width (0, a single time, when `None`).
pub fn select_observables(
    rows: &[ObservableRow],
    t: Option<usize>,
    half_width: Option<usize>,
) -> BTreeMap<usize, Vec<ObservableRow>> {
    let mut out: BTreeMap<usize, Vec<ObservableRow>> = BTreeMap::new();
    for r in rows {
        let (centre, hw) = match t {
            None => analysis_center_for(r.l, r.steps),
            Some(t) => (t, half_width.unwrap_or(0)),
        };
        if r.t == centre && r.half_width == hw {
            out.entry(r.l).or_default().push(r.clone());
        }
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| a.p.total_cmp(&b.p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(p: f64) -> ProtocolConfig {
        ProtocolConfig::new(3, 2, p).with_samples(6).with_seed(17)
    }

    #[test]
    fn config_validation() {
        assert!(small(0.1).validate().is_ok());
        assert!(ProtocolConfig::new(3, 3, 0.1).validate().is_err());
        assert!(ProtocolConfig::new(3, 0, 0.1).validate().is_err());
        assert!(ProtocolConfig::new(4, 2, 0.1).validate().is_err());
        assert!(ProtocolConfig::new(3, 2, 1.5).validate().is_err());
        assert!(small(0.1).with_samples(0).validate().is_err());
        assert!(small(0.1).with_window(vec![3]).validate().is_err());
        assert!(small(0.1).with_window(vec![6]).validate().is_err());
        assert_eq!(small(0.1).recorded_times(), vec![0, 2, 4]);
        assert_eq!(ProtocolConfig::new(3, 8, 0.1).analysis_window(), vec![12, 14, 16]);
        assert_eq!(small(0.1).analysis_window(), vec![0, 2, 4]);
        assert_eq!(ProtocolConfig::new(3, 8, 0.1).analysis_center(), (14, 2));
        let short = ProtocolConfig { runtime_factor: 1, ..ProtocolConfig::new(1, 2, 0.1) };
        assert_eq!(short.analysis_window(), vec![0, 2]);
        assert_eq!(short.analysis_center(), (1, 1));
    }

    #[test]
    fn initial_state_has_no_cross_entanglement() {
        let cfg = small(0.1);
        let spec = cfg.lattice().unwrap();
        let t = prepare_initial_state(&cfg, &mut stream_rng(3, Stream::Scramble)).unwrap();
        let prof = t.entropy_profile(&spec.cut_prefix_groups()).unwrap();
        assert_eq!(prof[prof.len() / 2], 0);
        let other = prepare_initial_state(&cfg, &mut stream_rng(4, Stream::Scramble)).unwrap();
        assert_ne!(t, other);
    }

    #[test]
    fn record_invariants() {
        let cfg = small(0.1);
        let r = run_realization(&cfg, 99).unwrap();
        assert_eq!(r.times, vec![0, 2, 4]);
        assert_eq!(r.profiles.len(), 3);
        let half = (cfg.lattice().unwrap().num_sites() / cfg.l / 4) as u32;
        for prof in &r.profiles {
            assert_eq!(prof.len(), 4 * cfg.l + 1);
            assert_eq!(prof[0], 0);
            assert_eq!(*prof.last().unwrap(), 0);
            for (k, &s) in prof.iter().enumerate() {
                let left = k as u32 * half;
                let right = (prof.len() as u32 - 1 - k as u32) * half;
                assert!(s <= left.min(right));
            }
        }
        assert_eq!(r.profile_at(0).unwrap()[2 * cfg.l], 0);
        assert_eq!(r, run_realization(&cfg, 99).unwrap());
    }

    #[test]
    fn ensemble_is_worker_independent_and_extendable() {
        let cfg = small(0.1);
        let a = run_ensemble(&cfg, Some(1)).unwrap();
        let b = run_ensemble(&cfg, Some(3)).unwrap();
        assert_eq!(a, b);
        let small_run = run_records(&cfg, 0..3, Some(2)).unwrap();
        let big_run = run_records(&cfg.clone().with_samples(6), 0..6, Some(2)).unwrap();
        assert_eq!(small_run[..], big_run[..3]);
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_profile_csv(&[&a], &mut csv_a).unwrap();
        write_profile_csv(&[&b], &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn single_sample_flags_std() {
        let cfg = small(0.1).with_samples(1);
        let s = run_ensemble(&cfg, None).unwrap();
        let r = run_realization(&cfg, sample_seed(cfg.master_seed, 0)).unwrap();
        assert!(s.std_s[0][0].is_nan());
        for (i, prof) in r.profiles.iter().enumerate() {
            let as_f: Vec<f64> = prof.iter().map(|&v| v as f64).collect();
            assert_eq!(s.mean_s[i], as_f);
        }
        assert!(s.observables[0].r1d1.is_none());
    }

    fn synthetic_summary(values: impl Fn(usize, usize) -> [f64; 2], times: Vec<usize>) -> EnsembleSummary {
        let cfg = ProtocolConfig::new(1, 4, 0.1).with_samples(3);
        let n = 3;
        let deltas: Vec<Vec<[f64; 2]>> = times.iter().map(|&t| (0..n).map(|j| values(t, j)).collect()).collect();
        let mean_s: Vec<Vec<f64>> = times.iter().map(|&t| vec![t as f64; 17]).collect();
        let observables = times.iter().zip(&deltas).map(|(&t, d)| TimeObservables::from_deltas(&cfg, t, 0, d)).collect();
        EnsembleSummary {
            config: cfg,
            n_samples: n,
            xs: (-8..=8).collect(),
            std_s: mean_s.clone(),
            mean_s,
            observables,
            deltas,
            times,
        }
    }

    #[test]
    fn window_average_examples() {
        let s = synthetic_summary(|t, j| [t as f64 + j as f64, 2.0 * t as f64 + 1.0], vec![0, 2, 4, 6, 8]);
        let id = time_window_average(&s, 4, 0).unwrap();
        assert_eq!(id.observables.stats, s.observables_at(4).unwrap().stats);
        let lin = time_window_average(&s, 4, 2).unwrap();
        assert_eq!(lin.times, vec![2, 4, 6]);
        assert_eq!(lin.mean_s[0], 4.0);
        assert_eq!(lin.observables.stats.mean1, s.observables_at(4).unwrap().stats.mean1);
        let constant = synthetic_summary(|_, j| [1.0 + j as f64, 3.0], vec![0, 2, 4]);
        let w = time_window_average(&constant, 2, 2).unwrap();
        assert_eq!(w.observables.stats, constant.observables_at(2).unwrap().stats);
        assert!(time_window_average(&s, 20, 2).is_err());
    }

    #[test]
    fn persisted_runs_resume() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(0.2).with_samples(3);
        let first = run_ensemble_persisted(&cfg, Some(1), dir.path()).unwrap();
        assert!(sample_path(dir.path(), 2).exists());
        let more = run_ensemble_persisted(&cfg.clone().with_samples(5), Some(2), dir.path()).unwrap();
        assert_eq!(more, run_ensemble(&cfg.clone().with_samples(5), Some(1)).unwrap());
        assert_eq!(first, run_ensemble(&cfg, None).unwrap());
        let other = small(0.3).with_samples(2);
        assert!(run_ensemble_persisted(&other, None, dir.path()).is_err());
    }

    #[test]
    fn csv_round_trip_and_schema_errors() {
        let s = run_ensemble(&small(0.2), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let obs = dir.path().join("obs.csv");
        write_observables_csv(&[&s], fs::File::create(&obs).unwrap()).unwrap();
        let rows = read_observables_csv(&obs).unwrap();
        assert_eq!(rows.len(), s.times.len() + 1);
        let sel = select_observables(&rows, None, None);
        assert_eq!(select_observables(&rows, Some(4), None)[&2][0].half_width, 0);
        assert_eq!(sel[&2].len(), 1);
        assert_eq!(sel[&2][0].t, 2);
        let prof = dir.path().join("prof.csv");
        write_profile_csv(&[&s], fs::File::create(&prof).unwrap()).unwrap();
        assert_eq!(read_profile_csv(&prof).unwrap().len(), s.times.len() * 9);
        let broken = dir.path().join("broken.csv");
        fs::write(&broken, "L,d,p,t,x,mean_S,n_samples\n").unwrap();
        let err = read_profile_csv(&broken).unwrap_err();
        assert!(err.to_string().contains("std_S"), "{err}");
    }
}
