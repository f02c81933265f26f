use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperdiamond::analysis::{find_crossings, fit_collapse, CollapseGrid, ParamAxis, RatioKind};
use hyperdiamond::circuit::{sample_realization, OutcomeMode};
use hyperdiamond::error::{Error, Result};
use hyperdiamond::experiment::{read_observables_csv, read_profile_csv, run_realization, ObservableRow, ProtocolConfig};
use hyperdiamond::plot::plot_directory;
use hyperdiamond::report::{
    profile_regime_fits, ratio_curves, scaling_datasets, write_crossings_csv, write_curves_csv, write_landscape_csv,
    Observable,
};
use hyperdiamond::run::{execute_run, RunConfig};
use hyperdiamond::seeding::sample_seed;
use hyperdiamond::validate::{run_all, Fault, ValidateOptions};

/// Entanglement-membrane roughening in hyperdiamond Clifford circuits.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the ensembles of a configuration file (TOML, or a run
    /// manifest to reproduce a run).
    Run {
        config: PathBuf,
        /// Overrides `workers` from the file and the environment.
        #[arg(long)]
        workers: Option<usize>,
        /// Skip drawing figures after the run.
        #[arg(long)]
        no_plot: bool,
    },
    /// Ratio curves, crossings, a collapse of R_1/2 and regime fits.
    Analyze {
        /// Observable tables (one or more sizes).
        #[arg(required = true)]
        observables: Vec<PathBuf>,
        /// Profile tables for regime fits.
        #[arg(long)]
        profiles: Vec<PathBuf>,
        #[command(flatten)]
        window: Window,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
    },
    /// Collapse fit of one observable over a parameter grid.
    Collapse {
        #[arg(required = true)]
        observables: Vec<PathBuf>,
        /// r12, r1d1 or ds1.
        #[arg(long, default_value = "r12")]
        observable: String,
        #[command(flatten)]
        window: Window,
        #[command(flatten)]
        grid: GridArgs,
        /// Ordinate power `lo:hi:steps` or a fixed value; omit to leave the
        /// ordinate unscaled.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value = "collapse")]
        out: PathBuf,
    },
    /// Dump S(x, t) of one realization as CSV (`t,x,S`).
    Profile {
        #[arg(short, long, default_value_t = 3)]
        d: usize,
        #[arg(short = 'L', long = "size")]
        l: usize,
        #[arg(short, long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        #[arg(long, default_value_t = 0)]
        sample: u64,
        #[arg(long, default_value_t = 2)]
        runtime_factor: usize,
        #[arg(long)]
        sampled_outcomes: bool,
        /// Also write the gate events, one per line, to this file.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the simulator against brute-force references.
    Validate {
        #[arg(long, default_value_t = 8)]
        max_qubits: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrupt measurement signs to check that the suites notice.
        #[arg(long, hide = true)]
        inject_sign_fault: bool,
    },
    /// Draw SVG figures for the tables in a directory.
    Plot { dir: PathBuf },
}

#[derive(Args)]
struct Window {
    /// Time of the rows to analyse; the default analysis window otherwise.
    #[arg(long)]
    t: Option<usize>,
    /// Half-width of the time window at `--t` (0 for a single time).
    #[arg(long)]
    half_width: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    /// `lo:hi:steps` or a fixed value.
    #[arg(long, default_value = "0.03:0.2:35")]
    pc: String,
    #[arg(long, default_value = "0.5:4:36")]
    nu: String,
}

fn parse_axis(s: &str) -> Result<ParamAxis> {
    let bad = || Error::Config(format!("bad parameter range `{s}` (expected lo:hi:steps or a number)"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => v.trim().parse().map(ParamAxis::Fixed).map_err(|_| bad()),
        [lo, hi, n] => {
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let steps: usize = n.trim().parse().map_err(|_| bad())?;
            if steps == 0 || !(hi >= lo) {
                return Err(bad());
            }
            Ok(ParamAxis::Range { lo, hi, steps })
        }
        _ => Err(bad()),
    }
}

fn read_rows(paths: &[PathBuf]) -> Result<Vec<ObservableRow>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_observables_csv(p)?);
    }
    Ok(rows)
}

fn runtime_factor(rows: &[ObservableRow]) -> Result<f64> {
    let r = rows
        .first()
        .map(|r| r.steps as f64 / r.l as f64)
        .ok_or_else(|| Error::Analysis("observable table is empty".into()))?;
    if rows.iter().any(|x| (x.steps as f64 / x.l as f64 - r).abs() > 1e-12) {
        return Err(Error::Analysis("tables mix different runtime factors".into()));
    }
    Ok(r)
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    fs::create_dir_all(dir)?;
    Ok(fs::File::create(dir.join(name))?)
}

fn collapse(
    rows: &[ObservableRow],
    observable: Observable,
    window: &Window,
    grid: &CollapseGrid,
    out: &Path,
) -> Result<()> {
    let datasets = scaling_datasets(rows, observable, window.t, window.half_width)?;
    let result = fit_collapse(&datasets, grid, runtime_factor(rows)?)?;
    write_landscape_csv(&result, create(out, "landscape.csv")?)?;
    let mut summary = result.clone();
    summary.landscape.clear();
    fs::write(out.join("collapse.json"), serde_json::to_string_pretty(&summary)?)?;
    print!("collapse of {}: p_c = {:.4} [{:.4}, {:.4}], nu = {:.3} [{:.3}, {:.3}]",
        observable.name(), result.p_c, result.p_c_range.0, result.p_c_range.1, result.nu, result.nu_range.0, result.nu_range.1);
    if let (Some(th), Some((a, b))) = (result.theta, result.theta_range) {
        print!(", theta = {th:.3} [{a:.3}, {b:.3}]");
    }
    println!(", objective {:.3} (ranges: objective within 1 of the minimum)", result.objective);
    Ok(())
}

fn analyze(observables: &[PathBuf], profiles: &[PathBuf], window: &Window, grid: &GridArgs, out: &Path) -> Result<()> {
    let g = CollapseGrid {
        p_c: parse_axis(&grid.pc)?,
        nu: parse_axis(&grid.nu)?,
        theta: None,
    };
    let rows = read_rows(observables)?;
    for (kind, name) in [(RatioKind::R12, "r12"), (RatioKind::R1d1, "r1d1")] {
        let (curves, flagged) = ratio_curves(&rows, kind, window.t, window.half_width)?;
        write_curves_csv(&curves, create(out, &format!("{name}_curves.csv"))?)?;
        for f in &flagged {
            println!("{name}: L={} p={} excluded ({})", f.l, f.p, f.reason);
        }
        if curves.len() < 2 {
            println!("{name}: a single size, no crossings");
            continue;
        }
        let report = find_crossings(&curves)?;
        write_crossings_csv(&report, create(out, &format!("{name}_crossings.csv"))?)?;
        for pair in &report.pairs {
            let list: Vec<String> = pair.crossings.iter().map(|c| format!("{:.4} +- {:.4}", c.value, c.se)).collect();
            let text = if list.is_empty() { "no crossing".to_string() } else { list.join(", ") };
            println!("{name}: L = {} / {}: {text}", pair.sizes.0, pair.sizes.1);
        }
        if let Some(e) = report.estimate {
            println!("{name}: weighted crossing {:.4} +- {:.4}", e.value, e.se);
        }
    }
    let sizes: std::collections::BTreeSet<usize> = rows.iter().map(|r| r.l).collect();
    if sizes.len() >= 2 {
        collapse(&rows, Observable::R12, window, &g, out)?;
    }
    if !profiles.is_empty() {
        let mut prows = Vec::new();
        for p in profiles {
            prows.extend(read_profile_csv(p)?);
        }
        let fits = profile_regime_fits(&prows, window.t)?;
        fs::write(out.join("regime_fits.json"), serde_json::to_string_pretty(&fits)?)?;
        for f in &fits {
            let pref = f.preferred.map_or("none".to_string(), |r| format!("{r:?}").to_lowercase());
            println!("regime fit L={} p={} t={}: better of smooth/rough is {pref}", f.l, f.p, f.t);
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn profile(cmd: &Command) -> Result<()> {
    let Command::Profile { d, l, p, master_seed, sample, runtime_factor, sampled_outcomes, events, out } = cmd else {
        unreachable!()
    };
    let config = ProtocolConfig {
        runtime_factor: *runtime_factor,
        master_seed: *master_seed,
        outcome_mode: if *sampled_outcomes { OutcomeMode::Sampled } else { OutcomeMode::Forced },
        ..ProtocolConfig::new(*d, *l, *p)
    };
    config.validate()?;
    let seed = sample_seed(*master_seed, *sample);
    if let Some(path) = events {
        let c = sample_realization(&config.lattice()?, *p, config.steps(), seed)?;
        fs::write(path, c.dump())?;
    }
    let record = run_realization(&config, seed)?;
    let mut text = String::from("t,x,S\n");
    let half = 2 * *l as i64;
    for (t, prof) in record.times.iter().zip(&record.profiles) {
        for (k, s) in prof.iter().enumerate() {
            text.push_str(&format!("{t},{},{s}\n", k as i64 - half));
        }
    }
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

enum Outcome {
    Ok,
    Failed,
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Run { config, workers, no_plot } => {
            let mut c = RunConfig::load(config)?.with_env()?;
            if workers.is_some() {
                c.workers = *workers;
                c.validate()?;
            }
            let (manifest, _) = execute_run(&c)?;
            println!(
                "{} rates x {} samples in {:.1} s; outputs in {}",
                c.p.len(),
                c.samples,
                manifest.total_seconds,
                c.output_dir.display()
            );
            if !no_plot {
                let (_, errors) = plot_directory(&c.output_dir);
                for e in errors {
                    eprintln!("warning: plot skipped: {e}");
                }
            }
            Ok(Outcome::Ok)
        }
        Command::Analyze { observables, profiles, window, grid, out } => {
            analyze(observables, profiles, window, grid, out)?;
            Ok(Outcome::Ok)
        }
        Command::Collapse { observables, observable, window, grid, theta, out } => {
            let observable: Observable = observable.parse()?;
            let g = CollapseGrid {
                p_c: parse_axis(&grid.pc)?,
                nu: parse_axis(&grid.nu)?,
                theta: theta.as_deref().map(parse_axis).transpose()?,
            };
            collapse(&read_rows(observables)?, observable, window, &g, out)?;
            Ok(Outcome::Ok)
        }
        cmd @ Command::Profile { .. } => {
            profile(cmd)?;
            Ok(Outcome::Ok)
        }
        Command::Validate { max_qubits, trials, seed, inject_sign_fault } => {
            let report = run_all(&ValidateOptions {
                max_qubits: *max_qubits,
                trials: *trials,
                seed: *seed,
                fault: inject_sign_fault.then_some(Fault::MeasurementSign),
            })?;
            print!("{report}");
            Ok(if report.passed() { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Plot { dir } => {
            let (written, errors) = plot_directory(dir);
            for w in &written {
                println!("wrote {}", w.display());
            }
            for e in &errors {
                eprintln!("warning: {e}");
            }
            if written.is_empty() && errors.is_empty() {
                eprintln!("error: nothing to plot in {}", dir.display());
            }
            Ok(if written.is_empty() { Outcome::Failed } else { Outcome::Ok })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::InvalidArgument(_) => 2,
                _ => 1,
            })
        }
    }
}
