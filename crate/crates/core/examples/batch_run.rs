//! A complete batch run from a configuration string: ensembles, CSV tables,
//! manifest, crossings and figures, written to a temporary directory.

use hyperdiamond::analysis::{find_crossings, RatioKind};
use hyperdiamond::error::Result;
use hyperdiamond::experiment::read_observables_csv;
use hyperdiamond::plot::plot_directory;
use hyperdiamond::report::ratio_curves;
use hyperdiamond::run::{execute_run, RunConfig, OBSERVABLES_FILE};

fn main() -> Result<()> {
    let root = std::env::temp_dir().join("hyperdiamond-batch-example");
    let mut rows = Vec::new();
    for l in [2, 4] {
        let mut config = RunConfig::from_toml_str(&format!(
            "d = 3\nL = {l}\np = [0.02, 0.06, 0.1, 0.14, 0.18]\nsamples = 100\nmaster_seed = 9\n"
        ))?;
        config.output_dir = root.join(format!("L{l}"));
        let (manifest, _) = execute_run(&config)?;
        println!("L={l}: {:.2} s, outputs {:?}", manifest.total_seconds, manifest.outputs);
        let (figures, _) = plot_directory(&config.output_dir);
        println!("  figures {figures:?}");
        rows.extend(read_observables_csv(&config.output_dir.join(OBSERVABLES_FILE))?);
    }
    let (curves, _) = ratio_curves(&rows, RatioKind::R12, None, None)?;
    for pair in find_crossings(&curves)?.pairs {
        println!("R12 crossings of L = {:?}: {:?}", pair.sizes, pair.crossings);
    }
    Ok(())
}
