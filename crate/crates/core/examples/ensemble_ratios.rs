//! A small disorder ensemble across p: R_1/2 and R_1/delta1 in the analysis
//! window, using all available cores.

use hyperdiamond::error::Result;
use hyperdiamond::experiment::{run_ensemble, ProtocolConfig};

fn main() -> Result<()> {
    let l = 4;
    println!("   p     R12            R1d1");
    for p in [0.0, 0.05, 0.1, 0.15, 0.2] {
        let config = ProtocolConfig::new(3, l, p).with_samples(200).with_seed(2024);
        let summary = run_ensemble(&config, None)?;
        let w = summary.analysis_observables()?;
        let show = |e: Option<hyperdiamond::analysis::Estimate>| {
            e.map_or("flagged".to_string(), |e| format!("{:.3} +- {:.3}", e.value, e.se))
        };
        println!(
            "{p:5.2}  {:14} {}",
            show(w.observables.r12),
            show(w.observables.r1d1)
        );
    }
    Ok(())
}
