//! Smooth, rough and critical fits of the mean profile from small ensembles
//! below and above the transition.

use hyperdiamond::analysis::{default_x_max, fit_profile_regime, Regime};
use hyperdiamond::error::Result;
use hyperdiamond::experiment::{run_ensemble, ProtocolConfig};

fn main() -> Result<()> {
    let l = 4;
    for p in [0.03, 0.2] {
        let config = ProtocolConfig::new(3, l, p).with_samples(100).with_seed(5);
        let summary = run_ensemble(&config, None)?;
        let t = config.analysis_end();
        let prof = &summary.mean_s[summary.time_index(t).unwrap()];
        let c = 2 * l;
        let delta: Vec<(f64, f64)> = (0..=c).map(|k| (k as f64, (prof[c + k] + prof[c - k]) / 2.0 - prof[c])).collect();
        println!("p = {p}, t = {t}");
        for regime in [Regime::Smooth, Regime::Rough, Regime::Critical] {
            let fit = fit_profile_regime(&delta, regime, default_x_max(t))?;
            println!(
                "  {regime:?}: amplitude {:.3}, exponent {:.3}, rss {:.4}",
                fit.amplitude, fit.exponent, fit.rss
            );
        }
    }
    Ok(())
}
