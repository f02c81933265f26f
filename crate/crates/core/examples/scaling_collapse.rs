//! Crossings and a scaling collapse on synthetic data with known
//! p_c = 0.095, nu = 1.5 and theta_c = 1.3.

use hyperdiamond::analysis::{
    find_crossings, fit_collapse, CollapseGrid, ParamAxis, RatioCurve, RatioKind, RatioPoint, ScalingDataset,
    ScalingPoint,
};
use hyperdiamond::error::Result;

fn master(x: f64) -> f64 {
    0.35 - 0.12 * (1.5 * x).tanh()
}

fn main() -> Result<()> {
    let (p_c, nu, theta, r) = (0.095, 1.5, 1.3, 2.0);
    let sizes = [6usize, 8, 12, 16];
    let ps: Vec<f64> = (0..21).map(|k| 0.05 + 0.005 * k as f64).collect();

    let curves: Vec<RatioCurve> = sizes
        .iter()
        .map(|&l| {
            let t = r * l as f64;
            let pts = ps
                .iter()
                .map(|&p| RatioPoint { p, value: master((p - p_c) * t.powf(1.0 / nu)), se: 0.002 })
                .collect();
            RatioCurve::new(l, RatioKind::R12, pts)
        })
        .collect::<Result<_>>()?;
    let crossings = find_crossings(&curves)?;
    println!("weighted crossing: {:?}", crossings.estimate);

    let datasets: Vec<ScalingDataset> = sizes
        .iter()
        .map(|&l| {
            let t = r * l as f64;
            ScalingDataset {
                l,
                points: ps
                    .iter()
                    .map(|&p| {
                        let y = t.powf(theta) * master((p - p_c) * t.powf(1.0 / nu));
                        ScalingPoint { p, y, dy: 0.01 * y }
                    })
                    .collect(),
            }
        })
        .collect();
    let grid = CollapseGrid {
        p_c: ParamAxis::Range { lo: 0.07, hi: 0.12, steps: 11 },
        nu: ParamAxis::Range { lo: 0.8, hi: 2.5, steps: 11 },
        theta: Some(ParamAxis::Range { lo: 0.8, hi: 1.8, steps: 11 }),
    };
    let fit = fit_collapse(&datasets, &grid, r)?;
    println!(
        "collapse: p_c = {:.4}, nu = {:.3}, theta_c = {:.3}, objective {:.3}",
        fit.p_c,
        fit.nu,
        fit.theta.unwrap(),
        fit.objective
    );
    Ok(())
}
