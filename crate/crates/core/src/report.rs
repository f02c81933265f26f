//! Analysis of stored CSV tables: ratio curves, crossing tables, collapse
//! inputs and landscapes, and regime fits of mean profiles.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    default_x_max, fit_profile_regime, CollapseResult, CrossingReport, RatioCurve, RatioKind, RatioPoint, Regime,
    RegimeFit, ScalingDataset, ScalingPoint,
};
use crate::error::{Error, Result};
use crate::experiment::{select_observables, ObservableRow, ProfileRow};

/// Quantity used for curves and collapses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    R12,
    R1d1,
    /// `E[dS(+-1)]` with its standard error of the mean.
    MeanDs1,
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r12" => Ok(Observable::R12),
            "r1d1" => Ok(Observable::R1d1),
            "ds1" | "mean_ds1" => Ok(Observable::MeanDs1),
            other => Err(Error::Config(format!("unknown observable `{other}` (expected r12, r1d1 or ds1)"))),
        }
    }
}

impl Observable {
    fn value(self, r: &ObservableRow) -> (f64, f64) {
        match self {
            Observable::R12 => (r.r12, r.r12_se),
            Observable::R1d1 => (r.r1d1, r.r1d1_se),
            Observable::MeanDs1 => (r.mean_ds1, r.std_ds1 / (r.n_samples as f64).sqrt()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Observable::R12 => "R12",
            Observable::R1d1 => "R1d1",
            Observable::MeanDs1 => "mean_dS1",
        }
    }
}

/// A point left out of a curve because its value or error is undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPoint {
    pub l: usize,
    pub p: f64,
    pub reason: String,
}

fn selected(rows: &[ObservableRow], t: Option<usize>, half_width: Option<usize>) -> Result<BTreeMap<usize, Vec<ObservableRow>>> {
    let sel = select_observables(rows, t, half_width);
    if sel.is_empty() {
        return Err(Error::Analysis(match t {
            None => "no analysis-window rows in the observable table".into(),
            Some(t) => format!("no rows at t = {t} in the observable table"),
        }));
    }
    Ok(sel)
}

/// Per-size points of `observable`, split into usable and flagged ones.
pub fn observable_points(
    rows: &[ObservableRow],
    observable: Observable,
    t: Option<usize>,
    half_width: Option<usize>,
) -> Result<(BTreeMap<usize, Vec<ScalingPoint>>, Vec<FlaggedPoint>)> {
    let mut good = BTreeMap::new();
    let mut flagged = Vec::new();
    for (l, rs) in selected(rows, t, half_width)? {
        let mut pts: Vec<ScalingPoint> = Vec::new();
        for r in rs {
            let (y, dy) = observable.value(&r);
            if !y.is_finite() || !(dy.is_finite() && dy >= 0.0) {
                flagged.push(FlaggedPoint {
                    l,
                    p: r.p,
                    reason: format!("{} undefined", observable.name()),
                });
            } else if pts.last().is_some_and(|q| q.p == r.p) {
                return Err(Error::Analysis(format!("L={l}: duplicate rows at p={}", r.p)));
            } else {
                pts.push(ScalingPoint { p: r.p, y, dy });
            }
        }
        good.insert(l, pts);
    }
    Ok((good, flagged))
}

pub fn ratio_curves(
    rows: &[ObservableRow],
    kind: RatioKind,
    t: Option<usize>,
    half_width: Option<usize>,
) -> Result<(Vec<RatioCurve>, Vec<FlaggedPoint>)> {
    let observable = match kind {
        RatioKind::R12 => Observable::R12,
        RatioKind::R1d1 => Observable::R1d1,
    };
    let (points, flagged) = observable_points(rows, observable, t, half_width)?;
    let curves = points
        .into_iter()
        .map(|(l, pts)| {
            RatioCurve::new(
                l,
                kind,
                pts.into_iter().map(|q| RatioPoint { p: q.p, value: q.y, se: q.dy }).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((curves, flagged))
}

/// Collapse inputs; points with zero error are dropped since the objective
/// weights by inverse errors.
pub fn scaling_datasets(
    rows: &[ObservableRow],
    observable: Observable,
    t: Option<usize>,
    half_width: Option<usize>,
) -> Result<Vec<ScalingDataset>> {
    let (points, _) = observable_points(rows, observable, t, half_width)?;
    Ok(points
        .into_iter()
        .map(|(l, pts)| ScalingDataset {
            l,
            points: pts.into_iter().filter(|q| q.dy > 0.0).collect(),
        })
        .collect())
}

pub fn write_curves_csv<W: std::io::Write>(curves: &[RatioCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["L", "ratio", "p", "value", "se"])?;
    for c in curves {
        let name = match c.kind {
            RatioKind::R12 => "R12",
            RatioKind::R1d1 => "R1d1",
        };
        for pt in c.points() {
            w.write_record([c.l.to_string(), name.to_string(), pt.p.to_string(), pt.value.to_string(), pt.se.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per crossing, and one `no crossing` row per pair without any.
pub fn write_crossings_csv<W: std::io::Write>(report: &CrossingReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["L1", "L2", "p_cross", "se", "largest_sizes", "status"])?;
    for pair in &report.pairs {
        let (a, b) = pair.sizes;
        let flag = pair.largest_sizes.to_string();
        if pair.crossings.is_empty() {
            w.write_record([a.to_string(), b.to_string(), String::new(), String::new(), flag.clone(), "no crossing".into()])?;
        }
        for c in &pair.crossings {
            w.write_record([
                a.to_string(),
                b.to_string(),
                c.value.to_string(),
                c.se.to_string(),
                flag.clone(),
                "crossing".into(),
            ])?;
        }
    }
    if let Some(e) = report.estimate {
        w.write_record(["all", "all", &e.value.to_string(), &e.se.to_string(), "", "weighted mean"])?;
    }
    w.flush()?;
    Ok(())
}

/// Landscape rows `p_c,nu,theta,objective`; undefined values are empty.
pub fn write_landscape_csv<W: std::io::Write>(result: &CollapseResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_c", "nu", "theta", "objective"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for pt in &result.landscape {
        w.write_record([pt.p_c.to_string(), pt.nu.to_string(), opt(pt.theta), opt(pt.objective)])?;
    }
    w.flush()?;
    Ok(())
}

/// Regime fits of one mean profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileFits {
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    pub p: f64,
    pub t: usize,
    pub x_max: f64,
    /// `(x, dS)` for `x >= 0`, with `dS` averaged over `+-x`.
    pub delta_s: Vec<(f64, f64)>,
    pub fits: Vec<RegimeFit>,
    /// Smooth or rough, whichever leaves the smaller residual.
    pub preferred: Option<Regime>,
}

/// The symmetrized mean profile `dS(x) = [S(x) + S(-x)] / 2 - S(0)`, `x >= 0`.
pub fn symmetric_delta(profile: &BTreeMap<i64, f64>) -> Result<Vec<(f64, f64)>> {
    let s0 = *profile
        .get(&0)
        .ok_or_else(|| Error::Analysis("profile has no x = 0 entry".into()))?;
    Ok(profile
        .iter()
        .filter(|(&x, _)| x >= 0)
        .filter_map(|(&x, &s)| profile.get(&-x).map(|&m| (x as f64, (s + m) / 2.0 - s0)))
        .collect())
}

/// Fits every `(L, d, p)` profile at time `t`, by default the largest
/// recorded time not beyond `2L`.
pub fn profile_regime_fits(rows: &[ProfileRow], t: Option<usize>) -> Result<Vec<ProfileFits>> {
    type Key = (usize, usize, u64);
    let mut groups: BTreeMap<Key, BTreeMap<usize, BTreeMap<i64, f64>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.l, r.d, r.p.to_bits()))
            .or_default()
            .entry(r.t)
            .or_default()
            .insert(r.x, r.mean_s);
    }
    let mut out = Vec::new();
    for ((l, d, pbits), by_t) in groups {
        let t_sel = match t {
            Some(t) => t,
            None => *by_t
                .keys()
                .filter(|&&s| s <= 2 * l)
                .max()
                .ok_or_else(|| Error::Analysis(format!("L={l}: no profile at t <= 2L")))?,
        };
        let Some(profile) = by_t.get(&t_sel) else {
            return Err(Error::Analysis(format!("L={l}: no profile at t = {t_sel}")));
        };
        let delta_s = symmetric_delta(profile)?;
        let x_max = default_x_max(t_sel).max(1.0);
        let fits: Vec<RegimeFit> = [Regime::Smooth, Regime::Rough, Regime::Critical]
            .into_iter()
            .filter_map(|r| fit_profile_regime(&delta_s, r, x_max).ok())
            .collect();
        let rss = |r: Regime| fits.iter().find(|f| f.regime == r).map(|f| f.rss);
        let preferred = match (rss(Regime::Smooth), rss(Regime::Rough)) {
            (Some(s), Some(r)) => Some(if s <= r { Regime::Smooth } else { Regime::Rough }),
            _ => None,
        };
        out.push(ProfileFits {
            l,
            d,
            p: f64::from_bits(pbits),
            t: t_sel,
            x_max,
            delta_s,
            fits,
            preferred,
        });
    }
    Ok(out)
}
