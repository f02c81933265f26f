//! Ratio observables, crossing estimates, scaling collapse and profile fits.
//!
//! The collapse quality is the master-curve measure of Houdayer and Hartmann.
//! Each point `(X, Y, dY)` of one size is compared with a weighted straight
//! line through the points of every other size that bracket `X`:
//!
//! `S = (1/N) * sum (Y - Yfit)^2 / (dY^2 + dYfit^2)`
//!
//! where the sum runs over the `N` points that have at least one bracketing
//! pair. With `X = (p - p_c) t^(1/nu)` and `Y = y t^(-theta)`, `S` is close
//! to 1 for a consistent collapse and grows away from the true parameters.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{stream_rng, Stream};

/// Leading-order functional RG prediction for the critical exponent.
pub const THETA_C_FRG: f64 = 1.5;
/// Functional RG estimate of the rough-phase wandering exponent.
pub const ZETA_R_FRG: f64 = 0.21;
/// Functional RG estimate of the rough-phase free-energy exponent.
pub const THETA_R_FRG: f64 = 1.42;
/// Published estimates for the three-dimensional circuit, as (value, error).
pub const PUBLISHED_P_C: f64 = 0.095;
pub const PUBLISHED_NU: (f64, f64) = (1.5, 0.3);
pub const PUBLISHED_THETA_C: (f64, f64) = (1.3, 0.2);

/// `theta_r = 1 + 2 zeta_r`, valid for a two-dimensional membrane.
pub fn hyperscaling_theta_r(zeta_r: f64) -> f64 {
    1.0 + 2.0 * zeta_r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Standard error; `NaN` when it cannot be estimated (a single sample).
    pub se: f64,
}

/// Sample statistics of the per-realization pair `(dS(+-1), dS(+-2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaStats {
    pub n: usize,
    pub mean1: f64,
    pub mean2: f64,
    /// Sample standard deviations and covariance (`n - 1` normalization);
    /// `NaN` when `n < 2`.
    pub std1: f64,
    pub std2: f64,
    pub cov12: f64,
}

impl DeltaStats {
    /// Accumulates in the given order, so the result is reproducible.
    pub fn from_pairs(pairs: &[[f64; 2]]) -> Self {
        let n = pairs.len();
        let nf = n as f64;
        let mean1 = pairs.iter().map(|v| v[0]).sum::<f64>() / nf;
        let mean2 = pairs.iter().map(|v| v[1]).sum::<f64>() / nf;
        let (std1, std2, cov12) = if n < 2 {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let (mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0);
            for v in pairs {
                let (a, b) = (v[0] - mean1, v[1] - mean2);
                s11 += a * a;
                s22 += b * b;
                s12 += a * b;
            }
            let k = nf - 1.0;
            ((s11 / k).sqrt(), (s22 / k).sqrt(), s12 / k)
        };
        Self {
            n,
            mean1,
            mean2,
            std1,
            std2,
            cov12,
        }
    }
}

/// `R_1/2 = E[dS(+-1)] / E[dS(+-2)]` with a delta-method standard error.
pub fn ratio_r12(stats: &DeltaStats) -> Result<Estimate> {
    if stats.n == 0 {
        return Err(Error::Analysis("no samples".into()));
    }
    if stats.mean2 == 0.0 {
        return Err(Error::Analysis("E[dS(+-2)] is zero".into()));
    }
    let (a, b) = (stats.mean1, stats.mean2);
    let value = a / b;
    let var = (stats.std1.powi(2) / (b * b) - 2.0 * a * stats.cov12 / b.powi(3)
        + a * a * stats.std2.powi(2) / b.powi(4))
        / stats.n as f64;
    Ok(Estimate {
        value,
        se: var.max(0.0).sqrt(),
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `R_1/delta1 = E[dS(+-1)] / sigma[dS(+-1)]` with a bootstrap standard
/// error from `resamples` resamples drawn with `seed`.
pub fn ratio_r1d1(samples: &[f64], resamples: usize, seed: u64) -> Result<Estimate> {
    if samples.len() < 2 {
        return Err(Error::Analysis("at least two samples are needed for sigma".into()));
    }
    let (mean, std) = mean_std(samples);
    if std == 0.0 {
        return Err(Error::Analysis("sigma[dS(+-1)] is zero".into()));
    }
    let mut rng = stream_rng(seed, Stream::Bootstrap);
    let mut boot = Vec::with_capacity(resamples);
    let mut draw = vec![0.0; samples.len()];
    for _ in 0..resamples {
        for d in draw.iter_mut() {
            *d = samples[rng.random_range(0..samples.len())];
        }
        let (m, s) = mean_std(&draw);
        if s > 0.0 {
            boot.push(m / s);
        }
    }
    let se = if boot.len() >= 2 { mean_std(&boot).1 } else { f64::NAN };
    Ok(Estimate { value: mean / std, se })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RatioKind {
    R12,
    R1d1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub p: f64,
    pub value: f64,
    pub se: f64,
}

/// One ratio as a function of `p` for a fixed size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    pub l: usize,
    pub kind: RatioKind,
    points: Vec<RatioPoint>,
}

impl RatioCurve {
    /// Requires strictly increasing `p` and finite, non-negative errors.
    pub fn new(l: usize, kind: RatioKind, points: Vec<RatioPoint>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].p <= w[0].p) {
            return Err(Error::Analysis(format!("L={l}: p values must strictly increase")));
        }
        if let Some(pt) = points.iter().find(|pt| !(pt.se >= 0.0 && pt.se.is_finite()) || !pt.value.is_finite()) {
            return Err(Error::Analysis(format!("L={l}: invalid point at p={}", pt.p)));
        }
        Ok(Self { l, kind, points })
    }

    pub fn points(&self) -> &[RatioPoint] {
        &self.points
    }
}

/// Crossings of one pair of curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCrossings {
    pub sizes: (usize, usize),
    /// Empty when the difference never changes sign ("no crossing").
    pub crossings: Vec<Estimate>,
    /// Set for the pair of the two largest sizes, whose rough-phase points
    /// are the noisiest.
    pub largest_sizes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub pairs: Vec<PairCrossings>,
    /// Error-weighted mean of all pairwise crossings.
    pub estimate: Option<Estimate>,
}

const P_TOL: f64 = 1e-9;

/// Pairwise crossings by linear interpolation over the `p` values the two
/// curves share.
pub fn find_crossings(curves: &[RatioCurve]) -> Result<CrossingReport> {
    if curves.len() < 2 {
        return Err(Error::Analysis("crossings need at least two curves".into()));
    }
    let mut sizes: Vec<usize> = curves.iter().map(|c| c.l).collect();
    sizes.sort_unstable();
    let largest = (sizes[sizes.len() - 2], sizes[sizes.len() - 1]);
    let mut pairs = Vec::new();
    for (i, a) in curves.iter().enumerate() {
        for b in &curves[i + 1..] {
            let mut diff = Vec::new();
            for pa in a.points() {
                if let Some(pb) = b.points().iter().find(|pb| (pb.p - pa.p).abs() < P_TOL) {
                    diff.push((pa.p, pa.value - pb.value, (pa.se.powi(2) + pb.se.powi(2)).sqrt()));
                }
            }
            if diff.len() < 2 {
                return Err(Error::Analysis(format!(
                    "curves L={} and L={} share fewer than two p values",
                    a.l, b.l
                )));
            }
            let mut crossings = Vec::new();
            for (k, w) in diff.windows(2).enumerate() {
                let ((p0, d0, e0), (p1, d1, e1)) = (w[0], w[1]);
                if d0 == 0.0 {
                    if k == 0 || diff[k - 1].1 != 0.0 {
                        crossings.push(Estimate { value: p0, se: e0 * (p1 - p0) / (d1 - d0).abs().max(f64::MIN_POSITIVE) });
                    }
                    continue;
                }
                if d0 * d1 < 0.0 {
                    let h = p1 - p0;
                    let den = d0 - d1;
                    let p = p0 + h * d0 / den;
                    let g0 = -h * d1 / (den * den);
                    let g1 = h * d0 / (den * den);
                    crossings.push(Estimate {
                        value: p,
                        se: ((g0 * e0).powi(2) + (g1 * e1).powi(2)).sqrt(),
                    });
                }
                if d1 == 0.0 && k + 2 == diff.len() {
                    crossings.push(Estimate { value: p1, se: e1 * (p1 - p0) / (d1 - d0).abs().max(f64::MIN_POSITIVE) });
                }
            }
            let key = (a.l.min(b.l), a.l.max(b.l));
            pairs.push(PairCrossings {
                sizes: (a.l, b.l),
                crossings,
                largest_sizes: key == largest,
            });
        }
    }
    let all: Vec<Estimate> = pairs.iter().flat_map(|p| p.crossings.iter().copied()).collect();
    let estimate = weighted_mean(&all);
    Ok(CrossingReport { pairs, estimate })
}

/// Inverse-variance weighted mean; falls back to the plain mean (with the
/// standard error of the mean) when some errors are zero.
fn weighted_mean(xs: &[Estimate]) -> Option<Estimate> {
    if xs.is_empty() {
        return None;
    }
    if xs.iter().all(|e| e.se > 0.0 && e.se.is_finite()) {
        let w: f64 = xs.iter().map(|e| e.se.powi(-2)).sum();
        let value = xs.iter().map(|e| e.value * e.se.powi(-2)).sum::<f64>() / w;
        Some(Estimate { value, se: w.sqrt().recip() })
    } else {
        let n = xs.len() as f64;
        let value = xs.iter().map(|e| e.value).sum::<f64>() / n;
        let se = if xs.len() > 1 {
            (xs.iter().map(|e| (e.value - value).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Some(Estimate { value, se })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub p: f64,
    pub y: f64,
    pub dy: f64,
}

/// Observable values of one system size, for collapse fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingDataset {
    pub l: usize,
    pub points: Vec<ScalingPoint>,
}

/// Houdayer-Hartmann quality of the collapse at `(p_c, nu, theta)`, with
/// `t = runtime_factor * L`. Without `theta` the ordinate is not rescaled.
pub fn collapse_objective(
    datasets: &[ScalingDataset],
    p_c: f64,
    nu: f64,
    theta: Option<f64>,
    runtime_factor: f64,
) -> Result<f64> {
    if datasets.len() < 2 {
        return Err(Error::Analysis("a collapse needs at least two sizes".into()));
    }
    if !(nu > 0.0) {
        return Err(Error::Analysis(format!("nu must be positive, got {nu}")));
    }
    for ds in datasets {
        if ds.points.len() < 2 {
            return Err(Error::Analysis(format!(
                "L={} has {} point(s); a collapse needs at least two per size",
                ds.l,
                ds.points.len()
            )));
        }
        if let Some(pt) = ds.points.iter().find(|pt| !(pt.dy > 0.0)) {
            return Err(Error::Analysis(format!("L={}: error at p={} is not positive", ds.l, pt.p)));
        }
    }
    // Canonical order, so the floating-point sums do not depend on the
    // order in which sizes were supplied.
    let mut ordered: Vec<&ScalingDataset> = datasets.iter().collect();
    ordered.sort_by(|a, b| {
        a.l.cmp(&b.l).then_with(|| {
            let key = |d: &ScalingDataset| d.points.iter().flat_map(|q| [q.p, q.y, q.dy]).collect::<Vec<_>>();
            key(a).iter().zip(&key(b)).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.points.len().cmp(&b.points.len()))
        })
    });
    let scaled: Vec<Vec<(f64, f64, f64)>> = ordered
        .iter()
        .map(|ds| {
            let t = runtime_factor * ds.l as f64;
            let xs = t.powf(1.0 / nu);
            let ys = theta.map_or(1.0, |th| t.powf(-th));
            let mut v: Vec<_> = ds.points.iter().map(|pt| ((pt.p - p_c) * xs, pt.y * ys, pt.dy * ys)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        })
        .collect();

    let mut total = 0.0;
    let mut count = 0usize;
    let mut near: Vec<(f64, f64, f64)> = Vec::new();
    for (i, own) in scaled.iter().enumerate() {
        for &(x, y, dy) in own {
            near.clear();
            for (k, other) in scaled.iter().enumerate() {
                if k == i {
                    continue;
                }
                let j = other.partition_point(|q| q.0 < x);
                if j < other.len() && other[j].0 == x {
                    near.push(other[j]);
                    if j + 1 < other.len() {
                        near.push(other[j + 1]);
                    } else if j > 0 {
                        near.push(other[j - 1]);
                    }
                } else if j > 0 && j < other.len() {
                    near.push(other[j - 1]);
                    near.push(other[j]);
                }
            }
            if near.is_empty() {
                continue;
            }
            let (yf, vf) = weighted_line(&near, x);
            total += (y - yf).powi(2) / (dy * dy + vf);
            count += 1;
        }
    }
    if count == 0 {
        let sizes: Vec<String> = datasets.iter().map(|d| d.l.to_string()).collect();
        return Err(Error::Analysis(format!(
            "rescaled curves of sizes L = {} do not overlap",
            sizes.join(", ")
        )));
    }
    Ok(total / count as f64)
}

/// Weighted least-squares line through `pts` evaluated at `x`, returning the
/// value and its variance.
fn weighted_line(pts: &[(f64, f64, f64)], x: f64) -> (f64, f64) {
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(px, py, pd) in pts {
        let w = 1.0 / (pd * pd);
        s += w;
        sx += w * px;
        sy += w * py;
        sxx += w * px * px;
        sxy += w * px * py;
    }
    let delta = s * sxx - sx * sx;
    if delta <= 1e-12 * s * sxx.max(f64::MIN_POSITIVE) {
        return (sy / s, 1.0 / s);
    }
    let intercept = (sxx * sy - sx * sxy) / delta;
    let slope = (s * sxy - sx * sy) / delta;
    let var = (sxx - 2.0 * x * sx + x * x * s) / delta;
    (intercept + slope * x, var.max(0.0))
}

/// Search range of one collapse parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ParamAxis {
    Fixed(f64),
    Range { lo: f64, hi: f64, steps: usize },
}

impl ParamAxis {
    fn values(&self) -> Vec<f64> {
        match *self {
            ParamAxis::Fixed(v) => vec![v],
            ParamAxis::Range { lo, hi, steps } if steps <= 1 => vec![(lo + hi) / 2.0],
            ParamAxis::Range { lo, hi, steps } => (0..steps)
                .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
                .collect(),
        }
    }

    fn is_free(&self) -> bool {
        matches!(self, ParamAxis::Range { .. })
    }

    fn step(&self) -> f64 {
        match *self {
            ParamAxis::Fixed(_) => 0.0,
            ParamAxis::Range { lo, hi, steps } => (hi - lo) / (steps.max(2) - 1) as f64,
        }
    }

    fn clamp(&self, v: f64) -> f64 {
        match *self {
            ParamAxis::Fixed(f) => f,
            ParamAxis::Range { lo, hi, .. } => v.clamp(lo.min(hi), lo.max(hi)),
        }
    }
}

/// Parameter grid for [`fit_collapse`]. `theta = None` leaves the ordinate
/// unscaled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseGrid {
    pub p_c: ParamAxis,
    pub nu: ParamAxis,
    pub theta: Option<ParamAxis>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub p_c: f64,
    pub nu: f64,
    pub theta: Option<f64>,
    /// `None` where the objective is undefined (no overlap).
    pub objective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub p_c: f64,
    pub nu: f64,
    pub theta: Option<f64>,
    pub objective: f64,
    /// Grid values in row-major order over (p_c, nu, theta).
    pub landscape: Vec<LandscapePoint>,
    /// Grid size per parameter (1 for fixed parameters).
    pub grid_shape: [usize; 3],
    /// Heuristic ranges: extent of grid points with objective at most the
    /// minimum plus one. Not a rigorous confidence interval.
    pub p_c_range: (f64, f64),
    pub nu_range: (f64, f64),
    pub theta_range: Option<(f64, f64)>,
}

/// Number of grid points the zoom refinement starts from.
const REFINE_STARTS: usize = 8;

/// Grid scan of [`collapse_objective`] followed by local zoom refinement.
pub fn fit_collapse(datasets: &[ScalingDataset], grid: &CollapseGrid, runtime_factor: f64) -> Result<CollapseResult> {
    let pcs = grid.p_c.values();
    let nus = grid.nu.values();
    let ths: Vec<Option<f64>> = match &grid.theta {
        Some(ax) => ax.values().into_iter().map(Some).collect(),
        None => vec![None],
    };
    if pcs.is_empty() || nus.is_empty() || ths.is_empty() {
        return Err(Error::Analysis("empty collapse grid".into()));
    }
    let mut params = Vec::with_capacity(pcs.len() * nus.len() * ths.len());
    for &pc in &pcs {
        for &nu in &nus {
            for &th in &ths {
                params.push((pc, nu, th));
            }
        }
    }
    let eval = |&(pc, nu, th): &(f64, f64, Option<f64>)| collapse_objective(datasets, pc, nu, th, runtime_factor).ok();
    let landscape: Vec<LandscapePoint> = params
        .par_iter()
        .map(|q| LandscapePoint {
            p_c: q.0,
            nu: q.1,
            theta: q.2,
            objective: eval(q),
        })
        .collect();

    let finite: Vec<&LandscapePoint> = landscape.iter().filter(|pt| pt.objective.is_some_and(f64::is_finite)).collect();
    let best = finite
        .iter()
        .min_by(|a, b| a.objective.unwrap().total_cmp(&b.objective.unwrap()))
        .ok_or_else(|| Error::Analysis("collapse objective undefined on the whole grid".into()))?;
    let lo = best.objective.unwrap();
    let hi = finite.iter().map(|pt| pt.objective.unwrap()).fold(lo, f64::max);
    if finite.len() > 1 && hi - lo <= 1e-12 * (1.0 + lo.abs()) {
        return Err(Error::Analysis("flat objective landscape; no estimate".into()));
    }

    // Zoom refinement from the best few grid points; correlated parameters
    // can put the best node in a different valley from the true minimum.
    let theta_axis = grid.theta.unwrap_or(ParamAxis::Fixed(0.0));
    let axes = [grid.p_c, grid.nu, theta_axis];
    let mut starts: Vec<&&LandscapePoint> = finite.iter().collect();
    starts.sort_by(|a, b| a.objective.unwrap().total_cmp(&b.objective.unwrap()));
    starts.truncate(REFINE_STARTS);
    let refine = |start: &LandscapePoint| {
        let mut cur = [start.p_c, start.nu, start.theta.unwrap_or(0.0)];
        let mut cur_obj = start.objective.unwrap();
        let mut steps = [axes[0].step(), axes[1].step(), axes[2].step()];
        let offsets = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let free = |i: usize| -> &[f64] { if axes[i].is_free() { &offsets } else { &offsets[2..3] } };
        for _ in 0..40 {
            let mut cands = Vec::new();
            for &a in free(0) {
                for &b in free(1) {
                    for &c in free(2) {
                        cands.push([
                            axes[0].clamp(cur[0] + a * steps[0]),
                            axes[1].clamp(cur[1] + b * steps[1]),
                            axes[2].clamp(cur[2] + c * steps[2]),
                        ]);
                    }
                }
            }
            let results: Vec<Option<f64>> = cands
                .par_iter()
                .map(|q| eval(&(q[0], q[1], grid.theta.map(|_| q[2]))))
                .collect();
            for (q, r) in cands.iter().zip(results) {
                if let Some(v) = r.filter(|v| v.is_finite()) {
                    if v < cur_obj {
                        cur_obj = v;
                        cur = *q;
                    }
                }
            }
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
        }
        (cur, cur_obj)
    };
    let (cur, cur_obj) = starts
        .iter()
        .map(|s| refine(s))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one finite grid point");

    let region: Vec<&&LandscapePoint> = finite.iter().filter(|pt| pt.objective.unwrap() <= cur_obj + 1.0).collect();
    let range = |f: &dyn Fn(&LandscapePoint) -> f64, v: f64| {
        region.iter().fold((v, v), |(a, b), pt| (a.min(f(pt)), b.max(f(pt))))
    };
    Ok(CollapseResult {
        p_c: cur[0],
        nu: cur[1],
        theta: grid.theta.map(|_| cur[2]),
        objective: cur_obj,
        grid_shape: [pcs.len(), nus.len(), ths.len()],
        p_c_range: range(&|pt| pt.p_c, cur[0]),
        nu_range: range(&|pt| pt.nu, cur[1]),
        theta_range: grid.theta.map(|_| range(&|pt| pt.theta.unwrap_or(0.0), cur[2])),
        landscape,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `a |x|`
    Smooth,
    /// `b x^2`
    Rough,
    /// `B_c |x|^(3 - theta_c)`
    Critical,
}

/// Least-squares fit of a profile `dS(x)` to one regime form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeFit {
    pub regime: Regime,
    /// `a`, `b` or `B_c`; the sign is reported as fitted.
    pub amplitude: f64,
    /// Power of `|x|`: 1, 2, or fitted.
    pub exponent: f64,
    /// `3 - exponent` for the critical form.
    pub theta_c: Option<f64>,
    /// Data minus model, in input order (points beyond `x_max` excluded).
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub rss: f64,
}

/// Default fit range `|x| <= t / 4`.
pub fn default_x_max(t: usize) -> f64 {
    t as f64 / 4.0
}

/// Fits `profile` (pairs `(x, dS)`) restricted to `|x| <= x_max`.
pub fn fit_profile_regime(profile: &[(f64, f64)], regime: Regime, x_max: f64) -> Result<RegimeFit> {
    let pts: Vec<(f64, f64)> = profile.iter().copied().filter(|(x, _)| x.abs() <= x_max).collect();
    let nonzero = pts.iter().filter(|(x, _)| *x != 0.0).count();
    let needed = if regime == Regime::Critical { 2 } else { 1 };
    if nonzero < needed {
        return Err(Error::Analysis(format!(
            "{regime:?} fit needs {needed} point(s) with x != 0 inside |x| <= {x_max}, got {nonzero}"
        )));
    }
    let (amplitude, exponent) = match regime {
        Regime::Smooth | Regime::Rough => {
            let k = if regime == Regime::Smooth { 1.0 } else { 2.0 };
            let num: f64 = pts.iter().map(|(x, y)| x.abs().powf(k) * y).sum();
            let den: f64 = pts.iter().map(|(x, _)| x.abs().powf(2.0 * k)).sum();
            (num / den, k)
        }
        Regime::Critical => fit_power_law(&pts)?,
    };
    let residuals: Vec<f64> = pts
        .iter()
        .map(|(x, y)| y - if *x == 0.0 { 0.0 } else { amplitude * x.abs().powf(exponent) })
        .collect();
    let rss = residuals.iter().map(|r| r * r).sum();
    Ok(RegimeFit {
        regime,
        amplitude,
        exponent,
        theta_c: (regime == Regime::Critical).then_some(3.0 - exponent),
        residuals,
        rss,
    })
}

/// `y = B |x|^c`: log-log initial guess, then Gauss-Newton on the linear
/// residuals.
fn fit_power_law(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let data: Vec<(f64, f64)> = pts.iter().copied().filter(|(x, _)| *x != 0.0).map(|(x, y)| (x.abs(), y)).collect();
    let logs: Vec<(f64, f64)> = data.iter().filter(|(_, y)| *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let (mut b, mut c) = if logs.len() >= 2 && logs.iter().any(|l| l.0 != logs[0].0) {
        let n = logs.len() as f64;
        let mx = logs.iter().map(|l| l.0).sum::<f64>() / n;
        let my = logs.iter().map(|l| l.1).sum::<f64>() / n;
        let sxy: f64 = logs.iter().map(|l| (l.0 - mx) * (l.1 - my)).sum();
        let sxx: f64 = logs.iter().map(|l| (l.0 - mx).powi(2)).sum();
        let c = sxy / sxx;
        ((my - c * mx).exp(), c)
    } else {
        (1.0, 1.5)
    };
    if data.iter().all(|d| d.0 == data[0].0) {
        return Err(Error::Analysis("critical fit needs at least two distinct |x|".into()));
    }
    let rss = |b: f64, c: f64| data.iter().map(|(x, y)| (y - b * x.powf(c)).powi(2)).sum::<f64>();
    let mut cur = rss(b, c);
    for _ in 0..200 {
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for &(x, y) in &data {
            let f = x.powf(c);
            let j = [f, b * f * x.ln()];
            let r = y - b * f;
            for u in 0..2 {
                jtr[u] += j[u] * r;
                for v in 0..2 {
                    jtj[u][v] += j[u] * j[v];
                }
            }
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let db = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let dc = (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
        // Step halving keeps the iteration monotone.
        let mut scale = 1.0;
        let mut improved = false;
        while scale > 1e-6 {
            let (nb, nc) = (b + scale * db, c + scale * dc);
            let next = rss(nb, nc);
            if next <= cur {
                improved = next < cur;
                b = nb;
                c = nc;
                cur = next;
                break;
            }
            scale *= 0.5;
        }
        if !improved || (db.abs() < 1e-15 * b.abs().max(1.0) && dc.abs() < 1e-15) {
            break;
        }
    }
    Ok((b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn exact_stats(m1: f64, m2: f64) -> DeltaStats {
        DeltaStats::from_pairs(&[[m1, m2], [m1, m2]])
    }

    #[test]
    fn r12_on_model_profiles() {
        let lin = |x: f64| 3.0 * x;
        let quad = |x: f64| 0.7 * x * x;
        let mixed = |x: f64| 2.0 * x + 0.5 * x * x;
        assert_eq!(ratio_r12(&exact_stats(lin(1.0), lin(2.0))).unwrap().value, 0.5);
        assert_eq!(ratio_r12(&exact_stats(quad(1.0), quad(2.0))).unwrap().value, 0.25);
        let r = ratio_r12(&exact_stats(mixed(1.0), mixed(2.0))).unwrap().value;
        assert!((r - (2.0 + 0.5) / (4.0 + 2.0)).abs() < 1e-15);
        assert!(ratio_r12(&exact_stats(1.0, 0.0)).is_err());
    }

    #[test]
    fn r12_standard_error_matches_resampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let sample = |rng: &mut ChaCha8Rng| -> Vec<[f64; 2]> {
            (0..400)
                .map(|_| {
                    let z1 = normal.sample(rng);
                    let z2 = normal.sample(rng);
                    [5.0 + z1, 12.0 + 0.6 * z1 + 2.0 * z2]
                })
                .collect()
        };
        let first = ratio_r12(&DeltaStats::from_pairs(&sample(&mut rng))).unwrap();
        let reps: Vec<f64> = (0..400)
            .map(|_| ratio_r12(&DeltaStats::from_pairs(&sample(&mut rng))).unwrap().value)
            .collect();
        let (_, sd) = mean_std(&reps);
        assert!((first.se / sd - 1.0).abs() < 0.15, "{} vs {sd}", first.se);
    }

    #[test]
    fn r1d1_examples() {
        assert!(ratio_r1d1(&[3.0; 10], 100, 0).is_err());
        assert!(ratio_r1d1(&[3.0], 100, 0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let normal = Normal::new(10.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..2000).map(|_| normal.sample(&mut rng)).collect();
        let est = ratio_r1d1(&xs, 300, 1).unwrap();
        let (m, s) = mean_std(&xs);
        assert_eq!(est.value, m / s);
        assert!((est.value - 5.0).abs() < 4.0 * est.se, "{est:?}");
        // Asymptotic error of mean/sd for a normal sample: sqrt((1 + R^2/2) / n).
        let expected = ((1.0 + 12.5) / 2000.0f64).sqrt();
        assert!((est.se / expected - 1.0).abs() < 0.25, "{est:?} vs {expected}");
        assert_eq!(est, ratio_r1d1(&xs, 300, 1).unwrap());
    }

    fn line_curve(l: usize, slope: f64, pc: f64, ps: &[f64]) -> RatioCurve {
        RatioCurve::new(
            l,
            RatioKind::R12,
            ps.iter().map(|&p| RatioPoint { p, value: 0.5 - slope * (p - pc), se: 0.01 }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn crossings_of_lines() {
        let ps = [0.06, 0.08, 0.09, 0.11, 0.12, 0.14];
        let report = find_crossings(&[line_curve(4, 4.0, 0.1, &ps), line_curve(8, 8.0, 0.1, &ps)]).unwrap();
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(report.pairs[0].crossings.len(), 1);
        assert!((report.pairs[0].crossings[0].value - 0.1).abs() < 1e-12);
        assert!(report.pairs[0].largest_sizes);

        let parallel = find_crossings(&[line_curve(4, 4.0, 0.1, &ps), line_curve(8, 4.0, 0.2, &ps)]).unwrap();
        assert!(parallel.pairs[0].crossings.is_empty());
        assert!(parallel.estimate.is_none());
        assert!(find_crossings(&[line_curve(4, 4.0, 0.1, &ps)]).is_err());
    }

    #[test]
    fn noisy_crossings_recover_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ps: Vec<f64> = (0..9).map(|k| 0.06 + 0.01 * k as f64).collect();
        let noise = Normal::new(0.0, 0.004).unwrap();
        let curves: Vec<RatioCurve> = [4usize, 6, 8]
            .iter()
            .map(|&l| {
                let pts = ps
                    .iter()
                    .map(|&p| RatioPoint {
                        p,
                        value: 0.4 - (p - 0.095) * l as f64 + noise.sample(&mut rng),
                        se: 0.004,
                    })
                    .collect();
                RatioCurve::new(l, RatioKind::R12, pts).unwrap()
            })
            .collect();
        let report = find_crossings(&curves).unwrap();
        let est = report.estimate.unwrap();
        assert!((est.value - 0.095).abs() < 4.0 * est.se + 1e-3, "{report:?}");
        for pair in &report.pairs {
            assert!(pair.crossings.len() <= 1);
        }
    }

    #[test]
    fn ratio_curve_validation() {
        let pt = |p, se| RatioPoint { p, value: 0.3, se };
        assert!(RatioCurve::new(4, RatioKind::R12, vec![pt(0.1, 0.0), pt(0.1, 0.0)]).is_err());
        assert!(RatioCurve::new(4, RatioKind::R12, vec![pt(0.1, -1.0)]).is_err());
        assert!(RatioCurve::new(4, RatioKind::R12, vec![pt(0.1, f64::NAN)]).is_err());
    }

    fn master(x: f64) -> f64 {
        0.35 - 0.12 * (1.5 * x).tanh()
    }

    fn synthetic(pc: f64, nu: f64, theta: Option<f64>, noise: f64, seed: u64) -> Vec<ScalingDataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = Normal::new(0.0, 1.0).unwrap();
        [6usize, 8, 12, 16]
            .iter()
            .map(|&l| {
                let t = 2.0 * l as f64;
                let points = (0..21)
                    .map(|k| {
                        let p = 0.05 + 0.005 * k as f64;
                        let scale = theta.map_or(1.0, |th| t.powf(th));
                        let y0 = scale * master((p - pc) * t.powf(1.0 / nu));
                        let dy = noise * y0.abs().max(1e-3);
                        ScalingPoint { p, y: y0 + dy * gauss.sample(&mut rng), dy }
                    })
                    .collect();
                ScalingDataset { l, points }
            })
            .collect()
    }

    #[test]
    fn objective_is_near_one_at_truth_and_larger_away() {
        let data = synthetic(0.095, 1.5, None, 0.01, 1);
        let at = collapse_objective(&data, 0.095, 1.5, None, 2.0).unwrap();
        assert!(at > 0.3 && at < 2.5, "{at}");
        let off = collapse_objective(&data, 0.115, 1.5, None, 2.0).unwrap();
        assert!(off > 5.0 * at, "{off} vs {at}");
        let mut rev = data.clone();
        rev.reverse();
        assert_eq!(collapse_objective(&rev, 0.095, 1.5, None, 2.0).unwrap(), at);
    }

    #[test]
    fn objective_errors() {
        let data = synthetic(0.095, 1.5, None, 0.01, 1);
        assert!(collapse_objective(&data[..1], 0.095, 1.5, None, 2.0).is_err());
        assert!(collapse_objective(&data, 0.095, -1.0, None, 2.0).is_err());
        let single: Vec<ScalingDataset> = data
            .iter()
            .map(|d| ScalingDataset { l: d.l, points: d.points[..1].to_vec() })
            .collect();
        assert!(collapse_objective(&single, 0.095, 1.5, None, 2.0).is_err());
        let disjoint = vec![
            ScalingDataset { l: 4, points: data[0].points[..5].to_vec() },
            ScalingDataset { l: 4, points: data[0].points[10..15].to_vec() },
        ];
        let err = collapse_objective(&disjoint, 0.095, 1.5, None, 2.0).unwrap_err();
        assert!(err.to_string().contains("L = 4, 4"), "{err}");
    }

    #[test]
    fn fit_collapse_recovers_nu() {
        let data = synthetic(0.095, 1.5, None, 0.01, 2);
        let grid = CollapseGrid {
            p_c: ParamAxis::Range { lo: 0.07, hi: 0.12, steps: 11 },
            nu: ParamAxis::Range { lo: 0.8, hi: 2.6, steps: 10 },
            theta: None,
        };
        let fit = fit_collapse(&data, &grid, 2.0).unwrap();
        assert!((fit.nu - 1.5).abs() < 0.15, "{fit:?}");
        assert!((fit.p_c - 0.095).abs() < 0.005, "{fit:?}");
        assert_eq!(fit.landscape.len(), 110);
        assert_eq!(fit.grid_shape, [11, 10, 1]);
        assert!(fit.nu_range.0 <= fit.nu && fit.nu <= fit.nu_range.1);
    }

    #[test]
    fn fit_collapse_recovers_theta_and_nu_jointly() {
        let data = synthetic(0.095, 1.5, Some(1.3), 0.01, 3);
        let grid = CollapseGrid {
            p_c: ParamAxis::Fixed(0.095),
            nu: ParamAxis::Range { lo: 0.8, hi: 2.6, steps: 10 },
            theta: Some(ParamAxis::Range { lo: 0.8, hi: 2.0, steps: 13 }),
        };
        let fit = fit_collapse(&data, &grid, 2.0).unwrap();
        assert!((fit.nu - 1.5).abs() < 0.2, "{fit:?}");
        assert!((fit.theta.unwrap() - 1.3).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn fit_collapse_errors() {
        let data = synthetic(0.095, 1.5, None, 0.01, 2);
        let empty = CollapseGrid {
            p_c: ParamAxis::Range { lo: 0.07, hi: 0.12, steps: 0 },
            nu: ParamAxis::Fixed(1.5),
            theta: None,
        };
        // A zero-step range still yields its midpoint; a fully fixed grid has
        // a single point and no landscape to compare.
        assert!(fit_collapse(&data, &empty, 2.0).is_ok());
        let flat: Vec<ScalingDataset> = [4usize, 8]
            .iter()
            .map(|&l| ScalingDataset {
                l,
                points: (0..5).map(|k| ScalingPoint { p: 0.05 + 0.01 * k as f64, y: 1.0, dy: 0.1 }).collect(),
            })
            .collect();
        let grid = CollapseGrid {
            p_c: ParamAxis::Range { lo: 0.07, hi: 0.12, steps: 5 },
            nu: ParamAxis::Range { lo: 1.0, hi: 2.0, steps: 5 },
            theta: None,
        };
        assert!(fit_collapse(&flat, &grid, 2.0).unwrap_err().to_string().contains("flat"));
    }

    #[test]
    fn regime_fits_are_exact_on_model_data() {
        let xs: Vec<f64> = (-4..=4).map(f64::from).collect();
        let smooth: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 3.0 * x.abs())).collect();
        let fit = fit_profile_regime(&smooth, Regime::Smooth, 4.0).unwrap();
        assert!((fit.amplitude - 3.0).abs() < 1e-12 && fit.rss < 1e-20);

        let rough: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 0.2 * x * x)).collect();
        let fit = fit_profile_regime(&rough, Regime::Rough, 4.0).unwrap();
        assert!((fit.amplitude - 0.2).abs() < 1e-12 && fit.rss < 1e-20);

        let crit: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x.abs().powf(1.7))).collect();
        let fit = fit_profile_regime(&crit, Regime::Critical, 4.0).unwrap();
        assert!((fit.exponent - 1.7).abs() < 1e-10, "{fit:?}");
        assert!((fit.theta_c.unwrap() - 1.3).abs() < 1e-10);
        assert!(fit.rss < 1e-18);

        assert!(fit_profile_regime(&[(0.0, 0.0)], Regime::Smooth, 4.0).is_err());
        assert!(fit_profile_regime(&[(1.0, 1.0), (-1.0, 1.0)], Regime::Critical, 4.0).is_err());
        let fit = fit_profile_regime(&smooth, Regime::Smooth, 2.0).unwrap();
        assert_eq!(fit.residuals.len(), 5);
    }

    #[test]
    fn reference_constants() {
        assert!((hyperscaling_theta_r(ZETA_R_FRG) - THETA_R_FRG).abs() < 1e-12);
        assert_eq!(THETA_C_FRG, 1.5);
        assert!(PUBLISHED_THETA_C.0 > 1.0 && PUBLISHED_THETA_C.0 < 2.0);
    }

    proptest! {
        #[test]
        fn r12_is_scale_invariant(
            pairs in proptest::collection::vec((0.1f64..10.0, 0.1f64..10.0), 2..30),
            c in 0.01f64..100.0,
        ) {
            let a: Vec<[f64; 2]> = pairs.iter().map(|&(x, y)| [x, y]).collect();
            let b: Vec<[f64; 2]> = pairs.iter().map(|&(x, y)| [c * x, c * y]).collect();
            let ra = ratio_r12(&DeltaStats::from_pairs(&a)).unwrap();
            let rb = ratio_r12(&DeltaStats::from_pairs(&b)).unwrap();
            prop_assert!((ra.value - rb.value).abs() < 1e-9 * ra.value.abs().max(1.0));
            prop_assert!((ra.se - rb.se).abs() < 1e-6 * ra.se.max(1e-9));
        }

        #[test]
        fn objective_scales_with_common_error_factor(c in 0.1f64..10.0, pc in 0.08f64..0.11, nu in 1.0f64..2.0) {
            let data = synthetic(0.095, 1.5, None, 0.02, 5);
            let scaled: Vec<ScalingDataset> = data
                .iter()
                .map(|d| ScalingDataset {
                    l: d.l,
                    points: d.points.iter().map(|pt| ScalingPoint { dy: pt.dy * c, ..*pt }).collect(),
                })
                .collect();
            let a = collapse_objective(&data, pc, nu, None, 2.0).unwrap();
            let b = collapse_objective(&scaled, pc, nu, None, 2.0).unwrap();
            prop_assert!((a - b * c * c).abs() < 1e-9 * a.max(1.0));
        }

        #[test]
        fn monotone_curves_cross_at_most_once(
            s1 in 0.5f64..10.0, s2 in 0.5f64..10.0, o in -0.05f64..0.05,
        ) {
            let ps: Vec<f64> = (0..9).map(|k| 0.06 + 0.01 * k as f64).collect();
            let report = find_crossings(&[line_curve(4, s1, 0.1, &ps), line_curve(6, s2, 0.1 + o, &ps)]).unwrap();
            prop_assert!(report.pairs[0].crossings.len() <= 1);
        }
    }
}
