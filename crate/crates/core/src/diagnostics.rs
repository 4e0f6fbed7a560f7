//! Regularity checks and rate estimates on recorded traces.
//!
//! Finite traces can refute the regularity conditions but never certify
//! them; reports here are statements of consistency.

use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::primitives::{dist, Point};
use crate::sets::SetDescriptor;

/// A trace whose infimal distance is at most this is called feasible.
pub const GAP_TOL: f64 = 1e-7;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;
pub const DEFAULT_R_FLOOR: f64 = 1e-9;
pub const DEFAULT_DROP_TAIL: f64 = 0.1;

/// Relative slack absorbing rounding in the estimate checks.
const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub r_star: f64,
    pub a_clusters: Vec<Point>,
    pub b_clusters: Vec<Point>,
    pub feasible: bool,
}

/// Greedy farthest-point covering: each point lies within `radius` of some
/// returned center.
pub fn cover<'a>(points: impl Iterator<Item = &'a Point> + Clone, radius: f64) -> Vec<Point> {
    let pts: Vec<&Point> = points.collect();
    let Some(first) = pts.first() else {
        return Vec::new();
    };
    let mut centers = vec![(*first).clone()];
    let mut nearest: Vec<f64> = pts.iter().map(|p| dist(p.as_slice(), first.as_slice())).collect();
    loop {
        let (idx, far) = nearest.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
        );
        if far <= radius {
            return centers;
        }
        let c = pts[idx].clone();
        for (n, p) in nearest.iter_mut().zip(&pts) {
            *n = n.min(dist(p.as_slice(), c.as_slice()));
        }
        centers.push(c);
    }
}

/// Infimal distance of the whole trace and clusters of its tail.
pub fn estimate_gap(trace: &Trace, tail_fraction: f64, cluster_radius: f64) -> Result<Gap> {
    if trace.is_empty() {
        return Err(Error::InsufficientData {
            check: "gap",
            needed: 1,
            found: 0,
        });
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::invalid("tail_fraction must lie in (0, 1]"));
    }
    if !(cluster_radius > 0.0) {
        return Err(Error::invalid("cluster_radius must be positive"));
    }
    let r_star = trace.records.iter().map(|r| r.r).fold(f64::INFINITY, f64::min);
    let n = trace.len();
    let tail = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let recs = &trace.records[n - tail..];
    Ok(Gap {
        r_star,
        a_clusters: cover(recs.iter().map(|r| &r.a), cluster_radius),
        b_clusters: cover(recs.iter().map(|r| &r.b), cluster_radius),
        feasible: r_star <= GAP_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleFit {
    pub omega: f64,
    pub gamma: f64,
    pub theta: f64,
    pub n_points: usize,
    pub r_floor: f64,
}

/// `1 - cos(alpha)` without cancellation.
fn one_minus_cos(alpha: f64) -> f64 {
    let s = (0.5 * alpha).sin();
    2.0 * s * s
}

/// Fits `1 - cos(alpha) ~ gamma (r - r_star)^omega` on `(r, alpha)` samples.
/// Samples with a sentinel angle, a vanishing numerator, or
/// `r - r_star < r_floor` are skipped.
pub fn fit_angle_samples(samples: &[(f64, f64)], r_star: f64, r_floor: f64) -> Result<AngleFit> {
    let usable: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(r, alpha)| *alpha >= 0.0 && r - r_star >= r_floor && r - r_star > 0.0)
        .map(|&(r, alpha)| (r - r_star, one_minus_cos(alpha)))
        .filter(|(_, num)| *num > 0.0)
        .collect();
    if usable.len() < 8 {
        return Err(Error::InsufficientData {
            check: "angle",
            needed: 8,
            found: usable.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|(_, n)| n.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let omega = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let gamma = usable
        .iter()
        .map(|(e, num)| num / e.powf(omega))
        .fold(f64::INFINITY, f64::min);
    Ok(AngleFit {
        omega,
        gamma,
        theta: (omega + 2.0) / 4.0,
        n_points: usable.len(),
        r_floor,
    })
}

pub fn fit_angle_exponent(trace: &Trace, r_star: f64, r_floor: f64) -> Result<AngleFit> {
    let samples: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.r, r.alpha)).collect();
    fit_angle_samples(&samples, r_star, r_floor)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    Finite,
    Linear,
    Sublinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub kind: RateKind,
    pub q: Option<f64>,
    pub rho: Option<f64>,
    pub r_squared: f64,
    pub reference: Point,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Fraction of the series end excluded from the fit.
    pub drop_tail: f64,
    /// Fit only the last `window` usable points.
    pub window: Option<usize>,
    /// Limit proxy; the final point when absent.
    pub reference: Option<Point>,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            drop_tail: DEFAULT_DROP_TAIL,
            window: None,
            reference: None,
        }
    }
}

/// Log-space least squares for `log d_k = log C + f_k(param)` with `C`
/// eliminated in closed form. Returns the residual sum of squares.
fn sse_for(logd: &[f64], model: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    // Residuals are shifted by the first one to keep the one-pass variance
    // accurate.
    let (mut shift, mut sum, mut sumsq) = (None, 0.0, 0.0);
    for (&y, f) in logd.iter().zip(model) {
        let e = y - f?;
        let c = *shift.get_or_insert(e);
        sum += e - c;
        sumsq += (e - c) * (e - c);
    }
    let n = logd.len() as f64;
    Some((sumsq - sum * sum / n).max(0.0))
}

/// Minimizes `sse(param)` over `[lo, hi]` on a log grid followed by a
/// golden-section polish.
fn fit_param(lo: f64, hi: f64, sse: &dyn Fn(f64) -> f64) -> (f64, f64) {
    const GRID: usize = 400;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let at = |i: usize| (llo + (lhi - llo) * i as f64 / GRID as f64).exp();
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..=GRID {
        let s = sse(at(i));
        if s < best {
            best = s;
            best_i = i;
        }
    }
    let mut a = at(best_i.saturating_sub(1));
    let mut b = at((best_i + 1).min(GRID));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - ratio * (b - a), a + ratio * (b - a));
    let (mut f1, mut f2) = (sse(x1), sse(x2));
    for _ in 0..200 {
        if b - a <= 1e-15 * b {
            break;
        }
        if f1 <= f2 {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - ratio * (b - a);
            f1 = sse(x1);
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + ratio * (b - a);
            f2 = sse(x2);
        }
    }
    let p = 0.5 * (a + b);
    let s = sse(p);
    if s <= best {
        (p, s)
    } else {
        (at(best_i), best)
    }
}

/// Classifies the convergence of `series` toward its reference.
///
/// Two models are fitted in log space against the distances
/// `d_k = |x_k - reference|`: geometric `C (q^k - q^N)` and power
/// `C (k^-rho - N^-rho)`, where `N` is the reference index. The subtracted
/// terms account for the reference being the final iterate rather than the
/// true limit; they are dropped when an explicit reference is given. The
/// model with the larger coefficient of determination wins.
pub fn fit_rate(series: &[Point], opts: &RateOptions) -> Result<RateFit> {
    if series.len() < 20 {
        return Err(Error::InsufficientData {
            check: "rate",
            needed: 20,
            found: series.len(),
        });
    }
    if !(0.0..1.0).contains(&opts.drop_tail) {
        return Err(Error::invalid("drop_tail must lie in [0, 1)"));
    }
    let explicit = opts.reference.is_some();
    let reference = opts
        .reference
        .clone()
        .unwrap_or_else(|| series[series.len() - 1].clone());
    reference.check_dim(series[0].dim())?;
    let n_ref = series.len() as f64;
    let keep = ((series.len() as f64) * (1.0 - opts.drop_tail)).floor() as usize;
    let keep = if explicit { keep } else { keep.min(series.len() - 1) };
    let first = opts.window.map_or(0, |w| keep.saturating_sub(w));
    let window: Vec<(f64, f64)> = (first..keep)
        .map(|i| ((i + 1) as f64, dist(series[i].as_slice(), reference.as_slice())))
        .collect();
    let finite = |n_points| RateFit {
        kind: RateKind::Finite,
        q: None,
        rho: None,
        r_squared: 1.0,
        reference: reference.clone(),
        n_points,
    };
    if window.iter().any(|&(_, d)| d == 0.0) {
        return Ok(finite(window.len()));
    }
    if window.len() < 3 {
        return Err(Error::InsufficientData {
            check: "rate",
            needed: 3,
            found: window.len(),
        });
    }
    let ks: Vec<f64> = window.iter().map(|w| w.0).collect();
    let log_ks: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let log_n = n_ref.ln();
    let logd: Vec<f64> = window.iter().map(|w| w.1.ln()).collect();
    let mean = logd.iter().sum::<f64>() / logd.len() as f64;
    let sst: f64 = logd.iter().map(|y| (y - mean) * (y - mean)).sum();

    let linear = |p: f64| {
        let model = ks.iter().map(|&k| {
            let tail = if explicit { 0.0 } else { (-p * (n_ref - k)).exp() };
            (tail < 1.0).then(|| -p * k + (-tail).ln_1p())
        });
        sse_for(&logd, model).unwrap_or(f64::INFINITY)
    };
    let power = |rho: f64| {
        let model = log_ks.iter().map(|&lk| {
            let tail = if explicit { 0.0 } else { (rho * (lk - log_n)).exp() };
            (tail < 1.0).then(|| -rho * lk + (-tail).ln_1p())
        });
        sse_for(&logd, model).unwrap_or(f64::INFINITY)
    };
    let (p, sse_lin) = fit_param(1e-8, 50.0, &linear);
    let (rho, sse_pow) = fit_param(1e-4, 20.0, &power);
    let r2 = |sse: f64| {
        if sst > 0.0 {
            (1.0 - sse / sst).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    let (r2_lin, r2_pow) = (r2(sse_lin), r2(sse_pow));
    Ok(if r2_lin >= r2_pow {
        RateFit {
            kind: RateKind::Linear,
            q: Some((-p).exp()),
            rho: None,
            r_squared: r2_lin,
            reference,
            n_points: window.len(),
        }
    } else {
        RateFit {
            kind: RateKind::Sublinear,
            q: None,
            rho: Some(rho),
            r_squared: r2_pow,
            reference,
            n_points: window.len(),
        }
    })
}

/// Rate class implied by a Lojasiewicz exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub kind: RateKind,
    /// Power exponent for sublinear predictions.
    pub rho: Option<f64>,
    /// Upper bound on the linear ratio when one is known (any `q` above it
    /// is excluded).
    pub q_bound: Option<f64>,
}

pub fn predicted_rate(theta: f64, r_star: f64) -> Result<RatePrediction> {
    if !(0.5..1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta = {theta} outside [0.5, 1)")));
    }
    let linear = |q_bound| RatePrediction {
        kind: RateKind::Linear,
        rho: None,
        q_bound,
    };
    let sublinear = |rho| RatePrediction {
        kind: RateKind::Sublinear,
        rho: Some(rho),
        q_bound: None,
    };
    Ok(if r_star > GAP_TOL {
        if theta == 0.5 {
            RatePrediction {
                kind: RateKind::Finite,
                rho: None,
                q_bound: None,
            }
        } else if theta < 0.75 {
            linear(Some(0.5))
        } else if theta == 0.75 {
            linear(None)
        } else {
            sublinear((1.0 - theta) / (2.0 * theta - 1.5))
        }
    } else if theta == 0.5 {
        linear(None)
    } else {
        sublinear((1.0 - theta) / (2.0 * theta - 1.0))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    pub ell_used: f64,
}

/// `min{1/2, 1 - sqrt(2c/gamma), c/(2 + c)}`, defined for `c < gamma/2`.
pub fn three_point_ell(c: f64, gamma: f64) -> Result<f64> {
    if !(c > 0.0 && gamma > 0.0) {
        return Err(Error::invalid("three-point estimate needs c > 0 and gamma > 0"));
    }
    if c >= gamma / 2.0 {
        return Err(Error::invalid(format!(
            "three-point estimate needs c < gamma/2 (c = {c}, gamma = {gamma})"
        )));
    }
    Ok(0.5f64.min(1.0 - (2.0 * c / gamma).sqrt()).min(c / (2.0 + c)))
}

/// Tests `|a_k - b_k|^2 + ell |b_{k-1} - b_k|^2 <= |b_{k-1} - a_k|^2` on
/// every block, with `ell` from [`three_point_ell`].
pub fn check_three_point(trace: &Trace, c: f64, gamma: f64) -> Result<EstimateReport> {
    let ell = three_point_ell(c, gamma)?;
    Ok(three_point_with_ell(trace, ell))
}

pub fn three_point_with_ell(trace: &Trace, ell: f64) -> EstimateReport {
    let mut violations = Vec::new();
    for (i, rec) in trace.records.iter().enumerate() {
        let prev_b = trace.prev_b(i);
        let step = dist(prev_b.as_slice(), rec.b.as_slice());
        let lhs = rec.r * rec.r + ell * step * step;
        let reach = dist(prev_b.as_slice(), rec.a.as_slice());
        let rhs = reach * reach;
        if lhs > rhs + ROUNDING_SLACK * rhs.max(lhs) {
            violations.push(Violation { k: rec.k, lhs, rhs });
        }
    }
    EstimateReport {
        checked: trace.len(),
        violations,
        ell_used: ell,
    }
}

/// Tests `r_k^2 - r_{k+1}^2 >= ell |b_k - b_{k+1}|^2` on consecutive blocks.
pub fn check_four_point(trace: &Trace, ell: f64) -> Result<EstimateReport> {
    if !(ell > 0.0) {
        return Err(Error::invalid("four-point estimate needs ell > 0"));
    }
    let mut violations = Vec::new();
    for w in trace.records.windows(2) {
        let lhs = (w[0].r - w[1].r) * (w[0].r + w[1].r);
        let step = dist(w[0].b.as_slice(), w[1].b.as_slice());
        let rhs = ell * step * step;
        if lhs < rhs - ROUNDING_SLACK * (w[0].r * w[0].r).max(rhs) {
            violations.push(Violation { k: w[1].k, lhs, rhs });
        }
    }
    Ok(EstimateReport {
        checked: trace.len().saturating_sub(1),
        violations,
        ell_used: ell,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Reach {
    Finite {
        value: f64,
    },
    /// The predicate still held at `r_max`.
    Infinite {
        r_max: f64,
    },
}

impl Reach {
    pub fn value(&self) -> f64 {
        match self {
            Reach::Finite { value } => *value,
            Reach::Infinite { .. } => f64::INFINITY,
        }
    }
}

/// Distance within which a projection counts as returning `b` itself.
pub const REACH_MATCH_TOL: f64 = 1e-6;

/// Whether `b + r d` projects uniquely back onto `b`.
pub fn reach_predicate(set: &SetDescriptor, b: &Point, d: &Point, r: f64) -> Result<bool> {
    let q = b.axpy(r, d);
    let p = set.project(&q)?;
    Ok(!p.multivalued && dist(p.chosen().as_slice(), b.as_slice()) <= REACH_MATCH_TOL)
}

/// Reach of `set` at `b` along the unit direction `d`, by doubling and
/// bisection to absolute accuracy `tol`.
pub fn reach_along(set: &SetDescriptor, b: &Point, d: &Point, r_max: f64, tol: f64) -> Result<Reach> {
    b.check_dim(set.dimension())?;
    d.check_dim(set.dimension())?;
    if !(r_max > 0.0 && tol > 0.0) {
        return Err(Error::invalid("reach needs r_max > 0 and tol > 0"));
    }
    let dn = d.norm();
    if (dn - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("direction must be a unit vector (norm {dn})")));
    }
    let residual = set.membership_residual(b)?;
    if residual > 1e-9 * b.norm().max(1.0) {
        return Err(Error::NotInSet { residual });
    }
    let (mut lo, mut hi) = (0.0, tol.min(r_max));
    while reach_predicate(set, b, d, hi)? {
        lo = hi;
        if hi >= r_max {
            return Ok(Reach::Infinite { r_max });
        }
        hi = (2.0 * hi).min(r_max);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if reach_predicate(set, b, d, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Reach::Finite { value: 0.5 * (lo + hi) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachRatio {
    pub k: usize,
    pub reach: Reach,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkingReach {
    pub ratios: Vec<ReachRatio>,
    /// Max ratio over the last quartile of checked blocks.
    pub tau: f64,
}

/// Per block, `(r_k - r_star)^sigma / (R(b_k, d_k) - r_star)` with
/// `d_k = (a_k - b_k) / r_k`. Infinite reach gives ratio 0.
pub fn shrinking_reach_ratio(
    trace: &Trace,
    set: &SetDescriptor,
    sigma: f64,
    r_star: f64,
    r_max: f64,
    tol: f64,
) -> Result<ShrinkingReach> {
    let mut ratios = Vec::new();
    for rec in &trace.records {
        if rec.r <= r_star || rec.r == 0.0 {
            continue;
        }
        let d = (&rec.a - &rec.b).scale(1.0 / rec.r);
        let reach = reach_along(set, &rec.b, &d, r_max, tol)?;
        let ratio = match reach {
            Reach::Infinite { .. } => 0.0,
            Reach::Finite { value } if value > r_star => (rec.r - r_star).powf(sigma) / (value - r_star),
            Reach::Finite { .. } => f64::INFINITY,
        };
        ratios.push(ReachRatio { k: rec.k, reach, ratio });
    }
    let n = ratios.len();
    let tail = n - n.div_ceil(4).min(n);
    let tau = ratios[tail..].iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(ShrinkingReach { ratios, tau })
}

/// A block for the Holder test: `cos beta`, `r`, and `|b_{k-1} - a_k|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderBlock {
    pub k: usize,
    pub beta: f64,
    pub r: f64,
    pub prev_b_distance: f64,
}

/// For blocks with `b_{k-1}` inside the ball of radius `(1 + c) r_k` around
/// `a_k`, tests `cos beta_k <= sqrt(c) (r_k - r_star)^sigma`. Blocks with
/// `r_k - r_star` below [`DEFAULT_R_FLOOR`] are unresolved in floating point
/// and skipped.
pub fn holder_blocks(blocks: &[HolderBlock], c: f64, sigma: f64, r_star: f64) -> Result<EstimateReport> {
    if !(c > 0.0 && sigma > 0.0) {
        return Err(Error::invalid("holder check needs c > 0 and sigma > 0"));
    }
    let mut checked = 0;
    let mut violations = Vec::new();
    for b in blocks {
        if b.beta < 0.0 || b.prev_b_distance > (1.0 + c) * b.r || b.r - r_star < DEFAULT_R_FLOOR {
            continue;
        }
        checked += 1;
        let lhs = b.beta.cos();
        let rhs = c.sqrt() * (b.r - r_star).max(0.0).powf(sigma);
        if lhs > rhs + ROUNDING_SLACK {
            violations.push(Violation { k: b.k, lhs, rhs });
        }
    }
    Ok(EstimateReport {
        checked,
        violations,
        ell_used: 0.0,
    })
}

pub fn holder_check(trace: &Trace, c: f64, sigma: f64, r_star: f64) -> Result<EstimateReport> {
    let blocks: Vec<HolderBlock> = trace
        .records
        .iter()
        .enumerate()
        .map(|(i, rec)| HolderBlock {
            k: rec.k,
            beta: rec.beta,
            r: rec.r,
            prev_b_distance: dist(trace.prev_b(i).as_slice(), rec.a.as_slice()),
        })
        .collect();
    let mut report = holder_blocks(&blocks, c, sigma, r_star)?;
    report.ell_used = 0.0;
    Ok(report)
}

/// Norm of the subgradient witness `lambda u + w` minimized over
/// `lambda >= 0`, where `u = prev_b - a` spans the proximal normal and
/// `w = (1 - r_star / d_B(a)) (a - P_B(a))`.
pub fn criticality_residual(
    a: &Point,
    prev_b: &Point,
    set_a: &SetDescriptor,
    set_b: &SetDescriptor,
    r_star: f64,
) -> Result<f64> {
    let residual = set_a.membership_residual(a)?;
    if residual > 1e-9 * a.norm().max(1.0) {
        return Err(Error::NotInSet { residual });
    }
    prev_b.check_dim(a.dim())?;
    let pb = set_b.project(a)?;
    let d = pb.distance;
    if d == 0.0 {
        return Err(Error::invalid("criticality residual is undefined when a lies in B"));
    }
    let w = (a - pb.chosen()).scale(1.0 - r_star / d);
    let u = prev_b - a;
    let uu = u.dot(&u);
    let lambda = if uu > 0.0 { (-u.dot(&w) / uu).max(0.0) } else { 0.0 };
    Ok(w.axpy(lambda, &u).norm())
}

/// Trace-level convenience: the residual at the final block.
pub fn final_criticality(trace: &Trace, set_a: &SetDescriptor, set_b: &SetDescriptor, r_star: f64) -> Result<f64> {
    let i = trace.len().checked_sub(1).ok_or(Error::InsufficientData {
        check: "criticality",
        needed: 1,
        found: 0,
    })?;
    criticality_residual(&trace.records[i].a, trace.prev_b(i), set_a, set_b, r_star)
}
