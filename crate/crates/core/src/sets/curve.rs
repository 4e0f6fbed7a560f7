//! Parameterized curves, optionally unioned with finitely many points and
//! with the limit circle `{(cos s, sin s, 0)}`.
//!
//! The global projector is a Lipschitz branch-and-bound over the parameter
//! interval. A cell `[lo, hi]` with midpoint distance `g` and speed bound `L`
//! cannot contain a point closer than `g - L (hi - lo) / 2`; cells whose
//! bound exceeds the best distance found so far are discarded. Surviving
//! cells of width at most `grid_step` are refined by bisection on the
//! derivative of the squared distance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::{dist, Point, ProjectionResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveMap {
    /// `((1 + s e^-t) cos t, (1 + s e^-t) sin t, e^(-t/2))`
    Spiral { sign: f64 },
    /// `(x, |x|^alpha)`
    PowerGraph { alpha: f64 },
    /// `origin + t direction`
    Line { origin: Vec<f64>, direction: Vec<f64> },
}

impl CurveMap {
    pub fn dimension(&self) -> usize {
        match self {
            CurveMap::Spiral { .. } => 3,
            CurveMap::PowerGraph { .. } => 2,
            CurveMap::Line { origin, .. } => origin.len(),
        }
    }

    fn validate(&self, t_min: f64) -> Result<()> {
        match self {
            CurveMap::Spiral { sign } => {
                if *sign != 1.0 && *sign != -1.0 {
                    return Err(Error::invalid("spiral sign must be +1 or -1"));
                }
                if t_min < 0.0 {
                    return Err(Error::invalid("spiral parameter range must start at t >= 0"));
                }
            }
            CurveMap::PowerGraph { alpha } => {
                if !(alpha.is_finite() && *alpha >= 1.0) {
                    return Err(Error::invalid("power graph needs a finite alpha >= 1"));
                }
            }
            CurveMap::Line { origin, direction } => {
                if origin.is_empty() || origin.len() != direction.len() {
                    return Err(Error::invalid("line origin and direction must share a dimension >= 1"));
                }
                if origin.iter().chain(direction).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("line parameters"));
                }
                if direction.iter().all(|&v| v == 0.0) {
                    return Err(Error::invalid("line direction must be nonzero"));
                }
            }
        }
        Ok(())
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        match self {
            CurveMap::Spiral { sign } => {
                let r = 1.0 + sign * (-t).exp();
                vec![r * t.cos(), r * t.sin(), (-0.5 * t).exp()]
            }
            CurveMap::PowerGraph { alpha } => vec![t, t.abs().powf(*alpha)],
            CurveMap::Line { origin, direction } => origin.iter().zip(direction).map(|(o, d)| o + t * d).collect(),
        }
    }

    /// Squared distance to `q` and half its derivative,
    /// `<C(t) - q, C'(t)>`.
    fn profile(&self, t: f64, q: &[f64]) -> (f64, f64) {
        match self {
            CurveMap::Spiral { sign } => {
                let e = (-t).exp();
                let r = 1.0 + sign * e;
                let (s, c) = t.sin_cos();
                let h = (-0.5 * t).exp();
                let d = [r * c - q[0], r * s - q[1], h - q[2]];
                let dc = [-sign * e * c - r * s, -sign * e * s + r * c, -0.5 * h];
                (
                    d[0] * d[0] + d[1] * d[1] + d[2] * d[2],
                    d[0] * dc[0] + d[1] * dc[1] + d[2] * dc[2],
                )
            }
            CurveMap::PowerGraph { alpha } => {
                let a = t.abs();
                let y = a.powf(*alpha);
                let dy = if t == 0.0 {
                    0.0
                } else {
                    alpha * a.powf(alpha - 1.0) * t.signum()
                };
                let d = [t - q[0], y - q[1]];
                (d[0] * d[0] + d[1] * d[1], d[0] + d[1] * dy)
            }
            CurveMap::Line { origin, direction } => {
                let mut sq = 0.0;
                let mut slope = 0.0;
                for ((o, dv), qi) in origin.iter().zip(direction).zip(q) {
                    let di = o + t * dv - qi;
                    sq += di * di;
                    slope += di * dv;
                }
                (sq, slope)
            }
        }
    }

    /// Upper bound on `|C'(t)|` over `[lo, hi]`.
    fn speed_bound(&self, lo: f64, hi: f64) -> f64 {
        match self {
            CurveMap::Spiral { sign } => {
                let e = (-lo).exp();
                let radial = if *sign > 0.0 { 1.0 + e } else { 1.0 };
                (e * e + radial * radial + 0.25 * e).sqrt()
            }
            CurveMap::PowerGraph { alpha } => {
                let m = lo.abs().max(hi.abs());
                let slope = alpha * m.powf(alpha - 1.0);
                (1.0 + slope * slope).sqrt()
            }
            CurveMap::Line { direction, .. } => direction.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Which piece of a [`ParamCurve`] a point lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvePiece {
    Branch(usize),
    Extra(usize),
    Circle,
}

/// Location on a [`ParamCurve`]: the curve parameter for branches, the
/// angle for the limit circle, zero for extra points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveParam {
    pub piece: CurvePiece,
    pub t: f64,
}

impl CurveParam {
    pub fn branch(index: usize, t: f64) -> Self {
        CurveParam {
            piece: CurvePiece::Branch(index),
            t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamCurve {
    pub branches: Vec<CurveMap>,
    pub t_min: f64,
    pub t_max: f64,
    #[serde(default = "ParamCurve::default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "ParamCurve::default_refine_iters")]
    pub refine_iters: usize,
    #[serde(default)]
    pub extra_points: Vec<Point>,
    #[serde(default)]
    pub limit_circle: bool,
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    bound: f64,
    branch: usize,
    lo: f64,
    hi: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    // Reversed so that `BinaryHeap` pops the smallest bound first; ties
    // broken by position for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.branch.cmp(&self.branch))
            .then(other.lo.total_cmp(&self.lo))
    }
}

struct Candidate {
    distance: f64,
    point: Vec<f64>,
    param: CurveParam,
}

/// Number of starting cells per branch before subdivision.
const INITIAL_CELLS: f64 = 256.0;

impl ParamCurve {
    fn default_grid_step() -> f64 {
        1e-3
    }

    fn default_refine_iters() -> usize {
        100
    }

    fn with_branches(branches: Vec<CurveMap>, t_min: f64, t_max: f64) -> Self {
        ParamCurve {
            branches,
            t_min,
            t_max,
            grid_step: Self::default_grid_step(),
            refine_iters: Self::default_refine_iters(),
            extra_points: Vec::new(),
            limit_circle: false,
        }
    }

    /// Outer spiral on `t in [0, 40]` together with its limit circle.
    pub fn spiral() -> Self {
        ParamCurve {
            limit_circle: true,
            ..Self::with_branches(vec![CurveMap::Spiral { sign: 1.0 }], 0.0, 40.0)
        }
    }

    /// Outer and inner spirals together with their common limit circle.
    pub fn double_spiral() -> Self {
        ParamCurve {
            limit_circle: true,
            ..Self::with_branches(
                vec![CurveMap::Spiral { sign: 1.0 }, CurveMap::Spiral { sign: -1.0 }],
                0.0,
                40.0,
            )
        }
    }

    /// Graph of `|x|^alpha` for `x in [-half_width, half_width]`.
    pub fn power_graph(alpha: f64, half_width: f64) -> Self {
        Self::with_branches(vec![CurveMap::PowerGraph { alpha }], -half_width, half_width)
    }

    pub fn line(origin: Vec<f64>, direction: Vec<f64>, t_min: f64, t_max: f64) -> Self {
        Self::with_branches(vec![CurveMap::Line { origin, direction }], t_min, t_max)
    }

    pub fn dimension(&self) -> usize {
        if let Some(b) = self.branches.first() {
            b.dimension()
        } else if let Some(p) = self.extra_points.first() {
            p.dim()
        } else {
            3
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min.is_finite() && self.t_max.is_finite()) {
            return Err(Error::NonFinite("curve parameter range"));
        }
        if self.t_min >= self.t_max {
            return Err(Error::EmptyScanRange {
                lo: self.t_min,
                hi: self.t_max,
            });
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::invalid("grid_step must be positive"));
        }
        if self.branches.is_empty() && self.extra_points.is_empty() && !self.limit_circle {
            return Err(Error::invalid("param-curve has no branches, points or circle"));
        }
        let n = self.dimension();
        for b in &self.branches {
            b.validate(self.t_min)?;
            if b.dimension() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: b.dimension(),
                });
            }
        }
        for p in &self.extra_points {
            p.check_dim(n)?;
        }
        if self.limit_circle && n != 3 {
            return Err(Error::invalid("the limit circle lives in three dimensions"));
        }
        Ok(())
    }

    /// Point at a location, when it exists.
    pub fn point_at(&self, param: &CurveParam) -> Option<Point> {
        match param.piece {
            CurvePiece::Branch(b) => self.branches.get(b).map(|m| Point::from_vec(m.point(param.t))),
            CurvePiece::Extra(i) => self.extra_points.get(i).cloned(),
            CurvePiece::Circle => Some(Point::from_vec(vec![param.t.cos(), param.t.sin(), 0.0])),
        }
    }

    fn circle_candidate(&self, q: &[f64]) -> Option<(Candidate, bool)> {
        if !self.limit_circle {
            return None;
        }
        let rho = q[0].hypot(q[1]);
        let (p, angle, degenerate) = if rho == 0.0 {
            (vec![1.0, 0.0, 0.0], 0.0, true)
        } else {
            (vec![q[0] / rho, q[1] / rho, 0.0], q[1].atan2(q[0]), false)
        };
        let c = Candidate {
            distance: dist(q, &p),
            point: p,
            param: CurveParam {
                piece: CurvePiece::Circle,
                t: angle,
            },
        };
        Some((c, degenerate))
    }

    /// Root of the derivative on `[lo, hi]` given a sign change from
    /// negative to positive.
    fn bisect(&self, map: &CurveMap, q: &[f64], mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..self.refine_iters.max(1) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (_, s) = map.profile(mid, q);
            if s < 0.0 {
                lo = mid;
            } else if s > 0.0 {
                hi = mid;
            } else {
                return mid;
            }
        }
        let (dl, _) = map.profile(lo, q);
        let (dh, _) = map.profile(hi, q);
        if dl <= dh {
            lo
        } else {
            hi
        }
    }

    /// Golden-section minimization of the squared distance on `[lo, hi]`.
    fn golden(&self, map: &CurveMap, q: &[f64], mut lo: f64, mut hi: f64) -> f64 {
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut f1 = map.profile(x1, q).0;
        let mut f2 = map.profile(x2, q).0;
        for _ in 0..self.refine_iters.max(1) {
            if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
                break;
            }
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = map.profile(x1, q).0;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = map.profile(x2, q).0;
            }
        }
        if f1 <= f2 {
            x1
        } else {
            x2
        }
    }

    fn candidate(&self, branch: usize, t: f64, q: &[f64]) -> Candidate {
        let point = self.branches[branch].point(t);
        Candidate {
            distance: dist(q, &point),
            point,
            param: CurveParam::branch(branch, t),
        }
    }

    fn branch_search(&self, q: &[f64], best: &mut f64, out: &mut Vec<Candidate>) {
        let span = self.t_max - self.t_min;
        let cells = (span / self.grid_step.max(span / INITIAL_CELLS)).ceil().max(1.0) as usize;
        let width = span / cells as f64;
        let mut heap = BinaryHeap::new();
        let push = |heap: &mut BinaryHeap<Cell>, best: &mut f64, branch: usize, lo: f64, hi: f64| {
            let map = &self.branches[branch];
            let mid = 0.5 * (lo + hi);
            let g = map.profile(mid, q).0.sqrt();
            if g < *best {
                *best = g;
            }
            let bound = g - 0.5 * map.speed_bound(lo, hi) * (hi - lo);
            heap.push(Cell { bound, branch, lo, hi });
        };
        for b in 0..self.branches.len() {
            for i in 0..cells {
                let lo = self.t_min + i as f64 * width;
                let hi = if i + 1 == cells { self.t_max } else { lo + width };
                push(&mut heap, best, b, lo, hi);
            }
        }
        let mut leaves = Vec::new();
        while let Some(cell) = heap.pop() {
            if cell.bound > *best {
                break;
            }
            if cell.hi - cell.lo <= self.grid_step {
                leaves.push(cell);
                continue;
            }
            let mid = 0.5 * (cell.lo + cell.hi);
            push(&mut heap, best, cell.branch, cell.lo, mid);
            push(&mut heap, best, cell.branch, mid, cell.hi);
        }
        let cutoff = *best;
        for cell in leaves.into_iter().filter(|c| c.bound <= cutoff) {
            let map = &self.branches[cell.branch];
            let (_, s_lo) = map.profile(cell.lo, q);
            let (_, s_hi) = map.profile(cell.hi, q);
            let mut ts = vec![0.5 * (cell.lo + cell.hi)];
            if s_lo < 0.0 && s_hi > 0.0 {
                ts.push(self.bisect(map, q, cell.lo, cell.hi));
            } else {
                if s_lo == 0.0 {
                    ts.push(cell.lo);
                }
                if s_hi == 0.0 {
                    ts.push(cell.hi);
                }
            }
            if cell.lo == self.t_min && s_lo >= 0.0 {
                ts.push(self.t_min);
            }
            if cell.hi == self.t_max && s_hi <= 0.0 {
                ts.push(self.t_max);
            }
            for t in ts {
                let c = self.candidate(cell.branch, t, q);
                if c.distance < *best {
                    *best = c.distance;
                }
                out.push(c);
            }
        }
    }

    /// Global nearest point together with its location on the curve.
    pub fn project_with_param(&self, q: &Point) -> Result<(ProjectionResult, CurveParam)> {
        q.check_dim(self.dimension())?;
        let x = q.as_slice();
        let mut cands: Vec<Candidate> = Vec::new();
        let mut degenerate = false;
        for (i, p) in self.extra_points.iter().enumerate() {
            cands.push(Candidate {
                distance: dist(x, p.as_slice()),
                point: p.as_slice().to_vec(),
                param: CurveParam {
                    piece: CurvePiece::Extra(i),
                    t: 0.0,
                },
            });
        }
        if let Some((c, deg)) = self.circle_candidate(x) {
            degenerate = deg;
            cands.push(c);
        }
        let mut best = cands.iter().map(|c| c.distance).fold(f64::INFINITY, f64::min);
        self.branch_search(x, &mut best, &mut cands);

        let winner = cands
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| a.distance.total_cmp(&b.distance).then(i.cmp(j)))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::invalid("param-curve produced no candidates"))?;
        let w = &cands[winner];
        let tie_slack = 1e-12 * w.distance.max(1e-300);
        let tied = cands
            .iter()
            .any(|c| c.distance - w.distance <= tie_slack && dist(&c.point, &w.point) > 10.0 * self.grid_step);
        let circle_tie = degenerate && w.param.piece == CurvePiece::Circle;
        let point = Point::from_vec(w.point.clone());
        let result = if tied || circle_tie {
            ProjectionResult::representative(point, w.distance)
        } else {
            ProjectionResult::unique(point, w.distance)
        };
        Ok((result, w.param))
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        Ok(self.project_with_param(q)?.0)
    }
}

/// Descent on the squared distance from `prev` along the piece it lies on.
///
/// The returned point is never farther from `q` than the point at `prev`.
/// Extra points are isolated and stay fixed; on the limit circle the exact
/// nearest point is returned unless `q` sits on the axis.
pub fn warm_local_project(curve: &ParamCurve, q: &Point, prev: &CurveParam) -> Result<(Point, CurveParam)> {
    q.check_dim(curve.dimension())?;
    let x = q.as_slice();
    match prev.piece {
        CurvePiece::Extra(i) => {
            let p = curve
                .extra_points
                .get(i)
                .ok_or_else(|| Error::invalid(format!("no extra point {i}")))?;
            Ok((p.clone(), *prev))
        }
        CurvePiece::Circle => {
            let prev_point = curve.point_at(prev).expect("circle point");
            match curve.circle_candidate(x) {
                Some((c, false)) => Ok((Point::from_vec(c.point), c.param)),
                _ => Ok((prev_point, *prev)),
            }
        }
        CurvePiece::Branch(b) => {
            let map = curve
                .branches
                .get(b)
                .ok_or_else(|| Error::invalid(format!("no branch {b}")))?;
            let t0 = prev.t.clamp(curve.t_min, curve.t_max);
            let t = local_descent(curve, map, x, t0);
            Ok((Point::from_vec(map.point(t)), CurveParam::branch(b, t)))
        }
    }
}

fn local_descent(curve: &ParamCurve, map: &CurveMap, q: &[f64], t0: f64) -> f64 {
    let (g0, s0) = map.profile(t0, q);
    if s0 == 0.0 {
        return t0;
    }
    let dir = -s0.signum();
    let mut step = curve.grid_step;
    let (mut cur, mut gcur) = (t0, g0);
    let bracket = loop {
        let next = (cur + dir * step).clamp(curve.t_min, curve.t_max);
        if next == cur {
            return cur;
        }
        let (gn, sn) = map.profile(next, q);
        if gn > gcur || sn * dir >= 0.0 {
            break if dir > 0.0 { (cur, next) } else { (next, cur) };
        }
        cur = next;
        gcur = gn;
        step *= 2.0;
    };
    let (lo, hi) = bracket;
    let (_, s_lo) = map.profile(lo, q);
    let (_, s_hi) = map.profile(hi, q);
    let t = if s_lo < 0.0 && s_hi > 0.0 {
        curve.bisect(map, q, lo, hi)
    } else {
        curve.golden(map, q, lo, hi)
    };
    let gt = map.profile(t, q).0;
    if gt <= gcur {
        t
    } else {
        cur
    }
}
