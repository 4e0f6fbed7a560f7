use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{SetDescriptor, MAX_ENUMERATED};
use crate::error::{Error, Result};
use crate::primitives::{dist, dot, norm, Point, ProjectionResult};

/// Orthonormal basis derived from the spanning directions, computed once.
#[derive(Clone, Debug, Default)]
struct BasisCache(OnceLock<Option<Vec<Vec<f64>>>>);

impl PartialEq for BasisCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// `origin + span(directions)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub origin: Vec<f64>,
    #[serde(default)]
    pub directions: Vec<Vec<f64>>,
    #[serde(skip)]
    basis: BasisCache,
}

impl Affine {
    pub fn new(origin: Vec<f64>, directions: Vec<Vec<f64>>) -> Result<Self> {
        let a = Affine {
            origin,
            directions,
            basis: BasisCache::default(),
        };
        a.validate()?;
        Ok(a)
    }

    /// Coordinate subspace spanned by the listed axes.
    pub fn coordinate_subspace(dim: usize, axes: &[usize]) -> Result<Self> {
        let directions = axes
            .iter()
            .map(|&i| {
                let mut e = vec![0.0; dim];
                if i >= dim {
                    return Err(Error::invalid(format!("axis {i} out of range for dimension {dim}")));
                }
                e[i] = 1.0;
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Affine::new(vec![0.0; dim], directions)
    }

    pub fn dimension(&self) -> usize {
        self.origin.len()
    }

    fn orthonormal(&self) -> Option<&Vec<Vec<f64>>> {
        self.basis.0.get_or_init(|| gram_schmidt(&self.directions)).as_ref()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dimension();
        if n == 0 {
            return Err(Error::invalid("affine set needs an origin of dimension >= 1"));
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine origin"));
        }
        for d in &self.directions {
            if d.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: d.len(),
                });
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("affine direction"));
            }
        }
        if self.orthonormal().is_none() {
            return Err(Error::RankDeficient);
        }
        Ok(())
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let basis = self.orthonormal().ok_or(Error::RankDeficient)?;
        let x = q.as_slice();
        let rel: Vec<f64> = x.iter().zip(&self.origin).map(|(a, o)| a - o).collect();
        let mut p = self.origin.clone();
        for e in basis {
            let c = dot(&rel, e);
            for (pi, ei) in p.iter_mut().zip(e) {
                *pi += c * ei;
            }
        }
        let d = dist(x, &p);
        Ok(ProjectionResult::unique(Point::from_vec(p), d))
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass. `None` when the
/// directions are linearly dependent.
fn gram_schmidt(directions: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(directions.len());
    for d in directions {
        let scale = norm(d);
        if scale == 0.0 {
            return None;
        }
        let mut v = d.clone();
        for _ in 0..2 {
            for e in &basis {
                let c = dot(&v, e);
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= c * ei;
                }
            }
        }
        let len = norm(&v);
        if len <= 1e-10 * scale {
            return None;
        }
        v.iter_mut().for_each(|vi| *vi /= len);
        basis.push(v);
    }
    Some(basis)
}

/// Closed interval; a missing bound is infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn point(v: f64) -> Self {
        Interval::closed(v, v)
    }

    pub fn real_line() -> Self {
        Interval { lo: None, hi: None }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    pub fn clamp(&self, x: f64) -> f64 {
        let x = self.lo.map_or(x, |lo| x.max(lo));
        self.hi.map_or(x, |hi| x.min(hi))
    }

    fn validate(&self) -> Result<()> {
        for b in [self.lo, self.hi].into_iter().flatten() {
            if !b.is_finite() {
                return Err(Error::NonFinite("interval bound"));
            }
        }
        if let (Some(lo), Some(hi)) = (self.lo, self.hi) {
            if lo > hi {
                return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Nearest points of `x` in a finite union of intervals, in ascending order.
/// More than one value means an exact tie.
pub(crate) fn nearest_in_union(x: f64, union: &[Interval]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    let mut out: Vec<f64> = Vec::new();
    for iv in union {
        let c = iv.clamp(x);
        let d = (c - x).abs();
        if d < best {
            best = d;
            out.clear();
            out.push(c);
        } else if d == best && !out.contains(&c) {
            out.push(c);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Cartesian product of per-coordinate finite unions of closed intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxProduct {
    pub intervals: Vec<Vec<Interval>>,
}

impl BoxProduct {
    pub fn new(intervals: Vec<Vec<Interval>>) -> Result<Self> {
        let b = BoxProduct { intervals };
        b.validate()?;
        Ok(b)
    }

    /// The same union in every coordinate.
    pub fn uniform(dim: usize, union: Vec<Interval>) -> Result<Self> {
        BoxProduct::new(vec![union; dim])
    }

    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(Error::invalid("box-product needs at least one coordinate"));
        }
        for (i, u) in self.intervals.iter().enumerate() {
            if u.is_empty() {
                return Err(Error::invalid(format!("coordinate {i} has an empty union")));
            }
            u.iter().try_for_each(Interval::validate)?;
        }
        Ok(())
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let choices: Vec<Vec<f64>> = q
            .as_slice()
            .iter()
            .zip(&self.intervals)
            .map(|(&x, u)| nearest_in_union(x, u))
            .collect();
        let first: Vec<f64> = choices.iter().map(|c| c[0]).collect();
        let d = dist(q.as_slice(), &first);
        let count: u128 = choices.iter().map(|c| c.len() as u128).product();
        if count == 1 {
            return Ok(ProjectionResult::unique(Point::from_vec(first), d));
        }
        if count > MAX_ENUMERATED {
            return Ok(ProjectionResult::representative(Point::from_vec(first), d));
        }
        let mut points = vec![Vec::with_capacity(choices.len())];
        for c in &choices {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    c.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        Ok(ProjectionResult::enumerated(
            points.into_iter().map(Point::from_vec).collect(),
            d,
        ))
    }
}

/// Cylinder mantle `x1^2 + x2^2 = 1, 0 <= x3 <= 1` in three dimensions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {}

impl Cylinder {
    pub fn dimension(&self) -> usize {
        3
    }

    pub fn validate(&self) -> Result<()> {
        Ok(())
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let x = q.as_slice();
        let h = x[2].clamp(0.0, 1.0);
        let rho = x[0].hypot(x[1]);
        if rho == 0.0 {
            let p = vec![1.0, 0.0, h];
            let d = dist(x, &p);
            return Ok(ProjectionResult::representative(Point::from_vec(p), d));
        }
        let p = vec![x[0] / rho, x[1] / rho, h];
        let d = dist(x, &p);
        Ok(ProjectionResult::unique(Point::from_vec(p), d))
    }
}

/// Epigraph `{(x, y): y >= a0 + (a2/2) x^2}` in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpigraphQuadratic {
    pub a0: f64,
    pub a2: f64,
}

impl EpigraphQuadratic {
    pub fn new(a0: f64, a2: f64) -> Result<Self> {
        let e = EpigraphQuadratic { a0, a2 };
        e.validate()?;
        Ok(e)
    }

    pub fn dimension(&self) -> usize {
        2
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.a0 + 0.5 * self.a2 * x * x
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a0.is_finite() || !self.a2.is_finite() {
            return Err(Error::NonFinite("epigraph coefficients"));
        }
        if self.a2 <= 0.0 {
            return Err(Error::invalid("epigraph-quadratic needs a2 > 0"));
        }
        Ok(())
    }

    /// Real roots of the stationarity cubic of `u -> |(u, phi(u)) - q|^2`.
    ///
    /// The cubic is monotone when `1 + a2 (a0 - q2) >= 0`; otherwise it has
    /// two turning points and up to three real roots, each bracketed on a
    /// monotone piece.
    pub fn stationary_points(&self, q1: f64, q2: f64) -> Vec<f64> {
        let c3 = 0.5 * self.a2 * self.a2;
        let c1 = 1.0 + self.a2 * (self.a0 - q2);
        let h = |u: f64| (c3 * u * u + c1) * u - q1;
        let bound = 1.0 + c1.abs().max(q1.abs()) / c3;
        let mut knots = vec![-bound];
        if c1 < 0.0 {
            let s = (-c1 / (3.0 * c3)).sqrt();
            knots.extend([-s, s]);
        }
        knots.push(bound);
        let mut roots = Vec::new();
        for w in knots.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (hlo, hhi) = (h(lo), h(hi));
            if hlo == 0.0 {
                roots.push(lo);
                continue;
            }
            if hhi == 0.0 || hlo.signum() == hhi.signum() {
                if hhi == 0.0 {
                    roots.push(hi);
                }
                continue;
            }
            let rising = hhi > 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let hm = h(mid);
                if hm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (hm > 0.0) == rising {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(if h(lo).abs() <= h(hi).abs() { lo } else { hi });
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup();
        roots
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let (q1, q2) = (q.as_slice()[0], q.as_slice()[1]);
        if q2 >= self.phi(q1) {
            return Ok(ProjectionResult::unique(q.clone(), 0.0));
        }
        let mut best = f64::INFINITY;
        let mut feet: Vec<Point> = Vec::new();
        for u in self.stationary_points(q1, q2) {
            let p = [u, self.phi(u)];
            let d = dist(&[q1, q2], &p);
            if d < best {
                best = d;
                feet.clear();
                feet.push(Point::from_vec(p.to_vec()));
            } else if d == best {
                feet.push(Point::from_vec(p.to_vec()));
            }
        }
        Ok(ProjectionResult::enumerated(feet, best))
    }
}

/// Cartesian product of catalog sets acting on consecutive coordinate blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub components: Vec<SetDescriptor>,
}

impl Product {
    pub fn new(components: Vec<SetDescriptor>) -> Result<Self> {
        let p = Product { components };
        p.validate()?;
        Ok(p)
    }

    pub fn dimension(&self) -> usize {
        self.components.iter().map(SetDescriptor::dimension).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::invalid("product needs at least one component"));
        }
        self.components.iter().try_for_each(SetDescriptor::validate)
    }

    /// Splits a product-space point into its component blocks.
    pub fn split<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.components.len());
        let mut offset = 0;
        for c in &self.components {
            let n = c.dimension();
            out.push(&x[offset..offset + n]);
            offset += n;
        }
        out
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let mut parts = Vec::with_capacity(self.components.len());
        for (c, block) in self.components.iter().zip(self.split(q.as_slice())) {
            parts.push(c.project(&Point::from_vec(block.to_vec()))?);
        }
        let d = parts.iter().map(|r| r.distance * r.distance).sum::<f64>().sqrt();
        let count: u128 = parts.iter().map(|r| r.points.len() as u128).product();
        let any_flag = parts.iter().any(|r| r.multivalued);
        if count > MAX_ENUMERATED || (count == 1 && any_flag) {
            let p: Vec<f64> = parts.iter().flat_map(|r| r.points[0].as_slice().to_vec()).collect();
            return Ok(ProjectionResult::representative(Point::from_vec(p), d));
        }
        let mut points: Vec<Vec<f64>> = vec![Vec::with_capacity(q.dim())];
        for r in &parts {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    r.points.iter().map(move |p| {
                        let mut v = prefix.clone();
                        v.extend_from_slice(p.as_slice());
                        v
                    })
                })
                .collect();
        }
        let mut result = ProjectionResult::enumerated(points.into_iter().map(Point::from_vec).collect(), d);
        result.multivalued |= any_flag;
        Ok(result)
    }
}

/// `{(x, ..., x)}` with `copies` blocks of dimension `dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagonal {
    pub copies: usize,
    pub dim: usize,
}

impl Diagonal {
    pub fn dimension(&self) -> usize {
        self.copies * self.dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.copies == 0 || self.dim == 0 {
            return Err(Error::invalid("diagonal needs copies >= 1 and dim >= 1"));
        }
        Ok(())
    }

    pub fn mean(&self, x: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for block in x.chunks(self.dim) {
            for (mi, v) in m.iter_mut().zip(block) {
                *mi += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.copies as f64);
        m
    }

    pub fn replicate(&self, x: &[f64]) -> Vec<f64> {
        x.iter().copied().cycle().take(self.dimension()).collect()
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let p = self.replicate(&self.mean(q.as_slice()));
        let d = dist(q.as_slice(), &p);
        Ok(ProjectionResult::unique(Point::from_vec(p), d))
    }
}
