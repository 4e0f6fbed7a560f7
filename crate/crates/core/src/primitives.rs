//! Numeric primitives shared by every other module: points, projection
//! results with deterministic tie-breaking, tolerances, and a small dense
//! matrix type with an SVD.

use std::cmp::Ordering;
use std::hash::Hasher;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite real coordinate vector. Complex signals of length N are stored
/// as interleaved `(re, im)` pairs in dimension 2N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have dimension >= 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Point(coords))
    }

    /// Wraps coordinates produced by arithmetic on finite points.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, other: &Point) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.0
    }
}

impl Sub for &Point {
    type Output = Point;

    fn sub(self, rhs: &Point) -> Point {
        assert_eq!(self.dim(), rhs.dim(), "point dimension mismatch");
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for &Point {
    type Output = Point;

    fn add(self, rhs: &Point) -> Point {
        assert_eq!(self.dim(), rhs.dim(), "point dimension mismatch");
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(x: &Point, y: &Point) -> Result<f64> {
    y.check_dim(x.dim())?;
    Ok(dist(&x.0, &y.0))
}

/// Angle in `[0, pi]` between two vectors, or `None` when either is shorter
/// than `min_len`. Uses Kahan's formula, which stays accurate for nearly
/// parallel legs where `acos` of the normalized dot product does not.
pub fn angle_between(u: &[f64], v: &[f64], min_len: f64) -> Option<f64> {
    let nu = norm(u);
    let nv = norm(v);
    if nu < min_len || nv < min_len || nu == 0.0 || nv == 0.0 {
        return None;
    }
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (a, b) in u.iter().zip(v) {
        let d = a * nv - b * nu;
        let s = a * nv + b * nu;
        diff += d * d;
        sum += s * s;
    }
    Some(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

/// Nearest points of a set for one query.
///
/// `multivalued` is set whenever the query has more than one nearest point.
/// Families that can enumerate their nearest points list all of them; the
/// others list one representative and still raise the flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub points: Vec<Point>,
    pub distance: f64,
    pub multivalued: bool,
    pub chosen_index: usize,
}

impl ProjectionResult {
    pub fn unique(point: Point, distance: f64) -> Self {
        ProjectionResult {
            points: vec![point],
            distance,
            multivalued: false,
            chosen_index: 0,
        }
    }

    /// One representative of a nearest-point set that is not enumerated.
    pub fn representative(point: Point, distance: f64) -> Self {
        ProjectionResult {
            points: vec![point],
            distance,
            multivalued: true,
            chosen_index: 0,
        }
    }

    /// All listed points are nearest points at `distance`.
    pub fn enumerated(points: Vec<Point>, distance: f64) -> Self {
        debug_assert!(!points.is_empty());
        let multivalued = points.len() > 1;
        ProjectionResult {
            points,
            distance,
            multivalued,
            chosen_index: 0,
        }
    }

    pub fn chosen(&self) -> &Point {
        &self.points[self.chosen_index]
    }

    pub fn into_chosen(mut self) -> Point {
        self.points.swap_remove(self.chosen_index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieMode {
    #[default]
    First,
    LowestLex,
    SeededRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TiePolicy {
    #[serde(default)]
    pub mode: TieMode,
    #[serde(default)]
    pub seed: u64,
}

impl TiePolicy {
    pub fn first() -> Self {
        TiePolicy::default()
    }

    pub fn lowest_lex() -> Self {
        TiePolicy {
            mode: TieMode::LowestLex,
            seed: 0,
        }
    }

    pub fn seeded(seed: u64) -> Self {
        TiePolicy {
            mode: TieMode::SeededRandom,
            seed,
        }
    }
}

fn lex_cmp(a: &Point, b: &Point) -> Ordering {
    for (x, y) in a.0.iter().zip(&b.0) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.dim().cmp(&b.dim())
}

/// FNV-1a over the bit patterns of every listed coordinate.
fn hash_points(seed: u64, points: &[Point]) -> u64 {
    struct Fnv(u64);
    impl Hasher for Fnv {
        fn finish(&self) -> u64 {
            self.0
        }
        fn write(&mut self, bytes: &[u8]) {
            for b in bytes {
                self.0 ^= u64::from(*b);
                self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    let mut h = Fnv(0xcbf2_9ce4_8422_2325);
    h.write_u64(seed);
    for p in points {
        for c in &p.0 {
            h.write_u64(c.to_bits());
        }
    }
    h.finish()
}

/// Index that `policy` picks among the listed nearest points.
pub fn select_index(result: &ProjectionResult, policy: &TiePolicy) -> usize {
    let n = result.points.len();
    if n <= 1 {
        return 0;
    }
    match policy.mode {
        TieMode::First => 0,
        TieMode::LowestLex => (0..n)
            .min_by(|&i, &j| lex_cmp(&result.points[i], &result.points[j]))
            .unwrap_or(0),
        TieMode::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(hash_points(policy.seed, &result.points));
            rng.random_range(0..n)
        }
    }
}

/// Picks one nearest point, records the choice in `chosen_index`, and
/// returns a copy of it.
pub fn select(result: &mut ProjectionResult, policy: &TiePolicy) -> Point {
    result.chosen_index = select_index(result, policy);
    result.chosen().clone()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "Tolerances::default_tol_proj")]
    pub tol_proj: f64,
    #[serde(default = "Tolerances::default_tol_step")]
    pub tol_step: f64,
    #[serde(default = "Tolerances::default_max_iter")]
    pub max_iter: usize,
}

impl Tolerances {
    fn default_tol_proj() -> f64 {
        1e-10
    }
    fn default_tol_step() -> f64 {
        1e-12
    }
    fn default_max_iter() -> usize {
        1_000_000
    }

    pub fn with_max_iter(max_iter: usize) -> Self {
        Tolerances {
            max_iter,
            ..Tolerances::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_proj > 0.0 && self.tol_step > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_proj: Self::default_tol_proj(),
            tol_step: Self::default_tol_step(),
            max_iter: Self::default_max_iter(),
        }
    }
}

/// Dense real matrix in row-major order. Matrices enter the projection
/// machinery flattened row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// `rows x cols` matrix with ones on the leading diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flat_map(|row| row.iter().copied()).collect(),
        })
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    pub fn from_point(rows: usize, cols: usize, p: &Point) -> Result<Self> {
        Matrix::new(rows, cols, p.as_slice().to_vec())
    }

    pub fn to_point(&self) -> Point {
        Point::from_vec(self.data.clone())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Thin singular value decomposition `M = U diag(sigma) V^T` with
/// `U: rows x p`, `V: cols x p`, `p = min(rows, cols)`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        self.truncated(&(0..self.sigma.len()).collect::<Vec<_>>())
    }

    /// `sum_{i in keep} sigma_i u_i v_i^T`
    pub fn truncated(&self, keep: &[usize]) -> Matrix {
        let (n, m) = (self.u.rows, self.v.rows);
        let mut out = Matrix::zeros(n, m);
        for &l in keep {
            let s = self.sigma[l];
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                let ui = s * self.u.get(i, l);
                for j in 0..m {
                    out.data[i * m + j] += ui * self.v.get(j, l);
                }
            }
        }
        out
    }
}

pub const SVD_MAX_DIM: usize = 64;

/// SVD of a small dense matrix with nonincreasing singular values.
pub fn svd_small(m: &Matrix) -> Result<Svd> {
    if m.rows == 0 || m.cols == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if m.rows > SVD_MAX_DIM || m.cols > SVD_MAX_DIM {
        return Err(Error::invalid(format!(
            "svd_small supports at most {SVD_MAX_DIM}x{SVD_MAX_DIM}, got {}x{}",
            m.rows, m.cols
        )));
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entries"));
    }
    let p = m.rows.min(m.cols);
    if m.data.iter().all(|&v| v == 0.0) {
        return Ok(Svd {
            u: Matrix::eye(m.rows, p),
            sigma: vec![0.0; p],
            v: Matrix::eye(m.cols, p),
        });
    }

    if m.rows >= m.cols {
        Ok(jacobi_svd(m.rows, m.cols, |i, j| m.get(i, j)))
    } else {
        let t = jacobi_svd(m.cols, m.rows, |i, j| m.get(j, i));
        Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        })
    }
}

/// One-sided Jacobi SVD of the tall `n x p` matrix `a(i, j)`, `n >= p`.
///
/// Column pairs are rotated until mutually orthogonal; the column norms
/// are then the singular values. Accurate for tied and tiny singular values
/// alike.
fn jacobi_svd(n: usize, p: usize, a: impl Fn(usize, usize) -> f64) -> Svd {
    // Column-major working copies.
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|i| a(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..p).map(|i| f64::from(u8::from(i == j))).collect())
        .collect();
    let rotate = |x: &mut Vec<Vec<f64>>, i: usize, j: usize, c: f64, s: f64| {
        let (lo, hi) = x.split_at_mut(j);
        for (u, w) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
            let (ui, wj) = (*u, *w);
            *u = c * ui - s * wj;
            *w = s * ui + c * wj;
        }
    };
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha: f64 = cols[i].iter().map(|x| x * x).sum();
                let beta: f64 = cols[j].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let floor = norms[order[0]] * f64::EPSILON * n as f64;

    let mut u = Matrix::zeros(n, p);
    let mut vv = Matrix::zeros(p, p);
    let mut sigma = Vec::with_capacity(p);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(p);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        let col = if s > floor {
            cols[src].iter().map(|x| x / s).collect()
        } else {
            complete_basis(&basis, n)
        };
        for (i, x) in col.iter().enumerate() {
            u.set(i, dst, *x);
        }
        for (j, x) in v[src].iter().enumerate().take(p) {
            vv.set(j, dst, *x);
        }
        basis.push(col);
        sigma.push(if s > floor { s } else { 0.0 });
    }
    Svd { u, sigma, v: vv }
}

/// A unit vector orthogonal to the orthonormal `basis`.
fn complete_basis(basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut best = vec![0.0; n];
    let mut best_norm = -1.0;
    for e in 0..n {
        let mut w: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i == e))).collect();
        for b in basis {
            let d = b[e];
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw > best_norm {
            best_norm = nw;
            best = w.iter().map(|x| x / nw).collect();
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&pt(&[0.0, 0.0]), &pt(&[3.0, 4.0])).unwrap(), 5.0);
        let x = pt(&[1.5, -2.0, 7.0]);
        assert_eq!(distance(&x, &x).unwrap(), 0.0);
        let d = distance(&pt(&[1.0, 0.0, 0.0]), &pt(&[0.0, 1.0, 0.0])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn distance_dimension_mismatch() {
        assert!(matches!(
            distance(&pt(&[0.0]), &pt(&[0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn point_rejects_nan_and_empty() {
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![f64::INFINITY, 0.0]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert!(serde_json::from_str::<Point>("[1.0, 2.0]").is_ok());
        assert!(serde_json::from_str::<Point>("[]").is_err());
    }

    #[test]
    fn select_policies() {
        let tie = ProjectionResult::enumerated(vec![pt(&[2.0, 0.0]), pt(&[0.0, 2.0])], 2.0);
        let mut r = tie.clone();
        assert_eq!(select(&mut r, &TiePolicy::first()), pt(&[2.0, 0.0]));
        assert_eq!(r.chosen_index, 0);
        let mut r = tie.clone();
        assert_eq!(select(&mut r, &TiePolicy::lowest_lex()), pt(&[0.0, 2.0]));
        assert_eq!(r.chosen_index, 1);

        let single = ProjectionResult::unique(pt(&[1.0, 1.0]), 0.0);
        for policy in [TiePolicy::first(), TiePolicy::lowest_lex(), TiePolicy::seeded(9)] {
            let mut r = single.clone();
            assert_eq!(select(&mut r, &policy), pt(&[1.0, 1.0]));
        }
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let pts: Vec<Point> = (0..7).map(|i| pt(&[i as f64, 0.5])).collect();
        let r = ProjectionResult::enumerated(pts, 1.0);
        for seed in 0..20 {
            let a = select_index(&r, &TiePolicy::seeded(seed));
            let b = select_index(&r, &TiePolicy::seeded(seed));
            assert_eq!(a, b);
            assert!(a < 7);
        }
        let picks: std::collections::BTreeSet<usize> =
            (0..50).map(|s| select_index(&r, &TiePolicy::seeded(s))).collect();
        assert!(picks.len() > 1, "seed should influence the pick");
    }

    #[test]
    fn tolerances_defaults_and_validation() {
        let t = Tolerances::default();
        assert_eq!((t.tol_proj, t.tol_step, t.max_iter), (1e-10, 1e-12, 1_000_000));
        assert!(t.validate().is_ok());
        assert!(Tolerances { max_iter: 0, ..t }.validate().is_err());
        assert!(Tolerances { tol_step: 0.0, ..t }.validate().is_err());
    }

    #[test]
    fn angle_between_is_accurate_for_tiny_angles() {
        let a = angle_between(&[1.0, 0.0], &[1.0, 1e-9], 0.0).unwrap();
        assert!((a - 1e-9).abs() < 1e-20);
        let a = angle_between(&[1.0, 0.0], &[-1.0, 0.0], 0.0).unwrap();
        assert!((a - std::f64::consts::PI).abs() < 1e-15);
        assert!(angle_between(&[0.0, 0.0], &[1.0, 0.0], 1e-12).is_none());
    }

    #[test]
    fn svd_diagonal_and_zero() {
        let s = svd_small(&Matrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
        let s = svd_small(&Matrix::diag(&[1.0, 3.0])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);

        let z = svd_small(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(z.sigma, vec![0.0, 0.0]);
        assert_eq!(z.u, Matrix::eye(2, 2));
        assert_eq!(z.v, Matrix::eye(2, 2));
    }

    fn householder(w: &[f64]) -> Matrix {
        let n = w.len();
        let ww: f64 = w.iter().map(|x| x * x).sum();
        let mut h = Matrix::eye(n, n);
        for i in 0..n {
            for j in 0..n {
                h.set(i, j, h.get(i, j) - 2.0 * w[i] * w[j] / ww);
            }
        }
        h
    }

    #[test]
    fn svd_tied_leading_values() {
        // U diag(9.5, 9.5, 8) V^T with Householder factors; a bidiagonal QR
        // SVD loses accuracy on exactly this kind of spectrum.
        let u = householder(&[1.0, -2.0, 0.5]);
        let v = householder(&[0.3, 1.0, -1.0, 2.0, 0.7]);
        let sigma = [9.5, 9.5, 8.0];
        let mut m = Matrix::zeros(3, 5);
        for i in 0..3 {
            for j in 0..5 {
                let s: f64 = (0..3).map(|l| u.get(i, l) * sigma[l] * v.get(j, l)).sum();
                m.set(i, j, s);
            }
        }
        for input in [m.clone(), m.transpose()] {
            let s = svd_small(&input).unwrap();
            for (a, b) in s.sigma.iter().zip(sigma) {
                assert!((a - b).abs() < 1e-13, "{:?}", s.sigma);
            }
            let back = s.reconstruct();
            for (a, b) in back.data.iter().zip(&input.data) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn svd_rejects_nonfinite() {
        let m = Matrix::new(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(svd_small(&m), Err(Error::NonFinite(_))));
    }
}
