use serde::{Deserialize, Serialize};

use super::{binomial, combinations, MAX_ENUMERATED};
use crate::error::{Error, Result};
use crate::primitives::{dist, svd_small, Matrix, Point, ProjectionResult, Svd, SVD_MAX_DIM};

fn validate_shape(rows: usize, cols: usize, family: &str) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!("{family} needs rows, cols >= 1")));
    }
    if rows > SVD_MAX_DIM || cols > SVD_MAX_DIM {
        return Err(Error::invalid(format!(
            "{family} supports at most {SVD_MAX_DIM}x{SVD_MAX_DIM}"
        )));
    }
    Ok(())
}

/// Real `rows x cols` matrices of rank at most `rank`, flattened row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowRank {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
}

/// Singular values closer than this multiple of the largest one count as
/// tied.
const TIE_RTOL: f64 = 1e-10;

/// Positions `(first, last)` (0-based, inclusive) of the run of singular
/// values tied with `sigma[r - 1]`.
pub(crate) fn tie_run(sigma: &[f64], r: usize) -> (usize, usize) {
    let cut = sigma[r - 1];
    let slack = TIE_RTOL * sigma[0];
    let tied = |i: usize| (sigma[i] - cut).abs() <= slack;
    let mut first = r - 1;
    while first > 0 && tied(first - 1) {
        first -= 1;
    }
    let mut last = r - 1;
    while last + 1 < sigma.len() && tied(last + 1) {
        last += 1;
    }
    (first, last)
}

impl LowRank {
    pub fn dimension(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        validate_shape(self.rows, self.cols, "low-rank")
    }

    /// Singular values of `q` beyond the rank bound, as a distance.
    pub fn tail_distance(svd: &Svd, rank: usize) -> f64 {
        svd.sigma.iter().skip(rank).map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let m = Matrix::from_point(self.rows, self.cols, q)?;
        let svd = svd_small(&m)?;
        let p = svd.sigma.len();
        let r = self.rank;
        if r >= p || svd.sigma[r] == 0.0 {
            return Ok(ProjectionResult::unique(q.clone(), 0.0));
        }
        if r == 0 {
            let z = Point::zeros(q.dim());
            return Ok(ProjectionResult::unique(z, q.norm()));
        }
        let (first, last) = tie_run(&svd.sigma, r);
        let leading: Vec<usize> = (0..first).collect();
        let group = last - first + 1;
        let need = r - first;
        let count = binomial(group, need);
        let picks = if count > MAX_ENUMERATED {
            vec![(0..need).collect::<Vec<_>>()]
        } else {
            combinations(group, need)
        };
        let points: Vec<Point> = picks
            .iter()
            .map(|pick| {
                let mut keep = leading.clone();
                keep.extend(pick.iter().map(|j| first + j));
                svd.truncated(&keep).to_point()
            })
            .collect();
        let d = dist(q.as_slice(), points[0].as_slice());
        let mut result = ProjectionResult::enumerated(points, d);
        result.multivalued |= count > MAX_ENUMERATED;
        Ok(result)
    }
}

/// Real Toeplitz matrices (constant along each diagonal), flattened
/// row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Toeplitz {
    pub rows: usize,
    pub cols: usize,
}

impl Toeplitz {
    pub fn dimension(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        validate_shape(self.rows, self.cols, "toeplitz")
    }

    /// Mean of every diagonal, indexed by `j - i + rows - 1`.
    pub fn diagonal_means(&self, x: &[f64]) -> Vec<f64> {
        let nd = self.rows + self.cols - 1;
        let mut sum = vec![0.0; nd];
        let mut count = vec![0usize; nd];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = j + self.rows - 1 - i;
                sum[d] += x[i * self.cols + j];
                count[d] += 1;
            }
        }
        sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect()
    }

    pub fn from_diagonals(&self, diag: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dimension());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(diag[j + self.rows - 1 - i]);
            }
        }
        out
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        let p = self.from_diagonals(&self.diagonal_means(q.as_slice()));
        let d = dist(q.as_slice(), &p);
        Ok(ProjectionResult::unique(Point::from_vec(p), d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn close(a: &Point, b: &[f64]) -> bool {
        a.as_slice().iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn low_rank_examples() {
        let s = LowRank {
            rows: 2,
            cols: 2,
            rank: 1,
        };
        let r = s.project(&pt(&[3.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!(close(r.chosen(), &[3.0, 0.0, 0.0, 0.0]));
        assert!((r.distance - 1.0).abs() < 1e-12);

        let r = s.project(&pt(&[2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.multivalued);
        let found: Vec<bool> = [[2.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 2.0]]
            .iter()
            .map(|t| r.points.iter().any(|p| close(p, t)))
            .collect();
        assert_eq!(found, vec![true, true]);

        let rank_one = pt(&[1.0, 2.0, 2.0, 4.0]);
        let r = s.project(&rank_one).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.chosen(), &rank_one);
    }

    #[test]
    fn toeplitz_examples() {
        let t = Toeplitz { rows: 2, cols: 2 };
        let r = t.project(&pt(&[1.0, 2.0, 3.0, 5.0])).unwrap();
        assert_eq!(r.chosen(), &pt(&[3.0, 2.0, 3.0, 3.0]));
        let r = t.project(&pt(&[0.0, 4.0, 2.0, 0.0])).unwrap();
        assert_eq!(r.chosen(), &pt(&[0.0, 4.0, 2.0, 0.0]));
        let t = Toeplitz { rows: 2, cols: 3 };
        let r = t.project(&pt(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])).unwrap();
        // diagonals: {4}, {1, 5}, {2, 6}, {3}
        assert_eq!(r.chosen(), &pt(&[3.0, 4.0, 3.0, 4.0, 3.0, 4.0]));
    }

    #[test]
    fn tie_run_bounds() {
        assert_eq!(tie_run(&[3.0, 2.0, 2.0, 2.0, 1.0], 2), (1, 3));
        assert_eq!(tie_run(&[3.0, 2.0, 1.0], 2), (1, 1));
        assert_eq!(tie_run(&[2.0, 2.0], 1), (0, 1));
    }
}
