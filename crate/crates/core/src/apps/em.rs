//! Gaussian EM with known variance as alternating projections.
//!
//! The completed data `z` lives in `R^{m x n}` (row-major). The E-step
//! projects `v = Gamma x` onto `B = {z : sum_i z_ji = y_j}`; the M-step
//! projects `z` onto `A = Gamma(Omega)`. The variance cancels from both.

use serde::{Deserialize, Serialize};

use crate::engine::{Certificate, StopReason, Trace, TraceBuilder};
use crate::error::{Error, Result};
use crate::primitives::{Matrix, Point, Tolerances};
use crate::sets::nearest_in_union;
use crate::sets::{BoxProduct, Interval, SetDescriptor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EMProblem {
    pub c: Matrix,
    pub y: Vec<f64>,
    pub omega: SetDescriptor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EMState {
    pub x: Point,
    pub z: Matrix,
    pub v: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EMRun {
    /// `v` as the A-sequence, `z` as the B-sequence.
    pub trace: Trace,
    pub state: EMState,
    /// Parameter iterates `x^(0), x^(1), ...`.
    pub xs: Vec<Point>,
    /// `max_j (max_i - min_i)(z_ji - c_ji x_i)` at the final state.
    pub spread: f64,
}

impl EMProblem {
    pub fn new(c: Matrix, y: Vec<f64>, omega: SetDescriptor) -> Result<Self> {
        let p = EMProblem { c, y, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.rows == 0 || self.c.cols == 0 {
            return Err(Error::invalid("C must have at least one row and column"));
        }
        if self.c.data.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("EM data"));
        }
        if self.y.len() != self.c.rows {
            return Err(Error::DimensionMismatch {
                expected: self.c.rows,
                found: self.y.len(),
            });
        }
        if self.omega.dimension() != self.c.cols {
            return Err(Error::DimensionMismatch {
                expected: self.c.cols,
                found: self.omega.dimension(),
            });
        }
        self.omega.validate()
    }

    pub fn m(&self) -> usize {
        self.c.rows
    }

    pub fn n(&self) -> usize {
        self.c.cols
    }

    /// `v_ji = c_ji x_i`
    pub fn gamma(&self, x: &Point) -> Matrix {
        let mut v = self.c.clone();
        for j in 0..self.m() {
            for i in 0..self.n() {
                v.set(j, i, self.c.get(j, i) * x.as_slice()[i]);
            }
        }
        v
    }

    fn column_weights(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| (0..self.m()).map(|j| self.c.get(j, i).powi(2)).sum())
            .collect()
    }
}

/// Conditional expectation of the complete data given the sample.
pub fn em_e_step(p: &EMProblem, x: &Point) -> Result<Matrix> {
    x.check_dim(p.n())?;
    let n = p.n() as f64;
    let mut z = p.gamma(x);
    for j in 0..p.m() {
        let row_sum: f64 = (0..p.n()).map(|i| z.get(j, i)).sum();
        let shift = (p.y[j] - row_sum) / n;
        for i in 0..p.n() {
            z.set(j, i, z.get(j, i) + shift);
        }
    }
    Ok(z)
}

fn nearest_admissible(union: &[Interval], target: f64) -> f64 {
    nearest_in_union(target, union)[0]
}

/// Maximum-likelihood parameter for completed data `z` over `Omega`.
///
/// Per-coordinate unions are solved exactly; other sets are accepted when
/// all columns of `C` carry the same weight, in which case the step is the
/// projection of the unconstrained optimum.
pub fn em_m_step(p: &EMProblem, z: &Matrix) -> Result<Point> {
    if (z.rows, z.cols) != (p.m(), p.n()) {
        return Err(Error::DimensionMismatch {
            expected: p.m() * p.n(),
            found: z.rows * z.cols,
        });
    }
    let w = p.column_weights();
    let unconstrained: Vec<Option<f64>> = (0..p.n())
        .map(|i| (w[i] > 0.0).then(|| (0..p.m()).map(|j| p.c.get(j, i) * z.get(j, i)).sum::<f64>() / w[i]))
        .collect();
    match &p.omega {
        SetDescriptor::BoxProduct(BoxProduct { intervals }) => {
            let mut x = Vec::with_capacity(p.n());
            for (i, (hat, union)) in unconstrained.iter().zip(intervals).enumerate() {
                let xi = match hat {
                    Some(h) => nearest_admissible(union, *h),
                    None if union.iter().all(Interval::is_bounded) => nearest_admissible(union, 0.0),
                    None => return Err(Error::Undetermined(i)),
                };
                x.push(xi);
            }
            Ok(Point::from_vec(x))
        }
        other => {
            if let Some(i) = unconstrained.iter().position(Option::is_none) {
                return Err(Error::Undetermined(i));
            }
            if w.iter().any(|&wi| (wi - w[0]).abs() > 1e-12 * w[0]) {
                return Err(Error::Unsupported(
                    "M-step over a non-product parameter set needs equal column weights".into(),
                ));
            }
            let hat = Point::from_vec(unconstrained.into_iter().flatten().collect());
            Ok(other.project(&hat)?.into_chosen())
        }
    }
}

/// `max_j (max_i - min_i)(z_ji - c_ji x_i)`
pub fn em_spread(p: &EMProblem, x: &Point, z: &Matrix) -> f64 {
    (0..p.m())
        .map(|j| {
            let d = (0..p.n()).map(|i| z.get(j, i) - p.c.get(j, i) * x.as_slice()[i]);
            let (lo, hi) = d.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi - lo
        })
        .fold(0.0, f64::max)
}

pub fn em_run(p: &EMProblem, x0: &Point, tol: &Tolerances) -> Result<EMRun> {
    p.validate()?;
    tol.validate()?;
    x0.check_dim(p.n())?;
    let residual = p.omega.membership_residual(x0)?;
    if residual > tol.tol_proj {
        return Err(Error::NotInSet { residual });
    }
    let v0 = p.gamma(x0);
    let z0 = em_e_step(p, x0)?;
    let mut builder = TraceBuilder::new(v0.to_point(), z0.to_point(), *tol);
    let mut xs = vec![x0.clone()];
    let mut z = z0;
    let mut k = 1;
    let stop = loop {
        let x = em_m_step(p, &z).map_err(|e| e.at_iteration(k))?;
        let v = p.gamma(&x);
        z = em_e_step(p, &x)?;
        xs.push(x);
        if let Some(reason) = builder.push(v.to_point(), z.to_point(), false, Certificate::Global) {
            break reason;
        }
        k += 1;
    };
    let trace = builder.finish(stop);
    let x = xs.last().expect("nonempty").clone();
    let state = EMState { v: p.gamma(&x), z, x };
    Ok(EMRun {
        spread: em_spread(p, &state.x, &state.z),
        trace,
        state,
        xs,
    })
}

/// Averaged projections onto two sets of reals as an EM instance:
/// `Gamma = I`, one equation `x_1 - x_2 = 0` and sample `y = 0`.
pub fn averaged_as_em(c1: Vec<Interval>, c2: Vec<Interval>) -> Result<EMProblem> {
    EMProblem::new(
        Matrix::new(1, 2, vec![1.0, -1.0])?,
        vec![0.0],
        BoxProduct::new(vec![c1, c2])?.into(),
    )
}

impl EMRun {
    pub fn converged(&self) -> bool {
        self.trace.stop_reason == StopReason::Stationary
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_averaged;
    use crate::primitives::TiePolicy;
    use crate::sets::Affine;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn union01_12() -> Vec<Interval> {
        vec![Interval::point(0.0), Interval::closed(1.0, 2.0)]
    }

    fn free(n: usize) -> SetDescriptor {
        BoxProduct::uniform(n, vec![Interval::real_line()]).unwrap().into()
    }

    #[test]
    fn e_step_examples() {
        let p = EMProblem::new(Matrix::new(1, 2, vec![1.0, 1.0]).unwrap(), vec![4.0], free(2)).unwrap();
        assert_eq!(em_e_step(&p, &pt(&[0.0, 0.0])).unwrap().data, vec![2.0, 2.0]);
        assert_eq!(em_e_step(&p, &pt(&[1.0, 3.0])).unwrap().data, vec![1.0, 3.0]);
        let p = EMProblem::new(Matrix::new(1, 2, vec![1.0, 2.0]).unwrap(), vec![4.0], free(2)).unwrap();
        assert_eq!(em_e_step(&p, &pt(&[1.0, 1.0])).unwrap().data, vec![1.5, 2.5]);
    }

    #[test]
    fn e_step_is_the_affine_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (m, n) = (3, 4);
        for _ in 0..20 {
            let c: Vec<f64> = (0..m * n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = EMProblem::new(Matrix::new(m, n, c).unwrap(), y.clone(), free(n)).unwrap();
            let z = em_e_step(&p, &pt(&x)).unwrap();
            for (j, yj) in y.iter().enumerate() {
                let s: f64 = (0..n).map(|i| z.get(j, i)).sum();
                assert!((s - yj).abs() < 1e-12);
            }
            // B as an affine set: a particular solution plus the row-sum kernel.
            let mut origin = vec![0.0; m * n];
            for j in 0..m {
                origin[j * n] = y[j];
            }
            let mut dirs = Vec::new();
            for j in 0..m {
                for i in 1..n {
                    let mut d = vec![0.0; m * n];
                    d[j * n] = -1.0;
                    d[j * n + i] = 1.0;
                    dirs.push(d);
                }
            }
            let b = Affine::new(origin, dirs).unwrap();
            let pb = b.project(&p.gamma(&pt(&x)).to_point()).unwrap();
            for (u, w) in z.data.iter().zip(pb.chosen().as_slice()) {
                assert!((u - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn m_step_unions_and_errors() {
        let omega: SetDescriptor = BoxProduct::new(vec![union01_12()]).unwrap().into();
        let p = EMProblem::new(Matrix::new(1, 1, vec![1.0]).unwrap(), vec![0.0], omega).unwrap();
        assert_eq!(
            em_m_step(&p, &Matrix::new(1, 1, vec![0.4]).unwrap())
                .unwrap()
                .as_slice(),
            &[0.0]
        );
        assert_eq!(
            em_m_step(&p, &Matrix::new(1, 1, vec![0.6]).unwrap())
                .unwrap()
                .as_slice(),
            &[1.0]
        );

        let p = EMProblem::new(Matrix::new(1, 2, vec![1.0, 0.0]).unwrap(), vec![1.0], free(2)).unwrap();
        let err = em_m_step(&p, &Matrix::new(1, 2, vec![1.0, 0.0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Undetermined(1)));
    }

    #[test]
    fn consistent_data_is_a_fixed_point() {
        let p = EMProblem::new(Matrix::new(1, 2, vec![1.0, 1.0]).unwrap(), vec![3.0], free(2)).unwrap();
        let run = em_run(&p, &pt(&[1.0, 2.0]), &Tolerances::default()).unwrap();
        assert!(run.converged());
        assert_eq!(run.trace.len(), 1);
        assert_eq!(run.state.x.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn nonconvex_instance() {
        let omega: SetDescriptor = BoxProduct::uniform(2, union01_12()).unwrap().into();
        let p = EMProblem::new(Matrix::new(1, 2, vec![1.0, 1.0]).unwrap(), vec![4.0], omega).unwrap();
        let run = em_run(&p, &pt(&[0.0, 1.0]), &Tolerances::default()).unwrap();
        assert!(run.converged());
        let z = &run.state.z;
        assert_eq!(z.get(0, 0) + z.get(0, 1), 4.0);
        assert!(run.spread <= 1e-8);
    }

    #[test]
    fn convex_box_decreases_monotonically() {
        let omega: SetDescriptor = BoxProduct::uniform(3, vec![Interval::closed(-1.0, 1.0)])
            .unwrap()
            .into();
        let c = Matrix::new(2, 3, vec![1.0, 2.0, 0.5, -1.0, 0.3, 1.0]).unwrap();
        let p = EMProblem::new(c, vec![5.0, -4.0], omega).unwrap();
        let run = em_run(&p, &pt(&[0.0, 0.0, 0.0]), &Tolerances::with_max_iter(500)).unwrap();
        for w in run.trace.records.windows(2) {
            assert!(w[1].r <= w[0].r * (1.0 + 1e-12));
        }
    }

    #[test]
    fn averaged_projections_special_case() {
        let c1 = union01_12();
        let c2 = vec![Interval::closed(0.5, 3.0), Interval::point(5.0)];
        let p = averaged_as_em(c1.clone(), c2.clone()).unwrap();
        let sets: Vec<SetDescriptor> = vec![
            BoxProduct::new(vec![c1]).unwrap().into(),
            BoxProduct::new(vec![c2]).unwrap().into(),
        ];
        let tol = Tolerances::with_max_iter(200);
        let avg = run_averaged(&sets, &pt(&[4.2]), &tol, &TiePolicy::first()).unwrap();
        let run = em_run(&p, &avg.start_b, &tol).unwrap();
        for (x, rec) in run.xs.iter().skip(1).zip(&avg.records) {
            let mean_em = 0.5 * (x.as_slice()[0] + x.as_slice()[1]);
            let mean_avg = 0.5 * (rec.b.as_slice()[0] + rec.b.as_slice()[1]);
            assert!((mean_em - mean_avg).abs() <= 1e-10);
        }
    }
}
