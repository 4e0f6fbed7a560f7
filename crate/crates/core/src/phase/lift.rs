//! Two-pixel lift of three-dimensional sets into `C^2`.
//!
//! A set `A` in `R^3` becomes the set of two-pixel signals `F(P'(A))`, where
//! `F` is the two-point unitary DFT, `P(x) = (Re x0, Im x0, Re x1)` and
//! `P'` is its adjoint inclusion. The lifted projector is the conjugation
//! `F . P' . proj_A . P . F'`. The imaginary part of the second frequency is
//! dropped by `P`, so a query off the slice `Im x^(1) = 0` reports its full
//! four-dimensional distance to the returned point.

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::dft::{dft, idft};
use crate::error::Result;
use crate::primitives::{dist, Point, ProjectionResult};
use crate::sets::{CurveParam, Cylinder, ParamCurve};

static SPIRAL: LazyLock<ParamCurve> = LazyLock::new(ParamCurve::spiral);
static DOUBLE_SPIRAL: LazyLock<ParamCurve> = LazyLock::new(ParamCurve::double_spiral);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftedKind {
    /// Outer spiral with its limit circle.
    Spiral,
    /// Both spirals with their limit circle.
    DoubleSpiral,
    /// Cylinder mantle.
    Cylinder,
}

/// The lift maps for two pixels.
pub struct LiftMaps;

impl LiftMaps {
    /// `P(F'(q))`
    pub fn shadow(q: &[f64]) -> [f64; 3] {
        let u = idft(q);
        [u[0], u[1], u[2]]
    }

    /// `F(P'(x))`
    pub fn lift(x: &[f64]) -> Point {
        Point::from_vec(dft(&[x[0], x[1], x[2], 0.0]))
    }

    /// The coordinate `P` discards, `Im F'(q)(1)`.
    pub fn dropped(q: &[f64]) -> f64 {
        idft(q)[3]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedSet {
    pub which: LiftedKind,
}

impl LiftedSet {
    pub fn dimension(&self) -> usize {
        4
    }

    pub fn validate(&self) -> Result<()> {
        Ok(())
    }

    pub fn curve(&self) -> Option<&'static ParamCurve> {
        match self.which {
            LiftedKind::Spiral => Some(&SPIRAL),
            LiftedKind::DoubleSpiral => Some(&DOUBLE_SPIRAL),
            LiftedKind::Cylinder => None,
        }
    }

    /// Projection of the shadow in `R^3`, with the curve location when the
    /// underlying set is a spiral.
    pub fn project_shadow(&self, shadow: &[f64; 3]) -> Result<(ProjectionResult, Option<CurveParam>)> {
        let s = Point::from_vec(shadow.to_vec());
        match self.curve() {
            Some(curve) => {
                let (r, param) = curve.project_with_param(&s)?;
                Ok((r, Some(param)))
            }
            None => Ok((Cylinder::default().project(&s)?, None)),
        }
    }

    /// Lifted projection together with the shadow location.
    pub fn project_with_param(&self, q: &Point) -> Result<(ProjectionResult, Option<CurveParam>)> {
        let x = q.as_slice();
        let (inner, param) = self.project_shadow(&Self::shadow_of(x))?;
        let points: Vec<Point> = inner.points.iter().map(|p| LiftMaps::lift(p.as_slice())).collect();
        let d = dist(x, points[0].as_slice());
        let mut r = ProjectionResult::enumerated(points, d);
        r.multivalued |= inner.multivalued;
        r.chosen_index = inner.chosen_index;
        Ok((r, param))
    }

    fn shadow_of(x: &[f64]) -> [f64; 3] {
        LiftMaps::shadow(x)
    }

    pub fn project(&self, q: &Point) -> Result<ProjectionResult> {
        Ok(self.project_with_param(q)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn maps_invert_on_the_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let back = LiftMaps::shadow(LiftMaps::lift(&x).as_slice());
            for (a, b) in x.iter().zip(back) {
                assert!((a - b).abs() < 1e-15);
            }
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let round = dft(&idft(&q));
            for (a, b) in q.iter().zip(round) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cylinder_conjugation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let lifted = LiftedSet {
            which: LiftedKind::Cylinder,
        };
        for _ in 0..50 {
            let q: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = lifted.project(&Point::new(q.clone()).unwrap()).unwrap();
            let lhs = LiftMaps::shadow(p.chosen().as_slice());
            let rhs = Cylinder::default()
                .project(&Point::from_vec(LiftMaps::shadow(&q).to_vec()))
                .unwrap();
            for (a, b) in lhs.iter().zip(rhs.chosen().as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_members_are_fixed() {
        let lifted = LiftedSet {
            which: LiftedKind::Spiral,
        };
        for t in [0.0, 1.0, 2.5, 4.0] {
            let x = [f64::cos(t), f64::sin(t), 0.0];
            let q = LiftMaps::lift(&x);
            // In frequency coordinates the member has |x^(0)| = 1 and a
            // vanishing real part at the second frequency.
            let y = idft(q.as_slice());
            assert!((y[0].hypot(y[1]) - 1.0).abs() < 1e-15);
            assert!(y[2].abs() < 1e-15);
            let r = lifted.project(&q).unwrap();
            assert!(r.distance < 1e-12);
        }
    }
}
