//! Phase retrieval: Gerchberg-Saxton error reduction with common priors and
//! the two-pixel counterexamples for error reduction and HIO.

pub mod dft;
pub mod lift;

use serde::{Deserialize, Serialize};

use crate::engine::{run_alternating, run_douglas_rachford, DRTrace, Trace};
use crate::error::{Error, Result};
use crate::primitives::{dist, Point, TiePolicy, Tolerances};
use crate::sets::{
    CurveMap, Cylinder, Domain, MagnitudeSpec, NonnegReal, ParamCurve, SetDescriptor, SparsePhase, Sparsity,
    SphereProduct, Support,
};
pub use dft::Signal;
pub use lift::{LiftMaps, LiftedKind, LiftedSet};

/// Prior information on the unknown signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorSpec {
    /// Moduli measured in a second plane: `|x(t)| = m2(t)`.
    SecondPlane {
        m2: Vec<f64>,
    },
    Support {
        support: Vec<usize>,
    },
    NonnegReal,
    Sparsity {
        k: usize,
    },
    SparsePhase {
        k: usize,
    },
    LiftedSpiral,
    LiftedDoubleSpiral,
}

impl PriorSpec {
    /// The prior as a set of signals of length `n`, checked against the
    /// Fourier magnitudes `m`.
    pub fn to_set(&self, m: &MagnitudeSpec) -> Result<SetDescriptor> {
        let n = m.len();
        let set: SetDescriptor = match self {
            PriorSpec::SecondPlane { m2 } => {
                let m2 = MagnitudeSpec::new(m2.clone())?;
                if m2.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: m2.len(),
                    });
                }
                if (m2.norm() - m.norm()).abs() > 1e-12 * m.norm().max(1.0) {
                    return Err(Error::invalid(format!(
                        "second-plane moduli have norm {} but the Fourier moduli have norm {}",
                        m2.norm(),
                        m.norm()
                    )));
                }
                SphereProduct {
                    m: m2,
                    domain: Domain::Signal,
                }
                .into()
            }
            PriorSpec::Support { support } => Support {
                n,
                support: support.clone(),
            }
            .into(),
            PriorSpec::NonnegReal => NonnegReal { n }.into(),
            PriorSpec::Sparsity { k } => Sparsity { n, k: *k }.into(),
            PriorSpec::SparsePhase { k } => SparsePhase { n, k: *k }.into(),
            PriorSpec::LiftedSpiral | PriorSpec::LiftedDoubleSpiral => {
                if n != 2 {
                    return Err(Error::invalid("lifted priors exist for two pixels only"));
                }
                let which = if matches!(self, PriorSpec::LiftedSpiral) {
                    LiftedKind::Spiral
                } else {
                    LiftedKind::DoubleSpiral
                };
                SetDescriptor::lifted(which)
            }
        };
        set.validate()?;
        Ok(set)
    }
}

/// The Fourier magnitude set `{y : |dft(y)| = m}`.
pub fn magnitude_set(m: &MagnitudeSpec) -> SetDescriptor {
    SphereProduct {
        m: m.clone(),
        domain: Domain::Frequency,
    }
    .into()
}

/// Lifted projector for one of the two-pixel counterexample sets.
pub fn lifted_projector(which: LiftedKind) -> SetDescriptor {
    SetDescriptor::lifted(which)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GsRun {
    /// Priors `x_k` as the A-sequence, phase retrievals `y_k` as B.
    pub trace: Trace,
    /// `dist(x0, B)`.
    pub start_distance: f64,
    /// Whether `dist(x0, B) < |m|`.
    pub better_than_zero: bool,
}

/// Whether `x0` is a prior guess better than zero for the magnitudes `m`.
pub fn better_than_zero(m: &MagnitudeSpec, x0: &Point) -> Result<(f64, bool)> {
    let d = magnitude_set(m).project(x0)?.distance;
    Ok((d, d < m.norm()))
}

/// Error reduction `y_k = P_B(x_k)`, `x_{k+1} in P_A(y_k)` from a start on
/// the prior.
pub fn gs_run(
    m: &MagnitudeSpec,
    prior: &PriorSpec,
    x0: &Signal,
    tol: &Tolerances,
    policy: &TiePolicy,
) -> Result<GsRun> {
    m.validate()?;
    let a = prior.to_set(m)?;
    let b = magnitude_set(m);
    let x0 = x0.point();
    x0.check_dim(a.dimension())?;
    let residual = a.membership_residual(x0)?;
    if residual > tol.tol_proj {
        return Err(Error::NotInSet { residual });
    }
    let (start_distance, better) = better_than_zero(m, x0)?;
    let trace = run_alternating(&a, &b, x0, tol, policy)?;
    Ok(GsRun {
        trace,
        start_distance,
        better_than_zero: better,
    })
}

/// Residuals of the limit identities for the second-plane prior at the last
/// block: `|x| = m2`, `|dft y| = m`, `dft y = m dft x / |dft x|` and
/// `x = m2 y / |y|`.
pub fn second_plane_identities(trace: &Trace, m: &MagnitudeSpec, m2: &MagnitudeSpec) -> Result<[f64; 4]> {
    let last = trace.last().ok_or(Error::InsufficientData {
        check: "second-plane identities",
        needed: 1,
        found: 0,
    })?;
    let (x, y) = (last.a.as_slice(), last.b.as_slice());
    let moduli_gap = |z: &[f64], target: &[f64]| {
        z.chunks_exact(2)
            .zip(target)
            .map(|(p, t)| (p[0].hypot(p[1]) - t).abs())
            .fold(0.0, f64::max)
    };
    let phase_fit = |z: &[f64], target: &[f64], mods: &[f64]| {
        z.chunks_exact(2)
            .zip(target.chunks_exact(2))
            .zip(mods)
            .map(|((p, t), &mw)| {
                let rho = p[0].hypot(p[1]);
                if rho == 0.0 {
                    return 0.0;
                }
                (t[0] - mw * p[0] / rho).hypot(t[1] - mw * p[1] / rho)
            })
            .fold(0.0, f64::max)
    };
    let (xh, yh) = (dft::dft(x), dft::dft(y));
    Ok([
        moduli_gap(x, &m2.m),
        moduli_gap(&yh, &m.m),
        phase_fit(&xh, &yh, &m.m),
        phase_fit(y, x, &m2.m),
    ])
}

/// Point `a(t)` of the outer (`sign = 1`) or inner (`sign = -1`) spiral.
pub fn spiral_point(sign: f64, t: f64) -> Point {
    Point::from_vec(CurveMap::Spiral { sign }.point(t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GsCounterexample {
    /// Error reduction on the lifted spiral and cylinder in `C^2`.
    pub lifted: Trace,
    /// Alternating projections between spiral and cylinder in `R^3`.
    pub direct: Trace,
    /// Largest deviation between the shadow of a lifted iterate and the
    /// matching direct iterate, including the dropped coordinate.
    pub max_shadow_error: f64,
}

fn shadow_error(lifted: &Point, direct: &Point) -> f64 {
    let s = LiftMaps::shadow(lifted.as_slice());
    dist(&s, direct.as_slice()).max(LiftMaps::dropped(lifted.as_slice()).abs())
}

/// Runs error reduction from the lift of `a(t0)` next to the direct
/// iteration from `a(t0)`.
pub fn gs_counterexample_run(t0: f64, iters: usize) -> Result<GsCounterexample> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::invalid("t0 must be positive"));
    }
    let tol = Tolerances::with_max_iter(iters);
    let policy = TiePolicy::first();
    let start = spiral_point(1.0, t0);
    let direct = run_alternating(
        &ParamCurve::spiral().into(),
        &Cylinder::default().into(),
        &start,
        &tol,
        &policy,
    )?;
    let lifted = run_alternating(
        &lifted_projector(LiftedKind::Spiral),
        &lifted_projector(LiftedKind::Cylinder),
        &LiftMaps::lift(start.as_slice()),
        &tol,
        &policy,
    )?;
    let max_shadow_error = if lifted.len() != direct.len() {
        f64::INFINITY
    } else {
        lifted
            .records
            .iter()
            .zip(&direct.records)
            .map(|(l, d)| shadow_error(&l.a, &d.a).max(shadow_error(&l.b, &d.b)))
            .fold(shadow_error(&lifted.start, &direct.start), f64::max)
    };
    Ok(GsCounterexample {
        lifted,
        direct,
        max_shadow_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HioCounterexample {
    pub dr: DRTrace,
    /// Spiral parameters `t = -2 ln(height)` of the iterates on the inner
    /// spiral lift (the even ones, counting from zero).
    pub params: Vec<f64>,
    /// Largest distance of an iterate from its expected lifted set.
    pub max_pattern_error: f64,
}

impl HioCounterexample {
    pub fn params_increasing(&self) -> bool {
        self.params.windows(2).all(|w| w[1] > w[0])
    }

    pub fn last_increment(&self) -> Option<f64> {
        let n = self.params.len();
        (n >= 2).then(|| self.params[n - 1] - self.params[n - 2])
    }
}

/// Douglas-Rachford on the lifted double spiral and lifted cylinder from
/// the lift of the inner spiral point `a_-(t0)`.
pub fn hio_counterexample_run(t0: f64, iters: usize) -> Result<HioCounterexample> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::invalid("t0 must be positive"));
    }
    let tol = Tolerances::with_max_iter(iters);
    let cylinder = lifted_projector(LiftedKind::Cylinder);
    let x0 = LiftMaps::lift(spiral_point(-1.0, t0).as_slice());
    let dr = run_douglas_rachford(
        &lifted_projector(LiftedKind::DoubleSpiral),
        &cylinder,
        &x0,
        &tol,
        &TiePolicy::first(),
    )?;
    let mut params = Vec::with_capacity(dr.len() / 2 + 1);
    let mut max_pattern_error: f64 = 0.0;
    for (i, x) in dr.x.iter().enumerate() {
        let err = if i % 2 == 0 {
            let height = LiftMaps::shadow(x.as_slice())[2];
            if height <= 0.0 {
                f64::INFINITY
            } else {
                let t = -2.0 * height.ln();
                params.push(t);
                let target = LiftMaps::lift(spiral_point(-1.0, t).as_slice());
                dist(x.as_slice(), target.as_slice())
            }
        } else {
            cylinder.project(x)?.distance
        };
        max_pattern_error = max_pattern_error.max(err);
    }
    Ok(HioCounterexample {
        dr,
        params,
        max_pattern_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::StopReason;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mag(v: &[f64]) -> MagnitudeSpec {
        MagnitudeSpec::new(v.to_vec()).unwrap()
    }

    fn signal(v: &[f64]) -> Signal {
        Signal::new(Point::new(v.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn support_prior_limit() {
        let m = mag(&[1.0, 1.0]);
        let prior = PriorSpec::Support { support: vec![0] };
        let run = gs_run(
            &m,
            &prior,
            &signal(&[1.0, 0.0, 0.0, 0.0]),
            &Tolerances::default(),
            &TiePolicy::first(),
        )
        .unwrap();
        assert_ne!(run.trace.stop_reason, StopReason::Diverged);
        assert!(run.better_than_zero);
        let last = run.trace.last().unwrap();
        let x = last.a.as_slice();
        assert_eq!((x[2], x[3]), (0.0, 0.0));
        // x = 1_S y and dft y = m dft x / |dft x|.
        let y = last.b.as_slice();
        assert!((x[0] - y[0]).abs() < 1e-10 && (x[1] - y[1]).abs() < 1e-10);
        let (xh, yh) = (dft::dft(x), dft::dft(y));
        for w in 0..2 {
            let rho = xh[2 * w].hypot(xh[2 * w + 1]);
            assert!((yh[2 * w] - xh[2 * w] / rho).abs() < 1e-10);
            assert!((yh[2 * w + 1] - xh[2 * w + 1] / rho).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_retrieval_is_a_fixed_point() {
        let x = [1.0, 0.5, -0.25, 0.75];
        let xh = dft::dft(&x);
        let m = mag(&[xh[0].hypot(xh[1]), xh[2].hypot(xh[3])]);
        let m2 = vec![x[0].hypot(x[1]), x[2].hypot(x[3])];
        let run = gs_run(
            &m,
            &PriorSpec::SecondPlane { m2 },
            &signal(&x),
            &Tolerances::default(),
            &TiePolicy::first(),
        )
        .unwrap();
        assert_eq!(run.trace.stop_reason, StopReason::Stationary);
        assert!(run.trace.len() <= 2);
        assert!(run.start_distance < 1e-12);
    }

    #[test]
    fn full_sparsity_needs_one_step() {
        let m = mag(&[1.0, 2.0, 0.5]);
        let run = gs_run(
            &m,
            &PriorSpec::Sparsity { k: 3 },
            &signal(&[0.3, 0.1, -1.0, 0.2, 0.5, 0.5]),
            &Tolerances::default(),
            &TiePolicy::first(),
        )
        .unwrap();
        assert_eq!(run.trace.stop_reason, StopReason::Stationary);
        assert!(run.trace.records[0].r < 1e-12);
    }

    #[test]
    fn start_off_prior_is_rejected() {
        let err = gs_run(
            &mag(&[1.0, 1.0]),
            &PriorSpec::Support { support: vec![0] },
            &signal(&[1.0, 0.0, 1.0, 0.0]),
            &Tolerances::default(),
            &TiePolicy::first(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotInSet { .. }));
        assert!(PriorSpec::SecondPlane { m2: vec![1.0, 2.0] }
            .to_set(&mag(&[1.0, 1.0]))
            .is_err());
    }

    #[test]
    fn better_than_zero_detector() {
        let m = mag(&[1.0, 1.0]);
        let (d, better) = better_than_zero(&m, &Point::zeros(4)).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert!(!better);
        // A point far beyond the torus.
        let far = Point::new(vec![10.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(!better_than_zero(&m, &far).unwrap().1);
        let near = Point::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(better_than_zero(&m, &near).unwrap().1);
    }

    #[test]
    fn magnitude_projection_matches_frequency_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = mag(&[1.0, 0.5, 2.0, 0.25]);
        let set = magnitude_set(&m);
        let torus = SphereProduct::new(m.m.clone(), Domain::Signal).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = set.project(&Point::new(q.clone()).unwrap()).unwrap();
            let direct = torus.project(&Point::from_vec(dft::dft(&q))).unwrap();
            for (a, b) in dft::dft(p.chosen().as_slice()).iter().zip(direct.chosen().as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn second_plane_converges_on_feasible_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let truth: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let th = dft::dft(&truth);
        let m = mag(&th.chunks_exact(2).map(|p| p[0].hypot(p[1])).collect::<Vec<_>>());
        let m2 = mag(&truth.chunks_exact(2).map(|p| p[0].hypot(p[1])).collect::<Vec<_>>());
        // Start: the true moduli with independently perturbed phases.
        let x0: Vec<f64> = truth
            .chunks_exact(2)
            .flat_map(|p| {
                let (r, a) = (p[0].hypot(p[1]), p[1].atan2(p[0]) + rng.random_range(-0.3..0.3));
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let run = gs_run(
            &m,
            &PriorSpec::SecondPlane { m2: m2.m.clone() },
            &signal(&x0),
            &Tolerances::default(),
            &TiePolicy::first(),
        )
        .unwrap();
        assert!(run.better_than_zero);
        assert_ne!(run.trace.stop_reason, StopReason::Diverged);
        let ids = second_plane_identities(&run.trace, &m, &m2).unwrap();
        assert!(ids.iter().all(|&e| e < 1e-8), "{ids:?}");
    }

    #[test]
    fn lifted_counterexample_short_run() {
        let run = gs_counterexample_run(1.0, 200).unwrap();
        assert!(run.max_shadow_error <= 1e-10, "{}", run.max_shadow_error);
        let r: Vec<f64> = run.direct.records.iter().map(|r| r.r).collect();
        assert!(r.last().unwrap() < &r[0]);
        assert!(gs_counterexample_run(0.0, 10).is_err());
    }

    #[test]
    fn start_on_circle_is_stationary() {
        let q = LiftMaps::lift(&[0.6, 0.8, 0.0]);
        let t = run_alternating(
            &lifted_projector(LiftedKind::Spiral),
            &lifted_projector(LiftedKind::Cylinder),
            &q,
            &Tolerances::default(),
            &TiePolicy::first(),
        )
        .unwrap();
        assert_eq!(t.stop_reason, StopReason::Stationary);
        assert!(t.records[0].r < 1e-12);
    }

    #[test]
    fn hio_pattern_short_run() {
        let run = hio_counterexample_run(1.0, 200).unwrap();
        assert!(run.max_pattern_error <= 1e-8, "{}", run.max_pattern_error);
        assert!(run.params_increasing());
        assert!(run.params[0] == 1.0 || (run.params[0] - 1.0).abs() < 1e-12);
    }
}
