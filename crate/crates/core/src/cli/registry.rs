//! Named experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Algorithm, CadzowSpec, DiagnoseOptions, ExperimentConfig, Sequence};
use crate::apps::{trajectory_matrix, EMProblem};
use crate::error::{Error, Result};
use crate::phase::{lifted_projector, spiral_point, LiftMaps, LiftedKind};
use crate::primitives::{Matrix, Point, TiePolicy, Tolerances};
use crate::sets::{
    Affine, BoxProduct, Cylinder, EpigraphQuadratic, Interval, ParamCurve, SetDescriptor, SphereProduct,
};

pub const PRESETS: [&str; 11] = [
    "parabola-gap",
    "parabola-tangent",
    "spiral",
    "double-spiral",
    "gs-2pixel",
    "hio-2pixel",
    "cadzow-ex2",
    "cadzow-escape",
    "cadzow-denoise-demo",
    "em-demo",
    "averaged-demo",
];

fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).expect("preset coordinates are finite")
}

fn x_axis() -> SetDescriptor {
    Affine::new(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).expect("axis").into()
}

fn base(name: &str, algorithm: Algorithm, sets: Vec<SetDescriptor>, start: Point, max_iter: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        algorithm,
        sets,
        start: Some(start),
        start_param: None,
        tolerances: Tolerances::with_max_iter(max_iter),
        tie: TiePolicy::first(),
        output: None,
        gs: None,
        em: None,
        cadzow: None,
        diagnostics: DiagnoseOptions::default(),
    }
}

fn parabola(name: &str, a0: f64, max_iter: usize) -> ExperimentConfig {
    let epi = EpigraphQuadratic::new(a0, 1.0).expect("epigraph").into();
    base(name, Algorithm::Ap, vec![x_axis(), epi], pt(&[1.0, 0.0]), max_iter)
}

/// Noisy sinusoid with a fixed seed.
pub fn demo_signal() -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..24)
        .map(|t| (0.6 * t as f64).sin() + rng.random_range(-0.05..0.05))
        .collect()
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let spiral_start = spiral_point(1.0, 1.0);
    let inner_start = spiral_point(-1.0, 1.0);
    let cfg = match name {
        "parabola-gap" => {
            let mut c = parabola(name, 1.0, 1_000_000);
            c.diagnostics = DiagnoseOptions {
                angle: true,
                rate: true,
                rate_window: Some(50),
                three_point_fitted: true,
                holder: Some([0.25, 0.5]),
                ..DiagnoseOptions::default()
            };
            c
        }
        "parabola-tangent" => {
            let mut c = parabola(name, 0.0, 100_000);
            c.diagnostics.rate = true;
            c
        }
        "spiral" => base(
            name,
            Algorithm::Ap,
            vec![ParamCurve::spiral().into(), Cylinder::default().into()],
            spiral_start,
            100_000,
        ),
        "double-spiral" => base(
            name,
            Algorithm::Dr,
            vec![ParamCurve::double_spiral().into(), Cylinder::default().into()],
            inner_start,
            10_000,
        ),
        "gs-2pixel" => base(
            name,
            Algorithm::Ap,
            vec![
                lifted_projector(LiftedKind::Spiral),
                lifted_projector(LiftedKind::Cylinder),
            ],
            LiftMaps::lift(spiral_start.as_slice()),
            10_000,
        ),
        "hio-2pixel" => base(
            name,
            Algorithm::Dr,
            vec![
                lifted_projector(LiftedKind::DoubleSpiral),
                lifted_projector(LiftedKind::Cylinder),
            ],
            LiftMaps::lift(inner_start.as_slice()),
            10_000,
        ),
        "cadzow-ex2" => {
            let ybar = [1.0, -1.0, 2.0, -2.0];
            let ydot = [1.0, 0.0, 1.0, 1.0];
            let start: Vec<f64> = ybar.iter().zip(&ydot).map(|(a, b)| a + 0.5 * b).collect();
            let structure = Affine::new(ybar.to_vec(), vec![ydot.to_vec()]).expect("affine").into();
            let mut c = base(name, Algorithm::Cadzow, vec![structure], pt(&start), 100_000);
            c.cadzow = Some(CadzowSpec {
                rows: 2,
                cols: 2,
                rank: 1,
            });
            c.diagnostics.rate = true;
            c.diagnostics.rate_sequence = Sequence::A;
            c
        }
        "cadzow-escape" => {
            let structure = Affine::new(vec![0.0, 1.0, 1.0, 0.0], vec![vec![1.0, 0.0, 0.0, 0.0]])
                .expect("affine")
                .into();
            let mut c = base(
                name,
                Algorithm::Cadzow,
                vec![structure],
                pt(&[1.0, 1.0, 1.0, 0.0]),
                100_000,
            );
            c.cadzow = Some(CadzowSpec {
                rows: 2,
                cols: 2,
                rank: 1,
            });
            c
        }
        "cadzow-denoise-demo" => {
            let (shape, start) = trajectory_matrix(&demo_signal(), 12)?;
            let mut c = base(name, Algorithm::Cadzow, vec![shape.into()], start.to_point(), 100_000);
            c.cadzow = Some(CadzowSpec {
                rows: shape.rows,
                cols: shape.cols,
                rank: 2,
            });
            c
        }
        "em-demo" => {
            let union = vec![Interval::point(0.0), Interval::closed(1.0, 2.0)];
            let omega = BoxProduct::uniform(2, union)?.into();
            let mut c = base(name, Algorithm::Em, Vec::new(), pt(&[0.0, 1.0]), 10_000);
            c.em = Some(EMProblem::new(Matrix::new(1, 2, vec![1.0, 1.0])?, vec![4.0], omega)?);
            c
        }
        "averaged-demo" => {
            let circle = SphereProduct::new(vec![1.0], Default::default())?.into();
            let line = Affine::new(vec![0.0, 0.5], vec![vec![1.0, 0.0]])?.into();
            let mut c = base(name, Algorithm::Averaged, vec![circle, line], pt(&[2.0, 2.0]), 10_000);
            c.diagnostics.rate = true;
            c
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
