use nalgebra::DMatrix;
use proptest::prelude::*;

use projlab::apps::{em_e_step, EMProblem};
use projlab::diagnostics::{fit_rate, reach_along, reach_predicate, three_point_ell, RateKind, RateOptions};
use projlab::phase::dft;
use projlab::primitives::{svd_small, Matrix, Point};
use projlab::sets::{Affine, BoxProduct, EpigraphQuadratic, Interval, LowRank, SetDescriptor, SphereProduct};

fn pt(v: Vec<f64>) -> Point {
    Point::new(v).unwrap()
}

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sets() -> Vec<SetDescriptor> {
    vec![
        Affine::new(vec![1.0, -1.0, 0.5], vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.0, -1.0]])
            .unwrap()
            .into(),
        SphereProduct::new(vec![1.0, 2.0], Default::default()).unwrap().into(),
        EpigraphQuadratic::new(0.5, 2.0).unwrap().into(),
        BoxProduct::uniform(3, vec![Interval::point(0.0), Interval::closed(1.0, 2.0)])
            .unwrap()
            .into(),
        LowRank {
            rows: 2,
            cols: 3,
            rank: 1,
        }
        .into(),
    ]
}

proptest! {
    #[test]
    fn projections_are_idempotent_and_nearest(seed in coords(6)) {
        for set in sets() {
            let n = set.dimension();
            let q = pt(seed.iter().cycle().take(n).cloned().collect());
            let p = set.project(&q).unwrap();
            let first = p.chosen().clone();
            let d = (&q - &first).norm();
            prop_assert!((d - p.distance).abs() <= 1e-9 * (1.0 + d));
            let again = set.project(&first).unwrap();
            prop_assert!((&first - again.chosen()).norm() <= 1e-8 * (1.0 + first.norm()), "{set:?}");
            prop_assert!(set.membership_residual(&first).unwrap() <= 1e-8 * (1.0 + first.norm()));
            for other in &p.points {
                prop_assert!(((&q - other).norm() - d).abs() <= 1e-9 * (1.0 + d));
            }
        }
    }

    #[test]
    fn dft_is_unitary(x in (1usize..9).prop_flat_map(|n| coords(2 * n))) {
        let y = dft::dft(&x);
        prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-12 * (1.0 + norm(&x)));
        let back = dft::idft(&y);
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn e_step_lands_in_the_data_set(
        (m, n, c, y, x) in (1usize..4, 1usize..5).prop_flat_map(|(m, n)| {
            (Just(m), Just(n), coords(m * n), coords(m), coords(n))
        })
    ) {
        let omega: SetDescriptor = BoxProduct::uniform(n, vec![Interval::real_line()]).unwrap().into();
        let p = EMProblem::new(Matrix::new(m, n, c).unwrap(), y.clone(), omega).unwrap();
        let z = em_e_step(&p, &pt(x)).unwrap();
        for (j, yj) in y.iter().enumerate() {
            let s: f64 = (0..n).map(|i| z.get(j, i)).sum();
            prop_assert!((s - yj).abs() <= 1e-12 * (1.0 + yj.abs()));
        }
    }

    #[test]
    fn low_rank_distance_is_the_singular_tail(
        (rows, cols, rank, data) in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), 0..=r.min(c), coords(r * c))
        })
    ) {
        let set = LowRank { rows, cols, rank };
        let q = pt(data.clone());
        let p = set.project(&q).unwrap();
        // Reference singular values from a separate implementation.
        let sv = DMatrix::from_row_slice(rows, cols, &data).singular_values();
        let mut s: Vec<f64> = sv.iter().cloned().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let tail = s.iter().skip(rank).map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((p.distance - tail).abs() <= 1e-9 * (1.0 + tail));
        let ours = svd_small(&Matrix::new(rows, cols, data).unwrap()).unwrap();
        for (a, b) in ours.sigma.iter().zip(&s) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b));
        }
    }

    #[test]
    fn reach_predicate_holds_below_the_reach(radius in 0.2..5.0f64, angle in 0.0..std::f64::consts::TAU, frac in 0.01..0.99f64) {
        let circle: SetDescriptor = SphereProduct::new(vec![radius], Default::default()).unwrap().into();
        let b = pt(vec![radius * angle.cos(), radius * angle.sin()]);
        let inward = pt(vec![-angle.cos(), -angle.sin()]);
        let r = reach_along(&circle, &b, &inward, 100.0, 1e-10).unwrap().value();
        prop_assert!((r - radius).abs() <= 1e-8);
        prop_assert!(reach_predicate(&circle, &b, &inward, frac * r).unwrap());
        prop_assert!(!reach_predicate(&circle, &b, &inward, r * (1.0 + frac)).unwrap());
    }

    #[test]
    fn three_point_ell_is_admissible(c in 1e-4..1.0f64, gamma in 1e-3..2.0f64) {
        match three_point_ell(c, gamma) {
            Ok(ell) => {
                prop_assert!(ell > 0.0 && ell <= 0.5);
                prop_assert!(c < gamma / 2.0);
            }
            Err(_) => prop_assert!(c >= gamma / 2.0),
        }
    }

    #[test]
    fn fit_rate_recovers_geometric_rates(q in 0.3..0.9f64, scale in 0.1..10.0f64) {
        let series: Vec<Point> = (0..60).map(|k| pt(vec![scale * q.powi(k), 1.0])).collect();
        let fit = fit_rate(&series, &RateOptions::default()).unwrap();
        prop_assert_eq!(fit.kind, RateKind::Linear);
        prop_assert!((fit.q.unwrap() - q).abs() <= 0.02 * q, "{:?}", fit);
    }

}

proptest! {
    // Each case fits a 4000-point series.
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fit_rate_recovers_power_laws(rho in 0.3..2.0f64) {
        let series: Vec<Point> = (1..=4000).map(|k| pt(vec![(k as f64).powf(-rho), 0.0])).collect();
        let fit = fit_rate(&series, &RateOptions::default()).unwrap();
        prop_assert_eq!(fit.kind, RateKind::Sublinear);
        prop_assert!((fit.rho.unwrap() - rho).abs() <= 0.05 * rho, "{:?}", fit);
    }
}
