//! Property tests for the grid builder and the scalar update algebra.

use driftlab::filters::{bayes_update, FilterState};
use driftlab::linalg::SpdMatrix;
use driftlab::market::TimeGrid;
use nalgebra::DVector;
use proptest::prelude::*;

proptest! {
    #[test]
    fn grid_builder_invariants(
        arrivals in prop::collection::vec(1e-6..1.0f64, 0..40),
        extra in prop::collection::vec(1e-6..1.0f64, 0..8),
        dt_max in 0.01..0.5f64,
    ) {
        let grid = TimeGrid::build(1.0, dt_max, &arrivals, &extra).unwrap();
        let points = grid.points();
        prop_assert_eq!(points[0], 0.0);
        prop_assert_eq!(*points.last().unwrap(), 1.0);
        for w in points.windows(2) {
            prop_assert!(w[1] > w[0]);
            prop_assert!(w[1] - w[0] <= dt_max + 2e-12);
        }
        // every arrival appears exactly once as a flagged point
        for &t in &arrivals {
            let idx = grid.index_of(t).expect("arrival must be on the grid");
            prop_assert!(grid.is_arrival(idx));
        }
        // flags only at arrivals
        for i in 0..grid.len() {
            if grid.is_arrival(i) {
                prop_assert!(arrivals.iter().any(|&t| (t - grid.point(i)).abs() <= 1e-12));
            }
        }
    }

    #[test]
    fn scalar_update_algebra(
        q in 0.0..10.0f64,
        gamma in 1e-6..10.0f64,
        m in -5.0..5.0f64,
        z in -5.0..5.0f64,
    ) {
        let g = SpdMatrix::from_diagonal(&[gamma]).unwrap();
        let state = FilterState {
            t: 0.0,
            m: DVector::from_element(1, m),
            q: driftlab::linalg::SymMatrix::from_diagonal(&[q]),
        };
        let up = bayes_update(&state, &DVector::from_element(1, z), &g).unwrap();
        let rho = gamma / (q + gamma);
        // shrinkage and the convex-combination mean
        prop_assert!(up.q.entry(0, 0) <= q + 1e-12);
        prop_assert!((up.q.entry(0, 0) - rho * q).abs() <= 1e-10 * (1.0 + q));
        prop_assert!((up.m[0] - (rho * m + (1.0 - rho) * z)).abs() <= 1e-9 * (1.0 + m.abs() + z.abs()));
        // information form for strictly positive q
        if q > 1e-9 {
            let info = 1.0 / (1.0 / q + 1.0 / gamma);
            prop_assert!((up.q.entry(0, 0) - info).abs() <= 1e-9 * (1.0 + q));
        }
    }
}
