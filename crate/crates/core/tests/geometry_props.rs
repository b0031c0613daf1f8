//! Properties of the reference-element SVD and of the metric tools.

use aniso_core::estimate::{element_geometry, REFERENCE_AREA};
use aniso_core::linalg::{signed_area, Mat2, Point, Sym2};
use aniso_core::metric::{metric_edge_length, metric_intersect};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| [x, y])
}

fn triangle() -> impl Strategy<Value = [Point; 3]> {
    [point(), point(), point()].prop_filter("non-degenerate", |p| signed_area(p[0], p[1], p[2]).abs() > 1e-3)
}

fn spd() -> impl Strategy<Value = Sym2> {
    (0.01..100.0f64, 0.01..100.0f64, 0.0..std::f64::consts::PI)
        .prop_map(|(a, b, th)| Sym2::from_eigen([a, b], [th.cos(), th.sin()]))
}

proptest! {
    #[test]
    fn singular_values_multiply_to_area_ratio(p in triangle()) {
        let g = element_geometry(&p).unwrap();
        let area = signed_area(p[0], p[1], p[2]).abs();
        prop_assert!((g.lambda1 * g.lambda2 * REFERENCE_AREA - area).abs() <= 1e-12 * area.max(1.0));
        prop_assert!(g.lambda1 >= g.lambda2 && g.lambda2 > 0.0);
    }

    #[test]
    fn singular_values_ignore_vertex_order(p in triangle(), k in 0usize..6) {
        let perms = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
        let q = perms[k].map(|i| p[i]);
        let (a, b) = (element_geometry(&p).unwrap(), element_geometry(&q).unwrap());
        prop_assert!((a.lambda1 / b.lambda1 - 1.0).abs() < 1e-12);
        prop_assert!((a.lambda2 / b.lambda2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_maps(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -5.0..5.0f64) {
        let m = Mat2::from_cols([a, c], [b, d]);
        let s = m.svd();
        prop_assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= 0.0);
        prop_assert!((s.sigma[0] * s.sigma[1] - m.det().abs()).abs() <= 1e-10 * (1.0 + m.det().abs()));
    }

    #[test]
    fn intersection_contains_both_metrics(m1 in spd(), m2 in spd(), th in 0.0..std::f64::consts::TAU) {
        let i = metric_intersect(&m1, &m2);
        let v = [th.cos(), th.sin()];
        let (qi, q1, q2) = (i.quad(v), m1.quad(v), m2.quad(v));
        // the intersection unit ball lies inside both unit balls
        prop_assert!(qi >= q1 * (1.0 - 1e-9) && qi >= q2 * (1.0 - 1e-9), "{qi} vs {q1}, {q2}");
    }

    #[test]
    fn constant_metric_length_is_the_quadratic_form(m in spd(), p in point(), q in point()) {
        let e = [q[0] - p[0], q[1] - p[1]];
        let l = metric_edge_length(&m, &m, p, q);
        prop_assert!((l - m.quad(e).sqrt()).abs() <= 1e-9 * (1.0 + l));
    }
}
