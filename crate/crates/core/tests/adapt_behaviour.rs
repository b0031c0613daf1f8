//! Behaviour of the local operations on small constructed problems and on
//! short u1 runs.

use std::sync::Arc;

use aniso_core::adapt::{run_element_adaptation, run_loop, AdaptConfig, LocalAdapter, LoopConfig};
use aniso_core::cases::case_u1;
use aniso_core::fem::ProblemSpec;
use aniso_core::linalg::Point;
use aniso_core::mesh::{unit_square, Diagonal, Mesh};
use aniso_core::metric::{MetricConfig, MetricSource, MetricStrategy};

/// Unit source, zero solution: the estimate is driven by the gradient
/// mismatch `pi` alone.
fn unit_source() -> ProblemSpec {
    ProblemSpec::poisson(Arc::new(|_| 1.0), Arc::new(|_| 0.0))
}

/// Direction of every interior edge that is a cell diagonal.
fn diagonal_directions(mesh: &Mesh) -> Vec<Point> {
    mesh.edges()
        .filter(|&e| !mesh.is_boundary_edge(e))
        .filter_map(|e| {
            let (a, b) = mesh.edge_vertices(e);
            let (p, q) = (mesh.point(a), mesh.point(b));
            let d = [q[0] - p[0], q[1] - p[1]];
            (d[0].abs() > 1e-12 && d[1].abs() > 1e-12).then(|| {
                let l = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let s = if d[0] < 0.0 { -1.0 } else { 1.0 };
                [s * d[0] / l, s * d[1] / l]
            })
        })
        .collect()
}

#[test]
fn swaps_turn_diagonals_across_the_error_direction() {
    for diag in [Diagonal::Right, Diagonal::Left] {
        let mesh = unit_square(4, 4, diag);
        let start = diagonal_directions(&mesh);
        assert_eq!(start.len(), 16);
        // the error varies along the current diagonals, so elements should
        // stretch across them
        let e = start[0];
        let n = mesh.vertex_capacity();
        let pi = vec![[3.0 * e[0], 3.0 * e[1]]; n];
        let mut a = LocalAdapter::new(mesh, vec![0.0; n], pi, &unit_source(), &AdaptConfig::default()).unwrap();
        let swaps = a.swap_pass();
        assert!(swaps > 0);
        let end = diagonal_directions(a.mesh());
        assert_eq!(end.len(), 16);
        for d in end {
            assert!((d[0] * e[0] + d[1] * e[1]).abs() < 1e-12, "{diag:?}: diagonal {d:?} not across {e:?}");
        }
    }
}

#[test]
fn node_moves_into_the_element_with_larger_error() {
    // two triangles on a straight bottom side; vertex 1 can slide along it
    let coords = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]];
    let mesh = Mesh::new(coords, vec![[0, 1, 3], [1, 2, 3]], &[]).unwrap();
    for (big, expect) in [(0usize, -1.0), (2, 1.0)] {
        let mut pi = vec![[0.5, 0.0]; 4];
        pi[big] = [6.0, 0.0];
        let mut a = LocalAdapter::new(mesh.clone(), vec![0.0; 4], pi, &unit_source(), &AdaptConfig::default()).unwrap();
        let (left, right) = (a.shape(0), a.shape(1));
        assert!(if expect < 0.0 { left > right } else { right > left });
        let step = a.move_vertex_step(1).expect("movable");
        assert!(step > 0.0);
        let x = a.mesh().point(1);
        assert!(x[1].abs() < 1e-14);
        assert!((x[0] - 1.0) * expect > 0.0, "moved to {x:?}");
        assert!((a.shape(0) - a.shape(1)).abs() < (left - right).abs());
    }
}

/// Coarsening of the uniform start mesh happens in the smooth region. Later
/// steps also remove nodes inside the layer while stretching elements along
/// it, so only the first steps are checked.
#[test]
fn initial_coarsening_happens_away_from_the_boundary_layer() {
    let case = case_u1();
    let cfg = AdaptConfig { tol: 0.125, ..Default::default() };
    let lc = LoopConfig { max_iters: 3, ..Default::default() };
    let out = run_element_adaptation(unit_square(10, 10, Diagonal::Right), &case.problem(), Some(&case), &cfg, &lc, |_| {})
        .unwrap();
    let removed: Vec<Point> = out.report.rows.iter().filter_map(|r| r.step.as_ref()).flat_map(|s| s.removed_at.clone()).collect();
    assert!(removed.len() > 100, "only {} removals", removed.len());
    let away = removed.iter().filter(|p| p[0] > 0.1).count() as f64 / removed.len() as f64;
    assert!(away > 0.8, "{:.1}% of {} removals at x > 0.1", 100.0 * away, removed.len());
}

#[test]
fn metric_remeshing_reaches_unit_edges() {
    let case = case_u1();
    let problem = case.problem();
    let config = MetricConfig { source: MetricSource::Residual { tol: 0.65 }, ..Default::default() };
    let mut s = MetricStrategy::new(problem.clone(), config);
    let lc = LoopConfig { max_iters: 8, ..Default::default() };
    run_loop(unit_square(10, 10, Diagonal::Right), &problem, Some(&case), &lc, &mut s, |_| {}).unwrap();
    let best = s.unit_history.iter().copied().fold(0.0, f64::max);
    assert!(best >= 0.9, "unit fractions {:?}", s.unit_history);
}

#[test]
fn equal_estimates_flag_nothing() {
    // linear solution with exact gradient: no error to act on
    let mesh = unit_square(4, 4, Diagonal::Right);
    let n = mesh.vertex_capacity();
    let u: Vec<f64> = (0..n).map(|v| mesh.point(v)[0] + 2.0 * mesh.point(v)[1]).collect();
    let pi = vec![[1.0, 2.0]; n];
    let problem = ProblemSpec::poisson(Arc::new(|_| 0.0), Arc::new(|p| p[0] + 2.0 * p[1]));
    let mut a = LocalAdapter::new(mesh, u, pi, &problem, &AdaptConfig::default()).unwrap();
    assert_eq!(a.global_shape_sq(), 0.0);
    assert_eq!(a.swap_pass(), 0);
    assert_eq!(a.refine_sweep(), 0);
}
