//! Fixtures shared by the benchmarks.

use aniso_core::adapt::{run_element_adaptation, AdaptConfig, LoopConfig};
use aniso_core::cases::{case_u1, TestCase};
use aniso_core::fem::{assemble_and_solve, SolverOptions};
use aniso_core::mesh::{unit_square, Diagonal, Mesh};

/// Uniform `n x n` mesh of the unit square with its u1 solution.
pub fn uniform_solution(n: usize) -> (TestCase, Mesh, Vec<f64>) {
    let case = case_u1();
    let mesh = unit_square(n, n, Diagonal::Right);
    let (sol, _) = assemble_and_solve(&mesh, &case.problem(), &SolverOptions::default(), None).expect("solve");
    (case, mesh, sol.values)
}

/// Mesh and solution after `iters` element-adaptation solves on u1.
pub fn adapted_solution(tol: f64, iters: usize) -> (TestCase, Mesh, Vec<f64>) {
    let case = case_u1();
    let cfg = AdaptConfig { tol, ..Default::default() };
    let lc = LoopConfig { max_iters: iters, ..Default::default() };
    let out = run_element_adaptation(unit_square(10, 10, Diagonal::Right), &case.problem(), Some(&case), &cfg, &lc, |_| {})
        .expect("adaptation");
    (case, out.mesh, out.u)
}
