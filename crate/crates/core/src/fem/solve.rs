use super::sparse::{pcg, CgOutcome, CsrMatrix};
use super::{barycentric_gradients, from_barycentric, ProblemSpec, QuadratureRule, ScalarField};
use crate::mesh::{Mesh, NONE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual tolerance of the CG solve.
    pub tol: f64,
    /// Iteration cap as a multiple of the vertex count.
    pub max_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter_factor: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("no Dirichlet vertices: system is singular")]
    NoBoundary,
    #[error("invalid diffusion tensor (must be symmetric positive definite)")]
    InvalidTensor,
    #[error("CG did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("non-finite value in right-hand side")]
    NonFinite,
}

/// Element stiffness `|K| grad(l_i) . A grad(l_j)`.
fn element_stiffness(mesh: &Mesh, t: usize, problem: &ProblemSpec) -> [[f64; 3]; 3] {
    let p = mesh.triangle_points(t);
    let g = barycentric_gradients(&p);
    let area = mesh.area(t);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        let ag = problem.a.apply(g[i]);
        for j in 0..3 {
            k[i][j] = area * (ag[0] * g[j][0] + ag[1] * g[j][1]);
        }
    }
    k
}

/// Full stiffness matrix over all vertex slots (rows of removed vertices are empty).
pub fn stiffness_matrix(mesh: &Mesh, problem: &ProblemSpec) -> CsrMatrix {
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for t in mesh.triangles() {
        let k = element_stiffness(mesh, t, problem);
        let v = mesh.triangle(t);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((v[i], v[j], k[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.vertex_capacity(), trip)
}

/// Assembles the P1 system, imposes `u = g` at boundary vertices and solves
/// for the interior values. `warm_start` (indexed by vertex slot) seeds CG.
pub fn assemble_and_solve(
    mesh: &Mesh,
    problem: &ProblemSpec,
    opts: &SolverOptions,
    warm_start: Option<&[f64]>,
) -> Result<(ScalarField, CgOutcome), SolveError> {
    if !problem.is_valid() {
        return Err(SolveError::InvalidTensor);
    }
    let nv = mesh.vertex_capacity();
    let mut dof = vec![NONE; nv];
    let mut n = 0;
    let mut u = vec![0.0; nv];
    let mut has_boundary = false;
    for v in mesh.vertices() {
        if mesh.is_boundary_vertex(v) {
            u[v] = (problem.g)(mesh.point(v));
            has_boundary = true;
        } else {
            dof[v] = n;
            n += 1;
        }
    }
    if !has_boundary {
        return Err(SolveError::NoBoundary);
    }
    let rule = QuadratureRule::degree5();
    let mut rhs = vec![0.0; n];
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for t in mesh.triangles() {
        let k = element_stiffness(mesh, t, problem);
        let v = mesh.triangle(t);
        let p = mesh.triangle_points(t);
        let area = mesh.area(t);
        let mut load = [0.0; 3];
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let fx = (problem.f)(from_barycentric(&p, *b)) * w * area;
            for i in 0..3 {
                load[i] += fx * b[i];
            }
        }
        for i in 0..3 {
            let di = dof[v[i]];
            if di == NONE {
                continue;
            }
            rhs[di] += load[i];
            for j in 0..3 {
                let dj = dof[v[j]];
                if dj == NONE {
                    rhs[di] -= k[i][j] * u[v[j]];
                } else {
                    trip.push((di, dj, k[i][j]));
                }
            }
        }
    }
    if rhs.iter().any(|x| !x.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    let a = CsrMatrix::from_triplets(n, trip);
    let mut x = vec![0.0; n];
    if let Some(w) = warm_start {
        for v in mesh.vertices() {
            if dof[v] != NONE && v < w.len() && w[v].is_finite() {
                x[dof[v]] = w[v];
            }
        }
    }
    let outcome = pcg(&a, &rhs, &mut x, opts.tol, opts.max_iter_factor * mesh.num_vertices().max(1));
    if !outcome.converged {
        return Err(SolveError::NotConverged { iterations: outcome.iterations, residual: outcome.relative_residual });
    }
    for v in mesh.vertices() {
        if dof[v] != NONE {
            u[v] = x[dof[v]];
        }
    }
    log::debug!("solve: {n} unknowns, {} CG iterations", outcome.iterations);
    Ok((ScalarField::new(mesh, u), outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, Diagonal};
    use std::sync::Arc;

    #[test]
    fn reproduces_linear_data() {
        let m = unit_square(7, 5, Diagonal::Left);
        let g = |p: [f64; 2]| 1.0 + 2.0 * p[0] - 0.5 * p[1];
        let prob = ProblemSpec::poisson(Arc::new(|_| 0.0), Arc::new(g));
        let (u, out) = assemble_and_solve(&m, &prob, &SolverOptions::default(), None).unwrap();
        assert!(out.converged);
        for v in m.vertices() {
            assert!((u.values[v] - g(m.point(v))).abs() < 1e-10);
        }
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums() {
        let m = unit_square(4, 4, Diagonal::Right);
        let prob = ProblemSpec::poisson(Arc::new(|_| 0.0), Arc::new(|_| 0.0));
        let k = stiffness_matrix(&m, &prob);
        for i in 0..k.n {
            let mut s = 0.0;
            for idx in k.row_ptr[i]..k.row_ptr[i + 1] {
                let j = k.cols[idx];
                assert!((k.vals[idx] - k.get(j, i)).abs() < 1e-14);
                s += k.vals[idx];
            }
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite_tensor() {
        let m = unit_square(2, 2, Diagonal::Right);
        let mut prob = ProblemSpec::poisson(Arc::new(|_| 0.0), Arc::new(|_| 0.0));
        prob.a = crate::linalg::Sym2::diag(1.0, -1.0);
        assert_eq!(assemble_and_solve(&m, &prob, &SolverOptions::default(), None).unwrap_err(), SolveError::InvalidTensor);
    }
}
