//! P1 finite elements for `-div(A grad u) = f` with Dirichlet data.

mod norms;
mod quadrature;
mod solve;
mod sparse;

pub use norms::{energy_norm, exact_errors, ErrorNorms};
pub use quadrature::{integrate, integrate_subdivided, QuadError, QuadratureRule, SubdividedIntegral};
pub use solve::{assemble_and_solve, stiffness_matrix, SolveError, SolverOptions};
pub use sparse::{pcg, CgOutcome, CsrMatrix};

use std::sync::Arc;

use crate::linalg::{Point, Sym2};
use crate::mesh::Mesh;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Diffusion tensor, source and Dirichlet data of the model problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub a: Sym2,
    pub f: ScalarFn,
    pub g: ScalarFn,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec").field("a", &self.a).finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Laplacian (`A = I`) with the given source and boundary data.
    pub fn poisson(f: ScalarFn, g: ScalarFn) -> Self {
        ProblemSpec { a: Sym2::scaled_identity(1.0), f, g }
    }

    pub fn is_valid(&self) -> bool {
        let e = self.a.eigen();
        self.a.is_finite() && e.values[1] > 0.0
    }
}

/// Nodal values on a specific mesh state.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub stamp: u64,
}

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.vertex_capacity());
        ScalarField { values, stamp: mesh.stamp() }
    }

    pub fn interpolate(mesh: &Mesh, u: impl Fn(Point) -> f64) -> Self {
        let values = mesh.points().iter().map(|&p| u(p)).collect();
        ScalarField { values, stamp: mesh.stamp() }
    }

    pub fn is_current(&self, mesh: &Mesh) -> bool {
        self.stamp == mesh.stamp() && self.values.len() == mesh.vertex_capacity()
    }
}

/// Gradients of the three barycentric coordinates of a counterclockwise triangle.
#[inline]
pub fn barycentric_gradients(p: &[Point; 3]) -> [Point; 3] {
    let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        g[i] = [-(b[1] - a[1]) / two_a, (b[0] - a[0]) / two_a];
    }
    g
}

/// Constant gradient of the P1 interpolant of `vals` on a triangle.
#[inline]
pub fn p1_gradient(p: &[Point; 3], vals: [f64; 3]) -> Point {
    let g = barycentric_gradients(p);
    [
        vals[0] * g[0][0] + vals[1] * g[1][0] + vals[2] * g[2][0],
        vals[0] * g[0][1] + vals[1] * g[1][1] + vals[2] * g[2][1],
    ]
}

/// Cartesian point from barycentric coordinates.
#[inline]
pub fn from_barycentric(p: &[Point; 3], b: [f64; 3]) -> Point {
    [
        b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
        b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
    ]
}

/// Element gradient of a nodal field on triangle `t`.
pub fn element_gradient(mesh: &Mesh, t: usize, u: &[f64]) -> Point {
    let [a, b, c] = mesh.triangle(t);
    p1_gradient(&mesh.triangle_points(t), [u[a], u[b], u[c]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_of_linear() {
        let p = [[0.1, 0.2], [1.3, 0.4], [0.5, 1.7]];
        let vals = p.map(|q| 2.0 * q[0] - 3.0 * q[1] + 1.0);
        let g = p1_gradient(&p, vals);
        assert!((g[0] - 2.0).abs() < 1e-13 && (g[1] + 3.0).abs() < 1e-13);
        let bg = barycentric_gradients(&p);
        let s = [bg[0][0] + bg[1][0] + bg[2][0], bg[0][1] + bg[1][1] + bg[2][1]];
        assert!(s[0].abs() < 1e-13 && s[1].abs() < 1e-13);
    }
}
