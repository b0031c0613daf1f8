use super::geometry::{element_geometry, DegenerateElement, ElementGeometry};
use crate::fem::{integrate_subdivided, p1_gradient, ProblemSpec, QuadError};
use crate::linalg::{Point, Sym2};
use crate::mesh::{Mesh, NONE};
use crate::recovery::RecoveredGradient;

/// Options for the residual estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Relative stopping tolerance of the subdivided residual quadrature.
    pub subdivision_eps: f64,
    /// Omit the element residual (only meaningful for metric construction).
    pub drop_residual: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions { subdivision_eps: 0.05, drop_residual: false }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("estimates are stale: computed for mesh stamp {have}, mesh is at {want}")]
    Stale { have: u64, want: u64 },
    #[error(transparent)]
    Degenerate(#[from] DegenerateElement),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Per-element estimator quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementEstimate {
    pub geom: ElementGeometry,
    /// `||R_K||_{0,K}`.
    pub resid: f64,
    /// Subdivision level used for the residual integral.
    pub resid_level: u32,
    /// `||r_K||_{0,dK}`.
    pub jump: f64,
    pub g: Sym2,
    pub omega: f64,
    pub eta: f64,
    pub eta_scaled: f64,
}

/// Exact integral over `K` of `d d^T` with `d = grad_uh - Pi` linear
/// (`d_a` given at the vertices).
pub fn g_matrix(area: f64, d: [Point; 3]) -> Sym2 {
    let s = [d[0][0] + d[1][0] + d[2][0], d[0][1] + d[1][1] + d[2][1]];
    let mut m = Sym2::outer(s);
    for da in d {
        m = m + Sym2::outer(da);
    }
    m * (area / 12.0)
}

pub fn omega(geom: &ElementGeometry, g: &Sym2) -> f64 {
    let w = geom.lambda1 * geom.lambda1 * g.quad(geom.r1) + geom.lambda2 * geom.lambda2 * g.quad(geom.r2);
    w.max(0.0).sqrt()
}

/// `eta_K` from its ingredients.
pub fn eta_value(geom: &ElementGeometry, resid: f64, jump: f64, omega: f64) -> f64 {
    let c = (geom.h / (geom.lambda1 * geom.lambda2)).sqrt();
    ((resid + c * jump) * omega).max(0.0).sqrt()
}

/// Outward unit normal and length of the edge opposite local vertex `i` of a
/// counterclockwise triangle.
#[inline]
pub fn outward_normal(p: &[Point; 3], i: usize) -> (Point, f64) {
    let a = p[(i + 1) % 3];
    let b = p[(i + 2) % 3];
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    ([dy / len, -dx / len], len)
}

/// `||r_K||_{0,dK}` for constant flux jumps; `nbr_grad[i]` is the gradient
/// across the edge opposite local vertex `i`, `None` on the boundary.
pub fn jump_norm(p: &[Point; 3], a: &Sym2, grad: Point, nbr_grad: [Option<Point>; 3]) -> f64 {
    let ag = a.apply(grad);
    let mut s = 0.0;
    for i in 0..3 {
        if let Some(gn) = nbr_grad[i] {
            let (n, len) = outward_normal(p, i);
            let an = a.apply(gn);
            let j = (ag[0] - an[0]) * n[0] + (ag[1] - an[1]) * n[1];
            s += j * j * len;
        }
    }
    s.sqrt()
}

/// Element-local estimator ingredients that do not depend on neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalTerms {
    pub geom: ElementGeometry,
    pub grad: Point,
    pub resid: f64,
    pub resid_level: u32,
    pub g: Sym2,
    pub omega: f64,
}

pub fn local_terms(
    p: &[Point; 3],
    u: [f64; 3],
    pi: [Point; 3],
    problem: &ProblemSpec,
    opts: &EstimatorOptions,
) -> Result<LocalTerms, EstimateError> {
    let geom = element_geometry(p)?;
    let grad = p1_gradient(p, u);
    let (resid, resid_level) = if opts.drop_residual {
        (0.0, 0)
    } else {
        let f = &problem.f;
        let r = integrate_subdivided(p, opts.subdivision_eps, |x| {
            let v = f(x);
            v * v
        })?;
        (r.value.max(0.0).sqrt(), r.level)
    };
    let d = pi.map(|q| [grad[0] - q[0], grad[1] - q[1]]);
    let g = g_matrix(geom.area, d);
    let omega = omega(&geom, &g);
    Ok(LocalTerms { geom, grad, resid, resid_level, g, omega })
}

/// Estimates for every live triangle slot of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub elems: Vec<ElementEstimate>,
    pub stamp: u64,
}

impl Estimates {
    pub fn check_current(&self, mesh: &Mesh) -> Result<(), EstimateError> {
        if self.stamp != mesh.stamp() || self.elems.len() != mesh.triangle_capacity() {
            return Err(EstimateError::Stale { have: self.stamp, want: mesh.stamp() });
        }
        Ok(())
    }

    /// `(sum eta_K^2)^{1/2}` over live triangles.
    pub fn global_eta(&self, mesh: &Mesh) -> f64 {
        mesh.triangles().map(|t| self.elems[t].eta.powi(2)).sum::<f64>().sqrt()
    }

    pub fn global_eta_scaled(&self, mesh: &Mesh) -> f64 {
        mesh.triangles().map(|t| self.elems[t].eta_scaled.powi(2)).sum::<f64>().sqrt()
    }
}

/// Residual estimator on the whole mesh.
pub fn compute_estimates(
    mesh: &Mesh,
    u: &[f64],
    rec: &RecoveredGradient,
    problem: &ProblemSpec,
    opts: &EstimatorOptions,
) -> Result<Estimates, EstimateError> {
    let mut local = vec![LocalTerms::default(); mesh.triangle_capacity()];
    for t in mesh.triangles() {
        let [a, b, c] = mesh.triangle(t);
        local[t] = local_terms(&mesh.triangle_points(t), [u[a], u[b], u[c]], [rec.at(a), rec.at(b), rec.at(c)], problem, opts)?;
    }
    let mut elems = vec![ElementEstimate::default(); mesh.triangle_capacity()];
    for t in mesh.triangles() {
        let l = &local[t];
        let nb = mesh.neighbors(t).map(|n| (n != NONE).then(|| local[n].grad));
        let jump = jump_norm(&mesh.triangle_points(t), &problem.a, l.grad, nb);
        let eta = eta_value(&l.geom, l.resid, jump, l.omega);
        elems[t] = ElementEstimate {
            geom: l.geom,
            resid: l.resid,
            resid_level: l.resid_level,
            jump,
            g: l.g,
            omega: l.omega,
            eta,
            eta_scaled: l.geom.lambda2 * eta,
        };
    }
    Ok(Estimates { elems, stamp: mesh.stamp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{integrate, QuadratureRule};

    #[test]
    fn g_matrix_matches_quadrature() {
        let p = [[0.1, 0.0], [0.9, 0.2], [0.3, 0.7]];
        let d = [[0.3, -1.0], [2.0, 0.5], [-0.7, 0.1]];
        let g = g_matrix(crate::linalg::signed_area(p[0], p[1], p[2]), d);
        let lin = |x: Point, k: usize| {
            // barycentric interpolation of component k
            let area = crate::linalg::signed_area(p[0], p[1], p[2]);
            let b = [
                crate::linalg::signed_area(x, p[1], p[2]) / area,
                crate::linalg::signed_area(p[0], x, p[2]) / area,
                crate::linalg::signed_area(p[0], p[1], x) / area,
            ];
            b[0] * d[0][k] + b[1] * d[1][k] + b[2] * d[2][k]
        };
        let r = QuadratureRule::degree5();
        let q11 = integrate(&r, &p, |x| lin(x, 0) * lin(x, 0));
        let q12 = integrate(&r, &p, |x| lin(x, 0) * lin(x, 1));
        let q22 = integrate(&r, &p, |x| lin(x, 1) * lin(x, 1));
        assert!((g.m11 - q11).abs() < 1e-14 && (g.m12 - q12).abs() < 1e-14 && (g.m22 - q22).abs() < 1e-14);
    }

    #[test]
    fn jump_across_vertical_edge() {
        // left triangle with local edge 0 on x = 1 (outward normal (1, 0))
        let p = [[0.0, 0.5], [1.0, 0.0], [1.0, 1.0]];
        let a = Sym2::scaled_identity(1.0);
        let j = jump_norm(&p, &a, [1.0, 0.0], [Some([3.0, 0.0]), None, None]);
        assert!((j * j - 4.0 * 1.0).abs() < 1e-14);
    }

    #[test]
    fn omega_scales_linearly() {
        let geom = element_geometry(&[[0.0, 0.0], [1.0, 0.1], [0.2, 0.5]]).unwrap();
        let g = Sym2::new(2.0, 0.3, 0.5);
        let w = omega(&geom, &g);
        let mut g2 = geom;
        g2.lambda1 *= 2.5;
        g2.lambda2 *= 2.5;
        assert!((omega(&g2, &g) - 2.5 * w).abs() < 1e-13 * w);
        assert!(w <= geom.lambda1 * g.trace().sqrt() + 1e-14);
    }
}
