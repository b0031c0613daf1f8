//! Quadratic hierarchical reconstruction of a P1 field.
//!
//! On each element `u2 = sum u_a l_a + 4 sum_i e_i l_{i+1} l_{i+2}`, where
//! `e_i` is the mid-edge value of the edge opposite local vertex `i`. The
//! coefficients make the (constant) Hessian of `u2` match the derivatives
//! of the piecewise linear recovered gradient.

use crate::fem::{barycentric_gradients, p1_gradient};
use crate::linalg::Point;
use crate::mesh::{Mesh, NONE};
use crate::recovery::RecoveredGradient;

/// Element-local mid-edge coefficients, or `None` for a singular system.
pub fn local_coefficients(p: &[Point; 3], pi: [Point; 3]) -> Option<[f64; 3]> {
    let g = barycentric_gradients(p);
    let d1 = p1_gradient(p, pi.map(|q| q[0]));
    let d2 = p1_gradient(p, pi.map(|q| q[1]));
    let rhs = [d1[0], d2[1], 0.5 * (d1[1] + d2[0])];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        let (a, b) = (g[(i + 1) % 3], g[(i + 2) % 3]);
        m[0][i] = 8.0 * a[0] * b[0];
        m[1][i] = 8.0 * a[1] * b[1];
        m[2][i] = 4.0 * (a[0] * b[1] + a[1] * b[0]);
    }
    solve3(m, rhs)
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let scale: f64 = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if !(d.abs() > 1e-12 * scale.powi(3)) {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *xk = det(&mk) / d;
    }
    Some(x)
}

/// `||u2 - u_h||_{0,K}` and `|u2 - u_h|_{1,K}` for mid-edge coefficients `e`.
pub fn correction_norms(p: &[Point; 3], e: [f64; 3]) -> (f64, f64) {
    let area = crate::linalg::signed_area(p[0], p[1], p[2]).abs();
    // mass matrix of the bubbles 4 l_a l_b: 16 |K| / 180 [[2,1,1],[1,2,1],[1,1,2]]
    let sum = e[0] + e[1] + e[2];
    let l2sq = 16.0 * area / 180.0 * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + sum * sum);
    // gradient is linear: the edge-midpoint rule is exact for its square
    let g = barycentric_gradients(p);
    let mut h1sq = 0.0;
    for m in 0..3 {
        let mut bary = [0.5; 3];
        bary[m] = 0.0;
        let mut grad = [0.0, 0.0];
        for i in 0..3 {
            let (a, b) = ((i + 1) % 3, (i + 2) % 3);
            for k in 0..2 {
                grad[k] += 4.0 * e[i] * (bary[a] * g[b][k] + bary[b] * g[a][k]);
            }
        }
        h1sq += area / 3.0 * (grad[0] * grad[0] + grad[1] * grad[1]);
    }
    (l2sq.max(0.0).sqrt(), h1sq.sqrt())
}

/// Value of the reconstruction at barycentric coordinates `b`.
pub fn evaluate(u: [f64; 3], e: [f64; 3], b: [f64; 3]) -> f64 {
    u[0] * b[0] + u[1] * b[1] + u[2] * b[2] + 4.0 * (e[0] * b[1] * b[2] + e[1] * b[2] * b[0] + e[2] * b[0] * b[1])
}

/// Reconciled coefficients and error norms per triangle slot.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalField {
    /// Mid-edge coefficients per triangle (by local edge), averaged over the
    /// two triangles sharing each interior edge.
    pub coeff: Vec<[f64; 3]>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    /// Elements whose local system was singular.
    pub singular: usize,
}

/// Averaged coefficient on local edge `i` of `t`, given per-triangle local values.
pub fn averaged_coefficient(mesh: &Mesh, local: &[[f64; 3]], t: usize, i: usize) -> f64 {
    let n = mesh.neighbors(t)[i];
    if n == NONE {
        return local[t][i];
    }
    let j = mesh.neighbors(n).iter().position(|&x| x == t).expect("symmetric adjacency");
    0.5 * (local[t][i] + local[n][j])
}

pub fn hierarchical_reconstruct(mesh: &Mesh, rec: &RecoveredGradient) -> HierarchicalField {
    let cap = mesh.triangle_capacity();
    let mut local = vec![[0.0; 3]; cap];
    let mut singular = 0;
    for t in mesh.triangles() {
        let [a, b, c] = mesh.triangle(t);
        match local_coefficients(&mesh.triangle_points(t), [rec.at(a), rec.at(b), rec.at(c)]) {
            Some(e) => local[t] = e,
            None => singular += 1,
        }
    }
    if singular > 0 {
        log::warn!("hierarchical reconstruction: {singular} singular elements set to zero");
    }
    let mut coeff = vec![[0.0; 3]; cap];
    let mut l2 = vec![0.0; cap];
    let mut h1 = vec![0.0; cap];
    for t in mesh.triangles() {
        let e = [0, 1, 2].map(|i| averaged_coefficient(mesh, &local, t, i));
        let (a, b) = correction_norms(&mesh.triangle_points(t), e);
        coeff[t] = e;
        l2[t] = a;
        h1[t] = b;
    }
    HierarchicalField { coeff, l2, h1, singular }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{from_barycentric, integrate, QuadratureRule};

    #[test]
    fn midpoint_value() {
        let v = evaluate([1.0, 2.0, 5.0], [0.0, 0.0, 0.7], [0.5, 0.5, 0.0]);
        assert!((v - (1.5 + 0.7)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_reproduced_on_element() {
        let p = [[0.1, 0.2], [0.8, 0.1], [0.4, 0.9]];
        let q = |x: Point| x[0] * x[0] + x[0] * x[1];
        let grad = |x: Point| [2.0 * x[0] + x[1], x[0]];
        let e = local_coefficients(&p, p.map(grad)).unwrap();
        let u = p.map(q);
        for b in [[0.2, 0.3, 0.5], [0.5, 0.5, 0.0], [0.1, 0.1, 0.8]] {
            let x = from_barycentric(&p, b);
            assert!((evaluate(u, e, b) - q(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn norms_match_quadrature() {
        let p = [[0.0, 0.0], [1.0, 0.2], [0.3, 0.8]];
        let e = [0.3, -0.2, 0.5];
        let (l2, h1) = correction_norms(&p, e);
        let area = crate::linalg::signed_area(p[0], p[1], p[2]);
        let bary = |x: Point| {
            [
                crate::linalg::signed_area(x, p[1], p[2]) / area,
                crate::linalg::signed_area(p[0], x, p[2]) / area,
                crate::linalg::signed_area(p[0], p[1], x) / area,
            ]
        };
        let r = QuadratureRule::degree5();
        let ql2 = integrate(&r, &p, |x| evaluate([0.0; 3], e, bary(x)).powi(2)).sqrt();
        assert!((l2 - ql2).abs() < 1e-13);
        let hstep = 1e-6;
        let qh1 = integrate(&r, &p, |x| {
            let f = |y: Point| evaluate([0.0; 3], e, bary(y));
            let gx = (f([x[0] + hstep, x[1]]) - f([x[0] - hstep, x[1]])) / (2.0 * hstep);
            let gy = (f([x[0], x[1] + hstep]) - f([x[0], x[1] - hstep])) / (2.0 * hstep);
            gx * gx + gy * gy
        })
        .sqrt();
        assert!((h1 - qh1).abs() < 1e-7);
    }

    #[test]
    fn constant_gradient_gives_zero() {
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(local_coefficients(&p, [[1.0, 2.0]; 3]).unwrap().map(|x| x.abs() < 1e-14), [true; 3]);
    }
}
