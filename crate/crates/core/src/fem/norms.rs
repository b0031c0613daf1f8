use super::{from_barycentric, p1_gradient, QuadratureRule};
use crate::linalg::{Point, Sym2};
use crate::mesh::Mesh;

/// Exact discretization errors, globally and per triangle slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNorms {
    /// `|u - u_h|_{1}` over the domain.
    pub h1: f64,
    /// `||u - u_h||_{0}` over the domain.
    pub l2: f64,
    pub element_h1: Vec<f64>,
    pub element_l2: Vec<f64>,
}

/// `B(v, v)^{1/2}` for a P1 field.
pub fn energy_norm(mesh: &Mesh, v: &[f64], a: &Sym2) -> f64 {
    mesh.triangles()
        .map(|t| {
            let [i, j, k] = mesh.triangle(t);
            let g = p1_gradient(&mesh.triangle_points(t), [v[i], v[j], v[k]]);
            mesh.area(t) * a.quad(g)
        })
        .sum::<f64>()
        .sqrt()
}

/// Errors of the P1 field `uh` against the exact solution, with the
/// degree-5 rule on each quadrisected child element.
pub fn exact_errors(
    mesh: &Mesh,
    uh: &[f64],
    u: impl Fn(Point) -> f64,
    grad: impl Fn(Point) -> Point,
) -> ErrorNorms {
    let rule = QuadratureRule::degree5().subdivided(1);
    let mut element_h1 = vec![0.0; mesh.triangle_capacity()];
    let mut element_l2 = vec![0.0; mesh.triangle_capacity()];
    let (mut h1, mut l2) = (0.0, 0.0);
    for t in mesh.triangles() {
        let p = mesh.triangle_points(t);
        let [i, j, k] = mesh.triangle(t);
        let vals = [uh[i], uh[j], uh[k]];
        let gh = p1_gradient(&p, vals);
        let area = mesh.area(t);
        let (mut eh, mut el) = (0.0, 0.0);
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let x = from_barycentric(&p, *b);
            let g = grad(x);
            let d = u(x) - (b[0] * vals[0] + b[1] * vals[1] + b[2] * vals[2]);
            eh += w * ((g[0] - gh[0]).powi(2) + (g[1] - gh[1]).powi(2));
            el += w * d * d;
        }
        h1 += eh * area;
        l2 += el * area;
        element_h1[t] = (eh * area).sqrt();
        element_l2[t] = (el * area).sqrt();
    }
    ErrorNorms { h1: h1.sqrt(), l2: l2.sqrt(), element_h1, element_l2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, Diagonal};

    #[test]
    fn linear_interpolant_has_zero_error() {
        let m = unit_square(3, 3, Diagonal::Right);
        let u = |p: Point| 3.0 * p[0] - p[1];
        let uh: Vec<f64> = m.points().iter().map(|&p| u(p)).collect();
        let e = exact_errors(&m, &uh, u, |_| [3.0, -1.0]);
        assert!(e.h1 < 1e-13 && e.l2 < 1e-13);
    }

    #[test]
    fn energy_norm_with_identity_is_h1_seminorm() {
        let m = unit_square(4, 4, Diagonal::Left);
        let v: Vec<f64> = m.points().iter().map(|p| p[0] * p[0] + p[1]).collect();
        let e = exact_errors(&m, &v, |_| 0.0, |_| [0.0, 0.0]);
        let en = energy_norm(&m, &v, &Sym2::scaled_identity(1.0));
        assert!((e.h1 - en).abs() < 1e-12);
    }
}
