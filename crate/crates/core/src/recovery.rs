//! Recovery of gradients and Hessians from P1 nodal fields.
//!
//! The Zhang–Naga operator fits a quadratic by least squares to the nodal
//! values on a ring patch around each vertex and differentiates it there.
//! Patch offsets are mapped to principal axes and normalized before the fit,
//! which keeps the system well conditioned on stretched patches without
//! changing the (affine invariant) space of quadratics.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::fem::element_gradient;
use crate::linalg::{Point, Sym2};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecoveryMethod {
    #[default]
    ZhangNaga,
    Zz,
}

impl std::str::FromStr for RecoveryMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zhang-naga" => Ok(RecoveryMethod::ZhangNaga),
            "zz" => Ok(RecoveryMethod::Zz),
            _ => Err(format!("unknown recovery method '{s}' (expected zhang-naga | zz)")),
        }
    }
}

impl std::fmt::Display for RecoveryMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RecoveryMethod::ZhangNaga => "zhang-naga",
            RecoveryMethod::Zz => "zz",
        })
    }
}

/// Recovered gradient as two P1 fields indexed by vertex slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredGradient {
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    /// Vertices where the quadratic fit was rank deficient and ZZ was used.
    pub fallbacks: usize,
}

impl RecoveredGradient {
    pub fn at(&self, v: usize) -> Point {
        [self.gx[v], self.gy[v]]
    }
}

/// Recovered Hessian as a P1 symmetric tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredHessian {
    pub h: Vec<Sym2>,
    pub fallbacks: usize,
}

/// Number of ring expansions allowed beyond the first ring.
pub const MAX_RING_EXPANSIONS: usize = 3;
/// Minimum ratio of smallest to largest singular value of the fit.
pub const RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub grad: Point,
    pub hessian: Sym2,
}

fn next_ring(mesh: &Mesh, seen: &mut HashSet<usize>, frontier: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for &v in frontier {
        for w in mesh.vertex_neighbors(v) {
            if seen.insert(w) {
                out.push(w);
            }
        }
    }
    out
}

/// Least-squares quadratic through the nodal values around `v`, grown ring
/// by ring until the fit has full rank. `None` if it never does.
pub fn fit_quadratic(mesh: &Mesh, u: &[f64], v: usize) -> Option<QuadraticFit> {
    let mut seen: HashSet<usize> = HashSet::from([v]);
    let mut patch = vec![v];
    let mut frontier = vec![v];
    for _ in 0..=MAX_RING_EXPANSIONS {
        frontier = next_ring(mesh, &mut seen, &frontier);
        if frontier.is_empty() {
            break;
        }
        patch.extend_from_slice(&frontier);
        if patch.len() < 6 {
            continue;
        }
        if let Some(fit) = solve_fit(mesh, u, v, &patch) {
            return Some(fit);
        }
    }
    None
}

fn solve_fit(mesh: &Mesh, u: &[f64], v: usize, patch: &[usize]) -> Option<QuadraticFit> {
    let c = mesh.point(v);
    // principal axes of the patch offsets
    let mut cov = Sym2::new(0.0, 0.0, 0.0);
    for &w in patch {
        let p = mesh.point(w);
        cov = cov + Sym2::outer([p[0] - c[0], p[1] - c[1]]);
    }
    let e = cov.eigen();
    let n = patch.len() as f64;
    let (q1, q2) = (e.v1, e.v2());
    let s1 = (e.values[0] / n).sqrt();
    let s2 = (e.values[1] / n).sqrt();
    if !(s2 > 0.0) || !(s1 > 0.0) {
        return None;
    }
    // xi = S (x - c) with rows q1/s1, q2/s2
    let s = [[q1[0] / s1, q1[1] / s1], [q2[0] / s2, q2[1] / s2]];
    let mut a = DMatrix::<f64>::zeros(patch.len(), 6);
    let mut b = DVector::<f64>::zeros(patch.len());
    for (row, &w) in patch.iter().enumerate() {
        let p = mesh.point(w);
        let d = [p[0] - c[0], p[1] - c[1]];
        let x = s[0][0] * d[0] + s[0][1] * d[1];
        let y = s[1][0] * d[0] + s[1][1] * d[1];
        for (col, val) in [1.0, x, y, x * x, x * y, y * y].into_iter().enumerate() {
            a[(row, col)] = val;
        }
        b[row] = u[w];
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOLERANCE * smax) {
        return None;
    }
    let coef = svd.solve(&b, 0.0).ok()?;
    let gxi = [coef[1], coef[2]];
    let hxi = [[2.0 * coef[3], coef[4]], [coef[4], 2.0 * coef[5]]];
    // grad_x = S^T grad_xi, H_x = S^T H_xi S
    let grad = [s[0][0] * gxi[0] + s[1][0] * gxi[1], s[0][1] * gxi[0] + s[1][1] * gxi[1]];
    let mut h = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    acc += s[k][i] * hxi[k][l] * s[l][j];
                }
            }
            h[i][j] = acc;
        }
    }
    Some(QuadraticFit { grad, hessian: Sym2::new(h[0][0], 0.5 * (h[0][1] + h[1][0]), h[1][1]) })
}

/// Area-weighted average of the incident element gradients at `v`.
pub fn zz_vertex(mesh: &Mesh, u: &[f64], v: usize) -> Point {
    let fan = mesh.vertex_patch(v);
    let (mut g, mut w) = ([0.0, 0.0], 0.0);
    for &t in &fan.triangles {
        let a = mesh.area(t);
        let gt = element_gradient(mesh, t, u);
        g[0] += a * gt[0];
        g[1] += a * gt[1];
        w += a;
    }
    [g[0] / w, g[1] / w]
}

pub fn zz_gradient(mesh: &Mesh, u: &[f64]) -> RecoveredGradient {
    let mut gx = vec![0.0; mesh.vertex_capacity()];
    let mut gy = vec![0.0; mesh.vertex_capacity()];
    for v in mesh.vertices() {
        let g = zz_vertex(mesh, u, v);
        gx[v] = g[0];
        gy[v] = g[1];
    }
    RecoveredGradient { gx, gy, fallbacks: 0 }
}

pub fn zhang_naga_gradient(mesh: &Mesh, u: &[f64]) -> RecoveredGradient {
    let mut gx = vec![0.0; mesh.vertex_capacity()];
    let mut gy = vec![0.0; mesh.vertex_capacity()];
    let mut fallbacks = 0;
    for v in mesh.vertices() {
        let g = match fit_quadratic(mesh, u, v) {
            Some(fit) => fit.grad,
            None => {
                fallbacks += 1;
                zz_vertex(mesh, u, v)
            }
        };
        gx[v] = g[0];
        gy[v] = g[1];
    }
    if fallbacks > 0 {
        log::info!("gradient recovery: ZZ fallback at {fallbacks} vertices");
    }
    RecoveredGradient { gx, gy, fallbacks }
}

pub fn recover_gradient(mesh: &Mesh, u: &[f64], method: RecoveryMethod) -> RecoveredGradient {
    match method {
        RecoveryMethod::ZhangNaga => zhang_naga_gradient(mesh, u),
        RecoveryMethod::Zz => zz_gradient(mesh, u),
    }
}

/// Hessian of the least-squares quadratic at each vertex. Where the fit is
/// rank deficient, the Hessian is taken from ZZ applied twice
/// (element gradients of the ZZ gradient, averaged back to the vertex).
pub fn ls_hessian(mesh: &Mesh, u: &[f64]) -> RecoveredHessian {
    let mut h = vec![Sym2::new(0.0, 0.0, 0.0); mesh.vertex_capacity()];
    let mut missing = Vec::new();
    for v in mesh.vertices() {
        match fit_quadratic(mesh, u, v) {
            Some(fit) => h[v] = fit.hessian,
            None => missing.push(v),
        }
    }
    if !missing.is_empty() {
        log::info!("hessian recovery: fallback at {} vertices", missing.len());
        let g = zz_gradient(mesh, u);
        for &v in &missing {
            let a = zz_vertex(mesh, &g.gx, v);
            let b = zz_vertex(mesh, &g.gy, v);
            h[v] = Sym2::new(a[0], 0.5 * (a[1] + b[0]), b[1]);
        }
    }
    RecoveredHessian { h, fallbacks: missing.len() }
}
