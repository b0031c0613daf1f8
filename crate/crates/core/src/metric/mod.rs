//! Riemannian metric fields: construction from the residual estimator or a
//! recovered Hessian, and metric-driven remeshing toward unit meshes.

mod remesh;

use std::fmt;
use std::str::FromStr;

pub use remesh::{
    metric_adapt_iteration, unit_fraction, MetricAdaptCounts, MetricConfig, MetricMesh, MetricSource, MetricStrategy,
};

use crate::estimate::{ElementEstimate, Estimates};
use crate::linalg::{Point, Sym2};
use crate::mesh::Mesh;

/// Eigenvalue bounds applied to every metric tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricClamp {
    pub min: f64,
    pub max: f64,
}

impl Default for MetricClamp {
    fn default() -> Self {
        MetricClamp { min: 1e-6, max: 1e12 }
    }
}

impl MetricClamp {
    /// Symmetrizes nothing (storage is symmetric already), clamps the
    /// eigenvalues and replaces non-finite tensors by the weakest metric.
    pub fn apply(&self, m: Sym2) -> Sym2 {
        if !m.is_finite() {
            log::warn!("non-finite metric replaced by the minimum clamp");
            return Sym2::scaled_identity(self.min);
        }
        let e = m.eigen();
        if e.values[1] < self.min || e.values[0] > self.max {
            m.clamp_eigenvalues(self.min, self.max)
        } else {
            m
        }
    }
}

/// How the element metrics around a vertex are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combine {
    #[default]
    Intersect,
    Average,
}

impl FromStr for Combine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "intersect" => Ok(Combine::Intersect),
            "average" => Ok(Combine::Average),
            _ => Err(format!("unknown metric combination '{s}' (expected intersect or average)")),
        }
    }
}

impl fmt::Display for Combine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combine::Intersect => "intersect",
            Combine::Average => "average",
        })
    }
}

/// Length of `PQ` under the metric linearly interpolated between the
/// endpoint tensors, by the trapezoid rule.
pub fn metric_edge_length(mp: &Sym2, mq: &Sym2, p: Point, q: Point) -> f64 {
    let e = [q[0] - p[0], q[1] - p[1]];
    0.5 * (mp.quad(e).max(0.0).sqrt() + mq.quad(e).max(0.0).sqrt())
}

/// Intersection by simultaneous reduction: the largest ellipse contained in
/// both unit balls.
pub fn metric_intersect(a: &Sym2, b: &Sym2) -> Sym2 {
    let s = a.sqrt();
    let Some(si) = s.inverse() else { return *b };
    let c = b.congruence(&si.to_mat());
    let r = c.map_eigenvalues(|x| x.max(1.0));
    r.congruence(&s.to_mat())
}

/// Weighted log-Euclidean mean (weights should sum to one).
pub fn log_interpolate(ms: &[Sym2], w: &[f64]) -> Sym2 {
    let mut acc = Sym2::ZERO;
    for (m, &wi) in ms.iter().zip(w) {
        acc = acc + m.log() * wi;
    }
    acc.exp()
}

/// `|H| / (8 e_D)` per vertex, clamped.
pub fn hessian_metric(h: &[Sym2], e_d: f64, clamp: &MetricClamp) -> Vec<Sym2> {
    assert!(e_d > 0.0, "error level must be positive");
    h.iter().map(|m| clamp.apply(m.abs() * (1.0 / (8.0 * e_d)))).collect()
}

/// Interpolation error predicted along `e` by the vertex Hessians at its
/// ends: `(1/8) * (e^T|H_p|e + e^T|H_q|e) / 2`.
pub fn hessian_edge_error(hp: &Sym2, hq: &Sym2, p: Point, q: Point) -> f64 {
    let e = [q[0] - p[0], q[1] - p[1]];
    0.125 * 0.5 * (hp.abs().quad(e) + hq.abs().quad(e))
}

/// How the estimator terms are assumed to scale with the linear size of a
/// remeshed element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricScaling {
    /// Residual and jump terms grow like the size, the weight `omega` like
    /// its cube (smooth solution, P1 elements): `eta^2` behaves like `t^4`.
    #[default]
    Asymptotic,
    /// Residual like the size, jump constant, `omega` like the size
    /// (element error densities held fixed): a quadratic in `t`.
    Frozen,
}

impl MetricScaling {
    /// Exponents of the jump term and of `omega`.
    fn exponents(self) -> (f64, f64) {
        match self {
            MetricScaling::Asymptotic => (1.0, 3.0),
            MetricScaling::Frozen => (0.0, 1.0),
        }
    }
}

impl FromStr for MetricScaling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "asymptotic" => Ok(MetricScaling::Asymptotic),
            "frozen" => Ok(MetricScaling::Frozen),
            _ => Err(format!("unknown metric scaling '{s}' (expected asymptotic or frozen)")),
        }
    }
}

impl fmt::Display for MetricScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricScaling::Asymptotic => "asymptotic",
            MetricScaling::Frozen => "frozen",
        })
    }
}

/// Positive root `t` of `c1 w t^2 + c2 w t = tau^2`.
pub fn scale_root(c1: f64, c2: f64, omega_b: f64, tau: f64) -> Option<f64> {
    let (a, b) = (c1 * omega_b, c2 * omega_b);
    let cc = tau * tau;
    if !(cc > 0.0) || !(a >= 0.0 && b >= 0.0) || (a == 0.0 && b == 0.0) {
        return None;
    }
    // stable form of (-b + sqrt(b^2 + 4 a cc)) / (2 a)
    let t = 2.0 * cc / (b + (b * b + 4.0 * a * cc).sqrt());
    (t.is_finite() && t > 0.0).then_some(t)
}

/// Size ratio `x > 0` solving `(r x + j x^pj) w x^pw = tau^2`.
pub fn size_ratio(r: f64, j: f64, w: f64, tau: f64, scaling: MetricScaling) -> Option<f64> {
    let (pj, pw) = scaling.exponents();
    if scaling == MetricScaling::Frozen {
        return scale_root(r, j, w, tau);
    }
    let f = |x: f64| (r * x + j * x.powf(pj)) * w * x.powf(pw);
    if !(tau > 0.0) || !(r >= 0.0 && j >= 0.0 && w > 0.0) || r + j == 0.0 {
        return None;
    }
    let target = tau * tau;
    if pj == 1.0 {
        // all terms share the power 1 + pw
        return Some((target / ((r + j) * w)).powf(1.0 / (1.0 + pw))).filter(|x| x.is_finite() && *x > 0.0);
    }
    // monotone in x: bisection in log x
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = (0.5 * (lo + hi)).exp();
    (x.is_finite() && x > 0.0).then_some(x)
}

/// Optimal-element metric of one triangle for local tolerance `tau`.
///
/// With `G/|K|` eigenvalues `a1 >= a2` and eigenvectors `p1, p2`, the new
/// element has its long axis along `p2` and aspect `sqrt(a1/a2)`. Its size,
/// relative to the current `sqrt(lambda1 lambda2)`, makes the predicted
/// estimate equal to `tau` under `scaling`. The reference triangle has side
/// `sqrt 3`, hence the factor 1/3 that makes its image unit.
pub fn element_metric(e: &ElementEstimate, tau: f64, drop_residual: bool, scaling: MetricScaling) -> Sym2 {
    let g = &e.geom;
    let tk = (g.lambda1 * g.lambda2).sqrt();
    let iso = || Sym2::scaled_identity(1.0 / (3.0 * tk * tk));
    let ev = (e.g * (1.0 / g.area)).eigen();
    let (a1, a2) = (ev.values[0], ev.values[1]);
    if !(a2 > 1e-14 * a1) || !(tau > 0.0) || !a1.is_finite() {
        return iso();
    }
    let s = (a1 / a2).sqrt();
    // omega of the reshaped element at the current size, same G
    let omega_b = tk * (2.0 * g.area * (a1 * a2).sqrt()).sqrt();
    let r = if drop_residual { 0.0 } else { e.resid };
    let j = (g.h / (g.lambda1 * g.lambda2)).sqrt() * e.jump;
    let Some(x) = size_ratio(r, j, omega_b, tau, scaling) else { return iso() };
    let t = x * tk;
    let (l1, l2) = (t * s.sqrt(), t / s.sqrt());
    (Sym2::outer(ev.v2()) * (1.0 / (l1 * l1)) + Sym2::outer(ev.v1) * (1.0 / (l2 * l2))) * (1.0 / 3.0)
}

/// Vertex metrics combined from the element metrics of each fan.
pub fn vertex_metric_from_elements(mesh: &Mesh, elem: &[Sym2], combine: Combine, clamp: &MetricClamp) -> Vec<Sym2> {
    let mut out = vec![Sym2::scaled_identity(clamp.min); mesh.vertex_capacity()];
    for v in mesh.vertices() {
        let fan = mesh.vertex_patch(v);
        let m = match combine {
            Combine::Intersect => {
                fan.triangles.iter().skip(1).fold(elem[fan.triangles[0]], |acc, &t| metric_intersect(&acc, &elem[t]))
            }
            Combine::Average => {
                let k = fan.triangles.len() as f64;
                fan.triangles.iter().fold(Sym2::ZERO, |acc, &t| acc + elem[t]) * (1.0 / k)
            }
        };
        out[v] = clamp.apply(m);
    }
    out
}

/// Metric from the residual estimator, with `tau = TOL / sqrt(N_T)`.
pub fn residual_metric(
    mesh: &Mesh,
    est: &Estimates,
    tol: f64,
    drop_residual: bool,
    scaling: MetricScaling,
    combine: Combine,
    clamp: &MetricClamp,
) -> Vec<Sym2> {
    let tau = tol / (mesh.num_triangles() as f64).sqrt();
    let mut elem = vec![Sym2::IDENTITY; mesh.triangle_capacity()];
    for t in mesh.triangles() {
        elem[t] = clamp.apply(element_metric(&est.elems[t], tau, drop_residual, scaling));
    }
    vertex_metric_from_elements(mesh, &elem, combine, clamp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{ElementGeometry, REFERENCE_AREA};

    #[test]
    fn constant_metric_lengths() {
        let m = Sym2::scaled_identity(4.0);
        assert!((metric_edge_length(&m, &m, [0.0, 0.0], [0.5, 0.0]) - 1.0).abs() < 1e-15);
        let i = Sym2::IDENTITY;
        assert!((metric_edge_length(&i, &i, [0.1, 0.2], [0.4, 0.6]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn intersect_axis_aligned() {
        let r = metric_intersect(&Sym2::diag(4.0, 1.0), &Sym2::diag(1.0, 4.0));
        assert!(r.max_abs_diff(&Sym2::diag(4.0, 4.0)) < 1e-12);
        let a = Sym2::new(3.0, 0.4, 1.0);
        assert!(metric_intersect(&a, &a).max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn hessian_metric_values() {
        let c = MetricClamp::default();
        let m = hessian_metric(&[Sym2::scaled_identity(2.0)], 0.01, &c)[0];
        assert!(m.max_abs_diff(&Sym2::scaled_identity(25.0)) < 1e-12);
        let m = hessian_metric(&[Sym2::diag(2.0, -2.0)], 0.01, &c)[0];
        assert!(m.max_abs_diff(&Sym2::scaled_identity(25.0)) < 1e-12);
        let m = hessian_metric(&[Sym2::ZERO], 0.01, &c)[0];
        assert!(m.max_abs_diff(&Sym2::scaled_identity(c.min)) < 1e-18);
    }

    fn estimate_with(g: Sym2) -> ElementEstimate {
        let area = 0.01;
        ElementEstimate {
            geom: ElementGeometry { lambda1: 0.1, lambda2: area / REFERENCE_AREA / 0.1, h: 0.15, area, ..Default::default() },
            resid: 0.2,
            jump: 0.5,
            g: g * area,
            ..Default::default()
        }
    }

    #[test]
    fn isotropic_g_gives_isotropic_metric() {
        let m = element_metric(&estimate_with(Sym2::scaled_identity(3.0)), 0.01, false, MetricScaling::default());
        let e = m.eigen();
        assert!((e.values[0] - e.values[1]).abs() < 1e-10 * e.values[0]);
    }

    #[test]
    fn anisotropic_g_stretches_along_second_eigenvector() {
        let m = element_metric(&estimate_with(Sym2::diag(100.0, 1.0)), 0.01, false, MetricScaling::default());
        // small metric eigenvalue means long element axis: expected along y
        assert!(m.m22 < m.m11);
        assert!(m.m12.abs() < 1e-12 * m.m11);
        assert!(((m.m11 / m.m22).sqrt() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn element_meeting_tau_gets_unit_edges() {
        // right triangle with legs 0.1: its optimal shape under isotropic G is equilateral
        let (p, q, r) = ([0.0, 0.0], [0.1, 0.0], [0.05, 0.05 * 3f64.sqrt()]);
        let area = 0.25 * 3f64.sqrt() * 0.01;
        let l = (area / REFERENCE_AREA).sqrt();
        let est = ElementEstimate {
            geom: ElementGeometry { lambda1: l, lambda2: l, h: 0.1, area, ..Default::default() },
            resid: 0.3,
            jump: 0.4,
            g: Sym2::scaled_identity(2.0 * area),
            ..Default::default()
        };
        let omega = l * (2.0 * area * 2.0).sqrt();
        let eta = ((0.3 + (0.1 / (l * l)).sqrt() * 0.4) * omega).sqrt();
        let m = element_metric(&est, eta, false, MetricScaling::Asymptotic);
        for (a, b) in [(p, q), (q, r), (r, p)] {
            assert!((metric_edge_length(&m, &m, a, b) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn larger_tau_means_coarser_metric() {
        let est = estimate_with(Sym2::diag(5.0, 2.0));
        for sc in [MetricScaling::Asymptotic, MetricScaling::Frozen] {
            let fine = element_metric(&est, 0.01, false, sc).eigen().values;
            let coarse = element_metric(&est, 0.02, false, sc).eigen().values;
            assert!(coarse[0] < fine[0] && coarse[1] < fine[1]);
        }
        let (t1, t2) = (scale_root(1.0, 2.0, 0.5, 0.1).unwrap(), scale_root(1.0, 2.0, 0.5, 0.2).unwrap());
        assert!(t2 > t1);
        assert!((0.5 * t1 * t1 + 1.0 * t1 - 0.01).abs() < 1e-15);
    }

    #[test]
    fn size_ratio_solves_its_equation() {
        for (r, j) in [(1.0, 2.0), (0.0, 3.0), (2.0, 0.0)] {
            let x = size_ratio(r, j, 0.7, 0.3, MetricScaling::Asymptotic).unwrap();
            assert!(((r + j) * 0.7 * x.powi(4) - 0.09).abs() < 1e-12);
            let x = size_ratio(r, j, 0.7, 0.3, MetricScaling::Frozen).unwrap();
            assert!(((r * x + j) * 0.7 * x - 0.09).abs() < 1e-12);
        }
        assert!(size_ratio(0.0, 0.0, 1.0, 0.1, MetricScaling::Asymptotic).is_none());
    }
}
