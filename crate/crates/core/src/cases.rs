//! Manufactured solutions on the unit square.

use std::sync::Arc;

use crate::fem::ProblemSpec;
use crate::linalg::{Point, Sym2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseKind {
    /// Boundary layer of width about 1/100 along `x = 0`.
    BoundaryLayer,
    /// Circular front `atan(alpha (r - r0))` around `center`.
    WaveFront { alpha: f64, r0: f64, center: Point },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestCase {
    pub name: &'static str,
    pub kind: CaseKind,
}

pub fn case_u1() -> TestCase {
    TestCase { name: "u1", kind: CaseKind::BoundaryLayer }
}

pub fn case_u2(alpha: f64) -> TestCase {
    TestCase { name: "u2", kind: CaseKind::WaveFront { alpha, r0: 0.7, center: [-0.05, -0.05] } }
}

const K1: f64 = 100.0;

impl TestCase {
    pub fn u(&self, p: Point) -> f64 {
        match self.kind {
            CaseKind::BoundaryLayer => {
                let c = 1.0 - (-K1).exp();
                4.0 * (1.0 - (-K1 * p[0]).exp() - p[0] * c) * p[1] * (1.0 - p[1])
            }
            CaseKind::WaveFront { alpha, r0, center } => {
                let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                (alpha * (r - r0)).atan()
            }
        }
    }

    pub fn grad(&self, p: Point) -> Point {
        match self.kind {
            CaseKind::BoundaryLayer => {
                let c = 1.0 - (-K1).exp();
                let e = (-K1 * p[0]).exp();
                let x = 1.0 - e - p[0] * c;
                let dx = K1 * e - c;
                let y = p[1] * (1.0 - p[1]);
                [4.0 * dx * y, 4.0 * x * (1.0 - 2.0 * p[1])]
            }
            CaseKind::WaveFront { alpha, r0, center } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let r = (dx * dx + dy * dy).sqrt();
                let s = alpha * (r - r0);
                let ur = alpha / (1.0 + s * s);
                [ur * dx / r, ur * dy / r]
            }
        }
    }

    pub fn hessian(&self, p: Point) -> Sym2 {
        match self.kind {
            CaseKind::BoundaryLayer => {
                let c = 1.0 - (-K1).exp();
                let e = (-K1 * p[0]).exp();
                let x = 1.0 - e - p[0] * c;
                let dx = K1 * e - c;
                let dxx = -K1 * K1 * e;
                let y = p[1] * (1.0 - p[1]);
                Sym2::new(4.0 * dxx * y, 4.0 * dx * (1.0 - 2.0 * p[1]), -8.0 * x)
            }
            CaseKind::WaveFront { alpha, r0, center } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let r = (dx * dx + dy * dy).sqrt();
                let s = alpha * (r - r0);
                let ur = alpha / (1.0 + s * s);
                let urr = -2.0 * alpha * alpha * s / (1.0 + s * s).powi(2);
                let n = [dx / r, dy / r];
                let t = ur / r;
                Sym2::new(
                    urr * n[0] * n[0] + t * (1.0 - n[0] * n[0]),
                    (urr - t) * n[0] * n[1],
                    urr * n[1] * n[1] + t * (1.0 - n[1] * n[1]),
                )
            }
        }
    }

    /// Source term `-laplace(u)`.
    pub fn f(&self, p: Point) -> f64 {
        match self.kind {
            CaseKind::BoundaryLayer => {
                let c = 1.0 - (-K1).exp();
                let e = (-K1 * p[0]).exp();
                let x = 1.0 - e - p[0] * c;
                4.0 * (K1 * K1 * e * p[1] * (1.0 - p[1]) + 2.0 * x)
            }
            CaseKind::WaveFront { alpha, r0, center } => {
                let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                let s = alpha * (r - r0);
                let ur = alpha / (1.0 + s * s);
                let urr = -2.0 * alpha * alpha * s / (1.0 + s * s).powi(2);
                -(urr + ur / r)
            }
        }
    }

    /// Poisson problem with this source and the exact solution as Dirichlet data.
    pub fn problem(&self) -> ProblemSpec {
        let (a, b) = (*self, *self);
        ProblemSpec::poisson(Arc::new(move |p| a.f(p)), Arc::new(move |p| b.u(p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u1_vanishes_on_three_sides() {
        let c = case_u1();
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            assert_eq!(c.u([0.0, s]), 0.0);
            assert_eq!(c.u([s, 0.0]), 0.0);
            assert!(c.u([s, 1.0]).abs() < 1e-15);
            assert!(c.u([1.0, s]).abs() < 1e-15);
        }
    }

    #[test]
    fn u2_front_properties() {
        let c = case_u2(100.0);
        let p = [-0.05 + 0.7 * 0.6, -0.05 + 0.7 * 0.8];
        assert!(c.u(p).abs() < 1e-14);
        let g = c.grad(p);
        assert!(((g[0] * g[0] + g[1] * g[1]).sqrt() - 100.0).abs() < 1e-9);
    }
}
