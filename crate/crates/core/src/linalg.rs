//! Small dense 2x2 linear algebra used throughout the estimator and metric code.

use std::ops::{Add, Mul, Sub};

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// z component of (b - a) x (c - a); twice the signed area of abc.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

#[inline]
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * orient(a, b, c)
}

/// General 2x2 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn from_cols(c0: Point, c1: Point) -> Self {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    pub fn transpose(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn apply(&self, v: Point) -> Point {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Singular value decomposition `M = U diag(s1, s2) V^T` with
    /// `s1 >= s2 >= 0`, computed in closed form from the rotation/reflection
    /// split of the matrix. `M M^T` is never formed.
    pub fn svd(&self) -> Svd2 {
        let [[a, b], [c, d]] = self.0;
        let e = 0.5 * (a + d);
        let f = 0.5 * (a - d);
        let g = 0.5 * (c + b);
        let h = 0.5 * (c - b);
        let q = e.hypot(h);
        let r = f.hypot(g);
        let s1 = q + r;
        let s2 = q - r;
        let a1 = g.atan2(f);
        let a2 = h.atan2(e);
        let theta = 0.5 * (a2 - a1);
        let phi = 0.5 * (a2 + a1);
        // M = Rot(phi) diag(s1, s2) Rot(theta); s2 < 0 means det < 0.
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = theta.sin_cos();
        let u1 = [cp, sp];
        let u2 = [-sp, cp];
        let v1 = [ct, -st];
        let v2 = [st, ct];
        if s2 >= 0.0 {
            Svd2 { sigma: [s1, s2], u: [u1, u2], v: [v1, v2] }
        } else {
            Svd2 { sigma: [s1, -s2], u: [u1, [-u2[0], -u2[1]]], v: [v1, v2] }
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(m)
    }
}

/// Result of [`Mat2::svd`]: left singular vectors `u`, right singular vectors `v`.
#[derive(Debug, Clone, Copy)]
pub struct Svd2 {
    pub sigma: [f64; 2],
    pub u: [Point; 2],
    pub v: [Point; 2],
}

/// Symmetric 2x2 tensor `[[m11, m12], [m12, m22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { m11: 0.0, m12: 0.0, m22: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { m11: 1.0, m12: 0.0, m22: 1.0 };

    pub const fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Sym2 { m11, m12, m22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Sym2::new(a, 0.0, b)
    }

    pub fn scaled_identity(s: f64) -> Self {
        Sym2::new(s, 0.0, s)
    }

    /// `v v^T`
    pub fn outer(v: Point) -> Self {
        Sym2::new(v[0] * v[0], v[0] * v[1], v[1] * v[1])
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn apply(&self, v: Point) -> Point {
        [self.m11 * v[0] + self.m12 * v[1], self.m12 * v[0] + self.m22 * v[1]]
    }

    /// `v^T M v`
    pub fn quad(&self, v: Point) -> f64 {
        self.m11 * v[0] * v[0] + 2.0 * self.m12 * v[0] * v[1] + self.m22 * v[1] * v[1]
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m22.is_finite()
    }

    /// Eigenvalues in descending order with the unit eigenvector of the larger one.
    pub fn eigen(&self) -> SymEigen {
        let half_tr = 0.5 * (self.m11 + self.m22);
        let half_diff = 0.5 * (self.m11 - self.m22);
        let rad = half_diff.hypot(self.m12);
        let theta = 0.5 * (2.0 * self.m12).atan2(self.m11 - self.m22);
        let (s, c) = theta.sin_cos();
        SymEigen { values: [half_tr + rad, half_tr - rad], v1: [c, s] }
    }

    pub fn from_eigen(values: [f64; 2], v1: Point) -> Self {
        let v2 = [-v1[1], v1[0]];
        Sym2::outer(v1) * values[0] + Sym2::outer(v2) * values[1]
    }

    /// Applies `f` to both eigenvalues.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Self {
        let e = self.eigen();
        Sym2::from_eigen([f(e.values[0]), f(e.values[1])], e.v1)
    }

    pub fn abs(&self) -> Self {
        self.map_eigenvalues(f64::abs)
    }

    pub fn clamp_eigenvalues(&self, lo: f64, hi: f64) -> Self {
        self.map_eigenvalues(|x| x.clamp(lo, hi))
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.m22 / d, -self.m12 / d, self.m11 / d))
    }

    /// Matrix logarithm; requires positive eigenvalues.
    pub fn log(&self) -> Self {
        self.map_eigenvalues(f64::ln)
    }

    pub fn exp(&self) -> Self {
        self.map_eigenvalues(f64::exp)
    }

    pub fn sqrt(&self) -> Self {
        self.map_eigenvalues(|x| x.max(0.0).sqrt())
    }

    /// `A M A^T` for a general `A`.
    pub fn congruence(&self, a: &Mat2) -> Self {
        let m = Mat2([[self.m11, self.m12], [self.m12, self.m22]]);
        let r = *a * m * a.transpose();
        Sym2::new(r.0[0][0], 0.5 * (r.0[0][1] + r.0[1][0]), r.0[1][1])
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2([[self.m11, self.m12], [self.m12, self.m22]])
    }

    pub fn max_abs_diff(&self, o: &Sym2) -> f64 {
        (self.m11 - o.m11)
            .abs()
            .max((self.m12 - o.m12).abs())
            .max((self.m22 - o.m22).abs())
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.m11 + o.m11, self.m12 + o.m12, self.m22 + o.m22)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.m11 - o.m11, self.m12 - o.m12, self.m22 - o.m22)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, s: f64) -> Sym2 {
        Sym2::new(self.m11 * s, self.m12 * s, self.m22 * s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SymEigen {
    /// Descending.
    pub values: [f64; 2],
    /// Unit eigenvector for `values[0]`; the other one is its left rotation.
    pub v1: Point,
}

impl SymEigen {
    pub fn v2(&self) -> Point {
        [-self.v1[1], self.v1[0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(s: &Svd2) -> Mat2 {
        let u = Mat2::from_cols(s.u[0], s.u[1]);
        let v = Mat2::from_cols(s.v[0], s.v[1]);
        u * Mat2([[s.sigma[0], 0.0], [0.0, s.sigma[1]]]) * v.transpose()
    }

    #[test]
    fn svd_reconstructs() {
        let cases = [
            Mat2([[3.0, 0.0], [0.0, 1.0]]),
            Mat2([[1.0, 2.0], [3.0, 4.0]]),
            Mat2([[0.0, -1.0], [1.0, 0.0]]),
            Mat2([[1e-6, 5.0], [0.0, 1e-3]]),
            Mat2([[2.0, 1.0], [2.0, 1.0]]),
        ];
        for m in cases {
            let s = m.svd();
            assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= 0.0);
            let r = reconstruct(&s);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((r.0[i][j] - m.0[i][j]).abs() < 1e-12, "{m:?} {r:?}");
                }
            }
            assert!((dot(s.u[0], s.u[1])).abs() < 1e-14);
            assert!((s.sigma[0] * s.sigma[1] - m.det().abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_eigen_roundtrip() {
        let m = Sym2::new(3.0, -1.5, 0.25);
        let e = m.eigen();
        assert!(e.values[0] >= e.values[1]);
        let back = Sym2::from_eigen(e.values, e.v1);
        assert!(back.max_abs_diff(&m) < 1e-14);
        let av = m.apply(e.v1);
        assert!((av[0] - e.values[0] * e.v1[0]).abs() < 1e-13);
    }

    #[test]
    fn log_exp_inverse() {
        let m = Sym2::new(4.0, 1.0, 2.0);
        assert!(m.log().exp().max_abs_diff(&m) < 1e-12);
        let inv = m.inverse().unwrap();
        let p = m.to_mat() * inv.to_mat();
        assert!((p.0[0][0] - 1.0).abs() < 1e-14 && p.0[0][1].abs() < 1e-14);
    }
}
