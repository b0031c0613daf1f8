use super::from_barycentric;
use crate::linalg::{signed_area, Point};

/// Quadrature rule on a triangle in barycentric coordinates. Weights sum to
/// one and are scaled by the element area when applied.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: u32,
    /// Number of uniform quadrisections applied to the base rule.
    pub level: u32,
}

const D5_A1: f64 = 0.059_715_871_789_769_82;
const D5_B1: f64 = 0.470_142_064_105_115_1;
const D5_A2: f64 = 0.797_426_985_353_087_3;
const D5_B2: f64 = 0.101_286_507_323_456_3;
const D5_W1: f64 = 0.132_394_152_788_506_2;
const D5_W2: f64 = 0.125_939_180_544_827_1;

impl QuadratureRule {
    /// One-point centroid rule.
    pub fn barycenter() -> Self {
        QuadratureRule { points: vec![[1.0 / 3.0; 3]], weights: vec![1.0], degree: 1, level: 0 }
    }

    /// Seven-point rule exact for degree 5.
    pub fn degree5() -> Self {
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![0.225];
        for (a, b, w) in [(D5_A1, D5_B1, D5_W1), (D5_A2, D5_B2, D5_W2)] {
            points.extend([[a, b, b], [b, a, b], [b, b, a]]);
            weights.extend([w; 3]);
        }
        QuadratureRule { points, weights, degree: 5, level: 0 }
    }

    /// Three edge-midpoint rule, exact for degree 2.
    pub fn edge_midpoints() -> Self {
        QuadratureRule {
            points: vec![[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
            level: 0,
        }
    }

    /// The rule applied on each of the `4^level` subtriangles of a uniform
    /// quadrisection, each copy weighted by `1/4^level`.
    pub fn subdivided(&self, level: u32) -> Self {
        let n = 1usize << level;
        let nf = n as f64;
        let scale = 1.0 / (n * n) as f64;
        let mut points = Vec::with_capacity(self.points.len() * n * n);
        let mut weights = Vec::with_capacity(points.capacity());
        // subtriangles in (xi, eta) = (b1, b2) coordinates
        let mut push = |c: [[f64; 2]; 3]| {
            for (b, &w) in self.points.iter().zip(&self.weights) {
                let xi = b[0] * c[0][0] + b[1] * c[1][0] + b[2] * c[2][0];
                let eta = b[0] * c[0][1] + b[1] * c[1][1] + b[2] * c[2][1];
                points.push([1.0 - xi - eta, xi, eta]);
                weights.push(w * scale);
            }
        };
        for j in 0..n {
            for i in 0..n - j {
                let (x, y) = (i as f64 / nf, j as f64 / nf);
                let h = 1.0 / nf;
                push([[x, y], [x + h, y], [x, y + h]]);
                if i + j + 1 < n {
                    push([[x + h, y], [x + h, y + h], [x, y + h]]);
                }
            }
        }
        QuadratureRule { points, weights, degree: self.degree, level: self.level + level }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Applies `rule` to `f` on the triangle `p`.
pub fn integrate(rule: &QuadratureRule, p: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
    let area = signed_area(p[0], p[1], p[2]);
    let s: f64 = rule.points.iter().zip(&rule.weights).map(|(b, w)| w * f(from_barycentric(p, *b))).sum();
    s * area
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuadError {
    #[error("integrand is not finite at ({0}, {1})")]
    NonFinite(f64, f64),
}

/// Result of the subdivided centroid quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdividedIntegral {
    pub value: f64,
    /// Finest level evaluated (1, 2 or 3).
    pub level: u32,
}

pub const MAX_SUBDIVISION: u32 = 3;

/// Integrates `f` with the centroid rule on successively quadrisected
/// triangles. Always goes to level 1; continues while the relative change
/// between consecutive levels exceeds `eps`, up to level 3.
pub fn integrate_subdivided(
    p: &[Point; 3],
    eps: f64,
    f: impl Fn(Point) -> f64,
) -> Result<SubdividedIntegral, QuadError> {
    let area = signed_area(p[0], p[1], p[2]);
    let level_sum = |level: u32| -> Result<f64, QuadError> {
        let n = 1usize << level;
        let nf = n as f64;
        let mut s = 0.0;
        let mut eval = |xi: f64, eta: f64| -> Result<(), QuadError> {
            let x = from_barycentric(p, [1.0 - xi - eta, xi, eta]);
            let v = f(x);
            if !v.is_finite() {
                return Err(QuadError::NonFinite(x[0], x[1]));
            }
            s += v;
            Ok(())
        };
        for j in 0..n {
            for i in 0..n - j {
                eval((i as f64 + 1.0 / 3.0) / nf, (j as f64 + 1.0 / 3.0) / nf)?;
                if i + j + 1 < n {
                    eval((i as f64 + 2.0 / 3.0) / nf, (j as f64 + 2.0 / 3.0) / nf)?;
                }
            }
        }
        Ok(s * area / (n * n) as f64)
    };
    let mut prev = level_sum(0)?;
    let mut level = 1;
    loop {
        let cur = level_sum(level)?;
        let converged = if cur == 0.0 { prev == 0.0 } else { ((cur - prev) / cur).abs() <= eps };
        if converged || level == MAX_SUBDIVISION {
            return Ok(SubdividedIntegral { value: cur, level });
        }
        prev = cur;
        level += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Point; 3] {
        [[0.2, 0.1], [1.1, 0.3], [0.4, 0.9]]
    }

    #[test]
    fn weights_sum_to_one() {
        for r in [QuadratureRule::barycenter(), QuadratureRule::degree5(), QuadratureRule::edge_midpoints()] {
            for l in 0..4 {
                let s = r.subdivided(l);
                assert_eq!(s.len(), r.len() * 4usize.pow(l));
                assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                for b in &s.points {
                    assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                    assert!(b.iter().all(|&c| c > -1e-15));
                }
            }
        }
    }

    #[test]
    fn degree5_exact_on_monomials() {
        // on the unit right triangle: int x^a y^b = a! b! / (a+b+2)!
        let p = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        let r = QuadratureRule::degree5();
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q = integrate(&r, &p, |x| x[0].powi(a as i32) * x[1].powi(b as i32));
                assert!((q - exact).abs() < 1e-14, "x^{a} y^{b}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn subdivided_centroid_matches_rule_table() {
        let p = tri();
        let f = |x: Point| (3.0 * x[0]).sin() * x[1].exp();
        for l in 0..4 {
            let table = integrate(&QuadratureRule::barycenter().subdivided(l), &p, f);
            let n = 1usize << l;
            let mut count = 0;
            let total = {
                let mut s = 0.0;
                for j in 0..n {
                    for i in 0..n - j {
                        let c = [(i as f64 + 1.0 / 3.0) / n as f64, (j as f64 + 1.0 / 3.0) / n as f64];
                        s += f(from_barycentric(&p, [1.0 - c[0] - c[1], c[0], c[1]]));
                        count += 1;
                        if i + j + 1 < n {
                            let c = [(i as f64 + 2.0 / 3.0) / n as f64, (j as f64 + 2.0 / 3.0) / n as f64];
                            s += f(from_barycentric(&p, [1.0 - c[0] - c[1], c[0], c[1]]));
                            count += 1;
                        }
                    }
                }
                s * signed_area(p[0], p[1], p[2]) / (n * n) as f64
            };
            assert_eq!(count, 4usize.pow(l));
            assert!((table - total).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_stops_after_first_subdivision() {
        let p = tri();
        let r = integrate_subdivided(&p, 0.05, |_| 4.0).unwrap();
        assert_eq!(r.level, 1);
        assert!((r.value - 4.0 * signed_area(p[0], p[1], p[2])).abs() < 1e-14);
        let z = integrate_subdivided(&p, 0.05, |_| 0.0).unwrap();
        assert_eq!(z, SubdividedIntegral { value: 0.0, level: 1 });
    }

    #[test]
    fn non_finite_is_error() {
        assert!(integrate_subdivided(&tri(), 0.05, |_| f64::NAN).is_err());
    }

    #[test]
    fn steep_integrand_goes_deeper() {
        let p = tri();
        let r = integrate_subdivided(&p, 0.05, |x| (-(50.0 * (x[0] - 0.5)).powi(2)).exp()).unwrap();
        assert!(r.level >= 2);
    }
}
