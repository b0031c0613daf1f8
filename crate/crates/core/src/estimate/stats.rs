use std::io::{self, Write};

use super::residual::Estimates;
use crate::fem::ErrorNorms;
use crate::mesh::Mesh;

/// Mean and (population) standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Linear-interpolated percentile, `q` in `[0, 100]`.
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = (q / 100.0).clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

/// Ratios `estimate / exact`, skipping elements with zero exact error.
pub fn local_effectivity(estimate: &[f64], exact: &[f64]) -> Vec<f64> {
    estimate.iter().zip(exact).filter(|(_, &e)| e > 0.0).map(|(a, e)| a / e).collect()
}

/// Standard deviation of `log10(eta_K / (tol / sqrt(N_T)))`.
pub fn normalized_log_std(etas: &[f64], tol: f64) -> f64 {
    let target = tol / (etas.len() as f64).sqrt();
    let logs: Vec<f64> = etas.iter().filter(|&&e| e > 0.0).map(|e| (e / target).log10()).collect();
    mean_std(&logs).1
}

/// Values of a per-slot vector on live triangles, in slot order.
pub fn live_values(mesh: &Mesh, v: &[f64]) -> Vec<f64> {
    mesh.triangles().map(|t| v[t]).collect()
}

/// Per-element estimate dump. Exact error columns are empty when unknown.
pub fn write_estimates_csv(
    mesh: &Mesh,
    est: &Estimates,
    exact: Option<&ErrorNorms>,
    out: &mut impl Write,
) -> io::Result<()> {
    writeln!(out, "K,area,lambda1,lambda2,resid,jump,omega,eta,eta_scaled,exact_h1,exact_l2")?;
    for (k, t) in mesh.triangles().enumerate() {
        let e = &est.elems[t];
        let (h1, l2) = match exact {
            Some(x) => (format!("{:e}", x.element_h1[t]), format!("{:e}", x.element_l2[t])),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{k},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{h1},{l2}",
            e.geom.area, e.geom.lambda1, e.geom.lambda2, e.resid, e.jump, e.omega, e.eta, e.eta_scaled
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_stats() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 50.0), 2.0);
        assert_eq!(percentile(&[0.0, 10.0], 25.0), 2.5);
        assert_eq!(local_effectivity(&[1.0, 2.0], &[1.0, 0.0]), vec![1.0]);
    }

    #[test]
    fn equidistributed_has_zero_spread() {
        let n = 16;
        let etas = vec![0.5 / (n as f64).sqrt(); n];
        assert!(normalized_log_std(&etas, 0.5) < 1e-14);
    }
}
