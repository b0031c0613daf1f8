use crate::linalg::{orient, Point};

/// Triangulates a simple counterclockwise polygon by ear clipping.
///
/// At each step the valid ear with the best shape (area over the sum of
/// squared edge lengths) is clipped. Returns index triples into `poly`, or
/// `None` if no ear with area above `min_area` exists at some step.
pub fn ear_clip(poly: &[Point], min_area: f64) -> Option<Vec<[usize; 3]>> {
    let n = poly.len();
    if n < 3 {
        return None;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let mut best: Option<(usize, f64)> = None;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            let area2 = orient(a, b, c);
            if 0.5 * area2 <= min_area {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != ia && j != ib && j != ic && point_in_closed_triangle(poly[j], a, b, c)
            });
            if blocked {
                continue;
            }
            let q = area2 / (sq(a, b) + sq(b, c) + sq(c, a));
            if best.map_or(true, |(_, bq)| q > bq) {
                best = Some((k, q));
            }
        }
        let (k, _) = best?;
        let m = idx.len();
        out.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
        idx.remove(k);
    }
    let (a, b, c) = (poly[idx[0]], poly[idx[1]], poly[idx[2]]);
    if 0.5 * orient(a, b, c) <= min_area {
        return None;
    }
    out.push([idx[0], idx[1], idx[2]]);
    Some(out)
}

fn sq(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn point_in_closed_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}
