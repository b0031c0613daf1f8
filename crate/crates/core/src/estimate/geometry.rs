use crate::linalg::{dist, Mat2, Point};

/// Area of the reference equilateral triangle with vertices
/// `(0, 1)`, `(-sqrt(3)/2, -1/2)`, `(sqrt(3)/2, -1/2)`.
pub const REFERENCE_AREA: f64 = 1.299_038_105_676_658; // 3 sqrt(3) / 4

const S3_2: f64 = 0.866_025_403_784_438_6;

/// Inverse of the matrix whose columns are `v1 - v0`, `v2 - v0` for the reference vertices.
fn reference_edge_inverse() -> Mat2 {
    Mat2::from_cols([-S3_2, -1.5], [S3_2, -1.5]).inverse().expect("reference triangle is non-degenerate")
}

/// Singular value data of the affine map from the reference triangle onto an element.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementGeometry {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Left singular direction for `lambda1`.
    pub r1: Point,
    pub r2: Point,
    /// Longest edge.
    pub h: f64,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("degenerate triangle (area {0:e})")]
pub struct DegenerateElement(pub f64);

/// Jacobian of the affine map sending the reference vertices to `p` (in order).
pub fn reference_jacobian(p: &[Point; 3]) -> Mat2 {
    let e = Mat2::from_cols([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
    e * reference_edge_inverse()
}

pub fn element_geometry(p: &[Point; 3]) -> Result<ElementGeometry, DegenerateElement> {
    let j = reference_jacobian(p);
    let det = j.det();
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    if !(area.abs() > 0.0) || !det.is_finite() {
        return Err(DegenerateElement(area));
    }
    let svd = j.svd();
    let lambda1 = svd.sigma[0];
    // exact product: lambda1 * lambda2 = |det J|
    let lambda2 = det.abs() / lambda1;
    let h = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
    Ok(ElementGeometry { lambda1, lambda2, r1: svd.u[0], r2: svd.u[1], h, area: area.abs() })
}
