use super::Mesh;

pub const MARK_BOTTOM: i32 = 1;
pub const MARK_RIGHT: i32 = 2;
pub const MARK_TOP: i32 = 3;
pub const MARK_LEFT: i32 = 4;

/// Diagonal used to cut each grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagonal {
    /// lower-left to upper-right
    Right,
    /// lower-right to upper-left
    Left,
}

/// Uniform `nx` x `ny` right-triangle mesh of the unit square ("parallel" pattern).
pub fn unit_square(nx: usize, ny: usize, diagonal: Diagonal) -> Mesh {
    grid(nx, ny, |_, _| diagonal)
}

/// Chevron pattern: the diagonal direction alternates between columns.
pub fn unit_square_chevron(nx: usize, ny: usize) -> Mesh {
    grid(nx, ny, |i, _| if i % 2 == 0 { Diagonal::Right } else { Diagonal::Left })
}

fn grid(nx: usize, ny: usize, diag: impl Fn(usize, usize) -> Diagonal) -> Mesh {
    assert!(nx > 0 && ny > 0);
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            coords.push([i as f64 / nx as f64, j as f64 / ny as f64]);
        }
    }
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            match diag(i, j) {
                Diagonal::Right => {
                    tris.push([a, b, c]);
                    tris.push([a, c, d]);
                }
                Diagonal::Left => {
                    tris.push([a, b, d]);
                    tris.push([b, c, d]);
                }
            }
        }
    }
    let mut bnd = Vec::new();
    for i in 0..nx {
        bnd.push((id(i, 0), id(i + 1, 0), MARK_BOTTOM));
        bnd.push((id(i, ny), id(i + 1, ny), MARK_TOP));
    }
    for j in 0..ny {
        bnd.push((id(nx, j), id(nx, j + 1), MARK_RIGHT));
        bnd.push((id(0, j), id(0, j + 1), MARK_LEFT));
    }
    Mesh::new(coords, tris, &bnd).expect("grid mesh is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_area() {
        let m = unit_square(10, 10, Diagonal::Right);
        assert_eq!(m.num_vertices(), 121);
        assert_eq!(m.num_triangles(), 200);
        assert!((m.total_area() - 1.0).abs() < 1e-14);
        let c = unit_square_chevron(4, 3);
        assert_eq!(c.num_triangles(), 24);
        assert!((c.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_loop_is_closed() {
        let m = unit_square(5, 3, Diagonal::Left);
        let bnd: Vec<_> = m.edges().filter(|&e| m.is_boundary_edge(e)).collect();
        assert_eq!(bnd.len(), 16);
        let mut degree = vec![0; m.vertex_capacity()];
        for e in bnd {
            let (a, b) = m.edge_vertices(e);
            degree[a] += 1;
            degree[b] += 1;
        }
        assert!(degree.iter().all(|&d| d == 0 || d == 2));
    }
}
