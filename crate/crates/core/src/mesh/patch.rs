use super::{next, prev, EdgeRef, Mesh, NONE};

/// Triangles incident to an edge and the triangles sharing an edge with them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePatch {
    pub edge: EdgeRef,
    /// One triangle for a boundary edge, two otherwise.
    pub incident: Vec<usize>,
    /// Edge-neighbors of `incident`, excluding `incident` itself.
    pub extended: Vec<usize>,
}

/// Fan of triangles around a vertex, counterclockwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPatch {
    pub vertex: usize,
    pub triangles: Vec<usize>,
    /// Link polygon, counterclockwise. For an open (boundary) fan it has one
    /// more vertex than `triangles` and starts and ends on the boundary.
    pub ring: Vec<usize>,
    pub closed: bool,
}

impl Mesh {
    /// Counterclockwise fan around `v`.
    pub fn vertex_patch(&self, v: usize) -> VertexPatch {
        let start = self.vtri[v];
        debug_assert!(start != NONE && self.talive[start]);
        // rotate clockwise to the boundary (or all the way round)
        let mut t0 = start;
        let mut closed = false;
        loop {
            let i = self.local_index(t0, v).expect("vertex not in its triangle");
            let cw = self.tnbr[t0][prev(i)];
            if cw == NONE {
                break;
            }
            if cw == start {
                closed = true;
                break;
            }
            t0 = cw;
        }
        let first = if closed { start } else { t0 };
        let mut triangles = Vec::with_capacity(8);
        let mut ring = Vec::with_capacity(9);
        let mut t = first;
        loop {
            let i = self.local_index(t, v).expect("vertex not in its triangle");
            triangles.push(t);
            ring.push(self.tris[t][next(i)]);
            let ccw = self.tnbr[t][next(i)];
            if ccw == NONE {
                ring.push(self.tris[t][prev(i)]);
                break;
            }
            if ccw == first {
                break;
            }
            t = ccw;
        }
        VertexPatch { vertex: v, triangles, ring, closed }
    }

    /// Vertices sharing an edge with `v`.
    pub fn vertex_neighbors(&self, v: usize) -> Vec<usize> {
        self.vertex_patch(v).ring
    }

    /// Finds the edge `(a, b)` if it exists, as seen from a triangle containing it.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<EdgeRef> {
        if a >= self.coords.len() || !self.valive[a] || !self.valive[b] {
            return None;
        }
        // walk the fan of `a` in both directions
        let start = self.vtri[a];
        let mut t = start;
        loop {
            let i = self.local_index(t, a)?;
            for j in [next(i), prev(i)] {
                if self.tris[t][j] == b {
                    // edge (a, b) is opposite the third vertex
                    let k = 3 - i - j;
                    return Some(EdgeRef { tri: t, local: k as u8 });
                }
            }
            let ccw = self.tnbr[t][next(i)];
            if ccw == NONE || ccw == start {
                break;
            }
            t = ccw;
        }
        let mut t = start;
        loop {
            let i = self.local_index(t, a)?;
            let cw = self.tnbr[t][prev(i)];
            if cw == NONE || cw == start {
                return None;
            }
            t = cw;
            let i = self.local_index(t, a)?;
            for j in [next(i), prev(i)] {
                if self.tris[t][j] == b {
                    let k = 3 - i - j;
                    return Some(EdgeRef { tri: t, local: k as u8 });
                }
            }
        }
    }

    pub fn edge_patch(&self, e: EdgeRef) -> EdgePatch {
        let mut incident = vec![e.tri];
        if let Some(tw) = self.twin(e) {
            incident.push(tw.tri);
        }
        let mut extended = Vec::with_capacity(4);
        for &t in &incident {
            for &n in &self.tnbr[t] {
                if n != NONE && !incident.contains(&n) && !extended.contains(&n) {
                    extended.push(n);
                }
            }
        }
        EdgePatch { edge: e, incident, extended }
    }

    /// Union of the given triangles and all their edge-neighbors.
    pub fn with_edge_neighbors(&self, tris: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = tris.to_vec();
        for &t in tris {
            for &n in &self.tnbr[t] {
                if n != NONE && !out.contains(&n) {
                    out.push(n);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::mesh::{unit_square, Diagonal};

    #[test]
    fn interior_edge_patch_has_two_plus_four() {
        let m = unit_square(4, 4, Diagonal::Right);
        let mut seen_interior = false;
        for e in m.edges() {
            let p = m.edge_patch(e);
            if m.is_boundary_edge(e) {
                assert_eq!(p.incident.len(), 1);
            } else {
                assert_eq!(p.incident.len(), 2);
                assert!(p.extended.len() <= 4);
                let (a, b) = m.edge_vertices(e);
                let interior = !m.is_boundary_vertex(a) && !m.is_boundary_vertex(b);
                if interior {
                    // both opposite-free edges are interior too
                    seen_interior = true;
                    assert_eq!(p.extended.len(), 4);
                }
            }
        }
        assert!(seen_interior);
    }

    #[test]
    fn corner_fans() {
        let m = unit_square(3, 3, Diagonal::Right);
        let mut sizes = Vec::new();
        for v in m.vertices() {
            let p = [m.point(v)[0], m.point(v)[1]];
            let corner = (p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0);
            if corner {
                let fan = m.vertex_patch(v);
                assert!(!fan.closed);
                assert_eq!(fan.ring.len(), fan.triangles.len() + 1);
                sizes.push(fan.triangles.len());
            }
        }
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 2, 2]);
    }

    #[test]
    fn interior_fan_is_closed_and_ccw() {
        let m = unit_square(4, 4, Diagonal::Right);
        for v in m.vertices().filter(|&v| !m.is_boundary_vertex(v)) {
            let fan = m.vertex_patch(v);
            assert!(fan.closed);
            assert_eq!(fan.ring.len(), fan.triangles.len());
            for (k, &t) in fan.triangles.iter().enumerate() {
                let tri = m.triangle(t);
                assert!(tri.contains(&fan.ring[k]));
                assert!(tri.contains(&fan.ring[(k + 1) % fan.ring.len()]));
            }
        }
    }

    #[test]
    fn find_edge_both_ways() {
        let m = unit_square(3, 3, Diagonal::Left);
        for e in m.edges() {
            let (a, b) = m.edge_vertices(e);
            let f = m.find_edge(a, b).unwrap();
            let (c, d) = m.edge_vertices(f);
            assert!((c, d) == (a, b) || (c, d) == (b, a));
            assert!(m.find_edge(b, a).is_some());
        }
    }
}
