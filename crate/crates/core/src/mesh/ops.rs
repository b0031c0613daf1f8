//! The four local modifications: edge split, edge swap, vertex removal, vertex move.

use super::{next, prev, retriangulate::ear_clip, EdgeRef, Mesh, DEGENERACY_EPS, NONE};
use crate::linalg::{orient, signed_area, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum Rejected {
    #[error("operation would create a degenerate triangle")]
    Degenerate,
    #[error("operation would invert a triangle")]
    Inverted,
    #[error("edge is on the boundary")]
    BoundaryEdge,
    #[error("vertex is on the boundary")]
    BoundaryVertex,
    #[error("quadrilateral is not strictly convex")]
    NotConvex,
    #[error("split position must lie strictly inside the edge")]
    BadPlacement,
    #[error("boundary vertex would leave its straight boundary run")]
    OffBoundary,
    #[error("entity no longer exists")]
    Missing,
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub vertex: usize,
    /// The 2 or 4 triangles now covering the former edge patch.
    pub triangles: Vec<usize>,
}

impl Mesh {
    /// Splits edge `e` at `p + s (q - p)` where `(p, q) = edge_vertices(e)`.
    pub fn split_edge(&mut self, e: EdgeRef, s: f64) -> Result<SplitResult, Rejected> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Rejected::BadPlacement);
        }
        let t0 = e.tri;
        if !self.talive[t0] {
            return Err(Rejected::Missing);
        }
        let i0 = e.local as usize;
        let tri0 = self.tris[t0];
        let (c, p, q) = (tri0[i0], tri0[next(i0)], tri0[prev(i0)]);
        let (xp, xq) = (self.coords[p], self.coords[q]);
        let xm = [xp[0] + s * (xq[0] - xp[0]), xp[1] + s * (xq[1] - xp[1])];
        let t1 = self.tnbr[t0][i0];

        // degeneracy guard on all children
        let a0 = self.area(t0);
        let xc = self.coords[c];
        if signed_area(xc, xp, xm) <= DEGENERACY_EPS * a0 || signed_area(xc, xm, xq) <= DEGENERACY_EPS * a0 {
            return Err(Rejected::Degenerate);
        }
        let mut i1 = 0;
        let mut d = NONE;
        if t1 != NONE {
            i1 = self.tnbr[t1].iter().position(|&x| x == t0).expect("adjacency");
            d = self.tris[t1][i1];
            let a1 = self.area(t1);
            let xd = self.coords[d];
            if signed_area(xd, xq, xm) <= DEGENERACY_EPS * a1 || signed_area(xd, xm, xp) <= DEGENERACY_EPS * a1 {
                return Err(Rejected::Degenerate);
            }
        }

        let edge_mark = self.tmark[t0][i0];
        let m = self.push_vertex(xm, if t1 == NONE { edge_mark } else { 0 });
        let n0_cp = self.tnbr[t0][prev(i0)]; // across (c, p)
        let n0_qc = self.tnbr[t0][next(i0)]; // across (q, c)
        let k0_cp = self.tmark[t0][prev(i0)];
        let k0_qc = self.tmark[t0][next(i0)];

        let ta = self.push_tri([c, m, q], [NONE; 3], [0; 3]);
        let mut result = vec![t0, ta];
        if t1 == NONE {
            self.set_tri(t0, [c, p, m], [NONE, ta, n0_cp], [edge_mark, 0, k0_cp]);
            self.set_tri(ta, [c, m, q], [NONE, n0_qc, t0], [edge_mark, k0_qc, 0]);
        } else {
            let tri1 = self.tris[t1];
            debug_assert_eq!((tri1[next(i1)], tri1[prev(i1)]), (q, p));
            let n1_dq = self.tnbr[t1][prev(i1)]; // across (d, q)
            let n1_pd = self.tnbr[t1][next(i1)]; // across (p, d)
            let k1_dq = self.tmark[t1][prev(i1)];
            let k1_pd = self.tmark[t1][next(i1)];
            let tb = self.push_tri([d, m, p], [NONE; 3], [0; 3]);
            self.set_tri(t0, [c, p, m], [tb, ta, n0_cp], [0, 0, k0_cp]);
            self.set_tri(ta, [c, m, q], [t1, n0_qc, t0], [0, k0_qc, 0]);
            self.set_tri(t1, [d, q, m], [ta, tb, n1_dq], [0, 0, k1_dq]);
            self.set_tri(tb, [d, m, p], [t0, n1_pd, t1], [0, k1_pd, 0]);
            self.replace_nbr(n1_pd, t1, tb);
            self.set_vtri(d, t1);
            result.push(t1);
            result.push(tb);
        }
        self.replace_nbr(n0_qc, t0, ta);
        self.set_vtri(m, t0);
        self.set_vtri(c, t0);
        self.set_vtri(p, t0);
        self.set_vtri(q, ta);
        self.touch();
        self.debug_check_local(&self.with_edge_neighbors(&result));
        Ok(SplitResult { vertex: m, triangles: result })
    }

    /// Replaces the diagonal of the quadrilateral formed by the two triangles
    /// incident to `e`. Returns the new edge.
    pub fn swap_edge(&mut self, e: EdgeRef) -> Result<EdgeRef, Rejected> {
        let t0 = e.tri;
        if !self.talive[t0] {
            return Err(Rejected::Missing);
        }
        let i0 = e.local as usize;
        let t1 = self.tnbr[t0][i0];
        if t1 == NONE {
            return Err(Rejected::BoundaryEdge);
        }
        let i1 = self.tnbr[t1].iter().position(|&x| x == t0).expect("adjacency");
        let tri0 = self.tris[t0];
        let (c, p, q) = (tri0[i0], tri0[next(i0)], tri0[prev(i0)]);
        let d = self.tris[t1][i1];
        let (xc, xp, xq, xd) = (self.coords[c], self.coords[p], self.coords[q], self.coords[d]);
        let quad_area = self.area(t0) + self.area(t1);
        if signed_area(xc, xp, xd) <= DEGENERACY_EPS * quad_area
            || signed_area(xd, xq, xc) <= DEGENERACY_EPS * quad_area
        {
            return Err(Rejected::NotConvex);
        }
        let n_cp = self.tnbr[t0][prev(i0)];
        let n_qc = self.tnbr[t0][next(i0)];
        let n_dq = self.tnbr[t1][prev(i1)];
        let n_pd = self.tnbr[t1][next(i1)];
        let k_cp = self.tmark[t0][prev(i0)];
        let k_qc = self.tmark[t0][next(i0)];
        let k_dq = self.tmark[t1][prev(i1)];
        let k_pd = self.tmark[t1][next(i1)];
        self.set_tri(t0, [c, p, d], [n_pd, t1, n_cp], [k_pd, 0, k_cp]);
        self.set_tri(t1, [d, q, c], [n_qc, t0, n_dq], [k_qc, 0, k_dq]);
        self.replace_nbr(n_pd, t1, t0);
        self.replace_nbr(n_qc, t0, t1);
        self.set_vtri(p, t0);
        self.set_vtri(c, t0);
        self.set_vtri(d, t0);
        self.set_vtri(q, t1);
        self.touch();
        self.debug_check_local(&self.with_edge_neighbors(&[t0, t1]));
        // new edge (c, d) is opposite p in t0
        Ok(EdgeRef { tri: t0, local: 1 })
    }

    /// Removes an interior vertex and retriangulates the hole.
    /// Returns the new triangles.
    pub fn remove_vertex(&mut self, v: usize) -> Result<Vec<usize>, Rejected> {
        if !self.valive[v] {
            return Err(Rejected::Missing);
        }
        if self.vmark[v] != 0 {
            return Err(Rejected::BoundaryVertex);
        }
        let fan = self.vertex_patch(v);
        if !fan.closed {
            return Err(Rejected::BoundaryVertex);
        }
        let k = fan.ring.len();
        let poly: Vec<Point> = fan.ring.iter().map(|&r| self.coords[r]).collect();
        let hole_area: f64 = fan.triangles.iter().map(|&t| self.area(t)).sum();
        let min_area = DEGENERACY_EPS * hole_area;
        let local = ear_clip(&poly, min_area).ok_or(Rejected::Degenerate)?;
        debug_assert_eq!(local.len(), k - 2);

        // outer neighbor and marker of polygon edge (ring[j], ring[j+1])
        let mut outer = Vec::with_capacity(k);
        for &t in &fan.triangles {
            let i = self.local_index(t, v).expect("fan");
            outer.push((self.tnbr[t][i], self.tmark[t][i]));
        }
        let slots: Vec<usize> = fan.triangles[..k - 2].to_vec();
        for &t in &fan.triangles[k - 2..] {
            self.kill_tri(t);
        }
        self.kill_vertex(v);

        // local adjacency among the new triangles by polygon-index edges
        let mut nbrs = vec![[NONE; 3]; local.len()];
        let mut marks = vec![[0i32; 3]; local.len()];
        for (a, ta) in local.iter().enumerate() {
            for ia in 0..3 {
                let (x, y) = (ta[next(ia)], ta[prev(ia)]);
                if (x + 1) % k == y {
                    let (n, mk) = outer[x];
                    nbrs[a][ia] = n;
                    marks[a][ia] = mk;
                    continue;
                }
                for (b, tb) in local.iter().enumerate() {
                    if b == a {
                        continue;
                    }
                    for ib in 0..3 {
                        if tb[next(ib)] == y && tb[prev(ib)] == x {
                            nbrs[a][ia] = slots[b];
                        }
                    }
                }
            }
        }
        for (a, ta) in local.iter().enumerate() {
            let verts = ta.map(|x| fan.ring[x]);
            self.set_tri(slots[a], verts, nbrs[a], marks[a]);
        }
        // outer triangles pointing into the old fan
        for (a, ta) in local.iter().enumerate() {
            for ia in 0..3 {
                let (x, y) = (ta[next(ia)], ta[prev(ia)]);
                if (x + 1) % k == y {
                    let (n, _) = outer[x];
                    if n != NONE {
                        self.set_nbr_across(n, fan.ring[x], fan.ring[y], slots[a]);
                    }
                }
            }
        }
        for (a, ta) in local.iter().enumerate() {
            for &x in ta {
                self.set_vtri(fan.ring[x], slots[a]);
            }
        }
        self.touch();
        self.debug_check_local(&self.with_edge_neighbors(&slots));
        Ok(slots)
    }

    /// Moves a vertex; rejected if any incident triangle would lose orientation.
    /// Boundary vertices may only slide along a straight boundary run, so
    /// corners and bends stay fixed and the domain is preserved.
    pub fn move_vertex(&mut self, v: usize, to: Point) -> Result<(), Rejected> {
        if !self.valive[v] {
            return Err(Rejected::Missing);
        }
        if to == self.coords[v] {
            return Ok(());
        }
        if self.vmark[v] != 0 {
            let (a, b) = self.boundary_slide_range(v).ok_or(Rejected::OffBoundary)?;
            let (xa, xb) = (self.coords[a], self.coords[b]);
            let len = crate::linalg::dist(xa, xb);
            if orient(xa, to, xb).abs() > 1e-12 * len * len {
                return Err(Rejected::OffBoundary);
            }
        }
        let fan = self.vertex_patch(v);
        for &t in &fan.triangles {
            let i = self.local_index(t, v).expect("fan");
            let tri = self.tris[t];
            let (a, b) = (self.coords[tri[next(i)]], self.coords[tri[prev(i)]]);
            let old = self.area(t);
            if 0.5 * orient(to, a, b) <= DEGENERACY_EPS * old {
                return Err(Rejected::Inverted);
            }
        }
        self.set_point(v, to);
        self.touch();
        self.debug_check_local(&fan.triangles);
        Ok(())
    }

    /// For a boundary vertex on a straight boundary run, its two boundary
    /// neighbors; `None` for interior vertices and corners.
    pub fn boundary_slide_range(&self, v: usize) -> Option<(usize, usize)> {
        if self.vmark[v] == 0 {
            return None;
        }
        let fan = self.vertex_patch(v);
        if fan.closed {
            return None;
        }
        let first = fan.triangles[0];
        let last = *fan.triangles.last().expect("non-empty fan");
        let i_first = self.local_index(first, v)?;
        let i_last = self.local_index(last, v)?;
        // boundary edge (v, ring[0]) is opposite prev-of-... in `first`
        let m0 = self.tmark[first][prev(i_first)];
        let m1 = self.tmark[last][next(i_last)];
        if m0 != m1 {
            return None;
        }
        let a = fan.ring[0];
        let b = *fan.ring.last().expect("non-empty ring");
        let (xa, xb, xv) = (self.coords[a], self.coords[b], self.coords[v]);
        let len = crate::linalg::dist(xa, xb);
        if orient(xa, xv, xb).abs() > 1e-12 * len * len {
            return None;
        }
        Some((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, Diagonal};

    fn two_triangles() -> Mesh {
        // unit square cut by (0,0)-(1,1)
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        Mesh::new(coords, vec![[0, 1, 2], [0, 2, 3]], &[]).unwrap()
    }

    #[test]
    fn split_interior_edge_conserves_area() {
        let mut m = two_triangles();
        let e = m.find_edge(0, 2).unwrap();
        let r = m.split_edge(e, 0.5).unwrap();
        assert_eq!(m.num_triangles(), 4);
        assert_eq!(r.triangles.len(), 4);
        assert!(!m.is_boundary_vertex(r.vertex));
        assert_eq!(m.point(r.vertex), [0.5, 0.5]);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        m.check().unwrap();
    }

    #[test]
    fn split_boundary_edge_marks_vertex() {
        let mut m = two_triangles();
        let e = m.find_edge(0, 1).unwrap();
        let mark = m.edge_marker(e.tri, e.local as usize);
        let r = m.split_edge(e, 0.5).unwrap();
        assert_eq!(m.num_triangles(), 3);
        assert_eq!(m.vertex_marker(r.vertex), mark);
        m.check().unwrap();
    }

    #[test]
    fn split_rejects_bad_placement() {
        let mut m = two_triangles();
        let e = m.find_edge(0, 2).unwrap();
        assert_eq!(m.split_edge(e, 0.0).unwrap_err(), Rejected::BadPlacement);
        assert_eq!(m.split_edge(e, 1e-12).unwrap_err(), Rejected::Degenerate);
        assert_eq!(m.num_triangles(), 2);
    }

    #[test]
    fn red_refinement_quadruples() {
        let mut m = unit_square(2, 2, Diagonal::Right);
        let original: Vec<(usize, usize)> = m.edges().map(|e| m.edge_vertices(e)).collect();
        let nt = m.num_triangles();
        for (a, b) in original {
            let e = m.find_edge(a, b).unwrap();
            m.split_edge(e, 0.5).unwrap();
        }
        // every original edge split once: 3 new vertices per original triangle edge set
        // enumeration on n=2: 8 triangles, 16 edges, 9 vertices -> 25 vertices
        assert_eq!(m.num_vertices(), 25);
        // swap the inner diagonals of each original triangle into red pattern
        // is not needed for the count: each triangle with all edges split
        // contains 4 sub-triangles
        assert_eq!(m.num_triangles(), 4 * nt);
        m.check().unwrap();
    }

    #[test]
    fn swap_unit_square_and_back() {
        let mut m = two_triangles();
        let e = m.find_edge(0, 2).unwrap();
        let ne = m.swap_edge(e).unwrap();
        let (a, b) = m.edge_vertices(ne);
        assert_eq!((a.min(b), a.max(b)), (1, 3));
        assert!(m.find_edge(0, 2).is_none());
        m.check().unwrap();
        m.swap_edge(ne).unwrap();
        assert!(m.find_edge(0, 2).is_some());
        assert!(m.find_edge(1, 3).is_none());
        assert!((m.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn swap_rejects_kite_and_boundary() {
        // triangles (0,1,2), (0,2,3) where 2 makes the quad non-convex at 0
        let coords = vec![[0.0, 0.0], [2.0, -1.0], [1.0, 0.0], [2.0, 1.0]];
        let mut m = Mesh::new(coords, vec![[0, 1, 2], [0, 2, 3]], &[]).unwrap();
        let e = m.find_edge(0, 2).unwrap();
        assert_eq!(m.swap_edge(e).unwrap_err(), Rejected::NotConvex);
        let b = m.find_edge(0, 1).unwrap();
        assert_eq!(m.swap_edge(b).unwrap_err(), Rejected::BoundaryEdge);
    }

    #[test]
    fn remove_valence_three_and_k() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, 0.4]];
        let mut m = Mesh::new(coords, vec![[0, 1, 3], [1, 2, 3], [2, 0, 3]], &[]).unwrap();
        let new = m.remove_vertex(3).unwrap();
        assert_eq!(new.len(), 1);
        assert_eq!(m.num_triangles(), 1);
        m.check().unwrap();

        let mut g = unit_square(4, 4, Diagonal::Right);
        let v = g.vertices().find(|&v| !g.is_boundary_vertex(v)).unwrap();
        let k = g.vertex_patch(v).triangles.len();
        let (nv, nt) = (g.num_vertices(), g.num_triangles());
        let new = g.remove_vertex(v).unwrap();
        assert_eq!(new.len(), k - 2);
        assert_eq!(g.num_triangles(), nt - 2);
        assert_eq!(g.num_vertices(), nv - 1);
        assert!((g.total_area() - 1.0).abs() < 1e-14);
        g.check().unwrap();
    }

    #[test]
    fn remove_vertex_with_nonconvex_patch() {
        // L-shaped link polygon around an interior vertex at (0.5, 0.5)
        let coords = vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
            [0.5, 0.5],
        ];
        let c = 6;
        let tris = (0..6).map(|j| [j, (j + 1) % 6, c]).collect();
        let mut m = Mesh::new(coords, tris, &[]).unwrap();
        let new = m.remove_vertex(c).unwrap();
        assert_eq!(new.len(), 4);
        for &t in &new {
            assert!(m.area(t) > 0.0);
        }
        assert!((m.total_area() - 3.0).abs() < 1e-14);
        m.check().unwrap();
    }

    #[test]
    fn boundary_vertices_only_slide() {
        let mut m = unit_square(2, 2, Diagonal::Right);
        let side = m.vertices().find(|&v| m.point(v) == [0.5, 0.0]).unwrap();
        let corner = m.vertices().find(|&v| m.point(v) == [0.0, 0.0]).unwrap();
        assert_eq!(m.move_vertex(side, [0.5, 0.1]).unwrap_err(), Rejected::OffBoundary);
        assert_eq!(m.move_vertex(corner, [0.1, 0.0]).unwrap_err(), Rejected::OffBoundary);
        m.move_vertex(side, [0.4, 0.0]).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        m.check().unwrap();
    }

    #[test]
    fn remove_boundary_rejected() {
        let mut m = unit_square(2, 2, Diagonal::Right);
        assert_eq!(m.remove_vertex(0).unwrap_err(), Rejected::BoundaryVertex);
    }

    #[test]
    fn move_identity_outside_and_centroid() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.3, 0.6]];
        let tris = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        let mut m = Mesh::new(coords, tris, &[]).unwrap();
        let before = m.clone();
        m.move_vertex(4, [0.3, 0.6]).unwrap();
        assert_eq!(m.points(), before.points());
        assert_eq!(m.move_vertex(4, [1.5, 0.5]).unwrap_err(), Rejected::Inverted);
        m.move_vertex(4, [0.5, 0.5]).unwrap();
        for t in m.triangles() {
            assert!((m.area(t) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn rollback_restores_exactly() {
        let mut m = unit_square(4, 4, Diagonal::Right);
        let snapshot = m.clone();
        m.begin();
        let e = m.edges().nth(7).unwrap();
        m.split_edge(e, 0.5).unwrap();
        let e = m.edges().find(|&e| !m.is_boundary_edge(e)).unwrap();
        let _ = m.swap_edge(e);
        let v = m.vertices().find(|&v| !m.is_boundary_vertex(v)).unwrap();
        m.remove_vertex(v).unwrap();
        m.rollback();
        assert_eq!(m.points(), snapshot.points());
        assert_eq!(m.num_triangles(), snapshot.num_triangles());
        for t in m.triangles() {
            assert_eq!(m.triangle(t), snapshot.triangle(t));
            assert_eq!(m.neighbors(t), snapshot.neighbors(t));
        }
        assert_eq!(m.stamp(), snapshot.stamp());
        m.check().unwrap();
    }

    #[test]
    fn slide_range_on_straight_boundary() {
        let m = unit_square(3, 3, Diagonal::Right);
        for v in m.vertices() {
            let p = m.point(v);
            let corner = (p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0);
            let r = m.boundary_slide_range(v);
            if !m.is_boundary_vertex(v) || corner {
                assert!(r.is_none());
            } else {
                assert!(r.is_some(), "vertex {v} at {p:?}");
            }
        }
    }
}
