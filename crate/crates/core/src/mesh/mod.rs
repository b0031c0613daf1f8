//! Conforming triangle mesh with triangle adjacency and journaled local edits.
//!
//! Triangles store their three vertices counterclockwise and, for each local
//! vertex `i`, the neighbor across the opposite edge (`tri[i+1]`, `tri[i+2]`).
//! Removed entities are tombstoned; [`Mesh::compact`] renumbers everything.
//!
//! Edits can be made tentative with [`Mesh::begin`]; [`Mesh::rollback`] then
//! restores the exact prior state, [`Mesh::commit`] keeps it.

mod generate;
mod io;
mod ops;
mod patch;
mod retriangulate;

pub use generate::{unit_square, unit_square_chevron, Diagonal, MARK_BOTTOM, MARK_LEFT, MARK_RIGHT, MARK_TOP};
pub use io::{read_ascii, write_ascii, write_ascii_with_metric, write_vtk, MeshIoError};
pub use ops::{Rejected, SplitResult};
pub use patch::{EdgePatch, VertexPatch};
pub use retriangulate::ear_clip;

use crate::linalg::{dist, signed_area, Point};

pub const NONE: usize = usize::MAX;

/// Relative area below which a produced triangle counts as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-10;

/// Handle of an edge as seen from one triangle: edge opposite local vertex `local`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeRef {
    pub tri: usize,
    pub local: u8,
}

#[derive(Debug, Clone)]
enum Entry {
    Tri { t: usize, verts: [usize; 3], nbr: [usize; 3], mark: [i32; 3], alive: bool },
    Vert { v: usize, pos: Point, tri: usize, mark: i32, alive: bool },
}

#[derive(Debug, Clone)]
struct Journal {
    entries: Vec<Entry>,
    n_verts: usize,
    n_tris: usize,
    alive_verts: usize,
    alive_tris: usize,
    stamp: u64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    coords: Vec<Point>,
    vmark: Vec<i32>,
    vtri: Vec<usize>,
    valive: Vec<bool>,
    tris: Vec<[usize; 3]>,
    tnbr: Vec<[usize; 3]>,
    tmark: Vec<[i32; 3]>,
    talive: Vec<bool>,
    alive_verts: usize,
    alive_tris: usize,
    stamp: u64,
    journal: Option<Journal>,
}

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("triangle {0} has non-positive area {1:e}")]
    Inverted(usize, f64),
    #[error("triangle {0} refers to invalid vertex {1}")]
    BadVertex(usize, usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifold(usize, usize),
    #[error("boundary edge ({0}, {1}) has no marker")]
    UnmarkedBoundary(usize, usize),
    #[error("inconsistent adjacency at triangle {0}: {1}")]
    Adjacency(usize, String),
}

#[inline]
pub(crate) fn next(i: usize) -> usize {
    if i == 2 {
        0
    } else {
        i + 1
    }
}

#[inline]
pub(crate) fn prev(i: usize) -> usize {
    if i == 0 {
        2
    } else {
        i - 1
    }
}

impl Mesh {
    /// Builds a mesh from vertices and counterclockwise triangles. Boundary
    /// edges take their marker from `boundary_edges` (`v0 v1 marker`);
    /// unlisted boundary edges get marker 1.
    pub fn new(
        coords: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: &[(usize, usize, i32)],
    ) -> Result<Self, MeshError> {
        let nv = coords.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::BadVertex(t, v));
                }
            }
        }
        let mut edge_map: std::collections::HashMap<(usize, usize), Vec<(usize, usize)>> =
            std::collections::HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let a = tri[next(i)];
                let b = tri[prev(i)];
                edge_map.entry((a.min(b), a.max(b))).or_default().push((t, i));
            }
        }
        let marks: std::collections::HashMap<(usize, usize), i32> = boundary_edges
            .iter()
            .map(|&(a, b, m)| ((a.min(b), a.max(b)), m))
            .collect();
        let nt = triangles.len();
        let mut tnbr = vec![[NONE; 3]; nt];
        let mut tmark = vec![[0; 3]; nt];
        let mut vmark = vec![0; nv];
        // keys sorted for deterministic marker assignment at corners
        let mut keys: Vec<_> = edge_map.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let uses = &edge_map[&key];
            match uses.len() {
                1 => {
                    let (t, i) = uses[0];
                    let m = marks.get(&key).copied().unwrap_or(1);
                    tmark[t][i] = m;
                    for v in [key.0, key.1] {
                        if vmark[v] == 0 {
                            vmark[v] = m;
                        }
                    }
                }
                2 => {
                    let (t0, i0) = uses[0];
                    let (t1, i1) = uses[1];
                    tnbr[t0][i0] = t1;
                    tnbr[t1][i1] = t0;
                }
                _ => return Err(MeshError::NonManifold(key.0, key.1)),
            }
        }
        let mut vtri = vec![NONE; nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if vtri[v] == NONE {
                    vtri[v] = t;
                }
            }
        }
        let valive: Vec<bool> = vtri.iter().map(|&t| t != NONE).collect();
        let alive_verts = valive.iter().filter(|&&a| a).count();
        let mesh = Mesh {
            coords,
            vmark,
            vtri,
            valive,
            tris: triangles,
            tnbr,
            tmark,
            talive: vec![true; nt],
            alive_verts,
            alive_tris: nt,
            stamp: 0,
            journal: None,
        };
        mesh.check()?;
        Ok(mesh)
    }

    // ---- sizes and raw access ----

    /// Number of vertex slots, including removed ones.
    pub fn vertex_capacity(&self) -> usize {
        self.coords.len()
    }

    pub fn triangle_capacity(&self) -> usize {
        self.tris.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.alive_verts
    }

    pub fn num_triangles(&self) -> usize {
        self.alive_tris
    }

    /// Changes on every mutation; used to detect stale per-element data.
    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    pub fn point(&self, v: usize) -> Point {
        self.coords[v]
    }

    pub fn points(&self) -> &[Point] {
        &self.coords
    }

    pub fn vertex_alive(&self, v: usize) -> bool {
        self.valive[v]
    }

    pub fn triangle_alive(&self, t: usize) -> bool {
        self.talive[t]
    }

    /// Boundary marker of a vertex; 0 for interior vertices.
    pub fn vertex_marker(&self, v: usize) -> i32 {
        self.vmark[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vmark[v] != 0
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.tris[t]
    }

    pub fn neighbors(&self, t: usize) -> [usize; 3] {
        self.tnbr[t]
    }

    /// Marker of the edge opposite local vertex `i`, 0 if interior.
    pub fn edge_marker(&self, t: usize, i: usize) -> i32 {
        self.tmark[t][i]
    }

    pub fn vertex_triangle(&self, v: usize) -> usize {
        self.vtri[v]
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.tris[t];
        [self.coords[a], self.coords[b], self.coords[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        self.triangles().map(|t| self.area(t)).sum()
    }

    pub fn triangles(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tris.len()).filter(move |&t| self.talive[t])
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.coords.len()).filter(move |&v| self.valive[v])
    }

    /// Each edge once, as seen from its lower-index triangle (or its only one).
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef> + '_ {
        self.triangles().flat_map(move |t| {
            (0..3).filter_map(move |i| {
                let n = self.tnbr[t][i];
                (n == NONE || t < n).then_some(EdgeRef { tri: t, local: i as u8 })
            })
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    /// Endpoints of an edge, in the orientation of its triangle.
    pub fn edge_vertices(&self, e: EdgeRef) -> (usize, usize) {
        let tri = self.tris[e.tri];
        let i = e.local as usize;
        (tri[next(i)], tri[prev(i)])
    }

    pub fn edge_length(&self, e: EdgeRef) -> f64 {
        let (a, b) = self.edge_vertices(e);
        dist(self.coords[a], self.coords[b])
    }

    pub fn is_boundary_edge(&self, e: EdgeRef) -> bool {
        self.tnbr[e.tri][e.local as usize] == NONE
    }

    /// The same edge seen from the other side, if interior.
    pub fn twin(&self, e: EdgeRef) -> Option<EdgeRef> {
        let n = self.tnbr[e.tri][e.local as usize];
        if n == NONE {
            return None;
        }
        let local = self.tnbr[n].iter().position(|&x| x == e.tri)?;
        Some(EdgeRef { tri: n, local: local as u8 })
    }

    pub fn local_index(&self, t: usize, v: usize) -> Option<usize> {
        self.tris[t].iter().position(|&x| x == v)
    }

    /// Longest edge of a triangle.
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    // ---- journaled mutation primitives ----

    pub(crate) fn set_tri(&mut self, t: usize, verts: [usize; 3], nbr: [usize; 3], mark: [i32; 3]) {
        self.log_tri(t);
        self.tris[t] = verts;
        self.tnbr[t] = nbr;
        self.tmark[t] = mark;
    }

    pub(crate) fn set_nbr(&mut self, t: usize, i: usize, n: usize) {
        self.log_tri(t);
        self.tnbr[t][i] = n;
    }

    /// Redirects `t`'s pointer to `old` so that it points at `new`.
    pub(crate) fn replace_nbr(&mut self, t: usize, old: usize, new: usize) {
        if t == NONE {
            return;
        }
        if let Some(i) = self.tnbr[t].iter().position(|&x| x == old) {
            self.set_nbr(t, i, new);
        }
    }

    /// Sets `t`'s neighbor across its edge with endpoints `a`, `b`.
    pub(crate) fn set_nbr_across(&mut self, t: usize, a: usize, b: usize, new: usize) {
        let tri = self.tris[t];
        for i in 0..3 {
            let (x, y) = (tri[next(i)], tri[prev(i)]);
            if (x == a && y == b) || (x == b && y == a) {
                self.set_nbr(t, i, new);
                return;
            }
        }
        debug_assert!(false, "edge ({a},{b}) not in triangle {t}");
    }

    pub(crate) fn push_tri(&mut self, verts: [usize; 3], nbr: [usize; 3], mark: [i32; 3]) -> usize {
        self.tris.push(verts);
        self.tnbr.push(nbr);
        self.tmark.push(mark);
        self.talive.push(true);
        self.alive_tris += 1;
        self.tris.len() - 1
    }

    pub(crate) fn kill_tri(&mut self, t: usize) {
        self.log_tri(t);
        if self.talive[t] {
            self.talive[t] = false;
            self.alive_tris -= 1;
        }
    }

    pub(crate) fn push_vertex(&mut self, p: Point, mark: i32) -> usize {
        self.coords.push(p);
        self.vmark.push(mark);
        self.vtri.push(NONE);
        self.valive.push(true);
        self.alive_verts += 1;
        self.coords.len() - 1
    }

    pub(crate) fn set_vtri(&mut self, v: usize, t: usize) {
        if self.vtri[v] != t {
            self.log_vert(v);
            self.vtri[v] = t;
        }
    }

    pub(crate) fn set_point(&mut self, v: usize, p: Point) {
        self.log_vert(v);
        self.coords[v] = p;
    }

    pub(crate) fn kill_vertex(&mut self, v: usize) {
        self.log_vert(v);
        if self.valive[v] {
            self.valive[v] = false;
            self.alive_verts -= 1;
        }
    }

    pub(crate) fn touch(&mut self) {
        self.stamp += 1;
    }

    fn log_tri(&mut self, t: usize) {
        if let Some(j) = &mut self.journal {
            if t < j.n_tris {
                j.entries.push(Entry::Tri {
                    t,
                    verts: self.tris[t],
                    nbr: self.tnbr[t],
                    mark: self.tmark[t],
                    alive: self.talive[t],
                });
            }
        }
    }

    fn log_vert(&mut self, v: usize) {
        if let Some(j) = &mut self.journal {
            if v < j.n_verts {
                j.entries.push(Entry::Vert {
                    v,
                    pos: self.coords[v],
                    tri: self.vtri[v],
                    mark: self.vmark[v],
                    alive: self.valive[v],
                });
            }
        }
    }

    /// Starts a tentative edit. Nested transactions are not supported.
    pub fn begin(&mut self) {
        assert!(self.journal.is_none(), "transaction already open");
        self.journal = Some(Journal {
            entries: Vec::new(),
            n_verts: self.coords.len(),
            n_tris: self.tris.len(),
            alive_verts: self.alive_verts,
            alive_tris: self.alive_tris,
            stamp: self.stamp,
        });
    }

    pub fn in_transaction(&self) -> bool {
        self.journal.is_some()
    }

    pub fn commit(&mut self) {
        self.journal = None;
    }

    /// Restores the state at the matching [`Mesh::begin`].
    pub fn rollback(&mut self) {
        let Some(j) = self.journal.take() else { return };
        for e in j.entries.into_iter().rev() {
            match e {
                Entry::Tri { t, verts, nbr, mark, alive } => {
                    self.tris[t] = verts;
                    self.tnbr[t] = nbr;
                    self.tmark[t] = mark;
                    self.talive[t] = alive;
                }
                Entry::Vert { v, pos, tri, mark, alive } => {
                    self.coords[v] = pos;
                    self.vtri[v] = tri;
                    self.vmark[v] = mark;
                    self.valive[v] = alive;
                }
            }
        }
        self.tris.truncate(j.n_tris);
        self.tnbr.truncate(j.n_tris);
        self.tmark.truncate(j.n_tris);
        self.talive.truncate(j.n_tris);
        self.coords.truncate(j.n_verts);
        self.vmark.truncate(j.n_verts);
        self.vtri.truncate(j.n_verts);
        self.valive.truncate(j.n_verts);
        self.alive_verts = j.alive_verts;
        self.alive_tris = j.alive_tris;
        self.stamp = j.stamp;
    }

    /// Drops tombstones. Returns the old-to-new vertex map (`NONE` for removed).
    pub fn compact(&mut self) -> Vec<usize> {
        assert!(self.journal.is_none());
        let mut vmap = vec![NONE; self.coords.len()];
        let mut nv = 0;
        for v in 0..self.coords.len() {
            if self.valive[v] {
                vmap[v] = nv;
                nv += 1;
            }
        }
        let mut tmap = vec![NONE; self.tris.len()];
        let mut nt = 0;
        for t in 0..self.tris.len() {
            if self.talive[t] {
                tmap[t] = nt;
                nt += 1;
            }
        }
        let mut coords = Vec::with_capacity(nv);
        let mut vmark = Vec::with_capacity(nv);
        let mut vtri = Vec::with_capacity(nv);
        for v in 0..self.coords.len() {
            if self.valive[v] {
                coords.push(self.coords[v]);
                vmark.push(self.vmark[v]);
                vtri.push(tmap[self.vtri[v]]);
            }
        }
        let mut tris = Vec::with_capacity(nt);
        let mut tnbr = Vec::with_capacity(nt);
        let mut tmark = Vec::with_capacity(nt);
        for t in 0..self.tris.len() {
            if self.talive[t] {
                tris.push(self.tris[t].map(|v| vmap[v]));
                tnbr.push(self.tnbr[t].map(|n| if n == NONE { NONE } else { tmap[n] }));
                tmark.push(self.tmark[t]);
            }
        }
        self.coords = coords;
        self.vmark = vmark;
        self.vtri = vtri;
        self.valive = vec![true; nv];
        self.tris = tris;
        self.tnbr = tnbr;
        self.tmark = tmark;
        self.talive = vec![true; nt];
        self.alive_verts = nv;
        self.alive_tris = nt;
        self.touch();
        vmap
    }

    // ---- invariants ----

    /// Full structural check: positive areas, symmetric adjacency, marked
    /// boundary, valid vertex-to-triangle links.
    pub fn check(&self) -> Result<(), MeshError> {
        for t in self.triangles() {
            self.check_triangle(t)?;
        }
        for v in self.vertices() {
            let t = self.vtri[v];
            if t == NONE || !self.talive[t] || !self.tris[t].contains(&v) {
                return Err(MeshError::Adjacency(t, format!("vertex {v} has bad incident triangle")));
            }
        }
        Ok(())
    }

    /// Local check of one triangle and its links.
    pub fn check_triangle(&self, t: usize) -> Result<(), MeshError> {
        let a = self.area(t);
        if !(a > 0.0) {
            return Err(MeshError::Inverted(t, a));
        }
        let tri = self.tris[t];
        for i in 0..3 {
            let v = tri[i];
            if v >= self.coords.len() || !self.valive[v] {
                return Err(MeshError::BadVertex(t, v));
            }
            let (p, q) = (tri[next(i)], tri[prev(i)]);
            let n = self.tnbr[t][i];
            if n == NONE {
                if self.tmark[t][i] == 0 {
                    return Err(MeshError::UnmarkedBoundary(p, q));
                }
                if self.vmark[p] == 0 || self.vmark[q] == 0 {
                    return Err(MeshError::Adjacency(t, format!("boundary edge ({p},{q}) has interior vertex")));
                }
            } else {
                if !self.talive[n] {
                    return Err(MeshError::Adjacency(t, format!("dead neighbor {n}")));
                }
                let Some(j) = self.tnbr[n].iter().position(|&x| x == t) else {
                    return Err(MeshError::Adjacency(t, format!("neighbor {n} does not point back")));
                };
                let nt = self.tris[n];
                if nt[next(j)] != q || nt[prev(j)] != p {
                    return Err(MeshError::Adjacency(t, format!("edge ({p},{q}) mismatched with {n}")));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn debug_check_local(&self, tris: &[usize]) {
        if cfg!(debug_assertions) {
            for &t in tris {
                if let Err(e) = self.check_triangle(t) {
                    panic!("mesh invariant violated: {e}");
                }
            }
        }
    }
}
