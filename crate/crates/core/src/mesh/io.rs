//! ASCII mesh files and legacy VTK output.
//!
//! ASCII layout: a header line `NV NT NBE`, then `NV` lines `x y marker`,
//! `NT` lines `v0 v1 v2` and `NBE` lines `v0 v1 marker`. A metric block of
//! `NV` lines `m11 m12 m22` may follow.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use super::Mesh;
use crate::linalg::Sym2;

#[derive(Debug, thiserror::Error)]
pub enum MeshIoError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid mesh: {0}")]
    Mesh(#[from] super::MeshError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse { line, msg: msg.into() }
}

/// Writes the mesh (compacted numbering of live entities).
pub fn write_ascii(mesh: &Mesh, out: &mut impl Write) -> io::Result<()> {
    write_ascii_with_metric(mesh, None, out)
}

/// As [`write_ascii`], appending one `m11 m12 m22` line per vertex when a
/// metric is given (indexed by vertex slot).
pub fn write_ascii_with_metric(mesh: &Mesh, metric: Option<&[Sym2]>, out: &mut impl Write) -> io::Result<()> {
    let mut vmap = vec![usize::MAX; mesh.vertex_capacity()];
    let verts: Vec<usize> = mesh.vertices().collect();
    for (k, &v) in verts.iter().enumerate() {
        vmap[v] = k;
    }
    let boundary: Vec<_> = mesh.edges().filter(|&e| mesh.is_boundary_edge(e)).collect();
    let mut s = String::new();
    writeln!(s, "{} {} {}", verts.len(), mesh.num_triangles(), boundary.len()).ok();
    for &v in &verts {
        let p = mesh.point(v);
        writeln!(s, "{:e} {:e} {}", p[0], p[1], mesh.vertex_marker(v)).ok();
    }
    for t in mesh.triangles() {
        let [a, b, c] = mesh.triangle(t);
        writeln!(s, "{} {} {}", vmap[a], vmap[b], vmap[c]).ok();
    }
    for e in boundary {
        let (a, b) = mesh.edge_vertices(e);
        writeln!(s, "{} {} {}", vmap[a], vmap[b], mesh.edge_marker(e.tri, e.local as usize)).ok();
    }
    if let Some(m) = metric {
        for &v in &verts {
            let t = m[v];
            writeln!(s, "{:e} {:e} {:e}", t.m11, t.m12, t.m22).ok();
        }
    }
    out.write_all(s.as_bytes())
}

/// Reads a mesh and, if present, the trailing metric block.
pub fn read_ascii(input: impl BufRead) -> Result<(Mesh, Option<Vec<Sym2>>), MeshIoError> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('#') => None,
        other => Some((i + 1, other)),
    });
    let mut next_fields = |what: &str| -> Result<(usize, Vec<String>), MeshIoError> {
        let (n, l) = lines.next().ok_or_else(|| parse_err(0, format!("unexpected end of file, expected {what}")))?;
        Ok((n, l?.split_whitespace().map(str::to_owned).collect()))
    };
    fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, MeshIoError> {
        s.parse().map_err(|_| parse_err(line, format!("bad number '{s}'")))
    }
    let (n, h) = next_fields("header")?;
    if h.len() != 3 {
        return Err(parse_err(n, "header must be 'NV NT NBE'"));
    }
    let (nv, nt, nbe): (usize, usize, usize) = (num(n, &h[0])?, num(n, &h[1])?, num(n, &h[2])?);
    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, f) = next_fields("vertex")?;
        if f.len() != 3 {
            return Err(parse_err(n, "vertex line must be 'x y marker'"));
        }
        coords.push([num(n, &f[0])?, num(n, &f[1])?]);
        let _: i32 = num(n, &f[2])?;
    }
    let mut tris = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, f) = next_fields("triangle")?;
        if f.len() != 3 {
            return Err(parse_err(n, "triangle line must be 'v0 v1 v2'"));
        }
        let t: [usize; 3] = [num(n, &f[0])?, num(n, &f[1])?, num(n, &f[2])?];
        if t.iter().any(|&v| v >= nv) {
            return Err(parse_err(n, "vertex index out of range"));
        }
        tris.push(t);
    }
    let mut bnd = Vec::with_capacity(nbe);
    for _ in 0..nbe {
        let (n, f) = next_fields("boundary edge")?;
        if f.len() != 3 {
            return Err(parse_err(n, "boundary line must be 'v0 v1 marker'"));
        }
        bnd.push((num(n, &f[0])?, num(n, &f[1])?, num(n, &f[2])?));
    }
    let mut metric = Vec::new();
    while metric.len() < nv {
        match lines.next() {
            None if metric.is_empty() => break,
            None => return Err(parse_err(0, "truncated metric block")),
            Some((n, l)) => {
                let l = l?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(parse_err(n, "metric line must be 'm11 m12 m22'"));
                }
                metric.push(Sym2::new(num(n, f[0])?, num(n, f[1])?, num(n, f[2])?));
            }
        }
    }
    let mesh = Mesh::new(coords, tris, &bnd)?;
    Ok((mesh, (!metric.is_empty()).then_some(metric)))
}

/// Legacy VTK unstructured grid with optional point and cell scalars
/// (indexed by vertex / triangle slot).
pub fn write_vtk(
    mesh: &Mesh,
    point_data: &[(&str, &[f64])],
    cell_data: &[(&str, &[f64])],
    out: &mut impl Write,
) -> io::Result<()> {
    let mut vmap = vec![usize::MAX; mesh.vertex_capacity()];
    let verts: Vec<usize> = mesh.vertices().collect();
    for (k, &v) in verts.iter().enumerate() {
        vmap[v] = k;
    }
    let tris: Vec<usize> = mesh.triangles().collect();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nmesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", verts.len()).ok();
    for &v in &verts {
        let p = mesh.point(v);
        writeln!(s, "{:e} {:e} 0", p[0], p[1]).ok();
    }
    writeln!(s, "CELLS {} {}", tris.len(), 4 * tris.len()).ok();
    for &t in &tris {
        let [a, b, c] = mesh.triangle(t);
        writeln!(s, "3 {} {} {}", vmap[a], vmap[b], vmap[c]).ok();
    }
    writeln!(s, "CELL_TYPES {}", tris.len()).ok();
    for _ in &tris {
        s.push_str("5\n");
    }
    if !point_data.is_empty() {
        writeln!(s, "POINT_DATA {}", verts.len()).ok();
        for (name, data) in point_data {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").ok();
            for &v in &verts {
                writeln!(s, "{:e}", data[v]).ok();
            }
        }
    }
    if !cell_data.is_empty() {
        writeln!(s, "CELL_DATA {}", tris.len()).ok();
        for (name, data) in cell_data {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").ok();
            for &t in &tris {
                writeln!(s, "{:e}", data[t]).ok();
            }
        }
    }
    out.write_all(s.as_bytes())
}
