use std::collections::HashSet;

use super::{AdaptConfig, ErrorMode, StepCounts};
use crate::estimate::hierarchical::{correction_norms, local_coefficients};
use crate::estimate::{eta_value, jump_norm, local_terms, EstimateError, EstimatorOptions, LocalTerms};
use crate::fem::ProblemSpec;
use crate::linalg::{dist, signed_area, Point};
use crate::mesh::{EdgeRef, Mesh, DEGENERACY_EPS, NONE};
use crate::recovery::recover_gradient;

#[derive(Debug, Clone, Copy, Default)]
struct Elem {
    lt: LocalTerms,
    /// Local (unaveraged) hierarchical mid-edge coefficients.
    hloc: [f64; 3],
    jump: f64,
    eta: f64,
    hl2: f64,
    hh1: f64,
}

/// Read-only view of the cached indicators of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementState {
    pub eta: f64,
    pub eta_scaled: f64,
    pub resid: f64,
    pub resid_level: u32,
    pub jump: f64,
    pub omega: f64,
    pub hier_l2: f64,
    pub hier_h1: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Mesh plus nodal fields plus per-element indicators, kept consistent
/// through local modifications.
///
/// Nodal values `u` and recovered gradient `pi` are interpolated linearly
/// at new or moved vertices (boundary vertices take the Dirichlet data);
/// element quantities are recomputed on the modified triangles and, for the
/// neighbor-coupled terms, on their edge neighbors.
pub struct LocalAdapter {
    mesh: Mesh,
    u: Vec<f64>,
    pi: Vec<Point>,
    problem: ProblemSpec,
    cfg: AdaptConfig,
    elems: Vec<Elem>,
    undo: Vec<(usize, Elem)>,
    tentative: bool,
    target: f64,
}

impl LocalAdapter {
    /// Builds the adapter from a P1 solution, recovering its gradient.
    pub fn from_solution(mesh: Mesh, u: Vec<f64>, problem: &ProblemSpec, cfg: &AdaptConfig) -> Result<Self, EstimateError> {
        let rec = recover_gradient(&mesh, &u, cfg.recovery);
        let pi = (0..mesh.vertex_capacity()).map(|v| rec.at(v)).collect();
        Self::new(mesh, u, pi, problem, cfg)
    }

    /// Builds the adapter from given nodal values and gradient field.
    pub fn new(mesh: Mesh, u: Vec<f64>, pi: Vec<Point>, problem: &ProblemSpec, cfg: &AdaptConfig) -> Result<Self, EstimateError> {
        assert!(u.len() >= mesh.vertex_capacity() && pi.len() >= mesh.vertex_capacity());
        let mut a = LocalAdapter {
            elems: vec![Elem::default(); mesh.triangle_capacity()],
            mesh,
            u,
            pi,
            problem: problem.clone(),
            cfg: cfg.clone(),
            undo: Vec::new(),
            tentative: false,
            target: 0.0,
        };
        let all: Vec<usize> = a.mesh.triangles().collect();
        for &t in &all {
            let (lt, hloc) = a.compute_local(t)?;
            a.elems[t].lt = lt;
            a.elems[t].hloc = hloc;
        }
        for &t in &all {
            a.refresh_coupled(t);
        }
        a.freeze_target();
        Ok(a)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn config(&self) -> &AdaptConfig {
        &self.cfg
    }

    pub fn into_parts(self) -> (Mesh, Vec<f64>) {
        (self.mesh, self.u)
    }

    /// Current `TOL^2 / N_T`, fixed until the next [`Self::freeze_target`].
    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn freeze_target(&mut self) {
        self.target = self.cfg.tol * self.cfg.tol / self.mesh.num_triangles() as f64;
    }

    pub fn element(&self, t: usize) -> ElementState {
        let e = &self.elems[t];
        ElementState {
            eta: e.eta,
            eta_scaled: e.lt.geom.lambda2 * e.eta,
            resid: e.lt.resid,
            resid_level: e.lt.resid_level,
            jump: e.jump,
            omega: e.lt.omega,
            hier_l2: e.hl2,
            hier_h1: e.hh1,
            lambda1: e.lt.geom.lambda1,
            lambda2: e.lt.geom.lambda2,
        }
    }

    /// Indicator used for refinement and removal.
    pub fn size(&self, t: usize) -> f64 {
        let e = &self.elems[t];
        match self.cfg.mode {
            ErrorMode::ResidualH1 => e.eta,
            ErrorMode::ResidualL2Hybrid => e.lt.geom.lambda2 * e.eta,
            ErrorMode::HierarchicalHybrid => e.hl2,
        }
    }

    /// Indicator used for swaps and node moves.
    pub fn shape(&self, t: usize) -> f64 {
        let e = &self.elems[t];
        match self.cfg.mode {
            ErrorMode::HierarchicalHybrid => e.hh1,
            _ => e.eta,
        }
    }

    /// Per-slot size indicator (zero on dead slots).
    pub fn size_field(&self) -> Vec<f64> {
        (0..self.mesh.triangle_capacity()).map(|t| if self.mesh.triangle_alive(t) { self.size(t) } else { 0.0 }).collect()
    }

    pub fn global_size(&self) -> f64 {
        self.mesh.triangles().map(|t| self.size(t).powi(2)).sum::<f64>().sqrt()
    }

    pub fn global_shape_sq(&self) -> f64 {
        self.mesh.triangles().map(|t| self.shape(t).powi(2)).sum()
    }

    /// Percent of live elements whose residual integral went to level 2 and to level 3.
    pub fn subdivision_pct(&self) -> (f64, f64) {
        if !self.cfg.mode.uses_residual() {
            return (0.0, 0.0);
        }
        let n = self.mesh.num_triangles() as f64;
        let count = |l: u32| self.mesh.triangles().filter(|&t| self.elems[t].lt.resid_level == l).count() as f64;
        (100.0 * count(2) / n, 100.0 * count(3) / n)
    }

    /// Largest relative difference between the cached indicators and a
    /// recomputation from scratch with the current nodal fields.
    pub fn cache_discrepancy(&self) -> Result<f64, EstimateError> {
        let fresh = LocalAdapter::new(self.mesh.clone(), self.u.clone(), self.pi.clone(), &self.problem, &self.cfg)?;
        let mut worst: f64 = 0.0;
        let scale = self.mesh.triangles().map(|t| self.shape(t).max(self.size(t))).fold(0.0, f64::max).max(1e-300);
        for t in self.mesh.triangles() {
            worst = worst.max((fresh.shape(t) - self.shape(t)).abs() / scale);
            worst = worst.max((fresh.size(t) - self.size(t)).abs() / scale);
        }
        Ok(worst)
    }

    // ---- element cache ----

    fn compute_local(&self, t: usize) -> Result<(LocalTerms, [f64; 3]), EstimateError> {
        let [a, b, c] = self.mesh.triangle(t);
        let p = self.mesh.triangle_points(t);
        self.local_at(&p, [self.u[a], self.u[b], self.u[c]], [self.pi[a], self.pi[b], self.pi[c]])
    }

    fn local_at(&self, p: &[Point; 3], u: [f64; 3], pi: [Point; 3]) -> Result<(LocalTerms, [f64; 3]), EstimateError> {
        if self.cfg.mode.uses_residual() {
            Ok((local_terms(p, u, pi, &self.problem, &self.cfg.estimator)?, [0.0; 3]))
        } else {
            let opts = EstimatorOptions { drop_residual: true, ..self.cfg.estimator };
            let lt = local_terms(p, u, pi, &self.problem, &opts)?;
            Ok((lt, local_coefficients(p, pi).unwrap_or([0.0; 3])))
        }
    }

    fn write(&mut self, t: usize, e: Elem) {
        if self.tentative {
            self.undo.push((t, self.elems[t]));
        }
        self.elems[t] = e;
    }

    fn refresh_coupled(&mut self, t: usize) {
        let mut e = self.elems[t];
        let p = self.mesh.triangle_points(t);
        let nb = self.mesh.neighbors(t);
        if self.cfg.mode.uses_residual() {
            let grads = nb.map(|n| (n != NONE).then(|| self.elems[n].lt.grad));
            e.jump = jump_norm(&p, &self.problem.a, e.lt.grad, grads);
            e.eta = eta_value(&e.lt.geom, e.lt.resid, e.jump, e.lt.omega);
        } else {
            let coeff = [0, 1, 2].map(|i| self.averaged(t, e.hloc[i], i, nb[i]));
            let (l2, h1) = correction_norms(&p, coeff);
            e.hl2 = l2;
            e.hh1 = h1;
        }
        self.write(t, e);
    }

    fn averaged(&self, t: usize, own: f64, _i: usize, n: usize) -> f64 {
        if n == NONE {
            return own;
        }
        let j = self.mesh.neighbors(n).iter().position(|&x| x == t).expect("symmetric adjacency");
        0.5 * (own + self.elems[n].hloc[j])
    }

    /// Recomputes local terms on `changed` and coupled terms on their closure.
    fn refresh(&mut self, changed: &[usize]) -> Result<(), EstimateError> {
        if self.elems.len() < self.mesh.triangle_capacity() {
            self.elems.resize(self.mesh.triangle_capacity(), Elem::default());
        }
        for &t in changed {
            let (lt, hloc) = self.compute_local(t)?;
            let mut e = self.elems[t];
            e.lt = lt;
            e.hloc = hloc;
            self.write(t, e);
        }
        for t in self.mesh.with_edge_neighbors(changed) {
            self.refresh_coupled(t);
        }
        Ok(())
    }

    fn begin(&mut self) {
        self.mesh.begin();
        self.tentative = true;
        self.undo.clear();
    }

    fn commit(&mut self) {
        self.mesh.commit();
        self.tentative = false;
        self.undo.clear();
    }

    fn rollback(&mut self) {
        self.mesh.rollback();
        while let Some((t, e)) = self.undo.pop() {
            self.elems[t] = e;
        }
        self.elems.truncate(self.mesh.triangle_capacity());
        self.u.truncate(self.mesh.vertex_capacity());
        self.pi.truncate(self.mesh.vertex_capacity());
        self.tentative = false;
    }

    fn mean_size_sq(&self, tris: &[usize]) -> f64 {
        tris.iter().map(|&t| self.size(t).powi(2)).sum::<f64>() / tris.len() as f64
    }

    fn shape_sq_sum(&self, tris: &[usize]) -> f64 {
        tris.iter().map(|&t| self.shape(t).powi(2)).sum()
    }

    // ---- refinement ----

    fn incident(&self, e: EdgeRef) -> Vec<usize> {
        match self.mesh.twin(e) {
            Some(tw) => vec![e.tri, tw.tri],
            None => vec![e.tri],
        }
    }

    /// Tentatively splits `e` at its midpoint; keeps the split if the mean
    /// squared indicator of the edge patch moves closer to the target.
    pub fn try_refine_edge(&mut self, e: EdgeRef) -> bool {
        let before = self.mean_size_sq(&self.incident(e));
        let (a, b) = self.mesh.edge_vertices(e);
        let boundary = self.mesh.is_boundary_edge(e);
        self.begin();
        let split = match self.mesh.split_edge(e, 0.5) {
            Ok(s) => s,
            Err(_) => {
                self.rollback();
                return false;
            }
        };
        let m = split.vertex;
        let cap = self.mesh.vertex_capacity();
        self.u.resize(cap, 0.0);
        self.pi.resize(cap, [0.0; 2]);
        self.u[m] = if boundary { (self.problem.g)(self.mesh.point(m)) } else { 0.5 * (self.u[a] + self.u[b]) };
        self.pi[m] = [0.5 * (self.pi[a][0] + self.pi[b][0]), 0.5 * (self.pi[a][1] + self.pi[b][1])];
        if self.refresh(&split.triangles).is_err() {
            self.rollback();
            return false;
        }
        let after = self.mean_size_sq(&split.triangles);
        if (after - self.target).abs() < (before - self.target).abs() {
            self.commit();
            true
        } else {
            self.rollback();
            false
        }
    }

    /// Proposes every edge of every element with `size^2 > factor * target`,
    /// in decreasing order of the parent indicator. Each edge is tried once.
    pub fn refine_sweep(&mut self) -> usize {
        let thr = self.cfg.refine_factor * self.target;
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        for t in self.mesh.triangles() {
            let s2 = self.size(t).powi(2);
            if s2 > thr {
                for i in 0..3 {
                    let (a, b) = self.mesh.edge_vertices(EdgeRef { tri: t, local: i as u8 });
                    cand.push((s2, a.min(b), a.max(b)));
                }
            }
        }
        cand.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut seen = HashSet::new();
        let mut count = 0;
        for (_, a, b) in cand {
            if !seen.insert((a, b)) {
                continue;
            }
            let Some(e) = self.mesh.find_edge(a, b) else { continue };
            // the flag must still hold after earlier splits nearby
            if !self.incident(e).iter().any(|&t| self.size(t).powi(2) > thr) {
                continue;
            }
            if self.try_refine_edge(e) {
                count += 1;
            }
        }
        count
    }

    // ---- swapping ----

    /// Tentatively swaps `e`; keeps it if the sum of squared shape
    /// indicators over the extended edge patch strictly decreases.
    /// Returns the new edge's endpoints.
    pub fn try_swap(&mut self, e: EdgeRef) -> Option<(usize, usize)> {
        let tw = self.mesh.twin(e)?;
        let ext = self.mesh.with_edge_neighbors(&[e.tri, tw.tri]);
        let before = self.shape_sq_sum(&ext);
        if !(before > 0.0) {
            return None;
        }
        self.begin();
        let new = match self.mesh.swap_edge(e) {
            Ok(n) => n,
            Err(_) => {
                self.rollback();
                return None;
            }
        };
        if self.refresh(&[e.tri, tw.tri]).is_err() {
            self.rollback();
            return None;
        }
        let after = self.shape_sq_sum(&ext);
        if after < before * (1.0 - 1e-12) {
            self.commit();
            Some(self.mesh.edge_vertices(new))
        } else {
            self.rollback();
            None
        }
    }

    /// Passes over all interior edges (swapped edges are re-queued) until a
    /// full pass makes no swap or the pass cap is hit.
    pub fn swap_pass(&mut self) -> usize {
        let mut total = 0;
        for _ in 0..self.cfg.max_swap_passes.max(1) {
            let mut list: Vec<(usize, usize)> = self
                .mesh
                .edges()
                .filter(|&e| !self.mesh.is_boundary_edge(e))
                .map(|e| self.mesh.edge_vertices(e))
                .collect();
            let mut k = 0;
            let mut swaps = 0;
            while k < list.len() {
                let (a, b) = list[k];
                k += 1;
                let Some(e) = self.mesh.find_edge(a, b) else { continue };
                if let Some(new) = self.try_swap(e) {
                    swaps += 1;
                    list.push(new);
                }
            }
            total += swaps;
            if swaps == 0 {
                break;
            }
        }
        total
    }

    // ---- removal ----

    /// Tentatively removes interior vertex `v`; kept under the same
    /// patch-mean rule as refinement.
    pub fn try_remove_vertex(&mut self, v: usize) -> bool {
        if !self.mesh.vertex_alive(v) || self.mesh.is_boundary_vertex(v) {
            return false;
        }
        let fan = self.mesh.vertex_patch(v);
        let before = self.mean_size_sq(&fan.triangles);
        self.begin();
        let new = match self.mesh.remove_vertex(v) {
            Ok(n) => n,
            Err(_) => {
                self.rollback();
                return false;
            }
        };
        if self.refresh(&new).is_err() {
            self.rollback();
            return false;
        }
        let after = self.mean_size_sq(&new);
        if (after - self.target).abs() < (before - self.target).abs() {
            self.commit();
            true
        } else {
            self.rollback();
            false
        }
    }

    pub fn removal_sweep(&mut self, removed_at: &mut Vec<Point>) -> usize {
        let verts: Vec<usize> = self.mesh.vertices().filter(|&v| !self.mesh.is_boundary_vertex(v)).collect();
        let mut count = 0;
        for v in verts {
            let x = self.mesh.point(v);
            if self.try_remove_vertex(v) {
                removed_at.push(x);
                count += 1;
            }
        }
        count
    }

    // ---- node movement ----

    /// P1 values of `u` and `pi` at `p`, taken from the current fan of `v`.
    fn interpolate_in_fan(&self, v: usize, fan: &[usize], p: Point) -> Option<(f64, Point)> {
        for &t in fan {
            let q = self.mesh.triangle_points(t);
            let area = signed_area(q[0], q[1], q[2]);
            let b = [signed_area(p, q[1], q[2]) / area, signed_area(q[0], p, q[2]) / area, signed_area(q[0], q[1], p) / area];
            if b.iter().all(|&x| x >= -1e-12) {
                let vs = self.mesh.triangle(t);
                let mut uv = 0.0;
                let mut pv = [0.0; 2];
                for k in 0..3 {
                    uv += b[k] * self.u[vs[k]];
                    pv[0] += b[k] * self.pi[vs[k]][0];
                    pv[1] += b[k] * self.pi[vs[k]][1];
                }
                if self.mesh.is_boundary_vertex(v) {
                    uv = (self.problem.g)(p);
                }
                return Some((uv, pv));
            }
        }
        None
    }

    /// Variance of the squared shape indicator over the fan with `v` placed
    /// at `p`, without touching the mesh. `None` if an element degenerates.
    fn fan_variance(&self, v: usize, fan: &[usize], p: Point) -> Option<f64> {
        let (uv, piv) = self.interpolate_in_fan(v, fan, p)?;
        let k = fan.len();
        let mut pts = Vec::with_capacity(k);
        let mut loc = Vec::with_capacity(k);
        for &t in fan {
            let vs = self.mesh.triangle(t);
            let mut q = self.mesh.triangle_points(t);
            let mut uu = vs.map(|x| self.u[x]);
            let mut pp = vs.map(|x| self.pi[x]);
            let i = vs.iter().position(|&x| x == v)?;
            q[i] = p;
            uu[i] = uv;
            pp[i] = piv;
            if signed_area(q[0], q[1], q[2]) <= DEGENERACY_EPS * self.mesh.area(t) {
                return None;
            }
            loc.push(self.local_at(&q, uu, pp).ok()?);
            pts.push(q);
        }
        let mut vals = Vec::with_capacity(k);
        for (j, &t) in fan.iter().enumerate() {
            let nb = self.mesh.neighbors(t);
            let (lt, hloc) = &loc[j];
            let s = if self.cfg.mode.uses_residual() {
                let grads = nb.map(|n| {
                    if n == NONE {
                        None
                    } else if let Some(jj) = fan.iter().position(|&x| x == n) {
                        Some(loc[jj].0.grad)
                    } else {
                        Some(self.elems[n].lt.grad)
                    }
                });
                let jump = jump_norm(&pts[j], &self.problem.a, lt.grad, grads);
                eta_value(&lt.geom, lt.resid, jump, lt.omega)
            } else {
                let coeff = [0, 1, 2].map(|i| {
                    let n = nb[i];
                    if n == NONE {
                        return hloc[i];
                    }
                    let jn = self.mesh.neighbors(n).iter().position(|&x| x == t).expect("adjacency");
                    let other = match fan.iter().position(|&x| x == n) {
                        Some(jj) => loc[jj].1[jn],
                        None => self.elems[n].hloc[jn],
                    };
                    0.5 * (hloc[i] + other)
                });
                correction_norms(&pts[j], coeff).1
            };
            vals.push(s * s);
        }
        Some(variance(&vals))
    }

    /// One descent step on the fan variance of the squared shape indicator.
    /// Returns the displacement (zero if no decrease was found), or `None`
    /// for vertices that cannot move (corners, bends of the boundary).
    pub fn move_vertex_step(&mut self, v: usize) -> Option<f64> {
        if !self.mesh.vertex_alive(v) {
            return None;
        }
        let slide = if self.mesh.is_boundary_vertex(v) {
            let (a, b) = self.mesh.boundary_slide_range(v)?;
            let (xa, xb) = (self.mesh.point(a), self.mesh.point(b));
            let l = dist(xa, xb);
            Some([(xb[0] - xa[0]) / l, (xb[1] - xa[1]) / l])
        } else {
            None
        };
        let fan = self.mesh.vertex_patch(v);
        let x0 = self.mesh.point(v);
        let hmin = fan.ring.iter().map(|&r| dist(x0, self.mesh.point(r))).fold(f64::INFINITY, f64::min);
        let v0 = variance(&fan.triangles.iter().map(|&t| self.shape(t).powi(2)).collect::<Vec<_>>());
        if !(v0 > 0.0) || !hmin.is_finite() {
            return Some(0.0);
        }
        let tris = &fan.triangles;
        let d = self.cfg.move_fd_step * hmin;
        let at = |s: f64, dir: Point| [x0[0] + s * dir[0], x0[1] + s * dir[1]];
        let dirs: Vec<Point> = match slide {
            Some(t) => vec![t],
            None => vec![[1.0, 0.0], [0.0, 1.0]],
        };
        let mut grad = [0.0; 2];
        for dir in &dirs {
            let plus = self.fan_variance(v, tris, at(d, *dir));
            let minus = self.fan_variance(v, tris, at(-d, *dir));
            let (Some(vp), Some(vm)) = (plus, minus) else { return Some(0.0) };
            let gd = (vp - vm) / (2.0 * d);
            grad[0] += gd * dir[0];
            grad[1] += gd * dir[1];
        }
        let gn = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
        if !(gn > 0.0) || !gn.is_finite() {
            return Some(0.0);
        }
        let dir = [-grad[0] / gn, -grad[1] / gn];
        let mut step = (v0 / gn).min(self.cfg.move_step * hmin);
        for _ in 0..=self.cfg.move_halvings {
            let p = at(step, dir);
            if let Some(vp) = self.fan_variance(v, tris, p) {
                if vp < v0 {
                    return Some(if self.apply_move(v, tris, p) { step } else { 0.0 });
                }
            }
            step *= 0.5;
        }
        Some(0.0)
    }

    fn apply_move(&mut self, v: usize, fan: &[usize], p: Point) -> bool {
        let Some((uv, piv)) = self.interpolate_in_fan(v, fan, p) else { return false };
        let (x0, u0, p0) = (self.mesh.point(v), self.u[v], self.pi[v]);
        if self.mesh.move_vertex(v, p).is_err() {
            return false;
        }
        self.u[v] = uv;
        self.pi[v] = piv;
        if self.refresh(fan).is_ok() {
            return true;
        }
        self.mesh.move_vertex(v, x0).expect("restoring a valid position");
        self.u[v] = u0;
        self.pi[v] = p0;
        self.refresh(fan).expect("restored fan was valid");
        false
    }

    /// Visits every vertex once. Returns (moved, max displacement, sum of
    /// displacements, visited movable vertices).
    pub fn move_sweep(&mut self) -> (usize, f64, f64, usize) {
        let verts: Vec<usize> = self.mesh.vertices().collect();
        let (mut moved, mut max, mut sum, mut visits) = (0, 0.0f64, 0.0, 0);
        for v in verts {
            if let Some(d) = self.move_vertex_step(v) {
                visits += 1;
                if d > 0.0 {
                    moved += 1;
                    max = max.max(d);
                    sum += d;
                }
            }
        }
        (moved, max, sum, visits)
    }

    // ---- the full step ----

    fn smooth(&mut self, c: &mut (usize, usize, f64, f64, usize)) -> usize {
        let mut swaps = 0;
        for _ in 0..self.cfg.smooth_repeats {
            swaps += self.swap_pass();
            let (m, mx, s, n) = self.move_sweep();
            c.0 += m;
            c.2 = c.2.max(mx);
            c.3 += s;
            c.4 += n;
        }
        swaps
    }

    /// Refinement, swap/move sub-loop, node removal, swap/move sub-loop,
    /// all against the target frozen at entry.
    pub fn adapt_step(&mut self) -> StepCounts {
        self.freeze_target();
        let mut counts = StepCounts::default();
        let mut mv = (0, 0, 0.0, 0.0, 0);
        let nv0 = self.mesh.num_vertices();
        counts.refinements = self.refine_sweep();
        counts.refine_pct = 100.0 * counts.refinements as f64 / nv0 as f64;
        let ne1 = self.mesh.num_edges();
        counts.swaps_after_refinement = self.smooth(&mut mv);
        counts.swap_ref_pct = 100.0 * counts.swaps_after_refinement as f64 / ne1 as f64;
        let nv1 = self.mesh.num_vertices();
        counts.derefinements = self.removal_sweep(&mut counts.removed_at);
        counts.deref_pct = 100.0 * counts.derefinements as f64 / nv1 as f64;
        let ne2 = self.mesh.num_edges();
        counts.swaps_after_derefinement = self.smooth(&mut mv);
        counts.swap_deref_pct = 100.0 * counts.swaps_after_derefinement as f64 / ne2 as f64;
        counts.moves = mv.0;
        counts.move_max = mv.2;
        counts.move_mean = if mv.4 > 0 { mv.3 / mv.4 as f64 } else { 0.0 };
        counts
    }
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}
