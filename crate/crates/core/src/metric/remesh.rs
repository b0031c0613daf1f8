use std::f64::consts::SQRT_2;

use super::{hessian_metric, log_interpolate, metric_edge_length, residual_metric, Combine, MetricClamp, MetricScaling};
use crate::adapt::{compact_with, AdaptError, Analysis, StepCounts, StepOutput, Strategy};
use crate::estimate::{compute_estimates, EstimatorOptions};
use crate::fem::ProblemSpec;
use crate::linalg::{dist, Point, Sym2};
use crate::mesh::{EdgeRef, Mesh};
use crate::recovery::{ls_hessian, recover_gradient, RecoveryMethod};

/// Where the metric comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricSource {
    /// Optimal-shape metric from the residual estimator at global tolerance `tol`.
    Residual { tol: f64 },
    /// `|H| / (8 e_D)` from the least-squares Hessian.
    Hessian { e_d: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub source: MetricSource,
    pub combine: Combine,
    /// Leave the element residual out of the residual metric.
    pub drop_residual: bool,
    pub scaling: MetricScaling,
    pub clamp: MetricClamp,
    pub recovery: RecoveryMethod,
    pub estimator: EstimatorOptions,
    /// Remeshing passes against one metric between two solves.
    pub passes: usize,
    /// Relaxation of the spring smoothing move.
    pub relax: f64,
    pub max_swap_passes: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            source: MetricSource::Residual { tol: 0.125 },
            combine: Combine::Intersect,
            drop_residual: false,
            scaling: MetricScaling::default(),
            clamp: MetricClamp::default(),
            recovery: RecoveryMethod::ZhangNaga,
            estimator: EstimatorOptions::default(),
            passes: 4,
            relax: 0.5,
            max_swap_passes: 20,
        }
    }
}

/// Mesh with a metric and nodal values attached to its vertex slots.
#[derive(Debug, Clone)]
pub struct MetricMesh {
    pub mesh: Mesh,
    pub metric: Vec<Sym2>,
    pub u: Vec<f64>,
}

pub type MetricAdaptCounts = StepCounts;

impl MetricMesh {
    fn edge_len(&self, a: usize, b: usize) -> f64 {
        metric_edge_length(&self.metric[a], &self.metric[b], self.mesh.point(a), self.mesh.point(b))
    }

    /// Metric length of an edge handle.
    pub fn length(&self, e: EdgeRef) -> f64 {
        let (a, b) = self.mesh.edge_vertices(e);
        self.edge_len(a, b)
    }

    fn sync(&mut self) {
        let n = self.mesh.vertex_capacity();
        self.metric.truncate(n);
        self.u.truncate(n);
    }
}

/// Fraction of live edges with metric length in `[1/sqrt 2, sqrt 2]`.
pub fn unit_fraction(mm: &MetricMesh) -> f64 {
    let (mut ok, mut n) = (0usize, 0usize);
    for e in mm.mesh.edges() {
        let l = mm.length(e);
        n += 1;
        if (1.0 / SQRT_2..=SQRT_2).contains(&l) {
            ok += 1;
        }
    }
    ok as f64 / n.max(1) as f64
}

fn refine(mm: &mut MetricMesh, g: &dyn Fn(Point) -> f64) -> usize {
    let mut long: Vec<(f64, usize, usize)> = mm
        .mesh
        .edges()
        .filter_map(|e| {
            let l = mm.length(e);
            let (a, b) = mm.mesh.edge_vertices(e);
            (l > SQRT_2).then_some((l, a.min(b), a.max(b)))
        })
        .collect();
    long.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut count = 0;
    for (_, a, b) in long {
        let Some(e) = mm.mesh.find_edge(a, b) else { continue };
        let boundary = mm.mesh.is_boundary_edge(e);
        let Ok(s) = mm.mesh.split_edge(e, 0.5) else { continue };
        let m = s.vertex;
        let met = log_interpolate(&[mm.metric[a], mm.metric[b]], &[0.5, 0.5]);
        let val = if boundary { g(mm.mesh.point(m)) } else { 0.5 * (mm.u[a] + mm.u[b]) };
        mm.metric.resize(mm.mesh.vertex_capacity(), met);
        mm.u.resize(mm.mesh.vertex_capacity(), val);
        mm.metric[m] = met;
        mm.u[m] = val;
        count += 1;
    }
    count
}

/// Minimum angle of the triangle in the space where `m` is Euclidean.
fn metric_min_angle(m: &Sym2, p: [Point; 3]) -> f64 {
    let s = m.sqrt();
    let q = p.map(|x| s.apply(x));
    let l = [dist(q[1], q[2]), dist(q[2], q[0]), dist(q[0], q[1])];
    let mut best = f64::INFINITY;
    for i in 0..3 {
        let (a, b, c) = (l[i], l[(i + 1) % 3], l[(i + 2) % 3]);
        let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
        best = best.min(cos.acos());
    }
    best
}

/// Swaps `e` if that raises the smaller of the two metric minimum angles of
/// its quadrilateral.
fn try_metric_swap(mm: &mut MetricMesh, e: EdgeRef) -> bool {
    let Some(tw) = mm.mesh.twin(e) else { return false };
    let (a, b) = mm.mesh.edge_vertices(e);
    let c = mm.mesh.triangle(e.tri)[e.local as usize];
    let d = mm.mesh.triangle(tw.tri)[tw.local as usize];
    let m = (mm.metric[a] + mm.metric[b] + mm.metric[c] + mm.metric[d]) * 0.25;
    let (xa, xb, xc, xd) = (mm.mesh.point(a), mm.mesh.point(b), mm.mesh.point(c), mm.mesh.point(d));
    let before = metric_min_angle(&m, [xc, xa, xb]).min(metric_min_angle(&m, [xd, xb, xa]));
    let after = metric_min_angle(&m, [xc, xa, xd]).min(metric_min_angle(&m, [xd, xb, xc]));
    after > before + 1e-9 && mm.mesh.swap_edge(e).is_ok()
}

/// Full passes of [`try_metric_swap`] over the interior edges until a pass
/// makes no swap.
fn swap_pass(mm: &mut MetricMesh, max_passes: usize) -> usize {
    let mut total = 0;
    for _ in 0..max_passes.max(1) {
        let pairs: Vec<(usize, usize)> = mm
            .mesh
            .edges()
            .filter(|&e| !mm.mesh.is_boundary_edge(e))
            .map(|e| mm.mesh.edge_vertices(e))
            .collect();
        let mut swaps = 0;
        for (a, b) in pairs {
            if let Some(e) = mm.mesh.find_edge(a, b) {
                if try_metric_swap(mm, e) {
                    swaps += 1;
                }
            }
        }
        total += swaps;
        if swaps == 0 {
            break;
        }
    }
    total
}

/// Metric swaps restricted to edges shared by two triangles of `tris`.
fn swap_within(mm: &mut MetricMesh, tris: &[usize]) {
    for _ in 0..tris.len() {
        let mut any = false;
        for &t in tris {
            for local in 0..3u8 {
                let e = EdgeRef { tri: t, local };
                if mm.mesh.twin(e).is_some_and(|tw| tw.tri > t && tris.contains(&tw.tri)) && try_metric_swap(mm, e) {
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
    }
}

fn remove(mm: &mut MetricMesh, removed_at: &mut Vec<Point>) -> usize {
    let short = 1.0 / SQRT_2;
    let mut cand: Vec<(f64, usize)> = mm
        .mesh
        .vertices()
        .filter(|&v| !mm.mesh.is_boundary_vertex(v))
        .filter_map(|v| {
            let m = mm.mesh.vertex_neighbors(v).iter().map(|&r| mm.edge_len(v, r)).fold(f64::INFINITY, f64::min);
            (m < short).then_some((m, v))
        })
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut count = 0;
    for (_, v) in cand {
        if !mm.mesh.vertex_alive(v) {
            continue;
        }
        if mm.mesh.vertex_neighbors(v).iter().all(|&r| mm.edge_len(v, r) >= short) {
            continue;
        }
        let x = mm.mesh.point(v);
        mm.mesh.begin();
        match mm.mesh.remove_vertex(v) {
            Ok(new) => {
                swap_within(mm, &new);
                let too_long = new.iter().any(|&t| {
                    let [a, b, c] = mm.mesh.triangle(t);
                    mm.edge_len(a, b) > SQRT_2 || mm.edge_len(b, c) > SQRT_2 || mm.edge_len(c, a) > SQRT_2
                });
                if too_long {
                    mm.mesh.rollback();
                } else {
                    mm.mesh.commit();
                    removed_at.push(x);
                    count += 1;
                }
            }
            Err(_) => mm.mesh.rollback(),
        }
    }
    mm.sync();
    count
}

/// One Gauss-Seidel sweep of spring relaxation: each vertex moves toward
/// the average of its neighbors weighted by metric edge length.
fn smooth(mm: &mut MetricMesh, relax: f64, g: &dyn Fn(Point) -> f64) -> (usize, f64, f64, usize) {
    let verts: Vec<usize> = mm.mesh.vertices().collect();
    let (mut moved, mut max, mut sum, mut visits) = (0, 0.0f64, 0.0, 0);
    for v in verts {
        let slide = if mm.mesh.is_boundary_vertex(v) {
            let Some((a, b)) = mm.mesh.boundary_slide_range(v) else { continue };
            let (xa, xb) = (mm.mesh.point(a), mm.mesh.point(b));
            let l = dist(xa, xb);
            Some([(xb[0] - xa[0]) / l, (xb[1] - xa[1]) / l])
        } else {
            None
        };
        visits += 1;
        let x = mm.mesh.point(v);
        let ring = mm.mesh.vertex_neighbors(v);
        let (mut wx, mut wy, mut ws) = (0.0, 0.0, 0.0);
        for &r in &ring {
            let w = mm.edge_len(v, r);
            let p = mm.mesh.point(r);
            wx += w * p[0];
            wy += w * p[1];
            ws += w;
        }
        if !(ws > 0.0) {
            continue;
        }
        let mut d = [relax * (wx / ws - x[0]), relax * (wy / ws - x[1])];
        if let Some(t) = slide {
            let s = d[0] * t[0] + d[1] * t[1];
            d = [s * t[0], s * t[1]];
        }
        for _ in 0..4 {
            let to = [x[0] + d[0], x[1] + d[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if len == 0.0 {
                break;
            }
            if mm.mesh.move_vertex(v, to).is_ok() {
                if slide.is_some() {
                    mm.u[v] = g(to);
                }
                moved += 1;
                max = max.max(len);
                sum += len;
                break;
            }
            d = [0.5 * d[0], 0.5 * d[1]];
        }
    }
    (moved, max, sum, visits)
}

/// One remeshing pass against a fixed metric: split long edges, swap,
/// remove vertices with only short edges, swap, smooth.
pub fn metric_adapt_iteration(mm: &mut MetricMesh, g: &dyn Fn(Point) -> f64, cfg: &MetricConfig) -> StepCounts {
    let mut c = StepCounts::default();
    let nv0 = mm.mesh.num_vertices();
    c.refinements = refine(mm, g);
    c.refine_pct = 100.0 * c.refinements as f64 / nv0 as f64;
    let ne1 = mm.mesh.num_edges();
    c.swaps_after_refinement = swap_pass(mm, cfg.max_swap_passes);
    c.swap_ref_pct = 100.0 * c.swaps_after_refinement as f64 / ne1 as f64;
    let nv1 = mm.mesh.num_vertices();
    c.derefinements = remove(mm, &mut c.removed_at);
    c.deref_pct = 100.0 * c.derefinements as f64 / nv1 as f64;
    let ne2 = mm.mesh.num_edges();
    c.swaps_after_derefinement = swap_pass(mm, cfg.max_swap_passes);
    c.swap_deref_pct = 100.0 * c.swaps_after_derefinement as f64 / ne2 as f64;
    let (m, mx, s, n) = smooth(mm, cfg.relax, g);
    c.moves = m;
    c.move_max = mx;
    c.move_mean = if n > 0 { s / n as f64 } else { 0.0 };
    c
}

/// Metric-driven strategy for the outer loop.
pub struct MetricStrategy {
    pub problem: ProblemSpec,
    pub config: MetricConfig,
    /// Unit-edge fraction against the driving metric after each adaptation step.
    pub unit_history: Vec<f64>,
}

impl MetricStrategy {
    pub fn new(problem: ProblemSpec, config: MetricConfig) -> Self {
        MetricStrategy { problem, config, unit_history: Vec::new() }
    }

    /// Metric of the current solution.
    pub fn build_metric(&self, mesh: &Mesh, u: &[f64]) -> Result<(Vec<Sym2>, Analysis), AdaptError> {
        let rec = recover_gradient(mesh, u, self.config.recovery);
        let opts = EstimatorOptions { drop_residual: false, ..self.config.estimator };
        let est = compute_estimates(mesh, u, &rec, &self.problem, &opts)?;
        let metric = match self.config.source {
            MetricSource::Residual { tol } => {
                residual_metric(
                mesh,
                &est,
                tol,
                self.config.drop_residual,
                self.config.scaling,
                self.config.combine,
                &self.config.clamp,
            )
            }
            MetricSource::Hessian { e_d } => hessian_metric(&ls_hessian(mesh, u).h, e_d, &self.config.clamp),
        };
        let n = mesh.num_triangles() as f64;
        let count = |l: u32| mesh.triangles().filter(|&t| est.elems[t].resid_level == l).count() as f64;
        let an = Analysis {
            estimated_error: est.global_eta(mesh),
            sub2_pct: 100.0 * count(2) / n,
            sub3_pct: 100.0 * count(3) / n,
            indicator: est.elems.iter().map(|e| e.eta).collect(),
        };
        Ok((metric, an))
    }
}

impl Strategy for MetricStrategy {
    type State = MetricMesh;

    fn analyze(&mut self, mesh: Mesh, u: Vec<f64>) -> Result<(MetricMesh, Analysis), AdaptError> {
        let (metric, an) = self.build_metric(&mesh, &u)?;
        Ok((MetricMesh { mesh, metric, u }, an))
    }

    fn mesh<'a>(&self, s: &'a MetricMesh) -> &'a Mesh {
        &s.mesh
    }

    fn u<'a>(&self, s: &'a MetricMesh) -> &'a [f64] {
        &s.u
    }

    fn adapt(&mut self, mut s: MetricMesh) -> Result<StepOutput, AdaptError> {
        let g = self.problem.g.clone();
        let nv0 = s.mesh.num_vertices() as f64;
        let mut total = StepCounts::default();
        let (mut sum_disp, mut visits) = (0.0, 0.0);
        for _ in 0..self.config.passes.max(1) {
            let c = metric_adapt_iteration(&mut s, &*g, &self.config);
            total.refinements += c.refinements;
            total.derefinements += c.derefinements;
            total.swaps_after_refinement += c.swaps_after_refinement;
            total.swaps_after_derefinement += c.swaps_after_derefinement;
            total.swap_ref_pct += c.swap_ref_pct;
            total.swap_deref_pct += c.swap_deref_pct;
            total.moves += c.moves;
            total.move_max = total.move_max.max(c.move_max);
            sum_disp += c.move_mean;
            visits += 1.0;
            total.removed_at.extend(c.removed_at);
            if c.refinements == 0 && c.derefinements == 0 {
                break;
            }
        }
        total.refine_pct = 100.0 * total.refinements as f64 / nv0;
        total.deref_pct = 100.0 * total.derefinements as f64 / nv0;
        total.move_mean = sum_disp / visits;
        self.unit_history.push(unit_fraction(&s));
        let (mesh, u) = compact_with(s.mesh, &s.u);
        Ok(StepOutput { mesh, u, counts: total })
    }

    fn into_parts(&mut self, s: MetricMesh) -> (Mesh, Vec<f64>) {
        (s.mesh, s.u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square, Diagonal};

    fn with_metric(n: usize, m: Sym2) -> MetricMesh {
        let mesh = unit_square(n, n, Diagonal::Right);
        let nv = mesh.vertex_capacity();
        MetricMesh { mesh, metric: vec![m; nv], u: vec![0.0; nv] }
    }

    #[test]
    fn unit_mesh_under_matching_metric_is_left_alone() {
        let mut mm = with_metric(8, Sym2::scaled_identity(64.0));
        let c = metric_adapt_iteration(&mut mm, &|_| 0.0, &MetricConfig::default());
        assert_eq!(c.refinements, 0);
        assert_eq!(c.derefinements, 0);
    }

    #[test]
    fn anisotropic_metric_refines_across_x() {
        let mut mm = with_metric(4, Sym2::diag(100.0, 1.0));
        for _ in 0..10 {
            metric_adapt_iteration(&mut mm, &|_| 0.0, &MetricConfig::default());
        }
        mm.mesh.check().unwrap();
        assert!(unit_fraction(&mm) > 0.5, "{}", unit_fraction(&mm));
    }
}
