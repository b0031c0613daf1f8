use std::time::Instant;

use super::{AdaptConfig, AdaptReport, ConfigError, LocalAdapter, ReportRow, StepCounts};
use crate::cases::TestCase;
use crate::estimate::EstimateError;
use crate::fem::{assemble_and_solve, exact_errors, ErrorNorms, ProblemSpec, SolveError, SolverOptions};
use crate::mesh::{Mesh, NONE};

#[derive(Debug, thiserror::Error)]
pub enum AdaptError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error("estimation failed: {0}")]
    Estimate(#[from] EstimateError),
}

/// Outer solve/adapt loop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub max_iters: usize,
    /// A step whose refinement and removal counts are both below this
    /// percentage of the vertex count marks the loop as stabilized.
    pub stable_pct: f64,
    /// Further adaptation steps after stabilization (oscillation envelope).
    pub extra_iters: usize,
    pub solver: SolverOptions,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig { max_iters: 40, stable_pct: 1.0, extra_iters: 0, solver: SolverOptions::default() }
    }
}

/// What the observer sees after each solve.
pub struct IterationState<'a> {
    pub iteration: usize,
    pub mesh: &'a Mesh,
    pub u: &'a [f64],
    /// Indicator that drives refinement, per triangle slot.
    pub indicator: &'a [f64],
    pub row: &'a ReportRow,
    pub errors: Option<&'a ErrorNorms>,
}

/// Result of analysing one solved mesh and of the adaptation that follows.
pub struct StepOutput {
    pub mesh: Mesh,
    /// Nodal values carried to the new mesh (warm start), indexed by the new slots.
    pub u: Vec<f64>,
    pub counts: StepCounts,
}

/// Information computed from a solution before adapting.
pub struct Analysis {
    pub estimated_error: f64,
    pub sub2_pct: f64,
    pub sub3_pct: f64,
    pub indicator: Vec<f64>,
}

/// An adaptation method as seen by the outer loop.
pub trait Strategy {
    type State;
    fn analyze(&mut self, mesh: Mesh, u: Vec<f64>) -> Result<(Self::State, Analysis), AdaptError>;
    fn mesh<'a>(&self, s: &'a Self::State) -> &'a Mesh;
    fn u<'a>(&self, s: &'a Self::State) -> &'a [f64];
    fn adapt(&mut self, s: Self::State) -> Result<StepOutput, AdaptError>;
    fn into_parts(&mut self, s: Self::State) -> (Mesh, Vec<f64>);
}

pub struct LoopOutcome {
    pub mesh: Mesh,
    pub u: Vec<f64>,
    pub report: AdaptReport,
    /// Exact errors on the final mesh, when the exact solution is known.
    pub errors: Option<ErrorNorms>,
}

/// Compacts the mesh and carries nodal values through the renumbering.
pub fn compact_with(mut mesh: Mesh, u: &[f64]) -> (Mesh, Vec<f64>) {
    let vmap = mesh.compact();
    let mut out = vec![0.0; mesh.vertex_capacity()];
    for (old, &new) in vmap.iter().enumerate() {
        if new != NONE {
            out[new] = u[old];
        }
    }
    (mesh, out)
}

/// Solve, analyze, observe, adapt; repeated until stabilization (plus
/// `extra_iters`) or `max_iters` solves.
pub fn run_loop<S: Strategy>(
    mesh: Mesh,
    problem: &ProblemSpec,
    exact: Option<&TestCase>,
    cfg: &LoopConfig,
    strategy: &mut S,
    mut observer: impl FnMut(&IterationState),
) -> Result<LoopOutcome, AdaptError> {
    let mut report = AdaptReport::default();
    let (mut mesh, mut warm) = {
        let n = mesh.vertex_capacity();
        (mesh, vec![0.0; n])
    };
    let mut extra_left: Option<usize> = None;
    for it in 1..=cfg.max_iters.max(1) {
        let clock = Instant::now();
        let (sol, cg) = assemble_and_solve(&mesh, problem, &cfg.solver, Some(&warm))?;
        if !cg.converged {
            log::warn!("iteration {it}: CG stopped at residual {:.3e}", cg.relative_residual);
        }
        let errors = exact.map(|c| exact_errors(&mesh, &sol.values, |p| c.u(p), |p| c.grad(p)));
        let (state, an) = strategy.analyze(mesh, sol.values)?;
        let m = strategy.mesh(&state);
        let mut row = ReportRow {
            iteration: it,
            vertices: m.num_vertices(),
            triangles: m.num_triangles(),
            estimated_error: an.estimated_error,
            energy_error: errors.as_ref().map(|e| e.h1),
            l2_error: errors.as_ref().map(|e| e.l2),
            sub2_pct: an.sub2_pct,
            sub3_pct: an.sub3_pct,
            step: None,
            cg_iterations: cg.iterations,
            seconds: 0.0,
        };
        let last = it == cfg.max_iters.max(1) || extra_left == Some(0);
        observer(&IterationState {
            iteration: it,
            mesh: m,
            u: strategy.u(&state),
            indicator: &an.indicator,
            row: &row,
            errors: errors.as_ref(),
        });
        if last {
            row.seconds = clock.elapsed().as_secs_f64();
            report.rows.push(row);
            let (mesh, u) = strategy.into_parts(state);
            return Ok(LoopOutcome { mesh, u, report, errors });
        }
        let out = strategy.adapt(state)?;
        let stable = out.counts.refine_pct < cfg.stable_pct && out.counts.deref_pct < cfg.stable_pct;
        log::info!(
            "iteration {it}: NV {} -> {}, +{} -{} swaps {}/{} est {:.4e}",
            row.vertices,
            out.mesh.num_vertices(),
            out.counts.refinements,
            out.counts.derefinements,
            out.counts.swaps_after_refinement,
            out.counts.swaps_after_derefinement,
            row.estimated_error
        );
        row.step = Some(out.counts);
        row.seconds = clock.elapsed().as_secs_f64();
        report.rows.push(row);
        extra_left = match extra_left {
            Some(k) => Some(k.saturating_sub(1)),
            None if stable => {
                report.stabilized_at = Some(it);
                Some(cfg.extra_iters)
            }
            None => None,
        };
        mesh = out.mesh;
        warm = out.u;
    }
    unreachable!("the final iteration returns")
}

/// Element-based strategy around [`LocalAdapter`].
pub struct ElementStrategy {
    pub problem: ProblemSpec,
    pub config: AdaptConfig,
}

impl Strategy for ElementStrategy {
    type State = LocalAdapter;

    fn analyze(&mut self, mesh: Mesh, u: Vec<f64>) -> Result<(LocalAdapter, Analysis), AdaptError> {
        let a = LocalAdapter::from_solution(mesh, u, &self.problem, &self.config)?;
        let (sub2_pct, sub3_pct) = a.subdivision_pct();
        let an = Analysis { estimated_error: a.global_size(), sub2_pct, sub3_pct, indicator: a.size_field() };
        Ok((a, an))
    }

    fn mesh<'a>(&self, s: &'a LocalAdapter) -> &'a Mesh {
        s.mesh()
    }

    fn u<'a>(&self, s: &'a LocalAdapter) -> &'a [f64] {
        s.u()
    }

    fn adapt(&mut self, mut s: LocalAdapter) -> Result<StepOutput, AdaptError> {
        let mut total = StepCounts::default();
        for rep in 0..self.config.step_repeats {
            let c = s.adapt_step();
            if rep == 0 {
                total = c;
            } else {
                merge(&mut total, c);
            }
        }
        let (mesh, u) = s.into_parts();
        let (mesh, u) = compact_with(mesh, &u);
        Ok(StepOutput { mesh, u, counts: total })
    }

    fn into_parts(&mut self, s: LocalAdapter) -> (Mesh, Vec<f64>) {
        s.into_parts()
    }
}

fn merge(a: &mut StepCounts, b: StepCounts) {
    a.refinements += b.refinements;
    a.refine_pct += b.refine_pct;
    a.derefinements += b.derefinements;
    a.deref_pct += b.deref_pct;
    a.swaps_after_refinement += b.swaps_after_refinement;
    a.swap_ref_pct += b.swap_ref_pct;
    a.swaps_after_derefinement += b.swaps_after_derefinement;
    a.swap_deref_pct += b.swap_deref_pct;
    a.moves += b.moves;
    a.move_max = a.move_max.max(b.move_max);
    a.move_mean = 0.5 * (a.move_mean + b.move_mean);
    a.removed_at.extend(b.removed_at);
}

/// Runs the element-based loop from `mesh`.
pub fn run_element_adaptation(
    mesh: Mesh,
    problem: &ProblemSpec,
    exact: Option<&TestCase>,
    adapt: &AdaptConfig,
    cfg: &LoopConfig,
    observer: impl FnMut(&IterationState),
) -> Result<LoopOutcome, AdaptError> {
    adapt.validate()?;
    let mut s = ElementStrategy { problem: problem.clone(), config: adapt.clone() };
    run_loop(mesh, problem, exact, cfg, &mut s, observer)
}
