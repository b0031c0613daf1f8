//! Element-based adaptation: local refinement, swapping, node movement and
//! node removal driven by per-element error indicators.

mod driver;
mod local;

use std::fmt;
use std::str::FromStr;

pub use driver::{
    run_element_adaptation, run_loop, AdaptError, Analysis, ElementStrategy, IterationState, LoopConfig, LoopOutcome,
    StepOutput, Strategy,
};
pub use driver::compact_with;
pub use local::{ElementState, LocalAdapter};

use crate::estimate::EstimatorOptions;
use crate::recovery::RecoveryMethod;

/// Which per-element quantity drives each kind of operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    /// `eta_K` for every operation.
    #[default]
    ResidualH1,
    /// `lambda_2 eta_K` for refinement and removal, `eta_K` for swaps and moves.
    ResidualL2Hybrid,
    /// L2 norm of the hierarchical correction for refinement and removal,
    /// its H1 seminorm for swaps and moves.
    HierarchicalHybrid,
}

impl ErrorMode {
    pub const ALL: [ErrorMode; 3] = [ErrorMode::ResidualH1, ErrorMode::ResidualL2Hybrid, ErrorMode::HierarchicalHybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorMode::ResidualH1 => "residual-h1",
            ErrorMode::ResidualL2Hybrid => "residual-l2-hybrid",
            ErrorMode::HierarchicalHybrid => "hierarchical-hybrid",
        }
    }

    pub(crate) fn uses_residual(self) -> bool {
        !matches!(self, ErrorMode::HierarchicalHybrid)
    }
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown error mode '{0}' (expected residual-h1, residual-l2-hybrid or hierarchical-hybrid)")]
pub struct UnknownMode(pub String);

impl FromStr for ErrorMode {
    type Err = UnknownMode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorMode::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| UnknownMode(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    /// Global error target.
    pub tol: f64,
    /// Elements with `size^2 > refine_factor * TOL^2 / N_T` have their edges
    /// proposed for refinement.
    pub refine_factor: f64,
    /// Repetitions of the swap-then-move sub-loop.
    pub smooth_repeats: usize,
    /// Adaptation steps between two solves.
    pub step_repeats: usize,
    pub mode: ErrorMode,
    pub recovery: RecoveryMethod,
    pub estimator: EstimatorOptions,
    /// Safety cap on full swap passes per sub-loop.
    pub max_swap_passes: usize,
    /// Backtracking halvings in a node move.
    pub move_halvings: usize,
    /// Initial node move, relative to the shortest incident edge.
    pub move_step: f64,
    /// Finite-difference step of the node move, relative to the shortest incident edge.
    pub move_fd_step: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            tol: 0.125,
            refine_factor: 1.5,
            smooth_repeats: 3,
            step_repeats: 1,
            mode: ErrorMode::ResidualH1,
            recovery: RecoveryMethod::ZhangNaga,
            estimator: EstimatorOptions::default(),
            max_swap_passes: 50,
            move_halvings: 5,
            move_step: 0.25,
            move_fd_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid adaptation config: {0}")]
pub struct ConfigError(pub String);

impl AdaptConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError(m.to_owned()));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol must be positive");
        }
        if !(self.refine_factor > 1.0) {
            return bad("refine factor must exceed 1");
        }
        if self.smooth_repeats == 0 || self.step_repeats == 0 {
            return bad("repetitions must be at least 1");
        }
        if !(self.estimator.subdivision_eps > 0.0) {
            return bad("subdivision eps must be positive");
        }
        if !(self.move_step > 0.0 && self.move_fd_step > 0.0) {
            return bad("move steps must be positive");
        }
        Ok(())
    }
}

/// Operation counts of one adaptation step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepCounts {
    pub refinements: usize,
    /// Relative to the vertex count before refinement, in percent.
    pub refine_pct: f64,
    pub derefinements: usize,
    /// Relative to the vertex count before removal, in percent.
    pub deref_pct: f64,
    pub swaps_after_refinement: usize,
    /// Relative to the edge count after refinement, in percent.
    pub swap_ref_pct: f64,
    pub swaps_after_derefinement: usize,
    /// Relative to the edge count after removal, in percent.
    pub swap_deref_pct: f64,
    pub moves: usize,
    pub move_max: f64,
    /// Mean over every visited movable vertex, unmoved ones counting as zero.
    pub move_mean: f64,
    /// Positions of removed vertices.
    pub removed_at: Vec<[f64; 2]>,
}

/// One row per outer iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportRow {
    pub iteration: usize,
    pub vertices: usize,
    pub triangles: usize,
    /// Global estimate of the quantity being controlled.
    pub estimated_error: f64,
    pub energy_error: Option<f64>,
    pub l2_error: Option<f64>,
    /// Percent of elements whose residual integral needed level 2 / level 3.
    pub sub2_pct: f64,
    pub sub3_pct: f64,
    /// Counts of the adaptation step that followed the solve (absent on the last row).
    pub step: Option<StepCounts>,
    pub cg_iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdaptReport {
    pub rows: Vec<ReportRow>,
    /// First iteration whose step counts fell below the stabilization threshold.
    pub stabilized_at: Option<usize>,
}

impl AdaptReport {
    pub const CSV_HEADER: &'static str = "iteration,vertices,triangles,estimated_error,energy_error,l2_error,\
refinements,refine_pct,derefinements,deref_pct,swaps_after_refinement,swap_ref_pct,\
swaps_after_derefinement,swap_deref_pct,moves,move_max,move_mean,sub2_pct,sub3_pct,cg_iterations,seconds";

    /// CSV with a fixed column order. Timings are left out when
    /// `with_timings` is false so that repeated runs compare byte for byte.
    pub fn to_csv(&self, with_timings: bool) -> String {
        use std::fmt::Write;
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_default();
        for r in &self.rows {
            write!(s, "{},{},{},{:.6e},{},{},", r.iteration, r.vertices, r.triangles, r.estimated_error, opt(r.energy_error), opt(r.l2_error)).ok();
            match &r.step {
                Some(c) => write!(
                    s,
                    "{},{:.2},{},{:.2},{},{:.2},{},{:.2},{},{:.3e},{:.3e},",
                    c.refinements,
                    c.refine_pct,
                    c.derefinements,
                    c.deref_pct,
                    c.swaps_after_refinement,
                    c.swap_ref_pct,
                    c.swaps_after_derefinement,
                    c.swap_deref_pct,
                    c.moves,
                    c.move_max,
                    c.move_mean
                ),
                None => write!(s, ",,,,,,,,,,,"),
            }
            .ok();
            let secs = if with_timings { format!("{:.3}", r.seconds) } else { String::new() };
            writeln!(s, "{:.2},{:.2},{},{}", r.sub2_pct, r.sub3_pct, r.cg_iterations, secs).ok();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_roundtrip() {
        for m in ErrorMode::ALL {
            assert_eq!(m.as_str().parse::<ErrorMode>().unwrap(), m);
        }
        assert!("h1".parse::<ErrorMode>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AdaptConfig::default().validate().is_ok());
        let c = AdaptConfig { refine_factor: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = AdaptConfig { tol: -1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = AdaptConfig { smooth_repeats: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_has_fixed_columns() {
        let rep = AdaptReport {
            rows: vec![
                ReportRow { iteration: 1, vertices: 121, step: Some(StepCounts::default()), ..Default::default() },
                ReportRow { iteration: 2, vertices: 300, ..Default::default() },
            ],
            stabilized_at: None,
        };
        let csv = rep.to_csv(false);
        let ncol = AdaptReport::CSV_HEADER.split(',').count();
        for line in csv.lines() {
            assert_eq!(line.split(',').count(), ncol, "{line}");
        }
    }
}
