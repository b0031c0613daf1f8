//! Convergence studies comparing the adaptation methods on a test case.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::adapt::{
    run_loop, AdaptConfig, AdaptError, ElementStrategy, ErrorMode, IterationState, LoopConfig, LoopOutcome,
};
use crate::cases::TestCase;
use crate::estimate::{mean_std, percentile};
use crate::mesh::{unit_square, write_ascii, write_vtk, Diagonal, Mesh};
use crate::metric::{MetricConfig, MetricSource, MetricStrategy};

/// The four adaptation techniques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ResidualElement,
    ResidualMetric,
    HessianMetric,
    Hierarchical,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ResidualElement, Method::ResidualMetric, Method::HessianMetric, Method::Hierarchical];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ResidualElement => "residual-element",
            Method::ResidualMetric => "residual-metric",
            Method::HessianMetric => "hessian-metric",
            Method::Hierarchical => "hierarchical",
        }
    }

    /// Expected exponent `p` in `vertices ~ level^p`, used to seed calibration.
    fn level_exponent(self, mode: ErrorMode) -> f64 {
        match self {
            Method::ResidualElement if mode == ErrorMode::ResidualL2Hybrid => -1.0,
            Method::ResidualElement | Method::ResidualMetric => -2.0,
            Method::HessianMetric | Method::Hierarchical => -1.0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            format!("unknown method '{s}' (expected residual-element, residual-metric, hessian-metric or hierarchical)")
        })
    }
}

/// Settings shared by every run of a study.
#[derive(Debug, Clone)]
pub struct StudySettings {
    /// Element adaptation settings; `tol` is replaced by the run level and
    /// `mode` is used for the residual-element method.
    pub adapt: AdaptConfig,
    /// Metric settings; the source is replaced per run.
    pub metric: MetricConfig,
    pub looping: LoopConfig,
    /// Cells per side of the uniform starting mesh.
    pub initial_cells: usize,
    /// Starting mesh used instead of the uniform one when present.
    pub initial_mesh: Option<Mesh>,
    /// Iterations after stabilization over which the error envelope is taken.
    pub envelope_iters: usize,
    /// Directory for mesh snapshots at iterations 1, 5 and at the end.
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings {
            adapt: AdaptConfig::default(),
            metric: MetricConfig::default(),
            looping: LoopConfig::default(),
            initial_cells: 10,
            initial_mesh: None,
            envelope_iters: 0,
            snapshot_dir: None,
        }
    }
}

/// Outcome of one (method, level) run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyRow {
    pub method: String,
    pub level: f64,
    pub vertices: usize,
    pub triangles: usize,
    pub energy_error: f64,
    pub l2_error: f64,
    /// Global estimate over the exact error in the norm the method targets.
    pub effectivity: f64,
    pub mean_h1: f64,
    pub std_h1: f64,
    pub mean_l2: f64,
    pub std_l2: f64,
    /// `log10` range between the 1st and 99th percentiles of the element errors.
    pub h1_log_spread: f64,
    pub l2_log_spread: f64,
    pub seconds: f64,
    pub iterations: usize,
    pub stabilized_at: Option<usize>,
    /// Smallest and largest energy error from stabilization to the end.
    pub energy_envelope: (f64, f64),
    pub l2_envelope: (f64, f64),
    /// Set when the run failed; the numeric fields are then meaningless.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
}

impl StudyResult {
    pub const CSV_HEADER: &'static str = "method,level,vertices,triangles,energy_error,l2_error,effectivity,\
mean_h1,std_h1,mean_l2,std_l2,h1_log_spread,l2_log_spread,iterations,stabilized_at,energy_min,energy_max,l2_min,l2_max,failure,seconds";

    pub fn to_csv(&self, with_timings: bool) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let stab = r.stabilized_at.map(|k| k.to_string()).unwrap_or_default();
            let secs = if with_timings { format!("{:.3}", r.seconds) } else { String::new() };
            let fail = r.failure.as_deref().unwrap_or("").replace([',', '\n'], ";");
            s.push_str(&format!(
                "{},{:.6e},{},{},{:.6e},{:.6e},{:.4},{:.6e},{:.6e},{:.6e},{:.6e},{:.4},{:.4},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{},{}\n",
                r.method,
                r.level,
                r.vertices,
                r.triangles,
                r.energy_error,
                r.l2_error,
                r.effectivity,
                r.mean_h1,
                r.std_h1,
                r.mean_l2,
                r.std_l2,
                r.h1_log_spread,
                r.l2_log_spread,
                r.iterations,
                stab,
                r.energy_envelope.0,
                r.energy_envelope.1,
                r.l2_envelope.0,
                r.l2_envelope.1,
                fail,
                secs
            ));
        }
        s
    }

    /// Rows of one method that completed, in ladder order.
    pub fn method_rows(&self, m: Method) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(move |r| r.method == m.as_str() && r.failure.is_none())
    }
}

/// Least-squares slope of `log err` against `log n`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, e)| (n.ln(), e.ln())).collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Adapt(#[from] AdaptError),
    #[error("snapshot output failed: {0}")]
    Io(#[from] io::Error),
}

fn write_snapshot(dir: &Path, stem: &str, mesh: &Mesh, u: &[f64], cells: &[f64]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join(format!("{stem}.mesh")))?);
    write_ascii(mesh, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join(format!("{stem}.vtk")))?);
    write_vtk(mesh, &[("u", u)], &[("indicator", cells)], &mut w)?;
    w.flush()
}

/// The loop for `method` at `level`, returning the outcome and the
/// element-wise data needed for the study row.
pub fn run_method(
    case: &TestCase,
    method: Method,
    level: f64,
    settings: &StudySettings,
    mut observer: impl FnMut(&IterationState),
) -> Result<LoopOutcome, AdaptError> {
    let problem = case.problem();
    let mesh = match &settings.initial_mesh {
        Some(m) => m.clone(),
        None => unit_square(settings.initial_cells, settings.initial_cells, Diagonal::Right),
    };
    let mut looping = settings.looping.clone();
    looping.extra_iters = settings.envelope_iters;
    match method {
        Method::ResidualElement | Method::Hierarchical => {
            let mode = if method == Method::Hierarchical { ErrorMode::HierarchicalHybrid } else { settings.adapt.mode };
            let config = AdaptConfig { tol: level, mode, ..settings.adapt.clone() };
            config.validate()?;
            let mut s = ElementStrategy { problem: problem.clone(), config };
            run_loop(mesh, &problem, Some(case), &looping, &mut s, &mut observer)
        }
        Method::ResidualMetric | Method::HessianMetric => {
            let source = if method == Method::ResidualMetric {
                MetricSource::Residual { tol: level }
            } else {
                MetricSource::Hessian { e_d: level }
            };
            let mut s = MetricStrategy::new(problem.clone(), MetricConfig { source, ..settings.metric.clone() });
            run_loop(mesh, &problem, Some(case), &looping, &mut s, &mut observer)
        }
    }
}

/// Runs one (method, level) pair to stabilization and summarizes it.
pub fn run_one(case: &TestCase, method: Method, level: f64, settings: &StudySettings) -> Result<StudyRow, StudyError> {
    run_detailed(case, method, level, settings).map(|(row, _)| row)
}

/// [`run_one`], also returning the final mesh and solution.
pub fn run_detailed(
    case: &TestCase,
    method: Method,
    level: f64,
    settings: &StudySettings,
) -> Result<(StudyRow, LoopOutcome), StudyError> {
    let clock = Instant::now();
    let stem = format!("{}_{}_{level:.4e}", case.name, method.as_str());
    let mut snap_err: Option<io::Error> = None;
    let out = run_method(case, method, level, settings, |s| {
        if let Some(dir) = &settings.snapshot_dir {
            if s.iteration == 1 || s.iteration == 5 {
                if let Err(e) = write_snapshot(dir, &format!("{stem}_it{}", s.iteration), s.mesh, s.u, s.indicator) {
                    snap_err.get_or_insert(e);
                }
            }
        }
    })?;
    if let Some(e) = snap_err {
        return Err(e.into());
    }
    if let Some(dir) = &settings.snapshot_dir {
        let zero = vec![0.0; out.mesh.triangle_capacity()];
        write_snapshot(dir, &format!("{stem}_final"), &out.mesh, &out.u, &zero)?;
    }
    let errors = out.errors.as_ref().expect("exact solution is known");
    let h1: Vec<f64> = out.mesh.triangles().map(|t| errors.element_h1[t]).collect();
    let l2: Vec<f64> = out.mesh.triangles().map(|t| errors.element_l2[t]).collect();
    let (mean_h1, std_h1) = mean_std(&h1);
    let (mean_l2, std_l2) = mean_std(&l2);
    let spread = |v: &[f64]| {
        let logs: Vec<f64> = v.iter().filter(|&&x| x > 0.0).map(|x| x.log10()).collect();
        percentile(&logs, 99.0) - percentile(&logs, 1.0)
    };
    let rows = &out.report.rows;
    let last = rows.last().expect("at least one iteration");
    let l2_target = match method {
        Method::Hierarchical => true,
        Method::ResidualElement => settings.adapt.mode == ErrorMode::ResidualL2Hybrid,
        _ => false,
    };
    let effectivity = last.estimated_error / if l2_target { errors.l2 } else { errors.h1 };
    let from = out.report.stabilized_at.map_or(rows.len() - 1, |k| k - 1);
    let env = |f: fn(&crate::adapt::ReportRow) -> Option<f64>| {
        rows[from..].iter().filter_map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
    };
    let row = StudyRow {
        method: method.as_str().to_owned(),
        level,
        vertices: out.mesh.num_vertices(),
        triangles: out.mesh.num_triangles(),
        energy_error: errors.h1,
        l2_error: errors.l2,
        effectivity,
        mean_h1,
        std_h1,
        mean_l2,
        std_l2,
        h1_log_spread: spread(&h1),
        l2_log_spread: spread(&l2),
        seconds: clock.elapsed().as_secs_f64(),
        iterations: rows.len(),
        stabilized_at: out.report.stabilized_at,
        energy_envelope: env(|r| r.energy_error),
        l2_envelope: env(|r| r.l2_error),
        failure: None,
    };
    Ok((row, out))
}

fn failed_row(method: Method, level: f64, e: &StudyError) -> StudyRow {
    StudyRow { method: method.as_str().to_owned(), level, failure: Some(e.to_string()), ..Default::default() }
}

/// Runs every method over its level ladder. A failed run is recorded and
/// the study goes on.
pub fn run_study(case: &TestCase, ladders: &[(Method, Vec<f64>)], settings: &StudySettings) -> StudyResult {
    let mut result = StudyResult::default();
    for (method, levels) in ladders {
        let mut prev: Option<usize> = None;
        for &level in levels {
            let row = run_one(case, *method, level, settings).unwrap_or_else(|e| {
                log::error!("{method} at level {level:e} failed: {e}");
                failed_row(*method, level, &e)
            });
            if row.failure.is_none() {
                if prev.is_some_and(|p| row.vertices < p) {
                    log::warn!("{method}: vertex count fell from {} to {} as the level decreased", prev.unwrap(), row.vertices);
                }
                prev = Some(row.vertices);
            }
            result.rows.push(row);
        }
    }
    result
}

/// Searches for the level whose stabilized mesh has about `target`
/// vertices: a secant iteration on `log vertices` against `log level`,
/// started from `guess` and the method's nominal exponent. Stops within
/// `rel_tol` or after `max_runs` runs and returns the closest run.
pub fn calibrate(
    case: &TestCase,
    method: Method,
    target: usize,
    guess: f64,
    rel_tol: f64,
    max_runs: usize,
    settings: &StudySettings,
) -> Result<(StudyRow, LoopOutcome), StudyError> {
    let goal = (target as f64).ln();
    let mut slope = method.level_exponent(settings.adapt.mode);
    let mut level = guess;
    let mut last: Option<(f64, f64)> = None;
    let mut best: Option<(StudyRow, LoopOutcome)> = None;
    for _ in 0..max_runs.max(1) {
        let (row, out) = run_detailed(case, method, level, settings)?;
        let (x, y) = (level.ln(), (row.vertices as f64).ln());
        let miss = (row.vertices as f64 / target as f64 - 1.0).abs();
        let better = best.as_ref().map_or(true, |b| miss < (b.0.vertices as f64 / target as f64 - 1.0).abs());
        if better {
            best = Some((row, out));
        }
        if miss <= rel_tol {
            break;
        }
        if let Some((x0, y0)) = last {
            let s = (y - y0) / (x - x0);
            // keep the secant slope of the expected sign and magnitude
            if s.is_finite() && s < -0.25 && s > -8.0 {
                slope = s;
            }
        }
        last = Some((x, y));
        // limit each jump to a factor 4 in the level
        let step = ((goal - y) / slope).clamp(-4f64.ln(), 4f64.ln());
        level = (x + step).exp();
    }
    Ok(best.expect("at least one run"))
}
