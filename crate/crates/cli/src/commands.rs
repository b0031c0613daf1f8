use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use aniso_core::adapt::{AdaptConfig, LoopConfig};
use aniso_core::estimate::{compute_estimates, effectivity, write_estimates_csv, EstimateError, EstimatorOptions};
use aniso_core::fem::{assemble_and_solve, exact_errors, SolveError, SolverOptions};
use aniso_core::mesh::{read_ascii, unit_square, write_ascii, write_vtk, Diagonal, Mesh};
use aniso_core::metric::MetricConfig;
use aniso_core::recovery::recover_gradient;
use aniso_core::study::{run_detailed, run_study, StudyError, StudyResult, StudySettings};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("output failed: {0}")]
    Io(#[from] io::Error),
    #[error("solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error("estimation failed: {0}")]
    Estimate(#[from] EstimateError),
    #[error("{0}")]
    Study(#[from] StudyError),
    #[error("{0} of {1} study runs failed (see study.csv)")]
    StudyRows(usize, usize),
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    outputs: Vec<String>,
    summary: Value,
    failure: Option<String>,
    seconds: f64,
}

/// Collects written artifacts relative to the output directory.
struct Outputs {
    dir: PathBuf,
    names: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        self.names.push(name.to_owned());
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> io::Result<()> {
        self.write(name, |w| w.write_all(text.as_bytes()))
    }
}

fn initial_mesh(cfg: &RunConfig) -> Result<Mesh, ConfigError> {
    match &cfg.mesh {
        None => Ok(unit_square(cfg.uniform, cfg.uniform, Diagonal::Right)),
        Some(path) => read_mesh(path),
    }
}

fn read_mesh(path: &Path) -> Result<Mesh, ConfigError> {
    let file = File::open(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
    read_ascii(BufReader::new(file))
        .map(|(m, _)| m)
        .map_err(|e| ConfigError::Value { key: "mesh".into(), msg: format!("{}: {e}", path.display()) })
}

fn settings(cfg: &RunConfig, snapshots: Option<PathBuf>) -> Result<StudySettings, ConfigError> {
    let recovery = cfg.recovery()?;
    let estimator = EstimatorOptions { subdivision_eps: cfg.subdivision_eps, ..Default::default() };
    Ok(StudySettings {
        adapt: AdaptConfig { mode: cfg.mode(), recovery, estimator, ..Default::default() },
        metric: MetricConfig {
            combine: cfg.combine(),
            drop_residual: cfg.metric.drop_residual_term,
            scaling: cfg.scaling()?,
            recovery,
            estimator,
            passes: cfg.metric.passes,
            ..Default::default()
        },
        looping: LoopConfig { max_iters: cfg.max_iters, ..Default::default() },
        initial_cells: cfg.uniform,
        initial_mesh: cfg.mesh.as_deref().map(read_mesh).transpose()?,
        snapshot_dir: snapshots,
        ..Default::default()
    })
}

/// Runs a command and always leaves a manifest behind.
pub fn run(command: &str, cfg: &RunConfig) -> Result<(), RunError> {
    let clock = Instant::now();
    fs::create_dir_all(&cfg.output)?;
    let mut out = Outputs { dir: cfg.output.clone(), names: Vec::new() };
    let result = match command {
        "solve" => solve(cfg, &mut out, false),
        "estimate" => solve(cfg, &mut out, true),
        "adapt" => adapt(cfg, &mut out),
        "study" => study(cfg, &mut out),
        _ => unreachable!("unknown command {command}"),
    };
    let (summary, failure) = match &result {
        Ok(v) => (v.clone(), None),
        Err(RunError::StudyRows(..)) => (Value::Null, result.as_ref().err().map(|e| e.to_string())),
        Err(e) => (Value::Null, Some(e.to_string())),
    };
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        outputs: out.names.clone(),
        summary,
        failure,
        seconds: clock.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    out.text("manifest.json", &(json + "\n"))?;
    result.map(|_| ())
}

fn solve(cfg: &RunConfig, out: &mut Outputs, with_estimates: bool) -> Result<Value, RunError> {
    let case = cfg.case();
    let problem = case.problem();
    let mesh = initial_mesh(cfg)?;
    let (sol, cg) = assemble_and_solve(&mesh, &problem, &SolverOptions::default(), None)?;
    let err = exact_errors(&mesh, &sol.values, |p| case.u(p), |p| case.grad(p));
    out.write("mesh.mesh", |w| write_ascii(&mesh, w))?;
    let mut summary = json!({
        "vertices": mesh.num_vertices(),
        "triangles": mesh.num_triangles(),
        "energy_error": err.h1,
        "l2_error": err.l2,
        "cg_iterations": cg.iterations,
    });
    out.text(
        "solve.csv",
        &format!(
            "vertices,triangles,energy_error,l2_error,cg_iterations\n{},{},{:.6e},{:.6e},{}\n",
            mesh.num_vertices(),
            mesh.num_triangles(),
            err.h1,
            err.l2,
            cg.iterations
        ),
    )?;
    let mut cells: Vec<(&str, &[f64])> = vec![("error_h1", &err.element_h1), ("error_l2", &err.element_l2)];
    let eta: Vec<f64>;
    if with_estimates {
        let rec = recover_gradient(&mesh, &sol.values, cfg.recovery()?);
        let opts = EstimatorOptions { subdivision_eps: cfg.subdivision_eps, ..Default::default() };
        let est = compute_estimates(&mesh, &sol.values, &rec, &problem, &opts)?;
        out.write("estimates.csv", |w| write_estimates_csv(&mesh, &est, Some(&err), w))?;
        let (g, gs) = (est.global_eta(&mesh), est.global_eta_scaled(&mesh));
        summary["estimated_error"] = json!(g);
        summary["estimated_l2_error"] = json!(gs);
        summary["effectivity"] = json!(effectivity(g, err.h1));
        summary["l2_effectivity"] = json!(effectivity(gs, err.l2));
        eta = est.elems.iter().map(|e| e.eta).collect();
        cells.push(("eta", &eta));
    }
    out.write("solution.vtk", |w| write_vtk(&mesh, &[("u", &sol.values)], &cells, w))?;
    println!("{}", serde_json::to_string(&summary).map_err(io::Error::other)?);
    Ok(summary)
}

fn adapt(cfg: &RunConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let case = cfg.case();
    let method = cfg.method()?;
    let level = cfg.level(method);
    let s = settings(cfg, Some(out.dir.join("snapshots")))?;
    let (row, outcome) = run_detailed(&case, method, level, &s)?;
    out.names.push("snapshots/".into());
    out.text("report.csv", &outcome.report.to_csv(cfg.timings))?;
    out.text("summary.csv", &StudyResult { rows: vec![row.clone()] }.to_csv(cfg.timings))?;
    out.write("final.mesh", |w| write_ascii(&outcome.mesh, w))?;
    let mut cells: Vec<(&str, &[f64])> = Vec::new();
    if let Some(e) = &outcome.errors {
        cells.push(("error_h1", &e.element_h1));
        cells.push(("error_l2", &e.element_l2));
    }
    out.write("final.vtk", |w| write_vtk(&outcome.mesh, &[("u", &outcome.u)], &cells, w))?;
    let summary = json!({
        "method": row.method,
        "level": row.level,
        "vertices": row.vertices,
        "triangles": row.triangles,
        "energy_error": row.energy_error,
        "l2_error": row.l2_error,
        "effectivity": row.effectivity,
        "iterations": row.iterations,
        "stabilized_at": row.stabilized_at,
    });
    println!("{}", serde_json::to_string(&summary).map_err(io::Error::other)?);
    Ok(summary)
}

fn study(cfg: &RunConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let case = cfg.case();
    let ladders = cfg.ladders()?;
    let s = settings(cfg, None)?;
    let result = run_study(&case, &ladders, &s);
    out.text("study.csv", &result.to_csv(cfg.timings))?;
    let failed = result.rows.iter().filter(|r| r.failure.is_some()).count();
    print!("{}", result.to_csv(cfg.timings));
    if failed > 0 {
        return Err(RunError::StudyRows(failed, result.rows.len()));
    }
    Ok(json!({ "runs": result.rows.len() }))
}
