//! Run configuration: a TOML file of `key = value` pairs, then `--set`
//! overrides, then dedicated flags. Unknown keys are rejected at every layer.

use std::fmt;
use std::path::{Path, PathBuf};

use aniso_core::adapt::ErrorMode;
use aniso_core::cases::{case_u1, case_u2, TestCase};
use aniso_core::metric::{Combine, MetricScaling};
use aniso_core::recovery::RecoveryMethod;
use aniso_core::study::Method;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid value for '{key}': {msg}")]
    Value { key: String, msg: String },
}

fn bad(key: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError::Value { key: key.to_owned(), msg: msg.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    #[default]
    U1,
    U2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    #[default]
    H1,
    L2Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSection {
    /// Combine element metrics at vertices by intersection (else averaging).
    pub intersection: bool,
    /// Build the residual metric from edge jumps only.
    pub drop_residual_term: bool,
    /// `asymptotic` or `frozen`.
    pub scaling: String,
    /// Remeshing passes per solve.
    pub passes: usize,
}

impl Default for MetricSection {
    fn default() -> Self {
        MetricSection { intersection: true, drop_residual_term: false, scaling: "asymptotic".into(), passes: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    /// Methods to compare; empty means all of them.
    pub methods: Vec<String>,
    /// Level ladder applied to every residual or hierarchical method.
    pub tols: Vec<f64>,
    /// Ladder for the Hessian metric method.
    pub e_ds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub case: CaseName,
    pub alpha: f64,
    pub method: String,
    pub norm: Norm,
    /// Global tolerance of the residual and hierarchical methods.
    pub tol: f64,
    /// Interpolation error target of the Hessian metric method.
    pub e_d: f64,
    pub recovery: String,
    pub max_iters: usize,
    pub subdivision_eps: f64,
    pub output: PathBuf,
    /// Mesh file to start from; a uniform mesh is generated otherwise.
    pub mesh: Option<PathBuf>,
    /// Cells per side of the generated uniform mesh.
    pub uniform: usize,
    /// Recorded in the manifest. The algorithms have no random tie-breaks,
    /// so it does not change results.
    pub seed: u64,
    /// Include wall-clock columns in CSV outputs.
    pub timings: bool,
    pub metric: MetricSection,
    pub study: StudySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: CaseName::U1,
            alpha: 1000.0,
            method: Method::ResidualElement.as_str().into(),
            norm: Norm::H1,
            tol: 0.125,
            e_d: 1e-3,
            recovery: "zhang-naga".into(),
            max_iters: 40,
            subdivision_eps: 0.05,
            output: PathBuf::from("out"),
            mesh: None,
            uniform: 10,
            seed: 0,
            timings: false,
            metric: MetricSection::default(),
            study: StudySection::default(),
        }
    }
}

fn toml_err(e: toml::de::Error) -> ConfigError {
    ConfigError::Parse(e.message().to_owned())
}

/// Merges `src` into `dst`, table by table.
fn merge(dst: &mut toml::Table, src: toml::Table) {
    for (k, v) in src {
        match (dst.get_mut(&k), v) {
            (Some(toml::Value::Table(d)), toml::Value::Table(s)) => merge(d, s),
            (_, v) => {
                dst.insert(k, v);
            }
        }
    }
}

/// Parses `key=value`. Values that are not valid TOML are taken as strings,
/// so `--set case=u2` works without quoting.
fn parse_override(item: &str) -> Result<toml::Table, ConfigError> {
    let (key, value) =
        item.split_once('=').ok_or_else(|| ConfigError::Parse(format!("override '{item}' is not key=value")))?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        return Err(ConfigError::Parse(format!("override '{item}' has an empty key")));
    }
    let doc = format!("{key} = {value}");
    match doc.parse::<toml::Table>() {
        Ok(t) => Ok(t),
        Err(_) => format!("{key} = {}", toml::Value::String(value.to_owned())).parse::<toml::Table>().map_err(toml_err),
    }
}

impl RunConfig {
    /// Layers a config file (if any) and overrides on top of the defaults.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        let mut table = toml::Table::new();
        if let Some(path) = file {
            let text =
                std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
            merge(&mut table, text.parse::<toml::Table>().map_err(toml_err)?);
        }
        for o in overrides {
            merge(&mut table, parse_override(o)?);
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(toml_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(bad(key, format!("{x} is not a positive number")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("tol", self.tol)?;
        positive("e_d", self.e_d)?;
        positive("subdivision_eps", self.subdivision_eps)?;
        if self.max_iters == 0 {
            return Err(bad("max_iters", "must be at least 1"));
        }
        if self.uniform == 0 {
            return Err(bad("uniform", "must be at least 1"));
        }
        if self.metric.passes == 0 {
            return Err(bad("metric.passes", "must be at least 1"));
        }
        for &x in self.study.tols.iter().chain(&self.study.e_ds) {
            positive("study levels", x)?;
        }
        self.method()?;
        self.recovery()?;
        self.scaling()?;
        for m in &self.study.methods {
            m.parse::<Method>().map_err(|e| bad("study.methods", e))?;
        }
        Ok(())
    }

    pub fn method(&self) -> Result<Method, ConfigError> {
        self.method.parse().map_err(|e| bad("method", e))
    }

    pub fn recovery(&self) -> Result<RecoveryMethod, ConfigError> {
        self.recovery.parse().map_err(|e| bad("recovery", e))
    }

    pub fn scaling(&self) -> Result<MetricScaling, ConfigError> {
        self.metric.scaling.parse().map_err(|e| bad("metric.scaling", e))
    }

    pub fn combine(&self) -> Combine {
        if self.metric.intersection {
            Combine::Intersect
        } else {
            Combine::Average
        }
    }

    pub fn mode(&self) -> ErrorMode {
        match self.norm {
            Norm::H1 => ErrorMode::ResidualH1,
            Norm::L2Hybrid => ErrorMode::ResidualL2Hybrid,
        }
    }

    pub fn case(&self) -> TestCase {
        match self.case {
            CaseName::U1 => case_u1(),
            CaseName::U2 => case_u2(self.alpha),
        }
    }

    /// Tolerance or interpolation target of a method.
    pub fn level(&self, method: Method) -> f64 {
        if method == Method::HessianMetric {
            self.e_d
        } else {
            self.tol
        }
    }

    /// (method, ladder) pairs of a study.
    pub fn ladders(&self) -> Result<Vec<(Method, Vec<f64>)>, ConfigError> {
        let methods: Vec<Method> = if self.study.methods.is_empty() {
            Method::ALL.to_vec()
        } else {
            self.study.methods.iter().map(|m| m.parse().map_err(|e| bad("study.methods", e))).collect::<Result<_, _>>()?
        };
        let mut out = Vec::new();
        for m in methods {
            let ladder = if m == Method::HessianMetric { &self.study.e_ds } else { &self.study.tols };
            let ladder = if ladder.is_empty() { vec![self.level(m)] } else { ladder.clone() };
            out.push((m, ladder));
        }
        Ok(out)
    }
}
