//! Experiment configuration: one JSON file per run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nlsgeom_core::io::read_field_csv;
use nlsgeom_core::noether::ChargeKind;
use nlsgeom_core::presymplectic::{ghw_ansatz, GhwParams};
use nlsgeom_core::propagator::{exact_soliton, StepConfig};
use nlsgeom_core::{Field, Grid, NlsError, NonlinearityPower};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A configuration problem, located by its key path (`grid.n`, `charges[2]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() || self.key == "." {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: Option<GridSpec>,
    /// Nonlinearity exponent `p`.
    #[serde(default = "default_power")]
    pub power: f64,
    /// Time attached to the initial data.
    #[serde(default)]
    pub t0: f64,
    pub init: Option<InitSpec>,
    pub step: Option<StepSpec>,
    #[serde(default)]
    pub charges: Vec<String>,
    pub scan: Option<ScanSpec>,
    pub effective: Option<EffectiveSpec>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

fn default_power() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Sech,
    Gaussian,
}

/// Initial data.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitSpec {
    /// `η sech(η(x − z₀)) e^{i(vx + φ₀)}`.
    Soliton {
        eta: f64,
        #[serde(default)]
        v: f64,
        #[serde(default)]
        z0: f64,
        #[serde(default)]
        phi0: f64,
    },
    Ghw {
        eta: f64,
        #[serde(default)]
        z: f64,
        #[serde(default)]
        v: f64,
        #[serde(default)]
        phi: f64,
        a: f64,
        psi: f64,
        gamma: f64,
    },
    /// A field CSV (`x,re,im`); relative paths resolve against the config file.
    File { path: PathBuf },
    /// `amplitude · shape((x − center)/width) · e^{i velocity x}`.
    Expression {
        shape: Shape,
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        velocity: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub blowup_tail: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub manifold: String,
    pub gamma: Option<f64>,
    pub shear: Option<f64>,
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    /// Nodes along axis 1 and axis 2.
    pub resolution: [usize; 2],
    #[serde(default)]
    pub zero_tol: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DegeneracyTarget {
    pub param: String,
    pub to: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveSpec {
    pub manifold: String,
    pub gamma: Option<f64>,
    pub theta0: BTreeMap<String, f64>,
    /// Replace `theta0` by the Pfaffian zero between it and the point with
    /// `param` moved to `to`.
    pub start_on_degeneracy: Option<DegeneracyTarget>,
    #[serde(default = "yes")]
    pub compare_with_pde: bool,
    /// Added to `u(θ₀)` for the PDE run only.
    pub perturbation: Option<InitSpec>,
}

fn yes() -> bool {
    true
}

/// A parsed config together with the raw JSON and the directory relative
/// paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub raw: serde_json::Value,
    pub base_dir: PathBuf,
}

pub fn parse_config(text: &str) -> Result<(ExperimentConfig, serde_json::Value), ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        ConfigError::new(key, e.into_inner().to_string())
    })?;
    let raw = serde_json::from_str(text).map_err(|e| ConfigError::new("", e.to_string()))?;
    Ok((config, raw))
}

/// Reads and parses a config file. The outer error is an I/O failure.
pub fn load_config(path: &Path) -> std::io::Result<Result<LoadedConfig, ConfigError>> {
    let text = std::fs::read_to_string(path)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(parse_config(&text).map(|(config, raw)| LoadedConfig {
        config,
        raw,
        base_dir,
    }))
}

impl ExperimentConfig {
    pub fn power(&self) -> Result<NonlinearityPower, ConfigError> {
        NonlinearityPower::new(self.power).map_err(|e| ConfigError::new("power", e.to_string()))
    }

    pub fn grid(&self) -> Result<Arc<Grid>, ConfigError> {
        let spec = self
            .grid
            .ok_or_else(|| ConfigError::new("grid", "missing; needs {n, length}"))?;
        Grid::new(spec.n, spec.length).map_err(|e| ConfigError::new("grid", e.to_string()))
    }

    pub fn step(&self) -> Result<StepConfig, ConfigError> {
        let s = self
            .step
            .ok_or_else(|| ConfigError::new("step", "missing; needs {dt, t_final, stride}"))?;
        let cfg = StepConfig::new(s.dt, s.t_final, s.stride).map_err(|e| match e {
            NlsError::InvalidParameter { name, reason } => ConfigError::new(step_key(&name), reason),
            other => ConfigError::new("step", other.to_string()),
        })?;
        Ok(match s.blowup_tail {
            Some(tail) if tail > 0.0 => cfg.with_blowup_tail(tail),
            Some(_) => return Err(ConfigError::new("step.blowup_tail", "must be positive")),
            None => cfg,
        })
    }

    /// The requested charges, or every charge compatible with `p` when the
    /// list is empty.
    pub fn charge_kinds(&self) -> Result<Vec<ChargeKind>, ConfigError> {
        if self.charges.is_empty() {
            return Ok(ChargeKind::ALL
                .into_iter()
                .filter(|k| k.spec().requires_p.is_none_or(|p| p == self.power))
                .collect());
        }
        self.charges
            .iter()
            .enumerate()
            .map(|(i, name)| {
                ChargeKind::from_name(name).ok_or_else(|| {
                    let known: Vec<&str> = ChargeKind::ALL.iter().map(|k| k.name()).collect();
                    ConfigError::new(
                        format!("charges[{i}]"),
                        format!("unknown charge `{name}`; known: {known:?}"),
                    )
                })
            })
            .collect()
    }

    /// Output directory from `--output-dir` or the config.
    pub fn output_dir(&self, cli_override: Option<&Path>, base_dir: &Path) -> Result<PathBuf, ConfigError> {
        match (cli_override, &self.output_dir) {
            (Some(p), _) => Ok(p.to_path_buf()),
            (None, Some(p)) if p.is_absolute() => Ok(p.clone()),
            (None, Some(p)) => Ok(base_dir.join(p)),
            (None, None) => Err(ConfigError::new(
                "output_dir",
                "missing; set it or pass --output-dir",
            )),
        }
    }
}

fn step_key(name: &str) -> String {
    match name {
        "observer_stride" => "step.stride".into(),
        other => format!("step.{other}"),
    }
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

impl InitSpec {
    /// Builds the field; `grid` may be `None` only for file input.
    pub fn build(
        &self,
        key: &str,
        grid: Option<&Arc<Grid>>,
        base_dir: &Path,
    ) -> Result<BuiltInit, ConfigError> {
        let need_grid = || grid.ok_or_else(|| ConfigError::new("grid", format!("required by `{key}`")));
        let wrap = |e: NlsError| ConfigError::new(key, e.to_string());
        let field = match *self {
            InitSpec::Soliton { eta, v, z0, phi0 } => {
                exact_soliton(eta, v, z0, phi0, 0.0, need_grid()?).map_err(wrap)?
            }
            InitSpec::Ghw {
                eta,
                z,
                v,
                phi,
                a,
                psi,
                gamma,
            } => {
                let q = GhwParams {
                    eta,
                    z,
                    v,
                    phi,
                    a,
                    psi,
                };
                ghw_ansatz(need_grid()?, &q, gamma).map_err(wrap)?
            }
            InitSpec::File { ref path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let field = match read_field_csv(&full) {
                    Ok(f) => f,
                    Err(NlsError::Io(e)) => return Ok(BuiltInit::IoFailure(full, e)),
                    Err(e) => return Err(ConfigError::new(format!("{key}.path"), e.to_string())),
                };
                if let Some(g) = grid {
                    if !field.grid().same_as(g) {
                        return Err(ConfigError::new(
                            format!("{key}.path"),
                            format!(
                                "field grid (n = {}, length = {}) differs from `grid`",
                                field.grid().n(),
                                field.grid().length()
                            ),
                        ));
                    }
                }
                field
            }
            InitSpec::Expression {
                shape,
                amplitude,
                width,
                center,
                velocity,
            } => {
                if !(width > 0.0 && width.is_finite()) {
                    return Err(ConfigError::new(format!("{key}.width"), "must be positive"));
                }
                if !amplitude.is_finite() {
                    return Err(ConfigError::new(format!("{key}.amplitude"), "must be finite"));
                }
                let profile = move |y: f64| match shape {
                    Shape::Sech => sech(y),
                    Shape::Gaussian => (-y * y).exp(),
                };
                Field::from_fn(need_grid()?, |x| {
                    Complex64::from_polar(amplitude * profile((x - center) / width), velocity * x)
                })
            }
        };
        Ok(BuiltInit::Field(field))
    }
}

/// File-backed initial data can fail with an I/O error, which is not a
/// config problem.
#[derive(Debug)]
pub enum BuiltInit {
    Field(Field),
    IoFailure(PathBuf, std::io::Error),
}
