//! The subcommands. Each writes its outputs into one directory and returns
//! the list of files it produced.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nlsgeom_core::acceptance;
use nlsgeom_core::collective::{compare_with_pde, integrate_effective, EffectiveRun};
use nlsgeom_core::io::{
    drift_text, fmt_f64, scan_metadata, write_atomic, write_comparison_csv, write_drift_csv,
    write_effective_csv, write_json, write_observables_csv, write_scan_csv, write_trajectory,
};
use nlsgeom_core::noether::{drift_report, generic_charge, ChargeKind};
use nlsgeom_core::presymplectic::{
    bisect_pfaffian_zero, degeneracy_scan, AnsatzManifold, FiniteExample, Ghw, RestrictedGhw, ScanAxis,
    SingleSoliton, ToyCanonical,
};
use nlsgeom_core::propagator::evolve_from;
use nlsgeom_core::{Field, NlsError, NonlinearityPower, Trajectory};
use serde_json::{json, Value};

use crate::config::{BuiltInit, ConfigError, ExperimentConfig, InitSpec, LoadedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Config,
    Numerical,
    Io,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Config => 2,
            FailureKind::Numerical => 3,
            FailureKind::Io => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn config(e: ConfigError) -> Self {
        Failure {
            kind: FailureKind::Config,
            message: e.to_string(),
        }
    }

    pub fn io(context: &Path, e: impl fmt::Display) -> Self {
        Failure {
            kind: FailureKind::Io,
            message: format!("{}: {e}", context.display()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Sorts core errors into the three exit classes.
pub fn classify(e: &NlsError) -> FailureKind {
    match e {
        NlsError::BlowUp { .. }
        | NlsError::Degenerate { .. }
        | NlsError::NonFinite(_)
        | NlsError::LinearAlgebra(_)
        | NlsError::Sl2Pole { .. } => FailureKind::Numerical,
        NlsError::Io(_) => FailureKind::Io,
        _ => FailureKind::Config,
    }
}

impl From<NlsError> for Failure {
    fn from(e: NlsError) -> Self {
        Failure {
            kind: classify(&e),
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e)
    }
}

/// What a subcommand leaves behind: files written and an optional report
/// that goes into `report.json`. A failed run may still have written files.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<String>,
    pub summary: Vec<String>,
}

pub struct Context<'a> {
    pub loaded: &'a LoadedConfig,
    pub out: &'a Path,
}

impl Context<'_> {
    fn config(&self) -> &ExperimentConfig {
        &self.loaded.config
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn init_field(&self, spec: &InitSpec, key: &str, grid_required: bool) -> Result<Field, Failure> {
        let grid = match (&self.config().grid, grid_required) {
            (None, false) => None,
            _ => Some(self.config().grid()?),
        };
        match spec.build(key, grid.as_ref(), &self.loaded.base_dir)? {
            BuiltInit::Field(f) => Ok(f),
            BuiltInit::IoFailure(path, e) => Err(Failure::io(&path, e)),
        }
    }

    fn write_report(&self, out: &mut RunOutput, report: &Value) -> Result<(), Failure> {
        let path = self.path("report.json");
        write_json(&path, report).map_err(|e| Failure::io(&path, e))?;
        out.files.push("report.json".into());
        Ok(())
    }
}

fn io_err(path: &Path) -> impl Fn(NlsError) -> Failure + '_ {
    move |e| match e {
        NlsError::Io(err) => Failure::io(path, err),
        other => other.into(),
    }
}

fn write_run_tables(
    ctx: &Context,
    out: &mut RunOutput,
    traj: &Trajectory,
    kinds: &[ChargeKind],
) -> Result<Value, Failure> {
    let dir = ctx.path("trajectory");
    write_trajectory(&dir, traj).map_err(io_err(&dir))?;
    out.files.push("trajectory/index.csv".into());
    let obs = ctx.path("observables.csv");
    write_observables_csv(&obs, traj, kinds).map_err(io_err(&obs))?;
    out.files.push("observables.csv".into());
    let specs: Vec<_> = kinds.iter().map(|k| k.spec()).collect();
    let report = drift_report(traj, &specs)?;
    let drift = ctx.path("drift.csv");
    write_drift_csv(&drift, &report).map_err(io_err(&drift))?;
    out.files.push("drift.csv".into());
    let text = drift_text(&report);
    let txt = ctx.path("drift.txt");
    write_atomic(&txt, text.as_bytes()).map_err(io_err(&txt))?;
    out.files.push("drift.txt".into());
    out.summary.extend(text.lines().map(str::to_string));
    Ok(report
        .rows
        .iter()
        .map(|r| {
            (
                r.charge.clone(),
                json!({
                    "t0_value": r.t0_value,
                    "max_abs_drift": r.max_abs_drift,
                    "max_rel_drift": r.max_rel_drift,
                    "t_at_max": r.t_at_max,
                }),
            )
        })
        .collect::<serde_json::Map<_, _>>()
        .into())
}

/// Evolves the initial data and writes the trajectory, the charge series
/// and the drift report. A blow-up keeps the partial trajectory.
pub fn run_evolve(ctx: &Context, out: &mut RunOutput) -> Result<(), Failure> {
    let c = ctx.config();
    let p = c.power()?;
    let init = c
        .init
        .as_ref()
        .ok_or_else(|| ConfigError::new("init", "missing"))?;
    let grid_required = !matches!(init, InitSpec::File { .. });
    let u0 = ctx.init_field(init, "init", grid_required)?;
    let step = c.step()?;
    let kinds = c.charge_kinds()?;
    for (i, k) in kinds.iter().enumerate() {
        if let Some(req) = k.spec().requires_p {
            if req != p.value() {
                return Err(ConfigError::new(
                    format!("charges[{i}]"),
                    format!(
                        "`{}` is conserved only for p = {req}, config has p = {}",
                        k.name(),
                        p.value()
                    ),
                )
                .into());
            }
        }
    }
    match evolve_from(&u0, c.t0, p, &step) {
        Ok(traj) => {
            let drift = write_run_tables(ctx, out, &traj, &kinds)?;
            ctx.write_report(
                out,
                &json!({"status": "ok", "t_final": traj.times().last(), "records": traj.len(), "drift": drift}),
            )
        }
        Err(NlsError::BlowUp {
            t_last_valid,
            partial,
        }) => {
            let drift = write_run_tables(ctx, out, &partial, &kinds)?;
            ctx.write_report(
                out,
                &json!({"status": "blow-up", "t_last_valid": t_last_valid, "records": partial.len(), "drift": drift}),
            )?;
            Err(Failure {
                kind: FailureKind::Numerical,
                message: format!("blow-up detected; last valid time t = {t_last_valid}"),
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Evaluates every charge on the initial data at time `t0`.
pub fn run_charges(ctx: &Context, out: &mut RunOutput) -> Result<(), Failure> {
    let c = ctx.config();
    let p = c.power()?;
    let init = c
        .init
        .as_ref()
        .ok_or_else(|| ConfigError::new("init", "missing"))?;
    let grid_required = !matches!(init, InitSpec::File { .. });
    let u = ctx.init_field(init, "init", grid_required)?;
    let kinds = if c.charges.is_empty() {
        ChargeKind::ALL.to_vec()
    } else {
        c.charge_kinds()?
    };
    let mut text = String::from("charge,closed_form,generic,generic_factor,conserved\n");
    for k in kinds {
        let spec = k.spec();
        let closed = k.closed_form(&u, c.t0, p);
        let generic = generic_charge(k, &u, c.t0, p)?;
        let conserved = spec.requires_p.is_none_or(|q| q == p.value());
        text += &format!(
            "{},{},{},{},{}\n",
            k.name(),
            fmt_f64(closed),
            fmt_f64(generic),
            fmt_f64(spec.generic_factor),
            conserved
        );
        out.summary.push(format!("{:<16} {}", k.name(), fmt_f64(closed)));
    }
    let path = ctx.path("charges.csv");
    write_atomic(&path, text.as_bytes()).map_err(io_err(&path))?;
    out.files.push("charges.csv".into());
    Ok(())
}

/// Manifold names accepted by `scan`.
pub const SCAN_MANIFOLDS: [&str; 6] = [
    "single-soliton",
    "ghw",
    "ghw-restricted",
    "finite-example",
    "toy2",
    "toy4",
];

/// Manifold names accepted by `effective`.
pub const FIELD_MANIFOLDS: [&str; 3] = ["single-soliton", "ghw", "ghw-restricted"];

fn gamma_of(gamma: Option<f64>, key: &str) -> Result<f64, ConfigError> {
    gamma.ok_or_else(|| ConfigError::new(key, "required by the ghw manifolds"))
}

fn scan_on<M: AnsatzManifold + ?Sized>(
    ctx: &Context,
    out: &mut RunOutput,
    m: &M,
    extra: Value,
) -> Result<(), Failure> {
    let s = ctx.config().scan.as_ref().expect("checked by caller");
    let axis = |a: &crate::config::AxisSpec, n: usize, key: &str| {
        ScanAxis::new(&a.name, a.lo, a.hi, n).map_err(|e| ConfigError::new(key, e.to_string()))
    };
    let a1 = axis(&s.axis1, s.resolution[0], "scan.axis1")?;
    let a2 = axis(&s.axis2, s.resolution[1], "scan.axis2")?;
    let names = m.param_names();
    for (key, name) in [("scan.axis1.name", &a1.name), ("scan.axis2.name", &a2.name)]
        .into_iter()
        .chain(s.fixed.keys().map(|k| ("scan.fixed", k)))
    {
        if m.param_index(name).is_none() {
            return Err(ConfigError::new(
                key,
                format!("`{name}` is not a parameter of {} ({names:?})", m.name()),
            )
            .into());
        }
    }
    let fixed: Vec<(String, f64)> = s.fixed.iter().map(|(k, &v)| (k.clone(), v)).collect();
    let scan = degeneracy_scan(m, &a1, &a2, &fixed, s.zero_tol).map_err(|e| match e {
        NlsError::Domain { param, value, reason } => Failure::config(ConfigError::new(
            "scan",
            format!("grid point with {param} = {value} lies outside the manifold domain ({reason})"),
        )),
        other => other.into(),
    })?;
    let csv = ctx.path("scan.csv");
    write_scan_csv(&csv, &scan).map_err(io_err(&csv))?;
    out.files.push("scan.csv".into());
    let mut cells = String::from("i,j\n");
    for (i, j) in &scan.zero_cells {
        cells += &format!("{i},{j}\n");
    }
    let zc = ctx.path("zero_cells.csv");
    write_atomic(&zc, cells.as_bytes()).map_err(io_err(&zc))?;
    out.files.push("zero_cells.csv".into());
    let meta = ctx.path("scan.json");
    write_json(&meta, &scan_metadata(&scan, extra)).map_err(io_err(&meta))?;
    out.files.push("scan.json".into());
    out.summary.push(format!(
        "{}: {} zero cells in {} curve(s); max |Pf^2 - det| = {:.3e}",
        scan.manifold,
        scan.zero_cells.len(),
        scan.curve_count(),
        scan.max_pf_det_mismatch
    ));
    Ok(())
}

/// Pfaffian scan over two parameters of a manifold.
pub fn run_scan(ctx: &Context, out: &mut RunOutput) -> Result<(), Failure> {
    let c = ctx.config();
    let s = c
        .scan
        .as_ref()
        .ok_or_else(|| ConfigError::new("scan", "missing"))?;
    let grid_json = || c.grid.map(|g| json!({"n": g.n, "length": g.length}));
    let extra = json!({"gamma": s.gamma, "shear": s.shear, "grid": grid_json(), "resolution": s.resolution});
    let nl = |e: NlsError| Failure::config(ConfigError::new("scan", e.to_string()));
    match s.manifold.as_str() {
        "single-soliton" => scan_on(ctx, out, &SingleSoliton { grid: c.grid()? }, extra),
        "ghw" => {
            let m = Ghw::new(c.grid()?, gamma_of(s.gamma, "scan.gamma")?).map_err(nl)?;
            scan_on(ctx, out, &m, extra)
        }
        "ghw-restricted" => {
            let m = RestrictedGhw::new(c.grid()?, gamma_of(s.gamma, "scan.gamma")?).map_err(nl)?;
            scan_on(ctx, out, &m, extra)
        }
        "finite-example" => scan_on(ctx, out, &FiniteExample, extra),
        "toy2" | "toy4" => {
            let dim = if s.manifold == "toy2" { 2 } else { 4 };
            let m = ToyCanonical::new(dim, s.shear.unwrap_or(0.0)).map_err(nl)?;
            scan_on(ctx, out, &m, extra)
        }
        other => Err(ConfigError::new(
            "scan.manifold",
            format!("unknown manifold `{other}`; known: {SCAN_MANIFOLDS:?}"),
        )
        .into()),
    }
}

fn theta_from_map<M: AnsatzManifold + ?Sized>(
    m: &M,
    map: &std::collections::BTreeMap<String, f64>,
) -> Result<Vec<f64>, ConfigError> {
    let names = m.param_names();
    if let Some(k) = map.keys().find(|k| m.param_index(k).is_none()) {
        return Err(ConfigError::new(
            "effective.theta0",
            format!("`{k}` is not a parameter of {} ({names:?})", m.name()),
        ));
    }
    names
        .iter()
        .map(|n| {
            map.get(*n)
                .copied()
                .ok_or_else(|| ConfigError::new("effective.theta0", format!("missing parameter `{n}`")))
        })
        .collect()
}

fn effective_on<M: AnsatzManifold<Point = Field>>(
    ctx: &Context,
    out: &mut RunOutput,
    m: &M,
) -> Result<(), Failure> {
    let c = ctx.config();
    let e = c.effective.as_ref().expect("checked by caller");
    let p: NonlinearityPower = c.power()?;
    let mut theta0 = theta_from_map(m, &e.theta0)?;
    if let Some(target) = &e.start_on_degeneracy {
        let i = m.param_index(&target.param).ok_or_else(|| {
            ConfigError::new(
                "effective.start_on_degeneracy.param",
                format!("`{}` is not a parameter", target.param),
            )
        })?;
        let mut end = theta0.clone();
        end[i] = target.to;
        theta0 = bisect_pfaffian_zero(m, &theta0, &end, 1e-15)
            .map_err(|err| ConfigError::new("effective.start_on_degeneracy", err.to_string()))?
            .0;
        out.summary
            .push(format!("start moved onto the degeneracy set: {theta0:?}"));
    }
    let step = c.step()?;
    let perturbation = match &e.perturbation {
        Some(spec) => Some(ctx.init_field(spec, "effective.perturbation", true)?),
        None => None,
    };
    let names = m.param_names();
    let result = if e.compare_with_pde {
        compare_with_pde(m, &theta0, p, &step, perturbation.as_ref()).map(|cmp| {
            let dev = cmp.max_deviation();
            (cmp.effective.max_residual, Some((cmp, dev)), None::<EffectiveRun>)
        })
    } else {
        integrate_effective(m, &theta0, p, step.dt * step.observer_stride as f64, step.t_final).and_then(
            |run| match run.halted {
                Some(_) => Err(run.halted.expect("checked")),
                None => Ok((run.max_residual, None, Some(run))),
            },
        )
    };
    match result {
        Ok((residual, cmp, run)) => {
            let (run, deviations) = match cmp {
                Some((cmp, dev)) => {
                    let path = ctx.path("comparison.csv");
                    write_comparison_csv(&path, &cmp).map_err(io_err(&path))?;
                    out.files.push("comparison.csv".into());
                    let obs: serde_json::Map<String, Value> = nlsgeom_core::collective::OBSERVABLES
                        .iter()
                        .zip(dev)
                        .map(|(n, d)| (n.to_string(), json!(d)))
                        .collect();
                    (cmp.effective, Some(Value::from(obs)))
                }
                None => (run.expect("one of the two branches"), None),
            };
            let path = ctx.path("effective.csv");
            write_effective_csv(&path, &run, &names).map_err(io_err(&path))?;
            out.files.push("effective.csv".into());
            let last = run.last();
            ctx.write_report(
                out,
                &json!({
                    "status": "ok",
                    "manifold": m.name(),
                    "params": names,
                    "theta0": theta0,
                    "theta_final": last.theta,
                    "t_final": last.time,
                    "energy_drift": run.energy_drift(),
                    "max_residual": residual,
                    "max_deviation": deviations,
                }),
            )?;
            if let Some(Value::Object(d)) = &deviations {
                for (k, v) in d {
                    out.summary.push(format!("max {k} deviation {v}"));
                }
            }
            Ok(())
        }
        Err(NlsError::Degenerate { condition, kernel }) => {
            ctx.write_report(
                out,
                &json!({
                    "status": "degenerate",
                    "manifold": m.name(),
                    "params": names,
                    "theta0": theta0,
                    "condition": if condition.is_finite() { json!(condition) } else { json!("inf") },
                    "kernel_direction": kernel,
                }),
            )?;
            Err(Failure {
                kind: FailureKind::Numerical,
                message: format!(
                    "restricted form is degenerate (condition {condition:.3e}); kernel direction {kernel:?} in {names:?}"
                ),
            })
        }
        Err(other) => Err(other.into()),
    }
}

/// Integrates the collective-coordinate equations and, unless disabled,
/// compares them with the PDE started from the same point.
pub fn run_effective(ctx: &Context, out: &mut RunOutput) -> Result<(), Failure> {
    let c = ctx.config();
    let e = c
        .effective
        .as_ref()
        .ok_or_else(|| ConfigError::new("effective", "missing"))?;
    let nl = |err: NlsError| Failure::config(ConfigError::new("effective", err.to_string()));
    match e.manifold.as_str() {
        "single-soliton" => effective_on(ctx, out, &SingleSoliton { grid: c.grid()? }),
        "ghw" => {
            let m = Ghw::new(c.grid()?, gamma_of(e.gamma, "effective.gamma")?).map_err(nl)?;
            effective_on(ctx, out, &m)
        }
        "ghw-restricted" => {
            let m = RestrictedGhw::new(c.grid()?, gamma_of(e.gamma, "effective.gamma")?).map_err(nl)?;
            effective_on(ctx, out, &m)
        }
        "" => Err(ConfigError::new("effective.manifold", "missing manifold name").into()),
        other => Err(ConfigError::new(
            "effective.manifold",
            format!("unknown or non-field manifold `{other}`; effective runs accept {FIELD_MANIFOLDS:?}"),
        )
        .into()),
    }
}

/// Runs the acceptance criteria; any failing line makes the run fail.
pub fn run_selftest(out_dir: Option<&Path>, out: &mut RunOutput) -> Result<(), Failure> {
    let mut lines = Vec::new();
    let mut all_passed = true;
    for (id, outcome) in acceptance::run_all() {
        let line = match outcome {
            Ok(o) => {
                all_passed &= o.passed();
                o.line()
            }
            Err(e) => {
                all_passed = false;
                format!("[FAIL] criterion {id}: error: {e}")
            }
        };
        println!("{line}");
        lines.push(line);
    }
    if let Some(dir) = out_dir {
        let path = dir.join("selftest.txt");
        let mut text = lines.join("\n");
        text.push('\n');
        write_atomic(&path, text.as_bytes()).map_err(io_err(&path))?;
        out.files.push("selftest.txt".into());
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure {
            kind: FailureKind::Numerical,
            message: "acceptance criteria failed".into(),
        })
    }
}

/// Creates the output directory, mapping failure to an I/O error.
pub fn prepare_output_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}
