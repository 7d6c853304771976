//! CSV and JSON serialization of fields, trajectories, drift reports, scans
//! and effective runs. Every float is written with 17 significant digits
//! and every file is written to a temporary name and renamed into place.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde_json::json;

use crate::collective::{Comparison, EffectiveRun, OBSERVABLES};
use crate::error::{NlsError, Result};
use crate::grid::{Field, Grid};
use crate::hamiltonian::{hamiltonian, NonlinearityPower, Trajectory};
use crate::noether::{mass, ChargeKind, DriftReport};
use crate::presymplectic::ScanResult;

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a temporary sibling of `path` and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| NlsError::param("path", format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| NlsError::Parse(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| NlsError::Parse(e.to_string()))
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => NlsError::Io(io),
        other => NlsError::Parse(format!("{other:?}")),
    })?;
    let header = r
        .headers()
        .map_err(|e| NlsError::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| NlsError::Parse(format!("{}: {e}", path.display())))
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| NlsError::Parse(format!("{}:{line}: `{s}` is not a number", path.display())))
}

/// Columns `x, re, im`.
pub fn write_field_csv(path: &Path, u: &Field) -> Result<()> {
    let rows = u
        .grid()
        .nodes()
        .iter()
        .zip(u.values())
        .map(|(&x, z)| vec![fmt_f64(x), fmt_f64(z.re), fmt_f64(z.im)]);
    write_csv(path, &strings(&["x", "re", "im"]), rows)
}

/// Reads a field written by [`write_field_csv`], inferring the grid from the
/// node column.
pub fn read_field_csv(path: &Path) -> Result<Field> {
    let (header, rows) = read_rows(path)?;
    if header != ["x", "re", "im"] {
        return Err(NlsError::Parse(format!(
            "{}: expected header x,re,im, found {}",
            path.display(),
            header.join(",")
        )));
    }
    let mut xs = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != 3 {
            return Err(NlsError::Parse(format!(
                "{}:{}: expected 3 columns",
                path.display(),
                i + 2
            )));
        }
        xs.push(parse_f64(&r[0], path, i + 2)?);
        values.push(Complex64::new(
            parse_f64(&r[1], path, i + 2)?,
            parse_f64(&r[2], path, i + 2)?,
        ));
    }
    if xs.len() < 2 {
        return Err(NlsError::Parse(format!("{}: too few rows", path.display())));
    }
    let n = xs.len();
    let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    let length = dx * n as f64;
    if (xs[0] + 0.5 * length).abs() > 1e-9 * length {
        return Err(NlsError::Parse(format!(
            "{}: nodes must start at -L/2 (first node {}, L = {length})",
            path.display(),
            xs[0]
        )));
    }
    let grid = Grid::new(n, length)?;
    if xs
        .iter()
        .zip(grid.nodes())
        .any(|(a, b)| (a - b).abs() > 1e-9 * length)
    {
        return Err(NlsError::Parse(format!(
            "{}: nodes are not equispaced",
            path.display()
        )));
    }
    Field::new(grid, values)
}

/// One CSV per stored state plus `index.csv` with columns
/// `time, file, mass, energy`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut rows = Vec::with_capacity(traj.len());
    for (i, (&t, u)) in traj.times().iter().zip(traj.states()).enumerate() {
        let file = format!("state_{i:06}.csv");
        write_field_csv(&dir.join(&file), u)?;
        rows.push(vec![
            fmt_f64(t),
            file,
            fmt_f64(mass(u)),
            fmt_f64(hamiltonian(u, traj.power())),
        ]);
    }
    write_csv(
        &dir.join("index.csv"),
        &strings(&["time", "file", "mass", "energy"]),
        rows,
    )
}

pub fn read_trajectory(dir: &Path, p: NonlinearityPower) -> Result<Trajectory> {
    let index = dir.join("index.csv");
    let (_, rows) = read_rows(&index)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if r.len() < 2 {
            return Err(NlsError::Parse(format!(
                "{}:{}: missing columns",
                index.display(),
                i + 2
            )));
        }
        times.push(parse_f64(&r[0], &index, i + 2)?);
        states.push(read_field_csv(&dir.join(&r[1]))?);
    }
    Trajectory::new(times, states, p)
}

/// Columns `t` then one column per charge (closed forms).
pub fn write_observables_csv(path: &Path, traj: &Trajectory, charges: &[ChargeKind]) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(charges.iter().map(|c| c.name().to_string()));
    let p = traj.power();
    let rows = traj.times().iter().zip(traj.states()).map(|(&t, u)| {
        let mut r = vec![fmt_f64(t)];
        r.extend(charges.iter().map(|c| fmt_f64(c.closed_form(u, t, p))));
        r
    });
    write_csv(path, &header, rows)
}

/// Columns `charge, t0_value, max_abs_drift, max_rel_drift, t_at_max`.
pub fn write_drift_csv(path: &Path, report: &DriftReport) -> Result<()> {
    let rows = report.rows.iter().map(|r| {
        vec![
            r.charge.clone(),
            fmt_f64(r.t0_value),
            fmt_f64(r.max_abs_drift),
            fmt_f64(r.max_rel_drift),
            fmt_f64(r.t_at_max),
        ]
    });
    write_csv(
        path,
        &strings(&["charge", "t0_value", "max_abs_drift", "max_rel_drift", "t_at_max"]),
        rows,
    )
}

pub fn drift_text(report: &DriftReport) -> String {
    let mut s = format!(
        "{:<16} {:>24} {:>24} {:>24} {:>24}\n",
        "charge", "t0_value", "max_abs_drift", "max_rel_drift", "t_at_max"
    );
    for r in &report.rows {
        s += &format!(
            "{:<16} {:>24} {:>24} {:>24} {:>24}\n",
            r.charge,
            fmt_f64(r.t0_value),
            fmt_f64(r.max_abs_drift),
            fmt_f64(r.max_rel_drift),
            fmt_f64(r.t_at_max)
        );
    }
    s
}

/// Scan grid: the first row holds `axis1\axis2` followed by the axis-2
/// values; each further row is an axis-1 value followed by `Pf`.
pub fn write_scan_csv(path: &Path, scan: &ScanResult) -> Result<()> {
    let mut header = vec![format!("{}\\{}", scan.axis1.name, scan.axis2.name)];
    header.extend(scan.axis2.values().into_iter().map(fmt_f64));
    let rows = scan.axis1.values().into_iter().zip(&scan.pf).map(|(x, row)| {
        let mut r = vec![fmt_f64(x)];
        r.extend(row.iter().map(|&v| fmt_f64(v)));
        r
    });
    write_csv(path, &header, rows)
}

/// `(axis1, axis2, pf)` as stored in a scan CSV.
pub type ScanGrid = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

/// Reads a scan grid back.
pub fn read_scan_csv(path: &Path) -> Result<ScanGrid> {
    let (header, rows) = read_rows(path)?;
    let axis2 = header[1..]
        .iter()
        .map(|s| parse_f64(s, path, 1))
        .collect::<Result<Vec<_>>>()?;
    let mut axis1 = Vec::new();
    let mut pf = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        axis1.push(parse_f64(&r[0], path, i + 2)?);
        pf.push(
            r[1..]
                .iter()
                .map(|s| parse_f64(s, path, i + 2))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok((axis1, axis2, pf))
}

/// Sidecar describing a scan; `extra` carries caller-side fields such as
/// `gamma` or the grid resolution.
pub fn scan_metadata(scan: &ScanResult, extra: serde_json::Value) -> serde_json::Value {
    let axis = |a: &crate::presymplectic::ScanAxis| json!({"name": a.name, "lo": a.lo, "hi": a.hi, "n": a.n});
    let fixed: serde_json::Map<String, serde_json::Value> =
        scan.fixed.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "manifold": scan.manifold,
        "quantity": "pfaffian",
        "axis1": axis(&scan.axis1),
        "axis2": axis(&scan.axis2),
        "fixed": fixed,
        "zero_tolerance": scan.zero_tol,
        "max_pf_det_mismatch": scan.max_pf_det_mismatch,
        "max_symmetrization": scan.max_symmetrization,
        "zero_nodes": scan.zero_nodes,
        "zero_cells": scan.zero_cells,
        "curve_count": scan.curve_count(),
        "curves": scan.curves,
        "segments": scan.segments.iter().map(|s| json!({
            "cell": [s.cell.0, s.cell.1],
            "from": [s.from.0, s.from.1],
            "to": [s.to.0, s.to.1],
        })).collect::<Vec<_>>(),
        "extra": extra,
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| NlsError::Parse(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Columns `t`, one per parameter, `condition`, `energy`.
pub fn write_effective_csv(path: &Path, run: &EffectiveRun, param_names: &[&str]) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(param_names.iter().map(|s| s.to_string()));
    header.push("condition".into());
    header.push("energy".into());
    let rows = run.states.iter().zip(&run.energies).map(|(s, &h)| {
        let mut r = vec![fmt_f64(s.time)];
        r.extend(s.theta.iter().map(|&x| fmt_f64(x)));
        r.push(fmt_f64(s.omega_condition));
        r.push(fmt_f64(h));
        r
    });
    write_csv(path, &header, rows)
}

/// Columns `t` then `<obs>_pde, <obs>_ansatz, <obs>_deviation` per observable.
pub fn write_comparison_csv(path: &Path, cmp: &Comparison) -> Result<()> {
    let mut header = vec!["t".to_string()];
    for o in OBSERVABLES {
        header.extend([
            format!("{o}_pde"),
            format!("{o}_ansatz"),
            format!("{o}_deviation"),
        ]);
    }
    let rows = cmp
        .times
        .iter()
        .zip(cmp.pde.iter().zip(&cmp.ansatz))
        .map(|(&t, (a, b))| {
            let mut r = vec![fmt_f64(t)];
            for ((x, y), d) in a.values().into_iter().zip(b.values()).zip(a.deviation(b)) {
                r.extend([fmt_f64(x), fmt_f64(y), fmt_f64(d)]);
            }
            r
        });
    write_csv(path, &header, rows)
}
