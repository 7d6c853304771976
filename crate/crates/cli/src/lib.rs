//! Experiment runner: JSON configs in, deterministic CSV and JSON out.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use commands::{Context, Failure, FailureKind, RunOutput};
use config::{load_config, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Evolve,
    Scan,
    Effective,
    Charges,
    Selftest,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Evolve => "evolve",
            Subcommand::Scan => "scan",
            Subcommand::Effective => "effective",
            Subcommand::Charges => "charges",
            Subcommand::Selftest => "selftest",
        }
    }
}

/// Runs one subcommand end to end and returns the process exit code.
/// Every output directory receives `manifest.json`, also on failure.
pub fn run(cmd: Subcommand, config_path: Option<&Path>, output_override: Option<&Path>) -> i32 {
    let start = Instant::now();
    let loaded = match config_path.map(load_config) {
        None => None,
        Some(Ok(Ok(l))) => Some(l),
        Some(Ok(Err(e))) => return report_failure(&Failure::config(e)),
        Some(Err(e)) => return report_failure(&Failure::io(config_path.unwrap(), e)),
    };

    let out_dir: Option<PathBuf> = match (&loaded, cmd) {
        (Some(l), Subcommand::Selftest) => l
            .config
            .output_dir(output_override, &l.base_dir)
            .ok()
            .or(output_override.map(Path::to_path_buf)),
        (Some(l), _) => match l.config.output_dir(output_override, &l.base_dir) {
            Ok(d) => Some(d),
            Err(e) => return report_failure(&Failure::config(e)),
        },
        (None, Subcommand::Selftest) => output_override.map(Path::to_path_buf),
        (None, _) => {
            return report_failure(&Failure::config(ConfigError::new(
                "",
                "a config path is required",
            )));
        }
    };
    if let Some(dir) = &out_dir {
        if let Err(f) = commands::prepare_output_dir(dir) {
            return report_failure(&f);
        }
    }

    let mut output = RunOutput::default();
    let result = match (cmd, &loaded, &out_dir) {
        (Subcommand::Selftest, _, dir) => commands::run_selftest(dir.as_deref(), &mut output),
        (_, Some(l), Some(dir)) => {
            let ctx = Context { loaded: l, out: dir };
            match cmd {
                Subcommand::Evolve => commands::run_evolve(&ctx, &mut output),
                Subcommand::Scan => commands::run_scan(&ctx, &mut output),
                Subcommand::Effective => commands::run_effective(&ctx, &mut output),
                Subcommand::Charges => commands::run_charges(&ctx, &mut output),
                Subcommand::Selftest => unreachable!(),
            }
        }
        _ => unreachable!("config and output directory resolved above"),
    };
    for line in &output.summary {
        println!("{line}");
    }
    let code = match &result {
        Ok(()) => 0,
        Err(f) => f.kind.exit_code(),
    };
    if let Some(dir) = &out_dir {
        let manifest = json!({
            "subcommand": cmd.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "config": loaded.as_ref().map(|l| l.raw.clone()),
            "config_path": config_path.map(|p| p.display().to_string()),
            "seed": loaded.as_ref().map(|l| l.config.seed),
            "threads": rayon_threads(),
            "wall_time_s": start.elapsed().as_secs_f64(),
            "status": if result.is_ok() { "ok" } else { "error" },
            "exit_code": code,
            "error": result.as_ref().err().map(|f| f.message.clone()),
            "outputs": output.files,
        });
        let path = dir.join("manifest.json");
        if let Err(e) = nlsgeom_core::io::write_json(&path, &manifest) {
            let f = Failure::io(&path, e);
            return report_failure(&f).max(code);
        }
    }
    match result {
        Ok(()) => 0,
        Err(f) => report_failure(&f),
    }
}

fn rayon_threads() -> Option<usize> {
    std::env::var("RAYON_NUM_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn report_failure(f: &Failure) -> i32 {
    let label = match f.kind {
        FailureKind::Config => "config error",
        FailureKind::Numerical => "numerical failure",
        FailureKind::Io => "i/o error",
    };
    eprintln!("nlsgeom: {label}: {}", f.message);
    f.kind.exit_code()
}
