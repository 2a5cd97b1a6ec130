//! Command-line front end: scenario ingestion, subcommands and report files.
//!
//! `verify` writes `report.json` with top-level keys in this order:
//!
//! * `scenario`: name, description, SHA-256 fingerprint of the scenario file, UTC timestamp
//! * `grid`: configured and refined grid, linear residual, interpolation error, multiplicities found on both grids
//! * `boundary_profile`: per-boundary extrema, zeros and sign changes plus `z1`, `Z1`, `z2`, `Z2`
//! * `critical_points`: location, value, multiplicity, winding number, zero flag
//! * `censuses`: `M1`, `M2` and per-component contact data at each census threshold
//! * `verdicts`: one entry per check with `id`, `holds`, `lhs`, `rhs`, `applicable`, `reason`, hypotheses, clauses and witness
//! * `warnings`, `notes`
//!
//! Floats carry 12 significant digits. Exit codes: 0 when every applicable
//! check holds, 2 when one fails, 1 on usage, validation or numerical errors.

pub mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use levelset_core::critical::{find_critical_points, write_csv};
use levelset_core::domain::scenario::{load_scenario, GridSpec};
use levelset_core::solver::{solve_scenario, SolutionField};
use levelset_core::topology::{level_census, trace_level_lines};
use levelset_core::verify::{report_to_json, run_scenario, to_report_json, VerificationReport, VerifyError};
use levelset_core::ScenarioSpec;

pub use render::render_svg;

/// Environment variable bounding the number of concurrent batch runs.
pub const THREADS_ENV: &str = "LEVELSET_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "levelset-lab", version, about = "Critical points and level sets of elliptic Dirichlet problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve and dump the nodal field.
    Solve(Common),
    /// Locate interior critical points.
    Critical(Common),
    /// Count level-set components at `--t`.
    Census(Common),
    /// Run every check and write report.json.
    Verify(Common),
    /// Draw level lines at each `--t` as SVG.
    Render(Common),
    /// Verify every scenario in a directory.
    Batch(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file, or a directory for `batch`.
    pub path: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Grid override, `NxM` (angular x radial intervals).
    #[arg(long)]
    pub grid: Option<GridArg>,
    /// Threshold; repeat for several render levels.
    #[arg(long = "t", allow_negative_numbers = true)]
    pub t: Vec<f64>,
    /// Override for the gradient-zero tolerance.
    #[arg(long)]
    pub tol_grad: Option<f64>,
    /// Work on the refined grid (twice the configured resolution).
    #[arg(long)]
    pub refine: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridArg(pub GridSpec);

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<GridArg, String> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("grid must look like 128x64, got {s:?}"))?;
        let n = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n >= 4)
                .ok_or_else(|| format!("grid dimension {v:?} must be an integer >= 4"))
        };
        Ok(GridArg(GridSpec {
            n_theta: n(a)?,
            n_s: n(b)?,
        }))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: usage: {message}")]
    Usage { path: String, message: String },
    #[error("{path}: load: {message}")]
    Scenario { path: String, message: String },
    #[error("{path}: {stage}: {message}")]
    Numerical {
        path: String,
        stage: &'static str,
        message: String,
    },
    #[error("{path}: write: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Result of a successful subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ChecksFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ChecksFailed => 2,
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: display(path),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

/// Loads a scenario and applies grid and tolerance overrides.
pub fn load(args: &Common, path: &Path) -> Result<ScenarioSpec, CliError> {
    let mut spec = load_scenario(path).map_err(|e| CliError::Scenario {
        path: display(path),
        message: e.to_string(),
    })?;
    if let Some(GridArg(g)) = args.grid {
        spec = spec.with_grid(g);
    }
    if args.refine {
        spec = spec.with_grid(spec.grid.refined());
    }
    if let Some(tol) = args.tol_grad {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::Usage {
                path: display(path),
                message: format!("--tol-grad must be positive, got {tol}"),
            });
        }
        spec.tolerances.grad_zero_tol = Some(tol);
    }
    Ok(spec)
}

fn solve(spec: &ScenarioSpec, path: &Path) -> Result<SolutionField, CliError> {
    solve_scenario(spec).map_err(|e| CliError::Numerical {
        path: display(path),
        stage: "solve",
        message: e.to_string(),
    })
}

fn json<T: serde::Serialize>(value: &T, path: &Path) -> Result<String, CliError> {
    to_report_json(value).map_err(|e| CliError::Numerical {
        path: display(path),
        stage: "serialize",
        message: e.to_string(),
    })
}

/// Writes a verification report as JSON.
pub fn emit_report(report: &VerificationReport, path: &Path) -> Result<(), CliError> {
    let text = report_to_json(report).map_err(|e| CliError::Numerical {
        path: display(path),
        stage: "serialize",
        message: e.to_string(),
    })?;
    write_file(path, format!("{text}\n").as_bytes())
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Census(a) => cmd_census(a),
        Command::Verify(a) => cmd_verify(a, &a.path, &a.out).map(|(o, _)| o),
        Command::Render(a) => cmd_render(a),
        Command::Batch(a) => cmd_batch(a),
    }
}

fn cmd_solve(a: &Common) -> Result<Outcome, CliError> {
    let spec = load(a, &a.path)?;
    let field = solve(&spec, &a.path)?;
    match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            field.write_csv(&mut buf).expect("writing to memory");
            write_file(&a.out.join("field.csv"), &buf)?;
        }
        Format::Json => {
            let summary = serde_json::json!({
                "scenario": spec.name,
                "grid": spec.grid.to_string(),
                "residual": field.residual(),
                "min": field.min(),
                "max": field.max(),
                "interpolation_error": field.interpolation_error(),
            });
            write_file(&a.out.join("solve.json"), format!("{}\n", json(&summary, &a.path)?).as_bytes())?;
        }
    }
    Ok(Outcome::Success)
}

fn cmd_critical(a: &Common) -> Result<Outcome, CliError> {
    let spec = load(a, &a.path)?;
    let field = solve(&spec, &a.path)?;
    let search = find_critical_points(&field, &spec.tolerances);
    let mut buf = Vec::new();
    write_csv(&search.points, &mut buf).expect("writing to memory");
    write_file(&a.out.join("critical.csv"), &buf)?;
    if a.format == Format::Json {
        write_file(&a.out.join("critical.json"), format!("{}\n", json(&search, &a.path)?).as_bytes())?;
    }
    Ok(Outcome::Success)
}

fn require_t(a: &Common) -> Result<f64, CliError> {
    match a.t.as_slice() {
        [t] if t.is_finite() => Ok(*t),
        _ => Err(CliError::Usage {
            path: display(&a.path),
            message: "census needs exactly one finite --t".into(),
        }),
    }
}

fn cmd_census(a: &Common) -> Result<Outcome, CliError> {
    let t = require_t(a)?;
    let spec = load(a, &a.path)?;
    let field = solve(&spec, &a.path)?;
    let census = level_census(&field, t);
    match a.format {
        Format::Json => write_file(&a.out.join("census.json"), format!("{}\n", json(&census, &a.path)?).as_bytes()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io {
                path: display(&a.out.join("census.csv")),
                source: e.into(),
            };
            w.write_record(["t", "sign", "cells", "touches_interior", "touches_exterior", "wraps", "holes"])
                .map_err(io)?;
            for c in &census.components {
                w.serialize((
                    t,
                    format!("{:?}", c.sign).to_lowercase(),
                    c.cell_count,
                    c.touches_interior,
                    c.touches_exterior,
                    c.wraps,
                    c.holes,
                ))
                .map_err(io)?;
            }
            let buf = w.into_inner().map_err(|e| io(e.into_error().into()))?;
            write_file(&a.out.join("census.csv"), &buf)
        }
    }?;
    Ok(Outcome::Success)
}

/// Runs `verify` on one scenario, writing `out/report.json`.
fn cmd_verify(a: &Common, path: &Path, out: &Path) -> Result<(Outcome, VerificationReport), CliError> {
    let spec = load(a, path)?;
    let target = out.join("report.json");
    match run_scenario(&spec) {
        Ok(report) => {
            emit_report(&report, &target)?;
            let outcome = if report.all_hold() {
                Outcome::Success
            } else {
                Outcome::ChecksFailed
            };
            Ok((outcome, report))
        }
        Err(VerifyError::UnstableCounts { base, refined, report }) => {
            emit_report(&report, &target)?;
            Err(CliError::Numerical {
                path: display(path),
                stage: "verify",
                message: format!("critical point multiplicities change under refinement: {base:?} vs {refined:?}"),
            })
        }
        Err(e) => Err(CliError::Numerical {
            path: display(path),
            stage: "solve",
            message: e.to_string(),
        }),
    }
}

fn cmd_render(a: &Common) -> Result<Outcome, CliError> {
    let spec = load(a, &a.path)?;
    let field = solve(&spec, &a.path)?;
    let search = find_critical_points(&field, &spec.tolerances);
    let lines: Vec<_> = a.t.iter().map(|&t| trace_level_lines(&field, t)).collect();
    let svg = render_svg(&field, &lines, &search.points);
    write_file(&a.out.join("levelsets.svg"), svg.as_bytes())?;
    Ok(Outcome::Success)
}

/// One row of the batch summary table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BatchRow {
    pub scenario: String,
    pub exit: i32,
    pub critical_points: Option<usize>,
    pub sum_m: Option<u32>,
    pub holds: usize,
    pub fails: usize,
    pub not_applicable: usize,
    pub error: String,
}

fn batch_row(a: &Common, path: &Path) -> BatchRow {
    let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let out = a.out.join(&stem);
    match cmd_verify(a, path, &out) {
        Ok((outcome, report)) => BatchRow {
            scenario: stem,
            exit: outcome.exit_code(),
            critical_points: Some(report.critical_points.len()),
            sum_m: Some(report.critical_points.iter().map(|p| p.multiplicity).sum()),
            holds: report.verdicts.iter().filter(|v| v.holds == Some(true)).count(),
            fails: report.verdicts.iter().filter(|v| v.fails()).count(),
            not_applicable: report.verdicts.iter().filter(|v| !v.applicable).count(),
            error: String::new(),
        },
        Err(e) => BatchRow {
            scenario: stem,
            exit: 1,
            critical_points: None,
            sum_m: None,
            holds: 0,
            fails: 0,
            not_applicable: 0,
            error: e.to_string(),
        },
    }
}

/// Worker count from `LEVELSET_LAB_THREADS`, defaulting to the core count.
pub fn batch_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn cmd_batch(a: &Common) -> Result<Outcome, CliError> {
    let dir = &a.path;
    let entries = fs::read_dir(dir).map_err(|e| CliError::Usage {
        path: display(dir),
        message: format!("batch needs a directory: {e}"),
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(batch_threads())
        .build()
        .map_err(|e| CliError::Usage {
            path: display(dir),
            message: e.to_string(),
        })?;
    let rows: Vec<BatchRow> = pool.install(|| {
        use rayon::prelude::*;
        files.par_iter().map(|p| batch_row(a, p)).collect()
    });
    let target = a.out.join("summary.csv");
    let io = |e: csv::Error| CliError::Io {
        path: display(&target),
        source: e.into(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(io)?;
    }
    let buf = w.into_inner().map_err(|e| io(e.into_error().into()))?;
    write_file(&target, &buf)?;
    for r in rows.iter().filter(|r| r.exit == 1) {
        eprintln!("levelset-lab: {}", r.error);
    }
    match rows.iter().map(|r| r.exit).max().unwrap_or(0) {
        0 => Ok(Outcome::Success),
        2 => Ok(Outcome::ChecksFailed),
        _ => Err(CliError::Numerical {
            path: display(dir),
            stage: "batch",
            message: format!("{} scenario(s) failed to run", rows.iter().filter(|r| r.exit == 1).count()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_argument() {
        assert_eq!(
            "256x128".parse::<GridArg>().unwrap().0,
            GridSpec {
                n_theta: 256,
                n_s: 128
            }
        );
        assert!("256".parse::<GridArg>().is_err());
        assert!("2x128".parse::<GridArg>().is_err());
    }

    #[test]
    fn census_requires_one_threshold() {
        let cli = Cli::parse_from(["levelset-lab", "census", "x.json"]);
        let Command::Census(a) = &cli.command else {
            panic!("wrong subcommand")
        };
        assert!(matches!(require_t(a), Err(CliError::Usage { .. })));
        let cli = Cli::parse_from(["levelset-lab", "render", "x.json", "--t", "-1", "--t", "0"]);
        let Command::Render(a) = &cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(a.t, vec![-1.0, 0.0]);
    }
}
