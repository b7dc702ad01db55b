// `!(x <= tol)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

mod config;
mod output;
mod pipeline;

use config::{BranchChoice, Format, Mode, RunConfig, Sweep, SweepParam};
use pipeline::{record_row, run_scan, run_single, wavefunction_rows, RECORD_COLUMNS};

#[derive(Parser)]
#[command(name = "qdirac", version, about = "Quasi-exact Dirac bound states: solve, verify, scan")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy, constraints, roots and normalized wavefunction of one level.
    #[command(allow_negative_numbers = true)]
    Solve(RunArgs),
    /// `solve` followed by the numerical oracles.
    #[command(allow_negative_numbers = true)]
    Verify(RunArgs),
    /// `verify` over a one-parameter sweep.
    #[command(allow_negative_numbers = true)]
    Scan(ScanArgs),
    /// Ground-state constraints and energy forms on the Coulomb locus.
    #[command(allow_negative_numbers = true)]
    CoulombCheck(RunArgs),
    /// Membership of the reduced operator in the sl(2) generator span.
    #[command(allow_negative_numbers = true)]
    QesCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Rotation angle in radians.
    #[arg(long, conflicts_with = "cs")]
    eta: Option<f64>,
    /// `C,S` = `cos 2η, sin 2η`, checked against C² + S² = 1.
    #[arg(long, value_name = "C,S", allow_hyphen_values = true)]
    cs: Option<String>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    branch: Option<BranchChoice>,
    /// Angular eigenvalue; enables the first-order system check.
    #[arg(long)]
    lam_ang: Option<f64>,
    /// Solve at this energy instead of the closed form.
    #[arg(long)]
    epsilon_override: Option<f64>,
    /// Points of the finite-difference oracle grid.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Points of the evaluation grid.
    #[arg(long)]
    eval_points: Option<usize>,
    #[arg(long)]
    rmin: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    /// Tolerance override, `name=value` (repeatable).
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Also run the Coulomb-limit check.
    #[arg(long)]
    with_coulomb: bool,
    /// Also run the QES infeasibility check.
    #[arg(long)]
    with_qes: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write `r, rho1, rho2, W` on the evaluation grid to this CSV file.
    #[arg(long)]
    emit_wavefunction: Option<PathBuf>,
    /// Record wall time (makes the output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    sweep_param: Option<SweepParam>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Move `b` onto the Coulomb locus at every point.
    #[arg(long)]
    coulomb_locus: bool,
}

fn usage_error(sub: &str, kind: ErrorKind, message: impl std::fmt::Display) -> ! {
    let mut cmd = Cli::command();
    cmd.build();
    let cmd = cmd.find_subcommand_mut(sub).expect("known subcommand");
    cmd.error(kind, message).exit()
}

fn parse_cs(text: &str) -> Result<f64, String> {
    let parts: Vec<&str> = text.split(',').collect();
    let [c, s] = parts.as_slice() else {
        return Err("--cs expects C,S".into());
    };
    let c: f64 = c.trim().parse().map_err(|_| format!("invalid C in --cs: {c}"))?;
    let s: f64 = s.trim().parse().map_err(|_| format!("invalid S in --cs: {s}"))?;
    if !((c * c + s * s - 1.0).abs() <= 1e-12) {
        return Err(format!("--cs violates C² + S² = 1 (off by {:e})", c * c + s * s - 1.0));
    }
    Ok(0.5 * s.atan2(c))
}

fn merge(mode: Mode, args: &RunArgs, sweep: Option<&ScanArgs>) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    cfg.mode = mode;
    let p = &mut cfg.params;
    p.alpha = args.alpha.or(p.alpha);
    p.a = args.a.or(p.a);
    p.b = args.b.or(p.b);
    p.u = args.u.or(p.u);
    p.eta = match &args.cs {
        Some(cs) => Some(parse_cs(cs)?),
        None => args.eta.or(p.eta),
    };
    cfg.n = args.n.unwrap_or(cfg.n);
    cfg.branch = args.branch.unwrap_or(cfg.branch);
    cfg.lam_ang = args.lam_ang.or(cfg.lam_ang);
    cfg.epsilon_override = args.epsilon_override.or(cfg.epsilon_override);
    cfg.grid.oracle_points = args.grid_points.unwrap_or(cfg.grid.oracle_points);
    cfg.grid.eval_points = args.eval_points.unwrap_or(cfg.grid.eval_points);
    cfg.grid.rmin = args.rmin.or(cfg.grid.rmin);
    cfg.grid.rmax = args.rmax.or(cfg.grid.rmax);
    for item in &args.tol {
        let (name, value) = item.split_once('=').ok_or_else(|| format!("--tol expects NAME=VALUE, got {item}"))?;
        let value: f64 = value.parse().map_err(|_| format!("invalid tolerance value: {item}"))?;
        cfg.tolerances.insert(name.to_string(), value);
    }
    cfg.complete_tolerances();
    cfg.checks.coulomb |= args.with_coulomb;
    cfg.checks.qes |= args.with_qes;
    cfg.output.path = args.output.clone().or(cfg.output.path);
    cfg.output.format = args.format.unwrap_or(cfg.output.format);
    cfg.emit_wavefunction = args.emit_wavefunction.clone().or(cfg.emit_wavefunction);
    cfg.timing |= args.timing;
    if let Some(s) = sweep {
        let from_file = cfg.sweep;
        let parameter = s.sweep_param.or(from_file.map(|f| f.parameter));
        let from = s.from.or(from_file.map(|f| f.from));
        let to = s.to.or(from_file.map(|f| f.to));
        let steps = s.steps.or(from_file.map(|f| f.steps));
        let coulomb_locus = s.coulomb_locus || from_file.is_some_and(|f| f.coulomb_locus);
        cfg.sweep = match (parameter, from, to, steps) {
            (Some(parameter), Some(from), Some(to), Some(steps)) => Some(Sweep { parameter, from, to, steps, coulomb_locus }),
            (None, None, None, None) => None,
            _ => return Err("a sweep needs --sweep-param, --from, --to and --steps".into()),
        };
    }
    Ok(cfg)
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes),
        None => std::io::stdout().lock().write_all(bytes),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(text) = std::env::var("QDIRAC_THREADS") else {
        return Ok(());
    };
    let threads: usize = text.trim().parse().map_err(|_| format!("QDIRAC_THREADS must be a positive integer, got {text}"))?;
    if threads == 0 {
        return Err("QDIRAC_THREADS must be a positive integer".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, sub, args, scan) = match &cli.command {
        Command::Solve(a) => (Mode::Solve, "solve", a, None),
        Command::Verify(a) => (Mode::Verify, "verify", a, None),
        Command::Scan(s) => (Mode::Scan, "scan", &s.run, Some(s)),
        Command::CoulombCheck(a) => (Mode::CoulombCheck, "coulomb-check", a, None),
        Command::QesCheck(a) => (Mode::QesCheck, "qes-check", a, None),
    };
    let cfg = merge(mode, args, scan).unwrap_or_else(|e| usage_error(sub, ErrorKind::ValueValidation, e));
    if let Err(e) = cfg.validate() {
        let kind = if e.missing { ErrorKind::MissingRequiredArgument } else { ErrorKind::ValueValidation };
        usage_error(sub, kind, e.message);
    }
    if let Err(e) = configure_threads() {
        usage_error(sub, ErrorKind::ValueValidation, e);
    }

    let (bytes, success) = if mode == Mode::Scan {
        let records = run_scan(&cfg);
        let success = records.iter().any(|r| r.ok());
        let bytes = match cfg.output.format {
            Format::Json => output::to_json(&records).map_err(|e| e.to_string()),
            Format::Csv => {
                let rows: Vec<Vec<String>> = records.iter().map(record_row).collect();
                output::to_csv(&RECORD_COLUMNS, &rows).map_err(|e| e.to_string())
            }
        };
        (bytes, success)
    } else {
        let record = run_single(&cfg);
        if let Some(path) = &cfg.emit_wavefunction {
            match wavefunction_rows(&record, &cfg) {
                Ok(rows) => {
                    let written = output::to_csv(&["r", "rho1", "rho2", "W"], &rows)
                        .map_err(|e| e.to_string())
                        .and_then(|b| fs::write(path, b).map_err(|e| e.to_string()));
                    if let Err(e) = written {
                        eprintln!("qdirac: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                Err(e) => eprintln!("qdirac: no wavefunction exported: {e}"),
            }
        }
        let bytes = match cfg.output.format {
            Format::Json => output::to_json(&record).map_err(|e| e.to_string()),
            Format::Csv => output::to_csv(&RECORD_COLUMNS, &[record_row(&record)]).map_err(|e| e.to_string()),
        };
        (bytes, record.ok())
    };
    let bytes = match bytes {
        Ok(b) => b,
        Err(e) => {
            eprintln!("qdirac: serialization failed: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_out(cfg.output.path.as_deref(), &bytes) {
        eprintln!("qdirac: cannot write output: {e}");
        return ExitCode::from(2);
    }
    if success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn cs_pair_maps_to_eta() {
        let eta = parse_cs("0.0,-1.0").unwrap();
        assert!((eta + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(parse_cs("0.5,0.5").is_err());
        assert!(parse_cs("1").is_err());
    }
}
