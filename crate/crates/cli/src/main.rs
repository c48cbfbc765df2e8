mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eyring_core::{Error, ErrorKind, Result};

use crate::commands::Ctx;
use crate::config::{parse_list, RunConfig};
use crate::report::OutDir;

const AFTER: &str = "\
Exit codes: 0 success, 1 configuration error, 2 assumption falsified, 3 numerical failure.
Numbers are written as shortest round-trip decimals; exponentially small values
carry lambda_log10 plus sign, mantissa and base-10 exponent columns.";

#[derive(Parser)]
#[command(name = "eyring", version, about = "Metastable spectra of Fokker–Planck type operators", after_help = AFTER)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// output directory (default: the config's `out`, else ./eyring-out)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// comma-separated semiclassical parameters, replacing the config list
    #[arg(long, value_name = "LIST")]
    h: Option<String>,
    /// grid points per axis, N or N,M
    #[arg(long, value_name = "N[,M]")]
    grid: Option<String>,
    /// multiply every tolerance by X
    #[arg(long, value_name = "X")]
    tol_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical points, merge tree and labeling of f.
    #[command(after_help = "\
Files:
  criticals.csv  id, x1..xd, index, f
  minima.csv     m_id, x1..xd, f, sigma, S, kind, class, saddles (ids in j(m), inf for the fictive saddle)
  saddles.csv    s_id, x1..xd, f, branch_a, branch_b
  landscape.json full labeling and the genericity report")]
    Landscape(Common),
    /// Check the structural assumptions; exit 2 if one fails.
    #[command(after_help = "\
Files:
  verify.csv   check, location, value, pass
  verify.json  eikonal, per-critical-point and hypoellipticity reports
The config field `reports` restricts the checks to a subset of eikonal, critical, kalman, hypo.")]
    Verify(Common),
    /// Leading-order small eigenvalues for each minimum and h.
    #[command(after_help = "\
Files:
  predict.csv   m_id, S, z, h, lambda_log10, sign, mantissa, exponent
                (one row per non-global minimum and h; λ = z·h·e^{-2S/h})
  predict.json  the same with full precision")]
    Predict(Common),
    /// Spectrum of a graded matrix given in the config's `graded` section.
    #[command(after_help = "\
Files:
  graded.csv     level, k, core_eigenvalue, condition, lambda_log10, sign, mantissa, exponent
  resolvent.csv  z_re, z_im, resolvent_norm, distance, product (when `graded.z` is set)")]
    Graded(Common),
    /// Discretize, compute small eigenvalues and compare with the prediction.
    #[command(after_help = "\
Files:
  validate.csv  h, m_id, S, predicted_log10, computed_re, computed_im, ratio, log_ratio, unknowns, method, pass
  spectrum.csv  h, kernel_re, kernel_im, gap_re, gap_im, gibbs_residual, unknowns
  validate.json full reports
`pass` means |ratio − 1| ≤ tolerances.ratio_tol (default 0.15).")]
    Validate(Common),
    /// Spectral evolution of the semigroup and plateau checks.
    #[command(after_help = "\
Files:
  simulate.csv  t, distance   (‖u(t) − Πu₀‖/‖u₀‖, plot data)
  windows.csv   k, t_start, t_end, rank, max_error, empty, pass
  simulate.json full report")]
    Simulate(Common),
    /// Write a ready config for a named example (witten, nonreversible, kfp, susy_breaking).
    #[command(after_help = "Files:\n  NAME.json  the run configuration")]
    Gallery {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

fn prepare(common: &Common, gallery: Option<&str>) -> Result<Ctx> {
    let mut cfg = match (&common.config, gallery) {
        (_, Some(name)) => RunConfig::for_gallery(name)?,
        (Some(p), None) => RunConfig::load(p)?,
        (None, None) => return Err(Error::InvalidInput("--config is required".into())),
    };
    if let Some(h) = &common.h {
        cfg.h = parse_list(h, "h")?;
    }
    if let Some(g) = &common.grid {
        cfg.grid = parse_list(g, "grid")?;
    }
    let tol_scale = common.tol_scale.unwrap_or(1.0);
    cfg.scale_tolerances(tol_scale)?;
    cfg.check()?;
    let root = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("eyring-out"));
    Ok(Ctx {
        cfg,
        out: OutDir::create(root)?,
        tol_scale,
    })
}

fn run(cli: Cli) -> Result<()> {
    let (common, gallery) = match &cli.command {
        Command::Landscape(c)
        | Command::Verify(c)
        | Command::Predict(c)
        | Command::Graded(c)
        | Command::Validate(c)
        | Command::Simulate(c) => (c, None),
        Command::Gallery { name, common } => (common, Some(name.as_str())),
    };
    let ctx = prepare(common, gallery)?;
    let summary = match &cli.command {
        Command::Landscape(_) => commands::landscape(&ctx)?,
        Command::Verify(_) => commands::verify(&ctx)?,
        Command::Predict(_) => commands::predict_cmd(&ctx)?,
        Command::Graded(_) => commands::graded(&ctx)?,
        Command::Validate(_) => commands::validate(&ctx)?,
        Command::Simulate(_) => commands::simulate(&ctx)?,
        Command::Gallery { name, .. } => return commands::gallery(&ctx, name).map(|s| print!("{s}")),
    };
    ctx.out.text("summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Assumption => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}
