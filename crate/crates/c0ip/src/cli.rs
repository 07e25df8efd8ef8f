//! The `c0ip-control` command line front end.
//!
//! Two subcommands: `uniform` runs the convergence study on red refinements
//! of the structured base mesh and mirrors the published error tables;
//! `adaptive` runs the estimator-driven loop. Both write CSV artifacts plus a
//! `summary.json` into the output directory. The `C0IP_THREADS` environment
//! variable caps worker parallelism.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::afem::{run_afem_with, AfemConfig, AfemTrace};
use crate::assembly::{assemble_ah, assemble_mass, PenaltyConfig};
use crate::cases;
use crate::fe::DofMap;
use crate::kkt::write_solution_csv;
use crate::norms::Var;
use crate::report::{
    fmt_g6, format_table, summary_json, write_convergence_csv, write_estimator_csv, write_trace_csv,
    EstimatorCsvRow,
};
use crate::study::{convergence_rows, loglog_slope, run_uniform_study, UniformStudyLevel};

#[derive(Parser)]
#[command(
    name = "c0ip-control",
    version,
    about = "Quadratic C0 interior penalty solver for the biharmonic Dirichlet boundary control problem"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Uniform refinement convergence study with error tables
    Uniform(UniformArgs),
    /// Adaptive refinement driven by the residual error estimator
    Adaptive(AdaptiveArgs),
}

fn parse_sigma(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("penalty parameter must be >= 1, got {v}"))
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("regularization weight must be positive, got {v}"))
    }
}

fn parse_theta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("bulk fraction must lie in (0, 1), got {v}"))
    }
}

fn parse_levels(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 2 {
        Ok(v)
    } else {
        Err(format!("need at least 2 levels, got {v}"))
    }
}

#[derive(Args)]
pub struct CommonArgs {
    /// Benchmark case: example1 | constant
    #[arg(long)]
    pub case: String,
    /// Penalty parameter sigma (>= 1)
    #[arg(long, default_value_t = 20.0, value_parser = parse_sigma)]
    pub sigma: f64,
    /// Regularization weight alpha (> 0)
    #[arg(long, default_value_t = 1.0, value_parser = parse_alpha)]
    pub alpha: f64,
    /// Output directory for CSV/JSON artifacts
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Export the mesh of every level (plain text)
    #[arg(long)]
    pub emit_mesh: bool,
    /// Seed recorded in the summary (reserved for randomized diagnostics)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct UniformArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of uniform levels starting from the 4x4 base mesh
    #[arg(long, default_value_t = 5, value_parser = parse_levels)]
    pub levels: usize,
    /// Export per-DOF solution values of every level
    #[arg(long)]
    pub emit_solution: bool,
    /// Dump assembled matrices in `row col value` text form
    #[arg(long)]
    pub dump_matrices: bool,
}

#[derive(Args)]
pub struct AdaptiveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dörfler bulk fraction in (0, 1)
    #[arg(long, default_value_t = 0.4, value_parser = parse_theta)]
    pub theta: f64,
    /// Stop once the coupled system exceeds this many unknowns
    #[arg(long, default_value_t = 100_000)]
    pub max_ndof: usize,
    /// Hard cap on adaptive levels
    #[arg(long, default_value_t = 60)]
    pub max_levels: usize,
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Uniform(args) => run_uniform(args),
        Command::Adaptive(args) => run_adaptive(args),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create output directory {dir:?}: {e}"))
}

fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), String> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| format!("formatting {path:?}: {e}"))?;
    fs::write(path, buf).map_err(|e| format!("writing {path:?}: {e}"))
}

fn run_uniform(args: UniformArgs) -> i32 {
    let Some(mut case) = cases::by_name(&args.common.case) else {
        eprintln!(
            "error: unknown case {:?} (available: example1, constant)",
            args.common.case
        );
        return 2;
    };
    case.alpha = args.common.alpha;

    let study = match run_uniform_study(&case, args.common.sigma, 4, args.levels) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: solver failed: {e}");
            return 1;
        }
    };
    let rows = match convergence_rows(&study) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };

    println!("case {} | sigma {} | alpha {}", case.name, args.common.sigma, args.common.alpha);
    println!();
    println!("Errors and orders of convergence in energy norm");
    print!("{}", format_table(&rows, "energy"));
    println!();
    println!("Errors and orders of convergence in L2 norm");
    print!("{}", format_table(&rows, "l2"));

    if let Err(e) = write_uniform_artifacts(&args, &case.name, &study, &rows) {
        eprintln!("error: {e}");
        return 1;
    }
    println!();
    println!("artifacts written to {}", args.common.out.display());
    0
}

fn write_uniform_artifacts(
    args: &UniformArgs,
    case_name: &str,
    study: &[UniformStudyLevel],
    rows: &[crate::norms::ConvergenceRow],
) -> Result<(), String> {
    let out = &args.common.out;
    ensure_out_dir(out)?;
    write_file(&out.join("convergence.csv"), |w| write_convergence_csv(rows, w))?;

    let est_rows: Vec<EstimatorCsvRow> = study
        .iter()
        .map(|lvl| EstimatorCsvRow {
            level: lvl.level,
            ndof: lvl.out.ndof_system,
            eta: lvl.out.estimator.eta,
            eta_total: lvl.out.estimator.total,
            total_error: lvl.out.total_error(),
            efficiency: lvl.out.efficiency,
        })
        .collect();
    write_file(&out.join("estimator.csv"), |w| write_estimator_csv(&est_rows, w))?;

    // Slope: EOC of the summed full-energy error over the last two levels.
    let slope = if study.len() >= 2 {
        let a = study[study.len() - 2].out.total_error();
        let b = study[study.len() - 1].out.total_error();
        Some((a / b).log2())
    } else {
        None
    };
    let effs: Vec<f64> = study.iter().filter_map(|l| l.out.efficiency).collect();
    let summary = summary_json(
        "uniform",
        case_name,
        study.len(),
        slope,
        effs.iter().copied().reduce(f64::min),
        effs.iter().copied().reduce(f64::max),
        &[
            ("sigma", args.common.sigma.into()),
            ("alpha", args.common.alpha.into()),
            ("seed", args.common.seed.into()),
        ],
    );
    let pretty = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out.join("summary.json"), pretty + "\n")
        .map_err(|e| format!("writing summary.json: {e}"))?;

    for lvl in study {
        if args.common.emit_mesh {
            write_file(&out.join(format!("mesh_level{}.txt", lvl.level)), |w| {
                lvl.mesh.write_text(w)
            })?;
        }
        if args.emit_solution {
            write_file(&out.join(format!("solution_level{}.csv", lvl.level)), |w| {
                write_solution_csv(&lvl.mesh, &lvl.out.dofs, &lvl.out.solution, w)
            })?;
        }
        if args.dump_matrices {
            let dofs = DofMap::build(&lvl.mesh);
            let cfg = PenaltyConfig::new(args.common.sigma);
            let a = assemble_ah(&lvl.mesh, &dofs, &cfg);
            let m = assemble_mass(&lvl.mesh, &dofs);
            write_file(&out.join(format!("ah_level{}.txt", lvl.level)), |w| {
                a.write_coo_text(w)
            })?;
            write_file(&out.join(format!("mass_level{}.txt", lvl.level)), |w| {
                m.write_coo_text(w)
            })?;
        }
    }
    Ok(())
}

fn run_adaptive(args: AdaptiveArgs) -> i32 {
    if cases::by_name(&args.common.case).is_none() {
        eprintln!(
            "error: unknown case {:?} (available: example1, constant)",
            args.common.case
        );
        return 2;
    }
    let cfg = AfemConfig {
        case: args.common.case.clone(),
        theta: args.theta,
        max_levels: args.max_levels,
        max_ndof: args.max_ndof,
        sigma: args.common.sigma,
        alpha: args.common.alpha,
        ..AfemConfig::default()
    };
    let out_dir = args.common.out.clone();
    if let Err(e) = ensure_out_dir(&out_dir) {
        eprintln!("error: {e}");
        return 1;
    }
    let emit_mesh = args.common.emit_mesh;
    let trace = match run_afem_with(&cfg, |level, mesh| {
        if emit_mesh {
            let path = out_dir.join(format!("mesh_level{level}.txt"));
            let mut buf = Vec::new();
            if mesh.write_text(&mut buf).is_ok() {
                let _ = fs::write(path, buf);
            }
        }
    }) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };

    println!(
        "case {} | sigma {} | alpha {} | theta {}",
        args.common.case, args.common.sigma, args.common.alpha, args.theta
    );
    println!(
        "{:>5} {:>8} {:>10} {:>12} {:>12} {:>10} {:>7}",
        "level", "ndof", "triangles", "eta", "total_err", "eff", "marked"
    );
    for l in &trace.levels {
        let total_error: f64 = Var::ALL.iter().map(|v| l.errors[v].full_energy).sum();
        println!(
            "{:>5} {:>8} {:>10} {:>12} {:>12} {:>10} {:>7}",
            l.level,
            l.ndof,
            l.triangles,
            fmt_g6(l.eta_total),
            fmt_g6(total_error),
            l.efficiency.map(fmt_g6).unwrap_or_else(|| "--".into()),
            l.marked
        );
    }
    if trace.converged {
        println!("converged: estimator at solver noise level");
    }

    if let Err(e) = write_adaptive_artifacts(&args, &trace) {
        eprintln!("error: {e}");
        return 1;
    }
    println!("artifacts written to {}", args.common.out.display());

    if let Some(fail) = &trace.failure {
        eprintln!("error: solver failed during the adaptive loop: {fail}");
        return 1;
    }
    0
}

fn write_adaptive_artifacts(args: &AdaptiveArgs, trace: &AfemTrace) -> Result<(), String> {
    let out = &args.common.out;
    write_file(&out.join("trace.csv"), |w| write_trace_csv(trace, w))?;

    // Log-log slopes over the last up-to-5 levels.
    let window = trace.levels.len().min(5);
    let (slope, error_slope) = if window >= 2 {
        let tail = &trace.levels[trace.levels.len() - window..];
        let ndofs: Vec<f64> = tail.iter().map(|l| l.ndof as f64).collect();
        let etas: Vec<f64> = tail.iter().map(|l| l.eta_total).collect();
        let errs: Vec<f64> = tail
            .iter()
            .map(|l| Var::ALL.iter().map(|v| l.errors[v].full_energy).sum::<f64>())
            .collect();
        if etas.iter().all(|&v| v > 0.0) && errs.iter().all(|&v| v > 0.0) {
            (
                Some(loglog_slope(&ndofs, &etas)),
                Some(loglog_slope(&ndofs, &errs)),
            )
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };
    let effs: Vec<f64> = trace.levels.iter().filter_map(|l| l.efficiency).collect();
    let summary = summary_json(
        "adaptive",
        &args.common.case,
        trace.levels.len(),
        slope,
        effs.iter().copied().reduce(f64::min),
        effs.iter().copied().reduce(f64::max),
        &[
            ("sigma", args.common.sigma.into()),
            ("alpha", args.common.alpha.into()),
            ("theta", args.theta.into()),
            ("seed", args.common.seed.into()),
            ("error_slope", error_slope.map(|v| v.into()).unwrap_or(serde_json::Value::Null)),
            ("converged", trace.converged.into()),
        ],
    );
    let pretty = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out.join("summary.json"), pretty + "\n")
        .map_err(|e| format!("writing summary.json: {e}"))
}
