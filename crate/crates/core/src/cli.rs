//! Command-line front end: `solve`, `bench`, `alpha-sweep`, `mesh-info`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{alpha_sweep_violations, build_system, run_alpha_sweep, run_bench, thread_count, write_csv};
use crate::error::{Error, Result};
use crate::mesh::mesh_size;
use crate::problems::by_name;
use crate::solvers::{solve, Algorithm, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gradstate", version, about = "Optimal control with a gradient-state constraint")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solve and write its JSON report.
    Solve(SolveArgs),
    /// Iteration counts over mesh levels and algorithms, as CSV.
    Bench(BenchArgs),
    /// The dual method over a list of regularization weights, as CSV.
    AlphaSweep(SweepArgs),
    /// Print mesh statistics for one level.
    MeshInfo(MeshArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, default_value = "example1")]
    problem: String,
    /// `key = value` config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    admm_sigma: Option<f64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<SolverConfig> {
        let mut c = SolverConfig::default();
        if let Some(path) = &self.config {
            c.apply_text(&std::fs::read_to_string(path)?)?;
        }
        if let Some(v) = self.tol {
            c.outer_tol = v;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.admm_sigma {
            c.admm_sigma = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 3)]
    level: usize,
    #[arg(long, default_value = "dabcd")]
    algo: String,
    #[arg(long)]
    alpha: Option<f64>,
    /// Write y, u, p as nodal fields in legacy VTK format.
    #[arg(long)]
    export_vtk: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Range `2..4` (inclusive) or list `2,3,4`.
    #[arg(long, default_value = "2..4")]
    levels: String,
    #[arg(long = "algos", alias = "algo", default_value = "dabcd,ihadmm,admm")]
    algos: String,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 4)]
    level: usize,
    #[arg(long, default_value = "1e-2,5e-3,1e-3,5e-4,1e-4,5e-5,1e-5")]
    alphas: String,
    /// Exit 2 if any run fails to converge within this many iterations.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Debug, Args)]
struct MeshArgs {
    #[arg(long, default_value = "example1")]
    problem: String,
    #[arg(long, default_value_t = 3)]
    level: usize,
}

pub fn parse_levels(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Parse(format!("bad level list `{text}`"));
    let levels: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if levels.is_empty() {
        return Err(bad());
    }
    Ok(levels)
}

pub fn parse_list<V: std::str::FromStr>(text: &str) -> Result<Vec<V>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("bad list entry `{}`", s.trim()))))
        .collect()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let problem = by_name::<f64>(&args.common.problem)?;
    let algo: Algorithm = args.algo.parse()?;
    let mut config = args.common.config()?;
    if args.alpha.is_some() {
        config.alpha = args.alpha;
    }
    config.validate()?;
    let sys = build_system(&problem, args.level)?;
    let report = solve(algo, &problem, &sys, &config)?;
    let mut out = output(args.common.out.as_deref())?;
    writeln!(out, "{}", report.to_json()?)?;
    out.flush()?;
    if let Some(path) = &args.export_vtk {
        let mesh = problem.mesh(args.level)?;
        let y = sys.expand(&report.final_y)?;
        let u = sys.expand(&report.final_u)?;
        let p = sys.expand(&report.final_p)?;
        let mut w = BufWriter::new(File::create(path)?);
        mesh.write_vtk(&mut w, &[("y", &y), ("u", &u), ("p", &p)])?;
        w.flush()?;
    }
    eprintln!(
        "{} {} level {}: {} iterations, residual {:.3e}{}",
        algo,
        problem.name,
        args.level,
        report.iterations,
        report.residual,
        if report.converged { "" } else { " (not converged)" }
    );
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let mut problem = by_name::<f64>(&args.common.problem)?;
    if let Some(a) = args.alpha {
        problem = problem.with_alpha(a);
        problem.validate()?;
    }
    let levels = parse_levels(&args.levels)?;
    let algos: Vec<Algorithm> = parse_list(&args.algos)?;
    if algos.is_empty() {
        return Err(Error::InvalidArgument("empty algorithm list".into()));
    }
    let config = args.common.config()?;
    let rows = run_bench(&problem, &levels, &algos, &config, thread_count())?;
    write_csv(output(args.common.out.as_deref())?, &rows)?;
    Ok(if rows.iter().all(|r| r.flag.is_empty()) { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_alpha_sweep(args: &SweepArgs) -> Result<i32> {
    let problem = by_name::<f64>(&args.common.problem)?;
    let alphas: Vec<f64> = parse_list(&args.alphas)?;
    let config = args.common.config()?;
    let rows = run_alpha_sweep(&problem, args.level, &alphas, &config, thread_count())?;
    write_csv(output(args.common.out.as_deref())?, &rows)?;
    let bad = alpha_sweep_violations(&rows, args.cap);
    for r in &bad {
        eprintln!("alpha {:e}: {} iterations {}", r.alpha, r.iterations, r.flag);
    }
    Ok(if bad.is_empty() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_mesh_info(args: &MeshArgs) -> Result<i32> {
    let problem = by_name::<f64>(&args.problem)?;
    let mesh = problem.mesh(args.level)?;
    mesh.validate()?;
    println!("problem        {}", problem.name);
    println!("level          {}", args.level);
    println!("h_label        {}", problem.h_label(args.level));
    println!("nodes          {}", mesh.num_nodes());
    println!("interior dofs  {}", mesh.num_interior());
    println!("triangles      {}", mesh.triangles.len());
    println!("max diameter   {:.6}", mesh_size(&mesh));
    println!("min angle      {:.3}", mesh.min_angle_degrees());
    println!("area           {:.6}", mesh.total_area());
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::AlphaSweep(a) => cmd_alpha_sweep(a),
        Command::MeshInfo(a) => cmd_mesh_info(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
