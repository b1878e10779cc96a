//! Command-line front-end: every command reads a JSON config (or a stored
//! solution directory), writes `manifest.json` first and then its outputs.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use expfb::diagnostics::{diagnose, DiagnoseOptions};
use expfb::geometry::{
    box_counting_dimension, fit_through_origin, free_boundary, thin_band_stats, write_band_stats_csv,
    write_polylines_csv, Side,
};
use expfb::grid::read_field_csv;
use expfb::output::fmt17;
use expfb::solver::{oracle_1d, solve, SolveResult};
use expfb::{Config, EnergyLaw, Error, Mesh, Order, ProblemSpec, SampledProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "expfb", version, about = "Two-phase free boundaries of exponential-growth energies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the configured problem and store the solution.
    Solve(RunArgs),
    /// Solve along the k schedule and tabulate the per-order minimizers.
    #[command(name = "sweep-k")]
    SweepK(RunArgs),
    /// Extract and measure the free boundary of a solution.
    Freeboundary(FreeboundaryArgs),
    /// Regularity diagnostics on a stored solution.
    Diagnose(DiagnoseArgs),
    /// Brute-force 1D kink minimizer, printed as JSON.
    Oracle1d(OracleArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Allow writing into an existing output directory.
    #[arg(long)]
    pub force: bool,
    /// Worker threads for element loops.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FreeboundaryArgs {
    /// Solve this config first.
    #[arg(long, conflicts_with = "solution", required_unless_present = "solution")]
    pub config: Option<PathBuf>,
    /// Use the solution stored in this directory (as written by `solve`).
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Comma-separated band widths.
    #[arg(long, default_value = "0.02,0.04,0.06,0.08,0.1")]
    pub epsilons: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Directory written by `solve`.
    #[arg(long)]
    pub solution: PathBuf,
    /// Output directory; defaults to `<solution>/diagnose`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub gamma_plus: f64,
    #[arg(long)]
    pub gamma_minus: f64,
    /// Truncation order, or `inf`.
    #[arg(long, default_value = "inf")]
    pub k: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub grid_points: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_path: String,
    pub output_dir: String,
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    pub timestamp: String,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_CONFIG, error: e.into() }
}

fn io_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_CONFIG, error: e.into() }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses arguments, runs the command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Solve(a) => with_threads(a.common.threads, || cmd_solve(&a)),
        Command::SweepK(a) => with_threads(a.common.threads, || cmd_sweep_k(&a)),
        Command::Freeboundary(a) => with_threads(a.common.threads, || cmd_freeboundary(&a)),
        Command::Diagnose(a) => with_threads(a.threads, || cmd_diagnose(&a)),
        Command::Oracle1d(a) => cmd_oracle1d(&a),
    }
}

fn with_threads(threads: usize, f: impl FnOnce() -> CmdResult + Send) -> CmdResult {
    if threads == 0 {
        return Err(config_error(anyhow::anyhow!("--threads must be >= 1")));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(io_error)?;
    pool.install(f)
}

struct Loaded {
    path: PathBuf,
    bytes: Vec<u8>,
    config: Config,
}

fn load(path: &Path) -> std::result::Result<Loaded, Failure> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(config_error)?;
    let text = String::from_utf8(bytes.clone()).context("config is not UTF-8").map_err(config_error)?;
    let config =
        Config::from_json(&text).with_context(|| format!("loading {}", path.display())).map_err(config_error)?;
    Ok(Loaded { path: path.to_path_buf(), bytes, config })
}

fn output_dir(out: Option<&Path>, config: &Config) -> std::result::Result<PathBuf, Failure> {
    match (out, &config.output_dir) {
        (Some(p), _) => Ok(p.to_path_buf()),
        (None, Some(p)) => Ok(PathBuf::from(p)),
        (None, None) => Err(config_error(anyhow::anyhow!("no output directory: pass --out or set output_dir"))),
    }
}

fn prepare_dir(dir: &Path, force: bool) -> std::result::Result<(), Failure> {
    if dir.exists() && !force {
        return Err(config_error(anyhow::anyhow!(
            "output directory {} exists; pass --force to write into it",
            dir.display()
        )));
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(io_error)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config_path: &Path,
    config_bytes: &[u8],
) -> std::result::Result<(), Failure> {
    let manifest = RunManifest {
        config_path: config_path.display().to_string(),
        output_dir: dir.display().to_string(),
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: sha256_hex(config_bytes),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

fn write_json(path: &Path, value: &impl Serialize) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(io_error)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())).map_err(io_error)
}

fn create(path: &Path) -> std::result::Result<BufWriter<fs::File>, Failure> {
    fs::File::create(path).map(BufWriter::new).with_context(|| format!("creating {}", path.display())).map_err(io_error)
}

fn core(e: Error) -> Failure {
    Failure { code: EXIT_CONFIG, error: e.into() }
}

/// Sets up the output directory, manifest and config copy for a config-driven run.
fn start_run(command: &str, loaded: &Loaded, common: &Common) -> std::result::Result<PathBuf, Failure> {
    let dir = output_dir(common.out.as_deref(), &loaded.config)?;
    prepare_dir(&dir, common.force)?;
    write_manifest(&dir, command, &loaded.path, &loaded.bytes)?;
    fs::write(dir.join("config.json"), &loaded.bytes).map_err(io_error)?;
    Ok(dir)
}

fn problem_of(config: &Config) -> std::result::Result<(ProblemSpec, Mesh, SampledProblem), Failure> {
    let spec = config.problem();
    let mesh = spec.mesh().map_err(core)?;
    let sampled = SampledProblem::new(&spec, &mesh).map_err(core)?;
    Ok((spec, mesh, sampled))
}

#[derive(Serialize)]
struct BreakdownFile<'a> {
    phi_term: f64,
    f_term: f64,
    gamma_term: f64,
    energy: f64,
    iterations: usize,
    final_grad_norm: f64,
    converged: bool,
    per_stage: &'a [expfb::solver::StageSummary],
}

/// Runs the solve; on a solver error writes what is available and returns the failure.
fn solve_into(
    dir: &Path,
    mesh: &Mesh,
    sampled: &SampledProblem,
    config: &Config,
) -> std::result::Result<SolveResult, Failure> {
    match solve(sampled, mesh, &config.solver) {
        Ok(result) => Ok(result),
        Err(e) => {
            if let Some(iterate) = failed_iterate(&e) {
                let w = create(&dir.join("solution.csv"))?;
                mesh.write_field_csv(iterate, w).map_err(core)?;
            }
            fs::write(dir.join("error.txt"), format!("{e}\n")).map_err(io_error)?;
            Err(Failure { code: EXIT_SOLVER, error: e.into() })
        }
    }
}

fn failed_iterate(e: &Error) -> Option<&[f64]> {
    match e {
        Error::LineSearchFailure { iterate, .. } => Some(iterate),
        Error::Stage { source, .. } => failed_iterate(source),
        _ => None,
    }
}

fn write_solution(dir: &Path, mesh: &Mesh, result: &SolveResult) -> std::result::Result<(), Failure> {
    mesh.write_field_csv(&result.field, create(&dir.join("solution.csv"))?).map_err(core)?;
    result.write_trace_csv(create(&dir.join("trace.csv"))?).map_err(core)?;
    write_json(
        &dir.join("breakdown.json"),
        &BreakdownFile {
            phi_term: result.breakdown.phi_term,
            f_term: result.breakdown.f_term,
            gamma_term: result.breakdown.gamma_term,
            energy: result.energy_value,
            iterations: result.iterations,
            final_grad_norm: result.final_grad_norm,
            converged: result.converged,
            per_stage: &result.per_stage,
        },
    )
}

fn converged_code(result: &SolveResult) -> i32 {
    if result.converged {
        EXIT_OK
    } else {
        eprintln!("solver stopped at max_iters with gradient norm {:e}", result.final_grad_norm);
        EXIT_SOLVER
    }
}

pub fn cmd_solve(args: &RunArgs) -> CmdResult {
    let loaded = load(&args.config)?;
    let (_, mesh, sampled) = problem_of(&loaded.config)?;
    let dir = start_run("solve", &loaded, &args.common)?;
    let result = solve_into(&dir, &mesh, &sampled, &loaded.config)?;
    write_solution(&dir, &mesh, &result)?;
    Ok(converged_code(&result))
}

pub fn cmd_sweep_k(args: &RunArgs) -> CmdResult {
    let loaded = load(&args.config)?;
    let (_, mesh, sampled) = problem_of(&loaded.config)?;
    let dir = start_run("sweep-k", &loaded, &args.common)?;
    let result = solve_into(&dir, &mesh, &sampled, &loaded.config)?;
    let stages = result.per_k_fields();
    let last = &stages.last().expect("nonempty schedule").field;
    let mut text = String::from("k,energy,linf_diff_to_final,grad_norm\n");
    for s in &stages {
        let diff = s.field.iter().zip(last).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        text += &format!("{},{},{},{}\n", s.k, fmt17(s.energy), fmt17(diff), fmt17(s.grad_norm));
    }
    fs::write(dir.join("convergence.csv"), text).map_err(io_error)?;
    write_solution(&dir, &mesh, &result)?;
    Ok(converged_code(&result))
}

fn parse_epsilons(text: &str) -> std::result::Result<Vec<f64>, Failure> {
    let eps: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("invalid --epsilons {text:?}"))
        .map_err(config_error)?;
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(config_error(anyhow::anyhow!("--epsilons must be positive numbers")));
    }
    Ok(eps)
}

/// Reads the config and field stored by `solve`.
fn load_solution(dir: &Path) -> std::result::Result<(Loaded, Mesh, Vec<f64>), Failure> {
    let loaded = load(&dir.join("config.json"))?;
    let mesh = loaded.config.problem().mesh().map_err(core)?;
    let path = dir.join("solution.csv");
    let text =
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display())).map_err(config_error)?;
    let field = read_field_csv(&text).map_err(config_error)?;
    if field.len() != mesh.node_count() {
        return Err(config_error(anyhow::anyhow!(
            "{} has {} values but the mesh has {} nodes",
            path.display(),
            field.len(),
            mesh.node_count()
        )));
    }
    Ok((loaded, mesh, field))
}

#[derive(Serialize)]
struct Fit {
    slope: f64,
    r2: f64,
}

#[derive(Serialize)]
struct DimensionFile {
    side: Side,
    dimension: Option<f64>,
    fit_r2: Option<f64>,
    scales: Vec<f64>,
    length_plus: f64,
    length_minus: f64,
    plateau_elements: usize,
    band_measure_fit: Fit,
    band_dirichlet_fit: Fit,
}

pub fn cmd_freeboundary(args: &FreeboundaryArgs) -> CmdResult {
    let epsilons = parse_epsilons(&args.epsilons)?;
    let (dir, mesh, field, code) = match (&args.config, &args.solution) {
        (Some(path), _) => {
            let loaded = load(path)?;
            let (_, mesh, sampled) = problem_of(&loaded.config)?;
            let dir = start_run("freeboundary", &loaded, &args.common)?;
            let result = solve_into(&dir, &mesh, &sampled, &loaded.config)?;
            write_solution(&dir, &mesh, &result)?;
            let code = converged_code(&result);
            (dir, mesh, result.field.into_inner(), code)
        }
        (None, Some(sol)) => {
            let (loaded, mesh, field) = load_solution(sol)?;
            let dir = match &args.common.out {
                Some(p) => p.clone(),
                None => sol.join("freeboundary"),
            };
            prepare_dir(&dir, args.common.force)?;
            write_manifest(&dir, "freeboundary", &loaded.path, &loaded.bytes)?;
            (dir, mesh, field, EXIT_OK)
        }
        (None, None) => return Err(config_error(anyhow::anyhow!("pass --config or --solution"))),
    };
    let width = epsilons[0];
    let plus = free_boundary(&mesh, &field, Side::Plus, width).map_err(core)?;
    let minus = free_boundary(&mesh, &field, Side::Minus, width).map_err(core)?;
    write_polylines_csv(&plus.polylines, create(&dir.join("freeboundary.csv"))?).map_err(core)?;
    write_polylines_csv(&minus.polylines, create(&dir.join("freeboundary_minus.csv"))?).map_err(core)?;
    write_band_stats_csv(&mesh, &field, &epsilons, create(&dir.join("fb_stats.csv"))?).map_err(core)?;

    let h = mesh.h();
    let scales = vec![8.0 * h, 4.0 * h, 2.0 * h, h];
    let (dimension, fit_r2) = match box_counting_dimension(&plus.polylines, &scales) {
        Ok((d, r2)) => (Some(d), Some(r2)),
        Err(Error::DegenerateInput(_)) => (None, None),
        Err(e) => return Err(core(e)),
    };
    let rows = thin_band_stats(&mesh, &field, &epsilons).map_err(core)?;
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let measure: Vec<f64> = rows.iter().map(|r| r.band_measure).collect();
    let dirichlet: Vec<f64> = rows.iter().map(|r| r.band_dirichlet).collect();
    let (ms, mr) = fit_through_origin(&eps, &measure);
    let (ds, dr) = fit_through_origin(&eps, &dirichlet);
    write_json(
        &dir.join("dimension.json"),
        &DimensionFile {
            side: Side::Plus,
            dimension,
            fit_r2,
            scales,
            length_plus: plus.length_marching,
            length_minus: minus.length_marching,
            plateau_elements: plus.plateau_elements.len(),
            band_measure_fit: Fit { slope: ms, r2: mr },
            band_dirichlet_fit: Fit { slope: ds, r2: dr },
        },
    )?;
    Ok(code)
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> CmdResult {
    let (loaded, mesh, field) = load_solution(&args.solution)?;
    let dir = args.out.clone().unwrap_or_else(|| args.solution.join("diagnose"));
    prepare_dir(&dir, args.force)?;
    write_manifest(&dir, "diagnose", &loaded.path, &loaded.bytes)?;
    let spec = loaded.config.problem();
    let opts = DiagnoseOptions { seed: args.seed, ..DiagnoseOptions::default() };
    let report = diagnose(&spec, &mesh, &field, &opts).map_err(|e| Failure { code: EXIT_SOLVER, error: e.into() })?;
    fs::write(dir.join("report.json"), report.to_json() + "\n").map_err(io_error)?;
    Ok(EXIT_OK)
}

pub fn cmd_oracle1d(args: &OracleArgs) -> CmdResult {
    let order: Order = serde_json::from_value(match args.k.parse::<u64>() {
        Ok(k) => serde_json::Value::from(k),
        Err(_) => serde_json::Value::from(args.k.clone()),
    })
    .map_err(|e| config_error(anyhow::anyhow!("invalid --k {:?}: {e}", args.k)))?;
    let law = EnergyLaw::exponential().with_order(order);
    let (t_star, energy_star) =
        oracle_1d(args.a, args.b, args.gamma_plus, args.gamma_minus, &law, args.grid_points).map_err(core)?;
    println!("{}", serde_json::json!({ "t_star": t_star, "energy_star": energy_star }));
    Ok(EXIT_OK)
}
