use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use hylp::harness::{
    format_summary, read_results_csv, scatter_export, sort_records, summarize, write_results_csv,
    write_scatter_csv, CheckError, ResultRecord,
};
use hylp::{
    check_solution, parse_mps, parse_solution, solve_general, write_mps, write_solution,
    GeneralLp, Method, ParseError, SolveOptions, SolveStatus,
};

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

fn status_code(s: SolveStatus) -> u8 {
    match s {
        SolveStatus::Optimal => 0,
        SolveStatus::TimeLimit => 10,
        SolveStatus::Stalled => 11,
        SolveStatus::IterationLimit => 12,
        SolveStatus::NumericalFailure => 13,
        SolveStatus::Infeasible => 14,
        SolveStatus::Unbounded => 15,
        SolveStatus::Error => 16,
    }
}

#[derive(Parser)]
#[command(name = "hylp", version, about = "LP solver: PDHG, interior point and PDHG-to-IPM warm starts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one MPS model and write a solution file.
    Solve(SolveArgs),
    /// Run every method on every .mps file of a directory.
    Bench(BenchArgs),
    /// Recompute the violation of a solution file on its model.
    Check {
        model: PathBuf,
        solution: PathBuf,
    },
    /// Turn a results CSV into clamped scatter data.
    Scatter {
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the built-in desk suite as MPS files.
    Desk { dir: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Wall-clock limit per solve, in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long)]
    no_presolve: bool,
    #[arg(long)]
    no_scaling: bool,
    /// Seed of the PDHG power iteration.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn options(&self) -> SolveOptions {
        let mut o = SolveOptions {
            presolve: !self.no_presolve,
            scaling: !self.no_scaling,
            time_limit_s: self.time_limit,
            ..SolveOptions::default()
        };
        o.pdhg.seed = self.seed;
        o
    }
}

#[derive(Args)]
struct SolveArgs {
    model: PathBuf,
    /// pdhg, pdhg-1eK, ipm-cold, hybrid or hybrid-1eK.
    #[arg(long, default_value = "hybrid")]
    method: Method,
    /// Tolerance of the method's own stopping test (PDHG start tolerance
    /// for hybrid).
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "pdhg-1e4,ipm-cold,hybrid")]
    methods: Vec<Method>,
    #[arg(long)]
    out: PathBuf,
    /// Also write scatter data to this file.
    #[arg(long)]
    scatter: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, env = "HYLP_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    common: Common,
}

fn read_model(path: &Path) -> Result<GeneralLp> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let g = parse_mps(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(g)
}

fn with_eps(method: Method, eps: Option<f64>, opts: &mut SolveOptions) -> Result<Method> {
    let Some(eps) = eps else { return Ok(method) };
    if !(eps > 0.0 && eps.is_finite()) {
        bail!("--eps-rel must be positive");
    }
    Ok(match method {
        Method::Pdhg { .. } => Method::Pdhg { eps },
        Method::Hybrid { .. } => Method::Hybrid { pdhg_eps: eps },
        Method::IpmCold => {
            opts.ipm.eps_rel = eps;
            Method::IpmCold
        }
    })
}

fn solve(args: SolveArgs) -> Result<u8> {
    let g = read_model(&args.model)?;
    let mut opts = args.common.options();
    let method = with_eps(args.method, args.eps_rel, &mut opts)?;
    let report = solve_general(&g, method, &opts);
    let sol = report.to_solution_file(&g);
    fs::write(&args.out, write_solution(&sol))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("status     {}", report.status);
    println!("objective  {:.10e}", report.objective);
    if let Some(v) = report.max_violation() {
        println!("violation  {v:.3e}");
    }
    println!(
        "iterations pdhg {} ipm {} escalations {}",
        report.pdhg_iterations, report.ipm_iterations, report.escalations
    );
    if let Some(m) = &report.message {
        eprintln!("{m}");
    }
    Ok(status_code(report.status))
}

fn model_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("mps")))
        .collect();
    files.sort();
    Ok(files)
}

fn bench(args: BenchArgs) -> Result<u8> {
    let files = model_files(&args.dir)?;
    if files.is_empty() {
        bail!("no .mps files in {}", args.dir.display());
    }
    let opts = args.common.options();
    let models: Vec<(String, Option<GeneralLp>)> = files
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            match read_model(p) {
                Ok(g) => (name, Some(g)),
                Err(e) => {
                    eprintln!("{name}: {e:#}");
                    (name, None)
                }
            }
        })
        .collect();
    let jobs: Vec<(&str, Option<&GeneralLp>, Method)> = models
        .iter()
        .flat_map(|(name, g)| args.methods.iter().map(move |&m| (name.as_str(), g.as_ref(), m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build()?;
    let mut records: Vec<ResultRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(name, g, m)| match g {
                Some(g) => {
                    let mut r = ResultRecord::from_report(&solve_general(g, m, &opts));
                    r.model = name.to_string();
                    r
                }
                None => ResultRecord::error(name, &m.tag()),
            })
            .collect()
    });
    sort_records(&mut records);
    fs::write(&args.out, write_results_csv(&records)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.scatter {
        fs::write(path, write_scatter_csv(&scatter_export(&records))?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let mut rows = summarize(&records);
    rows.sort_by_key(|r| args.methods.iter().position(|m| m.tag() == r.method));
    print!("{}", format_summary(&rows));
    Ok(0)
}

fn check(model: &Path, solution: &Path) -> Result<u8> {
    let g = read_model(model)?;
    let text =
        fs::read_to_string(solution).with_context(|| format!("reading {}", solution.display()))?;
    let sol = parse_solution(&text).with_context(|| format!("parsing {}", solution.display()))?;
    let v = check_solution(&g, &sol)?;
    println!("primal_inf    {:.6e}", v.primal_inf);
    println!("dual_inf      {:.6e}", v.dual_inf);
    println!("rel_gap       {:.6e}", v.rel_gap);
    println!("max_violation {:.6e}", v.max_violation);
    Ok(0)
}

fn scatter(results: &Path, out: &Path) -> Result<u8> {
    let text =
        fs::read_to_string(results).with_context(|| format!("reading {}", results.display()))?;
    let records = read_results_csv(&text).with_context(|| format!("parsing {}", results.display()))?;
    if records.is_empty() {
        bail!("{} has no records", results.display());
    }
    fs::write(out, write_scatter_csv(&scatter_export(&records))?)
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(0)
}

fn desk(dir: &Path) -> Result<u8> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for inst in hylp::desk::desk_suite() {
        let path = dir.join(format!("{}.mps", inst.name));
        fs::write(&path, write_mps(&inst.model))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(0)
}

fn error_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<ParseError>() || c.is::<hylp::harness::CsvError>()) {
        EXIT_PARSE
    } else if e.chain().any(|c| c.is::<CheckError>()) {
        EXIT_MISMATCH
    } else {
        EXIT_OTHER
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Check { model, solution } => check(&model, &solution),
        Command::Scatter { results, out } => scatter(&results, &out),
        Command::Desk { dir } => desk(&dir),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
