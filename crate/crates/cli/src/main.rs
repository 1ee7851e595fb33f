use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracdiff::SpectralInterval;
use fracdiff_cli::bench::{rate_summary, run_bench, write_bench, CSV_FILE};
use fracdiff_cli::commands::{bura_export, poles, solve, write_solution, PoleKind, PolesRequest, SolveRequest};
use fracdiff_cli::config::{parse_list, BenchConfig, FlatConfig};
use fracdiff_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "fracdiff", version, about = "Rational Krylov and reduced basis solvers for L^{-s} b")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep methods, exponents and k against the dense reference solution.
    Bench(Common),
    /// Solve one instance and write the solution vector.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Single method id (zolo, bura, greedy, sinc, gauss, direct, dual, oracle).
        #[arg(long)]
        method: String,
        /// Number of finite poles / snapshots.
        #[arg(long, short)]
        k: usize,
        /// Approximant JSON written by `bura-export`, used by `direct`.
        #[arg(long)]
        approximant: Option<PathBuf>,
    },
    /// Print the pole set of a generator.
    Poles {
        #[command(flatten)]
        common: Common,
        /// zolotarev, bura, sinc or greedy.
        #[arg(long)]
        kind: String,
        #[arg(long, short, default_value_t = 4)]
        k: usize,
        #[arg(long)]
        lmin: Option<f64>,
        #[arg(long)]
        lmax: Option<f64>,
    },
    /// Compute a best uniform rational approximant and store it as JSON.
    BuraExport {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        k: usize,
        #[arg(long)]
        lmin: Option<f64>,
        #[arg(long)]
        lmax: Option<f64>,
        /// Output file.
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML file with flat keys; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fd1d, fd2d or files.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    /// Matrix Market stiffness matrix (problem = files).
    #[arg(long)]
    stiffness: Option<PathBuf>,
    /// Matrix Market mass matrix (defaults to the identity).
    #[arg(long)]
    mass: Option<PathBuf>,
    /// Comma separated method ids or `all`.
    #[arg(long)]
    methods: Option<String>,
    /// Comma separated exponents.
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    kstar: Option<f64>,
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    /// Relative accuracy of the spectral interval estimate.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Log-spaced greedy training points instead of the sinc nodes.
    #[arg(long)]
    greedy_points: Option<usize>,
}

impl Common {
    fn resolve(&self) -> CliResult<BenchConfig> {
        let file = match &self.config {
            Some(p) => FlatConfig::load(p)?,
            None => FlatConfig::default(),
        };
        let over = FlatConfig {
            problem: self.problem.clone(),
            n: self.n,
            nx: self.nx,
            stiffness: self.stiffness.clone(),
            mass: self.mass.clone(),
            methods: self.methods.clone(),
            s: self.s.as_deref().map(parse_list).transpose()?,
            k_min: self.k_min,
            k_max: self.k_max,
            kstar: self.kstar,
            s_min: self.s_min,
            s_max: self.s_max,
            tol: self.tol,
            out_dir: self.out_dir.clone(),
            threads: self.threads,
            greedy_points: self.greedy_points,
        };
        file.merge(over).resolve()
    }
}

fn single_s(cfg: &BenchConfig) -> CliResult<f64> {
    match cfg.s.as_slice() {
        [s] => Ok(*s),
        other => Err(CliError::Config(format!("exactly one exponent expected, got {other:?}"))),
    }
}

fn interval(lmin: Option<f64>, lmax: Option<f64>) -> CliResult<Option<(f64, f64)>> {
    match (lmin, lmax) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        _ => Err(CliError::Config("--lmin and --lmax must be given together".into())),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let common = match &cli.command {
        Command::Bench(c) => c,
        Command::Solve { common, .. } | Command::Poles { common, .. } | Command::BuraExport { common, .. } => common,
    };
    let cfg = common.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Bench(_) => {
            let out = run_bench(&cfg)?;
            write_bench(&cfg, &out)?;
            print!("{}", rate_summary(&out));
            println!("wrote {}", cfg.out_dir.join(CSV_FILE).display());
            Ok(())
        }
        Command::Solve { method, k, approximant, .. } => {
            let req = SolveRequest {
                problem: cfg.problem.clone(),
                method: method.parse()?,
                s: single_s(&cfg)?,
                k,
                kstar: cfg.kstar,
                s_min: cfg.s_min,
                s_max: cfg.s_max,
                tol: cfg.tol,
                greedy_points: cfg.greedy_points,
                approximant,
            };
            let out = solve(&req)?;
            write_solution(&cfg.out_dir, &out)?;
            println!("method {} s {} k {}", out.result.method, out.result.s, out.result.k);
            if let Some(e) = out.metadata.get("error_M") {
                println!("error_M {e}");
            }
            println!("wall_time_s {:.6}", out.result.wall_time);
            for (name, t) in &out.result.phases {
                println!("  {name} {t:.6}");
            }
            println!("wrote {}", cfg.out_dir.display());
            Ok(())
        }
        Command::Poles { kind, k, lmin, lmax, .. } => {
            let kind: PoleKind = kind.parse()?;
            let req = PolesRequest {
                kind,
                k,
                s: cfg.s[0],
                kstar: cfg.kstar,
                s_min: cfg.s_min,
                s_max: cfg.s_max,
                interval: interval(lmin, lmax)?,
                problem: cfg.problem.clone(),
                tol: cfg.tol,
            };
            print!("{}", poles(&req)?);
            Ok(())
        }
        Command::BuraExport { k, lmin, lmax, output, .. } => {
            let iv = match interval(lmin, lmax)? {
                Some((a, b)) => SpectralInterval::new(a, b)?,
                None => cfg.problem.build()?.spectral_interval(cfg.tol)?,
            };
            let rec = bura_export(single_s(&cfg)?, k, iv, &output)?;
            println!("max_error {:e} deviation {:e}", rec.max_error, rec.equioscillation_deviation);
            println!("wrote {}", output.display());
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
