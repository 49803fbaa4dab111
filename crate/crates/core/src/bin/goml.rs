//! Command-line front end.
//!
//! Exit codes: 0 feasible, 2 infeasible, 3 time limit, 64 usage error,
//! 1 any other failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use goml::driver::{bench, encode_options, sample_all, solve_global, train_all, RunConfig, RunReport};
use goml::encoder::{assemble, Norm};
use goml::expr::problem_file::load_problem_path;
use goml::milp::external::SOLVER_ENV;
use goml::milp::lp_file::export_lp_file;
use goml::milp::Solver;
use goml::model::{standardize, Problem};
use goml::Error;

const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "goml", version, about = "Global optimization with MILP-embedded ML surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a bundled benchmark.
    Bench {
        #[arg(value_enum)]
        name: BenchName,
        /// Variables of the quadratic-sigmoid generator.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Constraints of the quadratic-sigmoid generator.
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Instance seed of the quadratic-sigmoid generator.
        #[arg(long, default_value_t = 0)]
        instance: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train surrogates for a problem file and write the MILP in LP format.
    ExportLp {
        file: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchName {
    Illustrative,
    SpeedReducer,
    Qsigmoid,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Builtin,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    #[value(name = "1")]
    L1,
    #[value(name = "inf")]
    Linf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total wall-clock budget in seconds.
    #[arg(long, default_value_t = 1500.0)]
    time_limit: f64,
    /// Robustness radii of the grid.
    #[arg(long, num_args = 1.., value_name = "RHO")]
    rho: Option<Vec<f64>>,
    /// Relaxation penalties of the grid; `none` is the unrelaxed model.
    #[arg(long, num_args = 1.., value_name = "LAMBDA", value_parser = parse_lambda)]
    lambda: Option<Vec<Lambda>>,
    /// Uncertainty-set norm.
    #[arg(long, value_enum, default_value = "1")]
    norm: NormArg,
    #[arg(long)]
    no_oct_sampling: bool,
    #[arg(long)]
    no_robust: bool,
    #[arg(long)]
    no_relax: bool,
    #[arg(long)]
    no_momentum: bool,
    /// `external` runs the command in GOML_EXTERNAL_SOLVER_CMD.
    #[arg(long, value_enum, default_value = "builtin")]
    solver: SolverArg,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

// clap treats a bare Option<f64> as an optional argument, hence the wrapper
#[derive(Clone, Copy)]
struct Lambda(Option<f64>);

fn parse_lambda(s: &str) -> Result<Lambda, String> {
    match s.to_ascii_lowercase().as_str() {
        "none" | "off" | "inf" => Ok(Lambda(None)),
        v => v
            .parse::<f64>()
            .map(|x| Lambda(Some(x)))
            .map_err(|e| format!("`{s}`: {e}")),
    }
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, String> {
        let solver = match self.solver {
            SolverArg::Builtin => Solver::Builtin,
            SolverArg::External => match std::env::var(SOLVER_ENV) {
                Ok(cmd) if !cmd.trim().is_empty() => Solver::External(cmd),
                _ => return Err(format!("--solver external needs {SOLVER_ENV}")),
            },
        };
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return Err("--time-limit must be positive".into());
        }
        let mut cfg = RunConfig {
            seed: self.seed,
            time_limit: Duration::from_secs_f64(self.time_limit),
            norm: match self.norm {
                NormArg::L1 => Norm::L1,
                NormArg::Linf => Norm::Linf,
            },
            oct_sampling: !self.no_oct_sampling,
            robustness: !self.no_robust,
            relaxation: !self.no_relax,
            momentum: !self.no_momentum,
            solver,
            ..RunConfig::default()
        };
        if let Some(r) = &self.rho {
            cfg.rho_grid = r.clone();
        }
        if let Some(l) = &self.lambda {
            cfg.lambda_grid = l.iter().map(|l| l.0).collect();
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("goml: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Run(Error::InfeasibleApproximation)) => {
            eprintln!("goml: {}", Error::InfeasibleApproximation);
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("goml: {e}");
            ExitCode::from(1)
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn load(file: &Path) -> Result<Problem, Failure> {
    if !file.exists() {
        return Err(Failure::Usage(format!("{}: file not found", file.display())));
    }
    Ok(load_problem_path(file)?.0)
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Solve { file, run } => {
            let cfg = run.config().map_err(Failure::Usage)?;
            let p = load(&file)?;
            report(solve_global(p, &cfg)?, &run)
        }
        Command::Bench { name, n, m, instance, run } => {
            let cfg = run.config().map_err(Failure::Usage)?;
            let p = match name {
                BenchName::Illustrative => bench::illustrative(),
                BenchName::SpeedReducer => bench::speed_reducer(),
                BenchName::Qsigmoid => {
                    if n == 0 || m == 0 {
                        return Err(Failure::Usage("--n and --m must be at least 1".into()));
                    }
                    bench::generate_quadratic_sigmoid(n, m, instance)
                }
            };
            report(solve_global(p, &cfg)?, &run)
        }
        Command::ExportLp { file, out, run } => {
            let cfg = run.config().map_err(Failure::Usage)?;
            let sp = standardize(load(&file)?)?;
            let (datasets, obj) = sample_all(&sp, &cfg)?;
            let approx = train_all(&datasets, obj.as_ref(), &cfg)?;
            let (rho, lambda) = cfg.cells()[0];
            let opts = encode_options(rho, lambda, &cfg);
            let asm = assemble(&sp, &approx.constraints, approx.objective.as_ref(), &opts)?;
            export_lp_file(&asm.milp, &out)?;
            println!(
                "wrote {} ({} variables, {} rows, rho {rho}, lambda {})",
                out.display(),
                asm.milp.vars.len(),
                asm.milp.rows.len(),
                lambda.map_or("none".to_string(), |l| l.to_string())
            );
            Ok(0)
        }
    }
}

fn report(r: RunReport, args: &RunArgs) -> Result<u8, Failure> {
    if let Some(path) = &args.report {
        std::fs::write(path, r.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    if args.json {
        println!("{}", r.to_json());
    } else {
        print_summary(&r);
    }
    Ok(r.status.exit_code() as u8)
}

fn print_summary(r: &RunReport) {
    println!("problem    {}", r.problem);
    println!("status     {:?}", r.status);
    println!("objective  {:.6}", r.objective);
    println!("x          {:.6?}", r.x);
    println!("violation  {:.3e}", r.max_violation);
    if r.best_rho.is_nan() {
        println!("best cell  -");
    } else {
        println!(
            "best cell  rho {} lambda {}",
            r.best_rho,
            r.best_lambda.map_or("none".to_string(), |l| l.to_string())
        );
    }
    for s in &r.surrogates {
        println!(
            "surrogate  {:<16} {:<5} score {:.4} samples {}",
            s.constraint,
            s.family.map_or("-".to_string(), |f| format!("{f:?}").to_lowercase()),
            s.validation_score,
            s.samples
        );
    }
    let t = &r.times;
    println!(
        "time       sampling {:.2}s training {:.2}s encoding {:.2}s solving {:.2}s refining {:.2}s",
        t.sampling, t.training, t.encoding, t.solving, t.refining
    );
}
