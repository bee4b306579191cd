use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparse_gsm::bench::config::{parse_toml, render_toml, ExperimentSpec};
use sparse_gsm::bench::io::{read_matrix, read_vector, write_rows, write_vector};
use sparse_gsm::bench::kernel_suite::{run_kernel_accuracy, run_kernel_timing, AccuracySpec};
use sparse_gsm::bench::recovery::run_recovery;
use sparse_gsm::kernel::{brute_force_mu_theta, highprec_mu_theta, mu_theta_full};
use sparse_gsm::linalg::ProblemInstance;
use sparse_gsm::objective::{thresholds, Power};
use sparse_gsm::optimizer::{homotopy_solve, solve_p0, HomotopyConfig, LambdaGrid};
use sparse_gsm::par::Execution;
use sparse_gsm::{GsmError, Result};

#[derive(Parser)]
#[command(name = "gsm", version, about = "Best subset selection with the trimmed lasso and GSM homotopy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the soft-min kernel on a vector.
    Kernel {
        #[command(subcommand)]
        command: KernelCommand,
    },
    /// Find a k-sparse x with small ‖Ax − y‖.
    Solve(SolveArgs),
    /// Run an experiment suite.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Print the penalty thresholds λ̄, λ_a and λ_b of an instance.
    Thresholds(InstanceArgs),
}

#[derive(Subcommand)]
enum KernelCommand {
    /// Print μ, then θ one value per line (or to --out).
    Eval {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        /// Enumerate all k-subsets (small inputs only).
        #[arg(long, conflicts_with = "highprec")]
        brute: bool,
        /// Double-double arithmetic.
        #[arg(long)]
        highprec: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Design matrix, CSV or binary.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    k: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, required_unless_present = "print_config")]
    matrix: Option<PathBuf>,
    #[arg(long, required_unless_present = "print_config")]
    y: Option<PathBuf>,
    #[arg(long, required_unless_present = "print_config")]
    k: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 2)]
    power: u8,
    /// Solve at a single penalty level instead of sweeping a grid.
    #[arg(long, conflicts_with = "lambda_grid")]
    lambda: Option<f64>,
    /// Number of grid points of the λ sweep.
    #[arg(long, default_value_t = 50)]
    lambda_grid: usize,
    /// Homotopy settings (TOML); unspecified keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Solve the grid points concurrently.
    #[arg(long)]
    parallel: bool,
    /// k-sparse solution, one value per line.
    #[arg(long, required_unless_present = "print_config")]
    out: Option<PathBuf>,
    /// Print the effective homotopy settings and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Recovery experiment; writes rows.csv and summary.csv.
    Recovery {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the full trial count and λ grids.
        #[arg(long)]
        full_scale: bool,
        #[arg(long, required_unless_present = "print_config")]
        out: Option<PathBuf>,
        #[arg(long)]
        print_config: bool,
    },
    /// Kernel error against the double-double reference.
    KernelAccuracy {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "print_config")]
        out: Option<PathBuf>,
        #[arg(long)]
        print_config: bool,
    },
    /// Mean kernel wall time per (d, k).
    KernelTiming {
        #[arg(long, value_delimiter = ',', default_values_t = [1000, 10000, 100000])]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [10, 100, 500])]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_config(path: Option<&Path>) -> Result<Option<String>> {
    path.map(std::fs::read_to_string).transpose().map_err(GsmError::from)
}

fn load_instance(args: &InstanceArgs) -> Result<ProblemInstance> {
    ProblemInstance::new(read_matrix(&args.matrix)?, read_vector(&args.y)?, args.k)
}

fn kernel_eval(input: &Path, k: usize, gamma: f64, brute: bool, highprec: bool, out: Option<&Path>) -> Result<()> {
    let z = read_vector(input)?;
    let (mu, theta) = if brute {
        brute_force_mu_theta(&z, k, gamma)?
    } else if highprec {
        highprec_mu_theta(&z, k, gamma)?
    } else {
        let r = mu_theta_full(&z, k, gamma)?;
        (r.mu, r.theta)
    };
    println!("{mu:e}");
    match out {
        Some(path) => write_vector(path, &theta)?,
        None => theta.iter().for_each(|t| println!("{t:e}")),
    }
    Ok(())
}

fn solve(args: &SolveArgs) -> Result<()> {
    let mut cfg = match read_config(args.config.as_deref())? {
        Some(text) => parse_toml::<HomotopyConfig>(&text)?,
        None => HomotopyConfig::default(),
    };
    cfg.power = if args.power == 1 { Power::One } else { Power::Two };
    cfg.validate()?;
    if args.print_config {
        print!("{}", render_toml(&cfg));
        return Ok(());
    }
    let (Some(matrix), Some(y), Some(k), Some(out)) = (&args.matrix, &args.y, args.k, &args.out) else {
        return Err(GsmError::Config("--matrix, --y, --k and --out are required".into()));
    };
    let p = ProblemInstance::new(read_matrix(matrix)?, read_vector(y)?, k)?;
    let sol = match args.lambda {
        Some(l) => homotopy_solve(&p, l, &cfg)?,
        None => {
            let exec = if args.parallel { Execution::Parallel } else { Execution::Sequential };
            let grid = LambdaGrid::Standard { len: args.lambda_grid, early_stop: 7 };
            solve_p0(&p, &cfg, &grid, exec)?.best
        }
    };
    write_vector(out, &sol.x_sparse)?;
    println!("lambda = {:e}", sol.lambda);
    println!("residual_norm = {:e}", sol.residual_norm);
    println!("objective = {:e}", sol.objective);
    Ok(())
}

fn bench(cmd: &BenchCommand) -> Result<()> {
    match cmd {
        BenchCommand::Recovery { config, full_scale, out, print_config } => {
            let mut spec = match config {
                Some(p) => ExperimentSpec::from_toml(&std::fs::read_to_string(p)?)?,
                None => ExperimentSpec::default(),
            };
            if *full_scale {
                spec = spec.full_scale();
            }
            if *print_config {
                print!("{}", spec.to_toml());
                return Ok(());
            }
            let report = run_recovery(&spec)?;
            let dir = out.as_deref().expect("required by clap");
            report.write(dir)?;
            for s in &report.summary {
                println!(
                    "{:<7} k={:<4} obj_success={:.3} rec_success={:.3} supp_prec={:.3}",
                    s.method.name(),
                    s.k,
                    s.obj_success_rate,
                    s.rec_success_rate,
                    s.mean_supp_prec
                );
            }
            Ok(())
        }
        BenchCommand::KernelAccuracy { config, out, print_config } => {
            let spec = match read_config(config.as_deref())? {
                Some(text) => parse_toml::<AccuracySpec>(&text)?,
                None => AccuracySpec::default(),
            };
            if *print_config {
                print!("{}", render_toml(&spec));
                return Ok(());
            }
            let rows = run_kernel_accuracy(&spec, Execution::Parallel)?;
            write_rows(out.as_deref().expect("required by clap"), &rows)
        }
        BenchCommand::KernelTiming { dims, ks, trials, seed, out } => {
            write_rows(out, &run_kernel_timing(dims, ks, *trials, *seed)?)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Kernel { command: KernelCommand::Eval { input, k, gamma, brute, highprec, out } } => {
            kernel_eval(&input, k, gamma, brute, highprec, out.as_deref())
        }
        Command::Solve(args) => solve(&args),
        Command::Bench { command } => bench(&command),
        Command::Thresholds(args) => {
            let t = thresholds(&load_instance(&args)?);
            println!("lambda_bar = {:e}", t.lambda_bar);
            println!("lambda_a = {:e}", t.lambda_a);
            println!("lambda_b = {:e}", t.lambda_b);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                GsmError::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
