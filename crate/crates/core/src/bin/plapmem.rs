use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plapmem::config::parse_config;
use plapmem::experiments::{self, CaseOutcome, ExampleOptions, ExampleReport};
use plapmem::verify::run_checks;
use plapmem::Error;

/// Finite-element solver for p-Laplacian evolution equations with memory.
#[derive(Debug, Parser)]
#[command(name = "plapmem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the built-in studies.
    Example {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        id: u8,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run sweep points on a thread pool (size from PLAPMEM_THREADS).
        #[arg(long)]
        parallel: bool,
    },
    /// Check the manufactured forcing and the quadrature identities.
    Verify,
}

fn solve(config: PathBuf, out: Option<PathBuf>) -> Result<(), Error> {
    let cfg = parse_config(&config)?;
    let dir = out
        .or_else(|| cfg.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("output"));
    let run = experiments::solve_to_dir(&cfg, &dir)?;
    let iterations: usize = run.diagnostics.iter().map(|d| d.iterations).sum();
    println!(
        "scheme {:?}, {} steps, {} fixed-point iterations, b(T) = {:e}",
        run.scheme,
        run.steps(),
        iterations,
        run.energy[run.steps()]
    );
    if cfg.problem_def().exact_u.is_some() {
        let (eu, ey) = experiments::final_errors(&cfg, &run)?;
        println!("L2 error at T: u {eu:e}, y {ey:e}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

/// Prints one line per case; a failed case is reported through its error and exit code.
fn print_report(report: &ExampleReport) -> Option<&Error> {
    println!("p,lambda,status,b0,b_final,u_min,t_star");
    for o in &report.outcomes {
        let c = match o {
            CaseOutcome::Done(c) => c,
            CaseOutcome::Failed { config, error } => {
                println!("{:?},{:?},failed: {error}", config.p, config.lambda());
                continue;
            }
        };
        let e = &c.run.energy;
        let t_star = c.waiting_time().map(|w| format!("{:?}", w.t_star)).unwrap_or_default();
        println!(
            "{:?},{:?},ok,{:e},{:e},{:e},{}",
            c.p(),
            c.lambda(),
            e[0],
            e[e.len() - 1],
            c.min_u(),
            t_star
        );
    }
    report.first_error()
}

fn example(id: u8, opts: ExampleOptions) -> Result<ExitCode, Error> {
    let report = match id {
        1 => {
            let report = experiments::example1(&opts)?;
            println!("sweep,p,r,order_u,order_y");
            let h = report.h_fits()?.into_iter().map(|f| ("h", f));
            for (label, fit) in h.chain(report.delta_fits()?.into_iter().map(|f| ("delta", f))) {
                println!("{label},{:?},{},{:.3},{:.3}", fit.p, fit.r, fit.order_u, fit.order_y);
            }
            None
        }
        2 => Some(experiments::example2(&opts)?),
        3 => Some(experiments::example3(&opts)?),
        _ => Some(experiments::example4(&opts)?),
    };
    if let Some(dir) = &opts.out {
        println!("wrote {}", dir.display());
    }
    // the exit code follows the first failing case
    Ok(match report.as_ref().and_then(print_report) {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    })
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn verify() -> ExitCode {
    let checks = run_checks();
    for c in &checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out } => solve(config, out).map(|()| ExitCode::SUCCESS),
        Command::Example {
            id,
            p,
            lambda,
            out,
            parallel,
        } => example(
            id,
            ExampleOptions {
                p,
                lambda,
                parallel,
                out,
            },
        ),
        Command::Verify => return verify(),
    };
    result.unwrap_or_else(|e| fail(&e))
}
