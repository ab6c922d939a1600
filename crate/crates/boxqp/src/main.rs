//! Command-line front end: solve a problem file, print iteration
//! certificates, run benchmark suites, run the MPC closed-loop demo.

use boxqp::bench::{run_suite_with_jobs, summarize, write_csv, BenchConfig};
use boxqp::certify::{iteration_bound, reference_iteration_bound, CertificateQuery};
use boxqp::ipm::{check_certificates, solution_report, solve, IterationRecord, SolveStatus};
use boxqp::mpc::{closed_loop, parse_scenario, write_trajectory_csv};
use boxqp::problem::{parse_bqp, sig17};
use clap::{Parser, Subcommand};
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "boxqp", version, about = "Time-certified Box-QP solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a Box-QP from a BQP file and print the solution with its
    /// certificate accounting.
    Solve {
        /// Problem file in the BQP text format.
        file: PathBuf,
        /// Stopping tolerance on the complementarity gap.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Write the per-iteration trace as CSV to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print the certified and reference iteration bounds for a
    /// dimension/tolerance pair.
    Certify {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
    /// Run the random-instance benchmark suite and emit CSV.
    Bench {
        /// Problem dimensions, comma separated.
        #[arg(long, value_delimiter = ',',
              default_value = "100,200,300,400,500,600,700,800,900,1000")]
        dims: Vec<usize>,
        /// Instances per dimension.
        #[arg(long = "per-dim", default_value_t = 5)]
        per_dim: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve up to this many instances concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Simulate a receding-horizon loop from a scenario file and emit the
    /// trajectory as CSV.
    Mpc {
        /// Scenario file (plant, weights, horizon, steps).
        scenario: PathBuf,
        /// Override the scenario's step count.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_ITERATION_LIMIT: u8 = 2;
const EXIT_NUMERICAL_FAILURE: u8 = 3;

fn status_exit_code(status: &SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::IterationLimit => EXIT_ITERATION_LIMIT,
        SolveStatus::NumericalFailure(_) => EXIT_NUMERICAL_FAILURE,
    }
}

fn status_name(status: &SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::IterationLimit => "iteration_limit",
        SolveStatus::NumericalFailure(_) => "numerical_failure",
    }
}

fn fail_usage(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn trace_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(
        "k,mu,alpha,mu_hat,mu_next,proximity_before,proximity_hat,proximity_next,\
         predictor_mu_gain,corrector_mu_gain,slack_predictor_gain,slack_predictor_measure,\
         slack_corrector_gain,slack_contraction\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            sig17(r.mu),
            sig17(r.alpha),
            sig17(r.mu_hat),
            sig17(r.mu_next),
            sig17(r.proximity_before),
            sig17(r.proximity_hat),
            sig17(r.proximity_next),
            sig17(r.predictor_mu_gain),
            sig17(r.corrector_mu_gain),
            sig17(r.slacks.predictor_gain),
            sig17(r.slacks.predictor_measure),
            sig17(r.slacks.corrector_gain),
            sig17(r.slacks.contraction)
        ));
    }
    out
}

fn run_solve(file: PathBuf, eps: f64, trace: Option<PathBuf>) -> ExitCode {
    if !(eps > 0.0) {
        return fail_usage("--eps must be positive");
    }
    let text = match fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => return fail_usage(format!("cannot read {}: {e}", file.display())),
    };
    let problem = match parse_bqp(&text) {
        Ok(p) => p,
        Err(e) => return fail_usage(format!("{}: {e}", file.display())),
    };

    let result = solve(&problem, eps);
    let certificates = check_certificates(&result.trace, problem.dim());
    let residuals = solution_report(&problem, &result);

    println!("status: {}", status_name(&result.status));
    println!("iterations: {}", result.iterations);
    println!("n_max: {}", result.n_max);
    println!("final_gap: {}", sig17(result.final_gap));
    println!("certificates_ok: {}", certificates.all_ok());
    println!("kkt_stationarity: {}", sig17(residuals.stationarity));
    println!("kkt_primal_phi: {}", sig17(residuals.primal_phi));
    println!("kkt_primal_psi: {}", sig17(residuals.primal_psi));
    println!("kkt_min_component: {}", sig17(residuals.min_component));
    println!("z:");
    for v in &result.z_opt {
        println!("{}", sig17(*v));
    }
    if let SolveStatus::NumericalFailure(err) = &result.status {
        eprintln!("error: {err}");
    }

    if let Some(path) = trace {
        if let Err(e) = fs::write(&path, trace_csv(&result.trace)) {
            return fail_usage(format!("cannot write {}: {e}", path.display()));
        }
    }
    ExitCode::from(status_exit_code(&result.status))
}

fn run_certify(n: usize, eps: f64) -> ExitCode {
    if n == 0 {
        return fail_usage("--n must be at least 1");
    }
    let q = CertificateQuery::new(n, eps);
    let (n_max, n_ref) = match (iteration_bound(&q), reference_iteration_bound(&q)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail_usage(e),
    };
    println!("n: {n}");
    println!("eps: {}", sig17(eps));
    println!("n_max: {n_max}");
    println!("n_ref: {n_ref}");
    ExitCode::from(EXIT_OK)
}

fn run_bench(
    dims: Vec<usize>,
    per_dim: usize,
    eps: f64,
    seed: u64,
    out: Option<PathBuf>,
    jobs: usize,
) -> ExitCode {
    if dims.iter().any(|&n| n == 0) {
        return fail_usage("--dims entries must be at least 1");
    }
    if let Some(&n) = dims.iter().min() {
        if !(eps > 0.0) || eps >= 2.0 * n as f64 {
            return fail_usage(format!("--eps must lie in (0, 2n) for the smallest n = {n}"));
        }
    }
    let cfg = BenchConfig::new(dims, per_dim, eps, seed);
    let rows = run_suite_with_jobs(&cfg, jobs.max(1));

    let mut csv = Vec::new();
    if let Err(e) = write_csv(&rows, &mut csv) {
        return fail_usage(e);
    }
    match out {
        Some(path) => {
            if let Err(e) = fs::write(&path, &csv) {
                return fail_usage(format!("cannot write {}: {e}", path.display()));
            }
        }
        None => {
            if std::io::stdout().write_all(&csv).is_err() {
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }

    if let Ok(summaries) = summarize(&rows) {
        for s in summaries {
            eprintln!(
                "n={}: iterations {:.2} ± {:.2} (min {}, max {}), max ratio to bound {:.4}",
                s.n,
                s.mean_iterations,
                s.std_iterations,
                s.min_iterations,
                s.max_iterations,
                s.max_bound_ratio
            );
        }
    }
    ExitCode::from(EXIT_OK)
}

fn run_mpc(scenario: PathBuf, steps: Option<usize>, eps: f64, out: Option<PathBuf>) -> ExitCode {
    if !(eps > 0.0) {
        return fail_usage("--eps must be positive");
    }
    let text = match fs::read_to_string(&scenario) {
        Ok(t) => t,
        Err(e) => return fail_usage(format!("cannot read {}: {e}", scenario.display())),
    };
    let parsed = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => return fail_usage(format!("{}: {e}", scenario.display())),
    };
    let steps = steps.unwrap_or(parsed.steps);

    let report = match closed_loop(&parsed.plant, &parsed.config, steps, eps) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERICAL_FAILURE);
        }
    };

    let mut csv = Vec::new();
    if let Err(e) = write_trajectory_csv(&report, &mut csv) {
        return fail_usage(e);
    }
    match out {
        Some(path) => {
            if let Err(e) = fs::write(&path, &csv) {
                return fail_usage(format!("cannot write {}: {e}", path.display()));
            }
        }
        None => {
            if std::io::stdout().write_all(&csv).is_err() {
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }
    eprintln!(
        "steps={}: iterations {:.2} ± {:.2} (max {}), bound violations {}, input violations {}",
        report.records.len(),
        report.mean_iterations,
        report.std_iterations,
        report.max_iterations,
        report.bound_violations,
        report.input_violations
    );
    ExitCode::from(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with success; usage errors
            // go to stderr with exit 1
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(EXIT_USAGE);
            }
            let _ = e.print();
            return ExitCode::from(EXIT_OK);
        }
    };
    match cli.command {
        Command::Solve { file, eps, trace } => run_solve(file, eps, trace),
        Command::Certify { n, eps } => run_certify(n, eps),
        Command::Bench {
            dims,
            per_dim,
            eps,
            seed,
            out,
            jobs,
        } => run_bench(dims, per_dim, eps, seed, out, jobs),
        Command::Mpc {
            scenario,
            steps,
            eps,
            out,
        } => run_mpc(scenario, steps, eps, out),
    }
}
