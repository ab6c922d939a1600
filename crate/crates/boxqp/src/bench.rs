//! Benchmark harness: practical iteration counts on random instances
//! across dimensions, compared against both closed-form bounds, with CSV
//! emission.
//!
//! Every row is reproducible: the per-instance seed is a fixed hash of
//! (base seed, dimension, instance index), so extending a suite never
//! reshuffles existing instances, and rows are identical across runs and
//! across worker counts (only the elapsed column varies).

use crate::certify::{iteration_bound, reference_iteration_bound, CertificateQuery};
use crate::ipm::{check_certificates, solve, SolveStatus};
use crate::problem::{random_boxqp, sig17, splitmix64, GeneratorConfig};
use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("cannot summarize an empty row set")]
    EmptyGroup,
}

/// Full description of a benchmark suite; fixes every instance and every
/// numeric result.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    pub instances_per_dim: usize,
    pub eps: f64,
    pub base_seed: u64,
    /// Generator template applied at every dimension.
    pub regularization: f64,
    pub h_scale: f64,
}

impl BenchConfig {
    pub fn new(dims: Vec<usize>, instances_per_dim: usize, eps: f64, base_seed: u64) -> Self {
        BenchConfig {
            dims,
            instances_per_dim,
            eps,
            base_seed,
            regularization: 1e-3,
            h_scale: 1.0,
        }
    }
}

/// One (dimension, instance) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub seed: u64,
    pub iterations: usize,
    pub n_max: usize,
    pub n_ref: usize,
    pub final_gap: f64,
    pub converged: bool,
    pub certificate_ok: bool,
    /// Wall-clock solve time; informational only, never asserted.
    pub elapsed_seconds: f64,
}

/// Derives the per-instance seed by chaining SplitMix64 over the base
/// seed, the dimension, and the instance index.
pub fn instance_seed(base_seed: u64, dim: usize, index: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(dim as u64)) ^ index as u64)
}

fn run_instance(cfg: &BenchConfig, dim: usize, index: usize) -> BenchRow {
    let seed = instance_seed(cfg.base_seed, dim, index);
    let gen = GeneratorConfig {
        n: dim,
        seed,
        regularization: cfg.regularization,
        h_scale: cfg.h_scale,
    };
    let problem = random_boxqp(&gen);
    let start = Instant::now();
    let result = solve(&problem, cfg.eps);
    let elapsed_seconds = start.elapsed().as_secs_f64();

    let q = CertificateQuery::new(dim, cfg.eps);
    let n_ref = reference_iteration_bound(&q).unwrap_or(0);
    let n_max = iteration_bound(&q).unwrap_or(0);
    let certificate_ok = check_certificates(&result.trace, dim).all_ok();

    BenchRow {
        n: dim,
        seed,
        iterations: result.iterations,
        n_max,
        n_ref,
        final_gap: result.final_gap,
        converged: result.status == SolveStatus::Converged,
        certificate_ok,
        elapsed_seconds,
    }
}

/// Runs the whole suite, one row per (dimension, instance), ordered by
/// dimension then instance index. A failed solve is captured in its row
/// (`converged = false`); the suite never aborts.
pub fn run_suite(cfg: &BenchConfig) -> Vec<BenchRow> {
    run_suite_with_jobs(cfg, 1)
}

/// Like [`run_suite`] but solving up to `jobs` instances concurrently.
/// Instances are independent and seeded individually, so the output is
/// identical to the serial run (except elapsed times).
pub fn run_suite_with_jobs(cfg: &BenchConfig, jobs: usize) -> Vec<BenchRow> {
    let work: Vec<(usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&dim| (0..cfg.instances_per_dim).map(move |i| (dim, i)))
        .collect();

    if jobs <= 1 || work.len() <= 1 {
        return work
            .iter()
            .map(|&(dim, index)| run_instance(cfg, dim, index))
            .collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<BenchRow>>> = work.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(work.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= work.len() {
                    break;
                }
                let (dim, index) = work[i];
                *slots[i].lock().unwrap() = Some(run_instance(cfg, dim, index));
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

/// Per-dimension aggregate of a row set.
#[derive(Debug, Clone, PartialEq)]
pub struct DimSummary {
    pub n: usize,
    pub count: usize,
    pub mean_iterations: f64,
    /// Sample standard deviation (divisor N-1); 0 for a single row, with
    /// `single_sample` set.
    pub std_iterations: f64,
    pub single_sample: bool,
    pub min_iterations: usize,
    pub max_iterations: usize,
    /// Largest iterations/n_max ratio observed at this dimension.
    pub max_bound_ratio: f64,
}

/// Groups rows by dimension (in first-seen order) and aggregates each
/// group.
pub fn summarize(rows: &[BenchRow]) -> Result<Vec<DimSummary>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::EmptyGroup);
    }
    let mut order: Vec<usize> = Vec::new();
    for row in rows {
        if !order.contains(&row.n) {
            order.push(row.n);
        }
    }
    let summaries = order
        .into_iter()
        .map(|n| {
            let group: Vec<&BenchRow> = rows.iter().filter(|r| r.n == n).collect();
            let count = group.len();
            let mean = group.iter().map(|r| r.iterations as f64).sum::<f64>() / count as f64;
            let std = if count > 1 {
                let ss: f64 = group
                    .iter()
                    .map(|r| {
                        let d = r.iterations as f64 - mean;
                        d * d
                    })
                    .sum();
                (ss / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            DimSummary {
                n,
                count,
                mean_iterations: mean,
                std_iterations: std,
                single_sample: count == 1,
                min_iterations: group.iter().map(|r| r.iterations).min().unwrap(),
                max_iterations: group.iter().map(|r| r.iterations).max().unwrap(),
                max_bound_ratio: group
                    .iter()
                    .map(|r| r.iterations as f64 / r.n_max as f64)
                    .fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(summaries)
}

pub const CSV_HEADER: &str =
    "n,seed,iterations,n_max,n_ref,final_gap,converged,certificate_ok,elapsed_seconds";

/// Writes rows as CSV: frozen column order, floats at 17 significant
/// digits.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.seed,
            r.iterations,
            r.n_max,
            r.n_ref,
            sig17(r.final_gap),
            r.converged,
            r.certificate_ok,
            sig17(r.elapsed_seconds)
        )?;
    }
    Ok(())
}
