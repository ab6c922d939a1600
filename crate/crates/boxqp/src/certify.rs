//! Closed-form iteration-bound calculators.
//!
//! `iteration_bound` is the solver's certified worst-case iteration count:
//! data independent, a function of the problem dimension and the stopping
//! tolerance only. `reference_iteration_bound` is the exact (practical =
//! theoretical) count of the earlier full-Newton path-following method,
//! kept for comparison output.

use thiserror::Error;

/// Per-iteration contraction constant of the certified bound, used exactly
/// as printed in the certificate. The duality measure satisfies
/// `μ' ≤ (1 - COEFF/√(2n))² μ` at every iteration.
pub const CONTRACTION_COEFF: f64 = 0.2348;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    /// The bound is undefined when `eps ≥ 2n`: the target gap is already
    /// met by any valid starting point.
    #[error("invalid tolerance eps = {eps:e} for n = {n}: must satisfy 0 < eps < 2n")]
    InvalidTolerance { n: usize, eps: f64 },
}

/// Dimension/tolerance pair a bound is requested for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateQuery {
    pub n: usize,
    pub eps: f64,
}

impl CertificateQuery {
    pub fn new(n: usize, eps: f64) -> Self {
        CertificateQuery { n, eps }
    }

    fn check(&self) -> Result<(), CertifyError> {
        assert!(self.n >= 1, "dimension must be at least 1");
        if !(self.eps > 0.0) || self.eps >= 2.0 * self.n as f64 {
            return Err(CertifyError::InvalidTolerance {
                n: self.n,
                eps: self.eps,
            });
        }
        Ok(())
    }
}

/// Worst-case iteration count of the predictor-corrector solver:
/// `⌈ log(2n/eps) / (-2·log(1 - 0.2348/√(2n))) ⌉`.
///
/// Evaluated in 64-bit floats. The ceiling is hazardous when the
/// pre-ceiling value sits within ~1e-9 of an integer; the test suite
/// cross-checks a grid of values against extended-precision evaluation.
pub fn iteration_bound(q: &CertificateQuery) -> Result<usize, CertifyError> {
    q.check()?;
    let two_n = 2.0 * q.n as f64;
    let per_iteration = -2.0 * (1.0 - CONTRACTION_COEFF / two_n.sqrt()).ln();
    Ok(((two_n / q.eps).ln() / per_iteration).ceil() as usize)
}

/// Exact iteration count of the reference full-Newton method:
/// `⌈ log(2n/eps) / (-2·log(√(2n)/(√(2n)+√2-1))) ⌉ + 1`.
pub fn reference_iteration_bound(q: &CertificateQuery) -> Result<usize, CertifyError> {
    q.check()?;
    let root_two_n = (2.0 * q.n as f64).sqrt();
    let per_iteration = -2.0 * (root_two_n / (root_two_n + std::f64::consts::SQRT_2 - 1.0)).ln();
    Ok(((2.0 * q.n as f64 / q.eps).ln() / per_iteration).ceil() as usize + 1)
}

/// One row of a bound table: dimension, certified bound, reference bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub n: usize,
    pub n_max: usize,
    pub n_ref: usize,
}

/// Evaluates both bounds across a list of dimensions at a fixed tolerance.
pub fn bound_table(n_values: &[usize], eps: f64) -> Result<Vec<BoundRow>, CertifyError> {
    n_values
        .iter()
        .map(|&n| {
            let q = CertificateQuery::new(n, eps);
            Ok(BoundRow {
                n,
                n_max: iteration_bound(&q)?,
                n_ref: reference_iteration_bound(&q)?,
            })
        })
        .collect()
}
