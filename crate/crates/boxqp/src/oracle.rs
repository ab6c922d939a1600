//! Independent reference solvers for small instances.
//!
//! These exist to validate the interior-point solver and are deliberately
//! slow and exhaustive: the active-set oracle enumerates all 3ⁿ
//! bound/free assignments, the projected-gradient oracle iterates a fixed
//! conservative step. Neither shares any code path with the solver they
//! check.

use crate::linalg::{norm_inf, spd_solve, DenseVector, LinalgError, SymMatrix};
use crate::problem::BoxQp;
use thiserror::Error;

/// Largest dimension the enumeration oracle accepts (3¹⁰ = 59049 states).
pub const MAX_ENUMERATION_DIM: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension {n} exceeds the enumeration limit {MAX_ENUMERATION_DIM}")]
    TooLarge { n: usize },
    #[error("quadratic term is not strictly positive definite")]
    NotStrictlyConvex(#[source] LinalgError),
    #[error("projected gradient did not reach tolerance {tol:e} in {max_iter} iterations")]
    NoConvergence { tol: f64, max_iter: usize },
    #[error("no bound/free assignment satisfied the optimality conditions")]
    NoKktPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    ActiveSetEnumeration,
    ProjectedGradient,
}

/// Reference solution. `gamma`/`theta` are the bound multipliers in the
/// solver's convention: `gamma` is complementary to `1 - z` and `theta`
/// to `1 + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub z: DenseVector,
    pub objective: f64,
    pub method: OracleMethod,
    pub gamma: DenseVector,
    pub theta: DenseVector,
    /// More than one assignment satisfied the optimality conditions within
    /// tolerance; the lexicographically first was returned.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Assignment {
    Free,
    Lower,
    Upper,
}

const KKT_TOL: f64 = 1e-9;

/// Exhaustive ground truth for strictly convex instances with n ≤ 10.
///
/// Every coordinate is assigned to {free, at -1, at +1}; for each of the
/// 3ⁿ assignments the free block's stationarity system is solved and the
/// bound/sign conditions are checked. Exactly one assignment passes for a
/// nondegenerate strictly convex instance.
pub fn active_set_solve(p: &BoxQp) -> Result<OracleSolution, OracleError> {
    let n = p.dim();
    if n > MAX_ENUMERATION_DIM {
        return Err(OracleError::TooLarge { n });
    }
    // strict convexity check up front: all leading minors positive
    crate::linalg::cholesky(p.hessian()).map_err(OracleError::NotStrictlyConvex)?;

    let mut found: Option<OracleSolution> = None;
    let mut degenerate = false;
    let mut assignment = vec![Assignment::Free; n];

    let total = 3usize.pow(n as u32);
    'states: for code in 0..total {
        let mut c = code;
        for slot in assignment.iter_mut() {
            *slot = match c % 3 {
                0 => Assignment::Free,
                1 => Assignment::Lower,
                _ => Assignment::Upper,
            };
            c /= 3;
        }

        let free: Vec<usize> = (0..n)
            .filter(|&i| assignment[i] == Assignment::Free)
            .collect();

        let mut z: DenseVector = assignment
            .iter()
            .map(|a| match a {
                Assignment::Free => 0.0,
                Assignment::Lower => -1.0,
                Assignment::Upper => 1.0,
            })
            .collect();

        if !free.is_empty() {
            // H_FF z_F = -(h_F + H_FB z_B)
            let m = free.len();
            let mut block = SymMatrix::zeros(m);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate().take(a + 1) {
                    block.set(a, b, p.hessian().get(i, j));
                }
            }
            let rhs: DenseVector = free
                .iter()
                .map(|&i| {
                    let bound_part: f64 = (0..n)
                        .filter(|&j| assignment[j] != Assignment::Free)
                        .map(|j| p.hessian().get(i, j) * z[j])
                        .sum();
                    -(p.linear()[i] + bound_part)
                })
                .collect();
            let z_free = spd_solve(&block, &rhs).map_err(OracleError::NotStrictlyConvex)?;
            for (a, &i) in free.iter().enumerate() {
                if z_free[a].abs() > 1.0 + KKT_TOL {
                    continue 'states;
                }
                z[i] = z_free[a];
            }
        }

        // gradient g = Hz + h; stationarity g + γ - θ = 0 with
        // γ∘(1-z) = 0 and θ∘(1+z) = 0
        let g: DenseVector = p
            .hessian()
            .mul_vec(&z)
            .iter()
            .zip(p.linear())
            .map(|(a, b)| a + b)
            .collect();
        let mut gamma = vec![0.0; n];
        let mut theta = vec![0.0; n];
        for i in 0..n {
            match assignment[i] {
                Assignment::Free => {}
                Assignment::Upper => {
                    if g[i] > KKT_TOL {
                        continue 'states;
                    }
                    gamma[i] = (-g[i]).max(0.0);
                }
                Assignment::Lower => {
                    if g[i] < -KKT_TOL {
                        continue 'states;
                    }
                    theta[i] = g[i].max(0.0);
                }
            }
        }

        let candidate = OracleSolution {
            objective: p.objective(&z),
            z,
            method: OracleMethod::ActiveSetEnumeration,
            gamma,
            theta,
            degenerate: false,
        };
        match &found {
            None => found = Some(candidate),
            Some(first) => {
                if norm_inf(
                    &candidate
                        .z
                        .iter()
                        .zip(&first.z)
                        .map(|(a, b)| a - b)
                        .collect::<Vec<_>>(),
                ) > KKT_TOL
                {
                    degenerate = true;
                }
            }
        }
    }

    match found {
        Some(mut sol) => {
            sol.degenerate = degenerate;
            Ok(sol)
        }
        None => Err(OracleError::NoKktPoint),
    }
}

/// Projected-gradient fallback for positive-semidefinite instances.
///
/// Iterates `z ← clamp(z - t(Hz + h))` with the fixed conservative step
/// `t = 1/(trace(H) + 1)` from `z = 0`, stopping once the iterate moves by
/// at most `tol` in the max norm.
pub fn projected_gradient_solve(
    p: &BoxQp,
    tol: f64,
    max_iter: usize,
) -> Result<OracleSolution, OracleError> {
    assert!(tol > 0.0);
    let n = p.dim();
    let trace: f64 = (0..n).map(|i| p.hessian().get(i, i)).sum();
    let step = 1.0 / (trace + 1.0);

    let mut z = vec![0.0; n];
    for _ in 0..max_iter {
        let g = p.hessian().mul_vec(&z);
        let next: DenseVector = (0..n)
            .map(|i| (z[i] - step * (g[i] + p.linear()[i])).clamp(-1.0, 1.0))
            .collect();
        let moved = (0..n).map(|i| (next[i] - z[i]).abs()).fold(0.0, f64::max);
        z = next;
        if moved <= tol {
            // residual multipliers from the gradient at the final iterate
            let g: DenseVector = p
                .hessian()
                .mul_vec(&z)
                .iter()
                .zip(p.linear())
                .map(|(a, b)| a + b)
                .collect();
            let gamma: DenseVector = g.iter().map(|v| (-v).max(0.0)).collect();
            let theta: DenseVector = g.iter().map(|v| v.max(0.0)).collect();
            return Ok(OracleSolution {
                objective: p.objective(&z),
                z,
                method: OracleMethod::ProjectedGradient,
                gamma,
                theta,
                degenerate: false,
            });
        }
    }
    Err(OracleError::NoConvergence { tol, max_iter })
}

/// Residuals of the optimality system at an oracle solution, for
/// cross-checking: stationarity, complementarity, and bound violation.
pub fn kkt_residual_inf(p: &BoxQp, sol: &OracleSolution) -> f64 {
    let n = p.dim();
    let g = p.hessian().mul_vec(&sol.z);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let stationarity = g[i] + p.linear()[i] + sol.gamma[i] - sol.theta[i];
        let comp_upper = sol.gamma[i] * (1.0 - sol.z[i]);
        let comp_lower = sol.theta[i] * (1.0 + sol.z[i]);
        let bound = (sol.z[i].abs() - 1.0).max(0.0);
        let sign = (-sol.gamma[i]).max(0.0) + (-sol.theta[i]).max(0.0);
        worst = worst
            .max(stationarity.abs())
            .max(comp_upper.abs())
            .max(comp_lower.abs())
            .max(bound)
            .max(sign);
    }
    worst
}
