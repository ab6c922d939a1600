//! Python extension module exposing the Box-QP solver, the iteration-bound
//! calculators, the instance generator, and the active-set oracle.

use boxqp::certify::{self, CertificateQuery};
use boxqp::ipm::{self, check_certificates, SolveStatus};
use boxqp::linalg::SymMatrix;
use boxqp::oracle;
use boxqp::problem::{self, GeneratorConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

/// Box-constrained QP `min ½ zᵀHz + hᵀz` over `[-1, 1]ⁿ`.
#[pyclass(module = "boxqp_py", frozen)]
struct BoxQp {
    inner: problem::BoxQp,
}

#[pymethods]
impl BoxQp {
    /// Builds an instance from the rows of H (lower triangle wins if the
    /// input is asymmetric) and the linear term h.
    #[new]
    fn new(hessian: Vec<Vec<f64>>, linear: Vec<f64>) -> PyResult<Self> {
        let n = hessian.len();
        if linear.len() != n {
            return Err(PyValueError::new_err(format!(
                "linear term has length {}, expected {n}",
                linear.len()
            )));
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in &hessian {
            if row.len() != n {
                return Err(PyValueError::new_err(format!(
                    "matrix row has length {}, expected {n}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(BoxQp {
            inner: problem::BoxQp::new(SymMatrix::from_rows(n, entries), linear),
        })
    }

    /// Parses the BQP text format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        problem::parse_bqp(text)
            .map(|inner| BoxQp { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Serializes to the BQP text format (17 significant digits).
    fn to_text(&self) -> String {
        problem::serialize_bqp(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim()
    }

    fn hessian(&self) -> Vec<Vec<f64>> {
        let n = self.inner.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.inner.hessian().get(i, j)).collect())
            .collect()
    }

    fn linear(&self) -> Vec<f64> {
        self.inner.linear().to_vec()
    }

    fn objective(&self, z: Vec<f64>) -> PyResult<f64> {
        if z.len() != self.inner.dim() {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.inner.objective(&z))
    }

    /// Runs the predictor-corrector solver to complementarity gap `eps`.
    #[pyo3(signature = (eps = 1e-6))]
    fn solve(&self, eps: f64) -> PyResult<SolveResult> {
        if !(eps > 0.0) {
            return Err(PyValueError::new_err("eps must be positive"));
        }
        let result = ipm::solve(&self.inner, eps);
        let certificates_ok = check_certificates(&result.trace, self.inner.dim()).all_ok();
        Ok(SolveResult {
            z: result.z_opt.clone(),
            status: match &result.status {
                SolveStatus::Converged => "converged".to_string(),
                SolveStatus::IterationLimit => "iteration_limit".to_string(),
                SolveStatus::NumericalFailure(e) => format!("numerical_failure: {e}"),
            },
            converged: result.status == SolveStatus::Converged,
            iterations: result.iterations,
            n_max: result.n_max,
            final_gap: result.final_gap,
            mu_trace: result.trace.iter().map(|r| r.mu).collect(),
            alpha_trace: result.trace.iter().map(|r| r.alpha).collect(),
            certificates_ok,
        })
    }
}

/// Solver outcome: solution, status, iteration accounting, per-iteration
/// duality measures and step sizes, and the certificate re-check.
#[pyclass(module = "boxqp_py", frozen, get_all)]
struct SolveResult {
    z: Vec<f64>,
    status: String,
    converged: bool,
    iterations: usize,
    n_max: usize,
    final_gap: f64,
    mu_trace: Vec<f64>,
    alpha_trace: Vec<f64>,
    certificates_ok: bool,
}

/// Certified worst-case iteration count for dimension `n` at tolerance
/// `eps`.
#[pyfunction]
fn iteration_bound(n: usize, eps: f64) -> PyResult<usize> {
    certify::iteration_bound(&CertificateQuery::new(n, eps))
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Exact iteration count of the reference full-Newton method.
#[pyfunction]
fn reference_iteration_bound(n: usize, eps: f64) -> PyResult<usize> {
    certify::reference_iteration_bound(&CertificateQuery::new(n, eps))
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Seeded random instance: `H = W·Wᵀ/n + regularization·I`, normal `h`.
#[pyfunction]
#[pyo3(signature = (n, seed, regularization = 1e-3, h_scale = 1.0))]
fn random_boxqp(n: usize, seed: u64, regularization: f64, h_scale: f64) -> PyResult<BoxQp> {
    if n == 0 {
        return Err(PyValueError::new_err("n must be at least 1"));
    }
    Ok(BoxQp {
        inner: problem::random_boxqp(&GeneratorConfig {
            n,
            seed,
            regularization,
            h_scale,
        }),
    })
}

/// Exhaustive active-set reference solution (n ≤ 10, strictly convex).
#[pyfunction]
fn active_set_solve(problem: &BoxQp) -> PyResult<Vec<f64>> {
    oracle::active_set_solve(&problem.inner)
        .map(|sol| sol.z)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn boxqp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<BoxQp>()?;
    m.add_class::<SolveResult>()?;
    m.add_function(wrap_pyfunction!(iteration_bound, m)?)?;
    m.add_function(wrap_pyfunction!(reference_iteration_bound, m)?)?;
    m.add_function(wrap_pyfunction!(random_boxqp, m)?)?;
    m.add_function(wrap_pyfunction!(active_set_solve, m)?)?;
    Ok(())
}
