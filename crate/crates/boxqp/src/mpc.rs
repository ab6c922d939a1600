//! Condensed linear MPC harness: turns an input-constrained tracking
//! problem into a sequence of Box-QPs, solves each step with the
//! interior-point solver, simulates the plant, and reports per-step
//! iteration counts against the certified bound.
//!
//! States are eliminated through the prediction equations, leaving the
//! horizon's inputs as the only decision variables; with symmetric input
//! bounds the substitution `u = diag(u_max)·z` lands exactly on the
//! solver's `[-1, 1]ⁿ` box.

use crate::certify::{iteration_bound, CertificateQuery};
use crate::ipm::{solve, IpmError, SolveStatus};
use crate::linalg::{DenseVector, Matrix, SymMatrix};
use crate::problem::{numeric_lines, parse_real_row, sig17, BoxQp, ParseError};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpcError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("closed loop requires at least one step")]
    NoSteps,
    #[error("solver failed at step {step}")]
    Solver {
        step: usize,
        #[source]
        source: IpmError,
    },
}

/// Discrete-time LTI plant `x' = Ax + Bu` with symmetric input bounds
/// `|uᵢ| ≤ u_maxᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a: Matrix,
    pub b: Matrix,
    pub x0: DenseVector,
    pub u_max: DenseVector,
}

impl LinearPlant {
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }
}

/// Reference the controller tracks: a constant state, or a step profile
/// that switches once.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Constant(DenseVector),
    Step {
        before: DenseVector,
        after: DenseVector,
        switch_at: usize,
    },
}

impl Reference {
    pub fn at(&self, step: usize) -> &DenseVector {
        match self {
            Reference::Constant(r) => r,
            Reference::Step {
                before,
                after,
                switch_at,
            } => {
                if step < *switch_at {
                    before
                } else {
                    after
                }
            }
        }
    }
}

/// Controller tuning: horizon length, stage weights, and the tracked
/// reference (repeated across the horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig {
    pub horizon: usize,
    pub state_weight: SymMatrix,
    pub input_weight: SymMatrix,
    pub reference: Reference,
}

fn check_dims(plant: &LinearPlant, cfg: &MpcConfig) -> Result<(), MpcError> {
    let nx = plant.state_dim();
    let nu = plant.input_dim();
    if plant.a.cols() != nx {
        return Err(MpcError::Dimension(format!(
            "state matrix must be square, got {}x{}",
            plant.a.rows(),
            plant.a.cols()
        )));
    }
    if plant.b.rows() != nx {
        return Err(MpcError::Dimension(format!(
            "input matrix has {} rows, expected {nx}",
            plant.b.rows()
        )));
    }
    if plant.x0.len() != nx {
        return Err(MpcError::Dimension(format!(
            "initial state has length {}, expected {nx}",
            plant.x0.len()
        )));
    }
    if plant.u_max.len() != nu {
        return Err(MpcError::Dimension(format!(
            "input bound has length {}, expected {nu}",
            plant.u_max.len()
        )));
    }
    if plant.u_max.iter().any(|&u| !(u > 0.0)) {
        return Err(MpcError::Dimension(
            "input bounds must be strictly positive".to_string(),
        ));
    }
    if cfg.state_weight.order() != nx || cfg.input_weight.order() != nu {
        return Err(MpcError::Dimension(format!(
            "weights must have orders {nx} and {nu}, got {} and {}",
            cfg.state_weight.order(),
            cfg.input_weight.order()
        )));
    }
    if cfg.horizon == 0 {
        return Err(MpcError::Dimension("horizon must be at least 1".to_string()));
    }
    for r in [cfg.reference.at(0), cfg.reference.at(usize::MAX)] {
        if r.len() != nx {
            return Err(MpcError::Dimension(format!(
                "reference has length {}, expected {nx}",
                r.len()
            )));
        }
    }
    Ok(())
}

fn condense_with_reference(
    plant: &LinearPlant,
    cfg: &MpcConfig,
    x: &[f64],
    reference: &[f64],
) -> Result<BoxQp, MpcError> {
    check_dims(plant, cfg)?;
    let nx = plant.state_dim();
    let nu = plant.input_dim();
    let horizon = cfg.horizon;
    if x.len() != nx {
        return Err(MpcError::Dimension(format!(
            "state has length {}, expected {nx}",
            x.len()
        )));
    }
    let n = nu * horizon;

    // powers of A up to the horizon
    let mut powers = Vec::with_capacity(horizon + 1);
    powers.push(Matrix::identity(nx));
    for i in 0..horizon {
        powers.push(plant.a.mul_mat(&powers[i]));
    }

    // prediction: x_stack = predict·x + input_map·u_stack
    let mut predict = Matrix::zeros(horizon * nx, nx);
    let mut input_map = Matrix::zeros(horizon * nx, n);
    for i in 0..horizon {
        predict.set_block(i * nx, 0, &powers[i + 1]);
        for j in 0..=i {
            input_map.set_block(i * nx, j * nu, &powers[i - j].mul_mat(&plant.b));
        }
    }

    // stacked stage weights
    let mut q_stack = Matrix::zeros(horizon * nx, horizon * nx);
    for i in 0..horizon {
        for r in 0..nx {
            for c in 0..nx {
                q_stack.set(i * nx + r, i * nx + c, cfg.state_weight.get(r, c));
            }
        }
    }

    // H_u = Gᵀ Q̄ G + R̄,  h_u = Gᵀ Q̄ (predict·x - ref_stack)
    let qg = q_stack.mul_mat(&input_map);
    let mut hessian_u = input_map.transpose().mul_mat(&qg);
    for i in 0..horizon {
        for r in 0..nu {
            for c in 0..nu {
                let v = hessian_u.get(i * nu + r, i * nu + c) + cfg.input_weight.get(r, c);
                hessian_u.set(i * nu + r, i * nu + c, v);
            }
        }
    }

    let mut error = predict.mul_vec(x);
    for i in 0..horizon {
        for r in 0..nx {
            error[i * nx + r] -= reference[r];
        }
    }
    let linear_u = input_map.transpose().mul_vec(&q_stack.mul_vec(&error));

    // substitute u = diag(u_max)·z so the box becomes [-1, 1]ⁿ
    let scale: DenseVector = (0..n).map(|i| plant.u_max[i % nu]).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = scale[i] * hessian_u.get(i, j) * scale[j];
        }
    }
    let linear: DenseVector = (0..n).map(|i| scale[i] * linear_u[i]).collect();

    Ok(BoxQp::new(SymMatrix::from_rows(n, entries), linear))
}

/// Condenses the tracking problem at state `x` into a Box-QP over the
/// horizon's scaled inputs. The resulting quadratic term is positive
/// definite whenever the input weight is.
pub fn condense(plant: &LinearPlant, cfg: &MpcConfig, x: &[f64]) -> Result<BoxQp, MpcError> {
    condense_with_reference(plant, cfg, x, cfg.reference.at(0))
}

/// One closed-loop step: the state the solve saw, the applied input, and
/// the solver accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub state: DenseVector,
    pub input: DenseVector,
    pub iterations: usize,
    pub n_max: usize,
    pub gap: f64,
    pub converged: bool,
}

/// Closed-loop simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopReport {
    pub records: Vec<StepRecord>,
    pub mean_iterations: f64,
    pub std_iterations: f64,
    pub max_iterations: usize,
    /// Applied inputs exceeding their bound; zero by construction.
    pub input_violations: usize,
    /// Steps whose iteration count exceeded the certified bound; zero
    /// when the contraction guarantee holds.
    pub bound_violations: usize,
}

/// Runs the receding-horizon loop: condense at the current state, solve,
/// apply the first input block rescaled by `u_max`, advance the plant.
/// Verifies `iterations ≤ n_max` at every step.
pub fn closed_loop(
    plant: &LinearPlant,
    cfg: &MpcConfig,
    steps: usize,
    eps: f64,
) -> Result<ClosedLoopReport, MpcError> {
    if steps == 0 {
        return Err(MpcError::NoSteps);
    }
    check_dims(plant, cfg)?;
    let nu = plant.input_dim();
    let n = nu * cfg.horizon;
    let n_max = iteration_bound(&CertificateQuery::new(n, eps)).unwrap_or(0);

    let mut x = plant.x0.clone();
    let mut records = Vec::with_capacity(steps);
    let mut input_violations = 0;
    let mut bound_violations = 0;

    for step in 0..steps {
        let qp = condense_with_reference(plant, cfg, &x, cfg.reference.at(step))?;
        let result = solve(&qp, eps);
        if let SolveStatus::NumericalFailure(source) = result.status {
            return Err(MpcError::Solver { step, source });
        }

        let input: DenseVector = (0..nu).map(|i| plant.u_max[i] * result.z_opt[i]).collect();
        if input
            .iter()
            .zip(&plant.u_max)
            .any(|(u, bound)| u.abs() > *bound)
        {
            input_violations += 1;
        }
        if result.iterations > n_max {
            bound_violations += 1;
        }

        records.push(StepRecord {
            step,
            state: x.clone(),
            input: input.clone(),
            iterations: result.iterations,
            n_max,
            gap: result.final_gap,
            converged: result.status == SolveStatus::Converged,
        });

        let mut next = plant.a.mul_vec(&x);
        let bu = plant.b.mul_vec(&input);
        for i in 0..next.len() {
            next[i] += bu[i];
        }
        x = next;
    }

    let count = records.len() as f64;
    let mean = records.iter().map(|r| r.iterations as f64).sum::<f64>() / count;
    let std = if records.len() > 1 {
        let ss: f64 = records
            .iter()
            .map(|r| {
                let d = r.iterations as f64 - mean;
                d * d
            })
            .sum();
        (ss / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let max = records.iter().map(|r| r.iterations).max().unwrap_or(0);

    Ok(ClosedLoopReport {
        records,
        mean_iterations: mean,
        std_iterations: std,
        max_iterations: max,
        input_violations,
        bound_violations,
    })
}

/// A parsed scenario: the plant, the controller config, and the default
/// step count.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: LinearPlant,
    pub config: MpcConfig,
    pub steps: usize,
}

struct ScenarioReader<'a> {
    lines: std::vec::IntoIter<(usize, Vec<(usize, &'a str)>)>,
    last_line: usize,
}

impl<'a> ScenarioReader<'a> {
    fn take(&mut self, expected: usize, what: &str) -> Result<(usize, Vec<f64>), ParseError> {
        let (line, tokens) = self.lines.next().ok_or(ParseError::Malformed {
            line: self.last_line,
            column: 1,
            message: format!("unexpected end of input: expected {what}"),
        })?;
        self.last_line = line;
        Ok((line, parse_real_row(line, &tokens, expected)?))
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Vec<f64>, ParseError> {
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            entries.extend(self.take(cols, what)?.1);
        }
        Ok(entries)
    }

    fn finish(mut self) -> Result<(), ParseError> {
        if let Some((line, tokens)) = self.lines.next() {
            return Err(ParseError::Malformed {
                line,
                column: tokens.first().map_or(1, |(c, _)| *c),
                message: "unexpected trailing content".to_string(),
            });
        }
        Ok(())
    }
}

fn as_positive_int(line: usize, column: usize, value: f64) -> Result<usize, ParseError> {
    if value.fract() != 0.0 || value < 1.0 || value > u32::MAX as f64 {
        return Err(ParseError::Malformed {
            line,
            column,
            message: format!("expected a positive integer, found {value}"),
        });
    }
    Ok(value as usize)
}

/// Parses the scenario text format (same conventions as the BQP format:
/// '#' comment lines, blank lines ignored, whitespace-separated reals):
///
/// ```text
/// n_x n_u
/// horizon steps
/// n_x rows of A        (n_x reals each)
/// n_x rows of B        (n_u reals each)
/// x0                   (n_x reals)
/// u_max                (n_u reals)
/// n_x rows of Q        (state weight)
/// n_u rows of R        (input weight)
/// reference            (n_x reals)
/// ```
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let mut reader = ScenarioReader {
        lines: numeric_lines(text).into_iter(),
        last_line: 0,
    };

    let (line, dims) = reader.take(2, "the dimension line 'n_x n_u'")?;
    let nx = as_positive_int(line, 1, dims[0])?;
    let nu = as_positive_int(line, 1, dims[1])?;

    let (line, counts) = reader.take(2, "the 'horizon steps' line")?;
    let horizon = as_positive_int(line, 1, counts[0])?;
    let steps = as_positive_int(line, 1, counts[1])?;

    let a = Matrix::from_rows(nx, nx, reader.matrix(nx, nx, "a state-matrix row")?);
    let b = Matrix::from_rows(nx, nu, reader.matrix(nx, nu, "an input-matrix row")?);
    let (_, x0) = reader.take(nx, "the initial state")?;
    let (line, u_max) = reader.take(nu, "the input bound")?;
    if u_max.iter().any(|&u| !(u > 0.0)) {
        return Err(ParseError::Malformed {
            line,
            column: 1,
            message: "input bounds must be strictly positive".to_string(),
        });
    }
    let q = SymMatrix::from_rows(nx, reader.matrix(nx, nx, "a state-weight row")?);
    let r = SymMatrix::from_rows(nu, reader.matrix(nu, nu, "an input-weight row")?);
    let (_, reference) = reader.take(nx, "the reference state")?;
    reader.finish()?;

    Ok(Scenario {
        plant: LinearPlant { a, b, x0, u_max },
        config: MpcConfig {
            horizon,
            state_weight: q,
            input_weight: r,
            reference: Reference::Constant(reference),
        },
        steps,
    })
}

/// Writes the per-step trajectory as CSV: step, solver accounting, then
/// the state and input coordinates.
pub fn write_trajectory_csv<W: Write>(report: &ClosedLoopReport, out: &mut W) -> io::Result<()> {
    let (nx, nu) = report
        .records
        .first()
        .map(|r| (r.state.len(), r.input.len()))
        .unwrap_or((0, 0));
    let mut header = String::from("step,iterations,n_max,gap,converged");
    for i in 0..nx {
        header.push_str(&format!(",x{i}"));
    }
    for i in 0..nu {
        header.push_str(&format!(",u{i}"));
    }
    writeln!(out, "{header}")?;
    for r in &report.records {
        let mut line = format!(
            "{},{},{},{},{}",
            r.step,
            r.iterations,
            r.n_max,
            sig17(r.gap),
            r.converged
        );
        for v in r.state.iter().chain(r.input.iter()) {
            line.push(',');
            line.push_str(&sig17(*v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// The plant used by the harness's own tests and the shipped scenario: a
/// discrete double integrator under unit input bounds.
pub fn double_integrator() -> (LinearPlant, MpcConfig) {
    let plant = LinearPlant {
        a: Matrix::from_rows(2, 2, vec![1.0, 1.0, 0.0, 1.0]),
        b: Matrix::from_rows(2, 1, vec![0.5, 1.0]),
        x0: vec![5.0, 0.0],
        u_max: vec![1.0],
    };
    let config = MpcConfig {
        horizon: 10,
        state_weight: SymMatrix::identity(2),
        input_weight: SymMatrix::from_diag(&[0.1]),
        reference: Reference::Constant(vec![0.0, 0.0]),
    };
    (plant, config)
}
