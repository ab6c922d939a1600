//! Feasible predictor-corrector interior-point solver for Box-QP with a
//! certified worst-case iteration count.
//!
//! The method is a path follower on the KKT system of
//! `min ½ zᵀHz + hᵀz  s.t. -1 ≤ z ≤ 1`:
//!
//! ```text
//! 2λH z + 2λh + γ - θ = 0        (stationarity, objective scaled by 2λ)
//! z + φ - 1 = 0,  z - ψ + 1 = 0  (slack linkage)
//! γ∘φ = 0,  θ∘ψ = 0,  all ≥ 0    (complementarity)
//! ```
//!
//! Initialization is cost free: scaling the objective by `2λ` with
//! `λ = 1/(4√2‖h‖₂)` puts the canonical point `z = 0, φ = ψ = 1,
//! γ = 1 - λh, θ = 1 + λh` inside the narrow neighborhood N(1/4) with
//! duality measure exactly 1. Each iteration takes an adaptive predictor
//! step (σ = 0) into the wider neighborhood N(1/2) and a full corrector
//! step (σ = 1) back into N(1/4), contracting the duality measure by at
//! least `(1 - 0.2348/√(2n))²` per iteration. That contraction gives the
//! data-independent iteration bound computed in [`crate::certify`].
//!
//! Every solve records a per-iteration trace from which the contraction
//! and neighborhood guarantees can be re-verified after the fact; see
//! [`check_certificates`].

use crate::certify::{iteration_bound, CertificateQuery, CONTRACTION_COEFF};
use crate::linalg::{cholesky, dot, norm2, norm_inf, DenseVector, LinalgError, SymMatrix};
use crate::problem::BoxQp;
use thiserror::Error;

/// Radius β of the narrow neighborhood the iterates return to after every
/// corrector step. Fixed: the certified constants are derived for it.
pub const NEIGHBORHOOD_RADIUS: f64 = 0.25;

/// Radius of the wider neighborhood the predictor step may reach.
pub const PREDICTOR_RADIUS: f64 = 0.5;

/// Below this, the step-size denominator is treated as zero and the
/// predictor takes its maximal step 1/2.
pub const NORM_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IpmError {
    #[error(transparent)]
    Factorization(#[from] LinalgError),
    /// A multiplier or slack coordinate left the strictly positive region.
    /// The step-size theory rules this out; firing indicates a broken
    /// problem (e.g. indefinite H) or catastrophic roundoff.
    #[error("positivity lost: component {component} index {index} reached {value:e}")]
    LostPositivity {
        component: &'static str,
        index: usize,
        value: f64,
    },
    #[error("duality measure must be positive, got {mu:e}")]
    DegenerateMeasure { mu: f64 },
}

/// Strictly feasible primal-dual iterate.
///
/// `gamma, theta` are the bound multipliers and `phi, psi` the slacks,
/// linked to the primal by `z + φ = 1` and `ψ = z + 1` (so `γ∘φ` and
/// `θ∘ψ` are the complementarity products). The stacked views are
/// `v = col(γ, θ)` and `s = col(φ, ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub z: DenseVector,
    pub gamma: DenseVector,
    pub theta: DenseVector,
    pub phi: DenseVector,
    pub psi: DenseVector,
}

impl Iterate {
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Stacked multiplier vector `col(γ, θ)`.
    pub fn v(&self) -> DenseVector {
        let mut v = self.gamma.clone();
        v.extend_from_slice(&self.theta);
        v
    }

    /// Stacked slack vector `col(φ, ψ)`.
    pub fn s(&self) -> DenseVector {
        let mut s = self.phi.clone();
        s.extend_from_slice(&self.psi);
        s
    }

    /// Complementarity gap `vᵀs = γᵀφ + θᵀψ`.
    pub fn gap(&self) -> f64 {
        dot(&self.gamma, &self.phi) + dot(&self.theta, &self.psi)
    }

    /// Smallest multiplier/slack coordinate; positive iff strictly feasible.
    pub fn min_positive_component(&self) -> f64 {
        [&self.gamma, &self.theta, &self.phi, &self.psi]
            .iter()
            .flat_map(|v| v.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    fn check_strictly_feasible(&self) -> Result<(), IpmError> {
        for (component, values) in [
            ("gamma", &self.gamma),
            ("theta", &self.theta),
            ("phi", &self.phi),
            ("psi", &self.psi),
        ] {
            for (index, &value) in values.iter().enumerate() {
                if !(value > 0.0) {
                    return Err(IpmError::LostPositivity {
                        component,
                        index,
                        value,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A Box-QP together with its initialization scaling `λ`.
///
/// The scaled objective `½ zᵀ(2λH)z + zᵀ(2λh)` has the same minimizer as
/// the base objective; the scaling only normalizes the starting duality
/// measure to 1.
#[derive(Debug, Clone)]
pub struct ScaledProblem {
    pub base: BoxQp,
    pub lambda: f64,
    pub scaled_hessian: SymMatrix,
    pub scaled_linear: DenseVector,
}

/// Builds the scaled problem and its canonical strictly feasible starting
/// point. Requires `‖h‖₂ > 0`; the `h ≈ 0` case short-circuits in
/// [`solve`] before reaching here.
pub fn initialize(p: &BoxQp) -> (ScaledProblem, Iterate) {
    let n = p.dim();
    let h_norm = norm2(p.linear());
    assert!(h_norm > 0.0, "initialize requires a nonzero linear term");
    let lambda = NEIGHBORHOOD_RADIUS / (std::f64::consts::SQRT_2 * h_norm);

    let scaled_hessian = p.hessian().scaled(2.0 * lambda);
    let scaled_linear: DenseVector = p.linear().iter().map(|h| 2.0 * lambda * h).collect();

    let gamma: DenseVector = p.linear().iter().map(|h| 1.0 - lambda * h).collect();
    let theta: DenseVector = p.linear().iter().map(|h| 1.0 + lambda * h).collect();
    let iterate = Iterate {
        z: vec![0.0; n],
        gamma,
        theta,
        phi: vec![1.0; n],
        psi: vec![1.0; n],
    };

    (
        ScaledProblem {
            base: p.clone(),
            lambda,
            scaled_hessian,
            scaled_linear,
        },
        iterate,
    )
}

/// Average complementarity product `(γᵀφ + θᵀψ)/(2n)`.
pub fn duality_measure(it: &Iterate) -> f64 {
    it.gap() / (2.0 * it.dim() as f64)
}

/// Distance of the complementarity vector from the central path, relative
/// to the duality measure: `‖v∘s - μ·1‖₂ / μ`. The iterate lies in the
/// neighborhood of radius β iff this is at most β.
pub fn proximity(it: &Iterate) -> Result<f64, IpmError> {
    let mu = duality_measure(it);
    if !(mu > 0.0) {
        return Err(IpmError::DegenerateMeasure { mu });
    }
    let mut sum = 0.0;
    for (g, p) in it.gamma.iter().zip(&it.phi) {
        let d = g * p - mu;
        sum += d * d;
    }
    for (t, p) in it.theta.iter().zip(&it.psi) {
        let d = t * p - mu;
        sum += d * d;
    }
    Ok(sum.sqrt() / mu)
}

/// Whether a Newton direction aims at the target `μ` (corrector, σ = 1)
/// or at complementarity zero (predictor, σ = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Predictor,
    Corrector,
}

impl StepKind {
    pub fn sigma(self) -> f64 {
        match self {
            StepKind::Predictor => 0.0,
            StepKind::Corrector => 1.0,
        }
    }
}

/// Newton search direction. `ds = col(-dz, dz)` exactly by construction,
/// which keeps the slack linkage equations satisfied bit-for-bit under
/// any step size.
#[derive(Debug, Clone)]
pub struct Direction {
    pub dz: DenseVector,
    /// Stacked multiplier direction `col(Δγ, Δθ)`.
    pub dv: DenseVector,
    /// Stacked slack direction `col(Δφ, Δψ)`.
    pub ds: DenseVector,
    pub kind: StepKind,
    pub mu_used: f64,
}

/// Solves the Newton system at `it` for the given centering target.
///
/// The full system
///
/// ```text
/// (2λH)Δz + Δγ - Δθ = 0
/// Δφ = -Δz,  Δψ = Δz
/// s∘Δv + v∘Δs = σμ·1 - v∘s
/// ```
///
/// reduces to one positive-definite solve in Δz:
///
/// ```text
/// (2λH + diag(γ/φ) + diag(θ/ψ)) Δz = σμ(1/ψ - 1/φ) + γ - θ
/// ```
///
/// after which Δγ = σμ/φ - γ + (γ/φ)Δz and Δθ = σμ/ψ - θ - (θ/ψ)Δz.
pub fn newton_direction(
    sp: &ScaledProblem,
    it: &Iterate,
    kind: StepKind,
    mu: f64,
) -> Result<Direction, IpmError> {
    it.check_strictly_feasible()?;
    if !(mu > 0.0) {
        return Err(IpmError::DegenerateMeasure { mu });
    }
    let n = it.dim();
    let sigma = kind.sigma();

    let gamma_over_phi: DenseVector = it.gamma.iter().zip(&it.phi).map(|(g, p)| g / p).collect();
    let theta_over_psi: DenseVector = it.theta.iter().zip(&it.psi).map(|(t, p)| t / p).collect();

    let mut system = sp.scaled_hessian.add_diag(&gamma_over_phi);
    system = system.add_diag(&theta_over_psi);

    let rhs: DenseVector = (0..n)
        .map(|i| sigma * mu * (1.0 / it.psi[i] - 1.0 / it.phi[i]) + it.gamma[i] - it.theta[i])
        .collect();

    let dz = cholesky(&system)?.solve(&rhs);

    let mut dv = Vec::with_capacity(2 * n);
    for i in 0..n {
        dv.push(sigma * mu / it.phi[i] - it.gamma[i] + gamma_over_phi[i] * dz[i]);
    }
    for i in 0..n {
        dv.push(sigma * mu / it.psi[i] - it.theta[i] - theta_over_psi[i] * dz[i]);
    }

    let mut ds = Vec::with_capacity(2 * n);
    ds.extend(dz.iter().map(|d| -d));
    ds.extend_from_slice(&dz);

    Ok(Direction {
        dz,
        dv,
        ds,
        kind,
        mu_used: mu,
    })
}

/// Change in the duality measure a full step along `d` would produce:
/// `ΔvᵀΔs / (2n)`.
pub fn measure_gain(d: &Direction) -> f64 {
    dot(&d.dv, &d.ds) / d.ds.len() as f64
}

/// Adaptive predictor step size
/// `α = min(1/2, √(μ / (8‖Δv∘Δs - Δμ_p·1‖₂)))`.
///
/// Keeps the post-predictor iterate inside the wide neighborhood. A
/// vanishing denominator means the predictor direction is exactly
/// centered, and the maximal step 1/2 applies.
pub fn predictor_step_size(mu_k: f64, d: &Direction) -> f64 {
    debug_assert_eq!(d.kind, StepKind::Predictor);
    debug_assert!(mu_k > 0.0);
    let gain = measure_gain(d);
    let mut sum = 0.0;
    for (a, b) in d.dv.iter().zip(&d.ds) {
        let e = a * b - gain;
        sum += e * e;
    }
    let deviation = sum.sqrt();
    if deviation < NORM_FLOOR {
        return 0.5;
    }
    (mu_k / (8.0 * deviation)).sqrt().min(0.5)
}

/// Moves `it` by `alpha` along `d`, preserving the slack linkage exactly.
/// Fails with `LostPositivity` if any multiplier or slack coordinate
/// leaves the strictly positive region.
pub fn apply_step(it: &Iterate, d: &Direction, alpha: f64) -> Result<Iterate, IpmError> {
    debug_assert!(alpha > 0.0 && alpha <= 1.0);
    let n = it.dim();
    let next = Iterate {
        z: (0..n).map(|i| it.z[i] + alpha * d.dz[i]).collect(),
        gamma: (0..n).map(|i| it.gamma[i] + alpha * d.dv[i]).collect(),
        theta: (0..n).map(|i| it.theta[i] + alpha * d.dv[n + i]).collect(),
        phi: (0..n).map(|i| it.phi[i] + alpha * d.ds[i]).collect(),
        psi: (0..n).map(|i| it.psi[i] + alpha * d.ds[n + i]).collect(),
    };
    next.check_strictly_feasible()?;
    Ok(next)
}

/// Signed margins of the per-iteration certificate inequalities
/// (bound minus observed value; nonnegative up to roundoff when the
/// guarantee holds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateSlacks {
    /// `μ/4 - Δμ_p`: the predictor's measure gain is at most a quarter of μ.
    pub predictor_gain: f64,
    /// `(1 - α/2)²μ - μ̂`: bound on the post-predictor measure.
    pub predictor_measure: f64,
    /// `(1 - α/2)²μ/(16n) - Δμ_c`: bound on the corrector's measure gain.
    pub corrector_gain: f64,
    /// `(1 - 0.2348/√(2n))²μ - μ'`: the per-iteration contraction.
    pub contraction: f64,
}

/// One row of the solve trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Duality measure before the step.
    pub mu: f64,
    /// Predictor step size.
    pub alpha: f64,
    /// Measure after the predictor step.
    pub mu_hat: f64,
    /// Measure after the corrector step.
    pub mu_next: f64,
    pub proximity_before: f64,
    pub proximity_hat: f64,
    pub proximity_next: f64,
    /// `Δμ_p = Δv_pᵀΔs_p/(2n)`.
    pub predictor_mu_gain: f64,
    /// `Δμ_c = Δv_cᵀΔs_c/(2n)`.
    pub corrector_mu_gain: f64,
    pub slacks: CertificateSlacks,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Converged,
    /// The loop completed its certified budget without reaching the target
    /// gap. The contraction guarantee rules this out for valid instances,
    /// so this status is itself a certificate violation.
    IterationLimit,
    NumericalFailure(IpmError),
}

/// Solver output: solution, status, iteration accounting, and the full
/// per-iteration trace.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub z_opt: DenseVector,
    pub status: SolveStatus,
    pub iterations: usize,
    pub n_max: usize,
    /// Complementarity gap `vᵀs` at exit (scaled problem).
    pub final_gap: f64,
    pub trace: Vec<IterationRecord>,
    /// The iterate at exit; lets callers audit KKT residuals. For the
    /// h ≈ 0 short-circuit this is the exact solution (zero multipliers).
    pub final_iterate: Iterate,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

fn h_zero_floor(p: &BoxQp) -> f64 {
    1e-14 * p.hessian().max_abs().max(1.0)
}

/// Runs the predictor-corrector loop until the complementarity gap of the
/// scaled problem drops to `eps`, for at most the certified number of
/// iterations.
///
/// A zero (or numerically zero) linear term short-circuits: the optimum is
/// `z = 0` and no iterations run. The stopping test is `vᵀs ≤ eps` on the
/// scaled problem, matching the semantics of the certified bound.
pub fn solve(p: &BoxQp, eps: f64) -> SolveResult {
    assert!(eps > 0.0, "tolerance must be positive");
    let n = p.dim();
    let n_max = iteration_bound(&CertificateQuery::new(n, eps)).unwrap_or(0);

    if norm2(p.linear()) <= h_zero_floor(p) {
        return SolveResult {
            z_opt: vec![0.0; n],
            status: SolveStatus::Converged,
            iterations: 0,
            n_max,
            final_gap: 0.0,
            trace: Vec::new(),
            final_iterate: Iterate {
                z: vec![0.0; n],
                gamma: vec![0.0; n],
                theta: vec![0.0; n],
                phi: vec![1.0; n],
                psi: vec![1.0; n],
            },
        };
    }

    let (sp, mut it) = initialize(p);
    let two_n = 2.0 * n as f64;
    let contraction = {
        let f = 1.0 - CONTRACTION_COEFF / two_n.sqrt();
        f * f
    };

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut status = None;

    for k in 0..n_max {
        if it.gap() <= eps {
            status = Some(SolveStatus::Converged);
            break;
        }

        let step = (|| -> Result<(Iterate, IterationRecord), IpmError> {
            let mu = duality_measure(&it);
            let proximity_before = proximity(&it)?;

            let predictor = newton_direction(&sp, &it, StepKind::Predictor, mu)?;
            let predictor_mu_gain = measure_gain(&predictor);
            let alpha = predictor_step_size(mu, &predictor);
            let hat = apply_step(&it, &predictor, alpha)?;
            let mu_hat = duality_measure(&hat);
            let proximity_hat = proximity(&hat)?;

            let corrector = newton_direction(&sp, &hat, StepKind::Corrector, mu_hat)?;
            let corrector_mu_gain = measure_gain(&corrector);
            let next = apply_step(&hat, &corrector, 1.0)?;
            let mu_next = duality_measure(&next);
            let proximity_next = proximity(&next)?;

            let half_step = 1.0 - alpha / 2.0;
            let slacks = CertificateSlacks {
                predictor_gain: mu / 4.0 - predictor_mu_gain,
                predictor_measure: half_step * half_step * mu - mu_hat,
                corrector_gain: half_step * half_step * mu / (16.0 * n as f64)
                    - corrector_mu_gain,
                contraction: contraction * mu - mu_next,
            };
            let record = IterationRecord {
                k,
                mu,
                alpha,
                mu_hat,
                mu_next,
                proximity_before,
                proximity_hat,
                proximity_next,
                predictor_mu_gain,
                corrector_mu_gain,
                slacks,
            };
            Ok((next, record))
        })();

        match step {
            Ok((next, record)) => {
                it = next;
                trace.push(record);
                iterations = k + 1;
            }
            Err(err) => {
                status = Some(SolveStatus::NumericalFailure(err));
                break;
            }
        }
    }

    let final_gap = it.gap();
    let status = status.unwrap_or(if final_gap <= eps {
        SolveStatus::Converged
    } else {
        SolveStatus::IterationLimit
    });

    SolveResult {
        z_opt: it.z.clone(),
        status,
        iterations,
        n_max,
        final_gap,
        trace,
        final_iterate: it,
    }
}

/// KKT residuals of an iterate against the scaled problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// `‖2λHz + 2λh + γ - θ‖∞`.
    pub stationarity: f64,
    /// `‖z + φ - 1‖∞`.
    pub primal_phi: f64,
    /// `‖z - ψ + 1‖∞`.
    pub primal_psi: f64,
    /// Smallest multiplier/slack coordinate.
    pub min_component: f64,
    /// Complementarity gap `vᵀs`.
    pub gap: f64,
}

pub fn kkt_residuals(p: &BoxQp, sp: &ScaledProblem, it: &Iterate) -> ResidualReport {
    let n = p.dim();
    assert_eq!(n, it.dim());
    let hz = p.hessian().mul_vec(&it.z);
    let two_lambda = 2.0 * sp.lambda;
    let stationarity: DenseVector = (0..n)
        .map(|i| two_lambda * (hz[i] + p.linear()[i]) + it.gamma[i] - it.theta[i])
        .collect();
    let primal_phi: DenseVector = (0..n).map(|i| it.z[i] + it.phi[i] - 1.0).collect();
    let primal_psi: DenseVector = (0..n).map(|i| it.z[i] - it.psi[i] + 1.0).collect();
    ResidualReport {
        stationarity: norm_inf(&stationarity),
        primal_phi: norm_inf(&primal_phi),
        primal_psi: norm_inf(&primal_psi),
        min_component: it.min_positive_component(),
        gap: it.gap(),
    }
}

/// KKT residuals of a finished solve, using the deterministic scaling of
/// the problem. The h ≈ 0 short-circuit carries no scaling; its exact
/// solution is reported with the objective unscaled.
pub fn solution_report(p: &BoxQp, r: &SolveResult) -> ResidualReport {
    let sp = if norm2(p.linear()) <= h_zero_floor(p) {
        ScaledProblem {
            base: p.clone(),
            lambda: 0.5,
            scaled_hessian: p.hessian().clone(),
            scaled_linear: p.linear().to_vec(),
        }
    } else {
        initialize(p).0
    };
    kkt_residuals(p, &sp, &r.final_iterate)
}

/// Pass/fail of each certificate inequality at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationCertificates {
    pub k: usize,
    /// proximity before the step ≤ 1/4.
    pub proximity_start_ok: bool,
    /// proximity after the predictor ≤ 1/2.
    pub proximity_predictor_ok: bool,
    /// proximity after the corrector ≤ 1/4.
    pub proximity_end_ok: bool,
    /// `Δμ_p ≤ μ/4`.
    pub predictor_gain_ok: bool,
    /// `μ̂ ≤ (1 - α/2)²μ`.
    pub predictor_measure_ok: bool,
    /// `Δμ_c ≤ (1 - α/2)²μ/(16n)`.
    pub corrector_gain_ok: bool,
    /// `μ' ≤ (1 - 0.2348/√(2n))²μ`.
    pub contraction_ok: bool,
}

impl IterationCertificates {
    pub fn all_ok(&self) -> bool {
        self.proximity_start_ok
            && self.proximity_predictor_ok
            && self.proximity_end_ok
            && self.predictor_gain_ok
            && self.predictor_measure_ok
            && self.corrector_gain_ok
            && self.contraction_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub checks: Vec<IterationCertificates>,
}

impl CertificateReport {
    /// True when every inequality holds at every iteration (vacuously true
    /// for an empty trace).
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(IterationCertificates::all_ok)
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.all_ok()).count()
    }
}

/// Additive tolerance for the certificate checks, relative to μ.
const CERTIFICATE_TOL: f64 = 1e-9;

/// Re-verifies the per-iteration guarantees from a solve trace: the three
/// neighborhood bounds, the two predictor bounds, the corrector bound, and
/// the contraction inequality, each with additive tolerance `1e-9·μ`
/// (plain `1e-9` for the dimensionless proximity ratios).
pub fn check_certificates(trace: &[IterationRecord], n: usize) -> CertificateReport {
    let two_n = 2.0 * n as f64;
    let contraction = {
        let f = 1.0 - CONTRACTION_COEFF / two_n.sqrt();
        f * f
    };
    let checks = trace
        .iter()
        .map(|r| {
            let tol = CERTIFICATE_TOL * r.mu;
            let half_step = 1.0 - r.alpha / 2.0;
            IterationCertificates {
                k: r.k,
                proximity_start_ok: r.proximity_before <= NEIGHBORHOOD_RADIUS + CERTIFICATE_TOL,
                proximity_predictor_ok: r.proximity_hat <= PREDICTOR_RADIUS + CERTIFICATE_TOL,
                proximity_end_ok: r.proximity_next <= NEIGHBORHOOD_RADIUS + CERTIFICATE_TOL,
                predictor_gain_ok: r.predictor_mu_gain <= r.mu / 4.0 + tol,
                predictor_measure_ok: r.mu_hat <= half_step * half_step * r.mu + tol,
                corrector_gain_ok: r.corrector_mu_gain
                    <= half_step * half_step * r.mu / (16.0 * n as f64) + tol,
                contraction_ok: r.mu_next <= contraction * r.mu + tol,
            }
        })
        .collect();
    CertificateReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hadamard;
    use crate::problem::{random_boxqp, GeneratorConfig};

    fn symmetric_point(n: usize) -> Iterate {
        Iterate {
            z: vec![0.0; n],
            gamma: vec![1.0; n],
            theta: vec![1.0; n],
            phi: vec![1.0; n],
            psi: vec![1.0; n],
        }
    }

    fn scaled(p: &BoxQp) -> ScaledProblem {
        initialize(p).0
    }

    #[test]
    fn initialize_matches_hand_computed_values() {
        let p = BoxQp::new(SymMatrix::identity(2), vec![3.0, 4.0]);
        let (sp, it) = initialize(&p);
        let lambda = 1.0 / (20.0 * std::f64::consts::SQRT_2);
        assert!((sp.lambda - lambda).abs() < 1e-16);
        let expect = |x: f64, y: f64| (x - y).abs() < 1e-12;
        assert!(expect(it.gamma[0], 0.8939339828220179));
        assert!(expect(it.gamma[1], 0.8585786437626906));
        assert!(expect(it.theta[0], 1.1060660171779821));
        assert!(expect(it.theta[1], 1.1414213562373094));
        assert_eq!(it.phi, vec![1.0, 1.0]);
        assert_eq!(it.psi, vec![1.0, 1.0]);
    }

    #[test]
    fn initial_point_has_unit_measure_and_quarter_proximity() {
        for seed in 0..20u64 {
            let p = random_boxqp(&GeneratorConfig::new(9, seed));
            let (_, it) = initialize(&p);
            assert!((duality_measure(&it) - 1.0).abs() <= 1e-12);
            assert!((proximity(&it).unwrap() - 0.25).abs() <= 1e-10);
        }
    }

    #[test]
    fn duality_measure_examples() {
        assert_eq!(duality_measure(&symmetric_point(4)), 1.0);
        let mut it = symmetric_point(3);
        it.gamma = vec![2.0; 3];
        it.theta = vec![2.0; 3];
        assert_eq!(duality_measure(&it), 2.0);
    }

    #[test]
    fn proximity_examples() {
        // on the central path
        assert_eq!(proximity(&symmetric_point(5)).unwrap(), 0.0);
        // v = (1, 2), s = (1, 1): μ = 1.5, ‖v∘s - μ‖/μ = √0.5/1.5
        let it = Iterate {
            z: vec![0.0],
            gamma: vec![1.0],
            theta: vec![2.0],
            phi: vec![1.0],
            psi: vec![1.0],
        };
        assert!((proximity(&it).unwrap() - 0.47140452079103173).abs() < 1e-15);
    }

    #[test]
    fn proximity_rejects_nonpositive_measure() {
        let mut it = symmetric_point(2);
        it.gamma = vec![0.0; 2];
        it.theta = vec![0.0; 2];
        assert!(matches!(
            proximity(&it),
            Err(IpmError::DegenerateMeasure { .. })
        ));
    }

    #[test]
    fn corrector_direction_vanishes_at_symmetric_point() {
        let p = BoxQp::new(SymMatrix::identity(3), vec![1.0, -2.0, 0.5]);
        let d = newton_direction(&scaled(&p), &symmetric_point(3), StepKind::Corrector, 1.0)
            .unwrap();
        assert!(norm_inf(&d.dz) < 1e-15);
        assert!(norm_inf(&d.dv) < 1e-15);
        assert!(norm_inf(&d.ds) < 1e-15);
    }

    #[test]
    fn predictor_direction_at_symmetric_point_retracts_multipliers() {
        let p = BoxQp::new(SymMatrix::identity(3), vec![1.0, -2.0, 0.5]);
        let it = symmetric_point(3);
        let d = newton_direction(&scaled(&p), &it, StepKind::Predictor, 1.0).unwrap();
        assert!(norm_inf(&d.dz) < 1e-15);
        for i in 0..3 {
            assert!((d.dv[i] + it.gamma[i]).abs() < 1e-15);
            assert!((d.dv[3 + i] + it.theta[i]).abs() < 1e-15);
            assert!(d.ds[i].abs() < 1e-15);
        }
        // complementarity row: s∘Δv + v∘Δs = -v∘s
        let v = it.v();
        let s = it.s();
        let lhs: Vec<f64> = (0..6).map(|i| s[i] * d.dv[i] + v[i] * d.ds[i]).collect();
        for i in 0..6 {
            assert!((lhs[i] + v[i] * s[i]).abs() < 1e-15);
        }
    }

    /// Largest relative residual of the full Newton system at a direction.
    fn newton_residual(sp: &ScaledProblem, it: &Iterate, d: &Direction) -> f64 {
        let n = it.dim();
        let sigma = d.kind.sigma();
        let hdz = sp.scaled_hessian.mul_vec(&d.dz);
        let mut worst: f64 = 0.0;
        let scale_a = 1.0 + norm_inf(&hdz) + norm_inf(&d.dv);
        for i in 0..n {
            let r = hdz[i] + d.dv[i] - d.dv[n + i];
            worst = worst.max(r.abs() / scale_a);
        }
        for i in 0..n {
            let r1 = d.dz[i] + d.ds[i];
            let r2 = -d.dz[i] + d.ds[n + i];
            let scale = 1.0 + d.dz[i].abs();
            worst = worst.max(r1.abs() / scale).max(r2.abs() / scale);
        }
        let v = it.v();
        let s = it.s();
        for i in 0..2 * n {
            let r = s[i] * d.dv[i] + v[i] * d.ds[i] - (sigma * d.mu_used - v[i] * s[i]);
            let scale = 1.0 + (v[i] * s[i]).abs() + d.mu_used;
            worst = worst.max(r.abs() / scale);
        }
        worst
    }

    #[test]
    fn newton_system_residual_is_small_on_random_instances() {
        for seed in 0..10u64 {
            let p = random_boxqp(&GeneratorConfig::new(8, seed));
            let (sp, it) = initialize(&p);
            for kind in [StepKind::Predictor, StepKind::Corrector] {
                let mu = duality_measure(&it);
                let d = newton_direction(&sp, &it, kind, mu).unwrap();
                assert!(newton_residual(&sp, &it, &d) <= 1e-9);
                // probe a generic (φ ≠ ψ) interior point as well
                if kind == StepKind::Predictor {
                    let alpha = predictor_step_size(mu, &d);
                    let hat = apply_step(&it, &d, alpha).unwrap();
                    let mu_hat = duality_measure(&hat);
                    let dc = newton_direction(&sp, &hat, StepKind::Corrector, mu_hat).unwrap();
                    assert!(newton_residual(&sp, &hat, &dc) <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn step_size_rule() {
        let n = 2;
        let mu = 1.0;
        // zero direction: rule degenerates to the maximal step
        let zero = Direction {
            dz: vec![0.0; n],
            dv: vec![0.0; 2 * n],
            ds: vec![0.0; 2 * n],
            kind: StepKind::Predictor,
            mu_used: mu,
        };
        assert_eq!(predictor_step_size(mu, &zero), 0.5);

        // deviation norm μ/2 gives √(1/4) = 1/2; norm 8μ gives 1/8
        for (target, expected) in [(0.5, 0.5), (8.0, 0.125)] {
            // dv∘ds = (e, -e, 0, 0) has mean gain 0 and norm √2·e
            let e = target / (2.0f64).sqrt();
            let d = Direction {
                dz: vec![0.0; n],
                dv: vec![e, -e, 0.0, 0.0],
                ds: vec![1.0, 1.0, 0.0, 0.0],
                kind: StepKind::Predictor,
                mu_used: mu,
            };
            assert!((predictor_step_size(mu, &d) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_step_examples() {
        let it = symmetric_point(2);
        let zero = Direction {
            dz: vec![0.0; 2],
            dv: vec![0.0; 4],
            ds: vec![0.0; 4],
            kind: StepKind::Predictor,
            mu_used: 1.0,
        };
        assert_eq!(apply_step(&it, &zero, 0.7).unwrap(), it);

        // σ = 0 direction at the symmetric point, half step: multipliers
        // halve and μ(α) = (1 - α)μ since Δμ_p = 0
        let p = BoxQp::new(SymMatrix::identity(2), vec![1.0, 1.0]);
        let d = newton_direction(&scaled(&p), &it, StepKind::Predictor, 1.0).unwrap();
        let next = apply_step(&it, &d, 0.5).unwrap();
        assert_eq!(next.gamma, vec![0.5, 0.5]);
        assert_eq!(next.theta, vec![0.5, 0.5]);
        assert_eq!(next.phi, vec![1.0, 1.0]);
        assert_eq!(duality_measure(&next), 0.5);
    }

    #[test]
    fn apply_step_detects_lost_positivity() {
        let it = symmetric_point(1);
        let d = Direction {
            dz: vec![0.0],
            dv: vec![-2.0, 0.0],
            ds: vec![0.0, 0.0],
            kind: StepKind::Predictor,
            mu_used: 1.0,
        };
        assert!(matches!(
            apply_step(&it, &d, 1.0),
            Err(IpmError::LostPositivity {
                component: "gamma",
                index: 0,
                ..
            })
        ));
    }

    #[test]
    fn linkage_is_preserved_across_steps() {
        // Δφ = -Δz and Δψ = Δz keep the linkage residual at rounding level
        // per step; a full solve stays far below the 1e-12 budget.
        let p = random_boxqp(&GeneratorConfig::new(6, 11));
        let (sp, it) = initialize(&p);
        let mu = duality_measure(&it);
        let d = newton_direction(&sp, &it, StepKind::Predictor, mu).unwrap();
        let alpha = predictor_step_size(mu, &d);
        let hat = apply_step(&it, &d, alpha).unwrap();
        for i in 0..it.dim() {
            assert!((hat.z[i] + hat.phi[i] - 1.0).abs() <= 1e-15);
            assert!((hat.z[i] - hat.psi[i] + 1.0).abs() <= 1e-15);
        }

        let r = solve(&p, 1e-9);
        let rep = solution_report(&p, &r);
        assert!(rep.primal_phi <= 1e-12);
        assert!(rep.primal_psi <= 1e-12);
    }

    #[test]
    fn solve_zero_linear_term_short_circuits() {
        let p = BoxQp::new(SymMatrix::identity(4), vec![0.0; 4]);
        let r = solve(&p, 1e-6);
        assert_eq!(r.status, SolveStatus::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.z_opt, vec![0.0; 4]);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn solve_identity_hessian_clamps_negated_linear_term() {
        let p = BoxQp::new(SymMatrix::identity(2), vec![-3.0, 0.5]);
        let r = solve(&p, 1e-8);
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.iterations <= r.n_max);
        assert!((r.z_opt[0] - 1.0).abs() <= 1e-5);
        assert!((r.z_opt[1] + 0.5).abs() <= 1e-5);
    }

    #[test]
    fn solve_boundary_optimum() {
        let p = BoxQp::new(SymMatrix::from_diag(&[2.0]), vec![-10.0]);
        let r = solve(&p, 1e-8);
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.z_opt[0] - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn solve_indefinite_hessian_fails_cleanly() {
        let p = BoxQp::new(SymMatrix::from_diag(&[-1.0, -1.0]), vec![1e-3, 0.0]);
        let r = solve(&p, 1e-6);
        assert!(matches!(r.status, SolveStatus::NumericalFailure(_)));
        assert!(r.z_opt.iter().all(|z| z.is_finite()));
    }

    #[test]
    fn kkt_residuals_at_initial_point_and_after_perturbation() {
        let p = random_boxqp(&GeneratorConfig::new(5, 2));
        let (sp, mut it) = initialize(&p);
        let rep = kkt_residuals(&p, &sp, &it);
        assert!(rep.stationarity <= 1e-14);
        assert_eq!(rep.primal_phi, 0.0);
        assert_eq!(rep.primal_psi, 0.0);
        assert!(rep.min_component > 0.0);

        for z in it.z.iter_mut() {
            *z += 0.1;
        }
        let rep = kkt_residuals(&p, &sp, &it);
        assert!((rep.primal_phi - 0.1).abs() < 1e-15);
        assert!((rep.primal_psi - 0.1).abs() < 1e-15);
    }

    #[test]
    fn kkt_residuals_small_at_convergence() {
        let p = random_boxqp(&GeneratorConfig::new(10, 4));
        let r = solve(&p, 1e-8);
        assert_eq!(r.status, SolveStatus::Converged);
        let rep = solution_report(&p, &r);
        assert!(rep.stationarity <= 1e-6);
        assert!(rep.primal_phi <= 1e-12);
        assert!(rep.primal_psi <= 1e-12);
        assert!(rep.min_component > 0.0);
        assert!(rep.gap <= 1e-8);
        assert!(r.final_gap <= 1e-8);
    }

    #[test]
    fn certificates_pass_on_converged_solves() {
        for seed in [0u64, 1, 2] {
            let p = random_boxqp(&GeneratorConfig::new(12, seed));
            let r = solve(&p, 1e-6);
            assert_eq!(r.status, SolveStatus::Converged);
            let report = check_certificates(&r.trace, p.dim());
            assert!(report.all_ok(), "violation on seed {seed}: {report:?}");
        }
    }

    #[test]
    fn certificates_flag_a_fabricated_violation() {
        let n = 4;
        let contraction = {
            let f = 1.0 - CONTRACTION_COEFF / (2.0 * n as f64).sqrt();
            f * f
        };
        let record = IterationRecord {
            k: 0,
            mu: 1.0,
            alpha: 0.5,
            mu_hat: 0.5,
            mu_next: contraction + 1e-3, // exceeds the contraction bound
            proximity_before: 0.25,
            proximity_hat: 0.5,
            proximity_next: 0.25,
            predictor_mu_gain: 0.0,
            corrector_mu_gain: 0.0,
            slacks: CertificateSlacks {
                predictor_gain: 0.0,
                predictor_measure: 0.0,
                corrector_gain: 0.0,
                contraction: 0.0,
            },
        };
        let report = check_certificates(&[record], n);
        assert!(!report.all_ok());
        assert_eq!(report.violations(), 1);
        assert!(!report.checks[0].contraction_ok);
        assert!(report.checks[0].proximity_start_ok);
    }

    #[test]
    fn certificates_vacuous_on_empty_trace() {
        assert!(check_certificates(&[], 3).all_ok());
    }

    #[test]
    fn direction_products_match_quadratic_form() {
        // ΔvᵀΔs = Δzᵀ(2λH)Δz for every direction, hence nonnegative
        for seed in 0..8u64 {
            let p = random_boxqp(&GeneratorConfig::new(7, seed));
            let (sp, it) = initialize(&p);
            let mu = duality_measure(&it);
            for kind in [StepKind::Predictor, StepKind::Corrector] {
                let d = newton_direction(&sp, &it, kind, mu).unwrap();
                let dvds = dot(&d.dv, &d.ds);
                let quad = dot(&sp.scaled_hessian.mul_vec(&d.dz), &d.dz);
                assert!((dvds - quad).abs() <= 1e-9 * (1.0 + quad.abs()));
                assert!(dvds >= -1e-10 * (1.0 + norm2(&d.dv) * norm2(&d.ds)));
            }
        }
    }

    #[test]
    fn direction_product_norm_bound() {
        // ‖Δv∘Δs‖ ≤ (√2/4)‖r‖² with r = (σμ·1 - v∘s)/√(v∘s)
        for seed in 0..8u64 {
            let p = random_boxqp(&GeneratorConfig::new(7, seed));
            let (sp, it) = initialize(&p);
            let mu = duality_measure(&it);
            for kind in [StepKind::Predictor, StepKind::Corrector] {
                let d = newton_direction(&sp, &it, kind, mu).unwrap();
                let v = it.v();
                let s = it.s();
                let vs = hadamard(&v, &s).unwrap();
                let r: Vec<f64> = vs
                    .iter()
                    .map(|p| (kind.sigma() * mu - p) / p.sqrt())
                    .collect();
                let lhs = norm2(&hadamard(&d.dv, &d.ds).unwrap());
                let bound = std::f64::consts::SQRT_2 / 4.0 * dot(&r, &r);
                assert!(lhs <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn measure_update_identities_are_exact() {
        // after the predictor: μ(α) = (1 - α)μ + α²Δμ_p
        // after the corrector (full step): μ' = μ̂ + Δμ_c
        let p = random_boxqp(&GeneratorConfig::new(9, 5));
        let (sp, mut it) = initialize(&p);
        for _ in 0..6 {
            let mu = duality_measure(&it);
            let d = newton_direction(&sp, &it, StepKind::Predictor, mu).unwrap();
            let gain = measure_gain(&d);
            let alpha = predictor_step_size(mu, &d);
            let hat = apply_step(&it, &d, alpha).unwrap();
            let mu_hat = duality_measure(&hat);
            let predicted = (1.0 - alpha) * mu + alpha * alpha * gain;
            assert!((mu_hat - predicted).abs() <= 1e-12 * mu);

            let dc = newton_direction(&sp, &hat, StepKind::Corrector, mu_hat).unwrap();
            let gain_c = measure_gain(&dc);
            let next = apply_step(&hat, &dc, 1.0).unwrap();
            let mu_next = duality_measure(&next);
            assert!((mu_next - (mu_hat + gain_c)).abs() <= 1e-12 * mu_hat);
            it = next;
        }
    }

    #[test]
    fn solution_is_invariant_under_objective_scaling() {
        let p = random_boxqp(&GeneratorConfig::new(8, 13));
        let base = solve(&p, 1e-8);
        for c in [1e-3, 0.5, 1e3] {
            let scaled = BoxQp::new(
                p.hessian().scaled(c),
                p.linear().iter().map(|h| c * h).collect(),
            );
            let r = solve(&scaled, 1e-8);
            assert_eq!(r.status, SolveStatus::Converged);
            for i in 0..p.dim() {
                assert!(
                    (r.z_opt[i] - base.z_opt[i]).abs() <= 1e-6,
                    "scale {c} diverged at coordinate {i}"
                );
            }
        }
    }
}
