//! Box-QP problem instances: representation, validation, the BQP text
//! format, and a seeded random-instance generator for the benchmark suite.
//!
//! A problem is `minimize ½ zᵀHz + hᵀz` subject to `-1 ≤ z ≤ 1` in every
//! coordinate; callers with other box bounds pre-scale (see the MPC module
//! for an example).

use crate::linalg::{DenseVector, SymMatrix};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;
use thiserror::Error;

/// Box-constrained QP instance over the scaled box `[-1, 1]ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQp {
    hessian: SymMatrix,
    linear: DenseVector,
}

impl BoxQp {
    pub fn new(hessian: SymMatrix, linear: DenseVector) -> Self {
        assert_eq!(
            hessian.order(),
            linear.len(),
            "quadratic and linear term dimensions must agree"
        );
        BoxQp { hessian, linear }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn hessian(&self) -> &SymMatrix {
        &self.hessian
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        0.5 * crate::linalg::dot(&self.hessian.mul_vec(z), z) + crate::linalg::dot(&self.linear, z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    EmptyProblem,
    NonFiniteMatrixEntry { row: usize, col: usize },
    NonFiniteLinearEntry { index: usize },
}

/// Findings from `validate`. Symmetry is reported but always holds: it is
/// enforced when the matrix is built. Positive semidefiniteness is not
/// checked here; a violated PSD assumption surfaces at solve time as a
/// factorization error.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub symmetric: bool,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate(p: &BoxQp) -> ValidationReport {
    let mut issues = Vec::new();
    let n = p.dim();
    if n == 0 {
        issues.push(ValidationIssue::EmptyProblem);
    }
    for i in 0..n {
        for j in 0..=i {
            if !p.hessian.get(i, j).is_finite() {
                issues.push(ValidationIssue::NonFiniteMatrixEntry { row: i, col: j });
            }
        }
    }
    for (index, v) in p.linear.iter().enumerate() {
        if !v.is_finite() {
            issues.push(ValidationIssue::NonFiniteLinearEntry { index });
        }
    }
    ValidationReport {
        symmetric: true,
        issues,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: expected {expected} values, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
}

/// Tokenizes the numeric-text conventions shared by the BQP and scenario
/// formats: UTF-8, '\n' newlines, whitespace-separated values, lines whose
/// first non-blank character is '#' are comments, blank lines are ignored.
/// Yields (1-based line number, tokens with 1-based column of each).
pub(crate) fn numeric_lines(text: &str) -> Vec<(usize, Vec<(usize, &str)>)> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = Vec::new();
        let mut col = 0;
        let bytes = raw.as_bytes();
        while col < bytes.len() {
            if bytes[col].is_ascii_whitespace() {
                col += 1;
                continue;
            }
            let start = col;
            while col < bytes.len() && !bytes[col].is_ascii_whitespace() {
                col += 1;
            }
            tokens.push((start + 1, &raw[start..col]));
        }
        out.push((idx + 1, tokens));
    }
    out
}

pub(crate) fn parse_real(line: usize, column: usize, token: &str) -> Result<f64, ParseError> {
    let value: f64 = token.parse().map_err(|_| ParseError::Malformed {
        line,
        column,
        message: format!("expected a real number, found {token:?}"),
    })?;
    if !value.is_finite() {
        return Err(ParseError::Malformed {
            line,
            column,
            message: format!("non-finite value {token:?}"),
        });
    }
    Ok(value)
}

pub(crate) fn parse_count(line: usize, column: usize, token: &str) -> Result<usize, ParseError> {
    let value: usize = token.parse().map_err(|_| ParseError::Malformed {
        line,
        column,
        message: format!("expected a positive integer, found {token:?}"),
    })?;
    if value == 0 {
        return Err(ParseError::Malformed {
            line,
            column,
            message: "dimension must be at least 1".to_string(),
        });
    }
    Ok(value)
}

pub(crate) fn parse_real_row(
    line: usize,
    tokens: &[(usize, &str)],
    expected: usize,
) -> Result<Vec<f64>, ParseError> {
    if tokens.len() != expected {
        return Err(ParseError::Dimension {
            line,
            expected,
            found: tokens.len(),
        });
    }
    tokens
        .iter()
        .map(|(col, tok)| parse_real(line, *col, tok))
        .collect()
}

/// Parses the BQP text format: line 1 is the dimension n, the next n lines
/// are the rows of H, and the final line is h.
pub fn parse_bqp(text: &str) -> Result<BoxQp, ParseError> {
    let lines = numeric_lines(text);
    let mut it = lines.iter();

    let (line, tokens) = it.next().ok_or(ParseError::Malformed {
        line: 1,
        column: 1,
        message: "empty input: expected a dimension line".to_string(),
    })?;
    if tokens.len() != 1 {
        return Err(ParseError::Dimension {
            line: *line,
            expected: 1,
            found: tokens.len(),
        });
    }
    let n = parse_count(*line, tokens[0].0, tokens[0].1)?;

    let mut entries = Vec::with_capacity(n * n);
    let mut last_line = *line;
    for _ in 0..n {
        let (line, tokens) = it.next().ok_or(ParseError::Malformed {
            line: last_line,
            column: 1,
            message: format!("unexpected end of input: expected {n} matrix rows"),
        })?;
        entries.extend(parse_real_row(*line, tokens, n)?);
        last_line = *line;
    }

    let (line, tokens) = it.next().ok_or(ParseError::Malformed {
        line: last_line,
        column: 1,
        message: "unexpected end of input: expected the linear-term line".to_string(),
    })?;
    let linear = parse_real_row(*line, tokens, n)?;

    if let Some((line, tokens)) = it.next() {
        return Err(ParseError::Malformed {
            line: *line,
            column: tokens.first().map_or(1, |(c, _)| *c),
            message: "unexpected trailing content".to_string(),
        });
    }

    Ok(BoxQp::new(SymMatrix::from_rows(n, entries), linear))
}

/// Formats with 17 significant digits, enough for bit-exact f64 round-trips.
pub fn sig17(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serializes to the BQP text format; round-trips bit-exactly through
/// `parse_bqp`.
pub fn serialize_bqp(p: &BoxQp) -> String {
    let n = p.dim();
    let mut out = String::new();
    out.push_str(&n.to_string());
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| sig17(p.hessian.get(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let h: Vec<String> = p.linear.iter().map(|v| sig17(*v)).collect();
    out.push_str(&h.join(" "));
    out.push('\n');
    out
}

/// Configuration for the seeded random-instance generator. Identical
/// configurations always produce identical instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub seed: u64,
    /// Diagonal shift δ added to W·Wᵀ/n; keeps instances positive definite.
    pub regularization: f64,
    pub h_scale: f64,
}

impl GeneratorConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        GeneratorConfig {
            n,
            seed,
            regularization: 1e-3,
            h_scale: 1.0,
        }
    }
}

/// SplitMix64 step, used to derive independent per-purpose seeds.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const MATRIX_STREAM: u64 = 0x4d41_5452_4958_0001;
const LINEAR_STREAM: u64 = 0x4c49_4e45_4152_0002;

/// Generates `H = W·Wᵀ/n + δI` with `W` an n×n standard-normal matrix and
/// `h = h_scale ·` standard-normal vector.
///
/// Draws come from PCG-64 (`rand_pcg::Pcg64`) seeded per purpose via a
/// SplitMix64 mix of the configured seed: one stream for the matrix, one
/// for the linear term, so extending the generator never perturbs existing
/// draws.
pub fn random_boxqp(cfg: &GeneratorConfig) -> BoxQp {
    let n = cfg.n;
    let mut w_rng = Pcg64::seed_from_u64(splitmix64(cfg.seed ^ MATRIX_STREAM));
    let w: Vec<f64> = (0..n * n)
        .map(|_| StandardNormal.sample(&mut w_rng))
        .collect();

    let scale = 1.0 / n as f64;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..n {
                s += w[i * n + k] * w[j * n + k];
            }
            entries[i * n + j] = s * scale + if i == j { cfg.regularization } else { 0.0 };
        }
    }

    let mut h_rng = Pcg64::seed_from_u64(splitmix64(cfg.seed ^ LINEAR_STREAM));
    let linear: Vec<f64> = (0..n)
        .map(|_| {
            let draw: f64 = StandardNormal.sample(&mut h_rng);
            cfg.h_scale * draw
        })
        .collect();

    BoxQp::new(SymMatrix::from_rows(n, entries), linear)
}
