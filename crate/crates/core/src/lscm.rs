//! Linear models `x = Wx + e` with cycles allowed, and an idealized ICA
//! oracle for what observational and interventional data reveal.
//!
//! `W` has a zero diagonal and `I - W` must be invertible. With
//! independent non-Gaussian noise, perfect source separation determines
//! the rows of `I - W` only up to an unknown reordering and per-row
//! scaling; [`ica_oracle`] returns exactly that, keeping the reordering
//! hidden from ordinary callers. A perfect intervention on variable `i`
//! cuts its parents, i.e. zeroes row `i` of `W`, and comparing the two
//! oracle outputs isolates that row ([`recover_row`]).

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::DirectedGraph;

/// `I - W` counts as singular when `|det|` falls at or below this.
pub const SINGULARITY_TOLERANCE: f64 = 1e-8;

/// Entries with magnitude at or below this are treated as structural
/// zeros when reading supports off oracle output.
pub const SUPPORT_EPSILON: f64 = 1e-9;

/// Relative tolerance when testing whether two rows are scalar multiples.
pub const SCALE_MATCH_TOLERANCE: f64 = 1e-7;

/// Default magnitude range for generated edge weights; bounded away from
/// zero so supports are unambiguous.
pub const DEFAULT_WEIGHT_RANGE: (f64, f64) = (0.5, 2.0);

/// How many times the generators redraw before giving up on finding an
/// invertible model.
pub const MAX_GENERATION_ATTEMPTS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum LscmError {
    #[error("weight matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("weight matrix has a nonzero diagonal entry at {0}")]
    NonzeroDiagonal(usize),
    #[error("I - W is numerically singular (|det| = {det:.3e})")]
    Singular { det: f64 },
    #[error("intervening on variable {target} makes I - W singular")]
    SingularIntervention { target: usize },
    #[error("variable {variable} out of range for a model on {n} variables")]
    VariableOutOfRange { variable: usize, n: usize },
    #[error("models have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("edge probability must lie in [0, 1], got {0}")]
    BadEdgeProbability(f64),
    #[error("weight magnitude range must satisfy 0 < lo <= hi, got [{lo}, {hi}]")]
    BadWeightRange { lo: f64, hi: f64 },
    #[error("no invertible model found in {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("{count} observational rows are missing from the interventional data for target {target}; expected exactly one")]
    AmbiguousRecovery { target: usize, count: usize },
    #[error("row recovery failed for target {target}: {detail}")]
    RecoveryFailed { target: usize, detail: String },
    #[error("oracle transform is invalid: {0}")]
    BadTransform(String),
    #[error("disturbance amplitude must be finite and non-negative, got {0}")]
    BadDisturbance(f64),
    #[error("invalid weight-matrix text: {0}")]
    Parse(String),
}

/// A validated weight matrix: square, zero diagonal, `I - W` invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn new(w: DMatrix<f64>) -> Result<Self, LscmError> {
        if w.nrows() != w.ncols() {
            return Err(LscmError::NotSquare { rows: w.nrows(), cols: w.ncols() });
        }
        for i in 0..w.nrows() {
            if w[(i, i)] != 0.0 {
                return Err(LscmError::NonzeroDiagonal(i));
            }
        }
        let det = structural_matrix_of(&w).determinant();
        if det.abs() <= SINGULARITY_TOLERANCE {
            return Err(LscmError::Singular { det: det.abs() });
        }
        Ok(WeightMatrix { w })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LscmError> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(LscmError::NotSquare { rows: n, cols: row.len() });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// The all-zero weight matrix (no edges; `I - W = I`).
    pub fn zeros(n: usize) -> Self {
        WeightMatrix { w: DMatrix::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    /// `I - W`, the matrix whose rows the ICA oracle scrambles.
    pub fn structural_matrix(&self) -> DMatrix<f64> {
        structural_matrix_of(&self.w)
    }

    /// The causal graph: edge `j -> i` wherever `w[i][j]` is nonzero.
    pub fn support(&self) -> DirectedGraph {
        let n = self.n();
        let rows: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| i != j && self.w[(i, j)].abs() > SUPPORT_EPSILON).collect())
            .collect();
        DirectedGraph::from_adjacency(rows).expect("support of a weight matrix has no self-loops")
    }

    /// Serializes as dense rows of decimal numbers, one row per line.
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&format!("{}", self.w[(i, j)]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format produced by [`to_text`](Self::to_text) and
    /// revalidates the result.
    pub fn from_text(text: &str) -> Result<Self, LscmError> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| {
                        LscmError::Parse(format!("line {}: {:?}: {}", lineno + 1, tok, e))
                    })
                })
                .collect();
            rows.push(row?);
        }
        if rows.is_empty() {
            return Err(LscmError::Parse("no rows".into()));
        }
        Self::from_rows(&rows)
    }
}

fn structural_matrix_of(w: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(w.nrows(), w.ncols()) - w
}

/// Draws an Erdos-Renyi weight matrix: each off-diagonal entry is present
/// with probability `edge_prob`, with magnitude uniform in `weight_range`
/// and a random sign. Redraws (up to [`MAX_GENERATION_ATTEMPTS`]) when
/// `I - W` comes out singular.
pub fn generate_er_model(
    n: usize,
    edge_prob: f64,
    weight_range: (f64, f64),
    seed: u64,
) -> Result<WeightMatrix, LscmError> {
    let mut rng = generation_rng(edge_prob, weight_range, seed)?;
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let w = DMatrix::from_fn(n, n, |i, j| {
            if i != j && rng.random_bool(edge_prob) {
                draw_weight(&mut rng, weight_range)
            } else {
                0.0
            }
        });
        if let Ok(model) = WeightMatrix::new(w) {
            return Ok(model);
        }
    }
    Err(LscmError::GenerationFailed { attempts: MAX_GENERATION_ATTEMPTS })
}

/// Like [`generate_er_model`] but acyclic: edges only run forward along a
/// random vertex order, so `I - W` is invertible by construction.
pub fn generate_er_dag(
    n: usize,
    edge_prob: f64,
    weight_range: (f64, f64),
    seed: u64,
) -> Result<WeightMatrix, LscmError> {
    let mut rng = generation_rng(edge_prob, weight_range, seed)?;
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(&mut rng);
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i != j && rank[j] < rank[i] && rng.random_bool(edge_prob) {
            draw_weight(&mut rng, weight_range)
        } else {
            0.0
        }
    });
    WeightMatrix::new(w)
}

fn generation_rng(
    edge_prob: f64,
    weight_range: (f64, f64),
    seed: u64,
) -> Result<ChaCha8Rng, LscmError> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(LscmError::BadEdgeProbability(edge_prob));
    }
    let (lo, hi) = weight_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(LscmError::BadWeightRange { lo, hi });
    }
    Ok(ChaCha8Rng::seed_from_u64(seed))
}

fn draw_weight(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let magnitude = rng.random_range(lo..=hi);
    if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// What an exact source-separation step recovers from data: the rows of
/// `I - W` in a hidden order, each multiplied by a hidden nonzero scale.
#[derive(Debug, Clone)]
pub struct IcaOutput {
    m: DMatrix<f64>,
    row_origin: Vec<usize>,
}

impl IcaOutput {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.m.row(r).iter().copied().collect()
    }

    /// The 0/1 pattern of the output: `support()[r][j]` is true when
    /// entry `(r, j)` has magnitude above [`SUPPORT_EPSILON`].
    pub fn support(&self) -> Vec<Vec<bool>> {
        (0..self.n())
            .map(|r| (0..self.n()).map(|j| self.m[(r, j)].abs() > SUPPORT_EPSILON).collect())
            .collect()
    }

    /// Oracle bookkeeping: `row_origin()[r]` is the row of `I - W` that
    /// output row `r` scales. Tests use this to check recovery against
    /// the ground truth; identification code must not rely on it.
    #[doc(hidden)]
    pub fn row_origin(&self) -> &[usize] {
        &self.row_origin
    }
}

/// Runs the idealized ICA oracle on observational data from `w`: a fresh
/// hidden row order and hidden scales are drawn from `seed`.
pub fn ica_oracle(w: &WeightMatrix, seed: u64) -> IcaOutput {
    ica_oracle_perturbed(w, seed, 0.0).expect("zero disturbance is always valid")
}

/// The oracle with an additive disturbance of the given amplitude:
/// after the hidden reordering and scaling, every entry is shifted by an
/// independent uniform draw from `[-amplitude, amplitude]`. Amplitude
/// zero reproduces [`ica_oracle`] bit for bit on the same seed. The
/// identification pipeline assumes the exact oracle and never turns this
/// on; it exists to probe how downstream support extraction degrades.
pub fn ica_oracle_perturbed(
    w: &WeightMatrix,
    seed: u64,
    amplitude: f64,
) -> Result<IcaOutput, LscmError> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(LscmError::BadDisturbance(amplitude));
    }
    let n = w.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut origin: Vec<usize> = (0..n).collect();
    origin.shuffle(&mut rng);
    let scales: Vec<f64> = (0..n).map(|_| draw_weight(&mut rng, DEFAULT_WEIGHT_RANGE)).collect();
    let mut out =
        ica_oracle_with(w, &origin, &scales).expect("shuffled order and nonzero scales are valid");
    if amplitude > 0.0 {
        for entry in out.m.iter_mut() {
            *entry += rng.random_range(-amplitude..=amplitude);
        }
    }
    Ok(out)
}

/// The ICA oracle with a caller-chosen row order and scales, for tests
/// and worked examples where the transform must be pinned down.
pub fn ica_oracle_with(
    w: &WeightMatrix,
    origin: &[usize],
    scales: &[f64],
) -> Result<IcaOutput, LscmError> {
    let n = w.n();
    if origin.len() != n || scales.len() != n {
        return Err(LscmError::BadTransform(format!(
            "expected {} rows, got {} origins and {} scales",
            n,
            origin.len(),
            scales.len()
        )));
    }
    let mut seen = vec![false; n];
    for &src in origin {
        if src >= n || seen[src] {
            return Err(LscmError::BadTransform(format!("row order {origin:?} is not a permutation")));
        }
        seen[src] = true;
    }
    if let Some(idx) = scales.iter().position(|s| s.abs() <= SUPPORT_EPSILON) {
        return Err(LscmError::BadTransform(format!("scale {idx} is zero")));
    }
    let structural = w.structural_matrix();
    let m = DMatrix::from_fn(n, n, |r, j| scales[r] * structural[(origin[r], j)]);
    Ok(IcaOutput { m, row_origin: origin.to_vec() })
}

/// Applies the perfect intervention `do(x_target)`: zeroes row `target`
/// of `W`, checks the intervened model is still invertible, and runs the
/// oracle on it.
pub fn intervene(w: &WeightMatrix, target: usize, seed: u64) -> Result<IcaOutput, LscmError> {
    let intervened = intervened_weights(w, target)?;
    Ok(ica_oracle(&intervened, seed))
}

/// The weight matrix after `do(x_target)`.
pub fn intervened_weights(w: &WeightMatrix, target: usize) -> Result<WeightMatrix, LscmError> {
    let n = w.n();
    if target >= n {
        return Err(LscmError::VariableOutOfRange { variable: target, n });
    }
    let mut cut = w.matrix().clone();
    for j in 0..n {
        cut[(target, j)] = 0.0;
    }
    WeightMatrix::new(cut).map_err(|e| match e {
        LscmError::Singular { .. } => LscmError::SingularIntervention { target },
        other => other,
    })
}

/// The outcome of one intervention: row `target` of `W`, plus which
/// observational ICA row turned out to encode it.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionResult {
    pub target: usize,
    pub revealed_row: Vec<f64>,
    pub revealed_ica_row: usize,
}

/// Recovers row `target` of `W` by comparing observational and
/// interventional oracle outputs.
///
/// Cutting the parents of `x_target` replaces row `target` of `I - W`
/// and leaves every other row unchanged up to scale, so exactly one
/// observational row goes missing from the interventional output: a
/// scaling of row `target` of `I - W`. Normalizing its `target` entry to
/// one and negating the rest yields the weight row. When that row is all
/// zeros nothing goes missing and the recovered row is zero.
pub fn recover_row(
    obs: &IcaOutput,
    interv: &IcaOutput,
    target: usize,
) -> Result<InterventionResult, LscmError> {
    let n = obs.n();
    if interv.n() != n {
        return Err(LscmError::SizeMismatch(n, interv.n()));
    }
    if target >= n {
        return Err(LscmError::VariableOutOfRange { variable: target, n });
    }

    let obs_rows: Vec<Vec<f64>> = (0..n).map(|r| obs.row(r)).collect();
    let int_rows: Vec<Vec<f64>> = (0..n).map(|r| interv.row(r)).collect();
    let missing: Vec<usize> = (0..n)
        .filter(|&r| !int_rows.iter().any(|int_row| scalar_multiples(&obs_rows[r], int_row)))
        .collect();

    match missing.as_slice() {
        [row] => {
            let source = &obs_rows[*row];
            let pivot = source[target];
            if pivot.abs() <= SUPPORT_EPSILON {
                return Err(LscmError::RecoveryFailed {
                    target,
                    detail: format!("missing row {row} has a zero entry at the target"),
                });
            }
            let mut revealed: Vec<f64> = source.iter().map(|&x| -x / pivot).collect();
            revealed[target] = 0.0;
            Ok(InterventionResult { target, revealed_row: revealed, revealed_ica_row: *row })
        }
        [] => {
            // Row `target` of W is zero: row `target` of `I - W` is the
            // unit vector e_target, which the intervened model shares.
            // The invertible observational output contains exactly one
            // row supported on {target} alone.
            let supports = obs.support();
            let unit_rows: Vec<usize> = (0..n)
                .filter(|&r| {
                    supports[r][target] && (0..n).all(|j| j == target || !supports[r][j])
                })
                .collect();
            match unit_rows.as_slice() {
                [row] => Ok(InterventionResult {
                    target,
                    revealed_row: vec![0.0; n],
                    revealed_ica_row: *row,
                }),
                _ => Err(LscmError::RecoveryFailed {
                    target,
                    detail: format!(
                        "no missing row, and {} observational rows look like e_{target}",
                        unit_rows.len()
                    ),
                }),
            }
        }
        more => Err(LscmError::AmbiguousRecovery { target, count: more.len() }),
    }
}

/// Whether `b` is a nonzero scalar multiple of `a`, judged on matching
/// supports and a constant entry ratio within [`SCALE_MATCH_TOLERANCE`].
fn scalar_multiples(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let support = |x: &f64| x.abs() > SUPPORT_EPSILON;
    if a.iter().map(support).ne(b.iter().map(support)) {
        return false;
    }
    let mut ratio: Option<f64> = None;
    for (&ak, &bk) in a.iter().zip(b) {
        if !support(&ak) {
            continue;
        }
        let rk = bk / ak;
        match ratio {
            None => ratio = Some(rk),
            Some(r0) => {
                if (rk - r0).abs() > SCALE_MATCH_TOLERANCE * r0.abs().max(rk.abs()) {
                    return false;
                }
            }
        }
    }
    true
}
