//! InfoNCE objectives over paired augmented views.
//!
//! The loss follows the one-sided form: for each row r the positive is the
//! aligned pair (a_r, b_r) and the denominator runs over b_j for every row
//! j of the batch, positive included. Swapping the two views changes the
//! loss; that asymmetry is intentional and covered by tests. Rows are
//! L2-normalized before similarity by default; `raw_dot` switches to
//! unnormalized products.

use crate::error::TensorError;
use crate::tape::Tape;
use crate::tensor::Tensor;

/// Which entities a view pair describes (reporting only).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityKind {
    User,
    Item,
}

/// Two augmented views of one batch of entities plus the loss temperature.
pub struct ViewPair {
    pub view_a: Tensor,
    pub view_b: Tensor,
    pub kind: EntityKind,
    pub temperature: f64,
    pub raw_dot: bool,
}

impl ViewPair {
    pub fn new(view_a: Tensor, view_b: Tensor, kind: EntityKind, temperature: f64) -> Self {
        ViewPair {
            view_a,
            view_b,
            kind,
            temperature,
            raw_dot: false,
        }
    }

    pub fn with_raw_dot(mut self, raw_dot: bool) -> Self {
        self.raw_dot = raw_dot;
        self
    }
}

/// L2-normalizes each row on-tape, erroring on zero-norm rows.
pub fn normalize_rows(tape: &mut Tape, x: &Tensor) -> Result<Tensor, TensorError> {
    let (rows, _) = x.dims2()?;
    let sq = tape.row_dot(x, x)?;
    for r in 0..rows {
        if sq.data()[r] == 0.0 {
            return Err(TensorError::ZeroNormRow { row: r });
        }
    }
    let norm = tape.sqrt(&sq);
    let inv = tape.recip(&norm);
    tape.scale_rows(x, &inv)
}

/// Sum over rows of −log( exp(<a_r, b_r>/τ) / Σ_j exp(<a_r, b_j>/τ) ).
pub fn info_nce(tape: &mut Tape, pair: &ViewPair) -> Result<Tensor, TensorError> {
    assert!(pair.temperature > 0.0, "temperature must be positive");
    if pair.view_a.shape() != pair.view_b.shape() {
        return Err(TensorError::ShapeMismatch {
            op: "info_nce",
            lhs: pair.view_a.shape().to_vec(),
            rhs: pair.view_b.shape().to_vec(),
        });
    }
    let (a, b) = if pair.raw_dot {
        (pair.view_a.clone(), pair.view_b.clone())
    } else {
        (
            normalize_rows(tape, &pair.view_a)?,
            normalize_rows(tape, &pair.view_b)?,
        )
    };
    let bt = tape.transpose(&b)?;
    let sims = tape.matmul(&a, &bt)?;
    let scaled = tape.scale(&sims, 1.0 / pair.temperature);
    let lse = tape.log_sum_exp_rows(&scaled)?;
    let pos = tape.take_diag(&scaled)?;
    let per_row = tape.sub(&lse, &pos)?;
    Ok(tape.sum_all(&per_row))
}

/// Combined objective over user and item pairs.
pub fn total_cl_loss(
    tape: &mut Tape,
    user_pair: &ViewPair,
    item_pair: &ViewPair,
) -> Result<Tensor, TensorError> {
    let u = info_nce(tape, user_pair)?;
    let i = info_nce(tape, item_pair)?;
    tape.add(&u, &i)
}
