//! LightGCN-style embedding propagation and hard-negative synthesis.
//!
//! Propagation is one sparse product with the symmetric-normalized
//! adjacency per layer; the final representation averages layer outputs
//! 1..L (layer 0 excluded by default, with a switch for the conventional
//! 0..L variant). Hard negatives come from mixing positive-item embedding
//! information into candidate negatives per layer, then picking the
//! candidate most similar to the user.

use rand::Rng;

use crate::data::NormalizedAdjacency;
use crate::error::TensorError;
use crate::tape::Tape;
use crate::tensor::Tensor;

/// Standard deviation of the Gaussian embedding init.
pub const EMBED_INIT_STD: f64 = 0.1;

/// Fresh embedding table over `num_nodes` rows (users first, then items).
pub fn init_embeddings<R: Rng>(rng: &mut R, num_nodes: usize, dim: usize) -> Tensor {
    Tensor::randn(rng, vec![num_nodes, dim], EMBED_INIT_STD)
}

/// One propagation step: multiply by the normalized adjacency.
pub fn propagate(
    tape: &mut Tape,
    adj: &NormalizedAdjacency,
    embeddings: &Tensor,
) -> Result<Tensor, TensorError> {
    tape.spmm_sym(&adj.csr, embeddings)
}

/// Embeddings at every depth 0..=layers.
pub fn layer_stack(
    tape: &mut Tape,
    adj: &NormalizedAdjacency,
    base: &Tensor,
    layers: usize,
) -> Result<Vec<Tensor>, TensorError> {
    let mut stack = Vec::with_capacity(layers + 1);
    stack.push(base.clone());
    for l in 0..layers {
        let next = propagate(tape, adj, &stack[l])?;
        stack.push(next);
    }
    Ok(stack)
}

/// Mean of layer outputs 1..L (or 0..L when `include_layer_zero`).
pub fn aggregate_layers(
    tape: &mut Tape,
    stack: &[Tensor],
    include_layer_zero: bool,
) -> Result<Tensor, TensorError> {
    let layers = stack.len().saturating_sub(1);
    if layers == 0 {
        return Err(TensorError::InvalidDim {
            op: "aggregate_layers",
            detail: "need at least one propagation layer".into(),
        });
    }
    let range: Vec<&Tensor> = if include_layer_zero {
        stack.iter().collect()
    } else {
        stack[1..].iter().collect()
    };
    let mut acc = range[0].clone();
    for t in &range[1..] {
        acc = tape.add(&acc, t)?;
    }
    Ok(tape.scale(&acc, 1.0 / range.len() as f64))
}

/// Indices into a layer stack that [`aggregate_layers`] averages over.
pub fn aggregation_range(layers: usize, include_layer_zero: bool) -> std::ops::Range<usize> {
    if include_layer_zero {
        0..layers + 1
    } else {
        1..layers + 1
    }
}

/// Draws one mixing coefficient per (row, layer), open interval (0, 1).
pub fn draw_mix_coefficients<R: Rng>(rng: &mut R, rows: usize, layers: usize) -> Vec<Vec<f64>> {
    (0..layers)
        .map(|_| {
            (0..rows)
                .map(|_| loop {
                    let a: f64 = rng.gen();
                    if a > 0.0 && a < 1.0 {
                        break a;
                    }
                })
                .collect()
        })
        .collect()
}

/// Per layer l: alpha[l]·positive + (1−alpha[l])·negative, coefficients
/// independent across rows and layers.
pub fn positive_mix<R: Rng>(
    tape: &mut Tape,
    pos_stack: &[Tensor],
    neg_stack: &[Tensor],
    rng: &mut R,
) -> Result<Vec<Tensor>, TensorError> {
    let rows = pos_stack
        .first()
        .map(|t| t.shape()[0])
        .unwrap_or_default();
    let alphas = draw_mix_coefficients(rng, rows, pos_stack.len());
    positive_mix_with(tape, pos_stack, neg_stack, &alphas)
}

/// Mixing with caller-supplied coefficients (one vector per layer).
pub fn positive_mix_with(
    tape: &mut Tape,
    pos_stack: &[Tensor],
    neg_stack: &[Tensor],
    alphas: &[Vec<f64>],
) -> Result<Vec<Tensor>, TensorError> {
    assert_eq!(pos_stack.len(), neg_stack.len(), "stack length mismatch");
    assert_eq!(pos_stack.len(), alphas.len(), "coefficient layer mismatch");
    let mut mixed = Vec::with_capacity(pos_stack.len());
    for ((pos, neg), alpha) in pos_stack.iter().zip(neg_stack).zip(alphas) {
        let a = Tensor::vector(alpha.clone());
        let complement = Tensor::vector(alpha.iter().map(|v| 1.0 - v).collect());
        let lhs = tape.scale_rows(pos, &a)?;
        let rhs = tape.scale_rows(neg, &complement)?;
        mixed.push(tape.add(&lhs, &rhs)?);
    }
    Ok(mixed)
}

/// Picks, per row, the candidate whose embedding has the largest inner
/// product with the user's; ties break toward the lowest candidate index.
/// Returns the selected rows assembled on-tape (so gradients flow through
/// the winning candidate only) plus the chosen indices.
pub fn select_hard_negative(
    tape: &mut Tape,
    user: &Tensor,
    candidates: &[Tensor],
) -> Result<(Tensor, Vec<usize>), TensorError> {
    assert!(!candidates.is_empty(), "need at least one candidate");
    let (rows, _) = user.dims2()?;
    let mut best_score = vec![f64::NEG_INFINITY; rows];
    let mut best_idx = vec![0usize; rows];
    for (m, cand) in candidates.iter().enumerate() {
        if cand.shape() != user.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "select_hard_negative",
                lhs: user.shape().to_vec(),
                rhs: cand.shape().to_vec(),
            });
        }
        for r in 0..rows {
            let score: f64 = user
                .row(r)
                .iter()
                .zip(cand.row(r))
                .map(|(a, b)| a * b)
                .sum();
            if score > best_score[r] {
                best_score[r] = score;
                best_idx[r] = m;
            }
        }
    }
    // assemble the winners on-tape via 0/1 row masks
    let mut selected: Option<Tensor> = None;
    for (m, cand) in candidates.iter().enumerate() {
        let mask = Tensor::vector(
            best_idx
                .iter()
                .map(|&b| if b == m { 1.0 } else { 0.0 })
                .collect(),
        );
        let masked = tape.scale_rows(cand, &mask)?;
        selected = Some(match selected {
            Some(acc) => tape.add(&acc, &masked)?,
            None => masked,
        });
    }
    Ok((selected.expect("non-empty candidates"), best_idx))
}
