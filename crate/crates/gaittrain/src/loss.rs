use tensorad::{Graph, Tensor, Var};

use crate::error::TrainError;

/// Additive mask that removes self-comparisons from the softmax: large
/// enough to dwarf any logit (|sim|/τ ≤ 1000 at τ = 0.001), small enough
/// that `exp(mask - max)` underflows cleanly to zero.
const MASK_PENALTY: f64 = -1e9;

/// Supervised contrastive loss over a multi-view batch, averaged over
/// anchors.
///
/// Rows are l2-normalized internally. For each anchor `i`, every other
/// row with the same label is a positive; the denominator runs over all
/// rows but `i`, with a per-anchor max shift so the temperature can be as
/// sharp as 0.001 without overflow.
pub fn supcon_loss(
    g: &mut Graph,
    projections: Var,
    labels: &[u64],
    tau: f64,
) -> Result<Var, TrainError> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(TrainError::BadTemperature(tau));
    }
    let shape = g.value(projections).shape().to_vec();
    let rows = shape[0];
    if shape.len() != 2 || rows < 2 {
        return Err(TrainError::BatchTooSmall(if shape.len() != 2 { 0 } else { rows }));
    }
    if labels.len() != rows {
        return Err(TrainError::LabelCountMismatch {
            rows,
            count: labels.len(),
        });
    }

    let mut penalty = vec![0.0; rows * rows];
    let mut weights = vec![0.0; rows * rows];
    for i in 0..rows {
        penalty[i * rows + i] = MASK_PENALTY;
        let positives = labels
            .iter()
            .enumerate()
            .filter(|&(j, &l)| j != i && l == labels[i])
            .count();
        if positives == 0 {
            return Err(TrainError::AnchorWithoutPositive { index: i });
        }
        for (j, &l) in labels.iter().enumerate() {
            if j != i && l == labels[i] {
                weights[i * rows + j] = 1.0 / positives as f64;
            }
        }
    }

    let z = g.l2_normalize_rows(projections);
    let zt = g.permute(z, &[1, 0])?;
    let sims = g.matmul(z, zt)?;
    let logits = g.scale(sims, 1.0 / tau);
    let penalty = g.leaf(Tensor::from_vec(penalty, &[rows, rows])?);
    let masked = g.add(logits, penalty)?;
    let max = g.row_max_detached(masked)?;
    let shifted = g.sub_col(masked, max)?;
    let exp = g.exp(shifted);
    let denom = g.row_sum(exp)?;
    let log_denom = g.log(denom);
    let log_prob = g.sub_col(shifted, log_denom)?;
    let weights = g.leaf(Tensor::from_vec(weights, &[rows, rows])?);
    let weighted = g.mul(log_prob, weights)?;
    let total = g.sum_all(weighted);
    Ok(g.scale(total, -1.0 / rows as f64))
}

/// Binary cross-entropy between logits and soft targets in `[0, 1]`,
/// averaged over every element, computed in logit space.
pub fn bce_soft(g: &mut Graph, logits: Var, targets: &Tensor) -> Result<Var, TrainError> {
    let cols = *targets.shape().last().unwrap_or(&1);
    for (idx, &v) in targets.data().iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(TrainError::TargetOutOfRange {
                row: idx / cols.max(1),
                col: idx % cols.max(1),
                value: v,
            });
        }
    }
    let t = g.leaf(targets.clone());
    Ok(g.bce_with_logits_mean(logits, t)?)
}

/// `supcon + lambda · appearance`.
pub fn combined_loss(
    g: &mut Graph,
    supcon: Var,
    appearance: Var,
    lambda: f64,
) -> Result<Var, TrainError> {
    let scaled = g.scale(appearance, lambda);
    Ok(g.add(supcon, scaled)?)
}
