use tensorad::Tensor;

use crate::error::EvalError;

/// Per-attribute coefficient of determination between prediction and label
/// columns: 1 − SS_res/SS_tot with SS_tot about the label mean. Columns
/// whose labels have zero variance are `None`.
pub fn r2_scores(
    predictions: &Tensor,
    labels: &Tensor,
) -> Result<Vec<Option<f64>>, EvalError> {
    if predictions.shape() != labels.shape() || predictions.shape().len() != 2 {
        return Err(EvalError::ShapeMismatch {
            predictions: predictions.shape().to_vec(),
            labels: labels.shape().to_vec(),
        });
    }
    let rows = predictions.shape()[0];
    let cols = predictions.shape()[1];
    if rows < 2 {
        return Err(EvalError::TooFewRows { rows });
    }

    let mut scores = Vec::with_capacity(cols);
    for c in 0..cols {
        let label_col = |r: usize| labels.data()[r * cols + c];
        let pred_col = |r: usize| predictions.data()[r * cols + c];
        let mean = (0..rows).map(label_col).sum::<f64>() / rows as f64;
        let ss_tot: f64 = (0..rows).map(|r| (label_col(r) - mean).powi(2)).sum();
        if ss_tot == 0.0 {
            scores.push(None);
            continue;
        }
        let ss_res: f64 = (0..rows).map(|r| (label_col(r) - pred_col(r)).powi(2)).sum();
        scores.push(Some(1.0 - ss_res / ss_tot));
    }
    Ok(scores)
}

/// Mean of the defined scores; `None` when every score is undefined.
pub fn mean_defined(scores: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = scores.iter().flatten().copied().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}
