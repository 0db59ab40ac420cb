use crate::error::EvalError;

/// Precision/recall/F1 for one class, with its label count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Macro-averaged gender classification metrics. Per-class entries are
/// `None` (with a warning) for classes absent from the labels; macro
/// averages cover only the classes that appear.
#[derive(Debug, Clone, PartialEq)]
pub struct GenderReport {
    pub positive: Option<ClassMetrics>,
    pub negative: Option<ClassMetrics>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub warning: Option<String>,
}

fn class_metrics(tp: usize, fp: usize, fn_: usize, support: usize) -> ClassMetrics {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if support == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics { precision, recall, f1, support }
}

/// Thresholds scores at 0.5 (inclusive for the positive class) and reports
/// per-class and macro-averaged precision, recall, and F1.
pub fn gender_metrics(scores: &[f64], labels: &[bool]) -> Result<GenderReport, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    if scores.is_empty() {
        return Err(EvalError::EmptyInput { what: "score list" });
    }
    for (index, &value) in scores.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(EvalError::BadScore { index, value });
        }
    }

    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fn_ = 0;
    for (&score, &label) in scores.iter().zip(labels) {
        match (score >= 0.5, label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let pos_support = tp + fn_;
    let neg_support = tn + fp;
    let positive = (pos_support > 0).then(|| class_metrics(tp, fp, fn_, pos_support));
    let negative = (neg_support > 0).then(|| class_metrics(tn, fn_, fp, neg_support));

    let present: Vec<&ClassMetrics> = [positive.as_ref(), negative.as_ref()]
        .into_iter()
        .flatten()
        .collect();
    let n = present.len() as f64;
    let warning = match (positive.is_some(), negative.is_some()) {
        (true, false) => Some("labels contain no negative examples; macro averages cover the positive class only".to_string()),
        (false, true) => Some("labels contain no positive examples; macro averages cover the negative class only".to_string()),
        _ => None,
    };
    Ok(GenderReport {
        precision: present.iter().map(|c| c.precision).sum::<f64>() / n,
        recall: present.iter().map(|c| c.recall).sum::<f64>() / n,
        f1: present.iter().map(|c| c.f1).sum::<f64>() / n,
        positive,
        negative,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_predictions_score_one() {
        let report = gender_metrics(&[0.9, 0.1, 0.8, 0.2], &[true, false, true, false]).unwrap();
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.f1, 1.0);
        assert!(report.warning.is_none());
    }

    #[test]
    fn all_positive_predictions_on_balanced_labels() {
        let report = gender_metrics(&[0.9, 0.8, 0.7, 0.6], &[true, true, false, false]).unwrap();
        assert_abs_diff_eq!(report.f1, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.precision, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(report.recall, 0.5, epsilon = 1e-12);
        let pos = report.positive.unwrap();
        assert_abs_diff_eq!(pos.f1, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(report.negative.unwrap().f1, 0.0);
    }

    #[test]
    fn inverted_predictions_score_zero() {
        let report = gender_metrics(&[0.1, 0.9], &[true, false]).unwrap();
        assert_eq!(report.f1, 0.0);
    }

    #[test]
    fn single_class_labels_warn() {
        let report = gender_metrics(&[0.9, 0.6], &[true, true]).unwrap();
        assert!(report.warning.is_some());
        assert!(report.negative.is_none());
        assert_eq!(report.f1, 1.0);
    }

    #[test]
    fn inputs_are_validated() {
        assert!(matches!(
            gender_metrics(&[0.5], &[true, false]),
            Err(EvalError::LengthMismatch { scores: 1, labels: 2 })
        ));
        assert!(matches!(
            gender_metrics(&[0.5, 1.2], &[true, false]),
            Err(EvalError::BadScore { index: 1, .. })
        ));
        assert!(matches!(
            gender_metrics(&[], &[]),
            Err(EvalError::EmptyInput { .. })
        ));
    }
}
