use crate::embedding::{squared_distance, LabeledEmbedding};
use crate::error::EvalError;

/// Index of the gallery entry nearest to `probe` by Euclidean distance.
/// Ties go to the lowest gallery index.
pub fn nearest(gallery: &[LabeledEmbedding], probe: &LabeledEmbedding) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, g) in gallery.iter().enumerate() {
        let d = squared_distance(g.vector(), probe.vector());
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Rank-1 accuracy: the fraction of probes whose nearest gallery embedding
/// shares their identity. Euclidean distance on unit vectors orders the
/// same way cosine similarity does.
pub fn rank1(gallery: &[LabeledEmbedding], probes: &[LabeledEmbedding]) -> Result<f64, EvalError> {
    if gallery.is_empty() {
        return Err(EvalError::EmptyGallery);
    }
    if probes.is_empty() {
        return Err(EvalError::EmptyProbes);
    }
    let dim = gallery[0].dim();
    for e in gallery.iter().chain(probes) {
        if e.dim() != dim {
            return Err(EvalError::DimMismatch { expected: dim, got: e.dim() });
        }
    }
    let correct = probes
        .iter()
        .filter(|p| gallery[nearest(gallery, p)].identity == p.identity)
        .count();
    Ok(correct as f64 / probes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: Vec<f64>, id: u64) -> LabeledEmbedding {
        LabeledEmbedding::new(v, id).unwrap()
    }

    #[test]
    fn identical_sets_score_one() {
        let gallery = vec![e(vec![1.0, 0.0], 1), e(vec![0.0, 1.0], 2)];
        assert_eq!(rank1(&gallery, &gallery).unwrap(), 1.0);
    }

    #[test]
    fn one_of_two_correct_scores_half() {
        let gallery = vec![e(vec![1.0, 0.0], 1), e(vec![0.0, 1.0], 2)];
        let probes = vec![e(vec![0.8, 0.6], 1), e(vec![0.8, -0.6], 2)];
        assert_eq!(rank1(&gallery, &probes).unwrap(), 0.5);
    }

    #[test]
    fn single_identity_gallery_matches_its_probes() {
        let gallery = vec![e(vec![1.0, 0.0], 5)];
        let probes = vec![e(vec![0.0, 1.0], 5), e(vec![0.6, 0.8], 5)];
        assert_eq!(rank1(&gallery, &probes).unwrap(), 1.0);
    }

    #[test]
    fn ties_prefer_the_lowest_gallery_index() {
        let probe = vec![e(vec![1.0, 0.0], 9)];
        let forward = vec![e(vec![1.0, 0.0], 7), e(vec![1.0, 0.0], 9)];
        let reversed = vec![e(vec![1.0, 0.0], 9), e(vec![1.0, 0.0], 7)];
        assert_eq!(rank1(&forward, &probe).unwrap(), 0.0);
        assert_eq!(rank1(&reversed, &probe).unwrap(), 1.0);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let some = vec![e(vec![1.0, 0.0], 1)];
        assert!(matches!(rank1(&[], &some), Err(EvalError::EmptyGallery)));
        assert!(matches!(rank1(&some, &[]), Err(EvalError::EmptyProbes)));
    }

    #[test]
    fn dimensions_must_agree() {
        let gallery = vec![e(vec![1.0, 0.0], 1)];
        let probes = vec![e(vec![1.0, 0.0, 0.0], 1)];
        assert!(matches!(
            rank1(&gallery, &probes),
            Err(EvalError::DimMismatch { expected: 2, got: 3 })
        ));
    }
}
