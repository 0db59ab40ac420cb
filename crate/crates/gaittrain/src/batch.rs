use gaitpipe::NUM_ATTRIBUTES;
use rand::Rng;
use skelcore::{jitter, pace_sequence, random_crop, random_flip, AugmentationParams, SkeletonSequence};
use tensorad::Tensor;

use crate::dataset::GaitDataset;
use crate::error::TrainError;

/// A two-view contrastive batch: rows `i` and `i + N` are independent
/// augmentations of the same tracklet, so `labels[i] == labels[i + N]`.
#[derive(Debug, Clone)]
pub struct MultiViewBatch {
    /// `[2N, T, 54]`
    pub views: Tensor,
    /// `2N` tracklet ids.
    pub labels: Vec<u64>,
    /// `[2N, 42]` soft targets; zero rows where a tracklet is unannotated.
    pub attributes: Tensor,
}

impl MultiViewBatch {
    pub fn num_pairs(&self) -> usize {
        self.labels.len() / 2
    }
}

/// One stochastic view of a sequence: pace, crop to `crop_length`, flip,
/// jitter. The pace factor is clamped so the result still covers a crop.
pub fn augment_view(
    seq: &SkeletonSequence,
    params: &AugmentationParams,
    rng: &mut impl Rng,
) -> Result<SkeletonSequence, TrainError> {
    params.validate()?;
    let (lo, hi) = params.pace_range;
    let longest = seq.len() as f64 / params.crop_length as f64;
    let hi = hi.min(longest);
    let lo = lo.min(hi);
    let factor = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
    let paced = pace_sequence(seq, factor)?;
    let cropped = random_crop(&paced, params, rng)?;
    let flipped = random_flip(&cropped, params, rng)?;
    Ok(jitter(&flipped, params, rng)?)
}

/// Samples `batch_size` distinct tracklets and stacks two views of each.
pub fn two_view_batch(
    dataset: &GaitDataset,
    batch_size: usize,
    params: &AugmentationParams,
    rng: &mut impl Rng,
) -> Result<MultiViewBatch, TrainError> {
    if dataset.len() < batch_size {
        return Err(TrainError::DatasetTooSmall {
            len: dataset.len(),
            batch_size,
        });
    }
    if batch_size == 0 {
        return Err(TrainError::BatchTooSmall(0));
    }
    dataset.require_min_frames(params.crop_length)?;

    // Partial Fisher–Yates: the first batch_size entries are a uniform
    // without-replacement sample.
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    for i in 0..batch_size {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    indices.truncate(batch_size);

    let t = params.crop_length;
    let mut views = vec![Vec::with_capacity(batch_size * t * 54), Vec::with_capacity(batch_size * t * 54)];
    let mut labels = Vec::with_capacity(2 * batch_size);
    let mut attrs = vec![Vec::with_capacity(batch_size * NUM_ATTRIBUTES); 2];
    for &index in &indices {
        let item = dataset.item(index);
        let seq = dataset.sequence(index)?;
        let row: Vec<f64> = match &item.attributes {
            Some(a) => a.values().to_vec(),
            None => vec![0.0; NUM_ATTRIBUTES],
        };
        for v in 0..2 {
            let view = augment_view(&seq, params, rng)?;
            views[v].extend(view.flatten());
            attrs[v].extend_from_slice(&row);
        }
        labels.push(item.id);
    }
    labels.extend_from_within(..);

    let (second_views, first_views) = (views.pop().unwrap(), views.pop().unwrap());
    let mut stacked = first_views;
    stacked.extend(second_views);
    let (second_attrs, first_attrs) = (attrs.pop().unwrap(), attrs.pop().unwrap());
    let mut stacked_attrs = first_attrs;
    stacked_attrs.extend(second_attrs);

    Ok(MultiViewBatch {
        views: Tensor::from_vec(stacked, &[2 * batch_size, t, 54])?,
        labels,
        attributes: Tensor::from_vec(stacked_attrs, &[2 * batch_size, NUM_ATTRIBUTES])?,
    })
}
