use std::path::Path;

use gaitpipe::{read_archive, ProcessedTracklet};
use skelcore::SkeletonSequence;

use crate::error::TrainError;

/// An in-memory training set: one entry per tracklet, each with an id that
/// doubles as its self-supervision label (or a real identity label when
/// fine-tuning), plus optional 42-d soft attributes.
#[derive(Debug, Clone)]
pub struct GaitDataset {
    items: Vec<ProcessedTracklet>,
}

impl GaitDataset {
    pub fn from_tracklets(items: Vec<ProcessedTracklet>) -> Result<Self, TrainError> {
        if items.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        Ok(GaitDataset { items })
    }

    /// Loads a dataset archive produced by the pipeline.
    pub fn from_archive(path: &Path) -> Result<Self, TrainError> {
        Self::from_tracklets(read_archive(path)?)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[ProcessedTracklet] {
        &self.items
    }

    pub fn item(&self, index: usize) -> &ProcessedTracklet {
        &self.items[index]
    }

    pub fn sequence(&self, index: usize) -> Result<SkeletonSequence, TrainError> {
        let item = &self.items[index];
        Ok(SkeletonSequence::new(item.frames.clone(), item.fps)?)
    }

    /// Shortest tracklet length in frames.
    pub fn min_frames(&self) -> usize {
        self.items.iter().map(|i| i.frames.len()).min().unwrap_or(0)
    }

    /// Errors unless every tracklet has at least `needed` frames.
    pub fn require_min_frames(&self, needed: usize) -> Result<(), TrainError> {
        for item in &self.items {
            if item.frames.len() < needed {
                return Err(TrainError::TrackletTooShort {
                    id: item.id,
                    len: item.frames.len(),
                    needed,
                });
            }
        }
        Ok(())
    }

    /// Errors unless every tracklet carries attribute annotations.
    pub fn require_attributes(&self) -> Result<(), TrainError> {
        for item in &self.items {
            if item.attributes.is_none() {
                return Err(TrainError::MissingAttributes { id: item.id });
            }
        }
        Ok(())
    }
}
