use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use gaitmodel::{GaitModel, INIT_STD};
use gaitpipe::GENDER_SLOT;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use skelcore::AugmentationParams;
use tensorad::{load_archive, save_archive, Graph, Tensor, Var};

use crate::batch::two_view_batch;
use crate::config::TrainConfig;
use crate::dataset::GaitDataset;
use crate::error::TrainError;
use crate::loss::{bce_soft, combined_loss, supcon_loss};
use crate::optim::Adam;
use crate::schedule::{cyclical_lr, finetune_lr, llrd_rate_for};

/// Pretraining objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Contrastive,
    Attributes,
    Multitask,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self, TrainError> {
        match s.to_ascii_lowercase().as_str() {
            "contrastive" => Ok(Regime::Contrastive),
            "attributes" => Ok(Regime::Attributes),
            "multitask" => Ok(Regime::Multitask),
            other => Err(TrainError::BadConfig(format!("unknown regime {other:?}"))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Contrastive => "contrastive",
            Regime::Attributes => "attributes",
            Regime::Multitask => "multitask",
        })
    }
}

/// Fine-tuning objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinetuneTask {
    Recognition,
    Gender,
}

impl FinetuneTask {
    pub fn parse(s: &str) -> Result<Self, TrainError> {
        match s.to_ascii_lowercase().as_str() {
            "recognition" => Ok(FinetuneTask::Recognition),
            "gender" => Ok(FinetuneTask::Gender),
            other => Err(TrainError::BadConfig(format!("unknown task {other:?}"))),
        }
    }
}

impl fmt::Display for FinetuneTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FinetuneTask::Recognition => "recognition",
            FinetuneTask::Gender => "gender",
        })
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Learning rate at the first step of the epoch.
    pub lr: f64,
    pub loss_supcon: f64,
    pub loss_appearance: f64,
    pub loss_total: f64,
}

/// Writes the per-epoch log as CSV with the standard header.
pub fn write_loss_csv(path: &Path, log: &[EpochStats]) -> Result<(), TrainError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "epoch,lr,loss_supcon,loss_appearance,loss_total")?;
    for row in log {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.epoch, row.lr, row.loss_supcon, row.loss_appearance, row.loss_total
        )?;
    }
    Ok(())
}

/// A single-logit linear head grafted onto the embedding for gender
/// fine-tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct GenderHead {
    pub w: Tensor,
    pub b: Tensor,
}

impl GenderHead {
    pub fn new(d_model: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        let w: Vec<f64> = (0..d_model)
            .map(|_| loop {
                let v = normal.sample(&mut rng);
                if v.abs() <= 2.0 * INIT_STD {
                    break v;
                }
            })
            .collect();
        GenderHead {
            w: Tensor::from_vec(w, &[d_model, 1]).expect("shape matches length"),
            b: Tensor::zeros(&[1]),
        }
    }

    /// Sigmoid probabilities for rows of precomputed embeddings.
    pub fn predict(&self, embeddings: &[Vec<f64>]) -> Vec<f64> {
        embeddings
            .iter()
            .map(|e| {
                let logit: f64 = e
                    .iter()
                    .zip(self.w.data())
                    .map(|(x, w)| x * w)
                    .sum::<f64>()
                    + self.b.data()[0];
                1.0 / (1.0 + (-logit).exp())
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        save_archive(path, &[("head.w", &self.w), ("head.b", &self.b)])
            .map_err(|e| TrainError::BadConfig(format!("saving gender head: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let tensors = load_archive(path)
            .map_err(|e| TrainError::BadConfig(format!("loading gender head: {e}")))?;
        let mut w = None;
        let mut b = None;
        for (name, t) in tensors {
            match name.as_str() {
                "head.w" => w = Some(t),
                "head.b" => b = Some(t),
                other => {
                    return Err(TrainError::BadConfig(format!(
                        "unexpected tensor {other:?} in gender head"
                    )))
                }
            }
        }
        match (w, b) {
            (Some(w), Some(b)) => Ok(GenderHead { w, b }),
            _ => Err(TrainError::BadConfig(
                "gender head archive is missing tensors".to_string(),
            )),
        }
    }
}

fn check_finite(g: &Graph, v: Var, epoch: usize, step: usize, component: &'static str) -> Result<f64, TrainError> {
    let value = g.value(v).item();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(TrainError::NonFiniteLoss {
            epoch,
            step,
            component,
        })
    }
}

fn column(t: &Tensor, col: usize) -> Tensor {
    let cols = t.shape()[1];
    let rows = t.shape()[0];
    let data: Vec<f64> = (0..rows).map(|r| t.data()[r * cols + col]).collect();
    Tensor::from_vec(data, &[rows, 1]).expect("shape matches length")
}

fn validate_run(
    model: &GaitModel,
    dataset: &GaitDataset,
    cfg: &TrainConfig,
    aug: &AugmentationParams,
) -> Result<(), TrainError> {
    cfg.validate()?;
    aug.validate()?;
    if aug.crop_length > model.config().max_t {
        return Err(TrainError::BadConfig(format!(
            "crop length {} exceeds the model's positional table {}",
            aug.crop_length,
            model.config().max_t
        )));
    }
    if dataset.len() < cfg.batch_size {
        return Err(TrainError::DatasetTooSmall {
            len: dataset.len(),
            batch_size: cfg.batch_size,
        });
    }
    dataset.require_min_frames(aug.crop_length)
}

/// Self-supervised pretraining: every tracklet id is its own class.
///
/// Runs `cfg.total_epochs` epochs of two-view batches under the cyclical
/// learning rate, logging per-epoch means of each loss component.
/// `epoch_hook` runs after every epoch (checkpoint cadence, streaming
/// logs); returning an error from it aborts training.
pub fn pretrain(
    model: &mut GaitModel,
    dataset: &GaitDataset,
    regime: Regime,
    cfg: &TrainConfig,
    aug: &AugmentationParams,
    mut epoch_hook: impl FnMut(&EpochStats, &GaitModel) -> Result<(), TrainError>,
) -> Result<Vec<EpochStats>, TrainError> {
    validate_run(model, dataset, cfg, aug)?;
    if regime != Regime::Contrastive {
        dataset.require_attributes()?;
    }

    let steps_per_epoch = (dataset.len() / cfg.batch_size).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new();
    let mut log = Vec::with_capacity(cfg.total_epochs);
    let mut global_step = 0usize;

    for epoch in 0..cfg.total_epochs {
        let epoch_lr = cyclical_lr(global_step, steps_per_epoch, cfg);
        let mut sums = (0.0, 0.0, 0.0);
        for step in 0..steps_per_epoch {
            let lr = cyclical_lr(global_step, steps_per_epoch, cfg);
            let batch = two_view_batch(dataset, cfg.batch_size, aug, &mut rng)?;
            let mut g = Graph::new();
            let vars = model.insert_params(&mut g);
            let x = g.leaf(batch.views);
            let out = model.forward(
                &mut g,
                &vars,
                x,
                Some(cfg.seed.wrapping_add(global_step as u64)),
            )?;

            let (supcon_value, appearance_value, total) = match regime {
                Regime::Contrastive => {
                    let s = supcon_loss(&mut g, out.projection, &batch.labels, cfg.tau)?;
                    (check_finite(&g, s, epoch, step, "supcon")?, 0.0, s)
                }
                Regime::Attributes => {
                    let a = bce_soft(&mut g, out.attr_logits, &batch.attributes)?;
                    (0.0, check_finite(&g, a, epoch, step, "appearance")?, a)
                }
                Regime::Multitask => {
                    let s = supcon_loss(&mut g, out.projection, &batch.labels, cfg.tau)?;
                    let a = bce_soft(&mut g, out.attr_logits, &batch.attributes)?;
                    let c = combined_loss(&mut g, s, a, cfg.lambda)?;
                    (
                        check_finite(&g, s, epoch, step, "supcon")?,
                        check_finite(&g, a, epoch, step, "appearance")?,
                        c,
                    )
                }
            };
            let total_value = check_finite(&g, total, epoch, step, "total")?;

            g.backward(total)?;
            adam.step_model(model, &g, &vars, |_| lr)?;

            sums.0 += supcon_value;
            sums.1 += appearance_value;
            sums.2 += total_value;
            global_step += 1;
        }
        let n = steps_per_epoch as f64;
        let stats = EpochStats {
            epoch,
            lr: epoch_lr,
            loss_supcon: sums.0 / n,
            loss_appearance: sums.1 / n,
            loss_total: sums.2 / n,
        };
        epoch_hook(&stats, model)?;
        log.push(stats);
    }
    Ok(log)
}

/// Supervised fine-tuning with layer-wise learning-rate decay and a
/// linear-to-zero schedule.
///
/// Recognition keeps the contrastive head on real identity labels; gender
/// trains a fresh single-logit head (returned alongside the log) against
/// the gender attribute slot.
pub fn finetune(
    model: &mut GaitModel,
    dataset: &GaitDataset,
    task: FinetuneTask,
    cfg: &TrainConfig,
    aug: &AugmentationParams,
    mut epoch_hook: impl FnMut(&EpochStats, &GaitModel) -> Result<(), TrainError>,
) -> Result<(Vec<EpochStats>, Option<GenderHead>), TrainError> {
    validate_run(model, dataset, cfg, aug)?;
    if task == FinetuneTask::Gender {
        dataset.require_attributes()?;
    }

    let num_layers = model.config().num_layers;
    let steps_per_epoch = (dataset.len() / cfg.batch_size).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new();
    let mut head = match task {
        FinetuneTask::Gender => Some(GenderHead::new(
            model.config().d_model,
            cfg.seed.wrapping_add(1),
        )),
        FinetuneTask::Recognition => None,
    };
    let mut log = Vec::with_capacity(cfg.finetune_epochs);
    let mut global_step = 0usize;

    for epoch in 0..cfg.finetune_epochs {
        let base_lr = finetune_lr(epoch, cfg);
        let mut sums = (0.0, 0.0, 0.0);
        for step in 0..steps_per_epoch {
            let batch = two_view_batch(dataset, cfg.batch_size, aug, &mut rng)?;
            let mut g = Graph::new();
            let vars = model.insert_params(&mut g);
            let x = g.leaf(batch.views);
            let out = model.forward(
                &mut g,
                &vars,
                x,
                Some(cfg.seed.wrapping_add(global_step as u64)),
            )?;

            let mut head_vars = None;
            let (supcon_value, appearance_value, total) = match task {
                FinetuneTask::Recognition => {
                    let s = supcon_loss(&mut g, out.projection, &batch.labels, cfg.tau)?;
                    (check_finite(&g, s, epoch, step, "supcon")?, 0.0, s)
                }
                FinetuneTask::Gender => {
                    let h = head.as_ref().expect("gender task builds a head");
                    let hw = g.param(h.w.clone());
                    let hb = g.param(h.b.clone());
                    head_vars = Some((hw, hb));
                    let logits = g.matmul(out.embedding, hw)?;
                    let logits = g.add_bias(logits, hb)?;
                    let targets = column(&batch.attributes, GENDER_SLOT);
                    let a = bce_soft(&mut g, logits, &targets)?;
                    (0.0, check_finite(&g, a, epoch, step, "appearance")?, a)
                }
            };
            let total_value = check_finite(&g, total, epoch, step, "total")?;

            g.backward(total)?;
            adam.begin_step();
            adam.update_model(model, &g, &vars, |name| {
                llrd_rate_for(name, base_lr, cfg.llrd_decay, num_layers)
            })?;
            if let (Some((hw, hb)), Some(h)) = (head_vars, head.as_mut()) {
                if let Some(grad) = g.grad(hw) {
                    let grad = grad.clone();
                    adam.update("head.w", &mut h.w, &grad, base_lr);
                }
                if let Some(grad) = g.grad(hb) {
                    let grad = grad.clone();
                    adam.update("head.b", &mut h.b, &grad, base_lr);
                }
            }

            sums.0 += supcon_value;
            sums.1 += appearance_value;
            sums.2 += total_value;
            global_step += 1;
        }
        let n = steps_per_epoch as f64;
        let stats = EpochStats {
            epoch,
            lr: base_lr,
            loss_supcon: sums.0 / n,
            loss_appearance: sums.1 / n,
            loss_total: sums.2 / n,
        };
        epoch_hook(&stats, model)?;
        log.push(stats);
    }
    Ok((log, head))
}
