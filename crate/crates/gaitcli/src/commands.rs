use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gaiteval::{
    bench_csv, bench_inference, casia_protocol, gender_metrics, mean_defined, r2_scores, rank1,
    BenchOptions, LabeledEmbedding,
};
use gaitmodel::{load_checkpoint, save_checkpoint, GaitModel, ModelConfig, ModelSize};
use gaitpipe::{read_archive, write_archive, ProcessedTracklet, GENDER_SLOT};
use gaittrain::{
    combined_loss, finetune, pretrain, supcon_loss, write_loss_csv, EpochStats, FinetuneTask,
    GaitDataset, GenderHead, Regime,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelcore::{center_crop, SkeletonSequence};
use tensorad::{grad_check, GradCheckOptions, Graph, Tensor, TensorError, Var, L2_NORM_FLOOR};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::runs::{create_run_dir, require_input};
use crate::synth::{
    decode_protocol_id, synth_corpus, synth_mini_casia, MiniCasiaOptions, SynthOptions,
};

#[derive(Debug, Parser)]
#[command(name = "gait", version, about = "Skeleton gait recognition toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn raw per-frame detections into a filtered tracklet archive.
    BuildDataset(BuildDatasetArgs),
    /// Generate a synthetic walking corpus.
    Synth(SynthArgs),
    /// Pretrain an encoder on a tracklet archive.
    Pretrain(PretrainArgs),
    /// Fine-tune a pretrained checkpoint.
    Finetune(FinetuneArgs),
    /// Embed archives and report retrieval and attribute metrics.
    Evaluate(EvaluateArgs),
    /// Time forward passes across model sizes and period lengths.
    Bench(BenchArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BuildDataset(a) => run_build_dataset(&a),
        Command::Synth(a) => run_synth(&a),
        Command::Pretrain(a) => run_pretrain(&a).map(|_| ()),
        Command::Finetune(a) => run_finetune(&a).map(|_| ()),
        Command::Evaluate(a) => run_evaluate(&a).map(|_| ()),
        Command::Bench(a) => run_bench(&a),
        Command::Gradcheck(a) => run_gradcheck(&a),
    }
}

fn load_run_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn parse_size(s: &str) -> Result<ModelSize, CliError> {
    ModelSize::parse(s).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_list<T, E: std::fmt::Display>(
    s: &str,
    what: &str,
    parse: impl Fn(&str) -> Result<T, E>,
) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse(p).map_err(|e| CliError::Usage(format!("bad {what} {p:?}: {e}"))))
        .collect()
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Detection file: frame_index, then 54 values per person.
    #[arg(long)]
    pub detections: PathBuf,
    /// Optional appearance scores: one line of 42 values per tracklet id.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Capture rate of the detection stream.
    #[arg(long)]
    pub fps: f64,
    /// Run configuration TOML (the [pipeline] section applies here).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output tracklet archive.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-stage survivor report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run_build_dataset(args: &BuildDatasetArgs) -> Result<(), CliError> {
    require_input(&args.detections)?;
    if let Some(scores) = &args.scores {
        require_input(scores)?;
    }
    let cfg = load_run_config(args.config.as_deref())?;
    let build = gaitpipe::build_dataset(
        &args.detections,
        args.fps,
        &cfg.pipeline,
        args.scores.as_deref(),
    )?;
    write_archive(&args.out, &build.tracklets)?;
    let report = build.report.to_string();
    if let Some(path) = &args.report {
        fs::write(path, &report)?;
    }
    print!("{report}");
    println!(
        "wrote {} tracklets to {}",
        build.tracklets.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for the generated archives.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Emit a protocol-tagged corpus (casia.tracklets) instead of the
    /// train/eval split.
    #[arg(long)]
    pub protocol: bool,
    #[arg(long, default_value_t = 32)]
    pub ids: usize,
    #[arg(long, default_value_t = 1)]
    pub tracklets_per_id: usize,
    #[arg(long, default_value_t = 144)]
    pub frames: usize,
    /// Trailing frames held out into eval.tracklets.
    #[arg(long, default_value_t = 48)]
    pub holdout: usize,
    #[arg(long, default_value_t = 24.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Protocol corpus: number of subjects.
    #[arg(long, default_value_t = 4)]
    pub subjects: usize,
    /// Protocol corpus: camera angles in degrees, comma-separated.
    #[arg(long, default_value = "0,54,90")]
    pub angles: String,
    /// Protocol corpus: sequences per (subject, angle, condition) cell.
    #[arg(long, default_value_t = 2)]
    pub runs_per_cell: usize,
}

pub fn run_synth(args: &SynthArgs) -> Result<(), CliError> {
    fs::create_dir_all(&args.out_dir)?;
    if args.protocol {
        let opts = MiniCasiaOptions {
            subjects: args.subjects,
            angles: parse_list(&args.angles, "angle", str::parse::<u16>)?,
            runs_per_cell: args.runs_per_cell,
            frames: args.frames,
            fps: args.fps,
            seed: args.seed,
        };
        let tracklets = synth_mini_casia(&opts)?;
        let path = args.out_dir.join("casia.tracklets");
        write_archive(&path, &tracklets)?;
        println!("wrote {} tracklets to {}", tracklets.len(), path.display());
    } else {
        let opts = SynthOptions {
            ids: args.ids,
            tracklets_per_id: args.tracklets_per_id,
            frames: args.frames,
            holdout: args.holdout,
            fps: args.fps,
            seed: args.seed,
        };
        let (train, eval) = synth_corpus(&opts)?;
        for (tracklets, name) in [(&train, "train.tracklets"), (&eval, "eval.tracklets")] {
            let path = args.out_dir.join(name);
            write_archive(&path, tracklets)?;
            println!("wrote {} tracklets to {}", tracklets.len(), path.display());
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// Training tracklet archive.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the run directory to create under the runs root.
    #[arg(long)]
    pub run_name: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Encoder preset (sm, md, xl); overrides any [model] section.
    #[arg(long)]
    pub size: Option<String>,
    /// contrastive, attributes, or multitask.
    #[arg(long, default_value = "contrastive")]
    pub regime: String,
    /// Override train.total_epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Override train.batch_size.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Override both the model-init and training seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Save an intermediate checkpoint every N epochs.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

fn apply_overrides(
    cfg: &mut RunConfig,
    epochs: Option<usize>,
    batch: Option<usize>,
    seed: Option<u64>,
    finetune_run: bool,
) {
    if let Some(epochs) = epochs {
        if finetune_run {
            cfg.train.finetune_epochs = epochs;
        } else {
            cfg.train.total_epochs = epochs;
        }
    }
    if let Some(batch) = batch {
        cfg.train.batch_size = batch;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
        cfg.train.seed = seed;
    }
}

fn provenance(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Epoch hook shared by pretrain and finetune: streams losses.csv after
/// every epoch and saves numbered checkpoints on the requested cadence.
fn epoch_logger<'a>(
    run_dir: &'a Path,
    checkpoint_every: Option<usize>,
    provenance: BTreeMap<String, String>,
) -> impl FnMut(&EpochStats, &GaitModel) -> Result<(), gaittrain::TrainError> + 'a {
    let csv_path = run_dir.join("losses.csv");
    let mut log: Vec<EpochStats> = Vec::new();
    move |stats, model| {
        log.push(stats.clone());
        write_loss_csv(&csv_path, &log)?;
        if let Some(every) = checkpoint_every {
            if every > 0 && (stats.epoch + 1) % every == 0 {
                let name = format!("epoch{:04}", stats.epoch + 1);
                save_checkpoint(model, run_dir, &name, &provenance)?;
            }
        }
        Ok(())
    }
}

pub fn run_pretrain(args: &PretrainArgs) -> Result<PathBuf, CliError> {
    require_input(&args.data)?;
    let mut cfg = load_run_config(args.config.as_deref())?;
    apply_overrides(&mut cfg, args.epochs, args.batch, args.seed, false);
    cfg.validate()?;
    let size = args.size.as_deref().map(parse_size).transpose()?;
    let model_cfg = cfg.model_config(size)?;
    let regime = Regime::parse(&args.regime).map_err(|e| CliError::Usage(e.to_string()))?;

    let run_dir = create_run_dir(&args.run_name, &cfg)?;
    let dataset = GaitDataset::from_archive(&args.data)?;
    let mut model = GaitModel::new(model_cfg, cfg.seed)?;

    let prov = provenance(&[
        ("command", "pretrain".to_string()),
        ("regime", args.regime.clone()),
        ("epochs", cfg.train.total_epochs.to_string()),
        ("dataset", args.data.display().to_string()),
        ("seed", cfg.train.seed.to_string()),
    ]);
    let log = pretrain(
        &mut model,
        &dataset,
        regime,
        &cfg.train,
        &cfg.augment,
        epoch_logger(&run_dir, args.checkpoint_every, prov.clone()),
    )?;
    save_checkpoint(&model, &run_dir, "model", &prov)?;

    if let Some(last) = log.last() {
        println!(
            "pretrained {} epochs; final losses: supcon {:.6}, appearance {:.6}, total {:.6}",
            log.len(),
            last.loss_supcon,
            last.loss_appearance,
            last.loss_total
        );
    }
    println!("run directory: {}", run_dir.display());
    Ok(run_dir)
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    /// Training tracklet archive.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory holding the starting checkpoint.
    #[arg(long)]
    pub from: PathBuf,
    /// Checkpoint name inside --from.
    #[arg(long, default_value = "model")]
    pub checkpoint: String,
    /// recognition or gender.
    #[arg(long, default_value = "recognition")]
    pub task: String,
    #[arg(long)]
    pub run_name: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override train.finetune_epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

pub fn run_finetune(args: &FinetuneArgs) -> Result<PathBuf, CliError> {
    require_input(&args.data)?;
    let mut cfg = load_run_config(args.config.as_deref())?;
    apply_overrides(&mut cfg, args.epochs, None, args.seed, true);
    cfg.validate()?;
    let task = FinetuneTask::parse(&args.task).map_err(|e| CliError::Usage(e.to_string()))?;

    let (mut model, _card) = load_checkpoint(&args.from, &args.checkpoint)?;
    let run_dir = create_run_dir(&args.run_name, &cfg)?;
    let dataset = GaitDataset::from_archive(&args.data)?;

    let prov = provenance(&[
        ("command", "finetune".to_string()),
        ("task", args.task.clone()),
        ("base", format!("{}/{}", args.from.display(), args.checkpoint)),
        ("epochs", cfg.train.finetune_epochs.to_string()),
        ("dataset", args.data.display().to_string()),
        ("seed", cfg.train.seed.to_string()),
    ]);
    let (log, head) = finetune(
        &mut model,
        &dataset,
        task,
        &cfg.train,
        &cfg.augment,
        epoch_logger(&run_dir, args.checkpoint_every, prov.clone()),
    )?;
    save_checkpoint(&model, &run_dir, "model", &prov)?;
    if let Some(head) = head {
        head.save(&run_dir.join("gender_head.gta"))?;
        println!("saved gender head to {}", run_dir.join("gender_head.gta").display());
    }

    if let Some(last) = log.last() {
        println!(
            "fine-tuned {} epochs on the {} task; final total loss {:.6}",
            log.len(),
            task,
            last.loss_total
        );
    }
    println!("run directory: {}", run_dir.display());
    Ok(run_dir)
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory holding the checkpoint to evaluate.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "model")]
    pub checkpoint: String,
    /// Gallery tracklet archive (retrieval mode).
    #[arg(long)]
    pub gallery: Option<PathBuf>,
    /// Probe tracklet archive (retrieval mode).
    #[arg(long)]
    pub probes: Option<PathBuf>,
    /// Gender head archive; adds gender metrics over the probes.
    #[arg(long)]
    pub gender_head: Option<PathBuf>,
    /// Run the cross-view protocol over --data instead.
    #[arg(long)]
    pub casia: bool,
    /// Protocol-tagged tracklet archive (protocol mode).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory for metrics.csv / r2.csv / casia.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Raw (unnormalized) embeddings and sigmoid attribute probabilities for
/// every tracklet, batched to bound activation memory.
struct ModelOutputs {
    embeddings: Vec<Vec<f64>>,
    attr_probs: Vec<f64>,
}

fn forward_tracklets(
    model: &GaitModel,
    tracklets: &[ProcessedTracklet],
) -> Result<ModelOutputs, CliError> {
    let t_len = model.config().max_t;
    let input_dim = model.config().input_dim;
    let d = model.config().d_model;
    let mut embeddings = Vec::with_capacity(tracklets.len());
    let mut attr_probs = Vec::with_capacity(tracklets.len() * model.config().n_attributes);
    for chunk in tracklets.chunks(32) {
        let mut data = Vec::with_capacity(chunk.len() * t_len * input_dim);
        for tracklet in chunk {
            let seq = SkeletonSequence::new(tracklet.frames.clone(), tracklet.fps)?;
            data.extend(center_crop(&seq, t_len)?.flatten());
        }
        let input = Tensor::from_vec(data, &[chunk.len(), t_len, input_dim])?;
        let mut g = Graph::new();
        let vars = model.insert_params(&mut g);
        let x = g.leaf(input);
        let out = model.forward(&mut g, &vars, x, None)?;
        embeddings.extend(g.value(out.embedding).data().chunks(d).map(<[f64]>::to_vec));
        attr_probs.extend(
            g.value(out.attr_logits)
                .data()
                .iter()
                .map(|&v| 1.0 / (1.0 + (-v).exp())),
        );
    }
    Ok(ModelOutputs {
        embeddings,
        attr_probs,
    })
}

fn unit_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(L2_NORM_FLOOR);
            row.iter().map(|v| v / norm).collect()
        })
        .collect()
}

fn gender_labels(tracklets: &[ProcessedTracklet]) -> Result<Vec<bool>, CliError> {
    tracklets
        .iter()
        .map(|t| {
            t.attributes
                .as_ref()
                .map(|a| a.values()[GENDER_SLOT] >= 0.5)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "tracklet {} has no attribute annotations, required for gender metrics",
                        t.id
                    ))
                })
        })
        .collect()
}

/// What [`run_evaluate`] measured; fields are `None` when that metric was
/// not requested or not computable from the inputs.
#[derive(Debug, Clone, Default)]
pub struct EvalSummary {
    pub rank1: Option<f64>,
    pub gender_accuracy: Option<f64>,
    pub gender_macro_f1: Option<f64>,
    pub attr_r2: Option<Vec<Option<f64>>>,
    pub attr_r2_mean: Option<f64>,
    pub casia_csv: Option<String>,
}

pub fn run_evaluate(args: &EvaluateArgs) -> Result<EvalSummary, CliError> {
    let (model, _card) = load_checkpoint(&args.model, &args.checkpoint)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut summary = EvalSummary::default();

    if args.casia {
        let data = args.data.as_ref().ok_or_else(|| {
            CliError::Usage("--casia needs --data with a protocol-tagged archive".into())
        })?;
        require_input(data)?;
        let tracklets = read_archive(data)?;
        let outputs = forward_tracklets(&model, &tracklets)?;
        let mut embeddings = Vec::with_capacity(tracklets.len());
        for (tracklet, row) in tracklets.iter().zip(unit_rows(&outputs.embeddings)) {
            let (subject, condition, _run, angle) = decode_protocol_id(tracklet.id)?;
            embeddings.push(
                LabeledEmbedding::new(row, subject)?
                    .with_viewpoint(angle)
                    .with_condition(condition),
            );
        }
        let table = casia_protocol(&embeddings)?;
        let csv = table.to_csv();
        print!("{csv}");
        if let Some(dir) = &args.out_dir {
            fs::write(dir.join("casia.csv"), &csv)?;
        }
        summary.casia_csv = Some(csv);
        return Ok(summary);
    }

    let (gallery_path, probes_path) = match (&args.gallery, &args.probes) {
        (Some(g), Some(p)) => (g, p),
        _ => {
            return Err(CliError::Usage(
                "evaluate needs --gallery and --probes, or --casia with --data".into(),
            ))
        }
    };
    require_input(gallery_path)?;
    require_input(probes_path)?;
    let gallery_tracklets = read_archive(gallery_path)?;
    let probe_tracklets = read_archive(probes_path)?;
    let gallery_out = forward_tracklets(&model, &gallery_tracklets)?;
    let probe_out = forward_tracklets(&model, &probe_tracklets)?;

    let gallery: Vec<LabeledEmbedding> = unit_rows(&gallery_out.embeddings)
        .into_iter()
        .zip(&gallery_tracklets)
        .map(|(row, t)| LabeledEmbedding::new(row, t.id))
        .collect::<Result<_, _>>()?;
    let probes: Vec<LabeledEmbedding> = unit_rows(&probe_out.embeddings)
        .into_iter()
        .zip(&probe_tracklets)
        .map(|(row, t)| LabeledEmbedding::new(row, t.id))
        .collect::<Result<_, _>>()?;
    let r1 = rank1(&gallery, &probes)?;
    summary.rank1 = Some(r1);
    let mut metrics = vec![("rank1".to_string(), r1)];
    println!("rank-1 accuracy: {r1:.4}");

    if let Some(head_path) = &args.gender_head {
        require_input(head_path)?;
        let head = GenderHead::load(head_path)?;
        let labels = gender_labels(&probe_tracklets)?;
        let scores = head.predict(&probe_out.embeddings);
        let correct = scores
            .iter()
            .zip(&labels)
            .filter(|(s, &l)| (**s >= 0.5) == l)
            .count();
        let accuracy = correct as f64 / labels.len() as f64;
        let report = gender_metrics(&scores, &labels)?;
        summary.gender_accuracy = Some(accuracy);
        summary.gender_macro_f1 = Some(report.f1);
        metrics.push(("gender_accuracy".to_string(), accuracy));
        metrics.push(("gender_macro_precision".to_string(), report.precision));
        metrics.push(("gender_macro_recall".to_string(), report.recall));
        metrics.push(("gender_macro_f1".to_string(), report.f1));
        println!("gender accuracy: {accuracy:.4}, macro F1: {:.4}", report.f1);
        if let Some(warning) = &report.warning {
            eprintln!("warning: {warning}");
        }
    }

    if probe_tracklets.iter().all(|t| t.attributes.is_some()) && !probe_tracklets.is_empty() {
        let n_attr = model.config().n_attributes;
        let labels: Vec<f64> = probe_tracklets
            .iter()
            .flat_map(|t| t.attributes.as_ref().expect("checked above").values().to_vec())
            .collect();
        let shape = [probe_tracklets.len(), n_attr];
        let predictions = Tensor::from_vec(probe_out.attr_probs.clone(), &shape)?;
        let labels = Tensor::from_vec(labels, &shape)?;
        let scores = r2_scores(&predictions, &labels)?;
        let mean = mean_defined(&scores);
        if let Some(dir) = &args.out_dir {
            let mut csv = String::from("slot,r2\n");
            for (slot, score) in scores.iter().enumerate() {
                match score {
                    Some(v) => csv.push_str(&format!("{slot},{v}\n")),
                    None => csv.push_str(&format!("{slot},\n")),
                }
            }
            fs::write(dir.join("r2.csv"), csv)?;
        }
        if let Some(mean) = mean {
            metrics.push(("attr_r2_mean".to_string(), mean));
            println!("attribute R² (mean over defined slots): {mean:.4}");
        }
        summary.attr_r2 = Some(scores);
        summary.attr_r2_mean = mean;
    }

    if let Some(dir) = &args.out_dir {
        let mut csv = String::from("metric,value\n");
        for (name, value) in &metrics {
            csv.push_str(&format!("{name},{value}\n"));
        }
        fs::write(dir.join("metrics.csv"), csv)?;
    }
    Ok(summary)
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated presets to time.
    #[arg(long, default_value = "sm,md,xl")]
    pub sizes: String,
    /// Comma-separated gait-period lengths (frames).
    #[arg(long, default_value = "12,24,48,96")]
    pub periods: String,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the CSV here as well as printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_bench(args: &BenchArgs) -> Result<(), CliError> {
    let sizes = parse_list(&args.sizes, "size", ModelSize::parse)?;
    let periods = parse_list(&args.periods, "period length", str::parse::<usize>)?;
    let opts = BenchOptions {
        batch: args.batch,
        runs: args.runs,
        seed: args.seed,
        ..BenchOptions::default()
    };
    let results = bench_inference(&sizes, &periods, &opts)?;
    let csv = bench_csv(&results);
    print!("{csv}");
    if let Some(path) = &args.out {
        fs::write(path, &csv)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Central-difference step. The default balances truncation error on
    /// the sharply curved contrastive head against rounding noise on the
    /// shift-invariant key biases.
    #[arg(long, default_value_t = 3e-5)]
    pub eps: f64,
    /// Coordinates sampled per tensor.
    #[arg(long, default_value_t = 200)]
    pub coords: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Inject a backward fault (e.g. matmul) as a negative control.
    #[arg(long)]
    pub fault: Option<String>,
}

pub fn run_gradcheck(args: &GradcheckArgs) -> Result<(), CliError> {
    let mut cfg = ModelConfig::tiny();
    cfg.num_heads = 2;
    let model = GaitModel::new(cfg, args.seed)?;
    let cfg = model.config().clone();
    let batch = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(17));
    let input = Tensor::from_vec(
        (0..batch * cfg.max_t * cfg.input_dim)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect(),
        &[batch, cfg.max_t, cfg.input_dim],
    )?;
    let targets = Tensor::from_vec(
        (0..batch * cfg.n_attributes)
            .map(|_| rng.gen_range(0.0..1.0))
            .collect(),
        &[batch, cfg.n_attributes],
    )?;
    let labels: Vec<u64> = (0..batch as u64).map(|i| i % 2).collect();

    let params: Vec<(String, Tensor)> = model
        .params()
        .iter()
        .map(|(n, t)| (n.clone(), t.clone()))
        .collect();
    let names: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();
    let train_err = |_: gaittrain::TrainError| TensorError::EmptyOperands { op: "loss" };
    let build = |g: &mut Graph, vars: &[Var]| {
        let map: gaitmodel::ParamVars =
            names.iter().cloned().zip(vars.iter().copied()).collect();
        let x = g.leaf(input.clone());
        let out = model
            .forward(g, &map, x, None)
            .map_err(|_| TensorError::EmptyOperands { op: "forward" })?;
        let supcon = supcon_loss(g, out.projection, &labels, 1.0).map_err(train_err)?;
        let appearance = gaittrain::bce_soft(g, out.attr_logits, &targets).map_err(train_err)?;
        let loss = combined_loss(g, supcon, appearance, 0.5).map_err(train_err)?;
        // Checked at 1/100 scale: relative errors are scale-free, but the
        // exactly-zero key-bias gradients are compared against an absolute
        // floor that rounding noise on a larger loss would swamp.
        Ok(g.scale(loss, 0.01))
    };
    let opts = GradCheckOptions {
        eps: args.eps,
        max_coords_per_tensor: args.coords,
        seed: args.seed,
        fault: match args.fault.as_deref() {
            Some("matmul") => Some("matmul"),
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "unknown fault {other:?}; only matmul is wired up"
                )))
            }
            None => None,
        },
    };
    let report = grad_check(build, &params, &opts)?;

    let coords: usize = report.tensors.iter().map(|t| t.coords_checked).sum();
    println!(
        "checked {} coordinates across {} tensors; max relative error {:.3e}",
        coords,
        report.tensors.len(),
        report.max_rel_err
    );
    if let Some(worst) = report
        .tensors
        .iter()
        .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
    {
        println!("worst tensor: {} ({:.3e})", worst.name, worst.max_rel_err);
    }
    if report.passes(args.tolerance) {
        println!("gradient check passed (tolerance {:.0e})", args.tolerance);
        Ok(())
    } else {
        Err(CliError::GradCheckFailed {
            max_rel_err: report.max_rel_err,
            tolerance: args.tolerance,
        })
    }
}
