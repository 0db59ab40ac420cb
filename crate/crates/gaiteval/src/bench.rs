use std::fmt::Write as _;
use std::time::Instant;

use gaitmodel::{param_count, GaitModel, ModelConfig, ModelSize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorad::{Graph, Tensor};

use crate::error::EvalError;

/// Commonly quoted parameter counts for the three encoder sizes; the
/// benchmark CSV reports our exact counts next to these with a percentage
/// delta.
pub const QUOTED_PARAM_COUNTS: [(ModelSize, usize); 3] = [
    (ModelSize::Sm, 2_240_000),
    (ModelSize::Md, 4_350_000),
    (ModelSize::Xl, 6_460_000),
];

pub fn quoted_params(size: ModelSize) -> usize {
    QUOTED_PARAM_COUNTS
        .iter()
        .find(|(s, _)| *s == size)
        .map(|(_, n)| *n)
        .expect("every size is quoted")
}

/// Forward-only timing for one (size, period length) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub size: ModelSize,
    pub period_length: usize,
    /// Batch actually timed (the guard may halve the requested batch).
    pub batch: usize,
    pub requested_batch: usize,
    pub runs: usize,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    pub param_count: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub batch: usize,
    pub runs: usize,
    pub seed: u64,
    /// Rough activation-memory ceiling; batches are halved until the
    /// estimate fits.
    pub memory_budget_bytes: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            batch: 4,
            runs: 10,
            seed: 0,
            memory_budget_bytes: 1 << 30,
        }
    }
}

/// Coarse upper bound on forward-pass activation memory, used only by the
/// pre-emptive batch guard.
pub fn estimated_forward_bytes(config: &ModelConfig, batch: usize, t: usize) -> usize {
    let tokens = batch * t;
    let per_layer =
        21 * tokens * config.d_model + 4 * batch * config.num_heads * t * t;
    8 * (config.num_layers * per_layer + 8 * tokens * config.d_model)
}

fn random_input(batch: usize, t: usize, input_dim: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..batch * t * input_dim)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Tensor::from_vec(data, &[batch, t, input_dim]).expect("shape matches length")
}

/// Times forward passes for every (size, period length) pair: 3 warmup
/// iterations, then `runs` timed runs each measuring only the forward call.
pub fn bench_inference(
    sizes: &[ModelSize],
    period_lengths: &[usize],
    opts: &BenchOptions,
) -> Result<Vec<BenchmarkResult>, EvalError> {
    if sizes.is_empty() || period_lengths.is_empty() {
        return Err(EvalError::BadBench("no sizes or period lengths requested".into()));
    }
    if opts.runs == 0 || opts.batch == 0 {
        return Err(EvalError::BadBench("runs and batch must be at least 1".into()));
    }
    if period_lengths.contains(&0) {
        return Err(EvalError::BadBench("period lengths must be at least 1".into()));
    }
    let max_t = *period_lengths.iter().max().expect("non-empty");

    let mut results = Vec::with_capacity(sizes.len() * period_lengths.len());
    for (i, &size) in sizes.iter().enumerate() {
        let mut config = ModelConfig::sized(size);
        config.max_t = max_t;
        let params = param_count(&config);
        let model = GaitModel::new(config.clone(), opts.seed)?;

        for (j, &t) in period_lengths.iter().enumerate() {
            let mut batch = opts.batch;
            while batch > 1 && estimated_forward_bytes(&config, batch, t) > opts.memory_budget_bytes
            {
                batch /= 2;
            }
            let note = (batch != opts.batch).then(|| {
                format!("batch reduced from {} to {batch} to fit the memory budget", opts.batch)
            });

            let input = random_input(
                batch,
                t,
                config.input_dim,
                opts.seed ^ ((i as u64) << 32 | j as u64),
            );
            let time_one = || -> Result<f64, EvalError> {
                let mut g = Graph::new();
                let vars = model.insert_params(&mut g);
                let x = g.leaf(input.clone());
                let started = Instant::now();
                let out = model.forward(&mut g, &vars, x, None)?;
                let elapsed = started.elapsed().as_secs_f64();
                debug_assert_eq!(g.value(out.embedding).shape()[0], batch);
                Ok(elapsed)
            };
            for _ in 0..3 {
                time_one()?;
            }
            let timings: Vec<f64> = (0..opts.runs)
                .map(|_| time_one())
                .collect::<Result<_, _>>()?;
            let mean = timings.iter().sum::<f64>() / timings.len() as f64;
            let variance =
                timings.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / timings.len() as f64;

            results.push(BenchmarkResult {
                size,
                period_length: t,
                batch,
                requested_batch: opts.batch,
                runs: opts.runs,
                mean_seconds: mean,
                std_seconds: variance.sqrt(),
                param_count: params,
                note,
            });
        }
    }
    Ok(results)
}

/// CSV rendering with parameter counts alongside the quoted ones.
pub fn bench_csv(results: &[BenchmarkResult]) -> String {
    let mut out = String::from(
        "size,period_length,batch,runs,mean_seconds,std_seconds,param_count,quoted_param_count,delta_pct,note\n",
    );
    for r in results {
        let quoted = quoted_params(r.size);
        let delta = 100.0 * (r.param_count as f64 - quoted as f64) / quoted as f64;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{},{},{:.2},{}",
            r.size,
            r.period_length,
            r.batch,
            r.runs,
            r.mean_seconds,
            r.std_seconds,
            r.param_count,
            quoted,
            delta,
            r.note.as_deref().unwrap_or("")
        );
    }
    out
}
