use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use skelcore::{center_crop, SkeletonSequence};
use tensorad::{Graph, Tensor, Var};

use crate::config::ModelConfig;
use crate::error::ModelError;

/// Standard deviation of the truncated-normal weight initialization.
pub const INIT_STD: f64 = 0.02;

const LN_EPS: f64 = 1e-5;

/// Graph handles for every parameter, keyed by parameter name.
pub type ParamVars = BTreeMap<String, Var>;

/// The three heads produced by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardOutput {
    /// `[B, d_model]` identity embedding, unnormalized.
    pub embedding: Var,
    /// `[B, d_proj]` projection for the contrastive loss.
    pub projection: Var,
    /// `[B, n_attributes]` appearance logits; consumers apply the sigmoid.
    pub attr_logits: Var,
}

/// Every parameter name with its shape, in a fixed order.
///
/// The order is also the initialization order, so two models built from
/// the same seed and config are identical.
pub fn param_shapes(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = cfg.d_model;
    let mut shapes = vec![
        ("input.w".to_string(), vec![cfg.input_dim, d]),
        ("input.b".to_string(), vec![d]),
        ("pos".to_string(), vec![cfg.max_t, d]),
    ];
    for i in 0..cfg.num_layers {
        shapes.push((format!("layer{i}.ln1.g"), vec![d]));
        shapes.push((format!("layer{i}.ln1.b"), vec![d]));
        for half in ["q", "k", "v", "o"] {
            shapes.push((format!("layer{i}.attn.w{half}"), vec![d, d]));
            shapes.push((format!("layer{i}.attn.b{half}"), vec![d]));
        }
        shapes.push((format!("layer{i}.ln2.g"), vec![d]));
        shapes.push((format!("layer{i}.ln2.b"), vec![d]));
        shapes.push((format!("layer{i}.ff.w1"), vec![d, cfg.d_ff]));
        shapes.push((format!("layer{i}.ff.b1"), vec![cfg.d_ff]));
        shapes.push((format!("layer{i}.ff.w2"), vec![cfg.d_ff, d]));
        shapes.push((format!("layer{i}.ff.b2"), vec![d]));
    }
    shapes.push(("final_ln.g".to_string(), vec![d]));
    shapes.push(("final_ln.b".to_string(), vec![d]));
    shapes.push(("embed.w".to_string(), vec![d, d]));
    shapes.push(("embed.b".to_string(), vec![d]));
    shapes.push(("proj.w".to_string(), vec![d, cfg.d_proj]));
    shapes.push(("proj.b".to_string(), vec![cfg.d_proj]));
    shapes.push(("attr.w".to_string(), vec![d, cfg.n_attributes]));
    shapes.push(("attr.b".to_string(), vec![cfg.n_attributes]));
    shapes
}

/// Total trainable parameters for a configuration.
pub fn param_count(cfg: &ModelConfig) -> usize {
    param_shapes(cfg)
        .iter()
        .map(|(_, shape)| shape.iter().product::<usize>())
        .sum()
}

enum InitKind {
    TruncNormal,
    Zeros,
    Ones,
}

fn init_kind(name: &str) -> InitKind {
    let last = name.rsplit('.').next().unwrap_or(name);
    if last == "g" {
        InitKind::Ones
    } else if last.starts_with('b') {
        InitKind::Zeros
    } else {
        InitKind::TruncNormal
    }
}

/// Initialization scale for a weight tensor: fan-in scaled for the linear
/// maps so input signal survives the residual stack at initialization,
/// [`INIT_STD`] for the embedding-style tables.
fn init_std(shape: &[usize]) -> f64 {
    match shape {
        [fan_in, _] => (*fan_in as f64).powf(-0.5),
        _ => INIT_STD,
    }
}

fn trunc_normal(rng: &mut ChaCha8Rng, normal: &Normal<f64>, bound: f64) -> f64 {
    loop {
        let v = normal.sample(rng);
        if v.abs() <= bound {
            return v;
        }
    }
}

/// A transformer encoder over skeleton sequences.
///
/// Owns its configuration and parameters; forward passes are built on a
/// caller-supplied [`Graph`] so training can run backward through them.
#[derive(Debug, Clone)]
pub struct GaitModel {
    config: ModelConfig,
    params: BTreeMap<String, Tensor>,
}

impl GaitModel {
    /// Builds a freshly initialized model: fan-in-scaled truncated-normal
    /// weights, a small positional table, zero biases, identity layer norms.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = BTreeMap::new();
        for (name, shape) in param_shapes(&config) {
            let numel: usize = shape.iter().product();
            let data = match init_kind(&name) {
                InitKind::Ones => vec![1.0; numel],
                InitKind::Zeros => vec![0.0; numel],
                InitKind::TruncNormal => {
                    let std = init_std(&shape);
                    let normal = Normal::new(0.0, std).expect("valid std");
                    (0..numel)
                        .map(|_| trunc_normal(&mut rng, &normal, 2.0 * std))
                        .collect()
                }
            };
            params.insert(name, Tensor::from_vec(data, &shape)?);
        }
        Ok(GaitModel { config, params })
    }

    /// Rebuilds a model from named tensors, validating the set of names
    /// and every shape against `config`.
    pub fn from_params(
        config: ModelConfig,
        tensors: Vec<(String, Tensor)>,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let expected = param_shapes(&config);
        let mut params: BTreeMap<String, Tensor> = BTreeMap::new();
        for (name, tensor) in tensors {
            if params.insert(name.clone(), tensor).is_some() {
                return Err(ModelError::BadCheckpoint(format!(
                    "duplicate parameter {name:?}"
                )));
            }
        }
        for (name, shape) in &expected {
            match params.get(name) {
                Some(t) if t.shape() == shape.as_slice() => {}
                Some(t) => {
                    return Err(ModelError::BadCheckpoint(format!(
                        "parameter {name:?} has shape {:?}, expected {:?}",
                        t.shape(),
                        shape
                    )))
                }
                None => {
                    return Err(ModelError::BadCheckpoint(format!(
                        "missing parameter {name:?}"
                    )))
                }
            }
        }
        if params.len() != expected.len() {
            let known: std::collections::BTreeSet<&str> =
                expected.iter().map(|(n, _)| n.as_str()).collect();
            let extras: Vec<&str> = params
                .keys()
                .map(String::as_str)
                .filter(|n| !known.contains(n))
                .collect();
            return Err(ModelError::BadCheckpoint(format!(
                "unexpected parameters {extras:?}"
            )));
        }
        Ok(GaitModel { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &BTreeMap<String, Tensor> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    /// Replaces one parameter; the shape must not change.
    pub fn set_param(&mut self, name: &str, value: Tensor) -> Result<(), ModelError> {
        match self.params.get_mut(name) {
            Some(current) if current.shape() == value.shape() => {
                *current = value;
                Ok(())
            }
            Some(current) => Err(ModelError::BadCheckpoint(format!(
                "parameter {name:?} has shape {:?}, refusing {:?}",
                current.shape(),
                value.shape()
            ))),
            None => Err(ModelError::BadCheckpoint(format!(
                "unknown parameter {name:?}"
            ))),
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    /// Registers every parameter on `g` as a gradient-tracked leaf, in
    /// [`param_shapes`] order.
    pub fn insert_params(&self, g: &mut Graph) -> ParamVars {
        let mut vars = BTreeMap::new();
        for (name, _) in param_shapes(&self.config) {
            let tensor = self.params[&name].clone();
            vars.insert(name, g.param(tensor));
        }
        vars
    }

    /// Runs the encoder over a `[B, T, 54]` input var.
    ///
    /// `train_seed` enables dropout (when the config asks for any); `None`
    /// is inference mode.
    pub fn forward(
        &self,
        g: &mut Graph,
        vars: &ParamVars,
        input: Var,
        train_seed: Option<u64>,
    ) -> Result<ForwardOutput, ModelError> {
        let cfg = &self.config;
        let shape = g.value(input).shape().to_vec();
        if shape.len() != 3 {
            return Err(ModelError::BadInputRank(shape));
        }
        let (b, t, feat) = (shape[0], shape[1], shape[2]);
        if b == 0 || t == 0 {
            return Err(ModelError::EmptyBatch);
        }
        if feat != cfg.input_dim {
            return Err(ModelError::BadInputDim {
                expected: cfg.input_dim,
                got: feat,
            });
        }
        if t > cfg.max_t {
            return Err(ModelError::SequenceTooLong { t, max_t: cfg.max_t });
        }
        let p = |name: &str| {
            *vars
                .get(name)
                .unwrap_or_else(|| panic!("parameter var {name:?} missing; use insert_params"))
        };
        let d = cfg.d_model;
        let heads = cfg.num_heads;
        let dh = cfg.head_dim();
        let drop = |g: &mut Graph, x: Var, site: u64| -> Result<Var, ModelError> {
            match train_seed {
                Some(seed) if cfg.dropout > 0.0 => {
                    Ok(g.dropout(x, cfg.dropout, seed.wrapping_add(site))?)
                }
                _ => Ok(x),
            }
        };

        let flat = g.reshape(input, &[b * t, cfg.input_dim])?;
        let x = g.matmul(flat, p("input.w"))?;
        let x = g.add_bias(x, p("input.b"))?;
        let x = g.reshape(x, &[b, t, d])?;
        let mut x = g.embedding_add(x, p("pos"))?;

        for i in 0..cfg.num_layers {
            let n = |s: &str| format!("layer{i}.{s}");

            let normed = g.layer_norm(x, p(&n("ln1.g")), p(&n("ln1.b")), LN_EPS)?;
            let flat = g.reshape(normed, &[b * t, d])?;
            let mut qkv = Vec::with_capacity(3);
            for half in ["q", "k", "v"] {
                let lin = g.matmul(flat, p(&n(&format!("attn.w{half}"))))?;
                let lin = g.add_bias(lin, p(&n(&format!("attn.b{half}"))))?;
                let lin = g.reshape(lin, &[b, t, heads, dh])?;
                qkv.push(g.permute(lin, &[0, 2, 1, 3])?);
            }
            let (q, k, v) = (qkv[0], qkv[1], qkv[2]);
            let kt = g.permute(k, &[0, 1, 3, 2])?;
            let scores = g.matmul(q, kt)?;
            let scores = g.scale(scores, 1.0 / (dh as f64).sqrt());
            let probs = g.softmax(scores);
            let probs = drop(g, probs, 3 * i as u64)?;
            let ctx = g.matmul(probs, v)?;
            let ctx = g.permute(ctx, &[0, 2, 1, 3])?;
            let ctx = g.reshape(ctx, &[b * t, d])?;
            let out = g.matmul(ctx, p(&n("attn.wo")))?;
            let out = g.add_bias(out, p(&n("attn.bo")))?;
            let out = drop(g, out, 3 * i as u64 + 1)?;
            let out = g.reshape(out, &[b, t, d])?;
            x = g.add(x, out)?;

            let normed = g.layer_norm(x, p(&n("ln2.g")), p(&n("ln2.b")), LN_EPS)?;
            let flat = g.reshape(normed, &[b * t, d])?;
            let hidden = g.matmul(flat, p(&n("ff.w1")))?;
            let hidden = g.add_bias(hidden, p(&n("ff.b1")))?;
            let hidden = g.gelu(hidden);
            let out = g.matmul(hidden, p(&n("ff.w2")))?;
            let out = g.add_bias(out, p(&n("ff.b2")))?;
            let out = drop(g, out, 3 * i as u64 + 2)?;
            let out = g.reshape(out, &[b, t, d])?;
            x = g.add(x, out)?;
        }

        let x = g.layer_norm(x, p("final_ln.g"), p("final_ln.b"), LN_EPS)?;
        let pooled = g.mean_axis(x, 1)?;
        let embedding = g.matmul(pooled, p("embed.w"))?;
        let embedding = g.add_bias(embedding, p("embed.b"))?;
        let projection = g.matmul(embedding, p("proj.w"))?;
        let projection = g.add_bias(projection, p("proj.b"))?;
        let attr_logits = g.matmul(embedding, p("attr.w"))?;
        let attr_logits = g.add_bias(attr_logits, p("attr.b"))?;
        Ok(ForwardOutput {
            embedding,
            projection,
            attr_logits,
        })
    }

    /// Embeds one sequence: center-crop to `max_t` frames, forward, then
    /// L2-normalize. The sequence must have at least `max_t` frames.
    pub fn embed(&self, seq: &SkeletonSequence) -> Result<Vec<f64>, ModelError> {
        let mut rows = self.embed_batch(std::slice::from_ref(seq))?;
        Ok(rows.remove(0))
    }

    /// [`embed`](Self::embed) over several sequences in one forward pass.
    pub fn embed_batch(&self, seqs: &[SkeletonSequence]) -> Result<Vec<Vec<f64>>, ModelError> {
        if seqs.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let t = self.config.max_t;
        let mut data = Vec::with_capacity(seqs.len() * t * self.config.input_dim);
        for seq in seqs {
            if seq.len() < t {
                return Err(ModelError::SequenceTooShort {
                    len: seq.len(),
                    needed: t,
                });
            }
            data.extend(center_crop(seq, t)?.flatten());
        }
        let input = Tensor::from_vec(data, &[seqs.len(), t, self.config.input_dim])?;
        let mut g = Graph::new();
        let vars = self.insert_params(&mut g);
        let x = g.leaf(input);
        let out = self.forward(&mut g, &vars, x, None)?;
        let normed = g.l2_normalize_rows(out.embedding);
        Ok(g.value(normed)
            .data()
            .chunks(self.config.d_model)
            .map(<[f64]>::to_vec)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelSize;

    #[test]
    fn standard_param_counts() {
        let counts: Vec<usize> = ModelSize::ALL
            .iter()
            .map(|&s| param_count(&ModelConfig::sized(s)))
            .collect();
        assert_eq!(counts, [1_719_466, 3_302_570, 4_885_674]);
        assert!(counts[0] < counts[1] && counts[1] < counts[2]);
    }

    #[test]
    fn layer_count_is_additive() {
        let mut four = ModelConfig::sized(ModelSize::Sm);
        let mut eight = four.clone();
        eight.num_layers = 8;
        let per_layer = (param_count(&eight) - param_count(&four)) / 4;
        four.num_layers = 1;
        eight.num_layers = 2;
        assert_eq!(param_count(&eight) - param_count(&four), per_layer);
        assert_eq!(per_layer, 395_776);
    }

    #[test]
    fn initialization_respects_parameter_roles() {
        let model = GaitModel::new(ModelConfig::tiny(), 11).unwrap();
        for (name, tensor) in model.params() {
            let last = name.rsplit('.').next().unwrap();
            if last == "g" {
                assert!(tensor.data().iter().all(|&v| v == 1.0), "{name}");
            } else if last.starts_with('b') {
                assert!(tensor.data().iter().all(|&v| v == 0.0), "{name}");
            } else {
                let bound = 2.0 * init_std(tensor.shape());
                assert!(
                    tensor.data().iter().all(|&v| v.abs() <= bound),
                    "{name} exceeds the truncation bound"
                );
                assert!(tensor.data().iter().any(|&v| v != 0.0), "{name}");
            }
        }
    }

    #[test]
    fn seeding_is_reproducible() {
        let a = GaitModel::new(ModelConfig::tiny(), 3).unwrap();
        let b = GaitModel::new(ModelConfig::tiny(), 3).unwrap();
        let c = GaitModel::new(ModelConfig::tiny(), 4).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn from_params_validates_the_set() {
        let model = GaitModel::new(ModelConfig::tiny(), 0).unwrap();
        let tensors: Vec<(String, Tensor)> = model
            .params()
            .iter()
            .map(|(n, t)| (n.clone(), t.clone()))
            .collect();
        GaitModel::from_params(ModelConfig::tiny(), tensors.clone()).unwrap();

        let mut missing = tensors.clone();
        missing.pop();
        assert!(matches!(
            GaitModel::from_params(ModelConfig::tiny(), missing),
            Err(ModelError::BadCheckpoint(_))
        ));

        let mut extra = tensors.clone();
        extra.push(("mystery".to_string(), Tensor::zeros(&[1])));
        assert!(matches!(
            GaitModel::from_params(ModelConfig::tiny(), extra),
            Err(ModelError::BadCheckpoint(_))
        ));

        let mut bigger = ModelConfig::tiny();
        bigger.d_model = 64;
        bigger.num_heads = 8;
        assert!(matches!(
            GaitModel::from_params(bigger, tensors),
            Err(ModelError::BadCheckpoint(_))
        ));
    }

    #[test]
    fn set_param_rejects_shape_changes() {
        let mut model = GaitModel::new(ModelConfig::tiny(), 0).unwrap();
        let d = model.config().d_model;
        model
            .set_param("input.b", Tensor::full(&[d], 0.5))
            .unwrap();
        assert!(model.set_param("input.b", Tensor::full(&[d + 1], 0.5)).is_err());
        assert!(model.set_param("nope", Tensor::full(&[d], 0.5)).is_err());
    }
}

