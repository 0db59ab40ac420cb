use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::TensorError;
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

/// Settings for [`grad_check`].
#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub eps: f64,
    /// Coordinates sampled per tensor (all of them if the tensor is smaller).
    pub max_coords_per_tensor: usize,
    /// Seed for the coordinate sampler.
    pub seed: u64,
    /// Optional backward fault to inject, for negative-control tests.
    pub fault: Option<&'static str>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-5,
            max_coords_per_tensor: 200,
            seed: 0,
            fault: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub coords_checked: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

/// Compares reverse-mode gradients against central finite differences.
///
/// `build` constructs the scalar loss from the parameter list; it is called
/// once for the analytic pass and twice per sampled coordinate for the
/// numeric probes. The relative error of a coordinate is
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<F>(
    build: F,
    params: &[(String, Tensor)],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, TensorError>,
{
    // Analytic pass.
    let mut graph = Graph::new();
    if let Some(f) = opts.fault {
        graph.inject_backward_fault(f);
    }
    let vars: Vec<Var> = params.iter().map(|(_, t)| graph.param(t.clone())).collect();
    let loss = build(&mut graph, &vars)?;
    graph.backward(loss)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .zip(params)
        .map(|(v, (_, t))| {
            graph
                .grad(*v)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(t.shape()))
        })
        .collect();

    let eval = |perturbed: &[(String, Tensor)]| -> Result<f64, TensorError> {
        let mut g = Graph::new();
        let vs: Vec<Var> = perturbed.iter().map(|(_, t)| g.param(t.clone())).collect();
        let l = build(&mut g, &vs)?;
        Ok(g.value(l).item())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work: Vec<(String, Tensor)> = params.to_vec();
    let mut tensors = Vec::with_capacity(params.len());
    let mut overall: f64 = 0.0;

    for (pi, (name, tensor)) in params.iter().enumerate() {
        let numel = tensor.numel();
        let coords: Vec<usize> = if numel <= opts.max_coords_per_tensor {
            (0..numel).collect()
        } else {
            let mut seen = HashSet::new();
            let mut picked = Vec::with_capacity(opts.max_coords_per_tensor);
            while picked.len() < opts.max_coords_per_tensor {
                let c = rng.gen_range(0..numel);
                if seen.insert(c) {
                    picked.push(c);
                }
            }
            picked
        };

        let mut worst: f64 = 0.0;
        for &c in &coords {
            let orig = tensor.data()[c];
            work[pi].1.data_mut()[c] = orig + opts.eps;
            let plus = eval(&work)?;
            work[pi].1.data_mut()[c] = orig - opts.eps;
            let minus = eval(&work)?;
            work[pi].1.data_mut()[c] = orig;

            let numeric = (plus - minus) / (2.0 * opts.eps);
            let a = analytic[pi].data()[c];
            let mut rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if !rel.is_finite() {
                rel = f64::INFINITY;
            }
            worst = worst.max(rel);
        }
        overall = overall.max(worst);
        tensors.push(TensorCheck {
            name: name.clone(),
            max_rel_err: worst,
            coords_checked: coords.len(),
        });
    }

    Ok(GradCheckReport {
        max_rel_err: overall,
        tensors,
    })
}
