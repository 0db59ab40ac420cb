use std::collections::BTreeMap;

use gaitmodel::GaitModel;
use tensorad::{Graph, Tensor};

use crate::error::TrainError;

/// Adam with bias correction. Moment buffers are keyed by parameter name
/// and created lazily, so one optimizer can also cover extra parameters
/// (e.g. a fresh fine-tuning head).
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    steps: u64,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }
}

impl Adam {
    pub fn new() -> Self {
        Adam::default()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Starts a step: call [`Adam::update`] once per parameter afterwards.
    /// Splitting the step lets callers mix model parameters and loose
    /// tensors (fine-tuning heads) under one shared step counter.
    pub fn begin_step(&mut self) {
        self.steps += 1;
    }

    /// One Adam update of `value` in place. `lr` may differ per parameter
    /// (layer-wise decay); a zero learning rate still advances moments.
    pub fn update(&mut self, name: &str, value: &mut Tensor, grad: &Tensor, lr: f64) {
        debug_assert!(self.steps > 0, "begin_step before update");
        let n = value.numel();
        let m = self.m.entry(name.to_string()).or_insert_with(|| vec![0.0; n]);
        let v = self.v.entry(name.to_string()).or_insert_with(|| vec![0.0; n]);
        let bc1 = 1.0 - self.beta1.powi(self.steps as i32);
        let bc2 = 1.0 - self.beta2.powi(self.steps as i32);
        for ((w, &g), (mi, vi)) in value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
            *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
            let mhat = *mi / bc1;
            let vhat = *vi / bc2;
            *w -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }

    /// Updates every model parameter from the graph's gradients, with
    /// `lr_for` supplying each parameter's learning rate. Assumes
    /// [`Adam::begin_step`] already ran, so extra tensors (fine-tuning
    /// heads) can join the same step.
    pub fn update_model(
        &mut self,
        model: &mut GaitModel,
        graph: &Graph,
        vars: &gaitmodel::ParamVars,
        lr_for: impl Fn(&str) -> f64,
    ) -> Result<(), TrainError> {
        let names: Vec<String> = model.params().keys().cloned().collect();
        for name in names {
            let var = vars[&name];
            let Some(grad) = graph.grad(var) else { continue };
            let grad = grad.clone();
            let mut value = model.param(&name).expect("known parameter").clone();
            self.update(&name, &mut value, &grad, lr_for(&name));
            model.set_param(&name, value)?;
        }
        Ok(())
    }

    /// [`Adam::begin_step`] plus [`Adam::update_model`] in one call.
    pub fn step_model(
        &mut self,
        model: &mut GaitModel,
        graph: &Graph,
        vars: &gaitmodel::ParamVars,
        lr_for: impl Fn(&str) -> f64,
    ) -> Result<(), TrainError> {
        self.begin_step();
        self.update_model(model, graph, vars, lr_for)
    }
}
