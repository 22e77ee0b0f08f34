//! Named parameter sets and the adaptive-moment optimizer.

use crate::error::TensorError;
use crate::tape::{GradientMap, Tape};
use crate::tensor::Tensor;

/// Insertion-ordered collection of named parameter tensors.
///
/// Order is part of the contract: checkpoints, optimizer state and tape
/// leaves all align by index, which keeps training bitwise reproducible.
#[derive(Clone, Debug, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

/// Tracked view of a [`ParamSet`]: the same tensors, registered as tape
/// leaves for one forward/backward pass.
pub struct TrackedParams {
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, t: Tensor) {
        let name = name.into();
        debug_assert!(
            !self.names.contains(&name),
            "duplicate parameter name {name}"
        );
        self.names.push(name);
        self.tensors.push(t.detach());
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &mut self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names
            .iter()
            .map(|n| n.as_str())
            .zip(self.tensors.iter())
    }

    /// Registers every parameter as a tape leaf.
    pub fn track(&self, tape: &mut Tape) -> TrackedParams {
        TrackedParams {
            tensors: self.tensors.iter().map(|t| tape.leaf(t)).collect(),
        }
    }

    /// Untracked (constant) view, for frozen-parameter forward passes.
    pub fn frozen(&self) -> TrackedParams {
        TrackedParams {
            tensors: self.tensors.clone(),
        }
    }

    pub fn total_elements(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }
}

impl TrackedParams {
    /// Lookup aligned with the owning set's names.
    pub fn get<'a>(&'a self, set: &ParamSet, name: &str) -> &'a Tensor {
        let idx = set
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &self.tensors[idx]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }
}

/// Bias-corrected adaptive-moment estimation.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every parameter in `params`. Each parameter must
    /// have a gradient in `grads` for its tracked leaf.
    pub fn step(
        &mut self,
        params: &mut ParamSet,
        tracked: &TrackedParams,
        grads: &GradientMap,
    ) -> Result<(), TensorError> {
        if self.first_moment.is_empty() {
            self.first_moment = params.tensors.iter().map(|t| vec![0.0; t.numel()]).collect();
            self.second_moment = self.first_moment.clone();
        }
        if self.first_moment.len() != params.len() {
            return Err(TensorError::StateShapeMismatch {
                name: "<parameter count>".into(),
            });
        }
        // gather all gradients up front so a missing one aborts atomically
        let mut gradients = Vec::with_capacity(params.len());
        for (i, name) in params.names.iter().enumerate() {
            let g = grads
                .get(&tracked.tensors[i])
                .ok_or_else(|| TensorError::MissingGradient { name: name.clone() })?;
            if g.numel() != params.tensors[i].numel() {
                return Err(TensorError::StateShapeMismatch { name: name.clone() });
            }
            gradients.push(g.data().to_vec());
        }

        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (i, g) in gradients.iter().enumerate() {
            if self.first_moment[i].len() != g.len() {
                return Err(TensorError::StateShapeMismatch {
                    name: params.names[i].clone(),
                });
            }
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            let p = params.tensors[i].data_mut();
            for j in 0..g.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                p[j] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
