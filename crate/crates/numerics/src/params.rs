use rand::Rng;

use crate::{NumericsError, Tensor};

/// Index of a parameter inside its [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Owns every learnable parameter of a model, in registration order. That
/// order is the canonical one for checkpoints and optimizer state.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: Vec<Parameter>,
    grads_ready: bool,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, value: Tensor) -> ParamId {
        assert!(
            self.id_of(name).is_none(),
            "duplicate parameter name {name}"
        );
        let grad = Tensor::zeros(value.shape());
        self.params.push(Parameter {
            name: name.to_string(),
            value,
            grad,
        });
        ParamId(self.params.len() - 1)
    }

    /// Registers a weight matrix with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
    /// entries.
    pub fn register_uniform<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = (1.0 / rows as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        self.register(name, Tensor::from_vec(&[rows, cols], data).unwrap())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .map(ParamId)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad = Tensor::zeros(p.value.shape());
        }
        self.grads_ready = false;
    }

    /// Installs accumulated gradients onto the parameters, marking them ready
    /// for an optimizer step.
    pub fn set_grads(&mut self, accum: GradAccum) {
        assert_eq!(accum.grads.len(), self.params.len());
        for (p, g) in self.params.iter_mut().zip(accum.grads) {
            debug_assert_eq!(p.value.shape(), g.shape());
            p.grad = g;
        }
        self.grads_ready = true;
    }

    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    pub fn mark_grads_consumed(&mut self) {
        self.grads_ready = false;
    }

    /// Loads values by name. Entries must all match existing parameters and
    /// shapes exactly; parameters absent from `entries` keep their current
    /// values and are reported back.
    pub fn load_values(
        &mut self,
        entries: &[(String, Tensor)],
    ) -> Result<Vec<String>, NumericsError> {
        for (name, tensor) in entries {
            let id = self.id_of(name).ok_or_else(|| {
                NumericsError::Checkpoint(format!(
                    "checkpoint entry {name:?} has no matching parameter in this model"
                ))
            })?;
            let param = self.get_mut(id);
            if param.value.shape() != tensor.shape() {
                return Err(NumericsError::ShapeMismatch {
                    what: "checkpoint load",
                    lhs: param.value.shape().to_vec(),
                    rhs: tensor.shape().to_vec(),
                });
            }
            param.value = tensor.clone();
        }
        let loaded: std::collections::HashSet<&str> =
            entries.iter().map(|(n, _)| n.as_str()).collect();
        Ok(self
            .params
            .iter()
            .filter(|p| !loaded.contains(p.name.as_str()))
            .map(|p| p.name.clone())
            .collect())
    }
}

/// Dense per-parameter gradient accumulator, used to reduce gradients over a
/// batch in a fixed order before installing them on the store.
#[derive(Debug, Clone)]
pub struct GradAccum {
    grads: Vec<Tensor>,
}

impl GradAccum {
    pub fn zeros(store: &ParamStore) -> Self {
        GradAccum {
            grads: store
                .params
                .iter()
                .map(|p| Tensor::zeros(p.value.shape()))
                .collect(),
        }
    }

    pub fn add_map(&mut self, map: &crate::GradMap) {
        for (id, g) in map.iter() {
            self.grads[id.0].add_assign(g);
        }
    }

    pub fn add(&mut self, other: &GradAccum) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.grads {
            g.scale_assign(s);
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }
}
