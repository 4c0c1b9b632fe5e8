//! Named trainable tensors and their binding onto a tape.

use indexmap::IndexMap;

use crate::autodiff::{Gradients, Tape, Var};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Ordered collection of named parameters. Iteration order is insertion
/// order, which is also the order of checkpoint entries and optimizer state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    map: IndexMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.map.insert(name.into(), t);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.map.get(name)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.map.values_mut()
    }

    pub fn num_scalars(&self) -> usize {
        self.map.values().map(Tensor::len).sum()
    }

    /// Records every parameter on `tape`; with `trainable` false they are
    /// recorded as constants and no gradients are tracked.
    pub fn bind<'t, 'p>(&'p self, tape: &'t Tape, trainable: bool) -> Bound<'t, 'p> {
        let vars = self
            .map
            .values()
            .map(|t| {
                if trainable {
                    tape.param(t.clone())
                } else {
                    tape.constant(t.clone())
                }
            })
            .collect();
        Bound { store: self, vars }
    }

    pub fn to_checkpoint(&self, metadata: serde_json::Value) -> Checkpoint {
        Checkpoint::new(
            self.map.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            metadata,
        )
    }

    /// Fills this store's entries from a checkpoint, requiring every name to
    /// be present with a matching shape.
    pub fn load_from(&mut self, ckpt: &Checkpoint) -> Result<()> {
        for (name, t) in self.map.iter_mut() {
            let src = ckpt
                .get(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            if src.shape() != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {name}: expected shape {:?}, found {:?}",
                    t.shape(),
                    src.shape()
                )));
            }
            *t = src.clone();
        }
        Ok(())
    }
}

/// Parameters recorded on one tape.
pub struct Bound<'t, 'p> {
    store: &'p ParamStore,
    vars: Vec<Var<'t>>,
}

impl<'t> Bound<'t, '_> {
    pub fn get(&self, name: &str) -> Result<Var<'t>> {
        self.store
            .map
            .get_index_of(name)
            .map(|i| self.vars[i])
            .ok_or_else(|| Error::Config(format!("unknown parameter {name}")))
    }

    pub fn vars(&self) -> &[Var<'t>] {
        &self.vars
    }

    /// Gradients in store order (zeros where nothing flowed).
    pub fn gradients(&self, grads: &Gradients) -> Vec<Tensor> {
        self.vars.iter().map(|&v| grads.wrt(v)).collect()
    }
}
