use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
struct Entry<T> {
    name: String,
    value: Matrix<T>,
    trainable: bool,
}

/// Named tensors owned by a model: trainable parameters plus non-trainable
/// buffers such as batch-norm running statistics.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    entries: Vec<Entry<T>>,
    by_name: HashMap<String, ParamId>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new(), by_name: HashMap::new() }
    }

    /// Panics on a duplicate name; names are assigned by model constructors.
    pub fn add(&mut self, name: impl Into<String>, value: Matrix<T>) -> ParamId {
        self.insert(name.into(), value, true)
    }

    pub fn add_buffer(&mut self, name: impl Into<String>, value: Matrix<T>) -> ParamId {
        self.insert(name.into(), value, false)
    }

    fn insert(&mut self, name: String, value: Matrix<T>, trainable: bool) -> ParamId {
        let id = ParamId(self.entries.len());
        assert!(self.by_name.insert(name.clone(), id).is_none(), "duplicate parameter name {name}");
        self.entries.push(Entry { name, value, trainable });
        id
    }

    /// `rows x cols` weight drawn uniformly from `±sqrt(6 / (fan_in + fan_out))`.
    pub fn add_glorot<R: Rng + ?Sized>(&mut self, name: impl Into<String>, rows: usize, cols: usize, rng: &mut R) -> ParamId {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| T::from_f64_lossy(rng.gen_range(-bound..=bound))).collect();
        self.add(name, Matrix::from_vec(rows, cols, data))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn trainable_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.ids().filter(|&id| self.entries[id.0].trainable)
    }

    pub fn value(&self, id: ParamId) -> &Matrix<T> {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.entries[id.0].value
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.entries[id.0].trainable
    }

    pub fn get(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    /// Number of trainable scalars.
    pub fn num_trainable(&self) -> usize {
        self.trainable_ids().map(|id| self.value(id).as_slice().len()).sum()
    }

    pub fn apply_buffer_updates(&mut self, updates: Vec<(ParamId, Matrix<T>)>) {
        for (id, value) in updates {
            self.entries[id.0].value = value;
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            tensors: self
                .entries
                .iter()
                .map(|e| TensorRecord {
                    name: e.name.clone(),
                    shape: [e.value.rows(), e.value.cols()],
                    trainable: e.trainable,
                    data: e.value.as_slice().iter().map(|v| v.to_f64_lossy()).collect(),
                })
                .collect(),
        }
    }

    /// Overwrites every tensor from a checkpoint. Names and shapes must match
    /// the store exactly.
    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        if ck.tensors.len() != self.entries.len() {
            return Err(Error::Shape(format!(
                "checkpoint has {} tensors, model has {}",
                ck.tensors.len(),
                self.entries.len()
            )));
        }
        for rec in &ck.tensors {
            let id = self.get(&rec.name).ok_or_else(|| Error::Shape(format!("unknown tensor {}", rec.name)))?;
            let e = &mut self.entries[id.0];
            if [e.value.rows(), e.value.cols()] != rec.shape || rec.data.len() != rec.shape[0] * rec.shape[1] {
                return Err(Error::Shape(format!("tensor {} has shape {:?}", rec.name, rec.shape)));
            }
            e.value = Matrix::from_vec(rec.shape[0], rec.shape[1], rec.data.iter().map(|&v| T::from_f64_lossy(v)).collect());
        }
        Ok(())
    }
}

/// One named tensor in a checkpoint. `data` is row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub trainable: bool,
    pub data: Vec<f64>,
}

/// JSON checkpoint: a flat list of named tensors with shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Gradient accumulator aligned with a [`ParamStore`]. Missing entries are
/// zero.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Matrix<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(store: &ParamStore<T>) -> Self {
        Self { grads: vec![None; store.len()] }
    }

    pub(crate) fn with_len(len: usize) -> Self {
        Self { grads: vec![None; len] }
    }

    pub fn get(&self, id: ParamId) -> Option<&Matrix<T>> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    pub fn accumulate(&mut self, id: ParamId, g: &Matrix<T>) {
        if id.0 >= self.grads.len() {
            self.grads.resize(id.0 + 1, None);
        }
        match &mut self.grads[id.0] {
            Some(acc) => acc.add_assign(g),
            slot @ None => *slot = Some(g.clone()),
        }
    }

    /// Sums another accumulator into this one.
    pub fn merge(&mut self, other: &Gradients<T>) {
        for (i, g) in other.grads.iter().enumerate() {
            if let Some(g) = g {
                self.accumulate(ParamId(i), g);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix<T>)> {
        self.grads.iter().enumerate().filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }

    pub fn max_abs(&self) -> T {
        self.iter().flat_map(|(_, g)| g.as_slice().iter().map(|v| v.abs())).fold(T::zero(), T::max)
    }
}
