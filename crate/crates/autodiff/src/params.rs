use crate::array::Array;
use crate::error::{AutodiffError, Result};

/// Ordered collection of named parameter arrays.
///
/// Order is insertion order and is what checkpoints, gradient maps and
/// optimizer moments are keyed by.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Array>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a parameter and returns its slot index.
    pub fn insert(&mut self, name: impl Into<String>, value: Array) -> usize {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Array] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Array] {
        &mut self.values
    }

    pub fn get(&self, slot: usize) -> &Array {
        &self.values[slot]
    }

    pub fn get_mut(&mut self, slot: usize) -> &mut Array {
        &mut self.values[slot]
    }

    pub fn slot(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| AutodiffError::UnknownParameter(name.to_string()))
    }

    pub fn by_name(&self, name: &str) -> Result<&Array> {
        Ok(&self.values[self.slot(name)?])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    /// Zero-valued gradient map with matching shapes.
    pub fn zeros_like(&self) -> GradMap {
        GradMap {
            grads: self.values.iter().map(|v| Array::zeros(v.shape())).collect(),
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Array::len).sum()
    }
}

/// Gradients aligned slot-for-slot with a [`ParamSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradMap {
    grads: Vec<Array>,
}

impl GradMap {
    pub fn from_arrays(grads: Vec<Array>) -> Self {
        Self { grads }
    }

    pub fn arrays(&self) -> &[Array] {
        &self.grads
    }

    pub fn get(&self, slot: usize) -> &Array {
        &self.grads[slot]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Adds `other` slot by slot.
    pub fn accumulate(&mut self, other: &GradMap) {
        debug_assert_eq!(self.grads.len(), other.grads.len());
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.grads {
            g.scale_in_place(factor);
        }
    }

    /// Euclidean norm over every entry of every slot.
    pub fn norm(&self) -> f64 {
        self.grads.iter().map(Array::squared_norm).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(Array::is_finite)
    }

    pub fn is_zero(&self) -> bool {
        self.grads.iter().all(|g| g.data().iter().all(|&v| v == 0.0))
    }
}
