use std::collections::HashMap;
use std::fmt;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Coarse ownership of a parameter, used by freeze modes and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGroup {
    GraphEncoder,
    RecipeEncoder,
    Decoder,
    Regressor,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 4] = [
        ParamGroup::GraphEncoder,
        ParamGroup::RecipeEncoder,
        ParamGroup::Decoder,
        ParamGroup::Regressor,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for ParamGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamGroup::GraphEncoder => "graph_encoder",
            ParamGroup::RecipeEncoder => "recipe_encoder",
            ParamGroup::Decoder => "decoder",
            ParamGroup::Regressor => "regressor",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub group: ParamGroup,
    pub value: Array2<f64>,
}

/// Named parameter tensors in creation order; the position is the id used
/// by the tape.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, group: ParamGroup, value: Array2<f64>) -> usize {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        let id = self.entries.len();
        self.index.insert(name.clone(), id);
        self.entries.push(ParamEntry { name, group, value });
        id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<usize, ModelError> {
        self.index.get(name).copied().ok_or_else(|| ModelError::MissingParam(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Option<&ParamEntry> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn entry(&self, id: usize) -> &ParamEntry {
        &self.entries[id]
    }

    pub fn value_mut(&mut self, id: usize) -> &mut Array2<f64> {
        &mut self.entries[id].value
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    /// Overwrites every value from `other`, which must have the same layout.
    pub fn copy_values_from(&mut self, other: &ParamStore) -> Result<(), ModelError> {
        for e in &mut self.entries {
            let src = other.get(&e.name).ok_or_else(|| ModelError::MissingParam(e.name.clone()))?;
            if src.value.dim() != e.value.dim() {
                return Err(ModelError::ShapeMismatch {
                    name: e.name.clone(),
                    expected: e.value.dim(),
                    got: src.value.dim(),
                });
            }
            e.value.assign(&src.value);
        }
        Ok(())
    }
}

pub(crate) fn xavier<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-limit..=limit))
}

pub(crate) fn normal<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}
