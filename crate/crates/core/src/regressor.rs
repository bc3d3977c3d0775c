//! Q-function approximators.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mlp::Mlp;

/// Row-major matrix of feature vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    dim: usize,
    rows: usize,
}

impl FeatureMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            data: Vec::new(),
            dim,
            rows: 0,
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            data: Vec::with_capacity(dim * rows),
            dim,
            rows: 0,
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }
}

/// A fit/predict abstraction over `(state, action)` feature vectors.
///
/// `fit` replaces any previous fit entirely; fitted Q-iteration refits from
/// scratch every iteration.
pub trait Regressor {
    fn fit(&mut self, features: &FeatureMatrix, targets: &[f64]) -> Result<()>;
    fn predict_one(&self, row: &[f64]) -> f64;

    fn predict(&self, features: &FeatureMatrix) -> Vec<f64> {
        (0..features.rows()).map(|i| self.predict_one(features.row(i))).collect()
    }
}

/// Exact lookup table keyed on the bit pattern of the feature vector.
///
/// Only suitable for tiny instances where the training set enumerates every
/// state-action pair; unseen pairs predict 0, matching the all-zero
/// initialization of the value function.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "ExactTableRepr", into = "ExactTableRepr")]
pub struct ExactTable {
    table: HashMap<Vec<u64>, f64>,
}

/// Serialized form: sorted `(key bits, value)` pairs, so identical tables
/// always produce identical bytes.
#[derive(Serialize, Deserialize)]
struct ExactTableRepr {
    entries: Vec<(Vec<u64>, f64)>,
}

impl From<ExactTable> for ExactTableRepr {
    fn from(t: ExactTable) -> Self {
        let mut entries: Vec<(Vec<u64>, f64)> = t.table.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Self { entries }
    }
}

impl From<ExactTableRepr> for ExactTable {
    fn from(repr: ExactTableRepr) -> Self {
        Self {
            table: repr.entries.into_iter().collect(),
        }
    }
}

impl ExactTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn key(row: &[f64]) -> Vec<u64> {
        row.iter().map(|v| v.to_bits()).collect()
    }
}

impl Regressor for ExactTable {
    fn fit(&mut self, features: &FeatureMatrix, targets: &[f64]) -> Result<()> {
        assert_eq!(features.rows(), targets.len());
        self.table.clear();
        for (i, &target) in targets.iter().enumerate() {
            self.table.insert(Self::key(features.row(i)), target);
        }
        Ok(())
    }

    fn predict_one(&self, row: &[f64]) -> f64 {
        self.table.get(&Self::key(row)).copied().unwrap_or(0.0)
    }
}

/// Runtime-selected regressor kind.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum AnyRegressor {
    Exact(ExactTable),
    Mlp(Mlp),
}

impl AnyRegressor {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyRegressor::Exact(_) => "exact",
            AnyRegressor::Mlp(_) => "mlp",
        }
    }
}

impl Regressor for AnyRegressor {
    fn fit(&mut self, features: &FeatureMatrix, targets: &[f64]) -> Result<()> {
        match self {
            AnyRegressor::Exact(t) => t.fit(features, targets),
            AnyRegressor::Mlp(m) => m.fit(features, targets),
        }
    }

    fn predict_one(&self, row: &[f64]) -> f64 {
        match self {
            AnyRegressor::Exact(t) => t.predict_one(row),
            AnyRegressor::Mlp(m) => m.predict_one(row),
        }
    }

    fn predict(&self, features: &FeatureMatrix) -> Vec<f64> {
        match self {
            AnyRegressor::Exact(t) => t.predict(features),
            AnyRegressor::Mlp(m) => m.predict(features),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_table_reproduces_training_targets() {
        let mut x = FeatureMatrix::new(3);
        x.push_row(&[0.0, 1.0, 0.5]);
        x.push_row(&[1.0, 0.0, 0.25]);
        let y = vec![2.5, -1.0];
        let mut table = ExactTable::new();
        table.fit(&x, &y).unwrap();
        assert_eq!(table.predict(&x), y);
        // Unseen rows predict the zero initialization.
        assert_eq!(table.predict_one(&[9.0, 9.0, 9.0]), 0.0);
        // Refit replaces, never accumulates.
        table.fit(&x, &[0.5, 0.5]).unwrap();
        assert_eq!(table.predict(&x), vec![0.5, 0.5]);
        assert_eq!(table.len(), 2);
    }
}
