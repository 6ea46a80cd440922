use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{GaitFeature, FEATURE_DIM};
use crate::error::{Error, Result};

/// Labeled training features, in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureStore {
    entries: Vec<(u64, GaitFeature)>,
}

/// Serialized form of one store entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub label: u64,
    pub vector: Vec<f64>,
}

impl FeatureStore {
    pub fn push(&mut self, label: u64, feature: GaitFeature) {
        self.entries.push((label, feature));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, GaitFeature)] {
        &self.entries
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<u64> {
        let mut c: Vec<u64> = self.entries.iter().map(|e| e.0).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn class_size(&self, label: u64) -> usize {
        self.entries.iter().filter(|e| e.0 == label).count()
    }

    /// Sample weights `1 / |V_n|` of each entry's class.
    pub fn sample_weights(&self) -> Vec<f64> {
        let classes = self.classes();
        let sizes: Vec<usize> = classes.iter().map(|&c| self.class_size(c)).collect();
        self.entries
            .iter()
            .map(|(l, _)| 1.0 / sizes[classes.binary_search(l).expect("label is a class")] as f64)
            .collect()
    }

    /// Subset with the entries whose label satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(u64) -> bool) -> Self {
        Self {
            entries: self.entries.iter().filter(|e| keep(e.0)).cloned().collect(),
        }
    }

    pub fn to_records(&self) -> Vec<StoreRecord> {
        self.entries
            .iter()
            .map(|(l, f)| StoreRecord {
                label: *l,
                vector: f.vector.clone(),
            })
            .collect()
    }

    /// Rebuilds a store from records; vectors are renormalized.
    pub fn from_records(records: &[StoreRecord]) -> Result<Self> {
        let mut store = Self::default();
        for r in records {
            if r.vector.len() != FEATURE_DIM {
                return Err(Error::DimensionMismatch {
                    expected: FEATURE_DIM,
                    got: r.vector.len(),
                });
            }
            store.push(
                r.label,
                GaitFeature::from_raw(r.vector.clone(), r.label, 0)?,
            );
        }
        Ok(store)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_records())?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let records: Vec<StoreRecord> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_records(&records)
    }
}
