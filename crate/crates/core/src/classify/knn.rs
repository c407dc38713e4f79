use serde::{Deserialize, Serialize};

use super::scaler::Standardizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Stores standardized training rows. Probabilities are neighbour label
/// fractions among the `k` nearest by Euclidean distance; equal distances
/// go to the lower training index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_classes: usize,
    pub scaler: Standardizer,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl KnnModel {
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let z = self.scaler.transform_row(row);
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for i in self.neighbours(row) {
            p[self.y[i]] += 1.0 / self.k as f64;
        }
        p
    }
}

pub fn train_knn(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &KnnParams) -> Result<KnnModel> {
    if params.k == 0 || params.k > x.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {} needs 1..={} training rows",
            params.k,
            x.len()
        )));
    }
    let scaler = Standardizer::fit(x);
    Ok(KnnModel {
        k: params.k,
        n_classes,
        x: scaler.transform(x),
        scaler,
        y: y.to_vec(),
    })
}
