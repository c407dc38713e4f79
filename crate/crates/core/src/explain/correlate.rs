use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::pearson::pearson;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rng;

pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PearsonRow {
    pub feature_name: String,
    pub r_host: f64,
    pub p_host: f64,
    pub r_random: f64,
    pub p_random: f64,
    pub significant: bool,
    pub n: usize,
    /// A side had zero variance; r is reported as 0 and p as 1.
    pub degenerate: bool,
}

/// A feature vector tagged with the video it came from.
#[derive(Debug, Clone)]
pub struct VideoFeatures {
    pub video_id: String,
    pub features: FeatureVector,
}

fn r_p(x: &[f64], y: &[f64]) -> Result<Option<(f64, f64)>> {
    match pearson(x, y) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Correlates each named dimension of the dog clips with the mean host
/// speech of the same video, and again with host rows shuffled across dog
/// clips as a baseline.
pub fn correlate_pairs(
    dogs: &[VideoFeatures],
    hosts: &[VideoFeatures],
    feature_names: &[String],
    seed: u64,
) -> Result<Vec<PearsonRow>> {
    let mut host_sum: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for h in hosts {
        let e = host_sum
            .entry(h.video_id.as_str())
            .or_insert_with(|| (vec![0.0; h.features.values.len()], 0));
        if e.0.len() != h.features.values.len() {
            return Err(Error::DimensionMismatch {
                expected: e.0.len(),
                got: h.features.values.len(),
            });
        }
        e.0.iter_mut().zip(&h.features.values).for_each(|(a, b)| *a += b);
        e.1 += 1;
    }
    let mut matched: Vec<(&FeatureVector, Vec<f64>)> = Vec::new();
    let mut unmatched = BTreeSet::new();
    for d in dogs {
        match host_sum.get(d.video_id.as_str()) {
            Some((sum, n)) => matched.push((&d.features, sum.iter().map(|s| s / *n as f64).collect())),
            None => {
                unmatched.insert(d.video_id.clone());
            }
        }
    }
    if matched.is_empty() {
        let list: Vec<String> = unmatched.into_iter().collect();
        return Err(Error::InvalidArgument(format!(
            "no dog clip has host speech from the same video; unmatched videos: {}",
            if list.is_empty() { "(none)".to_string() } else { list.join(", ") }
        )));
    }
    let host_names = &hosts[0].features.names;
    let mut perm: Vec<usize> = (0..matched.len()).collect();
    perm.shuffle(&mut rng::rng(seed));

    feature_names
        .iter()
        .map(|name| {
            let di = matched[0].0.names.iter().position(|n| n == name);
            let hi = host_names.iter().position(|n| n == name);
            let (Some(di), Some(hi)) = (di, hi) else {
                return Err(Error::InvalidArgument(format!("unknown feature {name}")));
            };
            let x: Vec<f64> = matched.iter().map(|(d, _)| d.values[di]).collect();
            let y: Vec<f64> = matched.iter().map(|(_, h)| h[hi]).collect();
            let y_rand: Vec<f64> = perm.iter().map(|&j| y[j]).collect();
            let host = r_p(&x, &y)?;
            let rand = r_p(&x, &y_rand)?;
            let (r_host, p_host) = host.unwrap_or((0.0, 1.0));
            let (r_random, p_random) = rand.unwrap_or((0.0, 1.0));
            Ok(PearsonRow {
                feature_name: name.clone(),
                r_host,
                p_host,
                r_random,
                p_random,
                significant: p_host < SIGNIFICANCE,
                n: x.len(),
                degenerate: host.is_none() || rand.is_none(),
            })
        })
        .collect()
}

pub fn write_correlation_csv(rows: &[PearsonRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature_name", "r_host", "p_host", "r_random", "p_random", "significant", "n"])?;
    for r in rows {
        w.write_record([
            r.feature_name.clone(),
            r.r_host.to_string(),
            r.p_host.to_string(),
            r.r_random.to_string(),
            r.p_random.to_string(),
            r.significant.to_string(),
            r.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
