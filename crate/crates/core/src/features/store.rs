//! Feature vectors on disk: one CSV per feature set, `clip_id` first,
//! values written with shortest round-trip formatting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{FeatureSetId, FeatureVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FeatureStore {
    dir: PathBuf,
}

impl FeatureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, set: FeatureSetId) -> PathBuf {
        self.dir.join(format!("{set}.csv"))
    }

    pub fn contains(&self, set: FeatureSetId) -> bool {
        self.path(set).is_file()
    }

    pub fn write(&self, set: FeatureSetId, vectors: &[FeatureVector]) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path(set);
        write_csv(&path, set, vectors)?;
        Ok(path)
    }

    pub fn read(&self, set: FeatureSetId) -> Result<Vec<FeatureVector>> {
        let path = self.path(set);
        if !path.is_file() {
            return Err(Error::MissingFeatures(format!(
                "no {set} features at {}",
                path.display()
            )));
        }
        read_csv(&path, set)
    }

    /// Vectors keyed by clip id.
    pub fn read_map(&self, set: FeatureSetId) -> Result<BTreeMap<String, FeatureVector>> {
        Ok(self
            .read(set)?
            .into_iter()
            .map(|v| (v.clip_id.clone(), v))
            .collect())
    }
}

pub fn write_csv(path: &Path, set: FeatureSetId, vectors: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let names: Vec<String> = match vectors.first() {
        Some(v) => v.names.clone(),
        None => Vec::new(),
    };
    let mut header = vec!["clip_id".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for v in vectors {
        if v.set_id != set {
            return Err(Error::FeatureSetMismatch {
                left: set.to_string(),
                right: v.set_id.to_string(),
            });
        }
        if v.names != names {
            return Err(Error::InvalidArgument(format!(
                "{}: feature names differ from the first row",
                v.clip_id
            )));
        }
        let mut rec = vec![v.clip_id.clone()];
        rec.extend(v.values.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv(path: &Path, set: FeatureSetId) -> Result<Vec<FeatureVector>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("clip_id") {
        return Err(Error::InvalidArgument(format!(
            "{}: first column must be clip_id",
            path.display()
        )));
    }
    let names = header[1..].to_vec();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let values = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(format!("{}: bad number '{s}'", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(FeatureVector::new(set, &rec[0], names.clone(), values)?);
    }
    Ok(out)
}
