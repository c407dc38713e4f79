use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Segment,
    Extract,
    Pair,
    Train,
    Explain,
    Speed,
    Report,
}

impl Stage {
    /// Execution order.
    pub const ALL: [Stage; 7] = [
        Stage::Segment,
        Stage::Extract,
        Stage::Pair,
        Stage::Train,
        Stage::Explain,
        Stage::Speed,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Segment => "segment",
            Stage::Extract => "extract",
            Stage::Pair => "pair",
            Stage::Train => "train",
            Stage::Explain => "explain",
            Stage::Speed => "speed",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this one reads. Explaining single clips needs
    /// only features; the report stage reads whatever exists and marks the
    /// rest missing.
    pub fn dependencies(self, pair_explain: bool) -> &'static [Stage] {
        match self {
            Stage::Segment | Stage::Report => &[],
            Stage::Extract => &[Stage::Segment],
            Stage::Pair => &[Stage::Extract],
            Stage::Train => &[Stage::Extract, Stage::Pair],
            Stage::Explain if pair_explain => &[Stage::Extract, Stage::Pair],
            Stage::Explain => &[Stage::Extract],
            Stage::Speed => &[Stage::Segment],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub stage: Stage,
    pub input_hash: String,
    pub config_hash: String,
    /// Relative to the output directory.
    pub output_paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLedger {
    pub entries: BTreeMap<Stage, LedgerEntry>,
}

pub const LEDGER_FILE: &str = "ledger.json";

impl RunLedger {
    pub fn load(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(LEDGER_FILE);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(LEDGER_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(&path, e))
    }

    /// The stage's outputs are recorded and still on disk.
    pub fn complete(&self, stage: Stage, out_dir: &Path) -> bool {
        self.entries
            .get(&stage)
            .is_some_and(|e| e.output_paths.iter().all(|p| out_dir.join(p).exists()))
    }

    pub fn is_fresh(&self, stage: Stage, input_hash: &str, config_hash: &str, out_dir: &Path) -> bool {
        self.complete(stage, out_dir)
            && self.entries.get(&stage).is_some_and(|e| e.input_hash == input_hash && e.config_hash == config_hash)
    }
}

/// SHA-256 over length-prefixed parts, so part boundaries matter.
#[derive(Default)]
pub struct ContentHash(Sha256);

impl ContentHash {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, v: &T) -> Result<&mut Self> {
        Ok(self.bytes(&serde_json::to_vec(v)?))
    }

    /// Adds the file's digest, or a marker when it does not exist.
    pub fn file(&mut self, path: &Path) -> Result<&mut Self> {
        match std::fs::read(path) {
            Ok(b) => Ok(self.str("file").bytes(&Sha256::digest(&b))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(self.str("absent")),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn finish(&self) -> String {
        hex::encode(self.0.clone().finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn part_boundaries_change_the_digest() {
        let a = ContentHash::new().str("ab").str("c").finish();
        let b = ContentHash::new().str("a").str("bc").finish();
        assert_ne!(a, b);
        assert_eq!(a, ContentHash::new().str("ab").str("c").finish());
    }

    #[test]
    fn empty_digest_is_sha256_of_nothing() {
        assert_eq!(
            ContentHash::new().finish(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn ledger_round_trip_and_freshness() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.csv"), "a").unwrap();
        let mut l = RunLedger::default();
        l.entries.insert(
            Stage::Pair,
            LedgerEntry {
                stage: Stage::Pair,
                input_hash: "i".into(),
                config_hash: "c".into(),
                output_paths: vec!["x.csv".into()],
            },
        );
        l.save(dir.path()).unwrap();
        let l = RunLedger::load(dir.path()).unwrap();
        assert!(l.is_fresh(Stage::Pair, "i", "c", dir.path()));
        assert!(!l.is_fresh(Stage::Pair, "i", "other", dir.path()));
        std::fs::remove_file(dir.path().join("x.csv")).unwrap();
        assert!(!l.is_fresh(Stage::Pair, "i", "c", dir.path()));
    }
}
