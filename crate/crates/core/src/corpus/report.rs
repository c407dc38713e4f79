//! Report bundle: fixed-format copies of the stage outputs under `report/`
//! with an `index.json` listing each section and whether it is present.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stage outputs the report reads, relative to the output directory.
pub const REPORT_SOURCES: [&str; 6] = [
    "train/accuracy_grid.csv",
    "train/settings.json",
    "explain/attribution.csv",
    "explain/correlation.csv",
    "speed/speed.csv",
    "speed/histogram.csv",
];

pub const REPORT_DIR: &str = "report";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionStatus {
    Ok,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub status: SectionStatus,
    /// Relative to the report directory; empty when missing.
    pub files: Vec<String>,
    /// Stage outputs the section is built from.
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportIndex {
    pub sections: Vec<Section>,
}

type Cell = fn(&str) -> Result<String>;

fn keep(s: &str) -> Result<String> {
    Ok(s.to_string())
}

fn num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::InvalidArgument(format!("not a number: '{s}'")))
}

fn fixed4(s: &str) -> Result<String> {
    if s.is_empty() {
        return Ok(String::new());
    }
    Ok(format!("{:.4}", num(s)?))
}

fn sci(s: &str) -> Result<String> {
    Ok(format!("{:.3e}", num(s)?))
}

/// Rewrites a CSV applying `cells[i]` to column `i`.
fn reformat(src: &Path, dst: &Path, cells: &[Cell]) -> Result<()> {
    let mut r = csv::Reader::from_path(src)?;
    let mut w = csv::Writer::from_path(dst)?;
    w.write_record(r.headers()?)?;
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(i, v)| cells.get(i).map_or(Ok(v.to_string()), |f| f(v)))
            .collect::<Result<Vec<String>>>()?;
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(dst, e))
}

fn copy(src: &Path, dst: &Path) -> Result<()> {
    std::fs::copy(src, dst).map(|_| ()).map_err(|e| Error::io(src, e))
}

/// Builds the bundle from whatever stage outputs exist. The directory is
/// rebuilt from scratch so no stale section survives.
pub fn write_report(out: &Path) -> Result<Vec<PathBuf>> {
    let dir = out.join(REPORT_DIR);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    type Build = fn(&Path, &Path) -> Result<()>;
    let specs: [(&str, &[&str], &[&str], Build); 4] = [
        (
            "accuracy_grid",
            &["train/accuracy_grid.csv", "train/settings.json"],
            &["accuracy_grid.csv", "accuracy_grid_settings.json"],
            |o, d| {
                copy(&o.join("train/accuracy_grid.csv"), &d.join("accuracy_grid.csv"))?;
                copy(&o.join("train/settings.json"), &d.join("accuracy_grid_settings.json"))
            },
        ),
        ("attribution", &["explain/attribution.csv"], &["attribution.csv"], |o, d| {
            reformat(&o.join("explain/attribution.csv"), &d.join("attribution.csv"), &[keep, keep, fixed4, keep])
        }),
        ("correlation", &["explain/correlation.csv"], &["correlation.csv"], |o, d| {
            reformat(
                &o.join("explain/correlation.csv"),
                &d.join("correlation.csv"),
                &[keep, fixed4, sci, fixed4, sci, keep, keep],
            )
        }),
        (
            "speed",
            &["speed/speed.csv", "speed/histogram.csv"],
            &["speed.csv", "speed_histogram.csv"],
            |o, d| {
                reformat(&o.join("speed/speed.csv"), &d.join("speed.csv"), &[keep, keep, fixed4, fixed4, fixed4])?;
                copy(&o.join("speed/histogram.csv"), &d.join("speed_histogram.csv"))
            },
        ),
    ];

    let mut sections = Vec::new();
    let mut outputs = Vec::new();
    for (name, sources, files, build) in specs {
        let present = sources.iter().all(|s| out.join(s).exists());
        if present {
            build(out, &dir)?;
            outputs.extend(files.iter().map(|f| Path::new(REPORT_DIR).join(f)));
        } else {
            log::warn!("report: section {name} missing");
        }
        sections.push(Section {
            name: name.to_string(),
            status: if present { SectionStatus::Ok } else { SectionStatus::Missing },
            files: if present { files.iter().map(|s| s.to_string()).collect() } else { Vec::new() },
            sources: sources.iter().map(|s| s.to_string()).collect(),
        });
    }
    let index = dir.join("index.json");
    let text = serde_json::to_string_pretty(&ReportIndex { sections })? + "\n";
    std::fs::write(&index, text).map_err(|e| Error::io(&index, e))?;
    outputs.push(Path::new(REPORT_DIR).join("index.json"));
    Ok(outputs)
}

pub fn read_index(out: &Path) -> Result<ReportIndex> {
    let path = out.join(REPORT_DIR).join("index.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
