//! Parameter sweeps: a base scenario and a grid of overrides, run in parallel.
//!
//! ```toml
//! base = "case2-optimal"
//!
//! [grid]
//! "sheets.0.params.allee_threshold" = [0.1, 0.2]
//! "demand" = [20.0, 30.0]
//! ```
//!
//! Grid keys are dotted paths into the scenario; numeric segments index arrays.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::{RunRecord, RunStatus};
use crate::metrics::{cumulative_production, pinch_off_time, production_drop_time};
use crate::scenario::{resolve, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Preset name or scenario file, relative to the sweep file.
    pub base: String,
    pub grid: BTreeMap<String, Vec<serde_json::Value>>,
}

impl SweepSpec {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Every grid point as a validated scenario, in row-major order of the sorted keys.
    pub fn expand(&self, base: &ScenarioSpec) -> Result<Vec<SweepPoint>> {
        let mut points = vec![(Vec::new(), serde_json::to_value(base)?)];
        for (key, values) in &self.grid {
            if values.is_empty() {
                return Err(Error::invalid(format!("grid.{key}"), "needs at least one value"));
            }
            let mut next = Vec::with_capacity(points.len() * values.len());
            for (assigned, doc) in &points {
                for v in values {
                    let mut doc = doc.clone();
                    set_path(&mut doc, key, v.clone())?;
                    let mut assigned: Vec<(String, serde_json::Value)> = assigned.clone();
                    assigned.push((key.clone(), v.clone()));
                    next.push((assigned, doc));
                }
            }
            points = next;
        }
        points
            .into_iter()
            .enumerate()
            .map(|(i, (assigned, doc))| {
                let mut spec: ScenarioSpec =
                    serde_json::from_value(doc).map_err(|e| Error::invalid("grid", e.to_string()))?;
                spec.name = format!("{}-{i:03}", base.name);
                spec.validate()?;
                Ok(SweepPoint {
                    hash: spec_hash(&spec),
                    spec,
                    assigned,
                })
            })
            .collect()
    }
}

fn set_path(doc: &mut serde_json::Value, path: &str, value: serde_json::Value) -> Result<()> {
    let missing = || Error::invalid(format!("grid.{path}"), "no such key in the scenario");
    let mut cur = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            serde_json::Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| missing())?;
                items.get_mut(idx).ok_or_else(missing)?
            }
            serde_json::Value::Object(map) => {
                if last {
                    // optional keys may be absent from the serialized base
                    map.entry(seg.to_string()).or_insert(serde_json::Value::Null)
                } else {
                    map.get_mut(*seg).ok_or_else(missing)?
                }
            }
            _ => return Err(missing()),
        };
    }
    *cur = value;
    Ok(())
}

/// SHA-256 of the scenario's canonical TOML form.
pub fn spec_hash(spec: &ScenarioSpec) -> String {
    let digest = Sha256::digest(spec.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub spec: ScenarioSpec,
    pub assigned: Vec<(String, serde_json::Value)>,
    pub hash: String,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub point: SweepPoint,
    pub outcome: std::result::Result<RunRecord, String>,
}

pub fn load(path: &Path) -> Result<(SweepSpec, ScenarioSpec)> {
    let text = std::fs::read_to_string(path)?;
    let sweep = SweepSpec::from_toml(&text, &path.display().to_string())?;
    let relative = path.parent().unwrap_or(Path::new(".")).join(&sweep.base);
    let base = if relative.exists() {
        ScenarioSpec::load(&relative)?
    } else {
        resolve(&sweep.base)?
    };
    Ok((sweep, base))
}

/// Runs every point; a failing point is reported rather than aborting the sweep.
pub fn run(points: Vec<SweepPoint>) -> Vec<SweepResult> {
    points
        .into_par_iter()
        .map(|point| {
            let outcome = point.spec.run().map_err(|e| e.to_string());
            SweepResult { point, outcome }
        })
        .collect()
}

/// One row per point: the grid values, the spec hash, the status, the
/// first pinch-off time, the time of the 50% production drop and the
/// cumulative production of the first sheet.
pub fn write_summary<W: Write>(sweep: &SweepSpec, results: &[SweepResult], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.into());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["name".to_string()];
    header.extend(sweep.grid.keys().cloned());
    header.extend(
        ["spec_hash", "status", "pinch_off_time", "drop_time", "cumulative_G"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header).map_err(io)?;
    let time = |t: Option<f64>| t.map_or(String::new(), |t| t.to_string());
    for r in results {
        let mut row = vec![r.point.spec.name.clone()];
        row.extend(r.point.assigned.iter().map(|(_, v)| v.to_string()));
        row.push(r.point.hash.clone());
        match &r.outcome {
            Ok(rec) => {
                row.push(match &rec.status {
                    RunStatus::Completed => "completed".to_string(),
                    RunStatus::Collapsed { t, .. } => format!("collapsed at {t}"),
                });
                if rec.sheet_names.is_empty() {
                    row.extend([String::new(), String::new(), String::new()]);
                } else {
                    row.push(time(pinch_off_time(rec, 0)));
                    row.push(time(production_drop_time(rec, 0, 0.5)));
                    row.push(cumulative_production(rec, 0).to_string());
                }
            }
            Err(e) => {
                row.push(format!("failed: {e}"));
                row.extend([String::new(), String::new(), String::new()]);
            }
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
