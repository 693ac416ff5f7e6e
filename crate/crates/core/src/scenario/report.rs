use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::ScenarioOutcome;
use crate::error::{Error, Result};
use crate::flows::IntegratorMeta;
use crate::space::SpaceDescriptor;
use crate::verify::{Status, VerificationReport};

/// The verification part of an outcome, as stored in `reports.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReports {
    pub scenario: String,
    pub system: String,
    pub expect_violation: bool,
    pub status: Status,
    pub reports: Vec<VerificationReport>,
}

impl ScenarioReports {
    pub fn from_outcome(o: &ScenarioOutcome) -> ScenarioReports {
        ScenarioReports {
            scenario: o.scenario.name.clone(),
            system: o.scenario.system.kind().into(),
            expect_violation: o.scenario.expect_violation,
            status: o.status(),
            reports: o.reports.clone(),
        }
    }
}

#[derive(Serialize)]
struct TrajectoryMeta<'a> {
    space: &'a SpaceDescriptor,
    horizon: f64,
    samples: usize,
    exported_every: usize,
    meta: &'a IntegratorMeta,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Writes one directory per scenario plus `summary.txt`, `summary.csv` and
/// `index.json` at the top. Contents depend only on the inputs.
pub fn write_outcomes(dir: &Path, outcomes: &[ScenarioOutcome]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut all = Vec::new();
    for o in outcomes {
        let sub = dir.join(&o.scenario.name);
        fs::create_dir_all(&sub)?;
        let every = o.scenario.export_every.unwrap_or(1);
        let traj = if every > 1 { o.trajectory.decimated(every) } else { o.trajectory.clone() };
        traj.write_csv(BufWriter::new(fs::File::create(sub.join("trajectory.csv"))?))?;
        let tm = TrajectoryMeta { space: &o.trajectory.space, horizon: o.trajectory.horizon, samples: o.trajectory.samples.len(), exported_every: every, meta: &o.trajectory.meta };
        write_json(&sub.join("trajectory_meta.json"), &tm)?;
        write_json(&sub.join("scenario.json"), &o.scenario)?;
        write_json(&sub.join("certificates.json"), &o.certificates)?;
        let rep = ScenarioReports::from_outcome(o);
        write_json(&sub.join("reports.json"), &rep)?;
        fs::write(sub.join("summary.txt"), render(std::slice::from_ref(&rep), Format::Text)?)?;
        all.push(rep);
    }
    fs::write(dir.join("summary.txt"), render(&all, Format::Text)?)?;
    fs::write(dir.join("summary.csv"), render(&all, Format::Csv)?)?;
    let index: Vec<_> = all.iter().map(|r| serde_json::json!({"scenario": r.scenario, "status": r.status})).collect();
    write_json(&dir.join("index.json"), &index)?;
    Ok(())
}

/// Reads every `*/reports.json` under `dir`, sorted by scenario name.
pub fn load_reports(dir: &Path) -> Result<Vec<ScenarioReports>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", dir.display())));
    }
    let mut out = Vec::new();
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path().join("reports.json");
        if p.is_file() {
            out.push(serde_json::from_str(&fs::read_to_string(&p)?)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("no reports found under {}", dir.display())));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(Error::Config(format!("unknown format {s:?}; use json, csv or text"))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6e}"))
}

pub fn render(list: &[ScenarioReports], format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(list)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["scenario", "claim", "status", "margin", "tolerance", "checked", "certified"]).map_err(csv_err)?;
            for s in list {
                for r in &s.reports {
                    w.write_record([
                        s.scenario.as_str(),
                        r.claim.as_str(),
                        r.status.as_str(),
                        &opt(r.margin),
                        &format!("{:.6e}", r.tolerance),
                        &r.checked.to_string(),
                        &r.certified.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
        }
        Format::Text => {
            let mut out = String::new();
            for s in list {
                let tag = if s.expect_violation { " (negative scenario)" } else { "" };
                out += &format!("{} [{}] {}{}\n", s.scenario, s.system, s.status.as_str(), tag);
                for r in &s.reports {
                    let note = if r.certified { "" } else { " (sampled)" };
                    out += &format!("  {:<24} {:<60} margin={} n={}{}\n", r.status.as_str(), r.claim, opt(r.margin), r.checked, note);
                }
            }
            Ok(out)
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
