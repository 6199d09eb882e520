//! Instruction/plan datasets and their quality audit.
//!
//! A dataset is JSONL: one `{"instruction": ..., "subgoals": [...]}` record
//! per line. The QA pass grounds each record — parses the instruction,
//! matches every subgoal phrase, then symbolically validates the plan
//! against the instruction's goal — and aggregates every complaint into a
//! histogram, so a corpus produced by an external planner can be screened
//! before anything is executed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use homeworld_core::plan::{match_phrase, parse_instruction, PlanError};
use homeworld_core::registry::ClassRegistry;
use homeworld_core::validate::{validate_plan, GoalSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One dataset line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub instruction: String,
    pub subgoals: Vec<String>,
}

/// Everything wrong with one record. Records with no findings are omitted
/// from the report's `findings` list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordFindings {
    /// 1-based line number in the dataset file.
    pub record: usize,
    pub instruction: String,
    pub findings: Vec<String>,
}

/// Aggregated audit of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QaReport {
    pub total: u32,
    pub valid: u32,
    /// Finding code → occurrence count, over all records.
    pub histogram: BTreeMap<String, u32>,
    pub findings: Vec<RecordFindings>,
}

impl QaReport {
    /// Share of records with zero findings; an empty dataset passes
    /// vacuously.
    pub fn valid_fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            f64::from(self.valid) / f64::from(self.total)
        }
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "dataset QA: {} records, {} valid ({:.1}%)",
            self.total,
            self.valid,
            self.valid_fraction() * 100.0
        );
        if !self.histogram.is_empty() {
            let width = self.histogram.keys().map(|k| k.len()).max().unwrap_or(0).max(7);
            let _ = writeln!(out, "\n{:<width$}  count", "finding");
            for (code, count) in &self.histogram {
                let _ = writeln!(out, "{code:<width$}  {count:>5}");
            }
        }
        out
    }
}

/// Why a dataset file could not be read at all. Malformed *plans* are QA
/// findings; malformed *JSON* is this.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Read a JSONL dataset; blank lines are skipped.
pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|source| DatasetError::Parse {
            path: path.display().to_string(),
            line: index + 1,
            source,
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Write records as JSONL, one compact object per line.
pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let mut text = String::new();
    for record in records {
        text.push_str(&serde_json::to_string(record).expect("record serialization is total"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Histogram key for a parse/match failure, in the same kebab style the
/// validator's finding codes use.
fn plan_error_code(err: &PlanError) -> &'static str {
    match err {
        PlanError::UnknownObject(_) => "unknown-object",
        PlanError::UnsupportedTemplate(_) => "unsupported-template",
        PlanError::MalformedPhrase(_) => "malformed-phrase",
        PlanError::NoFeasibleAppliance(_) => "no-feasible-appliance",
    }
}

/// Audit records already in memory. `record` numbers in the report are
/// 1-based positions in the slice.
pub fn qa_records(records: &[DatasetRecord], registry: &ClassRegistry) -> QaReport {
    let mut report = QaReport {
        total: records.len() as u32,
        valid: 0,
        histogram: BTreeMap::new(),
        findings: Vec::new(),
    };

    for (index, record) in records.iter().enumerate() {
        let mut findings: Vec<String> = Vec::new();
        let bump = |histogram: &mut BTreeMap<String, u32>, code: String| {
            *histogram.entry(code).or_insert(0) += 1;
        };

        // The instruction supplies the goal the plan is judged against and
        // the container hint ("from the X") for dependency checking.
        let (goal, hints) = match parse_instruction(&record.instruction, registry) {
            Ok(parsed) => {
                let mut hints = BTreeMap::new();
                if let Some(container) = &parsed.spec.container {
                    hints.insert(parsed.spec.objects[0].clone(), container.clone());
                }
                (parsed.spec.goal.clone(), hints)
            }
            Err(e) => {
                bump(&mut report.histogram, plan_error_code(&e).to_owned());
                findings.push(format!("instruction: {e}"));
                (GoalSpec::default(), BTreeMap::new())
            }
        };

        let mut binaries = Vec::with_capacity(record.subgoals.len());
        let mut grounded = true;
        for (i, phrase) in record.subgoals.iter().enumerate() {
            match match_phrase(phrase, registry) {
                Ok(b) => binaries.push(b),
                Err(e) => {
                    bump(&mut report.histogram, plan_error_code(&e).to_owned());
                    findings.push(format!("subgoal {i}: {e}"));
                    grounded = false;
                    break;
                }
            }
        }

        if grounded {
            for f in validate_plan(&binaries, &goal, &hints, registry) {
                bump(&mut report.histogram, f.code.to_string());
                findings.push(format!("subgoal {}: {}: {}", f.subgoal_index, f.code, f.detail));
            }
        }

        if findings.is_empty() {
            report.valid += 1;
        } else {
            report.findings.push(RecordFindings {
                record: index + 1,
                instruction: record.instruction.clone(),
                findings,
            });
        }
    }
    report
}

/// Audit a dataset file.
pub fn qa_dataset(path: &Path, registry: &ClassRegistry) -> Result<QaReport, DatasetError> {
    Ok(qa_records(&read_dataset(path)?, registry))
}
