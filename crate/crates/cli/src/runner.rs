//! Benchmark execution and the artifacts it leaves behind.
//!
//! Episodes are independent, so the runner fans them out over a worker
//! pool; results land in per-episode slots, which makes the output order —
//! and therefore every written artifact — identical whatever `--jobs` says.
//! Artifacts are a JSON report (aggregate metrics plus per-episode rows), a
//! CSV rendering of the rows, and a JSONL trace file, all byte-deterministic
//! under fixed seeds.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use homeworld_core::bench::{Benchmark, Report};
use homeworld_core::exec::{run_episode, EpisodeConfig, EpisodeOutcome, EpisodeTrace, PlanSource};
use homeworld_core::registry::ClassRegistry;
use homeworld_core::replan::Similarity;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

/// Why an artifact file could not be read or written.
#[derive(Debug, Error)]
pub enum ArtifactError {
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

fn io_err(path: &Path, source: io::Error) -> ArtifactError {
    ArtifactError::Io { path: path.display().to_string(), source }
}

/// Run every episode of a suite, at most `jobs` at a time. Trace order
/// matches episode order regardless of scheduling.
pub fn run_suite(
    bench: &Benchmark,
    cfg: &EpisodeConfig,
    jobs: usize,
    registry: &ClassRegistry,
    similarity: &(dyn Similarity + Sync),
) -> Vec<EpisodeTrace> {
    let episodes = &bench.episodes;
    let workers = jobs.max(1).min(episodes.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<EpisodeTrace>>> = Mutex::new(vec![None; episodes.len()]);

    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some(episode) = episodes.get(index) else { break };
                let trace = run_episode(
                    &episode.id,
                    &episode.scene,
                    &PlanSource::Template(episode.spec.clone()),
                    &episode.goal,
                    cfg,
                    registry,
                    similarity,
                );
                slots.lock().expect("slot lock")[index] = Some(trace);
            });
        }
    });

    slots
        .into_inner()
        .expect("slot lock")
        .into_iter()
        .map(|t| t.expect("every episode ran"))
        .collect()
}

/// Write a value as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string_pretty(value).expect("serialization is total");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Write items as JSONL, one compact object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), ArtifactError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("serialization is total"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Read a JSONL file; blank lines are skipped, errors carry the line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ArtifactError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut items = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|source| ArtifactError::Parse {
            path: path.display().to_string(),
            line: index + 1,
            source,
        })?;
        items.push(item);
    }
    Ok(items)
}

/// Stable one-word label for an outcome (details live in the trace file).
pub fn outcome_label(outcome: &EpisodeOutcome) -> &'static str {
    match outcome {
        EpisodeOutcome::Success => "success",
        EpisodeOutcome::GoalUnmet => "goal_unmet",
        EpisodeOutcome::InvalidPlan { .. } => "invalid_plan",
        EpisodeOutcome::SubgoalFailed { .. } => "subgoal_failed",
        EpisodeOutcome::OutOfSteps => "out_of_steps",
    }
}

/// Render the per-episode score rows as CSV.
pub fn render_report_csv(report: &Report) -> String {
    let mut out = String::from(
        "id,outcome,success,conditions_met,conditions_total,path_length,expert_length,\
         path_weight,hlp_match,replans,mismatch\n",
    );
    for row in &report.scores {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6},{},{},{}",
            row.id,
            outcome_label(&row.outcome),
            row.success,
            row.conditions_met,
            row.conditions_total,
            row.path_length,
            row.expert_length,
            row.path_weight,
            row.hlp_match,
            row.replans,
            row.mismatch,
        );
    }
    out
}

/// Write the CSV rendering of a report.
pub fn write_report_csv(path: &Path, report: &Report) -> Result<(), ArtifactError> {
    fs::write(path, render_report_csv(report)).map_err(|e| io_err(path, e))
}

/// Human-readable aggregate summary for standard output.
pub fn render_summary(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "episodes   {}", report.episodes);
    let _ = writeln!(out, "successes  {}", report.successes);
    let _ = writeln!(out, "SR         {:.4}", report.sr);
    let _ = writeln!(out, "GC         {:.4}", report.gc);
    let _ = writeln!(out, "PLWSR      {:.4}", report.plwsr);
    let _ = writeln!(out, "PLWGC      {:.4}", report.plwgc);
    let _ = writeln!(out, "HLP ACC    {:.4}", report.hlp_acc);
    out
}
