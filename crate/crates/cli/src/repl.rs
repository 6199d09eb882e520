//! The interactive solve loop: type an instruction, watch the agent run it.
//!
//! Each line of input is planned — by the builtin template parser when the
//! sentence fits one of the twelve patterns (prefix clauses included), else
//! by the external planner service when one is configured — then executed
//! against the scene as loaded, printing the plan, every subgoal outcome,
//! any substitution the agent performed, and the final verdict. Instructions
//! are one-shot: the world resets between lines, so transcripts are
//! reproducible. An unplannable line is reported and the loop continues;
//! end-of-input ends the session.
//!
//! Externally planned instructions carry no goal specification, so their
//! verdict is simply whether every subgoal completed.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use homeworld_core::exec::{run_episode_mapped, EpisodeConfig, EpisodeOutcome, EpisodeTrace};
use homeworld_core::exec::PlanSource;
use homeworld_core::plan::{parse_instruction, plan_prefix_adapt, Verb};
use homeworld_core::registry::ClassRegistry;
use homeworld_core::replan::Similarity;
use homeworld_core::scene::Scene;
use homeworld_core::validate::GoalSpec;

use crate::http::PlannerClient;
use crate::pgm;
use crate::runner::outcome_label;

/// Everything a solve session needs.
pub struct Solver<'a> {
    pub scene: &'a Scene,
    pub registry: &'a ClassRegistry,
    pub similarity: &'a dyn Similarity,
    /// Fallback for instructions the template parser rejects.
    pub planner: Option<&'a PlannerClient>,
    pub cfg: EpisodeConfig,
    /// When set, the agent's final semantic map is exported here per
    /// instruction as PGM channels plus a manifest.
    pub map_out: Option<PathBuf>,
}

/// Run the read–plan–execute loop until end-of-input.
pub fn solve_loop(
    solver: &Solver,
    input: &mut dyn BufRead,
    output: &mut dyn Write,
) -> io::Result<()> {
    let mut episode = 0u32;
    loop {
        write!(output, "instruction> ")?;
        output.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            writeln!(output)?;
            return Ok(());
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        episode += 1;
        run_one(solver, episode, text, output)?;
    }
}

/// Plan one instruction: subgoal phrases plus the goal to judge them by.
fn plan_instruction(solver: &Solver, text: &str) -> Result<(Vec<String>, GoalSpec), String> {
    match parse_instruction(text, solver.registry) {
        Ok(parsed) => {
            let phrases = plan_prefix_adapt(&parsed.spec, &parsed.prefix, solver.registry)
                .map_err(|e| e.to_string())?;
            let phrases = phrases.into_iter().map(|p| p.0).collect();
            Ok((phrases, parsed.spec.goal))
        }
        Err(template_err) => {
            let Some(client) = solver.planner else {
                return Err(format!("{template_err}; no --planner-endpoint configured"));
            };
            let classes: Vec<String> =
                solver.registry.class_names().map(str::to_owned).collect();
            let phrases = client
                .plan(text, None, &classes, solver.registry)
                .map_err(|e| e.to_string())?;
            Ok((phrases, GoalSpec::default()))
        }
    }
}

fn print_trace(trace: &EpisodeTrace, output: &mut dyn Write) -> io::Result<()> {
    for result in &trace.subgoal_results {
        let verb = match result.binary.verb {
            Verb::Find => "find",
            Verb::Pickup => "pick up",
            Verb::Put => "put",
            Verb::Open => "open",
            Verb::Close => "close",
            Verb::ToggleOn => "toggle on",
            Verb::ToggleOff => "toggle off",
            Verb::Slice => "slice",
        };
        writeln!(
            output,
            "  [{}] {} {} ({} steps)",
            if result.completed { "done" } else { "fail" },
            verb,
            result.binary.arg,
            result.steps,
        )?;
    }
    for record in &trace.replans {
        let d = &record.decision;
        match &d.chosen {
            Some(substitute) => {
                let score = d
                    .scores
                    .iter()
                    .find(|(name, _)| name == substitute)
                    .map(|(_, s)| *s)
                    .unwrap_or(0.0);
                writeln!(
                    output,
                    "  replanned subgoal {}: {} -> {} (similarity {:.2})",
                    record.subgoal_index, d.failed_class, substitute, score,
                )?;
            }
            None => writeln!(
                output,
                "  replanned subgoal {}: no substitute for {}",
                record.subgoal_index, d.failed_class,
            )?,
        }
    }
    match &trace.final_outcome {
        EpisodeOutcome::InvalidPlan { detail } => writeln!(output, "  rejected: {detail}")?,
        EpisodeOutcome::SubgoalFailed { index, detail } => {
            writeln!(output, "  failed at subgoal {index}: {detail}")?
        }
        _ => {}
    }
    writeln!(
        output,
        "status: {} ({} actions, goal {}/{})",
        outcome_label(&trace.final_outcome),
        trace.path_length,
        trace.conditions_met,
        trace.conditions_total,
    )
}

fn run_one(
    solver: &Solver,
    episode: u32,
    text: &str,
    output: &mut dyn Write,
) -> io::Result<()> {
    let (phrases, goal) = match plan_instruction(solver, text) {
        Ok(planned) => planned,
        Err(message) => return writeln!(output, "cannot plan: {message}"),
    };

    writeln!(output, "plan ({} subgoals):", phrases.len())?;
    for (i, phrase) in phrases.iter().enumerate() {
        writeln!(output, "{:>4}. {}", i + 1, phrase)?;
    }

    let id = format!("solve-{episode:03}");
    let (trace, map) = run_episode_mapped(
        &id,
        solver.scene,
        &PlanSource::Phrases(phrases),
        &goal,
        &solver.cfg,
        solver.registry,
        solver.similarity,
    );
    print_trace(&trace, output)?;

    if let Some(dir) = &solver.map_out {
        let written = pgm::export_map(&map, dir, &id)?;
        writeln!(output, "map snapshot: {}", written[0].display())?;
    }
    Ok(())
}
