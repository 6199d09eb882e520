//! The episode executive: runs a subgoal plan against a scene.
//!
//! Each loop iteration observes the world, folds the frame into the
//! semantic map (with the corrective overwrite aimed at the class the
//! active Find is hunting), and then advances the current subgoal by at
//! most one action:
//!
//! - **Find** completes free of charge the moment a detection of the
//!   target class sits within interaction range; otherwise the executive
//!   routes toward the nearest un-dismissed map mark of that class, and
//!   failing that pushes the exploration frontier, sweeping a full turn at
//!   each frontier cell. When exploration is exhausted (or the per-subgoal
//!   budget runs out) and re-planning is enabled, the most similar class
//!   in the *confirmed* inventory substitutes for the missing one and the
//!   rest of the plan is rewritten; a Find that still cannot complete
//!   fails the episode.
//! - **Interactions** target the best current detection of the argument
//!   class (preferring the instance bound by the preceding Find),
//!   auto-approach when out of range, and tolerate one failed attempt
//!   before giving up.
//!
//! Success is judged by ground truth at the end: every goal condition in
//! the scene, not the executive's own bookkeeping.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::grid::Cell;
use crate::nav::{facing_with_clear_line, next_frontier, plan_route, route_to_cell, STOP_WITHIN};
use crate::observe::{observe, Detection, NoiseConfig, Observation};
use crate::plan::{match_phrase, plan_binaries, SubgoalBinary, TaskSpec, Verb};
use crate::registry::ClassRegistry;
use crate::replan::{replan, rewrite_plan, should_trigger, ReplanDecision, Similarity};
use crate::scene::{step, Action, Scene, StepOutcome, INTERACT_RANGE};
use crate::semmap::{
    inventory, project, select_channels, update, ChannelError, SemanticMap,
    DEFAULT_PIXEL_THRESHOLD,
};
use crate::validate::{goal_conditions_met, validate_plan, GoalAtom, GoalSpec};

/// Where the plan comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanSource {
    /// Expand a task spec through the builtin templates.
    Template(TaskSpec),
    /// External subgoal phrases; matched and validated before execution.
    Phrases(Vec<String>),
    /// Pre-grounded binaries, trusted as-is.
    Binaries(Vec<SubgoalBinary>),
}

/// Episode verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EpisodeOutcome {
    /// Every goal condition holds in the final scene.
    Success,
    /// The plan ran to completion but the scene disagrees.
    GoalUnmet,
    /// The plan never started: unmatchable phrase or failed validation.
    InvalidPlan { detail: String },
    /// A subgoal could not be completed.
    SubgoalFailed { index: usize, detail: String },
    /// The step ceiling was hit mid-plan.
    OutOfSteps,
}

impl EpisodeOutcome {
    pub fn is_success(&self) -> bool {
        *self == EpisodeOutcome::Success
    }
}

/// Knobs for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Ceiling on attempted actions.
    pub max_steps: u32,
    /// Allow similarity substitution when a Find exhausts exploration.
    pub replan_enabled: bool,
    /// Apply the corrective map overwrite on the active Find channel.
    pub map_correction_enabled: bool,
    /// Perception noise (off by default).
    pub noise: NoiseConfig,
    /// Pixel count a sighting must strictly exceed to confirm a class.
    pub pixel_threshold: u32,
    /// Actions a single Find may spend before substitution triggers.
    pub explore_budget: u32,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            max_steps: 1000,
            replan_enabled: true,
            map_correction_enabled: true,
            noise: NoiseConfig::off(),
            pixel_threshold: DEFAULT_PIXEL_THRESHOLD,
            explore_budget: 150,
        }
    }
}

/// One attempted action in the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Action ordinal within the episode, 0-based.
    pub step: u32,
    /// Index of the subgoal being served.
    pub subgoal: usize,
    pub action: Action,
    pub outcome: StepOutcome,
}

/// Per-subgoal summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalResult {
    pub binary: SubgoalBinary,
    pub completed: bool,
    /// Actions spent while this subgoal was active.
    pub steps: u32,
}

/// A substitution the executive performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    /// Plan index of the Find that failed.
    pub subgoal_index: usize,
    pub decision: ReplanDecision,
}

/// Full record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub episode_id: String,
    /// The plan as finally executed (after any substitutions).
    pub plan: Vec<SubgoalBinary>,
    pub actions: Vec<TraceStep>,
    pub subgoal_results: Vec<SubgoalResult>,
    pub replans: Vec<ReplanRecord>,
    pub final_outcome: EpisodeOutcome,
    /// Attempted actions, failures included.
    pub path_length: u32,
    pub conditions_met: u32,
    pub conditions_total: u32,
}

/// Classes an episode must track: every plan argument, every goal class,
/// and the sliced forms goals imply.
pub fn goal_classes(
    binaries: &[SubgoalBinary],
    goal: &GoalSpec,
    registry: &ClassRegistry,
) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = binaries.iter().map(|b| b.arg.clone()).collect();
    for atom in &goal.atoms {
        match atom {
            GoalAtom::Placed { object, receptacle, .. } => {
                out.insert(object.clone());
                out.insert(receptacle.clone());
            }
            GoalAtom::Clean { object, .. }
            | GoalAtom::Hot { object, .. }
            | GoalAtom::Cold { object, .. }
            | GoalAtom::Examined { object, .. } => {
                out.insert(object.clone());
            }
            GoalAtom::Sliced { object, .. } => {
                out.insert(object.clone());
                if let Some(sliced) = registry.sliced_form(object) {
                    out.insert(sliced);
                }
            }
        }
    }
    out
}

/// Run an episode from a fresh, empty semantic map.
pub fn run_episode(
    episode_id: &str,
    scene: &Scene,
    source: &PlanSource,
    goal: &GoalSpec,
    cfg: &EpisodeConfig,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
) -> EpisodeTrace {
    run_episode_mapped(episode_id, scene, source, goal, cfg, registry, similarity).0
}

/// Like [`run_episode`], but also hands back the agent's final semantic
/// map — what the agent believed about the world when the episode ended —
/// for inspection and snapshot export. A plan that never starts returns an
/// empty, channel-less map.
pub fn run_episode_mapped(
    episode_id: &str,
    scene: &Scene,
    source: &PlanSource,
    goal: &GoalSpec,
    cfg: &EpisodeConfig,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
) -> (EpisodeTrace, SemanticMap) {
    let empty = || SemanticMap::new(scene.width, scene.height, Vec::new());
    let binaries = match resolve_plan(source, goal, registry) {
        Ok(b) => b,
        Err(detail) => return (invalid(episode_id, detail, scene, goal, registry), empty()),
    };
    let channels = match select_channels(
        &goal_classes(&binaries, goal, registry),
        registry,
        similarity,
    ) {
        Ok(c) => c,
        Err(ChannelError::UnknownClass(c)) => {
            let detail = format!("unknown class {c}");
            return (invalid(episode_id, detail, scene, goal, registry), empty());
        }
        Err(ChannelError::Similarity(e)) => {
            return (invalid(episode_id, e.to_string(), scene, goal, registry), empty());
        }
    };
    let map = SemanticMap::new(scene.width, scene.height, channels);
    run_loop(episode_id, scene, binaries, goal, cfg, registry, similarity, map)
}

/// Run an episode with full ground-truth knowledge: the map starts
/// complete (every cell explored, every object marked) and perception is
/// noise-free. Used to measure expert path lengths and to certify that
/// generated scenes are solvable.
pub fn run_oracle(
    episode_id: &str,
    scene: &Scene,
    binaries: &[SubgoalBinary],
    goal: &GoalSpec,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
) -> EpisodeTrace {
    let channels = match select_channels(
        &goal_classes(binaries, goal, registry),
        registry,
        similarity,
    ) {
        Ok(c) => c,
        Err(e) => return invalid(episode_id, format!("{e:?}"), scene, goal, registry),
    };
    let mut map = SemanticMap::new(scene.width, scene.height, channels);
    for y in 0..scene.height as i32 {
        for x in 0..scene.width as i32 {
            let cell = Cell::new(x, y);
            map.explored.set(&cell);
            if scene.obstacles.contains(&cell) {
                map.obstacles.set(&cell);
            }
        }
    }
    for obj in &scene.objects {
        if registry.get(&obj.class).map(|i| i.is_large()).unwrap_or(false) {
            map.obstacles.set(&obj.cell);
        }
        map.mark(&obj.class, &obj.cell);
    }
    let cfg = EpisodeConfig {
        replan_enabled: false,
        noise: NoiseConfig::off(),
        ..EpisodeConfig::default()
    };
    run_loop(episode_id, scene, binaries.to_vec(), goal, &cfg, registry, similarity, map).0
}

/// A trace for a plan that never started. Goal conditions are still
/// audited against the untouched scene so scoring keeps an honest
/// denominator.
fn invalid(
    episode_id: &str,
    detail: String,
    scene: &Scene,
    goal: &GoalSpec,
    registry: &ClassRegistry,
) -> EpisodeTrace {
    let (met, total) = goal_conditions_met(scene, goal, registry);
    EpisodeTrace {
        episode_id: episode_id.to_owned(),
        plan: Vec::new(),
        actions: Vec::new(),
        subgoal_results: Vec::new(),
        replans: Vec::new(),
        final_outcome: EpisodeOutcome::InvalidPlan { detail },
        path_length: 0,
        conditions_met: met,
        conditions_total: total,
    }
}

fn resolve_plan(
    source: &PlanSource,
    goal: &GoalSpec,
    registry: &ClassRegistry,
) -> Result<Vec<SubgoalBinary>, String> {
    match source {
        PlanSource::Template(spec) => {
            plan_binaries(spec, registry).map_err(|e| e.to_string())
        }
        PlanSource::Phrases(texts) => {
            let mut binaries = Vec::with_capacity(texts.len());
            for text in texts {
                binaries.push(match_phrase(text, registry).map_err(|e| e.to_string())?);
            }
            let findings = validate_plan(&binaries, goal, &BTreeMap::new(), registry);
            if let Some(first) = findings.first() {
                return Err(format!(
                    "plan validation failed with {} finding(s), first at subgoal {}: {} ({})",
                    findings.len(),
                    first.subgoal_index,
                    first.code,
                    first.detail
                ));
            }
            Ok(binaries)
        }
        PlanSource::Binaries(b) => Ok(b.clone()),
    }
}

/// Pick the detection to act on: candidates of `class`, minus excluded
/// ids, preferring `bound`, then those not in `deprioritize`, then nearest
/// (ties by id).
fn pick_detection<'a>(
    obs: &'a Observation,
    class: &str,
    exclude: &BTreeSet<String>,
    deprioritize: &BTreeSet<String>,
    bound: Option<&String>,
) -> Option<&'a Detection> {
    let candidates: Vec<&Detection> = obs
        .detections
        .iter()
        .filter(|d| d.class_name == class && !exclude.contains(&d.object_id))
        .collect();
    if let Some(bound_id) = bound {
        if let Some(d) = candidates.iter().find(|d| &d.object_id == bound_id) {
            return Some(d);
        }
    }
    candidates
        .iter()
        .min_by_key(|d| (deprioritize.contains(&d.object_id), d.distance, d.object_id.clone()))
        .copied()
}

#[allow(clippy::too_many_arguments)]
fn run_loop(
    episode_id: &str,
    scene: &Scene,
    mut binaries: Vec<SubgoalBinary>,
    goal: &GoalSpec,
    cfg: &EpisodeConfig,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
    mut map: SemanticMap,
) -> (EpisodeTrace, SemanticMap) {
    let mut world = scene.clone();
    let mut pixel_history: BTreeMap<String, u32> = BTreeMap::new();

    let mut current = 0usize;
    let mut steps_on_subgoal = 0u32;
    let mut dismissed: BTreeSet<Cell> = BTreeSet::new();
    let mut swept: BTreeSet<Cell> = BTreeSet::new();
    let mut sweep_rotations = 0u32;
    let mut interact_attempts = 0u32;

    let mut used_ids: BTreeSet<String> = BTreeSet::new();
    let mut bound: BTreeMap<String, String> = BTreeMap::new();
    let mut replanned_at: BTreeSet<usize> = BTreeSet::new();

    let mut trace: Vec<TraceStep> = Vec::new();
    let mut results: Vec<SubgoalResult> = Vec::new();
    let mut replans: Vec<ReplanRecord> = Vec::new();
    let mut verdict: Option<EpisodeOutcome> = None;

    macro_rules! act {
        ($action:expr) => {{
            let action: Action = $action;
            let (next, outcome) = step(&world, &action, registry);
            trace.push(TraceStep {
                step: trace.len() as u32,
                subgoal: current,
                action,
                outcome,
            });
            world = next;
            steps_on_subgoal += 1;
            outcome
        }};
    }

    'episode: while current < binaries.len() {
        if trace.len() as u32 >= cfg.max_steps {
            verdict = Some(EpisodeOutcome::OutOfSteps);
            break;
        }

        // Perceive and map.
        let obs = observe(&world, &cfg.noise, registry);
        let sg = binaries[current].clone();
        let find_target = (cfg.map_correction_enabled && sg.verb == Verb::Find)
            .then(|| sg.arg.clone());
        let frame = project(&obs, map.width(), map.height(), map.tracked());
        map = update(&map, &frame, find_target.as_deref());
        for (class, px) in &frame.pixels {
            let best = pixel_history.entry(class.clone()).or_insert(0);
            *best = (*best).max(*px);
        }

        let pose = world.agent.pose();

        if sg.verb == Verb::Find {
            // Complete on a live detection within interaction range.
            if let Some(det) =
                pick_detection(&obs, &sg.arg, &used_ids, &BTreeSet::new(), None)
            {
                if det.distance <= INTERACT_RANGE {
                    bound.insert(sg.arg.clone(), det.object_id.clone());
                    results.push(SubgoalResult {
                        binary: sg.clone(),
                        completed: true,
                        steps: steps_on_subgoal,
                    });
                    current += 1;
                    steps_on_subgoal = 0;
                    dismissed.clear();
                    swept.clear();
                    sweep_rotations = 0;
                    interact_attempts = 0;
                    continue;
                }
            }

            // Head for the nearest surviving map mark of the class.
            let candidates: Vec<Cell> = map
                .plane(&sg.arg)
                .map(|p| p.iter_set().filter(|c| !dismissed.contains(c)).collect())
                .unwrap_or_default();
            if !candidates.is_empty() {
                let route = plan_route(&map, &pose, |p| {
                    candidates.iter().any(|t| {
                        p.cell.chebyshev(t) <= STOP_WITHIN && facing_with_clear_line(&map, p, t)
                    })
                });
                match route {
                    Some(route) if !route.is_empty() => {
                        act!(route[0].clone());
                        continue;
                    }
                    Some(_) => {
                        // Standing at a mark with no detection to show for
                        // it: the mark is stale (or occluded); dismiss
                        // everything this pose vouches for and move on.
                        for t in &candidates {
                            if pose.cell.chebyshev(t) <= STOP_WITHIN
                                && facing_with_clear_line(&map, &pose, t)
                            {
                                dismissed.insert(*t);
                            }
                        }
                        continue;
                    }
                    None => {} // marks unreachable; fall through to explore
                }
            }

            // Exploration, budget permitting.
            let frontier = next_frontier(&map, &pose.cell, &swept);
            let exhausted = frontier.is_none();
            if should_trigger(steps_on_subgoal, exhausted, cfg.explore_budget) {
                if cfg.replan_enabled && !replanned_at.contains(&current) {
                    let inv = inventory(&map, &pixel_history, cfg.pixel_threshold);
                    let mut confirmed = inv.confirmed;
                    confirmed.remove(&sg.arg);
                    if let Some(held) = world.agent.holding.as_deref() {
                        if let Some(obj) = world.object(held) {
                            confirmed.remove(&obj.class);
                        }
                    }
                    let decision =
                        match replan(&binaries[current..], &sg.arg, &confirmed, similarity) {
                            Ok(d) => d,
                            Err(e) => {
                                verdict = Some(EpisodeOutcome::SubgoalFailed {
                                    index: current,
                                    detail: e.to_string(),
                                });
                                break 'episode;
                            }
                        };
                    if let Some(to) = decision.chosen.clone() {
                        let rewritten = rewrite_plan(&binaries[current..], &sg.arg, &to);
                        binaries.truncate(current);
                        binaries.extend(rewritten);
                        replanned_at.insert(current);
                        replans.push(ReplanRecord { subgoal_index: current, decision });
                        steps_on_subgoal = 0;
                        dismissed.clear();
                        swept.clear();
                        sweep_rotations = 0;
                        continue;
                    }
                    verdict = Some(EpisodeOutcome::SubgoalFailed {
                        index: current,
                        detail: format!("no confirmed substitute for {}", sg.arg),
                    });
                    break;
                }
                verdict = Some(EpisodeOutcome::SubgoalFailed {
                    index: current,
                    detail: format!("exploration exhausted hunting {}", sg.arg),
                });
                break;
            }
            match frontier {
                Some(f) if f == pose.cell => {
                    // Sweep a full turn here before moving on.
                    if sweep_rotations < 3 {
                        sweep_rotations += 1;
                        act!(Action::RotateLeft);
                    } else {
                        swept.insert(f);
                        sweep_rotations = 0;
                    }
                    continue;
                }
                Some(f) => match route_to_cell(&map, &pose, &f) {
                    Some(route) if !route.is_empty() => {
                        act!(route[0].clone());
                        continue;
                    }
                    _ => {
                        swept.insert(f);
                        continue;
                    }
                },
                None => unreachable!("exhausted frontier was handled above"),
            }
        }

        // Interaction subgoal. Pickups prefer the instance bound by the
        // preceding Find and shy away from instances already delivered.
        let deprioritize = if sg.verb == Verb::Pickup { used_ids.clone() } else { BTreeSet::new() };
        let det = pick_detection(&obs, &sg.arg, &BTreeSet::new(), &deprioritize, bound.get(&sg.arg))
            .cloned();

        match det {
            Some(det) if det.distance <= INTERACT_RANGE => {
                let id = det.object_id.clone();
                let action = match sg.verb {
                    Verb::Pickup => Action::Pickup(id.clone()),
                    Verb::Put => Action::Put(id.clone()),
                    Verb::Open => Action::Open(id.clone()),
                    Verb::Close => Action::Close(id.clone()),
                    Verb::ToggleOn => Action::ToggleOn(id.clone()),
                    Verb::ToggleOff => Action::ToggleOff(id.clone()),
                    Verb::Slice => Action::Slice(id.clone()),
                    Verb::Find => unreachable!("find handled above"),
                };
                // Capture hand state before a put: the put's effects are
                // described in terms of what was held.
                let held_before = world.agent.holding.clone().and_then(|hid| {
                    world.object(&hid).map(|o| (hid.clone(), o.class.clone(), det.cell))
                });
                let outcome = act!(action);
                match outcome {
                    StepOutcome::Success => {
                        match sg.verb {
                            Verb::Pickup => {
                                bound.insert(sg.arg.clone(), id.clone());
                                used_ids.remove(&id);
                                map.clear(&sg.arg, &det.cell);
                            }
                            Verb::Put => {
                                if let Some((hid, hclass, cell)) = held_before {
                                    used_ids.insert(hid);
                                    map.mark(&hclass, &cell);
                                }
                            }
                            Verb::Slice => {
                                if let Some(sliced) = registry.sliced_form(&sg.arg) {
                                    bound.insert(sliced.clone(), format!("{id}-sliced"));
                                    map.clear(&sg.arg, &det.cell);
                                    map.mark(&sliced, &det.cell);
                                }
                            }
                            _ => {}
                        }
                        results.push(SubgoalResult {
                            binary: sg.clone(),
                            completed: true,
                            steps: steps_on_subgoal,
                        });
                        current += 1;
                        steps_on_subgoal = 0;
                        dismissed.clear();
                        swept.clear();
                        sweep_rotations = 0;
                        interact_attempts = 0;
                    }
                    StepOutcome::Failure(reason) => {
                        interact_attempts += 1;
                        if interact_attempts >= 2 {
                            verdict = Some(EpisodeOutcome::SubgoalFailed {
                                index: current,
                                detail: format!("{:?} {}: {reason}", sg.verb, sg.arg),
                            });
                            break;
                        }
                    }
                }
                continue;
            }
            Some(det) => {
                // Visible but out of reach: approach.
                let target = det.cell;
                let route = plan_route(&map, &pose, |p| {
                    p.cell.chebyshev(&target) <= INTERACT_RANGE
                        && facing_with_clear_line(&map, p, &target)
                });
                if let Some(route) = route {
                    if let Some(first) = route.first() {
                        act!(first.clone());
                        continue;
                    }
                }
                // No route (or already "there" yet out of range, which a
                // fresh observation must settle): fall back to a sweep.
            }
            None => {}
        }

        // No usable detection: approach the nearest map mark, else sweep in
        // place hoping the next heading reveals the target.
        let candidates: Vec<Cell> = map
            .plane(&sg.arg)
            .map(|p| p.iter_set().filter(|c| !dismissed.contains(c)).collect())
            .unwrap_or_default();
        if !candidates.is_empty() {
            let route = plan_route(&map, &pose, |p| {
                candidates.iter().any(|t| {
                    p.cell.chebyshev(t) <= STOP_WITHIN && facing_with_clear_line(&map, p, t)
                })
            });
            if let Some(route) = route {
                if let Some(first) = route.first() {
                    act!(first.clone());
                    continue;
                }
                // Standing at the mark without a detection: dismiss it so
                // the next pass tries elsewhere (or fails honestly).
                for t in &candidates {
                    if pose.cell.chebyshev(t) <= STOP_WITHIN
                        && facing_with_clear_line(&map, &pose, t)
                    {
                        dismissed.insert(*t);
                    }
                }
                continue;
            }
        }
        if sweep_rotations < 3 {
            sweep_rotations += 1;
            act!(Action::RotateLeft);
            continue;
        }
        verdict = Some(EpisodeOutcome::SubgoalFailed {
            index: current,
            detail: format!("{:?} target {} is nowhere in view", sg.verb, sg.arg),
        });
        break;
    }

    let (met, total) = goal_conditions_met(&world, goal, registry);
    let final_outcome = verdict.unwrap_or(if met == total {
        EpisodeOutcome::Success
    } else {
        EpisodeOutcome::GoalUnmet
    });
    let path_length = trace.len() as u32;
    let record = EpisodeTrace {
        episode_id: episode_id.to_owned(),
        plan: binaries,
        actions: trace,
        subgoal_results: results,
        replans,
        final_outcome,
        path_length,
        conditions_met: met,
        conditions_total: total,
    };
    (record, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::TaskType;
    use crate::replan::BuiltinSimilarity;
    use crate::scene::{Agent, ObjectState, SceneObject};
    use crate::grid::Heading;
    use alloc::vec;

    fn reg() -> ClassRegistry {
        ClassRegistry::builtin()
    }

    fn obj(id: &str, class: &str, x: i32, y: i32) -> SceneObject {
        SceneObject {
            id: id.to_owned(),
            class: class.to_owned(),
            cell: Cell::new(x, y),
            state: ObjectState::default(),
            contents: Vec::new(),
        }
    }

    /// Bordered room of the given size, agent at (2,2) facing east.
    fn room(w: i32, h: i32, objects: Vec<SceneObject>) -> Scene {
        let mut obstacles = BTreeSet::new();
        for x in 0..w {
            obstacles.insert(Cell::new(x, 0));
            obstacles.insert(Cell::new(x, h - 1));
        }
        for y in 0..h {
            obstacles.insert(Cell::new(0, y));
            obstacles.insert(Cell::new(w - 1, y));
        }
        let mut objects = objects;
        objects.sort_by(|a, b| a.id.cmp(&b.id));
        Scene {
            width: w as usize,
            height: h as usize,
            obstacles,
            objects,
            agent: Agent { cell: Cell::new(2, 2), heading: Heading::East, holding: None },
            seed: 0,
            step: 0,
        }
    }

    fn spec(tt: TaskType, objects: &[&str], count: u32) -> TaskSpec {
        TaskSpec::new(
            tt,
            objects.iter().map(|s| (*s).to_owned()).collect(),
            count,
            None,
            None,
            &reg(),
        )
    }

    fn run(scene: &Scene, spec: &TaskSpec) -> EpisodeTrace {
        run_episode(
            "test",
            scene,
            &PlanSource::Template(spec.clone()),
            &spec.goal,
            &EpisodeConfig::default(),
            &reg(),
            &BuiltinSimilarity::load(),
        )
    }

    #[test]
    fn pick_and_place_succeeds_end_to_end() {
        let scene = room(
            12,
            12,
            vec![obj("desk-1", "Desk", 9, 9), obj("mug-1", "Mug", 5, 2)],
        );
        let s = spec(TaskType::PickAndPlace, &["Mug", "Desk"], 1);
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
        assert_eq!(trace.conditions_met, trace.conditions_total);
        assert_eq!(trace.subgoal_results.len(), 4);
        assert!(trace.subgoal_results.iter().all(|r| r.completed));
        assert_eq!(trace.path_length, trace.actions.len() as u32);
        assert!(trace.replans.is_empty());
    }

    #[test]
    fn slice_pipeline_parks_the_knife_and_chills_the_slice() {
        let scene = room(
            14,
            14,
            vec![
                obj("fridge-1", "Fridge", 11, 11),
                obj("knife-1", "Knife", 4, 2),
                obj("sink-1", "SinkBasin", 2, 10),
                obj("tomato-1", "Tomato", 7, 3),
            ],
        );
        let s = spec(TaskType::PickAndPlace, &["SlicedTomato", "Fridge"], 1);
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
        assert_eq!(trace.plan.len(), 12);
        // Knife parked in the sink, slice in the fridge, door shut.
        assert_eq!(trace.conditions_met, 2, "sliced + placed");
    }

    #[test]
    fn heat_and_place_runs_the_microwave_cycle() {
        let scene = room(
            12,
            12,
            vec![
                obj("egg-1", "Egg", 4, 2),
                obj("mw-1", "Microwave", 9, 3),
                obj("shelf-1", "Shelf", 3, 9),
            ],
        );
        let s = spec(TaskType::HeatAndPlace, &["Egg", "Shelf"], 1);
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
    }

    #[test]
    fn clean_and_place_washes_in_the_sink() {
        let scene = room(
            12,
            12,
            vec![
                obj("faucet-1", "Faucet", 8, 2),
                obj("sink-1", "SinkBasin", 8, 3),
                obj("spoon-1", "Spoon", 4, 2),
                obj("table-1", "DiningTable", 4, 9),
            ],
        );
        let s = spec(TaskType::CleanAndPlace, &["Spoon", "DiningTable"], 1);
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
    }

    #[test]
    fn examine_toggles_the_lamp_while_holding() {
        let scene = room(
            12,
            12,
            vec![obj("book-1", "Book", 4, 2), obj("lamp-1", "FloorLamp", 9, 8)],
        );
        let s = spec(TaskType::ExamineInLight, &["Book", "FloorLamp"], 1);
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
    }

    #[test]
    fn stack_and_place_carries_the_loaded_receptacle() {
        let scene = room(
            12,
            12,
            vec![
                obj("box-1", "Box", 6, 4),
                obj("card-1", "CreditCard", 3, 2),
                obj("shelf-1", "Shelf", 9, 9),
            ],
        );
        let s = spec(TaskType::StackAndPlace, &["CreditCard", "Box", "Shelf"], 1);
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
        assert_eq!(trace.conditions_met, 2, "card in box, box on shelf");
    }

    #[test]
    fn pick_two_places_two_distinct_instances() {
        let scene = room(
            12,
            12,
            vec![
                obj("pepper-1", "PepperShaker", 4, 2),
                obj("pepper-2", "PepperShaker", 2, 8),
                obj("shelf-1", "Shelf", 9, 5),
            ],
        );
        let s = spec(TaskType::PickTwoAndPlace, &["PepperShaker", "Shelf"], 2);
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
        assert_eq!(trace.conditions_met, 2, "both shakers placed");
    }

    #[test]
    fn find_explores_past_an_interior_wall() {
        let mut scene = room(14, 14, vec![obj("mug-1", "Mug", 11, 11), obj("desk-1", "Desk", 2, 6)]);
        // Interior wall with a gap at the south end.
        for y in 1..11 {
            scene.obstacles.insert(Cell::new(7, y));
        }
        let s = spec(TaskType::PickAndPlace, &["Mug", "Desk"], 1);
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
    }

    #[test]
    fn replan_substitutes_a_confirmed_sibling() {
        // No side table anywhere; a desk is present and will be confirmed
        // during the search. The goal is bound to the desk (scene truth).
        let scene = room(
            12,
            12,
            vec![obj("desk-1", "Desk", 9, 3), obj("mug-1", "Mug", 4, 2)],
        );
        let instructed = spec(TaskType::PickAndPlace, &["Mug", "SideTable"], 1);
        let truth_goal = GoalSpec {
            atoms: vec![GoalAtom::Placed {
                object: "Mug".into(),
                receptacle: "Desk".into(),
                count: 1,
            }],
        };
        let registry = reg();
        let sim = BuiltinSimilarity::load();
        let cfg = EpisodeConfig::default();
        let trace = run_episode(
            "test",
            &scene,
            &PlanSource::Template(instructed.clone()),
            &truth_goal,
            &cfg,
            &registry,
            &sim,
        );
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
        assert_eq!(trace.replans.len(), 1);
        assert_eq!(trace.replans[0].decision.failed_class, "SideTable");
        assert_eq!(trace.replans[0].decision.chosen.as_deref(), Some("Desk"));
        // The rewritten tail now names the desk.
        assert!(trace.plan.iter().any(|b| b.verb == Verb::Put && b.arg == "Desk"));

        // Same episode with re-planning disabled: the find fails.
        let cfg_off = EpisodeConfig { replan_enabled: false, ..EpisodeConfig::default() };
        let trace = run_episode(
            "test",
            &scene,
            &PlanSource::Template(instructed),
            &truth_goal,
            &cfg_off,
            &registry,
            &sim,
        );
        assert!(
            matches!(trace.final_outcome, EpisodeOutcome::SubgoalFailed { .. }),
            "{trace:?}"
        );
    }

    #[test]
    fn invalid_phrases_fail_before_any_action() {
        let scene = room(10, 10, vec![obj("mug-1", "Mug", 4, 2)]);
        let goal = GoalSpec::default();
        let registry = reg();
        let sim = BuiltinSimilarity::load();
        let cfg = EpisodeConfig::default();
        // Unknown noun.
        let trace = run_episode(
            "test",
            &scene,
            &PlanSource::Phrases(vec!["find a zebra".into()]),
            &goal,
            &cfg,
            &registry,
            &sim,
        );
        assert!(matches!(trace.final_outcome, EpisodeOutcome::InvalidPlan { .. }));
        assert!(trace.actions.is_empty());
        // Structurally broken plan: a put with nothing ever picked up.
        let trace = run_episode(
            "test",
            &scene,
            &PlanSource::Phrases(vec![
                "find a desk".into(),
                "put the mug on the desk".into(),
            ]),
            &goal,
            &cfg,
            &registry,
            &sim,
        );
        assert!(matches!(trace.final_outcome, EpisodeOutcome::InvalidPlan { .. }));
        assert!(trace.actions.is_empty());
    }

    #[test]
    fn step_ceiling_cuts_the_episode_short() {
        let scene = room(
            12,
            12,
            vec![obj("desk-1", "Desk", 9, 9), obj("mug-1", "Mug", 5, 2)],
        );
        let s = spec(TaskType::PickAndPlace, &["Mug", "Desk"], 1);
        let cfg = EpisodeConfig { max_steps: 3, ..EpisodeConfig::default() };
        let trace = run_episode(
            "test",
            &scene,
            &PlanSource::Template(s.clone()),
            &s.goal,
            &cfg,
            &reg(),
            &BuiltinSimilarity::load(),
        );
        assert_eq!(trace.final_outcome, EpisodeOutcome::OutOfSteps);
        assert!(trace.actions.len() <= 3);
    }

    #[test]
    fn oracle_run_solves_with_truth_knowledge_and_no_exploration() {
        let scene = room(
            12,
            12,
            vec![obj("desk-1", "Desk", 9, 9), obj("mug-1", "Mug", 5, 7)],
        );
        let s = spec(TaskType::PickAndPlace, &["Mug", "Desk"], 1);
        let registry = reg();
        let binaries = plan_binaries(&s, &registry).unwrap();
        let sim = BuiltinSimilarity::load();
        let oracle = run_oracle("test", &scene, &binaries, &s.goal, &registry, &sim);
        assert_eq!(oracle.final_outcome, EpisodeOutcome::Success, "{oracle:?}");
        let live = run(&scene, &s);
        assert!(live.final_outcome.is_success());
        assert!(
            oracle.path_length <= live.path_length,
            "oracle ({}) should not out-walk the live agent ({})",
            oracle.path_length,
            live.path_length
        );
    }

    #[test]
    fn noisy_perception_still_converges_with_the_fixed_stream() {
        let scene = room(
            12,
            12,
            vec![obj("desk-1", "Desk", 9, 9), obj("mug-1", "Mug", 5, 2)],
        );
        let s = spec(TaskType::PickAndPlace, &["Mug", "Desk"], 1);
        let cfg = EpisodeConfig {
            noise: NoiseConfig { p_miss: 0.1, p_mis: 0.05, seed: 7 },
            ..EpisodeConfig::default()
        };
        let registry = reg();
        let sim = BuiltinSimilarity::load();
        let a = run_episode(
            "test",
            &scene,
            &PlanSource::Template(s.clone()),
            &s.goal,
            &cfg,
            &registry,
            &sim,
        );
        let b = run_episode(
            "test",
            &scene,
            &PlanSource::Template(s.clone()),
            &s.goal,
            &cfg,
            &registry,
            &sim,
        );
        assert_eq!(a, b, "same seed, same episode, bit for bit");
    }

    #[test]
    fn container_task_opens_the_source_first() {
        let mut cabinet = obj("cabinet-1", "Cabinet", 8, 3);
        cabinet.contents.push("towel-1".to_owned());
        let scene = room(
            12,
            12,
            vec![cabinet, obj("towel-1", "Towel", 8, 3), obj("toilet-1", "Toilet", 3, 8)],
        );
        let s = TaskSpec::new(
            TaskType::PickAndPlace,
            vec!["Towel".into(), "Toilet".into()],
            1,
            Some("Cabinet".into()),
            None,
            &reg(),
        );
        let trace = run(&scene, &s);
        assert_eq!(trace.final_outcome, EpisodeOutcome::Success, "{trace:?}");
    }
}
