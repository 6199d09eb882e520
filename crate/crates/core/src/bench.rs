//! Benchmark generation, scoring, and ablation.
//!
//! [`generate`] builds a deterministic suite of episodes: bordered rooms
//! populated with the objects each task template needs, a couple of
//! distractors, and — on a fixed cadence — an injected scene–instruction
//! mismatch where the instruction names one class (say a side table) while
//! the room only offers a near neighbour (a desk). Goals are always bound
//! to scene truth, so a mismatched episode is only solvable by
//! substituting the sibling class at run time. Every generated episode is
//! certified solvable by an oracle run with full knowledge, whose path
//! length becomes the expert reference for the path-weighted metrics.
//!
//! [`score`] aligns traces with episodes and computes the headline
//! numbers: success rate, goal-condition rate, their path-weighted
//! variants (weight `L*/max(L, L*)`), and high-level-plan accuracy, which
//! accepts substitutions the executive recorded while re-planning.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{
    run_episode, run_oracle, EpisodeConfig, EpisodeOutcome, EpisodeTrace, PlanSource,
};
use crate::grid::{Cell, Heading};
use crate::plan::{plan_binaries, render_instruction, SubgoalBinary, TaskSpec, TaskType};
use crate::registry::ClassRegistry;
use crate::replan::{rewrite_plan, Similarity};
use crate::scene::{Agent, ObjectState, Scene, SceneObject};
use crate::validate::GoalSpec;

/// Knobs for suite generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Number of episodes; task templates rotate round-robin.
    pub episodes: u32,
    /// Master seed; every episode derives its own stream from it.
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Unrelated small objects added to each scene.
    pub distractors: u32,
    /// Every Nth episode gets a scene–instruction mismatch (0 disables).
    pub mismatch_every: u32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            episodes: 24,
            seed: 7,
            width: 20,
            height: 20,
            distractors: 2,
            mismatch_every: 4,
        }
    }
}

/// An injected instruction/scene divergence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchInfo {
    /// Class the instruction names (absent from the scene).
    pub instructed: String,
    /// Sibling class the scene actually contains.
    pub actual: String,
}

/// One benchmark episode: a scene, the instruction given to the agent,
/// and the ground truth used for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkEpisode {
    pub id: String,
    pub scene: Scene,
    /// Instruction text as the agent would receive it.
    pub instruction: String,
    /// Parsed task as instructed (names the instructed classes).
    pub spec: TaskSpec,
    /// Goal bound to scene truth.
    pub goal: GoalSpec,
    /// Reference high-level plan for the instruction as given.
    pub golden_plan: Vec<SubgoalBinary>,
    /// Oracle path length with full knowledge of the scene.
    pub expert_length: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<MismatchInfo>,
}

/// A generated suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub seed: u64,
    pub episodes: Vec<BenchmarkEpisode>,
}

/// Generation failure: no solvable layout found within the retry budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchError {
    pub episode_index: u32,
    pub detail: String,
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "episode {} could not be generated: {}", self.episode_index, self.detail)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BenchError {}

// Class pools per template role. Everything here must satisfy the
// affordance flags the role needs; a test cross-checks against the
// registry.
const PICKABLES: &[&str] = &[
    "Mug", "Cup", "Book", "CreditCard", "KeyChain", "CellPhone", "Pen", "Pencil",
    "RemoteControl", "Watch", "PepperShaker", "SaltShaker", "SoapBar", "TissueBox",
    "AlarmClock", "Candle", "Statue", "Vase", "Disc", "Newspaper", "Kettle", "Bottle",
];
const CLEANABLE: &[&str] =
    &["Spoon", "Fork", "Mug", "Cup", "Plate", "Bowl", "SoapBar", "DishSponge", "Ladle", "Spatula"];
const HEATABLE: &[&str] = &["Egg", "Potato", "Mug", "Cup", "Plate", "Bowl"];
const COOLABLE: &[&str] = &["Egg", "Apple", "Tomato", "Bottle", "WineBottle", "Cup"];
const EXAMINABLE: &[&str] =
    &["Book", "Newspaper", "CreditCard", "CellPhone", "RemoteControl", "KeyChain", "Watch", "Laptop"];
const STACK_ITEMS: &[&str] = &[
    "CreditCard", "KeyChain", "Watch", "Pen", "Pencil", "RemoteControl", "CellPhone", "Egg",
    "Apple", "Tomato", "PepperShaker", "SaltShaker", "Fork", "Spoon", "DishSponge",
];
const STACK_CARRIERS: &[&str] = &["Plate", "Bowl", "Box", "Pan", "Pot"];
const SURFACES: &[&str] = &[
    "Desk", "SideTable", "DiningTable", "CoffeeTable", "CounterTop", "Shelf", "Dresser",
    "Sofa", "ArmChair", "Ottoman", "MediaStand",
];
const PLACE_FINALS: &[&str] = &[
    "Desk", "SideTable", "DiningTable", "CoffeeTable", "CounterTop", "Shelf", "Dresser",
    "Sofa", "ArmChair", "Ottoman", "MediaStand", "Fridge", "Cabinet", "GarbageCan", "Toilet",
];
const SOURCE_CONTAINERS: &[&str] = &["Cabinet", "Drawer", "Safe", "Fridge"];
const SLICEABLE_BASES: &[&str] = &["Apple", "Tomato", "Bread", "Potato", "Lettuce"];
const LAMPS: &[&str] = &["FloorLamp", "DeskLamp"];
/// Mismatch-eligible receptacle classes: each has at least one cluster
/// sibling that is also a valid surface.
const MISMATCH_SURFACES: &[&str] = &["Desk", "SideTable", "DiningTable", "CoffeeTable", "Sofa", "ArmChair"];

/// Maximum layout attempts per episode before generation gives up.
const MAX_ATTEMPTS: u32 = 32;

/// Generate a deterministic benchmark suite.
pub fn generate(
    cfg: &BenchConfig,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
) -> Result<Benchmark, BenchError> {
    let mut episodes = Vec::with_capacity(cfg.episodes as usize);
    for index in 0..cfg.episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::from(index) + 1);
        let task_type = TaskType::ALL[index as usize % TaskType::ALL.len()];
        let mismatch = cfg.mismatch_every > 0 && (index + 1) % cfg.mismatch_every == 0;
        let mut last_reason = String::from("no attempt ran");
        let mut built = None;
        for _ in 0..MAX_ATTEMPTS {
            match build_episode(&mut rng, index, task_type, mismatch, cfg, registry, similarity) {
                Ok(ep) => {
                    built = Some(ep);
                    break;
                }
                Err(reason) => last_reason = reason,
            }
        }
        match built {
            Some(ep) => episodes.push(ep),
            None => {
                return Err(BenchError { episode_index: index, detail: last_reason });
            }
        }
    }
    Ok(Benchmark { seed: cfg.seed, episodes })
}

/// The slot classes and extra scene population chosen for one episode.
struct Cast {
    /// Template slots as instructed.
    instructed: Vec<String>,
    /// Template slots as the scene has them (differs under mismatch).
    actual: Vec<String>,
    /// How many instances of the task object to spawn.
    object_count: u32,
    /// Support classes the scene must contain (appliances, knife, ...).
    support: Vec<String>,
    container: Option<String>,
    knife_park: Option<String>,
    mismatch: Option<MismatchInfo>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

/// Draw from `pool` avoiding `reserved` classes and their cluster mates.
fn pick_fresh(
    rng: &mut ChaCha8Rng,
    pool: &[&str],
    reserved: &BTreeSet<String>,
    registry: &ClassRegistry,
) -> Result<String, String> {
    for _ in 0..64 {
        let candidate = pick(rng, pool);
        let clash = reserved.contains(candidate)
            || registry
                .cluster_mates(candidate)
                .iter()
                .any(|m| reserved.contains(*m));
        if !clash {
            return Ok(candidate.to_owned());
        }
    }
    Err(format!("no unreserved class left in pool {pool:?}"))
}

fn reserve(reserved: &mut BTreeSet<String>, class: &str, registry: &ClassRegistry) {
    reserved.insert(class.to_owned());
    for mate in registry.cluster_mates(class) {
        reserved.insert(mate.to_owned());
    }
}

fn choose_cast(
    rng: &mut ChaCha8Rng,
    task_type: TaskType,
    mismatch: bool,
    registry: &ClassRegistry,
) -> Result<Cast, String> {
    let mut reserved: BTreeSet<String> = BTreeSet::new();
    let mut support: Vec<String> = Vec::new();
    let mut container = None;
    let mut knife_park = None;

    // The final receptacle (or lamp) slot, where mismatches are injected.
    let final_pool: &[&str] = match task_type {
        TaskType::ExamineInLight => LAMPS,
        TaskType::PickAndPlace => PLACE_FINALS,
        _ => SURFACES,
    };
    let (final_instructed, final_actual, mismatch_info) = if mismatch {
        let pool: &[&str] =
            if task_type == TaskType::ExamineInLight { LAMPS } else { MISMATCH_SURFACES };
        let actual = pick(rng, pool).to_owned();
        let mates: Vec<&str> = registry
            .cluster_mates(&actual)
            .into_iter()
            .filter(|m| pool.contains(m))
            .collect();
        if mates.is_empty() {
            return Err(format!("{actual} has no mismatch sibling"));
        }
        let instructed = mates[rng.gen_range(0..mates.len())].to_owned();
        let info = MismatchInfo { instructed: instructed.clone(), actual: actual.clone() };
        (instructed, actual, Some(info))
    } else {
        let class = pick_fresh(rng, final_pool, &reserved, registry)?;
        (class.clone(), class, None)
    };
    reserve(&mut reserved, &final_instructed, registry);
    reserve(&mut reserved, &final_actual, registry);

    let object_count = task_type.default_count();
    let object = match task_type {
        TaskType::PickAndPlace => {
            // Sometimes the object is a sliced form (exercises the knife
            // preamble) or must be fetched out of a closed container.
            let variant = if mismatch { 2 } else { rng.gen_range(0..6u32) };
            match variant {
                0 => {
                    // The scene spawns the base produce for a sliced slot;
                    // only the blade and the parking sink are extra.
                    let base = pick_fresh(rng, SLICEABLE_BASES, &reserved, registry)?;
                    support.push("Knife".to_owned());
                    support.push("SinkBasin".to_owned());
                    knife_park = Some("SinkBasin".to_owned());
                    registry.sliced_form(&base).ok_or_else(|| format!("{base} has no sliced form"))?
                }
                1 => {
                    let source = pick_fresh(rng, SOURCE_CONTAINERS, &reserved, registry)?;
                    reserve(&mut reserved, &source, registry);
                    container = Some(source);
                    pick_fresh(rng, PICKABLES, &reserved, registry)?
                }
                _ => pick_fresh(rng, PICKABLES, &reserved, registry)?,
            }
        }
        TaskType::PickTwoAndPlace | TaskType::PickThreeAndPlace => {
            pick_fresh(rng, PICKABLES, &reserved, registry)?
        }
        TaskType::CleanAndPlace | TaskType::PickTwoCleanAndPlace => {
            support.push("SinkBasin".to_owned());
            pick_fresh(rng, CLEANABLE, &reserved, registry)?
        }
        TaskType::HeatAndPlace => {
            support.push("Microwave".to_owned());
            pick_fresh(rng, HEATABLE, &reserved, registry)?
        }
        TaskType::CoolAndPlace => {
            support.push("Fridge".to_owned());
            pick_fresh(rng, COOLABLE, &reserved, registry)?
        }
        TaskType::ExamineInLight => pick_fresh(rng, EXAMINABLE, &reserved, registry)?,
        TaskType::StackAndPlace | TaskType::PickTwoStackAndPlace => {
            pick_fresh(rng, STACK_ITEMS, &reserved, registry)?
        }
        TaskType::StackHeatAndPlace => {
            support.push("Microwave".to_owned());
            pick_fresh(rng, HEATABLE, &reserved, registry)?
        }
        TaskType::StackCoolAndPlace => {
            support.push("Fridge".to_owned());
            pick_fresh(rng, COOLABLE, &reserved, registry)?
        }
    };
    reserve(&mut reserved, &object, registry);
    if let Some(base) = registry.sliced_base(&object) {
        reserve(&mut reserved, base, registry);
    }

    // Stack templates bind a middle carrier slot.
    let mut instructed = Vec::with_capacity(task_type.slots());
    instructed.push(object.clone());
    if task_type.slots() == 3 {
        let carrier = pick_fresh(rng, STACK_CARRIERS, &reserved, registry)?;
        reserve(&mut reserved, &carrier, registry);
        instructed.push(carrier);
    }
    instructed.push(final_instructed);
    let mut actual = instructed.clone();
    *actual.last_mut().expect("slots are never empty") = final_actual;

    // A sink basin always brings its faucet; both washing and knife
    // parking depend on it.
    if support.iter().any(|c| c == "SinkBasin") {
        support.push("Faucet".to_owned());
    }
    for class in &support {
        reserve(&mut reserved, class, registry);
    }

    Ok(Cast {
        instructed,
        actual,
        object_count,
        support,
        container,
        knife_park,
        mismatch: mismatch_info,
    })
}

/// Draw a free interior cell.
fn free_cell(
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
    taken: &BTreeSet<Cell>,
) -> Result<Cell, String> {
    for _ in 0..256 {
        let x = rng.gen_range(1..width as i32 - 1);
        let y = rng.gen_range(1..height as i32 - 1);
        let cell = Cell::new(x, y);
        if !taken.contains(&cell) {
            return Ok(cell);
        }
    }
    Err("no free cell left".to_owned())
}

#[allow(clippy::too_many_arguments)]
fn build_episode(
    rng: &mut ChaCha8Rng,
    index: u32,
    task_type: TaskType,
    mismatch: bool,
    cfg: &BenchConfig,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
) -> Result<BenchmarkEpisode, String> {
    let cast = choose_cast(rng, task_type, mismatch, registry)?;
    let (width, height) = (cfg.width, cfg.height);

    // Room shell, sometimes with one interior wall (two-cell doorway).
    let mut obstacles: BTreeSet<Cell> = BTreeSet::new();
    for x in 0..width as i32 {
        obstacles.insert(Cell::new(x, 0));
        obstacles.insert(Cell::new(x, height as i32 - 1));
    }
    for y in 0..height as i32 {
        obstacles.insert(Cell::new(0, y));
        obstacles.insert(Cell::new(width as i32 - 1, y));
    }
    if rng.gen_bool(0.5) {
        let x = rng.gen_range(4..width as i32 - 4);
        let gap = rng.gen_range(2..height as i32 - 3);
        for y in 1..height as i32 - 1 {
            if y != gap && y != gap + 1 {
                obstacles.insert(Cell::new(x, y));
            }
        }
    }

    let mut taken = obstacles.clone();

    // Agent pose.
    let agent_cell = free_cell(rng, width, height, &taken)?;
    taken.insert(agent_cell);
    let heading = match rng.gen_range(0..4u8) {
        0 => Heading::North,
        1 => Heading::East,
        2 => Heading::South,
        _ => Heading::West,
    };

    // Scene population: the actual slot classes (with instance counts for
    // the task object), support classes, then distractors.
    let mut spawn: Vec<String> = Vec::new();
    for (slot, class) in cast.actual.iter().enumerate() {
        let copies = if slot == 0 { cast.object_count } else { 1 };
        // A sliced target means the scene holds the base produce instead.
        let class = registry.sliced_base(class).unwrap_or(class);
        for _ in 0..copies {
            spawn.push(class.to_owned());
        }
    }
    spawn.extend(cast.support.iter().cloned());
    if let Some(c) = &cast.container {
        spawn.push(c.clone());
    }
    let mut reserved: BTreeSet<String> = spawn.iter().cloned().collect();
    for class in &cast.instructed {
        reserve(&mut reserved, class, registry);
    }
    let spawn_reserved = reserved.clone();
    for class in &spawn_reserved {
        reserve(&mut reserved, class, registry);
    }
    for _ in 0..cfg.distractors {
        let class = pick_fresh(rng, PICKABLES, &reserved, registry)?;
        reserve(&mut reserved, &class, registry);
        spawn.push(class);
    }

    // Place objects. The faucet hugs its sink; a containered object sits
    // inside (and shares the cell of) its closed container.
    let mut counters: BTreeMap<String, u32> = BTreeMap::new();
    let mut objects: Vec<SceneObject> = Vec::new();
    let object_id = |class: &str, counters: &mut BTreeMap<String, u32>| {
        let n = counters.entry(class.to_owned()).or_insert(0);
        *n += 1;
        format!("{}-{}", registry.noun_phrase(class).replace(' ', "-"), n)
    };
    let mut cell_of: BTreeMap<String, Cell> = BTreeMap::new();

    for class in &spawn {
        let id = object_id(class, &mut counters);
        let cell = if class == "Faucet" {
            let sink = cell_of
                .get("SinkBasin")
                .copied()
                .ok_or_else(|| "faucet spawned before its sink".to_owned())?;
            *sink
                .neighbors()
                .iter()
                .find(|n| !taken.contains(n))
                .ok_or_else(|| "sink has no free side for the faucet".to_owned())?
        } else {
            free_cell(rng, width, height, &taken)?
        };
        taken.insert(cell);
        cell_of.entry(class.clone()).or_insert(cell);
        objects.push(SceneObject {
            id,
            class: class.clone(),
            cell,
            state: ObjectState::default(),
            contents: Vec::new(),
        });
    }

    // Containered pickup: move the task object into the container.
    if let Some(container_class) = &cast.container {
        let object_class = cast.actual[0].clone();
        let container_cell = *cell_of.get(container_class).expect("container was spawned");
        let (mut obj_ids, mut container_id) = (Vec::new(), None);
        for obj in &objects {
            if obj.class == object_class {
                obj_ids.push(obj.id.clone());
            }
            if &obj.class == container_class {
                container_id = Some(obj.id.clone());
            }
        }
        let container_id = container_id.expect("container was spawned");
        for obj in &mut objects {
            if obj_ids.contains(&obj.id) {
                obj.cell = container_cell;
            }
            if obj.id == container_id {
                obj.contents = obj_ids.clone();
            }
        }
    }

    objects.sort_by(|a, b| a.id.cmp(&b.id));
    let scene = Scene {
        width,
        height,
        obstacles,
        objects,
        agent: Agent { cell: agent_cell, heading, holding: None },
        seed: rng.gen(),
        step: 0,
    };
    scene.validate(registry).map_err(|e| e.to_string())?;

    // Instructed spec (drives the instruction text and the golden plan)
    // and truth spec (binds the goal and certifies solvability).
    let instructed_spec = TaskSpec::new(
        task_type,
        cast.instructed.clone(),
        cast.object_count,
        cast.container.clone(),
        cast.knife_park.clone(),
        registry,
    );
    let truth_spec = TaskSpec::new(
        task_type,
        cast.actual.clone(),
        cast.object_count,
        cast.container.clone(),
        cast.knife_park.clone(),
        registry,
    );
    let golden_plan = plan_binaries(&instructed_spec, registry).map_err(|e| e.to_string())?;
    let truth_plan = plan_binaries(&truth_spec, registry).map_err(|e| e.to_string())?;
    let instruction = render_instruction(&instructed_spec, &[], registry);

    let id = format!("ep-{index:03}");
    let oracle = run_oracle(&id, &scene, &truth_plan, &truth_spec.goal, registry, similarity);
    if !oracle.final_outcome.is_success() {
        return Err(format!("oracle could not solve the layout: {:?}", oracle.final_outcome));
    }

    Ok(BenchmarkEpisode {
        id,
        scene,
        instruction,
        spec: instructed_spec,
        goal: truth_spec.goal,
        golden_plan,
        expert_length: oracle.path_length,
        mismatch: cast.mismatch,
    })
}

/// Run every episode of a suite under one configuration.
pub fn run_benchmark(
    bench: &Benchmark,
    cfg: &EpisodeConfig,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
) -> Vec<EpisodeTrace> {
    bench
        .episodes
        .iter()
        .map(|ep| {
            run_episode(
                &ep.id,
                &ep.scene,
                &PlanSource::Template(ep.spec.clone()),
                &ep.goal,
                cfg,
                registry,
                similarity,
            )
        })
        .collect()
}

/// Per-episode scoring row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub id: String,
    pub outcome: EpisodeOutcome,
    pub success: bool,
    pub conditions_met: u32,
    pub conditions_total: u32,
    pub path_length: u32,
    pub expert_length: u32,
    /// `L*/max(L, L*)`; 1 when both lengths are zero.
    pub path_weight: f32,
    /// Final plan matches the golden plan modulo recorded substitutions.
    pub hlp_match: bool,
    pub replans: u32,
    pub mismatch: bool,
}

/// Aggregate metrics over a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub episodes: u32,
    pub successes: u32,
    /// Success rate.
    pub sr: f32,
    /// Goal-condition rate: conditions met over conditions posed.
    pub gc: f32,
    /// Path-length-weighted success rate.
    pub plwsr: f32,
    /// Path-length-weighted goal-condition rate.
    pub plwgc: f32,
    /// High-level plan accuracy.
    pub hlp_acc: f32,
    pub scores: Vec<EpisodeScore>,
}

/// Trace/episode alignment failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreError {
    /// An episode has no trace.
    MissingTrace(String),
    /// A trace names an episode the suite does not contain.
    UnknownEpisode(String),
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::MissingTrace(id) => write!(f, "no trace for episode {id:?}"),
            ScoreError::UnknownEpisode(id) => write!(f, "trace for unknown episode {id:?}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ScoreError {}

/// The golden plan with the trace's recorded substitutions applied: what
/// the high-level plan *should* look like given the re-planning that
/// actually happened.
pub fn expected_plan(golden: &[SubgoalBinary], trace: &EpisodeTrace) -> Vec<SubgoalBinary> {
    let mut expected = golden.to_vec();
    for record in &trace.replans {
        let at = record.subgoal_index;
        let Some(to) = record.decision.chosen.as_deref() else { continue };
        if at > expected.len() {
            continue;
        }
        let tail = rewrite_plan(&expected[at..], &record.decision.failed_class, to);
        expected.truncate(at);
        expected.extend(tail);
    }
    expected
}

/// Score a suite against its traces (aligned by episode id).
pub fn score(bench: &Benchmark, traces: &[EpisodeTrace]) -> Result<Report, ScoreError> {
    let by_id: BTreeMap<&str, &EpisodeTrace> =
        traces.iter().map(|t| (t.episode_id.as_str(), t)).collect();
    let known: BTreeSet<&str> = bench.episodes.iter().map(|e| e.id.as_str()).collect();
    if let Some(stray) = traces.iter().find(|t| !known.contains(t.episode_id.as_str())) {
        return Err(ScoreError::UnknownEpisode(stray.episode_id.clone()));
    }

    let mut scores = Vec::with_capacity(bench.episodes.len());
    let mut successes = 0u32;
    let mut met_sum = 0u64;
    let mut total_sum = 0u64;
    let mut plwsr_sum = 0f64;
    let mut plwgc_sum = 0f64;
    let mut hlp_hits = 0u32;

    for ep in &bench.episodes {
        let trace = *by_id
            .get(ep.id.as_str())
            .ok_or_else(|| ScoreError::MissingTrace(ep.id.clone()))?;
        let success = trace.final_outcome.is_success();
        let total: u32 = ep.goal.atoms.iter().map(|a| a.count()).sum();
        let met = trace.conditions_met.min(total);
        let longer = trace.path_length.max(ep.expert_length);
        let weight = if longer == 0 {
            1.0
        } else {
            f64::from(ep.expert_length) / f64::from(longer)
        };
        let hlp_match = expected_plan(&ep.golden_plan, trace) == trace.plan;

        successes += u32::from(success);
        met_sum += u64::from(met);
        total_sum += u64::from(total);
        if success {
            plwsr_sum += weight;
        }
        plwgc_sum += weight * f64::from(met);
        hlp_hits += u32::from(hlp_match);

        scores.push(EpisodeScore {
            id: ep.id.clone(),
            outcome: trace.final_outcome.clone(),
            success,
            conditions_met: met,
            conditions_total: total,
            path_length: trace.path_length,
            expert_length: ep.expert_length,
            path_weight: weight as f32,
            hlp_match,
            replans: trace.replans.len() as u32,
            mismatch: ep.mismatch.is_some(),
        });
    }

    let n = bench.episodes.len() as f64;
    let (sr, plwsr, hlp_acc) = if n == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        (f64::from(successes) / n, plwsr_sum / n, f64::from(hlp_hits) / n)
    };
    let (gc, plwgc) = if total_sum == 0 {
        (0.0, 0.0)
    } else {
        (met_sum as f64 / total_sum as f64, plwgc_sum / total_sum as f64)
    };

    Ok(Report {
        episodes: bench.episodes.len() as u32,
        successes,
        sr: sr as f32,
        gc: gc as f32,
        plwsr: plwsr as f32,
        plwgc: plwgc as f32,
        hlp_acc: hlp_acc as f32,
        scores,
    })
}

/// One ablation grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub replan_enabled: bool,
    pub map_correction_enabled: bool,
    pub report: Report,
}

/// Run the 2x2 ablation grid over re-planning and map correction.
pub fn ablate(
    bench: &Benchmark,
    base: &EpisodeConfig,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
) -> Result<Vec<AblationCell>, ScoreError> {
    let mut cells = Vec::with_capacity(4);
    for (replan_enabled, map_correction_enabled) in
        [(true, true), (true, false), (false, true), (false, false)]
    {
        let cfg = EpisodeConfig { replan_enabled, map_correction_enabled, ..base.clone() };
        let traces = run_benchmark(bench, &cfg, registry, similarity);
        let report = score(bench, &traces)?;
        cells.push(AblationCell { replan_enabled, map_correction_enabled, report });
    }
    Ok(cells)
}
