//! World state and the action transition function.
//!
//! A [`Scene`] is a bounded grid of wall cells, stateful objects, and one
//! agent. [`step`] is the only way the world changes: it applies a single
//! [`Action`], returning the successor scene and an outcome. Failed actions
//! leave the world unchanged apart from the attempted-action counter, so
//! path-length accounting and seeded noise streams stay deterministic.
//!
//! Interaction rules: the target must be visible (inside the forward sight
//! wedge with clear line of sight and no closed receptacle hiding it) and
//! within Chebyshev distance [`INTERACT_RANGE`]. Large objects — anything
//! not pickupable — block movement and sight; small objects block neither.
//!
//! State side effects beyond the direct verb:
//! - Faucet off: everything in any sink basin becomes clean.
//! - Microwave off with the door closed: contents become hot.
//! - Stove burner off: contents become hot.
//! - Fridge door close: contents become cold.
//! - Lamp on while holding something: the held object becomes examined.
//! - Slice replaces the target with its sliced-form object in place.
//!
//! Effects apply to the full containment subtree (a plate in the fridge
//! chills whatever sits on the plate).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::grid::{in_wedge, line_between, Cell, Heading, Pose};
use crate::registry::ClassRegistry;

/// Maximum Chebyshev distance at which the hand can reach a target.
pub const INTERACT_RANGE: u32 = 3;
/// Maximum Chebyshev distance of the sight wedge.
pub const SIGHT_RANGE: u32 = 15;

/// Mutable per-object state; every flag defaults to false.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectState {
    #[serde(skip_serializing_if = "is_false")]
    pub is_open: bool,
    #[serde(skip_serializing_if = "is_false")]
    pub is_on: bool,
    #[serde(skip_serializing_if = "is_false")]
    pub is_clean: bool,
    #[serde(skip_serializing_if = "is_false")]
    pub is_hot: bool,
    #[serde(skip_serializing_if = "is_false")]
    pub is_cold: bool,
    #[serde(skip_serializing_if = "is_false")]
    pub is_sliced: bool,
    #[serde(skip_serializing_if = "is_false")]
    pub is_examined: bool,
}

fn is_false(b: &bool) -> bool {
    !b
}

impl ObjectState {
    fn is_default(&self) -> bool {
        *self == ObjectState::default()
    }
}

/// One object instance in the world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub class: String,
    pub cell: Cell,
    #[serde(default, skip_serializing_if = "ObjectState::is_default")]
    pub state: ObjectState,
    /// Ids of objects directly inside or on top of this one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contents: Vec<String>,
}

/// The agent: pose plus at most one held object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub cell: Cell,
    pub heading: Heading,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holding: Option<String>,
}

impl Agent {
    pub fn pose(&self) -> Pose {
        Pose::new(self.cell, self.heading)
    }
}

/// A full world snapshot. Values are immutable from the caller's side:
/// [`step`] returns a successor instead of mutating in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SceneRepr", into = "SceneRepr")]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub obstacles: BTreeSet<Cell>,
    /// Sorted by id; enforced on construction and deserialisation.
    pub objects: Vec<SceneObject>,
    pub agent: Agent,
    pub seed: u64,
    /// Count of attempted actions so far (failures included).
    pub step: u32,
}

#[derive(Serialize, Deserialize)]
struct SceneRepr {
    grid: [usize; 2],
    #[serde(default)]
    obstacles: Vec<Cell>,
    objects: Vec<SceneObject>,
    agent: Agent,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    step: u32,
}

impl From<SceneRepr> for Scene {
    fn from(r: SceneRepr) -> Self {
        let mut objects = r.objects;
        objects.sort_by(|a, b| a.id.cmp(&b.id));
        Scene {
            width: r.grid[0],
            height: r.grid[1],
            obstacles: r.obstacles.into_iter().collect(),
            objects,
            agent: r.agent,
            seed: r.seed,
            step: r.step,
        }
    }
}

impl From<Scene> for SceneRepr {
    fn from(s: Scene) -> Self {
        SceneRepr {
            grid: [s.width, s.height],
            obstacles: s.obstacles.into_iter().collect(),
            objects: s.objects,
            agent: s.agent,
            seed: s.seed,
            step: s.step,
        }
    }
}

/// A primitive agent action. Interaction variants name a target object id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "target", rename_all = "snake_case")]
pub enum Action {
    MoveAhead,
    RotateLeft,
    RotateRight,
    Pickup(String),
    Put(String),
    Open(String),
    Close(String),
    ToggleOn(String),
    ToggleOff(String),
    Slice(String),
}

impl Action {
    pub fn target(&self) -> Option<&str> {
        match self {
            Action::MoveAhead | Action::RotateLeft | Action::RotateRight => None,
            Action::Pickup(t)
            | Action::Put(t)
            | Action::Open(t)
            | Action::Close(t)
            | Action::ToggleOn(t)
            | Action::ToggleOff(t)
            | Action::Slice(t) => Some(t),
        }
    }
}

/// Why an action failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    BlockedMove,
    NotVisible,
    OutOfRange,
    AffordanceViolation,
    HandOccupied,
    HandEmpty,
    ReceptacleClosed,
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FailReason::BlockedMove => "blocked move",
            FailReason::NotVisible => "target not visible",
            FailReason::OutOfRange => "target out of reach",
            FailReason::AffordanceViolation => "affordance violation",
            FailReason::HandOccupied => "hand already occupied",
            FailReason::HandEmpty => "hand is empty",
            FailReason::ReceptacleClosed => "receptacle is closed",
        };
        f.write_str(s)
    }
}

/// Result of one [`step`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Success,
    Failure(FailReason),
}

impl StepOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, StepOutcome::Success)
    }
}

/// A structural problem that makes a scene unusable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SceneError {
    DuplicateId(String),
    UnknownClass(String, String),
    OutOfBounds(String),
    ObjectOnWall(String),
    MissingContent(String, String),
    ContainmentCycle(String),
    HeldObjectContained(String),
    AgentBlocked,
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::DuplicateId(id) => write!(f, "duplicate object id {id:?}"),
            SceneError::UnknownClass(id, class) => {
                write!(f, "object {id:?} has unknown class {class:?}")
            }
            SceneError::OutOfBounds(id) => write!(f, "object {id:?} lies outside the grid"),
            SceneError::ObjectOnWall(id) => write!(f, "object {id:?} sits on a wall cell"),
            SceneError::MissingContent(id, inner) => {
                write!(f, "object {id:?} lists missing content {inner:?}")
            }
            SceneError::ContainmentCycle(id) => {
                write!(f, "object {id:?} is inside itself (containment cycle)")
            }
            SceneError::HeldObjectContained(id) => {
                write!(f, "held object {id:?} also appears inside a receptacle")
            }
            SceneError::AgentBlocked => write!(f, "agent cell is blocked"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SceneError {}

impl Scene {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects
            .binary_search_by(|o| o.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.objects[i])
    }

    fn object_mut(&mut self, id: &str) -> Option<&mut SceneObject> {
        self.objects
            .binary_search_by(|o| o.id.as_str().cmp(id))
            .ok()
            .map(move |i| &mut self.objects[i])
    }

    /// The receptacle directly holding `id`, if any.
    pub fn parent_of(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.contents.iter().any(|c| c == id))
    }

    /// True when `id` sits (transitively) inside a closed receptacle.
    pub fn is_hidden(&self, id: &str, registry: &ClassRegistry) -> bool {
        let mut current = id;
        while let Some(parent) = self.parent_of(current) {
            let openable = registry.get(&parent.class).map(|i| i.openable).unwrap_or(false);
            if openable && !parent.state.is_open {
                return true;
            }
            current = parent.id.as_str();
        }
        false
    }

    /// Ids transitively contained in `id`, depth-first, excluding `id`.
    pub fn subtree_of(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack: Vec<String> = match self.object(id) {
            Some(o) => o.contents.iter().rev().cloned().collect(),
            None => return out,
        };
        while let Some(next) = stack.pop() {
            if let Some(o) = self.object(&next) {
                stack.extend(o.contents.iter().rev().cloned());
            }
            out.push(next);
        }
        out
    }

    pub fn in_bounds(&self, cell: &Cell) -> bool {
        cell.x >= 0
            && cell.y >= 0
            && (cell.x as usize) < self.width
            && (cell.y as usize) < self.height
    }

    /// True when `cell` stops movement: wall, out of bounds, or a large
    /// object's cell.
    pub fn blocks_move(&self, cell: &Cell, registry: &ClassRegistry) -> bool {
        if !self.in_bounds(cell) || self.obstacles.contains(cell) {
            return true;
        }
        self.objects.iter().any(|o| {
            o.cell == *cell && registry.get(&o.class).map(|i| i.is_large()).unwrap_or(false)
        })
    }

    /// True when `cell` stops sight rays passing through it. Identical to
    /// [`Scene::blocks_move`]: walls and large objects are opaque.
    pub fn blocks_sight(&self, cell: &Cell, registry: &ClassRegistry) -> bool {
        self.blocks_move(cell, registry)
    }

    /// True when `cell` is inside the agent's sight wedge with a clear line
    /// of sight (intermediate cells transparent; the endpoint may itself be
    /// opaque and still be seen).
    pub fn cell_visible(&self, cell: &Cell, registry: &ClassRegistry) -> bool {
        let pose = self.agent.pose();
        if *cell == pose.cell {
            return true;
        }
        if !in_wedge(&pose, cell, SIGHT_RANGE) {
            return false;
        }
        line_between(pose.cell, *cell)
            .iter()
            .all(|c| !self.blocks_sight(c, registry))
    }

    /// True when the object rides in the agent's hand: held directly, or
    /// contained (transitively) in the held object.
    pub fn is_carried(&self, id: &str) -> bool {
        let Some(held) = self.agent.holding.as_deref() else { return false };
        if held == id {
            return true;
        }
        let mut current = id;
        while let Some(parent) = self.parent_of(current) {
            if parent.id == held {
                return true;
            }
            current = parent.id.as_str();
        }
        false
    }

    /// True when the object can currently be seen: not carried, not shut
    /// away, and its cell is visible.
    pub fn object_visible(&self, id: &str, registry: &ClassRegistry) -> bool {
        let Some(obj) = self.object(id) else { return false };
        if self.is_carried(id) {
            return false;
        }
        if self.is_hidden(id, registry) {
            return false;
        }
        self.cell_visible(&obj.cell, registry)
    }

    /// Structural validity check used by loaders and generators.
    pub fn validate(&self, registry: &ClassRegistry) -> Result<(), SceneError> {
        let mut ids = BTreeSet::new();
        for obj in &self.objects {
            if !ids.insert(obj.id.clone()) {
                return Err(SceneError::DuplicateId(obj.id.clone()));
            }
            if !registry.contains(&obj.class) {
                return Err(SceneError::UnknownClass(obj.id.clone(), obj.class.clone()));
            }
            if !self.in_bounds(&obj.cell) {
                return Err(SceneError::OutOfBounds(obj.id.clone()));
            }
            if self.obstacles.contains(&obj.cell) {
                return Err(SceneError::ObjectOnWall(obj.id.clone()));
            }
            for inner in &obj.contents {
                if !self.objects.iter().any(|o| &o.id == inner) {
                    return Err(SceneError::MissingContent(obj.id.clone(), inner.clone()));
                }
                if self.agent.holding.as_deref() == Some(inner.as_str()) {
                    return Err(SceneError::HeldObjectContained(inner.clone()));
                }
            }
        }
        for obj in &self.objects {
            let mut current = obj.id.as_str();
            let mut hops = 0;
            while let Some(parent) = self.parent_of(current) {
                if parent.id == obj.id || hops > self.objects.len() {
                    return Err(SceneError::ContainmentCycle(obj.id.clone()));
                }
                current = parent.id.as_str();
                hops += 1;
            }
        }
        if let Some(held) = self.agent.holding.as_deref() {
            if self.object(held).is_none() {
                return Err(SceneError::MissingContent("agent".into(), held.into()));
            }
        }
        if self.blocks_move(&self.agent.cell, registry) {
            return Err(SceneError::AgentBlocked);
        }
        Ok(())
    }

    /// Instances of a class, in id order.
    pub fn instances_of<'a>(
        &'a self,
        class: &'a str,
    ) -> impl Iterator<Item = &'a SceneObject> + 'a {
        self.objects.iter().filter(move |o| o.class == class)
    }
}

/// Apply one action, returning the successor scene and the outcome. The
/// attempted-action counter increments whether or not the action succeeds.
pub fn step(scene: &Scene, action: &Action, registry: &ClassRegistry) -> (Scene, StepOutcome) {
    let mut next = scene.clone();
    next.step += 1;
    let outcome = apply(&mut next, action, registry);
    if let StepOutcome::Failure(_) = outcome {
        // Failed actions must not leave partial edits behind.
        let step = next.step;
        next = scene.clone();
        next.step = step;
    }
    (next, outcome)
}

fn apply(scene: &mut Scene, action: &Action, registry: &ClassRegistry) -> StepOutcome {
    use FailReason::*;
    match action {
        Action::MoveAhead => {
            let (dx, dy) = scene.agent.heading.delta();
            let dest = Cell::new(scene.agent.cell.x + dx, scene.agent.cell.y + dy);
            if scene.blocks_move(&dest, registry) {
                return StepOutcome::Failure(BlockedMove);
            }
            scene.agent.cell = dest;
            if let Some(held) = scene.agent.holding.clone() {
                move_subtree(scene, &held, dest);
            }
            StepOutcome::Success
        }
        Action::RotateLeft => {
            scene.agent.heading = scene.agent.heading.left();
            StepOutcome::Success
        }
        Action::RotateRight => {
            scene.agent.heading = scene.agent.heading.right();
            StepOutcome::Success
        }
        Action::Pickup(id) => {
            if scene.agent.holding.is_some() {
                return StepOutcome::Failure(HandOccupied);
            }
            let Some(info) = scene.object(id).and_then(|o| registry.get(&o.class)) else {
                return StepOutcome::Failure(NotVisible);
            };
            if !info.pickupable {
                return StepOutcome::Failure(AffordanceViolation);
            }
            match check_reach(scene, id, registry) {
                Some(fail) => StepOutcome::Failure(fail),
                None => {
                    if let Some(parent_id) = scene.parent_of(id).map(|p| p.id.clone()) {
                        let parent = scene.object_mut(&parent_id).expect("parent exists");
                        parent.contents.retain(|c| c != id);
                    }
                    let agent_cell = scene.agent.cell;
                    move_subtree(scene, id, agent_cell);
                    scene.agent.holding = Some(id.clone());
                    StepOutcome::Success
                }
            }
        }
        Action::Put(id) => {
            let Some(held) = scene.agent.holding.clone() else {
                return StepOutcome::Failure(HandEmpty);
            };
            let Some(info) = scene.object(id).and_then(|o| registry.get(&o.class)) else {
                return StepOutcome::Failure(NotVisible);
            };
            if !info.receptacle {
                return StepOutcome::Failure(AffordanceViolation);
            }
            if let Some(fail) = check_reach(scene, id, registry) {
                return StepOutcome::Failure(fail);
            }
            let recep = scene.object(id).expect("checked above");
            if info.openable && !recep.state.is_open {
                return StepOutcome::Failure(ReceptacleClosed);
            }
            let recep_cell = recep.cell;
            scene.object_mut(id).expect("checked above").contents.push(held.clone());
            move_subtree(scene, &held, recep_cell);
            scene.agent.holding = None;
            StepOutcome::Success
        }
        Action::Open(id) => toggle_door(scene, id, registry, true),
        Action::Close(id) => toggle_door(scene, id, registry, false),
        Action::ToggleOn(id) => switch_power(scene, id, registry, true),
        Action::ToggleOff(id) => switch_power(scene, id, registry, false),
        Action::Slice(id) => {
            let Some(held) = scene.agent.holding.clone() else {
                return StepOutcome::Failure(HandEmpty);
            };
            let held_class = scene.object(&held).map(|o| o.class.clone()).unwrap_or_default();
            if !registry.is_knife(&held_class) {
                return StepOutcome::Failure(AffordanceViolation);
            }
            let Some(target) = scene.object(id).cloned() else {
                return StepOutcome::Failure(NotVisible);
            };
            let Some(sliced_class) = registry.sliced_form(&target.class) else {
                return StepOutcome::Failure(AffordanceViolation);
            };
            if let Some(fail) = check_reach(scene, id, registry) {
                return StepOutcome::Failure(fail);
            }
            let sliced_id = format!("{}-sliced", target.id);
            if scene.object(&sliced_id).is_some() {
                return StepOutcome::Failure(AffordanceViolation);
            }
            let sliced = SceneObject {
                id: sliced_id.clone(),
                class: sliced_class,
                cell: target.cell,
                state: ObjectState { is_sliced: true, ..ObjectState::default() },
                contents: Vec::new(),
            };
            if let Some(parent_id) = scene.parent_of(id).map(|p| p.id.clone()) {
                let parent = scene.object_mut(&parent_id).expect("parent exists");
                for slot in parent.contents.iter_mut() {
                    if slot == id {
                        *slot = sliced_id.clone();
                    }
                }
            }
            scene.objects.retain(|o| o.id != *id);
            scene.objects.push(sliced);
            scene.objects.sort_by(|a, b| a.id.cmp(&b.id));
            StepOutcome::Success
        }
    }
}

/// Relocate an object and everything inside it — a carried receptacle
/// moves as one piece.
fn move_subtree(scene: &mut Scene, id: &str, dest: Cell) {
    if let Some(obj) = scene.object_mut(id) {
        obj.cell = dest;
    }
    for inner in scene.subtree_of(id) {
        if let Some(obj) = scene.object_mut(&inner) {
            obj.cell = dest;
        }
    }
}

/// Shared visibility/range gate for interactions. Returns the failure to
/// report, or None when the target is workable.
fn check_reach(scene: &Scene, id: &str, registry: &ClassRegistry) -> Option<FailReason> {
    if !scene.object_visible(id, registry) {
        return Some(FailReason::NotVisible);
    }
    let obj = scene.object(id).expect("visible object exists");
    if scene.agent.cell.chebyshev(&obj.cell) > INTERACT_RANGE {
        return Some(FailReason::OutOfRange);
    }
    None
}

fn toggle_door(scene: &mut Scene, id: &str, registry: &ClassRegistry, open: bool) -> StepOutcome {
    let Some(info) = scene.object(id).and_then(|o| registry.get(&o.class)) else {
        return StepOutcome::Failure(FailReason::NotVisible);
    };
    if !info.openable {
        return StepOutcome::Failure(FailReason::AffordanceViolation);
    }
    if let Some(fail) = check_reach(scene, id, registry) {
        return StepOutcome::Failure(fail);
    }
    let obj = scene.object(id).expect("checked above");
    if obj.state.is_open == open {
        return StepOutcome::Failure(FailReason::AffordanceViolation);
    }
    let class = obj.class.clone();
    scene.object_mut(id).expect("checked above").state.is_open = open;
    // Shutting a fridge door chills everything inside.
    if !open && class == "Fridge" {
        for inner in scene.subtree_of(id) {
            if let Some(o) = scene.object_mut(&inner) {
                o.state.is_cold = true;
            }
        }
    }
    StepOutcome::Success
}

fn switch_power(scene: &mut Scene, id: &str, registry: &ClassRegistry, on: bool) -> StepOutcome {
    let Some(info) = scene.object(id).and_then(|o| registry.get(&o.class)) else {
        return StepOutcome::Failure(FailReason::NotVisible);
    };
    if !info.toggleable {
        return StepOutcome::Failure(FailReason::AffordanceViolation);
    }
    if let Some(fail) = check_reach(scene, id, registry) {
        return StepOutcome::Failure(fail);
    }
    let obj = scene.object(id).expect("checked above");
    if obj.state.is_on == on {
        return StepOutcome::Failure(FailReason::AffordanceViolation);
    }
    let class = obj.class.clone();
    // Running a microwave with the door open is refused outright.
    if on && class == "Microwave" && obj.state.is_open {
        return StepOutcome::Failure(FailReason::AffordanceViolation);
    }
    scene.object_mut(id).expect("checked above").state.is_on = on;
    if on {
        // Examining: holding something up to a lit lamp.
        if registry.is_lamp(&class) {
            if let Some(held) = scene.agent.holding.clone() {
                if let Some(o) = scene.object_mut(&held) {
                    o.state.is_examined = true;
                }
            }
        }
        return StepOutcome::Success;
    }
    // Heat and wash cycles take effect when the appliance switches off.
    match class.as_str() {
        "Faucet" => {
            let sinks: Vec<String> = scene
                .objects
                .iter()
                .filter(|o| o.class == "SinkBasin")
                .map(|o| o.id.clone())
                .collect();
            for sink in sinks {
                for inner in scene.subtree_of(&sink) {
                    if let Some(o) = scene.object_mut(&inner) {
                        o.state.is_clean = true;
                    }
                }
            }
        }
        "Microwave" => {
            let closed = scene.object(id).map(|o| !o.state.is_open).unwrap_or(false);
            if closed {
                for inner in scene.subtree_of(id) {
                    if let Some(o) = scene.object_mut(&inner) {
                        o.state.is_hot = true;
                    }
                }
            }
        }
        "StoveBurner" => {
            for inner in scene.subtree_of(id) {
                if let Some(o) = scene.object_mut(&inner) {
                    o.state.is_hot = true;
                }
            }
        }
        _ => {}
    }
    StepOutcome::Success
}
