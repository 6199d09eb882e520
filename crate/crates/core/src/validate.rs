//! Goal conditions and symbolic plan validation.
//!
//! Two checkers live here. [`goal_conditions_met`] inspects a concrete
//! scene and counts satisfied goal conditions — the ground truth behind
//! success and goal-completion scoring. [`validate_plan`] never touches a
//! scene: it walks a subgoal plan symbolically (classes, not instances),
//! tracking what a literal executor would hold, have located, and have
//! placed where, and reports [`Finding`]s for steps that cannot work plus a
//! final check that the goal would be reached.
//!
//! The symbolic walk repairs each defect after recording it (a put into a
//! closed receptacle proceeds as if opened, a pickup of an unlocated class
//! locates it) so one early mistake does not bury the rest of the plan in
//! cascading noise. The [`Mutation`] catalogue produces damaged variants
//! of known-good plans, each paired with the finding codes it must trip —
//! the validator's own regression harness.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::plan::{SubgoalBinary, Verb};
use crate::registry::ClassRegistry;
use crate::scene::Scene;

/// One goal condition over scene state. `count` is the number of object
/// instances that must satisfy it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoalAtom {
    /// `count` instances of `object` sit directly inside/on `receptacle`.
    Placed { object: String, receptacle: String, count: u32 },
    /// `count` instances of `object` are clean.
    Clean { object: String, count: u32 },
    /// `count` instances of `object` are hot.
    Hot { object: String, count: u32 },
    /// `count` instances of `object` are cold.
    Cold { object: String, count: u32 },
    /// `count` sliced pieces derived from `object` exist.
    Sliced { object: String, count: u32 },
    /// `count` instances of `object` have been examined under a lamp.
    Examined { object: String, count: u32 },
}

impl GoalAtom {
    pub fn count(&self) -> u32 {
        match self {
            GoalAtom::Placed { count, .. }
            | GoalAtom::Clean { count, .. }
            | GoalAtom::Hot { count, .. }
            | GoalAtom::Cold { count, .. }
            | GoalAtom::Sliced { count, .. }
            | GoalAtom::Examined { count, .. } => *count,
        }
    }
}

/// A task goal: every atom must be satisfied for success.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub atoms: Vec<GoalAtom>,
}

/// Count satisfied goal conditions in a scene: `(met, total)`. An atom
/// with `count` n contributes n conditions, met one per satisfying
/// instance (capped at n). Success is `met == total`.
pub fn goal_conditions_met(
    scene: &Scene,
    goal: &GoalSpec,
    registry: &ClassRegistry,
) -> (u32, u32) {
    let mut met = 0;
    let mut total = 0;
    for atom in &goal.atoms {
        let want = atom.count().max(1);
        total += want;
        let have = match atom {
            GoalAtom::Placed { object, receptacle, .. } => scene
                .objects
                .iter()
                .filter(|o| {
                    o.class == *object
                        && scene
                            .parent_of(&o.id)
                            .map(|p| p.class == *receptacle)
                            .unwrap_or(false)
                })
                .count() as u32,
            GoalAtom::Clean { object, .. } => {
                scene.instances_of(object).filter(|o| o.state.is_clean).count() as u32
            }
            GoalAtom::Hot { object, .. } => {
                scene.instances_of(object).filter(|o| o.state.is_hot).count() as u32
            }
            GoalAtom::Cold { object, .. } => {
                scene.instances_of(object).filter(|o| o.state.is_cold).count() as u32
            }
            GoalAtom::Sliced { object, .. } => registry
                .sliced_form(object)
                .map(|sliced| scene.instances_of(&sliced).count() as u32)
                .unwrap_or(0),
            GoalAtom::Examined { object, .. } => {
                scene.instances_of(object).filter(|o| o.state.is_examined).count() as u32
            }
        };
        met += have.min(want);
    }
    (met, total)
}

/// Categories of plan defects the symbolic validator reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingCode {
    /// A subgoal argument is not a known class.
    UnknownObject,
    /// A class is used before any Find locates it.
    MissingFind,
    /// A pickup with the hand already occupied.
    HandOccupied,
    /// A put with nothing in hand.
    HandEmptyOnPut,
    /// Interacting through a door that was never opened.
    ReceptacleClosed,
    /// Slicing without a knife in hand.
    MissingKnife,
    /// The verb does not apply to the class (or the state).
    AffordanceViolation,
    /// The finished plan leaves a goal condition unsatisfied.
    GoalUnmet,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FindingCode::UnknownObject => "unknown-object",
            FindingCode::MissingFind => "missing-find",
            FindingCode::HandOccupied => "hand-occupied",
            FindingCode::HandEmptyOnPut => "hand-empty-on-put",
            FindingCode::ReceptacleClosed => "receptacle-closed",
            FindingCode::MissingKnife => "missing-knife",
            FindingCode::AffordanceViolation => "affordance-violation",
            FindingCode::GoalUnmet => "goal-unmet",
        };
        f.write_str(s)
    }
}

/// One validator complaint, anchored to the subgoal that raised it. Goal
/// findings use `subgoal_index == plan.len()` — past the final step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub subgoal_index: usize,
    pub code: FindingCode,
    pub detail: String,
}

/// Symbolic executor state: class-level, scene-free.
#[derive(Default)]
struct SymState {
    located: BTreeSet<String>,
    /// Argument of the most recent Find; a pickup right after finding a
    /// receptacle retrieves from that receptacle.
    last_find: Option<String>,
    held: Option<String>,
    open: BTreeSet<String>,
    ever_opened: BTreeSet<String>,
    powered: BTreeSet<String>,
    /// Current placements in order: (receptacle class, object class).
    placed: Vec<(String, String)>,
    clean: BTreeMap<String, u32>,
    hot: BTreeMap<String, u32>,
    cold: BTreeMap<String, u32>,
    examined: BTreeMap<String, u32>,
    sliced: BTreeMap<String, u32>,
}

impl SymState {
    /// Classes currently inside `recep`, transitively, with multiplicity.
    fn contents_of(&self, recep: &str) -> BTreeMap<String, u32> {
        let mut out: BTreeMap<String, u32> = BTreeMap::new();
        let mut frontier: Vec<&str> = alloc::vec![recep];
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        while let Some(r) = frontier.pop() {
            if !seen.insert(r) {
                continue;
            }
            for (parent, child) in &self.placed {
                if parent == r {
                    *out.entry(child.clone()).or_insert(0) += 1;
                    frontier.push(child);
                }
            }
        }
        out
    }

    /// Record a state effect for every class inside `recep` right now.
    fn mark_contents(map: &mut BTreeMap<String, u32>, contents: &BTreeMap<String, u32>) {
        for (class, n) in contents {
            let slot = map.entry(class.clone()).or_insert(0);
            *slot = (*slot).max(*n);
        }
    }
}

/// Validate a plan against its goal without a scene. Returns findings:
/// empty means the plan would work. `container_hints` maps an object class
/// to the receptacle it is known to start inside, so a Find that precedes
/// the container being opened is flagged.
pub fn validate_plan(
    plan: &[SubgoalBinary],
    goal: &GoalSpec,
    container_hints: &BTreeMap<String, String>,
    registry: &ClassRegistry,
) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut st = SymState::default();
    let report = |findings: &mut Vec<Finding>, index: usize, code: FindingCode, detail: String| {
        findings.push(Finding { subgoal_index: index, code, detail });
    };

    for (index, sg) in plan.iter().enumerate() {
        let class = sg.arg.as_str();
        if !registry.contains(class) {
            report(
                &mut findings,
                index,
                FindingCode::UnknownObject,
                format!("{class} is not a known class"),
            );
            continue;
        }
        let info = registry.get(class).expect("checked above");
        match sg.verb {
            Verb::Find => {
                if let Some(container) = container_hints.get(class) {
                    if !st.ever_opened.contains(container) {
                        report(
                            &mut findings,
                            index,
                            FindingCode::ReceptacleClosed,
                            format!("{class} starts inside the unopened {container}"),
                        );
                    }
                }
                st.located.insert(class.to_owned());
                st.last_find = Some(class.to_owned());
                // Locating a fixture locates the parts mounted on it (a
                // sink basin comes with its faucet).
                for part in registry.attached_parts(class) {
                    st.located.insert(part.to_owned());
                }
            }
            Verb::Pickup => {
                if st.held.is_some() {
                    report(
                        &mut findings,
                        index,
                        FindingCode::HandOccupied,
                        format!(
                            "picking up {class} while already holding {}",
                            st.held.as_deref().unwrap_or("something")
                        ),
                    );
                    continue;
                }
                // Where does the object come from? When the most recent
                // find targeted a receptacle this class was placed into,
                // the pickup retrieves it from there (washing: find the
                // sink again, lift the spoon back out). Otherwise it takes
                // a fresh located instance.
                let from = st.last_find.as_ref().filter(|r| *r != class).and_then(|recep| {
                    st.placed
                        .iter()
                        .rposition(|(r, obj)| r == recep && obj == class)
                        .map(|i| (i, recep.clone()))
                });
                if let Some((at, recep)) = from {
                    let openable =
                        registry.get(&recep).map(|i| i.openable).unwrap_or(false);
                    if openable && !st.open.contains(&recep) {
                        report(
                            &mut findings,
                            index,
                            FindingCode::ReceptacleClosed,
                            format!("picking {class} out of the closed {recep}"),
                        );
                    }
                    st.placed.remove(at);
                } else if !st.located.contains(class) {
                    report(
                        &mut findings,
                        index,
                        FindingCode::MissingFind,
                        format!("{class} was never found"),
                    );
                    st.located.insert(class.to_owned());
                }
                st.held = Some(class.to_owned());
            }
            Verb::Put => {
                let Some(held) = st.held.clone() else {
                    report(
                        &mut findings,
                        index,
                        FindingCode::HandEmptyOnPut,
                        format!("putting into {class} with an empty hand"),
                    );
                    continue;
                };
                if !info.receptacle {
                    report(
                        &mut findings,
                        index,
                        FindingCode::AffordanceViolation,
                        format!("{class} is not a receptacle"),
                    );
                    continue;
                }
                if !st.located.contains(class) {
                    report(
                        &mut findings,
                        index,
                        FindingCode::MissingFind,
                        format!("{class} was never found"),
                    );
                    st.located.insert(class.to_owned());
                }
                if info.openable && !st.open.contains(class) {
                    report(
                        &mut findings,
                        index,
                        FindingCode::ReceptacleClosed,
                        format!("putting into {class} while its door is shut"),
                    );
                }
                st.placed.push((class.to_owned(), held));
                st.held = None;
            }
            Verb::Open | Verb::Close => {
                let opening = sg.verb == Verb::Open;
                if !info.openable {
                    report(
                        &mut findings,
                        index,
                        FindingCode::AffordanceViolation,
                        format!("{class} has no door"),
                    );
                    continue;
                }
                if !st.located.contains(class) {
                    report(
                        &mut findings,
                        index,
                        FindingCode::MissingFind,
                        format!("{class} was never found"),
                    );
                    st.located.insert(class.to_owned());
                }
                if st.open.contains(class) == opening {
                    report(
                        &mut findings,
                        index,
                        FindingCode::AffordanceViolation,
                        format!(
                            "{class} is already {}",
                            if opening { "open" } else { "closed" }
                        ),
                    );
                    continue;
                }
                if opening {
                    st.open.insert(class.to_owned());
                    st.ever_opened.insert(class.to_owned());
                } else {
                    st.open.remove(class);
                    // Shutting a fridge chills its contents.
                    if class == "Fridge" {
                        let contents = st.contents_of(class);
                        SymState::mark_contents(&mut st.cold, &contents);
                    }
                }
            }
            Verb::ToggleOn | Verb::ToggleOff => {
                let on = sg.verb == Verb::ToggleOn;
                if !info.toggleable {
                    report(
                        &mut findings,
                        index,
                        FindingCode::AffordanceViolation,
                        format!("{class} has no switch"),
                    );
                    continue;
                }
                if !st.located.contains(class) {
                    report(
                        &mut findings,
                        index,
                        FindingCode::MissingFind,
                        format!("{class} was never found"),
                    );
                    st.located.insert(class.to_owned());
                }
                if st.powered.contains(class) == on {
                    report(
                        &mut findings,
                        index,
                        FindingCode::AffordanceViolation,
                        format!("{class} is already {}", if on { "on" } else { "off" }),
                    );
                    continue;
                }
                if on {
                    st.powered.insert(class.to_owned());
                    if registry.is_lamp(class) {
                        if let Some(held) = &st.held {
                            let slot = st.examined.entry(held.clone()).or_insert(0);
                            *slot = (*slot).max(1);
                        }
                    }
                } else {
                    st.powered.remove(class);
                    match class {
                        "Faucet" => {
                            let contents = st.contents_of("SinkBasin");
                            SymState::mark_contents(&mut st.clean, &contents);
                        }
                        "Microwave" => {
                            // Heating happens only behind a closed door.
                            if !st.open.contains(class) {
                                let contents = st.contents_of(class);
                                SymState::mark_contents(&mut st.hot, &contents);
                            }
                        }
                        "StoveBurner" => {
                            let contents = st.contents_of(class);
                            SymState::mark_contents(&mut st.hot, &contents);
                        }
                        _ => {}
                    }
                }
            }
            Verb::Slice => {
                let holds_knife = st
                    .held
                    .as_deref()
                    .map(|h| registry.is_knife(h))
                    .unwrap_or(false);
                if !holds_knife {
                    report(
                        &mut findings,
                        index,
                        FindingCode::MissingKnife,
                        format!("slicing the {class} without a knife in hand"),
                    );
                }
                if !st.located.contains(class) {
                    report(
                        &mut findings,
                        index,
                        FindingCode::MissingFind,
                        format!("{class} was never found"),
                    );
                    st.located.insert(class.to_owned());
                }
                let Some(sliced) = registry.sliced_form(class) else {
                    report(
                        &mut findings,
                        index,
                        FindingCode::AffordanceViolation,
                        format!("{class} cannot be sliced"),
                    );
                    continue;
                };
                *st.sliced.entry(class.to_owned()).or_insert(0) += 1;
                st.located.insert(sliced);
            }
        }
    }

    // Goal audit: the walk is done; does the final symbolic state satisfy
    // every atom?
    let end = plan.len();
    for atom in &goal.atoms {
        let want = atom.count().max(1);
        let (have, desc) = match atom {
            GoalAtom::Placed { object, receptacle, .. } => {
                let n = st
                    .placed
                    .iter()
                    .filter(|(r, o)| r == receptacle && o == object)
                    .count() as u32;
                (n, format!("{object} in/on {receptacle}"))
            }
            GoalAtom::Clean { object, .. } => {
                (st.clean.get(object).copied().unwrap_or(0), format!("{object} clean"))
            }
            GoalAtom::Hot { object, .. } => {
                (st.hot.get(object).copied().unwrap_or(0), format!("{object} hot"))
            }
            GoalAtom::Cold { object, .. } => {
                (st.cold.get(object).copied().unwrap_or(0), format!("{object} cold"))
            }
            GoalAtom::Sliced { object, .. } => {
                (st.sliced.get(object).copied().unwrap_or(0), format!("{object} sliced"))
            }
            GoalAtom::Examined { object, .. } => (
                st.examined.get(object).copied().unwrap_or(0),
                format!("{object} examined"),
            ),
        };
        if have < want {
            findings.push(Finding {
                subgoal_index: end,
                code: FindingCode::GoalUnmet,
                detail: format!("{desc}: {have} of {want}"),
            });
        }
    }

    findings
}

// ---------------------------------------------------------------------------
// Mutation catalogue
// ---------------------------------------------------------------------------

/// Plan damage operators. Each produces a broken variant of a valid plan
/// (None when the plan has no site to damage) together with the finding
/// codes the validator must raise on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Delete the first Find: something gets used before it is located.
    DropFirstFind,
    /// Swap the first Pickup with the first Put: put with an empty hand.
    SwapPickupAndPut,
    /// Delete the first Open: work through a shut door.
    DropFirstOpen,
    /// Delete the knife Find+Pickup pair: slice bare-handed.
    DropKnifeAcquisition,
    /// Repeat the first Pickup: second grab with a full hand.
    DuplicateFirstPickup,
    /// Delete the first ToggleOff: the appliance never finishes its cycle.
    DropFirstToggleOff,
    /// Move the faucet cycle after the final put: washing an empty sink.
    WashAfterPlace,
    /// Retarget the final Put at a different receptacle.
    WrongFinalReceptacle,
}

impl Mutation {
    pub const ALL: [Mutation; 8] = [
        Mutation::DropFirstFind,
        Mutation::SwapPickupAndPut,
        Mutation::DropFirstOpen,
        Mutation::DropKnifeAcquisition,
        Mutation::DuplicateFirstPickup,
        Mutation::DropFirstToggleOff,
        Mutation::WashAfterPlace,
        Mutation::WrongFinalReceptacle,
    ];

    /// Finding codes this damage must produce (a subset check: collateral
    /// findings are expected).
    pub fn expected_codes(&self) -> &'static [FindingCode] {
        match self {
            Mutation::DropFirstFind => &[FindingCode::MissingFind],
            Mutation::SwapPickupAndPut => &[FindingCode::HandEmptyOnPut],
            Mutation::DropFirstOpen => &[FindingCode::ReceptacleClosed],
            Mutation::DropKnifeAcquisition => &[FindingCode::MissingKnife],
            Mutation::DuplicateFirstPickup => &[FindingCode::HandOccupied],
            Mutation::DropFirstToggleOff => &[FindingCode::GoalUnmet],
            Mutation::WashAfterPlace => &[FindingCode::GoalUnmet],
            Mutation::WrongFinalReceptacle => {
                &[FindingCode::MissingFind, FindingCode::GoalUnmet]
            }
        }
    }

    /// Apply the damage, or None when the plan has no applicable site.
    pub fn apply(
        &self,
        plan: &[SubgoalBinary],
        registry: &ClassRegistry,
    ) -> Option<Vec<SubgoalBinary>> {
        let mut out: Vec<SubgoalBinary> = plan.to_vec();
        match self {
            Mutation::DropFirstFind => {
                let at = out.iter().position(|b| b.verb == Verb::Find)?;
                out.remove(at);
            }
            Mutation::SwapPickupAndPut => {
                let pick = out.iter().position(|b| b.verb == Verb::Pickup)?;
                let put = out.iter().position(|b| b.verb == Verb::Put)?;
                out.swap(pick, put);
            }
            Mutation::DropFirstOpen => {
                let at = out.iter().position(|b| b.verb == Verb::Open)?;
                out.remove(at);
            }
            Mutation::DropKnifeAcquisition => {
                let find = out
                    .iter()
                    .position(|b| b.verb == Verb::Find && registry.is_knife(&b.arg))?;
                // The pickup follows immediately in every template.
                if out.get(find + 1).map(|b| b.verb) != Some(Verb::Pickup) {
                    return None;
                }
                out.drain(find..=find + 1);
            }
            Mutation::DuplicateFirstPickup => {
                let at = out.iter().position(|b| b.verb == Verb::Pickup)?;
                let dup = out[at].clone();
                out.insert(at + 1, dup);
            }
            Mutation::DropFirstToggleOff => {
                let at = out.iter().position(|b| b.verb == Verb::ToggleOff)?;
                out.remove(at);
            }
            Mutation::WashAfterPlace => {
                let on = out
                    .iter()
                    .position(|b| b.verb == Verb::ToggleOn && b.arg == "Faucet")?;
                let off = out
                    .iter()
                    .position(|b| b.verb == Verb::ToggleOff && b.arg == "Faucet")?;
                if off != on + 1 {
                    return None;
                }
                let pair: Vec<SubgoalBinary> = out.drain(on..=off).collect();
                out.extend(pair);
            }
            Mutation::WrongFinalReceptacle => {
                let at = out.iter().rposition(|b| b.verb == Verb::Put)?;
                let wrong = if out[at].arg == "GarbageCan" { "Bed" } else { "GarbageCan" };
                out[at].arg = wrong.to_owned();
            }
        }
        Some(out)
    }
}
