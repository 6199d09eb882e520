//! Task templates, subgoal phrasing, and instruction parsing.
//!
//! Planning is deliberately two-layered, mirroring a language planner in
//! front of a symbolic matcher:
//!
//! 1. [`plan_template`] expands a [`TaskSpec`] into natural-language
//!    *subgoal phrases* ("find a knife", "put the mug on the desk").
//! 2. [`match_phrase`] grounds each phrase into a *subgoal binary* — a
//!    `(verb, argument)` pair with an instance qualifier — rejecting
//!    unknown nouns instead of guessing.
//!
//! The twelve task templates expand to fixed subgoal sequences; sliced-
//! object targets insert the knife preamble (acquire knife, slice, park the
//! knife in a sink) so every emitted plan is executable under strict hand
//! semantics. [`plan_prefix_adapt`] rebinds appliance slots when a prefix
//! clause asserts presence or absence (microwave vs stove burner for heat;
//! cooling has no fallback and fails instead).
//!
//! [`parse_instruction`] and [`render_instruction`] translate between
//! instruction sentences and task specs; they are exact inverses over the
//! supported grammar, which the tests exercise template by template.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::registry::{ClassRegistry, Prep};
use crate::validate::{GoalAtom, GoalSpec};

const VERBS_CSV: &str = include_str!("../data/verbs.csv");

/// Default parking receptacle for the knife after slicing.
pub const DEFAULT_KNIFE_PARK: &str = "SinkBasin";
/// Appliances usable for heating, in preference order.
pub const HEAT_APPLIANCES: &[&str] = &["Microwave", "StoveBurner"];
/// Appliances usable for cooling, in preference order.
pub const COOL_APPLIANCES: &[&str] = &["Fridge"];

/// Subgoal verbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Find,
    Pickup,
    Put,
    Open,
    Close,
    ToggleOn,
    ToggleOff,
    Slice,
}

/// Which instance of a class a Find refers to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualifier {
    #[default]
    First,
    Another,
    Third,
    Fourth,
}

impl Qualifier {
    fn for_round(round: u32) -> Qualifier {
        match round {
            0 | 1 => Qualifier::First,
            2 => Qualifier::Another,
            3 => Qualifier::Third,
            _ => Qualifier::Fourth,
        }
    }
}

/// A grounded subgoal: verb, class argument, instance qualifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgoalBinary {
    pub verb: Verb,
    pub arg: String,
    #[serde(default, skip_serializing_if = "is_first")]
    pub qualifier: Qualifier,
}

fn is_first(q: &Qualifier) -> bool {
    *q == Qualifier::First
}

impl SubgoalBinary {
    pub fn new(verb: Verb, arg: impl Into<String>) -> Self {
        SubgoalBinary { verb, arg: arg.into(), qualifier: Qualifier::First }
    }

    pub fn with_qualifier(verb: Verb, arg: impl Into<String>, qualifier: Qualifier) -> Self {
        SubgoalBinary { verb, arg: arg.into(), qualifier }
    }
}

/// A natural-language subgoal phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubgoalPhrase(pub String);

impl fmt::Display for SubgoalPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The twelve supported task templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    PickAndPlace,
    PickTwoAndPlace,
    PickThreeAndPlace,
    StackAndPlace,
    CleanAndPlace,
    HeatAndPlace,
    CoolAndPlace,
    ExamineInLight,
    PickTwoCleanAndPlace,
    StackHeatAndPlace,
    StackCoolAndPlace,
    PickTwoStackAndPlace,
}

impl TaskType {
    pub const ALL: [TaskType; 12] = [
        TaskType::PickAndPlace,
        TaskType::PickTwoAndPlace,
        TaskType::PickThreeAndPlace,
        TaskType::StackAndPlace,
        TaskType::CleanAndPlace,
        TaskType::HeatAndPlace,
        TaskType::CoolAndPlace,
        TaskType::ExamineInLight,
        TaskType::PickTwoCleanAndPlace,
        TaskType::StackHeatAndPlace,
        TaskType::StackCoolAndPlace,
        TaskType::PickTwoStackAndPlace,
    ];

    /// Number of object slots the template binds.
    pub fn slots(&self) -> usize {
        match self {
            TaskType::StackAndPlace
            | TaskType::StackHeatAndPlace
            | TaskType::StackCoolAndPlace
            | TaskType::PickTwoStackAndPlace => 3,
            _ => 2,
        }
    }

    /// How many object instances the template moves.
    pub fn default_count(&self) -> u32 {
        match self {
            TaskType::PickTwoAndPlace
            | TaskType::PickTwoCleanAndPlace
            | TaskType::PickTwoStackAndPlace => 2,
            TaskType::PickThreeAndPlace => 3,
            _ => 1,
        }
    }
}

/// A parsed task: template, slot bindings, and the goal they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_type: TaskType,
    /// Slot order: `[object, receptacle]`, `[object, middle, receptacle]`
    /// for stacking, `[object, lamp]` for examination.
    pub objects: Vec<String>,
    pub count: u32,
    /// Receptacle the object must be fetched from, when instructed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<String>,
    /// Where the knife is parked after slicing (defaults to a sink basin).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knife_park: Option<String>,
    pub goal: GoalSpec,
}

/// One presence assertion from an instruction prefix clause
/// ("there is a stove burner and no microwave, ...").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixAssertion {
    pub class: String,
    pub present: bool,
}

/// An instruction: raw text plus its parsed prefix assertions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefix: Vec<PrefixAssertion>,
}

/// Result of parsing an instruction sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstruction {
    pub spec: TaskSpec,
    pub prefix: Vec<PrefixAssertion>,
}

/// Planning and parsing failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanError {
    /// A noun resolved to no registry class.
    UnknownObject(String),
    /// The sentence or spec fits no supported template.
    UnsupportedTemplate(String),
    /// A subgoal phrase is structurally broken (no verb, no noun, ...).
    MalformedPhrase(String),
    /// Every appliance alternative for a required role is asserted absent.
    NoFeasibleAppliance(String),
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::UnknownObject(n) => write!(f, "unknown object {n:?}"),
            PlanError::UnsupportedTemplate(t) => write!(f, "unsupported template: {t}"),
            PlanError::MalformedPhrase(p) => write!(f, "malformed phrase {p:?}"),
            PlanError::NoFeasibleAppliance(c) => {
                write!(f, "no feasible appliance for role {c:?}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PlanError {}

// ---------------------------------------------------------------------------
// Template expansion
// ---------------------------------------------------------------------------

struct TemplateCtx<'a> {
    registry: &'a ClassRegistry,
    out: Vec<SubgoalBinary>,
}

impl<'a> TemplateCtx<'a> {
    fn push(&mut self, verb: Verb, arg: &str) {
        self.out.push(SubgoalBinary::new(verb, arg));
    }

    fn push_q(&mut self, verb: Verb, arg: &str, q: Qualifier) {
        self.out.push(SubgoalBinary::with_qualifier(verb, arg, q));
    }

    /// Find + pick up one instance of `obj` for round `round`, going
    /// through the container or the knife preamble when required.
    ///
    /// Qualifiers ride on the Find alone: the Find disambiguates which
    /// instance is meant, and the manipulation that follows acts on
    /// whatever was just found.
    fn acquire(&mut self, obj: &str, round: u32, container: Option<&str>, park: &str) {
        let q = Qualifier::for_round(round);
        if let Some(base) = self.registry.sliced_base(obj).map(|s| s.to_owned()) {
            // Knife preamble: slice a fresh base object, park the knife.
            self.push(Verb::Find, "Knife");
            self.push(Verb::Pickup, "Knife");
            self.push_q(Verb::Find, &base, q);
            self.push(Verb::Slice, &base);
            self.push(Verb::Find, park);
            self.push(Verb::Put, park);
            self.push_q(Verb::Find, obj, q);
            self.push(Verb::Pickup, obj);
            return;
        }
        if let Some(container) = container {
            let openable =
                self.registry.get(container).map(|i| i.openable).unwrap_or(false);
            self.push(Verb::Find, container);
            if openable {
                self.push(Verb::Open, container);
            }
            self.push_q(Verb::Find, obj, q);
            self.push(Verb::Pickup, obj);
            if openable {
                self.push(Verb::Close, container);
            }
            return;
        }
        self.push_q(Verb::Find, obj, q);
        self.push(Verb::Pickup, obj);
    }

    /// Find the receptacle and deposit the held object, opening and closing
    /// around the put when the receptacle has a door.
    fn place_into(&mut self, recep: &str) {
        let openable = self.registry.get(recep).map(|i| i.openable).unwrap_or(false);
        self.push(Verb::Find, recep);
        if openable {
            self.push(Verb::Open, recep);
        }
        self.push(Verb::Put, recep);
        if openable {
            self.push(Verb::Close, recep);
        }
    }

    /// Run the held object (`carrier`) through a heat cycle.
    fn heat_cycle(&mut self, appliance: &str, carrier: &str) {
        match appliance {
            "StoveBurner" => {
                self.push(Verb::Find, appliance);
                self.push(Verb::Put, appliance);
                self.push(Verb::ToggleOn, appliance);
                self.push(Verb::ToggleOff, appliance);
                self.push(Verb::Pickup, carrier);
            }
            _ => {
                self.push(Verb::Find, appliance);
                self.push(Verb::Open, appliance);
                self.push(Verb::Put, appliance);
                self.push(Verb::Close, appliance);
                self.push(Verb::ToggleOn, appliance);
                self.push(Verb::ToggleOff, appliance);
                self.push(Verb::Open, appliance);
                self.push(Verb::Pickup, carrier);
                self.push(Verb::Close, appliance);
            }
        }
    }

    /// Run the held object through a chill cycle in an openable appliance.
    fn cool_cycle(&mut self, appliance: &str, carrier: &str) {
        self.push(Verb::Find, appliance);
        self.push(Verb::Open, appliance);
        self.push(Verb::Put, appliance);
        self.push(Verb::Close, appliance);
        self.push(Verb::Open, appliance);
        self.push(Verb::Pickup, carrier);
        self.push(Verb::Close, appliance);
    }
}

/// Role bindings chosen by prefix adaptation.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ApplianceBinding {
    heat: String,
    cool: String,
}

impl Default for ApplianceBinding {
    fn default() -> Self {
        ApplianceBinding { heat: "Microwave".into(), cool: "Fridge".into() }
    }
}

fn template_binaries(
    spec: &TaskSpec,
    binding: &ApplianceBinding,
    registry: &ClassRegistry,
) -> Result<Vec<SubgoalBinary>, PlanError> {
    if spec.objects.len() != spec.task_type.slots() {
        return Err(PlanError::UnsupportedTemplate(format!(
            "{:?} needs {} object slots, got {}",
            spec.task_type,
            spec.task_type.slots(),
            spec.objects.len()
        )));
    }
    for class in spec.objects.iter().chain(&spec.container).chain(&spec.knife_park) {
        if !registry.contains(class) {
            return Err(PlanError::UnknownObject(class.clone()));
        }
    }
    let park = spec.knife_park.clone().unwrap_or_else(|| DEFAULT_KNIFE_PARK.into());
    let mut ctx = TemplateCtx { registry, out: Vec::new() };
    let count = spec.count.max(1);
    let container = spec.container.as_deref();

    match spec.task_type {
        TaskType::PickAndPlace | TaskType::PickTwoAndPlace | TaskType::PickThreeAndPlace => {
            let (obj, recep) = (&spec.objects[0], &spec.objects[1]);
            for round in 1..=count {
                ctx.acquire(obj, round, container, &park);
                ctx.place_into(recep);
            }
        }
        TaskType::StackAndPlace | TaskType::PickTwoStackAndPlace => {
            let (obj, mid, recep) = (&spec.objects[0], &spec.objects[1], &spec.objects[2]);
            for round in 1..=count {
                ctx.acquire(obj, round, container, &park);
                ctx.push(Verb::Find, mid);
                ctx.push(Verb::Put, mid);
            }
            ctx.push(Verb::Pickup, mid);
            ctx.place_into(recep);
        }
        TaskType::CleanAndPlace | TaskType::PickTwoCleanAndPlace => {
            let (obj, recep) = (&spec.objects[0], &spec.objects[1]);
            for round in 1..=count {
                ctx.acquire(obj, round, container, &park);
                ctx.push(Verb::Find, "SinkBasin");
                ctx.push(Verb::Put, "SinkBasin");
            }
            ctx.push(Verb::ToggleOn, "Faucet");
            ctx.push(Verb::ToggleOff, "Faucet");
            for round in 1..=count {
                if round > 1 {
                    ctx.push(Verb::Find, "SinkBasin");
                }
                ctx.push(Verb::Pickup, obj);
                ctx.push(Verb::Find, recep);
                ctx.push(Verb::Put, recep);
            }
        }
        TaskType::HeatAndPlace => {
            let (obj, recep) = (&spec.objects[0], &spec.objects[1]);
            ctx.acquire(obj, 1, container, &park);
            ctx.heat_cycle(&binding.heat, obj);
            ctx.place_into(recep);
        }
        TaskType::CoolAndPlace => {
            let (obj, recep) = (&spec.objects[0], &spec.objects[1]);
            ctx.acquire(obj, 1, container, &park);
            ctx.cool_cycle(&binding.cool, obj);
            ctx.place_into(recep);
        }
        TaskType::ExamineInLight => {
            let (obj, lamp) = (&spec.objects[0], &spec.objects[1]);
            ctx.acquire(obj, 1, container, &park);
            ctx.push(Verb::Find, lamp);
            ctx.push(Verb::ToggleOn, lamp);
        }
        TaskType::StackHeatAndPlace => {
            let (obj, mid, recep) = (&spec.objects[0], &spec.objects[1], &spec.objects[2]);
            ctx.acquire(obj, 1, container, &park);
            ctx.push(Verb::Find, mid);
            ctx.push(Verb::Put, mid);
            ctx.push(Verb::Pickup, mid);
            ctx.heat_cycle(&binding.heat, mid);
            ctx.place_into(recep);
        }
        TaskType::StackCoolAndPlace => {
            let (obj, mid, recep) = (&spec.objects[0], &spec.objects[1], &spec.objects[2]);
            ctx.acquire(obj, 1, container, &park);
            ctx.push(Verb::Find, mid);
            ctx.push(Verb::Put, mid);
            ctx.push(Verb::Pickup, mid);
            ctx.cool_cycle(&binding.cool, mid);
            ctx.place_into(recep);
        }
    }
    Ok(ctx.out)
}

/// Expand a task spec into grounded subgoal binaries with the default
/// appliance bindings.
pub fn plan_binaries(
    spec: &TaskSpec,
    registry: &ClassRegistry,
) -> Result<Vec<SubgoalBinary>, PlanError> {
    template_binaries(spec, &ApplianceBinding::default(), registry)
}

/// Expand a task spec into subgoal phrases with default bindings.
pub fn plan_template(
    spec: &TaskSpec,
    registry: &ClassRegistry,
) -> Result<Vec<SubgoalPhrase>, PlanError> {
    Ok(render_plan(&plan_binaries(spec, registry)?, registry))
}

/// Expand a task spec under prefix assertions: appliance roles rebind to
/// the first alternative not asserted absent, and a plan is refused when a
/// required class has every alternative (or itself) asserted absent.
pub fn plan_prefix_adapt(
    spec: &TaskSpec,
    prefix: &[PrefixAssertion],
    registry: &ClassRegistry,
) -> Result<Vec<SubgoalPhrase>, PlanError> {
    let absent: BTreeSet<&str> =
        prefix.iter().filter(|a| !a.present).map(|a| a.class.as_str()).collect();

    let mut binding = ApplianceBinding::default();
    let needs_heat =
        matches!(spec.task_type, TaskType::HeatAndPlace | TaskType::StackHeatAndPlace);
    let needs_cool =
        matches!(spec.task_type, TaskType::CoolAndPlace | TaskType::StackCoolAndPlace);
    if needs_heat {
        binding.heat = pick_appliance(HEAT_APPLIANCES, &absent)?;
    }
    if needs_cool {
        binding.cool = pick_appliance(COOL_APPLIANCES, &absent)?;
    }

    let binaries = template_binaries(spec, &binding, registry)?;
    // A plan that names an absent-asserted class cannot succeed; refuse it
    // rather than emit a contradiction.
    for b in &binaries {
        if absent.contains(b.arg.as_str()) {
            return Err(PlanError::NoFeasibleAppliance(b.arg.clone()));
        }
    }
    Ok(render_plan(&binaries, registry))
}

fn pick_appliance(options: &[&str], absent: &BTreeSet<&str>) -> Result<String, PlanError> {
    options
        .iter()
        .find(|o| !absent.contains(**o))
        .map(|o| (*o).to_owned())
        .ok_or_else(|| PlanError::NoFeasibleAppliance(options[0].to_owned()))
}

// ---------------------------------------------------------------------------
// Phrase rendering and matching
// ---------------------------------------------------------------------------

/// Render a plan as subgoal phrases, tracking which classes have been
/// introduced (first mention gets "a", later ones "the") and what the hand
/// holds (puts phrase the held object).
pub fn render_plan(plan: &[SubgoalBinary], registry: &ClassRegistry) -> Vec<SubgoalPhrase> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut held: Option<&str> = None;
    let mut out = Vec::with_capacity(plan.len());
    for b in plan {
        let noun = registry.noun_phrase(&b.arg);
        let text = match b.verb {
            Verb::Find => {
                let det = match b.qualifier {
                    Qualifier::Another => "another".to_owned(),
                    Qualifier::Third => "a third".to_owned(),
                    Qualifier::Fourth => "a fourth".to_owned(),
                    Qualifier::First => {
                        if seen.contains(b.arg.as_str()) {
                            "the".to_owned()
                        } else {
                            registry.article(&b.arg).to_owned()
                        }
                    }
                };
                format!("find {det} {noun}")
            }
            Verb::Pickup => format!("pick up the {noun}"),
            Verb::Put => {
                let prep = registry.get(&b.arg).map(|i| i.put_prep).unwrap_or(Prep::On);
                let held_noun = held
                    .map(|h| format!("the {}", registry.noun_phrase(h)))
                    .unwrap_or_else(|| "it".to_owned());
                format!("put {held_noun} {} the {noun}", prep.word())
            }
            Verb::Open => format!("open the {noun}"),
            Verb::Close => format!("close the {noun}"),
            Verb::ToggleOn => format!("toggle the {noun} on"),
            Verb::ToggleOff => format!("toggle the {noun} off"),
            Verb::Slice => format!("slice the {noun}"),
        };
        match b.verb {
            Verb::Pickup => held = Some(&b.arg),
            Verb::Put => held = None,
            _ => {}
        }
        seen.insert(&b.arg);
        out.push(SubgoalPhrase(text));
    }
    out
}

struct VerbLexicon {
    /// (phrase words, token), longest phrases first.
    entries: Vec<(Vec<String>, String)>,
}

impl VerbLexicon {
    fn builtin() -> Self {
        let mut entries: Vec<(Vec<String>, String)> = VERBS_CSV
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (phrase, token) = l.split_once(',').expect("verb row is `phrase,token`");
                (
                    phrase.trim().split(' ').map(|w| w.to_owned()).collect(),
                    token.trim().to_owned(),
                )
            })
            .collect();
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
        VerbLexicon { entries }
    }

    /// Longest verb phrase matching the start of `words`, returning the
    /// verb token and how many words it consumed.
    fn match_prefix(&self, words: &[&str]) -> Option<(&str, usize)> {
        for (phrase, token) in &self.entries {
            if phrase.len() <= words.len()
                && phrase.iter().zip(words).all(|(p, w)| p == w)
            {
                return Some((token, phrase.len()));
            }
        }
        None
    }
}

fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .map(|c| c.to_ascii_lowercase())
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Strip a leading article/qualifier, returning the qualifier it implied.
fn strip_determiner<'a>(words: &'a [&'a str]) -> (&'a [&'a str], Qualifier) {
    let mut rest = words;
    // Tolerate "an another ..." style doubling.
    while let Some(first) = rest.first() {
        match *first {
            "a" | "an" | "the" => rest = &rest[1..],
            "another" => return (&rest[1..], Qualifier::Another),
            "third" => return (&rest[1..], Qualifier::Third),
            "fourth" => return (&rest[1..], Qualifier::Fourth),
            _ => break,
        }
    }
    (rest, Qualifier::First)
}

/// Ground one subgoal phrase into a binary. Unknown nouns are errors.
pub fn match_phrase(phrase: &str, registry: &ClassRegistry) -> Result<SubgoalBinary, PlanError> {
    let tokens = tokenize(phrase);
    let words: Vec<&str> = tokens.iter().map(|s| s.as_str()).collect();
    if words.is_empty() {
        return Err(PlanError::MalformedPhrase(phrase.to_owned()));
    }
    let lexicon = VerbLexicon::builtin();
    let Some((token, used)) = lexicon.match_prefix(&words) else {
        return Err(PlanError::MalformedPhrase(phrase.to_owned()));
    };
    let mut rest = &words[used..];

    let verb = match token {
        "find" => Verb::Find,
        "pickup" => Verb::Pickup,
        "open" => Verb::Open,
        "close" => Verb::Close,
        "slice" => Verb::Slice,
        "put" => Verb::Put,
        "toggle" => {
            // Polarity word sits either right after the verb ("turn on the
            // lamp") or at the end ("toggle the lamp on").
            let mut polarity = None;
            if let Some(first) = rest.first() {
                if *first == "on" || *first == "off" {
                    polarity = Some(*first == "on");
                    rest = &rest[1..];
                }
            }
            if polarity.is_none() {
                if let Some(last) = rest.last() {
                    if *last == "on" || *last == "off" {
                        polarity = Some(*last == "on");
                        rest = &rest[..rest.len() - 1];
                    }
                }
            }
            match polarity {
                Some(true) => Verb::ToggleOn,
                Some(false) => Verb::ToggleOff,
                None => return Err(PlanError::MalformedPhrase(phrase.to_owned())),
            }
        }
        _ => return Err(PlanError::MalformedPhrase(phrase.to_owned())),
    };

    if verb == Verb::Put {
        // "put [the held thing] in/on the receptacle" — the noun before the
        // preposition names the held object and is not the argument.
        let prep_at = rest
            .iter()
            .position(|w| matches!(*w, "in" | "on" | "into" | "onto"))
            .ok_or_else(|| PlanError::MalformedPhrase(phrase.to_owned()))?;
        let (recep_words, _) = strip_determiner(&rest[prep_at + 1..]);
        let noun = recep_words.join(" ");
        let class = registry
            .canonical(&noun)
            .ok_or(PlanError::UnknownObject(noun))?;
        return Ok(SubgoalBinary::new(Verb::Put, class));
    }

    let (noun_words, qualifier) = strip_determiner(rest);
    if noun_words.is_empty() {
        return Err(PlanError::MalformedPhrase(phrase.to_owned()));
    }
    let noun = noun_words.join(" ");
    let class = registry.canonical(&noun).ok_or(PlanError::UnknownObject(noun))?;
    Ok(SubgoalBinary::with_qualifier(verb, class, qualifier))
}

/// Ground a whole plan of phrases, failing on the first bad phrase.
pub fn match_plan(
    phrases: &[SubgoalPhrase],
    registry: &ClassRegistry,
) -> Result<Vec<SubgoalBinary>, PlanError> {
    phrases.iter().map(|p| match_phrase(&p.0, registry)).collect()
}

// ---------------------------------------------------------------------------
// Goal derivation
// ---------------------------------------------------------------------------

/// The goal conditions a task spec commits to.
pub fn goal_for(
    task_type: TaskType,
    objects: &[String],
    count: u32,
    registry: &ClassRegistry,
) -> GoalSpec {
    let count = count.max(1);
    let mut atoms = Vec::new();
    let sliced_extra = |atoms: &mut Vec<GoalAtom>, obj: &String| {
        if let Some(base) = registry.sliced_base(obj) {
            atoms.push(GoalAtom::Sliced { object: base.to_owned(), count });
        }
    };
    match task_type {
        TaskType::PickAndPlace | TaskType::PickTwoAndPlace | TaskType::PickThreeAndPlace => {
            sliced_extra(&mut atoms, &objects[0]);
            atoms.push(GoalAtom::Placed {
                object: objects[0].clone(),
                receptacle: objects[1].clone(),
                count,
            });
        }
        TaskType::StackAndPlace | TaskType::PickTwoStackAndPlace => {
            sliced_extra(&mut atoms, &objects[0]);
            atoms.push(GoalAtom::Placed {
                object: objects[0].clone(),
                receptacle: objects[1].clone(),
                count,
            });
            atoms.push(GoalAtom::Placed {
                object: objects[1].clone(),
                receptacle: objects[2].clone(),
                count: 1,
            });
        }
        TaskType::CleanAndPlace | TaskType::PickTwoCleanAndPlace => {
            atoms.push(GoalAtom::Clean { object: objects[0].clone(), count });
            atoms.push(GoalAtom::Placed {
                object: objects[0].clone(),
                receptacle: objects[1].clone(),
                count,
            });
        }
        TaskType::HeatAndPlace => {
            atoms.push(GoalAtom::Hot { object: objects[0].clone(), count });
            atoms.push(GoalAtom::Placed {
                object: objects[0].clone(),
                receptacle: objects[1].clone(),
                count,
            });
        }
        TaskType::CoolAndPlace => {
            atoms.push(GoalAtom::Cold { object: objects[0].clone(), count });
            atoms.push(GoalAtom::Placed {
                object: objects[0].clone(),
                receptacle: objects[1].clone(),
                count,
            });
        }
        TaskType::ExamineInLight => {
            atoms.push(GoalAtom::Examined { object: objects[0].clone(), count });
        }
        TaskType::StackHeatAndPlace => {
            sliced_extra(&mut atoms, &objects[0]);
            atoms.push(GoalAtom::Hot { object: objects[0].clone(), count });
            atoms.push(GoalAtom::Placed {
                object: objects[0].clone(),
                receptacle: objects[1].clone(),
                count,
            });
            atoms.push(GoalAtom::Placed {
                object: objects[1].clone(),
                receptacle: objects[2].clone(),
                count: 1,
            });
        }
        TaskType::StackCoolAndPlace => {
            sliced_extra(&mut atoms, &objects[0]);
            atoms.push(GoalAtom::Cold { object: objects[0].clone(), count });
            atoms.push(GoalAtom::Placed {
                object: objects[0].clone(),
                receptacle: objects[1].clone(),
                count,
            });
            atoms.push(GoalAtom::Placed {
                object: objects[1].clone(),
                receptacle: objects[2].clone(),
                count: 1,
            });
        }
    }
    GoalSpec { atoms }
}

impl TaskSpec {
    /// Build a spec with its induced goal.
    pub fn new(
        task_type: TaskType,
        objects: Vec<String>,
        count: u32,
        container: Option<String>,
        knife_park: Option<String>,
        registry: &ClassRegistry,
    ) -> TaskSpec {
        let count = if count == 0 { task_type.default_count() } else { count };
        let goal = goal_for(task_type, &objects, count, registry);
        TaskSpec { task_type, objects, count, container, knife_park, goal }
    }
}

// ---------------------------------------------------------------------------
// Instruction grammar
// ---------------------------------------------------------------------------

fn count_word(n: u32) -> &'static str {
    match n {
        2 => "two",
        3 => "three",
        4 => "four",
        _ => "a",
    }
}

fn parse_count_word(w: &str) -> Option<u32> {
    match w {
        "a" | "an" | "one" => Some(1),
        "two" => Some(2),
        "three" => Some(3),
        "four" => Some(4),
        _ => None,
    }
}

/// Pluralise a lowercase noun phrase ("box" → "boxes", "knife" → "knives").
fn plural(phrase: &str) -> String {
    if let Some(stem) = phrase.strip_suffix("fe") {
        return format!("{stem}ves");
    }
    if phrase.ends_with('s')
        || phrase.ends_with('x')
        || phrase.ends_with("sh")
        || phrase.ends_with("ch")
    {
        return format!("{phrase}es");
    }
    format!("{phrase}s")
}

fn counted_noun(registry: &ClassRegistry, class: &str, n: u32) -> String {
    let noun = registry.noun_phrase(class);
    if n >= 2 {
        format!("{} {}", count_word(n), plural(&noun))
    } else {
        format!("{} {}", registry.article(class), noun)
    }
}

fn prep_word(registry: &ClassRegistry, class: &str) -> &'static str {
    registry.get(class).map(|i| i.put_prep).unwrap_or(Prep::On).word()
}

/// Render a task spec (plus optional prefix assertions) as an instruction
/// sentence. The exact inverse of [`parse_instruction`].
pub fn render_instruction(
    spec: &TaskSpec,
    prefix: &[PrefixAssertion],
    registry: &ClassRegistry,
) -> String {
    let mut out = String::new();
    if !prefix.is_empty() {
        let parts: Vec<String> = prefix
            .iter()
            .map(|a| {
                let noun = registry.noun_phrase(&a.class);
                if a.present {
                    format!("{} {}", registry.article(&a.class), noun)
                } else {
                    format!("no {noun}")
                }
            })
            .collect();
        out.push_str("there is ");
        out.push_str(&parts.join(" and "));
        out.push_str(", ");
    }

    let n = spec.count.max(1);
    let body = match spec.task_type {
        TaskType::PickAndPlace | TaskType::PickTwoAndPlace | TaskType::PickThreeAndPlace => {
            let (obj, recep) = (&spec.objects[0], &spec.objects[1]);
            if let (Some(park), Some(base)) =
                (spec.knife_park.as_ref(), registry.sliced_base(obj))
            {
                format!(
                    "slice {} {}, put the knife {} the {}, and put the {} {} the {}",
                    registry.article(base),
                    registry.noun_phrase(base),
                    prep_word(registry, park),
                    registry.noun_phrase(park),
                    registry.noun_phrase(obj),
                    prep_word(registry, recep),
                    registry.noun_phrase(recep),
                )
            } else {
                let from = spec
                    .container
                    .as_ref()
                    .map(|c| format!(" from the {}", registry.noun_phrase(c)))
                    .unwrap_or_default();
                format!(
                    "put {}{} {} the {}",
                    counted_noun(registry, obj, n),
                    from,
                    prep_word(registry, recep),
                    registry.noun_phrase(recep),
                )
            }
        }
        TaskType::StackAndPlace | TaskType::PickTwoStackAndPlace => {
            let (obj, mid, recep) = (&spec.objects[0], &spec.objects[1], &spec.objects[2]);
            format!(
                "put {} on {} {} and move the {} to the {}",
                counted_noun(registry, obj, n),
                registry.article(mid),
                registry.noun_phrase(mid),
                registry.noun_phrase(mid),
                registry.noun_phrase(recep),
            )
        }
        TaskType::CleanAndPlace | TaskType::PickTwoCleanAndPlace => {
            let (obj, recep) = (&spec.objects[0], &spec.objects[1]);
            format!(
                "wash {} and put {} {} the {}",
                counted_noun(registry, obj, n),
                if n >= 2 { "them" } else { "it" },
                prep_word(registry, recep),
                registry.noun_phrase(recep),
            )
        }
        TaskType::HeatAndPlace | TaskType::CoolAndPlace => {
            let verb = if spec.task_type == TaskType::HeatAndPlace { "heat" } else { "cool" };
            let (obj, recep) = (&spec.objects[0], &spec.objects[1]);
            format!(
                "{} {} and put it {} the {}",
                verb,
                counted_noun(registry, obj, 1),
                prep_word(registry, recep),
                registry.noun_phrase(recep),
            )
        }
        TaskType::ExamineInLight => {
            let (obj, lamp) = (&spec.objects[0], &spec.objects[1]);
            format!(
                "examine {} under the {}",
                counted_noun(registry, obj, 1),
                registry.noun_phrase(lamp),
            )
        }
        TaskType::StackHeatAndPlace | TaskType::StackCoolAndPlace => {
            let verb =
                if spec.task_type == TaskType::StackHeatAndPlace { "heat" } else { "cool" };
            let (obj, mid, recep) = (&spec.objects[0], &spec.objects[1], &spec.objects[2]);
            format!(
                "{} {} on {} {} and put the {} {} the {}",
                verb,
                counted_noun(registry, obj, 1),
                registry.article(mid),
                registry.noun_phrase(mid),
                registry.noun_phrase(mid),
                prep_word(registry, recep),
                registry.noun_phrase(recep),
            )
        }
    };
    out.push_str(&body);
    out
}

/// Split `text` once around the first standalone occurrence of any word in
/// `seps`, returning the words before and after.
fn split_words<'a>(words: &'a [&'a str], seps: &[&str]) -> Option<(&'a [&'a str], &'a [&'a str], usize)> {
    words
        .iter()
        .position(|w| seps.contains(w))
        .map(|i| (&words[..i], &words[i + 1..], i))
}

fn resolve_noun(words: &[&str], registry: &ClassRegistry) -> Result<String, PlanError> {
    let phrase = words.join(" ");
    registry.canonical(&phrase).ok_or(PlanError::UnknownObject(phrase))
}

/// Parse "{count-or-article} {noun...}" → (count, class).
fn parse_counted(words: &[&str], registry: &ClassRegistry) -> Result<(u32, String), PlanError> {
    let Some(first) = words.first() else {
        return Err(PlanError::MalformedPhrase(words.join(" ")));
    };
    if let Some(n) = parse_count_word(first) {
        Ok((n, resolve_noun(&words[1..], registry)?))
    } else if *first == "the" {
        Ok((1, resolve_noun(&words[1..], registry)?))
    } else {
        Ok((1, resolve_noun(words, registry)?))
    }
}

/// Parse "{prep} the {noun}" at the tail of a placement clause.
fn parse_placement(words: &[&str], registry: &ClassRegistry) -> Result<String, PlanError> {
    let (_, after, _) = split_words(words, &["in", "on", "into", "onto", "to"])
        .ok_or_else(|| PlanError::MalformedPhrase(words.join(" ")))?;
    let (noun, _) = strip_determiner(after);
    resolve_noun(noun, registry)
}

/// Parse an instruction sentence into a task spec and prefix assertions.
///
/// Grammar (case-insensitive, punctuation-tolerant):
/// - optional prefix: `there is a X [and no Y ...] , ...`
/// - `put a/two/three/four OBJ [from the C] in/on the R`
/// - `put a/two OBJ on a M and move the M to the R`
/// - `wash a/two OBJ and put it/them in/on the R`
/// - `heat/cool a OBJ and put it in/on the R`
/// - `heat/cool a OBJ on a M and put the M in/on the R`
/// - `examine a OBJ under the L`
/// - `slice a B, put the knife in the P, and put the sliced B in/on the R`
pub fn parse_instruction(
    text: &str,
    registry: &ClassRegistry,
) -> Result<ParsedInstruction, PlanError> {
    let lower = text.to_ascii_lowercase();
    let mut main = lower.trim();

    // Prefix clause.
    let mut prefix = Vec::new();
    if main.starts_with("there is ") || main.starts_with("there are ") {
        let Some((clause, rest)) = main.split_once(',') else {
            return Err(PlanError::MalformedPhrase(text.to_owned()));
        };
        let clause = clause
            .trim_start_matches("there is ")
            .trim_start_matches("there are ");
        for seg in clause.split(" and ") {
            let words = tokenize(seg);
            let w: Vec<&str> = words.iter().map(|s| s.as_str()).collect();
            if w.is_empty() {
                continue;
            }
            let (present, noun_words) = if w[0] == "no" {
                (false, &w[1..])
            } else {
                let (stripped, _) = strip_determiner(&w);
                (true, stripped)
            };
            prefix.push(PrefixAssertion {
                class: resolve_noun(noun_words, registry)?,
                present,
            });
        }
        main = rest.trim();
    }

    // Compound slice form, recognised by its leading verb and commas.
    if main.starts_with("slice ") {
        let parts: Vec<&str> = main.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(PlanError::UnsupportedTemplate(text.to_owned()));
        }
        let base_words = tokenize(parts[0]);
        let bw: Vec<&str> = base_words.iter().map(|s| s.as_str()).collect();
        let (base_noun, _) = strip_determiner(&bw[1..]);
        let base = resolve_noun(base_noun, registry)?;
        let park_words = tokenize(parts[1]);
        let pw: Vec<&str> = park_words.iter().map(|s| s.as_str()).collect();
        if pw.first() != Some(&"put") {
            return Err(PlanError::UnsupportedTemplate(text.to_owned()));
        }
        let park = parse_placement(&pw[1..], registry)?;
        let final_words = tokenize(parts[2].trim_start_matches("and "));
        let fw: Vec<&str> = final_words.iter().map(|s| s.as_str()).collect();
        if fw.first() != Some(&"put") {
            return Err(PlanError::UnsupportedTemplate(text.to_owned()));
        }
        let recep = parse_placement(&fw[1..], registry)?;
        let sliced = registry
            .sliced_form(&base)
            .ok_or_else(|| PlanError::UnsupportedTemplate(text.to_owned()))?;
        let spec = TaskSpec::new(
            TaskType::PickAndPlace,
            vec![sliced, recep],
            1,
            None,
            Some(park),
            registry,
        );
        return Ok(ParsedInstruction { spec, prefix });
    }

    let tokens = tokenize(main);
    let words: Vec<&str> = tokens.iter().map(|s| s.as_str()).collect();
    let Some(head) = words.first() else {
        return Err(PlanError::MalformedPhrase(text.to_owned()));
    };

    let spec = match *head {
        "examine" => {
            let (before, rest, _) = split_words(&words[1..], &["under"])
                .ok_or_else(|| PlanError::UnsupportedTemplate(text.to_owned()))?;
            let (_, obj) = parse_counted(before, registry)?;
            let (lamp_words, _) = strip_determiner(rest);
            let lamp = resolve_noun(lamp_words, registry)?;
            TaskSpec::new(TaskType::ExamineInLight, vec![obj, lamp], 1, None, None, registry)
        }
        "heat" | "cool" => {
            let hot = *head == "heat";
            let (first, second, _) = split_words(&words, &["and"])
                .ok_or_else(|| PlanError::UnsupportedTemplate(text.to_owned()))?;
            // Stacked form carries an "on a M" inside the first clause.
            if let Some((obj_part, mid_part, _)) = split_words(&first[1..], &["on"]) {
                let (_, obj) = parse_counted(obj_part, registry)?;
                let (mid_words, _) = strip_determiner(mid_part);
                let mid = resolve_noun(mid_words, registry)?;
                if second.first() != Some(&"put") {
                    return Err(PlanError::UnsupportedTemplate(text.to_owned()));
                }
                let recep = parse_placement(&second[1..], registry)?;
                let tt = if hot { TaskType::StackHeatAndPlace } else { TaskType::StackCoolAndPlace };
                TaskSpec::new(tt, vec![obj, mid, recep], 1, None, None, registry)
            } else {
                let (_, obj) = parse_counted(&first[1..], registry)?;
                if second.first() != Some(&"put") {
                    return Err(PlanError::UnsupportedTemplate(text.to_owned()));
                }
                let recep = parse_placement(&second[1..], registry)?;
                let tt = if hot { TaskType::HeatAndPlace } else { TaskType::CoolAndPlace };
                TaskSpec::new(tt, vec![obj, recep], 1, None, None, registry)
            }
        }
        "wash" | "clean" => {
            let (first, second, _) = split_words(&words, &["and"])
                .ok_or_else(|| PlanError::UnsupportedTemplate(text.to_owned()))?;
            let (count, obj) = parse_counted(&first[1..], registry)?;
            if second.first() != Some(&"put") {
                return Err(PlanError::UnsupportedTemplate(text.to_owned()));
            }
            let recep = parse_placement(&second[1..], registry)?;
            let tt = if count >= 2 {
                TaskType::PickTwoCleanAndPlace
            } else {
                TaskType::CleanAndPlace
            };
            TaskSpec::new(tt, vec![obj, recep], count, None, None, registry)
        }
        "put" | "place" => {
            if let Some((first, second, _)) = split_words(&words, &["and"]) {
                // "put N OBJ on a M and move the M to the R"
                if second.first() != Some(&"move") {
                    return Err(PlanError::UnsupportedTemplate(text.to_owned()));
                }
                let (obj_part, mid_part, _) = split_words(&first[1..], &["on"])
                    .ok_or_else(|| PlanError::UnsupportedTemplate(text.to_owned()))?;
                let (count, obj) = parse_counted(obj_part, registry)?;
                let (mid_words, _) = strip_determiner(mid_part);
                let mid = resolve_noun(mid_words, registry)?;
                let (mid2_part, recep_part, _) = split_words(&second[1..], &["to"])
                    .ok_or_else(|| PlanError::UnsupportedTemplate(text.to_owned()))?;
                let (mid2_words, _) = strip_determiner(mid2_part);
                let mid2 = resolve_noun(mid2_words, registry)?;
                if mid2 != mid {
                    return Err(PlanError::UnsupportedTemplate(text.to_owned()));
                }
                let (recep_words, _) = strip_determiner(recep_part);
                let recep = resolve_noun(recep_words, registry)?;
                let tt = if count >= 2 {
                    TaskType::PickTwoStackAndPlace
                } else {
                    TaskType::StackAndPlace
                };
                TaskSpec::new(tt, vec![obj, mid, recep], count, None, None, registry)
            } else {
                // "put N OBJ [from the C] in/on the R"
                let (container, rest): (Option<String>, Vec<&str>) =
                    if let Some((before, after, _)) = split_words(&words[1..], &["from"]) {
                        let (c_words, tail, at) =
                            split_words(after, &["in", "on", "into", "onto"]).ok_or_else(
                                || PlanError::MalformedPhrase(text.to_owned()),
                            )?;
                        let (c_noun, _) = strip_determiner(c_words);
                        let container = resolve_noun(c_noun, registry)?;
                        let mut rest = before.to_vec();
                        rest.push(after[at]);
                        rest.extend_from_slice(tail);
                        (Some(container), rest)
                    } else {
                        (None, words[1..].to_vec())
                    };
                let (before_prep, _after, _) =
                    split_words(&rest, &["in", "on", "into", "onto"])
                        .ok_or_else(|| PlanError::MalformedPhrase(text.to_owned()))?;
                let (count, obj) = parse_counted(before_prep, registry)?;
                let recep = parse_placement(&rest, registry)?;
                let tt = match count {
                    2 => TaskType::PickTwoAndPlace,
                    3 => TaskType::PickThreeAndPlace,
                    _ => TaskType::PickAndPlace,
                };
                TaskSpec::new(tt, vec![obj, recep], count, container, None, registry)
            }
        }
        _ => return Err(PlanError::UnsupportedTemplate(text.to_owned())),
    };

    Ok(ParsedInstruction { spec, prefix })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> ClassRegistry {
        ClassRegistry::builtin()
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

    fn texts(phrases: &[SubgoalPhrase]) -> Vec<&str> {
        phrases.iter().map(|p| p.0.as_str()).collect()
    }

    #[test]
    fn heat_and_place_expands_to_the_thirteen_step_sequence() {
        let phrases = plan_template(&spec(TaskType::HeatAndPlace, &["Mug", "Shelf"], 1), &reg())
            .unwrap();
        assert_eq!(
            texts(&phrases),
            vec![
                "find a mug",
                "pick up the mug",
                "find a microwave",
                "open the microwave",
                "put the mug in the microwave",
                "close the microwave",
                "toggle the microwave on",
                "toggle the microwave off",
                "open the microwave",
                "pick up the mug",
                "close the microwave",
                "find a shelf",
                "put the mug on the shelf",
            ]
        );
    }

    #[test]
    fn cool_and_place_brackets_an_openable_destination() {
        let phrases =
            plan_template(&spec(TaskType::CoolAndPlace, &["Egg", "Microwave"], 1), &reg())
                .unwrap();
        assert_eq!(
            texts(&phrases),
            vec![
                "find an egg",
                "pick up the egg",
                "find a fridge",
                "open the fridge",
                "put the egg in the fridge",
                "close the fridge",
                "open the fridge",
                "pick up the egg",
                "close the fridge",
                "find a microwave",
                "open the microwave",
                "put the egg in the microwave",
                "close the microwave",
            ]
        );
        assert_eq!(phrases.len(), 13);
    }

    #[test]
    fn clean_and_place_washes_then_places() {
        let phrases =
            plan_template(&spec(TaskType::CleanAndPlace, &["Spoon", "DiningTable"], 1), &reg())
                .unwrap();
        assert_eq!(
            texts(&phrases),
            vec![
                "find a spoon",
                "pick up the spoon",
                "find a sink basin",
                "put the spoon in the sink basin",
                "toggle the faucet on",
                "toggle the faucet off",
                "pick up the spoon",
                "find a dining table",
                "put the spoon on the dining table",
            ]
        );
    }

    #[test]
    fn two_spoon_wash_interleaves_rounds_correctly() {
        let phrases = plan_template(
            &spec(TaskType::PickTwoCleanAndPlace, &["Spoon", "DiningTable"], 2),
            &reg(),
        )
        .unwrap();
        assert_eq!(
            texts(&phrases),
            vec![
                "find a spoon",
                "pick up the spoon",
                "find a sink basin",
                "put the spoon in the sink basin",
                "find another spoon",
                "pick up the spoon",
                "find the sink basin",
                "put the spoon in the sink basin",
                "toggle the faucet on",
                "toggle the faucet off",
                "pick up the spoon",
                "find a dining table",
                "put the spoon on the dining table",
                "find the sink basin",
                "pick up the spoon",
                "find the dining table",
                "put the spoon on the dining table",
            ]
        );
        assert_eq!(phrases.len(), 17);
    }

    #[test]
    fn pick_counts_expand_to_repeated_rounds() {
        let two = plan_binaries(&spec(TaskType::PickTwoAndPlace, &["PepperShaker", "Shelf"], 2), &reg())
            .unwrap();
        assert_eq!(two.len(), 8, "two rounds of find/pick/find/put");
        assert_eq!(two[4].qualifier, Qualifier::Another);
        let four = plan_binaries(&spec(TaskType::PickAndPlace, &["Disc", "Shelf"], 4), &reg())
            .unwrap();
        assert_eq!(four.len(), 16, "four repeated rounds");
        assert_eq!(four[8].qualifier, Qualifier::Third);
        assert_eq!(four[12].qualifier, Qualifier::Fourth);
        let three =
            plan_binaries(&spec(TaskType::PickThreeAndPlace, &["Disc", "Shelf"], 3), &reg())
                .unwrap();
        assert_eq!(three.len(), 12);
    }

    #[test]
    fn stack_and_place_matches_the_seven_step_sequence() {
        let phrases =
            plan_template(&spec(TaskType::StackAndPlace, &["CreditCard", "Box", "Shelf"], 1), &reg())
                .unwrap();
        assert_eq!(
            texts(&phrases),
            vec![
                "find a credit card",
                "pick up the credit card",
                "find a box",
                "put the credit card in the box",
                "pick up the box",
                "find a shelf",
                "put the box on the shelf",
            ]
        );
    }

    #[test]
    fn sliced_target_inserts_knife_preamble_and_parks_the_knife() {
        let phrases =
            plan_template(&spec(TaskType::PickAndPlace, &["SlicedTomato", "Fridge"], 1), &reg())
                .unwrap();
        assert_eq!(
            texts(&phrases),
            vec![
                "find a knife",
                "pick up the knife",
                "find a tomato",
                "slice the tomato",
                "find a sink basin",
                "put the knife in the sink basin",
                "find a sliced tomato",
                "pick up the sliced tomato",
                "find a fridge",
                "open the fridge",
                "put the sliced tomato in the fridge",
                "close the fridge",
            ]
        );
        assert_eq!(phrases.len(), 12);
    }

    #[test]
    fn examine_is_four_steps_ending_in_toggle_on() {
        let bins =
            plan_binaries(&spec(TaskType::ExamineInLight, &["Book", "DeskLamp"], 1), &reg())
                .unwrap();
        assert_eq!(bins.len(), 4);
        assert_eq!(bins[3], SubgoalBinary::new(Verb::ToggleOn, "DeskLamp"));
    }

    #[test]
    fn stack_heat_reuses_the_microwave_cycle_on_the_carrier() {
        let bins = plan_binaries(
            &spec(TaskType::StackHeatAndPlace, &["SlicedTomato", "Plate", "SideTable"], 1),
            &reg(),
        )
        .unwrap();
        // Preamble (8) + stack (3) + microwave cycle (9) + place (2).
        assert_eq!(bins.len(), 22);
        let puts: Vec<&str> = bins
            .iter()
            .filter(|b| b.verb == Verb::Put)
            .map(|b| b.arg.as_str())
            .collect();
        assert_eq!(puts, vec!["SinkBasin", "Plate", "Microwave", "SideTable"]);
    }

    #[test]
    fn pick_two_stack_matches_the_eleven_step_sequence() {
        let bins = plan_binaries(
            &spec(TaskType::PickTwoStackAndPlace, &["Disc", "Plate", "Desk"], 2),
            &reg(),
        )
        .unwrap();
        assert_eq!(bins.len(), 11);
        assert_eq!(bins[4].qualifier, Qualifier::Another);
        assert_eq!(bins[8], SubgoalBinary::new(Verb::Pickup, "Plate"));
    }

    #[test]
    fn container_form_opens_and_closes_the_source() {
        let spec = TaskSpec::new(
            TaskType::PickAndPlace,
            vec!["Towel".into(), "Toilet".into()],
            1,
            Some("Cabinet".into()),
            None,
            &reg(),
        );
        let phrases = plan_template(&spec, &reg()).unwrap();
        assert_eq!(
            texts(&phrases),
            vec![
                "find a cabinet",
                "open the cabinet",
                "find a towel",
                "pick up the towel",
                "close the cabinet",
                "find a toilet",
                "put the towel on the toilet",
            ]
        );
    }

    #[test]
    fn prefix_adaptation_rebinds_the_heat_appliance() {
        let registry = reg();
        let s = spec(TaskType::HeatAndPlace, &["Egg", "Shelf"], 1);
        let no_mw = [PrefixAssertion { class: "Microwave".into(), present: false }];
        let phrases = plan_prefix_adapt(&s, &no_mw, &registry).unwrap();
        assert_eq!(
            texts(&phrases),
            vec![
                "find an egg",
                "pick up the egg",
                "find a stove burner",
                "put the egg on the stove burner",
                "toggle the stove burner on",
                "toggle the stove burner off",
                "pick up the egg",
                "find a shelf",
                "put the egg on the shelf",
            ]
        );
        // No assertions: microwave preferred.
        let default = plan_prefix_adapt(&s, &[], &registry).unwrap();
        assert!(default.iter().any(|p| p.0.contains("microwave")));
        // Both heat appliances gone: no feasible plan.
        let none = [
            PrefixAssertion { class: "Microwave".into(), present: false },
            PrefixAssertion { class: "StoveBurner".into(), present: false },
        ];
        assert!(matches!(
            plan_prefix_adapt(&s, &none, &registry),
            Err(PlanError::NoFeasibleAppliance(_))
        ));
        // Cooling has no fallback appliance.
        let cool = spec(TaskType::CoolAndPlace, &["Egg", "Shelf"], 1);
        let no_fridge = [PrefixAssertion { class: "Fridge".into(), present: false }];
        assert!(matches!(
            plan_prefix_adapt(&cool, &no_fridge, &registry),
            Err(PlanError::NoFeasibleAppliance(_))
        ));
        // An absent assertion on a named slot class is refused too.
        let no_shelf = [PrefixAssertion { class: "Shelf".into(), present: false }];
        assert!(matches!(
            plan_prefix_adapt(&s, &no_shelf, &registry),
            Err(PlanError::NoFeasibleAppliance(_))
        ));
    }

    #[test]
    fn match_phrase_grounds_verbs_qualifiers_and_synonyms() {
        let registry = reg();
        assert_eq!(
            match_phrase("Find a knife", &registry).unwrap(),
            SubgoalBinary::new(Verb::Find, "Knife")
        );
        assert_eq!(
            match_phrase("find an another pepper shaker", &registry).unwrap(),
            SubgoalBinary::with_qualifier(Verb::Find, "PepperShaker", Qualifier::Another)
        );
        assert_eq!(
            match_phrase("find a third disc", &registry).unwrap(),
            SubgoalBinary::with_qualifier(Verb::Find, "Disc", Qualifier::Third)
        );
        assert_eq!(
            match_phrase("pick up the sliced tomato", &registry).unwrap(),
            SubgoalBinary::new(Verb::Pickup, "SlicedTomato")
        );
        assert_eq!(
            match_phrase("put the knife in the sink", &registry).unwrap(),
            SubgoalBinary::new(Verb::Put, "SinkBasin")
        );
        assert_eq!(
            match_phrase("turn on the floor lamp", &registry).unwrap(),
            SubgoalBinary::new(Verb::ToggleOn, "FloorLamp")
        );
        assert_eq!(
            match_phrase("toggle the faucet off.", &registry).unwrap(),
            SubgoalBinary::new(Verb::ToggleOff, "Faucet")
        );
        assert_eq!(
            match_phrase("locate a couch", &registry).unwrap(),
            SubgoalBinary::new(Verb::Find, "Sofa")
        );
        assert!(matches!(
            match_phrase("find a zebra", &registry),
            Err(PlanError::UnknownObject(_))
        ));
        assert!(matches!(
            match_phrase("toggle the faucet", &registry),
            Err(PlanError::MalformedPhrase(_))
        ));
        assert!(matches!(
            match_phrase("waltz with the fridge", &registry),
            Err(PlanError::MalformedPhrase(_))
        ));
    }

    #[test]
    fn render_then_match_roundtrips_every_template() {
        let registry = reg();
        let specs = [
            spec(TaskType::PickAndPlace, &["Mug", "Desk"], 1),
            spec(TaskType::PickAndPlace, &["SlicedApple", "Fridge"], 1),
            spec(TaskType::PickTwoAndPlace, &["PepperShaker", "Shelf"], 2),
            spec(TaskType::PickThreeAndPlace, &["Disc", "Sofa"], 3),
            spec(TaskType::PickAndPlace, &["Watch", "Safe"], 4),
            spec(TaskType::StackAndPlace, &["CreditCard", "Box", "Shelf"], 1),
            spec(TaskType::CleanAndPlace, &["Spoon", "DiningTable"], 1),
            spec(TaskType::HeatAndPlace, &["Mug", "Shelf"], 1),
            spec(TaskType::CoolAndPlace, &["Egg", "Microwave"], 1),
            spec(TaskType::ExamineInLight, &["Book", "DeskLamp"], 1),
            spec(TaskType::PickTwoCleanAndPlace, &["Spoon", "Desk"], 2),
            spec(TaskType::StackHeatAndPlace, &["SlicedTomato", "Plate", "SideTable"], 1),
            spec(TaskType::StackCoolAndPlace, &["SlicedApple", "Bowl", "Desk"], 1),
            spec(TaskType::PickTwoStackAndPlace, &["Disc", "Plate", "Desk"], 2),
        ];
        for s in &specs {
            let bins = plan_binaries(s, &registry).unwrap();
            let phrases = render_plan(&bins, &registry);
            let back = match_plan(&phrases, &registry).unwrap();
            assert_eq!(bins, back, "roundtrip failed for {:?}", s.task_type);
        }
    }

    #[test]
    fn instruction_grammar_roundtrips_every_template() {
        let registry = reg();
        let cases: Vec<(TaskSpec, Vec<PrefixAssertion>)> = vec![
            (spec(TaskType::PickAndPlace, &["Mug", "Desk"], 1), vec![]),
            (spec(TaskType::PickTwoAndPlace, &["PepperShaker", "Shelf"], 2), vec![]),
            (spec(TaskType::PickThreeAndPlace, &["Disc", "Sofa"], 3), vec![]),
            (spec(TaskType::PickAndPlace, &["Watch", "Safe"], 4), vec![]),
            (spec(TaskType::StackAndPlace, &["CreditCard", "Box", "Shelf"], 1), vec![]),
            (spec(TaskType::CleanAndPlace, &["Spoon", "DiningTable"], 1), vec![]),
            (
                spec(TaskType::HeatAndPlace, &["Egg", "Shelf"], 1),
                vec![
                    PrefixAssertion { class: "StoveBurner".into(), present: true },
                    PrefixAssertion { class: "Microwave".into(), present: false },
                ],
            ),
            (spec(TaskType::CoolAndPlace, &["Egg", "Microwave"], 1), vec![]),
            (spec(TaskType::ExamineInLight, &["Book", "DeskLamp"], 1), vec![]),
            (spec(TaskType::PickTwoCleanAndPlace, &["Spoon", "Desk"], 2), vec![]),
            (
                spec(TaskType::StackHeatAndPlace, &["Tomato", "Plate", "SideTable"], 1),
                vec![],
            ),
            (spec(TaskType::StackCoolAndPlace, &["Apple", "Bowl", "Desk"], 1), vec![]),
            (spec(TaskType::PickTwoStackAndPlace, &["Disc", "Plate", "Desk"], 2), vec![]),
        ];
        for (s, prefix) in &cases {
            let text = render_instruction(s, prefix, &registry);
            let parsed = parse_instruction(&text, &registry)
                .unwrap_or_else(|e| panic!("parse failed for {text:?}: {e}"));
            assert_eq!(&parsed.spec, s, "spec mismatch for {text:?}");
            assert_eq!(&parsed.prefix, prefix, "prefix mismatch for {text:?}");
        }
    }

    #[test]
    fn compound_slice_instruction_roundtrips() {
        let registry = reg();
        let s = TaskSpec::new(
            TaskType::PickAndPlace,
            vec!["SlicedTomato".into(), "Fridge".into()],
            1,
            None,
            Some("SinkBasin".into()),
            &registry,
        );
        let text = render_instruction(&s, &[], &registry);
        assert_eq!(
            text,
            "slice a tomato, put the knife in the sink basin, and put the sliced tomato in the fridge"
        );
        let parsed = parse_instruction(&text, &registry).unwrap();
        assert_eq!(parsed.spec, s);
    }

    #[test]
    fn container_instruction_roundtrips() {
        let registry = reg();
        let s = TaskSpec::new(
            TaskType::PickAndPlace,
            vec!["Towel".into(), "Toilet".into()],
            1,
            Some("Cabinet".into()),
            None,
            &registry,
        );
        let text = render_instruction(&s, &[], &registry);
        assert_eq!(text, "put a towel from the cabinet on the toilet");
        assert_eq!(parse_instruction(&text, &registry).unwrap().spec, s);
    }

    #[test]
    fn parse_rejects_unknown_and_unsupported() {
        let registry = reg();
        assert!(matches!(
            parse_instruction("put a gryphon on the desk", &registry),
            Err(PlanError::UnknownObject(_))
        ));
        assert!(matches!(
            parse_instruction("juggle three mugs", &registry),
            Err(PlanError::UnsupportedTemplate(_))
        ));
        assert!(matches!(
            parse_instruction("", &registry),
            Err(PlanError::MalformedPhrase(_))
        ));
    }

    #[test]
    fn goal_derivation_counts_conditions() {
        let registry = reg();
        let s = spec(TaskType::StackHeatAndPlace, &["SlicedTomato", "Plate", "SideTable"], 1);
        // Sliced + Hot + Placed(obj on mid) + Placed(mid on recep).
        assert_eq!(s.goal.atoms.len(), 4);
        let pick = spec(TaskType::PickTwoAndPlace, &["Mug", "Desk"], 2);
        assert_eq!(pick.goal.atoms.len(), 1);
        match &pick.goal.atoms[0] {
            GoalAtom::Placed { count, .. } => assert_eq!(*count, 2),
            other => panic!("unexpected atom {other:?}"),
        }
        let _ = registry;
    }
}
