//! Similarity-guided re-planning for failed Find subgoals.
//!
//! When exploration exhausts its budget without locating the requested
//! class, the executive asks for a substitute: the most similar class in
//! the *confirmed* inventory (pixel evidence above threshold), provided its
//! similarity exceeds a strict 0.7 cutoff. Ties break to the
//! lexicographically smaller name so the decision is deterministic. Every
//! remaining reference to the failed class is rewritten to the substitute,
//! keeping later interaction subgoals consistent with the new target.
//!
//! Similarity scores come from a [`Similarity`] provider. The builtin
//! provider embeds a fixed class-embedding table (cosine scores clamped to
//! `[0, 1]`); the companion crate supplies an HTTP-backed provider with the
//! same interface.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::plan::SubgoalBinary;

const VECTORS_CSV: &str = include_str!("../data/vectors.csv");

/// Minimum similarity a substitute must strictly exceed.
pub const SUBSTITUTION_THRESHOLD: f32 = 0.7;

/// A similarity oracle over class names. Scores are in `[0, 1]`.
pub trait Similarity {
    fn score(&self, a: &str, b: &str) -> Result<f32, SimilarityError>;
}

/// Failure to produce a similarity score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityError(pub String);

impl SimilarityError {
    pub fn new(msg: impl Into<String>) -> Self {
        SimilarityError(msg.into())
    }
}

impl fmt::Display for SimilarityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "similarity unavailable: {}", self.0)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimilarityError {}

/// Similarity provider backed by the builtin class-embedding table.
pub struct BuiltinSimilarity {
    vectors: BTreeMap<String, Vec<f32>>,
    overrides: BTreeMap<(String, String), f32>,
}

impl BuiltinSimilarity {
    /// Parse the embedded table. Panics only on a malformed build asset,
    /// which the tests rule out.
    pub fn load() -> Self {
        let mut vectors = BTreeMap::new();
        for line in VECTORS_CSV.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let name = parts.next().expect("embedding row has a name").to_owned();
            let vec: Vec<f32> = parts
                .map(|p| p.trim().parse::<f32>().expect("embedding component is a float"))
                .collect();
            assert!(!vec.is_empty(), "embedding row {name} has no components");
            vectors.insert(name, vec);
        }
        BuiltinSimilarity { vectors, overrides: BTreeMap::new() }
    }

    /// Pin the score for an unordered pair; used by tests to force ties
    /// and thresholds deterministically.
    pub fn with_override(mut self, a: &str, b: &str, score: f32) -> Self {
        let key = if a <= b { (a.to_owned(), b.to_owned()) } else { (b.to_owned(), a.to_owned()) };
        self.overrides.insert(key, score);
        self
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(|s| s.as_str())
    }

    pub fn vector(&self, class: &str) -> Option<&[f32]> {
        self.vectors.get(class).map(|v| v.as_slice())
    }
}

impl Similarity for BuiltinSimilarity {
    fn score(&self, a: &str, b: &str) -> Result<f32, SimilarityError> {
        if a == b {
            return Ok(1.0);
        }
        let key = if a <= b { (a.to_owned(), b.to_owned()) } else { (b.to_owned(), a.to_owned()) };
        if let Some(s) = self.overrides.get(&key) {
            return Ok(*s);
        }
        let va = self
            .vectors
            .get(a)
            .ok_or_else(|| SimilarityError::new(format_missing(a)))?;
        let vb = self
            .vectors
            .get(b)
            .ok_or_else(|| SimilarityError::new(format_missing(b)))?;
        Ok(cosine_clamped(va, vb))
    }
}

fn format_missing(class: &str) -> String {
    let mut s = String::from("no embedding for class ");
    s.push_str(class);
    s
}

/// Cosine similarity clamped to `[0, 1]`; mismatched lengths score zero.
fn cosine_clamped(a: &[f32], b: &[f32]) -> f32 {
    if a.len() != b.len() {
        return 0.0;
    }
    let (mut dot, mut na, mut nb) = (0.0f32, 0.0f32, 0.0f32);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let cos = dot / (libm::sqrtf(na) * libm::sqrtf(nb));
    cos.clamp(0.0, 1.0)
}

/// Outcome of a substitution query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanDecision {
    /// Class the exhausted Find was looking for.
    pub failed_class: String,
    /// Substitute, when one cleared the threshold.
    pub chosen: Option<String>,
    /// Every candidate with its score, best first (ties by name).
    pub scores: Vec<(String, f32)>,
}

/// Choose a substitute for `failed_class` from the confirmed inventory.
///
/// Classes already serving as arguments of other remaining subgoals are
/// excluded — stealing the destination receptacle as a stand-in for the
/// object would corrupt the plan. The winner must *strictly* exceed
/// [`SUBSTITUTION_THRESHOLD`]; equal scores fall to the lexicographically
/// smaller name.
pub fn replan(
    remaining: &[SubgoalBinary],
    failed_class: &str,
    confirmed: &BTreeSet<String>,
    provider: &dyn Similarity,
) -> Result<ReplanDecision, SimilarityError> {
    let reserved: BTreeSet<&str> = remaining
        .iter()
        .map(|b| b.arg.as_str())
        .filter(|arg| *arg != failed_class)
        .collect();

    let mut scores: Vec<(String, f32)> = Vec::new();
    for candidate in confirmed {
        if candidate == failed_class || reserved.contains(candidate.as_str()) {
            continue;
        }
        let s = provider.score(failed_class, candidate)?;
        scores.push((candidate.clone(), s));
    }
    // Best first; equal scores ordered by name so the argmax tie-break is
    // simply the first element.
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let chosen = scores
        .first()
        .filter(|(_, s)| *s > SUBSTITUTION_THRESHOLD)
        .map(|(name, _)| name.clone());

    Ok(ReplanDecision { failed_class: failed_class.to_owned(), chosen, scores })
}

/// Rewrite every remaining reference to `failed_class` to `substitute`.
pub fn rewrite_plan(
    remaining: &[SubgoalBinary],
    failed_class: &str,
    substitute: &str,
) -> Vec<SubgoalBinary> {
    remaining
        .iter()
        .map(|b| {
            if b.arg == failed_class {
                SubgoalBinary { verb: b.verb, arg: substitute.to_owned(), qualifier: b.qualifier }
            } else {
                b.clone()
            }
        })
        .collect()
}

/// Whether a stuck Find should trigger re-planning: the exploration
/// budget ran out, or the map has no frontier left to push.
pub fn should_trigger(steps_on_subgoal: u32, frontier_exhausted: bool, budget: u32) -> bool {
    frontier_exhausted || steps_on_subgoal >= budget
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::Verb;
    use crate::registry::ClassRegistry;
    use alloc::vec;

    #[test]
    fn builtin_table_covers_every_registry_class_with_unit_vectors() {
        let sim = BuiltinSimilarity::load();
        let registry = ClassRegistry::builtin();
        for class in registry.class_names() {
            let v = sim
                .vector(class)
                .unwrap_or_else(|| panic!("no embedding for {class}"));
            assert_eq!(v.len(), 32, "{class} has wrong dimension");
            let norm: f32 = v.iter().map(|x| x * x).sum::<f32>();
            assert!(
                (norm - 1.0).abs() < 1e-3,
                "{class} is not unit norm: {norm}"
            );
        }
        // And nothing extra.
        for name in sim.class_names() {
            assert!(registry.contains(name), "stray embedding {name}");
        }
    }

    #[test]
    fn scores_are_symmetric_clamped_and_reflexive() {
        let sim = BuiltinSimilarity::load();
        let names: Vec<&str> = sim.class_names().take(12).collect();
        for a in &names {
            assert_eq!(sim.score(a, a).unwrap(), 1.0);
            for b in &names {
                let ab = sim.score(a, b).unwrap();
                let ba = sim.score(b, a).unwrap();
                assert_eq!(ab, ba, "asymmetric score for {a}/{b}");
                assert!((0.0..=1.0).contains(&ab));
            }
        }
        assert!(sim.score("Mug", "Gryphon").is_err());
    }

    #[test]
    fn cluster_mates_clear_the_threshold_and_strangers_do_not() {
        let sim = BuiltinSimilarity::load();
        let registry = ClassRegistry::builtin();
        for cluster in registry.clusters() {
            for a in cluster {
                for b in cluster {
                    if a == b {
                        continue;
                    }
                    let s = sim.score(a, b).unwrap();
                    assert!(
                        s > SUBSTITUTION_THRESHOLD,
                        "cluster mates {a}/{b} score only {s}"
                    );
                }
            }
        }
        // Spot-check cross-cluster and singleton pairs stay well below.
        for (a, b) in [
            ("Table", "Mug"),
            ("Fridge", "Pencil"),
            ("Knife", "FloorLamp"),
            ("Sofa", "SaltShaker"),
            ("Desk", "Bowl"),
        ] {
            let s = sim.score(a, b).unwrap();
            assert!(s < 0.6, "unrelated {a}/{b} score too high: {s}");
        }
    }

    #[test]
    fn replan_prefers_the_highest_scoring_confirmed_class() {
        let sim = BuiltinSimilarity::load();
        let remaining = vec![
            SubgoalBinary::new(Verb::Find, "SideTable"),
            SubgoalBinary::new(Verb::Put, "SideTable"),
        ];
        let confirmed: BTreeSet<String> =
            ["Desk".to_owned(), "Shelf".to_owned(), "Mug".to_owned()].into();
        let decision = replan(&remaining, "SideTable", &confirmed, &sim).unwrap();
        assert_eq!(decision.chosen.as_deref(), Some("Desk"));
        assert_eq!(decision.scores[0].0, "Desk");
        assert!(decision.scores[0].1 > SUBSTITUTION_THRESHOLD);
    }

    #[test]
    fn replan_returns_none_below_the_strict_threshold() {
        let sim = BuiltinSimilarity::load();
        let remaining = vec![SubgoalBinary::new(Verb::Find, "SideTable")];
        let confirmed: BTreeSet<String> = ["Mug".to_owned(), "Egg".to_owned()].into();
        let decision = replan(&remaining, "SideTable", &confirmed, &sim).unwrap();
        assert_eq!(decision.chosen, None);
        assert_eq!(decision.scores.len(), 2);

        // Exactly at the threshold is not enough: the cutoff is strict.
        let pinned = BuiltinSimilarity::load().with_override("SideTable", "Mug", 0.7);
        let decision = replan(&remaining, "SideTable", &confirmed, &pinned).unwrap();
        assert_ne!(decision.chosen.as_deref(), Some("Mug"));
        let pinned = BuiltinSimilarity::load().with_override("SideTable", "Mug", 0.700001);
        let decision = replan(&remaining, "SideTable", &confirmed, &pinned).unwrap();
        assert_eq!(decision.chosen.as_deref(), Some("Mug"));
    }

    #[test]
    fn equal_scores_fall_to_the_lexicographically_smaller_name() {
        let sim = BuiltinSimilarity::load()
            .with_override("Table", "Desk", 0.9)
            .with_override("Table", "Cup", 0.9);
        let remaining = vec![SubgoalBinary::new(Verb::Find, "Table")];
        let confirmed: BTreeSet<String> = ["Desk".to_owned(), "Cup".to_owned()].into();
        let decision = replan(&remaining, "Table", &confirmed, &sim).unwrap();
        assert_eq!(decision.chosen.as_deref(), Some("Cup"), "Cup < Desk");
    }

    #[test]
    fn classes_bound_to_other_subgoals_are_never_stolen() {
        let sim = BuiltinSimilarity::load()
            .with_override("SideTable", "Desk", 0.95)
            .with_override("SideTable", "Dresser", 0.8);
        let remaining = vec![
            SubgoalBinary::new(Verb::Find, "SideTable"),
            SubgoalBinary::new(Verb::Put, "SideTable"),
            SubgoalBinary::new(Verb::Find, "Desk"),
            SubgoalBinary::new(Verb::Put, "Desk"),
        ];
        let confirmed: BTreeSet<String> = ["Desk".to_owned(), "Dresser".to_owned()].into();
        let decision = replan(&remaining, "SideTable", &confirmed, &sim).unwrap();
        // Desk is reserved by a later subgoal; Dresser wins instead.
        assert!(decision.scores.iter().all(|(c, _)| c != "Desk"));
        assert_eq!(decision.chosen.as_deref(), Some("Dresser"));
    }

    #[test]
    fn rewrite_replaces_every_remaining_occurrence() {
        let remaining = vec![
            SubgoalBinary::new(Verb::Find, "SideTable"),
            SubgoalBinary::new(Verb::Put, "SideTable"),
            SubgoalBinary::new(Verb::Find, "Mug"),
            SubgoalBinary::new(Verb::Put, "SideTable"),
        ];
        let rewritten = rewrite_plan(&remaining, "SideTable", "Desk");
        assert_eq!(
            rewritten.iter().map(|b| b.arg.as_str()).collect::<Vec<_>>(),
            vec!["Desk", "Desk", "Mug", "Desk"]
        );
        assert_eq!(rewritten[0].verb, Verb::Find);
    }

    #[test]
    fn trigger_fires_on_budget_or_frontier_exhaustion() {
        assert!(!should_trigger(10, false, 150));
        assert!(should_trigger(150, false, 150));
        assert!(should_trigger(0, true, 150));
    }

    #[test]
    fn empty_inventory_yields_an_empty_decision() {
        let sim = BuiltinSimilarity::load();
        let remaining = vec![SubgoalBinary::new(Verb::Find, "Mug")];
        let decision = replan(&remaining, "Mug", &BTreeSet::new(), &sim).unwrap();
        assert_eq!(decision.chosen, None);
        assert!(decision.scores.is_empty());
    }
}
