//! The object-class catalogue: affordances, footprint sizes, detector
//! confusion pairs, similarity clusters, and the noun lexicon.
//!
//! Class names are CamelCase identifiers (`SinkBasin`, `SlicedTomato`).
//! Large classes — anything that cannot be picked up — block both movement
//! and line of sight and are always tracked by the semantic map. The noun
//! lexicon (synonyms) and verb lexicon ship as versioned CSV data files
//! embedded at compile time; [`ClassRegistry::canonical`] resolves natural
//! phrases ("sink", "knives") to class names and rejects unknown nouns
//! rather than guessing.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

const SYNONYMS_CSV: &str = include_str!("../data/synonyms.csv");

/// Where a placed object sits relative to a receptacle, for phrasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prep {
    In,
    On,
}

impl Prep {
    pub fn word(&self) -> &'static str {
        match self {
            Prep::In => "in",
            Prep::On => "on",
        }
    }
}

/// Static affordance record for one object class.
#[derive(Debug, Clone)]
pub struct ClassInfo {
    pub name: String,
    /// Nominal footprint in sensor units; drives detection pixel counts.
    pub base_size: u32,
    pub pickupable: bool,
    pub openable: bool,
    pub toggleable: bool,
    pub sliceable: bool,
    pub receptacle: bool,
    /// Preposition used when phrasing a placement into this receptacle.
    pub put_prep: Prep,
}

impl ClassInfo {
    /// Large objects cannot be carried; they block movement and sight.
    pub fn is_large(&self) -> bool {
        !self.pickupable
    }
}

/// Class table rows: name, base size, affordance flags, put preposition.
/// Flags: p pickupable, o openable, t toggleable, s sliceable, r receptacle.
const CLASS_TABLE: &[(&str, u32, &str, &str)] = &[
    // Large furniture and fixtures.
    ("Table", 30, "r", "on"),
    ("Desk", 30, "r", "on"),
    ("SideTable", 18, "r", "on"),
    ("DiningTable", 36, "r", "on"),
    ("CoffeeTable", 24, "r", "on"),
    ("CounterTop", 30, "r", "on"),
    ("Shelf", 20, "r", "on"),
    ("Drawer", 12, "or", "in"),
    ("Cabinet", 20, "or", "in"),
    ("Dresser", 26, "r", "on"),
    ("Safe", 12, "or", "in"),
    ("Fridge", 28, "or", "in"),
    ("Microwave", 12, "otr", "in"),
    ("StoveBurner", 10, "tr", "on"),
    ("SinkBasin", 14, "r", "in"),
    ("BathtubBasin", 30, "r", "in"),
    ("Toilet", 16, "r", "on"),
    ("GarbageCan", 10, "r", "in"),
    ("Bed", 40, "r", "on"),
    ("Sofa", 36, "r", "on"),
    ("ArmChair", 24, "r", "on"),
    ("Ottoman", 16, "r", "on"),
    ("MediaStand", 24, "r", "on"),
    ("FloorLamp", 14, "t", "on"),
    ("DeskLamp", 8, "t", "on"),
    ("Television", 20, "t", "on"),
    ("Mirror", 14, "", "on"),
    ("Window", 20, "", "on"),
    ("HousePlant", 12, "", "on"),
    ("Faucet", 6, "t", "on"),
    ("Painting", 16, "", "on"),
    // Sliceable produce and their sliced forms.
    ("Apple", 4, "ps", "on"),
    ("Tomato", 4, "ps", "on"),
    ("Bread", 5, "ps", "on"),
    ("Potato", 3, "ps", "on"),
    ("Lettuce", 5, "ps", "on"),
    ("SlicedApple", 3, "p", "on"),
    ("SlicedTomato", 3, "p", "on"),
    ("SlicedBread", 4, "p", "on"),
    ("SlicedPotato", 2, "p", "on"),
    ("SlicedLettuce", 4, "p", "on"),
    // Kitchen smalls.
    ("Egg", 2, "p", "on"),
    ("Knife", 3, "p", "on"),
    ("ButterKnife", 3, "p", "on"),
    ("Spoon", 2, "p", "on"),
    ("Fork", 2, "p", "on"),
    ("Spatula", 3, "p", "on"),
    ("Ladle", 2, "p", "on"),
    ("Plate", 6, "pr", "on"),
    ("Bowl", 5, "pr", "in"),
    ("Pan", 6, "pr", "in"),
    ("Pot", 6, "pr", "in"),
    ("Box", 8, "pr", "in"),
    ("Mug", 3, "p", "on"),
    ("Cup", 3, "p", "on"),
    ("Kettle", 5, "p", "on"),
    ("Bottle", 3, "p", "on"),
    ("GlassBottle", 3, "p", "on"),
    ("WineBottle", 4, "p", "on"),
    ("SoapBottle", 3, "p", "on"),
    ("SoapBar", 2, "p", "on"),
    ("SprayBottle", 3, "p", "on"),
    ("PepperShaker", 1, "p", "on"),
    ("SaltShaker", 1, "p", "on"),
    ("DishSponge", 2, "p", "on"),
    // Household smalls.
    ("Towel", 6, "p", "on"),
    ("HandTowel", 4, "p", "on"),
    ("Cloth", 4, "p", "on"),
    ("Sponge", 2, "p", "on"),
    ("Book", 5, "p", "on"),
    ("Newspaper", 4, "p", "on"),
    ("Pencil", 1, "p", "on"),
    ("Pen", 1, "p", "on"),
    ("Pillow", 8, "p", "on"),
    ("Laptop", 8, "p", "on"),
    ("RemoteControl", 2, "p", "on"),
    ("KeyChain", 1, "p", "on"),
    ("CreditCard", 1, "p", "on"),
    ("Watch", 1, "p", "on"),
    ("CellPhone", 2, "p", "on"),
    ("AlarmClock", 3, "p", "on"),
    ("Disc", 2, "p", "on"),
    ("Candle", 2, "p", "on"),
    ("Statue", 5, "p", "on"),
    ("Vase", 4, "p", "on"),
    ("TissueBox", 4, "p", "on"),
    ("ToiletPaper", 3, "p", "on"),
];

/// Similarity clusters: classes a detector or planner may reasonably trade
/// for one another. Drives the detector confusion table (cyclic neighbour)
/// and is mirrored by the builtin embedding vectors.
const CLUSTERS: &[&[&str]] = &[
    &["Table", "Desk", "SideTable", "DiningTable", "CoffeeTable"],
    &["Mug", "Cup"],
    &["FloorLamp", "DeskLamp"],
    &["Bottle", "GlassBottle", "WineBottle", "SoapBottle"],
    &["Knife", "ButterKnife"],
    &["Sofa", "ArmChair"],
    &["Towel", "HandTowel", "Cloth"],
    &["PepperShaker", "SaltShaker"],
    &["Pencil", "Pen"],
];

/// Extra detector confusion pairs between visually similar singletons.
const CONFUSION_PAIRS: &[(&str, &str)] = &[
    ("Apple", "Tomato"),
    ("Tomato", "Apple"),
    ("Egg", "Potato"),
    ("Potato", "Egg"),
    ("Spoon", "Fork"),
    ("Fork", "Spoon"),
    ("Book", "Newspaper"),
    ("Newspaper", "Book"),
];

/// Classes whose ToggleOn examines the held object (light sources).
const LAMP_CLASSES: &[&str] = &["FloorLamp", "DeskLamp"];

/// Classes that can act as the blade for a Slice action.
const KNIFE_CLASSES: &[&str] = &["Knife", "ButterKnife"];

/// Fixture parts mounted on a host class: locating the host locates the
/// part. (host, part) pairs.
const ATTACHED_PARTS: &[(&str, &str)] = &[("SinkBasin", "Faucet")];

/// The object-class catalogue plus lexicon lookups.
#[derive(Debug, Clone)]
pub struct ClassRegistry {
    classes: BTreeMap<String, ClassInfo>,
    synonyms: BTreeMap<String, String>,
    confusion: BTreeMap<String, String>,
    clusters: Vec<Vec<String>>,
}

impl ClassRegistry {
    /// The built-in catalogue with the embedded lexicon files.
    pub fn builtin() -> Self {
        let mut classes = BTreeMap::new();
        for (name, base_size, flags, prep) in CLASS_TABLE {
            let info = ClassInfo {
                name: (*name).to_owned(),
                base_size: *base_size,
                pickupable: flags.contains('p'),
                openable: flags.contains('o'),
                toggleable: flags.contains('t'),
                sliceable: flags.contains('s'),
                receptacle: flags.contains('r'),
                put_prep: if *prep == "in" { Prep::In } else { Prep::On },
            };
            classes.insert(info.name.clone(), info);
        }

        let mut synonyms = BTreeMap::new();
        for line in SYNONYMS_CSV.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (phrase, class) = line.split_once(',').expect("synonym row is `phrase,Class`");
            synonyms.insert(phrase.trim().to_owned(), class.trim().to_owned());
        }

        let mut confusion = BTreeMap::new();
        for cluster in CLUSTERS {
            for (i, name) in cluster.iter().enumerate() {
                let next = cluster[(i + 1) % cluster.len()];
                confusion.insert((*name).to_owned(), next.to_owned());
            }
        }
        for (from, to) in CONFUSION_PAIRS {
            confusion.insert((*from).to_owned(), (*to).to_owned());
        }

        let clusters = CLUSTERS
            .iter()
            .map(|c| c.iter().map(|s| (*s).to_owned()).collect())
            .collect();

        ClassRegistry { classes, synonyms, confusion, clusters }
    }

    pub fn get(&self, class: &str) -> Option<&ClassInfo> {
        self.classes.get(class)
    }

    pub fn contains(&self, class: &str) -> bool {
        self.classes.contains_key(class)
    }

    /// All class names in sorted order.
    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(|s| s.as_str())
    }

    /// The detector's confusion target for a class, if it has one.
    pub fn confusion_of(&self, class: &str) -> Option<&str> {
        self.confusion.get(class).map(|s| s.as_str())
    }

    /// Similarity clusters (each a list of class names).
    pub fn clusters(&self) -> &[Vec<String>] {
        &self.clusters
    }

    /// Cluster-mates of a class, excluding the class itself.
    pub fn cluster_mates(&self, class: &str) -> BTreeSet<&str> {
        self.clusters
            .iter()
            .filter(|c| c.iter().any(|m| m == class))
            .flat_map(|c| c.iter().map(|s| s.as_str()))
            .filter(|m| *m != class)
            .collect()
    }

    pub fn is_lamp(&self, class: &str) -> bool {
        LAMP_CLASSES.contains(&class)
    }

    /// Fixture classes mounted on `host` (a sink basin carries its faucet).
    pub fn attached_parts<'a>(&self, host: &'a str) -> impl Iterator<Item = &'static str> + 'a {
        ATTACHED_PARTS
            .iter()
            .filter(move |(h, _)| *h == host)
            .map(|(_, part)| *part)
    }

    /// The host fixture a part is mounted on, if any.
    pub fn attached_host(&self, part: &str) -> Option<&'static str> {
        ATTACHED_PARTS.iter().find(|(_, p)| *p == part).map(|(h, _)| *h)
    }

    pub fn is_knife(&self, class: &str) -> bool {
        KNIFE_CLASSES.contains(&class)
    }

    /// The sliced-form class for a sliceable base class.
    pub fn sliced_form(&self, class: &str) -> Option<String> {
        let info = self.get(class)?;
        if !info.sliceable {
            return None;
        }
        let sliced = format!("Sliced{class}");
        self.classes.contains_key(&sliced).then_some(sliced)
    }

    /// The base class a sliced class was cut from, if any.
    pub fn sliced_base<'a>(&self, class: &'a str) -> Option<&'a str> {
        let base = class.strip_prefix("Sliced")?;
        self.classes.contains_key(base).then_some(base)
    }

    /// Lowercase natural phrase for a class name ("SinkBasin" → "sink basin").
    pub fn noun_phrase(&self, class: &str) -> String {
        let mut out = String::new();
        for (i, ch) in class.chars().enumerate() {
            if ch.is_ascii_uppercase() && i > 0 {
                out.push(' ');
            }
            out.push(ch.to_ascii_lowercase());
        }
        out
    }

    /// Resolve a natural noun phrase to its class name. Tries the synonym
    /// lexicon, then the CamelCase join, then singular fallbacks; unknown
    /// nouns resolve to `None` rather than a guess.
    pub fn canonical(&self, phrase: &str) -> Option<String> {
        let norm = normalize(phrase);
        if norm.is_empty() {
            return None;
        }
        if let Some(class) = self.synonyms.get(&norm) {
            return Some(class.clone());
        }
        let camel = camel_join(&norm);
        if self.classes.contains_key(&camel) {
            return Some(camel);
        }
        // Singular fallbacks for the final word: knives → knife, boxes → box,
        // mugs → mug.
        for (suffix, repl) in [("ves", "fe"), ("es", ""), ("s", "")] {
            if let Some(stem) = norm.strip_suffix(suffix) {
                let candidate = format!("{stem}{repl}");
                if let Some(class) = self.synonyms.get(&candidate) {
                    return Some(class.clone());
                }
                let camel = camel_join(&candidate);
                if self.classes.contains_key(&camel) {
                    return Some(camel);
                }
            }
        }
        None
    }

    /// Indefinite article for a class's noun phrase.
    pub fn article(&self, class: &str) -> &'static str {
        let phrase = self.noun_phrase(class);
        match phrase.chars().next() {
            Some('a') | Some('e') | Some('i') | Some('o') | Some('u') => "an",
            _ => "a",
        }
    }
}

fn normalize(phrase: &str) -> String {
    let mut out = String::new();
    for word in phrase.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()));
    }
    out
}

fn camel_join(phrase: &str) -> String {
    let mut out = String::new();
    for word in phrase.split(' ') {
        let mut chars = word.chars();
        if let Some(first) = chars.next() {
            out.push(first.to_ascii_uppercase());
            out.extend(chars);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_classes_resolve_and_roundtrip() {
        let reg = ClassRegistry::builtin();
        for name in reg.class_names().map(|s| s.to_owned()).collect::<Vec<_>>() {
            let phrase = reg.noun_phrase(&name);
            assert_eq!(
                reg.canonical(&phrase).as_deref(),
                Some(name.as_str()),
                "noun phrase {phrase:?} should resolve back to {name}"
            );
        }
    }

    #[test]
    fn synonyms_point_at_real_classes() {
        let reg = ClassRegistry::builtin();
        for (phrase, class) in &reg.synonyms {
            assert!(reg.contains(class), "synonym {phrase:?} targets unknown {class}");
        }
    }

    #[test]
    fn canonical_handles_plurals_and_synonyms() {
        let reg = ClassRegistry::builtin();
        assert_eq!(reg.canonical("knives").as_deref(), Some("Knife"));
        assert_eq!(reg.canonical("mugs").as_deref(), Some("Mug"));
        assert_eq!(reg.canonical("boxes").as_deref(), Some("Box"));
        assert_eq!(reg.canonical("sink").as_deref(), Some("SinkBasin"));
        assert_eq!(reg.canonical("Sliced Tomato").as_deref(), Some("SlicedTomato"));
        assert_eq!(reg.canonical("pepper shakers").as_deref(), Some("PepperShaker"));
        assert_eq!(reg.canonical("dining table").as_deref(), Some("DiningTable"));
        assert_eq!(reg.canonical("zebra"), None);
        assert_eq!(reg.canonical(""), None);
    }

    #[test]
    fn confusion_targets_are_real_and_distinct() {
        let reg = ClassRegistry::builtin();
        for (from, to) in &reg.confusion {
            assert!(reg.contains(from));
            assert!(reg.contains(to));
            assert_ne!(from, to);
            // Confusion never turns furniture into a pocketable object.
            assert_eq!(
                reg.get(from).unwrap().pickupable,
                reg.get(to).unwrap().pickupable,
                "{from} -> {to} changes pickupability"
            );
        }
    }

    #[test]
    fn clusters_are_disjoint_and_resolve() {
        let reg = ClassRegistry::builtin();
        let mut seen = BTreeSet::new();
        for cluster in reg.clusters() {
            assert!(cluster.len() >= 2);
            for member in cluster {
                assert!(reg.contains(member));
                assert!(seen.insert(member.clone()), "{member} appears in two clusters");
            }
        }
        assert!(reg.cluster_mates("Desk").contains("SideTable"));
        assert!(reg.cluster_mates("Egg").is_empty());
    }

    #[test]
    fn sliced_forms_link_both_ways() {
        let reg = ClassRegistry::builtin();
        for name in reg.class_names().map(|s| s.to_owned()).collect::<Vec<_>>() {
            let info = reg.get(&name).unwrap();
            if info.sliceable {
                let sliced = reg.sliced_form(&name).expect("sliceable class has sliced form");
                assert_eq!(reg.sliced_base(&sliced), Some(name.as_str()));
                assert!(reg.get(&sliced).unwrap().pickupable);
            }
        }
        assert_eq!(reg.sliced_form("Mug"), None);
        assert_eq!(reg.sliced_base("SlicedTomato"), Some("Tomato"));
    }

    #[test]
    fn affordance_flags_are_coherent() {
        let reg = ClassRegistry::builtin();
        for name in reg.class_names().map(|s| s.to_owned()).collect::<Vec<_>>() {
            let info = reg.get(&name).unwrap();
            assert!(info.base_size >= 1 && info.base_size <= 40, "{name} size out of range");
            if info.openable {
                assert!(info.receptacle, "{name} opens but holds nothing");
            }
            if info.sliceable {
                assert!(info.pickupable, "{name} sliceable but fixed");
            }
        }
        assert!(reg.get("Fridge").unwrap().is_large());
        assert!(!reg.get("Mug").unwrap().is_large());
        assert!(reg.is_knife("ButterKnife"));
        assert!(reg.is_lamp("DeskLamp"));
        assert!(!reg.is_lamp("Television"));
    }

    #[test]
    fn articles_follow_leading_vowel() {
        let reg = ClassRegistry::builtin();
        assert_eq!(reg.article("Apple"), "an");
        assert_eq!(reg.article("Egg"), "an");
        assert_eq!(reg.article("Mug"), "a");
        assert_eq!(reg.article("SlicedApple"), "a");
    }
}
