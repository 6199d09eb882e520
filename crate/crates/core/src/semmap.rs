//! The accumulated semantic map: one bit plane per tracked class plus
//! obstacle and explored planes, updated from egocentric frames.
//!
//! Channel selection keeps every large class and every receptacle, plus the
//! task's own classes and any small class embedding-close to one of them.
//!
//! The update rule is a union merge for every channel except the class the
//! agent is *currently searching for*. For that one class the corrective
//! overwrite applies: take the remembered cells, dilate them by a small
//! neighbourhood, and — when the agent actually looked there and saw no
//! such object — trust the fresh frame inside the neighbourhood and the
//! memory outside it:
//!
//! ```text
//! new = frame ∧ observed ∧ nbr  ∨  prev ∧ ¬nbr     (guard holds)
//! new = prev ∨ frame                               (otherwise)
//! guard: nbr ∧ observed ≠ ∅  and  frame ∧ nbr = ∅
//! ```
//!
//! Stale entries for moved objects are erased instead of lingering forever,
//! while a mere glimpse of the region (or a confirming detection) leaves
//! memory intact.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::grid::Plane;
use crate::observe::Observation;
use crate::registry::ClassRegistry;
use crate::replan::{Similarity, SimilarityError};

/// Chebyshev radius of the corrective neighbourhood around remembered cells.
pub const NBR_RADIUS: i32 = 2;
/// Channel-selection similarity threshold.
pub const CHANNEL_SIM_THRESHOLD: f32 = 0.7;
/// Default confirmed-inventory pixel threshold.
pub const DEFAULT_PIXEL_THRESHOLD: u32 = 10;

/// Accumulated global map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticMap {
    width: usize,
    height: usize,
    tracked: Vec<String>,
    pub obstacles: Plane,
    pub explored: Plane,
    planes: Vec<Plane>,
}

/// One projected frame in map coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalFrame {
    pub observed: Plane,
    /// Opaque observed cells (walls and furniture faces).
    pub obstacles: Plane,
    tracked: Vec<String>,
    planes: Vec<Plane>,
    /// Largest apparent pixel count per tracked class in this frame.
    pub pixels: BTreeMap<String, u32>,
}

/// Classes currently known to the map, split by detection confidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inventory {
    /// Classes with at least one mapped cell.
    pub present: BTreeSet<String>,
    /// Present classes whose best sighting exceeded the pixel threshold.
    pub confirmed: BTreeSet<String>,
}

/// Channel-selection failure.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    UnknownClass(String),
    Similarity(SimilarityError),
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::UnknownClass(c) => write!(f, "unknown goal class {c:?}"),
            ChannelError::Similarity(e) => write!(f, "similarity backend failed: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ChannelError {}

impl From<SimilarityError> for ChannelError {
    fn from(e: SimilarityError) -> Self {
        ChannelError::Similarity(e)
    }
}

impl SemanticMap {
    /// An empty map tracking the given classes (sorted, deduplicated).
    pub fn new(width: usize, height: usize, tracked: Vec<String>) -> Self {
        let mut tracked = tracked;
        tracked.sort();
        tracked.dedup();
        let planes = tracked.iter().map(|_| Plane::new(width, height)).collect();
        SemanticMap {
            width,
            height,
            tracked,
            obstacles: Plane::new(width, height),
            explored: Plane::new(width, height),
            planes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tracked(&self) -> &[String] {
        &self.tracked
    }

    pub fn plane(&self, class: &str) -> Option<&Plane> {
        let i = self.tracked.binary_search_by(|t| t.as_str().cmp(class)).ok()?;
        Some(&self.planes[i])
    }

    /// Record a class at a cell (used by the executive to reflect its own
    /// hand actions without waiting for the next frame).
    pub fn mark(&mut self, class: &str, cell: &crate::grid::Cell) {
        if let Ok(i) = self.tracked.binary_search_by(|t| t.as_str().cmp(class)) {
            self.planes[i].set(cell);
        }
    }

    /// Remove a class mark from a cell.
    pub fn clear(&mut self, class: &str, cell: &crate::grid::Cell) {
        if let Ok(i) = self.tracked.binary_search_by(|t| t.as_str().cmp(class)) {
            self.planes[i].unset(cell);
        }
    }
}

/// Choose the classes the map will track for a task: every large class,
/// every receptacle, the goal classes themselves, and small classes
/// embedding-close to a goal class. Output is sorted and deduplicated.
pub fn select_channels(
    goal_classes: &BTreeSet<String>,
    registry: &ClassRegistry,
    similarity: &dyn Similarity,
) -> Result<Vec<String>, ChannelError> {
    for class in goal_classes {
        if !registry.contains(class) {
            return Err(ChannelError::UnknownClass(class.clone()));
        }
    }
    let mut out = BTreeSet::new();
    for name in registry.class_names() {
        let info = registry.get(name).expect("iterating registry names");
        if info.is_large() || info.receptacle || goal_classes.contains(name) {
            out.insert(String::from(name));
            continue;
        }
        for goal in goal_classes {
            if similarity.score(name, goal)? >= CHANNEL_SIM_THRESHOLD {
                out.insert(String::from(name));
                break;
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Rasterise one observation into map coordinates. Frame planes are set
/// only at detected cells (hence always within `observed`); obstacles are
/// the observed cells lacking a depth reading.
pub fn project(obs: &Observation, width: usize, height: usize, tracked: &[String]) -> LocalFrame {
    let mut observed = Plane::new(width, height);
    let mut obstacles = Plane::new(width, height);
    for cell in &obs.observed_cells {
        observed.set(cell);
        if !obs.depth.contains_key(cell) {
            obstacles.set(cell);
        }
    }
    let tracked: Vec<String> = tracked.to_vec();
    let mut planes: Vec<Plane> = tracked.iter().map(|_| Plane::new(width, height)).collect();
    let mut pixels: BTreeMap<String, u32> = BTreeMap::new();
    for det in &obs.detections {
        if let Ok(i) = tracked.binary_search_by(|t| t.as_str().cmp(&det.class_name)) {
            planes[i].set(&det.cell);
            let best = pixels.entry(det.class_name.clone()).or_insert(0);
            *best = (*best).max(det.pixel_count);
        }
    }
    LocalFrame { observed, obstacles, tracked, planes, pixels }
}

impl LocalFrame {
    pub fn plane(&self, class: &str) -> Option<&Plane> {
        let i = self.tracked.binary_search_by(|t| t.as_str().cmp(class)).ok()?;
        Some(&self.planes[i])
    }
}

/// Merge a frame into the map. `find_target` names the class the agent is
/// actively searching for; only that channel is eligible for the corrective
/// overwrite, everything else union-merges.
pub fn update(prev: &SemanticMap, frame: &LocalFrame, find_target: Option<&str>) -> SemanticMap {
    debug_assert_eq!(prev.tracked, frame.tracked, "frame must align with map channels");
    let mut next = prev.clone();
    next.explored.union_with(&frame.observed);
    next.obstacles.union_with(&frame.obstacles);
    for (i, class) in prev.tracked.iter().enumerate() {
        let fresh = &frame.planes[i];
        if find_target == Some(class.as_str()) {
            let nbr = prev.planes[i].dilate_chebyshev(NBR_RADIUS);
            let looked_there = nbr.intersects(&frame.observed);
            let seen_there = fresh.intersects(&nbr);
            if looked_there && !seen_there {
                // Corrective overwrite: memory is erased inside the part of
                // the neighbourhood that was actually observed; marks the
                // agent never looked at survive, and fresh sightings
                // elsewhere in the frame still land.
                let erased = nbr.and(&frame.observed);
                let sighted = fresh.and(&frame.observed);
                let kept = prev.planes[i].and_not(&erased);
                next.planes[i] = sighted.or(&kept);
                continue;
            }
        }
        next.planes[i].union_with(fresh);
    }
    next
}

/// Classes the map currently knows, with `confirmed` restricted to those
/// whose best sighting strictly exceeded `pixel_threshold`.
pub fn inventory(
    map: &SemanticMap,
    best_pixels: &BTreeMap<String, u32>,
    pixel_threshold: u32,
) -> Inventory {
    let mut present = BTreeSet::new();
    let mut confirmed = BTreeSet::new();
    for (i, class) in map.tracked.iter().enumerate() {
        if map.planes[i].is_empty() {
            continue;
        }
        present.insert(class.clone());
        if best_pixels.get(class).copied().unwrap_or(0) > pixel_threshold {
            confirmed.insert(class.clone());
        }
    }
    Inventory { present, confirmed }
}
