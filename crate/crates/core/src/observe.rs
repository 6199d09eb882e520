//! Egocentric sensing: the 90-degree sight wedge, per-cell depth, and
//! object detections with apparent pixel counts and optional detector noise.
//!
//! [`observe`] is a pure function of the scene and noise configuration.
//! Noise draws come from a counter-based stream (seed plus the scene's
//! attempted-action counter), so the same scene state always yields the
//! same observation, and replaying an episode reproduces every frame.
//!
//! Conventions:
//! - `observed_cells` holds every cell the agent can currently see,
//!   including opaque ones (walls, furniture faces) and its own cell.
//! - `depth` maps only the *free* observed cells to their Chebyshev
//!   distance; opaque cells carry no depth reading. Downstream mapping
//!   recovers the obstacle mask as observed-minus-depth.
//! - A detection's pixel count shrinks with distance:
//!   `ceil(base_size * PIXEL_SCALE / distance)`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{in_wedge, line_between, Cell, Pose};
use crate::registry::ClassRegistry;
use crate::scene::{Scene, SIGHT_RANGE};

/// Numerator scale of the apparent-size law.
pub const PIXEL_SCALE: u32 = 40;

/// Detector noise parameters. `p_miss` silently drops a visible object;
/// `p_mis` relabels one according to the registry confusion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub p_miss: f32,
    pub p_mis: f32,
    pub seed: u64,
}

impl NoiseConfig {
    /// A perfect detector.
    pub fn off() -> Self {
        NoiseConfig { p_miss: 0.0, p_mis: 0.0, seed: 0 }
    }

    pub fn is_off(&self) -> bool {
        self.p_miss == 0.0 && self.p_mis == 0.0
    }
}

/// One detected object instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub object_id: String,
    /// Reported class; differs from the true class when mislabelled.
    pub class_name: String,
    pub cell: Cell,
    /// Chebyshev distance from the agent (at least 1).
    pub distance: u32,
    /// Apparent size under the inverse-distance law.
    pub pixel_count: u32,
}

/// One sensing frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: u32,
    pub pose: Pose,
    pub observed_cells: BTreeSet<Cell>,
    /// Chebyshev distance for each observed free cell.
    pub depth: BTreeMap<Cell, u32>,
    /// Sorted by object id.
    pub detections: Vec<Detection>,
}

/// Apparent pixel count of an object of `base_size` seen at Chebyshev
/// distance `distance`: `ceil(base_size * PIXEL_SCALE / distance)`, with
/// distance floored to 1.
pub fn pixel_count(base_size: u32, distance: u32) -> u32 {
    let d = distance.max(1);
    (base_size * PIXEL_SCALE + d - 1) / d
}

/// Sense the world from the agent's pose.
pub fn observe(scene: &Scene, noise: &NoiseConfig, registry: &ClassRegistry) -> Observation {
    let pose = scene.agent.pose();
    let mut observed_cells = BTreeSet::new();
    let mut depth = BTreeMap::new();

    observed_cells.insert(pose.cell);
    depth.insert(pose.cell, 0);

    let (fx, fy) = pose.heading.delta();
    let (rx, ry) = (-fy, fx);
    for f in 1..=SIGHT_RANGE as i32 {
        for l in -f..=f {
            let cell = Cell::new(pose.cell.x + f * fx + l * rx, pose.cell.y + f * fy + l * ry);
            if !scene.in_bounds(&cell) {
                continue;
            }
            let clear = line_between(pose.cell, cell)
                .iter()
                .all(|c| !scene.blocks_sight(c, registry));
            if !clear {
                continue;
            }
            observed_cells.insert(cell);
            if !scene.blocks_sight(&cell, registry) {
                depth.insert(cell, pose.cell.chebyshev(&cell));
            }
        }
    }

    // Detections in object-id order; each candidate consumes exactly two
    // noise draws so the stream stays aligned regardless of outcomes.
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(scene.step as u64);
    let mut detections = Vec::new();
    for obj in &scene.objects {
        if !scene.object_visible(&obj.id, registry) {
            continue;
        }
        let miss_roll: f32 = rng.gen();
        let mis_roll: f32 = rng.gen();
        if miss_roll < noise.p_miss {
            continue;
        }
        let mut class_name = obj.class.clone();
        if mis_roll < noise.p_mis {
            if let Some(confused) = registry.confusion_of(&obj.class) {
                class_name = confused.into();
            }
        }
        let base_size = registry.get(&obj.class).map(|i| i.base_size).unwrap_or(1);
        let distance = pose.cell.chebyshev(&obj.cell).max(1);
        detections.push(Detection {
            object_id: obj.id.clone(),
            class_name,
            cell: obj.cell,
            distance,
            pixel_count: pixel_count(base_size, distance),
        });
    }

    Observation { step: scene.step, pose, observed_cells, depth, detections }
}

/// True when `cell` lies in the pose's sight wedge (ignoring occlusion).
pub fn in_sight_wedge(pose: &Pose, cell: &Cell) -> bool {
    *cell == pose.cell || in_wedge(pose, cell, SIGHT_RANGE)
}
