//! Navigation over the agent's semantic map.
//!
//! Route planning is breadth-first search over `(cell, heading)` states —
//! one step of cost for a move and for each quarter-turn, so routes
//! minimise actions, not cells. The planner is conservative: it walks only
//! cells the map has *explored* and knows to be free. Goal tests are
//! permissive about the unknown in the one place that matters — line of
//! sight towards a target treats unexplored cells as transparent, since an
//! unseen cell cannot be known to occlude.
//!
//! Exploration targets come from [`next_frontier`]: the nearest explored
//! free cell adjacent to unexplored space. Determinism everywhere: fixed
//! expansion order, so equal-length routes resolve identically on every
//! run.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{in_wedge, line_between, Cell, Heading, Pose};
use crate::scene::{Action, SIGHT_RANGE};
use crate::semmap::SemanticMap;

/// Chebyshev distance at which a route to a target class may stop: the
/// interaction envelope.
pub const STOP_WITHIN: u32 = 3;

fn heading_index(h: Heading) -> usize {
    match h {
        Heading::North => 0,
        Heading::East => 1,
        Heading::South => 2,
        Heading::West => 3,
    }
}

/// True when the map knows `cell` to be walkable.
fn walkable(map: &SemanticMap, cell: &Cell) -> bool {
    map.explored.get(cell) && !map.obstacles.get(cell)
}

/// Plan the shortest action sequence from `start` to any pose satisfying
/// `goal`. Returns None when no known-walkable route exists; returns
/// `Some(vec![])` when the start already satisfies the goal.
pub fn plan_route(
    map: &SemanticMap,
    start: &Pose,
    goal: impl Fn(&Pose) -> bool,
) -> Option<Vec<Action>> {
    if goal(start) {
        return Some(Vec::new());
    }
    let (w, h) = (map.width(), map.height());
    if start.cell.x < 0
        || start.cell.y < 0
        || start.cell.x as usize >= w
        || start.cell.y as usize >= h
    {
        return None;
    }
    let states = w * h * 4;
    let index = |pose: &Pose| -> usize {
        (pose.cell.y as usize * w + pose.cell.x as usize) * 4 + heading_index(pose.heading)
    };
    // Parent pointers: (previous state, action taken), NONE for unvisited.
    const NONE: u32 = u32::MAX;
    let mut parent: Vec<(u32, u8)> = vec![(NONE, 0); states];
    let start_idx = index(start);
    parent[start_idx] = (start_idx as u32, 3); // self-loop marks the root
    let mut queue = VecDeque::new();
    queue.push_back(*start);

    while let Some(pose) = queue.pop_front() {
        // Expansion order fixed: ahead, left turn, right turn.
        let (dx, dy) = pose.heading.delta();
        let ahead = Cell::new(pose.cell.x + dx, pose.cell.y + dy);
        let moves: [(Pose, u8); 3] = [
            (Pose::new(ahead, pose.heading), 0),
            (Pose::new(pose.cell, pose.heading.left()), 1),
            (Pose::new(pose.cell, pose.heading.right()), 2),
        ];
        for (next, action) in moves {
            if action == 0 && !walkable(map, &next.cell) {
                continue;
            }
            let idx = index(&next);
            if parent[idx].0 != NONE {
                continue;
            }
            parent[idx] = (index(&pose) as u32, action);
            if goal(&next) {
                // Walk the parent chain back to the root.
                let mut actions = Vec::new();
                let mut at = idx;
                while at != start_idx {
                    let (prev, act) = parent[at];
                    actions.push(match act {
                        0 => Action::MoveAhead,
                        1 => Action::RotateLeft,
                        _ => Action::RotateRight,
                    });
                    at = prev as usize;
                }
                actions.reverse();
                return Some(actions);
            }
            queue.push_back(next);
        }
    }
    None
}

/// Whether `target` is in the sight wedge of `pose` with no *known*
/// obstacle in between. Unexplored cells pass: they cannot be known to
/// occlude.
pub fn facing_with_clear_line(map: &SemanticMap, pose: &Pose, target: &Cell) -> bool {
    if pose.cell == *target {
        return true;
    }
    if !in_wedge(pose, target, SIGHT_RANGE) {
        return false;
    }
    line_between(pose.cell, *target).iter().all(|c| !map.obstacles.get(c))
}

/// Plan a route that ends within interaction range of any marked cell of
/// `class`, facing it with a clear known line of sight.
pub fn route_to_class(
    map: &SemanticMap,
    start: &Pose,
    class: &str,
    stop_within: u32,
) -> Option<Vec<Action>> {
    let plane = map.plane(class)?;
    let targets: Vec<Cell> = plane.iter_set().collect();
    if targets.is_empty() {
        return None;
    }
    plan_route(map, start, |pose| {
        targets.iter().any(|t| {
            pose.cell.chebyshev(t) <= stop_within && facing_with_clear_line(map, pose, t)
        })
    })
}

/// Plan a route to stand on `cell` (any heading).
pub fn route_to_cell(map: &SemanticMap, start: &Pose, cell: &Cell) -> Option<Vec<Action>> {
    if !walkable(map, cell) {
        return None;
    }
    plan_route(map, start, |pose| pose.cell == *cell)
}

/// Cell-level BFS distances over known-walkable cells from `from`.
pub fn distance_map(map: &SemanticMap, from: &Cell) -> BTreeMap<Cell, u32> {
    let mut dist = BTreeMap::new();
    if !walkable(map, from) {
        return dist;
    }
    dist.insert(*from, 0);
    let mut queue = VecDeque::new();
    queue.push_back(*from);
    while let Some(cell) = queue.pop_front() {
        let d = dist[&cell];
        for next in cell.neighbors() {
            if walkable(map, &next) && !dist.contains_key(&next) {
                dist.insert(next, d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

/// The nearest explored free cell bordering unexplored space, excluding
/// cells already swept. Ties resolve by BFS expansion order (north, east,
/// south, west), so the choice is deterministic.
pub fn next_frontier(
    map: &SemanticMap,
    from: &Cell,
    exclude: &BTreeSet<Cell>,
) -> Option<Cell> {
    let (w, h) = (map.width(), map.height());
    let in_bounds =
        |c: &Cell| c.x >= 0 && c.y >= 0 && (c.x as usize) < w && (c.y as usize) < h;
    let is_frontier = |c: &Cell| {
        walkable(map, c)
            && !exclude.contains(c)
            && c.neighbors().iter().any(|n| in_bounds(n) && !map.explored.get(n))
    };
    if is_frontier(from) {
        return Some(*from);
    }
    let mut seen: BTreeSet<Cell> = BTreeSet::new();
    seen.insert(*from);
    let mut queue = VecDeque::new();
    queue.push_back(*from);
    while let Some(cell) = queue.pop_front() {
        for next in cell.neighbors() {
            if !walkable(map, &next) || !seen.insert(next) {
                continue;
            }
            if is_frontier(&next) {
                return Some(next);
            }
            queue.push_back(next);
        }
    }
    None
}
