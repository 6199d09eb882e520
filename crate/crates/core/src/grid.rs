//! Grid geometry: cells, headings, poses, Chebyshev metric, line of sight,
//! and packed single-bit planes used throughout the mapping stack.
//!
//! The grid is axis-aligned with `x` growing east and `y` growing south
//! (row-major order, matching image conventions). Headings are the four
//! cardinal directions; rotation is always by 90 degrees.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// A grid cell addressed by integer coordinates.
///
/// Serialises as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    /// Chebyshev (chessboard) distance to another cell.
    pub fn chebyshev(&self, other: &Cell) -> u32 {
        let dx = (self.x - other.x).unsigned_abs();
        let dy = (self.y - other.y).unsigned_abs();
        dx.max(dy)
    }

    /// The four cardinal neighbours in north, east, south, west order.
    pub fn neighbors(&self) -> [Cell; 4] {
        [
            Cell::new(self.x, self.y - 1),
            Cell::new(self.x + 1, self.y),
            Cell::new(self.x, self.y + 1),
            Cell::new(self.x - 1, self.y),
        ]
    }
}

impl From<[i32; 2]> for Cell {
    fn from(v: [i32; 2]) -> Self {
        Cell { x: v[0], y: v[1] }
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

/// A cardinal facing direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    /// Unit step in the facing direction (`y` grows south).
    pub fn delta(&self) -> (i32, i32) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    pub fn left(&self) -> Heading {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn right(&self) -> Heading {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    /// All headings in a fixed order (used for deterministic expansion).
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];
}

/// An agent pose: cell plus facing direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    pub heading: Heading,
}

impl Pose {
    pub const fn new(cell: Cell, heading: Heading) -> Self {
        Pose { cell, heading }
    }
}

/// Returns true when `target` lies inside the 90-degree forward wedge of
/// `pose` out to Chebyshev range `range`: at least one step forward, and
/// lateral offset no larger than the forward offset.
pub fn in_wedge(pose: &Pose, target: &Cell, range: u32) -> bool {
    let (fx, fy) = pose.heading.delta();
    // Right-hand perpendicular of the facing direction.
    let (rx, ry) = (-fy, fx);
    let dx = target.x - pose.cell.x;
    let dy = target.y - pose.cell.y;
    let forward = dx * fx + dy * fy;
    let lateral = dx * rx + dy * ry;
    forward >= 1 && forward as i64 <= range as i64 && lateral.abs() <= forward
}

/// Cells strictly between `a` and `b` along the Bresenham line from `a`
/// to `b`, in traversal order. Endpoints are excluded.
pub fn line_between(a: Cell, b: Cell) -> Vec<Cell> {
    let mut cells = Vec::new();
    let mut x = a.x;
    let mut y = a.y;
    let dx = (b.x - a.x).abs();
    let dy = -(b.y - a.y).abs();
    let sx = if a.x < b.x { 1 } else { -1 };
    let sy = if a.y < b.y { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        if x == b.x && y == b.y {
            break;
        }
        cells.push(Cell::new(x, y));
    }
    cells
}

/// A `w`x`h` grid of bits packed into 64-bit words, row-major.
///
/// Out-of-bounds reads return false; out-of-bounds writes are ignored.
/// Bits past `w*h` in the final word are kept zero so word-level set
/// operations stay exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plane {
    w: usize,
    h: usize,
    words: Vec<u64>,
}

impl Plane {
    pub fn new(w: usize, h: usize) -> Self {
        Plane { w, h, words: vec![0; (w * h + 63) / 64] }
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn height(&self) -> usize {
        self.h
    }

    fn index(&self, cell: &Cell) -> Option<usize> {
        if cell.x < 0 || cell.y < 0 || cell.x as usize >= self.w || cell.y as usize >= self.h {
            None
        } else {
            Some(cell.y as usize * self.w + cell.x as usize)
        }
    }

    pub fn get(&self, cell: &Cell) -> bool {
        match self.index(cell) {
            Some(i) => self.words[i / 64] >> (i % 64) & 1 == 1,
            None => false,
        }
    }

    pub fn set(&mut self, cell: &Cell) {
        if let Some(i) = self.index(cell) {
            self.words[i / 64] |= 1 << (i % 64);
        }
    }

    pub fn unset(&mut self, cell: &Cell) {
        if let Some(i) = self.index(cell) {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Set cells in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.w * self.h).filter_map(move |i| {
            if self.words[i / 64] >> (i % 64) & 1 == 1 {
                Some(Cell::new((i % self.w) as i32, (i / self.w) as i32))
            } else {
                None
            }
        })
    }

    fn zip_words(&self, other: &Plane, f: impl Fn(u64, u64) -> u64) -> Plane {
        debug_assert_eq!((self.w, self.h), (other.w, other.h));
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| f(*a, *b))
            .collect();
        let mut out = Plane { w: self.w, h: self.h, words };
        out.mask_tail();
        out
    }

    fn mask_tail(&mut self) {
        let bits = self.w * self.h;
        if bits % 64 != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (bits % 64)) - 1;
            }
        }
    }

    pub fn and(&self, other: &Plane) -> Plane {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Plane) -> Plane {
        self.zip_words(other, |a, b| a | b)
    }

    pub fn and_not(&self, other: &Plane) -> Plane {
        self.zip_words(other, |a, b| a & !b)
    }

    pub fn union_with(&mut self, other: &Plane) {
        debug_assert_eq!((self.w, self.h), (other.w, other.h));
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= *b;
        }
    }

    pub fn intersects(&self, other: &Plane) -> bool {
        self.words.iter().zip(other.words.iter()).any(|(a, b)| a & b != 0)
    }

    /// Chebyshev dilation: every set cell spreads to all cells within
    /// distance `radius` (a `(2r+1)`-square stamp).
    pub fn dilate_chebyshev(&self, radius: i32) -> Plane {
        let mut out = Plane::new(self.w, self.h);
        for cell in self.iter_set() {
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    out.set(&Cell::new(cell.x + dx, cell.y + dy));
                }
            }
        }
        out
    }
}
