//! Deterministic gridworld household simulator and the decision stack that
//! drives an embodied agent through it.
//!
//! The crate is organised as a pipeline of pure modules:
//!
//! - [`grid`] — cells, headings, poses, and packed bit planes.
//! - [`registry`] — the object-class catalogue (affordances, sizes, lexicon).
//! - [`scene`] — world state and the action transition function.
//! - [`observe`] — egocentric sensing with optional detector noise.
//! - [`semmap`] — accumulated semantic map, corrective overwrite, inventory.
//! - [`plan`] — instruction parsing, task templates, subgoal phrase matching.
//! - [`validate`] — symbolic plan checking and the mutation catalogue.
//! - [`replan`] — similarity-based substitution of unavailable objects.
//! - [`nav`] — breadth-first pathfinding and frontier exploration.
//! - [`exec`] — the episode executive tying sensing, mapping, and control.
//! - [`bench`] — benchmark generation, episode scoring, ablation grids.
//!
//! Everything here is `no_std`-compatible (with `alloc`); file formats,
//! wire clients, and the CLI live in the companion `homeworld` crate.
//! All iteration orders are fixed and all randomness flows from explicit
//! seeds, so identical inputs produce byte-identical outputs.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bench;
pub mod exec;
pub mod grid;
pub mod nav;
pub mod observe;
pub mod plan;
pub mod registry;
pub mod replan;
pub mod scene;
pub mod semmap;
pub mod validate;
