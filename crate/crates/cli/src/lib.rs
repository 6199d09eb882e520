//! File formats, wire clients, and the operator toolkit around
//! `homeworld-core`.
//!
//! The core crate is deliberately `no_std`: everything that touches the
//! filesystem, the network, or threads lives here instead.
//!
//! - [`scene_file`] — JSON scene snapshots with line-precise load errors.
//! - [`dataset`] — JSONL instruction/plan datasets and their QA report.
//! - [`pgm`] — semantic-map snapshots as per-channel PGM images.
//! - [`http`] — clients for external planner and embedding services.
//! - [`runner`] — parallel benchmark execution and report/trace writers.
//! - [`repl`] — the interactive solve loop: type an instruction, watch the
//!   agent carry it out.
//!
//! The `homeworld` binary wires these into subcommands; see its `--help`.
//! Everything is deterministic under fixed seeds: the same inputs produce
//! byte-identical reports, traces, and map snapshots.

pub mod dataset;
pub mod http;
pub mod pgm;
pub mod repl;
pub mod runner;
pub mod scene_file;
