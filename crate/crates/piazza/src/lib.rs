//! piazza — an agent-based microblogging platform simulator.
//!
//! A population of profile-seeded agents posts, comments, likes, follows
//! and unfollows over virtual days on a simulated feed-driven platform.
//! Agents hold per-topic political opinions that they revise at the end of
//! each day through a pluggable text driver (a deterministic stub or a
//! remote chat-completion endpoint), and every run is reproducible: the
//! seed determines the entire event log.
//!
//! The crate is organised around the run pipeline:
//!
//! - [`domain`] — agents, content, the follow graph, and the event log
//! - [`seeding`] — building populations from empirical seed records
//! - [`recommender`] — feed construction strategies
//! - [`driver`] — prompt rendering, stub/remote generation, reply parsing
//! - [`engine`] — the hourly simulation loop and end-of-day opinion updates
//! - [`opinion`] — stance labels/scores and the Friedkin–Johnsen baseline
//! - [`toxicity`] — pluggable per-text toxicity scoring
//! - [`analysis`] — interaction matrices, correlations, trajectories, shifts
//! - [`config`] / [`cli`] — experiment configuration and batch orchestration
//!
//! The `examples/` directory holds one runnable example per capability;
//! the `piazza` binary exposes the same pipeline as `run`, `fj`,
//! `analyze` and `compare` subcommands.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod domain;
pub mod driver;
pub mod engine;
pub mod opinion;
pub mod recommender;
pub mod seeding;
pub mod stats;
pub mod toxicity;
