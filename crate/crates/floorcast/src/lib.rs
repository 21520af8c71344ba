//! Predict, measure, and calibrate distillation loss floors from
//! superposition capacity.
//!
//! A student of hidden width `d_S` can carry at most `d_S * g(alpha)`
//! sparse features; the importance-weighted mass of everything past that
//! budget is a hard loss floor. This crate provides:
//!
//! - [`capacity`]: the capacity function, critical width, and
//!   representable-feature count;
//! - [`importance`]: importance distributions and the floor prediction;
//! - [`toymodel`]: a from-scratch trainer that measures actual floors;
//! - [`sweep`]: the validation grid with seed aggregation and scoring;
//! - [`saestats`]: sparse-autoencoder measurement ingestion;
//! - [`calibrate`]: fits linking predicted floors to observed ones;
//! - [`plot`]: SVG rendering of the emitted CSV artifacts.

pub mod calibrate;
pub mod capacity;
pub mod cli;
pub mod error;
pub mod importance;
pub mod metrics;
pub mod plot;
pub mod saestats;
pub mod sweep;
pub mod toymodel;

pub use error::{FloorcastError, Result};
