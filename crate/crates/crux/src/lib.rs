//! File formats and command-line driver for `crux-core`.
//!
//! Latency maps are read from CSV or JSON ([`mapio`]), plans are written as
//! JSON ([`planfile`]) and simulation results as CSV ([`report`]). Every
//! output embeds the [`RunConfig`] and input digests that produced it.

pub mod cli;
pub mod config;
mod error;
pub mod mapio;
pub mod planfile;
pub mod report;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use mapio::{load_map, load_map_file, map_digest, save_map, save_map_file, MapFormat};
