//! Enrichment of identity-free broadcast tracking into complete per-player
//! trajectories.
//!
//! The pipeline forecasts where each unseen player is likely to be, links
//! anonymous sightings to trajectories frame by frame with a maximum
//! likelihood assignment, and fills the gaps between sightings with a
//! velocity-corrected interpolation.

pub mod assign;
pub mod broadcast;
pub mod error;
pub mod evaluate;
pub mod exec;
pub mod forecast;
pub mod geometry;
pub mod ingest;
pub mod interpolate;
pub mod pipeline;
pub mod synthetic;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{Point, PlayerTag, Team, TrackPoint, Trajectory};
