//! Routing between retrieval-based and generation-based image
//! geolocalization predictions.
//!
//! The crate builds per-query supervision from paired predictions
//! ([`data`]), fits a routing model against distance-aware soft labels
//! ([`dispo`], [`router`]), and measures threshold accuracy, routing
//! accuracy and the oracle bound ([`eval`]). [`cli`] wires it into the
//! `georouter` binary.

pub mod cli;
pub mod data;
pub mod dispo;
pub mod error;
pub mod eval;
pub mod geo;
pub mod router;

pub use error::{Error, Result};
