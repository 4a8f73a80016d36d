//! Chaos-game "kaleidoscope" images for protein sequences.
//!
//! The crate turns amino-acid sequences into line geometry
//! ([`kaleidoscope`]), rasterizes it deterministically ([`raster`]), and
//! provides the pieces needed to evaluate such images as classification
//! inputs: a classic chaos-game baseline ([`cgr`]), feature encoders
//! ([`features`]), reference classifiers ([`classify`]) and metrics
//! ([`metrics`]).

mod binio;
pub mod cgr;
pub mod classify;
pub mod config;
pub mod features;
mod geom;
pub mod kaleidoscope;
pub mod metrics;
pub mod raster;
pub mod rng;
pub mod seqdata;

pub use geom::{Point, Segment};

use thiserror::Error;

/// Any error produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Seq(#[from] seqdata::SeqError),
    #[error(transparent)]
    Geometry(#[from] kaleidoscope::GeometryError),
    #[error(transparent)]
    Raster(#[from] raster::RasterError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Classify(#[from] classify::ClassifyError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
