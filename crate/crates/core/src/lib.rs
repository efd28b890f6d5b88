//! Desk-scale laser-altimetry sea-ice pipeline.
//!
//! The crate turns geolocated photon tracks into 2 m statistical segments,
//! transfers surface classes from a classified image raster onto those
//! segments, trains small from-scratch classifiers (MLP and LSTM with focal
//! loss and Adam), estimates a local sea surface from open-water leads and
//! derives per-segment freeboard.
//!
//! Parallel work goes through [`runtime`], a chunked map-reduce executor
//! backed by rayon when the `parallel` feature is enabled (the default) and
//! running on the calling thread otherwise. [`dtrain`] simulates synchronous
//! data-parallel training over a ring all-reduce between in-process workers.
//!
//! Module map:
//!
//! - [`geo`]: south-polar stereographic projection, label rasters, drift shifts
//! - [`ingest`]: photon I/O, 2 m resampling, features, synthetic tracks
//! - [`autolabel`]: raster-to-segment label transfer and manual overrides
//! - [`nnet`]: tensors, MLP/LSTM, focal loss, Adam, metrics, model files
//! - [`dtrain`]: ring all-reduce, root broadcast, data-parallel steps
//! - [`surface`]: leads, sea-surface estimators, profiles, freeboard
//! - [`runtime`]: chunk plans with halos and timed map-reduce

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autolabel;
pub mod dtrain;
mod error;
pub mod geo;
pub mod ingest;
pub mod io;
pub mod nnet;
pub mod runtime;
pub mod surface;

pub use error::{Error, Result};
