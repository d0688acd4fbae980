//! Storage, model transport, HTTP service and CLI for the urban clip atlas.
//!
//! Builds on `atlas-core`, adding what needs an operating system: record
//! file formats, corpus snapshots, HTTP model backends, configuration and
//! the axum service.

pub mod config;
pub mod fixture;
pub mod formats;
pub mod ingest;
pub mod remote;
pub mod service;
pub mod snapshot;

pub use atlas_core as core;
