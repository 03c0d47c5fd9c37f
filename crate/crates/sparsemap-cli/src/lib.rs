//! Command-line harness around the `sparsemap` core: Monte-Carlo benchmark
//! experiments with CSV output, a binary-image recovery demo over PBM files,
//! and a driver for the distributional verifiers.
//!
//! Everything that touches the filesystem, clocks, or threads lives here;
//! the core crate stays pure.

pub mod config;
pub mod experiments;
pub mod image;
pub mod pbm;
pub mod runner;
pub mod verify;
