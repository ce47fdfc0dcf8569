//! Experiment harness around `eitsdp-core`: JSON configuration, CSV/JSON/SVG
//! artifacts and the command implementations behind the `eitsdp` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod svg;
