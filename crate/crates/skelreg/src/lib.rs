//! File formats, run configuration and the command-line driver for
//! `skelreg-core`.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod io;
pub mod records;

pub use config::{ConfigError, RunConfig};
pub use io::{read_point_cloud, read_point_cloud_auto, write_point_cloud, Format, IoError};
