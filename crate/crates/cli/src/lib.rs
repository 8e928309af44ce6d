//! Pipeline orchestration for the `sdgscope` command: configuration, stage
//! execution, the report bundle and its manifest.

pub mod bundle;
pub mod config;
pub mod error;
pub mod report;
pub mod stages;
pub mod synth;

pub use config::{Overrides, PipelineConfig};
pub use error::{CliError, Stage};
pub use stages::{run_pipeline, run_stage};
