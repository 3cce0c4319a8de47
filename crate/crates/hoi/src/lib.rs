//! File formats, the prompt cache, the end-to-end fitting pipeline and the
//! `hoi` command line built on `hoi-core`.

pub mod cache;
pub mod database;
pub mod error;
pub mod exemplar_store;
pub mod fixture;
pub mod live;
pub mod mask_io;
pub mod mesh_io;
pub mod pipeline;
pub mod render;
pub mod report;
pub mod schema;

pub use error::{HoiError, Result};
pub use pipeline::{run_pipeline, FitOptions, FitReport, PipelineError, Stage};
