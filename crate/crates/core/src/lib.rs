//! Core algorithms for reconstructing 3D human-object arrangements from
//! per-image evidence.
//!
//! The crate is `no_std` (with `alloc`) and free of IO. It covers:
//!
//! - [`geometry`]: meshes, signed distance grids, Chamfer distances, part
//!   normals, Procrustes alignment and quadric-error decimation.
//! - [`exemplars`]: shape descriptors, k-Means++ and exemplar ranking.
//! - [`body`]: perspective projection, keypoint energy and body refinement
//!   over a pluggable body-model evaluator.
//! - [`retrieval`]: exact k-d tree pose retrieval and database admission.
//! - [`priors`]: prompt templates, response parsing and part-label
//!   normalization for language-model derived priors.
//! - [`scene`]: object pose initialization and the joint optimization of
//!   object and human transforms.
//! - [`eval`]: Procrustes-aligned Chamfer metrics.
//!
//! File formats, the prompt cache, HTTP access and the command line live in
//! the companion `hoi` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod body;
pub mod error;
pub mod eval;
pub mod exemplars;
pub mod geometry;
pub mod image;
pub mod math;
pub mod optim;
pub mod priors;
pub mod retrieval;
pub mod scene;
pub mod synthetic;

pub use error::{Error, Result};
pub use math::{Mat3, Vec2, Vec3};
