//! Parametric sewing-pattern tooling: pattern parsing and validation,
//! BoxMesh construction, mesh and pattern tokenization with exact
//! detokenizers, surface sampling, and the evaluation metric suite.

pub mod assign;
pub mod boxmesh;
pub mod curve;
pub mod error;
pub mod geom;
pub mod kdtree;
pub mod mesh_tokens;
pub mod metrics;
pub mod pattern;
pub mod pattern_tokens;
pub mod polygon;
pub mod sampling;
pub mod synth;
