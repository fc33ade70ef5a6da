//! Quantitative narrative analysis toolkit.

pub mod corpus;
pub mod network;
pub mod normalize;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod topics;
pub mod triplets;

pub use scalar::Scalar;

/// Reference-precision aliases used by the pipeline.
pub type TermDocMatrix = topics::TermDocMatrix<f64>;
pub type NmfModel = topics::NmfModel<f64>;
pub type CoherenceReport = topics::CoherenceReport<f64>;
pub type SweepResult = topics::SweepResult<f64>;

/// Single-precision variants.
pub type TermDocMatrixF32 = topics::TermDocMatrix<f32>;
pub type NmfModelF32 = topics::NmfModel<f32>;
