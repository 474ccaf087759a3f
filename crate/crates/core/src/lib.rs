//! Saturated consensus maximization and globally optimal camera pose
//! estimation against semantic 3D line maps.
//!
//! Rotation and translation are searched separately by branch and bound over
//! the rotation axis and two translation axes; the remaining parameter of
//! each is solved exactly by saturated interval stabbing.

// `!(x > tol)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod intervals;
pub mod poly;
pub mod saturation;
pub mod stabbing;
pub mod bnb;
pub mod rotation;
pub mod io;
pub mod translation;
pub mod synth;
pub mod config;
pub mod pipeline;
pub mod map_builder;
pub mod eval;
pub mod landscape;
