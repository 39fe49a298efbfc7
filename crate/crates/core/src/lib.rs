//! Surface normals for sparse, organized LiDAR scans.
//!
//! Each vertical firing column ("slice") of a scan is split into smooth
//! connected components by looking at the angle between consecutive chords.
//! Normals are then computed with the usual four-neighbor cross product,
//! except that vertical neighbors carrying a different component label are
//! ignored. Points wedged between two foreign components are reported as
//! high-curvature instead of receiving a normal that straddles a crease.
//!
//! The crate also ships a ray-cast LiDAR simulator over analytic scenes that
//! provides ground truth, an evaluation module that scores normal fields
//! against it, and a small timing harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod clustering;
mod error;
pub mod eval;
pub mod normals;
pub mod scan;
pub mod sim;

pub use error::{Error, Result};

pub use clustering::{ClusteringParams, PointLabels, RleComponents};
pub use normals::{NormalField, NormalMethod, NormalStatus, PointNormal};
pub use scan::{OrganizedScan, Slice};

/// 3D vector type used throughout the crate (meters for points).
pub type Vec3 = nalgebra::Vector3<f64>;
