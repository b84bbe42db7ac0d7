//! cloudbox turns raw 3D point clouds of a robot workspace into a
//! collision world of bounding boxes and answers clearance queries
//! against it.
//!
//! The pipeline: crop the cloud to the workspace, drop statistical
//! outliers, grow smooth-surface clusters, split oversized clusters on a
//! grid, and fit an axis-aligned or covariance-aligned box per piece.
//! Query-side, boxes are compared either directly as convex polytopes
//! (support-function distance over the Minkowski difference) or through
//! covering sphere sets (separating-axis specialization), which trades
//! free space for cheaper constraints.

pub mod bounding;
pub mod cloud;
pub mod collision;
pub mod config;
pub mod error;
pub mod io;
pub mod math;
pub mod pipeline;
pub mod preprocess;
pub mod scene;
pub mod segmentation;
pub mod sweep;

pub use error::{Error, Result};
pub use math::Point3;
