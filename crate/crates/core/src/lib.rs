//! Confidence-aware human body orientation estimation from 2D skeletons.
//!
//! Orientation is a yaw angle in degrees: 0° faces the camera and angles grow
//! counter-clockwise seen from above. The network classifies yaw over 72 bins
//! of 5° and reports a scalar confidence; [`gate`] scores that confidence and
//! [`sim`] closes the loop with a person-following robot.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root pick `f64` for geometry and `f32` for the network.

pub mod circular;
pub mod error;
pub mod eval;
pub mod gate;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod skeleton;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Orientation = circular::OrientationDeg<f64>;
pub type Distribution = circular::OrientationDist<f64>;
pub type Skeleton2d = skeleton::Skeleton<f64>;
pub type SkeletonSample = skeleton::Sample<f64>;
/// Network weights in training precision.
pub type Model = model::ModelParams<f32>;
