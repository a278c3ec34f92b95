//! Learning and execution of hybrid force/position skills from
//! demonstration: movement primitives for position and orientation,
//! contact-aware extensions, an operational-space hybrid controller, a
//! force-aligned constraint-frame learner, and a small rigid-body
//! simulator plus scenario harness to exercise them.

pub mod cdmp;
pub mod contact;
pub mod controller;
pub mod dmp;
pub mod frames;
pub mod harness;
pub mod num;
pub mod sim;

pub use num::Real;

/// Default-precision aliases. The math core is generic over [`Real`];
/// the simulator and harness are f64 only.
pub type ScalarPrimitive = dmp::ScalarPrimitive<f64>;
pub type ScalarPrimitive32 = dmp::ScalarPrimitive<f32>;
pub type OrientationPrimitive = cdmp::OrientationPrimitive<f64>;
pub type OrientationPrimitive32 = cdmp::OrientationPrimitive<f32>;
pub type UnitQuat = cdmp::UnitQuat<f64>;
pub type ConstraintProfile = frames::ConstraintProfile<f64>;
