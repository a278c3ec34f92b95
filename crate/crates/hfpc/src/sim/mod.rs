//! Deterministic plant: floating-body and serial-chain arm dynamics,
//! penalty contact surfaces with Coulomb friction, and simulated force
//! sensing with low-pass filtering. Everything here is `f64`; the math
//! core it feeds is generic.

mod arm;
mod filter;
mod surface;
mod world;

pub use arm::{ArmModel, Link, SerialChain};
pub use filter::SensorFilter;
pub use surface::{ContactSurface, SurfaceGeometry};
pub use world::{ArmState, NoiseConfig, SimError, SimWorld, StepOutput};

/// Standard gravity, m/s^2.
pub const GRAVITY: f64 = 9.81;
