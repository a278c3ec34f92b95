//! Force-aligned dynamic constraint frame: build a rotation whose z-axis
//! tracks the demonstrated force direction, learn it as an orientation
//! primitive together with a scalar primitive for the force magnitude,
//! and play both back at a shared phase for the controller.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::cdmp::{
    cdmp_step, fit_orientation, sign_align, OrientationPrimitive, OrientationState,
    UnitQuat,
};
use crate::controller::SelectionState;
use crate::dmp::{dmp_step, fit_scalar, DmpError, ScalarPrimitive, ScalarState};
use crate::num::{real, Real};

/// Forces weaker than this are treated as degenerate: no reliable
/// direction, so the previous valid frame is held.
pub const FORCE_DEGENERACY_THRESHOLD: f64 = 0.25;
/// Cross products shorter than this mean the candidate axis is parallel
/// to the force direction.
const PARALLEL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("force magnitude below degeneracy threshold")]
    DegenerateForce,
    #[error("candidate axis parallel to force direction")]
    ParallelCandidate,
    #[error("learning failed for segment '{segment}': {reason}")]
    Learning { segment: String, reason: String },
    #[error(transparent)]
    Fit(#[from] DmpError),
}

/// Whether the recorded wrench is the force the robot applies to the
/// environment or the reaction the environment applies back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorConvention {
    /// Readings are the applied force; use directly.
    #[default]
    Applied,
    /// Readings are the reaction force; negate before frame construction.
    Reaction,
}

/// One constructed frame sample.
#[derive(Debug, Clone, Copy)]
pub struct FrameSample<T: Real> {
    pub t: T,
    /// Rotation with columns (x, y, z) expressing constraint axes in base
    /// coordinates; its z column is the unit force direction when valid.
    pub rotation: Matrix3<T>,
    pub valid: bool,
}

/// Build a right-handed frame whose z-axis is the unit force direction.
///
/// `candidate_y` seeds the remaining axes: `x = normalize(candidate_y x z)`,
/// `y = z x x`. Degenerate force magnitude or a parallel candidate is an
/// error so the caller can hold the previous frame or fall back to another
/// axis.
pub fn frame_from_force<T: Real>(
    force: &Vector3<T>,
    candidate_y: &Vector3<T>,
) -> Result<Matrix3<T>, FrameError> {
    let norm = force.norm();
    if norm < real(FORCE_DEGENERACY_THRESHOLD) {
        return Err(FrameError::DegenerateForce);
    }
    let z = force / norm;
    let x_raw = candidate_y.normalize().cross(&z);
    if x_raw.norm() < real(PARALLEL_THRESHOLD) {
        return Err(FrameError::ParallelCandidate);
    }
    let x = x_raw.normalize();
    let y = z.cross(&x);
    Ok(Matrix3::from_columns(&[x, y, z]))
}

/// A learned in-contact profile: constraint-frame orientation primitive,
/// force-magnitude primitive, and the canonical single-force-DOF
/// selection (position everywhere except the constraint-frame z
/// translation).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintProfile<T: Real> {
    pub frame_primitive: OrientationPrimitive<T>,
    pub magnitude_primitive: ScalarPrimitive<T>,
    pub sensor_convention: SensorConvention,
    /// Scaled initial magnitude velocity `tau * d|F|/dt` at the segment
    /// start. In-contact spans begin mid-motion, so starting the rollout
    /// from rest would replay an initial-condition transient the
    /// demonstration never had; this restores the demonstrated state.
    #[serde(default = "T::zero")]
    pub magnitude_v0: T,
    /// Scaled initial frame angular velocity `tau * omega` at the segment
    /// start, same rationale as `magnitude_v0`.
    #[serde(default = "zero_vector3")]
    pub frame_w0: Vector3<T>,
}

fn zero_vector3<T: Real>() -> Vector3<T> {
    Vector3::zeros()
}

impl<T: Real> ConstraintProfile<T> {
    /// Diagonal of the canonical selection matrix: exactly one
    /// zero-targeted entry (constraint-frame z translation).
    pub fn selection_diag(&self) -> [T; 6] {
        [T::one(), T::one(), T::zero(), T::one(), T::one(), T::one()]
    }

    pub fn playback(&self) -> ProfilePlayback<T> {
        let mut orientation = self.frame_primitive.initial_state();
        orientation.w = self.frame_w0;
        let mut magnitude = self.magnitude_primitive.initial_state();
        magnitude.v = self.magnitude_v0;
        ProfilePlayback { orientation, magnitude }
    }

    /// Override the temporal scaling of both primitives together so the
    /// frame stays in sync with temporally modulated motion.
    pub fn with_tau(mut self, tau: T) -> Self {
        self.frame_primitive.tau = tau;
        self.magnitude_primitive.tau = tau;
        self
    }
}

/// Shared-phase playback state for the frame and magnitude primitives.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePlayback<T: Real> {
    pub orientation: OrientationState<T>,
    pub magnitude: ScalarState<T>,
}

/// Rolled-out desired wrench at one instant.
#[derive(Debug, Clone, Copy)]
pub struct DesiredWrench<T: Real> {
    /// Constraint axes in base coordinates, columns (x, y, z).
    pub frame: Matrix3<T>,
    /// Desired force in base coordinates: magnitude along the frame z.
    pub force: Vector3<T>,
    pub magnitude: T,
}

impl<T: Real> ProfilePlayback<T> {
    /// Advance both primitives one step and return the desired wrench plus
    /// the selection state for the controller (rotation stored as the
    /// base-to-constraint-frame transform, i.e. the transpose of the
    /// frame's column matrix).
    pub fn step(
        &mut self,
        profile: &ConstraintProfile<T>,
        dt: T,
    ) -> Result<(DesiredWrench<T>, SelectionState<T>), DmpError> {
        self.orientation = cdmp_step(&self.orientation, &profile.frame_primitive, dt)?;
        self.magnitude = dmp_step(&self.magnitude, &profile.magnitude_primitive, dt)?;
        Ok(self.current(profile))
    }

    pub fn current(
        &self,
        profile: &ConstraintProfile<T>,
    ) -> (DesiredWrench<T>, SelectionState<T>) {
        let frame = self.orientation.q.to_rotation_matrix();
        let magnitude = self.magnitude.y;
        let force = frame.column(2) * magnitude;
        let mut sel = SelectionState::single_force_dof(frame.transpose());
        let diag = profile.selection_diag();
        for i in 0..6 {
            sel.diag[i] = diag[i];
        }
        (DesiredWrench { frame, force: force.into(), magnitude }, sel)
    }
}

/// Learn a [`ConstraintProfile`] from the in-contact span of a
/// demonstration.
///
/// `forces` are the recorded wrench force parts; `candidate_y` /
/// `fallback_x` the demonstrated end-effector y- and x-axes used to seed
/// the frame construction. Samples with degenerate force hold the
/// previous valid frame; more than 10% degenerate samples is a learning
/// error naming the segment.
#[allow(clippy::too_many_arguments)]
pub fn learn_constraint_profile<T: Real>(
    segment_name: &str,
    t: &[T],
    forces: &[Vector3<T>],
    candidate_y: &[Vector3<T>],
    fallback_x: &[Vector3<T>],
    convention: SensorConvention,
    n_basis: usize,
    lambda: T,
) -> Result<ConstraintProfile<T>, FrameError> {
    if t.len() != forces.len() || t.len() != candidate_y.len() || t.len() != fallback_x.len() {
        return Err(FrameError::Learning {
            segment: segment_name.into(),
            reason: "input channel lengths differ".into(),
        });
    }
    if t.len() < 3 {
        return Err(FrameError::Learning {
            segment: segment_name.into(),
            reason: "need at least 3 samples".into(),
        });
    }
    let mut samples: Vec<FrameSample<T>> = Vec::with_capacity(t.len());
    let mut degenerate = 0usize;
    let mut magnitudes: Vec<T> = Vec::with_capacity(t.len());
    for k in 0..t.len() {
        let f = match convention {
            SensorConvention::Applied => forces[k],
            SensorConvention::Reaction => -forces[k],
        };
        magnitudes.push(f.norm());
        let rotation = match frame_from_force(&f, &candidate_y[k]) {
            Ok(r) => r,
            Err(FrameError::ParallelCandidate) => {
                frame_from_force(&f, &fallback_x[k]).map_err(|_| FrameError::Learning {
                    segment: segment_name.into(),
                    reason: format!("both candidate axes parallel to force at sample {k}"),
                })?
            }
            Err(_) => {
                degenerate += 1;
                match samples.last() {
                    Some(prev) => prev.rotation,
                    None => Matrix3::identity(),
                }
            }
        };
        let valid = magnitudes[k] >= real(FORCE_DEGENERACY_THRESHOLD);
        samples.push(FrameSample { t: t[k], rotation, valid });
    }
    let frac = degenerate as f64 / t.len() as f64;
    if frac > 0.10 {
        return Err(FrameError::Learning {
            segment: segment_name.into(),
            reason: format!("{:.1}% of samples have degenerate force", frac * 100.0),
        });
    }

    let quats: Vec<UnitQuat<T>> = samples
        .iter()
        .map(|s| UnitQuat::from_rotation_matrix(&s.rotation))
        .collect();
    let quats = sign_align(&quats);
    let frame_primitive = fit_orientation(t, &quats, n_basis, lambda)?;
    let magnitude_primitive = fit_scalar(t, &magnitudes, n_basis, lambda)?;
    let tau = magnitude_primitive.tau;
    let dt0 = t[1] - t[0];
    let magnitude_v0 = tau * (magnitudes[1] - magnitudes[0]) / dt0;
    let frame_w0 = crate::cdmp::quat_diff(&quats[0], &quats[1]) * (tau / dt0);
    Ok(ConstraintProfile {
        frame_primitive,
        magnitude_primitive,
        sensor_convention: convention,
        magnitude_v0,
        frame_w0,
    })
}

/// Angle between the rolled-out frame z-axis and a reference direction.
pub fn z_axis_angle<T: Real>(frame: &Matrix3<T>, reference: &Vector3<T>) -> T {
    let z: Vector3<T> = frame.column(2).into();
    let c = z.dot(&reference.normalize()).clamp(-T::one(), T::one());
    c.acos()
}
