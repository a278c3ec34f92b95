//! Operational-space hybrid force/position control: task-space inertia,
//! the dynamically consistent Jacobian pseudo-inverse, the selection-matrix
//! block transform into the constraint frame, a Cartesian inverse dynamics
//! position law, a windowed PI force law with optional Integral Error
//! Scaling, and null-space posture control.
//!
//! All operations are pure functions over a model snapshot; the force
//! integral state is explicit input/output so the 1 kHz loop stays
//! single-threaded and deterministic.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::cdmp::{quat_diff, UnitQuat};
use crate::num::{real, Real};

/// Condition-number threshold beyond which task-inertia inversion switches
/// to damped inversion with a logged warning.
pub const SINGULARITY_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, thiserror::Error)]
pub enum ControlError {
    #[error("singular configuration: {0}")]
    Singularity(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Snapshot of the quantities the control law needs from the plant model.
#[derive(Debug, Clone)]
pub struct RobotModelState<T: Real> {
    /// n x n joint-space inertia, symmetric positive definite.
    pub inertia: DMatrix<T>,
    /// 6 x n task Jacobian.
    pub jacobian: DMatrix<T>,
    /// Jdot * qdot bias term in task space.
    pub jdot_qdot: Vector6<T>,
    /// Joint-space gravity torques.
    pub gravity: DVector<T>,
    pub q: DVector<T>,
    pub qdot: DVector<T>,
}

impl<T: Real> RobotModelState<T> {
    pub fn dof(&self) -> usize {
        self.inertia.nrows()
    }

    fn check(&self) -> Result<(), ControlError> {
        let n = self.dof();
        if self.jacobian.nrows() != 6
            || self.jacobian.ncols() != n
            || self.gravity.len() != n
            || self.q.len() != n
            || self.qdot.len() != n
        {
            return Err(ControlError::Dimension(format!(
                "model dimensions inconsistent with n={n}"
            )));
        }
        Ok(())
    }
}

/// Diagnostics from the task-inertia inversion, loggable per tick.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InertiaDiagnostics<T> {
    pub condition_number: T,
    pub damped: bool,
}

/// Task-space inertia `Lambda = (J M^-1 J^T)^-1`.
///
/// Past [`SINGULARITY_CONDITION_LIMIT`] the inverse is damped
/// (`1e-6 * trace` on the diagonal) and a warning is logged; the error
/// path is reserved for inputs that defeat even the damped solve.
pub fn task_inertia<T: Real>(
    model: &RobotModelState<T>,
) -> Result<(Matrix6<T>, InertiaDiagnostics<T>), ControlError> {
    model.check()?;
    let m_inv = model
        .inertia
        .clone()
        .cholesky()
        .ok_or_else(|| ControlError::Singularity("joint inertia not positive definite".into()))?
        .inverse();
    let a_dyn = &model.jacobian * m_inv * model.jacobian.transpose();
    let a = Matrix6::from_fn(|i, j| a_dyn[(i, j)]);

    let svd = a.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > T::zero() { smax / smin } else { T::max_value().unwrap_or(smax) };
    let damped = !(cond < real(SINGULARITY_CONDITION_LIMIT));
    let to_invert = if damped {
        log::warn!("task-inertia conditioning {cond:?} exceeds limit; applying damped inversion");
        let damping = real::<T>(1e-6) * a.trace();
        a + Matrix6::identity() * damping
    } else {
        a
    };
    let lambda = to_invert
        .try_inverse()
        .ok_or_else(|| ControlError::Singularity("task-inertia inversion failed".into()))?;
    // Symmetrize to wash out round-off.
    let lambda = (lambda + lambda.transpose()) * real::<T>(0.5);
    Ok((lambda, InertiaDiagnostics { condition_number: cond, damped }))
}

/// Dynamically consistent generalized pseudo-inverse `J# = M^-1 J^T Lambda`.
pub fn generalized_pseudoinverse<T: Real>(
    model: &RobotModelState<T>,
    lambda: &Matrix6<T>,
) -> Result<DMatrix<T>, ControlError> {
    let m_inv = model
        .inertia
        .clone()
        .cholesky()
        .ok_or_else(|| ControlError::Singularity("joint inertia not positive definite".into()))?
        .inverse();
    let lambda_dyn = DMatrix::from_fn(6, 6, |i, j| lambda[(i, j)]);
    Ok(m_inv * model.jacobian.transpose() * lambda_dyn)
}

/// Null-space projector `I - (J# J)^T`.
pub fn nullspace_projector<T: Real>(
    model: &RobotModelState<T>,
    jsharp: &DMatrix<T>,
) -> DMatrix<T> {
    let n = model.dof();
    DMatrix::identity(n, n) - (jsharp * &model.jacobian).transpose()
}

/// Per-dimension selection values plus the rotation from the base frame to
/// the constraint frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionState<T: Real> {
    /// Diagonal of S; each entry in [0, 1]. 1 = position control,
    /// 0 = force control, in-between blends during transitions.
    pub diag: Vector6<T>,
    /// Rotation base -> constraint frame (the matrix usually written as
    /// the constraint-from-base rotation).
    pub rotation: Matrix3<T>,
}

impl<T: Real> SelectionState<T> {
    /// Pure motion: S = I, world-aligned frame.
    pub fn motion_only() -> Self {
        Self { diag: Vector6::repeat(T::one()), rotation: Matrix3::identity() }
    }

    /// The canonical single-force-DOF selection: force control on the
    /// constraint-frame z translation, position control elsewhere.
    pub fn single_force_dof(rotation: Matrix3<T>) -> Self {
        let mut diag = Vector6::repeat(T::one());
        diag[2] = T::zero();
        Self { diag, rotation }
    }

    /// Complementary selection `I - S` with the same frame.
    pub fn complement(&self) -> Self {
        Self { diag: Vector6::repeat(T::one()) - self.diag, rotation: self.rotation }
    }
}

/// Block transform `Omega(S) = blockdiag(R^T S_pos R, R^T S_rot R)` where
/// `S_pos`, `S_rot` are the translational and rotational 3x3 sub-blocks of
/// the selection diagonal.
pub fn omega_transform<T: Real>(sel: &SelectionState<T>) -> Matrix6<T> {
    let r = sel.rotation;
    let s_pos = Matrix3::from_diagonal(&Vector3::new(sel.diag[0], sel.diag[1], sel.diag[2]));
    let s_rot = Matrix3::from_diagonal(&Vector3::new(sel.diag[3], sel.diag[4], sel.diag[5]));
    let top = r.transpose() * s_pos * r;
    let bottom = r.transpose() * s_rot * r;
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&top);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&bottom);
    out
}

/// Position/damping and force P/I gains plus the IES configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridGains<T: Real> {
    pub kp: Matrix6<T>,
    pub kd: Matrix6<T>,
    pub kf: Matrix6<T>,
    pub ki: Matrix6<T>,
    /// Integral accumulation window, in samples.
    pub integral_window: usize,
    /// Control period in seconds; scales each windowed integral
    /// contribution so `ki` stays a per-second gain across sample rates.
    pub dt: T,
    /// IES attenuation factor in [0, 1).
    pub ies_beta: T,
    pub ies_enabled: bool,
}

impl<T: Real> HybridGains<T> {
    pub fn new(kp: T, kd: T, kf: T, ki: T) -> Self {
        Self {
            kp: Matrix6::identity() * kp,
            kd: Matrix6::identity() * kd,
            kf: Matrix6::identity() * kf,
            ki: Matrix6::identity() * ki,
            integral_window: 500,
            dt: real(1e-3),
            ies_beta: real(0.001),
            ies_enabled: false,
        }
    }
}

/// Desired and actual Cartesian motion references for the position law.
#[derive(Debug, Clone)]
pub struct CartesianRefs<T: Real> {
    pub pos_d: Vector3<T>,
    pub quat_d: UnitQuat<T>,
    pub vel_d: Vector6<T>,
    pub acc_d: Vector6<T>,
    pub pos: Vector3<T>,
    pub quat: UnitQuat<T>,
    pub vel: Vector6<T>,
}

impl<T: Real> CartesianRefs<T> {
    /// Six-dimensional pose error; the rotational block is the full
    /// quaternion error (rotation vector from actual to desired).
    pub fn pose_error(&self) -> Vector6<T> {
        let ep = self.pos_d - self.pos;
        let eo = quat_diff(&self.quat, &self.quat_d);
        Vector6::new(ep.x, ep.y, ep.z, eo.x, eo.y, eo.z)
    }
}

/// Cartesian inverse dynamics position torques
/// `tau_x = J^T Lambda Omega (Kp e + Kd edot + acc_d - Jdot qdot)`.
pub fn position_torques<T: Real>(
    model: &RobotModelState<T>,
    lambda: &Matrix6<T>,
    sel: &SelectionState<T>,
    refs: &CartesianRefs<T>,
    gains: &HybridGains<T>,
) -> DVector<T> {
    let e = refs.pose_error();
    let edot = refs.vel_d - refs.vel;
    let task = gains.kp * e + gains.kd * edot + refs.acc_d - model.jdot_qdot;
    let wrench = lambda * omega_transform(sel) * task;
    model.jacobian.transpose() * DVector::from_column_slice(wrench.as_slice())
}

/// Ring-buffer window of force-error contributions for the integral term.
#[derive(Debug, Clone, Default)]
pub struct ForceIntegralState<T: Real> {
    window: VecDeque<Vector6<T>>,
}

impl<T: Real> ForceIntegralState<T> {
    pub fn new() -> Self {
        Self { window: VecDeque::new() }
    }

    fn push(&mut self, contribution: Vector6<T>, capacity: usize) {
        while self.window.len() >= capacity.max(1) {
            self.window.pop_front();
        }
        self.window.push_back(contribution);
    }

    pub fn sum(&self) -> Vector6<T> {
        let mut s = Vector6::zeros();
        for c in &self.window {
            s += c;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }
}

/// PI force-control torques
/// `tau_f = J^T Omega~ (Kf dF + KI sum_window dF)` with `Omega~` built
/// from the complement `I - S` of the given position selection.
///
/// The error is worked in the constraint frame (where the selection
/// diagonal is defined); with diagonal gains this is identical to applying
/// the block transform to base-frame errors. With IES enabled, a window
/// contribution is attenuated by `beta` in any dimension where the error
/// opposes the desired force direction (for a zero desired component, the
/// literal negative-error rule applies).
pub fn force_torques<T: Real>(
    model: &RobotModelState<T>,
    sel: &SelectionState<T>,
    f_desired: &Vector6<T>,
    f_actual: &Vector6<T>,
    gains: &HybridGains<T>,
    integral: &ForceIntegralState<T>,
) -> (DVector<T>, ForceIntegralState<T>) {
    let r6 = block_rotation(&sel.rotation);
    let df_c = r6 * (f_desired - f_actual);
    let fd_c = r6 * f_desired;

    let mut contribution = df_c;
    if gains.ies_enabled {
        for i in 0..6 {
            let opposes = if fd_c[i] != T::zero() {
                df_c[i] * fd_c[i] < T::zero()
            } else {
                df_c[i] < T::zero()
            };
            if opposes {
                contribution[i] *= gains.ies_beta;
            }
        }
    }
    let mut next = integral.clone();
    next.push(contribution * gains.dt, gains.integral_window);

    let s_tilde =
        Matrix6::from_diagonal(&(Vector6::repeat(T::one()) - sel.diag));
    let in_frame = s_tilde * (gains.kf * df_c + gains.ki * next.sum());
    let wrench = r6.transpose() * in_frame;
    let tau = model.jacobian.transpose() * DVector::from_column_slice(wrench.as_slice());
    (tau, next)
}

fn block_rotation<T: Real>(r: &Matrix3<T>) -> Matrix6<T> {
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
    out
}

/// Low-gain joint-space posture PD, to be projected into the null space.
pub fn nullspace_torques<T: Real>(
    model: &RobotModelState<T>,
    posture_target: &DVector<T>,
    kp: T,
    kd: T,
) -> DVector<T> {
    (posture_target - &model.q) * kp - &model.qdot * kd
}

/// Full per-tick output of the hybrid law.
#[derive(Debug, Clone)]
pub struct HybridOutput<T: Real> {
    pub torques: DVector<T>,
    pub tau_x_norm: T,
    pub tau_f_norm: T,
    pub diagnostics: InertiaDiagnostics<T>,
    pub integral: ForceIntegralState<T>,
}

/// The combined control law
/// `tau = tau_f + tau_x + (I - (J# J)^T) tau_0 + gravity`.
#[allow(clippy::too_many_arguments)]
pub fn hybrid_control<T: Real>(
    model: &RobotModelState<T>,
    sel: &SelectionState<T>,
    refs: &CartesianRefs<T>,
    f_desired: &Vector6<T>,
    f_actual: &Vector6<T>,
    gains: &HybridGains<T>,
    posture_target: &DVector<T>,
    posture_gains: (T, T),
    integral: &ForceIntegralState<T>,
) -> Result<HybridOutput<T>, ControlError> {
    let (lambda, diagnostics) = task_inertia(model)?;
    let jsharp = generalized_pseudoinverse(model, &lambda)?;
    let tau_x = position_torques(model, &lambda, sel, refs, gains);
    let (tau_f, integral) = force_torques(model, sel, f_desired, f_actual, gains, integral);
    let tau_0 = nullspace_torques(model, posture_target, posture_gains.0, posture_gains.1);
    let projected = nullspace_projector(model, &jsharp) * tau_0;
    let torques = &tau_f + &tau_x + projected + &model.gravity;
    Ok(HybridOutput {
        tau_x_norm: tau_x.norm(),
        tau_f_norm: tau_f.norm(),
        torques,
        diagnostics,
        integral,
    })
}
