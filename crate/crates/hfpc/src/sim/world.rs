//! The simulation loop: semi-implicit Euler with substeps, penalty
//! contact at the end-effector, and a noisy force/torque sensor with a
//! low-pass-filtered channel alongside the raw one.

use nalgebra::{DVector, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdmp::{quat_product, UnitQuat};
use crate::sim::{ArmModel, ContactSurface, SensorFilter, GRAVITY};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation diverged at t={t:.4}s: {reason}")]
    Diverged { t: f64, reason: String },
}

/// Gaussian force-sensor noise, per world axis, seeded for repeatability.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Standard deviation per force component, N.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { sigma: 0.05, seed: 0 }
    }
}

/// Plant state: a free rigid body or a joint-space chain.
#[derive(Debug, Clone)]
pub enum ArmState {
    Floating { pos: Vector3<f64>, quat: UnitQuat<f64>, vel: Vector6<f64> },
    Chain { q: DVector<f64>, qdot: DVector<f64> },
}

impl ArmState {
    pub fn floating_at(pos: Vector3<f64>) -> Self {
        Self::Floating { pos, quat: UnitQuat::identity(), vel: Vector6::zeros() }
    }
}

/// One sensor/state snapshot per macro step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub ee_pos: Vector3<f64>,
    pub ee_quat: UnitQuat<f64>,
    /// Task-space end-effector velocity (linear; angular).
    pub ee_vel: Vector6<f64>,
    /// Wrench the end-effector applies to the environment, plus sensor
    /// noise. Feedback should use this channel: the filtered one lags.
    pub wrench_raw: Vector6<f64>,
    /// Same wrench through the low-pass recording filter.
    pub wrench_filtered: Vector6<f64>,
    pub in_contact: bool,
}

pub struct SimWorld {
    pub arm: ArmModel,
    pub surface: Option<ContactSurface>,
    pub state: ArmState,
    pub noise: NoiseConfig,
    pub filter: SensorFilter,
    pub substeps: usize,
    pub t: f64,
    rng: ChaCha8Rng,
}

impl SimWorld {
    pub fn new(arm: ArmModel, surface: Option<ContactSurface>, state: ArmState, noise: NoiseConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(noise.seed);
        Self {
            arm,
            surface,
            state,
            noise,
            // Demonstration recordings in the source setup low-pass the
            // wrench at 1.5 Hz.
            filter: SensorFilter::new(1.5),
            substeps: 4,
            t: 0.0,
            rng,
        }
    }

    pub fn ee_pose(&self) -> (Vector3<f64>, UnitQuat<f64>) {
        match &self.state {
            ArmState::Floating { pos, quat, .. } => (*pos, *quat),
            ArmState::Chain { q, .. } => match &self.arm {
                ArmModel::SerialChain(c) => c.ee_pose(q),
                ArmModel::FloatingBody { .. } => unreachable!("chain state with floating model"),
            },
        }
    }

    pub fn joint_state(&self) -> (DVector<f64>, DVector<f64>) {
        match &self.state {
            ArmState::Floating { pos, vel, .. } => {
                let mut q = DVector::zeros(6);
                for i in 0..3 {
                    q[i] = pos[i];
                }
                (q, DVector::from_iterator(6, vel.iter().copied()))
            }
            ArmState::Chain { q, qdot } => (q.clone(), qdot.clone()),
        }
    }

    fn ee_velocity(&self) -> Vector6<f64> {
        match &self.state {
            ArmState::Floating { vel, .. } => *vel,
            ArmState::Chain { q, qdot } => match &self.arm {
                ArmModel::SerialChain(c) => {
                    let v = c.jacobian(q) * qdot;
                    Vector6::from_fn(|i, _| v[i])
                }
                ArmModel::FloatingBody { .. } => unreachable!(),
            },
        }
    }

    /// Reaction wrench on the end-effector from the surface, world frame.
    fn contact_wrench(&self) -> Vector6<f64> {
        let Some(surface) = &self.surface else { return Vector6::zeros() };
        let (pos, _) = self.ee_pose();
        let vel = self.ee_velocity();
        surface.contact_wrench(&pos, &vel.fixed_rows::<3>(0).into_owned())
    }

    /// Advance one macro step under the given command (task wrench for
    /// the floating body, joint torques for the chain). Commands are
    /// clamped per component to the model's limit.
    pub fn step(&mut self, command: &DVector<f64>, dt: f64) -> Result<StepOutput, SimError> {
        let limit = self.arm.torque_limit();
        let cmd = command.map(|c| c.clamp(-limit, limit));
        let h = dt / self.substeps as f64;
        let mut reaction = Vector6::zeros();
        for _ in 0..self.substeps {
            reaction = self.contact_wrench();
            self.substep(&cmd, &reaction, h)?;
        }
        self.t += dt;

        let (ee_pos, ee_quat) = self.ee_pose();
        let mut raw = -reaction;
        if self.noise.sigma > 0.0 {
            let normal = Normal::new(0.0, self.noise.sigma).expect("sigma >= 0");
            for i in 0..3 {
                raw[i] += normal.sample(&mut self.rng);
            }
        }
        let filtered = self.filter.step(&raw, dt);
        Ok(StepOutput {
            ee_pos,
            ee_quat,
            ee_vel: self.ee_velocity(),
            wrench_raw: raw,
            wrench_filtered: filtered,
            in_contact: reaction.fixed_rows::<3>(0).norm() > 0.0,
        })
    }

    fn substep(&mut self, cmd: &DVector<f64>, reaction: &Vector6<f64>, h: f64) -> Result<(), SimError> {
        match (&self.arm, &mut self.state) {
            (ArmModel::FloatingBody { inertia, mass, .. }, ArmState::Floating { pos, quat, vel }) => {
                let mut force = Vector6::from_fn(|i, _| cmd[i]) + reaction;
                force[2] -= mass * GRAVITY;
                let accel = Vector6::from_fn(|i, _| force[i] / inertia[i]);
                *vel += accel * h;
                *pos += vel.fixed_rows::<3>(0) * h;
                let omega = vel.fixed_rows::<3>(3).into_owned();
                *quat = quat_product(&UnitQuat::from_rotation_vector(&(omega * h)), quat);
                if !pos.iter().chain(vel.iter()).all(|x| x.is_finite()) {
                    return Err(SimError::Diverged { t: self.t, reason: "non-finite body state".into() });
                }
            }
            (ArmModel::SerialChain(chain), ArmState::Chain { q, qdot }) => {
                // Midpoint (RK2) keeps the passive-dynamics energy drift
                // well inside the 1% audit bound; semi-implicit Euler on
                // the configuration-dependent inertia does not.
                let accel = |q: &DVector<f64>, qdot: &DVector<f64>| -> Option<DVector<f64>> {
                    let tau_ext = chain.jacobian(q).transpose()
                        * DVector::from_iterator(6, reaction.iter().copied());
                    let rhs =
                        cmd - chain.coriolis_torques(q, qdot) - chain.gravity_torques(q) + tau_ext;
                    chain.mass_matrix(q).cholesky().map(|c| c.solve(&rhs))
                };
                let singular =
                    || SimError::Diverged { t: self.t, reason: "singular mass matrix".into() };
                let a1 = accel(q, qdot).ok_or_else(singular)?;
                let qm = &*q + &*qdot * (0.5 * h);
                let vm = &*qdot + &a1 * (0.5 * h);
                let a2 = accel(&qm, &vm).ok_or_else(singular)?;
                *q += vm * h;
                *qdot += a2 * h;
                if !q.iter().chain(qdot.iter()).all(|x| x.is_finite()) {
                    return Err(SimError::Diverged { t: self.t, reason: "non-finite joint state".into() });
                }
            }
            _ => {
                return Err(SimError::Diverged { t: self.t, reason: "arm model / state mismatch".into() })
            }
        }
        Ok(())
    }
}
