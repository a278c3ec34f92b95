//! Arm models supplying the controller's dynamic quantities: a 6-DOF
//! floating body (task space is joint space, analytically checkable) and
//! a revolute serial chain with numerically consistent Coriolis terms.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::cdmp::UnitQuat;
use crate::controller::RobotModelState;
use crate::sim::GRAVITY;

/// One revolute link: joint axis and offset in the parent frame, inertial
/// properties in the link frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Link {
    pub axis: [f64; 3],
    /// Offset from the parent joint origin, parent frame.
    pub offset: [f64; 3],
    pub mass: f64,
    /// Center of mass in the link frame.
    pub com: [f64; 3],
    /// Rotational inertia about the COM, link frame, diagonal.
    pub inertia_diag: [f64; 3],
}

/// A fixed-base revolute serial chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SerialChain {
    pub links: Vec<Link>,
    /// End-effector offset in the last link frame.
    pub ee_offset: [f64; 3],
    pub torque_limit: f64,
}

/// Per-joint world-frame kinematics: joint origin, joint axis, link
/// rotation, link COM.
struct ChainKinematics {
    origins: Vec<Vector3<f64>>,
    axes: Vec<Vector3<f64>>,
    rotations: Vec<Matrix3<f64>>,
    coms: Vec<Vector3<f64>>,
    ee: Vector3<f64>,
}

fn axis_rotation(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    UnitQuat::from_axis_angle(axis, angle).to_rotation_matrix()
}

impl SerialChain {
    /// A 7-joint redundant arm with alternating axes, roughly desk scale.
    pub fn default_seven_dof() -> Self {
        let mut links = Vec::new();
        for i in 0..7 {
            let axis = if i % 2 == 0 { [0.0, 0.0, 1.0] } else { [0.0, 1.0, 0.0] };
            links.push(Link {
                axis,
                offset: [0.0, 0.0, if i == 0 { 0.0 } else { 0.2 }],
                mass: 2.0 - 0.2 * i as f64,
                com: [0.0, 0.0, 0.1],
                inertia_diag: [0.02, 0.02, 0.01],
            });
        }
        Self { links, ee_offset: [0.0, 0.0, 0.2], torque_limit: 100.0 }
    }

    pub fn dof(&self) -> usize {
        self.links.len()
    }

    fn kinematics(&self, q: &DVector<f64>) -> ChainKinematics {
        let n = self.dof();
        let mut origins = Vec::with_capacity(n);
        let mut axes = Vec::with_capacity(n);
        let mut rotations = Vec::with_capacity(n);
        let mut coms = Vec::with_capacity(n);
        let mut p = Vector3::zeros();
        let mut r = Matrix3::identity();
        for (i, link) in self.links.iter().enumerate() {
            p += r * Vector3::from(link.offset);
            let axis_world = (r * Vector3::from(link.axis)).normalize();
            r *= axis_rotation(&Vector3::from(link.axis), q[i]);
            origins.push(p);
            axes.push(axis_world);
            rotations.push(r);
            coms.push(p + r * Vector3::from(link.com));
        }
        let ee = p + r * Vector3::from(self.ee_offset);
        ChainKinematics { origins, axes, rotations, coms, ee }
    }

    /// Geometric Jacobian of the end-effector point.
    pub fn jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let kin = self.kinematics(q);
        self.point_jacobian_full(&kin, &kin.ee)
    }

    fn point_jacobian_full(&self, kin: &ChainKinematics, point: &Vector3<f64>) -> DMatrix<f64> {
        let n = self.dof();
        let mut j = DMatrix::zeros(6, n);
        for i in 0..n {
            let lin = kin.axes[i].cross(&(point - kin.origins[i]));
            for k in 0..3 {
                j[(k, i)] = lin[k];
                j[(k + 3, i)] = kin.axes[i][k];
            }
        }
        j
    }

    /// Linear Jacobian of link `idx`'s COM (columns beyond `idx` zero).
    fn com_jacobian(&self, kin: &ChainKinematics, idx: usize) -> DMatrix<f64> {
        let n = self.dof();
        let mut j = DMatrix::zeros(3, n);
        for i in 0..=idx {
            let lin = kin.axes[i].cross(&(kin.coms[idx] - kin.origins[i]));
            for k in 0..3 {
                j[(k, i)] = lin[k];
            }
        }
        j
    }

    /// Joint-space inertia by summing link contributions through the COM
    /// and angular Jacobians.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dof();
        let kin = self.kinematics(q);
        let mut m = DMatrix::zeros(n, n);
        for (idx, link) in self.links.iter().enumerate() {
            let jv = self.com_jacobian(&kin, idx);
            m += link.mass * jv.transpose() * jv;
            let mut jw = DMatrix::zeros(3, n);
            for i in 0..=idx {
                for k in 0..3 {
                    jw[(k, i)] = kin.axes[i][k];
                }
            }
            let inertia_world = kin.rotations[idx]
                * Matrix3::from_diagonal(&Vector3::from(link.inertia_diag))
                * kin.rotations[idx].transpose();
            let iw = DMatrix::from_fn(3, 3, |a, b| inertia_world[(a, b)]);
            m += jw.transpose() * iw * jw;
        }
        m
    }

    /// Joint-space gravity torques (the vector the controller adds for
    /// gravity compensation).
    pub fn gravity_torques(&self, q: &DVector<f64>) -> DVector<f64> {
        let n = self.dof();
        let kin = self.kinematics(q);
        let mut g = DVector::zeros(n);
        for (idx, link) in self.links.iter().enumerate() {
            let jv = self.com_jacobian(&kin, idx);
            // d/dq of m g z_com.
            for i in 0..n {
                g[i] += link.mass * GRAVITY * jv[(2, i)];
            }
        }
        g
    }

    /// Coriolis/centrifugal torques `C(q, qdot) qdot` via Christoffel
    /// symbols from a central-difference mass-matrix gradient; consistent
    /// with [`Self::mass_matrix`] by construction, which is what the
    /// energy audit relies on.
    pub fn coriolis_torques(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> DVector<f64> {
        let n = self.dof();
        let h = 1e-5;
        let mut dm = Vec::with_capacity(n);
        for k in 0..n {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            dm.push((self.mass_matrix(&qp) - self.mass_matrix(&qm)) / (2.0 * h));
        }
        let mut c = DVector::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let gamma = 0.5 * (dm[k][(i, j)] + dm[j][(i, k)] - dm[i][(j, k)]);
                    c[i] += gamma * qdot[j] * qdot[k];
                }
            }
        }
        c
    }

    /// `Jdot qdot` by central differencing the Jacobian along the current
    /// velocity.
    pub fn jdot_qdot(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> Vector6<f64> {
        let h = 1e-6;
        let jp = self.jacobian(&(q + qdot * h));
        let jm = self.jacobian(&(q - qdot * h));
        let dj = (jp - jm) / (2.0 * h);
        let v = dj * qdot;
        Vector6::from_fn(|i, _| v[i])
    }

    pub fn ee_pose(&self, q: &DVector<f64>) -> (Vector3<f64>, UnitQuat<f64>) {
        let kin = self.kinematics(q);
        let rot = kin.rotations.last().copied().unwrap_or_else(Matrix3::identity);
        (kin.ee, UnitQuat::from_rotation_matrix(&rot))
    }

    /// Total mechanical energy, for the passive-dynamics audit.
    pub fn energy(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> f64 {
        let kin = self.kinematics(q);
        let kinetic = 0.5 * (qdot.transpose() * self.mass_matrix(q) * qdot)[(0, 0)];
        let potential: f64 = self
            .links
            .iter()
            .enumerate()
            .map(|(idx, link)| link.mass * GRAVITY * kin.coms[idx].z)
            .sum();
        kinetic + potential
    }
}

/// The plant model: a floating rigid body commanded by task-space
/// wrenches, or a serial chain commanded by joint torques.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ArmModel {
    FloatingBody {
        /// 6x6 task-space inertia (diagonal mass/rotational inertia).
        inertia: [f64; 6],
        /// Mass used for the gravity force, kg.
        mass: f64,
        /// Per-component wrench clamp.
        torque_limit: f64,
    },
    SerialChain(SerialChain),
}

impl ArmModel {
    pub fn floating(mass: f64, rot_inertia: f64, torque_limit: f64) -> Self {
        Self::FloatingBody {
            inertia: [mass, mass, mass, rot_inertia, rot_inertia, rot_inertia],
            mass,
            torque_limit,
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            Self::FloatingBody { .. } => 6,
            Self::SerialChain(c) => c.dof(),
        }
    }

    pub fn torque_limit(&self) -> f64 {
        match self {
            Self::FloatingBody { torque_limit, .. } => *torque_limit,
            Self::SerialChain(c) => c.torque_limit,
        }
    }

    /// Dynamic quantities for the controller at the given configuration.
    pub fn model_state(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> RobotModelState<f64> {
        match self {
            Self::FloatingBody { inertia, mass, .. } => RobotModelState {
                inertia: DMatrix::from_diagonal(&DVector::from_row_slice(inertia)),
                jacobian: DMatrix::identity(6, 6),
                jdot_qdot: Vector6::zeros(),
                gravity: DVector::from_row_slice(&[0.0, 0.0, mass * GRAVITY, 0.0, 0.0, 0.0]),
                q: q.clone(),
                qdot: qdot.clone(),
            },
            Self::SerialChain(c) => RobotModelState {
                inertia: c.mass_matrix(q),
                jacobian: c.jacobian(q),
                jdot_qdot: c.jdot_qdot(q, qdot),
                gravity: c.gravity_torques(q),
                q: q.clone(),
                qdot: qdot.clone(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn floating_body_model_state() {
        let arm = ArmModel::floating(1.0, 1.0, 100.0);
        let st = arm.model_state(&DVector::zeros(6), &DVector::zeros(6));
        assert!((st.jacobian - DMatrix::identity(6, 6)).norm() < 1e-15);
        assert!((st.inertia - DMatrix::identity(6, 6)).norm() < 1e-15);
        assert_relative_eq!(st.gravity[2], GRAVITY, epsilon = 1e-12);
    }

    #[test]
    fn chain_mass_matrix_spd() {
        let chain = SerialChain::default_seven_dof();
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..100 {
            let q = DVector::from_fn(7, |_, _| rng.gen_range(-1.5..1.5));
            let m = chain.mass_matrix(&q);
            assert!((&m - m.transpose()).norm() < 1e-10);
            let x = DVector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0));
            let quad = (x.transpose() * &m * &x)[(0, 0)];
            assert!(quad > 0.0, "mass matrix not positive definite");
        }
    }

    #[test]
    fn single_link_gravity_statics() {
        // One link of mass m rotating about y, COM at L/2 along x when
        // horizontal: holding torque = m g L/2.
        let chain = SerialChain {
            links: vec![Link {
                axis: [0.0, 1.0, 0.0],
                offset: [0.0, 0.0, 0.0],
                mass: 3.0,
                com: [0.25, 0.0, 0.0],
                inertia_diag: [0.0, 0.0, 0.0],
            }],
            ee_offset: [0.5, 0.0, 0.0],
            torque_limit: 50.0,
        };
        // q = 0 leaves the link along +x (horizontal); the gravity
        // gradient is with respect to rotation about +y.
        let g = chain.gravity_torques(&DVector::zeros(1));
        assert_relative_eq!(g[0].abs(), 3.0 * GRAVITY * 0.25, epsilon = 1e-9);
    }

    #[test]
    fn jacobian_matches_finite_difference_of_fk() {
        let chain = SerialChain::default_seven_dof();
        let mut rng = StdRng::seed_from_u64(8);
        let q = DVector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0));
        let j = chain.jacobian(&q);
        let h = 1e-7;
        for i in 0..7 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let (pp, _) = chain.ee_pose(&qp);
            let (pm, _) = chain.ee_pose(&qm);
            let d = (pp - pm) / (2.0 * h);
            for k in 0..3 {
                assert_relative_eq!(j[(k, i)], d[k], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn coriolis_antisymmetry_power() {
        // Passivity: qdot^T (Mdot - 2C) qdot = 0 implies the Coriolis
        // power matches the kinetic-energy change from M(q) variation.
        let chain = SerialChain::default_seven_dof();
        let mut rng = StdRng::seed_from_u64(4);
        let q = DVector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0));
        let qdot = DVector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0));
        let c = chain.coriolis_torques(&q, &qdot);
        // Mdot along qdot by finite difference.
        let h = 1e-6;
        let mdot =
            (chain.mass_matrix(&(&q + &qdot * h)) - chain.mass_matrix(&(&q - &qdot * h)))
                / (2.0 * h);
        let lhs = (qdot.transpose() * mdot * &qdot)[(0, 0)];
        let rhs = 2.0 * (qdot.transpose() * &c)[(0, 0)];
        assert_relative_eq!(lhs, rhs, epsilon = 1e-4, max_relative = 1e-4);
    }
}
