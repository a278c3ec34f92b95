//! Quaternion algebra and Cartesian (orientation) Dynamic Movement
//! Primitives using the full quaternion error,
//!
//! ```text
//! tau * dw/dt = alpha_w d(q, qd) - beta_w w - alpha_w d(q0, qd) s + alpha_w f(s)
//! tau * dq/dt = 1/2 w * q
//! ```
//!
//! where `d(q1, q2) = 2 log(q2 * conj(q1))` is the rotation vector taking
//! `q1` to `q2` and `w` is the scaled angular velocity expressed in the
//! base frame (consistent with the left multiplication `w * q`).

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::dmp::{
    basis_activation, design_matrix, finite_diff, ridge_solve, BasisSet, DmpError, PhaseState,
    DEFAULT_ALPHA_S, DEFAULT_ALPHA_V, FORCING_DENOM_FLOOR,
};
use crate::num::{real, Real};

/// Below this vector-part norm the quaternion log uses its first-order
/// expansion to avoid dividing by a vanishing sine.
const LOG_SERIES_THRESHOLD: f64 = 1e-6;

/// Unit quaternion `(w, v)` with scalar part `w` and vector part `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuat<T: Real> {
    pub w: T,
    pub v: Vector3<T>,
}

impl<T: Real> UnitQuat<T> {
    pub fn identity() -> Self {
        Self { w: T::one(), v: Vector3::zeros() }
    }

    /// Construct and renormalize.
    pub fn new(w: T, v: Vector3<T>) -> Self {
        Self { w, v }.normalized()
    }

    pub fn from_axis_angle(axis: &Vector3<T>, angle: T) -> Self {
        let half = angle / real(2.0);
        let axis = axis.normalize();
        Self { w: half.cos(), v: axis * half.sin() }
    }

    /// Rotation vector (angle * unit axis) to quaternion.
    pub fn from_rotation_vector(rv: &Vector3<T>) -> Self {
        let angle = rv.norm();
        if angle < real(LOG_SERIES_THRESHOLD) {
            Self::new(T::one(), rv / real::<T>(2.0))
        } else {
            Self::from_axis_angle(&(rv / angle), angle)
        }
    }

    pub fn conjugate(&self) -> Self {
        Self { w: self.w, v: -self.v }
    }

    pub fn dot(&self, other: &Self) -> T {
        self.w * other.w + self.v.dot(&other.v)
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.v.norm_squared()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { w: self.w / n, v: self.v / n }
    }

    /// Negate all components; represents the same rotation.
    pub fn flipped(&self) -> Self {
        Self { w: -self.w, v: -self.v }
    }

    /// Rotate a vector by this quaternion.
    pub fn rotate(&self, x: &Vector3<T>) -> Vector3<T> {
        let two: T = real(2.0);
        let t = self.v.cross(x) * two;
        x + t * self.w + self.v.cross(&t)
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<T> {
        let (w, x, y, z) = (self.w, self.v.x, self.v.y, self.v.z);
        let two: T = real(2.0);
        Matrix3::new(
            T::one() - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
            two * (x * y + w * z),
            T::one() - two * (x * x + z * z),
            two * (y * z - w * x),
            two * (x * z - w * y),
            two * (y * z + w * x),
            T::one() - two * (x * x + y * y),
        )
    }

    /// Shepperd's method; `m` must be a proper rotation.
    pub fn from_rotation_matrix(m: &Matrix3<T>) -> Self {
        let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let quarter: T = real(0.25);
        if tr > T::zero() {
            let s = (tr + T::one()).sqrt() * real(2.0);
            Self::new(
                quarter * s,
                Vector3::new(
                    (m[(2, 1)] - m[(1, 2)]) / s,
                    (m[(0, 2)] - m[(2, 0)]) / s,
                    (m[(1, 0)] - m[(0, 1)]) / s,
                ),
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (T::one() + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * real(2.0);
            Self::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                Vector3::new(
                    quarter * s,
                    (m[(0, 1)] + m[(1, 0)]) / s,
                    (m[(0, 2)] + m[(2, 0)]) / s,
                ),
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (T::one() + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * real(2.0);
            Self::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                Vector3::new(
                    (m[(0, 1)] + m[(1, 0)]) / s,
                    quarter * s,
                    (m[(1, 2)] + m[(2, 1)]) / s,
                ),
            )
        } else {
            let s = (T::one() + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * real(2.0);
            Self::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                Vector3::new(
                    (m[(0, 2)] + m[(2, 0)]) / s,
                    (m[(1, 2)] + m[(2, 1)]) / s,
                    quarter * s,
                ),
            )
        }
    }
}

/// Quaternion product
/// `(w1 w2 - v1 . v2, w1 v2 + w2 v1 + v1 x v2)`, renormalized.
pub fn quat_product<T: Real>(q1: &UnitQuat<T>, q2: &UnitQuat<T>) -> UnitQuat<T> {
    UnitQuat::new(
        q1.w * q2.w - q1.v.dot(&q2.v),
        q2.v * q1.w + q1.v * q2.w + q1.v.cross(&q2.v),
    )
}

/// Full quaternion error `2 log(q2 * conj(q1))`: the rotation vector
/// taking `q1` to `q2`, with magnitude equal to the geodesic angle.
pub fn quat_diff<T: Real>(q1: &UnitQuat<T>, q2: &UnitQuat<T>) -> Vector3<T> {
    let mut r = quat_product(q2, &q1.conjugate());
    // Shortest arc: both signs represent the same rotation.
    if r.w < T::zero() {
        r = r.flipped();
    }
    let vn = r.v.norm();
    if vn < real(LOG_SERIES_THRESHOLD) {
        // First-order expansion of 2 log(q) near identity.
        r.v * real::<T>(2.0)
    } else {
        let angle = real::<T>(2.0) * vn.atan2(r.w);
        r.v * (angle / vn)
    }
}

/// Quaternion-valued primitive: one weight row per angular dimension,
/// sharing one basis set and phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationPrimitive<T: Real> {
    pub alpha_w: T,
    pub beta_w: T,
    pub alpha_s: T,
    pub tau: T,
    /// Initial and goal orientations as `[w, vx, vy, vz]` on disk.
    pub q0: UnitQuat<T>,
    pub qd: UnitQuat<T>,
    pub centers: Vec<T>,
    pub widths: Vec<T>,
    /// 3 x N weight matrix, row-major by angular dimension.
    pub weights: [Vec<T>; 3],
}

impl<T: Real> OrientationPrimitive<T> {
    pub fn unforced(
        n: usize,
        tau: T,
        q0: UnitQuat<T>,
        qd: UnitQuat<T>,
    ) -> Result<Self, DmpError> {
        let alpha_w: T = real(DEFAULT_ALPHA_V);
        let alpha_s: T = real(DEFAULT_ALPHA_S);
        let basis = BasisSet::spaced(n, alpha_s)?;
        Ok(Self {
            alpha_w,
            beta_w: alpha_w / real(4.0),
            alpha_s,
            tau,
            q0,
            qd,
            weights: [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]],
            centers: basis.centers,
            widths: basis.widths,
        })
    }

    pub fn basis(&self) -> BasisSet<T> {
        BasisSet { centers: self.centers.clone(), widths: self.widths.clone() }
    }

    pub fn phase(&self) -> PhaseState<T> {
        PhaseState::new(self.alpha_s, self.tau)
    }

    pub fn initial_state(&self) -> OrientationState<T> {
        OrientationState { q: self.q0, w: Vector3::zeros(), s: T::one() }
    }

    /// Vector forcing term at phase `s`.
    pub fn forcing(&self, s: T) -> Vector3<T> {
        let basis = BasisSet { centers: self.centers.clone(), widths: self.widths.clone() };
        let psi = basis_activation(s, &basis);
        let den = psi.sum();
        if den < real(FORCING_DENOM_FLOOR) {
            return Vector3::zeros();
        }
        let mut f = Vector3::zeros();
        for axis in 0..3 {
            let mut num = T::zero();
            for (i, &w) in self.weights[axis].iter().enumerate() {
                num += w * psi[i];
            }
            f[axis] = s * num / den;
        }
        f
    }
}

/// Instantaneous orientation-primitive state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationState<T: Real> {
    pub q: UnitQuat<T>,
    /// Scaled angular velocity (`tau` times physical), base frame, rad/s.
    pub w: Vector3<T>,
    pub s: T,
}

type QuatDeriv<T> = (T, Vector3<T>, Vector3<T>, T);

fn derivs<T: Real>(st: &OrientationState<T>, p: &OrientationPrimitive<T>) -> QuatDeriv<T> {
    let f = p.forcing(st.s);
    let dw = (quat_diff(&st.q, &p.qd) * p.alpha_w
        - st.w * p.beta_w
        - quat_diff(&p.q0, &p.qd) * (p.alpha_w * st.s)
        + f * p.alpha_w)
        / p.tau;
    // tau dq/dt = 1/2 w * q with w promoted to a pure quaternion.
    let half: T = real(0.5);
    let dqw = -half * st.w.dot(&st.q.v) / p.tau;
    let dqv = (st.q.v.cross(&st.w).scale(-T::one()) + st.w * st.q.w) * (half / p.tau);
    let ds = -p.alpha_s * st.s / p.tau;
    (dqw, dqv, dw, ds)
}

/// One RK4 step; the quaternion is renormalized afterwards.
pub fn cdmp_step<T: Real>(
    st: &OrientationState<T>,
    p: &OrientationPrimitive<T>,
    dt: T,
) -> Result<OrientationState<T>, DmpError> {
    if dt <= T::zero() {
        return Err(DmpError::Parameter("dt must be positive".into()));
    }
    let h = dt;
    let half = h / real(2.0);
    let advance = |base: &OrientationState<T>, k: &QuatDeriv<T>, step: T| OrientationState {
        q: UnitQuat { w: base.q.w + k.0 * step, v: base.q.v + k.1 * step },
        w: base.w + k.2 * step,
        s: base.s + k.3 * step,
    };
    let k1 = derivs(st, p);
    let k2 = derivs(&advance(st, &k1, half), p);
    let k3 = derivs(&advance(st, &k2, half), p);
    let k4 = derivs(&advance(st, &k3, h), p);
    let six: T = real(6.0);
    let two: T = real(2.0);
    let q = UnitQuat {
        w: st.q.w + h * (k1.0 + two * k2.0 + two * k3.0 + k4.0) / six,
        v: st.q.v + (k1.1 + k2.1 * two + k3.1 * two + k4.1) * (h / six),
    }
    .normalized();
    let w = st.w + (k1.2 + k2.2 * two + k3.2 * two + k4.2) * (h / six);
    let s = (st.s + h * (k1.3 + two * k2.3 + two * k3.3 + k4.3) / six).max(T::zero());
    if !(q.w.is_finite() && w.iter().all(|x| x.is_finite())) {
        return Err(DmpError::Numerical("cdmp step produced non-finite state".into()));
    }
    Ok(OrientationState { q, w, s })
}

/// A sampled orientation rollout.
#[derive(Debug, Clone)]
pub struct OrientationRollout<T: Real> {
    pub t: Vec<T>,
    pub q: Vec<UnitQuat<T>>,
    pub w: Vec<Vector3<T>>,
    pub s: Vec<T>,
}

impl<T: Real> Default for OrientationRollout<T> {
    fn default() -> Self {
        Self { t: Vec::new(), q: Vec::new(), w: Vec::new(), s: Vec::new() }
    }
}

/// Repeated [`cdmp_step`] from `(q0, 0, 1)`.
pub fn rollout_orientation<T: Real>(
    p: &OrientationPrimitive<T>,
    dt: T,
    horizon: T,
) -> Result<OrientationRollout<T>, DmpError> {
    if dt <= T::zero() {
        return Err(DmpError::Parameter("dt must be positive".into()));
    }
    let mut st = p.initial_state();
    let mut out = OrientationRollout::default();
    let mut t = T::zero();
    out.t.push(t);
    out.q.push(st.q);
    out.w.push(st.w);
    out.s.push(st.s);
    while t < horizon - dt / real(2.0) {
        st = cdmp_step(&st, p, dt)?;
        t += dt;
        out.t.push(t);
        out.q.push(st.q);
        out.w.push(st.w);
        out.s.push(st.s);
    }
    Ok(out)
}

/// Enforce shortest-arc sign continuity: flip any quaternion with negative
/// dot product against its predecessor.
pub fn sign_align<T: Real>(qs: &[UnitQuat<T>]) -> Vec<UnitQuat<T>> {
    let mut out = Vec::with_capacity(qs.len());
    for q in qs {
        let q = match out.last() {
            Some(prev) if q.dot(prev) < T::zero() => q.flipped(),
            _ => *q,
        };
        out.push(q);
    }
    out
}

/// Fit an orientation primitive to a sampled `(t, q)` sequence.
///
/// Angular velocities come from finite differences of quaternion-log
/// increments; the per-axis weights from ridge regression against the
/// rearranged transformation system.
pub fn fit_orientation<T: Real>(
    t: &[T],
    qs: &[UnitQuat<T>],
    n_basis: usize,
    lambda: T,
) -> Result<OrientationPrimitive<T>, DmpError> {
    if t.len() != qs.len() {
        return Err(DmpError::Parameter("t and q lengths differ".into()));
    }
    if t.len() < 3 {
        return Err(DmpError::Parameter("need at least 3 samples".into()));
    }
    let tau = t[t.len() - 1] - t[0];
    if tau <= T::zero() {
        return Err(DmpError::Parameter("demonstration duration must be positive".into()));
    }
    let qs = sign_align(qs);
    let n = t.len();
    let mut p = OrientationPrimitive::unforced(n_basis, tau, qs[0], qs[n - 1])?;
    let basis = p.basis();

    // Physical angular velocity by quaternion-log differencing, then the
    // scaled velocity w = tau * w_phys used by the transformation system.
    let mut w_phys = vec![Vector3::<T>::zeros(); n];
    w_phys[0] = quat_diff(&qs[0], &qs[1]) / (t[1] - t[0]);
    w_phys[n - 1] = quat_diff(&qs[n - 2], &qs[n - 1]) / (t[n - 1] - t[n - 2]);
    for k in 1..n - 1 {
        w_phys[k] = quat_diff(&qs[k - 1], &qs[k + 1]) / (t[k + 1] - t[k - 1]);
    }
    let phases: Vec<T> = t.iter().map(|&tk| (-p.alpha_s * (tk - t[0]) / tau).exp()).collect();
    let design = design_matrix(&phases, &basis);

    let d0d = quat_diff(&p.q0, &p.qd);
    for axis in 0..3 {
        let w_axis: Vec<T> = w_phys.iter().map(|w| w[axis] * tau).collect();
        let wdot = finite_diff(t, &w_axis);
        let mut targets = DVector::zeros(n);
        for k in 0..n {
            let d = quat_diff(&qs[k], &p.qd);
            targets[k] = (tau * wdot[k] - p.alpha_w * d[axis]
                + p.beta_w * w_axis[k]
                + p.alpha_w * d0d[axis] * phases[k])
                / p.alpha_w;
        }
        let w = ridge_solve(&design, &targets, lambda)?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(DmpError::Regression("non-finite weights".into()));
        }
        p.weights[axis] = w.iter().copied().collect();
    }
    Ok(p)
}

/// Geodesic angle between two unit quaternions.
pub fn geodesic_angle<T: Real>(q1: &UnitQuat<T>, q2: &UnitQuat<T>) -> T {
    // atan2 form: well-conditioned near zero angle, unlike acos(dot).
    let r = quat_product(&q2.conjugate(), q1);
    real::<T>(2.0) * r.v.norm().atan2(r.w.abs())
}
