//! Scalar discrete Dynamic Movement Primitives.
//!
//! A primitive is a critically damped second-order transformation system
//! driven by a phase-indexed forcing term,
//!
//! ```text
//! tau * dv/dt = alpha_v (g - y) - beta_v v - alpha_v (g - y0) s + alpha_v f(s)
//! tau * dy/dt = v
//! tau * ds/dt = -alpha_s s
//! ```
//!
//! with `f(s)` a normalized linear combination of Gaussian basis functions
//! scaled by the phase. Fitting recovers the basis weights from a sampled
//! demonstration channel by ridge regression. All state is immutable value
//! data; stepping returns new states.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::num::{real, Real};

/// Default transformation-system gain.
pub const DEFAULT_ALPHA_V: f64 = 25.0;
/// Default phase decay gain.
pub const DEFAULT_ALPHA_S: f64 = 4.0;
/// Below this forcing-term denominator the phase has effectively expired
/// and the forcing term is defined to be zero.
pub const FORCING_DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum DmpError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("non-finite state encountered: {0}")]
    Numerical(String),
    #[error("regression failed: {0}")]
    Regression(String),
}

/// Phase system state: `tau * ds/dt = -alpha_s * s`, `s(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState<T: Real> {
    /// Dimensionless phase in (0, 1].
    pub s: T,
    /// Decay gain.
    pub alpha_s: T,
    /// Temporal scaling in seconds.
    pub tau: T,
}

impl<T: Real> PhaseState<T> {
    pub fn new(alpha_s: T, tau: T) -> Self {
        Self { s: T::one(), alpha_s, tau }
    }
}

/// Advance the phase by `dt` using classical fourth-order Runge-Kutta.
///
/// A zero `dt` is a no-op; negative `dt` or non-positive `tau` is a
/// parameter error.
pub fn phase_step<T: Real>(ps: &PhaseState<T>, dt: T) -> Result<PhaseState<T>, DmpError> {
    if ps.tau <= T::zero() {
        return Err(DmpError::Parameter("tau must be positive".into()));
    }
    if dt < T::zero() {
        return Err(DmpError::Parameter("dt must be non-negative".into()));
    }
    // RK4 on the linear decay collapses to a 4th-order Taylor factor.
    let k = ps.alpha_s * dt / ps.tau;
    let k2 = k * k;
    let factor = T::one() - k + k2 / real(2.0) - k2 * k / real(6.0) + k2 * k2 / real(24.0);
    // The even-order Taylor factor is positive for every k, so s stays > 0.
    Ok(PhaseState { s: ps.s * factor, ..*ps })
}

/// Gaussian basis functions over the phase: `psi_i(s) = exp(-h_i (s - c_i)^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet<T: Real> {
    /// Centers, strictly decreasing (tracking phase decay).
    pub centers: Vec<T>,
    /// Positive inverse-variance widths.
    pub widths: Vec<T>,
}

impl<T: Real> BasisSet<T> {
    /// Place `n` centers equal-spaced in time over one nominal duration,
    /// mapped through the phase solution `c_i = exp(-alpha_s t_i / tau)`,
    /// with widths `h_i = n^1.5 / c_i` so adjacent bases overlap at
    /// roughly half activation.
    pub fn spaced(n: usize, alpha_s: T) -> Result<Self, DmpError> {
        if n < 2 {
            return Err(DmpError::Parameter("basis count must be >= 2".into()));
        }
        let nf: T = real(n as f64);
        let scale = nf * nf.sqrt();
        let mut centers = Vec::with_capacity(n);
        let mut widths = Vec::with_capacity(n);
        for i in 0..n {
            let t_frac: T = real(i as f64 / (n - 1) as f64);
            let c = (-alpha_s * t_frac).exp();
            centers.push(c);
            widths.push(scale / c);
        }
        Ok(Self { centers, widths })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Evaluate all basis activations at phase `s`. Outputs are in (0, 1].
pub fn basis_activation<T: Real>(s: T, basis: &BasisSet<T>) -> DVector<T> {
    DVector::from_iterator(
        basis.len(),
        basis
            .centers
            .iter()
            .zip(&basis.widths)
            .map(|(&c, &h)| (-h * (s - c) * (s - c)).exp()),
    )
}

/// One scalar degree of freedom: basis weights plus transformation-system
/// parameters. Serializes to the flat JSON schema used on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPrimitive<T: Real> {
    pub alpha_v: T,
    pub beta_v: T,
    pub alpha_s: T,
    pub tau: T,
    pub y0: T,
    pub g: T,
    pub centers: Vec<T>,
    pub widths: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> ScalarPrimitive<T> {
    /// A zero-forcing primitive with default gains (critically damped:
    /// `beta_v = alpha_v / 4`).
    pub fn unforced(n: usize, tau: T, y0: T, g: T) -> Result<Self, DmpError> {
        let alpha_v: T = real(DEFAULT_ALPHA_V);
        let alpha_s: T = real(DEFAULT_ALPHA_S);
        let basis = BasisSet::spaced(n, alpha_s)?;
        Ok(Self {
            alpha_v,
            beta_v: alpha_v / real(4.0),
            alpha_s,
            tau,
            y0,
            g,
            weights: vec![T::zero(); basis.len()],
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

    /// Initial rollout state `(y0, 0, s=1)`.
    pub fn initial_state(&self) -> ScalarState<T> {
        ScalarState { y: self.y0, v: T::zero(), s: T::one() }
    }
}

/// Instantaneous transformation-system state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarState<T: Real> {
    /// Position-like state in task units.
    pub y: T,
    /// Scaled velocity (`tau * dy/dt`).
    pub v: T,
    /// Phase.
    pub s: T,
}

/// Phase-scaled normalized forcing term
/// `f(s) = s * sum(w_i psi_i) / sum(psi_i)`.
///
/// When the denominator drops below [`FORCING_DENOM_FLOOR`] the phase has
/// expired and the term is zero by definition, not an error.
pub fn forcing_term<T: Real>(s: T, p: &ScalarPrimitive<T>) -> T {
    let mut num = T::zero();
    let mut den = T::zero();
    for ((&c, &h), &w) in p.centers.iter().zip(&p.widths).zip(&p.weights) {
        let psi = (-h * (s - c) * (s - c)).exp();
        num += w * psi;
        den += psi;
    }
    if den < real(FORCING_DENOM_FLOOR) {
        T::zero()
    } else {
        s * num / den
    }
}

/// Time derivative of the coupled `(y, v, s)` system.
///
/// `vel_scale` divides the `dy/dt` equation; 1 is the plain system, larger
/// values implement the contact halting feedback on the transformation
/// system only.
fn derivs<T: Real>(st: &ScalarState<T>, p: &ScalarPrimitive<T>, vel_scale: T) -> (T, T, T) {
    let f = forcing_term(st.s, p);
    let dv = (p.alpha_v * (p.g - st.y)
        - p.beta_v * st.v
        - p.alpha_v * (p.g - p.y0) * st.s
        + p.alpha_v * f)
        / p.tau;
    let dy = st.v / (p.tau * vel_scale);
    let ds = -p.alpha_s * st.s / p.tau;
    (dy, dv, ds)
}

/// One RK4 step of the coupled `(y, v, s)` system.
pub fn dmp_step<T: Real>(
    st: &ScalarState<T>,
    p: &ScalarPrimitive<T>,
    dt: T,
) -> Result<ScalarState<T>, DmpError> {
    dmp_step_halted(st, p, dt, T::one())
}

/// [`dmp_step`] with a velocity-halting factor `1 + alpha_f sigma |f|`
/// applied to the transformation-system velocity (and only there, so
/// other dimensions sharing the phase are unaffected).
pub fn dmp_step_halted<T: Real>(
    st: &ScalarState<T>,
    p: &ScalarPrimitive<T>,
    dt: T,
    halt_factor: T,
) -> Result<ScalarState<T>, DmpError> {
    if dt <= T::zero() {
        return Err(DmpError::Parameter("dt must be positive".into()));
    }
    if p.tau <= T::zero() {
        return Err(DmpError::Parameter("tau must be positive".into()));
    }
    let h = dt;
    let half = h / real(2.0);
    let k1 = derivs(st, p, halt_factor);
    let st2 = ScalarState { y: st.y + half * k1.0, v: st.v + half * k1.1, s: st.s + half * k1.2 };
    let k2 = derivs(&st2, p, halt_factor);
    let st3 = ScalarState { y: st.y + half * k2.0, v: st.v + half * k2.1, s: st.s + half * k2.2 };
    let k3 = derivs(&st3, p, halt_factor);
    let st4 = ScalarState { y: st.y + h * k3.0, v: st.v + h * k3.1, s: st.s + h * k3.2 };
    let k4 = derivs(&st4, p, halt_factor);
    let six: T = real(6.0);
    let two: T = real(2.0);
    let out = ScalarState {
        y: st.y + h * (k1.0 + two * k2.0 + two * k3.0 + k4.0) / six,
        v: st.v + h * (k1.1 + two * k2.1 + two * k3.1 + k4.1) / six,
        s: (st.s + h * (k1.2 + two * k2.2 + two * k3.2 + k4.2) / six).max(T::zero()),
    };
    if !(out.y.is_finite() && out.v.is_finite() && out.s.is_finite()) {
        return Err(DmpError::Numerical(format!(
            "dmp step produced non-finite state (y={:?}, v={:?})",
            out.y, out.v
        )));
    }
    Ok(out)
}

/// A sampled rollout: parallel `(t, y, v, s)` columns.
#[derive(Debug, Clone)]
pub struct Rollout<T: Real> {
    pub t: Vec<T>,
    pub y: Vec<T>,
    pub v: Vec<T>,
    pub s: Vec<T>,
}

impl<T: Real> Default for Rollout<T> {
    fn default() -> Self {
        Self { t: Vec::new(), y: Vec::new(), v: Vec::new(), s: Vec::new() }
    }
}

impl<T: Real> Rollout<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Repeated [`dmp_step`] from `(y0, 0, 1)`; includes the initial sample.
/// A zero horizon yields the single initial sample.
pub fn rollout<T: Real>(
    p: &ScalarPrimitive<T>,
    dt: T,
    horizon: T,
) -> Result<Rollout<T>, DmpError> {
    if dt <= T::zero() {
        return Err(DmpError::Parameter("dt must be positive".into()));
    }
    let mut st = p.initial_state();
    let mut out = Rollout::default();
    let mut t = T::zero();
    out.t.push(t);
    out.y.push(st.y);
    out.v.push(st.v);
    out.s.push(st.s);
    while t < horizon - dt / real(2.0) {
        st = dmp_step(&st, p, dt)?;
        t += dt;
        out.t.push(t);
        out.y.push(st.y);
        out.v.push(st.v);
        out.s.push(st.s);
    }
    Ok(out)
}

/// Finite differences: central in the interior, one-sided at the endpoints.
pub(crate) fn finite_diff<T: Real>(t: &[T], y: &[T]) -> Vec<T> {
    let n = y.len();
    let mut d = vec![T::zero(); n];
    if n < 2 {
        return d;
    }
    d[0] = (y[1] - y[0]) / (t[1] - t[0]);
    d[n - 1] = (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
    for k in 1..n - 1 {
        d[k] = (y[k + 1] - y[k - 1]) / (t[k + 1] - t[k - 1]);
    }
    d
}

/// Ridge solve `(A^T A + lambda I) w = A^T b`.
pub(crate) fn ridge_solve<T: Real>(
    design: &DMatrix<T>,
    targets: &DVector<T>,
    lambda: T,
) -> Result<DVector<T>, DmpError> {
    let n = design.ncols();
    let mut normal = design.transpose() * design;
    for i in 0..n {
        normal[(i, i)] += lambda;
    }
    let rhs = design.transpose() * targets;
    normal
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| {
            DmpError::Regression(
                "normal equations are rank-deficient; use a positive ridge penalty".into(),
            )
        })
}

/// Build the regression design matrix: row `k` holds
/// `s_k psi_i(s_k) / sum(psi(s_k))`.
pub(crate) fn design_matrix<T: Real>(phases: &[T], basis: &BasisSet<T>) -> DMatrix<T> {
    let n = basis.len();
    let mut design = DMatrix::zeros(phases.len(), n);
    for (k, &s) in phases.iter().enumerate() {
        let psi = basis_activation(s, basis);
        let den = psi.sum();
        if den < real(FORCING_DENOM_FLOOR) {
            continue;
        }
        for i in 0..n {
            design[(k, i)] = s * psi[i] / den;
        }
    }
    design
}

/// Fit a scalar primitive to a sampled `(t, y)` channel.
///
/// Velocities and accelerations come from finite differences; the forcing
/// targets from rearranging the transformation system; the weights from
/// ridge regression. `y0`, `g`, and `tau` are taken from the demonstration
/// endpoints and duration.
pub fn fit_scalar<T: Real>(
    t: &[T],
    y: &[T],
    n_basis: usize,
    lambda: T,
) -> Result<ScalarPrimitive<T>, DmpError> {
    if t.len() != y.len() {
        return Err(DmpError::Parameter("t and y lengths differ".into()));
    }
    if t.len() < 3 {
        return Err(DmpError::Parameter("need at least 3 samples".into()));
    }
    let tau = t[t.len() - 1] - t[0];
    if tau <= T::zero() {
        return Err(DmpError::Parameter("demonstration duration must be positive".into()));
    }
    let mut p = ScalarPrimitive::unforced(n_basis, tau, y[0], y[y.len() - 1])?;
    let basis = p.basis();

    let dy = finite_diff(t, y);
    let ddy = finite_diff(t, &dy);

    let phases: Vec<T> =
        t.iter().map(|&tk| (-p.alpha_s * (tk - t[0]) / tau).exp()).collect();
    let mut targets = DVector::zeros(t.len());
    for k in 0..t.len() {
        // v = tau dy/dt, tau dv/dt = tau^2 d2y/dt2; solve the
        // transformation system for f at each sample.
        let tv_dot = tau * tau * ddy[k];
        targets[k] = (tv_dot - p.alpha_v * (p.g - y[k])
            + p.beta_v * tau * dy[k]
            + p.alpha_v * (p.g - p.y0) * phases[k])
            / p.alpha_v;
    }
    let design = design_matrix(&phases, &basis);
    let w = ridge_solve(&design, &targets, lambda)?;
    if w.iter().any(|x| !x.is_finite()) {
        return Err(DmpError::Regression("non-finite weights".into()));
    }
    p.weights = w.iter().copied().collect();
    Ok(p)
}

/// Default ridge penalty for `n` basis functions.
pub fn default_lambda<T: Real>(n_basis: usize) -> T {
    real::<T>(1e-6) * real(n_basis as f64)
}
