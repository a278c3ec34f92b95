//! Contact-robust primitive extensions: sliding-window contact
//! classification, velocity halting on contact, a dynamically shifting
//! goal, small goal nudges toward an expected contact, and incremental
//! activation of force control.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::num::{real, Real};

/// Default classifier window length in samples (50 ms at 1 kHz).
pub const DEFAULT_WINDOW: usize = 50;
/// Distance floor below which the incremental selection value is defined
/// to be zero (goal reached).
pub const SELECTION_DISTANCE_FLOOR: f64 = 1e-6;

/// Sliding-window contact classifier: contact is declared when the mean
/// absolute force over the window exceeds the sensor noise mean.
///
/// Single-writer stateful; one instance per monitored channel. Also tracks
/// how long contact has been held consecutively so callers can latch a
/// contact episode without chattering.
#[derive(Debug, Clone)]
pub struct ContactClassifier<T: Real> {
    window: VecDeque<T>,
    capacity: usize,
    noise_mean: T,
    consecutive: usize,
}

impl<T: Real> ContactClassifier<T> {
    pub fn new(window: usize, noise_mean: T) -> Self {
        assert!(window >= 1, "classifier window must hold at least one sample");
        Self { window: VecDeque::with_capacity(window), capacity: window, noise_mean, consecutive: 0 }
    }

    /// Push `|f_sample|` and classify: true iff the window mean exceeds
    /// the noise mean.
    pub fn classify(&mut self, f_sample: T) -> bool {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(f_sample.abs());
        let contact = self.window_mean() > self.noise_mean;
        if contact {
            self.consecutive += 1;
        } else {
            self.consecutive = 0;
        }
        contact
    }

    pub fn window_mean(&self) -> T {
        if self.window.is_empty() {
            return T::zero();
        }
        let mut sum = T::zero();
        for &x in &self.window {
            sum += x;
        }
        sum / real(self.window.len() as f64)
    }

    /// True once contact has held for at least `window` consecutive
    /// samples; used to latch a contact episode.
    pub fn latched(&self) -> bool {
        self.consecutive >= self.capacity
    }

    pub fn noise_mean(&self) -> T {
        self.noise_mean
    }

    pub fn set_noise_mean(&mut self, mu0: T) {
        self.noise_mean = mu0;
    }

    pub fn reset(&mut self) {
        self.window.clear();
        self.consecutive = 0;
    }
}

/// Contact-halted transformation-system velocity
/// `dy/dt = v / (tau (1 + alpha_f sigma |f|))`.
///
/// Applied per selected dimension only; the shared phase is untouched so
/// unconstrained dimensions keep converging.
pub fn halted_velocity<T: Real>(v: T, tau: T, f: T, alpha_f: T, sigma: bool) -> T {
    v / (tau * halt_factor(f, alpha_f, sigma))
}

/// The halting denominator `1 + alpha_f sigma |f|`, usable as the
/// `halt_factor` of [`crate::dmp::dmp_step_halted`].
pub fn halt_factor<T: Real>(f: T, alpha_f: T, sigma: bool) -> T {
    if sigma {
        T::one() + alpha_f * f.abs()
    } else {
        T::one()
    }
}

/// Dynamically shifting goal: pulled toward the current state while in
/// contact and back toward the original goal otherwise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GoalDynamics<T: Real> {
    /// Current goal.
    pub goal: T,
    /// Original (demonstrated) goal.
    pub original: T,
    /// Transition rate while in contact, 1/s.
    pub rate_contact: T,
    /// Transition rate while out of contact, 1/s.
    pub rate_free: T,
}

impl<T: Real> GoalDynamics<T> {
    pub fn new(goal: T, rate_contact: T, rate_free: T) -> Self {
        Self { goal, original: goal, rate_contact, rate_free }
    }
}

/// One explicit-Euler step of
/// `dg/dt = alpha_c sigma (y - g) + alpha_nc (1 - sigma)(g0 - g)`.
pub fn goal_step<T: Real>(gd: &GoalDynamics<T>, y: T, sigma: bool, dt: T) -> GoalDynamics<T> {
    let dg = if sigma {
        gd.rate_contact * (y - gd.goal)
    } else {
        gd.rate_free * (gd.original - gd.goal)
    };
    GoalDynamics { goal: gd.goal + dt * dg, ..*gd }
}

/// Displace the goal by `epsilon` along `direction` (one control tick of
/// the constant-velocity approach toward an expected contact).
pub fn goal_nudge<T: Real>(g: T, direction: T, epsilon: T) -> T {
    g + epsilon * direction
}

/// State and goal captured once, at the instant a contact episode latches.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransitionRecord<T: Real> {
    /// System state at contact detection.
    pub state_at_contact: T,
    /// Goal at contact detection.
    pub goal_at_contact: T,
}

/// Selection value `S = exp(1 - |y_c - g_c| / |y - g|)` clamped to [0, 1];
/// zero once `|y - g|` drops below the distance floor (goal reached, full
/// force control).
pub fn incremental_selection<T: Real>(y: T, g: T, tr: &TransitionRecord<T>) -> T {
    let dist = (y - g).abs();
    if dist < real(SELECTION_DISTANCE_FLOOR) {
        return T::zero();
    }
    let contact_dist = (tr.state_at_contact - tr.goal_at_contact).abs();
    let s = (T::one() - contact_dist / dist).exp();
    s.clamp(T::zero(), T::one())
}
