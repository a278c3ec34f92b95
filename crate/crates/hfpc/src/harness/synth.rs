//! Synthetic demonstrations: smooth minimum-jerk pose trajectories
//! pushed through the simulator's contact model so the recorded wrench
//! is physically consistent with the motion, then filtered and noised
//! like a real sensor recording.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cdmp::UnitQuat;
use crate::harness::{Demonstration, HarnessError};
use crate::sim::{ContactSurface, SensorFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoKind {
    /// Hover above the surface, press straight down, hold.
    StraightDown,
    /// Diagonal approach ending in a straight press.
    Angled,
    /// Press, slide along the surface, lift off.
    SlideFlat,
    /// Press against the inside of a bowl and sweep along its wall.
    SlideBowl,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub kind: DemoKind,
    /// Sample rate, Hz.
    pub rate: f64,
    pub friction: f64,
    /// Table height (plane z, or bowl bottom), m.
    pub surface_height: f64,
    /// Press force during contact, N.
    pub target_force: f64,
    /// Force-sensor noise before filtering, N.
    pub noise_sigma: f64,
    pub seed: u64,
    pub bowl_radius: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            kind: DemoKind::StraightDown,
            rate: 1000.0,
            friction: 0.8,
            surface_height: 0.77,
            target_force: 2.0,
            noise_sigma: 0.02,
            seed: 0,
            bowl_radius: 0.1,
        }
    }
}

impl SynthConfig {
    /// The surface the demonstration was recorded against; scenarios
    /// replaying the learned skill should start from the same one.
    pub fn surface(&self) -> ContactSurface {
        match self.kind {
            DemoKind::SlideBowl => ContactSurface::bowl(
                Vector3::new(0.0, 0.0, self.surface_height + self.bowl_radius),
                self.bowl_radius,
                self.friction,
            ),
            _ => ContactSurface::plane(
                Vector3::new(0.0, 0.0, self.surface_height),
                Vector3::z(),
                self.friction,
            ),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.rate <= 0.0 || self.target_force <= 0.0 || self.bowl_radius <= 0.0 {
            return Err(HarnessError::Config("synth: rate, force, radius must be positive".into()));
        }
        if self.friction < 0.0 || self.noise_sigma < 0.0 {
            return Err(HarnessError::Config("synth: friction and noise must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Minimum-jerk blend, 0 -> 1 with zero end velocity/acceleration.
pub fn min_jerk(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

struct PathBuilder {
    rate: f64,
    samples: Vec<Vector3<f64>>,
}

impl PathBuilder {
    fn new(rate: f64, start: Vector3<f64>) -> Self {
        Self { rate, samples: vec![start] }
    }

    fn current(&self) -> Vector3<f64> {
        *self.samples.last().expect("non-empty path")
    }

    fn move_to(&mut self, target: Vector3<f64>, duration: f64) {
        let p0 = self.current();
        let n = (duration * self.rate).round() as usize;
        for k in 1..=n {
            let b = min_jerk(k as f64 / n as f64);
            self.samples.push(p0 + (target - p0) * b);
        }
    }

    fn hold(&mut self, duration: f64) {
        let p = self.current();
        let n = (duration * self.rate).round() as usize;
        for _ in 0..n {
            self.samples.push(p);
        }
    }
}

fn spherical(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

fn path_for(cfg: &SynthConfig, depth: f64) -> Vec<Vector3<f64>> {
    let h = cfg.surface_height;
    match cfg.kind {
        DemoKind::StraightDown => {
            let mut p = PathBuilder::new(cfg.rate, Vector3::new(0.0, 0.0, h + 0.2));
            p.hold(0.3);
            p.move_to(Vector3::new(0.0, 0.0, h - depth), 2.0);
            p.hold(2.0);
            p.samples
        }
        DemoKind::Angled => {
            let mut p = PathBuilder::new(cfg.rate, Vector3::new(-0.08, -0.06, h + 0.2));
            p.hold(0.3);
            p.move_to(Vector3::new(0.0, 0.0, h - depth), 2.0);
            p.hold(2.0);
            p.samples
        }
        DemoKind::SlideFlat => {
            let mut p = PathBuilder::new(cfg.rate, Vector3::new(-0.05, 0.0, h + 0.15));
            p.hold(0.3);
            p.move_to(Vector3::new(-0.05, 0.0, h - depth), 1.5);
            p.hold(0.5);
            p.move_to(Vector3::new(0.10, 0.0, h - depth), 2.5);
            p.hold(0.5);
            p.move_to(Vector3::new(0.10, 0.0, h + 0.10), 1.0);
            p.hold(0.3);
            p.samples
        }
        DemoKind::SlideBowl => {
            let r = cfg.bowl_radius;
            let center = Vector3::new(0.0, 0.0, h + r);
            let d0 = Vector3::new(0.0, 0.0, -1.0);
            let mut p = PathBuilder::new(cfg.rate, center + d0 * (0.5 * r));
            p.hold(0.3);
            p.move_to(center + d0 * (r + depth), 1.5);
            p.hold(0.5);
            // Sweep up the wall varying both polar and azimuth angles so
            // the contact normal covers all three world axes. Slow enough
            // that the 1.5 Hz recording filter's angular lag on the
            // rotating force direction stays a few hundredths of a radian.
            let n = (10.0 * cfg.rate).round() as usize;
            let (theta0, theta1) = (std::f64::consts::PI, 110f64.to_radians());
            let (phi0, phi1) = (0.0, 80f64.to_radians());
            for k in 1..=n {
                let b = min_jerk(k as f64 / n as f64);
                let dir = spherical(theta0 + (theta1 - theta0) * b, phi0 + (phi1 - phi0) * b);
                p.samples.push(center + dir * (r + depth));
            }
            p.hold(0.5);
            let d_end = spherical(theta1, phi1);
            p.move_to(center + d_end * (0.5 * r), 1.0);
            p.hold(0.3);
            p.samples
        }
    }
}

/// Generate a demonstration of the given kind against the configured
/// surface: kinematic pose playback, contact-model wrench, sensor noise,
/// then the same low-pass recording filter a real capture would use.
pub fn synthesize_demo(cfg: &SynthConfig) -> Result<Demonstration, HarnessError> {
    cfg.validate()?;
    let surface = cfg.surface();
    let depth = cfg.target_force / surface.stiffness;
    let positions = path_for(cfg, depth);
    let n = positions.len();
    let dt = 1.0 / cfg.rate;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| HarnessError::Config(format!("noise config: {e}")))?;
    let mut filter = SensorFilter::new(1.5);

    let mut demo = Demonstration {
        rate: cfg.rate,
        t: Vec::with_capacity(n),
        pos: positions.clone(),
        quat: vec![UnitQuat::identity(); n],
        wrench: Vec::with_capacity(n),
    };
    for k in 0..n {
        let v = if k == 0 {
            (positions[1] - positions[0]) / dt
        } else if k == n - 1 {
            (positions[n - 1] - positions[n - 2]) / dt
        } else {
            (positions[k + 1] - positions[k - 1]) / (2.0 * dt)
        };
        let reaction = surface.contact_wrench(&positions[k], &v);
        // The sensor reads the force the tool applies to the surface.
        let mut applied = -reaction;
        if cfg.noise_sigma > 0.0 {
            for i in 0..3 {
                applied[i] += noise.sample(&mut rng);
            }
        }
        demo.t.push(k as f64 * dt);
        demo.wrench.push(filter.step(&applied, dt));
    }
    demo.validate()?;
    Ok(demo)
}
