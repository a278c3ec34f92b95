//! Penalty contact surfaces with regularized Coulomb friction.

use nalgebra::{Vector3, Vector6};
use serde::{Deserialize, Serialize};

/// Surface geometry: an infinite plane or the interior of a
/// hemispherical bowl.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceGeometry {
    Plane {
        point: [f64; 3],
        /// Outward normal (out of the solid).
        normal: [f64; 3],
    },
    Bowl {
        center: [f64; 3],
        radius: f64,
    },
}

/// A penalty contact surface: spring-damper normal force on penetration
/// plus Coulomb tangential friction regularized below a stiction speed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactSurface {
    pub geometry: SurfaceGeometry,
    /// Normal stiffness, N/m.
    pub stiffness: f64,
    /// Normal damping, N·s/m.
    pub damping: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Slip speed below which friction ramps linearly, m/s.
    pub stiction_speed: f64,
    /// Penetration depth over which damping ramps to its full value, m.
    /// Keeps the normal force continuous at touchdown instead of jumping
    /// by `damping * approach_speed` on the first contact sample.
    #[serde(default = "default_damping_ramp")]
    pub damping_ramp: f64,
}

fn default_damping_ramp() -> f64 {
    5.0e-5
}

impl ContactSurface {
    pub fn plane(point: Vector3<f64>, normal: Vector3<f64>, friction: f64) -> Self {
        Self {
            geometry: SurfaceGeometry::Plane {
                point: point.into(),
                normal: normal.normalize().into(),
            },
            stiffness: 2.0e4,
            damping: 200.0,
            friction,
            stiction_speed: 1e-3,
            damping_ramp: default_damping_ramp(),
        }
    }

    pub fn bowl(center: Vector3<f64>, radius: f64, friction: f64) -> Self {
        assert!(radius > 0.0, "bowl radius must be positive");
        Self {
            geometry: SurfaceGeometry::Bowl { center: center.into(), radius },
            stiffness: 2.0e4,
            damping: 200.0,
            friction,
            stiction_speed: 1e-3,
            damping_ramp: default_damping_ramp(),
        }
    }

    /// Signed penetration depth and inward surface normal (the direction
    /// pushing the end-effector out of the solid) at a point.
    pub fn penetration(&self, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
        match &self.geometry {
            SurfaceGeometry::Plane { point, normal } => {
                let n = Vector3::from(*normal);
                let depth = n.dot(&(Vector3::from(*point) - p));
                (depth, n)
            }
            SurfaceGeometry::Bowl { center, radius } => {
                let r = p - Vector3::from(*center);
                let dist = r.norm();
                if dist < 1e-12 {
                    return (-radius, Vector3::z());
                }
                // Interior surface: penetration once the point passes the
                // shell outward; the normal points back toward the center.
                (dist - radius, -r / dist)
            }
        }
    }

    /// Contact wrench on the end-effector (torque block zero).
    pub fn contact_wrench(&self, p: &Vector3<f64>, v: &Vector3<f64>) -> Vector6<f64> {
        let (depth, n) = self.penetration(p);
        if depth <= 0.0 {
            return Vector6::zeros();
        }
        let depth_rate = -n.dot(v);
        let damp_scale =
            if self.damping_ramp > 0.0 { (depth / self.damping_ramp).min(1.0) } else { 1.0 };
        let normal_mag =
            (self.stiffness * depth + self.damping * damp_scale * depth_rate).max(0.0);
        let mut force = n * normal_mag;

        let v_t = v - n * n.dot(v);
        let speed = v_t.norm();
        if speed > 1e-12 && self.friction > 0.0 {
            let scale = if speed >= self.stiction_speed {
                1.0
            } else {
                speed / self.stiction_speed
            };
            force -= v_t / speed * (self.friction * normal_mag * scale);
        }
        let mut w = Vector6::zeros();
        w.fixed_rows_mut::<3>(0).copy_from(&force);
        w
    }
}
