//! Demonstration recordings: uniformly sampled end-effector pose plus
//! the low-pass-filtered wrench, with a fixed-schema CSV serialization.
//!
//! CSV columns:
//! `t,px,py,pz,qw,qx,qy,qz,fx,fy,fz,tx,ty,tz`

use std::path::Path;

use nalgebra::{Vector3, Vector6};

use crate::cdmp::UnitQuat;
use crate::harness::HarnessError;

pub const DEMO_HEADER: [&str; 14] = [
    "t", "px", "py", "pz", "qw", "qx", "qy", "qz", "fx", "fy", "fz", "tx", "ty", "tz",
];

/// A recorded demonstration, columnar for direct use by the fitters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Demonstration {
    /// Sample rate, Hz.
    pub rate: f64,
    pub t: Vec<f64>,
    pub pos: Vec<Vector3<f64>>,
    pub quat: Vec<UnitQuat<f64>>,
    /// Recorded (filtered) wrench: force then torque.
    pub wrench: Vec<Vector6<f64>>,
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Uniform monotone sampling consistent with `rate`.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let n = self.len();
        if n < 3 {
            return Err(HarnessError::Config("demonstration needs at least 3 samples".into()));
        }
        if self.pos.len() != n || self.quat.len() != n || self.wrench.len() != n {
            return Err(HarnessError::Config("demonstration channel lengths differ".into()));
        }
        if self.rate <= 0.0 {
            return Err(HarnessError::Config("demonstration rate must be positive".into()));
        }
        let dt = 1.0 / self.rate;
        for k in 1..n {
            let step = self.t[k] - self.t[k - 1];
            if step <= 0.0 || (step - dt).abs() > 0.01 * dt {
                return Err(HarnessError::Config(format!(
                    "non-uniform sampling at index {k}: step {step:.6}s, expected {dt:.6}s"
                )));
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(DEMO_HEADER)?;
        for k in 0..self.len() {
            let p = self.pos[k];
            let q = self.quat[k];
            let f = self.wrench[k];
            let mut rec = vec![format!("{}", self.t[k])];
            for v in [p.x, p.y, p.z, q.w, q.v.x, q.v.y, q.v.z] {
                rec.push(format!("{v}"));
            }
            for i in 0..6 {
                rec.push(format!("{}", f[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self, HarnessError> {
        let mut r = csv::Reader::from_path(path)?;
        {
            let headers = r.headers()?;
            if headers.len() != DEMO_HEADER.len() {
                return Err(HarnessError::Config(format!(
                    "demonstration csv has {} columns, expected {}",
                    headers.len(),
                    DEMO_HEADER.len()
                )));
            }
        }
        let mut demo = Demonstration {
            rate: 0.0,
            t: Vec::new(),
            pos: Vec::new(),
            quat: Vec::new(),
            wrench: Vec::new(),
        };
        for rec in r.records() {
            let rec = rec?;
            let mut vals = [0.0f64; 14];
            for (i, field) in rec.iter().enumerate() {
                vals[i] = field
                    .parse()
                    .map_err(|_| HarnessError::Config(format!("bad numeric field: {field:?}")))?;
            }
            demo.t.push(vals[0]);
            demo.pos.push(Vector3::new(vals[1], vals[2], vals[3]));
            demo.quat.push(
                UnitQuat { w: vals[4], v: Vector3::new(vals[5], vals[6], vals[7]) }.normalized(),
            );
            demo.wrench.push(Vector6::from_row_slice(&vals[8..14]));
        }
        if demo.t.len() >= 2 {
            demo.rate = 1.0 / (demo.t[1] - demo.t[0]);
        }
        demo.validate()?;
        Ok(demo)
    }

    /// Force part of the recorded wrench at sample `k`.
    pub fn force(&self, k: usize) -> Vector3<f64> {
        self.wrench[k].fixed_rows::<3>(0).into_owned()
    }
}
