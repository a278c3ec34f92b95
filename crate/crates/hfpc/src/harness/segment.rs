//! Phase segmentation: run the contact classifier over the recorded
//! force magnitude, split the demonstration into making-contact,
//! in-contact, and breaking-contact spans, and learn the per-phase
//! primitives (position, orientation, and — in contact — the constraint
//! profile).

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::cdmp::{fit_orientation, OrientationPrimitive};
use crate::contact::ContactClassifier;
use crate::dmp::{default_lambda, fit_scalar, ScalarPrimitive};
use crate::frames::{learn_constraint_profile, ConstraintProfile, SensorConvention};
use crate::harness::{Demonstration, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    MakingContact,
    InContact,
    BreakingContact,
}

/// One contiguous phase with its learned primitives. `start..end` are
/// sample indices into the source demonstration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSegment {
    pub kind: PhaseKind,
    pub start: usize,
    pub end: usize,
    /// Per-axis position primitives (x, y, z).
    pub position: [ScalarPrimitive<f64>; 3],
    pub orientation: OrientationPrimitive<f64>,
    /// Constraint frame and force-magnitude profile; in-contact only.
    pub profile: Option<ConstraintProfile<f64>>,
    /// Force magnitude to reach at contact, N; making-contact only,
    /// inherited from the start of the following in-contact span.
    pub goal_force: Option<f64>,
    /// Unit direction of the demonstrated force at the same boundary,
    /// applied-force convention; making-contact only.
    #[serde(default)]
    pub goal_force_dir: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentedSkill {
    pub rate: f64,
    pub segments: Vec<PhaseSegment>,
}

impl SegmentedSkill {
    pub fn save_json(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string_pretty(self).map_err(HarnessError::from)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    /// Classifier window length, samples.
    pub window: usize,
    /// Expected force-magnitude mean without contact, N.
    pub noise_mean: f64,
    /// Runs shorter than this are classifier chatter and get merged.
    pub min_samples: usize,
    pub n_basis: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            window: crate::contact::DEFAULT_WINDOW,
            noise_mean: 0.15,
            min_samples: 150,
            n_basis: 30,
        }
    }
}

/// Contiguous (in_contact, start, end) runs after chatter removal.
fn contact_runs(demo: &Demonstration, cfg: &SegmentConfig) -> Vec<(bool, usize, usize)> {
    let mut classifier = ContactClassifier::new(cfg.window, cfg.noise_mean);
    let mut flags: Vec<bool> = (0..demo.len()).map(|k| classifier.classify(demo.force(k).norm())).collect();

    // Merge runs shorter than min_samples into their predecessor.
    loop {
        let mut changed = false;
        let mut k = 0;
        while k < flags.len() {
            let mut j = k;
            while j < flags.len() && flags[j] == flags[k] {
                j += 1;
            }
            if j - k < cfg.min_samples && (k > 0 || j < flags.len()) {
                let fill = if k > 0 { flags[k - 1] } else { flags[j] };
                if fill != flags[k] {
                    for f in &mut flags[k..j] {
                        *f = fill;
                    }
                    changed = true;
                }
            }
            k = j;
        }
        if !changed {
            break;
        }
    }

    let mut runs = Vec::new();
    let mut k = 0;
    while k < flags.len() {
        let mut j = k;
        while j < flags.len() && flags[j] == flags[k] {
            j += 1;
        }
        runs.push((flags[k], k, j));
        k = j;
    }
    runs
}

fn fit_segment(
    demo: &Demonstration,
    kind: PhaseKind,
    start: usize,
    end: usize,
    goal_force: Option<f64>,
    goal_force_dir: Option<[f64; 3]>,
    cfg: &SegmentConfig,
) -> Result<PhaseSegment, HarnessError> {
    let t: Vec<f64> = demo.t[start..end].iter().map(|x| x - demo.t[start]).collect();
    let lambda = default_lambda::<f64>(cfg.n_basis);
    let axis = |i: usize| -> Result<ScalarPrimitive<f64>, HarnessError> {
        let y: Vec<f64> = demo.pos[start..end].iter().map(|p| p[i]).collect();
        Ok(fit_scalar(&t, &y, cfg.n_basis, lambda)?)
    };
    let position = [axis(0)?, axis(1)?, axis(2)?];
    let orientation = fit_orientation(&t, &demo.quat[start..end], cfg.n_basis, lambda)?;
    let profile = if kind == PhaseKind::InContact {
        let forces: Vec<Vector3<f64>> = (start..end).map(|k| demo.force(k)).collect();
        let candidate_y: Vec<Vector3<f64>> =
            (start..end).map(|k| demo.quat[k].rotate(&Vector3::y())).collect();
        let fallback_x: Vec<Vector3<f64>> =
            (start..end).map(|k| demo.quat[k].rotate(&Vector3::x())).collect();
        Some(learn_constraint_profile(
            &format!("in_contact[{start}..{end}]"),
            &t,
            &forces,
            &candidate_y,
            &fallback_x,
            SensorConvention::Applied,
            cfg.n_basis,
            lambda,
        )?)
    } else {
        None
    };
    Ok(PhaseSegment { kind, start, end, position, orientation, profile, goal_force, goal_force_dir })
}

/// Segment a demonstration and learn per-phase primitives.
///
/// Free spans before (or between) contact become making-contact phases
/// whose goal force is the force magnitude at the start of the following
/// contact span; the free span after the last contact becomes a
/// breaking-contact phase. A demonstration with no contact at all yields
/// a single making-contact motion segment.
pub fn segment_demo(demo: &Demonstration, cfg: &SegmentConfig) -> Result<SegmentedSkill, HarnessError> {
    demo.validate()?;
    if cfg.window == 0 || cfg.min_samples == 0 || cfg.n_basis < 2 {
        return Err(HarnessError::Config("segment: window, min_samples, n_basis too small".into()));
    }
    let runs = contact_runs(demo, cfg);
    let mut segments = Vec::new();
    for (idx, &(contact, start, end)) in runs.iter().enumerate() {
        let kind = if contact {
            PhaseKind::InContact
        } else if runs[idx + 1..].iter().any(|r| r.0) {
            PhaseKind::MakingContact
        } else if runs[..idx].iter().any(|r| r.0) {
            PhaseKind::BreakingContact
        } else {
            PhaseKind::MakingContact
        };
        let boundary = if kind == PhaseKind::MakingContact {
            runs[idx + 1..].iter().find(|r| r.0).map(|&(_, s, _)| demo.force(s))
        } else {
            None
        };
        let goal_force = boundary.map(|f| f.norm());
        let goal_force_dir = boundary
            .filter(|f| f.norm() > 1e-9)
            .map(|f| (f / f.norm()).into());
        segments.push(fit_segment(demo, kind, start, end, goal_force, goal_force_dir, cfg)?);
    }
    Ok(SegmentedSkill { rate: demo.rate, segments })
}
