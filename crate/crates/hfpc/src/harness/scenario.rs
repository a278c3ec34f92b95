//! Scenario orchestration: replay a learned skill through the phase
//! state machine (free-space approach with contact extensions, latched
//! transition, in-contact hybrid control, position-only retreat) against
//! a configurable surface, and report the metrics the experiments
//! compare.

use std::path::Path;

use nalgebra::{DVector, Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::cdmp::{cdmp_step, OrientationState};
use crate::contact::{
    goal_step, halt_factor, incremental_selection, ContactClassifier, GoalDynamics,
    TransitionRecord,
};
use crate::controller::{
    hybrid_control, CartesianRefs, ForceIntegralState, HybridGains, SelectionState,
};
use crate::dmp::{dmp_step_halted, ScalarPrimitive, ScalarState};
use crate::frames::frame_from_force;
use crate::harness::{HarnessError, PhaseKind, PhaseSegment, SegmentedSkill};
use crate::sim::{ArmModel, ArmState, ContactSurface, NoiseConfig, SimWorld, StepOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// Force control along the learned constraint frame.
    Constraint,
    /// Force control pinned to the world z-axis (the fixed-frame
    /// baseline the constraint frame is compared against).
    World,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub kind: String,
    /// Nominal surface height, m.
    pub height: f64,
    /// Perturbation from the demonstrated height, cm (positive = higher
    /// table = earlier contact).
    pub height_offset_cm: f64,
    pub friction: f64,
    pub bowl_radius: f64,
    /// Normal contact stiffness, N/m.
    pub stiffness: f64,
    /// Normal contact damping, N*s/m.
    pub damping: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            kind: "plane".into(),
            height: 0.77,
            height_offset_cm: 0.0,
            friction: 0.1,
            bowl_radius: 0.1,
            stiffness: 2.0e4,
            damping: 200.0,
        }
    }
}

impl SurfaceConfig {
    pub fn effective_height(&self) -> f64 {
        self.height + self.height_offset_cm / 100.0
    }

    pub fn build(&self) -> Result<ContactSurface, HarnessError> {
        let h = self.effective_height();
        let mut surface = match self.kind.as_str() {
            "plane" => ContactSurface::plane(Vector3::new(0.0, 0.0, h), Vector3::z(), self.friction),
            "bowl" => ContactSurface::bowl(
                Vector3::new(0.0, 0.0, h + self.bowl_radius),
                self.bowl_radius,
                self.friction,
            ),
            other => return Err(HarnessError::Config(format!("unknown surface kind {other:?}"))),
        };
        surface.stiffness = self.stiffness;
        surface.damping = self.damping;
        Ok(surface)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureToggles {
    /// Velocity halting on rising contact force.
    pub halting: bool,
    /// Which translation axes halting (and goal adaptation) act on.
    pub halt_dims: [bool; 3],
    /// Goal adaptation toward the state under contact.
    pub dynamic_goal: bool,
    /// Goal nudge toward expected contact after convergence in free air.
    pub nudge: bool,
    /// Gradual position-to-force blending after the transition.
    pub incremental_selection: bool,
    /// Integral-error scaling in the force loop.
    pub ies: bool,
    /// Any force control at all; off = pure position playback.
    pub force_control: bool,
}

impl Default for FeatureToggles {
    fn default() -> Self {
        Self {
            halting: true,
            halt_dims: [true, true, true],
            dynamic_goal: true,
            nudge: true,
            incremental_selection: true,
            ies: false,
            force_control: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainConfig {
    pub kp: f64,
    pub kd: f64,
    pub kf: f64,
    pub ki: f64,
    /// Halting strength (per 1 N of contact force).
    pub alpha_f: f64,
    pub ies_beta: f64,
    /// Goal-nudge step, m per application period.
    pub epsilon: f64,
    /// Goal-nudge application period, s.
    pub nudge_period: f64,
    pub goal_rate_contact: f64,
    pub goal_rate_free: f64,
    /// Contact-classifier window, samples.
    pub window: usize,
    /// Classifier free-air force-magnitude mean, N.
    pub noise_mean: f64,
    pub integral_window: usize,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            kp: 400.0,
            kd: 40.0,
            kf: 0.2,
            ki: 70.0,
            alpha_f: 10.0,
            ies_beta: 0.001,
            epsilon: 0.0005,
            nudge_period: 0.01,
            goal_rate_contact: 20.0,
            goal_rate_free: 5.0,
            window: 50,
            noise_mean: 0.3,
            integral_window: 500,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Path to the learned skill JSON (used by the CLI; the library API
    /// receives the skill directly).
    pub skill: String,
    pub seed: u64,
    pub rate: f64,
    /// Temporal scaling override applied to every phase primitive.
    pub tau: Option<f64>,
    /// Contact force target, N.
    pub target_force: f64,
    /// Per-phase wall-clock cap, s.
    pub max_phase_time: f64,
    pub frame_mode: FrameMode,
    pub surface: SurfaceConfig,
    pub features: FeatureToggles,
    pub gains: GainConfig,
    pub noise_sigma: f64,
    pub mass: f64,
    pub torque_limit: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            skill: String::new(),
            seed: 0,
            rate: 1000.0,
            tau: None,
            target_force: 2.0,
            max_phase_time: 10.0,
            frame_mode: FrameMode::Constraint,
            surface: SurfaceConfig::default(),
            features: FeatureToggles::default(),
            gains: GainConfig::default(),
            noise_sigma: 0.05,
            mass: 1.0,
            torque_limit: 150.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.rate <= 0.0 || self.mass <= 0.0 || self.torque_limit <= 0.0 {
            return Err(HarnessError::Config("rate, mass, torque_limit must be positive".into()));
        }
        if let Some(tau) = self.tau {
            if tau <= 0.0 {
                return Err(HarnessError::Config("tau override must be positive".into()));
            }
        }
        if self.features.ies && !self.features.force_control {
            return Err(HarnessError::Config("ies requires force_control".into()));
        }
        if self.gains.window == 0 || self.gains.integral_window == 0 {
            return Err(HarnessError::Config("classifier/integral windows must be nonzero".into()));
        }
        self.surface.build().map(|_| ())
    }

    pub fn load_toml(path: &Path) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Summary metrics for one scenario run; this is the byte-stable JSON
/// the determinism guarantee covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub tau: f64,
    pub contact_achieved: bool,
    pub contact_time: Option<f64>,
    /// Peak raw force magnitude around first contact, N.
    pub peak_impact_force: f64,
    /// Mean |desired - measured| force along the desired direction over
    /// the last 0.5 s of the in-contact phase, N.
    pub steady_force_error: f64,
    /// RMS of the same error over the whole in-contact phase, N.
    pub force_rms_error: f64,
    /// Time-averaged world xy position error during contact, m.
    pub pos_err_xy: f64,
    /// Time-averaged full position error during contact, m.
    pub pos_err_l2: f64,
    /// Final height above the (plane) surface, m.
    pub hover_height: f64,
    /// Distance from the free-space goal in world xy at the end of the
    /// approach phase, m (measured against the learned goal).
    pub xy_goal_error: f64,
    /// Mean |goal force - measured normal force| over the last 0.3 s of
    /// the making-contact phase, N. Captures how far force control has
    /// converged by the time the approach primitive finishes.
    pub making_force_error: f64,
    pub final_force: f64,
    pub loss_of_contact: bool,
    pub contact_edges: u32,
    pub aborted: Option<String>,
}

impl RunReport {
    pub fn save_json(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string_pretty(self).map_err(HarnessError::from)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// One control-tick log record.
#[derive(Debug, Clone)]
pub struct LogRow {
    pub t: f64,
    pub pos: Vector3<f64>,
    pub quat: crate::cdmp::UnitQuat<f64>,
    pub raw: Vector6<f64>,
    pub filtered: Vector6<f64>,
    pub contact: bool,
    pub torques: DVector<f64>,
}

pub fn write_log_csv(path: &Path, rows: &[LogRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let dof = rows.first().map_or(6, |r| r.torques.len());
    let mut header = vec![
        "t".to_string(),
        "px".into(),
        "py".into(),
        "pz".into(),
        "qw".into(),
        "qx".into(),
        "qy".into(),
        "qz".into(),
    ];
    for i in 0..6 {
        header.push(format!("raw{i}"));
    }
    for i in 0..6 {
        header.push(format!("filt{i}"));
    }
    header.push("contact".into());
    for i in 0..dof {
        header.push(format!("tau{i}"));
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format!("{}", r.t)];
        for v in [r.pos.x, r.pos.y, r.pos.z, r.quat.w, r.quat.v.x, r.quat.v.y, r.quat.v.z] {
            rec.push(format!("{v}"));
        }
        for i in 0..6 {
            rec.push(format!("{}", r.raw[i]));
        }
        for i in 0..6 {
            rec.push(format!("{}", r.filtered[i]));
        }
        rec.push(if r.contact { "1".into() } else { "0".into() });
        for i in 0..r.torques.len() {
            rec.push(format!("{}", r.torques[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub struct ScenarioOutcome {
    pub report: RunReport,
    pub log: Vec<LogRow>,
}

/// Phase-local primitive playback state shared by all phase kinds.
struct Playback {
    prims: [ScalarPrimitive<f64>; 3],
    states: [ScalarState<f64>; 3],
    orient: crate::cdmp::OrientationPrimitive<f64>,
    orient_state: OrientationState<f64>,
}

impl Playback {
    fn new(seg: &PhaseSegment, tau: Option<f64>) -> Self {
        let mut prims = seg.position.clone();
        let mut orient = seg.orientation.clone();
        if let Some(tau) = tau {
            for p in &mut prims {
                p.tau = tau;
            }
            orient.tau = tau;
        }
        let states = [prims[0].initial_state(), prims[1].initial_state(), prims[2].initial_state()];
        let orient_state = orient.initial_state();
        Self { prims, states, orient, orient_state }
    }

    fn tau(&self) -> f64 {
        self.prims[0].tau
    }

    fn pos_d(&self) -> Vector3<f64> {
        Vector3::new(self.states[0].y, self.states[1].y, self.states[2].y)
    }

    fn goal(&self) -> Vector3<f64> {
        Vector3::new(self.prims[0].g, self.prims[1].g, self.prims[2].g)
    }
}

struct Metrics {
    contact_achieved: bool,
    contact_time: Option<f64>,
    peak_impact_force: f64,
    steady_err_sum: f64,
    steady_err_n: usize,
    rms_sum: f64,
    rms_n: usize,
    pos_xy_sum: f64,
    pos_l2_sum: f64,
    pos_n: usize,
    xy_goal_error: f64,
    making_force_error: f64,
    final_force: f64,
    loss_of_contact: bool,
    contact_edges: u32,
    prev_contact: bool,
    free_streak: usize,
    ever_contact: bool,
    breaking: bool,
}

impl Metrics {
    fn new() -> Self {
        Self {
            contact_achieved: false,
            contact_time: None,
            peak_impact_force: 0.0,
            steady_err_sum: 0.0,
            steady_err_n: 0,
            rms_sum: 0.0,
            rms_n: 0,
            pos_xy_sum: 0.0,
            pos_l2_sum: 0.0,
            pos_n: 0,
            xy_goal_error: 0.0,
            making_force_error: 0.0,
            final_force: 0.0,
            loss_of_contact: false,
            contact_edges: 0,
            prev_contact: false,
            free_streak: 0,
            ever_contact: false,
            breaking: false,
        }
    }

    fn observe_contact(&mut self, out: &StepOutput) {
        if out.in_contact && !self.prev_contact {
            self.contact_edges += 1;
        }
        if out.in_contact {
            self.ever_contact = true;
            self.free_streak = 0;
        } else if self.contact_achieved && !self.breaking {
            // Grazing touches during the approach do not count, and the
            // breaking-contact phase leaves the surface on purpose; losses
            // are tracked only while latched contact is expected.
            self.free_streak += 1;
            // 100 ms clear of the surface after having touched it.
            if self.free_streak > 100 {
                self.loss_of_contact = true;
            }
        }
        self.prev_contact = out.in_contact;
    }
}

struct Executor {
    cfg: ScenarioConfig,
    world: SimWorld,
    gains: HybridGains<f64>,
    sensed: StepOutput,
    metrics: Metrics,
    log: Vec<LogRow>,
    dt: f64,
}

impl Executor {
    fn control_and_step(
        &mut self,
        sel: &SelectionState<f64>,
        refs: &CartesianRefs<f64>,
        f_desired: &Vector6<f64>,
        integral: ForceIntegralState<f64>,
    ) -> Result<ForceIntegralState<f64>, String> {
        let (q, qdot) = self.world.joint_state();
        let model = self.world.arm.model_state(&q, &qdot);
        let out = hybrid_control(
            &model,
            sel,
            refs,
            f_desired,
            &self.sensed.wrench_raw,
            &self.gains,
            &DVector::zeros(model.dof()),
            (0.0, 0.0),
            &integral,
        )
        .map_err(|e| e.to_string())?;
        let step = self.world.step(&out.torques, self.dt).map_err(|e| e.to_string())?;
        self.metrics.observe_contact(&step);
        self.log.push(LogRow {
            t: self.world.t,
            pos: step.ee_pos,
            quat: step.ee_quat,
            raw: step.wrench_raw,
            filtered: step.wrench_filtered,
            contact: step.in_contact,
            torques: out.torques.clone(),
        });
        self.sensed = step;
        Ok(out.integral)
    }

    fn refs(&self, play: &Playback, halt: &[f64; 3]) -> CartesianRefs<f64> {
        let tau = play.tau();
        let mut vel_d = Vector6::zeros();
        for i in 0..3 {
            vel_d[i] = play.states[i].v / (tau * halt[i]);
            vel_d[i + 3] = play.orient_state.w[i] / tau;
        }
        CartesianRefs {
            pos_d: play.pos_d(),
            quat_d: play.orient_state.q,
            vel_d,
            acc_d: Vector6::zeros(),
            pos: self.sensed.ee_pos,
            quat: self.sensed.ee_quat,
            vel: self.sensed.ee_vel,
        }
    }

    /// Free-space approach with the contact extensions. Returns whether
    /// the phase handed over to contact (latched and converged).
    fn run_making(&mut self, seg: &PhaseSegment) -> Result<bool, String> {
        let feats = self.cfg.features;
        let g = self.cfg.gains;
        let mut play = Playback::new(seg, self.cfg.tau);
        let approach = {
            let d = play.goal() - play.pos_d();
            if d.norm() > 1e-9 { d.normalize() } else { -Vector3::z() }
        };
        let goal_force = seg.goal_force.unwrap_or(self.cfg.target_force);
        // Force handoff acts along the demonstrated boundary force when
        // available (the surface normal), not the approach motion, so an
        // angled approach keeps its tangential axes position-controlled.
        let force_dir = seg
            .goal_force_dir
            .map(Vector3::from)
            .unwrap_or(approach);
        let transition_frame =
            frame_from_force(&force_dir, &Vector3::y()).unwrap_or_else(|_| Matrix3::identity());
        let mut classifier = ContactClassifier::new(g.window, g.noise_mean);
        let mut goals: Vec<GoalDynamics<f64>> = (0..3)
            .map(|i| GoalDynamics::new(play.prims[i].g, g.goal_rate_contact, g.goal_rate_free))
            .collect();
        let mut integral = ForceIntegralState::new();
        let mut transition: Option<[TransitionRecord<f64>; 3]> = None;
        let mut nudging = false;
        let mut nudge_accum = 0.0f64;
        let mut peak = 0.0f64;
        let mut force_trace: Vec<(f64, f64)> = Vec::new();
        let limit = self.cfg.max_phase_time.min(2.5 * play.tau() + 4.0);

        let mut t_phase = 0.0;
        while t_phase < limit {
            let f_raw = self.sensed.wrench_raw.fixed_rows::<3>(0).into_owned();
            let sigma = classifier.classify(f_raw.norm());
            let latched = classifier.latched();
            peak = peak.max(f_raw.norm());
            if latched {
                force_trace.push((t_phase, (f_raw.norm() - goal_force).abs()));
            }

            if latched && transition.is_none() {
                self.metrics.contact_achieved = true;
                self.metrics.contact_time = Some(self.world.t);
                if feats.force_control {
                    transition = Some([0, 1, 2].map(|i| TransitionRecord {
                        state_at_contact: play.states[i].y,
                        goal_at_contact: play.prims[i].g,
                    }));
                    integral = ForceIntegralState::new();
                }
            }

            // Selection and desired force for this tick.
            let (sel, f_desired) = if let Some(tr) = &transition {
                let blend = if feats.incremental_selection {
                    // Approach-axis distance drives the blend.
                    let y = (play.pos_d() - play.goal()).dot(&approach).abs();
                    let yc = Vector3::new(
                        tr[0].state_at_contact - tr[0].goal_at_contact,
                        tr[1].state_at_contact - tr[1].goal_at_contact,
                        tr[2].state_at_contact - tr[2].goal_at_contact,
                    )
                    .dot(&approach)
                    .abs();
                    let rec = TransitionRecord { state_at_contact: yc, goal_at_contact: 0.0 };
                    incremental_selection(y, 0.0, &rec)
                } else {
                    0.0
                };
                let mut sel = SelectionState::single_force_dof(transition_frame.transpose());
                sel.diag[2] = blend;
                let fd = force_dir * goal_force;
                (sel, Vector6::new(fd.x, fd.y, fd.z, 0.0, 0.0, 0.0))
            } else {
                (SelectionState::motion_only(), Vector6::zeros())
            };

            let mut halt = [1.0; 3];
            for i in 0..3 {
                let active = feats.halting && sigma && feats.halt_dims[i];
                halt[i] = halt_factor(f_raw[i], g.alpha_f, active);
            }
            let refs = self.refs(&play, &halt);
            integral = self.control_and_step(&sel, &refs, &f_desired, integral)?;

            // Primitive evolution.
            for i in 0..3 {
                play.states[i] =
                    dmp_step_halted(&play.states[i], &play.prims[i], self.dt, halt[i])
                        .map_err(|e| e.to_string())?;
            }
            play.orient_state = cdmp_step(&play.orient_state, &play.orient, self.dt)
                .map_err(|e| e.to_string())?;

            // Goal adaptation on the halting-masked axes.
            if feats.dynamic_goal {
                for i in 0..3 {
                    if feats.halt_dims[i] {
                        goals[i] = goal_step(&goals[i], play.states[i].y, sigma, self.dt);
                        play.prims[i].g = goals[i].goal;
                    }
                }
            }

            // Nudge toward expected contact: arm on first free-air
            // convergence, then displace the goal by epsilon once per
            // application period for a constant-velocity approach.
            if feats.nudge && !sigma && transition.is_none() {
                if !nudging {
                    nudging =
                        (0..3).all(|i| (play.prims[i].g - play.states[i].y).abs() < 1e-4);
                }
                if nudging {
                    nudge_accum += self.dt;
                    if nudge_accum >= g.nudge_period {
                        nudge_accum -= g.nudge_period;
                        for i in 0..3 {
                            let nudged = play.prims[i].g + g.epsilon * approach[i];
                            play.prims[i].g = nudged;
                            goals[i].goal = nudged;
                            goals[i].original = nudged;
                        }
                    }
                }
            }

            if transition.is_some() {
                let done = (0..3).all(|i| (play.prims[i].g - play.states[i].y).abs() < 1e-4);
                if done && t_phase > 0.2 {
                    break;
                }
            }
            t_phase += self.dt;
        }

        self.metrics.peak_impact_force = self.metrics.peak_impact_force.max(peak);
        if let Some(&(t_end, _)) = force_trace.last() {
            let tail: Vec<f64> = force_trace
                .iter()
                .filter(|(t, _)| *t >= t_end - 0.3)
                .map(|(_, e)| *e)
                .collect();
            self.metrics.making_force_error = tail.iter().sum::<f64>() / tail.len() as f64;
        }
        let goal0 = seg.position.clone().map(|p| p.g);
        let p = self.sensed.ee_pos;
        self.metrics.xy_goal_error =
            ((p.x - goal0[0]).powi(2) + (p.y - goal0[1]).powi(2)).sqrt();
        Ok(self.metrics.contact_achieved)
    }

    fn run_in_contact(&mut self, seg: &PhaseSegment) -> Result<(), String> {
        let profile = match &seg.profile {
            Some(p) => p.clone(),
            None => return Err("in-contact segment without constraint profile".into()),
        };
        let mut play = Playback::new(seg, self.cfg.tau);
        let profile = match self.cfg.tau {
            Some(tau) => profile.with_tau(tau),
            None => profile,
        };
        let mut profile_play = profile.playback();
        let mut integral = ForceIntegralState::new();
        let duration = (play.tau() * 1.05 + 0.5).min(self.cfg.max_phase_time);
        let mut err_trace: Vec<(f64, f64)> = Vec::new();

        let mut t_phase = 0.0;
        let mut force_established = false;
        while t_phase < duration {
            let (sel, f_desired, magnitude, dir) = match self.cfg.frame_mode {
                FrameMode::Constraint => {
                    let (wrench, sel) = profile_play.current(&profile);
                    let f = wrench.force;
                    let dir = if wrench.magnitude.abs() > 1e-9 {
                        f / wrench.magnitude
                    } else {
                        -Vector3::z()
                    };
                    (sel, Vector6::new(f.x, f.y, f.z, 0.0, 0.0, 0.0), wrench.magnitude.abs(), dir)
                }
                FrameMode::World => {
                    let sel = SelectionState::single_force_dof(Matrix3::identity());
                    let m = self.cfg.target_force;
                    (sel, Vector6::new(0.0, 0.0, -m, 0.0, 0.0, 0.0), m, -Vector3::z())
                }
            };
            // Once the desired-force schedule has been established and
            // decays back under the contact threshold, the demonstration
            // is leaving the surface: hand over to the breaking phase
            // instead of chasing the degenerate tail of the profile.
            if magnitude > self.cfg.gains.noise_mean {
                force_established = true;
            } else if force_established {
                break;
            }

            let sel = if self.cfg.features.force_control {
                sel
            } else {
                SelectionState::motion_only()
            };
            let f_desired = if self.cfg.features.force_control { f_desired } else { Vector6::zeros() };

            let refs = self.refs(&play, &[1.0; 3]);
            let pos_err = refs.pos_d - self.sensed.ee_pos;
            integral = self.control_and_step(&sel, &refs, &f_desired, integral)?;

            // Metrics against the raw sensed force along the desired
            // direction.
            let f_meas = self.sensed.wrench_raw.fixed_rows::<3>(0).dot(&dir);
            let err = magnitude - f_meas;
            self.metrics.rms_sum += err * err;
            self.metrics.rms_n += 1;
            err_trace.push((t_phase, err.abs()));
            self.metrics.pos_xy_sum += (pos_err.x.powi(2) + pos_err.y.powi(2)).sqrt();
            self.metrics.pos_l2_sum += pos_err.norm();
            self.metrics.pos_n += 1;
            self.metrics.final_force = f_meas;

            for i in 0..3 {
                play.states[i] = dmp_step_halted(&play.states[i], &play.prims[i], self.dt, 1.0)
                    .map_err(|e| e.to_string())?;
            }
            play.orient_state =
                cdmp_step(&play.orient_state, &play.orient, self.dt).map_err(|e| e.to_string())?;
            profile_play.step(&profile, self.dt).map_err(|e| e.to_string())?;
            t_phase += self.dt;
        }
        // Steady-state error over the last 0.5 s of whatever portion of
        // the phase actually ran (the phase may hand over early).
        if let Some(&(t_end, _)) = err_trace.last() {
            for &(_, e) in err_trace.iter().filter(|(t, _)| *t >= t_end - 0.5) {
                self.metrics.steady_err_sum += e;
                self.metrics.steady_err_n += 1;
            }
        }
        Ok(())
    }

    fn run_breaking(&mut self, seg: &PhaseSegment) -> Result<(), String> {
        self.metrics.breaking = true;
        let mut play = Playback::new(seg, self.cfg.tau);
        let mut integral = ForceIntegralState::new();
        let duration = (play.tau() * 1.05).min(self.cfg.max_phase_time);
        let mut t_phase = 0.0;
        while t_phase < duration {
            let refs = self.refs(&play, &[1.0; 3]);
            integral = self.control_and_step(
                &SelectionState::motion_only(),
                &refs,
                &Vector6::zeros(),
                integral,
            )?;
            for i in 0..3 {
                play.states[i] = dmp_step_halted(&play.states[i], &play.prims[i], self.dt, 1.0)
                    .map_err(|e| e.to_string())?;
            }
            play.orient_state =
                cdmp_step(&play.orient_state, &play.orient, self.dt).map_err(|e| e.to_string())?;
            t_phase += self.dt;
        }
        Ok(())
    }
}

/// Execute one scenario. Simulation/controller failures yield a report
/// with `aborted` set rather than an error; only configuration problems
/// fail outright.
pub fn run_scenario(cfg: &ScenarioConfig, skill: &SegmentedSkill) -> Result<ScenarioOutcome, HarnessError> {
    cfg.validate()?;
    if skill.segments.is_empty() {
        return Err(HarnessError::Config("skill has no segments".into()));
    }
    let surface = cfg.surface.build()?;
    let start = Vector3::new(
        skill.segments[0].position[0].y0,
        skill.segments[0].position[1].y0,
        skill.segments[0].position[2].y0,
    );
    let world = SimWorld::new(
        ArmModel::floating(cfg.mass, cfg.mass, cfg.torque_limit),
        Some(surface),
        ArmState::floating_at(start),
        NoiseConfig { sigma: cfg.noise_sigma, seed: cfg.seed },
    );
    let (ee_pos, ee_quat) = world.ee_pose();
    let mut gains = HybridGains::new(cfg.gains.kp, cfg.gains.kd, cfg.gains.kf, cfg.gains.ki);
    gains.integral_window = cfg.gains.integral_window;
    gains.dt = 1.0 / cfg.rate;
    gains.ies_beta = cfg.gains.ies_beta;
    gains.ies_enabled = cfg.features.ies;

    let mut exec = Executor {
        cfg: cfg.clone(),
        world,
        gains,
        sensed: StepOutput {
            ee_pos,
            ee_quat,
            ee_vel: Vector6::zeros(),
            wrench_raw: Vector6::zeros(),
            wrench_filtered: Vector6::zeros(),
            in_contact: false,
        },
        metrics: Metrics::new(),
        log: Vec::new(),
        dt: 1.0 / cfg.rate,
    };

    let mut aborted = None;
    'phases: for seg in &skill.segments {
        let result = match seg.kind {
            PhaseKind::MakingContact => match exec.run_making(seg) {
                // No contact: the rest of the skill is contact-bound.
                Ok(false) => break 'phases,
                Ok(true) => Ok(()),
                Err(e) => Err(e),
            },
            PhaseKind::InContact => exec.run_in_contact(seg),
            PhaseKind::BreakingContact => exec.run_breaking(seg),
        };
        if let Err(e) = result {
            aborted = Some(e);
            break;
        }
    }

    let m = &exec.metrics;
    let surface_z = cfg.surface.effective_height();
    let report = RunReport {
        name: cfg.name.clone(),
        seed: cfg.seed,
        tau: cfg.tau.unwrap_or_else(|| skill.segments[0].position[0].tau),
        contact_achieved: m.contact_achieved,
        contact_time: m.contact_time,
        peak_impact_force: m.peak_impact_force,
        steady_force_error: if m.steady_err_n > 0 { m.steady_err_sum / m.steady_err_n as f64 } else { 0.0 },
        force_rms_error: if m.rms_n > 0 { (m.rms_sum / m.rms_n as f64).sqrt() } else { 0.0 },
        pos_err_xy: if m.pos_n > 0 { m.pos_xy_sum / m.pos_n as f64 } else { 0.0 },
        pos_err_l2: if m.pos_n > 0 { m.pos_l2_sum / m.pos_n as f64 } else { 0.0 },
        hover_height: exec.sensed.ee_pos.z - surface_z,
        xy_goal_error: m.xy_goal_error,
        making_force_error: m.making_force_error,
        final_force: m.final_force,
        loss_of_contact: m.loss_of_contact,
        contact_edges: m.contact_edges,
        aborted,
    };
    Ok(ScenarioOutcome { report, log: exec.log })
}
