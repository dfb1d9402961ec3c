//! Event-driven closed-loop simulation and trajectory scoring.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circular::OrientationDeg;
use crate::error::{Error, Result};
use crate::gate::TemporalGate;
use crate::model::{predict, ModelParams};
use crate::rng;
use crate::scalar::Real;
use crate::skeleton::synthesize;

use super::controller::{controller_step, ControllerConfig, RobotLimits};
use super::geometry::{cv_orientation, step_robot, GoalPose, PersonState, RobotState, Task};
use super::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub position_rate_hz: f64,
    pub orientation_rate_hz: f64,
    pub control_rate_hz: f64,
    /// Following distance `d`, metres.
    pub follow_distance_m: f64,
    /// Minimum displacement per position interval for a velocity heading.
    pub cv_eps_m: f64,
    /// Position measurements spanned by the person velocity estimate.
    pub velocity_window: usize,
    /// Time span of the heading-rate estimate; 0 disables heading
    /// prediction.
    pub heading_rate_window_s: f64,
    pub gate_window: usize,
    /// Frames before this time are left out of the ATE.
    pub ate_transient_s: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub horizon: usize,
    pub v_samples: usize,
    pub omega_samples: usize,
    pub position_weight: f64,
    pub heading_weight: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let limits = RobotLimits::default();
        let ctl = ControllerConfig::default();
        SimConfig {
            position_rate_hz: 10.0,
            orientation_rate_hz: 25.0,
            control_rate_hz: 20.0,
            follow_distance_m: 1.0,
            cv_eps_m: 0.01,
            velocity_window: 5,
            heading_rate_window_s: 1.0,
            gate_window: crate::gate::GATE_WINDOW,
            ate_transient_s: 2.0,
            v_max: limits.v_max,
            omega_max: limits.omega_max,
            horizon: ctl.horizon,
            v_samples: ctl.v_samples,
            omega_samples: ctl.omega_samples,
            position_weight: ctl.position_weight,
            heading_weight: ctl.heading_weight,
        }
    }
}

impl SimConfig {
    pub fn limits(&self) -> RobotLimits {
        RobotLimits {
            v_max: self.v_max,
            omega_max: self.omega_max,
        }
    }

    pub fn controller(&self) -> ControllerConfig {
        ControllerConfig {
            horizon: self.horizon,
            v_samples: self.v_samples,
            omega_samples: self.omega_samples,
            position_weight: self.position_weight,
            heading_weight: self.heading_weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, hz) in [
            ("position_rate_hz", self.position_rate_hz),
            ("orientation_rate_hz", self.orientation_rate_hz),
            ("control_rate_hz", self.control_rate_hz),
        ] {
            if !(hz > 0.0 && hz <= 1e6) {
                return Err(Error::Config(format!("{name} must be in (0, 1e6], got {hz}")));
            }
        }
        if !(self.follow_distance_m > 0.0 && self.follow_distance_m.is_finite()) {
            return Err(Error::Config("follow_distance_m must be positive".into()));
        }
        if !(self.cv_eps_m > 0.0) {
            return Err(Error::Config("cv_eps_m must be positive".into()));
        }
        if self.velocity_window < 2 || self.gate_window == 0 {
            return Err(Error::Config(
                "velocity_window must be >= 2 and gate_window >= 1".into(),
            ));
        }
        if !(self.heading_rate_window_s >= 0.0 && self.heading_rate_window_s.is_finite()) {
            return Err(Error::Config("heading_rate_window_s must be >= 0".into()));
        }
        if !(self.ate_transient_s >= 0.0) {
            return Err(Error::Config("ate_transient_s must be >= 0".into()));
        }
        self.controller().validate(&self.limits())
    }
}

fn period_us(hz: f64) -> u64 {
    (1e6 / hz).round() as u64
}

/// Name of an orientation source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    CvBaseline,
    Model,
    GroundTruth,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::CvBaseline,
        EstimatorKind::Model,
        EstimatorKind::GroundTruth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::CvBaseline => "cv_baseline",
            EstimatorKind::Model => "model",
            EstimatorKind::GroundTruth => "ground_truth",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = EstimatorKind::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!(
                    "unknown estimator {s:?}; valid estimators: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Orientation source plugged into the simulation.
#[derive(Debug, Clone, Copy)]
pub enum Estimator<'a, T> {
    /// Heading of the measured velocity, held while the person stands.
    CvBaseline,
    /// Network on a synthesized skeleton, through the temporal gate.
    Model(&'a ModelParams<T>),
    GroundTruth,
}

impl<T> Estimator<'_, T> {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Estimator::CvBaseline => EstimatorKind::CvBaseline,
            Estimator::Model(_) => EstimatorKind::Model,
            Estimator::GroundTruth => EstimatorKind::GroundTruth,
        }
    }
}

/// State logged at every control tick, before the command is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub person: PersonState,
    pub robot: RobotState,
    /// Ideal goal computed from the true person pose.
    pub goal: GoalPose,
    pub est_theta: OrientationDeg<f64>,
    /// Confidence of the estimate when the estimator reports one.
    pub conf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub scenario: String,
    pub estimator: EstimatorKind,
    pub task: Task,
    pub frames: Vec<Frame>,
    /// Position measurement events processed.
    pub position_events: usize,
    /// Orientation estimate events processed.
    pub orientation_events: usize,
    pub ate_m: f64,
}

/// Root-mean-square distance between paired positions.
pub fn ate(robot: &[(f64, f64)], goal: &[(f64, f64)]) -> Result<f64> {
    if robot.len() != goal.len() {
        return Err(Error::invalid(format!(
            "trajectory lengths differ: {} vs {}",
            robot.len(),
            goal.len()
        )));
    }
    if robot.is_empty() {
        return Err(Error::invalid("ATE needs at least one frame"));
    }
    let sq: f64 = robot
        .iter()
        .zip(goal)
        .map(|(r, g)| (r.0 - g.0).powi(2) + (r.1 - g.1).powi(2))
        .sum();
    Ok((sq / robot.len() as f64).sqrt())
}

/// ATE over the frames at or after `transient_s`.
pub fn frames_ate(frames: &[Frame], transient_s: f64) -> Result<f64> {
    let (r, g): (Vec<_>, Vec<_>) = frames
        .iter()
        .filter(|f| f.t >= transient_s)
        .map(|f| ((f.robot.x, f.robot.y), (f.goal.x, f.goal.y)))
        .unzip();
    ate(&r, &g)
}

#[derive(Clone, Copy)]
enum Event {
    Position,
    Orientation,
    Control,
}

/// Runs one closed-loop simulation. The robot starts on the true ideal
/// goal; events on the three clocks are processed in time order, position
/// before orientation before control at equal times.
pub fn run_scenario<T: Real>(
    scenario: &Scenario,
    estimator: Estimator<'_, T>,
    task: Task,
    config: &SimConfig,
    seed: u64,
) -> Result<SimRun> {
    config.validate()?;
    if let Estimator::Model(p) = estimator {
        p.validate()?;
    }
    let limits = config.limits();
    let ctl = config.controller();
    let d = config.follow_distance_m;
    let end_us = (scenario.duration_s * 1e6).round() as u64;
    let periods = [
        period_us(config.position_rate_hz),
        period_us(config.orientation_rate_hz),
        period_us(config.control_rate_hz),
    ];
    let dt = periods[2] as f64 / 1e6;
    let mut next = [0u64; 3];

    let person0 = scenario.person_at(0.0);
    let g0 = task.goal(&person0, d);
    let mut robot = RobotState {
        x: g0.x,
        y: g0.y,
        heading: g0.theta,
        v: 0.0,
        omega: 0.0,
    };
    let mut pos_rng = rng::stream(seed, "sim.position", 0);
    let mut positions: VecDeque<(f64, f64, f64)> = VecDeque::with_capacity(config.velocity_window);
    let mut gate = TemporalGate::<T>::new(config.gate_window)?;
    let mut estimate: Option<(OrientationDeg<f64>, Option<f64>)> = match estimator {
        Estimator::CvBaseline => Some((person0.theta, None)),
        _ => None,
    };
    // Unwrapped estimated heading at recent control ticks.
    let mut headings: VecDeque<(f64, f64)> = VecDeque::new();
    let mut frames = Vec::new();
    let mut counts = [0usize; 3];

    loop {
        let (k, &t_us) = next
            .iter()
            .enumerate()
            .min_by_key(|(i, t)| (**t, *i))
            .expect("three clocks");
        if t_us > end_us {
            break;
        }
        next[k] += periods[k];
        counts[k] += 1;
        let t = t_us as f64 / 1e6;
        let person = scenario.person_at(t);
        let event = [Event::Position, Event::Orientation, Event::Control][k];

        match event {
            Event::Position => {
                let nx: f64 = StandardNormal.sample(&mut pos_rng);
                let ny: f64 = StandardNormal.sample(&mut pos_rng);
                let sigma = scenario.noise.position_m;
                let m = (person.x + sigma * nx, person.y + sigma * ny, t);
                if let (Estimator::CvBaseline, Some(prev)) = (estimator, positions.back()) {
                    let held = estimate.map_or(person0.theta, |e| e.0);
                    let theta = cv_orientation((prev.0, prev.1), (m.0, m.1), held, config.cv_eps_m);
                    estimate = Some((theta, None));
                }
                if positions.len() == config.velocity_window {
                    positions.pop_front();
                }
                positions.push_back(m);
            }
            Event::Orientation => match estimator {
                Estimator::GroundTruth => estimate = Some((person.theta, Some(1.0))),
                Estimator::Model(params) => {
                    let frame = (counts[1] - 1) as u64;
                    let sample = synthesize(
                        person.theta.cast::<T>(),
                        scenario.occlusion_mode,
                        T::of(scenario.noise.skeleton),
                        rng::derive_seed(seed, "sim.skeleton", frame),
                    );
                    let (theta, conf) = predict(params, &sample.skeleton)?;
                    gate.push(theta, conf);
                    let (theta, conf) = gate.best()?;
                    estimate = Some((theta.cast(), Some(conf.get().to_f64_lossy())));
                }
                Estimator::CvBaseline => {}
            },
            Event::Control => {
                let (est_theta, conf) = estimate.unwrap_or((person0.theta, None));
                let newest = *positions.back().expect("position clock fires first");
                let oldest = *positions.front().expect("non-empty");
                let span = newest.2 - oldest.2;
                let (vx, vy) = if span > 0.0 {
                    ((newest.0 - oldest.0) / span, (newest.1 - oldest.1) / span)
                } else {
                    (0.0, 0.0)
                };
                let unwrapped = match headings.back() {
                    Some(&(_, prev)) => prev + wrap_180(est_theta.value() - prev),
                    None => est_theta.value(),
                };
                headings.push_back((t, unwrapped));
                while headings.len() > 1 && t - headings[0].0 > config.heading_rate_window_s {
                    headings.pop_front();
                }
                let (t0, h0) = headings[0];
                let rate = if t > t0 { (unwrapped - h0) / (t - t0) } else { 0.0 };

                // Predict where the goal will be when the rollout ends.
                let horizon_s = ctl.horizon as f64 * dt;
                let lead = (t - newest.2) + horizon_s;
                let predicted = PersonState {
                    x: newest.0 + vx * lead,
                    y: newest.1 + vy * lead,
                    theta: OrientationDeg::wrap(est_theta.value() + rate * horizon_s),
                    speed: vx.hypot(vy),
                };
                let target = task.goal(&predicted, d);
                frames.push(Frame {
                    t,
                    person,
                    robot,
                    goal: task.goal(&person, d),
                    est_theta,
                    conf,
                });
                let (v, w) = controller_step(&robot, &target, dt, &limits, &ctl);
                robot = step_robot(&robot, v, w, dt);
            }
        }
    }

    let ate_m = frames_ate(&frames, config.ate_transient_s)?;
    Ok(SimRun {
        scenario: scenario.name.clone(),
        estimator: estimator.kind(),
        task,
        frames,
        position_events: counts[0],
        orientation_events: counts[1],
        ate_m,
    })
}

/// Maps degrees into `[-180, 180)`.
fn wrap_180(deg: f64) -> f64 {
    (deg + 180.0).rem_euclid(360.0) - 180.0
}

pub const TRAJECTORY_HEADER: &str = "t,px,py,ptheta,rx,ry,rtheta,gx,gy,gtheta,est_theta,conf";

pub fn trajectory_csv(frames: &[Frame]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for f in frames {
        let conf = f.conf.map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            f.t,
            f.person.x,
            f.person.y,
            f.person.theta.value(),
            f.robot.x,
            f.robot.y,
            f.robot.heading.value(),
            f.goal.x,
            f.goal.y,
            f.goal.theta.value(),
            f.est_theta.value(),
            conf
        )
        .expect("writing to a String cannot fail");
    }
    s
}

/// One entry of the comparison summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub estimator: EstimatorKind,
    pub task: Task,
    pub ate_m: f64,
    pub frames: usize,
}

impl From<&SimRun> for RunSummary {
    fn from(r: &SimRun) -> Self {
        RunSummary {
            scenario: r.scenario.clone(),
            estimator: r.estimator,
            task: r.task,
            ate_m: r.ate_m,
            frames: r.frames.len(),
        }
    }
}
