//! Receding-horizon grid search over constant unicycle commands.

use serde::{Deserialize, Serialize};

use crate::circular::{circ_diff, OrientationDeg};
use crate::error::{Error, Result};

use super::geometry::{GoalPose, RobotState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotLimits {
    /// Speed bound in both directions, m/s.
    pub v_max: f64,
    /// Turn rate bound, rad/s.
    pub omega_max: f64,
}

impl Default for RobotLimits {
    fn default() -> Self {
        RobotLimits {
            v_max: 1.5,
            omega_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Rollout length in control steps.
    pub horizon: usize,
    /// Grid sizes; odd so that zero is a candidate.
    pub v_samples: usize,
    pub omega_samples: usize,
    /// Weight of squared terminal position error, per m².
    pub position_weight: f64,
    /// Weight of squared terminal heading error, per degree².
    pub heading_weight: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            horizon: 10,
            v_samples: 41,
            omega_samples: 41,
            position_weight: 1.0,
            heading_weight: 1e-6,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self, limits: &RobotLimits) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("controller horizon must be positive".into()));
        }
        for (name, n) in [("v_samples", self.v_samples), ("omega_samples", self.omega_samples)] {
            if n % 2 == 0 {
                return Err(Error::Config(format!("{name} must be odd, got {n}")));
            }
        }
        let weights_ok = self.position_weight >= 0.0 && self.heading_weight >= 0.0;
        let limits_ok = limits.v_max >= 0.0 && limits.omega_max >= 0.0;
        if !(weights_ok && limits_ok) {
            return Err(Error::Config("controller weights and robot limits must be >= 0".into()));
        }
        Ok(())
    }
}

/// `n` evenly spaced values on `[-max, max]`; the middle one is exactly 0.
fn grid(max: f64, n: usize) -> impl Iterator<Item = f64> {
    let half = (n / 2) as f64;
    (0..n).map(move |i| if n == 1 { 0.0 } else { max * (i as f64 - half) / half })
}

/// Terminal cost of holding `(v, omega)` for `horizon` steps of `dt`.
pub fn rollout_cost(
    robot: &RobotState,
    goal: &GoalPose,
    v: f64,
    omega: f64,
    dt: f64,
    config: &ControllerConfig,
) -> f64 {
    let (mut x, mut y) = (robot.x, robot.y);
    let mut h = robot.heading.radians();
    for _ in 0..config.horizon {
        x += v * h.cos() * dt;
        y += v * h.sin() * dt;
        h += omega * dt;
    }
    let pos = (x - goal.x).powi(2) + (y - goal.y).powi(2);
    let head = circ_diff(OrientationDeg::from_radians(h), goal.theta);
    config.position_weight * pos + config.heading_weight * head * head
}

/// The `(v, omega)` grid point with the lowest rollout cost; ties go to the
/// lowest grid index (v-major).
pub fn controller_step(
    robot: &RobotState,
    goal: &GoalPose,
    dt: f64,
    limits: &RobotLimits,
    config: &ControllerConfig,
) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for v in grid(limits.v_max, config.v_samples) {
        for w in grid(limits.omega_max, config.omega_samples) {
            let c = rollout_cost(robot, goal, v, w, dt, config);
            if c < best.0 {
                best = (c, v, w);
            }
        }
    }
    (best.1, best.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(v: f64) -> OrientationDeg<f64> {
        OrientationDeg::new(v).unwrap()
    }

    #[test]
    fn grid_is_symmetric_with_exact_zero() {
        let g: Vec<f64> = grid(1.5, 41).collect();
        assert_eq!(g.len(), 41);
        assert_eq!((g[0], g[20], g[40]), (-1.5, 0.0, 1.5));
        for i in 0..41 {
            assert_eq!(g[i], -g[40 - i]);
        }
        assert_eq!(grid(2.0, 1).collect::<Vec<_>>(), vec![0.0]);
    }

    #[test]
    fn at_goal_stays_put() {
        let r = RobotState {
            x: 0.4,
            y: -1.0,
            heading: deg(30.0),
            ..RobotState::default()
        };
        let g = GoalPose {
            x: 0.4,
            y: -1.0,
            theta: deg(30.0),
        };
        let cmd = controller_step(&r, &g, 0.05, &RobotLimits::default(), &ControllerConfig::default());
        assert_eq!(cmd, (0.0, 0.0));
    }

    #[test]
    fn goal_ahead_drives_straight() {
        let g = GoalPose {
            x: 1.0,
            y: 0.0,
            theta: deg(0.0),
        };
        let (v, w) = controller_step(
            &RobotState::default(),
            &g,
            0.05,
            &RobotLimits::default(),
            &ControllerConfig::default(),
        );
        assert!(v > 0.0);
        assert_eq!(w, 0.0);
    }

    #[test]
    fn commands_respect_limits() {
        let limits = RobotLimits {
            v_max: 0.3,
            omega_max: 0.2,
        };
        let g = GoalPose {
            x: -5.0,
            y: 7.0,
            theta: deg(200.0),
        };
        let (v, w) = controller_step(&RobotState::default(), &g, 0.05, &limits, &ControllerConfig::default());
        assert!(v.abs() <= 0.3 && w.abs() <= 0.2);
    }

    #[test]
    fn goal_behind_and_facing_away() {
        // Expected commands come from an independent brute-force rollout
        // over the same grid.
        let g = GoalPose {
            x: -1.0,
            y: 0.0,
            theta: deg(180.0),
        };
        let r = RobotState::default();
        let limits = RobotLimits::default();
        let cmd = controller_step(&r, &g, 0.05, &limits, &ControllerConfig::default());
        assert_eq!(cmd, (-1.5, -0.1));
        let heading_first = ControllerConfig {
            heading_weight: 1e-4,
            ..ControllerConfig::default()
        };
        let (v, w) = controller_step(&r, &g, 0.05, &limits, &heading_first);
        assert_eq!((v, w.abs()), (-1.5, limits.omega_max));
    }

    #[test]
    fn even_grid_is_rejected() {
        let c = ControllerConfig {
            v_samples: 40,
            ..ControllerConfig::default()
        };
        assert!(c.validate(&RobotLimits::default()).is_err());
    }
}
