use serde::{Deserialize, Serialize};

use crate::circular::OrientationDeg;

/// Ground-plane pose of the followed person. `theta` is the facing
/// direction in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PersonState {
    pub x: f64,
    pub y: f64,
    pub theta: OrientationDeg<f64>,
    pub speed: f64,
}

/// Differential-drive robot pose and its current command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub heading: OrientationDeg<f64>,
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GoalPose {
    pub x: f64,
    pub y: f64,
    pub theta: OrientationDeg<f64>,
}

/// Which side of the person the robot keeps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Behind the person, facing the same way.
    Backward,
    /// In front of the person, facing them.
    Forward,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Backward, Task::Forward];

    pub fn goal(self, person: &PersonState, d: f64) -> GoalPose {
        match self {
            Task::Backward => backward_goal(person, d),
            Task::Forward => forward_goal(person, d),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Backward => "backward",
            Task::Forward => "forward",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "backward" => Ok(Task::Backward),
            "forward" => Ok(Task::Forward),
            _ => Err(crate::Error::Config(format!(
                "unknown task {s:?}; expected one of: backward, forward"
            ))),
        }
    }
}

/// `d` metres behind the person, same heading.
pub fn backward_goal(person: &PersonState, d: f64) -> GoalPose {
    let (s, c) = person.theta.radians().sin_cos();
    GoalPose {
        x: person.x - d * c,
        y: person.y - d * s,
        theta: person.theta,
    }
}

/// `d` metres ahead of the person, facing back at them.
pub fn forward_goal(person: &PersonState, d: f64) -> GoalPose {
    let (s, c) = person.theta.radians().sin_cos();
    GoalPose {
        x: person.x + d * c,
        y: person.y + d * s,
        theta: OrientationDeg::wrap(person.theta.value() + 180.0),
    }
}

/// Heading of the displacement `prev -> curr`, or `prev_theta` when the
/// person moved less than `eps` metres.
pub fn cv_orientation(
    prev: (f64, f64),
    curr: (f64, f64),
    prev_theta: OrientationDeg<f64>,
    eps: f64,
) -> OrientationDeg<f64> {
    let (dx, dy) = (curr.0 - prev.0, curr.1 - prev.1);
    if dx.hypot(dy) >= eps {
        OrientationDeg::from_radians(dy.atan2(dx))
    } else {
        prev_theta
    }
}

/// One forward-Euler step of the unicycle model.
pub fn step_robot(robot: &RobotState, v: f64, omega: f64, dt: f64) -> RobotState {
    let h = robot.heading.radians();
    RobotState {
        x: robot.x + v * h.cos() * dt,
        y: robot.y + v * h.sin() * dt,
        heading: if dt == 0.0 {
            robot.heading
        } else {
            OrientationDeg::from_radians(h + omega * dt)
        },
        v,
        omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn deg(v: f64) -> OrientationDeg<f64> {
        OrientationDeg::new(v).unwrap()
    }

    fn person(x: f64, y: f64, t: f64) -> PersonState {
        PersonState {
            x,
            y,
            theta: deg(t),
            speed: 0.0,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn goal_examples() {
        let g = backward_goal(&person(0.0, 0.0, 0.0), 1.0);
        assert_eq!((g.x, g.y, g.theta.value()), (-1.0, 0.0, 0.0));
        let g = backward_goal(&person(2.0, 3.0, 90.0), 1.0);
        assert!(close(g.x, 2.0) && close(g.y, 2.0) && g.theta.value() == 90.0);

        let g = forward_goal(&person(0.0, 0.0, 0.0), 1.0);
        assert_eq!((g.x, g.y, g.theta.value()), (1.0, 0.0, 180.0));
        let g = forward_goal(&person(0.0, 0.0, 270.0), 1.0);
        assert!(close(g.x, 0.0) && close(g.y, -1.0) && g.theta.value() == 90.0);
    }

    #[test]
    fn cv_examples() {
        let hold = deg(135.0);
        assert_eq!(cv_orientation((0.0, 0.0), (1.0, 0.0), hold, 0.01).value(), 0.0);
        assert_eq!(cv_orientation((0.0, 0.0), (0.0, 1.0), hold, 0.01).value(), 90.0);
        assert_eq!(cv_orientation((0.0, 0.0), (0.0, 0.0), hold, 0.01), hold);
        assert_eq!(cv_orientation((0.0, 0.0), (0.0, -0.5), hold, 0.01).value(), 270.0);
    }

    #[test]
    fn unicycle_examples() {
        let r = RobotState::default();
        let s = step_robot(&r, 1.0, 0.0, 1.0);
        assert_eq!((s.x, s.y, s.heading.value()), (1.0, 0.0, 0.0));
        let s = step_robot(&r, 0.0, FRAC_PI_2, 1.0);
        assert_eq!((s.x, s.y), (0.0, 0.0));
        assert!(close(s.heading.value(), 90.0));
        let r = RobotState {
            x: 0.3,
            y: -2.0,
            heading: deg(77.0),
            ..RobotState::default()
        };
        let s = step_robot(&r, 0.5, 1.0, 0.0);
        assert_eq!((s.x, s.y, s.heading), (r.x, r.y, r.heading));
    }

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
        }
        assert!("sideways".parse::<Task>().is_err());
    }
}
