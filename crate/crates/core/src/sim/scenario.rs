use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circular::OrientationDeg;
use crate::error::{Error, Result};
use crate::skeleton::OcclusionMode;

use super::geometry::PersonState;

/// One piece of the person's scripted motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Straight walk; faces the walking direction. Without a heading the
    /// person keeps the current one.
    Walk {
        speed_mps: f64,
        heading_deg: Option<f64>,
        duration_s: f64,
    },
    /// Rotation in place, positive counter-clockwise.
    Spin { rate_dps: f64, duration_s: f64 },
    Pause { duration_s: f64 },
}

impl Segment {
    pub fn duration_s(&self) -> f64 {
        match *self {
            Segment::Walk { duration_s, .. } | Segment::Spin { duration_s, .. } | Segment::Pause { duration_s } => {
                duration_s
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseLevels {
    /// Std of each position-measurement axis, metres.
    #[serde(default)]
    pub position_m: f64,
    /// Keypoint noise of synthesized skeletons, in body heights.
    #[serde(default)]
    pub skeleton: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub duration_s: f64,
    pub segments: Vec<Segment>,
    pub occlusion_mode: OcclusionMode,
    pub noise: NoiseLevels,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    speed_mps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heading_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_dps: Option<f64>,
    duration_s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    duration_s: f64,
    segments: Vec<RawSegment>,
    occlusion_mode: String,
    noise: NoiseLevels,
    seed: u64,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("scenario field `{field}`: {msg}"))
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field_error(field, "must be finite"))
    }
}

impl RawSegment {
    fn validate(&self, i: usize) -> Result<Segment> {
        let path = |f: &str| format!("segments[{i}].{f}");
        let need = |v: Option<f64>, f: &str| -> Result<f64> {
            let v = v.ok_or_else(|| field_error(&path(f), format!("required for kind {:?}", self.kind)))?;
            finite(&path(f), v)
        };
        let forbid = |v: Option<f64>, f: &str| -> Result<()> {
            match v {
                Some(_) => Err(field_error(&path(f), format!("not allowed for kind {:?}", self.kind))),
                None => Ok(()),
            }
        };
        let duration_s = finite(&path("duration_s"), self.duration_s)?;
        if duration_s <= 0.0 {
            return Err(field_error(&path("duration_s"), "must be positive"));
        }
        match self.kind.as_str() {
            "walk" => {
                forbid(self.rate_dps, "rate_dps")?;
                let speed_mps = need(self.speed_mps, "speed_mps")?;
                if speed_mps < 0.0 {
                    return Err(field_error(&path("speed_mps"), "must be >= 0"));
                }
                let heading_deg = self
                    .heading_deg
                    .map(|h| finite(&path("heading_deg"), h))
                    .transpose()?;
                Ok(Segment::Walk {
                    speed_mps,
                    heading_deg,
                    duration_s,
                })
            }
            "spin" => {
                forbid(self.speed_mps, "speed_mps")?;
                forbid(self.heading_deg, "heading_deg")?;
                Ok(Segment::Spin {
                    rate_dps: need(self.rate_dps, "rate_dps")?,
                    duration_s,
                })
            }
            "pause" => {
                forbid(self.speed_mps, "speed_mps")?;
                forbid(self.heading_deg, "heading_deg")?;
                forbid(self.rate_dps, "rate_dps")?;
                Ok(Segment::Pause { duration_s })
            }
            other => Err(field_error(
                &path("kind"),
                format!("unknown kind {other:?}; expected walk, spin or pause"),
            )),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text).map_err(|e| Error::json("scenario", e))?;
        let duration_s = finite("duration_s", raw.duration_s)?;
        if duration_s <= 0.0 {
            return Err(field_error("duration_s", "must be positive"));
        }
        if raw.segments.is_empty() {
            return Err(field_error("segments", "must not be empty"));
        }
        let segments = raw
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| s.validate(i))
            .collect::<Result<Vec<_>>>()?;
        let covered: f64 = segments.iter().map(Segment::duration_s).sum();
        if covered + 1e-9 < duration_s {
            return Err(field_error(
                "segments",
                format!("cover {covered} s but duration_s is {duration_s}"),
            ));
        }
        let occlusion_mode = raw
            .occlusion_mode
            .parse()
            .map_err(|e| field_error("occlusion_mode", e))?;
        for (f, v) in [("noise.position_m", raw.noise.position_m), ("noise.skeleton", raw.noise.skeleton)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(field_error(f, "must be a finite value >= 0"));
            }
        }
        Ok(Scenario {
            name: raw.name,
            duration_s,
            segments,
            occlusion_mode,
            noise: raw.noise,
            seed: raw.seed,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::json(path.display().to_string(), source),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawScenario {
            name: self.name.clone(),
            duration_s: self.duration_s,
            segments: self
                .segments
                .iter()
                .map(|s| match *s {
                    Segment::Walk {
                        speed_mps,
                        heading_deg,
                        duration_s,
                    } => RawSegment {
                        kind: "walk".into(),
                        speed_mps: Some(speed_mps),
                        heading_deg,
                        rate_dps: None,
                        duration_s,
                    },
                    Segment::Spin { rate_dps, duration_s } => RawSegment {
                        kind: "spin".into(),
                        speed_mps: None,
                        heading_deg: None,
                        rate_dps: Some(rate_dps),
                        duration_s,
                    },
                    Segment::Pause { duration_s } => RawSegment {
                        kind: "pause".into(),
                        speed_mps: None,
                        heading_deg: None,
                        rate_dps: None,
                        duration_s,
                    },
                })
                .collect(),
            occlusion_mode: self.occlusion_mode.to_string(),
            noise: self.noise,
            seed: self.seed,
        };
        serde_json::to_string_pretty(&raw).expect("scenario serializes") + "\n"
    }

    /// Initial heading: that of the first walk segment with one, else 0°.
    pub fn initial_heading(&self) -> f64 {
        for s in &self.segments {
            match *s {
                Segment::Walk {
                    heading_deg: Some(h), ..
                } => return h,
                Segment::Walk { .. } | Segment::Pause { .. } => continue,
                Segment::Spin { .. } => break,
            }
        }
        0.0
    }

    /// True person state at time `t` seconds. The person starts at the
    /// origin; past the last segment it stands still.
    pub fn person_at(&self, t: f64) -> PersonState {
        let (mut x, mut y) = (0.0f64, 0.0f64);
        let mut theta = self.initial_heading();
        let mut speed = 0.0;
        let mut start = 0.0;
        for s in &self.segments {
            if t <= start {
                break;
            }
            let dt = (t - start).min(s.duration_s());
            speed = 0.0;
            match *s {
                Segment::Walk {
                    speed_mps,
                    heading_deg,
                    ..
                } => {
                    if let Some(h) = heading_deg {
                        theta = h;
                    }
                    let (sn, cs) = theta.to_radians().sin_cos();
                    x += speed_mps * cs * dt;
                    y += speed_mps * sn * dt;
                    speed = speed_mps;
                }
                Segment::Spin { rate_dps, .. } => theta += rate_dps * dt,
                Segment::Pause { .. } => {}
            }
            start += s.duration_s();
        }
        if t > start {
            speed = 0.0;
        }
        PersonState {
            x,
            y,
            theta: OrientationDeg::wrap(theta),
            speed,
        }
    }
}
