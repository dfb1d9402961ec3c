//! Synthetic 23-joint skeletons observed at a known yaw.
//!
//! A fixed 3D template is rotated about the vertical axis, projected
//! orthographically onto the image plane, perturbed, occluded and finally
//! min-max normalized to the bounding box of its visible joints.

mod dataset;
mod heatmap;

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::circular::OrientationDeg;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Real;

pub use dataset::{
    gen_dataset, generate, header_path, read_dataset, read_header, write_dataset, DatasetHeader,
    ModeMix, SampleRecord, CONVENTION,
};
pub use heatmap::{make_heatmaps, HeatmapGrid, HeatmapSet};

pub const NUM_JOINTS: usize = 23;
/// Number of COCO body joints; the remaining six are foot joints.
pub const NUM_BODY_JOINTS: usize = 17;

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "nose",
    "left_eye",
    "right_eye",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_big_toe",
    "left_small_toe",
    "left_heel",
    "right_big_toe",
    "right_small_toe",
    "right_heel",
];

/// (left, right) index pairs mirrored across the sagittal plane.
pub const LEFT_RIGHT_PAIRS: [(usize, usize); 11] = [
    (1, 2),
    (3, 4),
    (5, 6),
    (7, 8),
    (9, 10),
    (11, 12),
    (13, 14),
    (15, 16),
    (17, 20),
    (18, 21),
    (19, 22),
];

pub const LEFT_HIP: usize = 11;

/// Template joint in the body frame, meters: `lateral` points to the
/// person's left, `forward` along the facing direction, `up` from the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateJoint {
    pub lateral: f64,
    pub forward: f64,
    pub up: f64,
}

const fn tj(lateral: f64, forward: f64, up: f64) -> TemplateJoint {
    TemplateJoint {
        lateral,
        forward,
        up,
    }
}

// Left-side joints; the right side is the mirror image.
const LEFT_SIDE: [(usize, TemplateJoint); 11] = [
    (1, tj(0.035, 0.08, 1.65)),  // eye
    (3, tj(0.075, 0.00, 1.62)),  // ear
    (5, tj(0.19, 0.00, 1.42)),   // shoulder
    (7, tj(0.23, -0.03, 1.15)),  // elbow, slightly behind the torso
    (9, tj(0.22, 0.12, 1.00)),   // wrist, forearm bent forward
    (11, tj(0.10, 0.00, 0.92)),  // hip
    (13, tj(0.11, 0.03, 0.50)),  // knee
    (15, tj(0.11, 0.00, 0.08)),  // ankle
    (17, tj(0.09, 0.18, 0.00)),  // big toe
    (18, tj(0.15, 0.15, 0.00)),  // small toe
    (19, tj(0.11, -0.06, 0.00)), // heel
];

const NOSE: TemplateJoint = tj(0.0, 0.10, 1.60);

/// Template height used to express noise relative to body size.
pub const TEMPLATE_HEIGHT: f64 = 1.65;

/// Upright, bilaterally symmetric template, COCO-17 order plus foot joints.
pub fn template_skeleton() -> [TemplateJoint; NUM_JOINTS] {
    let mut joints = [NOSE; NUM_JOINTS];
    for (left, j) in LEFT_SIDE {
        let right = LEFT_RIGHT_PAIRS
            .iter()
            .find(|(l, _)| *l == left)
            .map(|(_, r)| *r)
            .expect("every left joint has a right partner");
        joints[left] = j;
        joints[right] = tj(-j.lateral, j.forward, j.up);
    }
    joints
}

/// Height separating lower from upper body. Joints at exactly this height
/// (the hips) belong to the lower body.
pub fn hip_height() -> f64 {
    template_skeleton()[LEFT_HIP].up
}

pub fn is_lower_body(joint: usize) -> bool {
    template_skeleton()[joint].up <= hip_height()
}

/// Image-plane projection of the template at yaw `theta`, in meters, with
/// image y pointing down. At 0° the person faces the camera, so their left
/// side appears on the image right.
pub fn project<T: Real>(theta: OrientationDeg<T>) -> [[T; 2]; NUM_JOINTS] {
    let (s, c) = theta.radians().sin_cos();
    let mut out = [[T::zero(); 2]; NUM_JOINTS];
    for (o, j) in out.iter_mut().zip(template_skeleton()) {
        o[0] = T::of(j.lateral) * c + T::of(j.forward) * s;
        o[1] = -T::of(j.up);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OcclusionMode {
    Full,
    /// Only joints at or below hip height are observed.
    LowerOnly,
    /// Only joints above hip height are observed.
    UpperOnly,
    /// Each joint is hidden independently with probability `p`.
    RandomDrop(f64),
}

impl OcclusionMode {
    pub fn random_drop(p: f64) -> Result<Self> {
        if (0.0..1.0).contains(&p) {
            Ok(OcclusionMode::RandomDrop(p))
        } else {
            Err(Error::invalid(format!("drop probability {p} not in [0, 1)")))
        }
    }
}

impl fmt::Display for OcclusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OcclusionMode::Full => f.write_str("full"),
            OcclusionMode::LowerOnly => f.write_str("lower"),
            OcclusionMode::UpperOnly => f.write_str("upper"),
            OcclusionMode::RandomDrop(p) => write!(f, "drop={p}"),
        }
    }
}

impl FromStr for OcclusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(OcclusionMode::Full),
            "lower" | "lower_only" => Ok(OcclusionMode::LowerOnly),
            "upper" | "upper_only" => Ok(OcclusionMode::UpperOnly),
            other => match other.strip_prefix("drop=") {
                Some(p) => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad drop probability in {other:?}")))?;
                    OcclusionMode::random_drop(p)
                }
                None => Err(Error::invalid(format!(
                    "unknown occlusion mode {other:?} (expected full, lower, upper or drop=P)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Joint<T> {
    pub x: T,
    pub y: T,
    pub visible: bool,
}

/// 23 normalized joints. Hidden joints carry zero coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton<T> {
    joints: [Joint<T>; NUM_JOINTS],
}

impl<T: Real> Skeleton<T> {
    pub fn new(mut joints: [Joint<T>; NUM_JOINTS]) -> Result<Self> {
        if !joints.iter().any(|j| j.visible) {
            return Err(Error::invalid("skeleton has no visible joint"));
        }
        for j in joints.iter_mut().filter(|j| !j.visible) {
            j.x = T::zero();
            j.y = T::zero();
        }
        Ok(Skeleton { joints })
    }

    #[inline]
    pub fn joints(&self) -> &[Joint<T>; NUM_JOINTS] {
        &self.joints
    }

    pub fn visible_count(&self) -> usize {
        self.joints.iter().filter(|j| j.visible).count()
    }

    pub fn cast<U: Real>(&self) -> Skeleton<U> {
        Skeleton {
            joints: self.joints.map(|j| Joint {
                x: U::of(j.x.to_f64_lossy()),
                y: U::of(j.y.to_f64_lossy()),
                visible: j.visible,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub skeleton: Skeleton<T>,
    pub gt_orientation: OrientationDeg<T>,
    pub mode: OcclusionMode,
    pub id: u64,
}

impl<T: Real> Sample<T> {
    pub fn cast<U: Real>(&self) -> Sample<U> {
        Sample {
            skeleton: self.skeleton.cast(),
            gt_orientation: self.gt_orientation.cast(),
            mode: self.mode,
            id: self.id,
        }
    }
}

fn visibility(mode: OcclusionMode, rng: &mut Rng) -> [bool; NUM_JOINTS] {
    let mut vis = [true; NUM_JOINTS];
    match mode {
        OcclusionMode::Full => {}
        OcclusionMode::LowerOnly => {
            for (i, v) in vis.iter_mut().enumerate() {
                *v = is_lower_body(i);
            }
        }
        OcclusionMode::UpperOnly => {
            for (i, v) in vis.iter_mut().enumerate() {
                *v = !is_lower_body(i);
            }
        }
        OcclusionMode::RandomDrop(p) => loop {
            for v in vis.iter_mut() {
                *v = rng.random::<f64>() >= p;
            }
            if vis.iter().any(|v| *v) {
                break;
            }
        },
    }
    vis
}

/// Renders one sample. `noise_sigma` is the standard deviation of the
/// additive joint noise as a fraction of body height, applied before
/// normalization. Deterministic in all arguments.
pub fn synthesize<T: Real>(
    theta: OrientationDeg<T>,
    mode: OcclusionMode,
    noise_sigma: T,
    seed: u64,
) -> Sample<T> {
    let mut rng = Rng::seed_from_u64(seed);
    let mut pts = project(theta);
    let scale = noise_sigma * T::of(TEMPLATE_HEIGHT);
    for p in pts.iter_mut() {
        // Draw for every joint so the stream layout does not depend on mode.
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        p[0] += scale * T::of(nx);
        p[1] += scale * T::of(ny);
    }
    let vis = visibility(mode, &mut rng);
    Sample {
        skeleton: normalize_to_visible_box(&pts, &vis),
        gt_orientation: theta,
        mode,
        id: 0,
    }
}

/// Noise-free, unoccluded skeleton at `theta`; the heatmap target source.
pub fn clean_skeleton<T: Real>(theta: OrientationDeg<T>) -> Skeleton<T> {
    normalize_to_visible_box(&project(theta), &[true; NUM_JOINTS])
}

fn normalize_to_visible_box<T: Real>(
    pts: &[[T; 2]; NUM_JOINTS],
    vis: &[bool; NUM_JOINTS],
) -> Skeleton<T> {
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    for (p, _) in pts.iter().zip(vis).filter(|(_, v)| **v) {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let mut joints = [Joint::default(); NUM_JOINTS];
    for ((j, p), v) in joints.iter_mut().zip(pts).zip(vis) {
        if !*v {
            continue;
        }
        let mut xy = [T::zero(); 2];
        for a in 0..2 {
            let extent = hi[a] - lo[a];
            xy[a] = if extent > T::of(1e-9) {
                (p[a] - lo[a]) / extent
            } else {
                T::of(0.5)
            };
        }
        *j = Joint {
            x: xy[0],
            y: xy[1],
            visible: true,
        };
    }
    Skeleton::new(joints).expect("visibility mask always keeps one joint")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::normalize_deg;
    use proptest::prelude::*;

    fn deg(v: f64) -> OrientationDeg<f64> {
        normalize_deg(v).unwrap()
    }

    #[test]
    fn template_is_symmetric_and_upright() {
        let t = template_skeleton();
        for (l, r) in LEFT_RIGHT_PAIRS {
            assert_eq!(t[l].lateral, -t[r].lateral);
            assert_eq!(t[l].forward, t[r].forward);
            assert_eq!(t[l].up, t[r].up);
        }
        assert!(t[0].up > t[11].up);
        assert_eq!(t[19].up, 0.0);
        assert_eq!(t[22].up, 0.0);
        let max_foot = t[15..].iter().map(|j| j.up).fold(0.0, f64::max);
        assert!(max_foot < hip_height());
        assert!(t[5].up > hip_height());
    }

    #[test]
    fn frontal_view_is_symmetric() {
        let s = synthesize(deg(0.0), OcclusionMode::Full, 0.0, 1);
        let j = s.skeleton.joints();
        assert!((j[5].x + j[6].x - 1.0).abs() < 1e-12);
        assert!(j[5].x > j[6].x, "left shoulder on image right when facing camera");
    }

    #[test]
    fn side_view_foreshortens_shoulders() {
        let front = project(deg(0.0));
        let side = project(deg(90.0));
        assert!((side[5][0] - side[6][0]).abs() < (front[5][0] - front[6][0]).abs());
        let sn = synthesize(deg(90.0), OcclusionMode::Full, 0.0, 1);
        let fn_ = synthesize(deg(0.0), OcclusionMode::Full, 0.0, 1);
        let w = |s: &Sample<f64>| (s.skeleton.joints()[5].x - s.skeleton.joints()[6].x).abs();
        assert!(w(&sn) < w(&fn_));
    }

    #[test]
    fn lower_only_keeps_hips_and_below() {
        let s = synthesize(deg(0.0), OcclusionMode::LowerOnly, 0.0, 3);
        let j = s.skeleton.joints();
        for i in 0..=10 {
            assert!(!j[i].visible, "{} should be hidden", JOINT_NAMES[i]);
            assert_eq!((j[i].x, j[i].y), (0.0, 0.0));
        }
        for i in 11..NUM_JOINTS {
            assert!(j[i].visible, "{} should be visible", JOINT_NAMES[i]);
        }
    }

    #[test]
    fn visible_counts_partition() {
        let count = |m| synthesize(deg(30.0), m, 0.01, 9).skeleton.visible_count();
        assert_eq!(count(OcclusionMode::Full), NUM_JOINTS);
        assert_eq!(
            count(OcclusionMode::LowerOnly) + count(OcclusionMode::UpperOnly),
            NUM_JOINTS
        );
    }

    #[test]
    fn random_drop_always_leaves_a_joint() {
        for seed in 0..200 {
            let s = synthesize(deg(10.0), OcclusionMode::RandomDrop(0.95), 0.0, seed);
            assert!(s.skeleton.visible_count() >= 1);
        }
        assert!(OcclusionMode::random_drop(1.0).is_err());
    }

    #[test]
    fn mode_strings_round_trip() {
        for m in [
            OcclusionMode::Full,
            OcclusionMode::LowerOnly,
            OcclusionMode::UpperOnly,
            OcclusionMode::RandomDrop(0.25),
        ] {
            assert_eq!(m.to_string().parse::<OcclusionMode>().unwrap(), m);
        }
        assert!("sideways".parse::<OcclusionMode>().is_err());
    }

    #[test]
    fn skeleton_requires_a_visible_joint() {
        assert!(Skeleton::<f64>::new([Joint::default(); NUM_JOINTS]).is_err());
    }

    proptest! {
        #[test]
        fn synthesis_is_pure(theta in 0f64..360.0, seed in any::<u64>(), noise in 0f64..0.1) {
            let a = synthesize(deg(theta), OcclusionMode::RandomDrop(0.3), noise, seed);
            let b = synthesize(deg(theta), OcclusionMode::RandomDrop(0.3), noise, seed);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn turning_around_swaps_left_and_right(theta in 0f64..360.0) {
            let a = project(deg(theta));
            let b = project(deg(theta + 180.0));
            // Mirror about the vertical axis: lateral offsets change sign.
            for (l, r) in LEFT_RIGHT_PAIRS {
                let da = a[l][0] - a[r][0];
                let db = b[l][0] - b[r][0];
                prop_assert!((da + db).abs() < 1e-12);
            }
            let sa = synthesize(deg(theta), OcclusionMode::Full, 0.0, 0);
            let sb = synthesize(deg(theta + 180.0), OcclusionMode::Full, 0.0, 0);
            for (l, r) in LEFT_RIGHT_PAIRS {
                let ja = sa.skeleton.joints();
                let jb = sb.skeleton.joints();
                prop_assert!((ja[l].x - (1.0 - jb[l].x)).abs() < 1e-9);
                prop_assert!((ja[r].x - (1.0 - jb[r].x)).abs() < 1e-9);
            }
        }

        #[test]
        fn coordinates_stay_in_unit_box(theta in 0f64..360.0, seed in any::<u64>()) {
            let s = synthesize(deg(theta), OcclusionMode::RandomDrop(0.5), 0.05, seed);
            for j in s.skeleton.joints().iter().filter(|j| j.visible) {
                prop_assert!((0.0..=1.0).contains(&j.x) && (0.0..=1.0).contains(&j.y));
            }
        }
    }
}
