//! JSON-lines sample files and their sidecar headers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circular::{normalize_deg, OrientationDeg};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

use super::{synthesize, Joint, OcclusionMode, Sample, Skeleton, NUM_JOINTS};

pub const CONVENTION: &str = "0deg-facing-camera-ccw";

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: u64,
    pub theta_deg: f64,
    pub mode: String,
    pub joints: Vec<(f64, f64, u8)>,
}

impl SampleRecord {
    pub fn from_sample<T: Real>(s: &Sample<T>) -> Self {
        SampleRecord {
            id: s.id,
            theta_deg: s.gt_orientation.value().to_f64_lossy(),
            mode: s.mode.to_string(),
            joints: s
                .skeleton
                .joints()
                .iter()
                .map(|j| (j.x.to_f64_lossy(), j.y.to_f64_lossy(), j.visible as u8))
                .collect(),
        }
    }

    pub fn to_sample<T: Real>(&self) -> Result<Sample<T>> {
        if self.joints.len() != NUM_JOINTS {
            return Err(Error::invalid(format!(
                "sample {} has {} joints, expected {NUM_JOINTS}",
                self.id,
                self.joints.len()
            )));
        }
        let mut joints = [Joint::default(); NUM_JOINTS];
        for (j, (x, y, v)) in joints.iter_mut().zip(&self.joints) {
            if *v > 1 {
                return Err(Error::invalid(format!(
                    "sample {}: visibility flag must be 0 or 1, got {v}",
                    self.id
                )));
            }
            *j = Joint {
                x: T::of(*x),
                y: T::of(*y),
                visible: *v == 1,
            };
        }
        Ok(Sample {
            skeleton: Skeleton::new(joints)?,
            gt_orientation: normalize_deg(T::of(self.theta_deg))?,
            mode: self.mode.parse()?,
            id: self.id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub convention: String,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl DatasetHeader {
    pub fn new(noise_sigma: f64, seed: u64) -> Self {
        DatasetHeader {
            version: 1,
            convention: CONVENTION.to_string(),
            noise_sigma,
            seed,
        }
    }
}

/// Weighted occlusion modes, e.g. parsed from `full:0.5,lower:0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMix(Vec<(OcclusionMode, f64)>);

impl ModeMix {
    pub fn new(entries: Vec<(OcclusionMode, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("mode mix is empty"));
        }
        if let Some((m, w)) = entries.iter().find(|(_, w)| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("weight {w} for mode {m} must be positive")));
        }
        Ok(ModeMix(entries))
    }

    pub fn single(mode: OcclusionMode) -> Self {
        ModeMix(vec![(mode, 1.0)])
    }

    pub fn entries(&self) -> &[(OcclusionMode, f64)] {
        &self.0
    }
}

impl FromStr for ModeMix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (mode, weight) = match part.rsplit_once(':') {
                Some((m, w)) => {
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad weight in {part:?}")))?;
                    (m, w)
                }
                None => (part, 1.0),
            };
            entries.push((mode.parse()?, weight));
        }
        ModeMix::new(entries)
    }
}

impl std::fmt::Display for ModeMix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(m, w)| format!("{m}:{w}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Draws `n` samples: yaw uniform on `[0, 360)`, mode by weight, each
/// sample rendered from its own derived seed.
pub fn generate(n: usize, mix: &ModeMix, noise_sigma: f64, seed: u64) -> Result<Vec<Sample<f64>>> {
    if n == 0 {
        return Err(Error::invalid("dataset size must be positive"));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::invalid(format!("noise sigma {noise_sigma} must be >= 0")));
    }
    let weights = WeightedIndex::new(mix.entries().iter().map(|(_, w)| *w))
        .map_err(|e| Error::invalid(format!("mode weights: {e}")))?;
    let mut draw = rng::stream(seed, "dataset", 0);
    let samples = (0..n as u64)
        .map(|id| {
            let theta = OrientationDeg::wrap(draw.random_range(0.0..360.0));
            let mode = mix.entries()[weights.sample(&mut draw)].0;
            let mut s = synthesize(theta, mode, noise_sigma, rng::derive_seed(seed, "sample", id));
            s.id = id;
            s
        })
        .collect();
    Ok(samples)
}

/// `d.jsonl` -> `d.header.json`
pub fn header_path(path: &Path) -> PathBuf {
    path.with_extension("header.json")
}

pub fn write_dataset<T: Real>(path: &Path, samples: &[Sample<T>], header: &DatasetHeader) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in samples {
        serde_json::to_writer(&mut w, &SampleRecord::from_sample(s))
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let hpath = header_path(path);
    let text = serde_json::to_string_pretty(header).map_err(|e| Error::json("header", e))?;
    std::fs::write(&hpath, text + "\n").map_err(|e| Error::io(hpath, e))
}

/// Generates and writes a dataset plus its header; returns the samples.
pub fn gen_dataset(
    path: &Path,
    n: usize,
    mix: &ModeMix,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<Sample<f64>>> {
    let samples = generate(n, mix, noise_sigma, seed)?;
    write_dataset(path, &samples, &DatasetHeader::new(noise_sigma, seed))?;
    Ok(samples)
}

pub fn read_dataset<T: Real>(path: &Path) -> Result<Vec<Sample<T>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), lineno + 1), e))?;
        out.push(rec.to_sample()?);
    }
    if out.is_empty() {
        return Err(Error::invalid(format!("{} contains no samples", path.display())));
    }
    Ok(out)
}

pub fn read_header(path: &Path) -> Result<DatasetHeader> {
    let hpath = header_path(path);
    let text = std::fs::read_to_string(&hpath).map_err(|e| Error::io(&hpath, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(hpath.display().to_string(), e))
}
