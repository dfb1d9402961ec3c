//! Circular angle arithmetic, 72-bin label encoding and accuracy metrics.
//!
//! Angle convention: 0° means the person faces the camera, angles grow
//! counter-clockwise when viewed from above. Angles are in degrees in
//! `[0, 360)`. Bin `i` covers `[5i - 2.5, 5i + 2.5)` degrees with wrap-around.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const NUM_BINS: usize = 72;
pub const BIN_WIDTH_DEG: f64 = 360.0 / NUM_BINS as f64;

/// Yaw angle in degrees, always normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct OrientationDeg<T>(T);

impl<T: Real> OrientationDeg<T> {
    pub fn new(raw: T) -> Result<Self> {
        normalize_deg(raw)
    }

    /// Normalizes without the finiteness check. Non-finite input yields a
    /// non-finite angle; callers must feed finite values.
    pub(crate) fn wrap(raw: T) -> Self {
        let full = T::of(360.0);
        let mut r = raw % full;
        if r < T::zero() {
            r += full;
        }
        // `-tiny % 360 + 360` rounds to exactly 360.
        if r >= full {
            r = T::zero();
        }
        OrientationDeg(r)
    }

    pub fn from_radians(rad: T) -> Self {
        Self::wrap(rad.to_degrees())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    #[inline]
    pub fn radians(self) -> T {
        self.0.to_radians()
    }

    pub fn cast<U: Real>(self) -> OrientationDeg<U> {
        OrientationDeg::<U>::wrap(U::of(self.0.to_f64_lossy()))
    }
}

impl<T: Real> fmt::Display for OrientationDeg<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Index of one of the 72 orientation bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinIndex(usize);

impl BinIndex {
    pub fn new(index: usize) -> Result<Self> {
        if index < NUM_BINS {
            Ok(BinIndex(index))
        } else {
            Err(Error::invalid(format!(
                "bin index {index} outside 0..{NUM_BINS}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Bin shifted by `k` positions around the circle.
    pub fn rotate(self, k: usize) -> Self {
        BinIndex((self.0 + k) % NUM_BINS)
    }
}

/// Standard deviation of the circular Gaussian label, in bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSigma<T>(T);

impl<T: Real> GaussianSigma<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if sigma > T::zero() && sigma.is_finite() {
            Ok(GaussianSigma(sigma))
        } else {
            Err(Error::invalid(format!("sigma must be positive, got {sigma}")))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

impl Default for GaussianSigma<f64> {
    fn default() -> Self {
        GaussianSigma(3.0)
    }
}

/// Probability vector over the 72 orientation bins.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationDist<T> {
    probs: [T; NUM_BINS],
}

impl<T: Real> OrientationDist<T> {
    /// Validates non-negativity and unit mass (within `T::SUM_TOL`).
    pub fn new(probs: [T; NUM_BINS]) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !(**p >= T::zero()) || !p.is_finite()) {
            return Err(Error::invalid(format!(
                "distribution entry {bad} is negative or non-finite"
            )));
        }
        let total: f64 = probs.iter().map(|p| p.to_f64_lossy()).sum();
        if (total - 1.0).abs() > T::SUM_TOL {
            return Err(Error::invalid(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        Ok(OrientationDist { probs })
    }

    pub fn from_slice(probs: &[T]) -> Result<Self> {
        let arr: [T; NUM_BINS] = probs.try_into().map_err(|_| {
            Error::invalid(format!(
                "distribution needs {NUM_BINS} entries, got {}",
                probs.len()
            ))
        })?;
        Self::new(arr)
    }

    /// Builds from entries already known to form a distribution (softmax
    /// outputs, convex mixtures).
    pub(crate) fn from_array_unchecked(probs: [T; NUM_BINS]) -> Self {
        debug_assert!(probs.iter().all(|p| *p >= T::zero()));
        OrientationDist { probs }
    }

    pub fn uniform() -> Self {
        OrientationDist {
            probs: [T::one() / T::of(NUM_BINS as f64); NUM_BINS],
        }
    }

    pub fn one_hot(bin: BinIndex) -> Self {
        let mut probs = [T::zero(); NUM_BINS];
        probs[bin.get()] = T::one();
        OrientationDist { probs }
    }

    #[inline]
    pub fn probs(&self) -> &[T; NUM_BINS] {
        &self.probs
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> BinIndex {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate().skip(1) {
            if *p > self.probs[best] {
                best = i;
            }
        }
        BinIndex(best)
    }

    pub fn max_prob(&self) -> T {
        self.probs[self.argmax().get()]
    }
}

pub fn normalize_deg<T: Real>(raw: T) -> Result<OrientationDeg<T>> {
    if !raw.is_finite() {
        return Err(Error::InvalidAngle(raw.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(OrientationDeg::wrap(raw))
}

pub fn deg_to_bin<T: Real>(theta: OrientationDeg<T>) -> BinIndex {
    let half = T::of(BIN_WIDTH_DEG / 2.0);
    let idx = ((theta.value() + half) / T::of(BIN_WIDTH_DEG)).floor();
    BinIndex(idx.to_usize().unwrap_or(0) % NUM_BINS)
}

pub fn bin_to_deg<T: Real>(bin: BinIndex) -> OrientationDeg<T> {
    OrientationDeg(T::of(bin.get() as f64 * BIN_WIDTH_DEG))
}

/// Smallest absolute angular difference, in `[0, 180]`.
pub fn circ_diff<T: Real>(a: OrientationDeg<T>, b: OrientationDeg<T>) -> T {
    let d = (a.value() - b.value()).abs();
    d.min(T::of(360.0) - d)
}

/// Circular distance between two bins, in `[0, 36]`.
pub fn circ_bin_dist(i: BinIndex, l: BinIndex) -> usize {
    let d = i.get().abs_diff(l.get());
    d.min(NUM_BINS - d)
}

/// Discrete Gaussian over bins, centered on `label` with wrap-around distance,
/// renormalized to unit mass.
///
/// Each entry depends only on its circular distance to the label, and the
/// normalizer is summed by distance class, so rotating the label rotates the
/// vector bit-for-bit.
pub fn circular_gaussian<T: Real>(label: BinIndex, sigma: GaussianSigma<T>) -> OrientationDist<T> {
    let two_var = T::of(2.0) * sigma.get() * sigma.get();
    let half = NUM_BINS / 2;
    let mut by_dist = [T::zero(); NUM_BINS / 2 + 1];
    for (d, g) in by_dist.iter_mut().enumerate() {
        let d = T::of(d as f64);
        *g = (-(d * d) / two_var).exp();
    }
    let mut total = by_dist[0] + by_dist[half];
    for g in &by_dist[1..half] {
        total += T::of(2.0) * *g;
    }
    let mut probs = [T::zero(); NUM_BINS];
    for (i, p) in probs.iter_mut().enumerate() {
        *p = by_dist[circ_bin_dist(BinIndex(i), label)] / total;
    }
    OrientationDist { probs }
}

/// Angle of the most probable bin.
pub fn decode_orientation<T: Real>(dist: &OrientationDist<T>) -> OrientationDeg<T> {
    bin_to_deg(dist.argmax())
}

fn check_pairs<T>(pred: &[T], gt: &[T]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::invalid("metric needs at least one prediction"));
    }
    if pred.len() != gt.len() {
        return Err(Error::invalid(format!(
            "{} predictions but {} ground-truth angles",
            pred.len(),
            gt.len()
        )));
    }
    Ok(())
}

/// Fraction of predictions whose circular error is strictly below `n` degrees.
pub fn acc_at<T: Real>(pred: &[OrientationDeg<T>], gt: &[OrientationDeg<T>], n: T) -> Result<f64> {
    check_pairs(pred, gt)?;
    let hits = pred
        .iter()
        .zip(gt)
        .filter(|(p, g)| circ_diff(**p, **g) < n)
        .count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Mean circular absolute error in degrees.
pub fn mae<T: Real>(pred: &[OrientationDeg<T>], gt: &[OrientationDeg<T>]) -> Result<f64> {
    check_pairs(pred, gt)?;
    let total: f64 = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| circ_diff(*p, *g).to_f64_lossy())
        .sum();
    Ok(total / pred.len() as f64)
}
