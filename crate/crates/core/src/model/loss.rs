//! Training objective: confidence-interpolated orientation loss, confidence
//! penalty and heatmap regression.
//!
//! `total = L_p' + lambda * L_c + L_kpt`, where `L_c = -ln c` pushes
//! confidence up and `L_p' = sum (c * p_hat + (1 - c) * p - p)^2` lets the
//! network buy down orientation error by lowering `c`.

use serde::{Deserialize, Serialize};

use crate::circular::{OrientationDist, NUM_BINS};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::skeleton::HeatmapSet;

/// Confidence is kept this far from 0 and 1.
pub const CONFIDENCE_EPS: f64 = 1e-7;
pub const LAMBDA_MIN: f64 = 1e-4;
pub const LAMBDA_MAX: f64 = 10.0;

/// Predicted confidence in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Confidence<T>(T);

impl<T: Real> Confidence<T> {
    pub fn new(c: T) -> Result<Self> {
        if c > T::zero() && c < T::one() {
            Ok(Confidence(c))
        } else {
            Err(Error::invalid(format!("confidence {c} not in (0, 1)")))
        }
    }

    /// Clamps into `[eps, 1 - eps]`.
    pub fn clamped(c: T) -> Self {
        let eps = T::of(CONFIDENCE_EPS);
        Confidence(c.max(eps).min(T::one() - eps))
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

/// Per-sample or averaged loss components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_p_prime: f64,
    pub l_c: f64,
    pub l_kpt: f64,
    pub lambda: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(l_p_prime: f64, l_c: f64, l_kpt: f64, lambda: f64) -> Self {
        LossBreakdown {
            l_p_prime,
            l_c,
            l_kpt,
            lambda,
            total: l_p_prime + lambda * l_c + l_kpt,
        }
    }
}

/// `p' = c * p_hat + (1 - c) * p`
pub fn interp_dist<T: Real>(
    p_hat: &OrientationDist<T>,
    p: &OrientationDist<T>,
    c: T,
) -> OrientationDist<T> {
    let mut out = [T::zero(); NUM_BINS];
    for ((o, a), b) in out.iter_mut().zip(p_hat.probs()).zip(p.probs()) {
        *o = c * *a + (T::one() - c) * *b;
    }
    OrientationDist::from_array_unchecked(out)
}

/// Squared distance between the interpolated and target distributions.
pub fn loss_orientation<T: Real>(p_prime: &OrientationDist<T>, p: &OrientationDist<T>) -> T {
    p_prime
        .probs()
        .iter()
        .zip(p.probs())
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum()
}

pub fn loss_conf<T: Real>(c: Confidence<T>) -> T {
    -c.get().ln()
}

/// Mean squared error over joints and pixels.
pub fn loss_kpt<T: Real>(h_hat: &HeatmapSet<T>, h: &HeatmapSet<T>) -> Result<T> {
    if h_hat.grid != h.grid || h_hat.num_joints != h.num_joints || h_hat.data.len() != h.data.len() {
        return Err(Error::invalid(format!(
            "heatmap shapes differ: {}x{}x{} vs {}x{}x{}",
            h_hat.num_joints,
            h_hat.grid.height,
            h_hat.grid.width,
            h.num_joints,
            h.grid.height,
            h.grid.width
        )));
    }
    Ok(mse(&h_hat.data, &h.data))
}

pub(crate) fn mse<T: Real>(a: &[T], b: &[T]) -> T {
    let sum: T = a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum();
    sum / T::of(a.len() as f64)
}

/// Multiplicative lambda schedule: grow by `1 + gamma` while the mean
/// confidence penalty exceeds its budget `beta`, shrink otherwise. The
/// result is clamped to `[1e-4, 10]`.
pub fn update_lambda(lambda: f64, l_c_batch_mean: f64, beta: f64, gamma: f64) -> f64 {
    let next = if l_c_batch_mean > beta {
        lambda * (1.0 + gamma)
    } else {
        lambda / (1.0 + gamma)
    };
    next.clamp(LAMBDA_MIN, LAMBDA_MAX)
}
