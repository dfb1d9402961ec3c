//! Accuracy reports split by occlusion mode.

use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circular::{acc_at, mae, OrientationDeg};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;
use crate::skeleton::Sample;

/// Label of the row that pools every sample.
pub const ALL_ROW: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub mode: String,
    pub n: usize,
    pub acc5: f64,
    pub acc15: f64,
    pub acc30: f64,
    pub mae: f64,
}

impl EvalRow {
    fn compute<T: Real>(mode: String, pred: &[OrientationDeg<T>], gt: &[OrientationDeg<T>]) -> Result<Self> {
        Ok(EvalRow {
            mode,
            n: pred.len(),
            acc5: acc_at(pred, gt, T::of(5.0))?,
            acc15: acc_at(pred, gt, T::of(15.0))?,
            acc30: acc_at(pred, gt, T::of(30.0))?,
            mae: mae(pred, gt)?,
        })
    }
}

/// One row per occlusion mode, in order of first appearance, then a pooled
/// row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn row(&self, mode: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode,n,acc5,acc15,acc30,mae\n");
        for r in &self.rows {
            writeln!(s, "{},{},{},{},{},{}", r.mode, r.n, r.acc5, r.acc15, r.acc30, r.mae)
                .expect("writing to a String cannot fail");
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<10} {:>7} {:>8} {:>8} {:>8} {:>8}\n",
            "mode", "n", "Acc(5)", "Acc(15)", "Acc(30)", "MAE"
        );
        for r in &self.rows {
            writeln!(
                s,
                "{:<10} {:>7} {:>8.3} {:>8.3} {:>8.3} {:>8.2}",
                r.mode, r.n, r.acc5, r.acc15, r.acc30, r.mae
            )
            .expect("writing to a String cannot fail");
        }
        s
    }
}

pub fn evaluate<T: Real>(samples: &[Sample<T>], pred: &[OrientationDeg<T>]) -> Result<EvalReport> {
    if samples.len() != pred.len() {
        return Err(Error::invalid(format!(
            "{} samples but {} predictions",
            samples.len(),
            pred.len()
        )));
    }
    if samples.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    let mut modes: Vec<String> = Vec::new();
    for s in samples {
        let m = s.mode.to_string();
        if !modes.contains(&m) {
            modes.push(m);
        }
    }
    let mut rows = Vec::with_capacity(modes.len() + 1);
    for m in modes {
        let (p, g): (Vec<_>, Vec<_>) = samples
            .iter()
            .zip(pred)
            .filter(|(s, _)| s.mode.to_string() == m)
            .map(|(s, p)| (*p, s.gt_orientation))
            .unzip();
        rows.push(EvalRow::compute(m, &p, &g)?);
    }
    let gt: Vec<_> = samples.iter().map(|s| s.gt_orientation).collect();
    rows.push(EvalRow::compute(ALL_ROW.to_string(), pred, &gt)?);
    Ok(EvalReport { rows })
}

/// Predictions that copy the ground truth.
pub fn gt_echo<T: Real>(samples: &[Sample<T>]) -> Vec<OrientationDeg<T>> {
    samples.iter().map(|s| s.gt_orientation).collect()
}

/// Independent uniform draws on `[0, 360)`.
pub fn uniform_guess<T: Real>(n: usize, seed: u64) -> Vec<OrientationDeg<T>> {
    let mut r = rng::stream(seed, "uniform", 0);
    (0..n)
        .map(|_| OrientationDeg::wrap(T::of(r.random_range(0.0..360.0))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{generate, ModeMix};

    #[test]
    fn echo_is_perfect_and_rows_cover_modes() {
        let mix: ModeMix = "full:0.5,lower:0.5".parse().unwrap();
        let data = generate(200, &mix, 0.0, 1).unwrap();
        let report = evaluate(&data, &gt_echo(&data)).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.row("full").is_some() && report.row("lower").is_some());
        let all = report.row(ALL_ROW).unwrap();
        assert_eq!((all.n, all.acc5, all.mae), (200, 1.0, 0.0));
        assert_eq!(report.to_csv().lines().count(), 4);
        assert!(report.to_table().contains("Acc(30)"));
    }

    #[test]
    fn uniform_guess_mae_is_near_ninety() {
        // E|circ error| of independent uniforms is 90; std of the mean over
        // 10k draws is about 0.52.
        let data = generate(10_000, &ModeMix::single(crate::skeleton::OcclusionMode::Full), 0.0, 2).unwrap();
        let report = evaluate(&data, &uniform_guess(data.len(), 9)).unwrap();
        let m = report.row(ALL_ROW).unwrap().mae;
        assert!((m - 90.0).abs() < 3.0, "mae {m}");
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let data = generate(3, &ModeMix::single(crate::skeleton::OcclusionMode::Full), 0.0, 2).unwrap();
        assert!(evaluate(&data, &gt_echo(&data)[..2]).is_err());
    }
}
