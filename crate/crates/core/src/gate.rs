//! Reliability scoring: precision-recall sweeps over a per-prediction score
//! and the sliding-window temporal gate.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circular::{circ_diff, OrientationDeg, OrientationDist};
use crate::error::{Error, Result};
use crate::model::Confidence;
use crate::scalar::Real;

/// Errors above this many degrees make a prediction unreliable.
pub const RELIABILITY_THRESHOLD_DEG: f64 = 20.0;
pub const GATE_WINDOW: usize = 5;

/// `circ_diff(pred, gt) <= threshold_deg`.
pub fn reliability_label<T: Real>(pred: OrientationDeg<T>, gt: OrientationDeg<T>, threshold_deg: T) -> bool {
    circ_diff(pred, gt) <= threshold_deg
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPrediction<T> {
    pub pred: OrientationDeg<T>,
    pub gt: OrientationDeg<T>,
    score: T,
    pub frame: u64,
}

impl<T: Real> ScoredPrediction<T> {
    pub fn new(pred: OrientationDeg<T>, gt: OrientationDeg<T>, score: T, frame: u64) -> Result<Self> {
        if !(score >= T::zero() && score <= T::one()) {
            return Err(Error::invalid(format!("score {score} not in [0, 1]")));
        }
        Ok(ScoredPrediction { pred, gt, score, frame })
    }

    pub fn score(&self) -> T {
        self.score
    }

    pub fn reliable(&self) -> bool {
        reliability_label(self.pred, self.gt, T::of(RELIABILITY_THRESHOLD_DEG))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// One point per distinct score, highest threshold first. Items with
/// `score >= threshold` are predicted reliable, so equal scores enter
/// together.
pub fn pr_curve<T: Real>(items: &[ScoredPrediction<T>]) -> Result<Vec<PrPoint>> {
    let labeled: Vec<(f64, bool)> = items
        .iter()
        .map(|it| (it.score.to_f64_lossy(), it.reliable()))
        .collect();
    pr_curve_labeled(&labeled)
}

/// [`pr_curve`] on precomputed `(score, reliable)` pairs.
pub fn pr_curve_labeled(items: &[(f64, bool)]) -> Result<Vec<PrPoint>> {
    if items.is_empty() {
        return Err(Error::invalid("pr_curve needs at least one prediction"));
    }
    let total_reliable = items.iter().filter(|(_, r)| *r).count();
    if total_reliable == 0 {
        return Err(Error::invalid("pr_curve needs at least one reliable prediction"));
    }
    let mut sorted = items.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut curve = Vec::new();
    let (mut admitted, mut hits) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == t {
            admitted += 1;
            hits += sorted[i].1 as usize;
            i += 1;
        }
        curve.push(PrPoint {
            threshold: t,
            precision: hits as f64 / admitted as f64,
            recall: hits as f64 / total_reliable as f64,
        });
    }
    Ok(curve)
}

/// Largest recall among points with precision exactly 1, or 0.
pub fn max_recall_at_full_precision(curve: &[PrPoint]) -> f64 {
    curve
        .iter()
        .filter(|p| p.precision == 1.0)
        .map(|p| p.recall)
        .fold(0.0, f64::max)
}

pub fn max_prob_score<T: Real>(dist: &OrientationDist<T>) -> T {
    dist.max_prob()
}

/// The most confident orientation in `history`; among equal confidences the
/// latest entry wins.
pub fn temporal_gate<T: Real>(history: &[(OrientationDeg<T>, Confidence<T>)]) -> Result<OrientationDeg<T>> {
    most_confident(history.iter()).map(|b| b.0)
}

fn most_confident<'a, T: Real>(
    entries: impl Iterator<Item = &'a (OrientationDeg<T>, Confidence<T>)>,
) -> Result<(OrientationDeg<T>, Confidence<T>)> {
    let mut best: Option<&(OrientationDeg<T>, Confidence<T>)> = None;
    for entry in entries {
        if best.is_none_or(|b| entry.1.get() >= b.1.get()) {
            best = Some(entry);
        }
    }
    best.copied().ok_or(Error::NoEstimate)
}

/// Sliding window over the last `capacity` estimates.
#[derive(Debug, Clone)]
pub struct TemporalGate<T> {
    capacity: usize,
    window: VecDeque<(OrientationDeg<T>, Confidence<T>)>,
}

impl<T: Real> TemporalGate<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("temporal gate window must hold at least one frame"));
        }
        Ok(TemporalGate {
            capacity,
            window: VecDeque::with_capacity(capacity),
        })
    }

    pub fn push(&mut self, orientation: OrientationDeg<T>, confidence: Confidence<T>) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back((orientation, confidence));
    }

    pub fn current(&self) -> Result<OrientationDeg<T>> {
        self.best().map(|b| b.0)
    }

    /// The selected entry together with its confidence.
    pub fn best(&self) -> Result<(OrientationDeg<T>, Confidence<T>)> {
        most_confident(self.window.iter())
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }
}

impl<T: Real> Default for TemporalGate<T> {
    fn default() -> Self {
        TemporalGate {
            capacity: GATE_WINDOW,
            window: VecDeque::with_capacity(GATE_WINDOW),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Confidence,
    MaxProb,
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreKind::Confidence => "confidence",
            ScoreKind::MaxProb => "max_prob",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrSummary {
    pub max_recall_at_p100: f64,
    pub n: usize,
    pub score_kind: ScoreKind,
}

pub fn pr_csv(curve: &[PrPoint]) -> String {
    let mut s = String::from("threshold,precision,recall\n");
    for p in curve {
        writeln!(s, "{},{},{}", p.threshold, p.precision, p.recall).expect("writing to a String cannot fail");
    }
    s
}

pub fn write_pr_report(dir: &Path, curve: &[PrPoint], summary: &PrSummary) -> Result<()> {
    let csv = dir.join(format!("pr_{}.csv", summary.score_kind));
    std::fs::write(&csv, pr_csv(curve)).map_err(|e| Error::io(&csv, e))?;
    let json = dir.join(format!("summary_{}.json", summary.score_kind));
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::json("summary", e))?;
    std::fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::{circular_gaussian, BinIndex, GaussianSigma};

    fn deg(v: f64) -> OrientationDeg<f64> {
        crate::circular::normalize_deg(v).unwrap()
    }

    fn conf(c: f64) -> Confidence<f64> {
        Confidence::new(c).unwrap()
    }

    #[test]
    fn reliability_boundary() {
        assert!(reliability_label(deg(0.0), deg(20.0), 20.0));
        assert!(!reliability_label(deg(0.0), deg(21.0), 20.0));
        assert!(reliability_label(deg(350.0), deg(10.0), 20.0));
    }

    #[test]
    fn scores_outside_unit_interval_are_rejected() {
        assert!(ScoredPrediction::new(deg(0.0), deg(0.0), 1.5, 0).is_err());
        assert!(ScoredPrediction::new(deg(0.0), deg(0.0), f64::NAN, 0).is_err());
    }

    #[test]
    fn curve_edge_cases() {
        assert!(pr_curve_labeled(&[]).is_err());
        assert!(pr_curve_labeled(&[(0.5, false)]).is_err());

        let all = pr_curve_labeled(&[(0.3, true), (0.9, true), (0.1, true)]).unwrap();
        assert!(all.iter().all(|p| p.precision == 1.0));

        let perfect = pr_curve_labeled(&[(0.9, true), (0.8, true), (0.2, false), (0.1, false)]).unwrap();
        assert!(perfect.iter().any(|p| p.precision == 1.0 && p.recall == 1.0));
        assert_eq!(max_recall_at_full_precision(&perfect), 1.0);

        let top_bad = pr_curve_labeled(&[(0.9, false), (0.8, true)]).unwrap();
        assert_eq!(max_recall_at_full_precision(&top_bad), 0.0);
    }

    #[test]
    fn ties_form_one_step() {
        let c = pr_curve_labeled(&[(0.5, true), (0.5, false), (0.2, true)]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].precision, 0.5);
        assert_eq!(c[0].recall, 0.5);
    }

    #[test]
    fn max_prob_examples() {
        let one = OrientationDist::<f64>::one_hot(BinIndex::new(4).unwrap());
        assert_eq!(max_prob_score(&one), 1.0);
        assert!((max_prob_score(&OrientationDist::<f64>::uniform()) - 1.0 / 72.0).abs() < 1e-15);
        let g = circular_gaussian(BinIndex::new(10).unwrap(), GaussianSigma::new(3.0f64).unwrap());
        assert_eq!(max_prob_score(&g), g.probs()[10]);
    }

    #[test]
    fn gate_examples() {
        let w = [(deg(10.0), conf(0.2)), (deg(50.0), conf(0.9)), (deg(90.0), conf(0.3))];
        assert_eq!(temporal_gate(&w).unwrap(), deg(50.0));
        assert_eq!(temporal_gate(&w[..1]).unwrap(), deg(10.0));
        let tie = [
            (deg(1.0), conf(0.1)),
            (deg(2.0), conf(0.9)),
            (deg(3.0), conf(0.1)),
            (deg(4.0), conf(0.9)),
        ];
        assert_eq!(temporal_gate(&tie).unwrap(), deg(4.0));
        assert!(matches!(temporal_gate::<f64>(&[]), Err(Error::NoEstimate)));
    }

    #[test]
    fn sliding_window_forgets_old_frames() {
        let mut g = TemporalGate::<f64>::default();
        assert!(matches!(g.current(), Err(Error::NoEstimate)));
        g.push(deg(100.0), conf(0.99));
        for i in 0..5 {
            g.push(deg(i as f64), conf(0.1));
        }
        assert_eq!(g.len(), 5);
        assert_eq!(g.current().unwrap(), deg(4.0));
    }

    proptest::proptest! {
        #[test]
        fn pr_curve_shape(items in proptest::collection::vec((0u8..6, proptest::bool::ANY), 1..40)) {
            let mut items: Vec<(f64, bool)> = items.into_iter().map(|(s, r)| (s as f64 / 5.0, r)).collect();
            items[0].1 = true;
            let curve = pr_curve_labeled(&items).unwrap();
            for w in curve.windows(2) {
                proptest::prop_assert!(w[0].threshold > w[1].threshold);
                proptest::prop_assert!(w[0].recall <= w[1].recall);
            }
            proptest::prop_assert_eq!(curve.last().unwrap().recall, 1.0);
            let best = max_recall_at_full_precision(&curve);
            proptest::prop_assert!((0.0..=1.0).contains(&best));
        }
    }
}
