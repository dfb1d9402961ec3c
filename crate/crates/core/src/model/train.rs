//! Mini-batch AdamW training with the dynamic confidence weight.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::circular::{acc_at, mae, GaussianSigma, OrientationDeg};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;
use crate::skeleton::{HeatmapGrid, Sample, NUM_JOINTS};

use super::loss::{update_lambda, LossBreakdown};
use super::network::{backward_batch, forward_batch, input_matrix, mean_breakdown, predict_batch, Targets};
use super::params::{ModelConfig, ModelParams};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub num_joints: usize,
    pub grid_width: usize,
    pub grid_height: usize,
    /// Heatmap bump standard deviation, pixels.
    pub sigma_hm: f64,
    pub learning_rate: f64,
    /// Decoupled weight decay coefficient.
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Orientation label spread, in bins.
    pub sigma: f64,
    pub lambda_init: f64,
    /// Target mean confidence penalty (beta).
    pub lambda_budget: f64,
    /// Multiplicative lambda step (gamma).
    pub lambda_gamma: f64,
    /// Tail fraction of the dataset held out by [`train`].
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![128, 128],
            num_joints: NUM_JOINTS,
            grid_width: 16,
            grid_height: 16,
            sigma_hm: 1.5,
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            epochs: 30,
            batch_size: 64,
            sigma: 3.0,
            lambda_init: 0.1,
            lambda_budget: 0.3,
            lambda_gamma: 0.01,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs as f64),
            ("batch_size", self.batch_size as f64),
            ("sigma", self.sigma),
            ("lambda_init", self.lambda_init),
            ("lambda_budget", self.lambda_budget),
            ("lambda_gamma", self.lambda_gamma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.learning_rate >= 0.0 && self.weight_decay >= 0.0) {
            return Err(Error::Config("learning_rate and weight_decay must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!(
                "val_fraction {} not in [0, 1)",
                self.val_fraction
            )));
        }
        self.model_config().map(|_| ())
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let grid = HeatmapGrid::new(self.grid_width, self.grid_height, self.sigma_hm)
            .map_err(|e| Error::Config(e.to_string()))?;
        ModelConfig::new(self.num_joints, self.hidden.clone(), grid)
    }
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Sample-weighted mean over the epoch; `lambda` is the value at epoch end.
    pub loss: LossBreakdown,
    pub val_acc30: f64,
    pub val_mae: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: ModelParams<T>,
    pub history: Vec<EpochMetrics>,
    pub lambda: f64,
}

/// AdamW state with the moment estimates stored in parameter-shaped tensors.
#[derive(Debug, Clone)]
pub struct AdamW<T> {
    m: ModelParams<T>,
    v: ModelParams<T>,
    step: i32,
}

impl<T: Real> AdamW<T> {
    pub fn new(config: &ModelConfig) -> Self {
        AdamW {
            m: ModelParams::zeros(config),
            v: ModelParams::zeros(config),
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams<T>, grad: &ModelParams<T>, lr: f64, weight_decay: f64) {
        self.step += 1;
        let b1 = T::of(ADAM_BETA1);
        let b2 = T::of(ADAM_BETA2);
        let one = T::one();
        let bc1 = T::of(1.0 - ADAM_BETA1.powi(self.step));
        let bc2 = T::of(1.0 - ADAM_BETA2.powi(self.step));
        let lr_t = T::of(lr);
        let decay = T::of(lr * weight_decay);
        let eps = T::of(ADAM_EPS);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((w, g), m), v) in tensors {
            for (((w, g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (one - b1) * *g;
                *v = b2 * *v + (one - b2) * *g * *g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *w -= lr_t * m_hat / (v_hat.sqrt() + eps) + decay * *w;
            }
        }
    }
}

/// Validation accuracy within 30° and MAE. NaN when `val` is empty.
pub fn validation_metrics<T: Real>(params: &ModelParams<T>, val: &[Sample<T>]) -> Result<(f64, f64)> {
    if val.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let skels: Vec<_> = val.iter().map(|s| &s.skeleton).collect();
    let pred: Vec<OrientationDeg<T>> = predict_batch(params, &skels)?
        .into_iter()
        .map(|p| p.orientation)
        .collect();
    let gt: Vec<_> = val.iter().map(|s| s.gt_orientation).collect();
    Ok((acc_at(&pred, &gt, T::of(30.0))?, mae(&pred, &gt)?))
}

/// Trains on `dataset`, holding out its last `val_fraction` for validation.
pub fn train<T: Real>(dataset: &[Sample<T>], config: &TrainConfig) -> Result<TrainOutcome<T>> {
    let n_val = (dataset.len() as f64 * config.val_fraction).round() as usize;
    let n_val = n_val.min(dataset.len().saturating_sub(1));
    let (train_set, val_set) = dataset.split_at(dataset.len() - n_val);
    train_with_validation(train_set, val_set, config)
}

pub fn train_with_validation<T: Real>(
    train_set: &[Sample<T>],
    val_set: &[Sample<T>],
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let model_cfg = config.model_config()?;
    let sigma = GaussianSigma::new(T::of(config.sigma))?;
    let mut params = ModelParams::<T>::init(&model_cfg, rng::derive_seed(config.seed, "init", 0));
    let mut opt = AdamW::new(&model_cfg);
    let mut lambda = config.lambda_init;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(config.seed, "shuffle", epoch as u64));
        let mut sums = [0.0f64; 3];
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Sample<T>> = chunk.iter().map(|&i| &train_set[i]).collect();
            let skels: Vec<_> = batch.iter().map(|s| &s.skeleton).collect();
            let act = forward_batch(&params, input_matrix(&skels, model_cfg.num_joints));
            let targets = Targets::build(&params, &batch, sigma);
            let rows = act.losses(&targets, lambda);
            let mean = mean_breakdown(&rows, lambda);
            if !mean.total.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            for r in &rows {
                sums[0] += r.l_p_prime;
                sums[1] += r.l_c;
                sums[2] += r.l_kpt;
            }
            let grad = backward_batch(&params, &act, &targets, lambda);
            lambda = update_lambda(lambda, mean.l_c, config.lambda_budget, config.lambda_gamma);
            opt.step(&mut params, &grad, config.learning_rate, config.weight_decay);
        }
        if !params.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        let n = train_set.len() as f64;
        let loss = LossBreakdown::new(sums[0] / n, sums[1] / n, sums[2] / n, lambda);
        let (val_acc30, val_mae) = validation_metrics(&params, val_set)?;
        history.push(EpochMetrics {
            epoch,
            loss,
            val_acc30,
            val_mae,
        });
    }
    Ok(TrainOutcome {
        params,
        history,
        lambda,
    })
}

pub const HISTORY_HEADER: &str = "epoch,l_p_prime,l_c,l_kpt,lambda,total,val_acc30,val_mae";

pub fn history_csv(history: &[EpochMetrics]) -> String {
    let mut s = String::from(HISTORY_HEADER);
    s.push('\n');
    for h in history {
        let l = &h.loss;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            h.epoch, l.l_p_prime, l.l_c, l.l_kpt, l.lambda, l.total, h.val_acc30, h.val_mae
        )
        .expect("writing to a String cannot fail");
    }
    s
}

pub fn write_history_csv(path: &Path, history: &[EpochMetrics]) -> Result<()> {
    std::fs::write(path, history_csv(history)).map_err(|e| Error::io(path, e))
}
