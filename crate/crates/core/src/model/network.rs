//! Forward pass, analytic gradients and prediction.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::circular::{
    circular_gaussian, decode_orientation, deg_to_bin, GaussianSigma, OrientationDeg,
    OrientationDist, NUM_BINS,
};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::skeleton::{clean_skeleton, HeatmapSet, Joint, Sample, Skeleton, NUM_JOINTS};

use super::loss::{Confidence, LossBreakdown, CONFIDENCE_EPS};
use super::params::{Dense, ModelParams};

/// Joints fed to the network. With fewer than 23 joints the kept joints are
/// re-normalized to their own visible bounding box so dropped joints leave
/// no trace in the coordinates.
pub fn model_joints<T: Real>(skel: &Skeleton<T>, num_joints: usize) -> Vec<Joint<T>> {
    let joints = &skel.joints()[..num_joints];
    if num_joints == NUM_JOINTS {
        return joints.to_vec();
    }
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    for j in joints.iter().filter(|j| j.visible) {
        lo = [lo[0].min(j.x), lo[1].min(j.y)];
        hi = [hi[0].max(j.x), hi[1].max(j.y)];
    }
    let rescale = |v: T, a: usize| {
        let extent = hi[a] - lo[a];
        if extent > T::of(1e-9) {
            (v - lo[a]) / extent
        } else {
            T::of(0.5)
        }
    };
    joints
        .iter()
        .map(|j| {
            if j.visible {
                Joint {
                    x: rescale(j.x, 0),
                    y: rescale(j.y, 1),
                    visible: true,
                }
            } else {
                *j
            }
        })
        .collect()
}

/// Flattens skeletons into network inputs: `(x, y, visible)` per joint,
/// hidden joints as zeros.
pub fn input_matrix<T: Real>(skels: &[&Skeleton<T>], num_joints: usize) -> Array2<T> {
    let mut m = Array2::zeros((skels.len(), 3 * num_joints));
    for (mut row, s) in m.rows_mut().into_iter().zip(skels) {
        for (k, j) in model_joints(s, num_joints).iter().enumerate() {
            if j.visible {
                row[3 * k] = j.x;
                row[3 * k + 1] = j.y;
                row[3 * k + 2] = T::one();
            }
        }
    }
    m
}

/// Training targets for a batch.
#[derive(Debug, Clone)]
pub struct Targets<T> {
    /// Circular Gaussian label per row.
    pub probs: Array2<T>,
    /// Heatmaps of the noise-free, unoccluded pose per row.
    pub heat: Array2<T>,
}

impl<T: Real> Targets<T> {
    pub fn build(params: &ModelParams<T>, samples: &[&Sample<T>], sigma: GaussianSigma<T>) -> Self {
        let cfg = &params.config;
        let mut probs = Array2::zeros((samples.len(), NUM_BINS));
        let mut heat = Array2::zeros((samples.len(), cfg.heatmap_dim()));
        for (i, s) in samples.iter().enumerate() {
            let p = circular_gaussian(deg_to_bin(s.gt_orientation), sigma);
            probs.row_mut(i).assign(&ArrayView1::from(&p.probs()[..]));
            let clean = clean_skeleton(s.gt_orientation);
            let joints = model_joints(&clean, cfg.num_joints);
            let mut padded = [Joint::default(); NUM_JOINTS];
            padded[..joints.len()].copy_from_slice(&joints);
            let clean = Skeleton::new(padded).expect("clean skeleton has visible joints");
            let mut row = heat.row_mut(i);
            cfg.grid.render_into(
                &clean,
                cfg.num_joints,
                row.as_slice_mut().expect("row is contiguous"),
            );
        }
        Targets { probs, heat }
    }
}

/// Cached activations of a batch forward pass.
#[derive(Debug, Clone)]
pub struct Activations<T> {
    pub input: Array2<T>,
    /// Post-tanh output of each trunk layer.
    pub hidden: Vec<Array2<T>>,
    /// Softmax over orientation bins.
    pub probs: Array2<T>,
    /// Raw sigmoid of the confidence logit.
    pub sigmoid: Array1<T>,
    /// Sigmoid clamped away from 0 and 1.
    pub conf: Array1<T>,
    pub heat: Array2<T>,
}

fn affine<T: Real>(x: &Array2<T>, d: &Dense<T>) -> Array2<T> {
    let mut z = x.dot(&d.weight.t());
    z += &d.bias;
    z
}

fn softmax_rows<T: Real>(z: &mut Array2<T>) {
    for mut row in z.rows_mut() {
        let m = row.iter().cloned().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - m).exp());
        let s: T = row.iter().cloned().sum();
        row.mapv_inplace(|v| v / s);
    }
}

fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

pub fn forward_batch<T: Real>(params: &ModelParams<T>, input: Array2<T>) -> Activations<T> {
    let mut hidden = Vec::with_capacity(params.trunk.len());
    for layer in &params.trunk {
        let prev = hidden.last().unwrap_or(&input);
        let mut h = affine(prev, layer);
        h.mapv_inplace(T::tanh);
        hidden.push(h);
    }
    let last = hidden.last().unwrap_or(&input);
    let mut probs = affine(last, &params.orientation);
    softmax_rows(&mut probs);
    let sigmoid = affine(last, &params.confidence)
        .column(0)
        .mapv(sigmoid);
    let conf = sigmoid.mapv(|s| Confidence::clamped(s).get());
    let heat = affine(last, &params.heatmap);
    Activations {
        input,
        hidden,
        probs,
        sigmoid,
        conf,
        heat,
    }
}

impl<T: Real> Activations<T> {
    pub fn dist(&self, row: usize) -> OrientationDist<T> {
        let arr: [T; NUM_BINS] = self
            .probs
            .row(row)
            .to_vec()
            .try_into()
            .expect("orientation head has 72 outputs");
        OrientationDist::from_array_unchecked(arr)
    }

    /// Per-row loss components for the given targets.
    pub fn losses(&self, targets: &Targets<T>, lambda: f64) -> Vec<LossBreakdown> {
        (0..self.probs.nrows())
            .map(|r| {
                let c = self.conf[r];
                let l_p: T = self
                    .probs
                    .row(r)
                    .iter()
                    .zip(targets.probs.row(r))
                    .map(|(ph, p)| {
                        let d = c * *ph + (T::one() - c) * *p - *p;
                        d * d
                    })
                    .sum();
                let l_c = -c.ln();
                let hd = self.heat.ncols();
                let l_k: T = self
                    .heat
                    .row(r)
                    .iter()
                    .zip(targets.heat.row(r))
                    .map(|(a, b)| (*a - *b) * (*a - *b))
                    .sum::<T>()
                    / T::of(hd as f64);
                LossBreakdown::new(l_p.to_f64_lossy(), l_c.to_f64_lossy(), l_k.to_f64_lossy(), lambda)
            })
            .collect()
    }
}

/// Mean of per-row breakdowns.
pub fn mean_breakdown(rows: &[LossBreakdown], lambda: f64) -> LossBreakdown {
    let n = rows.len().max(1) as f64;
    let mean = |f: fn(&LossBreakdown) -> f64| rows.iter().map(f).sum::<f64>() / n;
    LossBreakdown::new(mean(|b| b.l_p_prime), mean(|b| b.l_c), mean(|b| b.l_kpt), lambda)
}

fn layer_grad<T: Real>(dz: &Array2<T>, input: &Array2<T>) -> Dense<T> {
    Dense {
        weight: dz.t().dot(input),
        bias: dz.sum_axis(Axis(0)),
    }
}

/// Gradient of the batch-mean total loss with respect to every parameter.
/// Gradients flow into both the orientation and the confidence branch of
/// the interpolated distribution.
pub fn backward_batch<T: Real>(
    params: &ModelParams<T>,
    act: &Activations<T>,
    targets: &Targets<T>,
    lambda: f64,
) -> ModelParams<T> {
    let b = act.probs.nrows();
    let inv_b = T::one() / T::of(b as f64);
    let two = T::of(2.0);
    let lambda_t = T::of(lambda);
    let eps = T::of(CONFIDENCE_EPS);

    let mut d_logits = Array2::<T>::zeros((b, NUM_BINS));
    let mut d_conf = Array2::<T>::zeros((b, 1));
    for r in 0..b {
        let c = act.conf[r];
        let ph = act.probs.row(r);
        let p = targets.probs.row(r);
        let mut g = [T::zero(); NUM_BINS];
        let mut dl_dc = -lambda_t / c;
        for i in 0..NUM_BINS {
            let diff = ph[i] - p[i];
            let resid = c * ph[i] + (T::one() - c) * p[i] - p[i];
            g[i] = two * c * resid * inv_b;
            dl_dc += two * resid * diff;
        }
        let s: T = (0..NUM_BINS).map(|i| g[i] * ph[i]).sum();
        for i in 0..NUM_BINS {
            d_logits[[r, i]] = ph[i] * (g[i] - s);
        }
        let sig = act.sigmoid[r];
        // The clamp is flat outside [eps, 1 - eps].
        if sig >= eps && sig <= T::one() - eps {
            d_conf[[r, 0]] = dl_dc * sig * (T::one() - sig) * inv_b;
        }
    }
    let hd = act.heat.ncols();
    let heat_scale = two / T::of(hd as f64) * inv_b;
    let d_heat = (&act.heat - &targets.heat) * heat_scale;

    let last = act.hidden.last().unwrap_or(&act.input);
    let mut grad = ModelParams::zeros(&params.config);
    grad.orientation = layer_grad(&d_logits, last);
    grad.confidence = layer_grad(&d_conf, last);
    grad.heatmap = layer_grad(&d_heat, last);

    let mut d_hidden = d_logits.dot(&params.orientation.weight)
        + d_conf.dot(&params.confidence.weight)
        + d_heat.dot(&params.heatmap.weight);
    for k in (0..params.trunk.len()).rev() {
        let h = &act.hidden[k];
        let d_pre = d_hidden * &h.mapv(|v| T::one() - v * v);
        let below = if k == 0 { &act.input } else { &act.hidden[k - 1] };
        grad.trunk[k] = layer_grad(&d_pre, below);
        if k > 0 {
            d_hidden = d_pre.dot(&params.trunk[k].weight);
        } else {
            break;
        }
    }
    grad
}

/// Single-skeleton network output.
#[derive(Debug, Clone)]
pub struct Output<T> {
    pub p_hat: OrientationDist<T>,
    pub c: Confidence<T>,
    pub h_hat: HeatmapSet<T>,
}

fn check_shapes<T: Real>(params: &ModelParams<T>) -> Result<()> {
    let cfg = &params.config;
    let hd = params.heatmap.outputs();
    if hd != cfg.heatmap_dim() {
        return Err(Error::ModelConfig(format!(
            "heatmap head emits {hd} values but the {}x{} grid needs {}",
            cfg.grid.width,
            cfg.grid.height,
            cfg.heatmap_dim()
        )));
    }
    let first_in = params.trunk.first().map(|d| d.inputs()).unwrap_or(0);
    if first_in != cfg.input_dim() {
        return Err(Error::ModelConfig(format!(
            "trunk expects {first_in} inputs, config gives {}",
            cfg.input_dim()
        )));
    }
    Ok(())
}

pub fn forward<T: Real>(params: &ModelParams<T>, skel: &Skeleton<T>) -> Result<Output<T>> {
    check_shapes(params)?;
    let act = forward_batch(params, input_matrix(&[skel], params.config.num_joints));
    Ok(Output {
        p_hat: act.dist(0),
        c: Confidence::clamped(act.conf[0]),
        h_hat: HeatmapSet {
            grid: params.config.grid,
            num_joints: params.config.num_joints,
            data: act.heat.row(0).to_vec(),
        },
    })
}

pub fn total_loss<T: Real>(
    sample: &Sample<T>,
    params: &ModelParams<T>,
    lambda: f64,
    sigma: GaussianSigma<T>,
) -> LossBreakdown {
    let act = forward_batch(params, input_matrix(&[&sample.skeleton], params.config.num_joints));
    let targets = Targets::build(params, &[sample], sigma);
    act.losses(&targets, lambda)[0]
}

pub fn backward<T: Real>(
    params: &ModelParams<T>,
    sample: &Sample<T>,
    lambda: f64,
    sigma: GaussianSigma<T>,
) -> ModelParams<T> {
    let act = forward_batch(params, input_matrix(&[&sample.skeleton], params.config.num_joints));
    let targets = Targets::build(params, &[sample], sigma);
    backward_batch(params, &act, &targets, lambda)
}

/// Decoded orientation, confidence and peak probability for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub orientation: OrientationDeg<T>,
    pub confidence: Confidence<T>,
    pub max_prob: T,
}

pub fn predict<T: Real>(
    params: &ModelParams<T>,
    skel: &Skeleton<T>,
) -> Result<(OrientationDeg<T>, Confidence<T>)> {
    let out = forward(params, skel)?;
    Ok((decode_orientation(&out.p_hat), out.c))
}

/// Batched prediction, chunked to bound memory.
pub fn predict_batch<T: Real>(
    params: &ModelParams<T>,
    skels: &[&Skeleton<T>],
) -> Result<Vec<Prediction<T>>> {
    check_shapes(params)?;
    let mut out = Vec::with_capacity(skels.len());
    for chunk in skels.chunks(256) {
        let act = forward_batch(params, input_matrix(chunk, params.config.num_joints));
        for r in 0..chunk.len() {
            let dist = act.dist(r);
            out.push(Prediction {
                orientation: decode_orientation(&dist),
                confidence: Confidence::clamped(act.conf[r]),
                max_prob: dist.max_prob(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular::normalize_deg;
    use crate::model::params::ModelConfig;
    use crate::skeleton::{synthesize, HeatmapGrid, OcclusionMode};

    fn small_config() -> ModelConfig {
        ModelConfig::new(23, vec![8, 6], HeatmapGrid::new(4, 4, 1.0).unwrap()).unwrap()
    }

    fn sample(theta: f64, mode: OcclusionMode) -> Sample<f64> {
        synthesize(normalize_deg(theta).unwrap(), mode, 0.02, 42)
    }

    fn sigma() -> GaussianSigma<f64> {
        GaussianSigma::new(3.0).unwrap()
    }

    #[test]
    fn outputs_are_valid_distributions() {
        let p = ModelParams::<f64>::init(&small_config(), 9);
        for theta in [0.0, 77.0, 181.0, 359.0] {
            let out = forward(&p, &sample(theta, OcclusionMode::LowerOnly).skeleton).unwrap();
            let s: f64 = out.p_hat.probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(out.c.get() > 0.0 && out.c.get() < 1.0);
            assert_eq!(out.h_hat.data.len(), 23 * 16);
        }
    }

    #[test]
    fn zero_params_give_uniform_output() {
        let p = ModelParams::<f64>::zeros(&small_config());
        let s = sample(123.0, OcclusionMode::Full);
        let out = forward(&p, &s.skeleton).unwrap();
        assert!(out.p_hat.probs().iter().all(|v| (v - 1.0 / 72.0).abs() < 1e-15));
        assert_eq!(out.c.get(), 0.5);
        let (theta, c) = predict(&p, &s.skeleton).unwrap();
        assert_eq!(theta.value(), 0.0);
        assert_eq!(c.get(), 0.5);
    }

    #[test]
    fn mismatched_heatmap_head_is_a_config_error() {
        let mut p = ModelParams::<f64>::zeros(&small_config());
        p.config.grid = HeatmapGrid::new(8, 8, 1.0).unwrap();
        let err = forward(&p, &sample(0.0, OcclusionMode::Full).skeleton).unwrap_err();
        assert!(matches!(err, Error::ModelConfig(_)));
    }

    #[test]
    fn prediction_is_pure() {
        let p = ModelParams::<f64>::init(&small_config(), 1);
        let s = sample(45.0, OcclusionMode::Full);
        assert_eq!(predict(&p, &s.skeleton).unwrap(), predict(&p, &s.skeleton).unwrap());
    }

    #[test]
    fn perfect_prediction_has_vanishing_loss_and_gradient() {
        let cfg = small_config();
        let s = sample(200.0, OcclusionMode::Full);
        let mut p = ModelParams::<f64>::zeros(&cfg);
        let targets = Targets::build(&p, &[&s], sigma());
        // Trunk outputs tanh(0) = 0, so each head emits its bias.
        for (b, t) in p.orientation.bias.iter_mut().zip(targets.probs.row(0)) {
            *b = t.ln();
        }
        p.heatmap.bias.assign(&targets.heat.row(0));
        p.confidence.bias[0] = 20.0;
        let loss = total_loss(&s, &p, 0.1, sigma());
        assert!(loss.total < 1e-7, "{loss:?}");
        assert!(loss.l_p_prime < 1e-20 && loss.l_kpt == 0.0);
        let g = backward(&p, &s, 0.1, sigma());
        let norm: f64 = g.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "gradient norm {norm}");
    }

    #[test]
    fn low_confidence_loss_is_dominated_by_penalty() {
        let cfg = small_config();
        let s = sample(10.0, OcclusionMode::Full);
        let mut p = ModelParams::<f64>::zeros(&cfg);
        let targets = Targets::build(&p, &[&s], sigma());
        for (b, t) in p.orientation.bias.iter_mut().zip(targets.probs.row(0)) {
            *b = t.ln();
        }
        p.heatmap.bias.assign(&targets.heat.row(0));
        p.confidence.bias[0] = -6.0;
        let loss = total_loss(&s, &p, 0.1, sigma());
        assert!((loss.total - 0.1 * loss.l_c).abs() < 1e-12);
        assert!(loss.l_c > 5.0);
    }

    #[test]
    fn confidence_gradient_sign_tracks_correctness() {
        let cfg = small_config();
        let s = sample(0.0, OcclusionMode::Full);
        let mut p = ModelParams::<f64>::zeros(&cfg);
        let targets = Targets::build(&p, &[&s], sigma());
        p.heatmap.bias.assign(&targets.heat.row(0));
        p.confidence.bias[0] = 0.5;

        // Correct orientation: raising confidence always lowers the loss.
        for (b, t) in p.orientation.bias.iter_mut().zip(targets.probs.row(0)) {
            *b = t.ln();
        }
        assert!(backward(&p, &s, 0.1, sigma()).confidence.bias[0] < 0.0);

        // Confidently wrong with a small lambda: lowering confidence pays.
        p.orientation.bias.fill(0.0);
        p.orientation.bias[36] = 30.0;
        assert!(backward(&p, &s, 0.01, sigma()).confidence.bias[0] > 0.0);
    }
}
