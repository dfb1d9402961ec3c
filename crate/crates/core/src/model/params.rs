//! Network parameters and the JSON checkpoint format.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circular::NUM_BINS;
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;
use crate::skeleton::{HeatmapGrid, NUM_BODY_JOINTS, NUM_JOINTS};

use super::train::TrainConfig;

pub const MODEL_VERSION: u32 = 1;

/// Architecture: `3 * num_joints` inputs, a tanh trunk, then three linear
/// heads (72 orientation logits, one confidence logit, and
/// `num_joints * W * H` heatmap intensities).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// 23 for the full representation, 17 for the no-foot ablation.
    pub num_joints: usize,
    pub hidden: Vec<usize>,
    pub grid: HeatmapGrid,
}

impl ModelConfig {
    pub fn new(num_joints: usize, hidden: Vec<usize>, grid: HeatmapGrid) -> Result<Self> {
        if num_joints != NUM_JOINTS && num_joints != NUM_BODY_JOINTS {
            return Err(Error::ModelConfig(format!(
                "num_joints must be {NUM_JOINTS} or {NUM_BODY_JOINTS}, got {num_joints}"
            )));
        }
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::ModelConfig(format!(
                "hidden sizes must be non-empty and positive, got {hidden:?}"
            )));
        }
        Ok(ModelConfig {
            num_joints,
            hidden,
            grid,
        })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        3 * self.num_joints
    }

    #[inline]
    pub fn heatmap_dim(&self) -> usize {
        self.num_joints * self.grid.pixels()
    }

    fn last_hidden(&self) -> usize {
        *self.hidden.last().expect("validated non-empty")
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_joints: NUM_JOINTS,
            hidden: vec![128, 128],
            grid: HeatmapGrid::default(),
        }
    }
}

/// Fully connected layer, `weight` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    fn glorot(inputs: usize, outputs: usize, rng: &mut rng::Rng) -> Self {
        let a = (6.0 / (inputs + outputs) as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((outputs, inputs), || {
            T::of(rng.random_range(-a..a))
        });
        Dense {
            weight,
            bias: Array1::zeros(outputs),
        }
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// All trainable tensors. The same shape doubles as a gradient and as
/// optimizer moment storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub trunk: Vec<Dense<T>>,
    pub orientation: Dense<T>,
    pub confidence: Dense<T>,
    pub heatmap: Dense<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn zeros(config: &ModelConfig) -> Self {
        Self::build(config, |i, o| Dense::zeros(i, o))
    }

    /// Glorot-uniform weights and zero biases, from a seed.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut idx = 0u64;
        Self::build(config, |i, o| {
            let mut r = rng::stream(seed, "init", idx);
            idx += 1;
            Dense::glorot(i, o, &mut r)
        })
    }

    fn build(config: &ModelConfig, mut make: impl FnMut(usize, usize) -> Dense<T>) -> Self {
        let mut trunk = Vec::with_capacity(config.hidden.len());
        let mut prev = config.input_dim();
        for &h in &config.hidden {
            trunk.push(make(prev, h));
            prev = h;
        }
        ModelParams {
            config: config.clone(),
            trunk,
            orientation: make(prev, NUM_BINS),
            confidence: make(prev, 1),
            heatmap: make(prev, config.heatmap_dim()),
        }
    }

    /// Layers in checkpoint order with their names.
    pub fn layers(&self) -> Vec<(String, &Dense<T>)> {
        let mut v: Vec<(String, &Dense<T>)> = self
            .trunk
            .iter()
            .enumerate()
            .map(|(i, d)| (format!("trunk.{i}"), d))
            .collect();
        v.push(("orientation".into(), &self.orientation));
        v.push(("confidence".into(), &self.confidence));
        v.push(("heatmap".into(), &self.heatmap));
        v
    }

    /// Mutable flat views of every tensor, in checkpoint order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(2 * self.trunk.len() + 6);
        let layers = self
            .trunk
            .iter_mut()
            .chain([&mut self.orientation, &mut self.confidence, &mut self.heatmap]);
        for d in layers {
            out.push(d.weight.as_slice_mut().expect("standard layout"));
            out.push(d.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(2 * self.trunk.len() + 6);
        for (_, d) in self.layers() {
            out.push(d.weight.as_slice().expect("standard layout"));
            out.push(d.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Checks that layer shapes chain together and match the config.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        let mut prev = c.input_dim();
        if self.trunk.len() != c.hidden.len() {
            return Err(Error::ModelConfig("trunk depth differs from config".into()));
        }
        let expect = |name: &str, d: &Dense<T>, i: usize, o: usize| {
            if d.inputs() != i || d.outputs() != o || d.bias.len() != o {
                Err(Error::ModelConfig(format!(
                    "layer {name} is {}x{} (bias {}), expected {o}x{i}",
                    d.outputs(),
                    d.inputs(),
                    d.bias.len()
                )))
            } else {
                Ok(())
            }
        };
        for (k, (d, &h)) in self.trunk.iter().zip(&c.hidden).enumerate() {
            expect(&format!("trunk.{k}"), d, prev, h)?;
            prev = h;
        }
        expect("orientation", &self.orientation, prev, NUM_BINS)?;
        expect("confidence", &self.confidence, prev, 1)?;
        expect("heatmap", &self.heatmap, c.last_hidden(), c.heatmap_dim())?;
        if !self.is_finite() {
            return Err(Error::ModelConfig("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let conv = |d: &Dense<T>| Dense {
            weight: d.weight.mapv(|v| U::of(v.to_f64_lossy())),
            bias: d.bias.mapv(|v| U::of(v.to_f64_lossy())),
        };
        ModelParams {
            config: self.config.clone(),
            trunk: self.trunk.iter().map(conv).collect(),
            orientation: conv(&self.orientation),
            confidence: conv(&self.confidence),
            heatmap: conv(&self.heatmap),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    /// Scalar type the parameters were trained in.
    pub scalar: String,
    pub num_joints: usize,
    pub hidden: Vec<usize>,
    pub grid_width: usize,
    pub grid_height: usize,
    pub sigma_hm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: CheckpointConfig,
    pub layers: Vec<LayerRecord>,
}

impl Checkpoint {
    pub fn from_params<T: Real>(params: &ModelParams<T>, train: Option<&TrainConfig>) -> Self {
        let c = &params.config;
        let mut layers = Vec::new();
        for (name, d) in params.layers() {
            layers.push(LayerRecord {
                name: format!("{name}.weight"),
                rows: d.outputs(),
                cols: d.inputs(),
                data: d.weight.iter().map(|v| v.to_f64_lossy()).collect(),
            });
            layers.push(LayerRecord {
                name: format!("{name}.bias"),
                rows: d.outputs(),
                cols: 1,
                data: d.bias.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
        Checkpoint {
            version: MODEL_VERSION,
            config: CheckpointConfig {
                scalar: T::NAME.to_string(),
                num_joints: c.num_joints,
                hidden: c.hidden.clone(),
                grid_width: c.grid.width,
                grid_height: c.grid.height,
                sigma_hm: c.grid.sigma,
                train: train.cloned(),
            },
            layers,
        }
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let c = &self.config;
        let grid = HeatmapGrid::new(c.grid_width, c.grid_height, c.sigma_hm)
            .map_err(|e| Error::ModelConfig(e.to_string()))?;
        ModelConfig::new(c.num_joints, c.hidden.clone(), grid)
    }

    pub fn to_params<T: Real>(&self) -> Result<ModelParams<T>> {
        if self.version != MODEL_VERSION {
            return Err(Error::ModelConfig(format!(
                "checkpoint version {} unsupported (expected {MODEL_VERSION})",
                self.version
            )));
        }
        let config = self.model_config()?;
        let mut params = ModelParams::<T>::zeros(&config);
        let names: Vec<String> = params
            .layers()
            .iter()
            .flat_map(|(n, _)| [format!("{n}.weight"), format!("{n}.bias")])
            .collect();
        if names.len() != self.layers.len() {
            return Err(Error::ModelConfig(format!(
                "checkpoint has {} tensors, architecture needs {}",
                self.layers.len(),
                names.len()
            )));
        }
        for ((dst, rec), name) in params.tensors_mut().into_iter().zip(&self.layers).zip(&names) {
            if &rec.name != name || rec.data.len() != dst.len() || rec.rows * rec.cols != dst.len() {
                return Err(Error::ModelConfig(format!(
                    "tensor {} ({}x{}, {} values) does not fit slot {name} ({} values)",
                    rec.name,
                    rec.rows,
                    rec.cols,
                    rec.data.len(),
                    dst.len()
                )));
            }
            for (d, s) in dst.iter_mut().zip(&rec.data) {
                *d = T::of(*s);
            }
        }
        params.validate()?;
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::json("checkpoint", e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelConfig {
        ModelConfig::new(23, vec![6, 5], HeatmapGrid::new(4, 4, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn shapes_chain() {
        let p = ModelParams::<f64>::init(&small(), 1);
        p.validate().unwrap();
        assert_eq!(p.trunk[0].inputs(), 69);
        assert_eq!(p.heatmap.outputs(), 23 * 16);
        let expected = 69 * 6 + 6 + 6 * 5 + 5 + 5 * 72 + 72 + 5 + 1 + 5 * 368 + 368;
        assert_eq!(p.num_params(), expected);
    }

    #[test]
    fn rejects_bad_configs() {
        let g = HeatmapGrid::default();
        assert!(ModelConfig::new(20, vec![8], g).is_err());
        assert!(ModelConfig::new(23, vec![], g).is_err());
        assert!(ModelConfig::new(17, vec![8, 0], g).is_err());
    }

    #[test]
    fn checkpoint_round_trip_and_mismatch() {
        let p = ModelParams::<f64>::init(&small(), 5);
        let ck = Checkpoint::from_params(&p, None);
        assert_eq!(ck.layers[0].name, "trunk.0.weight");
        assert_eq!((ck.layers[0].rows, ck.layers[0].cols), (6, 69));
        assert_eq!(ck.to_params::<f64>().unwrap(), p);

        let text = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ck);

        let mut broken = ck.clone();
        broken.config.grid_width = 8;
        assert!(matches!(broken.to_params::<f64>(), Err(Error::ModelConfig(_))));
        let mut renamed = ck;
        renamed.layers[2].name = "bogus".into();
        assert!(renamed.to_params::<f64>().is_err());
    }

    #[test]
    fn init_is_seeded() {
        let a = ModelParams::<f64>::init(&small(), 3);
        assert_eq!(a, ModelParams::<f64>::init(&small(), 3));
        assert_ne!(a, ModelParams::<f64>::init(&small(), 4));
    }
}
