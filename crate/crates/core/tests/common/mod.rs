use hoe::circular::{normalize_deg, GaussianSigma};
use hoe::model::{backward, total_loss, ModelConfig, ModelParams};
use hoe::rng::stream;
use hoe::skeleton::{synthesize, HeatmapGrid, OcclusionMode};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

pub const FD_STEP: f64 = 1e-5;
pub const REL_FLOOR: f64 = 1e-6;

/// Outcome of one finite-difference comparison over every parameter.
pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Every loss term was strictly positive at the checked point.
    pub all_terms_active: bool,
}

/// Compares `backward` with central differences of `total_loss` on a small
/// network, a random sample and a random lambda, all drawn from `seed`.
pub fn grad_check(seed: u64) -> GradCheck {
    let mut rng = stream(seed, "gradcheck", 0);
    let grid = HeatmapGrid::new(4, 4, 1.0).unwrap();
    let cfg = ModelConfig::new(23, vec![8, 8], grid).unwrap();
    let mut params = ModelParams::<f64>::init(&cfg, seed);
    // Move off the zero-bias init so every parameter matters.
    let jitter = Normal::new(0.0, 0.2).unwrap();
    for t in params.tensors_mut() {
        for w in t.iter_mut() {
            *w += jitter.sample(&mut rng);
        }
    }
    let modes = [
        OcclusionMode::Full,
        OcclusionMode::LowerOnly,
        OcclusionMode::UpperOnly,
        OcclusionMode::RandomDrop(0.3),
    ];
    let theta = normalize_deg(rng.random_range(0.0..360.0)).unwrap();
    let mode = modes[rng.random_range(0..modes.len())];
    let sample = synthesize(theta, mode, 0.03, rng.random());
    let lambda = rng.random_range(0.01..2.0);
    let sigma = GaussianSigma::new(3.0).unwrap();

    let base = total_loss(&sample, &params, lambda, sigma);
    let all_terms_active = base.l_p_prime > 0.0 && base.l_c > 0.0 && base.l_kpt > 0.0;
    let grad = backward(&params, &sample, lambda, sigma);
    let analytic: Vec<f64> = grad.tensors().concat();

    let mut max_rel_err = 0.0f64;
    let mut flat = 0;
    let n_tensors = params.tensors().len();
    for k in 0..n_tensors {
        let len = params.tensors()[k].len();
        for i in 0..len {
            let orig = params.tensors()[k][i];
            params.tensors_mut()[k][i] = orig + FD_STEP;
            let up = total_loss(&sample, &params, lambda, sigma).total;
            params.tensors_mut()[k][i] = orig - FD_STEP;
            let down = total_loss(&sample, &params, lambda, sigma).total;
            params.tensors_mut()[k][i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic[flat];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            max_rel_err = max_rel_err.max(rel);
            flat += 1;
        }
    }
    GradCheck {
        max_rel_err,
        checked: flat,
        all_terms_active,
    }
}
