use std::path::Path;

use hoe::circular::OrientationDeg;
use hoe::eval::{evaluate, gt_echo, uniform_guess};
use hoe::gate::{max_recall_at_full_precision, pr_curve, write_pr_report, PrSummary, ScoreKind, ScoredPrediction};
use hoe::model::{predict_batch, train as fit, write_history_csv, Checkpoint, ModelParams, Prediction};
use hoe::sim::{run_scenario, trajectory_csv, Estimator, EstimatorKind, RunSummary, Scenario};
use hoe::skeleton::{gen_dataset, read_dataset, ModeMix, Sample};

use crate::config::{required, EvalEstimator, RunConfig};
use crate::{Common, Failure};

/// Config file (if any) with the common flags applied.
pub fn base(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load_or_default(common.config.as_deref())?;
    cfg.seed = common.seed.or(cfg.seed);
    cfg.paths.out = common.out.clone().or(cfg.paths.out);
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, Failure> {
    let dir = required(&cfg.paths.out, "--out")?;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn load_params(cfg: &RunConfig) -> Result<ModelParams<f32>, Failure> {
    let path = required(&cfg.paths.checkpoint, "--checkpoint")?;
    let params = Checkpoint::load(path).map_err(runtime)?.to_params()?;
    Ok(params)
}

fn load_data(cfg: &RunConfig) -> Result<Vec<Sample<f32>>, Failure> {
    let path = required(&cfg.paths.data, "--data")?;
    read_dataset(path).map_err(runtime)
}

/// Missing or unreadable files are runtime failures even when the library
/// reports them as invalid input.
fn runtime(e: hoe::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn predictions(params: &ModelParams<f32>, samples: &[Sample<f32>]) -> Result<Vec<Prediction<f32>>, Failure> {
    let skels: Vec<_> = samples.iter().map(|s| &s.skeleton).collect();
    Ok(predict_batch(params, &skels)?)
}

pub fn gen_data(mut cfg: RunConfig) -> Result<(), Failure> {
    let seed = *cfg.seed.get_or_insert(0);
    if cfg.data.n == 0 {
        return Err(Failure::Usage("--n must be positive".into()));
    }
    let mix: ModeMix = cfg.data.mix.parse()?;
    let out = required(&cfg.paths.out, "--out")?;
    let samples = gen_dataset(out, cfg.data.n, &mix, cfg.data.noise, seed)?;
    cfg.save(&out.with_extension("config.json"))?;
    println!("wrote {} samples to {} (seed {seed})", samples.len(), out.display());
    Ok(())
}

pub fn train(mut cfg: RunConfig) -> Result<(), Failure> {
    cfg.train.seed = *cfg.seed.get_or_insert(0);
    cfg.train.validate()?;
    let data = load_data(&cfg)?;
    let dir = out_dir(&cfg)?;
    let outcome = fit(&data, &cfg.train)?;
    Checkpoint::from_params(&outcome.params, Some(&cfg.train))
        .save(&dir.join("checkpoint.json"))
        .map_err(runtime)?;
    write_history_csv(&dir.join("metrics.csv"), &outcome.history).map_err(runtime)?;
    cfg.save(&dir.join("config.json"))?;
    if let Some(last) = outcome.history.last() {
        println!(
            "epoch {}: val Acc(30) {:.4}, val MAE {:.2} deg",
            last.epoch, last.val_acc30, last.val_mae
        );
    }
    println!("checkpoint written to {}", dir.join("checkpoint.json").display());
    Ok(())
}

pub fn eval(mut cfg: RunConfig) -> Result<(), Failure> {
    let seed = *cfg.seed.get_or_insert(0);
    let data = load_data(&cfg)?;
    let pred: Vec<OrientationDeg<f32>> = match cfg.eval.estimator {
        EvalEstimator::Model => predictions(&load_params(&cfg)?, &data)?
            .iter()
            .map(|p| p.orientation)
            .collect(),
        EvalEstimator::GtEcho => gt_echo(&data),
        EvalEstimator::Uniform => uniform_guess(data.len(), seed),
    };
    let report = evaluate(&data, &pred)?;
    let dir = out_dir(&cfg)?;
    write(&dir.join("eval.csv"), &report.to_csv())?;
    write(&dir.join("eval.txt"), &report.to_table())?;
    cfg.save(&dir.join("config.json"))?;
    print!("{}", report.to_table());
    Ok(())
}

pub fn eval_confidence(mut cfg: RunConfig) -> Result<(), Failure> {
    cfg.seed.get_or_insert(0);
    let data = load_data(&cfg)?;
    let preds = predictions(&load_params(&cfg)?, &data)?;
    let dir = out_dir(&cfg)?;
    for kind in [ScoreKind::Confidence, ScoreKind::MaxProb] {
        let items = preds
            .iter()
            .zip(&data)
            .enumerate()
            .map(|(i, (p, s))| {
                let score = match kind {
                    ScoreKind::Confidence => p.confidence.get(),
                    ScoreKind::MaxProb => p.max_prob,
                };
                ScoredPrediction::new(p.orientation, s.gt_orientation, score, i as u64)
            })
            .collect::<hoe::Result<Vec<_>>>()?;
        let curve = pr_curve(&items)?;
        let summary = PrSummary {
            max_recall_at_p100: max_recall_at_full_precision(&curve),
            n: items.len(),
            score_kind: kind,
        };
        write_pr_report(dir, &curve, &summary).map_err(runtime)?;
        println!("{kind}: max recall at 100% precision {:.4}", summary.max_recall_at_p100);
    }
    cfg.save(&dir.join("config.json"))?;
    Ok(())
}

pub fn simulate(mut cfg: RunConfig) -> Result<(), Failure> {
    cfg.sim.validate()?;
    let scenario_path = required(&cfg.paths.scenario, "--scenario")?;
    let scenario = Scenario::load(scenario_path).map_err(|e| match e {
        hoe::Error::Io { .. } => runtime(e),
        other => other.into(),
    })?;
    let seed = *cfg.seed.get_or_insert(scenario.seed);
    let params = if cfg.simulate.estimators.contains(&EstimatorKind::Model) {
        Some(load_params(&cfg)?)
    } else {
        None
    };
    let dir = out_dir(&cfg)?;
    let mut summaries = Vec::new();
    for &task in &cfg.simulate.tasks {
        for &kind in &cfg.simulate.estimators {
            let estimator = match kind {
                EstimatorKind::CvBaseline => Estimator::CvBaseline,
                EstimatorKind::GroundTruth => Estimator::GroundTruth,
                EstimatorKind::Model => Estimator::Model(params.as_ref().expect("loaded above")),
            };
            let run = run_scenario(&scenario, estimator, task, &cfg.sim, seed)?;
            write(
                &dir.join(format!("trajectory_{kind}_{task}.csv")),
                &trajectory_csv(&run.frames),
            )?;
            println!("{} {task} {kind}: ATE {:.4} m", scenario.name, run.ate_m);
            summaries.push(RunSummary::from(&run));
        }
    }
    let text = serde_json::to_string_pretty(&summaries).expect("summary serializes") + "\n";
    write(&dir.join("summary.json"), &text)?;
    cfg.save(&dir.join("config.json"))?;
    Ok(())
}
