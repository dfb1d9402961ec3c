//! Orientation network with a confidence head and an auxiliary heatmap head.

mod loss;
mod network;
mod params;
mod train;

pub use loss::{
    interp_dist, loss_conf, loss_kpt, loss_orientation, update_lambda, Confidence, LossBreakdown,
    CONFIDENCE_EPS, LAMBDA_MAX, LAMBDA_MIN,
};
pub use network::{
    backward, backward_batch, forward, forward_batch, input_matrix, mean_breakdown, model_joints,
    predict, predict_batch, total_loss, Activations, Output, Prediction, Targets,
};
pub use params::{
    Checkpoint, CheckpointConfig, Dense, LayerRecord, ModelConfig, ModelParams, MODEL_VERSION,
};
pub use train::{
    history_csv, train, train_with_validation, validation_metrics, write_history_csv, AdamW,
    EpochMetrics, TrainConfig, TrainOutcome, HISTORY_HEADER,
};
