//! Training, prediction, bias correction and the input-window sweep.

mod correct;
mod grid;
mod scenario;
mod train;

pub use correct::{apply_bias_correction, correct_station, correct_storm, write_corrected_csv, CorrectedRow, EmissionPolicy};
pub use grid::{grid_search_input_window, select_best, GridRow, GridSearch};
pub use scenario::{
    evaluate_model, offset_metrics, run_experiment, Architecture, Evaluation, Experiment, ScenarioConfig, ScenarioData,
};
pub use train::{continue_training, epoch_permutation, train, train_with_progress, TrainedModel, TrainingConfig};
