//! Offline identification: stiffness sampling, dataset files, the
//! penalized relative-error loss with reverse-mode gradients, and the
//! AMSGrad trainer with cosine warm restarts.

mod dataset;
mod label;
mod loss;
mod optimizer;
mod sampling;
mod sobol;
mod trainer;
mod triangle;

pub use dataset::Dataset;
pub use label::{label_samples, Labeler};
pub use loss::{error_report, loss, loss_and_gradients, sample_error, ErrorReport, LossConfig};
pub use optimizer::{AmsGrad, LrSchedule};
pub use sampling::{
    deviatoric_diagonal, haar_angle, sample_stiffness_pairs, SampleParams, StiffnessSample,
    K1_MPA,
};
pub use sobol::{SobolSeq, MAX_DIMENSIONS};
pub use trainer::{init_model, train, HistoryRow, TrainConfig, TrainOutcome, TrainingHistory};
pub use triangle::TriangleDiscretization;
