//! Sample labeling: FFT oracle or a target model (self-labeling).

use super::dataset::Dataset;
use super::TriangleDiscretization;
use crate::error::{Error, Result};
use crate::fft::{build_training_labels, FftSolveConfig, LabelReport};
use crate::laminate::default_alpha;
use crate::model::DmnModel;

/// Sources of effective-stiffness labels.
pub enum Labeler<'a> {
    /// Full-field solves on per-orientation voxel microstructures.
    FftOracle { grid: usize, config: FftSolveConfig },
    /// Forward passes of an existing model (identifiability studies).
    TargetDmn { model: &'a DmnModel<f64> },
}

/// Labels a dataset in place; failed samples are dropped and reported.
pub fn label_samples(dataset: &mut Dataset, labeler: &Labeler<'_>) -> Result<LabelReport> {
    match labeler {
        Labeler::FftOracle { grid, config } => {
            let discretization = TriangleDiscretization::by_name(&dataset.discretization)?;
            build_training_labels(
                &mut dataset.samples,
                &discretization,
                *grid,
                dataset.seed,
                config,
            )
        }
        Labeler::TargetDmn { model } => {
            let mut report = LabelReport::default();
            for sample in dataset.samples.iter_mut() {
                let alpha = default_alpha(&sample.stiffness_1, &sample.stiffness_2);
                let label = model
                    .forward_stiffness(
                        &sample.stiffness_1,
                        &sample.stiffness_2,
                        &sample.orientation,
                        alpha,
                    )
                    .map_err(|e| Error::numerical(format!("target model labeling: {e}")))?;
                sample.label = Some(label);
                report.iterations.push(0);
            }
            Ok(report)
        }
    }
}
