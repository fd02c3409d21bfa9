//! Labeling of training datasets with the FFT oracle.
//!
//! One microstructure is generated per discretization point (seeded from
//! the run seed and the point index) and reused for every sample assigned
//! to it cyclically. Samples are labeled in parallel and merged in sample
//! order, so the result is independent of the thread count.

use rayon::prelude::*;

use super::microstructure::{generate_microstructure, GeneratorParams, VoxelMicrostructure};
use super::solver::{effective_stiffness_fft, FftSolveConfig};
use crate::error::{Error, Result};
use crate::training::{StiffnessSample, TriangleDiscretization};

/// Outcome of a labeling run: failures are dropped with a record.
#[derive(Debug, Default)]
pub struct LabelReport {
    /// `(sample index, reason)` of dropped samples.
    pub dropped: Vec<(usize, String)>,
    /// CG iterations summed over load cases, per surviving sample.
    pub iterations: Vec<usize>,
}

/// Generates the per-point microstructures for a discretization.
pub fn microstructures_for(
    discretization: &TriangleDiscretization,
    grid: usize,
    seed: u64,
) -> Result<Vec<VoxelMicrostructure>> {
    discretization
        .points()
        .iter()
        .enumerate()
        .map(|(index, point)| {
            let params = GeneratorParams::desk(point);
            generate_microstructure(&params, grid, seed ^ ((index as u64) << 32))
                .map_err(|e| Error::Numerical(format!("microstructure {index}: {e}")))
        })
        .collect()
}

/// Labels samples against per-point FFT solves of the matching
/// microstructures. Samples keep their cyclic point assignment; phase 1 is
/// the fiber, phase 2 the matrix.
pub fn build_training_labels(
    samples: &mut Vec<StiffnessSample>,
    discretization: &TriangleDiscretization,
    grid: usize,
    seed: u64,
    cfg: &FftSolveConfig,
) -> Result<LabelReport> {
    let microstructures = microstructures_for(discretization, grid, seed)?;
    let n_points = microstructures.len();

    let results: Vec<std::result::Result<(crate::mech::Stiffness<f64>, usize), String>> = samples
        .par_iter()
        .enumerate()
        .map(|(index, sample)| {
            let ms = &microstructures[index % n_points];
            effective_stiffness_fft(ms, &sample.stiffness_2, &sample.stiffness_1, cfg)
                .map(|(c, report)| (c, report.iterations.iter().sum()))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut report = LabelReport::default();
    let mut keep = Vec::with_capacity(samples.len());
    for (index, (sample, outcome)) in samples.drain(..).zip(results).enumerate() {
        match outcome {
            Ok((label, iterations)) => {
                let mut sample = sample;
                sample.label = Some(label);
                report.iterations.push(iterations);
                keep.push(sample);
            }
            Err(reason) => report.dropped.push((index, reason)),
        }
    }
    *samples = keep;
    Ok(report)
}
