//! Desk-scale linear-elastic FFT homogenizer on periodic voxel grids plus
//! a simplified fiber-microstructure generator; together they provide the
//! ground-truth effective stiffnesses for training and validation.

mod labels;
mod microstructure;
mod solver;

pub use labels::{build_training_labels, microstructures_for, LabelReport};
pub use microstructure::{
    generate_geometry, generate_microstructure, sample_directions, voxelize, FiberGeometry,
    GeneratorParams, VoxelMicrostructure,
};
pub use solver::{effective_stiffness_fft, FftReport, FftSolveConfig};
