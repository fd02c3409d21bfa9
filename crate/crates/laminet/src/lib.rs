//! Deep material networks (DMNs) built from hierarchical two-phase laminates.
//!
//! The crate covers the full workflow for fiber-reinforced materials whose
//! local fiber orientation varies across a component:
//!
//! * [`mech`] — tensor algebra in an orthonormal 6-vector basis, isotropic
//!   and lamination projectors, and the fiber-orientation triangle.
//! * [`laminate`] — the two-phase laminate homogenization kernel and its
//!   hand-written reverse-mode derivative.
//! * [`model`] — the DMN tree: orientation-interpolated lamination
//!   directions, input weights, linear forward pass, tree compression and
//!   model files.
//! * [`gsm`] — generalized standard materials (linear elasticity and J2
//!   elastoplasticity) exposing condensed-energy stress and algorithmic
//!   tangent.
//! * [`online`] — inelastic evaluation of a trained DMN at a material
//!   point: sparse gradient operator, Newton solver with backtracking,
//!   effective stress and consistent tangent.
//! * [`training`] — stiffness sampling, dataset files, the stiffness
//!   regression loss with gradients, and the AMSGrad trainer.
//! * [`fft`] — a desk-scale linear-elastic FFT homogenizer on periodic
//!   voxel grids plus a simplified fiber microstructure generator, used to
//!   label training data.
//!
//! The numeric kernels are generic over the scalar type through [`Real`];
//! the aliases below fix `f64` for everyday use.

pub mod error;
pub mod fft;
pub mod gsm;
pub mod laminate;
pub mod mech;
pub mod model;
pub mod online;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Real;

/// Symmetric second-order tensor (strain/stress) with `f64` components.
pub type SymMat = mech::SymMat<f64>;
/// 6x6 stiffness matrix with `f64` components.
pub type Stiffness = mech::Stiffness<f64>;
/// Point in the fiber-orientation triangle, `f64` components.
pub type OrientationPoint = mech::OrientationPoint<f64>;
/// Barycentric coordinates on the orientation triangle, `f64` components.
pub type Bary = mech::Bary<f64>;
/// Two-phase laminate input with `f64` components.
pub type LaminateInput = laminate::LaminateInput<f64>;
/// DMN model with `f64` parameters.
pub type DmnModel = model::DmnModel<f64>;
/// Compressed DMN topology with `f64` coefficients.
pub type CompressedTopology = model::CompressedTopology<f64>;
/// Material definition with `f64` parameters.
pub type GsmSpec = gsm::GsmSpec<f64>;
/// Internal-variable state with `f64` components.
pub type GsmState = gsm::GsmState<f64>;
/// Assembled per-material-point context with `f64` components.
pub type GaussPointContext = online::GaussPointContext<f64>;
/// Per-material-point state with `f64` components.
pub type MaterialPointState = online::MaterialPointState<f64>;
