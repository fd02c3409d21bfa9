//! Tensor algebra in an orthonormal (Mandel) 6-vector basis, projectors,
//! rotations, and fiber-orientation-triangle coordinate transforms.
//!
//! Symmetric 3x3 tensors are stored as 6-vectors with the shear slots scaled
//! by `sqrt(2)`, so the Euclidean inner product of two 6-vectors equals the
//! Frobenius inner product of the tensors and 6x6 operator transposes equal
//! tensor adjoints. Component order: `11, 22, 33, 23, 13, 12`.

mod orientation;
mod projectors;
mod tensor;

pub use orientation::{orientation_tensor_eig, Bary, OrientationPoint, ShapeKind};
pub use projectors::{
    axis_angle_rotation, iso_projectors, lamination_projector, mandel_rotation, rotate_stiffness,
};
pub use tensor::{Stiffness, SymMat, MANDEL_PAIRS};

pub(crate) use projectors::{jump_operator, lamination_projector_dn, lamination_projector_unchecked};
