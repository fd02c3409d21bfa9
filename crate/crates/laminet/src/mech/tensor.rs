use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix6, Vector6};

use crate::scalar::{real, Real};

/// Tensor index pairs backing the 6-vector slots, in storage order.
pub const MANDEL_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

#[inline]
fn shear_weight<S: Real>(slot: usize) -> S {
    if slot < 3 {
        S::one()
    } else {
        real::<S>(2.0).sqrt()
    }
}

/// Symmetric 3x3 tensor in orthonormal 6-vector form (strain or stress).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat<S: Real> {
    v: Vector6<S>,
}

impl<S: Real> SymMat<S> {
    pub fn new(v: Vector6<S>) -> Self {
        Self { v }
    }

    pub fn zero() -> Self {
        Self { v: Vector6::zeros() }
    }

    /// The identity tensor.
    pub fn identity() -> Self {
        let mut v = Vector6::zeros();
        v[0] = S::one();
        v[1] = S::one();
        v[2] = S::one();
        Self { v }
    }

    /// Builds from the symmetric part of a 3x3 matrix.
    pub fn from_tensor(t: &Matrix3<S>) -> Self {
        let half = real::<S>(0.5);
        let mut v = Vector6::zeros();
        for (slot, &(i, j)) in MANDEL_PAIRS.iter().enumerate() {
            let sym = (t[(i, j)] + t[(j, i)]) * half;
            v[slot] = sym * shear_weight::<S>(slot);
        }
        Self { v }
    }

    /// Recovers the full 3x3 tensor.
    pub fn to_tensor(&self) -> Matrix3<S> {
        let mut t = Matrix3::zeros();
        for (slot, &(i, j)) in MANDEL_PAIRS.iter().enumerate() {
            let c = self.v[slot] / shear_weight::<S>(slot);
            t[(i, j)] = c;
            t[(j, i)] = c;
        }
        t
    }

    /// `amplitude * sym(e_i x e_j)`, the uniaxial strain loadings.
    pub fn uniaxial(i: usize, j: usize, amplitude: S) -> Self {
        let mut t = Matrix3::zeros();
        let half = real::<S>(0.5);
        if i == j {
            t[(i, j)] = amplitude;
        } else {
            t[(i, j)] = amplitude * half;
            t[(j, i)] = amplitude * half;
        }
        Self::from_tensor(&t)
    }

    pub fn components(&self) -> &Vector6<S> {
        &self.v
    }

    pub fn components_mut(&mut self) -> &mut Vector6<S> {
        &mut self.v
    }

    /// Tensor component `(i, j)` (not the scaled slot value).
    pub fn tensor_component(&self, i: usize, j: usize) -> S {
        let slot = MANDEL_PAIRS
            .iter()
            .position(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i))
            .expect("index out of range");
        self.v[slot] / shear_weight::<S>(slot)
    }

    pub fn trace(&self) -> S {
        self.v[0] + self.v[1] + self.v[2]
    }

    /// Frobenius norm; equals the norm of the underlying 3x3 tensor.
    pub fn norm(&self) -> S {
        self.v.norm()
    }

    pub fn dot(&self, other: &Self) -> S {
        self.v.dot(&other.v)
    }

    pub fn deviator(&self) -> Self {
        let third = self.trace() / real::<S>(3.0);
        let mut v = self.v;
        v[0] -= third;
        v[1] -= third;
        v[2] -= third;
        Self { v }
    }
}

impl<S: Real> Add for SymMat<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { v: self.v + rhs.v }
    }
}

impl<S: Real> AddAssign for SymMat<S> {
    fn add_assign(&mut self, rhs: Self) {
        self.v += rhs.v;
    }
}

impl<S: Real> Sub for SymMat<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { v: self.v - rhs.v }
    }
}

impl<S: Real> Mul<S> for SymMat<S> {
    type Output = Self;
    fn mul(self, rhs: S) -> Self {
        Self { v: self.v * rhs }
    }
}

impl<S: Real> Neg for SymMat<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v }
    }
}

/// Fourth-order stiffness-like operator as a 6x6 matrix in the same basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stiffness<S: Real> {
    m: Matrix6<S>,
}

impl<S: Real> Stiffness<S> {
    pub fn new(m: Matrix6<S>) -> Self {
        Self { m }
    }

    pub fn zero() -> Self {
        Self { m: Matrix6::zeros() }
    }

    pub fn identity() -> Self {
        Self { m: Matrix6::identity() }
    }

    /// Isotropic stiffness `3K P1 + 2G P2` from bulk and shear moduli.
    pub fn isotropic(bulk: S, shear: S) -> Self {
        let (p1, p2) = super::projectors::iso_projectors::<S>();
        p1 * (real::<S>(3.0) * bulk) + p2 * (real::<S>(2.0) * shear)
    }

    pub fn matrix(&self) -> &Matrix6<S> {
        &self.m
    }

    pub fn matrix_mut(&mut self) -> &mut Matrix6<S> {
        &mut self.m
    }

    pub fn apply(&self, e: &SymMat<S>) -> SymMat<S> {
        SymMat::new(self.m * e.components())
    }

    pub fn transpose(&self) -> Self {
        Self { m: self.m.transpose() }
    }

    pub fn try_inverse(&self) -> Option<Self> {
        self.m.try_inverse().map(|m| Self { m })
    }

    pub fn norm(&self) -> S {
        self.m.norm()
    }

    /// Entry-wise l1 norm of the 6x6 matrix.
    pub fn norm_l1(&self) -> S {
        self.m.iter().fold(S::zero(), |acc, &x| acc + x.abs())
    }

    /// Relative deviation from symmetry, `|M - M^T| / |M|`.
    pub fn asymmetry(&self) -> S {
        let n = self.m.norm();
        if n == S::zero() {
            return S::zero();
        }
        (self.m - self.m.transpose()).norm() / n
    }

    pub fn is_symmetric(&self, rel_tol: S) -> bool {
        self.asymmetry() <= rel_tol
    }

    pub fn symmetrized(&self) -> Self {
        Self { m: (self.m + self.m.transpose()) * real::<S>(0.5) }
    }

    /// Checked on demand; training samples may be near-singular.
    pub fn is_positive_definite(&self) -> bool {
        self.m.clone().cholesky().is_some()
    }

    /// Eigenvalue range of the symmetrized matrix.
    pub fn eigen_range(&self) -> (S, S) {
        let eig = self.symmetrized().m.symmetric_eigen().eigenvalues;
        let mut lo = eig[0];
        let mut hi = eig[0];
        for k in 1..6 {
            lo = lo.min(eig[k]);
            hi = hi.max(eig[k]);
        }
        (lo, hi)
    }
}

impl<S: Real> Add for Stiffness<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { m: self.m + rhs.m }
    }
}

impl<S: Real> Sub for Stiffness<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { m: self.m - rhs.m }
    }
}

impl<S: Real> Mul<S> for Stiffness<S> {
    type Output = Self;
    fn mul(self, rhs: S) -> Self {
        Self { m: self.m * rhs }
    }
}

impl<S: Real> Mul for Stiffness<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self { m: self.m * rhs.m }
    }
}

impl<S: Real> Neg for Stiffness<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { m: -self.m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_trip_preserves_tensor() {
        let t = Matrix3::new(1.0, 0.5, -0.25, 0.5, 2.0, 0.75, -0.25, 0.75, 3.0);
        let s = SymMat::<f64>::from_tensor(&t);
        assert_relative_eq!(s.to_tensor(), t, epsilon = 1e-15);
    }

    #[test]
    fn norm_matches_tensor_frobenius() {
        let t = Matrix3::new(1.0, 0.5, -0.25, 0.5, 2.0, 0.75, -0.25, 0.75, 3.0);
        let s = SymMat::<f64>::from_tensor(&t);
        assert_relative_eq!(s.norm(), t.norm(), epsilon = 1e-14);
    }

    #[test]
    fn isotropic_applies_bulk_and_shear() {
        let c = Stiffness::<f64>::isotropic(2.0, 1.5);
        // Spherical strain responds with 3K, deviatoric with 2G.
        let sph = SymMat::identity();
        let resp = c.apply(&sph);
        assert_relative_eq!(resp.components()[0], 3.0 * 2.0, epsilon = 1e-14);
        let dev = SymMat::uniaxial(0, 1, 1.0);
        let resp = c.apply(&dev);
        assert_relative_eq!(resp.tensor_component(0, 1), 2.0 * 1.5 * 0.5, epsilon = 1e-14);
    }

    #[test]
    fn uniaxial_offdiagonal_is_symmetrized() {
        let e = SymMat::<f64>::uniaxial(0, 2, 0.02);
        assert_relative_eq!(e.tensor_component(0, 2), 0.01, epsilon = 1e-16);
        assert_relative_eq!(e.trace(), 0.0, epsilon = 1e-16);
    }
}
