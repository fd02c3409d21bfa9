use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Tolerance below which a triangle-inequality violation is clamped rather
/// than rejected; injection-molding orientation data carries roundoff.
const CLAMP_TOL: f64 = 1e-8;

/// Point `(lambda_1, lambda_2)` in the fiber-orientation triangle,
/// the two largest eigenvalues of the second-order orientation tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientationPoint<S: Real> {
    l1: S,
    l2: S,
}

impl<S: Real> OrientationPoint<S> {
    /// Validates `1/3 <= l1 <= 1` and `1 - 2 l1 <= l2 <= l1`, clamping
    /// violations smaller than `1e-8` to the boundary.
    pub fn new(l1: S, l2: S) -> Result<Self> {
        let tol = real::<S>(CLAMP_TOL);
        let third = S::one() / real::<S>(3.0);
        let lo1 = third;
        let hi1 = S::one();
        if l1 < lo1 - tol || l1 > hi1 + tol {
            return Err(Error::invalid(format!(
                "lambda_1 = {:?} outside [1/3, 1]",
                l1.to_f64()
            )));
        }
        let l1 = l1.clamp(lo1, hi1);
        let lo2 = S::one() - real::<S>(2.0) * l1;
        let hi2 = l1;
        if l2 < lo2 - tol || l2 > hi2 + tol {
            return Err(Error::invalid(format!(
                "lambda_2 = {:?} outside [1 - 2 lambda_1, lambda_1]",
                l2.to_f64()
            )));
        }
        let l2 = l2.clamp(lo2, hi2);
        Ok(Self { l1, l2 })
    }

    pub fn lambda_1(&self) -> S {
        self.l1
    }

    pub fn lambda_2(&self) -> S {
        self.l2
    }

    pub fn lambda_3(&self) -> S {
        S::one() - self.l1 - self.l2
    }

    pub fn to_barycentric(&self) -> Bary<S> {
        to_barycentric(self)
    }
}

/// Barycentric coordinates of an orientation point over the triangle corners
/// (unidirectional, isotropic, planar isotropic).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bary<S: Real> {
    phi: [S; 3],
}

impl<S: Real> Bary<S> {
    pub fn new(phi: [S; 3]) -> Result<Self> {
        let sum = phi[0] + phi[1] + phi[2];
        if (sum - S::one()).abs() > real::<S>(1e-12) {
            return Err(Error::invalid(format!(
                "barycentric coordinates must sum to one, got {:?}",
                sum.to_f64()
            )));
        }
        Ok(Self { phi })
    }

    pub fn coords(&self) -> [S; 3] {
        self.phi
    }

    /// Inverse of [`to_barycentric`]:
    /// `l1 = phi1 + phi2/3 + phi3/2`, `l2 = phi2/3 + phi3/2`.
    pub fn to_point(&self) -> Result<OrientationPoint<S>> {
        let third = S::one() / real::<S>(3.0);
        let half = real::<S>(0.5);
        let l2 = self.phi[1] * third + self.phi[2] * half;
        let l1 = self.phi[0] + l2;
        OrientationPoint::new(l1, l2)
    }
}

/// Transforms `(lambda_1, lambda_2)` to barycentric coordinates by solving
/// the fixed linear system tying the triangle corners to the eigenvalues.
pub fn to_barycentric<S: Real>(p: &OrientationPoint<S>) -> Bary<S> {
    let two = real::<S>(2.0);
    let phi1 = p.l1 - p.l2;
    let phi3 = two * (p.l1 + two * p.l2 - S::one());
    let phi2 = S::one() - phi1 - phi3;
    Bary { phi: [phi1, phi2, phi3] }
}

/// Polynomial families used for interpolating angles over the triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Linear,
    Trilinear,
    Quadratic,
}

impl ShapeKind {
    /// Number of shape functions in the family.
    pub fn count(&self) -> usize {
        match self {
            ShapeKind::Linear => 3,
            ShapeKind::Trilinear => 4,
            ShapeKind::Quadratic => 6,
        }
    }

    /// Evaluates the family at barycentric coordinates.
    pub fn eval<S: Real>(&self, b: &Bary<S>) -> Vec<S> {
        let [p1, p2, p3] = b.phi;
        match self {
            ShapeKind::Linear => vec![p1, p2, p3],
            ShapeKind::Trilinear => {
                let bubble = p1 * p2 * p3;
                let nine = real::<S>(9.0);
                vec![
                    p1 - nine * bubble,
                    p2 - nine * bubble,
                    p3 - nine * bubble,
                    real::<S>(27.0) * bubble,
                ]
            }
            ShapeKind::Quadratic => {
                let two = real::<S>(2.0);
                let four = real::<S>(4.0);
                vec![
                    p1 * (two * p1 - S::one()),
                    p2 * (two * p2 - S::one()),
                    p3 * (two * p3 - S::one()),
                    four * p1 * p2,
                    four * p1 * p3,
                    four * p2 * p3,
                ]
            }
        }
    }

    /// Interpolation nodes of the family, in shape-function order.
    pub fn nodes<S: Real>(&self) -> Vec<Bary<S>> {
        let one = S::one();
        let zero = S::zero();
        let third = one / real::<S>(3.0);
        let half = real::<S>(0.5);
        let corners = [[one, zero, zero], [zero, one, zero], [zero, zero, one]];
        let mut nodes: Vec<[S; 3]> = corners.to_vec();
        match self {
            ShapeKind::Linear => {}
            ShapeKind::Trilinear => nodes.push([third, third, third]),
            ShapeKind::Quadratic => {
                nodes.push([half, half, zero]);
                nodes.push([half, zero, half]);
                nodes.push([zero, half, half]);
            }
        }
        nodes.into_iter().map(|phi| Bary { phi }).collect()
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ShapeKind::Linear => "linear",
            ShapeKind::Trilinear => "trilinear",
            ShapeKind::Quadratic => "quadratic",
        };
        f.write_str(name)
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ShapeKind::Linear),
            "trilinear" | "tri-linear" => Ok(ShapeKind::Trilinear),
            "quadratic" => Ok(ShapeKind::Quadratic),
            other => Err(Error::invalid(format!("unknown interpolation kind '{other}'"))),
        }
    }
}

/// Eigendecomposition of a fiber-orientation tensor: descending eigenvalues,
/// proper rotation `Q` (det +1) whose columns are the eigenvectors.
pub fn orientation_tensor_eig<S: Real>(
    a2: &Matrix3<S>,
) -> Result<(Matrix3<S>, OrientationPoint<S>)> {
    let sym_dev = (a2 - a2.transpose()).norm();
    if sym_dev > real::<S>(1e-8) {
        return Err(Error::invalid("orientation tensor must be symmetric"));
    }
    let tr = a2.trace();
    if (tr - S::one()).abs() > real::<S>(1e-8) {
        return Err(Error::invalid(format!(
            "orientation tensor must have unit trace, got {:?}",
            tr.to_f64()
        )));
    }
    let eig = a2.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    // Stable descending sort so ties preserve the solver's vector order.
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals: Vec<S> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if vals[2] < -real::<S>(1e-8) {
        return Err(Error::invalid(
            "orientation tensor must be positive semidefinite",
        ));
    }
    let mut q = Matrix3::zeros();
    for (col, &i) in order.iter().enumerate() {
        q.set_column(col, &eig.eigenvectors.column(i).into_owned());
    }
    if q.determinant() < S::zero() {
        let flipped: Vector3<S> = -q.column(2);
        q.set_column(2, &flipped);
    }
    Ok((q, OrientationPoint::new(vals[0], vals[1])?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn barycentric_corners() {
        let cases = [
            ((1.0, 0.0), [1.0, 0.0, 0.0]),
            ((1.0 / 3.0, 1.0 / 3.0), [0.0, 1.0, 0.0]),
            ((0.5, 0.5), [0.0, 0.0, 1.0]),
        ];
        for ((l1, l2), expect) in cases {
            let b = OrientationPoint::new(l1, l2).unwrap().to_barycentric();
            for k in 0..3 {
                assert_relative_eq!(b.coords()[k], expect[k], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn barycentric_round_trip() {
        let p = OrientationPoint::new(0.62, 0.21).unwrap();
        let q = p.to_barycentric().to_point().unwrap();
        assert_relative_eq!(q.lambda_1(), 0.62, epsilon = 1e-12);
        assert_relative_eq!(q.lambda_2(), 0.21, epsilon = 1e-12);
    }

    #[test]
    fn tiny_violation_is_clamped_large_is_error() {
        let p = OrientationPoint::new(1.0 + 5e-9, -4e-9).unwrap();
        assert!(p.lambda_1() <= 1.0);
        assert!(OrientationPoint::new(1.02, 0.0).is_err());
        assert!(OrientationPoint::new(0.5, 0.51).is_err());
    }

    #[test]
    fn trilinear_centroid_hits_bubble_node() {
        let b = Bary::new([1.0 / 3.0; 3]).unwrap();
        let phi = ShapeKind::Trilinear.eval(&b);
        assert_relative_eq!(phi[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(phi[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(phi[2], 0.0, epsilon = 1e-15);
        assert_relative_eq!(phi[3], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn linear_corner_values() {
        let b = Bary::new([1.0, 0.0, 0.0]).unwrap();
        assert_eq!(ShapeKind::Linear.eval(&b), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn eig_sorts_descending_and_reconstructs() {
        let a2 = Matrix3::new(0.2, 0.05, 0.0, 0.05, 0.5, 0.01, 0.0, 0.01, 0.3);
        let (q, p) = orientation_tensor_eig(&a2).unwrap();
        let d = Matrix3::from_diagonal(&Vector3::new(
            p.lambda_1(),
            p.lambda_2(),
            p.lambda_3(),
        ));
        assert_relative_eq!(q * d * q.transpose(), a2, epsilon = 1e-10);
        assert!(q.determinant() > 0.0);
        assert!(p.lambda_1() >= p.lambda_2() && p.lambda_2() >= p.lambda_3());
    }

    #[test]
    fn eig_unidirectional_and_isotropic() {
        let a2 = Matrix3::from_diagonal(&Vector3::new(1.0, 0.0, 0.0));
        let (_, p) = orientation_tensor_eig(&a2).unwrap();
        assert_relative_eq!(p.lambda_1(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(p.lambda_2(), 0.0, epsilon = 1e-14);

        let a2 = Matrix3::identity() * (1.0 / 3.0);
        let (_, p) = orientation_tensor_eig(&a2).unwrap();
        assert_relative_eq!(p.lambda_1(), 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(p.lambda_2(), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_rejects_bad_trace() {
        let a2 = Matrix3::<f64>::identity();
        assert!(orientation_tensor_eig(&a2).is_err());
    }
}
