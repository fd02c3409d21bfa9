use nalgebra::{Matrix3, Matrix6, Matrix6x3, Vector3, Vector6};

use super::tensor::{Stiffness, SymMat};
use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Spherical and deviatoric projectors `(P1, P2)` with `P1 + P2 = I`.
pub fn iso_projectors<S: Real>() -> (Stiffness<S>, Stiffness<S>) {
    let mut m = Vector6::<S>::zeros();
    m[0] = S::one();
    m[1] = S::one();
    m[2] = S::one();
    let p1 = Matrix6::from_fn(|i, j| m[i] * m[j] / real::<S>(3.0));
    let p2 = Matrix6::identity() - p1;
    (Stiffness::new(p1), Stiffness::new(p2))
}

/// `P(n) eps = n x (eps n) + (eps n) x n - (n . eps n) n x n`, the projection
/// onto strains of the form `sym(a x n)`.
fn apply_lamination<S: Real>(n: &Vector3<S>, eps: &Matrix3<S>) -> Matrix3<S> {
    let en = eps * n;
    let nen = n.dot(&en);
    n * en.transpose() + en * n.transpose() - (n * n.transpose()) * nen
}

pub(crate) fn lamination_projector_unchecked<S: Real>(n: &Vector3<S>) -> Stiffness<S> {
    let mut m = Matrix6::<S>::zeros();
    for j in 0..6 {
        let mut basis = Vector6::zeros();
        basis[j] = S::one();
        let col = SymMat::from_tensor(&apply_lamination(n, &SymMat::new(basis).to_tensor()));
        m.set_column(j, col.components());
    }
    Stiffness::new(m)
}

/// Lamination projector `P(n)` for a unit direction `n`.
pub fn lamination_projector<S: Real>(n: &Vector3<S>) -> Result<Stiffness<S>> {
    let tol = real::<S>(1e-12);
    if (n.norm() - S::one()).abs() > tol {
        return Err(Error::invalid(format!(
            "lamination direction must be a unit vector, |n| = {:?}",
            n.norm().to_f64()
        )));
    }
    Ok(lamination_projector_unchecked(n))
}

/// Partial derivatives of `P(n)` with respect to the three components of `n`.
pub(crate) fn lamination_projector_dn<S: Real>(n: &Vector3<S>) -> [Matrix6<S>; 3] {
    let mut out = [Matrix6::zeros(), Matrix6::zeros(), Matrix6::zeros()];
    for r in 0..3 {
        let mut er = Vector3::zeros();
        er[r] = S::one();
        for j in 0..6 {
            let mut basis = Vector6::zeros();
            basis[j] = S::one();
            let eps = SymMat::new(basis).to_tensor();
            let en = eps * n;
            let eer = eps * er;
            let nen = n.dot(&en);
            // d/dn_r of n x (eps n) + (eps n) x n - (n . eps n) n x n
            let d = er * en.transpose()
                + n * eer.transpose()
                + eer * n.transpose()
                + en * er.transpose()
                - (n * n.transpose()) * (er.dot(&en) + n.dot(&eer))
                - (er * n.transpose() + n * er.transpose()) * nen;
            out[r].set_column(j, SymMat::from_tensor(&d).components());
        }
    }
    out
}

/// `B(n)`: maps a jump vector `a` to the 6-vector of `sym(a x n)`.
pub(crate) fn jump_operator<S: Real>(n: &Vector3<S>) -> Matrix6x3<S> {
    let mut b = Matrix6x3::zeros();
    for j in 0..3 {
        let mut a = Vector3::zeros();
        a[j] = S::one();
        let half = real::<S>(0.5);
        let sym = (a * n.transpose() + n * a.transpose()) * half;
        b.set_column(j, SymMat::from_tensor(&sym).components());
    }
    b
}

/// 6x6 representation of the rotation `Q x Q` acting on symmetric tensors.
pub fn mandel_rotation<S: Real>(q: &Matrix3<S>) -> Matrix6<S> {
    let mut r = Matrix6::zeros();
    for j in 0..6 {
        let mut basis = Vector6::zeros();
        basis[j] = S::one();
        let t = SymMat::new(basis).to_tensor();
        let rotated = q * t * q.transpose();
        r.set_column(j, SymMat::from_tensor(&rotated).components());
    }
    r
}

/// Rotates a stiffness by an orthogonal matrix: `R(Q) C R(Q)^T`.
pub fn rotate_stiffness<S: Real>(c: &Stiffness<S>, q: &Matrix3<S>) -> Result<Stiffness<S>> {
    let dev = (q.transpose() * q - Matrix3::identity()).norm();
    if dev > real::<S>(1e-10) {
        return Err(Error::invalid(format!(
            "rotation must be orthogonal, |Q^T Q - I| = {:?}",
            dev.to_f64()
        )));
    }
    let r = mandel_rotation(q);
    Ok(Stiffness::new(r * c.matrix() * r.transpose()))
}

/// Rotation about `axis` (unit vector) by `angle`, Rodrigues form.
pub fn axis_angle_rotation<S: Real>(axis: &Vector3<S>, angle: S) -> Matrix3<S> {
    let (s, c) = (angle.sin(), angle.cos());
    let n = axis.normalize();
    let k = Matrix3::new(
        S::zero(),
        -n[2],
        n[1],
        n[2],
        S::zero(),
        -n[0],
        -n[1],
        n[0],
        S::zero(),
    );
    Matrix3::identity() + k * s + k * k * (S::one() - c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn iso_projectors_partition_identity() {
        let (p1, p2) = iso_projectors::<f64>();
        assert_relative_eq!(p1.matrix() + p2.matrix(), Matrix6::identity(), epsilon = 1e-15);
        assert_relative_eq!(p1.matrix() * p1.matrix(), *p1.matrix(), epsilon = 1e-15);
        assert_relative_eq!((p1.matrix() * p2.matrix()).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(p1.matrix().trace(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(p2.matrix().trace(), 5.0, epsilon = 1e-15);
    }

    #[test]
    fn iso_projector_annihilates_deviators() {
        let (p1, _) = iso_projectors::<f64>();
        let dev = SymMat::uniaxial(0, 0, 2.0).deviator();
        assert_relative_eq!(p1.apply(&dev).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lamination_projector_e3_structure() {
        let n = Vector3::new(0.0, 0.0, 1.0);
        let p = lamination_projector(&n).unwrap();
        // Projection onto sym(a x e3): slots 33, 23, 13 survive.
        let diag: Vec<f64> = (0..6).map(|i| p.matrix()[(i, i)]).collect();
        let nonzero = diag.iter().filter(|d| d.abs() > 1e-14).count();
        assert_eq!(nonzero, 3);
        assert_relative_eq!(diag[2], 1.0, epsilon = 1e-14);
        assert_relative_eq!(diag[3], 1.0, epsilon = 1e-14);
        assert_relative_eq!(diag[4], 1.0, epsilon = 1e-14);
        // Idempotent as a map.
        assert_relative_eq!(p.matrix() * p.matrix(), *p.matrix(), epsilon = 1e-14);
    }

    #[test]
    fn lamination_projector_rejects_non_unit() {
        let n = Vector3::new(0.0, 0.0, 2.0);
        assert!(lamination_projector(&n).is_err());
    }

    #[test]
    fn rotation_of_isotropic_is_identity_map() {
        let c = Stiffness::<f64>::isotropic(3.0, 1.2);
        let q = axis_angle_rotation(&Vector3::new(1.0, 2.0, -0.5), 0.9);
        let r = rotate_stiffness(&c, &q).unwrap();
        assert_relative_eq!(r.matrix(), c.matrix(), epsilon = 1e-10);
    }

    #[test]
    fn rotate_stiffness_identity() {
        let c = Stiffness::<f64>::isotropic(3.0, 1.2);
        let r = rotate_stiffness(&c, &Matrix3::identity()).unwrap();
        assert_relative_eq!(r.matrix(), c.matrix(), epsilon = 1e-15);
    }

    #[test]
    fn rotate_stiffness_rejects_non_orthogonal() {
        let c = Stiffness::<f64>::isotropic(3.0, 1.2);
        let q = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(rotate_stiffness(&c, &q).is_err());
    }
}
