//! Sampling of phase-stiffness pairs for offline training.
//!
//! Phase 1 (fiber) is isotropic, `C1 = 3 K1 P1 + 2 G1 P2` with the bulk
//! modulus pinned to remove the homothetic redundancy. Phase 2 (matrix) is
//! isotropic minus a rank-one perturbation,
//! `C2 = 3 K2 P1 + 2 G2 (P2 - a N' x N')`, which spans the algorithmic
//! tangents of J2 elastoplasticity. Eight degrees of freedom
//! `(a, e1, e2, e3, beta, theta, psi, phi)` are drawn from a Sobol sequence
//! and mapped to their domains; orientations are assigned cyclically over
//! the active triangle discretization.

use nalgebra::{Matrix3, Vector3};

use super::sobol::SobolSeq;
use super::triangle::TriangleDiscretization;
use crate::error::Result;
use crate::mech::{axis_angle_rotation, iso_projectors, OrientationPoint, Stiffness, SymMat};

/// Fixed compression modulus of phase 1: 1 GPa in MPa units.
pub const K1_MPA: f64 = 1000.0;

/// The eight sampled degrees of freedom (moduli in MPa, angles in radians).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleParams {
    pub k1: f64,
    pub g1: f64,
    pub k2: f64,
    pub g2: f64,
    /// Rank-one perturbation strength in `[0, 1)`.
    pub a: f64,
    /// Angle parameterizing the diagonal deviator.
    pub beta: f64,
    /// Rotation angle (Haar-weighted via `theta - sin theta` uniform).
    pub theta: f64,
    /// Rotation axis inclination.
    pub psi: f64,
    /// Rotation axis azimuth.
    pub phi: f64,
}

/// One training record: parameters, realized stiffness pair, assigned
/// orientation and (after labeling) the effective stiffness.
#[derive(Clone, Debug)]
pub struct StiffnessSample {
    pub params: SampleParams,
    pub stiffness_1: Stiffness<f64>,
    pub stiffness_2: Stiffness<f64>,
    pub orientation: OrientationPoint<f64>,
    pub label: Option<Stiffness<f64>>,
}

/// Unit-Frobenius trace-free diagonal `N(beta)`.
///
/// Algebraically identical to parameterizing the diagonal by spherical
/// coordinates and eliminating the inclination through the trace
/// constraint, written in a form that stays stable where `cos + sin`
/// changes sign.
pub fn deviatoric_diagonal(beta: f64) -> Matrix3<f64> {
    let (s, c) = beta.sin_cos();
    let sum = c + s;
    let sign = if sum < 0.0 { -1.0 } else { 1.0 };
    let scale = sign / (2.0 * (1.0 + c * s)).sqrt();
    Matrix3::from_diagonal(&Vector3::new(-c * scale, -s * scale, sum * scale))
}

/// Inverse of the Haar angle distribution: solves `theta - sin theta = t`
/// on `[0, pi]` by bisection-safeguarded Newton.
pub fn haar_angle(t: f64) -> f64 {
    let target = t.clamp(0.0, std::f64::consts::PI);
    let mut lo = 0.0f64;
    let mut hi = std::f64::consts::PI;
    let mut x = std::f64::consts::FRAC_PI_2;
    for _ in 0..100 {
        let r = x - x.sin() - target;
        if r.abs() < 1e-14 {
            break;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = 1.0 - x.cos();
        let newton = if slope > 1e-12 { x - r / slope } else { 0.5 * (lo + hi) };
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    x
}

impl SampleParams {
    /// Maps a Sobol point in the unit 8-cube to the parameter domains.
    pub fn from_unit_cube(u: &[f64]) -> Self {
        assert_eq!(u.len(), 8);
        let exp = |x: f64| -3.0 + 6.0 * x;
        let gpa = 1000.0;
        Self {
            k1: K1_MPA,
            g1: 10f64.powf(exp(u[1])) * gpa,
            k2: 10f64.powf(exp(u[2])) * gpa,
            g2: 10f64.powf(exp(u[3])) * gpa,
            a: u[0],
            beta: std::f64::consts::TAU * u[4],
            theta: haar_angle(std::f64::consts::PI * u[5]),
            psi: std::f64::consts::PI * u[6],
            phi: std::f64::consts::TAU * u[7],
        }
    }

    /// Rotated deviator `N' = Q N Q^T` as a 6-vector.
    pub fn perturbation_direction(&self) -> SymMat<f64> {
        let n = deviatoric_diagonal(self.beta);
        let axis = Vector3::new(
            self.psi.sin() * self.phi.cos(),
            self.psi.sin() * self.phi.sin(),
            self.psi.cos(),
        );
        let q = axis_angle_rotation(&axis, self.theta);
        SymMat::from_tensor(&(q * n * q.transpose()))
    }

    /// Realizes the stiffness pair.
    pub fn stiffness_pair(&self) -> (Stiffness<f64>, Stiffness<f64>) {
        let (p1, p2) = iso_projectors::<f64>();
        let c1 = p1 * (3.0 * self.k1) + p2 * (2.0 * self.g1);
        let np = self.perturbation_direction();
        let mut rank_one = Stiffness::zero();
        let v = np.components();
        for i in 0..6 {
            for j in 0..6 {
                rank_one.matrix_mut()[(i, j)] = v[i] * v[j];
            }
        }
        let c2 = p1 * (3.0 * self.k2) + (p2 - rank_one * self.a) * (2.0 * self.g2);
        (c1, c2)
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.k1, self.g1, self.k2, self.g2, self.a, self.beta, self.theta, self.psi,
            self.phi,
        ]
    }

    pub fn from_array(x: &[f64; 9]) -> Self {
        Self {
            k1: x[0],
            g1: x[1],
            k2: x[2],
            g2: x[3],
            a: x[4],
            beta: x[5],
            theta: x[6],
            psi: x[7],
            phi: x[8],
        }
    }
}

/// Draws `n` stiffness samples with cyclically assigned orientations.
pub fn sample_stiffness_pairs(
    n: usize,
    seed: u64,
    discretization: &TriangleDiscretization,
) -> Result<Vec<StiffnessSample>> {
    let mut sobol = SobolSeq::new(8, seed)?;
    Ok((0..n)
        .map(|index| {
            let params = SampleParams::from_unit_cube(&sobol.next_point());
            let (stiffness_1, stiffness_2) = params.stiffness_pair();
            StiffnessSample {
                params,
                stiffness_1,
                stiffness_2,
                orientation: discretization.assign(index),
                label: None,
            }
        })
        .collect())
}
