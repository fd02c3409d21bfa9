//! Generalized standard material kernels: linear elasticity and J2
//! elastoplasticity with exponential-linear or power-law hardening.
//!
//! Every material exposes the implicit-Euler condensed update: given the
//! committed internal variables and a total strain, it returns the stress,
//! the algorithmic (consistent) tangent and the would-be-committed state.

mod j2;

pub use j2::von_mises;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mech::{Stiffness, SymMat};
use crate::scalar::{real, Real};

/// Isotropic hardening laws for the J2 model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Hardening<S: Real> {
    /// `sigma_Y = sigma_0 + k_inf ep + (sigma_inf - sigma_0)
    ///  (1 - exp(-(k_0 - k_inf)/(sigma_inf - sigma_0) ep))`
    ExpLinear { sigma_0: S, sigma_inf: S, k_0: S, k_inf: S },
    /// `sigma_Y = sigma_0 + k ep^m`
    PowerLaw { sigma_0: S, k: S, m: S },
}

/// Derivative guard for the power law at `ep = 0` (singular for `m < 1`).
const POWER_LAW_EP_MIN: f64 = 1e-12;

impl<S: Real> Hardening<S> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Hardening::ExpLinear { sigma_0, sigma_inf, k_0, k_inf } => {
                if sigma_0 < S::zero() || sigma_inf < sigma_0 {
                    return Err(Error::invalid("need sigma_inf >= sigma_0 >= 0"));
                }
                if k_inf < S::zero() || k_0 < k_inf {
                    return Err(Error::invalid("need k_0 >= k_inf >= 0"));
                }
            }
            Hardening::PowerLaw { sigma_0, k, m } => {
                if sigma_0 < S::zero() || k < S::zero() || m <= S::zero() || m > S::one() {
                    return Err(Error::invalid("need sigma_0, k >= 0 and 0 < m <= 1"));
                }
            }
        }
        Ok(())
    }

    /// Yield stress at accumulated plastic strain `ep`.
    pub fn yield_stress(&self, ep: S) -> S {
        match *self {
            Hardening::ExpLinear { sigma_0, sigma_inf, k_0, k_inf } => {
                let ds = sigma_inf - sigma_0;
                if ds <= S::zero() {
                    // Saturation collapses onto the linear term.
                    return sigma_0 + k_inf * ep;
                }
                sigma_0 + k_inf * ep + ds * (S::one() - (-(k_0 - k_inf) / ds * ep).exp())
            }
            Hardening::PowerLaw { sigma_0, k, m } => sigma_0 + k * ep.powf(m),
        }
    }

    /// Hardening slope `d sigma_Y / d ep`.
    pub fn slope(&self, ep: S) -> S {
        match *self {
            Hardening::ExpLinear { sigma_0, sigma_inf, k_0, k_inf } => {
                let ds = sigma_inf - sigma_0;
                if ds <= S::zero() {
                    return k_inf;
                }
                k_inf + (k_0 - k_inf) * (-(k_0 - k_inf) / ds * ep).exp()
            }
            Hardening::PowerLaw { k, m, .. } => {
                // Singular at zero for m < 1; offset inside the derivative
                // only.
                let ep = ep.max(real::<S>(POWER_LAW_EP_MIN));
                k * m * ep.powf(m - S::one())
            }
        }
    }

    /// Stored hardening energy `int_0^ep (sigma_Y(s) - sigma_0) ds`.
    pub fn stored_energy(&self, ep: S) -> S {
        match *self {
            Hardening::ExpLinear { sigma_0, sigma_inf, k_0, k_inf } => {
                let half = real::<S>(0.5);
                let ds = sigma_inf - sigma_0;
                if ds <= S::zero() {
                    return half * k_inf * ep * ep;
                }
                let b = (k_0 - k_inf) / ds;
                half * k_inf * ep * ep + ds * (ep + ((-b * ep).exp() - S::one()) / b)
            }
            Hardening::PowerLaw { k, m, .. } => k * ep.powf(m + S::one()) / (m + S::one()),
        }
    }
}

/// Material definition: elastic constants plus an optional J2 yield model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GsmSpec<S: Real> {
    /// Young's modulus (MPa).
    #[serde(rename = "E")]
    pub youngs: S,
    /// Poisson ratio.
    pub nu: S,
    /// `None` for linear elasticity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardening: Option<Hardening<S>>,
}

impl<S: Real> GsmSpec<S> {
    pub fn linear_elastic(youngs: S, nu: S) -> Result<Self> {
        Self::new(youngs, nu, None)
    }

    pub fn j2(youngs: S, nu: S, hardening: Hardening<S>) -> Result<Self> {
        Self::new(youngs, nu, Some(hardening))
    }

    pub fn new(youngs: S, nu: S, hardening: Option<Hardening<S>>) -> Result<Self> {
        if youngs <= S::zero() {
            return Err(Error::invalid("Young's modulus must be positive"));
        }
        if nu <= -S::one() || nu >= real::<S>(0.5) {
            return Err(Error::invalid("Poisson ratio must lie in (-1, 0.5)"));
        }
        if let Some(h) = &hardening {
            h.validate()?;
        }
        Ok(Self { youngs, nu, hardening })
    }

    pub fn is_plastic(&self) -> bool {
        self.hardening.is_some()
    }

    pub fn bulk_modulus(&self) -> S {
        self.youngs / (real::<S>(3.0) * (S::one() - real::<S>(2.0) * self.nu))
    }

    pub fn shear_modulus(&self) -> S {
        self.youngs / (real::<S>(2.0) * (S::one() + self.nu))
    }

    /// Elastic stiffness `3K P1 + 2G P2`.
    pub fn stiffness(&self) -> Stiffness<S> {
        Stiffness::isotropic(self.bulk_modulus(), self.shear_modulus())
    }
}

impl GsmSpec<f64> {
    /// Parses the JSON material format used by the parameter files.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let spec: GsmSpec<f64> = serde_json::from_slice(bytes)?;
        Self::new(spec.youngs, spec.nu, spec.hardening)
    }
}

/// Internal variables: deviatoric plastic strain and its accumulated
/// magnitude. Remains zero for elastic materials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GsmState<S: Real> {
    pub plastic_strain: SymMat<S>,
    pub accumulated: S,
}

impl<S: Real> GsmState<S> {
    pub fn initial() -> Self {
        Self { plastic_strain: SymMat::zero(), accumulated: S::zero() }
    }
}

/// Replaces the committed state by a trial state from `stress_and_tangent`.
pub fn commit<S: Real>(state: &mut GsmState<S>, trial: GsmState<S>) {
    *state = trial;
}

/// Implicit-Euler condensed update.
///
/// Returns stress, algorithmic tangent and the trial (not yet committed)
/// state. The time increment is accepted for interface generality; the
/// rate-independent models here do not use it.
pub fn stress_and_tangent<S: Real>(
    spec: &GsmSpec<S>,
    state: &GsmState<S>,
    strain: &SymMat<S>,
    _dt: S,
) -> Result<(SymMat<S>, Stiffness<S>, GsmState<S>)> {
    match &spec.hardening {
        None => {
            let c = spec.stiffness();
            Ok((c.apply(strain), c, *state))
        }
        Some(h) => j2::radial_return(spec, h, state, strain),
    }
}

/// Condensed free energy at the given strain and committed state:
/// elastic energy plus stored hardening energy.
pub fn free_energy<S: Real>(spec: &GsmSpec<S>, state: &GsmState<S>, strain: &SymMat<S>) -> S {
    let elastic = *strain - state.plastic_strain;
    let sigma = spec.stiffness().apply(&elastic);
    let half = real::<S>(0.5);
    let stored = match &spec.hardening {
        None => S::zero(),
        Some(h) => h.stored_energy(state.accumulated),
    };
    half * sigma.dot(&elastic) + stored
}

#[cfg(test)]
pub(crate) fn polyamide_for_tests() -> GsmSpec<f64> {
    GsmSpec::j2(
        2100.0,
        0.3,
        Hardening::ExpLinear { sigma_0: 29.0, sigma_inf: 61.7, k_0: 10_600.0, k_inf: 139.0 },
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn polyamide() -> GsmSpec<f64> {
        polyamide_for_tests()
    }

    #[test]
    fn hardening_endpoints() {
        let h = polyamide().hardening.unwrap();
        assert_relative_eq!(h.yield_stress(0.0), 29.0, epsilon = 1e-12);
        // Initial slope is k_0, asymptotic slope k_inf.
        assert_relative_eq!(h.slope(0.0), 10_600.0, epsilon = 1e-9);
        assert_relative_eq!(h.slope(1e3), 139.0, epsilon = 1e-9);
        let (e1, e2) = (h.yield_stress(10.0), h.yield_stress(11.0));
        assert_relative_eq!(e2 - e1, 139.0, epsilon = 1e-6);
    }

    #[test]
    fn stored_energy_matches_quadrature() {
        let h = polyamide().hardening.unwrap();
        let ep = 0.07;
        let n = 20_000;
        let mut sum = 0.0;
        for i in 0..n {
            let s = ep * (i as f64 + 0.5) / n as f64;
            sum += (h.yield_stress(s) - 29.0) * ep / n as f64;
        }
        assert_relative_eq!(h.stored_energy(ep), sum, max_relative = 1e-6);
    }

    #[test]
    fn power_law_slope_is_guarded_at_zero() {
        let h = Hardening::<f64>::PowerLaw { sigma_0: 75.0, k: 416.0, m: 0.3895 };
        assert!(h.slope(0.0).is_finite());
        assert!(h.slope(0.0) > 0.0);
        assert_relative_eq!(h.yield_stress(0.0), 75.0, epsilon = 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(GsmSpec::linear_elastic(-1.0, 0.3).is_err());
        assert!(GsmSpec::linear_elastic(1.0, 0.5).is_err());
        assert!(GsmSpec::j2(
            1.0,
            0.3,
            Hardening::ExpLinear { sigma_0: 10.0, sigma_inf: 5.0, k_0: 1.0, k_inf: 0.0 }
        )
        .is_err());
    }

    #[test]
    fn elastic_update_is_linear() {
        let spec = GsmSpec::linear_elastic(72_000.0, 0.22).unwrap();
        let eps = SymMat::uniaxial(0, 0, 1e-3) + SymMat::uniaxial(1, 2, 4e-4);
        let (sigma, tangent, trial) =
            stress_and_tangent(&spec, &GsmState::initial(), &eps, 1.0).unwrap();
        assert_relative_eq!(
            sigma.components(),
            spec.stiffness().apply(&eps).components(),
            epsilon = 1e-12
        );
        assert_relative_eq!(tangent.matrix(), spec.stiffness().matrix(), epsilon = 1e-12);
        assert_eq!(trial, GsmState::initial());
    }

    #[test]
    fn material_json_round_trip() {
        let spec = polyamide();
        let text = serde_json::to_string(&spec).unwrap();
        let back = GsmSpec::<f64>::from_json(text.as_bytes()).unwrap();
        assert_eq!(spec, back);
        let aluminum = r#"{
            "E": 75000.0, "nu": 0.3,
            "hardening": {"law": "power_law", "sigma_0": 75.0, "k": 416.0, "m": 0.3895}
        }"#;
        let a = GsmSpec::<f64>::from_json(aluminum.as_bytes()).unwrap();
        assert!(a.is_plastic());
    }
}
