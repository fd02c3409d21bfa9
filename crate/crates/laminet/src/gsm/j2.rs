//! Radial return for small-strain J2 elastoplasticity with isotropic
//! hardening, plus the algorithmic tangent of the time-discrete update.

use super::{GsmSpec, GsmState, Hardening};
use crate::error::{Error, Result};
use crate::mech::{iso_projectors, Stiffness, SymMat};
use crate::scalar::{real, Real};

/// Relative tolerance of the scalar consistency equation.
const RETURN_TOL: f64 = 1e-12;
const RETURN_MAX_ITER: usize = 200;

/// Von Mises equivalent stress `sqrt(3/2) |dev sigma|`.
pub fn von_mises<S: Real>(sigma: &SymMat<S>) -> S {
    (real::<S>(1.5)).sqrt() * sigma.deviator().norm()
}

/// Solves `q_trial - 3G d - sigma_Y(ep + d) = 0` for the plastic increment
/// `d` by Newton with a bisection safeguard; the root is bracketed in
/// `[0, q_trial / 3G]`.
fn solve_increment<S: Real>(
    hardening: &Hardening<S>,
    ep: S,
    q_trial: S,
    three_g: S,
) -> Result<S> {
    let residual = |d: S| q_trial - three_g * d - hardening.yield_stress(ep + d);
    let tol = real::<S>(RETURN_TOL) * q_trial.max(hardening.yield_stress(ep));
    let mut lo = S::zero();
    let mut hi = q_trial / three_g;
    let mut d = (q_trial - hardening.yield_stress(ep)) / (three_g + hardening.slope(ep));
    d = d.clamp(lo, hi);
    for _ in 0..RETURN_MAX_ITER {
        let r = residual(d);
        if r.abs() <= tol {
            return Ok(d);
        }
        if r > S::zero() {
            lo = d;
        } else {
            hi = d;
        }
        let slope = three_g + hardening.slope(ep + d);
        let newton = d + r / slope;
        d = if newton > lo && newton < hi {
            newton
        } else {
            real::<S>(0.5) * (lo + hi)
        };
    }
    Err(Error::NonConvergence(format!(
        "plastic return map stalled, residual {:?}",
        residual(d).to_f64()
    )))
}

pub(super) fn radial_return<S: Real>(
    spec: &GsmSpec<S>,
    hardening: &Hardening<S>,
    state: &GsmState<S>,
    strain: &SymMat<S>,
) -> Result<(SymMat<S>, Stiffness<S>, GsmState<S>)> {
    let bulk = spec.bulk_modulus();
    let shear = spec.shear_modulus();
    let two_g = real::<S>(2.0) * shear;
    let three_g = real::<S>(3.0) * shear;

    let trace = strain.trace();
    let s_trial = (strain.deviator() - state.plastic_strain) * two_g;
    let q_trial = (real::<S>(1.5)).sqrt() * s_trial.norm();
    let pressure = SymMat::identity() * (bulk * trace);

    let yield_now = hardening.yield_stress(state.accumulated);
    if q_trial <= yield_now {
        let sigma = pressure + s_trial;
        return Ok((sigma, spec.stiffness(), *state));
    }

    let d = solve_increment(hardening, state.accumulated, q_trial, three_g)?;
    let scale = S::one() - three_g * d / q_trial;
    let sigma = pressure + s_trial * scale;

    let unit = s_trial * (S::one() / s_trial.norm());
    let sqrt32 = (real::<S>(1.5)).sqrt();
    let trial_state = GsmState {
        plastic_strain: state.plastic_strain + unit * (sqrt32 * d),
        accumulated: state.accumulated + d,
    };

    // Consistent tangent: 3K P1 + 2G scale P2
    //   - (6G^2/(3G+H) - 6G^2 d/q_trial) n x n  with n the unit trial
    // deviator direction and H the hardening slope at the updated state.
    let (p1, p2) = iso_projectors::<S>();
    let slope = hardening.slope(trial_state.accumulated);
    let six_g2 = real::<S>(6.0) * shear * shear;
    let coeff = six_g2 / (three_g + slope) - six_g2 * d / q_trial;
    let mut nn = Stiffness::zero();
    let n = unit.components();
    for i in 0..6 {
        for j in 0..6 {
            nn.matrix_mut()[(i, j)] = n[i] * n[j];
        }
    }
    let tangent =
        p1 * (real::<S>(3.0) * bulk) + p2 * (two_g * scale) - nn * coeff;

    Ok((sigma, tangent, trial_state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsm::{commit, polyamide_for_tests, stress_and_tangent};
    use approx::assert_relative_eq;

    #[test]
    fn below_first_yield_is_elastic() {
        let spec = polyamide_for_tests();
        // Small uniaxial strain: von Mises stress stays below 29 MPa.
        let eps = SymMat::uniaxial(0, 0, 5e-3);
        let (sigma, _, trial) =
            stress_and_tangent(&spec, &GsmState::initial(), &eps, 1.0).unwrap();
        assert!(von_mises(&sigma) < 29.0);
        assert_relative_eq!(trial.accumulated, 0.0, epsilon = 1e-16);
        assert_relative_eq!(
            sigma.components(),
            spec.stiffness().apply(&eps).components(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn plastic_step_stays_on_the_yield_surface() {
        let spec = polyamide_for_tests();
        let eps = SymMat::uniaxial(0, 0, 0.03);
        let (sigma, _, trial) =
            stress_and_tangent(&spec, &GsmState::initial(), &eps, 1.0).unwrap();
        let h = spec.hardening.unwrap();
        assert!(trial.accumulated > 0.0);
        assert_relative_eq!(
            von_mises(&sigma),
            h.yield_stress(trial.accumulated),
            max_relative = 1e-10
        );
        // Plastic strain is trace free.
        assert!(trial.plastic_strain.trace().abs() < 1e-10);
    }

    #[test]
    fn commit_and_unload_keep_accumulated_strain() {
        let spec = polyamide_for_tests();
        let mut state = GsmState::initial();
        let eps = SymMat::uniaxial(0, 0, 0.03);
        let (_, _, trial) = stress_and_tangent(&spec, &state, &eps, 1.0).unwrap();
        commit(&mut state, trial);
        let ep_after_loading = state.accumulated;
        assert!(ep_after_loading > 0.0);

        // Unloading to a smaller strain is elastic; accumulated strain
        // stays put.
        let (_, _, trial) =
            stress_and_tangent(&spec, &state, &SymMat::uniaxial(0, 0, 0.02), 1.0).unwrap();
        commit(&mut state, trial);
        assert_relative_eq!(state.accumulated, ep_after_loading, epsilon = 1e-16);
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let spec = polyamide_for_tests();
        let mut state = GsmState::initial();
        // Put the state into the plastic regime first.
        let (_, _, trial) =
            stress_and_tangent(&spec, &state, &SymMat::uniaxial(0, 0, 0.02), 1.0).unwrap();
        commit(&mut state, trial);

        for (label, eps) in [
            ("elastic", SymMat::uniaxial(0, 0, 1e-3)),
            ("plastic", SymMat::uniaxial(0, 0, 0.035) + SymMat::uniaxial(0, 1, 0.01)),
            ("unloading", SymMat::uniaxial(0, 0, 0.015)),
        ] {
            let (_, tangent, _) = stress_and_tangent(&spec, &state, &eps, 1.0).unwrap();
            assert!(tangent.asymmetry() < 1e-10, "{label}: tangent not symmetric");
            let h = 1e-7;
            for k in 0..6 {
                let mut up = eps;
                up.components_mut()[k] += h;
                let mut dn = eps;
                dn.components_mut()[k] -= h;
                let (su, _, _) = stress_and_tangent(&spec, &state, &up, 1.0).unwrap();
                let (sd, _, _) = stress_and_tangent(&spec, &state, &dn, 1.0).unwrap();
                for r in 0..6 {
                    let fd = (su.components()[r] - sd.components()[r]) / (2.0 * h);
                    let got = tangent.matrix()[(r, k)];
                    let scale = tangent.norm();
                    assert!(
                        (fd - got).abs() / scale < 1e-5,
                        "{label}: tangent[{r},{k}] = {got} vs fd {fd}"
                    );
                }
            }
        }
    }

    /// Monotonic uniaxial strain ramp against a dense rate-form integration
    /// of the hardening law (explicit RK4 on the continuous elastoplastic
    /// flow, 4000 substeps).
    #[test]
    fn ramp_matches_dense_rate_integration() {
        let spec = polyamide_for_tests();
        let strain_max = 0.04;
        let coarse_steps = 200;

        // Reference: continuous-time flow integrated by RK4.
        let dense_steps = 4000;
        let c = spec.stiffness();
        let h = spec.hardening.unwrap();
        let rate = |sigma: &SymMat<f64>, ep: f64, eps_dot: &SymMat<f64>| {
            // Elastic predictor rate and plastic corrector per the
            // associative flow rule.
            let q = von_mises(sigma);
            let sy = h.yield_stress(ep);
            let elastic_rate = c.apply(eps_dot);
            if q < sy - 1e-9 {
                return (elastic_rate, 0.0);
            }
            let nu_dir = sigma.deviator() * (1.5 / q);
            let denom = nu_dir.dot(&c.apply(&nu_dir)) + h.slope(ep);
            let lambda_dot = nu_dir.dot(&elastic_rate) / denom;
            if lambda_dot <= 0.0 {
                return (elastic_rate, 0.0);
            }
            let sigma_dot = c.apply(&(*eps_dot - nu_dir * lambda_dot));
            (sigma_dot, lambda_dot)
        };
        let eps_dot = SymMat::uniaxial(0, 0, strain_max);
        let mut sigma = SymMat::zero();
        let mut ep = 0.0;
        let dt = 1.0 / dense_steps as f64;
        let mut reference = vec![(0.0f64, 0.0f64)];
        for i in 0..dense_steps {
            // RK4 in pseudo-time over the ramp.
            let (k1s, k1e) = rate(&sigma, ep, &eps_dot);
            let (k2s, k2e) = rate(&(sigma + k1s * (0.5 * dt)), ep + 0.5 * dt * k1e, &eps_dot);
            let (k3s, k3e) = rate(&(sigma + k2s * (0.5 * dt)), ep + 0.5 * dt * k2e, &eps_dot);
            let (k4s, k4e) = rate(&(sigma + k3s * dt), ep + dt * k3e, &eps_dot);
            sigma += (k1s + k2s * 2.0 + k3s * 2.0 + k4s) * (dt / 6.0);
            ep += dt / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
            reference.push(((i + 1) as f64 * dt, sigma.tensor_component(0, 0)));
        }
        let max_ref = reference.iter().map(|r| r.1.abs()).fold(0.0, f64::max);

        // Radial return along the same ramp.
        let mut state = GsmState::initial();
        for i in 1..=coarse_steps {
            let t = i as f64 / coarse_steps as f64;
            let eps = SymMat::uniaxial(0, 0, strain_max * t);
            let (s, _, trial) = stress_and_tangent(&spec, &state, &eps, 1.0).unwrap();
            commit(&mut state, trial);
            let want = reference[(t * dense_steps as f64).round() as usize].1;
            let got = s.tensor_component(0, 0);
            assert!(
                (got - want).abs() / max_ref < 1e-3,
                "t = {t}: sigma11 {got} vs reference {want}"
            );
        }
    }
}
