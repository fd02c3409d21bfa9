//! Stress-path validation metrics.
//!
//! Per stress component, the pointwise error is normalized by the largest
//! reference magnitude of that component over the whole path; the mean
//! error integrates over time (trapezoid rule on an equidistant grid) and
//! the maximum error takes the worst instant, both then maximized over the
//! components.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mech::SymMat;
use crate::scalar::{real, Real};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ValidationMetrics {
    pub eta_mean: f64,
    pub eta_max: f64,
}

/// Compares a computed stress path against a reference on the same time
/// grid. A reference component that vanishes identically contributes zero
/// error if the computed one vanishes too, and is an error otherwise.
pub fn validation_metrics<S: Real>(
    computed: &[SymMat<S>],
    reference: &[SymMat<S>],
) -> Result<ValidationMetrics> {
    if computed.len() != reference.len() || computed.is_empty() {
        return Err(Error::invalid(
            "paths must share one non-empty time grid",
        ));
    }
    let n = computed.len();
    let mut eta_mean = S::zero();
    let mut eta_max = S::zero();
    for comp in 0..6 {
        let max_ref = reference
            .iter()
            .fold(S::zero(), |acc, s| acc.max(s.components()[comp].abs()));
        if max_ref == S::zero() {
            let max_dmn = computed
                .iter()
                .fold(S::zero(), |acc, s| acc.max(s.components()[comp].abs()));
            if max_dmn > S::zero() {
                return Err(Error::invalid(format!(
                    "reference component {comp} vanishes but the computed path does not"
                )));
            }
            continue;
        }
        let eta: Vec<S> = computed
            .iter()
            .zip(reference.iter())
            .map(|(c, r)| (c.components()[comp] - r.components()[comp]).abs() / max_ref)
            .collect();
        let max_t = eta.iter().fold(S::zero(), |acc, &e| acc.max(e));
        let mean_t = if n == 1 {
            eta[0]
        } else {
            // Trapezoid weights on the equidistant grid.
            let half = real::<S>(0.5);
            let mut sum = (eta[0] + eta[n - 1]) * half;
            for e in &eta[1..n - 1] {
                sum += *e;
            }
            sum / S::from_usize(n - 1).expect("grid size")
        };
        eta_mean = eta_mean.max(mean_t);
        eta_max = eta_max.max(max_t);
    }
    Ok(ValidationMetrics {
        eta_mean: eta_mean.to_f64().unwrap_or(f64::NAN),
        eta_max: eta_max.to_f64().unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(values: &[f64]) -> Vec<SymMat<f64>> {
        values.iter().map(|&v| SymMat::uniaxial(0, 0, v)).collect()
    }

    #[test]
    fn identical_paths_have_zero_error() {
        let a = path(&[0.0, 1.0, 2.0, 1.0]);
        let m = validation_metrics(&a, &a).unwrap();
        assert_eq!(m.eta_mean, 0.0);
        assert_eq!(m.eta_max, 0.0);
    }

    #[test]
    fn constant_offset_gives_analytic_max() {
        let reference = path(&[1.0, 2.0, 4.0, 2.0]);
        let offset = path(&[1.5, 2.5, 4.5, 2.5]);
        let m = validation_metrics(&offset, &reference).unwrap();
        assert!((m.eta_max - 0.5 / 4.0).abs() < 1e-14);
        assert!((m.eta_mean - 0.5 / 4.0).abs() < 1e-14);
    }

    #[test]
    fn zero_reference_component_with_nonzero_dmn_is_an_error() {
        let reference = path(&[1.0, 2.0]);
        let mut computed = path(&[1.0, 2.0]);
        computed[0] += SymMat::uniaxial(1, 2, 0.3);
        assert!(validation_metrics(&computed, &reference).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        assert!(validation_metrics(&path(&[1.0]), &path(&[1.0, 2.0])).is_err());
    }
}
