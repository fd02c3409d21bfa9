//! Linear-elastic two-phase laminate homogenization.
//!
//! The effective stiffness solves the resolvent identity
//!
//! ```text
//! (P(n) + a [Cbar - a I]^-1)^-1
//!     = c_a (P(n) + a [C_a - a I]^-1)^-1 + c_b (P(n) + a [C_b - a I]^-1)^-1
//! ```
//!
//! where `P(n)` is the lamination projector and `a` (alpha) is a shift that
//! must keep every resolvent invertible: sufficiently large or suitably
//! small. The same chain, differentiated matrix-by-matrix, yields the
//! reverse-mode gradients used by offline training.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::mech::{lamination_projector_dn, lamination_projector_unchecked, Stiffness};
use crate::scalar::{real, Real};

/// Condition-number proxy above which a resolvent inversion is rejected.
const COND_LIMIT: f64 = 1e14;

/// Inputs of a two-phase laminate.
#[derive(Clone, Copy, Debug)]
pub struct LaminateInput<S: Real> {
    pub stiffness_a: Stiffness<S>,
    pub stiffness_b: Stiffness<S>,
    /// Volume fraction of phase `a` in `[0, 1]`.
    pub fraction_a: S,
    /// Unit lamination direction.
    pub normal: Vector3<S>,
}

impl<S: Real> LaminateInput<S> {
    pub fn new(
        stiffness_a: Stiffness<S>,
        stiffness_b: Stiffness<S>,
        fraction_a: S,
        normal: Vector3<S>,
    ) -> Result<Self> {
        if fraction_a < S::zero() || fraction_a > S::one() {
            return Err(Error::invalid(format!(
                "volume fraction must lie in [0, 1], got {:?}",
                fraction_a.to_f64()
            )));
        }
        if (normal.norm() - S::one()).abs() > real::<S>(1e-12) {
            return Err(Error::invalid("lamination direction must be a unit vector"));
        }
        Ok(Self { stiffness_a, stiffness_b, fraction_a, normal })
    }
}

/// Default shift: twice the largest eigenvalue of either phase, which keeps
/// every resolvent of the chain negative definite.
pub fn default_alpha<S: Real>(ca: &Stiffness<S>, cb: &Stiffness<S>) -> S {
    let (_, max_a) = ca.eigen_range();
    let (_, max_b) = cb.eigen_range();
    real::<S>(2.0) * max_a.max(max_b)
}

/// Intermediates of one laminate evaluation, kept for the reverse sweep.
#[derive(Clone, Debug)]
pub(crate) struct LaminateCache<S: Real> {
    pub fraction_a: S,
    pub normal: Vector3<S>,
    /// `B_i = (C_i - alpha I)^-1`
    b_a: Stiffness<S>,
    b_b: Stiffness<S>,
    /// `R_i = (P + alpha B_i)^-1`
    r_a: Stiffness<S>,
    r_b: Stiffness<S>,
    /// `T = (c_a R_a + c_b R_b)^-1`
    t: Stiffness<S>,
    /// `V = (T - P)^-1`
    v: Stiffness<S>,
    alpha: S,
    /// Degenerate fractions short-circuit to one phase.
    passthrough: Option<bool>,
}

/// Gradients of a scalar loss with respect to the laminate inputs.
#[derive(Clone, Copy, Debug)]
pub struct LaminateGradients<S: Real> {
    pub d_stiffness_a: Stiffness<S>,
    pub d_stiffness_b: Stiffness<S>,
    pub d_fraction_a: S,
    pub d_normal: Vector3<S>,
}

fn guarded_inverse<S: Real>(m: &Stiffness<S>, what: &str) -> Result<Stiffness<S>> {
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::numerical(format!("singular matrix while inverting {what}")))?;
    let cond = m.norm() * inv.norm();
    if !cond.is_finite() || cond > real::<S>(COND_LIMIT) {
        return Err(Error::numerical(format!(
            "ill-conditioned matrix while inverting {what} (cond ~ {:?})",
            cond.to_f64()
        )));
    }
    Ok(inv)
}

fn eval_attempt<S: Real>(
    ca: &Stiffness<S>,
    cb: &Stiffness<S>,
    fraction_a: S,
    normal: &Vector3<S>,
    alpha: S,
) -> Result<(Stiffness<S>, LaminateCache<S>)> {
    let p = lamination_projector_unchecked(normal);
    let shift = Stiffness::identity() * alpha;
    let b_a = guarded_inverse(&(*ca - shift), "C_a - alpha I")?;
    let b_b = guarded_inverse(&(*cb - shift), "C_b - alpha I")?;
    let r_a = guarded_inverse(&(p + b_a * alpha), "P + alpha (C_a - alpha I)^-1")?;
    let r_b = guarded_inverse(&(p + b_b * alpha), "P + alpha (C_b - alpha I)^-1")?;
    let s = r_a * fraction_a + r_b * (S::one() - fraction_a);
    let t = guarded_inverse(&s, "mixed resolvent")?;
    let v = guarded_inverse(&(t - p), "back-transformed resolvent")?;
    let out = shift + v * alpha;
    Ok((
        out,
        LaminateCache {
            fraction_a,
            normal: *normal,
            b_a,
            b_b,
            r_a,
            r_b,
            t,
            v,
            alpha,
            passthrough: None,
        },
    ))
}

/// Evaluates the laminate and keeps the intermediates. On a conditioning
/// failure the shift is doubled once before giving up.
pub(crate) fn eval_cached<S: Real>(
    ca: &Stiffness<S>,
    cb: &Stiffness<S>,
    fraction_a: S,
    normal: &Vector3<S>,
    alpha: S,
) -> Result<(Stiffness<S>, LaminateCache<S>)> {
    if fraction_a == S::one() || fraction_a == S::zero() {
        let take_a = fraction_a == S::one();
        let out = if take_a { *ca } else { *cb };
        let cache = LaminateCache {
            fraction_a,
            normal: *normal,
            b_a: Stiffness::zero(),
            b_b: Stiffness::zero(),
            r_a: Stiffness::zero(),
            r_b: Stiffness::zero(),
            t: Stiffness::zero(),
            v: Stiffness::zero(),
            alpha,
            passthrough: Some(take_a),
        };
        return Ok((out, cache));
    }
    match eval_attempt(ca, cb, fraction_a, normal, alpha) {
        Ok(res) => Ok(res),
        Err(_) => eval_attempt(ca, cb, fraction_a, normal, alpha * real::<S>(2.0)),
    }
}

/// Effective stiffness of the laminate for a given shift `alpha`.
pub fn laminate_stiffness<S: Real>(input: &LaminateInput<S>, alpha: S) -> Result<Stiffness<S>> {
    eval_cached(
        &input.stiffness_a,
        &input.stiffness_b,
        input.fraction_a,
        &input.normal,
        alpha,
    )
    .map(|(c, _)| c)
}

/// Reverse sweep through the cached evaluation.
pub(crate) fn adjoint_cached<S: Real>(
    cache: &LaminateCache<S>,
    d_out: &Stiffness<S>,
) -> LaminateGradients<S> {
    if let Some(take_a) = cache.passthrough {
        // Degenerate fraction: output is one input verbatim. The fraction
        // gradient is killed by the Macauley bracket upstream.
        let zero = Stiffness::zero();
        return LaminateGradients {
            d_stiffness_a: if take_a { *d_out } else { zero },
            d_stiffness_b: if take_a { zero } else { *d_out },
            d_fraction_a: S::zero(),
            d_normal: Vector3::zeros(),
        };
    }
    let alpha = cache.alpha;
    let ca_frac = cache.fraction_a;
    let cb_frac = S::one() - ca_frac;

    // Forward chain: A_i = C_i - aI; B_i = A_i^-1; D_i = P + a B_i;
    // R_i = D_i^-1; S = c_a R_a + c_b R_b; T = S^-1; U = T - P; V = U^-1;
    // out = aI + aV. All factors are symmetric, so X^-1-bars contract as
    // -X^-1 Xbar X^-1 without transposes.
    let d_v = *d_out * alpha;
    let d_u = -(cache.v * d_v * cache.v);
    let d_t = d_u;
    let mut d_p = -d_u;
    let d_s = -(cache.t * d_t * cache.t);
    let d_r_a = d_s * ca_frac;
    let d_r_b = d_s * cb_frac;
    let d_fraction_a = (cache.r_a - cache.r_b)
        .matrix()
        .dot(d_s.matrix());
    let d_d_a = -(cache.r_a * d_r_a * cache.r_a);
    let d_d_b = -(cache.r_b * d_r_b * cache.r_b);
    d_p = d_p + d_d_a + d_d_b;
    let d_b_a = d_d_a * alpha;
    let d_b_b = d_d_b * alpha;
    let d_stiffness_a = -(cache.b_a * d_b_a * cache.b_a);
    let d_stiffness_b = -(cache.b_b * d_b_b * cache.b_b);

    let dp_dn = lamination_projector_dn(&cache.normal);
    let d_normal = Vector3::from_fn(|r, _| d_p.matrix().dot(&dp_dn[r]));

    LaminateGradients { d_stiffness_a, d_stiffness_b, d_fraction_a, d_normal }
}

/// Gradients of an arbitrary scalar loss with respect to all laminate
/// inputs, given the loss gradient with respect to the output stiffness.
pub fn laminate_stiffness_adjoint<S: Real>(
    input: &LaminateInput<S>,
    alpha: S,
    d_out: &Stiffness<S>,
) -> Result<LaminateGradients<S>> {
    let (_, cache) = eval_cached(
        &input.stiffness_a,
        &input.stiffness_b,
        input.fraction_a,
        &input.normal,
        alpha,
    )?;
    Ok(adjoint_cached(&cache, d_out))
}
