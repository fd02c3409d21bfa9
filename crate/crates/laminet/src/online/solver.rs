//! Newton solver for the material-point Euler-Lagrange equation and the
//! strain-path driver built on it.

use nalgebra::{Matrix3x6, Vector3};

use super::ldlt::{BlockMatrix, TreeLdlt};
use super::{GaussPointContext, MaterialPointState};
use crate::error::{Error, Result};
use crate::gsm::{stress_and_tangent, GsmState};
use crate::mech::{Stiffness, SymMat};
use crate::scalar::{real, Real};

/// Solver knobs; the defaults implement the documented behavior.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions<S: Real> {
    /// Relative tolerance of the convergence criterion.
    pub tolerance: S,
    pub max_iterations: usize,
    /// Armijo sufficient-decrease parameter on the residual norm.
    pub armijo: S,
    /// Smallest admissible backtracking step.
    pub min_step: S,
    /// Start from the jumps of the last converged step.
    pub warm_start: bool,
    /// On Newton failure, retry once with the strain increment halved.
    pub substep_retry: bool,
}

impl<S: Real> Default for SolveOptions<S> {
    fn default() -> Self {
        Self {
            tolerance: real::<S>(1e-12),
            max_iterations: 50,
            armijo: real::<S>(1e-4),
            min_step: real::<S>(2.0).powi(-10),
            warm_start: true,
            substep_retry: true,
        }
    }
}

/// Converged output of one strain increment.
#[derive(Clone, Debug)]
pub struct StepResult<S: Real> {
    pub stress: SymMat<S>,
    pub tangent: Stiffness<S>,
    /// Would-be-committed state (internal variables, jumps, strain).
    pub trial: MaterialPointState<S>,
    pub iterations: usize,
    pub residual: S,
}

struct Evaluation<S: Real> {
    tangents: Vec<Stiffness<S>>,
    trials: Vec<GsmState<S>>,
    effective_stress: SymMat<S>,
    residual: Vec<Vector3<S>>,
    residual_norm: S,
}

fn evaluate<S: Real>(
    ctx: &GaussPointContext<S>,
    state: &MaterialPointState<S>,
    macro_strain: &SymMat<S>,
    jumps: &[Vector3<S>],
    dt: S,
) -> Result<Evaluation<S>> {
    let n_slots = ctx.n_slots();
    let mut tangents = Vec::with_capacity(n_slots);
    let mut trials = Vec::with_capacity(n_slots);
    let mut effective = SymMat::zero();
    let mut residual = vec![Vector3::zeros(); ctx.n_jump_nodes()];

    for (slot, path) in ctx.paths.iter().enumerate() {
        let mut eps = *macro_strain;
        for entry in path {
            eps += SymMat::new(entry.op * jumps[entry.node]);
        }
        let (sigma, tangent, trial) =
            stress_and_tangent(ctx.phase_spec(slot), &state.leaf_states[slot], &eps, dt)
                .map_err(|e| Error::numerical(format!("phase update in slot {slot}: {e}")))?;
        let w = ctx.slot_weights[slot];
        effective += sigma * w;
        let weighted = sigma.components() * w;
        for entry in path {
            residual[entry.node] += entry.op.transpose() * weighted;
        }
        tangents.push(tangent);
        trials.push(trial);
    }

    let residual_norm = residual
        .iter()
        .fold(S::zero(), |acc, r| acc + r.norm_squared())
        .sqrt();
    Ok(Evaluation {
        tangents,
        trials,
        effective_stress: effective,
        residual,
        residual_norm,
    })
}

fn converged<S: Real>(ctx: &GaussPointContext<S>, eval: &Evaluation<S>, tol: S) -> bool {
    if eval.residual_norm == S::zero() {
        return true;
    }
    let denom = S::from_usize(ctx.full_node_count()).expect("node count")
        * eval.effective_stress.norm();
    denom > S::zero() && eval.residual_norm <= tol * denom
}

fn assemble<S: Real>(
    ctx: &GaussPointContext<S>,
    eval: &Evaluation<S>,
    matrix: &mut BlockMatrix<S>,
) {
    matrix.reset();
    for (slot, path) in ctx.paths.iter().enumerate() {
        let w = ctx.slot_weights[slot];
        let t = eval.tangents[slot];
        // W_i = w T op_i, then blocks op_r^T W_c on ancestor pairs.
        let weighted: Vec<nalgebra::Matrix6x3<S>> = path
            .iter()
            .map(|e| t.matrix() * e.op * w)
            .collect();
        for ei in path.iter() {
            for (j, ej) in path.iter().enumerate() {
                if ei.node < ej.node {
                    continue;
                }
                let contrib = ei.op.transpose() * weighted[j];
                if ei.node == ej.node {
                    matrix.diag[ei.node] += contrib;
                } else {
                    let pos = ctx.node_ancestors[ej.node]
                        .iter()
                        .position(|&a| a == ei.node)
                        .expect("path pairs are ancestor pairs");
                    matrix.cols[ej.node][pos] += contrib;
                }
            }
        }
    }
}

/// Solves one strain increment by Newton's method with backtracking.
///
/// Returns effective stress, algorithmic tangent and the trial state; the
/// caller commits the trial to accept the step. On non-convergence one
/// retry with a halved strain increment is attempted (when enabled).
pub fn solve_step<S: Real>(
    ctx: &GaussPointContext<S>,
    state: &MaterialPointState<S>,
    macro_strain: &SymMat<S>,
    dt: S,
    opts: &SolveOptions<S>,
) -> Result<StepResult<S>> {
    match newton(ctx, state, macro_strain, dt, opts) {
        Ok(res) => Ok(res),
        Err(err) if opts.substep_retry => {
            let half = real::<S>(0.5);
            let midpoint = (state.prev_strain + *macro_strain) * half;
            let sub = SolveOptions { substep_retry: false, ..*opts };
            let first = newton(ctx, state, &midpoint, dt * half, &sub).map_err(|_| {
                Error::NonConvergence(format!("material-point Newton failed: {err}"))
            })?;
            let mut mid_state = state.clone();
            mid_state.commit(first.trial);
            let second = newton(ctx, &mid_state, macro_strain, dt * half, &sub)
                .map_err(|_| Error::NonConvergence(format!("material-point Newton failed: {err}")))?;
            Ok(StepResult {
                iterations: first.iterations + second.iterations,
                ..second
            })
        }
        Err(err) => Err(err),
    }
}

fn newton<S: Real>(
    ctx: &GaussPointContext<S>,
    state: &MaterialPointState<S>,
    macro_strain: &SymMat<S>,
    dt: S,
    opts: &SolveOptions<S>,
) -> Result<StepResult<S>> {
    let mut jumps: Vec<Vector3<S>> = if opts.warm_start {
        state.jumps.clone()
    } else {
        vec![Vector3::zeros(); ctx.n_jump_nodes()]
    };
    let mut eval = evaluate(ctx, state, macro_strain, &jumps, dt)?;
    let mut matrix = BlockMatrix::zeros(&ctx.node_ancestors);
    let mut history: Vec<f64> = vec![eval.residual_norm.to_f64().unwrap_or(f64::NAN)];
    let mut iterations = 0usize;

    while !converged(ctx, &eval, opts.tolerance) {
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence(format!(
                "material-point Newton exceeded {} iterations; residual history {:?}",
                opts.max_iterations, history
            )));
        }
        assemble(ctx, &eval, &mut matrix);
        let scale = matrix.diag.iter().fold(S::zero(), |acc, d| acc.max(d.norm()));
        let ldlt = TreeLdlt::factor(&ctx.node_ancestors, &matrix, ctx.allow_null_pivots, scale)?;
        let mut step: Vec<Vector3<S>> = eval.residual.iter().map(|r| -r).collect();
        ldlt.solve_vec(&mut step);

        // Backtracking on the residual norm; the incremental potential is
        // convex, so the Newton direction is a descent direction.
        let mut s = S::one();
        loop {
            let trial_jumps: Vec<Vector3<S>> = jumps
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + d * s)
                .collect();
            let trial_eval = evaluate(ctx, state, macro_strain, &trial_jumps, dt)?;
            if trial_eval.residual_norm <= (S::one() - opts.armijo * s) * eval.residual_norm {
                jumps = trial_jumps;
                eval = trial_eval;
                break;
            }
            s *= real::<S>(0.5);
            if s < opts.min_step {
                return Err(Error::NonConvergence(format!(
                    "backtracking stalled at step {:?}; residual history {:?}",
                    s.to_f64(),
                    history
                )));
            }
        }
        history.push(eval.residual_norm.to_f64().unwrap_or(f64::NAN));
        iterations += 1;
    }

    // Algorithmic tangent: refactor with the converged tangents and reuse
    // the decomposition for the six right-hand sides of d(jumps)/dE.
    assemble(ctx, &eval, &mut matrix);
    let scale = matrix.diag.iter().fold(S::zero(), |acc, d| acc.max(d.norm()));
    let ldlt = TreeLdlt::factor(&ctx.node_ancestors, &matrix, ctx.allow_null_pivots, scale)?;
    let mut rhs: Vec<Matrix3x6<S>> = vec![Matrix3x6::zeros(); ctx.n_jump_nodes()];
    for (slot, path) in ctx.paths.iter().enumerate() {
        let w = ctx.slot_weights[slot];
        let t = eval.tangents[slot];
        for entry in path {
            // -op^T (w T): columns are the six unit macro-strain directions.
            let block = entry.op.transpose() * t.matrix() * w;
            rhs[entry.node] -= block;
        }
    }
    ldlt.solve_mat(&mut rhs);

    let mut tangent = Stiffness::zero();
    for (slot, path) in ctx.paths.iter().enumerate() {
        let w = ctx.slot_weights[slot];
        let t = eval.tangents[slot];
        // d eps_slot / dE = I + sum_i op_i X_i.
        let mut deps = nalgebra::Matrix6::identity();
        for entry in path {
            deps += entry.op * rhs[entry.node];
        }
        *tangent.matrix_mut() += t.matrix() * deps * w;
    }
    let tangent = tangent.symmetrized();

    let trial = MaterialPointState {
        leaf_states: eval.trials,
        jumps,
        prev_strain: *macro_strain,
    };
    Ok(StepResult {
        stress: eval.effective_stress,
        tangent,
        trial,
        iterations,
        residual: eval.residual_norm,
    })
}

/// One record of a driven strain path.
#[derive(Clone, Debug)]
pub struct PathStep<S: Real> {
    pub time: S,
    pub strain: SymMat<S>,
    pub stress: SymMat<S>,
    pub tangent: Stiffness<S>,
    pub iterations: usize,
    pub residual: S,
}

#[derive(Clone, Debug)]
pub struct PathResult<S: Real> {
    pub steps: Vec<PathStep<S>>,
    pub final_state: MaterialPointState<S>,
}

/// Drives a schedule of `(strain, dt)` increments, committing after each
/// converged step.
pub fn drive_path<S: Real>(
    ctx: &GaussPointContext<S>,
    schedule: &[(SymMat<S>, S)],
    opts: &SolveOptions<S>,
) -> Result<PathResult<S>> {
    let mut state = MaterialPointState::initial(ctx);
    let mut steps = Vec::with_capacity(schedule.len());
    let mut time = S::zero();
    for (index, (strain, dt)) in schedule.iter().enumerate() {
        let result = solve_step(ctx, &state, strain, *dt, opts)
            .map_err(|e| Error::NonConvergence(format!("load step {index}: {e}")))?;
        state.commit(result.trial);
        time += *dt;
        steps.push(PathStep {
            time,
            strain: *strain,
            stress: result.stress,
            tangent: result.tangent,
            iterations: result.iterations,
            residual: result.residual,
        });
    }
    Ok(PathResult { steps, final_state: state })
}

/// Full hysteresis `0 -> +amp -> -amp -> 0` in equidistant steps of the
/// uniaxial loading `amp * sym(e_i x e_j)`.
pub fn uniaxial_hysteresis<S: Real>(
    i: usize,
    j: usize,
    amplitude: S,
    steps: usize,
) -> Vec<(SymMat<S>, S)> {
    let dt = S::one() / S::from_usize(steps).expect("steps");
    (1..=steps)
        .map(|k| {
            let s = S::from_usize(k).expect("step") * dt;
            let quarter = real::<S>(0.25);
            let four = real::<S>(4.0);
            let level = if s <= quarter {
                four * s
            } else if s <= real::<S>(0.75) {
                real::<S>(2.0) - four * s
            } else {
                four * s - four
            };
            (SymMat::uniaxial(i, j, amplitude * level), dt)
        })
        .collect()
}

/// Monotone ramp `0 -> amp` in equidistant steps.
pub fn uniaxial_ramp<S: Real>(
    i: usize,
    j: usize,
    amplitude: S,
    steps: usize,
) -> Vec<(SymMat<S>, S)> {
    let dt = S::one() / S::from_usize(steps).expect("steps");
    (1..=steps)
        .map(|k| {
            let s = S::from_usize(k).expect("step") * dt;
            (SymMat::uniaxial(i, j, amplitude * s), dt)
        })
        .collect()
}

/// Work integral `oint sigma : dE` over a computed path (trapezoid rule),
/// starting from the zero state.
pub fn path_work<S: Real>(steps: &[PathStep<S>]) -> S {
    let mut work = S::zero();
    let mut prev_strain = SymMat::zero();
    let mut prev_stress = SymMat::zero();
    let half = real::<S>(0.5);
    for step in steps {
        let d = step.strain - prev_strain;
        work += (prev_stress + step.stress).dot(&d) * half;
        prev_strain = step.strain;
        prev_stress = step.stress;
    }
    work
}

