//! Single material-point step timing.

use std::time::Instant;

use serde::Serialize;

use super::{solve_step, uniaxial_ramp, GaussPointContext, MaterialPointState, SolveOptions};
use crate::error::Result;
use crate::mech::SymMat;
use crate::scalar::real;

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub repeats: usize,
    pub median_ms: f64,
    pub p10_ms: f64,
    pub p90_ms: f64,
    pub warmup_iterations: usize,
}

/// Measures the wall time of one converged strain increment, repeated from
/// an identical committed state.
///
/// The state is first driven along a short uniaxial ramp so a plastic phase
/// is actually flowing, then each repeat clones that state and advances one
/// further increment.
pub fn bench_material_point(ctx: &GaussPointContext<f64>, repeats: usize) -> Result<BenchReport> {
    let opts = SolveOptions::default();
    let ramp = uniaxial_ramp(0, 0, 0.02, 12);
    let mut state = MaterialPointState::initial(ctx);
    let mut warmup_iterations = 0usize;
    for (strain, dt) in &ramp {
        let res = solve_step(ctx, &state, strain, *dt, &opts)?;
        warmup_iterations += res.iterations;
        state.commit(res.trial);
    }

    let next = SymMat::uniaxial(0, 0, 0.02 + real::<f64>(0.02) / 12.0);
    let dt = 1.0 / 12.0;
    let mut times_ms: Vec<f64> = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let base = state.clone();
        let start = Instant::now();
        let res = solve_step(ctx, &base, &next, dt, &opts)?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        std::hint::black_box(res.stress);
        times_ms.push(elapsed);
    }
    times_ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |q: f64| times_ms[((times_ms.len() - 1) as f64 * q).round() as usize];
    Ok(BenchReport {
        repeats,
        median_ms: pick(0.5),
        p10_ms: pick(0.1),
        p90_ms: pick(0.9),
        warmup_iterations,
    })
}
