//! Stiffness-regression loss and its reverse-mode gradients.
//!
//! The data term is `(1/N_b) (sum_s e_s^q)^(1/q)` with the sample error
//! `e_s = |Cbar_s - DMN(...)|_1 / |Cbar_s|_1` (entry-wise l1 norm of the
//! 6x6 matrices); the quadratic penalty `lambda (sum <v>_+ - 1)^2` encodes
//! the mixing constraint on the input weights.

use crate::error::{Error, Result};
use crate::laminate::default_alpha;
use crate::mech::Stiffness;
use crate::model::{DmnModel, ModelGradients, TreeWorkspace};
use crate::training::sampling::StiffnessSample;

#[derive(Clone, Copy, Debug)]
pub struct LossConfig {
    /// Penalty weight on the mixing constraint.
    pub penalty: f64,
    /// Outer exponent `q` of the sample-error aggregation.
    pub q_exponent: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { penalty: 1e3, q_exponent: 10.0 }
    }
}

fn labeled(sample: &StiffnessSample) -> Result<&Stiffness<f64>> {
    sample
        .label
        .as_ref()
        .ok_or_else(|| Error::invalid("loss requires labeled samples"))
}

/// Relative entry-wise l1 error of the model prediction for one sample.
pub fn sample_error(model: &DmnModel<f64>, sample: &StiffnessSample) -> Result<f64> {
    let label = labeled(sample)?;
    let alpha = default_alpha(&sample.stiffness_1, &sample.stiffness_2);
    let pred = model.forward_stiffness(
        &sample.stiffness_1,
        &sample.stiffness_2,
        &sample.orientation,
        alpha,
    )?;
    Ok((pred - *label).norm_l1() / label.norm_l1())
}

fn penalty_term(model: &DmnModel<f64>, cfg: &LossConfig) -> (f64, f64) {
    let excess: f64 = model.weights_raw().iter().map(|&v| v.max(0.0)).sum::<f64>() - 1.0;
    (cfg.penalty * excess * excess, 2.0 * cfg.penalty * excess)
}

/// Aggregates sample errors into the data term, written with the largest
/// error factored out so large `q` cannot overflow.
fn aggregate(errors: &[f64], q: f64) -> (f64, Vec<f64>) {
    let n = errors.len() as f64;
    let max = errors.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return (0.0, vec![0.0; errors.len()]);
    }
    let sum: f64 = errors.iter().map(|e| (e / max).powf(q)).sum();
    let value = max * sum.powf(1.0 / q) / n;
    let outer = sum.powf(1.0 / q - 1.0) / n;
    let weights = errors.iter().map(|&e| outer * (e / max).powf(q - 1.0)).collect();
    (value, weights)
}

/// Batch loss.
pub fn loss(model: &DmnModel<f64>, batch: &[&StiffnessSample], cfg: &LossConfig) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("batch must not be empty"));
    }
    let errors: Vec<f64> = batch
        .iter()
        .map(|s| sample_error(model, s))
        .collect::<Result<_>>()?;
    let (data, _) = aggregate(&errors, cfg.q_exponent);
    Ok(data + penalty_term(model, cfg).0)
}

/// Batch loss together with the gradients for all parameter groups.
pub fn loss_and_gradients(
    model: &DmnModel<f64>,
    batch: &[&StiffnessSample],
    cfg: &LossConfig,
) -> Result<(f64, ModelGradients<f64>)> {
    if batch.is_empty() {
        return Err(Error::invalid("batch must not be empty"));
    }
    let weights = model.effective_weights()?;
    let mut ws = TreeWorkspace::new(model.depth());
    let mut grads = ModelGradients::zeros_like(model);

    // Forward over the batch, keeping what the backward sweeps need.
    struct SampleEval {
        phi: nalgebra::DVector<f64>,
        normals: Vec<nalgebra::Vector3<f64>>,
        sign: Stiffness<f64>,
        label_norm: f64,
        error: f64,
        alpha: f64,
    }
    let mut evals = Vec::with_capacity(batch.len());
    for sample in batch {
        let label = labeled(sample)?;
        let phi = model.shape_values(&sample.orientation);
        let normals = model.normals_from_phi(&phi);
        let alpha = default_alpha(&sample.stiffness_1, &sample.stiffness_2);
        let pred = model.forward_with(
            &sample.stiffness_1,
            &sample.stiffness_2,
            &weights,
            &normals,
            alpha,
        )?;
        let diff = pred - *label;
        let label_norm = label.norm_l1();
        let mut sign = Stiffness::zero();
        for i in 0..6 {
            for j in 0..6 {
                let d = diff.matrix()[(i, j)];
                // Subgradient of |.| at zero taken as zero.
                sign.matrix_mut()[(i, j)] = if d == 0.0 { 0.0 } else { d.signum() };
            }
        }
        evals.push(SampleEval {
            phi,
            normals,
            sign,
            label_norm,
            error: diff.norm_l1() / label_norm,
            alpha,
        });
    }

    let errors: Vec<f64> = evals.iter().map(|e| e.error).collect();
    let (data, outer) = aggregate(&errors, cfg.q_exponent);

    for (idx, (sample, eval)) in batch.iter().zip(evals.iter()).enumerate() {
        let factor = outer[idx];
        if factor == 0.0 {
            continue;
        }
        let cotangent = eval.sign * (factor / eval.label_norm);
        ws.forward(
            model,
            &sample.stiffness_1,
            &sample.stiffness_2,
            &weights,
            &eval.normals,
            eval.alpha,
        )?;
        ws.backward(model, &weights, &eval.phi, &cotangent, &mut grads);
    }

    let (pen_value, pen_slope) = penalty_term(model, cfg);
    for (slot, v) in model.weights_raw().iter().enumerate() {
        if *v > 0.0 {
            grads.dv[slot] += pen_slope;
        }
    }
    Ok((data + pen_value, grads))
}

/// Per-sample errors with their mean and maximum.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub mean: f64,
    pub max: f64,
    pub per_sample: Vec<f64>,
}

pub fn error_report(model: &DmnModel<f64>, samples: &[StiffnessSample]) -> Result<ErrorReport> {
    if samples.is_empty() {
        return Err(Error::invalid("error report over an empty sample set"));
    }
    let per_sample: Vec<f64> = samples
        .iter()
        .map(|s| sample_error(model, s))
        .collect::<Result<_>>()?;
    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let max = per_sample.iter().cloned().fold(0.0, f64::max);
    Ok(ErrorReport { mean, max, per_sample })
}
