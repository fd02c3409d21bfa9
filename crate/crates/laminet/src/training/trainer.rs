//! Offline identification loop: AMSGrad over mini-batches with the cosine
//! warm-restart schedule, per-epoch train/validation error tracking.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::dataset::Dataset;
use super::loss::{error_report, loss_and_gradients, LossConfig};
use super::optimizer::{AmsGrad, LrSchedule};
use super::sampling::StiffnessSample;
use crate::error::{Error, Result};
use crate::mech::ShapeKind;
use crate::model::{DmnModel, ModelMeta};

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    /// Experiment switch: use plain Adam instead of AMSGrad.
    pub use_adam: bool,
    pub epochs: u32,
    pub batch_size: usize,
    pub schedule: LrSchedule,
    pub loss: LossConfig,
    /// Held-out fraction of the samples.
    pub validation_fraction: f64,
    /// Seed for the split, batch shuffling and parameter initialization.
    pub seed: u64,
    /// Record the effective input weights per epoch (for diagnostics).
    pub record_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            use_adam: false,
            epochs: 3000,
            batch_size: 32,
            schedule: LrSchedule::default(),
            loss: LossConfig::default(),
            validation_fraction: 0.1,
            seed: 0,
            record_weights: false,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HistoryRow {
    pub epoch: u32,
    /// Mean batch loss seen during the epoch.
    pub loss: f64,
    pub lr: f64,
    pub train_mean: f64,
    pub train_max: f64,
    pub val_mean: f64,
    pub val_max: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainingHistory {
    pub rows: Vec<HistoryRow>,
    /// Macauley-bracketed input weights per epoch, when recorded.
    pub weights: Option<Vec<Vec<f64>>>,
}

impl TrainingHistory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "epoch,loss,lr,e_mean_train,e_max_train,e_mean_val,e_max_val"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.epoch, r.loss, r.lr, r.train_mean, r.train_max, r.val_mean, r.val_max
            )?;
        }
        Ok(())
    }
}

/// Random initialization: weights uniform on `[0, 1]` rescaled to unit sum,
/// angle coefficients uniform on `[0, 2 pi]`.
pub fn init_model(depth: u32, kind: ShapeKind, seed: u64) -> DmnModel<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let nodes = (1usize << depth) - 1;
    let m = kind.count();
    let p = DMatrix::from_fn(nodes, m, |_, _| rng.gen_range(0.0..std::f64::consts::TAU));
    let q = DMatrix::from_fn(nodes, m, |_, _| rng.gen_range(0.0..std::f64::consts::TAU));
    let mut v = DVector::from_fn(1usize << depth, |_, _| rng.gen_range(0.0..1.0));
    let sum: f64 = v.iter().sum();
    v /= sum;
    DmnModel::new(depth, kind, p, q, v, ModelMeta::default()).expect("valid dimensions")
}

/// Result of a training run.
pub struct TrainOutcome {
    pub model: DmnModel<f64>,
    pub history: TrainingHistory,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

/// Trains a fresh model of the given depth and interpolation kind.
pub fn train(
    config: &TrainConfig,
    dataset: &Dataset,
    depth: u32,
    kind: ShapeKind,
) -> Result<TrainOutcome> {
    let labeled: Vec<&StiffnessSample> =
        dataset.samples.iter().filter(|s| s.label.is_some()).collect();
    if labeled.is_empty() {
        return Err(Error::invalid("training needs labeled samples"));
    }
    if !(0.0..1.0).contains(&config.validation_fraction) {
        return Err(Error::invalid("validation fraction must lie in [0, 1)"));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((labeled.len() as f64) * config.validation_fraction).round() as usize;
    let (val_indices, train_indices) = order.split_at(n_val);
    let train_set: Vec<&StiffnessSample> = train_indices.iter().map(|&i| labeled[i]).collect();
    let val_set: Vec<&StiffnessSample> = val_indices.iter().map(|&i| labeled[i]).collect();
    if train_set.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }

    let mut model = init_model(depth, kind, rng.gen());
    let n_params_pq = model.coefficients_p().len();
    let mut opt_p = AmsGrad::new(n_params_pq);
    let mut opt_q = AmsGrad::new(n_params_pq);
    let mut opt_v = AmsGrad::new(model.n_inputs());

    let mut history = TrainingHistory {
        rows: Vec::with_capacity(config.epochs as usize),
        weights: config.record_weights.then(Vec::new),
    };

    let mut batch_order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..config.epochs {
        let lr = config.schedule.rate(epoch);
        batch_order.shuffle(&mut rng);
        // Random mini-batches; an undersized trailing batch is dropped
        // unless the whole set is smaller than one batch.
        let batch_size = config.batch_size.min(train_set.len());
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in batch_order.chunks(batch_size) {
            if chunk.len() < batch_size {
                continue;
            }
            let batch: Vec<&StiffnessSample> = chunk.iter().map(|&i| train_set[i]).collect();
            let (loss_value, grads) = loss_and_gradients(&model, &batch, &config.loss)?;
            if !loss_value.is_finite() {
                return Err(Error::NonConvergence(format!(
                    "training diverged at epoch {epoch} (loss {loss_value})"
                )));
            }
            let (p, q, v) = model.params_mut();
            if config.use_adam {
                opt_p.step_adam(p.as_mut_slice(), grads.dp.as_slice(), lr);
                opt_q.step_adam(q.as_mut_slice(), grads.dq.as_slice(), lr);
                opt_v.step_adam(v.as_mut_slice(), grads.dv.as_slice(), lr);
            } else {
                opt_p.step(p.as_mut_slice(), grads.dp.as_slice(), lr);
                opt_q.step(q.as_mut_slice(), grads.dq.as_slice(), lr);
                opt_v.step(v.as_mut_slice(), grads.dv.as_slice(), lr);
            }
            epoch_loss += loss_value;
            batches += 1;
        }

        let train_report = error_report_refs(&model, &train_set)?;
        let val_report = if val_set.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let r = error_report_refs(&model, &val_set)?;
            (r.0, r.1)
        };
        history.rows.push(HistoryRow {
            epoch,
            loss: if batches > 0 { epoch_loss / batches as f64 } else { f64::NAN },
            lr,
            train_mean: train_report.0,
            train_max: train_report.1,
            val_mean: val_report.0,
            val_max: val_report.1,
        });
        if let Some(weights) = &mut history.weights {
            weights.push(model.weights_raw().iter().map(|&v| v.max(0.0)).collect());
        }
    }

    let final_val = history.rows.last().map(|r| r.val_mean);
    let meta = model.meta_mut();
    meta.created_by = Some(format!("laminet {}", env!("CARGO_PKG_VERSION")));
    meta.training_seed = Some(config.seed);
    meta.epochs = Some(config.epochs);
    meta.final_validation_error = final_val;
    meta.dataset = Some(dataset.discretization.clone());

    Ok(TrainOutcome {
        model,
        history,
        train_indices: train_indices.to_vec(),
        val_indices: val_indices.to_vec(),
    })
}

fn error_report_refs(model: &DmnModel<f64>, set: &[&StiffnessSample]) -> Result<(f64, f64)> {
    let owned: Vec<StiffnessSample> = set.iter().map(|s| (*s).clone()).collect();
    let report = error_report(model, &owned)?;
    Ok((report.mean, report.max))
}
