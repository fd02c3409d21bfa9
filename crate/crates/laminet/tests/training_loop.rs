//! Training pipeline behavior beyond the unit tests: labeler round trips,
//! orientation continuity of the identified map, dead-weight dynamics.

use laminet::laminate::default_alpha;
use laminet::mech::{OrientationPoint, ShapeKind, Stiffness};
use laminet::training::{
    init_model, label_samples, sample_stiffness_pairs, train, Dataset, Labeler, TrainConfig,
    TriangleDiscretization,
};

fn self_labeled_dataset(seed: u64, n: usize, target_seed: u64, depth: u32) -> Dataset {
    let target = init_model(depth, ShapeKind::Linear, target_seed);
    let d4 = TriangleDiscretization::d4();
    let samples = sample_stiffness_pairs(n, seed, &d4).unwrap();
    let mut dataset = Dataset::new(seed, "d4", samples);
    label_samples(&mut dataset, &Labeler::TargetDmn { model: &target }).unwrap();
    dataset
}

#[test]
fn target_dmn_labeler_enables_learning() {
    let dataset = self_labeled_dataset(3, 96, 17, 2);
    let config = TrainConfig { epochs: 150, batch_size: 32, seed: 5, ..TrainConfig::default() };
    let out = train(&config, &dataset, 2, ShapeKind::Linear).unwrap();
    let last = out.history.rows.last().unwrap();
    let first = out.history.rows.first().unwrap();
    assert!(
        last.train_mean < 0.3 * first.train_mean,
        "training error went {} -> {}",
        first.train_mean,
        last.train_mean
    );
    // The penalty keeps the weights near the mixing constraint.
    let weights: f64 = out.model.weights_raw().iter().map(|&v| v.max(0.0)).sum();
    assert!((weights - 1.0).abs() < 0.05, "weight sum {weights}");
}

/// The identified stiffness map is continuous in the orientation: secant
/// slopes along a line through the triangle show no isolated jumps.
#[test]
fn forward_stiffness_is_continuous_in_the_orientation() {
    let model = init_model(3, ShapeKind::Quadratic, 23);
    let c1 = Stiffness::isotropic(20.0, 9.0);
    let c2 = Stiffness::isotropic(1.0, 0.4);
    let alpha = default_alpha(&c1, &c2);

    // Straight segment from near-unidirectional to near-planar.
    let n = 60;
    let mut values = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let l1 = 0.95 * (1.0 - t) + 0.52 * t;
        let l2 = 0.02 * (1.0 - t) + 0.47 * t;
        let p = OrientationPoint::new(l1, l2).unwrap();
        values.push(model.forward_stiffness(&c1, &c2, &p, alpha).unwrap());
    }
    let slopes: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let mut sorted = slopes.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2].max(1e-12);
    for (k, s) in slopes.iter().enumerate() {
        assert!(
            *s <= 10.0 * median.max(slopes[k.saturating_sub(1)].max(1e-12)),
            "jump at segment {k}: slope {s}, median {median}"
        );
    }
}

/// Once an input weight dies (and its penalty contribution with it), its
/// effective weight stays at zero for the rest of training.
#[test]
fn dead_weights_stay_dead() {
    let dataset = self_labeled_dataset(7, 128, 29, 3);
    let config = TrainConfig {
        epochs: 120,
        batch_size: 32,
        seed: 41,
        record_weights: true,
        ..TrainConfig::default()
    };
    let out = train(&config, &dataset, 3, ShapeKind::Linear).unwrap();
    let weights = out.history.weights.as_ref().unwrap();
    let n_slots = weights[0].len();
    for slot in 0..n_slots {
        let mut dead_since: Option<usize> = None;
        for (epoch, row) in weights.iter().enumerate() {
            if row[slot] == 0.0 {
                dead_since.get_or_insert(epoch);
            } else if let Some(since) = dead_since {
                panic!("slot {slot} died at epoch {since} but revived at epoch {epoch}");
            }
        }
    }
}

#[test]
fn labeler_failures_are_reported_not_fatal() {
    // The FFT labeler drops samples whose phases are not positive definite.
    let d4 = TriangleDiscretization::d4();
    let mut samples = sample_stiffness_pairs(3, 9, &d4).unwrap();
    for s in &mut samples {
        s.params.g1 = s.params.g1.clamp(500.0, 2_000.0);
        s.params.g2 = s.params.g2.clamp(500.0, 2_000.0);
        s.params.k2 = s.params.k2.clamp(500.0, 2_000.0);
        let (c1, c2) = s.params.stiffness_pair();
        s.stiffness_1 = c1;
        s.stiffness_2 = c2;
    }
    samples[1].stiffness_2 = Stiffness::isotropic(-1.0, 1.0);
    let mut dataset = Dataset::new(9, "d4", samples);
    let report = label_samples(
        &mut dataset,
        &Labeler::FftOracle { grid: 16, config: laminet::fft::FftSolveConfig::default() },
    )
    .unwrap();
    assert_eq!(report.dropped.len(), 1);
    assert_eq!(report.dropped[0].0, 1);
    assert_eq!(dataset.len(), 2);
    assert_eq!(dataset.labeled_count(), 2);
}
