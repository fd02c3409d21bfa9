use laminet::mech::ShapeKind;
use laminet::training::*;

fn run(label: &str, mutate: impl Fn(&mut TrainConfig)) {
    let target = init_model(3, ShapeKind::Linear, 100);
    let d4 = TriangleDiscretization::d4();
    let samples = sample_stiffness_pairs(400, 1, &d4).unwrap();
    let mut dataset = Dataset::new(1, "d4", samples);
    label_samples(&mut dataset, &Labeler::TargetDmn { model: &target }).unwrap();
    let mut config = TrainConfig { epochs: 300, batch_size: 32, seed: 7, ..TrainConfig::default() };
    mutate(&mut config);
    let out = train(&config, &dataset, 3, ShapeKind::Linear).unwrap();
    let r100 = &out.history.rows[99];
    let r300 = out.history.rows.last().unwrap();
    println!(
        "{label:28} e100 {:.4}  e300 {:.4}  (val {:.4})",
        r100.train_mean, r300.train_mean, r300.val_mean
    );
}

#[test]
#[ignore]
fn probe_variants() {
    run("baseline", |_| {});
    run("q = 2", |c| c.loss.q_exponent = 2.0);
    run("adam", |c| c.use_adam = true);
    run("adam + q2", |c| {
        c.use_adam = true;
        c.loss.q_exponent = 2.0;
    });
}
