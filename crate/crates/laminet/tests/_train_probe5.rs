use laminet::mech::ShapeKind;
use laminet::training::*;

#[test]
#[ignore]
fn probe_depth1_dynamics() {
    let target = init_model(1, ShapeKind::Linear, 101);
    let d4 = TriangleDiscretization::d4();
    let samples = sample_stiffness_pairs(200, 1, &d4).unwrap();
    let mut dataset = Dataset::new(1, "d4", samples);
    label_samples(&mut dataset, &Labeler::TargetDmn { model: &target }).unwrap();

    println!("target p {:?}", target.coefficients_p().as_slice());
    println!("target q {:?}", target.coefficients_q().as_slice());
    println!("target v {:?}", target.weights_raw().as_slice());

    let mut model = init_model(1, ShapeKind::Linear, 5);
    let cfg = LossConfig::default();
    let schedule = LrSchedule::default();
    let mut opt_p = AmsGrad::new(3);
    let mut opt_q = AmsGrad::new(3);
    let mut opt_v = AmsGrad::new(2);
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
    let mut order: Vec<usize> = (0..200).collect();
    for epoch in 0..400u32 {
        let lr = schedule.rate(epoch);
        order.shuffle(&mut rng);
        let mut gsum = [0.0f64; 3];
        for chunk in order.chunks(32) {
            if chunk.len() < 32 { continue; }
            let batch: Vec<&StiffnessSample> = chunk.iter().map(|&i| &dataset.samples[i]).collect();
            let (_, grads) = loss_and_gradients(&model, &batch, &cfg).unwrap();
            gsum[0] += grads.dp.norm();
            gsum[1] += grads.dq.norm();
            gsum[2] += grads.dv.norm();
            let (p, q, v) = model.params_mut();
            opt_p.step(p.as_mut_slice(), grads.dp.as_slice(), lr);
            opt_q.step(q.as_mut_slice(), grads.dq.as_slice(), lr);
            opt_v.step(v.as_mut_slice(), grads.dv.as_slice(), lr);
        }
        if epoch % 50 == 0 {
            let report = error_report(&model, &dataset.samples).unwrap();
            let mut sorted = report.per_sample.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            println!(
                "ep {epoch:3} e_mean {:.4} top3 {:.2?} |gp| {:.2e} |gq| {:.2e} |gv| {:.2e} p {:.3?} v {:.3?}",
                report.mean,
                &sorted[..3],
                gsum[0], gsum[1], gsum[2],
                model.coefficients_p().as_slice(),
                model.weights_raw().as_slice(),
            );
        }
    }
}
