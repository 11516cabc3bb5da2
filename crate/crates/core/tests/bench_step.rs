//! Manual throughput probe for the full architecture (run with --ignored).

use std::time::Instant;

use ecgdnn::model::{ArchitectureConfig, Model};
use ecgdnn::rng::Rng;
use ecgdnn::tensor::Tensor;
use ecgdnn::train::{AdamParams, AdamState};

#[test]
#[ignore]
fn time_one_training_step() {
    let cfg = ArchitectureConfig::default();
    let mut model: Model<f32> = Model::build(&cfg, 0);
    let mut rng = Rng::new(1);
    let x = Tensor::from_vec(
        &[32, 12, 4096],
        (0..32 * 12 * 4096)
            .map(|_| rng.next_normal() as f32 * 0.3)
            .collect(),
    );
    let y = Tensor::from_vec(
        &[32, 6],
        (0..32 * 6)
            .map(|_| if rng.next_bool(0.2) { 1.0 } else { 0.0 })
            .collect(),
    );
    let mut adam = AdamState::new();
    let params = AdamParams::default();

    // Warm up.
    let (_, grads) = model.loss_and_grads(&x, &y, 0, true).unwrap();
    adam.step(&mut model, &grads, 0.001, &params);

    let t0 = Instant::now();
    let steps = 3;
    for s in 0..steps {
        let (loss, grads) = model.loss_and_grads(&x, &y, s, true).unwrap();
        adam.step(&mut model, &grads, 0.001, &params);
        eprintln!("step {s} loss {loss}");
    }
    let per_step = t0.elapsed().as_secs_f64() / steps as f64;
    eprintln!("batch-32 train step: {per_step:.2} s");

    let t1 = Instant::now();
    let _ = model.predict(&x).unwrap();
    eprintln!("batch-32 inference: {:.2} s", t1.elapsed().as_secs_f64());
}
