//! Train the time-conditioned denoiser on a fixed batch of embeddings and
//! sample contrastive views through the reverse chain.
//!
//! Run with: cargo run --example diffusion_denoising

use dgcl::diffusion::{
    diffusion_loss, reverse_sample, DenoiserNet, FrozenDenoiser, NoiseSchedule, ScheduleKind,
};
use dgcl::optim::Adam;
use dgcl::rng::{substream, NoiseSource};
use dgcl::tape::Tape;
use dgcl::tensor::Tensor;

fn main() {
    let dim = 8;
    let schedule = NoiseSchedule::build(ScheduleKind::Linear, 10, 1e-5, 2e-2).unwrap();
    let mut net = DenoiserNet::init(&mut substream(1, "net", 0), dim, 2, false).unwrap();
    let data = Tensor::randn(&mut substream(1, "data", 0), vec![32, dim], 0.5);
    let mut adam = Adam::new(1e-2);

    println!("training the denoiser to reconstruct clean embeddings:");
    for step in 0..300 {
        let mut rng = substream(1, "loss", step);
        let mut tape = Tape::new();
        let view = net.params.track(&mut tape);
        let loss = diffusion_loss(&mut tape, &net, &view, &data, &schedule, &mut rng).unwrap();
        let grads = tape.backward(&loss).unwrap();
        adam.step(&mut net.params, &view, &grads).unwrap();
        if step % 50 == 0 {
            println!("  step {step:>3}: reconstruction loss {:.5}", loss.item());
        }
    }

    // two stochastic views of the same embeddings
    let frozen = FrozenDenoiser::new(&net);
    let mut view_rng = substream(1, "views", 0);
    let mut tape = Tape::new();
    let view_a = reverse_sample(
        &mut tape,
        &frozen,
        &data,
        &schedule,
        schedule.steps,
        &mut NoiseSource::Seeded(&mut view_rng),
    )
    .unwrap();
    let view_b = reverse_sample(
        &mut tape,
        &frozen,
        &data,
        &schedule,
        schedule.steps,
        &mut NoiseSource::Seeded(&mut view_rng),
    )
    .unwrap();

    let dist = |a: &Tensor, b: &Tensor| {
        (a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.numel() as f64)
            .sqrt()
    };
    println!("\nrow 0 original: {:?}", &data.row(0)[..4]);
    println!("row 0 view a:   {:?}", &view_a.row(0)[..4]);
    println!("row 0 view b:   {:?}", &view_b.row(0)[..4]);
    println!("rms(view a - original) = {:.4}", dist(&view_a, &data));
    println!("rms(view a - view b)   = {:.4}", dist(&view_a, &view_b));
}
