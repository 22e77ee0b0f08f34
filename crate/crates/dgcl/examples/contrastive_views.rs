//! InfoNCE over paired views: the aligned-pair loss, temperature effects,
//! and scale invariance under row normalization.
//!
//! Run with: cargo run --example contrastive_views

use dgcl::contrastive::{info_nce, EntityKind, ViewPair};
use dgcl::rng::substream;
use dgcl::tape::Tape;
use dgcl::tensor::Tensor;

fn main() {
    // two views of the same 4 entities, second view mildly perturbed
    let base = Tensor::randn(&mut substream(5, "views", 0), vec![4, 8], 1.0);
    let noise = Tensor::randn(&mut substream(5, "views", 1), vec![4, 8], 0.2);
    let mut tape = Tape::new();
    let other = tape.add(&base, &noise).unwrap();

    println!("InfoNCE loss at different temperatures (aligned views):");
    for tau in [1.0, 0.5, 0.2, 0.1] {
        let pair = ViewPair::new(base.clone(), other.clone(), EntityKind::User, tau);
        let loss = info_nce(&mut tape, &pair).unwrap();
        println!("  tau = {tau:<4}: loss = {:.5}", loss.item());
    }

    // scaling both views leaves the normalized loss unchanged
    let scaled_a = tape.scale(&base, 10.0);
    let scaled_b = tape.scale(&other, 10.0);
    let pair = ViewPair::new(base.clone(), other.clone(), EntityKind::User, 0.2);
    let pair_scaled = ViewPair::new(scaled_a, scaled_b, EntityKind::User, 0.2);
    let l = info_nce(&mut tape, &pair).unwrap();
    let ls = info_nce(&mut tape, &pair_scaled).unwrap();
    println!(
        "\nscale invariance: loss {:.10} vs scaled {:.10} (diff {:.2e})",
        l.item(),
        ls.item(),
        (l.item() - ls.item()).abs()
    );

    // gradients flow to both views
    let mut tape = Tape::new();
    let a = tape.leaf(&base);
    let pair = ViewPair::new(a.clone(), other, EntityKind::User, 0.2);
    let loss = info_nce(&mut tape, &pair).unwrap();
    let grads = tape.backward(&loss).unwrap();
    println!(
        "gradient norm on view a: {:.5}",
        grads.get(&a).unwrap().frobenius_norm()
    );
}
