//! Recall@K and NDCG@K behavior on hand-checkable rankings, plus the
//! analytic baseline a random ranker achieves under masking.
//!
//! Run with: cargo run --example ranking_metrics

use dgcl::data::{split_train_test, synthetic_blocks};
use dgcl::metrics::{analytic_random_recall, evaluate_model, ndcg_at_k, recall_at_k};
use dgcl::rng::substream;
use dgcl::tensor::Tensor;

fn main() {
    let ranked = vec![3, 1, 7, 2, 9];
    let relevant = vec![1, 9];
    println!("ranked list {ranked:?}, relevant {relevant:?}:");
    for k in [1, 2, 3, 5] {
        println!(
            "  K={k}: recall {:.4}, ndcg {:.4}",
            recall_at_k(&ranked, &relevant, k),
            ndcg_at_k(&ranked, &relevant, k)
        );
    }

    // random embeddings on a synthetic dataset land on the analytic baseline
    let raw = synthetic_blocks(16, 16, 2, 0.5, &mut substream(9, "gen", 0));
    let ds = split_train_test(&raw, 0.8, &mut substream(9, "split", 0)).unwrap();
    let k = 5;
    let expected = analytic_random_recall(&ds, k);
    let mut total = 0.0;
    let runs = 30;
    for s in 0..runs {
        let mut rng = substream(9, "emb", s);
        let users = Tensor::randn(&mut rng, vec![ds.num_users, 8], 1.0);
        let items = Tensor::randn(&mut rng, vec![ds.num_items, 8], 1.0);
        total += evaluate_model(&users, &items, &ds, &[k]).get("recall@5").unwrap();
    }
    println!(
        "\nrandom-ranking recall@{k}: measured {:.4} vs analytic {expected:.4}",
        total / runs as f64
    );
}
