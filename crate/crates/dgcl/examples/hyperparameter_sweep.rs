//! Programmatic version of `dgcl sweep`: vary one hyperparameter over its
//! grid and print the resulting metrics table.
//!
//! Run with: cargo run --release --example hyperparameter_sweep

use dgcl::cli::{DIFF_STEPS_GRID, LAMBDA_GRID};
use dgcl::config::TrainConfig;
use dgcl::trainer::{dataset_from_config, train};

fn main() {
    let mut base = TrainConfig::default();
    base.synth_users = 16;
    base.synth_items = 16;
    base.embed_dim = 8;
    base.heads = 2;
    base.neg_candidates = 2;
    base.epochs = 30;
    base.eval_every = 10;
    base.seed = 21;

    let ds = dataset_from_config(&base).unwrap();

    println!("lambda sweep (contrastive weight):");
    for &lambda in &LAMBDA_GRID {
        let mut cfg = base.clone();
        cfg.lambda = lambda;
        let (_, report) = train(&cfg, &ds).unwrap();
        println!(
            "  lambda={lambda:<4} recall@20 {:.4}  ndcg@20 {:.4}",
            report.final_metrics["recall@20"], report.final_metrics["ndcg@20"]
        );
    }

    println!("diffusion-steps sweep:");
    for &steps in &DIFF_STEPS_GRID {
        let mut cfg = base.clone();
        cfg.diff_steps = steps;
        let (_, report) = train(&cfg, &ds).unwrap();
        println!(
            "  T={steps:<3} recall@20 {:.4}  ndcg@20 {:.4}",
            report.final_metrics["recall@20"], report.final_metrics["ndcg@20"]
        );
    }
}
