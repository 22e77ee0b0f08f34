//! LightGCN propagation on a toy graph, layer averaging, and hard-negative
//! synthesis via positive mixing.
//!
//! Run with: cargo run --example lightgcn_propagation

use dgcl::data::{build_norm_adjacency, split_train_test, synthetic_blocks};
use dgcl::encoder;
use dgcl::rng::substream;
use dgcl::tape::Tape;

fn main() {
    let raw = synthetic_blocks(8, 8, 2, 0.5, &mut substream(3, "gen", 0));
    let ds = split_train_test(&raw, 0.8, &mut substream(3, "split", 0)).unwrap();
    let adj = build_norm_adjacency(&ds).unwrap();

    let dim = 4;
    let mut init_rng = substream(3, "emb", 0);
    let table = encoder::init_embeddings(&mut init_rng, ds.num_nodes(), dim);

    let mut tape = Tape::new();
    let stack = encoder::layer_stack(&mut tape, &adj, &table, 3).unwrap();
    for (l, layer) in stack.iter().enumerate() {
        println!("layer {l}: user0 = {:?}", &layer.row(0));
    }
    let agg = encoder::aggregate_layers(&mut tape, &stack, false).unwrap();
    println!("aggregate (layers 1..=3 averaged): user0 = {:?}", agg.row(0));

    // mix positive-item information into two candidate negatives, then pick
    // the candidate closest to the user
    let users = [0usize, 1];
    let pos_nodes: Vec<usize> = users.iter().map(|&u| ds.num_users + ds.train_by_user[u][0]).collect();
    let user_agg = tape.gather_rows(&agg, &users).unwrap();
    let range = encoder::aggregation_range(3, false);
    let pos_stack: Vec<_> = range
        .clone()
        .map(|l| tape.gather_rows(&stack[l], &pos_nodes).unwrap())
        .collect();

    let mut mix_rng = substream(3, "mix", 0);
    let mut candidates = Vec::new();
    for cand_item in [4usize, 12] {
        let cand_nodes = vec![ds.num_users + cand_item % ds.num_items; users.len()];
        let cand_stack: Vec<_> = range
            .clone()
            .map(|l| tape.gather_rows(&stack[l], &cand_nodes).unwrap())
            .collect();
        let mixed = encoder::positive_mix(&mut tape, &pos_stack, &cand_stack, &mut mix_rng).unwrap();
        // aggregate the mixed stack the same way as the encoder output
        let mut acc = mixed[0].clone();
        for layer in &mixed[1..] {
            acc = tape.add(&acc, layer).unwrap();
        }
        candidates.push(tape.scale(&acc, 1.0 / mixed.len() as f64));
    }

    let (selected, chosen) =
        encoder::select_hard_negative(&mut tape, &user_agg, &candidates).unwrap();
    println!("chosen candidate index per user: {chosen:?}");
    println!("hard negative for user0: {:?}", selected.row(0));
}
