//! Parse a pair-per-line interaction file, split per user, and build the
//! normalized adjacency; prints the dataset summary as JSON.
//!
//! Run with: cargo run --example load_and_split

use dgcl::data::{build_norm_adjacency, parse_interactions, split_train_test};
use dgcl::rng::substream;

const SAMPLE: &str = "\
# user  item   (extra columns ignored)
alice   dune        5 2021-03-01
alice   neuromancer 4 2021-03-09
alice   hyperion    5 2021-04-22
bob     dune        3 2021-02-11
bob     snowcrash   4 2021-05-05
carol   hyperion    5 2021-01-30
carol   snowcrash   2 2021-06-17
carol   neuromancer 4 2021-07-01
dave    dune        5 2021-08-08
";

fn main() {
    let raw = parse_interactions(SAMPLE).unwrap();
    println!(
        "parsed {} users x {} items, {} unique interactions",
        raw.num_users,
        raw.num_items,
        raw.edges.len()
    );
    for u in 0..raw.num_users {
        println!("  user {} = {:?}", u, raw.user_name(u));
    }

    let ds = split_train_test(&raw, 0.8, &mut substream(7, "split", 0)).unwrap();
    println!(
        "summary: {}",
        serde_json::to_string_pretty(&ds.summary()).unwrap()
    );

    let adj = build_norm_adjacency(&ds).unwrap();
    println!("adjacency: {} nodes, {} stored entries", adj.csr.n, adj.csr.nnz());
    for &(u, i) in ds.train_edges.iter().take(4) {
        let w = adj.csr.get(u, ds.num_users + i);
        println!(
            "  edge ({} -> {}): coefficient {w:.5}",
            raw.user_name(u),
            raw.item_name(i)
        );
    }
}
