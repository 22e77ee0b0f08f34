//! Implicit-feedback interaction data: loading, train/test splitting, the
//! symmetric-normalized bipartite adjacency, and training-batch sampling.

use std::collections::HashSet;
use std::path::Path;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::DataError;
use crate::sparse::CsrMatrix;

/// Interactions parsed from a file, before splitting. Raw string ids are
/// remapped to dense integers in first-seen order.
#[derive(Clone, Debug)]
pub struct RawInteractions {
    pub num_users: usize,
    pub num_items: usize,
    pub edges: Vec<(usize, usize)>,
    user_names: Vec<String>,
    item_names: Vec<String>,
}

impl RawInteractions {
    pub fn user_name(&self, id: usize) -> &str {
        &self.user_names[id]
    }

    pub fn item_name(&self, id: usize) -> &str {
        &self.item_names[id]
    }

    pub fn user_id(&self, name: &str) -> Option<usize> {
        self.user_names.iter().position(|n| n == name)
    }

    pub fn item_id(&self, name: &str) -> Option<usize> {
        self.item_names.iter().position(|n| n == name)
    }
}

/// Train/test split of a bipartite implicit-feedback graph with dense ids.
#[derive(Clone, Debug)]
pub struct InteractionDataset {
    pub num_users: usize,
    pub num_items: usize,
    pub train_edges: Vec<(usize, usize)>,
    pub test_edges: Vec<(usize, usize)>,
    /// Item lists per user, sorted ascending.
    pub train_by_user: Vec<Vec<usize>>,
    pub test_by_user: Vec<Vec<usize>>,
}

/// JSON summary emitted by the CLI.
#[derive(Debug, Serialize)]
pub struct DatasetSummary {
    pub num_users: usize,
    pub num_items: usize,
    pub train_edges: usize,
    pub test_edges: usize,
}

impl InteractionDataset {
    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            num_users: self.num_users,
            num_items: self.num_items,
            train_edges: self.train_edges.len(),
            test_edges: self.test_edges.len(),
        }
    }

    pub fn train_degree(&self, user: usize) -> usize {
        self.train_by_user[user].len()
    }

    /// Assembles adjacency lists from explicit train/test edge sets.
    pub fn from_split(
        num_users: usize,
        num_items: usize,
        train_edges: Vec<(usize, usize)>,
        test_edges: Vec<(usize, usize)>,
    ) -> Self {
        let mut train_by_user = vec![Vec::new(); num_users];
        for &(u, i) in &train_edges {
            train_by_user[u].push(i);
        }
        let mut test_by_user = vec![Vec::new(); num_users];
        for &(u, i) in &test_edges {
            test_by_user[u].push(i);
        }
        for list in train_by_user.iter_mut().chain(test_by_user.iter_mut()) {
            list.sort_unstable();
        }
        InteractionDataset {
            num_users,
            num_items,
            train_edges,
            test_edges,
            train_by_user,
            test_by_user,
        }
    }
}

/// Parses a pair-per-line interaction file.
///
/// Each non-empty, non-`#` line must carry at least two whitespace-separated
/// tokens (user, item); extra columns such as ratings or timestamps are
/// ignored. Duplicate pairs collapse to one edge.
pub fn load_interactions(path: impl AsRef<Path>) -> Result<RawInteractions, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_interactions(&text)
}

/// Parses interaction text; see [`load_interactions`].
pub fn parse_interactions(text: &str) -> Result<RawInteractions, DataError> {
    let mut user_names: Vec<String> = Vec::new();
    let mut item_names: Vec<String> = Vec::new();
    let mut user_ids: std::collections::HashMap<String, usize> = Default::default();
    let mut item_ids: std::collections::HashMap<String, usize> = Default::default();
    let mut edges = Vec::new();
    let mut seen = HashSet::new();

    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (user_tok, item_tok) = match (tokens.next(), tokens.next()) {
            (Some(u), Some(i)) => (u, i),
            (u, _) => {
                return Err(DataError::MalformedLine {
                    line: lineno + 1,
                    tokens: u.is_some() as usize,
                })
            }
        };
        let u = *user_ids.entry(user_tok.to_string()).or_insert_with(|| {
            user_names.push(user_tok.to_string());
            user_names.len() - 1
        });
        let i = *item_ids.entry(item_tok.to_string()).or_insert_with(|| {
            item_names.push(item_tok.to_string());
            item_names.len() - 1
        });
        if seen.insert((u, i)) {
            edges.push((u, i));
        }
    }
    if edges.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    Ok(RawInteractions {
        num_users: user_names.len(),
        num_items: item_names.len(),
        edges,
        user_names,
        item_names,
    })
}

/// Per-user random holdout at `ratio` train fraction.
///
/// Train count per user is `round(ratio · n)`, clamped so every user keeps
/// at least one interaction in train; users with a single interaction keep
/// it in train and have an empty test set.
pub fn split_train_test<R: Rng>(
    raw: &RawInteractions,
    ratio: f64,
    rng: &mut R,
) -> Result<InteractionDataset, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::BadSplitRatio { ratio });
    }
    let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); raw.num_users];
    for &(u, i) in &raw.edges {
        by_user[u].push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (u, items) in by_user.iter_mut().enumerate() {
        items.shuffle(rng);
        let n = items.len();
        if n == 0 {
            continue;
        }
        let keep = ((ratio * n as f64).round() as usize).clamp(1, n);
        for (k, &i) in items.iter().enumerate() {
            if k < keep {
                train.push((u, i));
            } else {
                test.push((u, i));
            }
        }
    }
    Ok(InteractionDataset::from_split(
        raw.num_users,
        raw.num_items,
        train,
        test,
    ))
}

/// Symmetric-normalized adjacency over `num_users + num_items` nodes with
/// edge weight `1/sqrt(deg(u) · deg(i))`, degrees from train edges only.
/// No self-loops; isolated nodes keep empty rows.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency {
    pub csr: Rc<CsrMatrix>,
    pub num_users: usize,
    pub num_items: usize,
}

pub fn build_norm_adjacency(ds: &InteractionDataset) -> Result<NormalizedAdjacency, DataError> {
    if ds.train_edges.is_empty() {
        return Err(DataError::NoTrainEdges);
    }
    let n = ds.num_nodes();
    let mut degree = vec![0usize; n];
    for &(u, i) in &ds.train_edges {
        degree[u] += 1;
        degree[ds.num_users + i] += 1;
    }
    let mut triplets = Vec::with_capacity(ds.train_edges.len() * 2);
    for &(u, i) in &ds.train_edges {
        let item_node = ds.num_users + i;
        let w = 1.0 / ((degree[u] * degree[item_node]) as f64).sqrt();
        triplets.push((u, item_node, w));
        triplets.push((item_node, u, w));
    }
    Ok(NormalizedAdjacency {
        csr: Rc::new(CsrMatrix::from_triplets(n, triplets)),
        num_users: ds.num_users,
        num_items: ds.num_items,
    })
}

/// One BPR training example: a user, an interacted item, and `M` candidate
/// negatives none of which the user interacted with in train.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BprTriple {
    pub user: usize,
    pub pos_item: usize,
    pub candidates: Vec<usize>,
}

const NEGATIVE_RETRY_FACTOR: usize = 200;

/// Uniform edge sampling with rejection-sampled candidate negatives.
pub fn sample_bpr_batch<R: Rng>(
    ds: &InteractionDataset,
    batch_size: usize,
    num_candidates: usize,
    rng: &mut R,
) -> Result<Vec<BprTriple>, DataError> {
    assert!(batch_size >= 1 && num_candidates >= 1);
    let mut batch = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let &(user, pos_item) = &ds.train_edges[rng.gen_range(0..ds.train_edges.len())];
        let owned = &ds.train_by_user[user];
        let mut candidates = Vec::with_capacity(num_candidates);
        let mut attempts = 0usize;
        while candidates.len() < num_candidates {
            if attempts > NEGATIVE_RETRY_FACTOR * num_candidates {
                return Err(DataError::NoNegativeAvailable { user });
            }
            attempts += 1;
            let j = rng.gen_range(0..ds.num_items);
            if owned.binary_search(&j).is_err() {
                candidates.push(j);
            }
        }
        batch.push(BprTriple {
            user,
            pos_item,
            candidates,
        });
    }
    Ok(batch)
}

/// Synthetic block dataset: users and items are partitioned into `blocks`
/// aligned groups and a user interacts with each in-block item
/// independently with probability `within_prob`. Every user is guaranteed
/// at least one interaction.
pub fn synthetic_blocks<R: Rng>(
    num_users: usize,
    num_items: usize,
    blocks: usize,
    within_prob: f64,
    rng: &mut R,
) -> RawInteractions {
    assert!(blocks >= 1 && num_users % blocks == 0 && num_items % blocks == 0);
    let users_per = num_users / blocks;
    let items_per = num_items / blocks;
    let mut edges = Vec::new();
    for u in 0..num_users {
        let b = u / users_per;
        let item_lo = b * items_per;
        let mut any = false;
        for i in item_lo..item_lo + items_per {
            if rng.gen::<f64>() < within_prob {
                edges.push((u, i));
                any = true;
            }
        }
        if !any {
            edges.push((u, item_lo + rng.gen_range(0..items_per)));
        }
    }
    RawInteractions {
        num_users,
        num_items,
        edges,
        user_names: (0..num_users).map(|u| format!("u{u}")).collect(),
        item_names: (0..num_items).map(|i| format!("i{i}")).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn parse_remaps_in_first_seen_order() {
        let raw = parse_interactions("a b\na c\nz b\n").unwrap();
        assert_eq!(raw.num_users, 2);
        assert_eq!(raw.num_items, 2);
        assert_eq!(raw.edges.len(), 3);
        assert_eq!(raw.user_name(0), "a");
        assert_eq!(raw.user_name(1), "z");
        assert_eq!(raw.item_name(0), "b");
        assert_eq!(raw.item_name(1), "c");
    }

    #[test]
    fn parse_dedupes_and_skips_comments() {
        let raw = parse_interactions("# header\na b\n\na b extra-col 5.0\n").unwrap();
        assert_eq!(raw.edges, vec![(0, 0)]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_interactions("a b\nonly-one-token\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn parse_empty_is_a_dataset_error() {
        assert!(matches!(
            parse_interactions("# nothing\n"),
            Err(DataError::EmptyDataset)
        ));
    }

    #[test]
    fn remap_round_trips() {
        let raw = parse_interactions("bob x\nalice y\nbob z\n").unwrap();
        for u in 0..raw.num_users {
            assert_eq!(raw.user_id(raw.user_name(u)), Some(u));
        }
        for i in 0..raw.num_items {
            assert_eq!(raw.item_id(raw.item_name(i)), Some(i));
        }
    }

    #[test]
    fn single_interaction_user_stays_in_train() {
        let raw = parse_interactions("lonely only\n").unwrap();
        let ds = split_train_test(&raw, 0.8, &mut substream(1, "split", 0)).unwrap();
        assert_eq!(ds.train_edges, vec![(0, 0)]);
        assert!(ds.test_edges.is_empty());
    }

    #[test]
    fn eighty_twenty_split_of_ten_edges() {
        let mut text = String::new();
        for i in 0..10 {
            text.push_str(&format!("u item{i}\n"));
        }
        let raw = parse_interactions(&text).unwrap();
        let ds = split_train_test(&raw, 0.8, &mut substream(3, "split", 0)).unwrap();
        assert_eq!(ds.train_edges.len(), 8);
        assert_eq!(ds.test_edges.len(), 2);
    }

    #[test]
    fn split_is_seed_deterministic() {
        let raw = synthetic_blocks(8, 8, 2, 0.6, &mut substream(5, "gen", 0));
        let a = split_train_test(&raw, 0.8, &mut substream(9, "split", 0)).unwrap();
        let b = split_train_test(&raw, 0.8, &mut substream(9, "split", 0)).unwrap();
        assert_eq!(a.train_edges, b.train_edges);
        assert_eq!(a.test_edges, b.test_edges);
    }

    #[test]
    fn single_edge_coefficient_is_one() {
        let raw = parse_interactions("u0 i0\n").unwrap();
        let ds = split_train_test(&raw, 0.5, &mut substream(0, "split", 0)).unwrap();
        let adj = build_norm_adjacency(&ds).unwrap();
        assert_eq!(adj.csr.get(0, 1), 1.0);
        assert_eq!(adj.csr.get(1, 0), 1.0);
    }

    #[test]
    fn star_coefficient_matches_degree_formula() {
        // u0—{i0, i1}; i0 also linked only to u0 → coeff(u0,i0) = 1/√(2·1)
        let raw = parse_interactions("u0 i0\nu0 i1\n").unwrap();
        let ds = InteractionDataset::from_split(
            raw.num_users,
            raw.num_items,
            raw.edges.clone(),
            vec![],
        );
        let adj = build_norm_adjacency(&ds).unwrap();
        let c = adj.csr.get(0, 1);
        assert!((c - 0.70711).abs() < 1e-5, "{c}");
    }

    #[test]
    fn adjacency_is_symmetric_and_loop_free() {
        let raw = synthetic_blocks(8, 8, 2, 0.5, &mut substream(11, "gen", 0));
        let ds = split_train_test(&raw, 0.8, &mut substream(11, "split", 0)).unwrap();
        let adj = build_norm_adjacency(&ds).unwrap();
        assert!(adj.csr.is_symmetric());
        for r in 0..adj.csr.n {
            assert_eq!(adj.csr.get(r, r), 0.0);
        }
    }

    #[test]
    fn every_coefficient_matches_brute_force_degrees() {
        let raw = synthetic_blocks(6, 4, 2, 0.7, &mut substream(2, "gen", 0));
        let ds = InteractionDataset::from_split(
            raw.num_users,
            raw.num_items,
            raw.edges.clone(),
            vec![],
        );
        let adj = build_norm_adjacency(&ds).unwrap();
        // independent degree count straight from the edge list
        for &(u, i) in &ds.train_edges {
            let du = ds.train_edges.iter().filter(|e| e.0 == u).count();
            let di = ds.train_edges.iter().filter(|e| e.1 == i).count();
            let expected = 1.0 / ((du * di) as f64).sqrt();
            let got = adj.csr.get(u, ds.num_users + i);
            assert!((got - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn forced_negative_candidate() {
        // two items; u0 interacts only with i0, so its sole negative is i1
        let raw = parse_interactions("u0 i0\nu1 i1\n").unwrap();
        let ds = InteractionDataset::from_split(
            raw.num_users,
            raw.num_items,
            raw.edges.clone(),
            vec![],
        );
        let mut rng = substream(1, "bpr", 0);
        for _ in 0..50 {
            let batch = sample_bpr_batch(&ds, 4, 1, &mut rng).unwrap();
            for t in batch {
                if t.user == 0 {
                    assert_eq!(t.candidates, vec![1]);
                } else {
                    assert_eq!(t.candidates, vec![0]);
                }
            }
        }
    }

    #[test]
    fn saturated_user_fails_after_bounded_retries() {
        let raw = parse_interactions("u0 i0\nu0 i1\n").unwrap();
        let ds = InteractionDataset::from_split(
            raw.num_users,
            raw.num_items,
            raw.edges.clone(),
            vec![],
        );
        let err = sample_bpr_batch(&ds, 1, 1, &mut substream(0, "bpr", 0)).unwrap_err();
        assert!(matches!(err, DataError::NoNegativeAvailable { user: 0 }));
    }

    #[test]
    fn sampled_positives_are_train_edges_and_negatives_are_not() {
        let raw = synthetic_blocks(16, 16, 2, 0.4, &mut substream(7, "gen", 0));
        let ds = split_train_test(&raw, 0.8, &mut substream(7, "split", 0)).unwrap();
        let train: HashSet<(usize, usize)> = ds.train_edges.iter().copied().collect();
        let mut rng = substream(7, "bpr", 0);
        let mut draws = 0;
        while draws < 10_000 {
            let batch = sample_bpr_batch(&ds, 64, 2, &mut rng).unwrap();
            for t in &batch {
                assert!(train.contains(&(t.user, t.pos_item)));
                for &j in &t.candidates {
                    assert!(!train.contains(&(t.user, j)));
                }
            }
            draws += batch.len();
        }
    }

    #[test]
    fn batches_replay_identically_for_one_seed() {
        let raw = synthetic_blocks(8, 8, 2, 0.5, &mut substream(4, "gen", 0));
        let ds = split_train_test(&raw, 0.8, &mut substream(4, "split", 0)).unwrap();
        let a = sample_bpr_batch(&ds, 16, 3, &mut substream(4, "bpr", 1)).unwrap();
        let b = sample_bpr_batch(&ds, 16, 3, &mut substream(4, "bpr", 1)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn split_preserves_edge_multiset(seed in 0u64..500, ratio in 0.05f64..0.95) {
            let raw = synthetic_blocks(8, 8, 2, 0.5, &mut substream(seed, "gen", 0));
            let ds = split_train_test(&raw, ratio, &mut substream(seed, "split", 0)).unwrap();
            let mut combined: Vec<(usize, usize)> =
                ds.train_edges.iter().chain(&ds.test_edges).copied().collect();
            let mut original = raw.edges.clone();
            combined.sort_unstable();
            original.sort_unstable();
            prop_assert_eq!(combined, original);
        }

        #[test]
        fn remap_is_bijective(n_users in 1usize..12, n_items in 1usize..12) {
            let mut text = String::new();
            for u in 0..n_users {
                for i in 0..n_items {
                    if (u + i) % 3 == 0 {
                        text.push_str(&format!("user-{u} thing-{i}\n"));
                    }
                }
            }
            prop_assume!(!text.is_empty());
            let raw = parse_interactions(&text).unwrap();
            for u in 0..raw.num_users {
                prop_assert_eq!(raw.user_id(raw.user_name(u)), Some(u));
            }
            for i in 0..raw.num_items {
                prop_assert_eq!(raw.item_id(raw.item_name(i)), Some(i));
            }
        }
    }
}
