//! Shared fixtures for the criterion benches.

use monosparse::{feature_reorder, generate, random_queries, CamArray, SparsitySpec};

/// A reordered synthetic array with one matching query set, as used by the
/// sparsity sweep.
pub fn sweep_fixture(
    rows: usize,
    cols: usize,
    lambda: f64,
    seed: u64,
) -> (CamArray, Vec<Vec<f64>>) {
    let array = generate(&SparsitySpec::new(rows, cols, lambda, 0.0, seed)).expect("valid spec");
    let queries = random_queries(&array, 1, seed ^ 0x5eed);
    let (reordered, perm) = feature_reorder(&array);
    let queries = queries
        .iter()
        .map(|q| perm.permute_query(q).expect("query width matches"))
        .collect();
    (reordered, queries)
}
