#![allow(dead_code)]

use std::io::Write;

use monosparse::{generate, CamArray, Cell, SparsitySpec, TileConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A query inside every active interval of `row`.
pub fn planted_query(array: &CamArray, row: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    array
        .row(row)
        .iter()
        .map(|c| match *c {
            Cell::DontCare => rng.random::<f64>(),
            Cell::Active { lo, hi } => {
                let lo = lo.max(0.0);
                let hi = hi.min(1.0);
                if hi > lo {
                    // (lo, hi]: stay off the open end
                    lo + (hi - lo) * rng.random_range(1e-6..=1.0)
                } else {
                    hi
                }
            }
        })
        .collect()
}

/// Random array, tile and a mix of uniform and row-planted queries.
pub fn random_case(lambda: f64, rng: &mut ChaCha8Rng) -> (CamArray, TileConfig, Vec<Vec<f64>>) {
    let rows = rng.random_range(1..=48);
    let cols = rng.random_range(1..=48);
    let mu = rng.random_range(-1.0..=1.0);
    let array = generate(&SparsitySpec::new(rows, cols, lambda, mu, rng.random())).unwrap();
    let tiles = TileConfig::new(
        rng.random_range(1..=rows + 2),
        rng.random_range(1..=cols + 2),
    )
    .unwrap();
    let mut queries: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..cols).map(|_| rng.random::<f64>()).collect())
        .collect();
    for _ in 0..2 {
        let r = rng.random_range(0..rows);
        queries.push(planted_query(&array, r, rng));
    }
    (array, tiles, queries)
}

/// Writes a verdict line past libtest's output capture.
pub fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "[acceptance] criterion {criterion:>2} {}: {title}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

pub fn verdict(criterion: u32, title: &str, pass: bool, detail: &str) {
    report(criterion, title, pass, detail);
    assert!(pass, "criterion {criterion} ({title}) failed: {detail}");
}
