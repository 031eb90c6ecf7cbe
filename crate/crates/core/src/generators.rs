//! Random instance and tree generators for tests and benchmarks.
//!
//! Everything here is deterministic given the caller's RNG, so a fixed seed
//! reproduces the exact corpus. Generated trees always satisfy the
//! structural invariants checked by `HstTree::from_parts`.

use rand::seq::index::sample;
use rand::Rng;

use crate::hst::HstTree;
use crate::instance::{ClientVector, Metric, UflInstance};

/// Random tree with exactly `n_leaves` leaves and the given depth. Built
/// top-down by splitting the leaf budget among up to four children per
/// internal vertex; at level 1 each remaining leaf becomes its own child so
/// the leaf count is always met exactly.
pub fn random_hst(n_leaves: usize, depth: usize, lambda: f64, rng: &mut impl Rng) -> HstTree {
    assert!(n_leaves >= 1, "a tree needs at least one leaf");
    assert!(depth >= 1, "depth must be at least 1");

    let mut parent: Vec<Option<usize>> = vec![None];
    let mut level: Vec<usize> = vec![depth];
    let mut point: Vec<Option<usize>> = vec![None];
    let mut next_point = 0usize;

    // Work items are processed LIFO; ids still increase in creation order,
    // which keeps the leaf-to-point map deterministic.
    let mut work: Vec<(usize, usize, usize)> = vec![(0, depth, n_leaves)];
    while let Some((v, lv, budget)) = work.pop() {
        debug_assert!(budget >= 1);
        if lv == 0 {
            debug_assert_eq!(budget, 1);
            point[v] = Some(next_point);
            next_point += 1;
            continue;
        }
        let k = if lv == 1 {
            budget
        } else {
            rng.gen_range(1..=budget.min(4))
        };
        for part in split_budget(budget, k, rng) {
            let id = parent.len();
            parent.push(Some(v));
            level.push(lv - 1);
            point.push(None);
            work.push((id, lv - 1, part));
        }
    }

    HstTree::from_parts(lambda, depth, parent, level, point)
        .expect("generated tree satisfies the structural invariants")
}

/// Splits `m` into `k` positive parts, uniformly over compositions.
fn split_budget(m: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    debug_assert!(1 <= k && k <= m);
    if k == 1 {
        return vec![m];
    }
    let mut cuts: Vec<usize> = sample(rng, m - 1, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts {
        parts.push(c - prev);
        prev = c;
    }
    parts.push(m - prev);
    parts
}

/// Client counts drawn uniformly from `0..=max_per_point`.
pub fn random_clients(n: usize, max_per_point: u64, rng: &mut impl Rng) -> ClientVector {
    (0..n).map(|_| rng.gen_range(0..=max_per_point)).collect()
}

/// Points uniform in the unit cube with the induced Euclidean metric.
pub fn random_euclidean_instance(
    n: usize,
    dim: usize,
    facility_cost: f64,
    max_clients: u64,
    rng: &mut impl Rng,
) -> UflInstance {
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let metric = Metric::from_coords(&coords).expect("unit-cube coordinates are valid");
    let clients = random_clients(n, max_clients, rng);
    UflInstance::new(metric, facility_cost, clients).expect("generated instance is valid")
}
