//! Randomized embedding of a finite metric into a tree.
//!
//! The classic random-shift construction: rescale so the smallest nonzero
//! distance is 1, draw a radius multiplier `β = λ^U` with `U` uniform in
//! [0, 1), draw a uniform permutation of the points, then carve clusters
//! top-down. A point at level `i` joins the cluster of the earliest point in
//! the permutation within radius `r_i = β·λ^{i−2}`, always staying inside
//! its parent cluster.
//!
//! With this radius schedule two points sharing a cluster at level `i` are
//! at distance at most `2β·λ^{i−2} < 2λ^{i−1}`, while separating at level
//! `i` costs at least `2λ^{i−1}` in the tree, so the tree never contracts a
//! distance. That inequality is checked with zero tolerance by the tests.
//!
//! Points at distance exactly zero are merged into one leaf first; the
//! embedding maps every original point to the leaf of its representative.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hst::{HstTree, VertexId};
use crate::instance::{ClientVector, Metric, PointId};

/// A tree embedding of a metric, with everything needed to move between
/// original and tree coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub tree: HstTree,
    /// Radius multiplier in `[1, λ)`.
    pub beta: f64,
    /// The permutation used for cluster assignment, as original point ids
    /// of the merged representatives.
    pub permutation: Vec<PointId>,
    /// Original point to tree point (index of its representative class).
    pub class_of_point: Vec<usize>,
    /// Rescale factor: original distance = tree-side distance × `scale`.
    pub scale: f64,
}

impl Embedding {
    /// Leaf vertex holding an original point.
    pub fn leaf_of(&self, p: PointId) -> VertexId {
        self.tree.leaf_of_point(self.class_of_point[p])
    }

    /// Tree distance between two original points, in original units.
    pub fn embedded_distance(&self, p: PointId, q: PointId) -> f64 {
        self.tree.tree_distance(self.leaf_of(p), self.leaf_of(q)) * self.scale
    }

    /// Client counts per tree point, summing merged originals.
    pub fn class_clients(&self, clients: &ClientVector) -> Result<ClientVector> {
        if clients.len() != self.class_of_point.len() {
            return Err(Error::Dimension {
                what: "client vector",
                expected: self.class_of_point.len(),
                got: clients.len(),
            });
        }
        let mut out = vec![0u64; self.tree.num_leaves()];
        for (p, &n) in clients.iter().enumerate() {
            out[self.class_of_point[p]] += n;
        }
        Ok(out)
    }

    /// Original id of the representative behind a tree point.
    pub fn original_of_class(&self, class: usize) -> PointId {
        self.permutation
            .iter()
            .copied()
            .find(|&orig| self.class_of_point[orig] == class)
            .expect("every class appears in the permutation")
    }
}

/// Embeds `metric` into a random tree with parameter `lambda ∈ (1, 2]`.
/// Draws exactly one uniform for `β` and then one permutation, in that
/// order, so a seeded RNG reproduces the embedding bit for bit.
pub fn frt_embed(metric: &Metric, lambda: f64, rng: &mut impl Rng) -> Result<Embedding> {
    if !lambda.is_finite() || lambda <= 1.0 || lambda > 2.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must satisfy 1 < lambda <= 2, got {lambda}"),
        });
    }
    let n = metric.n();
    if n == 0 {
        return Err(Error::EmptyCandidateSet);
    }

    // Merge exact duplicates: class i is represented by the smallest
    // original id at distance zero from it.
    let mut class_of_point = vec![usize::MAX; n];
    let mut reps: Vec<PointId> = Vec::new();
    for p in 0..n {
        let mut found = None;
        for (ci, &r) in reps.iter().enumerate() {
            if metric.get(p, r) == 0.0 {
                found = Some(ci);
                break;
            }
        }
        match found {
            Some(ci) => class_of_point[p] = ci,
            None => {
                class_of_point[p] = reps.len();
                reps.push(p);
            }
        }
    }
    let k = reps.len();

    if k == 1 {
        // No nonzero distance anywhere: a single leaf under a root.
        let tree = HstTree::from_parts(lambda, 1, vec![None, Some(0)], vec![1, 0], vec![
            None,
            Some(0),
        ])?;
        return Ok(Embedding {
            tree,
            beta: 1.0,
            permutation: vec![reps[0]],
            class_of_point,
            scale: 1.0,
        });
    }

    // Rescale so the smallest distance between classes is exactly 1.
    let scale = metric.min_nonzero().ok_or(Error::DegenerateMetric)?;
    let d = |a: usize, b: usize| metric.get(reps[a], reps[b]) / scale;
    let mut diameter: f64 = 0.0;
    for a in 0..k {
        for b in (a + 1)..k {
            diameter = diameter.max(d(a, b));
        }
    }

    // Smallest depth with λ^{L−2} ≥ diameter, so the root radius β·λ^{L−2}
    // covers everything for every β ≥ 1.
    let mut depth = (diameter.ln() / lambda.ln()).ceil().max(0.0) as usize + 2;
    while depth > 2 && powi(lambda, depth - 3) >= diameter {
        depth -= 1;
    }
    while powi(lambda, depth - 2) < diameter {
        depth += 1;
    }

    let beta = powi_f(lambda, rng.gen::<f64>());
    // Fisher-Yates over class indices.
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }

    // Carve clusters top-down. Each cluster is a sorted list of classes; a
    // member joins the earliest permutation point within the level radius.
    // Children are emitted in order of first appearance while scanning
    // members ascending, and vertex ids are assigned breadth-first.
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut level: Vec<usize> = vec![depth];
    let mut point: Vec<Option<usize>> = vec![None];
    let all: Vec<usize> = (0..k).collect();
    let mut frontier: Vec<(usize, Vec<usize>)> = vec![(0, all)];
    for child_level in (0..depth).rev() {
        let radius = beta * powi_signed(lambda, child_level as i64 - 2);
        let mut next = Vec::with_capacity(frontier.len());
        for (vertex, members) in frontier {
            if child_level == 0 {
                // Radii below the minimum distance force singletons here.
                for m in members {
                    let id = parent.len();
                    parent.push(Some(vertex));
                    level.push(0);
                    point.push(Some(m));
                    debug_assert_eq!(id, parent.len() - 1);
                }
                continue;
            }
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for &m in &members {
                let w = perm
                    .iter()
                    .copied()
                    .find(|&w| d(w, m) <= radius)
                    .expect("a point is always within radius of itself");
                match groups.iter_mut().find(|(label, _)| *label == w) {
                    Some((_, g)) => g.push(m),
                    None => groups.push((w, vec![m])),
                }
            }
            for (_, g) in groups {
                let id = parent.len();
                parent.push(Some(vertex));
                level.push(child_level);
                point.push(None);
                next.push((id, g));
            }
        }
        frontier = next;
    }

    let tree = HstTree::from_parts(lambda, depth, parent, level, point)?;
    Ok(Embedding {
        tree,
        beta,
        permutation: perm.into_iter().map(|c| reps[c]).collect(),
        class_of_point,
        scale,
    })
}

fn powi(base: f64, exp: usize) -> f64 {
    let mut p = 1.0;
    for _ in 0..exp {
        p *= base;
    }
    p
}

fn powi_signed(base: f64, exp: i64) -> f64 {
    if exp >= 0 {
        powi(base, exp as usize)
    } else {
        1.0 / powi(base, (-exp) as usize)
    }
}

fn powi_f(base: f64, exp: f64) -> f64 {
    base.powf(exp)
}

/// Distortion summary of one embedding over all point pairs at positive
/// distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionStats {
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub pairs: usize,
}

/// Ratios `d_T(p,q) / d(p,q)` in original units. `min_ratio ≥ 1` is the
/// non-contraction property.
pub fn expansion_stats(metric: &Metric, emb: &Embedding) -> ExpansionStats {
    let n = metric.n();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for p in 0..n {
        for q in (p + 1)..n {
            let d = metric.get(p, q);
            if d == 0.0 {
                continue;
            }
            let ratio = emb.embedded_distance(p, q) / d;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            sum += ratio;
            pairs += 1;
        }
    }
    ExpansionStats {
        min_ratio,
        mean_ratio: if pairs > 0 { sum / pairs as f64 } else { 1.0 },
        max_ratio: if pairs > 0 { max_ratio } else { 1.0 },
        pairs,
    }
}
