//! Facility location on a tree in the super-set output setting.
//!
//! Both solvers mark a set of tree vertices, reduce it to its minimal
//! elements, and let every client claim the nearest candidate; the open set
//! is the claimed candidates. The base variant marks from exact subtree
//! counts and is the analysis vehicle; the private variant adds Laplace
//! noise to the counts of every vertex below the cutoff level `L'` and
//! marks everything at or above it, which is what makes the published
//! superset differentially private.
//!
//! The cutoff is the smallest level whose edge weight reaches `ε·f`:
//! above it, subtree counts are irrelevant because connection costs already
//! dominate the privacy budget share.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hst::{min_set, subtree_counts, HstTree, VertexId};
use crate::instance::{ClientVector, CostBreakdown};

/// Parameters shared by every solver entry point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Tree parameter; the approximation analysis needs `1 < λ < 2` and the
    /// solver accepts `λ = 2` as the boundary case.
    pub lambda: f64,
    /// Privacy parameter `ε > 0`.
    pub epsilon: f64,
    /// Facility opening cost `f > 0`.
    pub facility_cost: f64,
}

impl SolverParams {
    pub fn new(lambda: f64, epsilon: f64, facility_cost: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 1.0 || lambda > 2.0 {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must satisfy 1 < lambda <= 2, got {lambda}"),
            });
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be finite and positive, got {epsilon}"),
            });
        }
        if !facility_cost.is_finite() || facility_cost <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "facility_cost",
                reason: format!("must be finite and positive, got {facility_cost}"),
            });
        }
        Ok(SolverParams {
            lambda,
            epsilon,
            facility_cost,
        })
    }

    /// `η = √λ`, the per-level noise growth factor.
    pub fn eta(&self) -> f64 {
        self.lambda.sqrt()
    }

    /// `c = (η−1)/η²`, the budget normalizer.
    pub fn c(&self) -> f64 {
        let eta = self.eta();
        (eta - 1.0) / (eta * eta)
    }
}

/// Smallest level `ℓ ≥ 0` with `λ^ℓ ≥ ε·f`. A float logarithm provides the
/// initial guess and an exact power walk fixes it up, so boundary inputs
/// like `ε·f = λ^k` land on `k` precisely.
pub fn compute_l_prime(epsilon_times_f: f64, lambda: f64) -> usize {
    if epsilon_times_f <= 1.0 {
        return 0;
    }
    let guess = epsilon_times_f.ln() / lambda.ln();
    let mut l = guess.ceil().max(0.0) as usize;
    while l > 0 && powi(lambda, l - 1) >= epsilon_times_f {
        l -= 1;
    }
    while powi(lambda, l) < epsilon_times_f {
        l += 1;
    }
    l
}

/// Repeated multiplication, matching how the tree builds its own tables.
fn powi(base: f64, exp: usize) -> f64 {
    let mut p = 1.0;
    for _ in 0..exp {
        p *= base;
    }
    p
}

/// Laplace scale for a noised vertex at `level < l_prime`:
/// `b_ℓ = f / (c · η^{L'+ℓ})`.
pub fn laplace_scale(params: &SolverParams, l_prime: usize, level: usize) -> f64 {
    let eta = params.eta();
    params.facility_cost / (params.c() * powi(eta, l_prime + level))
}

/// One Laplace draw with scale `b`, via inverse transform on a uniform
/// variable in the open interval (−½, ½).
pub fn sample_laplace(b: f64, rng: &mut impl Rng) -> f64 {
    let u = loop {
        let x = rng.gen::<f64>() - 0.5;
        if x != -0.5 {
            break x;
        }
    };
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Output of a marking pass: the marked vertices, and for the private
/// variant the noisy count each noised vertex was judged by.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedSet {
    pub marked: BTreeSet<VertexId>,
    /// Indexed by vertex; `Some` exactly for vertices below the cutoff in
    /// the private variant.
    pub noisy_counts: Vec<Option<f64>>,
}

/// Deterministic marking from exact counts: a vertex is marked when its
/// level reaches the cutoff or its subtree holds enough clients to pay for
/// a facility across its outgoing edge.
pub fn mark_base(t: &HstTree, counts: &[u64], params: &SolverParams, l_prime: usize) -> MarkedSet {
    let mut marked = BTreeSet::new();
    for v in 0..t.num_vertices() {
        let level = t.level(v);
        if level >= l_prime
            || counts[v] as f64 * t.pow(level) >= params.facility_cost
        {
            marked.insert(v);
        }
    }
    MarkedSet {
        marked,
        noisy_counts: vec![None; t.num_vertices()],
    }
}

/// Private marking: levels at or above the cutoff are marked outright;
/// below it each vertex is judged by `Ñ_v = N_v + Lap(b_ℓ)`. Noise is drawn
/// in ascending vertex-id order so a fixed RNG reproduces the marking.
pub fn mark_noisy(
    t: &HstTree,
    counts: &[u64],
    params: &SolverParams,
    l_prime: usize,
    rng: &mut impl Rng,
) -> MarkedSet {
    let mut marked = BTreeSet::new();
    let mut noisy_counts = vec![None; t.num_vertices()];
    for v in 0..t.num_vertices() {
        let level = t.level(v);
        if level >= l_prime {
            marked.insert(v);
            continue;
        }
        let b = laplace_scale(params, l_prime, level);
        let noisy = counts[v] as f64 + sample_laplace(b, rng);
        noisy_counts[v] = Some(noisy);
        if noisy * t.pow(level) >= params.facility_cost {
            marked.insert(v);
        }
    }
    MarkedSet {
        marked,
        noisy_counts,
    }
}

/// How the candidate set is carved out of the marked set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupersetRule {
    /// Minimal marked vertices; the default and the analyzed rule.
    MinSet,
    /// The whole marked set, for diagnostics.
    AllMarked,
}

pub fn select_superset(
    t: &HstTree,
    marked: &MarkedSet,
    rule: SupersetRule,
) -> BTreeSet<VertexId> {
    match rule {
        SupersetRule::MinSet => min_set(t, &marked.marked),
        SupersetRule::AllMarked => marked.marked.clone(),
    }
}

/// Sends every populated leaf to its nearest candidate, breaking distance
/// ties toward the smallest vertex id. Returns per-point assignments and
/// the claimed candidates.
pub fn closest_facility_rule(
    t: &HstTree,
    clients: &ClientVector,
    candidates: &BTreeSet<VertexId>,
) -> Result<(Vec<Option<VertexId>>, BTreeSet<VertexId>)> {
    let mut assignment = vec![None; clients.len()];
    let mut claimed = BTreeSet::new();
    for (p, &n) in clients.iter().enumerate() {
        if n == 0 {
            continue;
        }
        if candidates.is_empty() {
            return Err(Error::NoFacilityReachable);
        }
        let leaf = t.leaf_of_point(p);
        let mut best = f64::INFINITY;
        let mut pick = None;
        for &r in candidates {
            let d = t.tree_distance(leaf, r);
            if d < best {
                best = d;
                pick = Some(r);
            }
        }
        let r = pick.expect("candidates nonempty");
        assignment[p] = Some(r);
        claimed.insert(r);
    }
    Ok((assignment, claimed))
}

/// A solved tree instance. `tree` is the tree the ids refer to, which is the
/// input tree extended at the root when its depth was below the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSolution {
    pub tree: HstTree,
    pub l_prime: usize,
    /// Candidate superset `R` published by the mechanism.
    pub candidates: BTreeSet<VertexId>,
    /// Claimed candidates `S ⊆ R`; these pay the facility cost.
    pub open: BTreeSet<VertexId>,
    /// Per-point facility, `None` for points without clients.
    pub assignment: Vec<Option<VertexId>>,
    pub cost: CostBreakdown,
    /// `Some` for the private variant: the noisy counts per noised vertex.
    pub noisy_counts: Option<Vec<(VertexId, f64)>>,
}

fn finish_solution(
    t: HstTree,
    clients: &ClientVector,
    params: &SolverParams,
    l_prime: usize,
    marked: MarkedSet,
    rule: SupersetRule,
    keep_noise: bool,
) -> Result<TreeSolution> {
    let candidates = select_superset(&t, &marked, rule);
    let (assignment, open) = closest_facility_rule(&t, clients, &candidates)?;
    let facility = open.len() as f64 * params.facility_cost;
    let mut connection = 0.0;
    for (p, &n) in clients.iter().enumerate() {
        if let Some(r) = assignment[p] {
            connection += n as f64 * t.tree_distance(t.leaf_of_point(p), r);
        }
    }
    let noisy_counts = if keep_noise {
        Some(
            marked
                .noisy_counts
                .iter()
                .enumerate()
                .filter_map(|(v, c)| c.map(|c| (v, c)))
                .collect(),
        )
    } else {
        None
    };
    Ok(TreeSolution {
        tree: t,
        l_prime,
        candidates,
        open,
        assignment,
        cost: CostBreakdown::new(facility, connection),
        noisy_counts,
    })
}

fn prepare(t: &HstTree, clients: &ClientVector, params: &SolverParams) -> Result<(HstTree, Vec<u64>, usize)> {
    if clients.len() != t.num_leaves() {
        return Err(Error::Dimension {
            what: "client vector",
            expected: t.num_leaves(),
            got: clients.len(),
        });
    }
    if (t.lambda() - params.lambda).abs() > 1e-12 * params.lambda {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!(
                "tree was built with lambda {} but params say {}",
                t.lambda(),
                params.lambda
            ),
        });
    }
    let l_prime = compute_l_prime(params.epsilon * params.facility_cost, params.lambda);
    let t = t.extend_root(l_prime.max(t.depth()));
    let counts = subtree_counts(&t, clients)?;
    Ok((t, counts, l_prime))
}

/// Non-private baseline: exact counts, deterministic output.
pub fn solve_tree_base(
    t: &HstTree,
    clients: &ClientVector,
    params: &SolverParams,
    rule: SupersetRule,
) -> Result<TreeSolution> {
    let (t, counts, l_prime) = prepare(t, clients, params)?;
    let marked = mark_base(&t, &counts, params, l_prime);
    finish_solution(t, clients, params, l_prime, marked, rule, false)
}

/// The ε-differentially private mechanism.
pub fn solve_tree_private(
    t: &HstTree,
    clients: &ClientVector,
    params: &SolverParams,
    rule: SupersetRule,
    rng: &mut impl Rng,
) -> Result<TreeSolution> {
    let (t, counts, l_prime) = prepare(t, clients, params)?;
    let marked = mark_noisy(&t, &counts, params, l_prime, rng);
    finish_solution(t, clients, params, l_prime, marked, rule, true)
}
