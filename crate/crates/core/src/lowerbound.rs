//! Star-family lower bound harness.
//!
//! The family fixing the cost of privacy: a center with `n` leaves at
//! distance `r = √ε·f`, leaf-to-leaf distance `2r`, and i.i.d. leaf demands
//! that are 1 with probability `√m/(√m+1)` and `m` otherwise, where
//! `m = ⌈1/ε⌉`. Opening the center and deciding each leaf independently is
//! optimal up to the single center charge, so per-trial optima have the
//! closed form `f + Σ_i min(f, N_i·r)` and every policy can be priced
//! against it.
//!
//! A per-leaf policy sees only the demand and chooses open or closed; its
//! expected per-leaf cost under the demand distribution is what the
//! two-point cost table prices. The harness also realizes the star as a
//! tree so the private solver itself can be run as a policy.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum};
use crate::hst::HstTree;
use crate::instance::{ClientVector, Metric, UflInstance};
use crate::rng::trial_rng;
use crate::solver::{solve_tree_private, SolverParams, SupersetRule};

/// The hard distribution's parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarFamily {
    pub epsilon: f64,
    pub facility_cost: f64,
    pub n_leaves: usize,
}

impl StarFamily {
    pub fn new(epsilon: f64, facility_cost: f64, n_leaves: usize) -> Result<Self> {
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
        if n_leaves == 0 {
            return Err(Error::InvalidParameter {
                name: "n_leaves",
                reason: "the star needs at least one leaf".into(),
            });
        }
        Ok(StarFamily {
            epsilon,
            facility_cost,
            n_leaves,
        })
    }

    /// `m = ⌈1/ε⌉`, the heavy demand value.
    pub fn m(&self) -> u64 {
        (1.0 / self.epsilon).ceil() as u64
    }

    /// Leaf-to-center distance `r = √ε·f`.
    pub fn radius(&self) -> f64 {
        self.epsilon.sqrt() * self.facility_cost
    }

    /// Probability that a leaf draws demand 1.
    pub fn prob_light(&self) -> f64 {
        let s = (self.m() as f64).sqrt();
        s / (s + 1.0)
    }

    /// Star metric with the center as point 0 and leaves as points 1..=n.
    pub fn star_metric(&self) -> Metric {
        let n = self.n_leaves;
        let r = self.radius();
        let mut d = vec![vec![0.0; n + 1]; n + 1];
        for i in 1..=n {
            d[0][i] = r;
            d[i][0] = r;
            for j in (i + 1)..=n {
                d[i][j] = 2.0 * r;
                d[j][i] = 2.0 * r;
            }
        }
        Metric::from_matrix(d).expect("star distances form a metric")
    }

    /// Full instance with the given leaf demands; the center holds none.
    pub fn star_instance(&self, leaf_clients: &ClientVector) -> Result<UflInstance> {
        if leaf_clients.len() != self.n_leaves {
            return Err(Error::Dimension {
                what: "leaf client vector",
                expected: self.n_leaves,
                got: leaf_clients.len(),
            });
        }
        let mut clients = Vec::with_capacity(self.n_leaves + 1);
        clients.push(0);
        clients.extend_from_slice(leaf_clients);
        UflInstance::new(self.star_metric(), self.facility_cost, clients)
    }

    /// One draw of the demand vector, leaves only.
    pub fn sample_leaf_clients(&self, rng: &mut impl Rng) -> ClientVector {
        let p1 = self.prob_light();
        let m = self.m();
        (0..self.n_leaves)
            .map(|_| if rng.gen::<f64>() < p1 { 1 } else { m })
            .collect()
    }

    /// Optimal cost given the demands, restricted to solutions containing
    /// the center: `f + Σ_i min(f, N_i·r)`. The unrestricted optimum lies
    /// within `f` of this.
    pub fn restricted_opt(&self, leaf_clients: &ClientVector) -> f64 {
        let r = self.radius();
        let f = self.facility_cost;
        let leaf_terms: Vec<f64> = leaf_clients
            .iter()
            .map(|&n| f.min(n as f64 * r))
            .collect();
        f + pairwise_sum(&leaf_terms)
    }
}

/// Per-leaf costs of the four (demand, decision) combinations at the
/// calibrated point `ε = 1/m`, where the leaf radius is `f/√m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointCostTable {
    /// Demand 1, leaf closed: connect one client to the center.
    pub light_closed: f64,
    /// Demand 1, leaf open: pay the facility.
    pub light_open: f64,
    /// Demand m, leaf closed: connect m clients to the center.
    pub heavy_closed: f64,
    /// Demand m, leaf open: pay the facility.
    pub heavy_open: f64,
}

pub fn two_point_cost_table(facility_cost: f64, m: u64) -> TwoPointCostTable {
    let s = (m as f64).sqrt();
    TwoPointCostTable {
        light_closed: facility_cost / s,
        light_open: facility_cost,
        heavy_closed: s * facility_cost,
        heavy_open: facility_cost,
    }
}

/// `E[min(f, N·r)] = 2f/(√m+1)` per leaf at the calibrated point.
pub fn expected_opt_per_leaf(facility_cost: f64, m: u64) -> f64 {
    let s = (m as f64).sqrt();
    2.0 * facility_cost / (s + 1.0)
}

/// A policy the harness can price on the star.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Open every leaf.
    OpenAll,
    /// Open no leaf; everyone walks to the center.
    OpenNone,
    /// Open a leaf iff its demand is at least the threshold.
    Threshold(u64),
    /// Run the private tree solver on a star realization.
    DpSolver,
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Policy> {
        match s {
            "open-all" => Ok(Policy::OpenAll),
            "open-none" => Ok(Policy::OpenNone),
            "dp-solver" => Ok(Policy::DpSolver),
            other => match other.strip_prefix("threshold:") {
                Some(k) => k
                    .parse::<u64>()
                    .map(Policy::Threshold)
                    .map_err(|_| Error::UnknownPolicy(other.to_string())),
                None => Err(Error::UnknownPolicy(other.to_string())),
            },
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::OpenAll => write!(f, "open-all"),
            Policy::OpenNone => write!(f, "open-none"),
            Policy::Threshold(k) => write!(f, "threshold:{k}"),
            Policy::DpSolver => write!(f, "dp-solver"),
        }
    }
}

/// Expected per-leaf cost of a deterministic per-leaf policy under the
/// demand distribution, from the cost table. `None` for the solver policy,
/// which is not a per-leaf rule.
pub fn per_leaf_expected_cost(family: &StarFamily, policy: Policy) -> Option<f64> {
    let m = family.m();
    let t = two_point_cost_table(family.facility_cost, m);
    let p1 = family.prob_light();
    let pm = 1.0 - p1;
    let (light, heavy) = match policy {
        Policy::OpenAll => (t.light_open, t.heavy_open),
        Policy::OpenNone => (t.light_closed, t.heavy_closed),
        Policy::Threshold(k) => (
            if 1 >= k { t.light_open } else { t.light_closed },
            if m >= k { t.heavy_open } else { t.heavy_closed },
        ),
        Policy::DpSolver => return None,
    };
    Some(p1 * light + pm * heavy)
}

/// Star realized as a tree: the root stands for the center and each leaf
/// hangs on its own path of `L` edges, so any two leaves meet only at the
/// root. `L` is the smallest depth whose root-to-leaf weight
/// `ρ_L = (λ^L−1)/(λ−1)` reaches the star radius; the returned scale `s`
/// satisfies tree distance = s × star distance exactly.
pub fn realize_star_hst(family: &StarFamily, lambda: f64) -> Result<(HstTree, f64)> {
    if !lambda.is_finite() || lambda <= 1.0 || lambda > 2.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must satisfy 1 < lambda <= 2, got {lambda}"),
        });
    }
    let r = family.radius();
    let mut depth = 1usize;
    let rho = |l: usize| -> f64 {
        let mut acc = 0.0;
        let mut p = 1.0;
        for _ in 0..l {
            acc += p;
            p *= lambda;
        }
        acc
    };
    while rho(depth) < r {
        depth += 1;
    }
    let scale = rho(depth) / r;

    let n = family.n_leaves;
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut level: Vec<usize> = vec![depth];
    let mut point: Vec<Option<usize>> = vec![None];
    for leaf in 0..n {
        let mut above = 0usize; // the root
        for lv in (0..depth).rev() {
            let id = parent.len();
            parent.push(Some(above));
            level.push(lv);
            point.push(if lv == 0 { Some(leaf) } else { None });
            above = id;
        }
    }
    let tree = HstTree::from_parts(lambda, depth, parent, level, point)?;
    Ok((tree, scale))
}

/// Aggregate outcome of pricing one policy over many independent trials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub policy: Policy,
    pub trials: usize,
    /// Mean over trials of the policy's cost, star units.
    pub mean_cost: f64,
    /// Mean over trials of the restricted optimum.
    pub mean_opt: f64,
    /// `mean_cost / mean_opt`.
    pub ratio: f64,
    /// Analytic expected per-leaf cost, when the policy is a per-leaf rule.
    pub per_leaf_expected: Option<f64>,
    pub m: u64,
    pub expected_opt_per_leaf: f64,
}

/// Trial loop configuration.
#[derive(Debug, Clone, Copy)]
pub struct HarnessConfig {
    pub trials: usize,
    pub master_seed: u64,
    /// Tree parameter for the solver policy's star realization.
    pub lambda: f64,
}

fn deterministic_policy_cost(family: &StarFamily, policy: Policy, clients: &ClientVector) -> f64 {
    let f = family.facility_cost;
    let r = family.radius();
    let per_leaf: Vec<f64> = clients
        .iter()
        .map(|&n| match policy {
            Policy::OpenAll => f,
            Policy::OpenNone => n as f64 * r,
            Policy::Threshold(k) => {
                if n >= k {
                    f
                } else {
                    n as f64 * r
                }
            }
            Policy::DpSolver => unreachable!("solver policy is priced separately"),
        })
        .collect();
    // Every policy keeps the center open, matching the restricted optimum's
    // convention; comparisons are then apples to apples.
    f + pairwise_sum(&per_leaf)
}

/// Per-trial pricing state for one policy, reusable across trial indices.
/// Trial `t` is fully determined by `(master_seed, t)`, so callers that need
/// row-level data (the CLI's CSV export) reproduce exactly the numbers that
/// [`evaluate_policy`] aggregates.
pub struct PolicyPricer<'a> {
    family: &'a StarFamily,
    policy: Policy,
    master_seed: u64,
    solver_setup: Option<(HstTree, f64, SolverParams)>,
}

impl<'a> PolicyPricer<'a> {
    pub fn new(family: &'a StarFamily, policy: Policy, cfg: &HarnessConfig) -> Result<Self> {
        let solver_setup = match policy {
            Policy::DpSolver => {
                let (tree, scale) = realize_star_hst(family, cfg.lambda)?;
                let params = SolverParams::new(
                    cfg.lambda,
                    family.epsilon,
                    family.facility_cost * scale,
                )?;
                Some((tree, scale, params))
            }
            _ => None,
        };
        Ok(PolicyPricer {
            family,
            policy,
            master_seed: cfg.master_seed,
            solver_setup,
        })
    }

    /// Runs trial `t`, returning `(policy cost, restricted opt)` in star units.
    pub fn trial(&self, t: usize) -> Result<(f64, f64)> {
        let mut rng = trial_rng(self.master_seed, t as u64);
        let clients = self.family.sample_leaf_clients(&mut rng);
        let opt = self.family.restricted_opt(&clients);
        let cost = match &self.solver_setup {
            None => deterministic_policy_cost(self.family, self.policy, &clients),
            Some((tree, scale, params)) => {
                let sol =
                    solve_tree_private(tree, &clients, params, SupersetRule::MinSet, &mut rng)?;
                sol.cost.total / scale
            }
        };
        Ok((cost, opt))
    }
}

/// Prices a policy over independent trials. Trials run in parallel with
/// per-trial RNGs derived from the master seed, so the aggregate is
/// independent of scheduling.
pub fn evaluate_policy(
    family: &StarFamily,
    policy: Policy,
    cfg: &HarnessConfig,
) -> Result<PolicyOutcome> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "need at least one trial".into(),
        });
    }
    let pricer = PolicyPricer::new(family, policy, cfg)?;
    let results: Vec<Result<(f64, f64)>> = map_indexed(cfg.trials, |t| pricer.trial(t));

    let mut costs = Vec::with_capacity(cfg.trials);
    let mut opts = Vec::with_capacity(cfg.trials);
    for r in results {
        let (c, o) = r?;
        costs.push(c);
        opts.push(o);
    }
    let mean_cost = pairwise_sum(&costs) / cfg.trials as f64;
    let mean_opt = pairwise_sum(&opts) / cfg.trials as f64;
    Ok(PolicyOutcome {
        policy,
        trials: cfg.trials,
        mean_cost,
        mean_opt,
        ratio: mean_cost / mean_opt,
        per_leaf_expected: per_leaf_expected_cost(family, policy),
        m: family.m(),
        expected_opt_per_leaf: expected_opt_per_leaf(family.facility_cost, family.m()),
    })
}
