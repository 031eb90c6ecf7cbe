//! Exact reference solvers.
//!
//! These are deliberately independent of the mechanism code: the exhaustive
//! search enumerates subsets with no tree reasoning at all, and the tree
//! dynamic program is derived directly from the structure of optimal
//! solutions. Statistical tests compare mechanism output against these
//! oracles, so nothing here may share shortcuts with the solver modules.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::hst::{HstTree, VertexId};
use crate::instance::{ClientVector, CostBreakdown, UflInstance};

/// Largest candidate count the subset enumeration accepts.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// An exact optimum: the open set and its cost. Ids are point ids for the
/// instance variant and vertex ids for the tree variants.
#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub open: BTreeSet<usize>,
    pub cost: f64,
}

/// Enumerates every subset of `0..num_candidates`. Ties are broken toward
/// the lexicographically smallest sorted id vector, so the result is a
/// deterministic function of the inputs. The empty set is allowed only when
/// there is no demand.
fn exhaustive_core(
    num_candidates: usize,
    demands: &[(usize, u64)],
    facility_cost: f64,
    d: impl Fn(usize, usize) -> f64,
) -> Result<(BTreeSet<usize>, f64)> {
    if num_candidates > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLargeForExhaustive {
            n: num_candidates,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let live: Vec<(usize, u64)> = demands.iter().copied().filter(|&(_, n)| n > 0).collect();
    if live.is_empty() {
        return Ok((BTreeSet::new(), 0.0));
    }
    if num_candidates == 0 {
        return Err(Error::EmptyCandidateSet);
    }

    // dist[j][c] = distance from demand j to candidate c.
    let dist: Vec<Vec<f64>> = live
        .iter()
        .map(|&(loc, _)| (0..num_candidates).map(|c| d(c, loc)).collect())
        .collect();

    let mut best_cost = f64::INFINITY;
    let mut best_set: Vec<usize> = Vec::new();
    for mask in 1u64..(1u64 << num_candidates) {
        let open: Vec<usize> = (0..num_candidates).filter(|&c| mask & (1 << c) != 0).collect();
        let mut cost = open.len() as f64 * facility_cost;
        for (j, &(_, n)) in live.iter().enumerate() {
            let mut nearest = f64::INFINITY;
            for &c in &open {
                if dist[j][c] < nearest {
                    nearest = dist[j][c];
                }
            }
            cost += n as f64 * nearest;
            if cost > best_cost {
                break;
            }
        }
        if cost < best_cost || (cost == best_cost && open < best_set) {
            best_cost = cost;
            best_set = open;
        }
    }
    Ok((best_set.into_iter().collect(), best_cost))
}

/// Exact optimum with facilities at instance points.
pub fn opt_exhaustive(inst: &UflInstance) -> Result<OptResult> {
    let demands: Vec<(usize, u64)> = inst.clients.iter().copied().enumerate().collect();
    let (open, cost) = exhaustive_core(inst.n(), &demands, inst.facility_cost, |c, loc| {
        inst.metric.get(c, loc)
    })?;
    Ok(OptResult { open, cost })
}

/// Exact optimum with facilities at arbitrary tree vertices and clients at
/// the leaves, by plain subset enumeration over all vertices.
pub fn opt_exhaustive_tree(
    t: &HstTree,
    clients: &ClientVector,
    facility_cost: f64,
) -> Result<OptResult> {
    if clients.len() != t.num_leaves() {
        return Err(Error::Dimension {
            what: "client vector",
            expected: t.num_leaves(),
            got: clients.len(),
        });
    }
    let demands: Vec<(usize, u64)> = clients
        .iter()
        .enumerate()
        .map(|(p, &n)| (t.leaf_of_point(p), n))
        .collect();
    let (open, cost) = exhaustive_core(t.num_vertices(), &demands, facility_cost, |c, loc| {
        t.tree_distance(c, loc)
    })?;
    Ok(OptResult { open, cost })
}

/// Cost of an arbitrary vertex set on a tree: `|S|·f` plus every client's
/// distance to its nearest open vertex.
pub fn tree_set_cost(
    t: &HstTree,
    clients: &ClientVector,
    open: &BTreeSet<VertexId>,
    facility_cost: f64,
) -> Result<CostBreakdown> {
    if clients.len() != t.num_leaves() {
        return Err(Error::Dimension {
            what: "client vector",
            expected: t.num_leaves(),
            got: clients.len(),
        });
    }
    if open.is_empty() {
        if clients.iter().all(|&n| n == 0) {
            return Ok(CostBreakdown::zero());
        }
        return Err(Error::NoFacilityReachable);
    }
    let facility = open.len() as f64 * facility_cost;
    let mut connection = 0.0;
    for (p, &n) in clients.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let leaf = t.leaf_of_point(p);
        let mut nearest = f64::INFINITY;
        for &v in open {
            let d = t.tree_distance(leaf, v);
            if d < nearest {
                nearest = d;
            }
        }
        connection += n as f64 * nearest;
    }
    Ok(CostBreakdown::new(facility, connection))
}

// ---------------------------------------------------------------------------
// Exact tree dynamic program
// ---------------------------------------------------------------------------

/// Encodes the highest open level inside a subtree: `-1` means no facility.
fn h_code(h: Option<usize>) -> i64 {
    h.map_or(-1, |x| x as i64)
}

struct TreeDp<'a> {
    t: &'a HstTree,
    counts: Vec<u64>,
    facility_cost: f64,
    memo: HashMap<(VertexId, i64, u64), f64>,
}

impl<'a> TreeDp<'a> {
    /// Cheapest cost inside `T_u` when the maximum open level inside is
    /// exactly `h` (`None`: nothing open) and the nearest facility outside
    /// `T_u` sits at distance `g` from `u`.
    fn cost(&mut self, u: VertexId, h: Option<usize>, g: f64) -> f64 {
        let key = (u, h_code(h), g.to_bits());
        if let Some(&c) = self.memo.get(&key) {
            return c;
        }
        let value = self.compute(u, h, g);
        self.memo.insert(key, value);
        value
    }

    fn compute(&mut self, u: VertexId, h: Option<usize>, g: f64) -> f64 {
        let level = self.t.level(u);
        if self.t.is_leaf(u) {
            return match h {
                Some(0) => self.facility_cost,
                Some(_) => f64::INFINITY,
                None => {
                    let n = self.counts[u];
                    if n == 0 {
                        0.0
                    } else if g.is_finite() {
                        n as f64 * g
                    } else {
                        f64::INFINITY
                    }
                }
            };
        }
        let edge = self.t.pow(level - 1);
        match h {
            // u itself is open; it dominates every external option for the
            // children, and each child subtree optimizes independently.
            Some(hh) if hh == level => {
                let mut total = self.facility_cost;
                for &c in self.t.children(u) {
                    total += self.best_up_to(c, Some(level - 1), edge, true);
                }
                total
            }
            Some(hh) if hh > level => f64::INFINITY,
            // Maximum open level H sits strictly inside; at least one child
            // must attain it exactly.
            Some(hh) => {
                let g_child = child_external(g, edge, self.t.up(level - 1) - self.t.up(hh));
                let children: Vec<VertexId> = self.t.children(u).to_vec();
                let mut total = 0.0;
                let mut penalty = f64::INFINITY;
                for &c in &children {
                    let relaxed = self.best_up_to(c, Some(hh), g_child, true);
                    let exact = self.cost(c, Some(hh), g_child);
                    if !relaxed.is_finite() {
                        return f64::INFINITY;
                    }
                    total += relaxed;
                    let extra = exact - relaxed;
                    if extra < penalty {
                        penalty = extra;
                    }
                }
                total + penalty
            }
            // Nothing open inside T_u at all.
            None => {
                let g_child = if g.is_finite() { g + edge } else { f64::INFINITY };
                let mut total = 0.0;
                for c in self.t.children(u).to_vec() {
                    total += self.cost(c, None, g_child);
                    if !total.is_finite() {
                        return f64::INFINITY;
                    }
                }
                total
            }
        }
    }

    /// `min_{h' ≤ cap} cost(u, h', g)`, optionally including `None`.
    fn best_up_to(&mut self, u: VertexId, cap: Option<usize>, g: f64, include_none: bool) -> f64 {
        let mut best = if include_none {
            self.cost(u, None, g)
        } else {
            f64::INFINITY
        };
        if let Some(cap) = cap {
            for hh in 0..=cap.min(self.t.level(u)) {
                let c = self.cost(u, Some(hh), g);
                if c < best {
                    best = c;
                }
            }
        }
        best
    }

    /// Replays the argmin decisions of `cost(u, h, g)` and collects the open
    /// vertices. Scanning h choices as `None, 0, 1, ...` and children in id
    /// order makes the reconstruction deterministic.
    fn collect(&mut self, u: VertexId, h: Option<usize>, g: f64, out: &mut BTreeSet<VertexId>) {
        let level = self.t.level(u);
        if self.t.is_leaf(u) {
            if h == Some(0) {
                out.insert(u);
            }
            return;
        }
        let edge = self.t.pow(level - 1);
        match h {
            Some(hh) if hh == level => {
                out.insert(u);
                for c in self.t.children(u).to_vec() {
                    let pick = self.argmin_up_to(c, Some(level - 1), edge, true);
                    self.collect(c, pick, edge, out);
                }
            }
            Some(hh) => {
                let g_child = child_external(g, edge, self.t.up(level - 1) - self.t.up(hh));
                let children: Vec<VertexId> = self.t.children(u).to_vec();
                let mut penalty = f64::INFINITY;
                let mut exact_child = children[0];
                for &c in &children {
                    let relaxed = self.best_up_to(c, Some(hh), g_child, true);
                    let exact = self.cost(c, Some(hh), g_child);
                    let extra = exact - relaxed;
                    if extra < penalty {
                        penalty = extra;
                        exact_child = c;
                    }
                }
                for &c in &children {
                    if c == exact_child {
                        self.collect(c, Some(hh), g_child, out);
                    } else {
                        let pick = self.argmin_up_to(c, Some(hh), g_child, true);
                        self.collect(c, pick, g_child, out);
                    }
                }
            }
            None => {
                let g_child = if g.is_finite() { g + edge } else { f64::INFINITY };
                for c in self.t.children(u).to_vec() {
                    self.collect(c, None, g_child, out);
                }
            }
        }
    }

    fn argmin_up_to(
        &mut self,
        u: VertexId,
        cap: Option<usize>,
        g: f64,
        include_none: bool,
    ) -> Option<usize> {
        let mut best = f64::INFINITY;
        let mut pick = None;
        if include_none {
            best = self.cost(u, None, g);
        }
        if let Some(cap) = cap {
            for hh in 0..=cap.min(self.t.level(u)) {
                let c = self.cost(u, Some(hh), g);
                if c < best {
                    best = c;
                    pick = Some(hh);
                }
            }
        }
        pick
    }
}

/// External option for a child: through the parent to the outside (`g` plus
/// one edge) or through the parent to the best facility elsewhere under the
/// parent, which sits at level `H`, hence `2·edge + (up(ℓ−1) − up(H))`. The
/// second term never undercuts a route a client could realize directly, so
/// the program stays exact.
fn child_external(g: f64, edge: f64, drop_to_h: f64) -> f64 {
    let via_outside = if g.is_finite() { g + edge } else { f64::INFINITY };
    let via_sibling = 2.0 * edge + drop_to_h;
    via_outside.min(via_sibling)
}

/// Exact optimum over facilities at arbitrary tree vertices, by dynamic
/// programming over (vertex, highest open level inside, external distance).
/// Handles trees far beyond the exhaustive limit.
pub fn opt_tree_dp(t: &HstTree, clients: &ClientVector, facility_cost: f64) -> Result<OptResult> {
    if clients.len() != t.num_leaves() {
        return Err(Error::Dimension {
            what: "client vector",
            expected: t.num_leaves(),
            got: clients.len(),
        });
    }
    if !(facility_cost > 0.0) || !facility_cost.is_finite() {
        return Err(Error::InvalidParameter {
            name: "facility_cost",
            reason: format!("must be finite and positive, got {facility_cost}"),
        });
    }
    let counts = crate::hst::subtree_counts(t, clients)?;
    let mut dp = TreeDp {
        t,
        counts,
        facility_cost,
        memo: HashMap::new(),
    };
    let root = t.root();
    let mut best = dp.cost(root, None, f64::INFINITY);
    let mut best_h: Option<usize> = None;
    for hh in 0..=t.depth() {
        let c = dp.cost(root, Some(hh), f64::INFINITY);
        if c < best {
            best = c;
            best_h = Some(hh);
        }
    }
    let mut open = BTreeSet::new();
    if best.is_finite() {
        dp.collect(root, best_h, f64::INFINITY, &mut open);
    }
    Ok(OptResult { open, cost: best })
}

/// Ratio `cost / opt` with the usual conventions: both zero gives 1, a
/// positive cost against a zero optimum gives infinity, negatives are
/// rejected.
pub fn approx_ratio(cost: f64, opt: f64) -> Result<f64> {
    if cost < 0.0 || opt < 0.0 || cost.is_nan() || opt.is_nan() {
        return Err(Error::InvalidParameter {
            name: "ratio",
            reason: format!("costs must be nonnegative, got cost={cost} opt={opt}"),
        });
    }
    if opt == 0.0 {
        if cost == 0.0 {
            return Ok(1.0);
        }
        return Ok(f64::INFINITY);
    }
    Ok(cost / opt)
}
