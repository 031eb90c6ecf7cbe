//! Hierarchically separated trees.
//!
//! A tree with parameter `λ > 1` and depth `L` is rooted, every
//! root-to-leaf path has exactly `L` edges, and the edge between a vertex at
//! level `ℓ` and its parent at level `ℓ+1` weighs `λ^ℓ`. Leaves sit at level
//! 0 and carry the points of an embedded instance; internal vertices are
//! still legal facility sites because distances are defined on all of `V_T`.
//!
//! For an ancestor `u` of a leaf `v`, the path weight telescopes to
//! `Σ_{j<ℓ(u)} λ^j = (λ^{ℓ(u)}−1)/(λ−1)`, which is bounded between
//! `λ^{ℓ(u)−1}` and `λ^{ℓ(u)}/(λ−1)`. Those two bounds drive both the
//! marking thresholds and the cost analysis, so `tree_distance` is computed
//! from one shared prefix-sum table to keep every call bit-identical.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ClientVector, PointId};

/// Index of a vertex in a tree.
pub type VertexId = usize;

/// A validated hierarchically separated tree.
#[derive(Debug, Clone, PartialEq)]
pub struct HstTree {
    lambda: f64,
    depth: usize,
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    level: Vec<usize>,
    point: Vec<Option<PointId>>,
    leaf_of_point: Vec<VertexId>,
    root: VertexId,
    /// `pow[j] = λ^j` for `j ≤ depth`.
    pow: Vec<f64>,
    /// `up[k] = Σ_{j<k} λ^j`, the distance from any leaf to its level-`k`
    /// ancestor.
    up: Vec<f64>,
}

impl HstTree {
    /// Builds and validates a tree from per-vertex parent, level and point
    /// assignments. The root is the unique vertex without a parent.
    pub fn from_parts(
        lambda: f64,
        depth: usize,
        parent: Vec<Option<VertexId>>,
        level: Vec<usize>,
        point: Vec<Option<PointId>>,
    ) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be finite and > 1, got {lambda}"),
            });
        }
        if depth == 0 {
            return Err(Error::InvalidTree("depth must be at least 1".into()));
        }
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree has no vertices".into()));
        }
        if level.len() != n || point.len() != n {
            return Err(Error::InvalidTree(
                "parent, level and point arrays differ in length".into(),
            ));
        }

        let mut root = None;
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            match parent[v] {
                None => {
                    if root.replace(v).is_some() {
                        return Err(Error::InvalidTree("more than one root".into()));
                    }
                    if level[v] != depth {
                        return Err(Error::InvalidTree(format!(
                            "root {v} has level {} but depth is {depth}",
                            level[v]
                        )));
                    }
                }
                Some(p) => {
                    if p >= n {
                        return Err(Error::InvalidTree(format!(
                            "vertex {v} has out-of-range parent {p}"
                        )));
                    }
                    if level[p] != level[v] + 1 {
                        return Err(Error::InvalidTree(format!(
                            "vertex {v} at level {} has parent at level {}, expected {}",
                            level[v],
                            level[p],
                            level[v] + 1
                        )));
                    }
                    children[p].push(v);
                }
            }
        }
        let root = root.ok_or_else(|| Error::InvalidTree("no root vertex".into()))?;

        // Parent levels increase strictly toward the root, so reachability of
        // the root from every vertex follows once the vertex count matches:
        // each non-root vertex hangs under exactly one parent and the level
        // constraint rules out cycles.

        let mut seen_points = BTreeSet::new();
        let mut num_leaves = 0;
        for v in 0..n {
            let is_leaf = children[v].is_empty();
            if is_leaf && level[v] != 0 {
                return Err(Error::InvalidTree(format!(
                    "leaf {v} sits at level {}, every leaf must be at level 0",
                    level[v]
                )));
            }
            match point[v] {
                Some(p) if level[v] == 0 => {
                    if !seen_points.insert(p) {
                        return Err(Error::InvalidTree(format!(
                            "point {p} is mapped to more than one leaf"
                        )));
                    }
                    num_leaves += 1;
                }
                Some(_) => {
                    return Err(Error::InvalidTree(format!(
                        "internal vertex {v} carries a point"
                    )))
                }
                None if level[v] == 0 => {
                    return Err(Error::InvalidTree(format!("leaf {v} carries no point")))
                }
                None => {}
            }
        }
        // Bijection onto 0..num_leaves.
        if seen_points.iter().next_back() != Some(&(num_leaves - 1)).filter(|_| num_leaves > 0)
            && num_leaves > 0
        {
            return Err(Error::InvalidTree(format!(
                "leaf points must cover 0..{num_leaves} exactly"
            )));
        }
        if seen_points.len() != num_leaves {
            return Err(Error::InvalidTree("leaf point map is not a bijection".into()));
        }

        let mut leaf_of_point = vec![usize::MAX; num_leaves];
        for v in 0..n {
            if let Some(p) = point[v] {
                leaf_of_point[p] = v;
            }
        }

        let mut pow = Vec::with_capacity(depth + 1);
        let mut up = Vec::with_capacity(depth + 1);
        let mut acc = 0.0;
        let mut p = 1.0;
        for _ in 0..=depth {
            pow.push(p);
            up.push(acc);
            acc += p;
            p *= lambda;
        }

        Ok(HstTree {
            lambda,
            depth,
            parent,
            children,
            level,
            point,
            leaf_of_point,
            root,
            pow,
            up,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_vertices(&self) -> usize {
        self.parent.len()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_of_point.len()
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn level(&self, v: VertexId) -> usize {
        self.level[v]
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v].is_empty()
    }

    /// Point carried by a leaf; `None` for internal vertices.
    pub fn point_of(&self, v: VertexId) -> Option<PointId> {
        self.point[v]
    }

    pub fn leaf_of_point(&self, p: PointId) -> VertexId {
        self.leaf_of_point[p]
    }

    /// `λ^level`, the weight of the edge leaving `level` upward.
    pub fn pow(&self, level: usize) -> f64 {
        self.pow[level]
    }

    /// `Σ_{j<k} λ^j`, the distance from a leaf to its level-`k` ancestor.
    pub fn up(&self, k: usize) -> f64 {
        self.up[k]
    }

    /// Vertex ids ordered by ascending level (leaves first). Ties are in id
    /// order, so the result is deterministic.
    pub fn vertices_by_level(&self) -> Vec<VertexId> {
        let mut order: Vec<VertexId> = (0..self.num_vertices()).collect();
        order.sort_by_key(|&v| (self.level[v], v));
        order
    }

    /// True when `u` is a proper ancestor of `v`.
    pub fn is_proper_ancestor(&self, u: VertexId, v: VertexId) -> bool {
        if self.level[u] <= self.level[v] {
            return false;
        }
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            if p == u {
                return true;
            }
            if self.level[p] >= self.level[u] {
                return false;
            }
            cur = p;
        }
        false
    }

    /// Path weight between two vertices. Computed as
    /// `(up(a) − up(ℓ(u))) + (up(a) − up(ℓ(v)))` where `a` is the level of
    /// the lowest common ancestor, so the result is symmetric in its
    /// arguments to the last bit.
    pub fn tree_distance(&self, u: VertexId, v: VertexId) -> f64 {
        if u == v {
            return 0.0;
        }
        let (mut a, mut b) = (u, v);
        while self.level[a] < self.level[b] {
            a = self.parent[a].expect("level below an existing vertex has a parent");
        }
        while self.level[b] < self.level[a] {
            b = self.parent[b].expect("level below an existing vertex has a parent");
        }
        while a != b {
            a = self.parent[a].expect("distinct vertices at root level cannot exist");
            b = self.parent[b].expect("distinct vertices at root level cannot exist");
        }
        let lca = self.level[a];
        (self.up[lca] - self.up[self.level[u]]) + (self.up[lca] - self.up[self.level[v]])
    }

    /// Tree metric restricted to the embedded points.
    pub fn leaf_distance(&self, p: PointId, q: PointId) -> f64 {
        self.tree_distance(self.leaf_of_point[p], self.leaf_of_point[q])
    }

    /// Leaf with the smallest point id inside the subtree of `u`. Used to
    /// project internal facilities onto instance points; moving a facility
    /// from `u` to this leaf stretches any connection by at most a factor 2.
    pub fn canonical_leaf(&self, u: VertexId) -> VertexId {
        let mut best: Option<(PointId, VertexId)> = None;
        let mut stack = vec![u];
        while let Some(v) = stack.pop() {
            if let Some(p) = self.point[v] {
                if best.map_or(true, |(bp, _)| p < bp) {
                    best = Some((p, v));
                }
            }
            stack.extend_from_slice(&self.children[v]);
        }
        best.expect("every subtree contains a leaf").1
    }

    /// Returns a tree of depth `target_depth` obtained by inserting new
    /// roots above the current one; below the old root nothing changes, and
    /// existing vertex ids stay valid. A target at or below the current
    /// depth returns a clone.
    pub fn extend_root(&self, target_depth: usize) -> HstTree {
        if target_depth <= self.depth {
            return self.clone();
        }
        let mut parent = self.parent.clone();
        let mut level = self.level.clone();
        let mut point = self.point.clone();
        let mut old_root = self.root;
        for new_level in (self.depth + 1)..=target_depth {
            let id = parent.len();
            parent.push(None);
            level.push(new_level);
            point.push(None);
            parent[old_root] = Some(id);
            old_root = id;
        }
        HstTree::from_parts(self.lambda, target_depth, parent, level, point)
            .expect("extending the root preserves validity")
    }
}

// ---------------------------------------------------------------------------
// Subtree counts and antichains
// ---------------------------------------------------------------------------

/// Clients in each subtree: `counts[v] = Σ_{leaf w ∈ T_v} N_w`.
pub fn subtree_counts(t: &HstTree, clients: &ClientVector) -> Result<Vec<u64>> {
    if clients.len() != t.num_leaves() {
        return Err(Error::Dimension {
            what: "client vector",
            expected: t.num_leaves(),
            got: clients.len(),
        });
    }
    let mut counts = vec![0u64; t.num_vertices()];
    for v in t.vertices_by_level() {
        if let Some(p) = t.point_of(v) {
            counts[v] = clients[p];
        }
        if let Some(parent) = t.parent(v) {
            counts[parent] += counts[v];
        }
    }
    Ok(counts)
}

/// Vertices of `m` that have no proper descendant in `m`. The result is an
/// antichain, and applying `min_set` twice changes nothing.
pub fn min_set(t: &HstTree, m: &BTreeSet<VertexId>) -> BTreeSet<VertexId> {
    // has_below[v]: some vertex of m lies strictly inside T_v.
    let mut has_below = vec![false; t.num_vertices()];
    for v in t.vertices_by_level() {
        if let Some(p) = t.parent(v) {
            if m.contains(&v) || has_below[v] {
                has_below[p] = true;
            }
        }
    }
    m.iter().copied().filter(|&v| !has_below[v]).collect()
}

/// How `min_set` changes when one vertex joins the marked set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinSetDelta {
    /// `v` is at or above an existing member; the antichain is unchanged.
    Unchanged,
    /// `v` is incomparable to every member and joins the antichain.
    Added,
    /// `v` lies below exactly one member, which it replaces.
    Replaced(VertexId),
}

/// Classifies the effect of adding `v` to a marked set whose min-set is
/// `antichain`. Exactly one of the three cases applies, and the result is
/// consistent with recomputing `min_set` from scratch.
pub fn min_set_delta(t: &HstTree, antichain: &BTreeSet<VertexId>, v: VertexId) -> MinSetDelta {
    if antichain.contains(&v) {
        return MinSetDelta::Unchanged;
    }
    for &u in antichain {
        if t.is_proper_ancestor(v, u) {
            return MinSetDelta::Unchanged;
        }
        if t.is_proper_ancestor(u, v) {
            return MinSetDelta::Replaced(u);
        }
    }
    MinSetDelta::Added
}

/// First ancestor/descendant pair found inside `set`, if any.
pub fn antichain_violation(t: &HstTree, set: &BTreeSet<VertexId>) -> Option<(VertexId, VertexId)> {
    for &u in set {
        for &v in set {
            if u != v && t.is_proper_ancestor(u, v) {
                return Some((u, v));
            }
        }
    }
    None
}

/// Per-vertex lower bound `B_v = min(f, N_v·λ^{ℓ(v)})` on the cost any
/// solution pays inside `T_v`: either a facility is opened there (`f`) or
/// all `N_v` clients exit through an edge of weight at least `λ^{ℓ(v)}`.
pub fn b_value(t: &HstTree, counts: &[u64], v: VertexId, facility_cost: f64) -> f64 {
    facility_cost.min(counts[v] as f64 * t.pow(t.level(v)))
}

/// Sum of `B_v` over an antichain. Disjoint subtrees make the per-subtree
/// bounds additive, so the sum never exceeds the optimum cost.
pub fn antichain_lower_bound(
    t: &HstTree,
    antichain: &BTreeSet<VertexId>,
    counts: &[u64],
    facility_cost: f64,
) -> Result<f64> {
    if let Some((ancestor, child)) = antichain_violation(t, antichain) {
        return Err(Error::NotAntichain { ancestor, child });
    }
    Ok(antichain
        .iter()
        .map(|&v| b_value(t, counts, v, facility_cost))
        .sum())
}

// ---------------------------------------------------------------------------
// JSON interchange
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: usize,
    level: usize,
    parent: i64,
    point: i64,
}

/// On-disk form of a tree. The optional trailing fields carry embedding
/// metadata when the tree was produced by `frt_embed`; plain trees omit
/// them.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub lambda: f64,
    pub depth: usize,
    vertices: Vec<VertexDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Maps each original point to the tree point standing in for its
    /// zero-distance class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_of_point: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

impl TreeDoc {
    pub fn from_tree(t: &HstTree) -> TreeDoc {
        let vertices = (0..t.num_vertices())
            .map(|v| VertexDoc {
                id: v,
                level: t.level(v),
                parent: t.parent(v).map_or(-1, |p| p as i64),
                point: t.point_of(v).map_or(-1, |p| p as i64),
            })
            .collect();
        TreeDoc {
            lambda: t.lambda(),
            depth: t.depth(),
            vertices,
            beta: None,
            permutation: None,
            scale: None,
            class_of_point: None,
            manifest: None,
        }
    }

    pub fn into_tree(self) -> Result<HstTree> {
        let n = self.vertices.len();
        let mut parent = vec![None; n];
        let mut level = vec![0usize; n];
        let mut point = vec![None; n];
        for (pos, v) in self.vertices.iter().enumerate() {
            if v.id != pos {
                return Err(Error::InvalidTree(format!(
                    "vertex ids must be dense and ordered; found id {} at position {pos}",
                    v.id
                )));
            }
            level[pos] = v.level;
            parent[pos] = match v.parent {
                -1 => None,
                p if p >= 0 && (p as usize) < n => Some(p as usize),
                p => return Err(Error::InvalidTree(format!("bad parent id {p}"))),
            };
            point[pos] = match v.point {
                -1 => None,
                p if p >= 0 => Some(p as usize),
                p => return Err(Error::InvalidTree(format!("bad point id {p}"))),
            };
        }
        HstTree::from_parts(self.lambda, self.depth, parent, level, point)
    }
}

/// Serializes a tree without embedding metadata.
pub fn serialize_tree(t: &HstTree) -> Vec<u8> {
    serde_json::to_vec(&TreeDoc::from_tree(t)).expect("tree serialization cannot fail")
}

/// Parses and validates a tree document.
pub fn parse_tree(bytes: &[u8]) -> Result<HstTree> {
    let doc: TreeDoc = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        path: "$".into(),
        reason: e.to_string(),
    })?;
    doc.into_tree()
}
