//! Facility location on arbitrary metrics via tree embedding.
//!
//! The pipeline rescales the metric so its smallest nonzero distance is 1,
//! embeds it into a random tree, runs the tree solver there (with the
//! facility cost rescaled by the same factor), and projects every claimed
//! tree vertex down to the leaf holding the smallest original point id in
//! its subtree.
//!
//! Costs are reported twice for the same projected open set: once under the
//! tree metric and once under the original metric, each with clients
//! connected to their nearest open point in that metric. Because the
//! embedding never contracts distances, the original-metric cost never
//! exceeds the tree-metric cost; tests assert that with zero tolerance.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::Result;
use crate::frt::{frt_embed, Embedding};
use crate::instance::{eval_cost, CostBreakdown, PointId, UflInstance};
use crate::solver::{
    solve_tree_base, solve_tree_private, SolverParams, SupersetRule, TreeSolution,
};

/// A general-metric solution: the embedding, the raw tree solution in
/// rescaled units, and the projected open set with both cost views in
/// original units.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSolution {
    pub embedding: Embedding,
    /// Verbatim tree-side solution; its costs are in rescaled units with
    /// the rescaled facility cost.
    pub tree_solution: TreeSolution,
    /// Claimed facilities projected to original points.
    pub open_points: BTreeSet<PointId>,
    /// Cost of `open_points` under the embedded tree metric, original units.
    pub cost_in_tree: CostBreakdown,
    /// Cost of `open_points` under the original metric.
    pub cost_in_original: CostBreakdown,
}

fn project_and_price(
    inst: &UflInstance,
    embedding: Embedding,
    tree_solution: TreeSolution,
) -> Result<GeneralSolution> {
    let mut open_points: BTreeSet<PointId> = BTreeSet::new();
    for &v in &tree_solution.open {
        let leaf = tree_solution.tree.canonical_leaf(v);
        let class = tree_solution
            .tree
            .point_of(leaf)
            .expect("canonical leaf carries a point");
        open_points.insert(embedding.original_of_class(class));
    }
    let cost_in_tree = eval_cost(inst, &open_points, |p, q| embedding.embedded_distance(p, q))?;
    let cost_in_original = eval_cost(inst, &open_points, |p, q| inst.metric.get(p, q))?;
    Ok(GeneralSolution {
        embedding,
        tree_solution,
        open_points,
        cost_in_tree,
        cost_in_original,
    })
}

/// Runs the tree stage on an already drawn embedding and projects the
/// result. `noise_rng: None` runs the deterministic marking, `Some` the
/// private one. Callers that need independent embedding and noise seeds
/// (the CLI does) drive this directly.
pub fn solve_on_embedding(
    inst: &UflInstance,
    embedding: Embedding,
    epsilon: f64,
    rule: SupersetRule,
    noise_rng: Option<&mut dyn rand::RngCore>,
) -> Result<GeneralSolution> {
    let lambda = embedding.tree.lambda();
    let params = SolverParams::new(lambda, epsilon, inst.facility_cost / embedding.scale)?;
    let clients = embedding.class_clients(&inst.clients)?;
    let tree_solution = match noise_rng {
        None => solve_tree_base(&embedding.tree, &clients, &params, rule)?,
        Some(mut rng) => solve_tree_private(&embedding.tree, &clients, &params, rule, &mut rng)?,
    };
    project_and_price(inst, embedding, tree_solution)
}

/// Deterministic baseline on a random embedding: the RNG is consumed by the
/// embedding only.
pub fn solve_general_base(
    inst: &UflInstance,
    lambda: f64,
    epsilon: f64,
    rule: SupersetRule,
    rng: &mut impl Rng,
) -> Result<GeneralSolution> {
    let embedding = frt_embed(&inst.metric, lambda, rng)?;
    solve_on_embedding(inst, embedding, epsilon, rule, None)
}

/// The private mechanism end to end: embedding noise and marking noise both
/// come from `rng`, embedding first.
pub fn solve_general_private(
    inst: &UflInstance,
    lambda: f64,
    epsilon: f64,
    rule: SupersetRule,
    rng: &mut impl Rng,
) -> Result<GeneralSolution> {
    let embedding = frt_embed(&inst.metric, lambda, rng)?;
    solve_on_embedding(inst, embedding, epsilon, rule, Some(rng))
}
