//! Command-line front end for the dpufl solvers.
//!
//! Every subcommand is a thin, reproducible wrapper over one library entry
//! point: outputs are JSON (or CSV for batch runs), each embedding a
//! `RunManifest` that records the command, its arguments, and the seeds, so
//! replaying the manifest's argv reproduces the output byte for byte apart
//! from the timestamp field.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use dpufl::audit::{build_ledger, ledger_closed_form, marking_prob, mc_marking_prob};
use dpufl::exec::map_indexed;
use dpufl::frt::frt_embed;
use dpufl::general::{solve_on_embedding, GeneralSolution};
use dpufl::generators::{random_clients, random_euclidean_instance, random_hst};
use dpufl::hst::{parse_tree, TreeDoc};
use dpufl::instance::parse_instance;
use dpufl::lowerbound::{
    evaluate_policy, HarnessConfig, Policy, PolicyPricer, StarFamily,
};
use dpufl::oracle::{approx_ratio, opt_exhaustive, opt_tree_dp};
use dpufl::rng::trial_rng;
use dpufl::solver::{
    compute_l_prime, solve_tree_base, solve_tree_private, SolverParams, SupersetRule,
    TreeSolution,
};
use dpufl::{CostBreakdown, Error, Result, UflInstance};

#[derive(Parser, Debug)]
#[command(
    name = "dpufl",
    version,
    about = "Differentially private uncapacitated facility location"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Embed a metric instance into a random dominating tree.
    Embed(EmbedArgs),
    /// Solve a metric instance end to end: embed, solve on the tree, project.
    Solve(SolveArgs),
    /// Solve directly on a tree document.
    SolveTree(SolveTreeArgs),
    /// Exact optimum: exhaustive over points, or the vertex DP on a tree.
    Opt(OptArgs),
    /// Privacy ledger for a parameter triple, with optional Monte Carlo checks.
    Audit(AuditArgs),
    /// Star-family lower bound harness.
    Lowerbound(LowerboundArgs),
    /// Batch benchmark over generator grids, CSV output.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    /// Instance JSON path.
    #[arg(long)]
    pub input: PathBuf,
    /// Tree base; edge weights grow by this factor per level.
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    /// Embedding seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pretty-print JSON output.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Instance JSON path.
    #[arg(long)]
    pub input: PathBuf,
    /// Privacy budget.
    #[arg(long)]
    pub epsilon: f64,
    /// Tree base for the embedding and the solver.
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Embedding seed, independent of the noise seed.
    #[arg(long, default_value_t = 0)]
    pub tree_seed: u64,
    /// Run the non-private baseline marking instead of the noisy one.
    #[arg(long)]
    pub base: bool,
    /// Open every marked vertex instead of only the claimed minimal ones.
    #[arg(long)]
    pub return_all_marked: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pretty-print JSON output.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct SolveTreeArgs {
    /// Tree JSON path.
    #[arg(long)]
    pub tree: PathBuf,
    /// Comma-separated client counts, one per tree point.
    #[arg(long)]
    pub clients: String,
    /// Facility opening cost.
    #[arg(long)]
    pub f: f64,
    /// Privacy budget.
    #[arg(long)]
    pub epsilon: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run the non-private baseline marking instead of the noisy one.
    #[arg(long)]
    pub base: bool,
    /// Open every marked vertex instead of only the claimed minimal ones.
    #[arg(long)]
    pub return_all_marked: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pretty-print JSON output.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct OptArgs {
    /// Instance JSON path; the oracle enumerates subsets of its points.
    #[arg(long, conflicts_with = "tree", required_unless_present = "tree")]
    pub input: Option<PathBuf>,
    /// Tree JSON path; the exact DP ranges over all tree vertices.
    #[arg(long, requires = "clients")]
    pub tree: Option<PathBuf>,
    /// Comma-separated client counts, one per tree point (tree mode).
    #[arg(long, requires = "f", conflicts_with = "input")]
    pub clients: Option<String>,
    /// Facility opening cost (tree mode).
    #[arg(long, conflicts_with = "input")]
    pub f: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pretty-print JSON output.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Tree base.
    #[arg(long)]
    pub lambda: f64,
    /// Facility opening cost.
    #[arg(long)]
    pub f: f64,
    /// Privacy budget.
    #[arg(long)]
    pub epsilon: f64,
    /// When set, cross-check each noised level's marking probability by
    /// sampling this many Laplace draws.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Seed for the Monte Carlo cross-check.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pretty-print JSON output.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct LowerboundArgs {
    /// Privacy budget; the demand scale is m = ceil(1/epsilon).
    #[arg(long)]
    pub epsilon: f64,
    /// Facility opening cost.
    #[arg(long, default_value_t = 1.0)]
    pub f: f64,
    /// Number of star leaves; defaults to 100 * sqrt(m).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of independent demand draws.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// One of open-all, open-none, threshold:K, dp-solver.
    #[arg(long, default_value = "dp-solver")]
    pub policy: String,
    /// Master seed; trial t draws from stream (seed, t).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tree base for the dp-solver policy's star realization.
    #[arg(long, default_value_t = 1.5)]
    pub lambda: f64,
    /// Also write one CSV row per trial to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Output path for the JSON summary; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pretty-print JSON output.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Grid configuration JSON path.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Provenance block embedded in every output document.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_seed: Option<u64>,
    pub version: String,
    pub timestamp: u64,
}

impl RunManifest {
    fn new(command: &str, argv: &[String], timestamp: u64) -> Self {
        RunManifest {
            command: command.into(),
            argv: argv.to_vec(),
            seed: None,
            tree_seed: None,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn parse_clients(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<u64>().map_err(|e| Error::InvalidParameter {
                name: "clients",
                reason: format!("bad count {tok:?}: {e}"),
            })
        })
        .collect()
}

fn warn_boundary_lambda(lambda: f64) {
    if lambda == 2.0 {
        eprintln!(
            "warning: lambda = 2 is the boundary of the supported range; \
             the approximation ratio analysis assumes lambda < 2"
        );
    }
}

fn render_json(v: &Value, pretty: bool) -> Vec<u8> {
    let mut bytes = if pretty {
        serde_json::to_vec_pretty(v).expect("value serialization cannot fail")
    } else {
        serde_json::to_vec(v).expect("value serialization cannot fail")
    };
    bytes.push(b'\n');
    bytes
}

fn cost_json(c: &CostBreakdown) -> Value {
    json!({ "facility": c.facility, "connection": c.connection, "total": c.total })
}

fn superset_rule(return_all_marked: bool) -> SupersetRule {
    if return_all_marked {
        SupersetRule::AllMarked
    } else {
        SupersetRule::MinSet
    }
}

fn tree_solution_json(sol: &TreeSolution, params: &SolverParams) -> Value {
    let mut v = json!({
        "lambda": params.lambda,
        "epsilon": params.epsilon,
        "facility_cost": params.facility_cost,
        "l_prime": sol.l_prime,
        "candidates": sol.candidates.iter().copied().collect::<Vec<_>>(),
        "open": sol.open.iter().copied().collect::<Vec<_>>(),
        "assignment": sol.assignment,
        "cost": cost_json(&sol.cost),
    });
    if let Some(nc) = &sol.noisy_counts {
        v["noisy_counts"] = json!(nc);
    }
    v
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_embed(a: &EmbedArgs, mut manifest: RunManifest) -> Result<Vec<u8>> {
    manifest.seed = Some(a.seed);
    let inst = parse_instance(&read_file(&a.input)?)?;
    let mut rng = trial_rng(a.seed, 0);
    let emb = frt_embed(&inst.metric, a.lambda, &mut rng)?;
    let mut doc = TreeDoc::from_tree(&emb.tree);
    doc.beta = Some(emb.beta);
    doc.permutation = Some(emb.permutation.clone());
    doc.scale = Some(emb.scale);
    doc.class_of_point = Some(emb.class_of_point.clone());
    doc.manifest = Some(serde_json::to_value(&manifest).expect("manifest serializes"));
    let v = serde_json::to_value(&doc).expect("tree doc serializes");
    Ok(render_json(&v, a.pretty))
}

fn general_solution_json(sol: &GeneralSolution, inst: &UflInstance, epsilon: f64) -> Value {
    let params = SolverParams::new(
        sol.embedding.tree.lambda(),
        epsilon,
        inst.facility_cost / sol.embedding.scale,
    )
    .expect("parameters were already validated by the solver");
    json!({
        "epsilon": epsilon,
        "lambda": sol.embedding.tree.lambda(),
        "facility_cost": inst.facility_cost,
        "scale": sol.embedding.scale,
        "beta": sol.embedding.beta,
        "open_points": sol.open_points.iter().copied().collect::<Vec<_>>(),
        "cost_tree_metric": cost_json(&sol.cost_in_tree),
        "cost_original_metric": cost_json(&sol.cost_in_original),
        "tree_solution": tree_solution_json(&sol.tree_solution, &params),
    })
}

fn cmd_solve(a: &SolveArgs, mut manifest: RunManifest) -> Result<Vec<u8>> {
    manifest.seed = Some(a.seed);
    manifest.tree_seed = Some(a.tree_seed);
    warn_boundary_lambda(a.lambda);
    let inst = parse_instance(&read_file(&a.input)?)?;
    let rule = superset_rule(a.return_all_marked);
    let mut tree_rng = trial_rng(a.tree_seed, 0);
    let embedding = frt_embed(&inst.metric, a.lambda, &mut tree_rng)?;
    let sol = if a.base {
        solve_on_embedding(&inst, embedding, a.epsilon, rule, None)?
    } else {
        let mut noise_rng = trial_rng(a.seed, 1);
        solve_on_embedding(&inst, embedding, a.epsilon, rule, Some(&mut noise_rng))?
    };
    let mut v = general_solution_json(&sol, &inst, a.epsilon);
    v["manifest"] = serde_json::to_value(&manifest).expect("manifest serializes");
    v["base"] = json!(a.base);
    Ok(render_json(&v, a.pretty))
}

fn cmd_solve_tree(a: &SolveTreeArgs, mut manifest: RunManifest) -> Result<Vec<u8>> {
    manifest.seed = Some(a.seed);
    let tree = parse_tree(&read_file(&a.tree)?)?;
    warn_boundary_lambda(tree.lambda());
    let clients = parse_clients(&a.clients)?;
    let params = SolverParams::new(tree.lambda(), a.epsilon, a.f)?;
    let rule = superset_rule(a.return_all_marked);
    let sol = if a.base {
        solve_tree_base(&tree, &clients, &params, rule)?
    } else {
        let mut rng = trial_rng(a.seed, 1);
        solve_tree_private(&tree, &clients, &params, rule, &mut rng)?
    };
    let mut v = tree_solution_json(&sol, &params);
    v["manifest"] = serde_json::to_value(&manifest).expect("manifest serializes");
    v["base"] = json!(a.base);
    Ok(render_json(&v, a.pretty))
}

fn cmd_opt(a: &OptArgs, manifest: RunManifest) -> Result<Vec<u8>> {
    let (open, cost, ground_set): (Vec<usize>, f64, &str) = match (&a.input, &a.tree) {
        (Some(input), None) => {
            let inst = parse_instance(&read_file(input)?)?;
            let r = opt_exhaustive(&inst)?;
            (r.open.iter().copied().collect(), r.cost, "points")
        }
        (None, Some(tree_path)) => {
            let tree = parse_tree(&read_file(tree_path)?)?;
            let clients = parse_clients(a.clients.as_deref().unwrap_or_default())?;
            let f = a.f.ok_or(Error::InvalidParameter {
                name: "f",
                reason: "tree mode needs a facility cost".into(),
            })?;
            let r = opt_tree_dp(&tree, &clients, f)?;
            (r.open.iter().copied().collect(), r.cost, "tree-vertices")
        }
        _ => unreachable!("clap enforces exactly one of input and tree"),
    };
    let v = json!({
        "manifest": serde_json::to_value(&manifest).expect("manifest serializes"),
        "ground_set": ground_set,
        "open": open,
        "cost": cost,
    });
    Ok(render_json(&v, a.pretty))
}

fn cmd_audit(a: &AuditArgs, mut manifest: RunManifest) -> Result<Vec<u8>> {
    warn_boundary_lambda(a.lambda);
    let params = SolverParams::new(a.lambda, a.epsilon, a.f)?;
    let l_prime = compute_l_prime(a.epsilon * a.f, a.lambda);
    let ledger = build_ledger(&params, l_prime);
    let entries: Vec<Value> = ledger
        .entries
        .iter()
        .map(|e| json!({ "level": e.level, "scale": e.scale, "epsilon": e.epsilon }))
        .collect();
    let mut v = json!({
        "manifest": serde_json::to_value(&manifest).expect("manifest serializes"),
        "lambda": a.lambda,
        "epsilon": a.epsilon,
        "facility_cost": a.f,
        "eta": params.eta(),
        "l_prime": l_prime,
        "entries": entries,
        "total": ledger.total,
        "closed_form": ledger_closed_form(&params, l_prime),
        "budget_slack": a.epsilon - ledger.total,
    });
    if let Some(samples) = a.mc_samples {
        manifest.seed = Some(a.seed);
        v["manifest"] = serde_json::to_value(&manifest).expect("manifest serializes");
        let mut checks = Vec::new();
        for level in 0..l_prime {
            // Probe at the marking threshold, where the probability is
            // farthest from the saturated tails.
            let n = (a.f / a.lambda.powi(level as i32)).ceil();
            let analytic = marking_prob(&params, l_prime, level, n)?;
            let mut rng = trial_rng(a.seed, level as u64);
            let mc = mc_marking_prob(&params, l_prime, level, n, samples, &mut rng)?;
            checks.push(json!({
                "level": level,
                "n": n,
                "analytic": analytic,
                "monte_carlo": mc,
                "abs_err": (analytic - mc).abs(),
            }));
        }
        v["mc_checks"] = Value::Array(checks);
    }
    Ok(render_json(&v, a.pretty))
}

fn cmd_lowerbound(a: &LowerboundArgs, mut manifest: RunManifest) -> Result<Vec<u8>> {
    manifest.seed = Some(a.seed);
    let policy: Policy = a.policy.parse()?;
    let m_probe = StarFamily::new(a.epsilon, a.f, 1)?.m();
    let n = a
        .n
        .unwrap_or_else(|| (100.0 * (m_probe as f64).sqrt()).ceil() as usize);
    let family = StarFamily::new(a.epsilon, a.f, n)?;
    let cfg = HarnessConfig {
        trials: a.trials,
        master_seed: a.seed,
        lambda: a.lambda,
    };
    let outcome = evaluate_policy(&family, policy, &cfg)?;

    if let Some(csv_path) = &a.csv {
        let pricer = PolicyPricer::new(&family, policy, &cfg)?;
        let mut csv = String::new();
        csv.push_str(&format!(
            "# manifest: {}\n",
            serde_json::to_string(&manifest).expect("manifest serializes")
        ));
        csv.push_str("trial,cost,opt,ratio\n");
        for t in 0..a.trials {
            let (cost, opt) = pricer.trial(t)?;
            csv.push_str(&format!("{t},{cost},{opt},{}\n", cost / opt));
        }
        fs::write(csv_path, csv).map_err(|e| Error::Parse {
            path: csv_path.display().to_string(),
            reason: e.to_string(),
        })?;
    }

    let v = json!({
        "manifest": serde_json::to_value(&manifest).expect("manifest serializes"),
        "policy": outcome.policy.to_string(),
        "epsilon": a.epsilon,
        "facility_cost": a.f,
        "m": outcome.m,
        "n_leaves": n,
        "trials": outcome.trials,
        "mean_cost": outcome.mean_cost,
        "mean_opt": outcome.mean_opt,
        "ratio": outcome.ratio,
        "per_leaf_expected": outcome.per_leaf_expected,
        "expected_opt_per_leaf": outcome.expected_opt_per_leaf,
    });
    Ok(render_json(&v, a.pretty))
}

// ---------------------------------------------------------------------------
// Bench
// ---------------------------------------------------------------------------

fn default_dim() -> usize {
    2
}

fn default_max_clients() -> u64 {
    5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchConfig {
    grids: Vec<GridSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase", deny_unknown_fields)]
enum GridSpec {
    Hst {
        n_leaves: usize,
        depth: usize,
        lambda: f64,
        facility_cost: f64,
        #[serde(default = "default_max_clients")]
        max_clients: u64,
        epsilons: Vec<f64>,
        seeds: Vec<u64>,
    },
    Euclidean {
        n: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        lambda: f64,
        facility_cost: f64,
        #[serde(default = "default_max_clients")]
        max_clients: u64,
        epsilons: Vec<f64>,
        seeds: Vec<u64>,
    },
    Star {
        epsilon: f64,
        facility_cost: f64,
        n_leaves: usize,
        lambda: f64,
        seeds: Vec<u64>,
    },
}

#[derive(Debug, Clone)]
struct RowSpec {
    grid: GridSpec,
    epsilon: f64,
    seed: u64,
}

struct RowOut {
    generator: &'static str,
    n: usize,
    epsilon: f64,
    lambda: f64,
    facility_cost: f64,
    seed: u64,
    opt: f64,
    base_cost: f64,
    base_ratio: f64,
    dp_cost: f64,
    dp_ratio: f64,
    runtime_ms: f64,
}

fn expand_rows(cfg: &BenchConfig) -> Vec<RowSpec> {
    let mut rows = Vec::new();
    for grid in &cfg.grids {
        match grid {
            GridSpec::Hst { epsilons, seeds, .. }
            | GridSpec::Euclidean { epsilons, seeds, .. } => {
                for &epsilon in epsilons {
                    for &seed in seeds {
                        rows.push(RowSpec {
                            grid: grid.clone(),
                            epsilon,
                            seed,
                        });
                    }
                }
            }
            GridSpec::Star { epsilon, seeds, .. } => {
                for &seed in seeds {
                    rows.push(RowSpec {
                        grid: grid.clone(),
                        epsilon: *epsilon,
                        seed,
                    });
                }
            }
        }
    }
    rows
}

fn run_row(row: &RowSpec) -> Result<RowOut> {
    let started = Instant::now();
    let out = match &row.grid {
        GridSpec::Hst {
            n_leaves,
            depth,
            lambda,
            facility_cost,
            max_clients,
            ..
        } => {
            let mut gen_rng = trial_rng(row.seed, 0);
            let tree = random_hst(*n_leaves, *depth, *lambda, &mut gen_rng);
            let clients = random_clients(tree.num_leaves(), *max_clients, &mut gen_rng);
            let params = SolverParams::new(*lambda, row.epsilon, *facility_cost)?;
            let base = solve_tree_base(&tree, &clients, &params, SupersetRule::MinSet)?;
            let mut noise_rng = trial_rng(row.seed, 1);
            let dp = solve_tree_private(&tree, &clients, &params, SupersetRule::MinSet, &mut noise_rng)?;
            let opt = opt_tree_dp(&tree, &clients, *facility_cost)?.cost;
            RowOut {
                generator: "hst",
                n: *n_leaves,
                epsilon: row.epsilon,
                lambda: *lambda,
                facility_cost: *facility_cost,
                seed: row.seed,
                opt,
                base_cost: base.cost.total,
                base_ratio: approx_ratio(base.cost.total, opt)?,
                dp_cost: dp.cost.total,
                dp_ratio: approx_ratio(dp.cost.total, opt)?,
                runtime_ms: 0.0,
            }
        }
        GridSpec::Euclidean {
            n,
            dim,
            lambda,
            facility_cost,
            max_clients,
            ..
        } => {
            let inst = random_euclidean_instance(
                *n,
                *dim,
                *facility_cost,
                *max_clients,
                &mut trial_rng(row.seed, 0),
            );
            let opt = opt_exhaustive(&inst)?.cost;
            let emb_base = frt_embed(&inst.metric, *lambda, &mut trial_rng(row.seed, 1))?;
            let base =
                solve_on_embedding(&inst, emb_base, row.epsilon, SupersetRule::MinSet, None)?;
            let emb_dp = frt_embed(&inst.metric, *lambda, &mut trial_rng(row.seed, 1))?;
            let mut noise_rng = trial_rng(row.seed, 2);
            let dp = solve_on_embedding(
                &inst,
                emb_dp,
                row.epsilon,
                SupersetRule::MinSet,
                Some(&mut noise_rng),
            )?;
            RowOut {
                generator: "euclidean",
                n: *n,
                epsilon: row.epsilon,
                lambda: *lambda,
                facility_cost: *facility_cost,
                seed: row.seed,
                opt,
                base_cost: base.cost_in_original.total,
                base_ratio: approx_ratio(base.cost_in_original.total, opt)?,
                dp_cost: dp.cost_in_original.total,
                dp_ratio: approx_ratio(dp.cost_in_original.total, opt)?,
                runtime_ms: 0.0,
            }
        }
        GridSpec::Star {
            epsilon,
            facility_cost,
            n_leaves,
            lambda,
            ..
        } => {
            let family = StarFamily::new(*epsilon, *facility_cost, *n_leaves)?;
            let (tree, scale) = dpufl::lowerbound::realize_star_hst(&family, *lambda)?;
            let clients = family.sample_leaf_clients(&mut trial_rng(row.seed, 0));
            let params = SolverParams::new(*lambda, *epsilon, facility_cost * scale)?;
            let base = solve_tree_base(&tree, &clients, &params, SupersetRule::MinSet)?;
            let mut noise_rng = trial_rng(row.seed, 1);
            let dp = solve_tree_private(&tree, &clients, &params, SupersetRule::MinSet, &mut noise_rng)?;
            let opt = opt_tree_dp(&tree, &clients, facility_cost * scale)?.cost;
            RowOut {
                generator: "star",
                n: *n_leaves,
                epsilon: *epsilon,
                lambda: *lambda,
                facility_cost: *facility_cost,
                seed: row.seed,
                opt: opt / scale,
                base_cost: base.cost.total / scale,
                base_ratio: approx_ratio(base.cost.total, opt)?,
                dp_cost: dp.cost.total / scale,
                dp_ratio: approx_ratio(dp.cost.total, opt)?,
                runtime_ms: 0.0,
            }
        }
    };
    Ok(RowOut {
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        ..out
    })
}

fn cmd_bench(a: &BenchArgs, manifest: RunManifest) -> Result<Vec<u8>> {
    let bytes = read_file(&a.config)?;
    let cfg: BenchConfig = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: a.config.display().to_string(),
        reason: e.to_string(),
    })?;
    let rows = expand_rows(&cfg);
    let results = map_indexed(rows.len(), |i| run_row(&rows[i]));

    let mut csv = String::new();
    csv.push_str(&format!(
        "# manifest: {}\n",
        serde_json::to_string(&manifest).expect("manifest serializes")
    ));
    csv.push_str("generator,n,epsilon,lambda,f,seed,opt,base_cost,base_ratio,dp_cost,dp_ratio,runtime_ms\n");
    for r in results {
        let r = r?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.3}\n",
            r.generator,
            r.n,
            r.epsilon,
            r.lambda,
            r.facility_cost,
            r.seed,
            r.opt,
            r.base_cost,
            r.base_ratio,
            r.dp_cost,
            r.dp_ratio,
            r.runtime_ms,
        ));
    }
    Ok(csv.into_bytes())
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Executes a parsed command, returning the primary output bytes.
/// `argv_tail` is everything after the binary name, recorded verbatim in the
/// manifest; `timestamp` is injected so tests can pin it.
pub fn execute(cli: &Cli, argv_tail: &[String], timestamp: u64) -> Result<Vec<u8>> {
    match &cli.command {
        Command::Embed(a) => cmd_embed(a, RunManifest::new("embed", argv_tail, timestamp)),
        Command::Solve(a) => cmd_solve(a, RunManifest::new("solve", argv_tail, timestamp)),
        Command::SolveTree(a) => {
            cmd_solve_tree(a, RunManifest::new("solve-tree", argv_tail, timestamp))
        }
        Command::Opt(a) => cmd_opt(a, RunManifest::new("opt", argv_tail, timestamp)),
        Command::Audit(a) => cmd_audit(a, RunManifest::new("audit", argv_tail, timestamp)),
        Command::Lowerbound(a) => {
            cmd_lowerbound(a, RunManifest::new("lowerbound", argv_tail, timestamp))
        }
        Command::Bench(a) => cmd_bench(a, RunManifest::new("bench", argv_tail, timestamp)),
    }
}

fn output_target(cli: &Cli) -> Option<PathBuf> {
    match &cli.command {
        Command::Embed(a) => a.out.clone(),
        Command::Solve(a) => a.out.clone(),
        Command::SolveTree(a) => a.out.clone(),
        Command::Opt(a) => a.out.clone(),
        Command::Audit(a) => a.out.clone(),
        Command::Lowerbound(a) => a.out.clone(),
        Command::Bench(a) => a.out.clone(),
    }
}

/// Full run: parse argv, execute, write the output. Returns the process
/// exit code: 0 on success, 1 on validation or I/O errors, 2 on usage
/// errors (from the argument parser).
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let argv_tail: Vec<String> = argv.iter().skip(1).cloned().collect();
    match execute(&cli, &argv_tail, unix_now()) {
        Ok(bytes) => match output_target(&cli) {
            Some(path) => {
                if let Err(e) = fs::write(&path, &bytes) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return 1;
                }
                0
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                if stdout.write_all(&bytes).and_then(|_| stdout.flush()).is_err() {
                    return 1;
                }
                0
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
