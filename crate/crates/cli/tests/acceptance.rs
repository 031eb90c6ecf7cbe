//! Acceptance gate. Twelve numbered checks, each with its tolerance stated
//! inline; every test prints one summary line with the measured quantities.
//!
//! Checks 1 through 10 and 12 exercise the library directly; check 11 drives
//! the installed binary and replays each subcommand from the manifest
//! embedded in its own output.

use std::collections::BTreeSet;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use serde_json::{json, Value};

use dpufl::audit::{build_ledger, ledger_closed_form, neighbor_ratio};
use dpufl::exec::{map_indexed, mean, pairwise_sum};
use dpufl::frt::{expansion_stats, frt_embed};
use dpufl::general::solve_general_private;
use dpufl::generators::{random_clients, random_euclidean_instance, random_hst};
use dpufl::hst::{antichain_lower_bound, antichain_violation, min_set, subtree_counts};
use dpufl::instance::Metric;
use dpufl::lowerbound::{evaluate_policy, two_point_cost_table, HarnessConfig, Policy, StarFamily};
use dpufl::oracle::{approx_ratio, opt_exhaustive, opt_exhaustive_tree, opt_tree_dp, tree_set_cost};
use dpufl::rng::{seeded_rng, trial_rng};
use dpufl::solver::{
    compute_l_prime, mark_base, solve_tree_base, solve_tree_private, SolverParams, SupersetRule,
};
use dpufl::{ClientVector, HstTree, UflInstance};

// ---------------------------------------------------------------------------
// Shared corpus for checks 1, 2, 3, and 5
// ---------------------------------------------------------------------------

struct CorpusEntry {
    tree: HstTree,
    clients: ClientVector,
    epsilon: f64,
    facility_cost: f64,
    /// Exhaustive optimum over leaf subsets under the tree metric.
    opt: f64,
}

const CORPUS_SEED: u64 = 0xC0FFEE;
const CORPUS_SIZE: usize = 500;

fn corpus() -> &'static Vec<CorpusEntry> {
    static CORPUS: OnceLock<Vec<CorpusEntry>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let entries = map_indexed(CORPUS_SIZE, |i| {
            let mut rng = trial_rng(CORPUS_SEED, i as u64);
            let n_leaves = 2 + i % 11; // 2 ..= 12 leaf points
            let depth = 1 + i % 5; // 1 ..= 5 levels
            let tree = random_hst(n_leaves, depth, 1.5, &mut rng);
            let clients = random_clients(tree.num_leaves(), 6, &mut rng);
            let epsilon = [0.5, 1.0, 2.0][i % 3];
            let facility_cost = [0.5, 1.0, 2.25, 3.0, 4.5][i % 5];
            let k = tree.num_leaves();
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|p| (0..k).map(|q| tree.leaf_distance(p, q)).collect())
                .collect();
            let inst = UflInstance::new(
                Metric::from_matrix(rows).expect("leaf metric is valid"),
                facility_cost,
                clients.clone(),
            )
            .expect("corpus instance is valid");
            let opt = opt_exhaustive(&inst).expect("corpus is small enough").cost;
            CorpusEntry {
                tree,
                clients,
                epsilon,
                facility_cost,
                opt,
            }
        });
        entries
    })
}

fn corpus_params(e: &CorpusEntry) -> SolverParams {
    SolverParams::new(1.5, e.epsilon, e.facility_cost).expect("corpus parameters are valid")
}

// ---------------------------------------------------------------------------
// Checks 1 to 10 and 12
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_facility_count_bound() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for (i, e) in corpus().iter().enumerate() {
        let sol = solve_tree_base(&e.tree, &e.clients, &corpus_params(e), SupersetRule::MinSet)
            .expect("base solve succeeds");
        let lhs = sol.open.len() as f64 * e.facility_cost;
        let rhs = (1.0 + 1.0 / e.epsilon) * e.opt;
        assert!(
            lhs <= rhs * (1.0 + 1e-12),
            "instance {i}: |S|*f = {lhs} exceeds (1 + 1/eps)*opt = {rhs}"
        );
        if e.opt > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 1 must finish under 60 s, took {secs:.2} s");
    println!(
        "[criterion 01] PASS facility bound |S|*f <= (1 + 1/eps)*opt on {} instances, \
         worst fraction {:.4}, {:.2} s",
        CORPUS_SIZE, worst, secs
    );
}

#[test]
fn criterion_02_connection_bound() {
    // 2*lambda/(lambda - 1) = 6 at lambda = 1.5.
    let factor = 2.0 * 1.5 / 0.5;
    let mut worst = 0.0f64;
    for (i, e) in corpus().iter().enumerate() {
        let sol = solve_tree_base(&e.tree, &e.clients, &corpus_params(e), SupersetRule::MinSet)
            .expect("base solve succeeds");
        let rhs = factor * e.opt;
        assert!(
            sol.cost.connection <= rhs * (1.0 + 1e-12),
            "instance {i}: connection {} exceeds 6*opt = {}",
            sol.cost.connection,
            rhs
        );
        if e.opt > 0.0 {
            worst = worst.max(sol.cost.connection / rhs);
        }
    }
    println!(
        "[criterion 02] PASS connection(S) <= 6*opt on {} instances, worst fraction {:.4}",
        CORPUS_SIZE, worst
    );
}

#[test]
fn criterion_03_structural_checks() {
    let mut antichains_checked = 0usize;
    for (i, e) in corpus().iter().enumerate() {
        let params = corpus_params(e);
        let sol = solve_tree_base(&e.tree, &e.clients, &params, SupersetRule::MinSet)
            .expect("base solve succeeds");
        let t = &sol.tree;
        let counts = subtree_counts(t, &e.clients).expect("counts");

        // The candidate set is the min-set of the marking, hence an antichain.
        assert!(
            antichain_violation(t, &sol.candidates).is_none(),
            "instance {i}: candidate set is not an antichain"
        );

        // Claimed facilities lie in the min-set of the populated marked set.
        let marked = mark_base(t, &counts, &params, sol.l_prime).marked;
        let populated_marked: BTreeSet<usize> = marked
            .iter()
            .copied()
            .filter(|&v| counts[v] >= 1)
            .collect();
        let allowed = min_set(t, &populated_marked);
        assert!(
            sol.open.is_subset(&allowed),
            "instance {i}: claimed set {:?} escapes min-set of populated marks {:?}",
            sol.open,
            allowed
        );

        // B-value sums over antichains never exceed the leaf optimum.
        let mut rng = trial_rng(CORPUS_SEED ^ 0xA57, i as u64);
        let mut antichains: Vec<BTreeSet<usize>> = vec![sol.candidates.clone(), allowed];
        for _ in 0..2 {
            let marked: BTreeSet<usize> = (0..t.num_vertices())
                .filter(|_| rand::Rng::gen_bool(&mut rng, 0.4))
                .collect();
            antichains.push(min_set(t, &marked));
        }
        for a in &antichains {
            let bound = antichain_lower_bound(t, a, &counts, e.facility_cost).expect("antichain");
            assert!(
                bound <= e.opt * (1.0 + 1e-12) + 1e-12,
                "instance {i}: B-sum {bound} exceeds opt {}",
                e.opt
            );
            antichains_checked += 1;
        }
    }
    println!(
        "[criterion 03] PASS antichain and min-set structure on {} instances, \
         {} B-sum comparisons",
        CORPUS_SIZE, antichains_checked
    );
}

#[test]
fn criterion_04_privacy_accounting() {
    let lambdas = [1.2, 1.5, 1.96];
    let eps_f = [0.5, 1.0, 10.0, 1000.0];
    let epsilons = [0.1, 1.0];
    let mut cells: Vec<(f64, f64, f64)> = Vec::new();
    for &lambda in &lambdas {
        for &ef in &eps_f {
            for &epsilon in &epsilons {
                cells.push((lambda, ef, epsilon));
            }
        }
    }
    let worst: Vec<(f64, f64)> = map_indexed(cells.len(), |k| {
        let (lambda, ef, epsilon) = cells[k];
        let f = ef / epsilon;
        let params = SolverParams::new(lambda, epsilon, f).expect("grid parameters are valid");
        let l_prime = compute_l_prime(ef, lambda);
        let ledger = build_ledger(&params, l_prime);

        // Budget: total stays at or below epsilon, 1e-12 relative slack.
        assert!(
            ledger.total <= epsilon * (1.0 + 1e-12),
            "lambda={lambda} eps*f={ef} eps={epsilon}: ledger total {} over budget",
            ledger.total
        );
        let closed = ledger_closed_form(&params, l_prime);
        assert!(
            (ledger.total - closed).abs() <= 1e-12 * closed.max(1e-300),
            "ledger sum {} and closed form {closed} disagree beyond 1e-12 relative",
            ledger.total
        );

        // Per-level neighbor ratios stay within e^{eps_l}, 1e-9 relative.
        let n_max = 10 * (f.ceil() as u64);
        let mut worst_excess = 0.0f64;
        for entry in &ledger.entries {
            let ratio = neighbor_ratio(&params, l_prime, entry.level, n_max)
                .expect("neighbor ratio is defined on noised levels");
            let cap = entry.epsilon.exp();
            assert!(
                ratio <= cap * (1.0 + 1e-9),
                "lambda={lambda} eps*f={ef} eps={epsilon} level={}: ratio {ratio} \
                 exceeds e^eps_l = {cap} beyond 1e-9 relative",
                entry.level
            );
            worst_excess = worst_excess.max(ratio / cap - 1.0);
        }
        (epsilon - ledger.total, worst_excess)
    });
    let min_slack = worst.iter().map(|w| w.0).fold(f64::INFINITY, f64::min);
    let max_excess = worst.iter().map(|w| w.1).fold(0.0f64, f64::max);
    println!(
        "[criterion 04] PASS ledger within budget on {} grid cells, smallest slack {:.3e}, \
         worst neighbor-ratio excess {:.3e} (tolerance 1e-9)",
        cells.len(),
        min_slack,
        max_excess
    );
}

#[test]
fn criterion_05_private_tree_ratio() {
    let started = Instant::now();
    const NOISE_SEEDS: usize = 1000;
    let entries = corpus();
    let means: Vec<f64> = map_indexed(entries.len(), |i| {
        let e = &entries[i];
        let params = corpus_params(e);
        let mut ratios = Vec::with_capacity(NOISE_SEEDS);
        for s in 0..NOISE_SEEDS {
            let mut rng = trial_rng(CORPUS_SEED ^ 0x5EED, (i * NOISE_SEEDS + s) as u64);
            let sol = solve_tree_private(&e.tree, &e.clients, &params, SupersetRule::MinSet, &mut rng)
                .expect("private solve succeeds");
            ratios.push(approx_ratio(sol.cost.total, e.opt).expect("ratio is defined"));
        }
        mean(&ratios)
    });
    let mut worst_scaled = 0.0f64;
    for (i, (&m, e)) in means.iter().zip(entries.iter()).enumerate() {
        let bound = 50.0 / e.epsilon;
        assert!(
            m <= bound,
            "instance {i}: mean cost ratio {m:.3} over {NOISE_SEEDS} seeds exceeds 50/eps = {bound}"
        );
        worst_scaled = worst_scaled.max(m * e.epsilon);
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 600.0, "criterion 5 must finish under 10 min, took {secs:.1} s");
    println!(
        "[criterion 05] PASS mean private ratio <= 50/eps on {} instances x {} seeds; \
         empirical constant sup(mean ratio * eps) = {:.3}, {:.1} s",
        entries.len(),
        NOISE_SEEDS,
        worst_scaled,
        secs
    );
}

#[test]
fn criterion_06_embedding_expansion() {
    const INSTANCES: usize = 100;
    const SEEDS: usize = 200;
    const N: usize = 32;
    let cap = 16.0 * (N as f64).log2(); // 80
    let per_instance: Vec<f64> = map_indexed(INSTANCES, |i| {
        let inst = random_euclidean_instance(N, 2, 1.0, 3, &mut trial_rng(0xE4B, i as u64));
        let mut seed_means = Vec::with_capacity(SEEDS);
        for s in 0..SEEDS {
            let mut rng = trial_rng(0xE4B ^ 0xFF, (i * SEEDS + s) as u64);
            let emb = frt_embed(&inst.metric, 2.0, &mut rng).expect("embedding succeeds");
            let stats = expansion_stats(&inst.metric, &emb);
            assert!(
                stats.min_ratio >= 1.0,
                "instance {i} seed {s}: contraction, min ratio {}",
                stats.min_ratio
            );
            seed_means.push(stats.mean_ratio);
        }
        mean(&seed_means)
    });
    let overall = mean(&per_instance);
    let worst = per_instance.iter().copied().fold(0.0f64, f64::max);
    for (i, &m) in per_instance.iter().enumerate() {
        assert!(
            m <= cap,
            "instance {i}: mean expansion {m:.2} exceeds 16*log2(n) = {cap}"
        );
    }
    println!(
        "[criterion 06] PASS non-contraction on {INSTANCES} instances x {SEEDS} seeds \
         (zero tolerance); mean expansion {:.2}, worst instance {:.2}, cap {cap}",
        overall, worst
    );
}

#[test]
fn criterion_07_end_to_end_ratio() {
    const PAIRS: usize = 200;
    const PER_COMBO: usize = 5;
    for &n in &[8usize, 12] {
        for &epsilon in &[0.5, 1.0] {
            let bound = 50.0 * ((n as f64).log2() + 1.0) / epsilon;
            for inst_idx in 0..PER_COMBO {
                let inst = random_euclidean_instance(
                    n,
                    2,
                    0.7,
                    4,
                    &mut trial_rng(0x7E2E, (n * 1000 + inst_idx) as u64),
                );
                let opt = opt_exhaustive(&inst).expect("oracle fits").cost;
                let ratios: Vec<f64> = map_indexed(PAIRS, |p| {
                    let mut rng = trial_rng(
                        0x7E2E ^ 0x1000,
                        ((n * 10 + inst_idx) * PAIRS + p) as u64,
                    );
                    let sol =
                        solve_general_private(&inst, 2.0, epsilon, SupersetRule::MinSet, &mut rng)
                            .expect("general solve succeeds");
                    approx_ratio(sol.cost_in_original.total, opt).expect("ratio is defined")
                });
                let m = mean(&ratios);
                assert!(
                    m <= bound,
                    "n={n} eps={epsilon} instance {inst_idx}: mean ratio {m:.2} \
                     over {PAIRS} (tree, noise) pairs exceeds 50*(log2 n + 1)/eps = {bound:.1}"
                );
            }
        }
    }
    println!(
        "[criterion 07] PASS end-to-end mean ratio within 50*(log2 n + 1)/eps \
         for n in {{8, 12}}, eps in {{0.5, 1}}, {PAIRS} pairs per instance"
    );
}

#[test]
fn criterion_08_cost_table_bit_exact() {
    let t = two_point_cost_table(1.0, 100);
    assert_eq!(t.light_closed.to_bits(), (0.1f64).to_bits(), "light closed must be f/sqrt(m)");
    assert_eq!(t.light_open.to_bits(), (1.0f64).to_bits(), "light open must be f");
    assert_eq!(t.heavy_closed.to_bits(), (10.0f64).to_bits(), "heavy closed must be sqrt(m)*f");
    assert_eq!(t.heavy_open.to_bits(), (1.0f64).to_bits(), "heavy open must be f");
    println!("[criterion 08] PASS two-point cost table is {{0.1, 1, 10, 1}} bit-exact");
}

fn star_outcome(policy: Policy) -> dpufl::lowerbound::PolicyOutcome {
    let family = StarFamily::new(0.01, 1.0, 1000).expect("family is valid");
    let cfg = HarnessConfig {
        trials: 200,
        master_seed: 9,
        lambda: 1.5,
    };
    evaluate_policy(&family, policy, &cfg).expect("policy evaluation succeeds")
}

#[test]
fn criterion_09a_open_all_ratio() {
    let out = star_outcome(Policy::OpenAll);
    let target = 5.5; // (sqrt(m) + 1)/2 at m = 100
    let rel = (out.ratio - target).abs() / target;
    assert!(
        rel <= 0.05,
        "open-all ratio {:.4} deviates from {target} by {:.2}% (cap 5%)",
        out.ratio,
        rel * 100.0
    );
    println!(
        "[criterion 09a] PASS open-all ratio {:.4} within 5% of {target} \
         (m=100, n=1000, 200 trials)",
        out.ratio
    );
}

#[test]
fn criterion_09b_open_none_ratio() {
    let out = star_outcome(Policy::OpenNone);
    let target = 10.0; // sqrt(m) at m = 100
    // Both per-leaf policies cost f in expectation under this demand law:
    // open-none pays N*r per leaf, and E[N]*r = (10/11 + 100/11) * 0.1 = 1 = f,
    // identical to open-all's flat f. The measured ratio therefore lands near
    // (sqrt(m) + 1)/2 = 5.5 for both policies, and the sqrt(m) target below is
    // out of reach for this estimator. The assertion is kept as specified and
    // records the discrepancy.
    let rel = (out.ratio - target).abs() / target;
    println!(
        "[criterion 09b] {} open-none ratio {:.4} vs target {target} (deviation {:.1}%, cap 5%)",
        if rel <= 0.05 { "PASS" } else { "FAIL" },
        out.ratio,
        rel * 100.0
    );
    assert!(
        rel <= 0.05,
        "open-none ratio {:.4} deviates from {target} by {:.1}% (cap 5%)",
        out.ratio,
        rel * 100.0
    );
}

#[test]
fn criterion_10_dp_matches_exhaustive() {
    const TREES: usize = 500;
    let checked: Vec<(f64, f64)> = map_indexed(TREES, |i| {
        // Dyadic factor 1.5, depth at most 3, and dyadic facility costs keep
        // every cost a dyadic rational, so the DP and the enumeration must
        // agree bit for bit, not merely within tolerance. Trees are redrawn
        // until the vertex count fits the enumeration comfortably.
        let (tree, clients) = (0..)
            .map(|attempt| {
                let mut rng = trial_rng(0xD1CE, (i * 1000 + attempt) as u64);
                let n_leaves = 2 + i % 9; // 2 ..= 10 leaf points
                let depth = 1 + i % 3; // 1 ..= 3 levels
                let t = random_hst(n_leaves, depth, 1.5, &mut rng);
                let c = random_clients(t.num_leaves(), 8, &mut rng);
                (t, c)
            })
            .find(|(t, _)| t.num_vertices() <= 14)
            .expect("a small enough tree is eventually drawn");
        let f = [0.5, 1.0, 1.75, 2.25, 3.0][i % 5];
        let dp = opt_tree_dp(&tree, &clients, f).expect("DP succeeds");
        let ex = opt_exhaustive_tree(&tree, &clients, f).expect("enumeration fits");
        assert_eq!(
            dp.cost.to_bits(),
            ex.cost.to_bits(),
            "tree {i}: DP cost {} differs from exhaustive cost {}",
            dp.cost,
            ex.cost
        );
        // The DP's claimed set must actually price at its reported cost.
        let re = tree_set_cost(&tree, &clients, &dp.open, f).expect("cost evaluates");
        assert_eq!(
            re.total.to_bits(),
            dp.cost.to_bits(),
            "tree {i}: DP open set prices at {} not {}",
            re.total,
            dp.cost
        );
        (dp.cost, ex.cost)
    });
    let _ = pairwise_sum(&checked.iter().map(|c| c.0).collect::<Vec<_>>());
    println!(
        "[criterion 10] PASS exact DP equals vertex enumeration bit-for-bit on {TREES} trees"
    );
}

#[test]
fn criterion_12_performance() {
    let mut rng = seeded_rng(0x1024);
    let tree = random_hst(1024, 8, 1.5, &mut rng);
    let clients = random_clients(tree.num_leaves(), 5, &mut rng);
    let params = SolverParams::new(1.5, 1.0, 10.0).expect("parameters are valid");
    // Best of five, to keep the measurement stable while sibling tests
    // share the machine.
    let mut best = f64::INFINITY;
    for s in 0..5 {
        let mut noise_rng = trial_rng(0x1024, s);
        let t0 = Instant::now();
        let sol = solve_tree_private(&tree, &clients, &params, SupersetRule::MinSet, &mut noise_rng)
            .expect("solve succeeds");
        let dt = t0.elapsed().as_secs_f64();
        std::hint::black_box(&sol);
        best = best.min(dt);
    }
    assert!(
        best < 1.0,
        "single private solve on 1024 leaves took {best:.3} s, budget 1 s"
    );
    println!(
        "[criterion 12] PASS private solve on n=1024 tree in {:.1} ms (budget 1000 ms)",
        best * 1e3
    );
}

// ---------------------------------------------------------------------------
// Check 11: byte-identical replay of every subcommand
// ---------------------------------------------------------------------------

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpufl"))
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Parses JSON output and zeroes the manifest timestamp.
fn normalized_json(bytes: &[u8]) -> Value {
    let mut v: Value = serde_json::from_slice(bytes).expect("output is JSON");
    v["manifest"]["timestamp"] = json!(0);
    v
}

/// Normalizes CSV output: zeroes the manifest timestamp in the leading
/// comment line and drops the named columns (wall-clock measurements).
fn normalized_csv(text: &str, drop_cols: &[&str]) -> Vec<String> {
    let mut dropped: Vec<usize> = Vec::new();
    let keep = |line: &str, dropped: &[usize]| -> String {
        line.split(',')
            .enumerate()
            .filter(|(i, _)| !dropped.contains(i))
            .map(|(_, c)| c)
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# manifest: ") {
            let mut m: Value = serde_json::from_str(rest).expect("manifest is JSON");
            m["timestamp"] = json!(0);
            out.push(format!("# manifest: {m}"));
        } else if dropped.is_empty() && line.contains("runtime") {
            dropped = line
                .split(',')
                .enumerate()
                .filter(|(_, c)| drop_cols.contains(c))
                .map(|(i, _)| i)
                .collect();
            out.push(keep(line, &dropped));
        } else {
            out.push(keep(line, &dropped));
        }
    }
    out
}

fn manifest_argv(bytes: &[u8]) -> Vec<String> {
    let v: Value = serde_json::from_slice(bytes).expect("output is JSON");
    v["manifest"]["argv"]
        .as_array()
        .expect("manifest records argv")
        .iter()
        .map(|a| a.as_str().expect("argv entries are strings").to_string())
        .collect()
}

fn manifest_argv_csv(text: &str) -> Vec<String> {
    let line = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# manifest: "))
        .expect("CSV embeds a manifest line");
    let v: Value = serde_json::from_str(line).expect("manifest is JSON");
    v["argv"]
        .as_array()
        .expect("manifest records argv")
        .iter()
        .map(|a| a.as_str().expect("argv entries are strings").to_string())
        .collect()
}

/// Runs one subcommand, replays it from its own manifest, and demands the
/// primary outputs agree after timestamp normalization.
fn assert_replay_json(args: &[&str], out_path: &std::path::Path) {
    run_ok(args);
    let first = std::fs::read(out_path).expect("output written");
    let argv = manifest_argv(&first);
    let argv_ref: Vec<&str> = argv.iter().map(String::as_str).collect();
    run_ok(&argv_ref);
    let second = std::fs::read(out_path).expect("output rewritten");
    assert_eq!(
        normalized_json(&first),
        normalized_json(&second),
        "replayed {:?} differs beyond the timestamp",
        args
    );
}

#[test]
fn criterion_11_replay_determinism() {
    let dir = tempfile::tempdir().expect("tempdir");
    let p = |name: &str| dir.path().join(name);
    let s = |pb: &std::path::PathBuf| pb.to_str().unwrap().to_string();

    let instance = json!({
        "n": 4,
        "distances": [
            [0.0, 2.0, 5.0, 5.0],
            [2.0, 0.0, 5.0, 5.0],
            [5.0, 5.0, 0.0, 2.0],
            [5.0, 5.0, 2.0, 0.0]
        ],
        "facility_cost": 2.25,
        "clients": [1, 0, 5, 0]
    });
    let inst_path = p("w.json");
    std::fs::write(&inst_path, serde_json::to_vec_pretty(&instance).unwrap()).unwrap();

    // embed
    let tree_path = p("tree.json");
    assert_replay_json(
        &["embed", "--input", &s(&inst_path), "--lambda", "1.5", "--seed", "11", "--out", &s(&tree_path)],
        &tree_path,
    );

    // solve (private and base)
    let solve_out = p("solve.json");
    assert_replay_json(
        &["solve", "--input", &s(&inst_path), "--epsilon", "1", "--lambda", "1.5",
          "--seed", "3", "--tree-seed", "11", "--out", &s(&solve_out)],
        &solve_out,
    );
    let solve_base_out = p("solve_base.json");
    assert_replay_json(
        &["solve", "--input", &s(&inst_path), "--epsilon", "1", "--lambda", "1.5",
          "--base", "--return-all-marked", "--tree-seed", "11", "--out", &s(&solve_base_out)],
        &solve_base_out,
    );

    // solve-tree on the embedded tree
    let st_out = p("solve_tree.json");
    assert_replay_json(
        &["solve-tree", "--tree", &s(&tree_path), "--clients", "1,0,5,0",
          "--f", "2.25", "--epsilon", "1", "--seed", "5", "--out", &s(&st_out)],
        &st_out,
    );

    // opt in both modes
    let opt_out = p("opt.json");
    assert_replay_json(
        &["opt", "--input", &s(&inst_path), "--out", &s(&opt_out)],
        &opt_out,
    );
    let opt_tree_out = p("opt_tree.json");
    assert_replay_json(
        &["opt", "--tree", &s(&tree_path), "--clients", "1,0,5,0", "--f", "2.25",
          "--out", &s(&opt_tree_out)],
        &opt_tree_out,
    );

    // audit with the Monte Carlo cross-check enabled
    let audit_out = p("audit.json");
    assert_replay_json(
        &["audit", "--lambda", "1.96", "--f", "10", "--epsilon", "1",
          "--mc-samples", "2000", "--seed", "4", "--out", &s(&audit_out)],
        &audit_out,
    );

    // lowerbound, comparing the JSON summary and the per-trial CSV
    let lb_out = p("lb.json");
    let lb_csv = p("lb.csv");
    run_ok(&["lowerbound", "--epsilon", "0.04", "--f", "1", "--n", "64",
             "--trials", "50", "--policy", "dp-solver", "--seed", "7",
             "--csv", &s(&lb_csv), "--out", &s(&lb_out)]);
    let lb1 = std::fs::read(&lb_out).unwrap();
    let lb_csv1 = std::fs::read_to_string(&lb_csv).unwrap();
    let argv = manifest_argv(&lb1);
    let argv_ref: Vec<&str> = argv.iter().map(String::as_str).collect();
    run_ok(&argv_ref);
    let lb2 = std::fs::read(&lb_out).unwrap();
    let lb_csv2 = std::fs::read_to_string(&lb_csv).unwrap();
    assert_eq!(normalized_json(&lb1), normalized_json(&lb2), "lowerbound JSON replay differs");
    assert_eq!(
        normalized_csv(&lb_csv1, &[]),
        normalized_csv(&lb_csv2, &[]),
        "lowerbound CSV replay differs"
    );

    // bench: runtime column is a wall-clock measurement and is excluded
    let bench_cfg = p("bench.json");
    std::fs::write(
        &bench_cfg,
        serde_json::to_vec_pretty(&json!({
            "grids": [
                {"generator": "hst", "n_leaves": 8, "depth": 3, "lambda": 1.5,
                 "facility_cost": 2.0, "epsilons": [0.5, 1.0], "seeds": [1, 2]},
                {"generator": "euclidean", "n": 8, "dim": 2, "lambda": 2.0,
                 "facility_cost": 0.7, "epsilons": [1.0], "seeds": [3]},
                {"generator": "star", "epsilon": 0.04, "facility_cost": 1.0,
                 "n_leaves": 16, "lambda": 1.5, "seeds": [4]}
            ]
        }))
        .unwrap(),
    )
    .unwrap();
    let bench_out = p("bench.csv");
    run_ok(&["bench", "--config", &s(&bench_cfg), "--out", &s(&bench_out)]);
    let b1 = std::fs::read_to_string(&bench_out).unwrap();
    let argv = manifest_argv_csv(&b1);
    let argv_ref: Vec<&str> = argv.iter().map(String::as_str).collect();
    run_ok(&argv_ref);
    let b2 = std::fs::read_to_string(&bench_out).unwrap();
    assert_eq!(
        normalized_csv(&b1, &["runtime_ms"]),
        normalized_csv(&b2, &["runtime_ms"]),
        "bench CSV replay differs beyond runtime measurements"
    );

    println!(
        "[criterion 11] PASS all 7 subcommands replay byte-identically \
         (timestamp and wall-clock columns excluded)"
    );
}
