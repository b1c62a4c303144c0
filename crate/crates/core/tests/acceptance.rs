//! Acceptance run: one PASS/FAIL line per primary criterion.
//!
//! Every expected value and tolerance is pinned below. Graph facts are
//! checked against brute-force oracles written here, independently of the
//! library's algorithms. Run with `cargo test --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sybilproof_core::adversary::FAMILY_LIMIT;
use sybilproof_core::corpus::{profile_from_arcs, seller_rooted_digraphs};
use sybilproof_core::experiment::{
    generate_price_graph, paired_difference, run_experiment, sample_value, ExperimentConfig, Metric, PriceModelParams,
    ResultRow,
};
use sybilproof_core::mechanism::ScmPrepared;
use sybilproof_core::*;

/// Exhaustive structural checks cover every seller-rooted digraph up to
/// this many vertices.
const STRUCTURE_MAX_VERTICES: usize = 5;
/// The incentive corpus: digraphs up to this size, bids from `CORPUS_BIDS`.
const CORPUS_MAX_VERTICES: usize = 4;
const CORPUS_BIDS: [i64; 3] = [1, 2, 3];
/// Union of the default grids of every corpus profile.
const CORPUS_GRID: [i64; 5] = [0, 1, 2, 3, 4];
const CORPUS_MAX_SYBILS: usize = 2;
const LEMMA_INSTANCES: usize = 500;
const LEMMA_MAX_N: usize = 50;
const CHAIN_TRIALS: usize = 1000;
const CHAIN_N: usize = 100;
const CHAIN_SEED: u64 = 20_240_601;
const RATIO_TRIALS: usize = 200;
const SAMPLES_PER_TREE_GRAPH: u64 = 8;
const UNIFORMITY_SAMPLES: u64 = 10_000;
const UNIFORMITY_EXPECTED: i64 = 2500;
const UNIFORMITY_TOLERANCE: i64 = 150;
/// Two-sided margin for the paired mean comparisons, in standard errors.
const ORDERING_MARGIN_SE: f64 = 1.96;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn m(v: i64) -> Money {
    Money::from_integer(v)
}

fn id(s: &str) -> VertexId {
    VertexId::from(s)
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn golden_theta1() -> Check {
    let start = Instant::now();
    let p = fixtures::theta1();
    let mut problems = Vec::new();
    let mut expect = |mech: Mechanism, revenue: i64, winner: Option<&str>| {
        let out = mech.run(&p).unwrap();
        if out.revenue != m(revenue) || (winner.is_some() && out.winner.as_ref().map(VertexId::as_str) != winner) {
            problems.push(format!("{}: winner {:?} revenue {}", mech.kind(), out.winner, out.revenue));
        }
    };
    for seed in 0..64 {
        expect(Mechanism::scm(seed), 10, Some("d"));
    }
    expect(Mechanism::Idm, 5, Some("d"));
    expect(Mechanism::Vcg, 0, Some("d"));
    expect(Mechanism::Nsp, 5, None);
    expect(Mechanism::stm(), 10, Some("d"));
    let elapsed = start.elapsed();
    Check {
        name: "golden theta1",
        pass: problems.is_empty() && within(elapsed, 1),
        detail: if problems.is_empty() {
            format!("SCM (64 seeds) 10, IDM 5, VCG 0, NSP 5, STM 10, winner d; {elapsed:.2?}")
        } else {
            problems.join("; ")
        },
    }
}

fn golden_theta2() -> Check {
    let p = fixtures::theta2();
    let mut problems = Vec::new();
    let scm = Mechanism::Scm { priority: EdgePriority::prefer([("c", "a"), ("d", "a")]), tie: TieRule::Strict };
    let out = scm.run(&p).unwrap();
    if out.payment(&id("a")) != m(-5)
        || out.payment(&id("d")) != m(10)
        || out.winner != Some(id("d"))
        || out.revenue != m(5)
    {
        problems.push(format!("SCM tree {{c<-a, d<-a}}: {:?}", out.payments));
    }
    for mech in [Mechanism::Idm, Mechanism::Vcg] {
        let r = mech.run(&p).unwrap().revenue;
        if r != m(10) {
            problems.push(format!("{} revenue {r}", mech.kind()));
        }
    }
    let g = reachable_subgraph(&p).unwrap();
    let prepared = ScmPrepared::new(&g);
    let trees = all_sp_trees(prepared.cluster_graph());
    let mut total = Money::zero();
    for tree in &trees {
        let (stm, _) = prepared.stm_for_tree(&g, tree, TieRule::Strict);
        total += &stm.price(g.bids()).revenue();
    }
    let mean = total.mul_ratio(1, trees.len() as i64);
    if trees.len() != 4 || mean != Money::from_ratio(15, 2) {
        problems.push(format!("{} trees, expected revenue {mean}", trees.len()));
    }
    Check {
        name: "golden theta2",
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            "SCM{c<-a,d<-a}: a -5, d 10, revenue 5; IDM 10; VCG 10; mean over 4 trees 7.5".into()
        } else {
            problems.join("; ")
        },
    }
}

fn witness_gain(subject: &Subject, truth: &ReportProfile, k: usize, attacker: &str) -> Result<Option<Money>> {
    let space = StrategySpace::auto(truth, k, DiffusionMode::All);
    let opts = CheckOptions { attacker: Some(id(attacker)), first_violation: false };
    let report = check_property(subject, truth, Property::Sp, &space, &opts)?;
    match report.verdict.violation() {
        None => Ok(None),
        Some(v) => {
            assert_eq!(v.replay(truth, subject)?, v.gain, "witness replay");
            Ok(Some(v.gain.clone()))
        }
    }
}

fn f3_attacks() -> Check {
    let start = Instant::now();
    let truth = fixtures::f3();
    let vcg = witness_gain(&Subject::Single(Mechanism::Vcg), &truth, 1, "a").unwrap();
    let idm = witness_gain(&Subject::Single(Mechanism::Idm), &truth, 1, "a").unwrap();
    let space2 = StrategySpace::auto(&truth, 2, DiffusionMode::All);
    let mut sp_problems = Vec::new();
    let family = ScmFamily::for_truth(&truth, TieRule::Strict).unwrap();
    let members = family.len();
    for subject in [Subject::Single(Mechanism::stm()), Subject::ScmFamily(family)] {
        let r = check_property(&subject, &truth, Property::Sp, &space2, &CheckOptions::default()).unwrap();
        if let Some(v) = r.verdict.violation() {
            sp_problems.push(format!("{} gains {}", subject.kind(), v.gain));
        }
    }
    let elapsed = start.elapsed();
    let vcg_ok = vcg.as_ref().is_some_and(|g| *g >= m(60));
    let idm_ok = idm.as_ref().is_some_and(|g| *g >= m(39));
    Check {
        name: "F3 attacks",
        pass: vcg_ok && idm_ok && sp_problems.is_empty() && within(elapsed, 30),
        detail: format!(
            "VCG gain {} (>= 60), IDM gain {} (>= 39), STM and {members} SCM_f at k=2: {}; {elapsed:.2?}",
            vcg.map_or("none".into(), |g| g.to_string()),
            idm.map_or("none".into(), |g| g.to_string()),
            if sp_problems.is_empty() { "no gain".to_string() } else { sp_problems.join(", ") }
        ),
    }
}

fn lemma_zero_payments() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut bad = Vec::new();
    let mut sizes = BTreeSet::new();
    for i in 0..LEMMA_INSTANCES {
        let n = rng.random_range(2..=LEMMA_MAX_N);
        let mm = rng.random_range(1..=5usize.min(n - 1));
        let mut p = generate_price_graph(&PriceModelParams { n, m: mm, seed: rng.random() }).unwrap();
        for r in p.reports.values_mut() {
            r.bid = sample_value(&mut rng);
        }
        assert!(p.gamma0.is_empty());
        sizes.insert(n);
        let out = Mechanism::stm().run(&p).unwrap();
        for (v, pay) in &out.payments {
            if Some(v) != out.winner.as_ref() && !pay.is_zero() {
                bad.push(format!("instance {i}: {v} pays {pay}"));
            }
        }
    }
    Check {
        name: "lemma zero payments",
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{LEMMA_INSTANCES} Price instances, {} distinct sizes up to {LEMMA_MAX_N}", sizes.len())
        } else {
            bad.into_iter().take(3).collect::<Vec<_>>().join("; ")
        },
    }
}

fn by_trial(rows: &[ResultRow]) -> BTreeMap<usize, BTreeMap<MechanismKind, &ResultRow>> {
    let mut out: BTreeMap<usize, BTreeMap<MechanismKind, &ResultRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.trial).or_default().insert(r.mechanism, r);
    }
    out
}

fn chain_violations(rows: &[ResultRow]) -> Vec<String> {
    use MechanismKind::*;
    let mut bad = Vec::new();
    for (t, row) in by_trial(rows) {
        let r = |k| &row[&k].revenue;
        let w = |k| &row[&k].social_welfare;
        let ok = r(Stm) >= r(Scm)
            && r(Scm) >= r(Nsp)
            && w(Stm) >= w(Scm)
            && w(Scm) >= w(Nsp)
            && r(Stm) >= r(Idm)
            && r(Idm) >= r(Vcg)
            && w(Scm) <= w(Stm)
            && w(Stm) <= w(Idm)
            && w(Idm) <= w(Vcg);
        if !ok {
            bad.push(format!("trial {t}"));
        }
    }
    bad
}

struct ChainRun {
    m: usize,
    rows: Vec<ResultRow>,
}

fn theorem_chains(runs: &mut Vec<ChainRun>) -> Check {
    let start = Instant::now();
    let mut bad = Vec::new();
    for mm in [3, 5] {
        let config = ExperimentConfig::new(CHAIN_N, mm, CHAIN_TRIALS, CHAIN_SEED + mm as u64);
        let rows = run_experiment(&config).unwrap();
        assert_eq!(rows.len(), CHAIN_TRIALS * 5);
        bad.extend(chain_violations(&rows).into_iter().map(|t| format!("m={mm} {t}")));
        runs.push(ChainRun { m: mm, rows });
    }
    let elapsed = start.elapsed();
    Check {
        name: "theorem chains",
        pass: bad.is_empty() && within(elapsed, 300),
        detail: format!(
            "{} trials at n={CHAIN_N}, m in {{3,5}}: {} violating trials{}; {elapsed:.2?}",
            2 * CHAIN_TRIALS,
            bad.len(),
            bad.first().map(|t| format!(" (first: {t})")).unwrap_or_default()
        ),
    }
}

/// The stated mean revenue orderings at the 1000-trial scale. `a > b` holds
/// when the paired mean difference exceeds the margin; "STM highest" holds
/// when no other mechanism's mean exceeds STM's by the margin.
fn mean_orderings(runs: &[ChainRun]) -> Check {
    use MechanismKind::*;
    let mut parts = Vec::new();
    let mut pass = true;
    for run in runs {
        let diff = |a, b| paired_difference(&run.rows, a, b, Metric::Revenue).unwrap();
        let above = |a, b| {
            let (mean, se) = diff(a, b);
            mean > ORDERING_MARGIN_SE * se
        };
        let highest = [Scm, Idm, Vcg, Nsp].into_iter().all(|b| !above(b, Stm));
        let mut claim = |ok: bool, text: String| {
            pass &= ok;
            parts.push(format!("m={} {}{text}", run.m, if ok { "" } else { "NOT " }));
        };
        claim(highest, "STM highest".into());
        for (a, b) in [(Idm, Scm), (Scm, Vcg), (Stm, Nsp), (Scm, Nsp)] {
            let (mean, se) = diff(a, b);
            claim(above(a, b), format!("{a}>{b} ({mean:+.5}, se {se:.5})"));
        }
    }
    Check { name: "mean revenue ordering", pass, detail: parts.join("; ") }
}

/// `SW^STM / SW*` is at most 1 on every trial and below 1 on some.
fn efficiency_ratio(runs: &[ChainRun]) -> Check {
    let sparse = run_experiment(&ExperimentConfig::new(CHAIN_N, 1, RATIO_TRIALS, CHAIN_SEED + 1)).unwrap();
    let mut parts = Vec::new();
    let (mut above, mut below) = (0, 0);
    for (mm, rows) in std::iter::once((1, &sparse)).chain(runs.iter().map(|r| (r.m, &r.rows))) {
        let ratios: Vec<&Money> =
            rows.iter().filter(|r| r.mechanism == MechanismKind::Stm).filter_map(|r| r.ratio.as_ref()).collect();
        let a = ratios.iter().filter(|r| ***r > m(1)).count();
        let b = ratios.iter().filter(|r| ***r < m(1)).count();
        above += a;
        below += b;
        parts.push(format!("m={mm}: {b} of {} below 1, {a} above", ratios.len()));
    }
    Check { name: "STM efficiency ratio", pass: above == 0 && below > 0, detail: parts.join("; ") }
}

/// Brute-force graph facts on arc lists.
struct Oracle {
    n: usize,
    succ: Vec<Vec<usize>>,
}

impl Oracle {
    fn new(n: usize, arcs: &[(usize, usize)]) -> Self {
        let mut succ = vec![Vec::new(); n];
        for &(u, v) in arcs {
            succ[u].push(v);
        }
        Oracle { n, succ }
    }

    fn reach(&self, root: usize, deleted: Option<usize>) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        if deleted == Some(root) {
            return seen;
        }
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &self.succ[u] {
                if !seen[v] && Some(v) != deleted {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// `y` is dominated by `x` iff deleting `x` cuts `y` off the seller.
    fn dominated(&self, x: usize) -> Vec<bool> {
        if x == 0 {
            return vec![true; self.n];
        }
        self.reach(0, Some(x)).into_iter().map(|r| !r).collect()
    }

    fn simple_paths(&self, from: usize, to: usize) -> Vec<Vec<usize>> {
        fn go(o: &Oracle, path: &mut Vec<usize>, to: usize, out: &mut Vec<Vec<usize>>) {
            let u = *path.last().unwrap();
            if u == to {
                out.push(path.clone());
                return;
            }
            for &v in &o.succ[u] {
                if !path.contains(&v) {
                    path.push(v);
                    go(o, path, to, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut vec![from], to, &mut out);
        out
    }

    /// Paths `x -> z` and `y -> z` sharing only `z`.
    fn meets(&self, x: usize, y: usize, z: usize) -> bool {
        let px = self.simple_paths(x, z);
        let py = self.simple_paths(y, z);
        px.iter().any(|p| py.iter().any(|q| p.iter().all(|v| *v == z || !q.contains(v))))
    }

    fn gamma(&self) -> Vec<bool> {
        let mut in_gamma = vec![false; self.n];
        in_gamma[0] = true;
        for &v in &self.succ[0] {
            in_gamma[v] = true;
        }
        loop {
            let members: Vec<usize> = (0..self.n).filter(|&v| in_gamma[v]).collect();
            let add: Vec<usize> = (0..self.n)
                .filter(|&z| !in_gamma[z])
                .filter(|&z| members.iter().any(|&x| members.iter().any(|&y| x < y && self.meets(x, y, z))))
                .collect();
            if add.is_empty() {
                return in_gamma;
            }
            for z in add {
                in_gamma[z] = true;
            }
        }
    }

    /// Vertices reachable from `root` without passing another Γ member.
    fn cluster(&self, root: usize, in_gamma: &[bool]) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in &self.succ[u] {
                if !seen[v] && !in_gamma[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        (0..self.n).filter(|&v| seen[v]).collect()
    }

    fn bfs(&self, succ: &[Vec<usize>]) -> Vec<Option<usize>> {
        let mut dist = vec![None; succ.len()];
        dist[0] = Some(0);
        let mut queue = std::collections::VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &succ[u] {
                if dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

#[derive(Default)]
struct StructureTally {
    graphs: usize,
    partition: usize,
    root_targeting: usize,
    characterization: usize,
    dominators: usize,
    meeting_points: usize,
    gamma: usize,
    tree_samples: usize,
    tree_distance: usize,
}

impl StructureTally {
    fn merge(mut self, o: StructureTally) -> StructureTally {
        self.graphs += o.graphs;
        self.partition += o.partition;
        self.root_targeting += o.root_targeting;
        self.characterization += o.characterization;
        self.dominators += o.dominators;
        self.meeting_points += o.meeting_points;
        self.gamma += o.gamma;
        self.tree_samples += o.tree_samples;
        self.tree_distance += o.tree_distance;
        self
    }
}

/// Checks a sampled tree of `h` against oracle distances on `h`: every
/// tree arc is an arc of `h` one level down and tree depth equals distance.
fn tree_distance_errors(h: &ClusterGraph, tree: &ShortestPathTree) -> usize {
    let nodes = h.nodes().to_vec();
    let local: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut succ = vec![Vec::new(); nodes.len()];
    for (a, b) in h.arcs() {
        succ[local[&a]].push(local[&b]);
    }
    let dist = Oracle { n: nodes.len(), succ: succ.clone() }.bfs(&succ);
    let mut errors = 0;
    for (i, &x) in nodes.iter().enumerate().skip(1) {
        let Some(p) = tree.parent(x) else {
            errors += 1;
            continue;
        };
        let ok = h.has_arc(p, x)
            && dist[local[&p]].map(|d| d + 1) == dist[i]
            && Some(tree.tree_depth(x)) == dist[i]
            && tree.distance(x) == dist[i];
        errors += usize::from(!ok);
    }
    errors
}

fn structure_on(n: usize, arcs: &[(usize, usize)]) -> StructureTally {
    let mut t = StructureTally { graphs: 1, ..Default::default() };
    let p = profile_from_arcs(n, arcs, &vec![m(1); n - 1]);
    let g = reachable_subgraph(&p).unwrap();
    let o = Oracle::new(n, arcs);
    assert_eq!(g.len(), n);
    for v in 0..n {
        assert_eq!(g.id(v), &if v == 0 { id("s") } else { corpus::buyer_name(v - 1) });
    }

    // dominators
    let dom = dominator_tree(g.graph(), 0);
    for x in 0..n {
        let oracle = o.dominated(x);
        if (0..n).any(|y| dom.dominates(x, y) != oracle[y]) {
            t.dominators += 1;
        }
    }

    // meeting points
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if x != y && z != x && z != y && two_disjoint_paths(g.graph(), x, y, z) != o.meets(x, y, z) {
                    t.meeting_points += 1;
                }
            }
        }
    }

    // trusted set, against the closure oracle and the dominator-children form
    let gamma = compute_gamma(&g);
    let oracle_gamma = o.gamma();
    if (0..n).any(|v| gamma.contains(v) != oracle_gamma[v]) {
        t.gamma += 1;
    }
    let idom_is_seller = |x: usize| (1..n).all(|w| w == x || !o.dominated(w)[x]);
    if (0..n).any(|v| gamma.contains(v) != (v == 0 || idom_is_seller(v))) {
        t.characterization += 1;
    }

    // clusters
    let parts = sybil_clusters(&g, &gamma);
    let mut covered = vec![0usize; n];
    for (&root, members) in parts.clusters() {
        let expect = o.cluster(root, &oracle_gamma);
        if members.to_vec() != expect || !oracle_gamma[root] {
            t.partition += 1;
        }
        for &v in members {
            covered[v] += 1;
        }
    }
    if covered.iter().any(|&c| c != 1) {
        t.partition += 1;
    }
    for &(u, v) in arcs {
        if parts.root_of(u) != parts.root_of(v) && parts.root_of(v) != v {
            t.root_targeting += 1;
        }
    }

    // shortest-path tree samples
    let h = cluster_graph(&g, &parts);
    for seed in 0..SAMPLES_PER_TREE_GRAPH {
        let tree = sample_sp_tree(&g, &h, &EdgePriority::Seeded(seed));
        t.tree_samples += 1;
        t.tree_distance += tree_distance_errors(&h, &tree);
    }
    t
}

fn structural_suite() -> Check {
    let start = Instant::now();
    let tally = (1..=STRUCTURE_MAX_VERTICES)
        .flat_map(|n| seller_rooted_digraphs(n).into_iter().map(move |a| (n, a)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(n, arcs)| structure_on(*n, arcs))
        .reduce(StructureTally::default, StructureTally::merge);
    let discrepancies = tally.partition
        + tally.root_targeting
        + tally.characterization
        + tally.dominators
        + tally.meeting_points
        + tally.gamma;
    Check {
        name: "structural lemmas",
        pass: discrepancies == 0,
        detail: format!(
            "{} digraphs <= {STRUCTURE_MAX_VERTICES} vertices: partition {}, root targeting {}, empty-seed characterization {}, dominators {}, meeting points {}, closure {} discrepancies; {:.2?}",
            tally.graphs,
            tally.partition,
            tally.root_targeting,
            tally.characterization,
            tally.dominators,
            tally.meeting_points,
            tally.gamma,
            start.elapsed()
        ),
    }
}

fn tree_sampling() -> Check {
    // distance preservation on the small corpus and on Price graphs
    let small = (1..=STRUCTURE_MAX_VERTICES)
        .flat_map(|n| seller_rooted_digraphs(n).into_iter().map(move |a| (n, a)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(n, arcs)| {
            let p = profile_from_arcs(*n, arcs, &vec![m(1); n - 1]);
            let g = reachable_subgraph(&p).unwrap();
            let gamma = compute_gamma(&g);
            let h = cluster_graph(&g, &sybil_clusters(&g, &gamma));
            (0..SAMPLES_PER_TREE_GRAPH)
                .map(|seed| tree_distance_errors(&h, &sample_sp_tree(&g, &h, &EdgePriority::Seeded(seed))))
                .sum::<usize>()
        })
        .sum::<usize>();
    let mut samples = (1..=STRUCTURE_MAX_VERTICES).map(|n| seller_rooted_digraphs(n).len()).sum::<usize>()
        * SAMPLES_PER_TREE_GRAPH as usize;
    let mut errors = small;
    for seed in 0..20u64 {
        let p = generate_price_graph(&PriceModelParams { n: 60, m: 1 + (seed % 3) as usize, seed }).unwrap();
        let g = reachable_subgraph(&p).unwrap();
        let h = cluster_graph(&g, &sybil_clusters(&g, &compute_gamma(&g)));
        for s in 0..50 {
            errors += tree_distance_errors(&h, &sample_sp_tree(&g, &h, &EdgePriority::Seeded(s)));
            samples += 1;
        }
    }

    // uniformity on theta2
    let p = fixtures::theta2();
    let g = reachable_subgraph(&p).unwrap();
    let h = cluster_graph(&g, &sybil_clusters(&g, &compute_gamma(&g)));
    let mut counts: BTreeMap<Vec<(usize, usize)>, i64> = BTreeMap::new();
    for seed in 0..UNIFORMITY_SAMPLES {
        let tree = sample_sp_tree(&g, &h, &EdgePriority::Seeded(seed));
        errors += tree_distance_errors(&h, &tree);
        *counts.entry(tree.parents().iter().map(|(&a, &b)| (a, b)).collect()).or_default() += 1;
    }
    samples += UNIFORMITY_SAMPLES as usize;
    let uniform =
        counts.len() == 4 && counts.values().all(|&c| (c - UNIFORMITY_EXPECTED).abs() <= UNIFORMITY_TOLERANCE);
    let shown: Vec<String> = counts.values().map(|c| c.to_string()).collect();
    Check {
        name: "SCM tree sampling",
        pass: errors == 0 && uniform,
        detail: format!(
            "{samples} sampled trees, {errors} distance errors; theta2 counts [{}] (2500 +- 150)",
            shown.join(", ")
        ),
    }
}

fn reserve_price() -> Check {
    let p = fixtures::theta1();
    let mut got = Vec::new();
    let mut pass = true;
    for (kappa, revenue, reserved) in [(0, 10, false), (12, 12, false), (20, 0, true)] {
        let out = Mechanism::stm_reserve(m(kappa)).run(&p).unwrap();
        pass &= out.revenue == m(revenue) && out.reserved == reserved;
        pass &= reserved == out.winner.is_none();
        got.push(format!("kappa {kappa}: {}{}", out.revenue, if out.reserved { " (reserved)" } else { "" }));
    }
    Check { name: "STM reserve price", pass, detail: got.join(", ") }
}

#[derive(Default)]
struct CorpusTally {
    graphs: usize,
    profiles: usize,
    evaluated: u64,
    failures: Vec<String>,
    vcg_witness: Option<String>,
    idm_witness: Option<String>,
    family_members: usize,
}

fn corpus_graph(n: usize, arcs: &[(usize, usize)], space: &StrategySpace, want_witnesses: bool) -> CorpusTally {
    let codes = CORPUS_BIDS.len().pow(n as u32 - 1);
    let truths: Vec<ReportProfile> = (0..codes)
        .map(|code| {
            let bids: Vec<Money> = (0..n - 1)
                .map(|i| m(CORPUS_BIDS[code / CORPUS_BIDS.len().pow(i as u32) % CORPUS_BIDS.len()]))
                .collect();
            profile_from_arcs(n, arcs, &bids)
        })
        .collect();
    let mut t = CorpusTally { graphs: 1, profiles: truths.len(), ..Default::default() };
    let family = ScmFamily::for_truth(&truths[0], TieRule::Strict).unwrap();
    assert!(family.is_exhaustive() && (family.len() as u128) <= FAMILY_LIMIT);
    t.family_members = family.len();
    for subject in [Subject::Single(Mechanism::stm()), Subject::ScmFamily(family)] {
        for prop in Property::ALL {
            let reports = check_property_many(&subject, &truths, prop, space, &CheckOptions::default()).unwrap();
            for (truth, r) in truths.iter().zip(reports) {
                t.evaluated += r.attacks_evaluated;
                if let Some(v) = r.verdict.violation() {
                    t.failures.push(format!("{} {prop} on {:?}: gain {}", subject.kind(), truth, v.gain));
                }
            }
        }
    }
    if want_witnesses {
        let first = CheckOptions { attacker: None, first_violation: true };
        for mech in [Mechanism::Vcg, Mechanism::Idm] {
            let subject = Subject::Single(mech.clone());
            let reports = check_property_many(&subject, &truths, Property::Sp, space, &first).unwrap();
            if let Some((truth, v)) =
                truths.iter().zip(&reports).find_map(|(tr, r)| r.verdict.violation().map(|v| (tr, v)))
            {
                assert_eq!(v.replay(truth, &subject).unwrap(), v.gain, "witness replay");
                let text = format!("gain {} on arcs {arcs:?}", v.gain);
                match mech {
                    Mechanism::Vcg => t.vcg_witness = Some(text),
                    _ => t.idm_witness = Some(text),
                }
            }
        }
    }
    t
}

fn incentive_corpus() -> Check {
    let start = Instant::now();
    let space = StrategySpace::new(CORPUS_GRID.map(m), CORPUS_MAX_SYBILS, DiffusionMode::All).unwrap();
    let graphs: Vec<(usize, Vec<(usize, usize)>)> =
        (2..=CORPUS_MAX_VERTICES).flat_map(|n| seller_rooted_digraphs(n).into_iter().map(move |a| (n, a))).collect();
    let results: Vec<CorpusTally> =
        graphs.par_iter().map(|(n, arcs)| corpus_graph(*n, arcs, &space, *n <= 3)).collect();
    let mut total = CorpusTally::default();
    for r in results {
        total.graphs += r.graphs;
        total.profiles += r.profiles;
        total.evaluated += r.evaluated;
        total.failures.extend(r.failures);
        total.vcg_witness = total.vcg_witness.or(r.vcg_witness);
        total.idm_witness = total.idm_witness.or(r.idm_witness);
        total.family_members = total.family_members.max(r.family_members);
    }
    // the witness search above covers the 3-vertex graphs; widen if needed
    for (n, arcs) in graphs.iter().filter(|(n, _)| *n == 4) {
        if total.vcg_witness.is_some() && total.idm_witness.is_some() {
            break;
        }
        let r = corpus_graph(*n, arcs, &space, true);
        total.vcg_witness = total.vcg_witness.or(r.vcg_witness);
        total.idm_witness = total.idm_witness.or(r.idm_witness);
    }

    let osm = fixtures::osm();
    let osm_subject = Subject::Single(Mechanism::Osm);
    let osm_report = check_property(
        &osm_subject,
        &osm,
        Property::Ic,
        &StrategySpace::auto(&osm, 0, DiffusionMode::All),
        &CheckOptions::default(),
    )
    .unwrap();
    let osm_gain = osm_report.verdict.violation().map(|v| {
        assert_eq!(v.replay(&osm, &osm_subject).unwrap(), v.gain);
        v.gain.clone()
    });
    let elapsed = start.elapsed();
    let pass = total.failures.is_empty()
        && total.vcg_witness.is_some()
        && total.idm_witness.is_some()
        && osm_gain == Some(m(5))
        && within(elapsed, 600);
    Check {
        name: "SP/IC brute force",
        pass,
        detail: format!(
            "{} digraphs <= {CORPUS_MAX_VERTICES} vertices x bids {CORPUS_BIDS:?} = {} profiles, grid {CORPUS_GRID:?}, k <= {CORPUS_MAX_SYBILS}, all diffusion subsets; STM and every SCM_f (up to {} orders) on SP/IC/IR/non-deficit: {} failures{}; VCG witness {}; IDM witness {}; OSM IC gain {}; {} attacks evaluated; {elapsed:.2?}",
            total.graphs,
            total.profiles,
            total.family_members,
            total.failures.len(),
            total.failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default(),
            total.vcg_witness.as_deref().unwrap_or("none"),
            total.idm_witness.as_deref().unwrap_or("none"),
            osm_gain.map_or("none".into(), |g| g.to_string()),
            total.evaluated,
        ),
    }
}

/// Positional arguments select criteria by substring, like the default
/// test harness; with none, everything runs.
fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));
    let mut runs = Vec::new();
    let primary: [(&str, &mut dyn FnMut() -> Check); 9] = [
        ("golden theta1", &mut golden_theta1),
        ("golden theta2", &mut golden_theta2),
        ("F3 attacks", &mut f3_attacks),
        ("lemma zero payments", &mut lemma_zero_payments),
        ("theorem chains", &mut || theorem_chains(&mut runs)),
        ("structural lemmas", &mut structural_suite),
        ("SP/IC brute force", &mut incentive_corpus),
        ("SCM tree sampling", &mut tree_sampling),
        ("STM reserve price", &mut reserve_price),
    ];
    let mut checks = Vec::new();
    for (name, run) in primary {
        if selected(name) {
            checks.push(run());
        }
    }
    println!();
    let mut failed = 0;
    for c in &checks {
        println!("{} [primary] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.pass);
    }
    // reported alongside, not primary criteria; they reuse the chain runs
    if !runs.is_empty() {
        for c in [efficiency_ratio(&runs), mean_orderings(&runs)] {
            println!("{} [reported] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    println!("{} of {} primary criteria pass", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
