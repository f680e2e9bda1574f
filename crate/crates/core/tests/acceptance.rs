//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cyclecover::assembly::{cover_pipeline, extend_matching_bipartite, PipelineConfig};
use cyclecover::balancing::{dag_path_decomposition, vizing_matching, BalancerConfig};
use cyclecover::digraph::{BipartiteView, Digraph};
use cyclecover::expansion::{is_bipartite_robust_expander, CheckMode, ExpansionParams};
use cyclecover::flow::max_flow_integer;
use cyclecover::instances::{generate, jackson_extremal, random_regular_digraph, Family, InstanceSpec};
use cyclecover::jackson::{verify_jackson, JacksonMode};
use cyclecover::partition::CellPartition;
use cyclecover::paths::{contract, PathSystem};
use cyclecover::rational::ratio;
use cyclecover::solvers::{hamilton_cycle_exact, min_cycle_cover_exact, one_factor_exists};
use cyclecover::suites::{random_dag, random_multigraph, random_network, run_suite, Suite};

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; over the time limit")),
        Err(e) => (false, e),
    };
    println!(
        "{} {:>2} {:<32} {:>8.2}s / {:>4}s  {}",
        if pass { "PASS" } else { "FAIL" },
        id,
        name,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        detail
    );
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn tightness_oriented() -> Verdict {
    for size in [5, 7] {
        let g = generate(&InstanceSpec::sized(Family::TwoTournaments, size)).unwrap();
        let d = g.regular_degree().unwrap();
        let bound = g.n() / (2 * d + 1);
        let cover = min_cycle_cover_exact(&g, 16).unwrap().unwrap();
        ensure(common::is_valid_cover(&g, cover.cover.cycles(), true), || "invalid witness".into())?;
        ensure(cover.count == 2 && bound == 2, || format!("size {size}: count {} bound {bound}", cover.count))?;
        ensure(hamilton_cycle_exact(&g, 24).unwrap().is_none(), || format!("size {size}: Hamilton cycle found"))?;
    }
    Ok("two-tournaments(5,5), (7,7): min cover 2 = floor(n/(2d+1)), no Hamilton cycle".into())
}

fn tightness_digraph() -> Verdict {
    let mut seen = Vec::new();
    for b in [2, 3] {
        for d in [3, 4] {
            let g = generate(&InstanceSpec { d, blocks: b, ..InstanceSpec::new(Family::CompleteDigraphUnion) }).unwrap();
            let cover = min_cycle_cover_exact(&g, 16).unwrap().unwrap();
            ensure(common::is_valid_cover(&g, cover.cover.cycles(), true), || "invalid witness".into())?;
            ensure(cover.count == b && g.n() / (d + 1) == b, || format!("b={b} d={d}: count {}", cover.count))?;
            seen.push(format!("{b}x{}", d + 1));
        }
    }
    Ok(format!("min cover = b = n/(d+1) for {}", seen.join(", ")))
}

fn jackson() -> Verdict {
    let mut parts = Vec::new();
    for n in 7..=13 {
        let run = if n <= 8 {
            verify_jackson(n, 3, JacksonMode::Enumerate, u64::MAX, 0, 0).unwrap()
        } else {
            verify_jackson(n, 3, JacksonMode::Sample, 1000, n as u64, 10 * n * 3).unwrap()
        };
        if let Some(c) = run.counterexamples.first() {
            return Err(format!("n={n}: non-Hamiltonian instance #{}:\n{}", c.id, c.edge_list));
        }
        ensure(run.passed() && !run.budget_exhausted, || format!("n={n}: incomplete run"))?;
        ensure(n <= 8 || run.instances == 1000, || format!("n={n}: only {} instances", run.instances))?;
        parts.push(format!("n={n}:{}{}", run.instances, if n <= 8 { "(all)" } else { "" }));
    }
    Ok(format!("all Hamiltonian; {}", parts.join(" ")))
}

fn flow_duality() -> Verdict {
    for seed in 0..200 {
        let net = random_network(&mut ChaCha8Rng::seed_from_u64(1000 + seed));
        let mf = max_flow_integer(&net).map_err(|e| e.to_string())?;
        let cut = common::min_cut_by_subsets(&net);
        ensure(cut == Some(mf.value), || format!("network {seed}: flow {} vs cut {cut:?}", mf.value))?;
        mf.flow.validate(&net).map_err(|e| format!("network {seed}: {e}"))?;
    }
    Ok("200 networks: max flow = brute-force min cut".into())
}

fn balance_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut partitions = 0;
    for t in 0..100 {
        let n = rng.gen_range(2..=30);
        let d = rng.gen_range(1..n.min(10));
        let g = random_regular_digraph(n, d, t, false).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let k = rng.gen_range(1..=4);
            let cells = (0..n).map(|_| (rng.gen_range(0..k), rng.gen_range(0..k))).collect();
            let p = CellPartition::from_assignment(k, cells).unwrap();
            let r = common::balance_residuals(&g, &p, d);
            ensure(r.iter().all(|&x| x == 0), || format!("graph {t}: residuals {r:?}"))?;
            partitions += 1;
        }
    }
    Ok(format!("100 regular digraphs x {} partitions in total: residuals all 0", partitions))
}

/// A digraph with a planted 1-factor, paths cut from its cycles, and a
/// partition for which the paths are balanced.
fn contraction_instance(rng: &mut ChaCha8Rng) -> (Digraph, CellPartition, PathSystem) {
    let n = rng.gen_range(3..=24);
    let k = rng.gen_range(1..=4);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    // Cycles of length >= 2 along `perm`.
    let mut cycles = Vec::new();
    let mut at = 0;
    while at < n {
        let mut len = rng.gen_range(2..=(n - at).min(8).max(2));
        if n - at - len == 1 || len > n - at {
            len = n - at;
        }
        cycles.push(perm[at..at + len].to_vec());
        at += len;
    }
    let mut edges: Vec<(usize, usize)> =
        cycles.iter().flat_map(|c: &Vec<usize>| (0..c.len()).map(move |t| (c[t], c[(t + 1) % c.len()]))).collect();
    for _ in 0..n {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            edges.push((u, v));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let g = Digraph::from_edges(n, edges).unwrap();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for c in &cycles {
        if c.len() >= 3 && rng.gen_bool(0.7) {
            let len = rng.gen_range(2..c.len());
            paths.push(c[..len].to_vec());
        }
    }
    let q = PathSystem::new(paths).unwrap();
    let mut units: Vec<Vec<usize>> = (0..n).filter(|v| !q.vertices().contains(v)).map(|v| vec![v]).collect();
    units.extend(q.paths().iter().cloned());
    let rows: Vec<usize> = (0..units.len()).map(|_| rng.gen_range(0..k)).collect();
    let mut cols = rows.clone();
    for i in (1..cols.len()).rev() {
        cols.swap(i, rng.gen_range(0..=i));
    }
    let mut cells: Vec<(usize, usize)> = (0..n).map(|_| (rng.gen_range(0..k), rng.gen_range(0..k))).collect();
    for (u, unit) in units.iter().enumerate() {
        cells[unit[0]].1 = cols[u];
        cells[*unit.last().unwrap()].0 = rows[u];
    }
    (g, CellPartition::from_assignment(k, cells).unwrap(), q)
}

fn contraction_laws() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut nontrivial = 0;
    for t in 0..200 {
        let (g, p, q) = contraction_instance(&mut rng);
        ensure(q.is_p_balanced(&p), || format!("instance {t}: planted system not P-balanced"))?;
        let c = contract(&g, &p, &q).map_err(|e| e.to_string())?;
        ensure(c.partition.is_balanced(), || format!("instance {t}: contracted partition unbalanced"))?;
        let f = one_factor_exists(&c.graph).ok_or(format!("instance {t}: no 1-factor after contraction"))?;
        let lifted = c.lift(&f).map_err(|e| e.to_string())?;
        ensure(lifted.count() == f.count(), || format!("instance {t}: cycle count changed"))?;
        ensure(common::is_valid_cover(&g, lifted.cycles(), true), || format!("instance {t}: lifted cover invalid"))?;
        let lifted_edges: Vec<_> = lifted.edges().collect();
        ensure(q.edges().all(|e| lifted_edges.contains(&e)), || format!("instance {t}: lift misses a path edge"))?;
        nontrivial += usize::from(!q.is_empty());
    }
    Ok(format!("200 instances ({nontrivial} with non-empty Q): balanced, count kept, Q contained"))
}

fn dag_decomposition() -> Verdict {
    for t in 0..200 {
        let h = random_dag(&mut ChaCha8Rng::seed_from_u64(7000 + t));
        let paths = dag_path_decomposition(&h).map_err(|e| e.to_string())?;
        let expected: usize = (0..h.n()).map(|v| h.out_degree(v).abs_diff(h.in_degree(v))).sum::<usize>() / 2;
        let mut used: Vec<_> = paths.iter().flat_map(|p| p.windows(2).map(|w| (w[0], w[1]))).collect();
        used.sort_unstable();
        ensure(paths.len() == expected, || format!("dag {t}: {} paths, expected {expected}", paths.len()))?;
        ensure(used == h.edges().collect::<Vec<_>>(), || format!("dag {t}: edges not partitioned"))?;
    }
    Ok("200 DAGs: path count = sum |d+ - d-| / 2, exact edge partition".into())
}

fn vizing() -> Verdict {
    for t in 0..200 {
        let h = random_multigraph(&mut ChaCha8Rng::seed_from_u64(8000 + t));
        let (col, matching) = vizing_matching(&h).map_err(|e| e.to_string())?;
        let bound = h.max_degree() + h.multiplicity();
        // Properness recounted edge by edge.
        for (a, &(u, v)) in h.edges.iter().enumerate() {
            for (b, &(x, y)) in h.edges.iter().enumerate().skip(a + 1) {
                let share = u == x || u == y || v == x || v == y;
                ensure(!share || col.colors[a] != col.colors[b], || format!("multigraph {t}: edges {a}, {b} clash"))?;
            }
        }
        let used: std::collections::BTreeSet<_> = col.colors.iter().collect();
        ensure(used.len() <= bound, || format!("multigraph {t}: {} colours > {bound}", used.len()))?;
        ensure(matching.len() * bound >= h.edges.len(), || format!("multigraph {t}: matching too small"))?;
    }
    Ok("200 multigraphs: proper, <= Delta + mu colours, matching >= e/(Delta + mu)".into())
}

fn matching_extension() -> Verdict {
    let k44: Vec<_> = (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let view = BipartiteView::new((0..4).collect(), (4..8).collect(), k44);
    let m1: Vec<_> = (0..4).map(|i| (i, (i + 1) % 4)).collect();
    let two: Vec<_> = (0..6).flat_map(|i| (0..6).filter(move |&j| j / 3 == i / 3).map(move |j| (i, j))).collect();
    let view2 = BipartiteView::new((0..6).collect(), (6..12).collect(), two);
    let m2: Vec<_> = (0..6).map(|i| (i, i)).collect();
    let mut counts = Vec::new();
    for (v, m, expected) in [(&view, &m1, 1), (&view2, &m2, 2)] {
        let ext = extend_matching_bipartite(v, m).map_err(|e| e.to_string())?;
        let l = v.left.len();
        let mut covered = vec![false; 2 * l];
        for c in &ext.cycles {
            for (t, &x) in c.iter().enumerate() {
                let y = c[(t + 1) % c.len()];
                let (a, b) = if x < l { (x, y - l) } else { (y, x - l) };
                ensure(v.has_edge(a, b) && !covered[x], || format!("bad cycle {c:?}"))?;
                covered[x] = true;
            }
        }
        ensure(covered.iter().all(|&c| c), || "cover misses a vertex".into())?;
        for &(i, j) in m.iter() {
            let hit = ext.cycles.iter().any(|c| {
                (0..c.len()).any(|t| {
                    let (x, y) = (c[t], c[(t + 1) % c.len()]);
                    (x, y) == (i, l + j) || (x, y) == (l + j, i)
                })
            });
            ensure(hit, || format!("matching edge ({i}, {j}) missing"))?;
        }
        ensure(ext.count == expected, || format!("expected {expected} cycles, got {}", ext.count))?;
        counts.push(ext.count);
    }
    ensure(counts[1] == 12 / (2 * 3), || "second count is not n/2d".into())?;
    Ok(format!("K44-M: {} cycle, 2xK33: {} cycles = n/2d; both contain M", counts[0], counts[1]))
}

fn complete(range: std::ops::Range<usize>) -> Vec<(usize, usize)> {
    range.clone().flat_map(|u| range.clone().filter(move |&v| v != u).map(move |v| (u, v))).collect()
}

struct PipelineCase {
    name: String,
    g: Digraph,
    p: CellPartition,
    cfg: PipelineConfig,
}

fn labels_by_block(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat(b).take(s)).collect()
}

fn case(name: String, g: Digraph, p: CellPartition) -> PipelineCase {
    PipelineCase { name, g, p, cfg: PipelineConfig { hamilton_cap: 60, ..PipelineConfig::default() } }
}

/// `b` complete digraphs on `m` vertices in a ring: bridge vertex `x_t`
/// sends to block `t` and receives from block `t + 1`, and sits in cell `(t, t + 1)`.
fn bridged_ring(b: usize, m: usize) -> (Digraph, CellPartition) {
    let n = b * (m + 1);
    let block = |t: usize| (t % b) * m..(t % b) * m + m;
    let mut edges = Vec::new();
    let mut cells = vec![(0, 0); n];
    for t in 0..b {
        edges.extend(complete(block(t)));
        block(t).for_each(|v| cells[v] = (t, t));
        let x = b * m + t;
        cells[x] = (t, (t + 1) % b);
        for v in block(t) {
            edges.push((x, v));
        }
        for v in block(t + 1) {
            edges.push((v, x));
        }
    }
    (Digraph::from_edges(n, edges).unwrap(), CellPartition::from_assignment(b, cells).unwrap())
}

/// Parts of size `s` (complete digraphs each) linked by a perfect matching
/// from part `t` to part `t + 1`; a near-extremal diagonal instance.
fn linked_cliques(parts: usize, s: usize) -> (Digraph, CellPartition) {
    let n = parts * s;
    let mut edges = Vec::new();
    for t in 0..parts {
        edges.extend(complete(t * s..t * s + s));
        for i in 0..s {
            edges.push((t * s + i, ((t + 1) % parts) * s + (i + 1) % s));
        }
    }
    let labels: Vec<usize> = (0..n).map(|v| v / s).collect();
    (Digraph::from_edges(n, edges).unwrap(), CellPartition::from_labels(parts, &labels).unwrap())
}

fn pipeline_cases() -> Vec<PipelineCase> {
    let mut cases = Vec::new();
    for (b, d) in [(1, 4), (2, 3), (2, 5), (3, 4), (4, 7), (5, 11)] {
        let g = generate(&InstanceSpec { d, blocks: b, ..InstanceSpec::new(Family::CompleteDigraphUnion) }).unwrap();
        let p = CellPartition::from_labels(b, &labels_by_block(&vec![d + 1; b])).unwrap();
        cases.push(case(format!("complete-union {b}x{}", d + 1), g, p));
    }
    for size in [3, 5, 7, 9, 13] {
        let g = generate(&InstanceSpec::sized(Family::TwoTournaments, size)).unwrap();
        let p = CellPartition::from_labels(2, &labels_by_block(&[size, size])).unwrap();
        cases.push(case(format!("two-tournaments {size}"), g, p));
    }
    for size in [9, 15, 29] {
        let g = generate(&InstanceSpec::sized(Family::RegularTournament, size)).unwrap();
        cases.push(case(format!("tournament {size}"), g, CellPartition::from_labels(1, &vec![0; size]).unwrap()));
    }
    for (family, size) in [(Family::CliqueMinusMatchingOriented, 8), (Family::CliqueMinusHamiltonOriented, 9)] {
        let g = generate(&InstanceSpec { blocks: 2, ..InstanceSpec::sized(family, size) }).unwrap();
        let p = CellPartition::from_labels(2, &labels_by_block(&[size, size])).unwrap();
        cases.push(case(format!("{} 2x{size}", family.name()), g, p));
    }
    for n in [13, 15, 16, 22] {
        let g = jackson_extremal(n).unwrap();
        let comps = g.strong_components();
        let mut labels = vec![0; n];
        for (c, comp) in comps.iter().enumerate() {
            comp.iter().for_each(|&v| labels[v] = c);
        }
        let p = CellPartition::from_labels(2, &labels).unwrap();
        cases.push(case(format!("jackson-extremal {n}"), g, p));
    }
    for (b, m) in [(2, 4), (3, 5), (4, 6), (5, 10)] {
        let (g, p) = bridged_ring(b, m);
        cases.push(case(format!("bridged ring {b}x{m}"), g, p));
    }
    for (parts, s) in [(2, 3), (3, 3)] {
        let (g, p) = linked_cliques(parts, s);
        cases.push(case(format!("linked cliques {parts}x{s}"), g, p));
    }
    for m in [5, 7] {
        // Two complete digraphs, one vertex of the first assigned to column 1.
        let g = Digraph::from_edges(2 * m, complete(0..m).into_iter().chain(complete(m..2 * m))).unwrap();
        let mut cells: Vec<(usize, usize)> = (0..2 * m).map(|v| (v / m, v / m)).collect();
        cells[m - 1] = (0, 1);
        let p = CellPartition::from_assignment(2, cells).unwrap();
        let mut c = case(format!("shifted blocks 2x{m}"), g, p);
        c.cfg.balancer = BalancerConfig { theta: ratio(1, 2), ..BalancerConfig::with_gamma(ratio(1, 8)) };
        cases.push(c);
    }
    for (n, d, seed) in [(16, 8, 1), (30, 15, 2), (40, 20, 3)] {
        let g = random_regular_digraph(n, d, seed, false).unwrap();
        cases.push(case(format!("random regular {n}/{d}"), g, CellPartition::from_labels(1, &vec![0; n]).unwrap()));
    }
    cases
}

fn pipeline() -> Verdict {
    let cases = pipeline_cases();
    let mut exact_checked = 0;
    let mut lines = Vec::new();
    for c in &cases {
        ensure(c.g.n() <= 60, || format!("{}: too large", c.name))?;
        let out = cover_pipeline(&c.g, Some(&c.p), &c.cfg).map_err(|e| format!("{}: {e}", c.name))?;
        ensure(common::is_valid_cover(&c.g, out.cover.cycles(), true), || format!("{}: invalid cover", c.name))?;
        ensure(out.cover.count() == out.report.skeleton_components, || {
            format!("{}: {} cycles vs {} components", c.name, out.cover.count(), out.report.skeleton_components)
        })?;
        if c.g.n() <= 16 {
            let exact = min_cycle_cover_exact(&c.g, 16).unwrap().ok_or(format!("{}: no cover", c.name))?;
            ensure(exact.count <= out.cover.count(), || format!("{}: exact {} above pipeline", c.name, exact.count))?;
            exact_checked += 1;
        }
        lines.push(format!("{}={}", c.name, out.cover.count()));
    }
    ensure(cases.len() >= 20, || format!("only {} instances", cases.len()))?;
    Ok(format!("{} instances, {exact_checked} cross-checked exactly: {}", cases.len(), lines.join(", ")))
}

fn expanders() -> Verdict {
    let params = ExpansionParams::new(ratio(1, 10), ratio(1, 10)).unwrap();
    let blocks: Vec<_> = (0..10).flat_map(|i| (0..10).filter(move |&j| j / 5 == i / 5).map(move |j| (i, j))).collect();
    let two = BipartiteView::new((0..10).collect(), (10..20).collect(), blocks);
    let check = is_bipartite_robust_expander(&two, &params, CheckMode::Exhaustive).map_err(|e| e.to_string())?;
    ensure(!check.holds && check.exact && check.witness == Some(vec![0, 1, 2, 3, 4]), || format!("two blocks: {check:?}"))?;
    let mut positives = 0;
    for l in 1..=12 {
        for r in 1..=12 {
            let all = (0..l).flat_map(|i| (0..r).map(move |j| (i, j))).collect();
            let view = BipartiteView::new((0..l).collect(), (l..l + r).collect(), all);
            let got = is_bipartite_robust_expander(&view, &params, CheckMode::Exhaustive).map_err(|e| e.to_string())?;
            // Hand analysis: every mid-size S has RN(S) = B, so the check
            // holds iff r >= s + l/10 for the largest mid size s, or no mid size exists.
            let lo = (l as f64 * 0.1).ceil() as usize;
            let hi = (l as f64 * 0.9 + 1e-9).floor() as usize;
            let expected = lo > hi || 10 * r >= 10 * hi + l;
            ensure(got.holds == expected, || format!("K_{{{l},{r}}}: got {} expected {expected}", got.holds))?;
            positives += usize::from(got.holds);
        }
    }
    let suite = run_suite(Suite::AlterationRobustness, 11, 6);
    ensure(suite.passed() && suite.checked > 0, || format!("alteration suite: {:?}", suite.violations))?;
    Ok(format!(
        "two-block witness {{0..4}}; complete bipartite verdicts match ({positives} positive); alteration suite {}/{} at (1/10, 2/5)",
        suite.checked, suite.iters
    ))
}

fn main() {
    let results = [
        criterion(1, "tightness, oriented", secs(5), tightness_oriented),
        criterion(2, "tightness, digraph", secs(5), tightness_digraph),
        criterion(3, "oriented Hamiltonicity d=3", secs(600), jackson),
        criterion(4, "flow duality", secs(30), flow_duality),
        criterion(5, "regular balance identity", secs(30), balance_identity),
        criterion(6, "contraction laws", secs(60), contraction_laws),
        criterion(7, "DAG decomposition", secs(10), dag_decomposition),
        criterion(8, "Vizing colouring", secs(10), vizing),
        criterion(9, "matching extension", secs(5), matching_extension),
        criterion(10, "end-to-end pipeline", secs(300), pipeline),
        criterion(11, "expander verifiers", secs(120), expanders),
    ];
    let failed = results.iter().filter(|&&r| !r).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
