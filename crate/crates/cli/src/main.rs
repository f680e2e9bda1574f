use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use cyclecover::assembly::{cover_pipeline, AssemblyError, PipelineConfig};
use cyclecover::digraph::Digraph;
use cyclecover::instances::{generate, Family, InstanceError, InstanceSpec};
use cyclecover::jackson::{verify_jackson, JacksonError, JacksonMode};
use cyclecover::partition::CellPartition;
use cyclecover::paths::CycleCover;
use cyclecover::solvers::{min_cycle_cover_exact, COVER_CAP};
use cyclecover::suites::{run_suite, Suite};

const WORKERS_ENV: &str = "CYCLECOVER_WORKERS";

#[derive(Parser)]
#[command(name = "cyclecover", version, about = "Cycle covers of regular digraphs")]
struct Cli {
    /// Emit the run report as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance: an edge-list file plus a `.spec.json` sidecar.
    Gen(GenArgs),
    /// Find a cycle cover of an edge-list instance and compare it with the bounds.
    Solve(SolveArgs),
    /// Check Hamiltonicity of d-regular oriented graphs on n <= 4d + 1 vertices.
    VerifyJackson(JacksonArgs),
    /// Run a randomised invariant suite.
    Props(PropsArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: String,
    /// Tournament or clique size, depending on the family.
    #[arg(long, visible_alias = "m", default_value_t = 0)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge-list path; standard output when absent (no sidecar).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
#[group(id = "method", required = true, multiple = false)]
struct Method {
    #[arg(long, group = "method")]
    exact: bool,
    #[arg(long, group = "method")]
    pipeline: bool,
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[command(flatten)]
    method: Method,
    /// Cell partition in JSON form (pipeline only).
    #[arg(long, requires = "pipeline")]
    partition: Option<PathBuf>,
    /// Vertex cap of the exact solver.
    #[arg(long, default_value_t = COVER_CAP)]
    cap: usize,
    /// Vertex cap of the per-part Hamilton search in the pipeline.
    #[arg(long, default_value_t = 24)]
    hamilton_cap: usize,
    /// Print the cycles.
    #[arg(long)]
    cycles: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Enumerate,
    Sample,
}

#[derive(Args)]
struct JacksonArgs {
    #[arg(long)]
    d: usize,
    /// `a..b`, `a-b` (inclusive) or a single `n`.
    #[arg(long)]
    n_range: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Sample)]
    mode: ModeArg,
    /// Samples per n, or the enumeration cap per n.
    #[arg(long, default_value_t = 1000)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Chain moves between samples; defaults to 10nd.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct PropsArgs {
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_digest: Option<String>,
    parameters: Value,
    stages: Vec<Stage>,
    verdicts: Vec<Check>,
    result: Value,
}

#[derive(Serialize)]
struct Stage {
    name: String,
    outcome: String,
    millis: f64,
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    /// The re-check backing the verdict.
    checked_by: String,
}

impl RunReport {
    fn new(command: &'static str, parameters: Value) -> Self {
        RunReport { command, input_digest: None, parameters, stages: Vec::new(), verdicts: Vec::new(), result: Value::Null }
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T, outcome: impl FnOnce(&T) -> String) -> T {
        let start = Instant::now();
        let out = f();
        let millis = start.elapsed().as_secs_f64() * 1e3;
        self.stages.push(Stage { name: name.into(), outcome: outcome(&out), millis });
        out
    }

    fn check(&mut self, name: &str, pass: bool, checked_by: &str) {
        self.verdicts.push(Check { name: name.into(), pass, checked_by: checked_by.into() });
    }

    fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|c| c.pass)
    }
}

/// A failure carrying its exit code: 1 violation, 2 usage, 3 resource cap.
#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

/// A completed run: its report, text lines and exit code.
struct Outcome {
    report: RunReport,
    lines: Vec<String>,
    code: u8,
}

fn done(report: RunReport, lines: Vec<String>, code: u8) -> Result<Outcome, Failure> {
    Ok(Outcome { report, lines, code })
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn capped(msg: impl Into<String>) -> Failure {
    Failure { code: 3, msg: msg.into() }
}

fn violation(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

fn digest(bytes: &[u8]) -> String {
    format!("sha256:{:x}", Sha256::digest(bytes))
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_new(path: &Path, contents: &[u8], force: bool) -> Result<(), Failure> {
    if path.exists() && !force {
        return Err(usage(format!("{} exists; pass --force to overwrite", path.display())));
    }
    fs::write(path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".spec.json");
    PathBuf::from(s)
}

fn cmd_gen(a: &GenArgs) -> Result<Outcome, Failure> {
    let family = Family::parse(&a.family).ok_or_else(|| {
        let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
        usage(format!("unknown family {:?}; expected one of {}", a.family, names.join(", ")))
    })?;
    let spec = InstanceSpec { family, n: a.n, d: a.d, size: a.size, blocks: a.blocks, seed: a.seed };
    let params = serde_json::to_value(&spec).expect("spec serialises");
    let mut report = RunReport::new("gen", params);
    let g = report.stage("generate", || generate(&spec), |r| match r {
        Ok(g) => format!("{} vertices, {} edges", g.n(), g.m()),
        Err(e) => e.to_string(),
    });
    let g = g.map_err(|e| match e {
        InstanceError::RetryBudget(_) => capped(e.to_string()),
        e => usage(e.to_string()),
    })?;
    let text = g.to_edge_list();
    report.input_digest = Some(digest(text.as_bytes()));
    let mut lines = Vec::new();
    match &a.out {
        Some(out) => {
            let side = sidecar(out);
            if !a.force {
                for p in [out, &side] {
                    if p.exists() {
                        return Err(usage(format!("{} exists; pass --force to overwrite", p.display())));
                    }
                }
            }
            let spec_json = serde_json::to_string_pretty(&spec).expect("spec serialises") + "\n";
            write_new(out, text.as_bytes(), a.force)?;
            write_new(&side, spec_json.as_bytes(), a.force)?;
            lines.push(format!("wrote {} ({} vertices, {} edges)", out.display(), g.n(), g.m()));
            lines.push(format!("wrote {}", side.display()));
            report.result = json!({ "n": g.n(), "m": g.m(), "out": out, "spec": side });
        }
        None => {
            lines.push(text.trim_end().to_string());
            report.result = json!({ "n": g.n(), "m": g.m(), "edge_list": text });
        }
    }
    done(report, lines, 0)
}

fn assembly_failure(e: AssemblyError) -> Failure {
    match e {
        AssemblyError::PartCap { .. } | AssemblyError::Solver(_) => capped(e.to_string()),
        AssemblyError::Unbalanced | AssemblyError::Partition(_) | AssemblyError::Balancing(_) | AssemblyError::Graph(_) => usage(e.to_string()),
        e => violation(e.to_string()),
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<Outcome, Failure> {
    let bytes = read(&a.file)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| usage("instance is not UTF-8"))?;
    let g = Digraph::parse_edge_list(&text).map_err(|e| usage(format!("{}: {e}", a.file.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let partition = match &a.partition {
        Some(p) => {
            let pb = read(p)?;
            hasher.update(&pb);
            let part: CellPartition =
                serde_json::from_slice(&pb).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            if part.n() != g.n() {
                return Err(usage(format!("partition covers {} vertices, instance has {}", part.n(), g.n())));
            }
            Some(part)
        }
        None => None,
    };
    let mode = if a.method.exact { "exact" } else { "pipeline" };
    let params = json!({
        "file": a.file, "mode": mode, "partition": a.partition, "cap": a.cap, "hamilton_cap": a.hamilton_cap,
    });
    let mut report = RunReport::new("solve", params);
    report.input_digest = Some(format!("sha256:{:x}", hasher.finalize()));
    let d = g.regular_degree();
    let oriented = g.is_oriented();

    let (cover, extra): (CycleCover, Value) = if a.method.exact {
        let r = report.stage("exact", || min_cycle_cover_exact(&g, a.cap), |r| match r {
            Ok(Some(c)) => format!("{} cycles, {} search nodes", c.count, c.nodes),
            Ok(None) => "no cycle cover".into(),
            Err(e) => e.to_string(),
        });
        match r.map_err(|e| capped(e.to_string()))? {
            Some(c) => (c.cover, json!({ "search_nodes": c.nodes })),
            None => {
                report.check("cycle cover exists", true, "exhaustive 1-factor search");
                report.result = json!({ "count": Value::Null });
                return done(report, vec!["no cycle cover exists".into()], 0);
            }
        }
    } else {
        let cfg = PipelineConfig { hamilton_cap: a.hamilton_cap, ..PipelineConfig::default() };
        let r = report.stage("pipeline", || cover_pipeline(&g, partition.as_ref(), &cfg), |r| match r {
            Ok(o) => format!("{} cycles over {} skeleton components", o.cover.count(), o.report.skeleton_components),
            Err(e) => e.to_string(),
        });
        let out = r.map_err(assembly_failure)?;
        report.check(
            "count equals skeleton components",
            out.cover.count() == out.report.skeleton_components,
            "cycle count recomputed from the cover",
        );
        (out.cover, serde_json::to_value(&out.report).expect("report serialises"))
    };

    let valid = report.stage("validate", || cover.validate(&g, true), |r| match r {
        Ok(()) => "PASS".into(),
        Err(e) => format!("FAIL: {e}"),
    });
    report.check("cover is valid", valid.is_ok(), "spanning disjoint cycles re-checked against the edge set");
    let count = cover.count();
    let n = g.n();
    let digraph_bound = d.map(|d| n / (d + 1));
    let oriented_bound = d.map(|d| n / (2 * d + 1));
    let bound = if oriented { oriented_bound } else { digraph_bound };
    let verdict = match bound {
        Some(b) if count == b => "TIGHT",
        Some(b) if count < b => "BELOW",
        Some(_) => "ABOVE",
        None => "NOT-REGULAR",
    };
    let mut lines = vec![
        format!("instance {} ({})", a.file.display(), report.input_digest.as_deref().unwrap_or("")),
        format!("mode {mode}"),
        format!(
            "n {n}  m {}  d {}  oriented {}",
            g.m(),
            d.map_or("-".into(), |d| d.to_string()),
            if oriented { "yes" } else { "no" }
        ),
        format!("count {count}"),
        format!("bound n/(d+1) {}", digraph_bound.map_or("-".into(), |b| b.to_string())),
        format!("bound n/(2d+1) {}", oriented_bound.map_or("-".into(), |b| b.to_string())),
    ];
    for c in &report.verdicts {
        lines.push(format!("check {}: {}", c.name, if c.pass { "PASS" } else { "FAIL" }));
    }
    lines.push(format!("verdict {verdict}"));
    if a.cycles {
        for c in cover.cycles() {
            lines.push(c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
        }
    }
    report.result = json!({
        "n": n, "m": g.m(), "d": d, "oriented": oriented, "count": count,
        "bound_digraph": digraph_bound, "bound_oriented": oriented_bound, "verdict": verdict,
        "cycles": cover.cycles(), "details": extra,
    });
    let code = if report.all_pass() { 0 } else { 1 };
    done(report, lines, code)
}

fn parse_range(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || usage(format!("bad --n-range {s:?}; expected a..b, a-b or n"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let (lo, hi) = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        (num(a)?, num(b)?)
    } else if let Some((a, b)) = s.split_once('-') {
        (num(a)?, num(b)?)
    } else {
        let n = num(s)?;
        (n, n)
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn cmd_jackson(a: &JacksonArgs) -> Result<Outcome, Failure> {
    let (lo, hi) = parse_range(&a.n_range)?;
    if a.d <= 2 {
        return Err(usage(format!("d must exceed 2, got {}", a.d)));
    }
    if hi > 4 * a.d + 1 {
        return Err(usage(format!("n = {hi} exceeds 4d + 1 = {}", 4 * a.d + 1)));
    }
    let mode = match a.mode {
        ModeArg::Enumerate => JacksonMode::Enumerate,
        ModeArg::Sample => JacksonMode::Sample,
    };
    let params = json!({
        "d": a.d, "n_range": [lo, hi], "mode": mode, "budget": a.budget, "seed": a.seed, "steps": a.steps,
    });
    let mut report = RunReport::new("verify-jackson", params);
    let mut runs = Vec::new();
    let mut lines = Vec::new();
    for n in lo..=hi {
        let steps = a.steps.unwrap_or(10 * n * a.d);
        let seed = a.seed.wrapping_add(n as u64);
        let run = report.stage(&format!("n={n}"), || verify_jackson(n, a.d, mode, a.budget, seed, steps), |r| match r {
            Ok(r) => format!("{} instances, {} Hamiltonian", r.instances, r.hamiltonian),
            Err(e) => e.to_string(),
        });
        let run = run.map_err(|e| match e {
            JacksonError::Instance(InstanceError::RetryBudget(_)) => capped(e.to_string()),
            e => usage(e.to_string()),
        })?;
        lines.push(format!(
            "n={n} d={} instances={} hamiltonian={} counterexamples={}{}",
            a.d,
            run.instances,
            run.hamiltonian,
            run.counterexamples.len(),
            if run.budget_exhausted { " budget-exhausted" } else { "" }
        ));
        for c in &run.counterexamples {
            lines.push(format!("counterexample n={n} id={}", c.id));
            lines.push(c.edge_list.trim_end().to_string());
        }
        report.check(&format!("n={n} all Hamiltonian"), run.passed(), "exact Hamilton search per instance");
        runs.push(run);
    }
    let exhausted = runs.iter().any(|r| r.budget_exhausted);
    report.result = json!({ "runs": runs, "budget_exhausted": exhausted });
    let code = if !report.all_pass() {
        1
    } else if exhausted {
        lines.push("budget exhausted: partial result".into());
        3
    } else {
        0
    };
    done(report, lines, code)
}

fn cmd_props(a: &PropsArgs) -> Result<Outcome, Failure> {
    let suite = Suite::parse(&a.suite).ok_or_else(|| {
        let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
        usage(format!("unknown suite {:?}; expected one of {}", a.suite, names.join(", ")))
    })?;
    let mut report = RunReport::new("props", json!({ "suite": suite, "seed": a.seed, "iters": a.iters }));
    let r = report.stage(suite.name(), || run_suite(suite, a.seed, a.iters), |r| {
        format!("{} checked, {} violations", r.checked, r.violations.len())
    });
    report.check(suite.name(), r.passed(), "suite oracle per iteration");
    let mut lines =
        vec![format!("suite {} seed {} iters {} checked {} violations {}", suite.name(), a.seed, a.iters, r.checked, r.violations.len())];
    lines.extend(r.violations.iter().map(|v| format!("violation: {v}")));
    lines.push(if r.passed() { "PASS".into() } else { "FAIL".into() });
    report.result = serde_json::to_value(&r).expect("suite report serialises");
    let code = if r.passed() { 0 } else { 1 };
    done(report, lines, code)
}

fn render(report: &RunReport, lines: &[String], json: bool) -> String {
    if json {
        return serde_json::to_string_pretty(report).expect("report serialises");
    }
    let mut out = lines.join("\n");
    for s in &report.stages {
        out.push_str(&format!("\ntime {} {:.1}ms", s.name, s.millis));
    }
    out
}

fn configure_workers() -> Result<(), Failure> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| usage(format!("{WORKERS_ENV} must be a positive integer")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::VerifyJackson(a) => cmd_jackson(a),
        Command::Props(a) => cmd_props(a),
    });
    match result {
        Ok(o) => {
            println!("{}", render(&o.report, &o.lines, cli.json));
            ExitCode::from(o.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
