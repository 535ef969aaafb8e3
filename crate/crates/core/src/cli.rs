//! Command-line front end. [`run`] is the whole program; the binary only
//! forwards `std::env::args` and exits with its code.

use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{canonical_instance, scaling_report, total_complexity, ComplexityReport, RRule, ScalingSpec};
use crate::builders::{
    build_kclique, build_kdistinctness, build_subgraph, generate, parse_edge_list, parse_values, Build, BuildOptions, Family, GenSpec,
    GraphInput, Input, Problem, ProblemInstance, SubgraphPattern,
};
use crate::emit::{graph_dot, graph_json, graph_text, parse_graph_json};
use crate::error::Error;
use crate::graph::{check_flow, validate_structure, FlowAssignment, LearningGraph, ValidationReport};
use crate::optimize::{
    balance, containment_exponent, evaluate, g_of_h, monotone_exponent, reference_point, stage_exponent_terms, g_table, g_table_text, BalanceSolution,
    MonomialTerm, GTableRow, Variables,
};
use crate::rational::{ceil_rational_power, parse_q, q, qi, Q};
use crate::symmetry::SymmetryGroup;

/// Monte-Carlo sample count used when `--samples` is given without a value.
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Parser, Debug)]
#[command(name = "learngraph", version, about = "Learning graphs for distinctness, clique and subgraph containment")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Exponents of the clique, path, cycle and star families.
    Gtable,
    /// g(H) and the containment exponent of a pattern (comma-separated
    /// patterns also give the monotone-property exponent).
    Exponent,
    /// Build a learning graph and the flow of one positive instance.
    Build,
    /// Structural and flow validation of a built (or `--graph`) learning graph.
    Verify,
    /// Stage-by-stage complexity report.
    Analyze,
    /// Balance the simplified complexity bound over r = n^α (and s = n^-β).
    Optimize,
    /// Speciality fits across sizes.
    Scaling,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Default)]
enum Emit {
    Json,
    Dot,
    #[default]
    Text,
}

#[derive(Args, Debug, Default)]
struct Opts {
    #[arg(long, global = true, value_parser = parse_family)]
    family: Option<Family>,
    #[arg(short = 'n', global = true)]
    n: Option<usize>,
    #[arg(short = 'k', global = true)]
    k: Option<usize>,
    #[arg(short = 'r', global = true)]
    r: Option<usize>,
    /// Sparsity threshold as NUM/DEN.
    #[arg(short = 's', global = true, value_parser = parse_rational)]
    s: Option<Q>,
    /// `r = ceil(n^ALPHA)` for scaling runs, as NUM/DEN.
    #[arg(long, global = true, value_parser = parse_rational)]
    alpha: Option<Q>,
    /// Edge-list file or a name such as triangle, K4, P3, C5, S3.
    #[arg(long, global = true)]
    pattern: Option<String>,
    /// Values file (distinctness) or edge-list file (graphs).
    #[arg(long, global = true)]
    instance: Option<String>,
    /// Learning-graph JSON to verify instead of building one.
    #[arg(long, global = true)]
    graph: Option<String>,
    /// gnp:P, planted:P, values:M or planted-values:M.
    #[arg(long, global = true)]
    gen: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    emit: Option<Emit>,
    #[arg(long = "cap-nodes", global = true)]
    cap_nodes: Option<u128>,
    #[arg(long = "cap-group", global = true)]
    cap_group: Option<u128>,
    /// Path samples for the sampled subgraph build.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "100000")]
    samples: Option<u64>,
    #[arg(long = "max-k", global = true)]
    max_k: Option<usize>,
    #[arg(long = "n-list", global = true, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// File of `key=value` lines supplying flags; explicit flags win.
    #[arg(long, global = true)]
    config: Option<String>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_rational(s: &str) -> Result<Q, String> {
    parse_q(s).map_err(|e| e.to_string())
}

enum Fail {
    /// Exit 2.
    Usage(String),
    /// Exit 1.
    Failed(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidParameter(_) | Error::WrongMode(_) => Fail::Usage(e.to_string()),
            _ => Fail::Failed(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail::Usage(msg.into())
}

/// What a command produced.
enum Output {
    Graph { lg: LearningGraph, flow: Option<FlowAssignment> },
    Report { json: String, text: String, ok: bool },
}

impl Output {
    fn report<T: Serialize>(value: &T, text: String) -> Self {
        Output::Report { json: serde_json::to_string_pretty(value).expect("report serializes"), text, ok: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub pattern: String,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub g: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub exponent: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub patterns: Vec<ExponentRow>,
    /// Monotone-property exponent over all listed patterns.
    #[serde(with = "crate::rational::serde_q")]
    pub monotone: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OptimizeReport {
    pub family: Family,
    pub k: usize,
    pub terms: Vec<MonomialTerm>,
    pub solution: BalanceSolution,
    #[serde(with = "crate::rational::serde_q")]
    pub reference_alpha: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub reference_beta: Q,
    /// Largest term exponent at the reference operating point.
    #[serde(with = "crate::rational::serde_q")]
    pub reference_value: Q,
}

fn fq(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Runs the program on `argv` (program name first), writing to stdout and
/// stderr. Returns the exit code: 0 success, 1 validation or feasibility
/// failure, 2 usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let emit = cli.opts.emit.unwrap_or_default();
    let result = execute(cli.command, &cli.opts, err).and_then(|o| render(o, emit));
    match result {
        Ok((text, ok)) => {
            let _ = out.write_all(text.as_bytes());
            if ok {
                0
            } else {
                1
            }
        }
        Err(Fail::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Fail::Failed(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

/// Splices `key=value` lines from `--config FILE` in front of the explicit
/// flags, so that later (explicit) occurrences override them.
fn with_config(argv: Vec<String>) -> std::result::Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = Some(argv.get(i + 1).ok_or("--config needs a file")?.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut extra = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("{path}:{}: expected key=value", no + 1))?;
        let key = key.trim();
        if key == "config" {
            return Err(format!("{path}:{}: nested config files are not supported", no + 1));
        }
        extra.push(if key.len() == 1 { format!("-{key}") } else { format!("--{key}") });
        extra.push(value.trim().to_string());
    }
    // Insert after the subcommand so global flags parse in its scope.
    let at = argv.iter().skip(1).position(|a| !a.starts_with('-')).map_or(argv.len(), |p| p + 2);
    let mut merged = argv[..at.min(argv.len())].to_vec();
    merged.extend(extra);
    merged.extend(argv[at.min(argv.len())..].iter().cloned());
    Ok(merged)
}

fn render(o: Output, emit: Emit) -> CliResult<(String, bool)> {
    match (o, emit) {
        (Output::Graph { lg, flow }, Emit::Json) => Ok((graph_json(&lg, flow.as_ref()) + "\n", true)),
        (Output::Graph { lg, .. }, Emit::Dot) => Ok((graph_dot(&lg), true)),
        (Output::Graph { lg, flow }, Emit::Text) => Ok((graph_text(&lg, flow.as_ref()), true)),
        (Output::Report { json, ok, .. }, Emit::Json) => Ok((json + "\n", ok)),
        (Output::Report { .. }, Emit::Dot) => Err(usage("dot output is only available for learning graphs")),
        (Output::Report { text, ok, .. }, Emit::Text) => Ok((text, ok)),
    }
}

fn execute(cmd: Command, o: &Opts, err: &mut dyn Write) -> CliResult<Output> {
    if o.samples.is_some() && o.seed.is_none() {
        return Err(usage("--samples needs --seed"));
    }
    match cmd {
        Command::Gtable => {
            let rows: Vec<GTableRow> = g_table(o.max_k.unwrap_or(6))?;
            Ok(Output::report(&rows, g_table_text(&rows)))
        }
        Command::Exponent => exponent(o),
        Command::Build => {
            let b = build(o, err)?;
            Ok(Output::Graph { lg: b.graph, flow: Some(b.flow) })
        }
        Command::Verify => verify(o, err),
        Command::Analyze => analyze(o, err),
        Command::Optimize => optimize(o),
        Command::Scaling => scaling(o),
    }
}

fn load_pattern(spec: &str) -> CliResult<SubgraphPattern> {
    if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec).map_err(|e| usage(format!("cannot read {spec}: {e}")))?;
        let (k, edges) = parse_edge_list(&text)?;
        Ok(SubgraphPattern::new(k, edges)?)
    } else {
        SubgraphPattern::from_name(spec).map_err(|_| usage(format!("`{spec}` is neither a pattern file nor a known pattern name")))
    }
}

fn require<T: Copy>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("missing {flag}")))
}

fn family(o: &Opts) -> CliResult<Family> {
    match o.family {
        Some(f) => Ok(f),
        None if o.pattern.is_some() => Ok(Family::Subgraph),
        None => Err(usage("missing --family")),
    }
}

/// `(k, pattern)` for a family: the pattern is the clique for `clique`.
fn shape(f: Family, o: &Opts) -> CliResult<(usize, Option<SubgraphPattern>)> {
    match f {
        Family::Kdist => Ok((require(o.k, "-k")?, None)),
        Family::Clique => {
            let k = require(o.k, "-k")?;
            Ok((k, Some(SubgraphPattern::clique(k)?)))
        }
        Family::Subgraph => {
            let p = load_pattern(o.pattern.as_deref().ok_or_else(|| usage("missing --pattern"))?)?;
            Ok((p.k(), Some(p)))
        }
    }
}

fn exponent(o: &Opts) -> CliResult<Output> {
    let spec = o.pattern.as_deref().ok_or_else(|| usage("missing --pattern"))?;
    let mut rows = Vec::new();
    let mut patterns = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let h = load_pattern(name)?;
        rows.push(ExponentRow { pattern: name.to_string(), k: h.k(), l: h.l(), m: h.m(), g: g_of_h(&h), exponent: containment_exponent(&h) });
        patterns.push(h);
    }
    let report = ExponentReport { monotone: monotone_exponent(&patterns)?, patterns: rows };
    let mut text = String::new();
    for r in &report.patterns {
        text += &format!("{}: k={} l={} m={} g={} exponent={}\n", r.pattern, r.k, r.l, r.m, fq(&r.g), fq(&r.exponent));
    }
    if report.patterns.len() > 1 {
        text += &format!("monotone exponent: {}\n", fq(&report.monotone));
    }
    Ok(Output::report(&report, text))
}

fn default_r(f: Family, k: usize, n: usize) -> usize {
    let ki = k as i64;
    match f {
        Family::Kdist => (ceil_rational_power(n as u64, &q(ki, ki + 1)) as usize).clamp(k, n.max(k)),
        _ => (ceil_rational_power(n as u64, &(qi(1) - q(1, ki))) as usize).clamp(k, n.saturating_sub(1).max(k)),
    }
}

fn instance(f: Family, k: usize, pattern: Option<&SubgraphPattern>, o: &Opts) -> CliResult<ProblemInstance> {
    let problem = match pattern {
        Some(p) => Problem::Containment(p.clone()),
        None => Problem::Distinctness { k },
    };
    if let Some(path) = &o.instance {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
        let input = match f {
            Family::Kdist => Input::Values(parse_values(&text)?),
            _ => {
                let (declared, edges) = parse_edge_list(&text)?;
                Input::Graph(GraphInput::from_edges(declared.max(o.n.unwrap_or(0)), edges)?)
            }
        };
        if let Some(n) = o.n {
            if input.len() != n {
                return Err(usage(format!("-n {n} but the instance has size {}", input.len())));
            }
        }
        return Ok(ProblemInstance::new(input, &problem)?);
    }
    let n = require(o.n, "-n")?;
    if let Some(g) = &o.gen {
        let spec: GenSpec = g.parse()?;
        let seed = require(o.seed, "--seed (required by --gen)")?;
        return Ok(ProblemInstance::new(generate(&spec, n, &problem, seed)?, &problem)?);
    }
    Ok(canonical_instance(f, k, pattern, n)?)
}

fn options(o: &Opts) -> BuildOptions {
    let mut opts = BuildOptions::default();
    if let Some(c) = o.cap_nodes {
        opts.node_cap = c;
    }
    if let (Some(samples), Some(seed)) = (o.samples, o.seed) {
        opts.sampling = Some((samples, seed));
    }
    opts
}

fn build(o: &Opts, err: &mut dyn Write) -> CliResult<Build> {
    let f = family(o)?;
    let (k, pattern) = shape(f, o)?;
    let inst = instance(f, k, pattern.as_ref(), o)?;
    if !inst.truth {
        return Err(Fail::Failed("instance is negative: no certificate exists".into()));
    }
    let n = inst.input.len();
    let r = o.r.unwrap_or_else(|| default_r(f, k, n));
    let opts = options(o);
    let b = match f {
        Family::Kdist => {
            if let Some(cap) = o.cap_nodes {
                let need = crate::builders::KDistinctness::node_estimate(n, k, r);
                if need > cap {
                    return Err(Error::CapExceeded { what: "learning graph (--cap-nodes)", needed: need.to_string(), cap: cap.to_string() }.into());
                }
            }
            build_kdistinctness(n, k, r, &inst)?
        }
        Family::Clique => build_kclique(n, k, r, &inst, &opts)?,
        Family::Subgraph => {
            let s = o.s.clone().unwrap_or_else(|| q(1, 2));
            build_subgraph(n, pattern.as_ref().expect("subgraph pattern"), r, &s, &inst, &opts)?
        }
    };
    if let Some(c) = &b.conditioning {
        if c.warning {
            let _ = writeln!(err, "warning: conditioning retains p = {} of the flow (K_actual = {} >= {})", fq(&c.p), fq(&c.k_actual), fq(&c.bound));
        }
    }
    if b.sampled {
        let _ = writeln!(err, "note: graph holds sampled paths only");
    }
    Ok(b)
}

fn verify(o: &Opts, err: &mut dyn Write) -> CliResult<Output> {
    let (lg, flow) = match &o.graph {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
            parse_graph_json(&text)?
        }
        None => {
            let b = build(o, err)?;
            (b.graph, Some(b.flow))
        }
    };
    let report = match &flow {
        Some(f) => check_flow(&lg, f)?,
        None => validate_structure(&lg),
    };
    let ok = report.is_valid();
    Ok(Output::Report { json: serde_json::to_string_pretty(&report).expect("report serializes"), text: validation_text(&report), ok })
}

fn validation_text(r: &ValidationReport) -> String {
    let mut out = if r.is_valid() { "valid\n".to_string() } else { format!("{} violation(s)\n", r.violations.len()) };
    for v in &r.violations {
        out += &format!("  {v}\n");
    }
    if !r.degenerate_stages.is_empty() {
        let s: Vec<String> = r.degenerate_stages.iter().map(usize::to_string).collect();
        out += &format!("degenerate stages: {}\n", s.join(", "));
    }
    if !r.stage_sums.is_empty() {
        let s: Vec<String> = r.stage_sums.iter().map(fq).collect();
        out += &format!("stage flow totals: {}\n", s.join(", "));
    }
    out
}

fn analyze(o: &Opts, err: &mut dyn Write) -> CliResult<Output> {
    let b = build(o, err)?;
    let mut group = SymmetryGroup::exhaustive(b.graph.universe);
    if let Some(c) = o.cap_group {
        group = group.with_cap(c);
    }
    let mut report: ComplexityReport = total_complexity(&[(&b.graph, &b.flow)], &group)?;
    report.conditioning = b.conditioning;
    let text = report.to_text();
    Ok(Output::report(&report, text))
}

fn optimize(o: &Opts) -> CliResult<Output> {
    let f = family(o)?;
    let (k, pattern) = shape(f, o)?;
    let (l, m, vars) = match (f, &pattern) {
        (Family::Subgraph, Some(p)) => (p.l(), p.m(), Variables::Both),
        _ => (0, 0, Variables::Alpha),
    };
    let terms = stage_exponent_terms(f, k, l, m)?;
    let solution = balance(&terms, vars)?;
    let (pa, pb) = reference_point(f, k, pattern.as_ref());
    let reference_value = evaluate(&terms, &pa, &pb)?;
    let report = OptimizeReport { family: f, k, terms, solution, reference_alpha: pa, reference_beta: pb, reference_value };
    Ok(Output::report(&report, optimize_text(&report)))
}

fn optimize_text(r: &OptimizeReport) -> String {
    let s = &r.solution;
    let beta = s.beta.as_ref().map_or_else(|| "0".to_string(), fq);
    let mut out = format!("alpha={} beta={} value={}\n", fq(&s.alpha), beta, fq(&s.value));
    out += &format!("{:<40} {:>10} {:>10}\n", "term", "exponent", "tight");
    let b = s.beta.clone().unwrap_or_default();
    for (i, t) in r.terms.iter().enumerate() {
        out += &format!("{:<40} {:>10} {:>10}\n", t.label, fq(&t.exponent(&s.alpha, &b)), if s.tight_indices.contains(&i) { "yes" } else { "" });
    }
    out += &format!("reference point: alpha={} beta={} value={}\n", fq(&r.reference_alpha), fq(&r.reference_beta), fq(&r.reference_value));
    if let (Some(bp), Some(sr)) = (s.beta_positive, s.sr2_growing) {
        out += &format!("beta > 0: {bp}  2alpha - beta > 0: {sr}\n");
    }
    out
}

fn scaling(o: &Opts) -> CliResult<Output> {
    let f = family(o)?;
    let (k, pattern) = shape(f, o)?;
    let sizes = o.n_list.clone().ok_or_else(|| usage("missing --n-list"))?;
    let ki = k as i64;
    let rule = match (o.r, &o.alpha) {
        (Some(r), _) => RRule::Fixed(r),
        (None, Some(a)) => RRule::Power(a.clone()),
        (None, None) if f == Family::Kdist => RRule::Power(q(ki, ki + 1)),
        (None, None) => RRule::Power(qi(1) - q(1, ki)),
    };
    let spec = ScalingSpec { family: f, k, pattern, rule, s: o.s.clone().unwrap_or_else(|| q(1, 2)), options: options(o) };
    let report = scaling_report(&spec, &sizes)?;
    let text = report.to_text();
    Ok(Output::report(&report, text))
}
