//! `jetcalc`: command-line front end to the jet-space calculus library.
//!
//! Exit codes: 0 when the result was computed and verified or the verdict
//! is true, 1 for a false verdict, 2 for input errors, 3 when an internal
//! consistency check fails.

mod problem;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use jetcalc::evofield::{ComponentJson, FieldJson};
use jetcalc::forms::{parse_term, BiForm, HorizontalJson};
use jetcalc::{Context, MultiIndex};

use problem::{CofactorJson, ContextJson, ProblemFile, Report, SCHEMA};
use tasks::Verdict;

#[derive(Parser)]
#[command(name = "jetcalc", version, about = "Exact calculus on jet spaces, variational bicomplexes and spectral sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Total derivative D_j f.
    TotalDerivative(TaskArgs),
    /// Flat connection nabla_r applied to a vertical field.
    Nabla(TaskArgs),
    /// Graded decomposition of a vertical field up to a cutoff.
    Decompose(TaskArgs),
    /// Prolongation of a characteristic on a window.
    Prolong(TaskArgs),
    /// Vertical differential of a form.
    Dv(TaskArgs),
    /// Horizontal differential of a form.
    Dh(TaskArgs),
    /// Lie derivative of a form, checked against the magic formula.
    Lie(TaskArgs),
    /// Interior product of a field with a form.
    Interior(TaskArgs),
    /// Euler operator of a Lagrangian with an integration-by-parts witness.
    Euler(TaskArgs),
    /// Whether an expression is a total divergence.
    DivergenceTest(TaskArgs),
    /// Verifies Div J = sum Q D_i F with given cofactors.
    ConservationLaw(TaskArgs),
    /// Whether a characteristic generates a variational symmetry.
    Noether(TaskArgs),
    /// Pages of the spectral sequence of a filtered complex.
    Specseq(TaskArgs),
    /// Pages of the spectral sequence of a bicomplex's total complex.
    Bicomplex(TaskArgs),
}

impl Command {
    fn split(self) -> (&'static str, TaskArgs) {
        match self {
            Command::TotalDerivative(a) => ("total-derivative", a),
            Command::Nabla(a) => ("nabla", a),
            Command::Decompose(a) => ("decompose", a),
            Command::Prolong(a) => ("prolong", a),
            Command::Dv(a) => ("dv", a),
            Command::Dh(a) => ("dh", a),
            Command::Lie(a) => ("lie", a),
            Command::Interior(a) => ("interior", a),
            Command::Euler(a) => ("euler", a),
            Command::DivergenceTest(a) => ("divergence-test", a),
            Command::ConservationLaw(a) => ("conservation-law", a),
            Command::Noether(a) => ("noether", a),
            Command::Specseq(a) => ("specseq", a),
            Command::Bicomplex(a) => ("bicomplex", a),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct TaskArgs {
    /// Problem file, earlier report, or bare payload (field, form, complex).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Number of independent variables.
    #[arg(long)]
    m: Option<usize>,
    /// Dependent variable names, comma separated.
    #[arg(long, value_delimiter = ',')]
    deps: Vec<String>,
    /// Allow sin, cos, exp, ln and division by non-constants.
    #[arg(long)]
    transcendental: bool,
    /// Expression (or Lagrangian).
    #[arg(long, allow_hyphen_values = true)]
    expr: Option<String>,
    /// Direction, counted from 1.
    #[arg(long)]
    mu: Option<usize>,
    /// Multi-index such as (1,0).
    #[arg(long)]
    index: Option<MultiIndex>,
    /// Vertical field component "v;(1,0)=EXPR"; repeatable.
    #[arg(long = "comp", allow_hyphen_values = true)]
    comps: Vec<String>,
    /// Horizontal field coefficient "MU=EXPR"; repeatable.
    #[arg(long = "hcomp", allow_hyphen_values = true)]
    hcomps: Vec<String>,
    /// Characteristic component "v=EXPR"; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    phi: Vec<String>,
    /// Form term "COEF | rho[v;(1)] dx1"; repeatable.
    #[arg(long = "term", allow_hyphen_values = true)]
    terms: Vec<String>,
    /// Current component J^mu, in order of mu; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    current: Vec<String>,
    /// Equation F^sigma of the system; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    system: Vec<String>,
    /// Cofactor "SIGMA;(i)=EXPR" multiplying D_i F^sigma; repeatable.
    #[arg(long = "cofactor", allow_hyphen_values = true)]
    cofactors: Vec<String>,
    /// Window |i| <= N on which fields are materialized.
    #[arg(long)]
    window: Option<u32>,
    /// Cutoff K for decompositions.
    #[arg(long)]
    cutoff: Option<u32>,
    /// Seed for randomized equality tests.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for page computations.
    #[arg(long)]
    jobs: Option<usize>,
}

fn split_eq<'a>(s: &'a str, what: &str) -> Result<(&'a str, &'a str)> {
    s.split_once('=').with_context(|| format!("{what} {s:?} must have the form LHS=EXPR"))
}

fn split_index(lhs: &str, what: &str) -> Result<(String, MultiIndex)> {
    let (name, idx) = lhs.split_once(';').with_context(|| format!("{what} {lhs:?} must have the form NAME;(i,...)"))?;
    let idx: MultiIndex = idx.trim().parse().with_context(|| format!("bad multi-index in {what} {lhs:?}"))?;
    Ok((name.trim().to_string(), idx))
}

/// Merges `--file` (if any) with inline flags; flags win.
fn build(task: &str, a: TaskArgs) -> Result<(ProblemFile, Option<Format>)> {
    let inline_context = match (a.m, a.deps.is_empty()) {
        (Some(m), false) => Some(ContextJson { m, deps: a.deps.clone(), transcendental: a.transcendental }),
        (None, true) => None,
        _ => bail!("--m and --deps must be given together"),
    };
    let mut p = match &a.file {
        Some(path) => problem::load(path, task, inline_context.clone())?,
        None => ProblemFile { context: None, task: task.to_string(), payload: Default::default(), options: Default::default() },
    };
    if inline_context.is_some() {
        p.context = inline_context;
    }
    if a.transcendental {
        if let Some(c) = p.context.as_mut() {
            c.transcendental = true;
        }
    }
    let o = &mut p.options;
    o.window = a.window.or(o.window);
    o.cutoff = a.cutoff.or(o.cutoff);
    o.seed = a.seed.or(o.seed);
    o.jobs = a.jobs.or(o.jobs);
    let format = match a.format {
        Some(f) => Some(f),
        None => match o.format.as_deref() {
            None => None,
            Some("text") => Some(Format::Text),
            Some("json") => Some(Format::Json),
            Some(other) => bail!("unknown format {other:?}; expected text or json"),
        },
    };
    let pl = &mut p.payload;
    if a.expr.is_some() {
        pl.expr = a.expr;
    }
    if a.mu.is_some() || a.index.is_some() {
        pl.mu = a.mu;
        pl.index = a.index;
    }
    if !a.comps.is_empty() {
        let mut components = Vec::new();
        for c in &a.comps {
            let (lhs, rhs) = split_eq(c, "component")?;
            let (dep, index) = split_index(lhs, "component")?;
            components.push(ComponentJson { dep, index, expr: rhs.trim().to_string() });
        }
        pl.field = Some(FieldJson { window: a.window, components });
    }
    if !a.hcomps.is_empty() {
        let mut h = Vec::new();
        for c in &a.hcomps {
            let (lhs, rhs) = split_eq(c, "horizontal coefficient")?;
            let mu: usize = lhs.trim().parse().with_context(|| format!("bad direction in {c:?}"))?;
            h.push(HorizontalJson { mu, expr: rhs.trim().to_string() });
        }
        pl.horizontal = Some(h);
    }
    if !a.phi.is_empty() {
        let mut phi = std::collections::BTreeMap::new();
        for c in &a.phi {
            let (lhs, rhs) = split_eq(c, "characteristic")?;
            phi.insert(lhs.trim().to_string(), rhs.trim().to_string());
        }
        pl.phi = Some(phi);
    }
    if !a.current.is_empty() {
        pl.current = Some(a.current);
    }
    if !a.system.is_empty() {
        pl.system = Some(a.system);
    }
    if !a.cofactors.is_empty() {
        let mut q = Vec::new();
        for c in &a.cofactors {
            let (lhs, rhs) = split_eq(c, "cofactor")?;
            let (eq, index) = split_index(lhs, "cofactor")?;
            let equation: usize = eq.parse().with_context(|| format!("bad equation number in {c:?}"))?;
            q.push(CofactorJson { equation, index, expr: rhs.trim().to_string() });
        }
        pl.cofactors = Some(q);
    }
    if !a.terms.is_empty() {
        let ctx: Context = p.context()?;
        let mut w = BiForm::zero();
        for t in &a.terms {
            w = w + parse_term(t, &ctx)?;
        }
        p.payload.form = Some(w.to_json(&ctx));
    }
    Ok((p, format))
}

fn execute(task: &str, args: TaskArgs) -> Result<(Report, Vec<String>, Format)> {
    let (problem, format) = build(task, args)?;
    let outcome = tasks::run(&problem)?;
    let seed = problem.options.seed.unwrap_or(0);
    let report = Report {
        schema: SCHEMA.to_string(),
        task: task.to_string(),
        problem,
        seed,
        verdict: outcome.verdict.as_str().to_string(),
        result: outcome.result,
        certificate: outcome.certificate,
    };
    let verdict = outcome.verdict;
    let mut lines = vec![format!("task: {task}"), format!("seed: {seed}"), format!("verdict: {}", verdict.as_str())];
    lines.extend(outcome.lines);
    Ok((report, lines, format.unwrap_or(Format::Text)))
}

fn is_invariant_violation(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.to_string().starts_with("invariant violation"))
}

fn main() -> ExitCode {
    let (task, args) = Cli::parse().command.split();
    match execute(task, args) {
        Ok((report, lines, format)) => {
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
                Format::Text => {
                    for l in lines {
                        println!("{l}");
                    }
                }
            }
            if report.verdict == Verdict::False.as_str() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_invariant_violation(&e) { 3 } else { 2 })
        }
    }
}
