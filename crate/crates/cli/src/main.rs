//! `scm`: command-line front end for finite structural causal models.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value as Json};

use scm::explanations::WitnessMode;
use scm::fairness::parse_paths;
use scm::propcheck::{check_theorem, Mode, Reading, SuiteConfig, TheoremId};
use scm::query::parent_edges;
use scm::{parse_formula, parse_model, Analyzer, Budget, CausalModel, Error, VarId};

#[derive(Parser)]
#[command(name = "scm", version, about = "Sufficiency, explanations, actual causation and fairness for finite causal models")]
struct Cli {
    /// Print exactly one JSON document on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// Maximum number of model evaluations per operation.
    #[arg(long, global = true, env = "SCM_BUDGET", default_value_t = scm::DEFAULT_BUDGET)]
    budget: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArg {
    /// Model file in the scm language.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct ContextArg {
    /// Values of every exogenous variable, e.g. "U1=75000,U3=2500".
    #[arg(long)]
    context: String,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model.
    Validate(ModelArg),
    /// Solve the model in a context.
    Solve {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        context: ContextArg,
    },
    /// Evaluate a causal formula such as "[X2<-45001](Y=1)".
    Query {
        #[command(flatten)]
        model: ModelArg,
        formula: String,
        /// Context to evaluate in; required unless --universal is given.
        #[arg(long)]
        context: Option<String>,
        /// Check the formula in every context.
        #[arg(long)]
        universal: bool,
    },
    /// Sufficient or counterfactual explanations of an outcome.
    Explain {
        #[command(subcommand)]
        kind: ExplainKind,
    },
    /// Actual, optimal or direct causation.
    Cause {
        #[command(subcommand)]
        kind: CauseKind,
    },
    /// Path-specific fairness with the standard counterfactual baseline.
    Fairness {
        #[command(flatten)]
        model: ModelArg,
        /// Protected variable.
        #[arg(long)]
        protected: String,
        /// File listing unfair paths, one `A -> B -> Y` per line.
        #[arg(long)]
        unfair_paths: PathBuf,
        /// Output variable.
        #[arg(long)]
        target: String,
        /// List every certificate instead of the first and a count.
        #[arg(long)]
        all: bool,
    },
    /// Check the structural results on seeded random models.
    VerifyTheorems {
        /// One result to check; all of them when absent.
        #[arg(long)]
        theorem: Option<TheoremId>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Run the Independence-only results on general models.
        #[arg(long)]
        negative_control: bool,
        #[arg(long, default_value_t = 4)]
        max_endogenous: usize,
        #[arg(long, default_value_t = 3)]
        max_domain: u32,
        /// Convention for the three results whose proofs read the definitions
        /// more loosely.
        #[arg(long, value_enum, default_value_t = ReadingArg::Definitions)]
        reading: ReadingArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadingArg {
    Definitions,
    Proofs,
}

#[derive(Clone, Copy, ValueEnum)]
enum WitnessArg {
    Any,
    Standard,
    Direct,
    Intermediate,
}

#[derive(Subcommand)]
enum ExplainKind {
    /// Actual sufficient explanations; only the good ones with --good.
    Sufficient {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        context: ContextArg,
        /// Outcome to explain, e.g. "Y=1".
        #[arg(long)]
        target: String,
        #[arg(long)]
        good: bool,
    },
    /// Good counterfactual explanations.
    Counterfactual {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        context: ContextArg,
        #[arg(long)]
        target: String,
    },
    /// Counterfactual dependence of the outcome on X=x rather than X=x'.
    Dependence {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        context: ContextArg,
        #[arg(long)]
        x: String,
        #[arg(long)]
        xprime: String,
        #[arg(long)]
        target: String,
        /// Which witness sets are allowed.
        #[arg(long, value_enum, default_value_t = WitnessArg::Any)]
        witness: WitnessArg,
    },
}

#[derive(Args)]
struct CauseArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    context: ContextArg,
    /// Candidate cause, e.g. "X1=250000".
    #[arg(long)]
    x: String,
    /// Outcome, e.g. "Y=1".
    #[arg(long)]
    target: String,
    /// Report every certifying explanation, not just the first.
    #[arg(long)]
    all: bool,
}

#[derive(Subcommand)]
enum CauseKind {
    Actual {
        #[command(flatten)]
        args: CauseArgs,
        /// Contrast values, differing from the cause in every variable.
        #[arg(long)]
        xprime: String,
    },
    Optimal(CauseArgs),
    Direct(CauseArgs),
}

/// What went wrong, with its exit code.
enum Failure {
    Usage(String),
    Lib(Error, Option<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Lib(e, None)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Lib(e, _) => match e {
                Error::Parse(_) => 3,
                Error::Validation(_) => 4,
                Error::BudgetExceeded { .. } => 5,
                Error::Domain(_) | Error::UnknownVariable(_) | Error::Precondition(_) => 2,
            },
        }
    }

    fn status(&self) -> &'static str {
        match self.code() {
            2 => "usage-error",
            3 => "parse-error",
            4 => "validation-error",
            5 => "budget-exceeded",
            _ => "internal-error",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Lib(e, _) => match e {
                Error::Parse(_) => "syntax error".into(),
                Error::Validation(_) => "invalid model".into(),
                other => other.to_string(),
            },
        }
    }

    fn to_json(&self) -> Json {
        let mut doc = json!({ "status": self.status(), "message": self.message() });
        if let Failure::Lib(e, file) = self {
            if !e.diagnostics().is_empty() {
                doc["diagnostics"] = json!(e.diagnostics());
                if let Some(f) = file {
                    doc["file"] = json!(f);
                }
            }
        }
        doc
    }

    fn human(&self) -> String {
        let mut out = format!("error: {}", self.message());
        if let Failure::Lib(e, file) = self {
            for d in e.diagnostics() {
                out.push('\n');
                if let Some(f) = file {
                    out.push_str(f);
                    out.push(':');
                }
                out.push_str(&d.to_string());
            }
        }
        out
    }
}

type Outcome = Result<Json, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(arg: &ModelArg) -> Result<CausalModel, Failure> {
    let src = read(&arg.model)?;
    parse_model(&src).map_err(|e| Failure::Lib(e, Some(arg.model.display().to_string())))
}

fn status(holds: bool) -> &'static str {
    if holds {
        "ok"
    } else {
        "refuted"
    }
}

/// Adds `status` to an object payload.
fn with_status(mut payload: Json, holds: bool) -> Json {
    payload["status"] = json!(status(holds));
    payload
}

fn single(a: &Analyzer, text: &str, what: &str) -> Result<(VarId, u32), Failure> {
    let s = a.parse_setting(text)?;
    match s.as_slice() {
        [one] => Ok(*one),
        _ => Err(Failure::Usage(format!("{what} must assign exactly one variable, got `{text}`"))),
    }
}

fn endogenous(m: &CausalModel, name: &str) -> Result<VarId, Failure> {
    Ok(m.require_endogenous(name)?)
}

fn validate(arg: &ModelArg) -> Outcome {
    let m = load(arg)?;
    let vars: Vec<Json> = m
        .vars()
        .iter()
        .enumerate()
        .map(|(v, var)| {
            json!({
                "name": var.name,
                "kind": if m.is_exogenous(v) { "exogenous" } else { "endogenous" },
                "domain": m.domain(v),
            })
        })
        .collect();
    let edges: Vec<[String; 2]> = parent_edges(&m).into_iter().map(|(a, b)| [a, b]).collect();
    Ok(json!({
        "status": "ok",
        "model": m.name(),
        "variables": vars,
        "edges": edges,
        "contexts": m.context_count().to_string(),
    }))
}

fn solve(a: &Analyzer, context: &str) -> Outcome {
    let ctx = a.parse_context(context)?;
    Ok(json!({
        "status": "ok",
        "context": a.named_context(&ctx),
        "solution": a.solve_named(&ctx)?,
    }))
}

fn query(a: &Analyzer, formula: &str, context: Option<&str>, universal: bool) -> Outcome {
    let f = parse_formula(formula, a.model).map_err(Error::Parse)?;
    match (universal, context) {
        (true, _) => {
            let cx = a.holds_universally(&f)?;
            Ok(json!({
                "status": status(cx.is_none()),
                "formula": f.to_string(),
                "universal": true,
                "holds": cx.is_none(),
                "counterexample": cx.map(|c| a.named_context(&c)),
            }))
        }
        (false, Some(c)) => {
            let ctx = a.parse_context(c)?;
            let holds = a.evaluate(&ctx, &f)?;
            Ok(json!({
                "status": status(holds),
                "formula": f.to_string(),
                "universal": false,
                "context": a.named_context(&ctx),
                "holds": holds,
            }))
        }
        (false, None) => Err(Failure::Usage("query needs --context or --universal".into())),
    }
}

fn explain(a: &Analyzer, kind: &ExplainKind) -> Outcome {
    match kind {
        ExplainKind::Sufficient { context, target, good, .. } => {
            let ctx = a.parse_context(&context.context)?;
            let t = single(a, target, "--target")?;
            let list =
                if *good { a.good_sufficient_explanations(&ctx, t)? } else { a.actual_sufficient_explanations(&ctx, t)? };
            Ok(json!({
                "status": "ok",
                "context": a.named_context(&ctx),
                "good_only": good,
                "explanations": list.iter().map(|e| a.se_json(e)).collect::<Vec<_>>(),
            }))
        }
        ExplainKind::Counterfactual { context, target, .. } => {
            let ctx = a.parse_context(&context.context)?;
            let t = single(a, target, "--target")?;
            let list = a.good_counterfactual_explanations(&ctx, t)?;
            Ok(json!({
                "status": "ok",
                "context": a.named_context(&ctx),
                "explanations": list.iter().map(|e| a.ce_json(e)).collect::<Vec<_>>(),
            }))
        }
        ExplainKind::Dependence { context, x, xprime, target, witness, .. } => {
            let ctx = a.parse_context(&context.context)?;
            let t = single(a, target, "--target")?;
            let (x, xp) = (a.parse_setting(x)?, a.parse_setting(xprime)?);
            let mode = match witness {
                WitnessArg::Any => WitnessMode::Any,
                WitnessArg::Standard => WitnessMode::Empty,
                WitnessArg::Direct => WitnessMode::AllOthers,
                WitnessArg::Intermediate => WitnessMode::Intermediate,
            };
            let d = a.counterfactually_depends(&ctx, &x, &xp, t, mode)?;
            let mut doc = a.dependence_json(&d);
            doc["context"] = json!(a.named_context(&ctx));
            Ok(with_status(doc, d.holds))
        }
    }
}

fn cause(a: &Analyzer, kind: &CauseKind) -> Outcome {
    let (args, xprime) = match kind {
        CauseKind::Actual { args, xprime } => (args, Some(xprime)),
        CauseKind::Optimal(args) | CauseKind::Direct(args) => (args, None),
    };
    let ctx = a.parse_context(&args.context.context)?;
    let x = a.parse_setting(&args.x)?;
    let t = single(a, &args.target, "--target")?;
    let v = match kind {
        CauseKind::Actual { .. } => {
            let xp = a.parse_setting(xprime.map(String::as_str).unwrap_or_default())?;
            a.actual_cause(&ctx, &x, &xp, t, args.all)?
        }
        CauseKind::Optimal(_) => a.optimal_cause(&ctx, &x, t, args.all)?,
        CauseKind::Direct(_) => a.direct_cause(&ctx, &x, t, args.all)?,
    };
    let mut doc = a.verdict_json(&v);
    doc["context"] = json!(a.named_context(&ctx));
    Ok(with_status(doc, v.holds))
}

fn fairness(a: &Analyzer, protected: &str, paths_file: &Path, target: &str, all: bool) -> Outcome {
    let p = endogenous(a.model, protected)?;
    let y = endogenous(a.model, target)?;
    let src = read(paths_file)?;
    let unfair = parse_paths(a.model, &src, p, y).map_err(|e| Failure::Lib(e, Some(paths_file.display().to_string())))?;
    let v = a.is_fair(p, &unfair, y)?;
    let standard = a.standardly_counterfactually_fair(p, y)?;
    let mut doc = a.fairness_json(&v, p, y);
    if all {
        doc["certificates"] = json!(v.certificates.iter().map(|c| a.certificate_json(c, p, y)).collect::<Vec<_>>());
    }
    doc["unfair_paths"] = json!(unfair.iter().map(|q| scm::fairness::path_text(a.model, q)).collect::<Vec<_>>());
    doc["standard"] = a.standard_json(&standard, p, y);
    Ok(with_status(doc, v.fair))
}

#[allow(clippy::too_many_arguments)]
fn verify(
    theorem: Option<TheoremId>,
    seed: u64,
    trials: usize,
    negative_control: bool,
    max_endogenous: usize,
    max_domain: u32,
    reading: ReadingArg,
    budget: u64,
) -> Outcome {
    if max_endogenous < 2 {
        return Err(Failure::Usage("--max-endogenous must be at least 2".into()));
    }
    let mut cfg = SuiteConfig::new(seed, trials);
    cfg.negative_control = negative_control;
    cfg.max_endogenous = max_endogenous;
    cfg.max_domain = max_domain;
    cfg.mode = Mode::General;
    cfg.reading = match reading {
        ReadingArg::Definitions => Reading::Definitions,
        ReadingArg::Proofs => Reading::Proofs,
    };
    cfg.budget = budget;
    let ids: Vec<TheoremId> = match theorem {
        Some(t) => vec![t],
        None if negative_control => TheoremId::ALL.into_iter().filter(|t| t.needs_independence()).collect(),
        None => TheoremId::ALL.to_vec(),
    };
    let reports: Vec<_> = ids.iter().map(|&id| check_theorem(id, &cfg)).collect();
    let passed = reports.iter().all(|r| r.passed());
    if let [r] = reports.as_slice() {
        return Ok(with_status(r.to_json(), passed));
    }
    Ok(json!({
        "status": status(passed),
        "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    }))
}

fn run(cli: &Cli) -> Outcome {
    let with_model = |arg: &ModelArg, f: &dyn Fn(&Analyzer) -> Outcome| -> Outcome {
        let m = load(arg)?;
        let a = Analyzer::new(&m, Budget::new(cli.budget));
        f(&a)
    };
    match &cli.command {
        Command::Validate(arg) => validate(arg),
        Command::Solve { model, context } => with_model(model, &|a| solve(a, &context.context)),
        Command::Query { model, formula, context, universal } => {
            with_model(model, &|a| query(a, formula, context.as_deref(), *universal))
        }
        Command::Explain { kind } => {
            let model = match kind {
                ExplainKind::Sufficient { model, .. }
                | ExplainKind::Counterfactual { model, .. }
                | ExplainKind::Dependence { model, .. } => model,
            };
            with_model(model, &|a| explain(a, kind))
        }
        Command::Cause { kind } => {
            let model = match kind {
                CauseKind::Actual { args, .. } | CauseKind::Optimal(args) | CauseKind::Direct(args) => &args.model,
            };
            with_model(model, &|a| cause(a, kind))
        }
        Command::Fairness { model, protected, unfair_paths, target, all } => {
            with_model(model, &|a| fairness(a, protected, unfair_paths, target, *all))
        }
        Command::VerifyTheorems { theorem, seed, trials, negative_control, max_endogenous, max_domain, reading } => verify(
            *theorem,
            *seed,
            *trials,
            *negative_control,
            *max_endogenous,
            *max_domain,
            *reading,
            cli.budget,
        ),
    }
}

/// Indented `key: value` rendering of a JSON document.
fn render(v: &Json, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Json::Object(map) => render_object(map, indent, out),
        Json::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{pad}[{}]\n", parts.join(", ")));
        }
        Json::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                out.push_str(&format!("{pad}- #{}\n", i + 1));
                render(item, indent + 1, out);
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn render_object(map: &Map<String, Json>, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    // status first, the rest in key order
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort_by_key(|k| (k.as_str() != "status", k.as_str()));
    for k in keys {
        let v = &map[k];
        match v {
            Json::Object(inner) if inner.is_empty() => out.push_str(&format!("{pad}{k}: none\n")),
            Json::Object(inner) if is_flat(inner) => {
                let parts: Vec<String> = inner.iter().map(|(k, v)| format!("{k}={}", scalar(v))).collect();
                out.push_str(&format!("{pad}{k}: {}\n", parts.join(", ")));
            }
            Json::Object(_) => {
                out.push_str(&format!("{pad}{k}:\n"));
                render(v, indent + 1, out);
            }
            Json::Array(items) if items.is_empty() => out.push_str(&format!("{pad}{k}: none\n")),
            Json::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
                let parts: Vec<String> = items.iter().map(scalar).collect();
                out.push_str(&format!("{pad}{k}: {}\n", parts.join(", ")));
            }
            Json::Array(_) => {
                out.push_str(&format!("{pad}{k}:\n"));
                render(v, indent + 1, out);
            }
            other => out.push_str(&format!("{pad}{k}: {}\n", scalar(other))),
        }
    }
}

fn is_flat(map: &Map<String, Json>) -> bool {
    map.values().all(|v| !v.is_object() && !v.is_array())
}

fn scalar(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        Json::Null => "none".into(),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() && std::env::args().any(|a| a == "--json") => {
            let text = e.render().to_string();
            let msg = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            println!("{}", json!({ "status": "usage-error", "message": msg }));
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(&cli)));
    let outcome = match outcome {
        Ok(o) => o,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            let doc = json!({ "status": "internal-error", "message": msg });
            if cli.json {
                println!("{doc}");
            } else {
                eprintln!("internal error: {msg}");
            }
            return ExitCode::from(6);
        }
    };
    match outcome {
        Ok(doc) => {
            if cli.json {
                println!("{doc}");
            } else {
                let mut out = String::new();
                render(&doc, 0, &mut out);
                print!("{out}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            if cli.json {
                println!("{}", f.to_json());
            } else {
                eprintln!("{}", f.human());
            }
            ExitCode::from(f.code())
        }
    }
}
