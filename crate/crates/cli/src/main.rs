//! `twcst`: optimal search trees with two-way comparisons from the command
//! line.
//!
//! Exit status is 0 on success, 1 when a check fails and 2 on usage or input
//! errors. Errors are reported on stderr as a JSON object
//! `{"error": <kind>, "message": <text>}`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use twcst::optimal::{KeyMask, Oracle, TiePreference};
use twcst::thresholds::{
    check_theorem, ratio_string, scan_lambda_minus, scan_lambda_plus, theorem_sweep, ScanOptions,
    ScanResult, SweepConfig, TheoremCheck, ThresholdReport,
};
use twcst::transform::TransformError;
use twcst::{
    check_eq_root_max_weight, check_side_weight_monotonicity, cost, dot, dp_opt,
    transform_to_eq_root, Instance, OptResult, Tree,
};

#[derive(Debug, Parser)]
#[command(name = "twcst", version, about = "Optimal search trees with two-way comparisons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal tree by the dynamic program.
    Solve(SolveArgs),
    /// Optimal tree by exhaustive search over key subsets (at most 15 keys).
    Oracle(SolveArgs),
    /// Check one instance, or sweep random or exhaustive instances.
    Verify(VerifyArgs),
    /// Rewrite a less-than-rooted tree into an equal-to-rooted one of no
    /// greater cost.
    Transform(TransformArgs),
    /// Scan for the instances closest to the 1/4 and 3/7 thresholds.
    Sweep(SweepArgs),
    /// Graphviz DOT for a tree.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance JSON: {"weights": [w1, ..., wn]}.
    #[arg(long, value_name = "PATH")]
    instance: PathBuf,
    /// `json` prints {cost, rootKinds, tree}; `dot` renders the tree.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["instance", "theorem", "lambda_minus"])))]
struct VerifyArgs {
    /// Check one instance: solver agreement, both lemmas on its optimal
    /// tree, and the 3/7 theorem when it applies.
    #[arg(long, value_name = "PATH")]
    instance: Option<PathBuf>,
    /// Random instances whose heaviest key carries at least 3/7 of the
    /// weight must all admit an optimal equal-to root.
    #[arg(long)]
    theorem: bool,
    /// Exhaustively check that no instance whose heaviest key carries less
    /// than 1/4 of the weight admits an optimal equal-to root.
    #[arg(long)]
    lambda_minus: bool,
    /// Key count. With --theorem every instance has exactly n keys (default:
    /// n drawn from 2..=9); with --lambda-minus all n in 2..=N are checked
    /// (default 7).
    #[arg(long)]
    n: Option<usize>,
    /// Largest weight: default 100 for --theorem, 8 for --lambda-minus.
    #[arg(long)]
    max_weight: Option<u64>,
    /// Instances drawn by --theorem.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// `json` prints a summary; `csv` prints the closest instance to 3/7 per
    /// key count (--theorem only).
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long, value_name = "PATH")]
    instance: PathBuf,
    /// Tree JSON, or the compact form such as `<2(1,=2(2,3))`.
    #[arg(long, value_name = "PATH")]
    tree: PathBuf,
    /// `json` prints the output tree and the trace; `dot` prints the input
    /// and output trees as two graphs.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Scan every key count from 3 to n.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Weights range over 1..=max-weight.
    #[arg(long, default_value_t = 8)]
    max_weight: u64,
    /// Proposals per hill-climbing run, for grids too large to enumerate.
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// `csv` prints one row per frontier instance; `json` prints the summary.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Also write the summary JSON here.
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Tree JSON, or the compact form such as `=1(1,2)`.
    #[arg(long, value_name = "PATH")]
    tree: PathBuf,
    /// Adds weights to the leaf labels.
    #[arg(long, value_name = "PATH")]
    instance: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug)]
enum Failure {
    /// Bad arguments or unreadable input: exit 2.
    Input { kind: &'static str, message: String },
    /// A check failed; its report was already written: exit 1.
    Check(String),
}

impl Failure {
    fn input(kind: &'static str, message: impl ToString) -> Self {
        Failure::Input {
            kind,
            message: message.to_string(),
        }
    }

    fn report(&self) -> ExitCode {
        let (kind, message, code) = match self {
            Failure::Input { kind, message } => (*kind, message.as_str(), 2),
            Failure::Check(message) => ("check-failed", message.as_str(), 1),
        };
        eprintln!("{}", json!({ "error": kind, "message": message }));
        ExitCode::from(code)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => return Failure::input("usage", err.render().to_string().trim_end()).report(),
    };
    let result = match cli.command {
        Command::Solve(args) => solve(args, false),
        Command::Oracle(args) => solve(args, true),
        Command::Verify(args) => verify(args),
        Command::Transform(args) => transform(args),
        Command::Sweep(args) => sweep(args),
        Command::Render(args) => render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => failure.report(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::from_json(&read(path)?)
        .map_err(|e| Failure::input("instance", format!("{}: {e}", path.display())))
}

fn read_tree(path: &Path) -> Result<Tree, Failure> {
    let text = read(path)?;
    let text = text.trim();
    if text.starts_with('{') {
        Tree::from_json(text).map_err(|e| Failure::input("tree", format!("{}: {e}", path.display())))
    } else {
        text.parse()
            .map_err(|e| Failure::input("tree", format!("{}: {e}", path.display())))
    }
}

fn emit(output: &Output, text: &str) -> Outcome {
    match &output.out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
    .map_err(|e| Failure::input("io", e))
}

fn to_json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn reject_format(format: Format, allowed: &[Format]) -> Outcome {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(Failure::input(
            "usage",
            format!("--format {format:?} is not supported by this command").to_lowercase(),
        ))
    }
}

fn solve(args: SolveArgs, exhaustive: bool) -> Outcome {
    reject_format(args.format, &[Format::Json, Format::Dot])?;
    let inst = read_instance(&args.instance)?;
    let result: OptResult = if exhaustive {
        Oracle::new(&inst)
            .and_then(|oracle| oracle.solve(KeyMask::full(inst.n()), TiePreference::PreferEq))
            .map_err(|e| Failure::input("instance", e))?
    } else {
        dp_opt(&inst)
    };
    let text = match args.format {
        Format::Dot => dot::render(&result.tree, Some(&inst)),
        _ => to_json(&result),
    };
    emit(&args.output, &text)
}

fn verify(args: VerifyArgs) -> Outcome {
    if let Some(path) = &args.instance {
        reject_format(args.format, &[Format::Json])?;
        verify_instance(&read_instance(path)?, &args.output)
    } else if args.theorem {
        reject_format(args.format, &[Format::Json, Format::Csv])?;
        verify_theorem_sweep(&args)
    } else {
        reject_format(args.format, &[Format::Json])?;
        verify_lambda_minus(&args)
    }
}

fn verify_instance(inst: &Instance, output: &Output) -> Outcome {
    let dp = dp_opt(inst);
    let oracle = Oracle::new(inst).ok();
    let optimal_tree = match &oracle {
        Some(oracle) => oracle
            .tree(KeyMask::full(inst.n()), TiePreference::PreferEq)
            .map_err(|e| Failure::input("instance", e))?,
        None => dp.tree.clone(),
    };
    let oracle_cost = oracle.as_ref().map(|o| o.cost(KeyMask::full(inst.n())).expect("full set"));
    let solvers_agree = oracle_cost.is_none_or(|c| c == dp.cost);
    let side_weight = check_side_weight_monotonicity(&optimal_tree, inst);
    let eq_root = inst.n() <= 2 || check_eq_root_max_weight(&optimal_tree, inst);
    let (report, theorem) = if inst.n() >= 2 {
        let report = match &oracle {
            Some(oracle) => ThresholdReport::from_oracle(oracle, inst),
            None => ThresholdReport::with_dp(inst),
        }
        .map_err(|e| Failure::input("instance", e))?;
        let theorem = check_theorem(inst).map_err(|e| Failure::input("instance", e))?;
        (Some(report), theorem)
    } else {
        (None, TheoremCheck::NotApplicable)
    };
    let passed = solvers_agree && side_weight.is_ok() && eq_root && theorem.passed();
    let summary = json!({
        "instance": inst.weights(),
        "cost": dp.cost,
        "oracleCost": oracle_cost,
        "solversAgree": solvers_agree,
        "tree": optimal_tree,
        "sideWeightMonotone": side_weight.as_ref().is_ok(),
        "sideWeightViolation": side_weight.err(),
        "eqRootIsHeaviest": eq_root,
        "thresholds": report,
        "theorem": theorem,
        "passed": passed,
    });
    emit(output, &to_json(&summary))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("instance {:?} failed verification", inst.weights())))
    }
}

fn verify_theorem_sweep(args: &VerifyArgs) -> Outcome {
    let (n_min, n_max) = args.n.map_or((2, 9), |n| (n, n));
    if n_min < 2 {
        return Err(Failure::input("usage", "--n must be at least 2"));
    }
    let config = SweepConfig {
        n_min,
        n_max,
        samples: args.samples,
        seed: args.seed,
        max_weight: args.max_weight.unwrap_or(100),
        jobs: args.jobs,
        transform: true,
    };
    let sweep = theorem_sweep(&config).map_err(|e| Failure::input("usage", e))?;
    let text = match args.format {
        Format::Csv => frontier_csv(sweep.frontier.values())?,
        _ => {
            let mut summary = serde_json::to_value(&sweep).expect("sweep serializes");
            summary["passed"] = json!(sweep.passed());
            to_json(&summary)
        }
    };
    emit(&args.output, &text)?;
    if sweep.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} theorem failures, {} solver mismatches, {} transform failures",
            sweep.failures.len(),
            sweep.solver_mismatches.len(),
            sweep.transform_failures.len()
        )))
    }
}

fn verify_lambda_minus(args: &VerifyArgs) -> Outcome {
    let n_max = args.n.unwrap_or(7);
    let max_weight = args.max_weight.unwrap_or(8);
    let options = ScanOptions {
        seed: args.seed,
        jobs: args.jobs,
        exhaustive_limit: u64::MAX,
        ..ScanOptions::default()
    };
    let scans = (2..=n_max)
        .map(|n| scan_lambda_minus(n, max_weight, &options))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::input("usage", e))?;
    let violations: u64 = scans.iter().map(|s| s.violation_count).sum();
    let summary = json!({
        "maxWeight": max_weight,
        "evaluated": scans.iter().map(|s| s.evaluated).sum::<u64>(),
        "violationCount": violations,
        "scans": scans,
        "passed": violations == 0,
    });
    emit(&args.output, &to_json(&summary))?;
    if violations == 0 {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{violations} instances below 1/4 admit an optimal equal-to root"
        )))
    }
}

fn transform(args: TransformArgs) -> Outcome {
    reject_format(args.format, &[Format::Json, Format::Dot])?;
    let inst = read_instance(&args.instance)?;
    let tree = read_tree(&args.tree)?;
    let (result, trace) = transform_to_eq_root(&tree, &inst).map_err(|e| match e {
        TransformError::InvalidTree(_)
        | TransformError::NotIrreducible(_)
        | TransformError::TooFewKeys
        | TransformError::MaxWeightTooSmall { .. } => Failure::input("precondition", e),
        other => Failure::Check(other.to_string()),
    })?;
    let text = match args.format {
        Format::Dot => dot::render(&tree, Some(&inst)) + &dot::render(&result, Some(&inst)),
        _ => to_json(&json!({
            "input": tree,
            "tree": result,
            "cost": cost(&result, &inst).expect("transform output is valid"),
            "trace": trace,
        })),
    };
    emit(&args.output, &text)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ThresholdSummary<'a> {
    /// Highest ratio among instances with only less-than optimal roots.
    best: Option<&'a ThresholdReport>,
    violation_count: u64,
    scans: &'a [ScanResult],
}

impl<'a> ThresholdSummary<'a> {
    fn new(scans: &'a [ScanResult], better: fn(&ThresholdReport, &ThresholdReport) -> bool) -> Self {
        let best = scans
            .iter()
            .filter_map(|s| s.best.as_ref())
            .fold(None, |acc: Option<&ThresholdReport>, r| match acc {
                Some(b) if !better(r, b) => Some(b),
                _ => Some(r),
            });
        Self {
            best,
            violation_count: scans.iter().map(|s| s.violation_count).sum(),
            scans,
        }
    }
}

fn sweep(args: SweepArgs) -> Outcome {
    reject_format(args.format, &[Format::Csv, Format::Json])?;
    if args.n < 3 {
        return Err(Failure::input("usage", "--n must be at least 3"));
    }
    let options = ScanOptions {
        seed: args.seed,
        steps: args.samples,
        jobs: args.jobs,
        ..ScanOptions::default()
    };
    let run = |scan: fn(usize, u64, &ScanOptions) -> Result<ScanResult, _>| {
        (3..=args.n)
            .map(|n| scan(n, args.max_weight, &options))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::input("usage", e))
    };
    let plus = run(scan_lambda_plus)?;
    let minus = run(scan_lambda_minus)?;
    let plus_summary = ThresholdSummary::new(&plus, |a, b| a.cmp_for_max(b).is_lt());
    let minus_summary = ThresholdSummary::new(&minus, |a, b| a.cmp_for_min(b).is_lt());
    let passed = plus_summary.violation_count == 0 && minus_summary.violation_count == 0;
    let summary = to_json(&json!({
        "n": args.n,
        "maxWeight": args.max_weight,
        "seed": args.seed,
        "lambdaPlus": plus_summary,
        "lambdaMinus": minus_summary,
        "bestLambdaPlusRatio": plus_summary.best.map(|r| ratio_string(&r.max_ratio)),
        "bestLambdaMinusRatio": minus_summary.best.map(|r| ratio_string(&r.max_ratio)),
        "passed": passed,
    }));
    if let Some(path) = &args.summary {
        fs::write(path, &summary).map_err(|e| Failure::input("io", e))?;
    }
    let text = match args.format {
        Format::Json => summary,
        _ => {
            let rows = plus
                .iter()
                .chain(&minus)
                .flat_map(|s| s.best.iter().chain(&s.violations));
            frontier_csv(rows)?
        }
    };
    emit(&args.output, &text)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check("a sweep found an instance contradicting a threshold".into()))
    }
}

/// One row per report: `n, weights, w_max, W, ratio, E, L, verdict`, with
/// weights separated by spaces.
fn frontier_csv<'a>(reports: impl IntoIterator<Item = &'a ThresholdReport>) -> Result<String, Failure> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_error = |e: csv::Error| Failure::input("io", e);
    writer
        .write_record(["n", "weights", "w_max", "W", "ratio", "E", "L", "verdict"])
        .map_err(csv_error)?;
    for r in reports {
        let weights: Vec<String> = r.weights.iter().map(u64::to_string).collect();
        writer
            .write_record([
                r.weights.len().to_string(),
                weights.join(" "),
                r.w_max().to_string(),
                r.total().to_string(),
                ratio_string(&r.max_ratio),
                r.e.to_string(),
                r.l.to_string(),
                r.verdict.to_string(),
            ])
            .map_err(csv_error)?;
    }
    let bytes = writer.into_inner().map_err(|e| Failure::input("io", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn render(args: RenderArgs) -> Outcome {
    let tree = read_tree(&args.tree)?;
    let inst = args.instance.as_deref().map(read_instance).transpose()?;
    if let Some(inst) = &inst {
        let keys: Vec<_> = tree.leaves();
        if let Some(&k) = keys.iter().find(|&&k| !inst.contains(k)) {
            return Err(Failure::input("tree", format!("leaf {k} is not a key of the instance")));
        }
    }
    emit(&args.output, &dot::render(&tree, inst.as_ref()))
}
