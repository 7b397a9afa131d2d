//! Command-line front end for the search-tree solvers.
//!
//! Exit codes: 0 success, 1 infeasible instance, 2 usage error (bad
//! arguments, unreadable or malformed input), 3 internal invariant
//! failure. All reports are deterministic for fixed inputs and seeds;
//! `--json` mirrors each text report field for field.

use clap::{Args, Parser, Subcommand};
use num::{BigRational, ToPrimitive, Zero};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use twocst::instances::{parse_instance, serialize_instance, CmpOp, Instance, OpSet, RawOp};
use twocst::{approx, dp, gen, noeq, oracle, splitgbst, trees};

#[derive(Parser)]
#[command(name = "twocst", version, about = "Optimal search trees from two-way comparisons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance exactly (O(n^4) interval DP).
    Solve(SolveArgs),
    /// Additive-3 approximation (O(n log n)).
    Approx(ApproxArgs),
    /// Verify a tree against an instance and report its cost.
    Verify(VerifyArgs),
    /// Exponential-time exact references.
    Oracle(OracleArgs),
    /// Reproduce the split-tree recurrence failure end to end.
    GbstCounterexample(JsonArg),
    /// Solve and write the tree as DOT.
    ExportDot(ExportDotArgs),
    /// Time the exact solver across sizes and report scaling ratios.
    Bench(BenchArgs),
    /// Emit a random instance in the file format.
    Gen(GenArgs),
}

#[derive(Args)]
struct JsonArg {
    /// Machine-readable report.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    #[arg(long)]
    input: PathBuf,
    /// Write the tree as DOT here.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Route through the alphabetic reduction (requires `=` absent from
    /// the instance's operators).
    #[arg(long)]
    no_equality: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    input: PathBuf,
    /// Also solve exactly and report the gap.
    #[arg(long)]
    exact_gap: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Tree in s-expression form.
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    /// Tree class: 2wcst, split, or gbst.
    #[arg(long = "class")]
    class: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportDotArgs {
    #[arg(long)]
    input: PathBuf,
    /// Tree to render (s-expression file); solves the instance when
    /// omitted.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated instance sizes.
    #[arg(long, default_value = "50,100,200")]
    sizes: String,
    /// Runs per size; the median is reported.
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Operators, e.g. "< <= =".
    #[arg(long, default_value = "< <= =")]
    ops: String,
    /// Queries are the keys only (no gap classes).
    #[arg(long)]
    keys_only: bool,
    /// Weight style: ints, ties, or rationals.
    #[arg(long, default_value = "ints")]
    style: String,
}

enum CliError {
    Usage(String),
    Infeasible(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 1,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Internal(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(args) => cmd_solve(args),
        Command::Approx(args) => cmd_approx(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::GbstCounterexample(args) => cmd_counterexample(args),
        Command::ExportDot(args) => cmd_export_dot(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn rational_fields(value: &BigRational) -> (String, String) {
    let decimal = value.to_f64().map(|f| format!("{f:.6}")).unwrap_or_else(|| "?".into());
    (value.to_string(), decimal)
}

fn emit(json: bool, report: &str, value: Value) {
    if json {
        println!("{}", serde_json::to_string_pretty(&value).expect("report serializes"));
    } else {
        print!("{report}");
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.input)?;
    let solution = if args.no_equality {
        if inst.ops().contains(CmpOp::Eq) {
            return Err(usage(
                "--no-equality requires an instance whose operators exclude `=`",
            ));
        }
        match noeq::solve_noeq(&inst) {
            Ok(s) => s,
            Err(noeq::NoeqError::NoCorrectTree(a, b)) => {
                return Err(CliError::Infeasible(format!(
                    "no correct tree: cannot separate {a} from {b}"
                )))
            }
            Err(e @ noeq::NoeqError::Internal(_)) => return Err(CliError::Internal(e.to_string())),
            Err(e) => return Err(usage(e)),
        }
    } else {
        match dp::solve(&inst) {
            Ok(s) => s,
            Err(dp::SolveError::Infeasible) => {
                return Err(CliError::Infeasible("no correct tree exists".into()))
            }
            Err(e @ dp::SolveError::Internal(_)) => return Err(CliError::Internal(e.to_string())),
            Err(e) => return Err(usage(e)),
        }
    };
    let (cost, decimal) = rational_fields(&solution.cost);
    let sexpr = trees::to_sexpr(&solution.tree, &inst);
    let spuler = trees::spuler_check(&solution.tree, &inst);
    if let Some(dot_path) = &args.dot {
        std::fs::write(dot_path, trees::export_dot(&solution.tree, &inst))
            .map_err(|e| usage(format!("cannot write {}: {e}", dot_path.display())))?;
    }
    let mut report = String::new();
    let _ = writeln!(report, "n: {}", inst.n());
    let _ = writeln!(report, "cost: {cost} ({decimal})");
    let _ = writeln!(report, "comparisons: {}", solution.tree.root.internal_count());
    let _ = writeln!(report, "spuler: {spuler}");
    let _ = writeln!(report, "tree: {sexpr}");
    emit(
        args.json,
        &report,
        json!({
            "n": inst.n(),
            "cost": cost,
            "cost_decimal": decimal,
            "comparisons": solution.tree.root.internal_count(),
            "spuler": spuler,
            "tree": sexpr,
        }),
    );
    Ok(())
}

fn cmd_approx(args: ApproxArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.input)?;
    let solution = if inst.ops().equality_only() {
        approx::equality_chain(&inst)
    } else {
        approx::approx3(&inst)
    };
    let solution = match solution {
        Ok(s) => s,
        Err(approx::ApproxError::Infeasible) => {
            return Err(CliError::Infeasible("no correct tree exists".into()))
        }
        Err(e @ approx::ApproxError::Internal(_)) => return Err(CliError::Internal(e.to_string())),
        Err(e) => return Err(usage(e)),
    };
    // Entropy needs weights summing to 1; normalize and report the total.
    let total = inst.total_weight();
    let (normalized, _) = inst
        .normalized()
        .ok_or_else(|| usage("instance has zero total weight"))?;
    let entropy = approx::entropy(&normalized).map_err(|e| CliError::Internal(e.to_string()))?;
    let normalized_cost = &solution.cost / &total;
    let gap_to_entropy = normalized_cost.to_f64().map(|c| c - entropy).unwrap_or(f64::NAN);

    let (cost, decimal) = rational_fields(&solution.cost);
    let mut report = String::new();
    let _ = writeln!(report, "n: {}", inst.n());
    let _ = writeln!(report, "total-weight: {total}");
    let _ = writeln!(report, "cost: {cost} ({decimal})");
    let _ = writeln!(report, "entropy: {entropy:.9}");
    let _ = writeln!(report, "cost-minus-entropy (normalized): {gap_to_entropy:.9}");
    let mut fields = json!({
        "n": inst.n(),
        "total_weight": total.to_string(),
        "cost": cost,
        "cost_decimal": decimal,
        "entropy": entropy,
        "cost_minus_entropy_normalized": gap_to_entropy,
        "tree": trees::to_sexpr(&solution.tree, &inst),
    });
    if args.exact_gap {
        let exact = dp::solve(&inst).map_err(|e| CliError::Internal(e.to_string()))?;
        let gap = &solution.cost - &exact.cost;
        let _ = writeln!(report, "exact-optimum: {}", exact.cost);
        let _ = writeln!(report, "gap-to-optimum: {gap}");
        fields["exact_optimum"] = json!(exact.cost.to_string());
        fields["gap_to_optimum"] = json!(gap.to_string());
    }
    let _ = writeln!(report, "tree: {}", trees::to_sexpr(&solution.tree, &inst));
    emit(args.json, &report, fields);
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.input)?;
    let text = std::fs::read_to_string(&args.tree)
        .map_err(|e| usage(format!("cannot read {}: {e}", args.tree.display())))?;
    let tree = trees::parse_sexpr(text.trim(), &inst)
        .map_err(|e| usage(format!("{}: {e}", args.tree.display())))?;
    let report = trees::verify(&tree, &inst);
    let spuler = trees::spuler_check(&tree, &inst);
    let cost = report.is_ok().then(|| trees::cost(&tree, &inst).expect("verified"));
    let mut out = String::new();
    let _ = writeln!(out, "correct: {}", report.correct());
    let _ = writeln!(out, "irreducible: {}", report.irreducible());
    let _ = writeln!(out, "ops-legal: {}", report.ops_legal());
    let _ = writeln!(out, "spuler: {spuler}");
    match &cost {
        Some(c) => {
            let (exact, decimal) = rational_fields(c);
            let _ = writeln!(out, "cost: {exact} ({decimal})");
        }
        None => {
            let _ = writeln!(out, "failures: {report}");
        }
    }
    emit(
        args.json,
        &out,
        json!({
            "correct": report.correct(),
            "irreducible": report.irreducible(),
            "ops_legal": report.ops_legal(),
            "spuler": spuler,
            "cost": cost.as_ref().map(|c| c.to_string()),
            "failures": report.failures.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        }),
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.input)?;
    let map_err = |e: oracle::OracleError| match e {
        oracle::OracleError::Infeasible => {
            CliError::Infeasible("no correct tree exists".into())
        }
        other => usage(other),
    };
    let (class, cost, tree) = match args.class.as_str() {
        "2wcst" => {
            let sol = oracle::brute_2wcst(&inst).map_err(map_err)?;
            let sexpr = trees::to_sexpr(&sol.tree, &inst);
            ("2wcst", sol.cost, Some(sexpr))
        }
        "split" => ("split", oracle::brute_split(&inst).map_err(map_err)?, None),
        "gbst" => ("gbst", oracle::brute_gbst(inst.betas()).map_err(map_err)?, None),
        other => return Err(usage(format!("unknown tree class `{other}`"))),
    };
    let (exact, decimal) = rational_fields(&cost);
    let mut report = String::new();
    let _ = writeln!(report, "class: {class}");
    let _ = writeln!(report, "cost: {exact} ({decimal})");
    if let Some(t) = &tree {
        let _ = writeln!(report, "tree: {t}");
    }
    emit(
        args.json,
        &report,
        json!({ "class": class, "cost": exact, "cost_decimal": decimal, "tree": tree }),
    );
    Ok(())
}

fn cmd_counterexample(args: JsonArg) -> Result<(), CliError> {
    let table = splitgbst::counterexample_weights();
    let names: Vec<String> = table.iter().map(|(k, _)| k.to_string()).collect();
    let beta: Vec<BigRational> = table.iter().map(|(_, w)| w.clone()).collect();

    let base = splitgbst::huang_wong(&beta).map_err(|e| CliError::Internal(e.to_string()))?;
    let d1 = names.iter().position(|k| k == "d1").expect("table has d1") + 1;
    let delta = BigRational::new(99.into(), 100.into());
    let probe = splitgbst::hw_monotonicity_probe(&beta, d1, &delta)
        .map_err(|e| CliError::Internal(e.to_string()))?;

    // Rerun on the bumped weights to extract the tree the recurrence
    // found there, then price that tree on the original table.
    let mut bumped = beta.clone();
    bumped[d1 - 1] += &delta;
    let perturbed = splitgbst::huang_wong(&bumped).map_err(|e| CliError::Internal(e.to_string()))?;
    let exhibited = splitgbst::gbst_cost(&perturbed.tree, &beta)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    if exhibited >= base.cost {
        return Err(CliError::Internal(format!(
            "extracted tree costs {exhibited}, not below {}",
            base.cost
        )));
    }
    let tree_text = splitgbst::gbst_to_text(&perturbed.tree, &names);

    let (before, _) = rational_fields(&probe.before);
    let (after, after_dec) = rational_fields(&probe.after);
    let mut report = String::new();
    let _ = writeln!(report, "keys: {}", names.len());
    let _ = writeln!(report, "huang-wong value: {before}");
    let _ = writeln!(report, "value after d1 += 99/100: {after} ({after_dec})");
    let _ = writeln!(report, "violation: {}", probe.violated);
    let _ = writeln!(report, "exhibited tree cost: {exhibited}");
    let _ = writeln!(report, "exhibited tree: {tree_text}");
    emit(
        args.json,
        &report,
        json!({
            "keys": names.len(),
            "huang_wong_value": before,
            "perturbed_value": after,
            "violation": probe.violated,
            "exhibited_tree_cost": exhibited.to_string(),
            "exhibited_tree": tree_text,
        }),
    );
    Ok(())
}

fn cmd_export_dot(args: ExportDotArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.input)?;
    let tree = match &args.tree {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            trees::parse_sexpr(text.trim(), &inst)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => match dp::solve(&inst) {
            Ok(s) => s.tree,
            Err(dp::SolveError::Infeasible) => {
                return Err(CliError::Infeasible("no correct tree exists".into()))
            }
            Err(e) => return Err(CliError::Internal(e.to_string())),
        },
    };
    std::fs::write(&args.out, trees::export_dot(&tree, &inst))
        .map_err(|e| usage(format!("cannot write {}: {e}", args.out.display())))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let sizes: Vec<usize> = args
        .sizes
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| usage(format!("bad size `{s}`"))))
        .collect::<Result<_, _>>()?;
    if args.runs == 0 {
        return Err(usage("--runs must be positive"));
    }
    let mut medians: Vec<(usize, f64)> = Vec::new();
    let mut report = String::new();
    for &n in &sizes {
        let cfg = gen::GenConfig::new(n);
        let inst = gen::instance(args.seed, &cfg);
        let mut times: Vec<f64> = Vec::new();
        for _ in 0..args.runs {
            let start = Instant::now();
            let sol = dp::solve(&inst).map_err(|e| CliError::Internal(e.to_string()))?;
            let elapsed = start.elapsed().as_secs_f64();
            std::hint::black_box(sol.cost);
            times.push(elapsed);
        }
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        let median = times[times.len() / 2];
        let _ = writeln!(report, "n={n}: median {median:.3}s over {} runs", args.runs);
        medians.push((n, median));
    }
    let mut ratios = Vec::new();
    for pair in medians.windows(2) {
        let (n0, t0) = pair[0];
        let (n1, t1) = pair[1];
        let ratio = t1 / t0;
        let _ = writeln!(report, "time({n1})/time({n0}) = {ratio:.2}");
        ratios.push(json!({ "from": n0, "to": n1, "ratio": ratio }));
    }
    emit(
        args.json,
        &report,
        json!({
            "seed": args.seed,
            "runs": args.runs,
            "medians": medians
                .iter()
                .map(|(n, t)| json!({ "n": n, "seconds": t }))
                .collect::<Vec<_>>(),
            "ratios": ratios,
        }),
    );
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let raw: Vec<RawOp> = args
        .ops
        .split_whitespace()
        .map(|tok| RawOp::parse(tok).ok_or_else(|| usage(format!("unknown operator `{tok}`"))))
        .collect::<Result<_, _>>()?;
    let ops = twocst::instances::normalize_ops(&raw);
    if ops == OpSet::empty() {
        return Err(usage("operator set is empty"));
    }
    let style = match args.style.as_str() {
        "ints" => gen::WeightStyle::Ints { max: 20 },
        "ties" => gen::WeightStyle::Tied,
        "rationals" => gen::WeightStyle::Rationals { max_numer: 12, max_denom: 6 },
        other => return Err(usage(format!("unknown style `{other}`"))),
    };
    let cfg = gen::GenConfig { n: args.n, ops, standard: !args.keys_only, style };
    let inst = gen::instance(args.seed, &cfg);
    print!("{}", serialize_instance(&inst));
    Ok(())
}

// Unused import guard: BigRational::zero is used in tests only.
#[allow(dead_code)]
fn _rational_zero() -> BigRational {
    BigRational::zero()
}
