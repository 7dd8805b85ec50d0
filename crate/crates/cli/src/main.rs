//! `sk`: command-line front end for the 𝒦 / 𝒦^! duality engine.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use sk_core::boxtensor::{box_tensor, BoxError, Guards, SidedModule};
use sk_core::duality::{cotrace, dualize_da, undualize_dd};
use sk_core::examples::{
    build_lspace_dd, elliptic_da, elliptic_dual_da, transformer_da, transformer_dual_da, LspaceModel, StaircaseData,
};
use sk_core::kdual::parse_dual;
use sk_core::perturbation::trace_action;
use sk_core::report::Report;
use sk_core::structures::{
    bonsai_scan_kda, check_dd, check_dd_where, check_kda, check_kdual_da, check_strict_unital_kda,
    check_strict_unital_kdual_da, check_type_d, cobonsai_scan_d, cobonsai_scan_dd, commensurability_d,
    commensurability_dd, commensurability_kda, k_sequences, show_seq, DDStruct, DStruct, FnKDa, FnKDualDa, KDa,
    KDualDa, OverKDual,
};
use sk_core::suites;
use sk_core::{algebra_k::parse_kmono, DualMono, Idem, KMono};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "sk", version, about = "Koszul duality for the surgery algebra: verification and module calculus")]
struct Cli {
    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Degree bound for 𝒦 monomials (length bound for 𝒦^! words).
    #[arg(long, global = true, default_value_t = 4)]
    max_deg: u32,
    /// Bound on the number of algebra inputs.
    #[arg(long, global = true, default_value_t = 4)]
    max_len: usize,
    /// Depth of path scans.
    #[arg(long, global = true, default_value_t = 12)]
    max_iter: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Axioms of 𝒦 and 𝒦^!, the 𝒦^!_∞ transfer and the retraction of ℒ.
    /// 𝒦 and 𝒦^! associativity run to twice --max-deg, the transfer to
    /// --max-len + 2 inputs.
    VerifyAlgebra,
    /// The cotrace, the trace values, Tr ⊠ Co = id, Co ⊠ Tr = id and the
    /// weight and grading laws.
    VerifyDuality,
    /// Elliptic, transformer and Whitehead examples.
    VerifyExamples,
    /// Evaluate one trace action m(a₁, …, a_k; b₁, …, b_n).
    Trace {
        /// Comma-separated 𝒦 inputs, a₁ (acting first) to a_k.
        #[arg(long, default_value = "")]
        left: String,
        /// Comma-separated 𝒦^! inputs b₁, …, b_n (`z.s.th`, `f+`).
        #[arg(long, default_value = "")]
        right: String,
    },
    /// Co ⊠ M for a built-in DA bimodule, or the DD bimodule of a staircase file.
    Dualize {
        /// identity, elliptic or transformer.
        name: Option<String>,
        #[arg(long)]
        stair: Option<PathBuf>,
    },
    /// Tr ⊠ N for a DD file: the nonzero actions on scanned inputs.
    Undualize {
        #[arg(long)]
        dd: PathBuf,
        /// Evaluate this one comma-separated input sequence only.
        #[arg(long)]
        input: Option<String>,
    },
    /// M ⊠ N. Operands: co, tr, identity, elliptic, transformer,
    /// identity-dual, elliptic-dual, transformer-dual, or a .dd / .d file.
    Tensor { left: String, right: String },
    /// Structure relation of a file or built-in.
    Check(Target),
    /// Cobonsai bound and commensurability constant.
    Scan(Target),
}

#[derive(Args)]
struct Target {
    #[arg(long)]
    dd: Option<PathBuf>,
    #[arg(long)]
    d: Option<PathBuf>,
    #[arg(long)]
    stair: Option<PathBuf>,
    /// A built-in bimodule name.
    #[arg(long)]
    builtin: Option<String>,
}

/// What a command produced: reports decide the exit code, text is printed.
struct Outcome {
    reports: Vec<Report>,
    text: String,
    json: serde_json::Value,
}

impl Outcome {
    fn reports(reports: Vec<Report>) -> Outcome {
        Outcome { reports, text: String::new(), json: serde_json::Value::Null }
    }

    fn text(text: String, json: serde_json::Value) -> Outcome {
        Outcome { reports: Vec::new(), text, json }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("SK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().ok();
    }
    match run(&cli) {
        Ok(out) => {
            let passed = out.reports.iter().all(Report::passed);
            if cli.json {
                let v = if out.reports.is_empty() {
                    out.json
                } else {
                    serde_json::json!({ "passed": passed, "reports": out.reports })
                };
                println!("{}", serde_json::to_string_pretty(&v).expect("reports serialize"));
            } else {
                print!("{}", out.text);
                for r in &out.reports {
                    print!("{r}");
                }
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let code = if e.downcast_ref::<Usage>().is_some() { 2 } else { 1 };
            if cli.json {
                println!("{}", serde_json::json!({ "passed": false, "error": format!("{e:#}") }));
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let guards = Guards::default();
    Ok(match &cli.cmd {
        Cmd::VerifyAlgebra => Outcome::reports(suites::verify_algebra(cli.max_deg, cli.max_len)),
        Cmd::VerifyDuality => Outcome::reports(suites::verify_duality(cli.max_deg, cli.max_len)),
        Cmd::VerifyExamples => Outcome::reports(suites::verify_examples(cli.max_iter)),
        Cmd::Trace { left, right } => {
            let a = parse_k_seq(left)?;
            let b = parse_dual_seq(right)?;
            let v = trace_action(&a, &b).map_err(usage)?;
            let shown = if v.is_zero() {
                "0".to_string()
            } else {
                v.iter().map(Idem::to_string).collect::<Vec<_>>().join(" + ")
            };
            Outcome::text(
                format!("{shown}\n"),
                serde_json::json!({ "left": show_seq(&a), "right": show_seq(&b), "value": shown }),
            )
        }
        Cmd::Dualize { name, stair } => {
            let dd = match (name, stair) {
                (Some(n), None) => dualize_da(builtin_da(n)?.as_ref(), guards)?,
                (None, Some(p)) => build_lspace_dd(&StaircaseData::parse(&read(p)?)?)?,
                _ => return Err(usage("give either a built-in name or --stair FILE")),
            };
            dd_outcome(&dd)
        }
        Cmd::Undualize { dd, input } => {
            let n = DDStruct::parse(&read(dd)?)?;
            let m = undualize_dd(n);
            let seqs = match input {
                Some(s) => vec![parse_k_seq(s)?],
                None => k_sequences(cli.max_len, cli.max_deg),
            };
            da_table(&m, &seqs)?
        }
        Cmd::Tensor { left, right } => {
            let l = operand(left)?;
            let r = operand(right)?;
            let out = box_tensor(&l, &r, guards).map_err(|e| match e {
                BoxError::Eval(e) => e.into(),
                e => usage(e),
            })?;
            match out {
                SidedModule::DD(d) => dd_outcome(&d),
                SidedModule::D(d) => {
                    Outcome::text(d.to_text(), serde_json::json!({ "kind": "D", "text": d.to_text() }))
                }
                SidedModule::DA(m) => da_table(m.as_ref(), &k_sequences(cli.max_len, cli.max_deg))?,
                SidedModule::DualDA(m) => dual_da_table(m.as_ref(), cli.max_len, cli.max_deg)?,
                other => return Err(usage(format!("result is {}, which has no printed form", other.kind()))),
            }
        }
        Cmd::Check(t) => Outcome::reports(check_target(t, cli)?),
        Cmd::Scan(t) => scan_target(t, cli)?,
    })
}

/// Bad flags, names or inputs; exits 2 where a failed check exits 1.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).map_err(usage)
}

fn dd_outcome(d: &DDStruct) -> Outcome {
    Outcome::text(d.to_text(), serde_json::json!({ "kind": "DD", "text": d.to_text() }))
}

fn builtin_da(name: &str) -> Result<Arc<dyn KDa>> {
    Ok(match name {
        "identity" => Arc::new(FnKDa::identity()),
        "elliptic" => Arc::new(elliptic_da()),
        "transformer" => Arc::new(transformer_da()),
        _ => return Err(usage(format!("unknown built-in DA bimodule `{name}` (identity, elliptic, transformer)"))),
    })
}

fn builtin_dual_da(name: &str) -> Result<Arc<dyn KDualDa>> {
    Ok(match name {
        "identity-dual" => Arc::new(FnKDualDa::identity()),
        "elliptic-dual" => Arc::new(elliptic_dual_da()),
        "transformer-dual" => Arc::new(transformer_dual_da()),
        _ => {
            return Err(usage(format!(
                "unknown built-in DA bimodule `{name}` (identity-dual, elliptic-dual, transformer-dual)"
            )))
        }
    })
}

fn operand(s: &str) -> Result<SidedModule> {
    Ok(match s {
        "co" => SidedModule::DD(cotrace()),
        "tr" => SidedModule::Trace,
        _ if s.ends_with("-dual") => SidedModule::DualDA(builtin_dual_da(s)?),
        _ if s.ends_with(".dd") => SidedModule::DD(DDStruct::parse(&read(Path::new(s))?)?),
        _ if s.ends_with(".d") => SidedModule::D(DStruct::<OverKDual>::parse(&read(Path::new(s))?)?),
        _ => SidedModule::DA(builtin_da(s)?),
    })
}

/// One printed action: generator, inputs, output term.
type Row = (String, String, String);

/// Nonzero actions δ(a, x) = Σ y ⊗ c over the given sequences.
fn da_table(m: &dyn KDa, seqs: &[Vec<KMono>]) -> Result<Outcome> {
    let gens = m.gens();
    let rows: Result<Vec<Vec<Row>>, _> = seqs
        .par_iter()
        .map(|a| {
            let mut out = Vec::new();
            for (x, g) in gens.iter().enumerate() {
                if a.first().is_some_and(|a1| a1.right_idem() != g.left) {
                    continue;
                }
                for (y, c) in m.delta(a, x)? {
                    out.push((g.id.clone(), show_seq(a), format!("{} ⊗ {c}", gens[y].id)));
                }
            }
            Ok::<_, sk_core::structures::EvalError>(out)
        })
        .collect();
    let rows: Vec<_> = rows?.into_iter().flatten().collect();
    table_outcome(rows)
}

fn dual_da_table(m: &dyn KDualDa, max_len: usize, len_cap: u32) -> Result<Outcome> {
    let gens = m.gens();
    let mut rows = Vec::new();
    for b in sk_core::structures::dual_sequences(max_len, len_cap) {
        for (x, g) in gens.iter().enumerate() {
            if b.first().is_some_and(|b1| b1.left_idem() != g.right) {
                continue;
            }
            for (c, y) in m.delta(x, &b)? {
                rows.push((g.id.clone(), show_seq(&b), format!("{c} ⊗ {}", gens[y].id)));
            }
        }
    }
    table_outcome(rows)
}

fn table_outcome(rows: Vec<Row>) -> Result<Outcome> {
    let text: String = rows.iter().map(|(x, a, v)| format!("δ({a}; {x}) ∋ {v}\n")).collect();
    let json = serde_json::json!(rows
        .iter()
        .map(|(x, a, v)| serde_json::json!({ "gen": x, "inputs": a, "term": v }))
        .collect::<Vec<_>>());
    Ok(Outcome::text(text, json))
}

fn check_target(t: &Target, cli: &Cli) -> Result<Vec<Report>> {
    Ok(match t {
        Target { dd: Some(p), .. } => vec![check_dd(&DDStruct::parse(&read(p)?)?)],
        Target { d: Some(p), .. } => vec![check_type_d(&DStruct::<OverKDual>::parse(&read(p)?)?)],
        Target { stair: Some(p), .. } => {
            let model = LspaceModel::new(&StaircaseData::parse(&read(p)?)?)?;
            let mut r = check_dd_where(&model.dd(), |g| model.inside(g, 1));
            r.note("generators at either end of the window are skipped");
            vec![r]
        }
        Target { builtin: Some(n), .. } => {
            if n.ends_with("-dual") {
                let m = builtin_dual_da(n)?;
                vec![
                    check_kdual_da(m.as_ref(), cli.max_len, cli.max_deg),
                    check_strict_unital_kdual_da(m.as_ref(), cli.max_len, cli.max_deg),
                ]
            } else {
                let m = builtin_da(n)?;
                vec![
                    check_kda(m.as_ref(), cli.max_len, cli.max_deg),
                    check_strict_unital_kda(m.as_ref(), cli.max_len, cli.max_deg),
                ]
            }
        }
        _ => return Err(usage("give one of --dd, --d, --stair, --builtin")),
    })
}

fn scan_target(t: &Target, cli: &Cli) -> Result<Outcome> {
    let n = cli.max_iter;
    let (kind, bound, c) = match t {
        Target { dd: Some(p), .. } => {
            let d = DDStruct::parse(&read(p)?)?;
            ("cobonsai", cobonsai_scan_dd(&d, n) as i64, commensurability_dd(&d, n))
        }
        Target { d: Some(p), .. } => {
            let d = DStruct::<OverKDual>::parse(&read(p)?)?;
            ("cobonsai", cobonsai_scan_d(&d, n) as i64, commensurability_d(&d, n))
        }
        Target { stair: Some(p), .. } => {
            let d = build_lspace_dd(&StaircaseData::parse(&read(p)?)?)?;
            ("cobonsai", cobonsai_scan_dd(&d, n) as i64, commensurability_dd(&d, n))
        }
        Target { builtin: Some(name), .. } => {
            let m = builtin_da(name)?;
            let b = bonsai_scan_kda(m.as_ref(), cli.max_len, cli.max_deg)?;
            ("bonsai", b as i64, commensurability_kda(m.as_ref(), cli.max_len, cli.max_deg)?)
        }
        _ => return Err(usage("give one of --dd, --d, --stair, --builtin")),
    };
    Ok(Outcome::text(
        format!("{kind} bound: {bound}\ncommensurability constant: {c}\n"),
        serde_json::json!({ kind: bound, "commensurability": c }),
    ))
}

fn split(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

/// Parses a₁, …, a_k. A bare `U` or `1` takes its idempotent from a
/// neighbour: a_{i+1} starts where a_i ends.
fn parse_k_seq(s: &str) -> Result<Vec<KMono>> {
    let toks = split(s);
    let mut out: Vec<Option<KMono>> =
        toks.iter().map(|t| parse_kmono(t, None).ok().filter(|_| !ambiguous(t))).collect();
    for _ in 0..toks.len() {
        for i in 0..toks.len() {
            if out[i].is_some() {
                continue;
            }
            let hint = out
                .get(i + 1)
                .and_then(|n| n.map(|n| n.right_idem()))
                .or_else(|| i.checked_sub(1).and_then(|p| out[p].map(|p| p.left_idem())));
            if let Some(h) = hint {
                out[i] = Some(parse_kmono(toks[i], Some(h)).map_err(usage)?);
            }
        }
    }
    toks.iter().zip(out).map(|(t, m)| m.map_or_else(|| parse_kmono(t, Some(Idem::I1)).map_err(usage), Ok)).collect()
}

fn ambiguous(t: &str) -> bool {
    t == "1" || t.split(['*', ' ']).filter(|f| !f.is_empty()).all(|f| f == "U" || f.starts_with("U^"))
}

/// Parses b₁, …, b_n; a bare `th` or `1` takes its idempotent from a neighbour.
fn parse_dual_seq(s: &str) -> Result<Vec<DualMono>> {
    let toks = split(s);
    let amb = |t: &str| t.split('.').all(|f| f == "th" || f == "θ" || f == "1");
    let mut out: Vec<Option<DualMono>> =
        toks.iter().map(|t| if amb(t) { None } else { parse_dual(t, None).ok() }).collect();
    for _ in 0..toks.len() {
        for i in 0..toks.len() {
            if out[i].is_some() {
                continue;
            }
            let hint = out
                .get(i + 1)
                .and_then(|n| n.map(|n| n.left_idem()))
                .or_else(|| i.checked_sub(1).and_then(|p| out[p].map(|p| p.right_idem())));
            if let Some(h) = hint {
                out[i] = Some(parse_dual(toks[i], Some(h)).map_err(usage)?);
            }
        }
    }
    toks.iter().zip(out).map(|(t, m)| m.map_or_else(|| parse_dual(t, None).map_err(usage), Ok)).collect()
}
