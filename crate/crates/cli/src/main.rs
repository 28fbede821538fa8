//! `crossed` — command-line front end for the crossed-product calculus.
//!
//! Every subcommand reads JSON files in the formats documented in
//! `crossed_core::schema` (systems with an optional `ideal_J`, sparse matrix
//! elements, representation candidates) plus an optional top-level `label`
//! string that is echoed back in the output. Results go to stdout either as
//! human-readable tables or, with `--json`, as machine-readable JSON with
//! sorted keys and numbers rounded to twelve significant digits, so the same
//! input always produces byte-identical output.
//!
//! Exit codes: 0 on success, 2 for anything wrong with the input
//! (validation, usage, domain, unsupported), 3 when a computation hits its
//! resource budget (partial results are still printed).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crossed_core::error::{Error, Result};
use crossed_core::{
    build_canonical, build_katsura, dual_partial_map, element_to_json, parse_element,
    parse_representation, parse_system, reduce, stacey_reduce, system_to_json,
    toeplitz_truncation, unit_recovery, BlockIdeal, DynamicalSystem, MatElement, NormContext,
    Reduction, Representation,
};

#[derive(Parser)]
#[command(
    name = "crossed",
    version,
    about = "Calculator for finite-dimensional C*-dynamical systems and their crossed products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a system file: blocks, map shape, kernel, declared ideal
    Info(SystemArgs),
    /// Run the ideal chain J ⊆ J₁ ⊆ … to J_∞ and quotient it out
    Reduce(SystemArgs),
    /// Reduce against the full ideal (the automorphism quotient)
    Stacey(SystemArgs),
    /// Build the canonical system with an injectivity-splitting coefficient algebra
    Canonical(SystemArgs),
    /// Build the pullback coefficient algebra and compare its two legs
    Katsura(SystemArgs),
    /// Per-diagonal norms of an element with certified bounds
    Norm(ElementArgs),
    /// Summable seminorm of an element (the sum of its diagonal norms)
    Seminorm(ElementArgs),
    /// Multiply elements in the twisted matrix calculus
    Star(StarArgs),
    /// Decompose an element into its diagonals
    Nk(ElementArgs),
    /// Iterated C*-norm estimate r_k between the certified bounds
    Estimate(EstimateArgs),
    /// Validate a covariant-representation candidate and report what it kills
    CheckRep(CheckRepArgs),
    /// Dual picture: the partial map on blocks and topological freeness
    Dual(SystemArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Emit machine-readable JSON instead of the table view
    #[arg(long)]
    json: bool,
    /// Numerical tolerance (overrides the CROSSED_TOL environment variable)
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SystemArgs {
    /// JSON file describing the system and, optionally, its ideal
    #[arg(long)]
    system: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ElementArgs {
    /// JSON file describing the system and, optionally, its ideal
    #[arg(long)]
    system: PathBuf,
    /// JSON file with the element's nonzero entries
    #[arg(long)]
    element: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct StarArgs {
    /// JSON file describing the system
    #[arg(long)]
    system: PathBuf,
    /// Factors, leftmost first; repeat the flag once per factor
    #[arg(long = "element", required = true)]
    element: Vec<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct EstimateArgs {
    /// JSON file describing the system and, optionally, its ideal
    #[arg(long)]
    system: PathBuf,
    /// JSON file with the element's nonzero entries
    #[arg(long)]
    element: PathBuf,
    /// Number of norm-doubling steps r_1 … r_kmax
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    /// Stored-entry budget before the iteration stops with partial results
    #[arg(long, default_value_t = 200_000)]
    budget: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct CheckRepArgs {
    /// JSON file describing the system
    #[arg(long)]
    system: PathBuf,
    /// JSON file with pi_blocks, U and an optional window_levels count
    #[arg(long, conflicts_with = "truncation")]
    rep: Option<PathBuf>,
    /// Check the built-in finite-level truncation at this depth instead
    #[arg(long)]
    truncation: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Resource { .. } => 3u8,
                _ => 2u8,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Info(a) => cmd_info(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Stacey(a) => cmd_stacey(a),
        Command::Canonical(a) => cmd_canonical(a),
        Command::Katsura(a) => cmd_katsura(a),
        Command::Norm(a) => cmd_norm(a),
        Command::Seminorm(a) => cmd_seminorm(a),
        Command::Star(a) => cmd_star(a),
        Command::Nk(a) => cmd_nk(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::CheckRep(a) => cmd_check_rep(a),
        Command::Dual(a) => cmd_dual(a),
    }
}

// ---------------------------------------------------------------------------
// input plumbing
// ---------------------------------------------------------------------------

fn load_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("{}: not valid JSON: {e}", path.display())))
}

fn label_of(v: &Value) -> Option<String> {
    v.get("label").and_then(Value::as_str).map(str::to_owned)
}

fn load_system(path: &Path) -> Result<(DynamicalSystem, BlockIdeal, Option<String>)> {
    let v = load_json(path)?;
    let label = label_of(&v);
    let (system, ideal) = parse_system(&v)?;
    Ok((system, ideal, label))
}

fn load_element(system: &DynamicalSystem, path: &Path) -> Result<(MatElement, Option<String>)> {
    let v = load_json(path)?;
    let label = label_of(&v);
    let x = parse_element(system, &v)?;
    Ok((x, label))
}

/// `--tol`, else CROSSED_TOL, else 1e-10.
fn resolve_tol(flag: Option<f64>) -> Result<f64> {
    let accept = |t: f64, origin: &str| {
        if t.is_finite() && t > 0.0 {
            Ok(t)
        } else {
            Err(Error::Usage(format!(
                "{origin} must be a positive finite number, got {t}"
            )))
        }
    };
    if let Some(t) = flag {
        return accept(t, "--tol");
    }
    match std::env::var("CROSSED_TOL") {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) => accept(t, "CROSSED_TOL"),
            Err(_) => Err(Error::Usage(format!(
                "CROSSED_TOL must be a positive finite number, got {s:?}"
            ))),
        },
        Err(_) => Ok(1e-10),
    }
}

// ---------------------------------------------------------------------------
// output plumbing
// ---------------------------------------------------------------------------

/// Round to twelve significant digits so emitted numbers do not depend on
/// the parallel schedule or platform rounding of the last bits.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x + 0.0;
    }
    let mag = x.abs().log10().floor();
    let scale = 10f64.powf(11.0 - mag);
    let r = (x * scale).round() / scale;
    if r.is_finite() {
        r
    } else {
        x
    }
}

fn num(x: f64) -> Value {
    json!(round_sig(x))
}

fn fx(x: f64) -> String {
    format!("{}", round_sig(x))
}

fn ideal_json(s: &BlockIdeal) -> Value {
    Value::Array(s.members().iter().map(|&b| json!(b)).collect())
}

fn ideal_str(s: &BlockIdeal) -> String {
    format!("{:?}", s.members().iter().copied().collect::<Vec<_>>())
}

fn tags_json(tags: &[usize]) -> Value {
    Value::Array(tags.iter().map(|&b| json!(b)).collect())
}

/// Collects the labels found in the input files; `None` when no file had one.
fn labels_json(pairs: &[(&str, &Option<String>)]) -> Option<Value> {
    let mut m = Map::new();
    for (k, v) in pairs {
        if let Some(s) = v {
            m.insert((*k).to_string(), json!(s));
        }
    }
    if m.is_empty() {
        None
    } else {
        Some(Value::Object(m))
    }
}

fn payload(command: &str, labels: Option<Value>, fields: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    if let Some(l) = labels {
        m.insert("labels".into(), l);
    }
    for (k, v) in fields {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

fn emit(out: &OutputArgs, json_payload: Value, human: Vec<String>) {
    let text = if out.json {
        let mut t = serde_json::to_string_pretty(&json_payload).expect("payloads are plain JSON");
        t.push('\n');
        t
    } else {
        let mut t = human.join("\n");
        t.push('\n');
        t
    };
    write_stdout(&text);
}

/// Exits quietly when the consumer (a pager, `head`) closes the pipe early.
fn write_stdout(text: &str) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(1);
    }
}

fn label_lines(lines: &mut Vec<String>, pairs: &[(&str, &Option<String>)]) {
    for (k, v) in pairs {
        if let Some(s) = v {
            lines.push(format!("label ({k}): {s}"));
        }
    }
}

// ---------------------------------------------------------------------------
// shared norm preparation
// ---------------------------------------------------------------------------

/// Norm-type commands accept any ideal. When it meets the kernel the chain is
/// divided out first and the element pushed forward, exactly as the seminorm
/// on the full twisted algebra is defined.
enum Prepared {
    Degenerate,
    Ready {
        ctx: NormContext,
        x: MatElement,
        reduced: bool,
    },
}

fn prepare(system: &DynamicalSystem, j: &BlockIdeal, x: &MatElement) -> Result<Prepared> {
    if j.is_orthogonal_to(&system.endo().kernel_ideal()) {
        return Ok(Prepared::Ready {
            ctx: NormContext::new(system, j)?,
            x: x.clone(),
            reduced: false,
        });
    }
    let r = reduce(system, j)?;
    if r.degenerate {
        return Ok(Prepared::Degenerate);
    }
    let y = x.pushforward(&r.reduced_system, &r.quotient)?;
    Ok(Prepared::Ready {
        ctx: NormContext::new(&r.reduced_system, &r.reduced_ideal)?,
        x: y,
        reduced: true,
    })
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

fn cmd_info(a: SystemArgs) -> Result<()> {
    let (system, ideal, label) = load_system(&a.system)?;
    let algebra = system.algebra();
    let endo = system.endo();
    let kernel = endo.kernel_ideal();
    let orthogonal = ideal.is_orthogonal_to(&kernel);
    let multiplicity: Vec<Value> = endo
        .multiplicity()
        .iter()
        .map(|row| Value::Array(row.iter().map(|&m| json!(m)).collect()))
        .collect();
    let labels = labels_json(&[("system", &label)]);
    let p = payload(
        "info",
        labels,
        vec![
            (
                "blocks",
                Value::Array(algebra.block_dims().iter().map(|&d| json!(d)).collect()),
            ),
            ("total_dimension", json!(algebra.total_dim())),
            ("multiplicity", Value::Array(multiplicity)),
            (
                "pad",
                Value::Array(endo.pad().iter().map(|&z| json!(z)).collect()),
            ),
            ("unital", json!(endo.is_unital())),
            ("automorphism", json!(endo.is_automorphism())),
            ("kernel", ideal_json(&kernel)),
            ("ideal_J", ideal_json(&ideal)),
            ("ideal_orthogonal_to_kernel", json!(orthogonal)),
        ],
    );
    let mut lines = Vec::new();
    label_lines(&mut lines, &[("system", &label)]);
    lines.push(format!(
        "algebra: {} block(s) {:?}, total dimension {}",
        algebra.block_count(),
        algebra.block_dims(),
        algebra.total_dim()
    ));
    lines.push(format!(
        "map: unital {}, automorphism {}, pads {:?}",
        endo.is_unital(),
        endo.is_automorphism(),
        endo.pad()
    ));
    for (c, row) in endo.multiplicity().iter().enumerate() {
        lines.push(format!("multiplicity into block {c}: {row:?}"));
    }
    lines.push(format!("kernel blocks: {}", ideal_str(&kernel)));
    lines.push(format!(
        "ideal J: {} (orthogonal to kernel: {orthogonal})",
        ideal_str(&ideal)
    ));
    emit(&a.out, p, lines);
    Ok(())
}

fn reduction_fields(r: &Reduction) -> Vec<(&'static str, Value)> {
    vec![
        (
            "chain",
            Value::Array(r.chain.iter().map(ideal_json).collect()),
        ),
        ("j_infinity", ideal_json(&r.j_infinity)),
        ("i_infinity", ideal_json(&r.i_infinity)),
        ("degenerate", json!(r.degenerate)),
        (
            "reduced",
            system_to_json(&r.reduced_system, &r.reduced_ideal),
        ),
    ]
}

fn reduction_lines(lines: &mut Vec<String>, r: &Reduction) {
    for (n, step) in r.chain.iter().enumerate() {
        lines.push(format!("J_{n}: {}", ideal_str(step)));
    }
    lines.push(format!("J_inf: {}", ideal_str(&r.j_infinity)));
    lines.push(format!("I_inf (eventual kernel): {}", ideal_str(&r.i_infinity)));
    if r.degenerate {
        lines.push("degenerate: the chain swallowed every block; the reduced algebra is zero".into());
    } else {
        lines.push(format!(
            "reduced algebra: blocks {:?}, remaining ideal {}",
            r.reduced_system.algebra().block_dims(),
            ideal_str(&r.reduced_ideal)
        ));
    }
}

fn cmd_reduce(a: SystemArgs) -> Result<()> {
    let (system, ideal, label) = load_system(&a.system)?;
    let r = reduce(&system, &ideal)?;
    let p = payload(
        "reduce",
        labels_json(&[("system", &label)]),
        reduction_fields(&r),
    );
    let mut lines = Vec::new();
    label_lines(&mut lines, &[("system", &label)]);
    reduction_lines(&mut lines, &r);
    emit(&a.out, p, lines);
    Ok(())
}

fn cmd_stacey(a: SystemArgs) -> Result<()> {
    let (system, _, label) = load_system(&a.system)?;
    let r = stacey_reduce(&system);
    let p = payload(
        "stacey",
        labels_json(&[("system", &label)]),
        reduction_fields(&r),
    );
    let mut lines = Vec::new();
    label_lines(&mut lines, &[("system", &label)]);
    lines.push("covariance ideal: full (any ideal_J in the file is ignored)".into());
    reduction_lines(&mut lines, &r);
    emit(&a.out, p, lines);
    Ok(())
}

fn cmd_canonical(a: SystemArgs) -> Result<()> {
    let (system, ideal, label) = load_system(&a.system)?;
    let can = build_canonical(&system, &ideal)?;
    let r = can.reduction();
    let p = payload(
        "canonical",
        labels_json(&[("system", &label)]),
        vec![
            ("degenerate", json!(r.degenerate)),
            ("system", system_to_json(can.system(), can.covariance_ideal())),
            ("kernel_ideal", ideal_json(can.kernel_ideal())),
            ("covariance_ideal", ideal_json(can.covariance_ideal())),
            ("first_summand", tags_json(can.first_summand())),
            ("second_summand", tags_json(can.second_summand())),
            ("reduction_j_infinity", ideal_json(&r.j_infinity)),
        ],
    );
    let mut lines = Vec::new();
    label_lines(&mut lines, &[("system", &label)]);
    if r.degenerate {
        lines.push("degenerate reduction: the canonical system is the zero system".into());
    } else {
        lines.push(format!(
            "canonical algebra: blocks {:?} (first summand copies reduced blocks {:?}, second {:?})",
            can.system().algebra().block_dims(),
            can.first_summand(),
            can.second_summand()
        ));
        lines.push(format!(
            "kernel of the new map: {}",
            ideal_str(can.kernel_ideal())
        ));
        lines.push(format!(
            "covariance ideal (its annihilator): {}",
            ideal_str(can.covariance_ideal())
        ));
        lines.push(format!("divided out first: {}", ideal_str(&r.j_infinity)));
    }
    emit(&a.out, p, lines);
    Ok(())
}

fn cmd_katsura(a: SystemArgs) -> Result<()> {
    let (system, ideal, label) = load_system(&a.system)?;
    let kat = build_katsura(&system, &ideal)?;
    let degenerate = kat.canonical().reduction().degenerate;
    let covariance = kat.system().endo().kernel_ideal().annihilator();
    let p = payload(
        "katsura",
        labels_json(&[("system", &label)]),
        vec![
            ("degenerate", json!(degenerate)),
            ("system", system_to_json(kat.system(), &covariance)),
            ("j_x", ideal_json(kat.j_x())),
            ("iota1_iso", json!(kat.iota1_is_iso())),
            (
                "blocks",
                json!({
                    "first_only": tags_json(kat.first_only()),
                    "second_only": tags_json(kat.second_only()),
                    "tied": tags_json(kat.tied()),
                }),
            ),
            (
                "canonical",
                system_to_json(kat.canonical().system(), kat.canonical().covariance_ideal()),
            ),
        ],
    );
    let mut lines = Vec::new();
    label_lines(&mut lines, &[("system", &label)]);
    if degenerate {
        lines.push("degenerate reduction: the pullback is the zero system".into());
    } else {
        lines.push(format!(
            "pullback algebra: blocks {:?}",
            kat.system().algebra().block_dims()
        ));
        lines.push(format!(
            "block provenance: first-coordinate only {:?}, second only {:?}, tied {:?}",
            kat.first_only(),
            kat.second_only(),
            kat.tied()
        ));
        lines.push(format!(
            "comparison ideal on the base: {}",
            ideal_str(kat.j_x())
        ));
        lines.push(format!(
            "first leg is an isomorphism: {} (always true for the second leg)",
            kat.iota1_is_iso()
        ));
    }
    emit(&a.out, p, lines);
    Ok(())
}

/// Per-diagonal norms of the prepared element, in degree order.
fn per_diagonal(ctx: &NormContext, x: &MatElement) -> Vec<(i64, f64)> {
    x.diagonals()
        .iter()
        .map(|d| (d.degree(), ctx.diagonal_norm(d)))
        .collect()
}

fn per_diagonal_json(per: &[(i64, f64)]) -> Value {
    Value::Array(
        per.iter()
            .map(|&(k, v)| json!({"k": k, "value": num(v)}))
            .collect(),
    )
}

fn cmd_norm(a: ElementArgs) -> Result<()> {
    let (system, ideal, sys_label) = load_system(&a.system)?;
    let (x, el_label) = load_element(&system, &a.element)?;
    let labels = [("system", &sys_label), ("element", &el_label)];
    let (fields, mut lines) = match prepare(&system, &ideal, &x)? {
        Prepared::Degenerate => (
            vec![
                ("value", num(0.0)),
                ("exact", json!(true)),
                ("per_diagonal", Value::Array(vec![])),
                ("bounds", json!({"lower": num(0.0), "upper": num(0.0)})),
                ("reduced", json!(true)),
                ("degenerate", json!(true)),
            ],
            vec!["degenerate reduction: the element is annihilated, norm 0".to_string()],
        ),
        Prepared::Ready { ctx, x, reduced } => {
            let per = per_diagonal(&ctx, &x);
            let lower = per.iter().map(|&(_, v)| v).fold(0.0, f64::max);
            let upper: f64 = per.iter().map(|&(_, v)| v).sum();
            let exact = per.len() <= 1;
            let value = if exact { num(lower) } else { Value::Null };
            let mut lines = Vec::new();
            for &(k, v) in &per {
                lines.push(format!("diagonal k = {k}: {}", fx(v)));
            }
            lines.push(format!("bounds: lower {}, upper {}", fx(lower), fx(upper)));
            if exact {
                lines.push(format!("norm: {} (single diagonal, exact)", fx(lower)));
            } else {
                lines.push(
                    "norm: between the bounds (several diagonals; run `estimate` to tighten)"
                        .to_string(),
                );
            }
            if reduced {
                lines.push("note: the ideal met the kernel, so its chain was divided out first".into());
            }
            (
                vec![
                    ("value", value),
                    ("exact", json!(exact)),
                    ("per_diagonal", per_diagonal_json(&per)),
                    (
                        "bounds",
                        json!({"lower": num(lower), "upper": num(upper)}),
                    ),
                    ("reduced", json!(reduced)),
                    ("degenerate", json!(false)),
                ],
                lines,
            )
        }
    };
    let mut all_lines = Vec::new();
    label_lines(&mut all_lines, &labels);
    all_lines.append(&mut lines);
    emit(&a.out, payload("norm", labels_json(&labels), fields), all_lines);
    Ok(())
}

fn cmd_seminorm(a: ElementArgs) -> Result<()> {
    let (system, ideal, sys_label) = load_system(&a.system)?;
    let (x, el_label) = load_element(&system, &a.element)?;
    let labels = [("system", &sys_label), ("element", &el_label)];
    let (fields, mut lines) = match prepare(&system, &ideal, &x)? {
        Prepared::Degenerate => (
            vec![
                ("value", num(0.0)),
                ("per_diagonal", Value::Array(vec![])),
                ("bounds", json!({"lower": num(0.0), "upper": num(0.0)})),
                ("reduced", json!(true)),
                ("degenerate", json!(true)),
            ],
            vec!["degenerate reduction: the element is annihilated, seminorm 0".to_string()],
        ),
        Prepared::Ready { ctx, x, reduced } => {
            let per = per_diagonal(&ctx, &x);
            let lower = per.iter().map(|&(_, v)| v).fold(0.0, f64::max);
            let value: f64 = per.iter().map(|&(_, v)| v).sum();
            let mut lines = Vec::new();
            for &(k, v) in &per {
                lines.push(format!("diagonal k = {k}: {}", fx(v)));
            }
            lines.push(format!("seminorm (sum of diagonal norms): {}", fx(value)));
            if reduced {
                lines.push("note: the ideal met the kernel, so its chain was divided out first".into());
            }
            (
                vec![
                    ("value", num(value)),
                    ("per_diagonal", per_diagonal_json(&per)),
                    (
                        "bounds",
                        json!({"lower": num(lower), "upper": num(value)}),
                    ),
                    ("reduced", json!(reduced)),
                    ("degenerate", json!(false)),
                ],
                lines,
            )
        }
    };
    let mut all_lines = Vec::new();
    label_lines(&mut all_lines, &labels);
    all_lines.append(&mut lines);
    emit(
        &a.out,
        payload("seminorm", labels_json(&labels), fields),
        all_lines,
    );
    Ok(())
}

fn cmd_star(a: StarArgs) -> Result<()> {
    if a.element.len() < 2 {
        return Err(Error::Usage(
            "star needs at least two --element factors".into(),
        ));
    }
    let (system, _, sys_label) = load_system(&a.system)?;
    let mut factor_labels = Vec::new();
    let mut product: Option<MatElement> = None;
    for path in &a.element {
        let (x, label) = load_element(&system, path)?;
        factor_labels.push(label);
        product = Some(match product {
            None => x,
            Some(p) => p.star(&x),
        });
    }
    let product = product.expect("at least two factors");
    let mut m = Map::new();
    m.insert("command".into(), json!("star"));
    if let Some(l) = labels_json(&[("system", &sys_label)]) {
        m.insert("labels".into(), l);
    }
    if factor_labels.iter().any(Option::is_some) {
        m.insert(
            "factor_labels".into(),
            Value::Array(
                factor_labels
                    .iter()
                    .map(|l| l.as_ref().map_or(Value::Null, |s| json!(s)))
                    .collect(),
            ),
        );
    }
    m.insert("product".into(), element_to_json(&product));
    let mut lines = Vec::new();
    label_lines(&mut lines, &[("system", &sys_label)]);
    for (n, l) in factor_labels.iter().enumerate() {
        if let Some(s) = l {
            lines.push(format!("factor {n}: {s}"));
        }
    }
    let entries: Vec<_> = product.entries().collect();
    if entries.is_empty() {
        lines.push("product: 0".into());
    } else {
        lines.push(format!("product has {} nonzero entr(ies):", entries.len()));
        for (i, j, v) in entries {
            lines.push(format!("  ({i}, {j}): coefficient norm {}", fx(v.norm())));
        }
        lines.push("(run with --json for the full coefficients)".into());
    }
    emit(&a.out, Value::Object(m), lines);
    Ok(())
}

fn cmd_nk(a: ElementArgs) -> Result<()> {
    let (system, ideal, sys_label) = load_system(&a.system)?;
    let (x, el_label) = load_element(&system, &a.element)?;
    let labels = [("system", &sys_label), ("element", &el_label)];
    let prepared = prepare(&system, &ideal, &x)?;
    let diags = x.diagonals();
    let mut rows_json = Vec::new();
    let mut lines = Vec::new();
    label_lines(&mut lines, &labels);
    lines.push(format!("{} nonzero diagonal(s)", diags.len()));
    let (reduced, degenerate) = match &prepared {
        Prepared::Degenerate => (true, true),
        Prepared::Ready { reduced, .. } => (*reduced, false),
    };
    for d in &diags {
        let k = d.degree();
        let n = match &prepared {
            Prepared::Degenerate => 0.0,
            Prepared::Ready { ctx, x, .. } => ctx.diagonal_norm(&x.diagonal(k)),
        };
        let rows: Vec<Value> = d
            .rows()
            .map(|(r, v)| json!({"row": r, "norm": num(v.norm())}))
            .collect();
        lines.push(format!(
            "k = {k}: rows {:?}, diagonal norm {}",
            d.rows().map(|(r, _)| r).collect::<Vec<_>>(),
            fx(n)
        ));
        rows_json.push(json!({"k": k, "norm": num(n), "rows": Value::Array(rows)}));
    }
    let p = payload(
        "nk",
        labels_json(&labels),
        vec![
            ("count", json!(diags.len())),
            ("diagonals", Value::Array(rows_json)),
            ("reduced", json!(reduced)),
            ("degenerate", json!(degenerate)),
        ],
    );
    emit(&a.out, p, lines);
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let (system, ideal, sys_label) = load_system(&a.system)?;
    let (x, el_label) = load_element(&system, &a.element)?;
    let labels = [("system", &sys_label), ("element", &el_label)];
    let emit_estimate = |r: &[f64], lower: f64, upper: f64, complete: bool, reduced: bool| {
        let fields = vec![
            (
                "r",
                Value::Array(r.iter().map(|&v| num(v)).collect()),
            ),
            ("lower", num(lower)),
            ("upper", num(upper)),
            ("complete", json!(complete)),
            ("reduced", json!(reduced)),
        ];
        let mut lines = Vec::new();
        label_lines(&mut lines, &labels);
        for (k, v) in r.iter().enumerate() {
            lines.push(format!("r_{}: {}", k + 1, fx(*v)));
        }
        lines.push(format!("bounds: lower {}, upper {}", fx(lower), fx(upper)));
        if !complete {
            lines.push("stopped early: entry budget exhausted (partial values above)".into());
        }
        emit(
            &a.out,
            payload("estimate", labels_json(&labels), fields),
            lines,
        );
    };
    match prepare(&system, &ideal, &x)? {
        Prepared::Degenerate => {
            emit_estimate(&[], 0.0, 0.0, true, true);
            Ok(())
        }
        Prepared::Ready { ctx, x, reduced } => match ctx.norm_estimate(&x, a.kmax, a.budget) {
            Ok(est) => {
                emit_estimate(&est.r, est.lower, est.upper, true, reduced);
                Ok(())
            }
            Err(Error::Resource { message, partial }) => {
                // Print what was computed, then report the budget failure so the
                // exit code still signals it.
                let lower = ctx.diagonal_norm(&x.diagonal(0)).max(
                    x.diagonals()
                        .iter()
                        .map(|d| ctx.diagonal_norm(d))
                        .fold(0.0, f64::max),
                );
                let upper = ctx.seminorm(&x);
                emit_estimate(&partial, lower, upper, false, reduced);
                Err(Error::Resource { message, partial })
            }
            Err(e) => Err(e),
        },
    }
}

fn cmd_check_rep(a: CheckRepArgs) -> Result<()> {
    let (system, _, sys_label) = load_system(&a.system)?;
    let tol = resolve_tol(a.out.tol)?;
    let (rep, rep_label): (Representation, Option<String>) = match (&a.rep, a.truncation) {
        (Some(path), None) => {
            let v = load_json(path)?;
            let label = label_of(&v);
            (parse_representation(&system, &v)?, label)
        }
        (None, Some(m)) => (toeplitz_truncation(&system, m), None),
        _ => {
            return Err(Error::Usage(
                "provide exactly one of --rep FILE or --truncation M".into(),
            ))
        }
    };
    let labels = [("system", &sys_label), ("rep", &rep_label)];
    let report = rep.validation_report();
    let ci = rep.covariance_ideal(tol);
    let kr = rep.kernel_report(tol);
    let ur = unit_recovery(&rep, tol);
    let p = payload(
        "check-rep",
        labels_json(&labels),
        vec![
            ("passed", json!(report.passed)),
            (
                "residuals",
                json!({
                    "homomorphism": num(report.hom_residual),
                    "unital": num(report.unital_residual),
                    "covariance": num(report.covariance_residual),
                    "partial_isometry": num(report.partial_isometry_residual),
                    "window": num(report.window_residual),
                }),
            ),
            ("covariance_ideal", ideal_json(&ci)),
            (
                "kernel",
                json!({
                    "annihilated": ideal_json(&kr.annihilated),
                    "covariance": ideal_json(&kr.covariance),
                    "matches_ker_pi_alpha": kr.i_equals_ker_pi_alpha,
                    "intersection_matches_ker_pi": kr.i_cap_j_equals_ker_pi,
                    "warnings": kr.warnings,
                }),
            ),
            (
                "unit_recovery",
                json!({
                    "in_image": ur.in_image,
                    "in_center": ur.in_center,
                    "is_complement_unit": ur.is_complement_unit,
                    "image_residual": num(ur.image_residual),
                    "center_residual": num(ur.center_residual),
                    "complement_residual": num(ur.complement_residual),
                }),
            ),
            ("tolerance", num(tol)),
        ],
    );
    let mut lines = Vec::new();
    label_lines(&mut lines, &labels);
    lines.push(format!(
        "validation: {}",
        if report.passed { "PASS" } else { "FAIL" }
    ));
    lines.push(format!(
        "residuals: homomorphism {}, unital {}, covariance {}, partial isometry {}, window {}",
        fx(report.hom_residual),
        fx(report.unital_residual),
        fx(report.covariance_residual),
        fx(report.partial_isometry_residual),
        fx(report.window_residual)
    ));
    lines.push(format!("covariance ideal at tol {}: {}", fx(tol), ideal_str(&ci)));
    lines.push(format!(
        "kernel report: annihilated {}, covariant {}, ker(pi alpha) match {}, ker(pi) match {}",
        ideal_str(&kr.annihilated),
        ideal_str(&kr.covariance),
        kr.i_equals_ker_pi_alpha,
        kr.i_cap_j_equals_ker_pi
    ));
    for w in &kr.warnings {
        lines.push(format!("warning: {w}"));
    }
    lines.push(format!(
        "range projection: in image {}, in relative commutant {}, equals the kernel-annihilator unit {}",
        ur.in_image, ur.in_center, ur.is_complement_unit
    ));
    emit(&a.out, p, lines);
    Ok(())
}

fn cmd_dual(a: SystemArgs) -> Result<()> {
    let (system, _, label) = load_system(&a.system)?;
    let dual = dual_partial_map(system.endo())?;
    let pairs: Vec<Value> = dual.pairs().map(|(c, b)| json!([c, b])).collect();
    let p = payload(
        "dual",
        labels_json(&[("system", &label)]),
        vec![
            ("pairs", Value::Array(pairs)),
            (
                "domain",
                Value::Array(dual.domain().iter().map(|&c| json!(c)).collect()),
            ),
            (
                "range",
                Value::Array(dual.range().iter().map(|&b| json!(b)).collect()),
            ),
            ("topologically_free", json!(dual.topologically_free())),
        ],
    );
    let mut lines = Vec::new();
    label_lines(&mut lines, &[("system", &label)]);
    if dual.pairs().next().is_none() {
        lines.push("dual map: empty".into());
    }
    for (c, b) in dual.pairs() {
        lines.push(format!("dual map sends point {c} to point {b}"));
    }
    lines.push(format!("topologically free: {}", dual.topologically_free()));
    emit(&a.out, p, lines);
    Ok(())
}
