//! `phl`: batch front end for the partial Horn logic engine.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 unknown or out of budget,
//! 3 input error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use phl_core::birkhoff::{
    audit, Annotation, AuditBounds, ClosureReport, Construction, Membership, ModelFamily, RetractMode, Verdict,
};
use phl_core::chase::{chase_with, is_phl_theorem, AgendaOrder, ChaseOptions, ChaseOutcome, Derivability, Presentation};
use phl_core::colimit::{coproduct_formula, filtered_colimit, Diagram};
use phl_core::json::{read_algebra, read_structure, write_algebra, StructureDoc};
use phl_core::relalg::{algebra_coequalizer, check_algebra_of_theory, free_algebra_chain, FreeChain, RelativeAlgebra};
use phl_core::structure::{
    check_hom, check_sequent, enumerate_homs, factorize_dense_closed, interpret_formula, interpret_term, is_closed_mono,
    is_dense, is_model, iso_check, ElementMap, Homomorphism, ModelCheck, PartialStructure, SequentCheck,
};
use phl_core::syntax::{
    parse_context, parse_formula, parse_formula_in_context, parse_sequent, parse_term, parse_theory, ParsedTheory,
    Context, RelativeTheory, Sort, Theory,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "phl", version, about = "Partial Horn logic: models, chase, colimits and relative algebras")]
struct Cli {
    /// Step budget for every chase.
    #[arg(long, global = true, env = "PHL_BUDGET", default_value_t = 10_000)]
    budget: usize,
    /// Seed for randomized runs. No subcommand currently draws random
    /// numbers, so output does not depend on it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Machine-readable output.
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// Human-readable output.
    #[arg(long, global = true)]
    text: bool,
    /// Write output here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that a structure is a model, or that it satisfies one sequent.
    Check {
        theory: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        sequent: Option<String>,
    },
    /// Interpret a formula in context, or a term at a tuple.
    Eval {
        theory: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        /// `[x:s, ...] φ`
        #[arg(long, conflicts_with = "term")]
        formula: Option<String>,
        /// `[x:s, ...] t`
        #[arg(long, requires = "at")]
        term: Option<String>,
        /// Comma-separated element ids, one per variable.
        #[arg(long)]
        at: Option<String>,
    },
    /// Decide a sequent by chasing its premise.
    Prove {
        theory: PathBuf,
        #[arg(long)]
        sequent: String,
    },
    /// Chase a presentation by generators and facts.
    Chase {
        theory: PathBuf,
        /// `x:s, y:s, ...`
        #[arg(long, default_value = "")]
        gens: String,
        #[arg(long, default_value = "top")]
        facts: String,
        /// Visit axioms and matches in reverse order.
        #[arg(long)]
        reverse: bool,
    },
    /// The model represented by a formula in context.
    Repn {
        theory: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Homomorphisms between two structures.
    Hom {
        theory: PathBuf,
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        /// Only the number of homomorphisms.
        #[arg(long, conflicts_with = "iso")]
        count: bool,
        /// Look for an isomorphism instead.
        #[arg(long)]
        iso: bool,
    },
    /// Dense/closed factorization of a homomorphism.
    Factor {
        theory: PathBuf,
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        /// `{"sort": [images...], ...}`
        #[arg(long)]
        map: String,
    },
    /// Colimit of a chain of structures, or coproduct of formulas.
    Colim {
        theory: PathBuf,
        /// Stage files in order.
        #[arg(long = "stage")]
        stages: Vec<PathBuf>,
        /// Maps between consecutive stages.
        #[arg(long = "step")]
        steps: Vec<String>,
        /// Formulas in context whose coproduct to present.
        #[arg(long = "coproduct", conflicts_with = "stages")]
        coproduct: Vec<String>,
    },
    /// Algebras of a relative theory.
    Alg {
        #[command(subcommand)]
        cmd: AlgCmd,
    },
    /// Audit a family of models for the four closure conditions.
    Closure(ClosureArgs),
}

#[derive(Subcommand)]
enum AlgCmd {
    /// Check an algebra against its theory, judgments included.
    Check {
        theory: PathBuf,
        #[arg(long)]
        algebra: PathBuf,
    },
    /// The free algebra chain over a base structure.
    Free {
        theory: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_stages: usize,
    },
    /// Coequalizer in algebras of two maps into an algebra.
    Coeq {
        theory: PathBuf,
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
}

#[derive(Args)]
struct ClosureArgs {
    theory: PathBuf,
    /// Members, one JSON document per line.
    #[arg(long)]
    members: PathBuf,
    /// Defining sequents; without any, the family is its listed members.
    #[arg(long = "intensional")]
    intensional: Vec<String>,
    /// Candidate retracts, one JSON document per line.
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    max_arity: usize,
    #[arg(long, default_value_t = 8)]
    max_sub: usize,
    #[arg(long, default_value_t = 3)]
    max_chain: usize,
    /// Sections of retracts may be any carrier map, not only base
    /// homomorphisms.
    #[arg(long)]
    carrier_retracts: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

/// Output and exit code of a successful run.
struct Done {
    out: String,
    code: u8,
}

impl Done {
    fn ok(out: String) -> Self {
        Done { out, code: 0 }
    }

    fn with(out: String, code: u8) -> Self {
        Done { out, code }
    }
}

struct Ctx {
    budget: usize,
    format: Format,
}

impl Ctx {
    fn json(&self) -> bool {
        self.format == Format::Json
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let default_format = match &cli.cmd {
        Cmd::Check { .. } | Cmd::Prove { .. } | Cmd::Alg { cmd: AlgCmd::Check { .. } } => Format::Text,
        _ => Format::Json,
    };
    let ctx = Ctx {
        budget: cli.budget,
        format: if cli.json {
            Format::Json
        } else if cli.text {
            Format::Text
        } else {
            default_format
        },
    };
    match run(&cli.cmd, &ctx) {
        Ok(done) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &done.out).with_context(|| format!("cannot write {}", path.display())),
                None => {
                    print!("{}", done.out);
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::from(done.code),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(3)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: &Cmd, ctx: &Ctx) -> Result<Done> {
    match cmd {
        Cmd::Check { theory, structure, sequent } => check(ctx, theory, structure, sequent.as_deref()),
        Cmd::Eval {
            theory,
            structure,
            formula,
            term,
            at,
        } => eval(ctx, theory, structure, formula.as_deref(), term.as_deref(), at.as_deref()),
        Cmd::Prove { theory, sequent } => prove(ctx, theory, sequent),
        Cmd::Chase {
            theory,
            gens,
            facts,
            reverse,
        } => {
            let t = load_theory(theory)?;
            let plain = t.theory();
            let gens = parse_context(&plain.signature, gens).context("--gens")?;
            let facts = parse_formula(&plain.signature, &gens, facts).context("--facts")?;
            let p = Presentation::new(Arc::new(plain), gens.clone(), facts)?;
            let order = if *reverse { AgendaOrder::Reverse } else { AgendaOrder::Forward };
            let out = chase_with(
                &p,
                &ChaseOptions {
                    budget: ctx.budget,
                    order,
                },
            )?;
            Ok(chase_result(ctx, &t, out, Some(&gens)))
        }
        Cmd::Repn { theory, formula } => {
            let t = load_theory(theory)?;
            let plain = t.theory();
            let phi = parse_formula_in_context(&plain.signature, formula).context("--formula")?;
            let p = Presentation::from_formula(Arc::new(plain), &phi)?;
            let out = chase_with(&p, &ChaseOptions::with_budget(ctx.budget))?;
            Ok(chase_result(ctx, &t, out, Some(&phi.context)))
        }
        Cmd::Hom {
            theory,
            from,
            to,
            count,
            iso,
        } => hom(ctx, theory, from, to, *count, *iso),
        Cmd::Factor { theory, from, to, map } => factor(ctx, theory, from, to, map),
        Cmd::Colim {
            theory,
            stages,
            steps,
            coproduct,
        } => colim(ctx, theory, stages, steps, coproduct),
        Cmd::Alg { cmd } => alg(ctx, cmd),
        Cmd::Closure(args) => closure(ctx, args),
    }
}

// Input.

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_theory(path: &Path) -> Result<ParsedTheory> {
    parse_theory(&read(path)?).map_err(|e| anyhow!("{}:{e}", path.display()))
}

fn load_structure(t: &ParsedTheory, path: &Path) -> Result<PartialStructure> {
    let text = read(path)?;
    parse_structure(t, &text).with_context(|| path.display().to_string())
}

/// A structure over the signature of `t`; for relative theories this is an
/// algebra, read with its operator tables.
fn parse_structure(t: &ParsedTheory, text: &str) -> Result<PartialStructure> {
    Ok(match t {
        ParsedTheory::Plain(p) => read_structure(text, &p.signature, &p.name)?,
        ParsedTheory::Relative(rt) => read_algebra(text, &Arc::new(rt.clone()), &rt.name)?.as_structure().clone(),
    })
}

/// Non-empty lines of a file, each a structure.
fn load_structures(t: &ParsedTheory, path: &Path) -> Result<Vec<PartialStructure>> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_structure(t, l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn load_algebra(rt: &Arc<RelativeTheory>, path: &Path) -> Result<RelativeAlgebra> {
    read_algebra(&read(path)?, rt, &rt.name).with_context(|| path.display().to_string())
}

fn relative(t: ParsedTheory) -> Arc<RelativeTheory> {
    Arc::new(t.relative())
}

fn parse_map(src: &str) -> Result<ElementMap> {
    let raw: BTreeMap<String, Vec<usize>> = serde_json::from_str(src).with_context(|| format!("bad map `{src}`"))?;
    Ok(ElementMap(raw.into_iter().map(|(s, v)| (Sort::new(s), v)).collect()))
}

/// Splits `[x:s, ...] rest` into the bracketed context and the rest.
fn split_context(src: &str) -> Result<(&str, &str)> {
    let src = src.trim_start();
    let end = src.find(']').filter(|_| src.starts_with('[')).ok_or_else(|| anyhow!("expected `[context] ...`"))?;
    Ok((&src[..=end], &src[end + 1..]))
}

// Output.

fn map_json(m: &ElementMap) -> Value {
    json!(m.0.iter().map(|(s, v)| (s.name().to_string(), v.clone())).collect::<BTreeMap<_, _>>())
}

fn doc_json(m: &PartialStructure, name: &str) -> Value {
    serde_json::to_value(StructureDoc::from_structure(m, name)).expect("documents serialize")
}

fn line(v: Value) -> String {
    let mut s = v.to_string();
    s.push('\n');
    s
}

fn tuple(t: &[usize]) -> String {
    format!("({})", t.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "))
}

fn structure_text(m: &PartialStructure) -> String {
    let sig = m.signature();
    let mut out = String::new();
    for s in sig.sorts() {
        let _ = writeln!(out, "{s}: {}", m.carrier_size(s));
    }
    for (f, _) in sig.functions() {
        let rows: Vec<String> = m.function_table(f).iter().map(|(a, v)| format!("{} = {v}", tuple(a))).collect();
        let _ = writeln!(out, "{f}: {}", rows.join(", "));
    }
    for (r, _) in sig.relations() {
        let rows: Vec<String> = m.relation_table(r).iter().map(|a| tuple(a)).collect();
        let _ = writeln!(out, "{r}: {}", rows.join(", "));
    }
    out
}

fn map_text(m: &ElementMap) -> String {
    m.0.iter().map(|(s, v)| format!("{s} {}", tuple(v))).collect::<Vec<_>>().join("; ")
}

/// JSON document for a structure over the signature of `t`: algebras carry
/// their operators under `"ops"`.
fn structure_value(t: &ParsedTheory, m: &PartialStructure) -> Value {
    match t {
        ParsedTheory::Plain(p) => doc_json(m, &p.name),
        ParsedTheory::Relative(rt) => {
            let a = RelativeAlgebra::from_structure(Arc::new(rt.clone()), m.clone()).expect("structure over Σ+Ω");
            serde_json::from_str(&write_algebra(&a, &rt.name)).expect("documents parse")
        }
    }
}

fn exhausted(ctx: &Ctx, steps: usize, classes: usize) -> Done {
    let out = if ctx.json() {
        line(json!({"budget_exceeded": {"classes": classes, "steps": steps}}))
    } else {
        format!("budget exceeded after {steps} steps ({classes} classes)\n")
    };
    Done::with(out, 2)
}

/// A saturated chase as a structure, with the class of each named
/// generator under `"generators"`.
fn chase_result(ctx: &Ctx, t: &ParsedTheory, out: ChaseOutcome, names: Option<&Context>) -> Done {
    match out {
        ChaseOutcome::Saturated(sat) => {
            let named: Vec<(String, usize)> = names
                .map(|c| c.vars().iter().map(|v| v.name.to_string()).zip(sat.generators.iter().copied()).collect())
                .unwrap_or_default();
            if ctx.json() {
                let mut v = structure_value(t, &sat.model);
                if !named.is_empty() {
                    v["generators"] = json!(named.into_iter().collect::<BTreeMap<_, _>>());
                }
                return Done::ok(line(v));
            }
            let mut s = structure_text(&sat.model);
            if named.is_empty() {
                let _ = writeln!(s, "generators: {}", tuple(&sat.generators));
            } else {
                let pairs: Vec<String> = named.iter().map(|(n, e)| format!("{n}={e}")).collect();
                let _ = writeln!(s, "generators: {}", pairs.join(", "));
            }
            let _ = writeln!(s, "steps: {}", sat.steps);
            Done::ok(s)
        }
        ChaseOutcome::BudgetExceeded(e) => exhausted(ctx, e.steps, e.classes),
    }
}

// Commands.

fn check(ctx: &Ctx, theory: &Path, structure: &Path, sequent: Option<&str>) -> Result<Done> {
    let t = load_theory(theory)?;
    let plain = t.theory();
    let m = load_structure(&t, structure)?;
    let failure = match sequent {
        Some(src) => {
            let s = parse_sequent(&plain.signature, src).context("--sequent")?;
            match check_sequent(&m, &s) {
                SequentCheck::Valid => None,
                SequentCheck::Violated(w) => Some((None, s.to_string(), w)),
            }
        }
        None => match is_model(&m, &plain)? {
            ModelCheck::Model => None,
            ModelCheck::Fails { axiom, witness } => Some((Some(axiom), plain.axioms[axiom].to_string(), witness)),
        },
    };
    let Some((axiom, text, witness)) = failure else {
        let out = if ctx.json() { line(json!({"valid": true})) } else { "valid\n".into() };
        return Ok(Done::ok(out));
    };
    let out = if ctx.json() {
        let mut v = json!({"valid": false, "sequent": text, "witness": witness});
        if let Some(i) = axiom {
            v["axiom"] = json!(i);
        }
        line(v)
    } else {
        format!("fails: {text} at {}\n", tuple(&witness))
    };
    Ok(Done::with(out, 1))
}

fn eval(ctx: &Ctx, theory: &Path, structure: &Path, formula: Option<&str>, term: Option<&str>, at: Option<&str>) -> Result<Done> {
    let t = load_theory(theory)?;
    let sig = t.theory().signature;
    let m = load_structure(&t, structure)?;
    if let Some(src) = formula {
        let phi = parse_formula_in_context(&sig, src).context("--formula")?;
        let tuples = interpret_formula(&m, &phi);
        let out = if ctx.json() {
            line(json!({ "tuples": tuples }))
        } else {
            tuples.iter().map(|t| tuple(t) + "\n").collect()
        };
        return Ok(Done::ok(out));
    }
    let src = term.ok_or_else(|| anyhow!("one of --formula or --term is required"))?;
    let (c, body) = split_context(src)?;
    let context = parse_context(&sig, c).context("--term")?;
    let term = parse_term(&sig, &context, body).context("--term")?;
    let env: Vec<usize> = at
        .unwrap_or("")
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().with_context(|| format!("bad element `{s}`")))
        .collect::<Result<_>>()?;
    if env.len() != context.len() {
        bail!("--at has {} elements, the context {}", env.len(), context.len());
    }
    for (v, &e) in context.vars().iter().zip(&env) {
        if e >= m.carrier_size(&v.sort) {
            bail!("element {e} is not in the carrier of `{}`", v.sort);
        }
    }
    let value = interpret_term(&m, &context, &term, &env);
    let out = match (ctx.format, value) {
        (Format::Json, v) => line(json!({ "value": v })),
        (Format::Text, Some(v)) => format!("{v}\n"),
        (Format::Text, None) => "undefined\n".into(),
    };
    Ok(Done::ok(out))
}

fn prove(ctx: &Ctx, theory: &Path, sequent: &str) -> Result<Done> {
    let t = load_theory(theory)?.theory();
    let s = parse_sequent(&t.signature, sequent).context("--sequent")?;
    let verdict = is_phl_theorem(&s, &t, ctx.budget)?;
    let (word, code) = match verdict {
        Derivability::Proved => ("Proved", 0),
        Derivability::Refuted => ("Refuted", 1),
        Derivability::Unknown { .. } => ("Unknown", 2),
    };
    let out = if ctx.json() {
        line(json!({"budget": ctx.budget, "verdict": word}))
    } else {
        format!("{word}\n")
    };
    Ok(Done::with(out, code))
}

fn hom(ctx: &Ctx, theory: &Path, from: &Path, to: &Path, count: bool, iso: bool) -> Result<Done> {
    let t = load_theory(theory)?;
    let (a, b) = (load_structure(&t, from)?, load_structure(&t, to)?);
    if iso {
        let found = iso_check(&a, &b);
        let out = match (&found, ctx.format) {
            (Some(m), Format::Json) => line(json!({ "iso": map_json(m) })),
            (None, Format::Json) => line(json!({ "iso": null })),
            (Some(m), Format::Text) => format!("{}\n", map_text(m)),
            (None, Format::Text) => "not isomorphic\n".into(),
        };
        return Ok(Done::with(out, if found.is_some() { 0 } else { 1 }));
    }
    let homs = enumerate_homs(&a, &b);
    let out = match (count, ctx.format) {
        (true, Format::Json) => line(json!({ "count": homs.len() })),
        (true, Format::Text) => format!("{}\n", homs.len()),
        (false, Format::Json) => line(json!({"count": homs.len(), "homs": homs.iter().map(map_json).collect::<Vec<_>>()})),
        (false, Format::Text) => homs.iter().map(|h| map_text(h) + "\n").collect(),
    };
    Ok(Done::with(out, if homs.is_empty() { 1 } else { 0 }))
}

fn factor(ctx: &Ctx, theory: &Path, from: &Path, to: &Path, map: &str) -> Result<Done> {
    let t = load_theory(theory)?;
    let (a, b) = (load_structure(&t, from)?, load_structure(&t, to)?);
    let map = parse_map(map)?;
    check_hom(&a, &b, &map).map_err(|v| anyhow!("not a homomorphism: {v}"))?;
    let h = Homomorphism::new(Arc::new(a), Arc::new(b), map)?;
    let closed = if h.is_injective() {
        Some(is_closed_mono(&h)?)
    } else {
        None
    };
    let f = factorize_dense_closed(&h);
    let out = if ctx.json() {
        let middle = structure_value(&t, f.middle());
        let closed = closed.as_ref().map(|c| c.is_closed());
        line(json!({
            "closed_mono": closed,
            "dense": is_dense(&h),
            "e": map_json(f.e.map()),
            "m": map_json(f.m.map()),
            "middle": middle,
        }))
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "dense: {}", is_dense(&h));
        match closed {
            Some(c) => {
                let _ = writeln!(s, "closed mono: {c:?}");
            }
            None => s.push_str("closed mono: not injective\n"),
        }
        let _ = writeln!(s, "e: {}", map_text(f.e.map()));
        let _ = writeln!(s, "m: {}", map_text(f.m.map()));
        s.push_str(&structure_text(f.middle()));
        s
    };
    Ok(Done::ok(out))
}

fn colim(ctx: &Ctx, theory: &Path, stages: &[PathBuf], steps: &[String], coproduct: &[String]) -> Result<Done> {
    let t = load_theory(theory)?;
    let plain = t.theory();
    if !coproduct.is_empty() {
        let phis = coproduct
            .iter()
            .map(|src| parse_formula_in_context(&plain.signature, src).context("--coproduct"))
            .collect::<Result<Vec<_>>>()?;
        let c = coproduct_formula(&plain.signature, &phis);
        let p = Presentation::from_formula(Arc::new(plain), &c.formula)?;
        let sat = match chase_with(&p, &ChaseOptions::with_budget(ctx.budget))? {
            ChaseOutcome::Saturated(sat) => sat,
            ChaseOutcome::BudgetExceeded(e) => return Ok(exhausted(ctx, e.steps, e.classes)),
        };
        let text = if ctx.json() {
            let model = structure_value(&t, &sat.model);
            line(json!({"formula": c.formula.to_string(), "generators": sat.generators, "model": model}))
        } else {
            format!("{}\n{}", c.formula, structure_text(&sat.model))
        };
        return Ok(Done::ok(text));
    }
    if stages.is_empty() {
        bail!("give --stage files for a chain or --coproduct formulas");
    }
    if steps.len() + 1 != stages.len() {
        bail!("{} stages need {} steps, got {}", stages.len(), stages.len() - 1, steps.len());
    }
    let objects = stages
        .iter()
        .map(|p| load_structure(&t, p).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let maps = steps
        .iter()
        .enumerate()
        .map(|(i, src)| {
            let map = parse_map(src)?;
            check_hom(&objects[i], &objects[i + 1], &map).map_err(|v| anyhow!("step {i} is not a homomorphism: {v}"))?;
            Ok(Homomorphism::new(objects[i].clone(), objects[i + 1].clone(), map)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let c = filtered_colimit(&Diagram::chain(objects, maps)?)?;
    let out = if ctx.json() {
        let legs: Vec<Value> = c.legs.iter().map(|l| map_json(l.map())).collect();
        line(json!({"legs": legs, "structure": structure_value(&t, &c.structure)}))
    } else {
        structure_text(&c.structure)
    };
    Ok(Done::ok(out))
}

fn alg(ctx: &Ctx, cmd: &AlgCmd) -> Result<Done> {
    match cmd {
        AlgCmd::Check { theory, algebra } => {
            let rt = relative(load_theory(theory)?);
            let a = load_algebra(&rt, algebra)?;
            let (out, code) = match check_algebra_of_theory(&a) {
                Ok(()) if ctx.json() => (line(json!({"valid": true})), 0),
                Ok(()) => ("valid\n".to_string(), 0),
                Err(why) if ctx.json() => (line(json!({"valid": false, "reason": why})), 1),
                Err(why) => (format!("fails: {why}\n"), 1),
            };
            Ok(Done::with(out, code))
        }
        AlgCmd::Free {
            theory,
            structure,
            max_stages,
        } => {
            let t = load_theory(theory)?;
            let rt = relative(t.clone());
            // Base structures may come from any theory over the base signature.
            let doc: StructureDoc = serde_json::from_str(&read(structure)?).with_context(|| structure.display().to_string())?;
            let x = doc
                .to_structure(&rt.base.signature, &doc.signature)
                .with_context(|| structure.display().to_string())?;
            Ok(match free_algebra_chain(&rt, &x, *max_stages, ctx.budget)? {
                FreeChain::Stabilized {
                    algebra,
                    insertion,
                    stage,
                    sizes,
                } => {
                    let out = if ctx.json() {
                        let alg = structure_value(&t, algebra.as_structure());
                        line(json!({"algebra": alg, "insertion": map_json(insertion.map()), "sizes": sizes, "stage": stage}))
                    } else {
                        let mut s = format!("stabilized at stage {stage}, sizes {sizes:?}\n");
                        s.push_str(&structure_text(algebra.as_structure()));
                        let _ = writeln!(s, "insertion: {}", map_text(insertion.map()));
                        s
                    };
                    Done::ok(out)
                }
                FreeChain::Unstabilized { sizes } => {
                    let out = if ctx.json() {
                        line(json!({"sizes": sizes, "stabilized": false}))
                    } else {
                        format!("not stabilized, sizes {sizes:?}\n")
                    };
                    Done::with(out, 2)
                }
            })
        }
        AlgCmd::Coeq {
            theory,
            algebra,
            left,
            right,
        } => {
            let t = load_theory(theory)?;
            let rt = relative(t);
            let a = load_algebra(&rt, algebra)?;
            let out = algebra_coequalizer(&a, &parse_map(left)?, &parse_map(right)?, ctx.budget)?;
            Ok(chase_result(ctx, &ParsedTheory::Relative((*rt).clone()), out, None))
        }
    }
}

fn construction_json(c: &Construction, name: &str) -> Value {
    match c {
        Construction::Product { factors } => json!({"kind": "product", "factors": factors}),
        Construction::ClosedSubobject { member, inclusion } => {
            json!({"kind": "closed-subobject", "member": member, "inclusion": map_json(inclusion)})
        }
        Construction::URetract {
            member,
            candidate,
            map,
            section,
            mode,
        } => json!({
            "kind": "u-retract",
            "member": member,
            "candidate": doc_json(candidate, name),
            "map": map_json(map),
            "section": map_json(section),
            "mode": match mode { RetractMode::BaseHom => "base-hom", RetractMode::Carrier => "carrier" },
        }),
        Construction::Chain { stages, steps } => json!({
            "kind": "chain",
            "stages": stages.iter().map(|s| doc_json(s, name)).collect::<Vec<_>>(),
            "steps": steps.iter().map(map_json).collect::<Vec<_>>(),
        }),
        Construction::Endo { member, endo } => json!({"kind": "endo", "member": member, "endo": map_json(endo)}),
    }
}

fn report_json(r: &ClosureReport, name: &str) -> Value {
    match &r.verdict {
        Verdict::Closed => json!({"condition": r.condition.to_string(), "examined": r.examined, "verdict": "closed"}),
        Verdict::Counterexample { witness, annotation } => json!({
            "annotation": annotation.to_string(),
            "condition": r.condition.to_string(),
            "examined": r.examined,
            "verdict": "counterexample",
            "witness": {
                "construction": construction_json(&witness.construction, name),
                "structure": doc_json(&witness.structure, name),
            },
        }),
    }
}

fn closure(ctx: &Ctx, args: &ClosureArgs) -> Result<Done> {
    let t = load_theory(&args.theory)?;
    let plain: Theory = t.theory();
    let membership = if args.intensional.is_empty() {
        Membership::Extensional
    } else {
        Membership::Intensional(
            args.intensional
                .iter()
                .map(|s| parse_sequent(&plain.signature, s).context("--intensional"))
                .collect::<Result<_>>()?,
        )
    };
    let members = load_structures(&t, &args.members)?;
    let candidates = match &args.candidates {
        Some(p) => load_structures(&t, p)?,
        None => Vec::new(),
    };
    let fam = match &t {
        ParsedTheory::Plain(_) => ModelFamily::new(Arc::new(plain.clone()), members, membership)?,
        ParsedTheory::Relative(rt) => {
            let rt = Arc::new(rt.clone());
            let algebras = members
                .into_iter()
                .map(|m| RelativeAlgebra::from_structure(rt.clone(), m))
                .collect::<Result<Vec<_>, _>>()?;
            ModelFamily::of_algebras(&rt, &algebras, membership)?
        }
    };
    let bounds = AuditBounds {
        max_arity: args.max_arity,
        max_sub: args.max_sub,
        max_chain: args.max_chain,
        retract_mode: if args.carrier_retracts {
            RetractMode::Carrier
        } else {
            RetractMode::BaseHom
        },
    };
    let reports = audit(&fam, &candidates, &bounds);
    let mut out = String::new();
    for r in &reports {
        if ctx.json() {
            out.push_str(&line(report_json(r, &plain.name)));
        } else {
            match &r.verdict {
                Verdict::Closed => {
                    let _ = writeln!(out, "{}: closed ({} examined)", r.condition, r.examined);
                }
                Verdict::Counterexample { witness, annotation } => {
                    let kind = match annotation {
                        Annotation::ClosureFailure => "counterexample",
                        Annotation::ListIncompleteness => "counterexample (list incomplete)",
                    };
                    let _ = writeln!(out, "{}: {kind}: {:?}", r.condition, witness.construction);
                    out.push_str(&structure_text(&witness.structure));
                }
            }
        }
    }
    let code = if reports.iter().all(ClosureReport::is_closed) { 0 } else { 1 };
    Ok(Done::with(out, code))
}
