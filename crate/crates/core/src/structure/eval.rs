//! Strict (Kleene) evaluation of terms, interpretation of Horn formulas by
//! backtracking over the context, and validity of sequents.

use std::collections::HashMap;

use super::{Elem, PartialStructure, StructureError};
use crate::syntax::{Atom, Context, FormulaInContext, HornFormula, Sequent, Term, Theory};

/// Anything that can answer function and relation lookups on element ids.
pub trait Interpretation {
    fn apply(&self, f: &str, args: &[Elem]) -> Option<Elem>;
    fn holds(&self, r: &str, args: &[Elem]) -> bool;
}

impl Interpretation for PartialStructure {
    fn apply(&self, f: &str, args: &[Elem]) -> Option<Elem> {
        PartialStructure::apply(self, f, args)
    }

    fn holds(&self, r: &str, args: &[Elem]) -> bool {
        PartialStructure::holds(self, r, args)
    }
}

/// Terms with variables replaced by their position in the context.
#[derive(Debug, Clone)]
pub(crate) enum CTerm<'a> {
    Var(usize),
    App(&'a str, Vec<CTerm<'a>>),
}

#[derive(Debug, Clone)]
pub(crate) enum CAtom<'a> {
    Eq(CTerm<'a>, CTerm<'a>),
    Rel(&'a str, Vec<CTerm<'a>>),
}

impl<'a> CTerm<'a> {
    pub(crate) fn compile(ctx: &Context, t: &'a Term) -> CTerm<'a> {
        match t {
            Term::Var(v) => CTerm::Var(
                ctx.position(&v.name)
                    .unwrap_or_else(|| panic!("variable `{}` is not in the context", v.name)),
            ),
            Term::App(f, args) => CTerm::App(f, args.iter().map(|a| CTerm::compile(ctx, a)).collect()),
        }
    }

    /// One more than the largest variable index, 0 for closed terms.
    fn depth(&self) -> usize {
        match self {
            CTerm::Var(i) => i + 1,
            CTerm::App(_, args) => args.iter().map(CTerm::depth).max().unwrap_or(0),
        }
    }

    pub(crate) fn eval<I: Interpretation + ?Sized>(&self, m: &I, env: &[Elem]) -> Option<Elem> {
        match self {
            CTerm::Var(i) => Some(env[*i]),
            CTerm::App(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(a.eval(m, env)?);
                }
                m.apply(f, &vals)
            }
        }
    }
}

impl<'a> CAtom<'a> {
    pub(crate) fn compile(ctx: &Context, a: &'a Atom) -> CAtom<'a> {
        match a {
            Atom::Eq(l, r) => CAtom::Eq(CTerm::compile(ctx, l), CTerm::compile(ctx, r)),
            Atom::Rel(r, args) => CAtom::Rel(r, args.iter().map(|t| CTerm::compile(ctx, t)).collect()),
        }
    }

    fn depth(&self) -> usize {
        match self {
            CAtom::Eq(l, r) => l.depth().max(r.depth()),
            CAtom::Rel(_, args) => args.iter().map(CTerm::depth).max().unwrap_or(0),
        }
    }

    pub(crate) fn holds<I: Interpretation + ?Sized>(&self, m: &I, env: &[Elem]) -> bool {
        match self {
            CAtom::Eq(l, r) => match (l.eval(m, env), r.eval(m, env)) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
            CAtom::Rel(r, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match a.eval(m, env) {
                        Some(v) => vals.push(v),
                        None => return false,
                    }
                }
                m.holds(r, &vals)
            }
        }
    }
}

/// Value of `t` at `env`, or `None` where undefined.
pub fn interpret_term<I: Interpretation + ?Sized>(m: &I, ctx: &Context, t: &Term, env: &[Elem]) -> Option<Elem> {
    CTerm::compile(ctx, t).eval(m, env)
}

/// Whether `env` satisfies every atom of `phi`.
pub fn satisfies<I: Interpretation + ?Sized>(m: &I, ctx: &Context, phi: &HornFormula, env: &[Elem]) -> bool {
    phi.atoms.iter().all(|a| CAtom::compile(ctx, a).holds(m, env))
}

/// Possible values of one variable read off a table: the entries whose
/// `key` positions agree with the already bound terms, projected to `pos`.
/// Sound by strictness, since every argument tuple of a defined term or a
/// true atom is an entry of its table.
struct Candidates<'a> {
    key: Vec<CTerm<'a>>,
    /// Sorted, duplicate-free values for each key.
    index: HashMap<Vec<Elem>, Vec<Elem>>,
}

impl<'a> Candidates<'a> {
    fn build<'t>(args: &[CTerm<'a>], pos: usize, bound: usize, rows: impl Iterator<Item = &'t Vec<Elem>>) -> Self {
        let key_pos: Vec<usize> = (0..args.len()).filter(|&q| q != pos && args[q].depth() <= bound).collect();
        let mut index: HashMap<Vec<Elem>, Vec<Elem>> = HashMap::new();
        for row in rows {
            index.entry(key_pos.iter().map(|&q| row[q]).collect()).or_default().push(row[pos]);
        }
        for v in index.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Candidates {
            key: key_pos.iter().map(|&q| args[q].clone()).collect(),
            index,
        }
    }

    /// `None` when a key term is undefined, so nothing can match.
    fn lookup(&self, m: &PartialStructure, env: &[Elem]) -> Option<&[Elem]> {
        let mut key = Vec::with_capacity(self.key.len());
        for t in &self.key {
            key.push(t.eval(m, env)?);
        }
        Some(self.index.get(&key).map_or(&[], |v| v.as_slice()))
    }
}

struct Search<'a> {
    m: &'a PartialStructure,
    sizes: Vec<usize>,
    /// Atoms to check once variable `k - 1` is bound.
    buckets: Vec<Vec<CAtom<'a>>>,
    /// A term determining variable `k` from earlier ones.
    binders: Vec<Option<CTerm<'a>>>,
    /// Table lookups restricting variable `k`.
    candidates: Vec<Vec<Candidates<'a>>>,
}

impl<'a> Search<'a> {
    fn new(m: &'a PartialStructure, ctx: &Context, phi: &'a HornFormula) -> Self {
        let n = ctx.len();
        let sizes = ctx.sorts().map(|s| m.carrier_size(s)).collect();
        let mut buckets: Vec<Vec<CAtom<'a>>> = vec![Vec::new(); n + 1];
        let mut binders: Vec<Option<CTerm<'a>>> = vec![None; n];
        let mut candidates: Vec<Vec<Candidates<'a>>> = (0..n).map(|_| Vec::new()).collect();
        for a in &phi.atoms {
            let c = CAtom::compile(ctx, a);
            if let CAtom::Eq(l, r) = &c {
                for (v, t) in [(l, r), (r, l)] {
                    if let CTerm::Var(i) = v {
                        if t.depth() <= *i && binders[*i].is_none() {
                            binders[*i] = Some(t.clone());
                        }
                    }
                }
            }
            match &c {
                CAtom::Eq(l, r) => {
                    collect_candidates(m, l, &mut candidates);
                    collect_candidates(m, r, &mut candidates);
                }
                CAtom::Rel(r, args) => {
                    for t in args {
                        collect_candidates(m, t, &mut candidates);
                    }
                    add_candidates(args, &mut candidates, || m.relation_table(r).iter());
                }
            }
            let d = c.depth();
            buckets[d].push(c);
        }
        Search {
            m,
            sizes,
            buckets,
            binders,
            candidates,
        }
    }

    fn run(&self, visit: &mut dyn FnMut(&[Elem]) -> bool) {
        let mut env = vec![0; self.sizes.len()];
        if self.buckets[0].iter().all(|a| a.holds(self.m, &env)) {
            self.go(0, &mut env, visit);
        }
    }

    /// Returns false once `visit` asks to stop.
    fn go(&self, k: usize, env: &mut Vec<Elem>, visit: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        if k == self.sizes.len() {
            return visit(env);
        }
        if let Some(t) = &self.binders[k] {
            return match t.eval(self.m, env) {
                Some(v) if v < self.sizes[k] => self.try_value(k, v, env, visit),
                _ => true,
            };
        }
        if self.candidates[k].is_empty() {
            for v in 0..self.sizes[k] {
                if !self.try_value(k, v, env, visit) {
                    return false;
                }
            }
            return true;
        }
        let mut best: Option<&[Elem]> = None;
        for c in &self.candidates[k] {
            match c.lookup(self.m, env) {
                None => return true,
                Some(list) if best.is_none_or(|b| list.len() < b.len()) => best = Some(list),
                Some(_) => {}
            }
        }
        for &v in best.unwrap_or(&[]) {
            if !self.try_value(k, v, env, visit) {
                return false;
            }
        }
        true
    }

    fn try_value(&self, k: usize, v: Elem, env: &mut Vec<Elem>, visit: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        env[k] = v;
        !(self.buckets[k + 1].iter().all(|a| a.holds(self.m, env)) && !self.go(k + 1, env, visit))
    }
}

/// Candidate lists for each variable standing directly as an argument of
/// `args`, keyed by the arguments that only use earlier variables.
fn add_candidates<'a, 't, I: Iterator<Item = &'t Vec<Elem>>>(
    args: &[CTerm<'a>],
    out: &mut [Vec<Candidates<'a>>],
    rows: impl Fn() -> I,
) {
    for (pos, a) in args.iter().enumerate() {
        if let CTerm::Var(k) = a {
            out[*k].push(Candidates::build(args, pos, *k, rows()));
        }
    }
}

fn collect_candidates<'a>(m: &PartialStructure, t: &CTerm<'a>, out: &mut [Vec<Candidates<'a>>]) {
    if let CTerm::App(f, args) = t {
        for a in args {
            collect_candidates(m, a, out);
        }
        add_candidates(args, out, || m.function_table(f).keys());
    }
}

/// Calls `visit` on each satisfying tuple in lexicographic order until it
/// returns false.
pub(crate) fn for_each_solution(m: &PartialStructure, ctx: &Context, phi: &HornFormula, visit: &mut dyn FnMut(&[Elem]) -> bool) {
    Search::new(m, ctx, phi).run(visit)
}

/// `⟦x⃗.φ⟧^M`, in lexicographic order.
pub fn interpret_formula(m: &PartialStructure, phi: &FormulaInContext) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    for_each_solution(m, &phi.context, &phi.body, &mut |env| {
        out.push(env.to_vec());
        true
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequentCheck {
    Valid,
    /// The least tuple satisfying the premise but not the conclusion.
    Violated(Vec<Elem>),
}

impl SequentCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, SequentCheck::Valid)
    }
}

pub fn check_sequent(m: &PartialStructure, s: &Sequent) -> SequentCheck {
    let conclusion: Vec<CAtom> = s.conclusion.atoms.iter().map(|a| CAtom::compile(&s.context, a)).collect();
    let mut witness = None;
    for_each_solution(m, &s.context, &s.premise, &mut |env| {
        if conclusion.iter().all(|a| a.holds(m, env)) {
            true
        } else {
            witness = Some(env.to_vec());
            false
        }
    });
    match witness {
        None => SequentCheck::Valid,
        Some(w) => SequentCheck::Violated(w),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelCheck {
    Model,
    Fails { axiom: usize, witness: Vec<Elem> },
}

impl ModelCheck {
    pub fn is_model(&self) -> bool {
        matches!(self, ModelCheck::Model)
    }
}

/// Checks the axioms in order and reports the first that fails.
pub fn is_model(m: &PartialStructure, t: &Theory) -> Result<ModelCheck, StructureError> {
    if m.signature() != &t.signature {
        return Err(StructureError::SignatureMismatch);
    }
    for (i, ax) in t.axioms.iter().enumerate() {
        if let SequentCheck::Violated(witness) = check_sequent(m, ax) {
            return Ok(ModelCheck::Fails { axiom: i, witness });
        }
    }
    Ok(ModelCheck::Model)
}
