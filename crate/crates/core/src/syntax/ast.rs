//! Abstract syntax of multi-sorted partial Horn theories.
//!
//! Every formula lives in an explicit context: variables carry their sort,
//! and terms are checked against a [`Signature`] plus the [`Context`] they
//! occur in. Conjunction is a flat list of atoms; `τ↓` is represented as the
//! equation `τ = τ`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::error::SyntaxError;

/// Symbols written infix in the surface syntax (`g.f`, `x - y`, `a + b`).
pub const INFIX_SYMBOLS: &[&str] = &[".", "+", "-"];

pub fn is_infix(symbol: &str) -> bool {
    INFIX_SYMBOLS.contains(&symbol)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sort(String);

impl Sort {
    pub fn new(name: impl Into<String>) -> Self {
        Sort(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Sort {
    fn from(s: &str) -> Self {
        Sort::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionDecl {
    pub args: Vec<Sort>,
    pub result: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationDecl {
    pub args: Vec<Sort>,
}

/// Sorts, partial function symbols and relation symbols.
///
/// Sorts keep their declaration order; symbols are kept sorted by name so
/// that every traversal is deterministic.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Signature {
    sorts: Vec<Sort>,
    functions: BTreeMap<String, FunctionDecl>,
    relations: BTreeMap<String, RelationDecl>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sort(&mut self, sort: impl Into<Sort>) -> Result<(), SyntaxError> {
        let sort = sort.into();
        if self.sorts.contains(&sort) {
            return Err(SyntaxError::DuplicateSort(sort.name().to_string()));
        }
        self.sorts.push(sort);
        Ok(())
    }

    pub fn add_function(
        &mut self,
        name: impl Into<String>,
        args: Vec<Sort>,
        result: Sort,
    ) -> Result<(), SyntaxError> {
        let name = name.into();
        self.ensure_fresh(&name)?;
        for s in args.iter().chain(std::iter::once(&result)) {
            self.ensure_sort(s)?;
        }
        self.functions.insert(name, FunctionDecl { args, result });
        Ok(())
    }

    pub fn add_relation(&mut self, name: impl Into<String>, args: Vec<Sort>) -> Result<(), SyntaxError> {
        let name = name.into();
        self.ensure_fresh(&name)?;
        for s in &args {
            self.ensure_sort(s)?;
        }
        self.relations.insert(name, RelationDecl { args });
        Ok(())
    }

    fn ensure_fresh(&self, name: &str) -> Result<(), SyntaxError> {
        if self.is_symbol(name) {
            Err(SyntaxError::DuplicateSymbol(name.to_string()))
        } else {
            Ok(())
        }
    }

    pub fn ensure_sort(&self, sort: &Sort) -> Result<(), SyntaxError> {
        if self.has_sort(sort) {
            Ok(())
        } else {
            Err(SyntaxError::UndeclaredSort(sort.name().to_string()))
        }
    }

    pub fn has_sort(&self, sort: &Sort) -> bool {
        self.sorts.contains(sort)
    }

    pub fn is_symbol(&self, name: &str) -> bool {
        self.functions.contains_key(name) || self.relations.contains_key(name)
    }

    pub fn sorts(&self) -> &[Sort] {
        &self.sorts
    }

    pub fn sort_index(&self, sort: &Sort) -> Option<usize> {
        self.sorts.iter().position(|s| s == sort)
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, &FunctionDecl)> {
        self.functions.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &RelationDecl)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.get(name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDecl> {
        self.relations.get(name)
    }

    /// `self` with every symbol of `other` added. Sorts of `other` that are
    /// not yet declared are appended.
    pub fn merged(&self, other: &Signature) -> Result<Signature, SyntaxError> {
        let mut out = self.clone();
        for s in &other.sorts {
            if !out.has_sort(s) {
                out.sorts.push(s.clone());
            }
        }
        for (name, decl) in &other.functions {
            out.add_function(name.clone(), decl.args.clone(), decl.result.clone())?;
        }
        for (name, decl) in &other.relations {
            out.add_relation(name.clone(), decl.args.clone())?;
        }
        Ok(out)
    }

    /// Whether every sort and symbol of `self` is declared identically in `other`.
    pub fn is_subsignature_of(&self, other: &Signature) -> bool {
        self.sorts.iter().all(|s| other.has_sort(s))
            && self.functions.iter().all(|(n, d)| other.functions.get(n) == Some(d))
            && self.relations.iter().all(|(n, d)| other.relations.get(n) == Some(d))
    }

    /// Sort of a term, checking argument sorts along the way. Variables are
    /// trusted to carry the right sort; use [`Context::check_term`] to also
    /// check them against a context.
    pub fn sort_of(&self, term: &Term) -> Result<Sort, SyntaxError> {
        match term {
            Term::Var(v) => {
                self.ensure_sort(&v.sort)?;
                Ok(v.sort.clone())
            }
            Term::App(f, args) => {
                let decl = self
                    .function(f)
                    .ok_or_else(|| SyntaxError::UnknownFunction(f.clone()))?;
                if decl.args.len() != args.len() {
                    return Err(SyntaxError::ArityMismatch {
                        symbol: f.clone(),
                        expected: decl.args.len(),
                        found: args.len(),
                    });
                }
                for (arg, expected) in args.iter().zip(&decl.args) {
                    let found = self.sort_of(arg)?;
                    if &found != expected {
                        return Err(SyntaxError::SortMismatch {
                            at: format!("argument of `{f}`"),
                            expected: expected.clone(),
                            found,
                        });
                    }
                }
                Ok(decl.result.clone())
            }
        }
    }

    pub fn check_atom(&self, atom: &Atom) -> Result<(), SyntaxError> {
        match atom {
            Atom::Eq(l, r) => {
                let ls = self.sort_of(l)?;
                let rs = self.sort_of(r)?;
                if ls != rs {
                    return Err(SyntaxError::SortMismatch {
                        at: format!("equation {l} = {r}"),
                        expected: ls,
                        found: rs,
                    });
                }
                Ok(())
            }
            Atom::Rel(name, args) => {
                let decl = self
                    .relation(name)
                    .ok_or_else(|| SyntaxError::UnknownRelation(name.clone()))?;
                if decl.args.len() != args.len() {
                    return Err(SyntaxError::ArityMismatch {
                        symbol: name.clone(),
                        expected: decl.args.len(),
                        found: args.len(),
                    });
                }
                for (arg, expected) in args.iter().zip(&decl.args) {
                    let found = self.sort_of(arg)?;
                    if &found != expected {
                        return Err(SyntaxError::SortMismatch {
                            at: format!("argument of `{name}`"),
                            expected: expected.clone(),
                            found,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable {
    pub name: String,
    pub sort: Sort,
}

impl Variable {
    pub fn new(name: impl Into<String>, sort: impl Into<Sort>) -> Self {
        Variable {
            name: name.into(),
            sort: sort.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Variable),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>, sort: impl Into<Sort>) -> Self {
        Term::Var(Variable::new(name, sort))
    }

    pub fn app(symbol: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(symbol.into(), args)
    }

    pub fn constant(symbol: impl Into<String>) -> Self {
        Term::App(symbol.into(), Vec::new())
    }

    pub fn collect_variables<'a>(&'a self, out: &mut BTreeSet<&'a Variable>) {
        match self {
            Term::Var(v) => {
                out.insert(v);
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_variables(out)),
        }
    }

    pub fn collect_symbols<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        if let Term::App(f, args) = self {
            out.insert(f);
            args.iter().for_each(|a| a.collect_symbols(out));
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Rel(String, Vec<Term>),
    Eq(Term, Term),
}

impl Atom {
    /// `τ↓`, i.e. `τ = τ`.
    pub fn defined(term: Term) -> Self {
        Atom::Eq(term.clone(), term)
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Rel(_, args) => args.iter().collect(),
            Atom::Eq(l, r) => vec![l, r],
        }
    }

    pub fn collect_variables<'a>(&'a self, out: &mut BTreeSet<&'a Variable>) {
        self.terms().into_iter().for_each(|t| t.collect_variables(out));
    }

    pub fn collect_symbols<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        if let Atom::Rel(r, _) = self {
            out.insert(r);
        }
        self.terms().into_iter().for_each(|t| t.collect_symbols(out));
    }
}

/// A finite conjunction of atoms; the empty conjunction is `⊤`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HornFormula {
    pub atoms: Vec<Atom>,
}

impl HornFormula {
    pub fn top() -> Self {
        Self::default()
    }

    pub fn new(atoms: Vec<Atom>) -> Self {
        HornFormula { atoms }
    }

    pub fn is_top(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn and(&self, other: &HornFormula) -> HornFormula {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        HornFormula { atoms }
    }

    /// Sorted, duplicate-free form; two formulas with the same canonical form
    /// are interpreted identically in every structure.
    pub fn canonical(&self) -> HornFormula {
        let set: BTreeSet<Atom> = self.atoms.iter().cloned().collect();
        HornFormula {
            atoms: set.into_iter().collect(),
        }
    }

    pub fn variables(&self) -> BTreeSet<&Variable> {
        let mut out = BTreeSet::new();
        self.atoms.iter().for_each(|a| a.collect_variables(&mut out));
        out
    }

    pub fn symbols(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.atoms.iter().for_each(|a| a.collect_symbols(&mut out));
        out
    }
}

/// An ordered list of distinct, sorted variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Context(Vec<Variable>);

impl Context {
    pub fn new(vars: Vec<Variable>) -> Result<Self, SyntaxError> {
        let mut seen = BTreeSet::new();
        for v in &vars {
            if !seen.insert(v.name.as_str()) {
                return Err(SyntaxError::DuplicateVariable(v.name.clone()));
            }
        }
        Ok(Context(vars))
    }

    pub fn empty() -> Self {
        Context(Vec::new())
    }

    pub fn vars(&self) -> &[Variable] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|v| v.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Variable> {
        self.0.iter().find(|v| v.name == name)
    }

    pub fn sorts(&self) -> impl Iterator<Item = &Sort> {
        self.0.iter().map(|v| &v.sort)
    }

    pub fn as_terms(&self) -> Vec<Term> {
        self.0.iter().cloned().map(Term::Var).collect()
    }

    /// Concatenation; fails if the two contexts share a variable name.
    pub fn concat(&self, other: &Context) -> Result<Context, SyntaxError> {
        let mut vars = self.0.clone();
        vars.extend(other.0.iter().cloned());
        Context::new(vars)
    }

    fn check_variables<'a>(&self, vars: impl IntoIterator<Item = &'a Variable>) -> Result<(), SyntaxError> {
        for v in vars {
            match self.get(&v.name) {
                None => return Err(SyntaxError::UnboundVariable(v.name.clone())),
                Some(declared) if declared.sort != v.sort => {
                    return Err(SyntaxError::SortMismatch {
                        at: format!("variable `{}`", v.name),
                        expected: declared.sort.clone(),
                        found: v.sort.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn check_term(&self, sig: &Signature, term: &Term) -> Result<Sort, SyntaxError> {
        let mut vars = BTreeSet::new();
        term.collect_variables(&mut vars);
        self.check_variables(vars)?;
        sig.sort_of(term)
    }

    pub fn check_formula(&self, sig: &Signature, formula: &HornFormula) -> Result<(), SyntaxError> {
        for s in self.sorts() {
            sig.ensure_sort(s)?;
        }
        self.check_variables(formula.variables())?;
        formula.atoms.iter().try_for_each(|a| sig.check_atom(a))
    }
}

/// `x⃗.φ`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormulaInContext {
    pub context: Context,
    pub body: HornFormula,
}

impl FormulaInContext {
    pub fn new(context: Context, body: HornFormula) -> Self {
        FormulaInContext { context, body }
    }

    pub fn check(&self, sig: &Signature) -> Result<(), SyntaxError> {
        self.context.check_formula(sig, &self.body)
    }
}

/// `φ ⊢_x⃗ ψ`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sequent {
    pub context: Context,
    pub premise: HornFormula,
    pub conclusion: HornFormula,
}

impl Sequent {
    pub fn new(context: Context, premise: HornFormula, conclusion: HornFormula) -> Self {
        Sequent {
            context,
            premise,
            conclusion,
        }
    }

    pub fn check(&self, sig: &Signature) -> Result<(), SyntaxError> {
        self.context.check_formula(sig, &self.premise)?;
        self.context.check_formula(sig, &self.conclusion)
    }

    pub fn premise_in_context(&self) -> FormulaInContext {
        FormulaInContext::new(self.context.clone(), self.premise.clone())
    }

    /// `x⃗.φ∧ψ`
    pub fn combined_in_context(&self) -> FormulaInContext {
        FormulaInContext::new(self.context.clone(), self.premise.and(&self.conclusion))
    }
}

/// A named set of Horn sequents over a signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theory {
    pub name: String,
    pub signature: Signature,
    pub axioms: Vec<Sequent>,
}

impl Theory {
    pub fn new(name: impl Into<String>, signature: Signature, axioms: Vec<Sequent>) -> Result<Self, SyntaxError> {
        for ax in &axioms {
            ax.check(&signature)?;
        }
        Ok(Theory {
            name: name.into(),
            signature,
            axioms,
        })
    }

    /// A theory with no axioms: its models are all partial structures.
    pub fn bare(name: impl Into<String>, signature: Signature) -> Self {
        Theory {
            name: name.into(),
            signature,
            axioms: Vec::new(),
        }
    }

    pub fn check(&self) -> Result<(), SyntaxError> {
        self.axioms.iter().try_for_each(|ax| ax.check(&self.signature))
    }
}
