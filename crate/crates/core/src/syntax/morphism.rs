//! Syntactic data of theory morphisms and translation along them.

use std::collections::BTreeMap;

use super::ast::{Atom, Context, HornFormula, Sequent, Signature, Sort, Term, Theory, Variable};
use super::error::SyntaxError;

/// Symbol maps between two signatures. The maps may be partial; translating
/// an item that uses an unmapped symbol fails with [`SyntaxError::Unmapped`].
/// Whether the translated axioms hold is a semantic question left to the
/// chase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoryMorphismData {
    pub source: Signature,
    pub target: Signature,
    pub sorts: BTreeMap<Sort, Sort>,
    pub functions: BTreeMap<String, String>,
    pub relations: BTreeMap<String, String>,
}

impl TheoryMorphismData {
    pub fn new(
        source: Signature,
        target: Signature,
        sorts: BTreeMap<Sort, Sort>,
        functions: BTreeMap<String, String>,
        relations: BTreeMap<String, String>,
    ) -> Result<Self, SyntaxError> {
        let m = TheoryMorphismData {
            source,
            target,
            sorts,
            functions,
            relations,
        };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<(), SyntaxError> {
        for (s, t) in &self.sorts {
            self.source.ensure_sort(s)?;
            self.target.ensure_sort(t)?;
        }
        for (f, g) in &self.functions {
            let src = self.source.function(f).ok_or_else(|| SyntaxError::UnknownFunction(f.clone()))?;
            let tgt = self.target.function(g).ok_or_else(|| SyntaxError::UnknownFunction(g.clone()))?;
            let args = src.args.iter().map(|s| self.map_sort(s)).collect::<Result<Vec<_>, _>>()?;
            if args.len() != tgt.args.len() {
                return Err(SyntaxError::ArityMismatch {
                    symbol: g.clone(),
                    expected: args.len(),
                    found: tgt.args.len(),
                });
            }
            for (a, b) in args.iter().chain(std::iter::once(&self.map_sort(&src.result)?)).zip(tgt.args.iter().chain(std::iter::once(&tgt.result))) {
                if a != b {
                    return Err(SyntaxError::SortMismatch {
                        at: format!("image of `{f}`"),
                        expected: a.clone(),
                        found: b.clone(),
                    });
                }
            }
        }
        for (r, q) in &self.relations {
            let src = self.source.relation(r).ok_or_else(|| SyntaxError::UnknownRelation(r.clone()))?;
            let tgt = self.target.relation(q).ok_or_else(|| SyntaxError::UnknownRelation(q.clone()))?;
            let args = src.args.iter().map(|s| self.map_sort(s)).collect::<Result<Vec<_>, _>>()?;
            if args != tgt.args {
                return Err(SyntaxError::ArityMismatch {
                    symbol: q.clone(),
                    expected: args.len(),
                    found: tgt.args.len(),
                });
            }
        }
        Ok(())
    }

    pub fn identity(sig: &Signature) -> Self {
        Self::inclusion(sig, sig).expect("a signature includes itself")
    }

    /// Every symbol mapped to itself; `source` must be a subsignature of `target`.
    pub fn inclusion(source: &Signature, target: &Signature) -> Result<Self, SyntaxError> {
        if !source.is_subsignature_of(target) {
            if let Some(s) = source.sorts().iter().find(|s| !target.has_sort(s)) {
                return Err(SyntaxError::UndeclaredSort(s.name().to_string()));
            }
            let bad = source
                .functions()
                .map(|(n, _)| n)
                .chain(source.relations().map(|(n, _)| n))
                .find(|n| target.function(n).is_none() && target.relation(n).is_none())
                .unwrap_or("?");
            return Err(SyntaxError::Unmapped(bad.to_string()));
        }
        Self::new(
            source.clone(),
            target.clone(),
            source.sorts().iter().map(|s| (s.clone(), s.clone())).collect(),
            source.functions().map(|(n, _)| (n.to_string(), n.to_string())).collect(),
            source.relations().map(|(n, _)| (n.to_string(), n.to_string())).collect(),
        )
    }

    /// A morphism mapping sorts only; `source` should have no symbols that
    /// items to be translated use.
    pub fn sort_only(source: &Signature, target: &Signature, sorts: BTreeMap<Sort, Sort>) -> Result<Self, SyntaxError> {
        Self::new(source.clone(), target.clone(), sorts, BTreeMap::new(), BTreeMap::new())
    }

    pub fn map_sort(&self, s: &Sort) -> Result<Sort, SyntaxError> {
        self.sorts.get(s).cloned().ok_or_else(|| SyntaxError::Unmapped(s.name().to_string()))
    }

    pub fn map_function(&self, f: &str) -> Result<&str, SyntaxError> {
        self.functions.get(f).map(String::as_str).ok_or_else(|| SyntaxError::Unmapped(f.to_string()))
    }

    pub fn map_relation(&self, r: &str) -> Result<&str, SyntaxError> {
        self.relations.get(r).map(String::as_str).ok_or_else(|| SyntaxError::Unmapped(r.to_string()))
    }

    pub fn translate_variable(&self, v: &Variable) -> Result<Variable, SyntaxError> {
        Ok(Variable::new(v.name.clone(), self.map_sort(&v.sort)?))
    }

    pub fn translate_term(&self, t: &Term) -> Result<Term, SyntaxError> {
        match t {
            Term::Var(v) => Ok(Term::Var(self.translate_variable(v)?)),
            Term::App(f, args) => Ok(Term::App(
                self.map_function(f)?.to_string(),
                args.iter().map(|a| self.translate_term(a)).collect::<Result<_, _>>()?,
            )),
        }
    }

    pub fn translate_atom(&self, a: &Atom) -> Result<Atom, SyntaxError> {
        Ok(match a {
            Atom::Eq(l, r) => Atom::Eq(self.translate_term(l)?, self.translate_term(r)?),
            Atom::Rel(r, args) => Atom::Rel(
                self.map_relation(r)?.to_string(),
                args.iter().map(|t| self.translate_term(t)).collect::<Result<_, _>>()?,
            ),
        })
    }

    pub fn translate_formula(&self, phi: &HornFormula) -> Result<HornFormula, SyntaxError> {
        Ok(HornFormula::new(
            phi.atoms.iter().map(|a| self.translate_atom(a)).collect::<Result<_, _>>()?,
        ))
    }

    pub fn translate_context(&self, ctx: &Context) -> Result<Context, SyntaxError> {
        Context::new(ctx.vars().iter().map(|v| self.translate_variable(v)).collect::<Result<_, _>>()?)
    }

    pub fn translate_sequent(&self, s: &Sequent) -> Result<Sequent, SyntaxError> {
        Ok(Sequent::new(
            self.translate_context(&s.context)?,
            self.translate_formula(&s.premise)?,
            self.translate_formula(&s.conclusion)?,
        ))
    }

    /// Axioms of `t` translated along the morphism.
    pub fn translate_axioms(&self, t: &Theory) -> Result<Vec<Sequent>, SyntaxError> {
        t.axioms.iter().map(|s| self.translate_sequent(s)).collect()
    }
}
