//! Simultaneous substitution of terms for variables.

use std::collections::BTreeMap;

use super::ast::{Atom, Context, HornFormula, Signature, Term, Variable};
use super::error::SyntaxError;

/// A sort-respecting finite map from variables to terms.
///
/// Terms have no binders, so substitution is capture-free by construction;
/// it is simultaneous because replacement terms are never revisited.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Substitution {
    map: BTreeMap<Variable, Term>,
}

impl Substitution {
    pub fn new(sig: &Signature, pairs: impl IntoIterator<Item = (Variable, Term)>) -> Result<Self, SyntaxError> {
        let mut map = BTreeMap::new();
        for (v, t) in pairs {
            let s = sig.sort_of(&t)?;
            if s != v.sort {
                return Err(SyntaxError::SortMismatch {
                    at: format!("binding for `{}`", v.name),
                    expected: v.sort.clone(),
                    found: s,
                });
            }
            if map.insert(v.clone(), t).is_some() {
                return Err(SyntaxError::DuplicateVariable(v.name));
            }
        }
        Ok(Substitution { map })
    }

    /// `x⃗ ↦ τ⃗` for a context and a matching list of terms.
    pub fn from_context(sig: &Signature, ctx: &Context, terms: &[Term]) -> Result<Self, SyntaxError> {
        if ctx.len() != terms.len() {
            return Err(SyntaxError::ArityMismatch {
                symbol: "substitution".into(),
                expected: ctx.len(),
                found: terms.len(),
            });
        }
        Self::new(sig, ctx.vars().iter().cloned().zip(terms.iter().cloned()))
    }

    pub fn get(&self, v: &Variable) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.map.iter()
    }

    /// Applies the substitution; every variable of `t` must be bound.
    pub fn apply_term(&self, t: &Term) -> Result<Term, SyntaxError> {
        match t {
            Term::Var(v) => self.map.get(v).cloned().ok_or_else(|| SyntaxError::UnboundVariable(v.name.clone())),
            Term::App(f, args) => Ok(Term::App(
                f.clone(),
                args.iter().map(|a| self.apply_term(a)).collect::<Result<_, _>>()?,
            )),
        }
    }

    /// Like [`apply_term`](Self::apply_term) but leaves unbound variables in place.
    pub fn apply_term_partial(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| self.apply_term_partial(a)).collect()),
        }
    }

    pub fn apply_atom(&self, a: &Atom) -> Result<Atom, SyntaxError> {
        Ok(match a {
            Atom::Eq(l, r) => Atom::Eq(self.apply_term(l)?, self.apply_term(r)?),
            Atom::Rel(r, args) => Atom::Rel(
                r.clone(),
                args.iter().map(|t| self.apply_term(t)).collect::<Result<_, _>>()?,
            ),
        })
    }

    pub fn apply_formula(&self, phi: &HornFormula) -> Result<HornFormula, SyntaxError> {
        Ok(HornFormula::new(
            phi.atoms.iter().map(|a| self.apply_atom(a)).collect::<Result<_, _>>()?,
        ))
    }

    /// `τ ∘ σ`: first `self`, then `other`. Variables bound only by `other`
    /// keep their `other` binding.
    pub fn then(&self, other: &Substitution) -> Substitution {
        let mut map: BTreeMap<Variable, Term> = self
            .map
            .iter()
            .map(|(v, t)| (v.clone(), other.apply_term_partial(t)))
            .collect();
        for (v, t) in &other.map {
            map.entry(v.clone()).or_insert_with(|| t.clone());
        }
        Substitution { map }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ast::Sort;

    fn pos_sig() -> Signature {
        let mut sig = Signature::new();
        sig.add_sort("*").unwrap();
        sig.add_relation("leq", vec![Sort::new("*"), Sort::new("*")]).unwrap();
        sig
    }

    #[test]
    fn diagonal() {
        let sig = pos_sig();
        let (x, y, a) = (Variable::new("x", "*"), Variable::new("y", "*"), Term::var("a", "*"));
        let s = Substitution::new(&sig, [(x.clone(), a.clone()), (y.clone(), a.clone())]).unwrap();
        let phi = HornFormula::new(vec![Atom::Rel("leq".into(), vec![Term::Var(x), Term::Var(y)])]);
        let out = s.apply_formula(&phi).unwrap();
        assert_eq!(out.atoms, vec![Atom::Rel("leq".into(), vec![a.clone(), a])]);
    }

    #[test]
    fn top_is_fixed() {
        let s = Substitution::default();
        assert_eq!(s.apply_formula(&HornFormula::top()).unwrap(), HornFormula::top());
    }

    #[test]
    fn unbound_and_ill_sorted() {
        let mut sig = pos_sig();
        sig.add_sort("t").unwrap();
        let s = Substitution::default();
        assert!(matches!(s.apply_term(&Term::var("x", "*")), Err(SyntaxError::UnboundVariable(_))));
        let bad = Substitution::new(&sig, [(Variable::new("x", "*"), Term::var("u", "t"))]);
        assert!(matches!(bad, Err(SyntaxError::SortMismatch { .. })));
    }

    #[test]
    fn simultaneous_swap() {
        let sig = pos_sig();
        let (x, y) = (Variable::new("x", "*"), Variable::new("y", "*"));
        let s = Substitution::new(&sig, [(x.clone(), Term::Var(y.clone())), (y.clone(), Term::Var(x.clone()))]).unwrap();
        let t = Atom::Rel("leq".into(), vec![Term::Var(x.clone()), Term::Var(y.clone())]);
        assert_eq!(s.apply_atom(&t).unwrap(), Atom::Rel("leq".into(), vec![Term::Var(y), Term::Var(x)]));
    }
}
