//! Morphisms of relative theories over a common base and the induced
//! functor on algebras.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{check_algebra_of_theory, RelAlgError, RelativeAlgebra};
use crate::chase::{is_phl_theorem, Derivability};
use crate::structure::{interpret_formula, interpret_term};
use crate::syntax::{Atom, HornFormula, RelativeTheory, Sequent, Signature, Substitution, SyntaxError, Term};

/// `ω ↦ ω^ρ`, a term over the target's Σ+Ω' in the context of `ar(ω)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelTheoryMorphism {
    source: Arc<RelativeTheory>,
    target: Arc<RelativeTheory>,
    assignment: BTreeMap<String, Term>,
    target_signature: Signature,
}

impl RelTheoryMorphism {
    pub fn new(
        source: Arc<RelativeTheory>,
        target: Arc<RelativeTheory>,
        assignment: BTreeMap<String, Term>,
    ) -> Result<Self, RelAlgError> {
        if source.base.signature != target.base.signature || source.base.axioms != target.base.axioms {
            return Err(RelAlgError::BaseMismatch);
        }
        let target_signature = target.extended_signature()?;
        for op in &source.operators {
            let Some(t) = assignment.get(&op.name) else {
                return Err(SyntaxError::Unmapped(op.name.clone()).into());
            };
            let sort = op.arity.context.check_term(&target_signature, t)?;
            if sort != op.result {
                return Err(SyntaxError::SortMismatch {
                    at: format!("image of `{}`", op.name),
                    expected: op.result.clone(),
                    found: sort,
                }
                .into());
            }
        }
        if let Some(extra) = assignment.keys().find(|k| source.operator(k).is_none()) {
            return Err(RelAlgError::UnknownOperator(extra.clone()));
        }
        Ok(RelTheoryMorphism {
            source,
            target,
            assignment,
            target_signature,
        })
    }

    pub fn identity(rt: Arc<RelativeTheory>) -> Self {
        let assignment = rt.operators.iter().map(|o| (o.name.clone(), o.applied())).collect();
        Self::new(rt.clone(), rt, assignment).expect("identity assignment is well-typed")
    }

    pub fn source(&self) -> &Arc<RelativeTheory> {
        &self.source
    }

    pub fn target(&self) -> &Arc<RelativeTheory> {
        &self.target
    }

    pub fn image(&self, op: &str) -> Option<&Term> {
        self.assignment.get(op)
    }

    /// `τ^ρ`: every source operator replaced by its image.
    pub fn translate_term(&self, t: &Term) -> Result<Term, RelAlgError> {
        match t {
            Term::Var(_) => Ok(t.clone()),
            Term::App(f, args) => {
                let args = args.iter().map(|a| self.translate_term(a)).collect::<Result<Vec<_>, _>>()?;
                match self.source.operator(f) {
                    None => Ok(Term::App(f.clone(), args)),
                    Some(op) => {
                        let sub = Substitution::from_context(&self.target_signature, &op.arity.context, &args)?;
                        Ok(sub.apply_term(&self.assignment[f])?)
                    }
                }
            }
        }
    }

    pub fn translate_formula(&self, phi: &HornFormula) -> Result<HornFormula, RelAlgError> {
        let atoms = phi
            .atoms
            .iter()
            .map(|a| {
                Ok(match a {
                    Atom::Rel(r, args) => {
                        Atom::Rel(r.clone(), args.iter().map(|t| self.translate_term(t)).collect::<Result<_, RelAlgError>>()?)
                    }
                    Atom::Eq(l, r) => Atom::Eq(self.translate_term(l)?, self.translate_term(r)?),
                })
            })
            .collect::<Result<Vec<_>, RelAlgError>>()?;
        Ok(HornFormula::new(atoms))
    }

    /// The sequents that make this a theory morphism, to be proved in the
    /// target's expanded theory: `ar(ω) ⊢ ω^ρ↓` for each operator, and
    /// `φ ⊢ ψ^ρ` for each source judgment `φ ⊢ ψ`.
    pub fn side_conditions(&self) -> Result<Vec<Sequent>, RelAlgError> {
        let mut out = Vec::new();
        for op in &self.source.operators {
            out.push(Sequent::new(
                op.arity.context.clone(),
                op.arity.body.clone(),
                HornFormula::new(vec![Atom::defined(self.assignment[&op.name].clone())]),
            ));
        }
        for j in &self.source.judgments {
            out.push(Sequent::new(j.context.clone(), j.premise.clone(), self.translate_formula(&j.conclusion)?));
        }
        Ok(out)
    }

    /// Decides each side condition within `budget`.
    pub fn check(&self, budget: usize) -> Result<Vec<(Sequent, Derivability)>, RelAlgError> {
        let expanded = self.target.expand();
        self.side_conditions()?
            .into_iter()
            .map(|s| {
                let d = is_phl_theorem(&s, &expanded, budget)?;
                Ok((s, d))
            })
            .collect()
    }
}

/// `Alg ρ`: the same underlying structure with each source operator read as
/// its image term. A refuted side condition is an error. A side condition
/// left undecided by the budget is not; the resulting algebra is then
/// checked directly against the source theory instead.
pub fn alg_rho(rho: &RelTheoryMorphism, b: &RelativeAlgebra, budget: usize) -> Result<RelativeAlgebra, RelAlgError> {
    if b.theory() != rho.target() {
        return Err(RelAlgError::BaseMismatch);
    }
    let mut undecided = false;
    for (s, d) in rho.check(budget)? {
        match d {
            Derivability::Proved => {}
            Derivability::Refuted => return Err(RelAlgError::SideConditionRefuted(s)),
            Derivability::Unknown { .. } => undecided = true,
        }
    }
    let underlying = b.underlying();
    let mut ops = BTreeMap::new();
    for op in &rho.source().operators {
        let term = &rho.assignment[&op.name];
        let mut entries = Vec::new();
        for args in interpret_formula(&underlying, &op.arity) {
            let v = interpret_term(b.as_structure(), &op.arity.context, term, &args).ok_or_else(|| RelAlgError::Undefined {
                op: op.name.clone(),
                args: args.clone(),
            })?;
            entries.push((args, v));
        }
        ops.insert(op.name.clone(), entries);
    }
    let a = RelativeAlgebra::new(rho.source().clone(), &underlying, ops)?;
    if undecided {
        check_algebra_of_theory(&a).map_err(RelAlgError::NotAlgebra)?;
    }
    Ok(a)
}
