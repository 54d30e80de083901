//! Relative algebraic theories: a base theory plus operators whose arities
//! are Horn formulas over the base signature, and judgments over the
//! extended signature.

use super::ast::{Atom, FormulaInContext, HornFormula, Sequent, Signature, Sort, Term, Theory};
use super::error::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operator {
    pub name: String,
    pub arity: FormulaInContext,
    pub result: Sort,
}

impl Operator {
    pub fn arg_sorts(&self) -> Vec<Sort> {
        self.arity.context.sorts().cloned().collect()
    }

    /// `ω(x⃗)` over the arity's context.
    pub fn applied(&self) -> Term {
        Term::app(self.name.clone(), self.arity.context.as_terms())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelativeTheory {
    pub name: String,
    pub base: Theory,
    pub operators: Vec<Operator>,
    pub judgments: Vec<Sequent>,
}

impl RelativeTheory {
    pub fn new(
        name: impl Into<String>,
        base: Theory,
        operators: Vec<Operator>,
        judgments: Vec<Sequent>,
    ) -> Result<Self, SyntaxError> {
        let rt = RelativeTheory {
            name: name.into(),
            base,
            operators,
            judgments,
        };
        rt.check()?;
        Ok(rt)
    }

    pub fn check(&self) -> Result<(), SyntaxError> {
        self.base.check()?;
        for op in &self.operators {
            op.arity.check(&self.base.signature)?;
            self.base.signature.ensure_sort(&op.result)?;
        }
        let sig = self.extended_signature()?;
        for j in &self.judgments {
            j.check(&sig)?;
            if let Some(op) = self.operator_in(&j.premise) {
                return Err(SyntaxError::OperatorInPremise(op.to_string()));
            }
        }
        Ok(())
    }

    /// Σ+Ω: the base signature with one function symbol per operator.
    pub fn extended_signature(&self) -> Result<Signature, SyntaxError> {
        let mut sig = self.base.signature.clone();
        for op in &self.operators {
            sig.add_function(op.name.clone(), op.arg_sorts(), op.result.clone())?;
        }
        Ok(sig)
    }

    pub fn operator(&self, name: &str) -> Option<&Operator> {
        self.operators.iter().find(|o| o.name == name)
    }

    /// First operator symbol occurring in `formula`, if any.
    pub fn operator_in<'a>(&self, formula: &'a HornFormula) -> Option<&'a str> {
        formula.symbols().into_iter().find(|s| self.operator(s).is_some())
    }

    /// Relative theory with the same base and no operators or judgments.
    pub fn trivial(base: Theory) -> Self {
        RelativeTheory {
            name: base.name.clone(),
            base,
            operators: Vec::new(),
            judgments: Vec::new(),
        }
    }

    pub fn expand(&self) -> Theory {
        expand_relative_theory(self)
    }
}

/// `T[Ω,E] = 𝕊 ∪ {ω(x⃗)↓ ⊣⊢ ar(ω)} ∪ E` over Σ+Ω, with each bisequent
/// split into its two directions.
pub fn expand_relative_theory(rt: &RelativeTheory) -> Theory {
    let signature = rt
        .extended_signature()
        .expect("relative theory was checked at construction");
    let mut axioms = rt.base.axioms.clone();
    for op in &rt.operators {
        let defined = HornFormula::new(vec![Atom::defined(op.applied())]);
        let ctx = op.arity.context.clone();
        axioms.push(Sequent::new(ctx.clone(), defined.clone(), op.arity.body.clone()));
        axioms.push(Sequent::new(ctx, op.arity.body.clone(), defined));
    }
    axioms.extend(rt.judgments.iter().cloned());
    Theory {
        name: rt.name.clone(),
        signature,
        axioms,
    }
}
