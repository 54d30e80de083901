//! Relative algebras: models of a base theory with operators defined exactly
//! on the interpretation of their arities.

mod free;
mod morphism;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::chase::{chase, ChaseError, ChaseOutcome, Presentation};
use crate::structure::{
    check_hom, check_sequent, interpret_formula, is_model, Elem, ElementMap, ModelCheck, PartialStructure, SequentCheck,
    StructureError,
};
use crate::syntax::{Atom, Context, HornFormula, RelativeTheory, Sequent, Signature, SyntaxError, TheoryMorphismData};

pub use free::{free_algebra_chain, h_omega, h_omega_map, FreeChain, HOmega};
pub use morphism::{alg_rho, RelTheoryMorphism};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelAlgError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Chase(#[from] ChaseError),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("judgment premise mentions operator `{0}`")]
    OperatorInPremise(String),
    #[error("the free-algebra chain needs a theory without judgments")]
    JudgmentsPresent,
    #[error("stage {stage} did not saturate within the budget")]
    StageBudget { stage: usize },
    #[error("side condition refuted: {0}")]
    SideConditionRefuted(Sequent),
    #[error("`{op}` is undefined at {args:?} although its side condition holds")]
    Undefined { op: String, args: Vec<Elem> },
    #[error("not a relative algebra: {0}")]
    NotAlgebra(String),
    #[error("relative theories have different bases")]
    BaseMismatch,
    #[error("map is not an algebra homomorphism: {0}")]
    NotAlgebraHom(String),
}

/// Verdict of [`is_relative_algebra`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlgebraCheck {
    Valid,
    /// The underlying structure violates a base axiom.
    BaseFailure { axiom: Sequent, witness: Vec<Elem> },
    /// The arity holds at `args` but the operator is undefined there.
    Missing { op: String, args: Vec<Elem> },
    /// The operator is defined at `args` outside its arity.
    Extraneous { op: String, args: Vec<Elem> },
}

impl AlgebraCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, AlgebraCheck::Valid)
    }
}

impl std::fmt::Display for AlgebraCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlgebraCheck::Valid => write!(f, "valid"),
            AlgebraCheck::BaseFailure { axiom, witness } => write!(f, "base axiom `{axiom}` fails at {witness:?}"),
            AlgebraCheck::Missing { op, args } => write!(f, "`{op}` missing at {args:?}"),
            AlgebraCheck::Extraneous { op, args } => write!(f, "`{op}` defined outside its arity at {args:?}"),
        }
    }
}

/// A base structure with one table per operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelativeAlgebra {
    theory: Arc<RelativeTheory>,
    /// Σ+Ω, the underlying structure expanded by the operator tables.
    structure: PartialStructure,
}

impl RelativeAlgebra {
    /// Builds an algebra from operator tables; only the shape (known
    /// operators, functional tables, ids in range) is checked here.
    pub fn new(
        theory: Arc<RelativeTheory>,
        underlying: &PartialStructure,
        ops: BTreeMap<String, Vec<(Vec<Elem>, Elem)>>,
    ) -> Result<Self, RelAlgError> {
        if underlying.signature() != &theory.base.signature {
            return Err(StructureError::SignatureMismatch.into());
        }
        let sig = theory.extended_signature()?;
        let mut structure = underlying.expand_to(&sig)?;
        for (op, entries) in ops {
            if theory.operator(&op).is_none() {
                return Err(RelAlgError::UnknownOperator(op));
            }
            structure.set_function_table(&op, entries)?;
        }
        Ok(RelativeAlgebra { theory, structure })
    }

    /// Splits a Σ+Ω structure into an algebra.
    pub fn from_structure(theory: Arc<RelativeTheory>, structure: PartialStructure) -> Result<Self, RelAlgError> {
        if structure.signature() != &theory.extended_signature()? {
            return Err(StructureError::SignatureMismatch.into());
        }
        Ok(RelativeAlgebra { theory, structure })
    }

    /// An algebra of the theory with no operators.
    pub fn trivial(theory: Arc<RelativeTheory>, underlying: &PartialStructure) -> Result<Self, RelAlgError> {
        Self::new(theory, underlying, BTreeMap::new())
    }

    pub fn theory(&self) -> &Arc<RelativeTheory> {
        &self.theory
    }

    pub fn underlying(&self) -> PartialStructure {
        self.structure
            .restrict_to(&self.theory.base.signature)
            .expect("base signature is a subsignature")
    }

    /// The algebra as a Σ+Ω structure.
    pub fn as_structure(&self) -> &PartialStructure {
        &self.structure
    }

    pub fn op_table(&self, op: &str) -> &BTreeMap<Vec<Elem>, Elem> {
        self.structure.function_table(op)
    }

    pub fn op(&self, op: &str, args: &[Elem]) -> Option<Elem> {
        self.structure.apply(op, args)
    }
}

/// Checks that the underlying structure is a model of the base and that
/// each operator is defined exactly on its arity.
pub fn is_relative_algebra(a: &RelativeAlgebra) -> AlgebraCheck {
    let base = a.underlying();
    match is_model(&base, &a.theory.base).expect("signatures agree") {
        ModelCheck::Model => {}
        ModelCheck::Fails { axiom, witness } => {
            return AlgebraCheck::BaseFailure {
                axiom: a.theory.base.axioms[axiom].clone(),
                witness,
            }
        }
    }
    for op in &a.theory.operators {
        let domain: BTreeSet<Vec<Elem>> = interpret_formula(&base, &op.arity).into_iter().collect();
        let table = a.op_table(&op.name);
        if let Some(args) = domain.iter().find(|t| !table.contains_key(*t)) {
            return AlgebraCheck::Missing {
                op: op.name.clone(),
                args: args.clone(),
            };
        }
        if let Some(args) = table.keys().find(|t| !domain.contains(*t)) {
            return AlgebraCheck::Extraneous {
                op: op.name.clone(),
                args: args.clone(),
            };
        }
    }
    AlgebraCheck::Valid
}

/// Validity of a relative judgment in the algebra seen as a Σ+Ω structure.
pub fn satisfies_judgment(a: &RelativeAlgebra, j: &Sequent) -> Result<SequentCheck, RelAlgError> {
    if let Some(op) = a.theory.operator_in(&j.premise) {
        return Err(RelAlgError::OperatorInPremise(op.to_string()));
    }
    j.check(a.structure.signature())?;
    Ok(check_sequent(&a.structure, j))
}

/// A valid algebra satisfying every judgment of its theory, that is, a model
/// of the expanded theory. Returns the first failing judgment otherwise.
pub fn check_algebra_of_theory(a: &RelativeAlgebra) -> Result<(), String> {
    let check = is_relative_algebra(a);
    if !check.is_valid() {
        return Err(check.to_string());
    }
    for j in &a.theory.judgments {
        if let SequentCheck::Violated(w) = check_sequent(&a.structure, j) {
            return Err(format!("judgment `{j}` fails at {w:?}"));
        }
    }
    Ok(())
}

/// Checks that `map` preserves the base structure and every operator.
pub fn check_algebra_hom(a: &RelativeAlgebra, b: &RelativeAlgebra, map: &ElementMap) -> Result<(), RelAlgError> {
    check_hom(&a.structure, &b.structure, map).map_err(|v| RelAlgError::NotAlgebraHom(v.to_string()))
}

/// Chases a presentation under the expanded theory `T[Ω,E]`. Colimits of
/// algebras are computed this way, as representing models.
pub fn algebra_colimit(
    rt: &RelativeTheory,
    generators: &Context,
    facts: &HornFormula,
    budget: usize,
) -> Result<ChaseOutcome, RelAlgError> {
    let p = Presentation::new(Arc::new(rt.expand()), generators.clone(), facts.clone())?;
    Ok(chase(&p, budget)?)
}

/// Coequalizer of two carrier maps `h, h2` into `target`: the diagram of
/// `target` with the images of each source element identified, chased under
/// the theory of `target`. The maps should be algebra homomorphisms from a
/// common source; only their element images matter here.
pub fn algebra_coequalizer(
    target: &RelativeAlgebra,
    h: &ElementMap,
    h2: &ElementMap,
    budget: usize,
) -> Result<ChaseOutcome, RelAlgError> {
    let expanded = Arc::new(target.theory.expand());
    let rho = TheoryMorphismData::identity(&expanded.signature);
    let (p, index) = Presentation::diagram(expanded, &rho, &target.structure)?;
    let gens = p.generators().vars();
    let mut eqs = Vec::new();
    for (s, images) in &h.0 {
        let images2 = h2.sort_map(s);
        if images.len() != images2.len() {
            return Err(RelAlgError::NotAlgebraHom(format!("maps have different domains on sort `{s}`")));
        }
        for (&a, &b) in images.iter().zip(images2) {
            let (Some(&ga), Some(&gb)) = (index[s].get(a), index[s].get(b)) else {
                return Err(StructureError::OutOfRange {
                    sort: s.clone(),
                    elem: a.max(b),
                    size: index[s].len(),
                }
                .into());
            };
            if ga != gb {
                eqs.push(Atom::Eq(
                    crate::syntax::Term::Var(gens[ga].clone()),
                    crate::syntax::Term::Var(gens[gb].clone()),
                ));
            }
        }
    }
    let p = p.with_facts(&HornFormula::new(eqs))?;
    Ok(chase(&p, budget)?)
}

/// The base signature of `rt`, for callers building base structures.
pub fn base_signature(rt: &RelativeTheory) -> &Signature {
    &rt.base.signature
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::syntax::parse_sequent;

    fn window_algebra() -> RelativeAlgebra {
        let (base, ops) = corpus::n_window_subtraction();
        RelativeAlgebra::new(Arc::new(corpus::possub()), &base, [("-".to_string(), ops)].into_iter().collect()).unwrap()
    }

    #[test]
    fn window_subtraction_is_an_algebra() {
        let a = window_algebra();
        assert!(is_relative_algebra(&a).is_valid());
        assert_eq!(check_algebra_of_theory(&a), Ok(()));
    }

    #[test]
    fn extraneous_and_missing_entries() {
        let (base, mut ops) = corpus::n_window_subtraction();
        ops.push((vec![0, 1], 0));
        let a = RelativeAlgebra::new(Arc::new(corpus::possub()), &base, [("-".to_string(), ops)].into_iter().collect()).unwrap();
        assert_eq!(
            is_relative_algebra(&a),
            AlgebraCheck::Extraneous {
                op: "-".into(),
                args: vec![0, 1]
            }
        );
        let (base, mut ops) = corpus::n_window_subtraction();
        ops.retain(|(args, _)| args != &vec![2, 1]);
        let a = RelativeAlgebra::new(Arc::new(corpus::possub()), &base, [("-".to_string(), ops)].into_iter().collect()).unwrap();
        assert_eq!(
            is_relative_algebra(&a),
            AlgebraCheck::Missing {
                op: "-".into(),
                args: vec![2, 1]
            }
        );
    }

    #[test]
    fn no_operators_means_any_model() {
        let rt = Arc::new(RelativeTheory::trivial(corpus::pos()));
        for m in [corpus::chain(3), corpus::antichain(2)] {
            assert!(is_relative_algebra(&RelativeAlgebra::trivial(rt.clone(), &m).unwrap()).is_valid());
        }
    }

    #[test]
    fn judgments() {
        let a = window_algebra();
        let sig = a.as_structure().signature().clone();
        let j = parse_sequent(&sig, "leq(x, y) & leq(z, x) |- [x:*, y:*, z:*] leq(x - z, y - z)").unwrap();
        assert!(satisfies_judgment(&a, &j).unwrap().is_valid());
        let top = parse_sequent(&sig, "leq(x, y) |- [x:*, y:*] top").unwrap();
        assert!(satisfies_judgment(&a, &top).unwrap().is_valid());
        let bad = parse_sequent(&sig, "leq(x - x, y) |- [x:*, y:*] top").unwrap();
        assert!(matches!(satisfies_judgment(&a, &bad), Err(RelAlgError::OperatorInPremise(_))));

        // 3 - 1 sent to 0 instead of 2.
        let (base, mut ops) = corpus::n_window_subtraction();
        for (args, v) in ops.iter_mut() {
            if args == &vec![3, 1] {
                *v = 0;
            }
        }
        let wrong = RelativeAlgebra::new(Arc::new(corpus::possub()), &base, [("-".to_string(), ops)].into_iter().collect()).unwrap();
        let j2 = parse_sequent(&sig, "leq(y, z) & leq(z, x) |- [x:*, y:*, z:*] leq(x - z, x - y)").unwrap();
        assert_eq!(satisfies_judgment(&wrong, &j2).unwrap(), SequentCheck::Violated(vec![3, 1, 2]));
    }

    #[test]
    fn structure_round_trip() {
        let a = window_algebra();
        let back = RelativeAlgebra::from_structure(a.theory().clone(), a.as_structure().clone()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.underlying(), corpus::chain(4));
        assert_eq!(back.op_table("-").len(), 10);
    }
}
