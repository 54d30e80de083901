//! Bounded chase: representing models of Horn formulas, theoremhood through
//! the generic model, morphisms between representing models, and free models
//! along theory morphisms.
//!
//! Each scan collects every axiom match whose conclusion fails into a FIFO
//! agenda, ordered by axiom and then by the classes' least nodes, and
//! enforces the agenda in order. One enforcement is one step; the step
//! budget bounds the run. Congruence closure is restored after every step that merged classes.

mod matcher;
mod state;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::structure::eval::{CAtom, CTerm};
use crate::structure::{
    extend_from_generators, satisfies, Elem, ElementMap, Homomorphism, PartialStructure,
    StructureError,
};
use crate::syntax::{
    Atom, Context, FormulaInContext, HornFormula, Sequent, Sort, SyntaxError, Term, Theory, TheoryMorphismData,
    Variable,
};
use matcher::Matcher;
use state::{compile_atoms, ChaseState, CompiledAxiom, Node};

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChaseError {
    #[error("ill-formed input: {0}")]
    IllFormed(#[from] SyntaxError),
    #[error("step budget must be positive")]
    ZeroBudget,
    #[error("side condition refuted: {0}")]
    SideConditionRefuted(Sequent),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Generators with atomic facts over them, to be saturated under a theory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    theory: Arc<Theory>,
    generators: Context,
    facts: HornFormula,
}

impl Presentation {
    pub fn new(theory: Arc<Theory>, generators: Context, facts: HornFormula) -> Result<Self, ChaseError> {
        generators.check_formula(&theory.signature, &facts)?;
        Ok(Presentation {
            theory,
            generators,
            facts,
        })
    }

    /// `x⃗.φ` read as generators `x⃗` and facts `φ`.
    pub fn from_formula(theory: Arc<Theory>, phi: &FormulaInContext) -> Result<Self, ChaseError> {
        Self::new(theory, phi.context.clone(), phi.body.clone())
    }

    /// The diagram of `a` translated along `rho` into `theory`: one generator
    /// per element and one fact per table entry. Also returns, per sort of
    /// `a`, the generator index of each element.
    pub fn diagram(
        theory: Arc<Theory>,
        rho: &TheoryMorphismData,
        a: &PartialStructure,
    ) -> Result<(Self, BTreeMap<Sort, Vec<usize>>), ChaseError> {
        let sig = a.signature();
        let mut vars = Vec::new();
        let mut index: BTreeMap<Sort, Vec<usize>> = BTreeMap::new();
        for s in sig.sorts() {
            let target = rho.map_sort(s)?;
            let ids: Vec<usize> = (0..a.carrier_size(s))
                .map(|e| {
                    vars.push(Variable::new(format!("{s}:{e}"), target.clone()));
                    vars.len() - 1
                })
                .collect();
            index.insert(s.clone(), ids);
        }
        let gen = |s: &Sort, e: Elem| Term::Var(vars[index[s][e]].clone());
        let mut atoms = Vec::new();
        for (f, decl) in sig.functions() {
            let g = rho.map_function(f)?;
            for (args, &v) in a.function_table(f) {
                let lhs = Term::app(g, decl.args.iter().zip(args).map(|(s, &x)| gen(s, x)).collect());
                atoms.push(Atom::Eq(lhs, gen(&decl.result, v)));
            }
        }
        for (r, decl) in sig.relations() {
            let q = rho.map_relation(r)?;
            for args in a.relation_table(r) {
                atoms.push(Atom::Rel(q.to_string(), decl.args.iter().zip(args).map(|(s, &x)| gen(s, x)).collect()));
            }
        }
        let p = Presentation::new(theory, Context::new(vars)?, HornFormula::new(atoms))?;
        Ok((p, index))
    }

    /// The same presentation with additional facts.
    pub fn with_facts(&self, extra: &HornFormula) -> Result<Self, ChaseError> {
        Self::new(self.theory.clone(), self.generators.clone(), self.facts.and(extra))
    }

    pub fn theory(&self) -> &Arc<Theory> {
        &self.theory
    }

    pub fn generators(&self) -> &Context {
        &self.generators
    }

    pub fn facts(&self) -> &HornFormula {
        &self.facts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AgendaOrder {
    #[default]
    Forward,
    /// Axioms and matches visited in reverse; used to test confluence.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChaseOptions {
    pub budget: usize,
    pub order: AgendaOrder,
}

impl Default for ChaseOptions {
    fn default() -> Self {
        ChaseOptions {
            budget: DEFAULT_BUDGET,
            order: AgendaOrder::Forward,
        }
    }
}

impl ChaseOptions {
    pub fn with_budget(budget: usize) -> Self {
        ChaseOptions {
            budget,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Saturated {
    pub model: PartialStructure,
    /// Element denoted by each generator, in generator order.
    pub generators: Vec<Elem>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exhausted {
    pub steps: usize,
    pub nodes: usize,
    pub classes: usize,
    /// The state when the budget ran out; not in general a model.
    pub partial: PartialStructure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChaseOutcome {
    Saturated(Saturated),
    BudgetExceeded(Exhausted),
}

impl ChaseOutcome {
    pub fn saturated(&self) -> Option<&Saturated> {
        match self {
            ChaseOutcome::Saturated(s) => Some(s),
            ChaseOutcome::BudgetExceeded(_) => None,
        }
    }

    pub fn into_saturated(self) -> Option<Saturated> {
        match self {
            ChaseOutcome::Saturated(s) => Some(s),
            ChaseOutcome::BudgetExceeded(_) => None,
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            ChaseOutcome::Saturated(s) => s.steps,
            ChaseOutcome::BudgetExceeded(e) => e.steps,
        }
    }
}

enum Run {
    Done(ChaseOutcome),
    GoalReached,
}

fn run(p: &Presentation, opts: &ChaseOptions, goal: Option<&[CAtom]>) -> Result<Run, ChaseError> {
    if opts.budget == 0 {
        return Err(ChaseError::ZeroBudget);
    }
    let theory: &Theory = &p.theory;
    let sig = &theory.signature;
    let mut st = ChaseState::new(theory);
    let gens: Vec<Node> = p
        .generators
        .sorts()
        .map(|s| st.fresh(sig.sort_index(s).expect("checked at construction")))
        .collect();
    st.enforce(&compile_atoms(&p.generators, &p.facts.atoms), &gens);
    st.rebuild();

    let axioms: Vec<CompiledAxiom> = theory.axioms.iter().map(CompiledAxiom::new).collect();
    let matchers: Vec<Matcher> = theory
        .axioms
        .iter()
        .map(|ax| Matcher::new(&mut st, ax, |s| sig.sort_index(s).expect("declared")))
        .collect();
    let reached = |st: &ChaseState| goal.is_some_and(|g| st.holds_all(g, &gens));
    let mut steps = 0;
    let mut first = true;
    loop {
        if reached(&st) {
            return Ok(Run::GoalReached);
        }
        let delta = st.take_delta();
        let mut agenda: Vec<(usize, Vec<Node>)> = Vec::new();
        for (i, (ax, m)) in axioms.iter().zip(&matchers).enumerate() {
            let found = if first { m.all(&st) } else { m.new_matches(&st, &delta) };
            // Sorted as the elements of a snapshot would be.
            let mut violated: Vec<(Vec<Node>, Vec<Node>)> = found
                .into_iter()
                .filter(|env| !st.holds_all(&ax.conclusion, env))
                .map(|env| (env.iter().map(|&n| st.least(n)).collect(), env))
                .collect();
            violated.sort_unstable();
            agenda.extend(violated.into_iter().map(|(_, env)| (i, env)));
        }
        first = false;
        if agenda.is_empty() {
            let snap = st.snapshot();
            let generators = gens.iter().map(|&g| snap.elem_of[g]).collect();
            return Ok(Run::Done(ChaseOutcome::Saturated(Saturated {
                model: snap.model,
                generators,
                steps,
            })));
        }
        if opts.order == AgendaOrder::Reverse {
            agenda.reverse();
        }
        for (i, env) in agenda {
            let ax = &axioms[i];
            if st.holds_all(&ax.conclusion, &env) {
                continue;
            }
            if steps >= opts.budget {
                return Ok(Run::Done(ChaseOutcome::BudgetExceeded(Exhausted {
                    steps,
                    nodes: st.node_count(),
                    classes: st.class_count(),
                    partial: st.snapshot().model,
                })));
            }
            let env: Vec<Node> = env.iter().map(|&n| st.find(n)).collect();
            st.enforce(&ax.conclusion, &env);
            steps += 1;
            if st.is_dirty() {
                st.rebuild();
            }
            if reached(&st) {
                return Ok(Run::GoalReached);
            }
        }
    }
}

pub fn chase(p: &Presentation, budget: usize) -> Result<ChaseOutcome, ChaseError> {
    chase_with(p, &ChaseOptions::with_budget(budget))
}

pub fn chase_with(p: &Presentation, opts: &ChaseOptions) -> Result<ChaseOutcome, ChaseError> {
    match run(p, opts, None)? {
        Run::Done(o) => Ok(o),
        Run::GoalReached => unreachable!("no goal was given"),
    }
}

/// `⟨x⃗.φ⟩_T`; on saturation `generators` is the tuple `[x⃗]`.
pub fn representing_model(phi: &FormulaInContext, theory: &Theory, budget: usize) -> Result<ChaseOutcome, ChaseError> {
    chase(&Presentation::from_formula(Arc::new(theory.clone()), phi)?, budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivability {
    Proved,
    Refuted,
    Unknown { budget: usize },
}

/// Decides `φ ⊢_x⃗ ψ` in `T` by chasing `⟨x⃗.φ⟩_T`.
///
/// The answer is `Proved` as soon as the conclusion holds at the generators:
/// everything in a chase state is derivable, so this needs no saturation.
/// `Refuted` requires saturation, the saturated model being a countermodel.
pub fn is_phl_theorem(s: &Sequent, theory: &Theory, budget: usize) -> Result<Derivability, ChaseError> {
    s.check(&theory.signature)?;
    let p = Presentation::new(Arc::new(theory.clone()), s.context.clone(), s.premise.clone())?;
    let goal = compile_atoms(&s.context, &s.conclusion.atoms);
    Ok(match run(&p, &ChaseOptions::with_budget(budget), Some(&goal))? {
        Run::GoalReached => Derivability::Proved,
        Run::Done(ChaseOutcome::Saturated(sat)) => {
            // The goal check ran on this very state; re-evaluate on the model
            // for the record.
            if satisfies(&sat.model, &s.context, &s.conclusion, &sat.generators) {
                Derivability::Proved
            } else {
                Derivability::Refuted
            }
        }
        Run::Done(ChaseOutcome::BudgetExceeded(_)) => Derivability::Unknown { budget },
    })
}

/// `⟨τ⃗⟩_T : ⟨x⃗.φ⟩_T → ⟨y⃗.ψ⟩_T` for terms `τ⃗` over `y⃗`, after checking
/// `ψ ⊢_y⃗ φ(τ⃗/x⃗) ∧ ⋀ τᵢ↓`. `Ok(None)` when a chase or the side condition
/// runs out of budget.
pub fn morphism_from_terms(
    src: &FormulaInContext,
    tgt: &FormulaInContext,
    terms: &[Term],
    theory: &Theory,
    budget: usize,
) -> Result<Option<Homomorphism>, ChaseError> {
    let sig = &theory.signature;
    src.check(sig)?;
    tgt.check(sig)?;
    let sub = crate::syntax::Substitution::from_context(sig, &src.context, terms)?;
    for t in terms {
        tgt.context.check_term(sig, t)?;
    }
    let mut required = sub.apply_formula(&src.body)?;
    required.atoms.extend(terms.iter().cloned().map(Atom::defined));
    let side = Sequent::new(tgt.context.clone(), tgt.body.clone(), required);
    match is_phl_theorem(&side, theory, budget)? {
        Derivability::Proved => {}
        Derivability::Refuted => return Err(ChaseError::SideConditionRefuted(side)),
        Derivability::Unknown { .. } => return Ok(None),
    }
    let (Some(a), Some(b)) = (
        representing_model(src, theory, budget)?.into_saturated(),
        representing_model(tgt, theory, budget)?.into_saturated(),
    ) else {
        return Ok(None);
    };
    let images: Vec<Elem> = terms
        .iter()
        .map(|t| {
            CTerm::compile(&tgt.context, t)
                .eval(&b.model, &b.generators)
                .expect("side condition makes every term defined")
        })
        .collect();
    let gens: Vec<(Sort, Elem)> = src.context.sorts().cloned().zip(a.generators.iter().copied()).collect();
    let map = extend_from_generators(&a.model, &gens, &b.model, &images)
        .expect("side condition makes the generator assignment extend");
    Ok(Some(Homomorphism::new(Arc::new(a.model), Arc::new(b.model), map)?))
}

/// Result of [`free_model`]: the chase outcome and, on saturation, the unit
/// `A → U(F A)`.
#[derive(Debug, Clone)]
pub struct FreeModel {
    pub outcome: ChaseOutcome,
    pub unit: Option<Homomorphism>,
}

/// Free `T`-model on `a` along `rho: Σ → Σ_T`, presented by the diagram of `a`.
pub fn free_model(rho: &TheoryMorphismData, a: &PartialStructure, theory: &Theory, budget: usize) -> Result<FreeModel, ChaseError> {
    if rho.target != theory.signature || &rho.source != a.signature() {
        return Err(ChaseError::Structure(StructureError::SignatureMismatch));
    }
    let (p, index) = Presentation::diagram(Arc::new(theory.clone()), rho, a)?;
    let outcome = chase(&p, budget)?;
    let unit = match &outcome {
        ChaseOutcome::Saturated(sat) => {
            let reduct = sat.model.reduct(rho)?;
            let map = ElementMap(
                index
                    .iter()
                    .map(|(s, gens)| (s.clone(), gens.iter().map(|&g| sat.generators[g]).collect()))
                    .collect(),
            );
            Some(Homomorphism::new(Arc::new(a.clone()), Arc::new(reduct), map)?)
        }
        ChaseOutcome::BudgetExceeded(_) => None,
    };
    Ok(FreeModel { outcome, unit })
}
