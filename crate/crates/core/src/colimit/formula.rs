//! Coproducts and coequalizers of representing models, built on the
//! presenting formulas, and a brute-force check of universality.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::ColimitError;
use crate::chase::{is_phl_theorem, Derivability};
use crate::structure::{enumerate_homs, ElementMap, Homomorphism, PartialStructure};
use crate::syntax::{
    Atom, Context, FormulaInContext, HornFormula, Sequent, Signature, Substitution, Term, Theory, Variable,
};

/// `(x⃗₁ … x⃗ₙ). φ₁ ∧ … ∧ φₙ` with the contexts renamed apart, and for each
/// summand the terms (renamed variables) of its injection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coproduct {
    pub formula: FormulaInContext,
    pub injections: Vec<Vec<Term>>,
}

fn rename_term(t: &Term, ren: &BTreeMap<&Variable, Variable>) -> Term {
    match t {
        Term::Var(v) => Term::Var(ren[v].clone()),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| rename_term(a, ren)).collect()),
    }
}

fn rename_atom(a: &Atom, ren: &BTreeMap<&Variable, Variable>) -> Atom {
    match a {
        Atom::Rel(r, args) => Atom::Rel(r.clone(), args.iter().map(|t| rename_term(t, ren)).collect()),
        Atom::Eq(l, r) => Atom::Eq(rename_term(l, ren), rename_term(r, ren)),
    }
}

/// Variables keep their names unless already taken, in which case primes
/// are appended until the name is fresh.
pub fn coproduct_formula(sig: &Signature, phis: &[FormulaInContext]) -> Coproduct {
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut vars = Vec::new();
    let mut atoms = Vec::new();
    let mut injections = Vec::new();
    for phi in phis {
        let mut ren = BTreeMap::new();
        for v in phi.context.vars() {
            let mut name = v.name.clone();
            while used.contains(&name) || sig.is_symbol(&name) {
                name.push('\'');
            }
            used.insert(name.clone());
            let fresh = Variable::new(name, v.sort.clone());
            vars.push(fresh.clone());
            ren.insert(v, fresh);
        }
        atoms.extend(phi.body.atoms.iter().map(|a| rename_atom(a, &ren)));
        injections.push(phi.context.vars().iter().map(|v| Term::Var(ren[v].clone())).collect());
    }
    Coproduct {
        formula: FormulaInContext::new(Context::new(vars).expect("names are fresh"), HornFormula::new(atoms)),
        injections,
    }
}

/// `y⃗.(ψ ∧ ⋀ τᵢ = τ'ᵢ)` presenting the coequalizer of `⟨τ⃗⟩, ⟨τ⃗'⟩:
/// ⟨x⃗.φ⟩ → ⟨y⃗.ψ⟩`. Both term tuples must define morphisms; this is
/// checked by the chase within `budget`.
pub fn coequalizer_formula(
    src: &FormulaInContext,
    tgt: &FormulaInContext,
    h: &[Term],
    h2: &[Term],
    theory: &Theory,
    budget: usize,
) -> Result<FormulaInContext, ColimitError> {
    let sig = &theory.signature;
    src.check(sig).map_err(crate::chase::ChaseError::from)?;
    tgt.check(sig).map_err(crate::chase::ChaseError::from)?;
    for terms in [h, h2] {
        let sub = Substitution::from_context(sig, &src.context, terms).map_err(crate::chase::ChaseError::from)?;
        let mut required = sub.apply_formula(&src.body).map_err(crate::chase::ChaseError::from)?;
        required.atoms.extend(terms.iter().cloned().map(Atom::defined));
        let side = Sequent::new(tgt.context.clone(), tgt.body.clone(), required);
        match is_phl_theorem(&side, theory, budget)? {
            Derivability::Proved => {}
            Derivability::Refuted => return Err(ColimitError::SideCondition(side.to_string())),
            Derivability::Unknown { .. } => return Err(ColimitError::Undecided),
        }
    }
    let eqs = h.iter().zip(h2).map(|(a, b)| Atom::Eq(a.clone(), b.clone())).collect();
    Ok(FormulaInContext::new(tgt.context.clone(), tgt.body.and(&HornFormula::new(eqs))))
}

/// Objects and generating arrows `(from, to, map)`; no composition needed,
/// since cocones only have to commute with generators.
#[derive(Clone, Debug)]
pub struct FiniteDiagram {
    pub objects: Vec<Arc<PartialStructure>>,
    pub arrows: Vec<(usize, usize, Homomorphism)>,
}

impl FiniteDiagram {
    /// The discrete diagram on `objects`.
    pub fn discrete(objects: Vec<Arc<PartialStructure>>) -> Self {
        FiniteDiagram {
            objects,
            arrows: Vec::new(),
        }
    }

    /// `a ⇉ b` along `u` and `v`.
    pub fn parallel(u: Homomorphism, v: Homomorphism) -> Self {
        FiniteDiagram {
            objects: vec![u.source().clone(), u.target().clone()],
            arrows: vec![(0, 1, u), (0, 1, v)],
        }
    }

    fn is_cocone(&self, maps: &[ElementMap]) -> bool {
        self.arrows.iter().all(|(i, j, a)| a.map().then(&maps[*j]) == maps[*i])
    }

    /// Every cocone into `m`, one map per object.
    pub fn cocones(&self, m: &PartialStructure) -> Vec<Vec<ElementMap>> {
        let homs: Vec<Vec<ElementMap>> = self.objects.iter().map(|o| enumerate_homs(o, m)).collect();
        let mut out = Vec::new();
        let mut acc = Vec::new();
        self.extend(&homs, &mut acc, &mut out);
        out
    }

    fn extend(&self, homs: &[Vec<ElementMap>], acc: &mut Vec<ElementMap>, out: &mut Vec<Vec<ElementMap>>) {
        let k = acc.len();
        if k == homs.len() {
            out.push(acc.clone());
            return;
        }
        for g in &homs[k] {
            acc.push(g.clone());
            // Only arrows whose ends are both assigned can be checked now.
            let ok = self
                .arrows
                .iter()
                .filter(|(i, j, _)| *i <= k && *j <= k && (*i == k || *j == k))
                .all(|(i, j, a)| a.map().then(&acc[*j]) == acc[*i]);
            if ok {
                self.extend(homs, acc, out);
            }
            acc.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniversalityCount {
    /// `|Hom(candidate, M)|`
    pub homs: usize,
    /// Number of cocones over the diagram into `M`.
    pub cocones: usize,
    /// Whether precomposition with the legs is a bijection between the two.
    pub bijective: bool,
}

/// For each test model, compares homomorphisms out of `candidate` with
/// cocones into the model through precomposition with `legs`.
pub fn universality_counts(
    d: &FiniteDiagram,
    candidate: &PartialStructure,
    legs: &[Homomorphism],
    tests: &[PartialStructure],
) -> Vec<UniversalityCount> {
    tests
        .iter()
        .map(|m| {
            let homs = enumerate_homs(candidate, m);
            let cocones = d.cocones(m);
            let images: BTreeSet<Vec<ElementMap>> =
                homs.iter().map(|g| legs.iter().map(|l| l.map().then(g)).collect()).collect();
            let bijective = legs.len() == d.objects.len()
                && images.len() == homs.len()
                && images.len() == cocones.len()
                && images.iter().all(|c| d.is_cocone(c));
            UniversalityCount {
                homs: homs.len(),
                cocones: cocones.len(),
                bijective,
            }
        })
        .collect()
}

/// Whether `candidate` with `legs` is a colimit of `d` as far as the test
/// models can tell.
pub fn verify_universal_property(
    d: &FiniteDiagram,
    candidate: &PartialStructure,
    legs: &[Homomorphism],
    tests: &[PartialStructure],
) -> bool {
    universality_counts(d, candidate, legs, tests).iter().all(|c| c.bijective)
}
