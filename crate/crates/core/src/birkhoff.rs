//! Audits of the closure of a finite family of models under products,
//! closed subobjects, retracts along the forgetful functor and chain
//! colimits, and the orthogonality test for a single sequent.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::chase::{representing_model, ChaseError};
use crate::colimit::{filtered_colimit, ColimitError, Diagram, Shape};
use crate::relalg::RelativeAlgebra;
use crate::structure::{
    check_hom, check_sequent, closed_submodel_generated, enumerate_homs, extend_from_generators, is_closed_mono,
    is_model, iso_check, product, ElementMap, HomSearch, Homomorphism, PartialStructure, StructureError,
};
use crate::syntax::{FormulaInContext, RelativeTheory, Sequent, Signature, Theory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BirkhoffError {
    #[error("member {index} is not a model: {reason}")]
    NotAModel { index: usize, reason: String },
    #[error("member {0} does not belong to the family")]
    NotAMember(usize),
    #[error("undecided within budget {budget}")]
    Unknown { budget: usize },
    #[error(transparent)]
    Chase(#[from] ChaseError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Colimit(#[from] ColimitError),
}

/// How membership in a family is decided.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Exactly the listed members, up to isomorphism.
    Extensional,
    /// Every model of the theory satisfying these sequents.
    Intensional(Vec<Sequent>),
}

/// A finite list of models of a theory together with a membership test.
/// Relative algebras enter as models of the expanded theory, with the base
/// signature recorded for the forgetful functor.
#[derive(Clone, Debug)]
pub struct ModelFamily {
    theory: Arc<Theory>,
    base: Signature,
    members: Vec<Arc<PartialStructure>>,
    membership: Membership,
}

impl ModelFamily {
    pub fn new(theory: Arc<Theory>, members: Vec<PartialStructure>, membership: Membership) -> Result<Self, BirkhoffError> {
        let base = theory.signature.clone();
        Self::build(theory, base, members, membership)
    }

    pub fn of_algebras(
        rt: &RelativeTheory,
        members: &[RelativeAlgebra],
        membership: Membership,
    ) -> Result<Self, BirkhoffError> {
        let members = members.iter().map(|a| a.as_structure().clone()).collect();
        Self::build(Arc::new(rt.expand()), rt.base.signature.clone(), members, membership)
    }

    fn build(
        theory: Arc<Theory>,
        base: Signature,
        members: Vec<PartialStructure>,
        membership: Membership,
    ) -> Result<Self, BirkhoffError> {
        let fam = ModelFamily {
            theory,
            base,
            members: members.into_iter().map(Arc::new).collect(),
            membership,
        };
        for (index, m) in fam.members.iter().enumerate() {
            let check = is_model(m, &fam.theory)?;
            if !check.is_model() {
                return Err(BirkhoffError::NotAModel {
                    index,
                    reason: format!("{check:?}"),
                });
            }
            if !fam.contains(m) {
                return Err(BirkhoffError::NotAMember(index));
            }
        }
        Ok(fam)
    }

    pub fn theory(&self) -> &Arc<Theory> {
        &self.theory
    }

    pub fn base_signature(&self) -> &Signature {
        &self.base
    }

    pub fn members(&self) -> &[Arc<PartialStructure>] {
        &self.members
    }

    pub fn membership(&self) -> &Membership {
        &self.membership
    }

    /// Whether `m` belongs to the family. Models only; up to isomorphism.
    pub fn contains(&self, m: &PartialStructure) -> bool {
        if m.signature() != &self.theory.signature || !is_model(m, &self.theory).is_ok_and(|c| c.is_model()) {
            return false;
        }
        match &self.membership {
            Membership::Extensional => self.members.iter().any(|x| iso_check(m, x).is_some()),
            Membership::Intensional(seqs) => seqs.iter().all(|s| check_sequent(m, s).is_valid()),
        }
    }

    fn largest_member(&self) -> usize {
        self.members.iter().map(|m| m.total_size()).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    Products,
    ClosedSubobjects,
    URetracts,
    ChainColimits,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Products => "products",
            Condition::ClosedSubobjects => "closed-subobjects",
            Condition::URetracts => "u-retracts",
            Condition::ChainColimits => "chain-colimits",
        })
    }
}

/// Which maps count as sections of a retraction `p: A → B`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RetractMode {
    /// Homomorphisms of the underlying base structures.
    #[default]
    BaseHom,
    /// Any per-sort map of carriers.
    Carrier,
}

/// How a counterexample was obtained from the family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Construction {
    /// Product of the members with these indices, in order.
    Product { factors: Vec<usize> },
    /// The substructure of a member on the image of `inclusion`.
    ClosedSubobject { member: usize, inclusion: ElementMap },
    /// A candidate receiving `map` from a member, split by `section`.
    URetract {
        member: usize,
        candidate: PartialStructure,
        map: ElementMap,
        section: ElementMap,
        mode: RetractMode,
    },
    /// Colimit of `stages[0] → stages[1] → …`.
    Chain {
        stages: Vec<PartialStructure>,
        steps: Vec<ElementMap>,
    },
    /// Colimit of `A → A → …` with every step the endomorphism `endo`.
    Endo { member: usize, endo: ElementMap },
}

/// Whether a counterexample refutes closure of the intended class or only
/// shows that an extensional list is too short.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Annotation {
    ClosureFailure,
    ListIncompleteness,
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Annotation::ClosureFailure => "closure-failure",
            Annotation::ListIncompleteness => "list-incompleteness",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub construction: Construction,
    pub structure: PartialStructure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// No counterexample within the enumerated bounds.
    Closed,
    Counterexample { witness: Box<Witness>, annotation: Annotation },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureReport {
    pub condition: Condition,
    pub verdict: Verdict,
    /// Constructions tested.
    pub examined: usize,
}

impl ClosureReport {
    pub fn is_closed(&self) -> bool {
        matches!(self.verdict, Verdict::Closed)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.verdict {
            Verdict::Closed => None,
            Verdict::Counterexample { witness, .. } => Some(witness),
        }
    }

    /// Rebuilds a counterexample from the family and checks that it is a
    /// model outside the family. Trivially true for `Closed`.
    pub fn revalidate(&self, fam: &ModelFamily) -> bool {
        let Some(w) = self.witness() else {
            return true;
        };
        let rebuilt = rebuild(fam, &w.construction);
        rebuilt.is_some_and(|r| iso_check(&r, &w.structure).is_some())
            && is_model(&w.structure, &fam.theory).is_ok_and(|c| c.is_model())
            && !fam.contains(&w.structure)
    }
}

fn rebuild(fam: &ModelFamily, c: &Construction) -> Option<PartialStructure> {
    match c {
        Construction::Product { factors } => {
            let fs: Vec<&PartialStructure> = factors.iter().map(|&i| fam.members.get(i).map(|m| m.as_ref())).collect::<Option<_>>()?;
            Some(product(&fam.theory.signature, &fs).structure)
        }
        Construction::ClosedSubobject { member, inclusion } => {
            let b = fam.members.get(*member)?;
            let seed = inclusion.0.iter().map(|(s, v)| (s.clone(), v.iter().copied().collect())).collect();
            let (sub, inc) = closed_submodel_generated(b, &seed);
            (is_closed_mono(&inc).ok()?.is_closed() && inc.map() == inclusion).then(|| (*sub).clone())
        }
        Construction::URetract {
            member,
            candidate,
            map,
            section,
            mode,
        } => {
            let a = fam.members.get(*member)?;
            check_hom(a, candidate, map).ok()?;
            is_section(fam, a, candidate, map, section, *mode).then(|| candidate.clone())
        }
        Construction::Chain { stages, steps } => {
            let stages: Vec<_> = stages.iter().cloned().map(Arc::new).collect();
            let steps = stages
                .windows(2)
                .zip(steps)
                .map(|(w, m)| Homomorphism::new(w[0].clone(), w[1].clone(), m.clone()).ok())
                .collect::<Option<Vec<_>>>()?;
            let d = Diagram::chain(stages, steps).ok()?;
            Some((*filtered_colimit(&d).ok()?.structure).clone())
        }
        Construction::Endo { member, endo } => Some(endo_colimit(fam.members.get(*member)?, endo)?),
    }
}

fn is_section(
    fam: &ModelFamily,
    a: &PartialStructure,
    b: &PartialStructure,
    p: &ElementMap,
    s: &ElementMap,
    mode: RetractMode,
) -> bool {
    if s.then(p) != ElementMap::identity(b) {
        return false;
    }
    match mode {
        RetractMode::Carrier => true,
        RetractMode::BaseHom => match (a.restrict_to(&fam.base), b.restrict_to(&fam.base)) {
            (Ok(ua), Ok(ub)) => check_hom(&ub, &ua, s).is_ok(),
            _ => false,
        },
    }
}

fn counterexample(condition: Condition, examined: usize, construction: Construction, structure: PartialStructure, annotation: Annotation) -> ClosureReport {
    ClosureReport {
        condition,
        verdict: Verdict::Counterexample {
            witness: Box::new(Witness { construction, structure }),
            annotation,
        },
        examined,
    }
}

fn closed(condition: Condition, examined: usize) -> ClosureReport {
    ClosureReport {
        condition,
        verdict: Verdict::Closed,
        examined,
    }
}

/// Nondecreasing index tuples of length `k` over `0..n`.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, from: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.len() == k {
            out.push(acc.clone());
            return;
        }
        for i in from..n {
            acc.push(i);
            go(n, k, i, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Products of up to `max_arity` members, with repetition; the empty
/// product is the terminal structure.
pub fn check_products(fam: &ModelFamily, max_arity: usize) -> ClosureReport {
    let mut examined = 0;
    for k in 0..=max_arity {
        for factors in multisets(fam.members.len(), k) {
            examined += 1;
            let fs: Vec<&PartialStructure> = factors.iter().map(|&i| fam.members[i].as_ref()).collect();
            let p = product(&fam.theory.signature, &fs).structure;
            if !fam.contains(&p) {
                return counterexample(Condition::Products, examined, Construction::Product { factors }, p, Annotation::ClosureFailure);
            }
        }
    }
    closed(Condition::Products, examined)
}

/// Subsets of `b` closed under every defined function, as inclusions of the
/// induced substructures, for members of total size at most `bound`.
pub fn closed_subobjects(b: &Arc<PartialStructure>, bound: usize) -> Vec<Homomorphism> {
    let elems: Vec<_> = b.elements().map(|(s, e)| (s.clone(), e)).collect();
    if elems.len() > bound {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << elems.len()) {
        let mut seed: BTreeMap<_, std::collections::BTreeSet<_>> =
            b.signature().sorts().iter().map(|s| (s.clone(), Default::default())).collect();
        for (i, (s, e)) in elems.iter().enumerate() {
            if mask & (1 << i) != 0 {
                seed.get_mut(s).expect("declared sort").insert(*e);
            }
        }
        let (sub, inc) = closed_submodel_generated(b, &seed);
        if sub.total_size() == mask.count_ones() as usize {
            out.push(inc);
        }
    }
    out
}

/// Closed subobjects of members with at most `bound` elements.
pub fn check_closed_subobjects(fam: &ModelFamily, bound: usize) -> ClosureReport {
    let mut examined = 0;
    for (member, b) in fam.members.iter().enumerate() {
        for inc in closed_subobjects(b, bound) {
            if !is_closed_mono(&inc).is_ok_and(|c| c.is_closed()) {
                continue;
            }
            let sub = (**inc.source()).clone();
            if !is_model(&sub, &fam.theory).is_ok_and(|c| c.is_model()) {
                continue;
            }
            examined += 1;
            if !fam.contains(&sub) {
                let construction = Construction::ClosedSubobject {
                    member,
                    inclusion: inc.map().clone(),
                };
                return counterexample(Condition::ClosedSubobjects, examined, construction, sub, Annotation::ClosureFailure);
            }
        }
    }
    closed(Condition::ClosedSubobjects, examined)
}

fn find_section(fam: &ModelFamily, a: &PartialStructure, b: &PartialStructure, p: &ElementMap, mode: RetractMode) -> Option<ElementMap> {
    match mode {
        RetractMode::Carrier => {
            let mut s = BTreeMap::new();
            for sort in b.signature().sorts() {
                let v = p.sort_map(sort);
                let sec = (0..b.carrier_size(sort))
                    .map(|y| v.iter().position(|&x| x == y))
                    .collect::<Option<Vec<_>>>()?;
                s.insert(sort.clone(), sec);
            }
            Some(ElementMap(s))
        }
        RetractMode::BaseHom => {
            let (ua, ub) = (a.restrict_to(&fam.base).ok()?, b.restrict_to(&fam.base).ok()?);
            let id = ElementMap::identity(b);
            let mut found = None;
            HomSearch::new(&ub, &ua).for_each(&mut |s| {
                if s.then(p) == id {
                    found = Some(s.clone());
                    false
                } else {
                    true
                }
            });
            found
        }
    }
}

/// Candidates that are retracts of members: some homomorphism from a member
/// has a section of the given kind.
pub fn check_u_retracts(fam: &ModelFamily, candidates: &[PartialStructure], mode: RetractMode) -> ClosureReport {
    let mut examined = 0;
    for b in candidates {
        if b.signature() != &fam.theory.signature || fam.contains(b) {
            continue;
        }
        if !is_model(b, &fam.theory).is_ok_and(|c| c.is_model()) {
            continue;
        }
        for (member, a) in fam.members.iter().enumerate() {
            for p in enumerate_homs(a, b) {
                examined += 1;
                if let Some(section) = find_section(fam, a, b, &p, mode) {
                    let construction = Construction::URetract {
                        member,
                        candidate: b.clone(),
                        map: p,
                        section,
                        mode,
                    };
                    return counterexample(Condition::URetracts, examined, construction, b.clone(), Annotation::ClosureFailure);
                }
            }
        }
    }
    closed(Condition::URetracts, examined)
}

/// The least power of `f` that is idempotent.
fn idempotent_power(f: &ElementMap) -> ElementMap {
    let mut g = f.clone();
    loop {
        if g.then(&g) == g {
            return g;
        }
        g = g.then(f);
    }
}

/// Colimit of `A →f A →f …`, which is that of the cofinal subchain along the
/// idempotent power of `f`.
fn endo_colimit(a: &Arc<PartialStructure>, f: &ElementMap) -> Option<PartialStructure> {
    let e = Homomorphism::new(a.clone(), a.clone(), idempotent_power(f)).ok()?;
    let d = Diagram::new(Shape::idempotent(), vec![a.clone()], vec![Homomorphism::identity(a.clone()), e]).ok()?;
    Some((*filtered_colimit(&d).ok()?.structure).clone())
}

/// Chains of members of length at most `max_len` along homomorphisms, the
/// infinite chains of each endomorphism of a member, and the `extra` chains
/// supplied by the caller. A colimit outside an extensional family that is
/// larger than every listed member is annotated as list incompleteness.
pub fn check_chain_colimits(fam: &ModelFamily, extra: &[Diagram], max_len: usize) -> ClosureReport {
    let annotate = |m: &PartialStructure| match fam.membership {
        Membership::Extensional if m.total_size() > fam.largest_member() => Annotation::ListIncompleteness,
        _ => Annotation::ClosureFailure,
    };
    let mut examined = 0;

    let mut found = None;
    let n = fam.members.len();
    let homs: Vec<Vec<Vec<ElementMap>>> = (0..n)
        .map(|i| (0..n).map(|j| enumerate_homs(&fam.members[i], &fam.members[j])).collect())
        .collect();
    let mut visit = |idx: &[usize], steps: &[ElementMap]| -> bool {
        examined += 1;
        let stages: Vec<Arc<PartialStructure>> = idx.iter().map(|&i| fam.members[i].clone()).collect();
        let hs = stages
            .windows(2)
            .zip(steps)
            .map(|(w, m)| Homomorphism::new(w[0].clone(), w[1].clone(), m.clone()).expect("enumerated homomorphism"))
            .collect();
        let d = Diagram::chain(stages.clone(), hs).expect("chains are diagrams");
        let colim = filtered_colimit(&d).expect("chain colimits exist");
        if fam.contains(&colim.structure) {
            return true;
        }
        found = Some((
            Construction::Chain {
                stages: stages.iter().map(|s| (**s).clone()).collect(),
                steps: steps.to_vec(),
            },
            (*colim.structure).clone(),
        ));
        false
    };
    fn walk(
        homs: &[Vec<Vec<ElementMap>>],
        max_len: usize,
        idx: &mut Vec<usize>,
        steps: &mut Vec<ElementMap>,
        visit: &mut dyn FnMut(&[usize], &[ElementMap]) -> bool,
    ) -> bool {
        if !visit(idx, steps) {
            return false;
        }
        if idx.len() == max_len {
            return true;
        }
        let last = *idx.last().expect("nonempty chain");
        for next in 0..homs.len() {
            for h in &homs[last][next] {
                idx.push(next);
                steps.push(h.clone());
                let go_on = walk(homs, max_len, idx, steps, visit);
                idx.pop();
                steps.pop();
                if !go_on {
                    return false;
                }
            }
        }
        true
    }
    if max_len > 0 {
        for start in 0..n {
            if !walk(&homs, max_len, &mut vec![start], &mut Vec::new(), &mut visit) {
                break;
            }
        }
    }
    if let Some((c, m)) = found {
        let a = annotate(&m);
        return counterexample(Condition::ChainColimits, examined, c, m, a);
    }

    for (member, endos) in homs.iter().enumerate().map(|(i, row)| (i, &row[i])) {
        for f in endos {
            examined += 1;
            let m = endo_colimit(&fam.members[member], f).expect("endomorphism chains have colimits");
            if !fam.contains(&m) {
                let a = annotate(&m);
                let c = Construction::Endo { member, endo: f.clone() };
                return counterexample(Condition::ChainColimits, examined, c, m, a);
            }
        }
    }

    for d in extra {
        examined += 1;
        let Ok(colim) = filtered_colimit(d) else {
            continue;
        };
        if !fam.contains(&colim.structure) {
            let m = (*colim.structure).clone();
            let a = annotate(&m);
            // Supplied diagrams are recorded by their stages along the chain
            // through consecutive objects.
            let stages: Vec<PartialStructure> = d.objects().iter().map(|o| (**o).clone()).collect();
            let shape = d.shape();
            let steps = (0..stages.len().saturating_sub(1))
                .map(|i| {
                    (0..shape.morphisms())
                        .find(|&k| shape.dom(k) == i && shape.cod(k) == i + 1)
                        .map(|k| d.map(k).map().clone())
                })
                .collect::<Option<Vec<_>>>()
                .unwrap_or_default();
            let c = Construction::Chain { stages, steps };
            return counterexample(Condition::ChainColimits, examined, c, m, a);
        }
    }
    closed(Condition::ChainColimits, examined)
}

/// Bounds for [`audit`].
#[derive(Clone, Debug)]
pub struct AuditBounds {
    pub max_arity: usize,
    pub max_sub: usize,
    pub max_chain: usize,
    pub retract_mode: RetractMode,
}

impl Default for AuditBounds {
    fn default() -> Self {
        AuditBounds {
            max_arity: 2,
            max_sub: 8,
            max_chain: 3,
            retract_mode: RetractMode::BaseHom,
        }
    }
}

/// All four checks, in the order products, closed subobjects, retracts,
/// chain colimits.
pub fn audit(fam: &ModelFamily, candidates: &[PartialStructure], bounds: &AuditBounds) -> Vec<ClosureReport> {
    vec![
        check_products(fam, bounds.max_arity),
        check_closed_subobjects(fam, bounds.max_sub),
        check_u_retracts(fam, candidates, bounds.retract_mode),
        check_chain_colimits(fam, &[], bounds.max_chain),
    ]
}

/// Whether every homomorphism `⟨x⃗.φ⟩ → M` extends uniquely along the
/// comparison map `⟨x⃗.φ⟩ → ⟨x⃗.φ∧ψ⟩` of the sequent `φ ⊢ ψ`.
pub fn orthogonality_check(m: &PartialStructure, s: &Sequent, t: &Theory, budget: usize) -> Result<bool, BirkhoffError> {
    s.check(&t.signature).map_err(ChaseError::from)?;
    let unknown = BirkhoffError::Unknown { budget };
    let phi = FormulaInContext::new(s.context.clone(), s.premise.clone());
    let both = FormulaInContext::new(s.context.clone(), s.premise.and(&s.conclusion));
    let a = representing_model(&phi, t, budget)?.into_saturated().ok_or(unknown.clone())?;
    let b = representing_model(&both, t, budget)?.into_saturated().ok_or(unknown)?;
    let sorts: Vec<_> = s.context.sorts().cloned().collect();
    let gens_a: Vec<_> = sorts.iter().cloned().zip(a.generators.iter().copied()).collect();
    let q = extend_from_generators(&a.model, &gens_a, &b.model, &b.generators)
        .expect("the comparison map exists because the stronger formula entails the weaker");

    for g in enumerate_homs(&a.model, m) {
        // Prescribe the images of the generators of the stronger model.
        let mut fixed = BTreeMap::new();
        let mut clash = false;
        for ((sort, ga), gb) in sorts.iter().zip(&a.generators).zip(&b.generators) {
            let v = g.get(sort, *ga);
            if *fixed.entry((sort.clone(), *gb)).or_insert(v) != v {
                clash = true;
            }
        }
        if clash {
            return Ok(false);
        }
        let mut search = HomSearch::new(&b.model, m);
        for ((sort, e), v) in fixed {
            search = search.fix(&sort, e, v);
        }
        let mut extensions = 0;
        search.for_each(&mut |k| {
            if q.then(k) == g {
                extensions += 1;
            }
            extensions < 2
        });
        if extensions != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}
