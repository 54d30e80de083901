//! The endofunctor `H_Ω` and the chain `K₀ = X`, `K_{n+1} = H_Ω K_n + X`
//! whose colimit is the free algebra on `X`.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{RelAlgError, RelativeAlgebra};
use crate::chase::{chase, ChaseOutcome, Presentation, Saturated};
use crate::structure::{
    check_hom, extend_from_generators, interpret_formula, Elem, ElementMap, Homomorphism, PartialStructure,
};
use crate::syntax::{Context, HornFormula, RelativeTheory, Sort, TheoryMorphismData, Variable};

/// `H_Ω(A)`: one free generator of sort `type(ω)` per operator `ω` and tuple
/// of `⟦ar(ω)⟧^A`, chased under the base theory.
#[derive(Clone, Debug)]
pub struct HOmega {
    pub outcome: ChaseOutcome,
    /// `(ω, tuple)` of each generator, in generator order.
    pub generators: Vec<(String, Vec<Elem>)>,
}

impl HOmega {
    /// The saturated structure and the element of each generator.
    pub fn saturated(&self) -> Option<&Saturated> {
        self.outcome.saturated()
    }

    fn index(&self) -> BTreeMap<(&str, &[Elem]), usize> {
        self.generators
            .iter()
            .enumerate()
            .map(|(i, (op, t))| ((op.as_str(), t.as_slice()), i))
            .collect()
    }
}

fn operator_generators(rt: &RelativeTheory, a: &PartialStructure) -> (Vec<(String, Vec<Elem>)>, Vec<Variable>) {
    let mut gens = Vec::new();
    let mut vars = Vec::new();
    for op in &rt.operators {
        for t in interpret_formula(a, &op.arity) {
            vars.push(Variable::new(format!("{}#{}", op.name, gens.len()), op.result.clone()));
            gens.push((op.name.clone(), t));
        }
    }
    (gens, vars)
}

pub fn h_omega(rt: &RelativeTheory, a: &PartialStructure, budget: usize) -> Result<HOmega, RelAlgError> {
    let (generators, vars) = operator_generators(rt, a);
    let p = Presentation::new(Arc::new(rt.base.clone()), Context::new(vars)?, HornFormula::top())?;
    Ok(HOmega {
        outcome: chase(&p, budget)?,
        generators,
    })
}

/// `H_Ω(h): H_Ω(A) → H_Ω(B)`, sending the generator `(ω, t)` to `(ω, h(t))`.
/// Both chases must have saturated.
pub fn h_omega_map(rt: &RelativeTheory, h: &Homomorphism, ha: &HOmega, hb: &HOmega) -> Option<Homomorphism> {
    let (sa, sb) = (ha.saturated()?, hb.saturated()?);
    let index = hb.index();
    let mut gens = Vec::new();
    let mut images = Vec::new();
    for (i, (op, t)) in ha.generators.iter().enumerate() {
        let o = rt.operator(op)?;
        let image = h.map().apply_tuple(&o.arg_sorts(), t);
        let j = *index.get(&(op.as_str(), image.as_slice()))?;
        gens.push((o.result.clone(), sa.generators[i]));
        images.push(sb.generators[j]);
    }
    let map = extend_from_generators(&sa.model, &gens, &sb.model, &images)?;
    Homomorphism::new(Arc::new(sa.model.clone()), Arc::new(sb.model.clone()), map).ok()
}

/// Result of [`free_algebra_chain`].
#[derive(Clone, Debug)]
pub enum FreeChain {
    /// `k_stage: K_{stage-1} → K_stage` is an isomorphism; `algebra` is
    /// `K_stage` with the operators read off the generators of its `H_Ω`
    /// part, and `insertion` is the composite `X → K_stage`.
    Stabilized {
        algebra: RelativeAlgebra,
        insertion: Homomorphism,
        stage: usize,
        sizes: Vec<usize>,
    },
    /// Total carrier sizes of `K₀, K₁, …` for every stage computed.
    Unstabilized { sizes: Vec<usize> },
}

fn is_iso(h: &Homomorphism) -> bool {
    h.is_injective()
        && h.is_surjective()
        && h
            .map()
            .inverse(h.target())
            .is_some_and(|inv| check_hom(h.target(), h.source(), &inv).is_ok())
}

fn total(m: &PartialStructure) -> usize {
    m.carriers().values().sum()
}

/// Builds `K₀ = X` and `K_{n+1} = H_Ω(K_n) + X` (the coproduct presented by
/// the free generators of `H_Ω(K_n)` next to the diagram of `X`) for up to
/// `max_stages` stages `K₀ … K_{max_stages-1}`, stopping at the first `n ≥ 1`
/// where the connecting map `k_n: K_{n-1} → K_n` is an isomorphism.
pub fn free_algebra_chain(
    rt: &Arc<RelativeTheory>,
    x: &PartialStructure,
    max_stages: usize,
    budget: usize,
) -> Result<FreeChain, RelAlgError> {
    if !rt.judgments.is_empty() {
        return Err(RelAlgError::JudgmentsPresent);
    }
    let base = Arc::new(rt.base.clone());
    let rho = TheoryMorphismData::identity(&base.signature);
    let (diagram, x_index) = Presentation::diagram(base.clone(), &rho, x)?;
    let x_order: Vec<(Sort, Elem)> = x
        .signature()
        .sorts()
        .iter()
        .flat_map(|s| (0..x.carrier_size(s)).map(move |e| (s.clone(), e)))
        .collect();

    let mut sizes = vec![total(x)];
    let mut prev_model = Arc::new(x.clone());
    // Generators of the previous stage: `(ω, t)` keyed with the element they
    // denote, and the element denoted by each element of `X`.
    let mut prev_op_gens: Vec<((String, Vec<Elem>), Elem)> = Vec::new();
    let mut prev_x_gens: Vec<Elem> = x_order.iter().map(|(_, e)| *e).collect();
    let mut prev_k: Option<ElementMap> = None;
    let mut insertion = Homomorphism::identity(prev_model.clone());
    for stage in 1..max_stages {
        let (gens, vars) = operator_generators(rt, &prev_model);
        let ctx = diagram.generators().concat(&Context::new(vars)?)?;
        let p = Presentation::new(base.clone(), ctx, diagram.facts().clone())?;
        let sat = chase(&p, budget)?
            .into_saturated()
            .ok_or(RelAlgError::StageBudget { stage })?;
        let nx = diagram.generators().len();
        let x_gens: Vec<Elem> = x_order.iter().map(|(s, e)| sat.generators[x_index[s][*e]]).collect();
        let op_gens: Vec<((String, Vec<Elem>), Elem)> =
            gens.into_iter().enumerate().map(|(i, g)| (g, sat.generators[nx + i])).collect();
        let model = Arc::new(sat.model);
        sizes.push(total(&model));

        // k_stage on the generators of the previous stage.
        let lookup: BTreeMap<(&str, &[Elem]), Elem> =
            op_gens.iter().map(|((op, t), e)| ((op.as_str(), t.as_slice()), *e)).collect();
        let (mut src, mut images) = (Vec::new(), Vec::new());
        for ((op, t), e) in &prev_op_gens {
            let o = rt.operator(op).expect("generated from the theory");
            let k = prev_k.as_ref().expect("operator generators only exist after the first stage");
            let moved = k.apply_tuple(&o.arg_sorts(), t);
            src.push((o.result.clone(), *e));
            images.push(lookup[&(op.as_str(), moved.as_slice())]);
        }
        for (((s, _), e), v) in x_order.iter().zip(&prev_x_gens).zip(&x_gens) {
            src.push((s.clone(), *e));
            images.push(*v);
        }
        let k_map = extend_from_generators(&prev_model, &src, &model, &images)
            .expect("connecting maps exist by construction");
        let k = Homomorphism::new(prev_model.clone(), model.clone(), k_map)?;
        insertion = insertion.then(&k)?;

        if is_iso(&k) {
            let inv = k.map().inverse(&model).expect("isomorphism");
            let mut ops: BTreeMap<String, Vec<(Vec<Elem>, Elem)>> = BTreeMap::new();
            for o in &rt.operators {
                let entries = interpret_formula(&model, &o.arity)
                    .into_iter()
                    .map(|t| {
                        let back = inv.apply_tuple(&o.arg_sorts(), &t);
                        let v = lookup[&(o.name.as_str(), back.as_slice())];
                        (t, v)
                    })
                    .collect();
                ops.insert(o.name.clone(), entries);
            }
            let algebra = RelativeAlgebra::new(rt.clone(), &model, ops)?;
            return Ok(FreeChain::Stabilized {
                algebra,
                insertion,
                stage,
                sizes,
            });
        }
        prev_op_gens = op_gens;
        prev_x_gens = x_gens;
        prev_k = Some(k.map().clone());
        prev_model = model;
    }
    Ok(FreeChain::Unstabilized { sizes })
}
