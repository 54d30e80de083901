//! Σ-closed monomorphisms, generated closed submodels and the dense/closed
//! factorization of a homomorphism.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Elem, ElementMap, Homomorphism, PartialStructure, StructureError};
use crate::syntax::Sort;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosedCheck {
    Closed,
    /// `symbol` is defined (or holds) at the image of `args` in the target
    /// but not at `args` in the source.
    NotClosed { symbol: String, args: Vec<Elem> },
}

impl ClosedCheck {
    pub fn is_closed(&self) -> bool {
        matches!(self, ClosedCheck::Closed)
    }
}

/// Whether an injective homomorphism reflects definedness of every function
/// and every relation. Fails with [`StructureError::NotInjective`] otherwise.
pub fn is_closed_mono(h: &Homomorphism) -> Result<ClosedCheck, StructureError> {
    let (src, tgt) = (h.source(), h.target());
    let preimage = h
        .map()
        .inverse(tgt)
        .ok_or_else(|| {
            let bad = src
                .signature()
                .sorts()
                .iter()
                .find(|s| {
                    let v = h.map().sort_map(s);
                    v.iter().collect::<BTreeSet<_>>().len() != v.len()
                })
                .cloned()
                .unwrap_or_else(|| Sort::new("?"));
            StructureError::NotInjective(bad)
        })?;
    let image = image(h);
    let pull = |sorts: &[Sort], args: &[Elem]| -> Option<Vec<Elem>> {
        sorts
            .iter()
            .zip(args)
            .map(|(s, a)| image[s].contains(a).then(|| preimage.get(s, *a)))
            .collect()
    };
    let sig = src.signature();
    for (f, decl) in sig.functions() {
        for args in tgt.function_table(f).keys() {
            if let Some(pre) = pull(&decl.args, args) {
                if src.apply(f, &pre).is_none() {
                    return Ok(ClosedCheck::NotClosed {
                        symbol: f.to_string(),
                        args: pre,
                    });
                }
            }
        }
    }
    for (r, decl) in sig.relations() {
        for args in tgt.relation_table(r) {
            if let Some(pre) = pull(&decl.args, args) {
                if !src.holds(r, &pre) {
                    return Ok(ClosedCheck::NotClosed {
                        symbol: r.to_string(),
                        args: pre,
                    });
                }
            }
        }
    }
    Ok(ClosedCheck::Closed)
}

/// Image of `h`, per sort.
pub fn image(h: &Homomorphism) -> BTreeMap<Sort, BTreeSet<Elem>> {
    h.target()
        .signature()
        .sorts()
        .iter()
        .map(|s| (s.clone(), h.map().sort_map(s).iter().copied().collect()))
        .collect()
}

/// The least subset of `b` containing `seed` and closed under every defined
/// function application, with the induced tables, and its inclusion into `b`.
/// Elements keep their relative order.
pub fn closed_submodel_generated(
    b: &Arc<PartialStructure>,
    seed: &BTreeMap<Sort, BTreeSet<Elem>>,
) -> (Arc<PartialStructure>, Homomorphism) {
    let sig = b.signature();
    let mut member: BTreeMap<&Sort, Vec<bool>> = sig.sorts().iter().map(|s| (s, vec![false; b.carrier_size(s)])).collect();
    for (s, elems) in seed {
        for &e in elems {
            member.get_mut(s).expect("seed sorts are declared")[e] = true;
        }
    }
    loop {
        let mut changed = false;
        for (f, decl) in sig.functions() {
            for (args, &v) in b.function_table(f) {
                if !member[&decl.result][v] && decl.args.iter().zip(args).all(|(s, &a)| member[s][a]) {
                    member.get_mut(&decl.result).expect("declared")[v] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut renumber: BTreeMap<&Sort, Vec<Option<Elem>>> = BTreeMap::new();
    let mut inclusion = BTreeMap::new();
    let mut sub = PartialStructure::empty(sig.clone());
    for s in sig.sorts() {
        let mut next = 0;
        let mut ren = vec![None; b.carrier_size(s)];
        let mut inc = Vec::new();
        for (e, &m) in member[s].iter().enumerate() {
            if m {
                ren[e] = Some(next);
                inc.push(e);
                next += 1;
            }
        }
        sub.set_carrier(s, next);
        renumber.insert(s, ren);
        inclusion.insert(s.clone(), inc);
    }
    let rename = |sorts: &[Sort], args: &[Elem]| -> Option<Vec<Elem>> {
        sorts.iter().zip(args).map(|(s, &a)| renumber[s][a]).collect()
    };
    for (f, decl) in sig.functions() {
        for (args, &v) in b.function_table(f) {
            if let Some(new) = rename(&decl.args, args) {
                let value = renumber[&decl.result][v].expect("closed under functions");
                sub.insert_function(f, new, value);
            }
        }
    }
    for (r, decl) in sig.relations() {
        for args in b.relation_table(r) {
            if let Some(new) = rename(&decl.args, args) {
                sub.insert_relation(r, new);
            }
        }
    }
    let sub = Arc::new(sub);
    let inc = Homomorphism::new(sub.clone(), b.clone(), ElementMap(inclusion)).expect("inclusion of induced substructure");
    (sub, inc)
}

/// `h = m ∘ e` with `m` a closed mono and `e` dense.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub e: Homomorphism,
    pub m: Homomorphism,
}

impl Factorization {
    pub fn middle(&self) -> &Arc<PartialStructure> {
        self.e.target()
    }
}

/// Factors `h` through the closed submodel generated by its image.
pub fn factorize_dense_closed(h: &Homomorphism) -> Factorization {
    let (middle, m) = closed_submodel_generated(h.target(), &image(h));
    let back = m.map().inverse(h.target()).expect("inclusions are injective");
    let e = Homomorphism::new(h.source().clone(), middle, h.map().then(&back)).expect("corestriction of a homomorphism");
    Factorization { e, m }
}

/// Whether the closed submodel generated by the image of `h` is all of the
/// target.
pub fn is_dense(h: &Homomorphism) -> bool {
    let (sub, _) = closed_submodel_generated(h.target(), &image(h));
    sub.carriers() == h.target().carriers()
}
