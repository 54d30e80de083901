//! Pointwise products of partial structures.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Elem, ElementMap, Homomorphism, PartialStructure};
use crate::syntax::{Signature, Sort};

/// The structure with singleton carriers, total functions and full relations.
pub fn terminal(signature: &Signature) -> PartialStructure {
    product(signature, &[]).structure
}

pub struct Product {
    pub structure: PartialStructure,
    pub projections: Vec<Homomorphism>,
}

fn strides(sort: &Sort, factors: &[&PartialStructure]) -> Vec<usize> {
    // First factor is the most significant digit.
    let mut out = vec![1; factors.len()];
    for i in (0..factors.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * factors[i + 1].carrier_size(sort);
    }
    out
}

fn encode(strides: &[usize], components: &[Elem]) -> Elem {
    strides.iter().zip(components).map(|(s, c)| s * c).sum()
}

/// Calls `visit` with one choice from each list, in lexicographic order.
fn for_each_choice<T>(lists: &[Vec<T>], visit: &mut dyn FnMut(&[&T])) {
    fn go<'a, T>(lists: &'a [Vec<T>], acc: &mut Vec<&'a T>, visit: &mut dyn FnMut(&[&T])) {
        if acc.len() == lists.len() {
            visit(acc);
            return;
        }
        for x in &lists[acc.len()] {
            acc.push(x);
            go(lists, acc, visit);
            acc.pop();
        }
    }
    go(lists, &mut Vec::with_capacity(lists.len()), visit)
}

/// `∏ factors`, defined pointwise: a function is defined at a tuple exactly
/// when every component is, and a relation holds exactly when it holds in
/// every component. The empty product is [`terminal`].
pub fn product(signature: &Signature, factors: &[&PartialStructure]) -> Product {
    for f in factors {
        assert!(f.signature() == signature, "product factor over a different signature");
    }
    let mut out = PartialStructure::empty(signature.clone());
    let strides: BTreeMap<Sort, Vec<usize>> = signature.sorts().iter().map(|s| (s.clone(), strides(s, factors))).collect();
    for s in signature.sorts() {
        out.set_carrier(s, factors.iter().map(|f| f.carrier_size(s)).product());
    }

    for (f, decl) in signature.functions() {
        let lists: Vec<Vec<(&Vec<Elem>, &Elem)>> = factors.iter().map(|m| m.function_table(f).iter().collect()).collect();
        for_each_choice(&lists, &mut |choice| {
            let args = decl
                .args
                .iter()
                .enumerate()
                .map(|(j, s)| encode(&strides[s], &choice.iter().map(|(a, _)| a[j]).collect::<Vec<_>>()))
                .collect();
            let value = encode(&strides[&decl.result], &choice.iter().map(|(_, v)| **v).collect::<Vec<_>>());
            out.insert_function(f, args, value);
        });
    }
    for (r, decl) in signature.relations() {
        let lists: Vec<Vec<&Vec<Elem>>> = factors.iter().map(|m| m.relation_table(r).iter().collect()).collect();
        for_each_choice(&lists, &mut |choice| {
            let args = decl
                .args
                .iter()
                .enumerate()
                .map(|(j, s)| encode(&strides[s], &choice.iter().map(|a| a[j]).collect::<Vec<_>>()))
                .collect();
            out.insert_relation(r, args);
        });
    }

    let structure = Arc::new(out);
    let projections = factors
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let map = ElementMap(
                signature
                    .sorts()
                    .iter()
                    .map(|s| {
                        let st = &strides[s];
                        let n = m.carrier_size(s);
                        (s.clone(), (0..structure.carrier_size(s)).map(|e| (e / st[i]) % n.max(1)).collect())
                    })
                    .collect(),
            );
            Homomorphism::new(structure.clone(), Arc::new((*m).clone()), map).expect("projections are homomorphisms")
        })
        .collect();
    Product {
        structure: Arc::try_unwrap(structure).unwrap_or_else(|a| (*a).clone()),
        projections,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::structure::{count_homs, iso_check};

    #[test]
    fn diamond() {
        let c = corpus::chain(2);
        let p = product(c.signature(), &[&c, &c]);
        assert_eq!(p.structure.carrier_size(&Sort::new("*")), 4);
        assert_eq!(p.structure.relation_table("leq").len(), 9);
        assert_eq!(p.projections.len(), 2);
    }

    #[test]
    fn empty_product_is_terminal() {
        let sig = corpus::cat().signature;
        let t = terminal(&sig);
        assert_eq!(t.carrier_size(&Sort::new("ob")), 1);
        assert_eq!(t.carrier_size(&Sort::new("mor")), 1);
        assert_eq!(t.function_table(".").len(), 1);
        assert_eq!(count_homs(&corpus::three(), &t), 1);
    }

    #[test]
    fn unit_law() {
        let m = corpus::three();
        let t = terminal(m.signature());
        let p = product(m.signature(), &[&m, &t]);
        assert!(iso_check(&p.structure, &m).is_some());
    }
}
