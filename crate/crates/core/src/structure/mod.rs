//! Finite partial Σ-structures and the operations on them: evaluation,
//! validity, homomorphisms, products, closed submodels, the dense/closed
//! factorization and reducts.

pub(crate) mod eval;
mod factor;
mod hom;
mod product;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::syntax::{Signature, Sort, TheoryMorphismData};

pub use eval::{check_sequent, interpret_formula, interpret_term, is_model, satisfies, Interpretation, ModelCheck, SequentCheck};
pub use factor::{
    closed_submodel_generated, factorize_dense_closed, image, is_closed_mono, is_dense, ClosedCheck, Factorization,
};
pub use hom::{check_hom, count_homs, enumerate_homs, extend_from_generators, find_hom, iso_check, ElementMap, HomSearch, HomViolation, Homomorphism};
pub use product::{product, terminal, Product};

/// Elements of each carrier are the ids `0..n`.
pub type Elem = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("structure is over signature differing from the expected one")]
    SignatureMismatch,
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}` expects {expected} argument(s), found {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("element {elem} out of range for sort `{sort}` of size {size}")]
    OutOfRange { sort: Sort, elem: Elem, size: usize },
    #[error("`{symbol}` has two values at {args:?}")]
    NotFunctional { symbol: String, args: Vec<Elem> },
    #[error("map is not injective on sort `{0}`")]
    NotInjective(Sort),
    #[error("map is not a homomorphism: {0}")]
    NotHomomorphism(HomViolation),
    #[error("symbol `{0}` is not mapped by the morphism")]
    Unmapped(String),
}

/// A finite partial Σ-structure.
///
/// Carriers are `0..n` per sort; every symbol of the signature has a
/// (possibly empty) table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialStructure {
    signature: Signature,
    carriers: BTreeMap<Sort, usize>,
    functions: BTreeMap<String, BTreeMap<Vec<Elem>, Elem>>,
    relations: BTreeMap<String, BTreeSet<Vec<Elem>>>,
}

impl PartialStructure {
    /// All carriers empty, all tables empty.
    pub fn empty(signature: Signature) -> Self {
        let carriers = signature.sorts().iter().map(|s| (s.clone(), 0)).collect();
        let functions = signature.functions().map(|(f, _)| (f.to_string(), BTreeMap::new())).collect();
        let relations = signature.relations().map(|(r, _)| (r.to_string(), BTreeSet::new())).collect();
        PartialStructure {
            signature,
            carriers,
            functions,
            relations,
        }
    }

    /// Builds a structure from raw tables, checking sorts, ranges and
    /// functionality.
    pub fn new(
        signature: Signature,
        carriers: BTreeMap<Sort, usize>,
        functions: BTreeMap<String, Vec<(Vec<Elem>, Elem)>>,
        relations: BTreeMap<String, Vec<Vec<Elem>>>,
    ) -> Result<Self, StructureError> {
        let mut m = PartialStructure::empty(signature);
        for (s, n) in carriers {
            if !m.signature.has_sort(&s) {
                return Err(StructureError::UnknownSort(s.name().to_string()));
            }
            m.carriers.insert(s, n);
        }
        for (f, entries) in functions {
            for (args, v) in entries {
                m.try_insert_function(&f, args, v)?;
            }
        }
        for (r, tuples) in relations {
            for args in tuples {
                m.try_insert_relation(&r, args)?;
            }
        }
        Ok(m)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn carrier_size(&self, sort: &Sort) -> usize {
        self.carriers.get(sort).copied().unwrap_or(0)
    }

    pub fn carriers(&self) -> &BTreeMap<Sort, usize> {
        &self.carriers
    }

    /// Sum of all carrier sizes.
    pub fn total_size(&self) -> usize {
        self.carriers.values().sum()
    }

    pub fn set_carrier(&mut self, sort: &Sort, size: usize) {
        assert!(self.signature.has_sort(sort), "unknown sort `{sort}`");
        self.carriers.insert(sort.clone(), size);
    }

    /// Adds a fresh element of `sort` and returns it.
    pub fn add_element(&mut self, sort: &Sort) -> Elem {
        let n = self.carrier_size(sort);
        self.set_carrier(sort, n + 1);
        n
    }

    pub fn function_table(&self, f: &str) -> &BTreeMap<Vec<Elem>, Elem> {
        &self.functions[f]
    }

    pub fn relation_table(&self, r: &str) -> &BTreeSet<Vec<Elem>> {
        &self.relations[r]
    }

    pub fn apply(&self, f: &str, args: &[Elem]) -> Option<Elem> {
        self.functions.get(f)?.get(args).copied()
    }

    pub fn holds(&self, r: &str, args: &[Elem]) -> bool {
        self.relations.get(r).is_some_and(|t| t.contains(args))
    }

    fn check_tuple(&self, symbol: &str, sorts: &[Sort], args: &[Elem]) -> Result<(), StructureError> {
        if sorts.len() != args.len() {
            return Err(StructureError::Arity {
                symbol: symbol.to_string(),
                expected: sorts.len(),
                found: args.len(),
            });
        }
        for (s, &a) in sorts.iter().zip(args) {
            self.check_elem(s, a)?;
        }
        Ok(())
    }

    fn check_elem(&self, sort: &Sort, elem: Elem) -> Result<(), StructureError> {
        let size = self.carrier_size(sort);
        if elem >= size {
            return Err(StructureError::OutOfRange {
                sort: sort.clone(),
                elem,
                size,
            });
        }
        Ok(())
    }

    pub fn try_insert_function(&mut self, f: &str, args: Vec<Elem>, value: Elem) -> Result<(), StructureError> {
        let decl = self
            .signature
            .function(f)
            .ok_or_else(|| StructureError::UnknownSymbol(f.to_string()))?;
        self.check_tuple(f, &decl.args, &args)?;
        self.check_elem(&decl.result, value)?;
        let table = self.functions.get_mut(f).expect("table exists for every symbol");
        match table.get(&args) {
            Some(&v) if v != value => Err(StructureError::NotFunctional {
                symbol: f.to_string(),
                args,
            }),
            _ => {
                table.insert(args, value);
                Ok(())
            }
        }
    }

    pub fn try_insert_relation(&mut self, r: &str, args: Vec<Elem>) -> Result<(), StructureError> {
        let decl = self
            .signature
            .relation(r)
            .ok_or_else(|| StructureError::UnknownSymbol(r.to_string()))?;
        self.check_tuple(r, &decl.args, &args)?;
        self.relations.get_mut(r).expect("table exists for every symbol").insert(args);
        Ok(())
    }

    /// Panicking variant of [`try_insert_function`](Self::try_insert_function)
    /// for literal fixtures.
    pub fn insert_function(&mut self, f: &str, args: Vec<Elem>, value: Elem) {
        self.try_insert_function(f, args, value).unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn insert_relation(&mut self, r: &str, args: Vec<Elem>) {
        self.try_insert_relation(r, args).unwrap_or_else(|e| panic!("{e}"))
    }

    /// Pulls the structure back along `rho`, which maps the signature of the
    /// result into the signature of `self`.
    pub fn reduct(&self, rho: &TheoryMorphismData) -> Result<PartialStructure, StructureError> {
        if &rho.target != self.signature() {
            return Err(StructureError::SignatureMismatch);
        }
        let mut out = PartialStructure::empty(rho.source.clone());
        for s in rho.source.sorts() {
            let t = rho.map_sort(s).map_err(|_| StructureError::Unmapped(s.name().to_string()))?;
            out.carriers.insert(s.clone(), self.carrier_size(&t));
        }
        for (f, _) in rho.source.functions() {
            let g = rho.map_function(f).map_err(|_| StructureError::Unmapped(f.to_string()))?;
            out.functions.insert(f.to_string(), self.functions[g].clone());
        }
        for (r, _) in rho.source.relations() {
            let q = rho.map_relation(r).map_err(|_| StructureError::Unmapped(r.to_string()))?;
            out.relations.insert(r.to_string(), self.relations[q].clone());
        }
        Ok(out)
    }

    /// The same tables viewed over a larger signature; new symbols get empty
    /// tables and new sorts empty carriers.
    pub fn expand_to(&self, signature: &Signature) -> Result<PartialStructure, StructureError> {
        if !self.signature.is_subsignature_of(signature) {
            return Err(StructureError::SignatureMismatch);
        }
        let mut out = PartialStructure::empty(signature.clone());
        out.carriers.extend(self.carriers.iter().map(|(s, n)| (s.clone(), *n)));
        out.functions.extend(self.functions.iter().map(|(k, v)| (k.clone(), v.clone())));
        out.relations.extend(self.relations.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(out)
    }

    /// The restriction to a subsignature: tables of other symbols dropped.
    pub fn restrict_to(&self, signature: &Signature) -> Result<PartialStructure, StructureError> {
        let rho = TheoryMorphismData::inclusion(signature, &self.signature).map_err(|_| StructureError::SignatureMismatch)?;
        self.reduct(&rho)
    }

    /// Replaces the table of function `f`.
    pub fn set_function_table(&mut self, f: &str, entries: impl IntoIterator<Item = (Vec<Elem>, Elem)>) -> Result<(), StructureError> {
        if !self.functions.contains_key(f) {
            return Err(StructureError::UnknownSymbol(f.to_string()));
        }
        self.functions.insert(f.to_string(), BTreeMap::new());
        for (args, v) in entries {
            self.try_insert_function(f, args, v)?;
        }
        Ok(())
    }

    /// All elements of all sorts, in signature sort order.
    pub fn elements(&self) -> impl Iterator<Item = (&Sort, Elem)> + '_ {
        self.signature
            .sorts()
            .iter()
            .flat_map(move |s| (0..self.carrier_size(s)).map(move |e| (s, e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn functionality_is_enforced() {
        let mut m = corpus::z_window();
        let err = m.try_insert_function(".", vec![3, 3], 4).unwrap_err();
        assert!(matches!(err, StructureError::NotFunctional { .. }));
        assert!(m.try_insert_function(".", vec![3, 3], 3).is_ok());
    }

    #[test]
    fn range_and_arity_are_checked() {
        let mut m = corpus::chain(2);
        assert!(matches!(m.try_insert_relation("leq", vec![0, 2]), Err(StructureError::OutOfRange { .. })));
        assert!(matches!(m.try_insert_relation("leq", vec![0]), Err(StructureError::Arity { .. })));
        assert!(matches!(m.try_insert_relation("lt", vec![0, 1]), Err(StructureError::UnknownSymbol(_))));
    }

    #[test]
    fn reduct_along_identity_is_identity() {
        let m = corpus::three();
        let rho = TheoryMorphismData::identity(m.signature());
        assert_eq!(m.reduct(&rho).unwrap(), m);
    }

    #[test]
    fn reduct_drops_inverse() {
        let m = corpus::z_window_inv();
        let rho = TheoryMorphismData::inclusion(&corpus::mon().signature, m.signature()).unwrap();
        let r = m.reduct(&rho).unwrap();
        assert_eq!(r, corpus::z_window());
        assert!(r.signature().function("inv").is_none());
    }

    #[test]
    fn reduct_to_objects_of_three() {
        let m = corpus::three();
        let mut bare = Signature::new();
        bare.add_sort("*").unwrap();
        let rho = TheoryMorphismData::sort_only(
            &bare,
            m.signature(),
            [(Sort::new("*"), Sort::new("ob"))].into_iter().collect(),
        )
        .unwrap();
        let r = m.reduct(&rho).unwrap();
        assert_eq!(r.carrier_size(&Sort::new("*")), 3);
        assert_eq!(r.signature().functions().count() + r.signature().relations().count(), 0);
    }
}
