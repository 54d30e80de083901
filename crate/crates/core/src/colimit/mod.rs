//! Filtered colimits of finite diagrams of partial structures, and
//! coproducts and coequalizers of representing models computed on formulas.

mod formula;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::structure::{Elem, ElementMap, Homomorphism, PartialStructure, StructureError};
use crate::syntax::Sort;

pub use formula::{
    coequalizer_formula, coproduct_formula, universality_counts, verify_universal_property, Coproduct, FiniteDiagram,
    UniversalityCount,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColimitError {
    #[error("ill-formed shape: {0}")]
    Shape(String),
    #[error("shape is not filtered: {0}")]
    NotFiltered(String),
    #[error("diagram is not a functor: {0}")]
    NotFunctorial(String),
    #[error("stages disagree on `{symbol}`")]
    Inconsistent { symbol: String },
    #[error("side condition refuted: {0}")]
    SideCondition(String),
    #[error("side condition undecided within budget")]
    Undecided,
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Chase(#[from] crate::chase::ChaseError),
}

/// A finite category given by its morphisms and their composition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    objects: usize,
    dom: Vec<usize>,
    cod: Vec<usize>,
    identity: Vec<usize>,
    /// `compose[g][f] = g∘f`, present when `cod f = dom g`.
    compose: Vec<Vec<Option<usize>>>,
}

impl Shape {
    /// `morphisms[m] = (dom, cod)`, `identities[i]` the identity of object
    /// `i`, and `table[(g, f)] = g∘f` for every composable pair.
    pub fn new(
        objects: usize,
        morphisms: Vec<(usize, usize)>,
        identities: Vec<usize>,
        table: &BTreeMap<(usize, usize), usize>,
    ) -> Result<Self, ColimitError> {
        let bad = |m: &str| Err(ColimitError::Shape(m.to_string()));
        let n = morphisms.len();
        if identities.len() != objects {
            return bad("one identity per object");
        }
        if morphisms.iter().any(|&(d, c)| d >= objects || c >= objects) {
            return bad("morphism endpoint out of range");
        }
        for (i, &id) in identities.iter().enumerate() {
            if id >= n || morphisms[id] != (i, i) {
                return bad("identity has wrong endpoints");
            }
        }
        let (dom, cod): (Vec<_>, Vec<_>) = morphisms.into_iter().unzip();
        let mut compose = vec![vec![None; n]; n];
        for g in 0..n {
            for f in 0..n {
                if cod[f] != dom[g] {
                    continue;
                }
                let Some(&h) = table.get(&(g, f)) else {
                    return Err(ColimitError::Shape(format!("missing composite of {g} after {f}")));
                };
                if h >= n || dom[h] != dom[f] || cod[h] != cod[g] {
                    return Err(ColimitError::Shape(format!("composite of {g} after {f} has wrong endpoints")));
                }
                compose[g][f] = Some(h);
            }
        }
        let shape = Shape {
            objects,
            dom,
            cod,
            identity: identities,
            compose,
        };
        for f in 0..n {
            if shape.comp(shape.identity[shape.cod[f]], f) != f || shape.comp(f, shape.identity[shape.dom[f]]) != f {
                return Err(ColimitError::Shape(format!("unit law fails at {f}")));
            }
        }
        for h in 0..n {
            for g in shape.out_of(shape.cod[h]) {
                for f in shape.out_of(shape.cod[g]) {
                    if shape.comp(f, shape.comp(g, h)) != shape.comp(shape.comp(f, g), h) {
                        return Err(ColimitError::Shape("composition is not associative".into()));
                    }
                }
            }
        }
        Ok(shape)
    }

    /// The thin category of the reflexive-transitive closure of `le`.
    pub fn preorder(objects: usize, le: &[(usize, usize)]) -> Result<Self, ColimitError> {
        let mut reach = vec![vec![false; objects]; objects];
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in le {
            if a >= objects || b >= objects {
                return Err(ColimitError::Shape("object out of range".into()));
            }
            reach[a][b] = true;
        }
        for k in 0..objects {
            for i in 0..objects {
                for j in 0..objects {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        let mut morphisms = Vec::new();
        let mut index = BTreeMap::new();
        for i in 0..objects {
            for j in 0..objects {
                if reach[i][j] {
                    index.insert((i, j), morphisms.len());
                    morphisms.push((i, j));
                }
            }
        }
        let identities = (0..objects).map(|i| index[&(i, i)]).collect();
        let mut table = BTreeMap::new();
        for (&(a, b), &f) in &index {
            for (&(b2, c), &g) in &index {
                if b == b2 {
                    table.insert((g, f), index[&(a, c)]);
                }
            }
        }
        Self::new(objects, morphisms, identities, &table)
    }

    /// `0 → 1 → … → n-1`
    pub fn chain(n: usize) -> Result<Self, ColimitError> {
        let le: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::preorder(n, &le)
    }

    pub fn single() -> Self {
        Self::preorder(1, &[]).expect("one object")
    }

    /// Two objects with two parallel non-identity arrows `u, v: 0 → 1`.
    pub fn parallel_pair() -> Self {
        let table = [((0, 0), 0), ((1, 1), 1), ((1, 2), 2), ((1, 3), 3), ((2, 0), 2), ((3, 0), 3)].into_iter().collect();
        Self::new(2, vec![(0, 0), (1, 1), (0, 1), (0, 1)], vec![0, 1], &table).expect("valid category")
    }

    /// One object with an idempotent `e`.
    pub fn idempotent() -> Self {
        let table = [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)].into_iter().collect();
        Self::new(1, vec![(0, 0), (0, 0)], vec![0], &table).expect("valid category")
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn morphisms(&self) -> usize {
        self.dom.len()
    }

    pub fn dom(&self, m: usize) -> usize {
        self.dom[m]
    }

    pub fn cod(&self, m: usize) -> usize {
        self.cod[m]
    }

    pub fn identity(&self, i: usize) -> usize {
        self.identity[i]
    }

    /// `g∘f`; panics unless composable.
    pub fn comp(&self, g: usize, f: usize) -> usize {
        self.compose[g][f].expect("composable morphisms")
    }

    fn out_of(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.morphisms()).filter(move |&m| self.dom[m] == i)
    }

    fn between(&self, i: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.morphisms()).filter(move |&m| self.dom[m] == i && self.cod[m] == j)
    }

    /// Checks the three cocone conditions of filteredness: non-empty, any two
    /// objects map to a common one, any parallel pair is equalized by some
    /// morphism out of its codomain.
    pub fn check_filtered(&self) -> Result<(), ColimitError> {
        if self.objects == 0 {
            return Err(ColimitError::NotFiltered("empty shape".into()));
        }
        for i in 0..self.objects {
            for j in 0..self.objects {
                let upper = (0..self.objects).any(|k| self.between(i, k).next().is_some() && self.between(j, k).next().is_some());
                if !upper {
                    return Err(ColimitError::NotFiltered(format!("objects {i} and {j} have no common upper bound")));
                }
            }
        }
        for u in 0..self.morphisms() {
            for v in self.between(self.dom[u], self.cod[u]) {
                if !self.out_of(self.cod[u]).any(|w| self.comp(w, u) == self.comp(w, v)) {
                    return Err(ColimitError::NotFiltered(format!("morphisms {u} and {v} are not equalized")));
                }
            }
        }
        Ok(())
    }

    pub fn is_filtered(&self) -> bool {
        self.check_filtered().is_ok()
    }
}

/// A functor from a [`Shape`] to partial structures over one signature.
#[derive(Clone, Debug)]
pub struct Diagram {
    shape: Shape,
    objects: Vec<Arc<PartialStructure>>,
    /// One homomorphism per morphism of the shape.
    maps: Vec<Homomorphism>,
}

impl Diagram {
    pub fn new(shape: Shape, objects: Vec<Arc<PartialStructure>>, maps: Vec<Homomorphism>) -> Result<Self, ColimitError> {
        let err = |m: String| Err(ColimitError::NotFunctorial(m));
        if objects.len() != shape.objects() || maps.len() != shape.morphisms() {
            return err("object or morphism count differs from the shape".into());
        }
        if let Some(first) = objects.first() {
            if objects.iter().any(|o| o.signature() != first.signature()) {
                return Err(StructureError::SignatureMismatch.into());
            }
        }
        for (m, h) in maps.iter().enumerate() {
            if h.source() != &objects[shape.dom(m)] || h.target() != &objects[shape.cod(m)] {
                return err(format!("morphism {m} has the wrong source or target"));
            }
        }
        for i in 0..shape.objects() {
            if maps[shape.identity(i)].map() != &ElementMap::identity(&objects[i]) {
                return err(format!("identity of object {i} is not sent to an identity"));
            }
        }
        for g in 0..shape.morphisms() {
            for f in 0..shape.morphisms() {
                if shape.cod(f) == shape.dom(g) && maps[shape.comp(g, f)].map() != &maps[f].map().then(maps[g].map()) {
                    return err(format!("composite of {g} after {f} is not preserved"));
                }
            }
        }
        Ok(Diagram { shape, objects, maps })
    }

    /// A chain `stages[0] → stages[1] → …` with `steps[i]: stages[i] → stages[i+1]`.
    pub fn chain(stages: Vec<Arc<PartialStructure>>, steps: Vec<Homomorphism>) -> Result<Self, ColimitError> {
        if stages.is_empty() || steps.len() + 1 != stages.len() {
            return Err(ColimitError::NotFunctorial("a chain needs one step between consecutive stages".into()));
        }
        let shape = Shape::chain(stages.len())?;
        let maps = (0..shape.morphisms())
            .map(|m| {
                let (i, j) = (shape.dom(m), shape.cod(m));
                let mut h = Homomorphism::identity(stages[i].clone());
                for step in &steps[i..j] {
                    h = h.then(step)?;
                }
                Ok(h)
            })
            .collect::<Result<Vec<_>, StructureError>>()?;
        Self::new(shape, stages, maps)
    }

    /// Every object sent to `m`, every morphism to its identity.
    pub fn constant(shape: Shape, m: Arc<PartialStructure>) -> Result<Self, ColimitError> {
        let objects = vec![m.clone(); shape.objects()];
        let maps = vec![Homomorphism::identity(m); shape.morphisms()];
        Self::new(shape, objects, maps)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn objects(&self) -> &[Arc<PartialStructure>] {
        &self.objects
    }

    pub fn map(&self, m: usize) -> &Homomorphism {
        &self.maps[m]
    }
}

/// A colimit object with its cocone, one leg per object of the shape.
#[derive(Clone, Debug)]
pub struct Colimit {
    pub structure: Arc<PartialStructure>,
    pub legs: Vec<Homomorphism>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.0[hi] = lo;
        }
    }
}

/// Colimit of a diagram over a filtered shape. Elements are pairs `(i, x)`
/// identified when some pair of morphisms out of `i` and `j` sends them to
/// the same element; a function or relation is defined at a tuple of
/// classes when some single stage defines it at representatives.
pub fn filtered_colimit(d: &Diagram) -> Result<Colimit, ColimitError> {
    d.shape.check_filtered()?;
    let sig = d.objects[0].signature().clone();
    let mut out = PartialStructure::empty(sig.clone());
    // Per sort: global id of (object, element) is offset[i] + x.
    let mut class: BTreeMap<Sort, Vec<Vec<Elem>>> = BTreeMap::new();
    for s in sig.sorts() {
        let mut offsets = Vec::new();
        let mut total = 0;
        for o in &d.objects {
            offsets.push(total);
            total += o.carrier_size(s);
        }
        let mut uf = UnionFind((0..total).collect());
        for (m, h) in d.maps.iter().enumerate() {
            let (i, j) = (d.shape.dom(m), d.shape.cod(m));
            for (x, &y) in h.map().sort_map(s).iter().enumerate() {
                uf.union(offsets[i] + x, offsets[j] + y);
            }
        }
        // Number classes in order of their least member.
        let mut number: BTreeMap<usize, Elem> = BTreeMap::new();
        let mut per_object = Vec::new();
        for (i, o) in d.objects.iter().enumerate() {
            let mut v = Vec::new();
            for x in 0..o.carrier_size(s) {
                let root = uf.find(offsets[i] + x);
                let next = number.len();
                v.push(*number.entry(root).or_insert(next));
            }
            per_object.push(v);
        }
        out.set_carrier(s, number.len());
        class.insert(s.clone(), per_object);
    }
    for (f, decl) in sig.functions() {
        let mut table: BTreeMap<Vec<Elem>, Elem> = BTreeMap::new();
        for (i, o) in d.objects.iter().enumerate() {
            for (args, &v) in o.function_table(f) {
                let key = decl.args.iter().zip(args).map(|(s, &a)| class[s][i][a]).collect();
                let val = class[&decl.result][i][v];
                if *table.entry(key).or_insert(val) != val {
                    return Err(ColimitError::Inconsistent { symbol: f.to_string() });
                }
            }
        }
        out.set_function_table(f, table)?;
    }
    for (r, decl) in sig.relations() {
        let mut tuples = BTreeSet::new();
        for (i, o) in d.objects.iter().enumerate() {
            for args in o.relation_table(r) {
                tuples.insert(decl.args.iter().zip(args).map(|(s, &a)| class[s][i][a]).collect::<Vec<_>>());
            }
        }
        for t in tuples {
            out.try_insert_relation(r, t)?;
        }
    }
    let structure = Arc::new(out);
    let legs = d
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let map = ElementMap(class.iter().map(|(s, per)| (s.clone(), per[i].clone())).collect());
            Homomorphism::new(o.clone(), structure.clone(), map)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Colimit { structure, legs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::structure::iso_check;

    fn segment(n: usize, m: usize) -> Homomorphism {
        let star = Sort::new("*");
        let map = ElementMap([(star, (0..n).collect())].into_iter().collect());
        Homomorphism::new(Arc::new(corpus::chain(n)), Arc::new(corpus::chain(m)), map).unwrap()
    }

    #[test]
    fn shapes() {
        assert!(Shape::chain(3).unwrap().is_filtered());
        assert!(Shape::single().is_filtered());
        assert!(Shape::idempotent().is_filtered());
        assert!(!Shape::parallel_pair().is_filtered());
        assert!(!Shape::preorder(2, &[]).unwrap().is_filtered());
        assert!(Shape::preorder(3, &[(0, 2), (1, 2)]).unwrap().is_filtered());
        assert_eq!(Shape::chain(3).unwrap().morphisms(), 6);
    }

    #[test]
    fn bad_shape_is_rejected() {
        let table = [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 0)].into_iter().collect();
        // e∘e = id is a fine category (Z/2); dropping an entry is not.
        assert!(Shape::new(1, vec![(0, 0), (0, 0)], vec![0], &table).is_ok());
        let partial = [((0, 0), 0), ((0, 1), 1), ((1, 0), 1)].into_iter().collect();
        assert!(Shape::new(1, vec![(0, 0), (0, 0)], vec![0], &partial).is_err());
    }

    #[test]
    fn chain_of_initial_segments() {
        let stages = vec![Arc::new(corpus::chain(1)), Arc::new(corpus::chain(2)), Arc::new(corpus::chain(3))];
        let d = Diagram::chain(stages, vec![segment(1, 2), segment(2, 3)]).unwrap();
        let c = filtered_colimit(&d).unwrap();
        assert_eq!(*c.structure, corpus::chain(3));
        assert_eq!(c.legs[2].map(), &ElementMap::identity(&corpus::chain(3)));
    }

    #[test]
    fn constant_diagrams() {
        let three = Arc::new(corpus::three());
        for shape in [Shape::single(), Shape::chain(3).unwrap(), Shape::idempotent()] {
            let c = filtered_colimit(&Diagram::constant(shape, three.clone()).unwrap()).unwrap();
            assert!(iso_check(&c.structure, &three).is_some());
        }
    }

    #[test]
    fn non_filtered_is_an_error() {
        let m = Arc::new(corpus::chain(2));
        let d = Diagram::constant(Shape::parallel_pair(), m).unwrap();
        assert!(matches!(filtered_colimit(&d), Err(ColimitError::NotFiltered(_))));
    }

    #[test]
    fn idempotent_splitting() {
        // The colimit of an idempotent on a 2-chain collapsing onto 0 is its
        // image, a point.
        let c2 = Arc::new(corpus::chain(2));
        let e = Homomorphism::new(c2.clone(), c2.clone(), ElementMap([(Sort::new("*"), vec![0, 0])].into_iter().collect())).unwrap();
        let d = Diagram::new(Shape::idempotent(), vec![c2.clone()], vec![Homomorphism::identity(c2), e]).unwrap();
        let c = filtered_colimit(&d).unwrap();
        assert_eq!(c.structure.carrier_size(&Sort::new("*")), 1);
    }
}
