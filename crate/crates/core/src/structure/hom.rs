//! Homomorphisms and backtracking homomorphism search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::{Elem, PartialStructure, StructureError};
use crate::syntax::Sort;

/// A total map of carriers, one vector per sort.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ElementMap(pub BTreeMap<Sort, Vec<Elem>>);

impl ElementMap {
    pub fn get(&self, sort: &Sort, e: Elem) -> Elem {
        self.0[sort][e]
    }

    pub fn sort_map(&self, sort: &Sort) -> &[Elem] {
        self.0.get(sort).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn identity(m: &PartialStructure) -> Self {
        ElementMap(m.carriers().iter().map(|(s, &n)| (s.clone(), (0..n).collect())).collect())
    }

    /// `next ∘ self`
    pub fn then(&self, next: &ElementMap) -> ElementMap {
        ElementMap(
            self.0
                .iter()
                .map(|(s, v)| (s.clone(), v.iter().map(|&e| next.get(s, e)).collect()))
                .collect(),
        )
    }

    pub fn apply_tuple(&self, sorts: &[Sort], args: &[Elem]) -> Vec<Elem> {
        sorts.iter().zip(args).map(|(s, &a)| self.get(s, a)).collect()
    }

    pub fn is_injective(&self) -> bool {
        self.0.values().all(|v| v.iter().collect::<BTreeSet<_>>().len() == v.len())
    }

    pub fn is_surjective_onto(&self, target: &PartialStructure) -> bool {
        target
            .carriers()
            .iter()
            .all(|(s, &n)| self.sort_map(s).iter().collect::<BTreeSet<_>>().len() == n)
    }

    /// Left inverse of an injective map into `target`; elements outside the
    /// image go to 0. `None` if the map is not injective.
    pub fn inverse(&self, target: &PartialStructure) -> Option<ElementMap> {
        let mut out = BTreeMap::new();
        for (s, &n) in target.carriers() {
            let mut inv = vec![0; n];
            let mut seen = vec![false; n];
            for (a, &b) in self.sort_map(s).iter().enumerate() {
                if seen[b] {
                    return None;
                }
                seen[b] = true;
                inv[b] = a;
            }
            out.insert(s.clone(), inv);
        }
        Some(ElementMap(out))
    }
}

/// Why a map fails to be a homomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HomViolation {
    /// The map does not have the right length or range on a sort.
    Shape(Sort),
    /// `f(args)` is defined in the source but its image is not preserved.
    Function { symbol: String, args: Vec<Elem> },
    /// `R(args)` holds in the source but not at the image.
    Relation { symbol: String, args: Vec<Elem> },
}

impl fmt::Display for HomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomViolation::Shape(s) => write!(f, "map on sort `{s}` is not a total map of carriers"),
            HomViolation::Function { symbol, args } => write!(f, "`{symbol}` not preserved at {args:?}"),
            HomViolation::Relation { symbol, args } => write!(f, "`{symbol}` not preserved at {args:?}"),
        }
    }
}

/// The homomorphism `source → target` sending each generator `(sort, e)` to
/// the corresponding image, if one exists. Unique when `source` is generated
/// by the given elements.
pub fn extend_from_generators(
    source: &PartialStructure,
    generators: &[(Sort, Elem)],
    target: &PartialStructure,
    images: &[Elem],
) -> Option<ElementMap> {
    if generators.len() != images.len() || source.signature() != target.signature() {
        return None;
    }
    let mut fixed: BTreeMap<(&Sort, Elem), Elem> = BTreeMap::new();
    for ((s, e), &v) in generators.iter().zip(images) {
        if *fixed.entry((s, *e)).or_insert(v) != v || v >= target.carrier_size(s) {
            return None;
        }
    }
    let mut search = HomSearch::new(source, target);
    for ((s, e), v) in fixed {
        search = search.fix(s, e, v);
    }
    search.first()
}

/// Checks that `map` is a Σ-homomorphism `a → b`.
pub fn check_hom(a: &PartialStructure, b: &PartialStructure, map: &ElementMap) -> Result<(), HomViolation> {
    for s in a.signature().sorts() {
        let v = map.sort_map(s);
        if v.len() != a.carrier_size(s) || v.iter().any(|&e| e >= b.carrier_size(s)) {
            return Err(HomViolation::Shape(s.clone()));
        }
    }
    let sig = a.signature();
    for (f, decl) in sig.functions() {
        for (args, &v) in a.function_table(f) {
            let image = map.apply_tuple(&decl.args, args);
            if b.apply(f, &image) != Some(map.get(&decl.result, v)) {
                return Err(HomViolation::Function {
                    symbol: f.to_string(),
                    args: args.clone(),
                });
            }
        }
    }
    for (r, decl) in sig.relations() {
        for args in a.relation_table(r) {
            if !b.holds(r, &map.apply_tuple(&decl.args, args)) {
                return Err(HomViolation::Relation {
                    symbol: r.to_string(),
                    args: args.clone(),
                });
            }
        }
    }
    Ok(())
}

/// A checked homomorphism between two structures over the same signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homomorphism {
    source: Arc<PartialStructure>,
    target: Arc<PartialStructure>,
    map: ElementMap,
}

impl Homomorphism {
    pub fn new(source: Arc<PartialStructure>, target: Arc<PartialStructure>, map: ElementMap) -> Result<Self, StructureError> {
        if source.signature() != target.signature() {
            return Err(StructureError::SignatureMismatch);
        }
        check_hom(&source, &target, &map).map_err(StructureError::NotHomomorphism)?;
        Ok(Homomorphism { source, target, map })
    }

    pub fn identity(m: Arc<PartialStructure>) -> Self {
        let map = ElementMap::identity(&m);
        Homomorphism {
            source: m.clone(),
            target: m,
            map,
        }
    }

    pub fn source(&self) -> &Arc<PartialStructure> {
        &self.source
    }

    pub fn target(&self) -> &Arc<PartialStructure> {
        &self.target
    }

    pub fn map(&self) -> &ElementMap {
        &self.map
    }

    pub fn apply(&self, sort: &Sort, e: Elem) -> Elem {
        self.map.get(sort, e)
    }

    /// `next ∘ self`; the target of `self` must equal the source of `next`.
    pub fn then(&self, next: &Homomorphism) -> Result<Homomorphism, StructureError> {
        if self.target != next.source {
            return Err(StructureError::SignatureMismatch);
        }
        Ok(Homomorphism {
            source: self.source.clone(),
            target: next.target.clone(),
            map: self.map.then(&next.map),
        })
    }

    pub fn is_injective(&self) -> bool {
        self.map.is_injective()
    }

    pub fn is_surjective(&self) -> bool {
        self.map.is_surjective_onto(&self.target)
    }
}

struct FnCon<'a> {
    table: &'a BTreeMap<Vec<Elem>, Elem>,
    args: Vec<usize>,
    out: usize,
}

struct RelCon<'a> {
    table: &'a BTreeSet<Vec<Elem>>,
    args: Vec<usize>,
}

/// Backtracking search for homomorphisms `source → target`.
///
/// Search variables are the source elements, ordered by sort (in signature
/// order) and then by id, so results come out in lexicographic order.
/// Function entries whose arguments are already assigned force the image of
/// their value.
pub struct HomSearch<'a> {
    source: &'a PartialStructure,
    target: &'a PartialStructure,
    injective: bool,
    fixed: BTreeMap<(Sort, Elem), Elem>,
}

impl<'a> HomSearch<'a> {
    pub fn new(source: &'a PartialStructure, target: &'a PartialStructure) -> Self {
        assert!(
            source.signature() == target.signature(),
            "homomorphism search between structures over different signatures"
        );
        HomSearch {
            source,
            target,
            injective: false,
            fixed: BTreeMap::new(),
        }
    }

    pub fn injective(mut self, yes: bool) -> Self {
        self.injective = yes;
        self
    }

    /// Only maps sending `e` of sort `sort` to `value`.
    pub fn fix(mut self, sort: &Sort, e: Elem, value: Elem) -> Self {
        self.fixed.insert((sort.clone(), e), value);
        self
    }

    /// Visits every homomorphism until `visit` returns false.
    pub fn for_each(&self, visit: &mut dyn FnMut(&ElementMap) -> bool) {
        let sorts = self.source.signature().sorts();
        let mut offsets = Vec::with_capacity(sorts.len());
        let mut var_sort = Vec::new();
        for (i, s) in sorts.iter().enumerate() {
            offsets.push(var_sort.len());
            var_sort.extend(std::iter::repeat_n(i, self.source.carrier_size(s)));
        }
        let n = var_sort.len();
        let var = |s: &Sort, e: Elem| offsets[self.source.signature().sort_index(s).expect("declared sort")] + e;

        let mut fn_buckets: Vec<Vec<FnCon>> = (0..=n).map(|_| Vec::new()).collect();
        let mut forced: Vec<Option<usize>> = vec![None; n];
        let mut fn_cons: Vec<FnCon> = Vec::new();
        for (f, decl) in self.source.signature().functions() {
            let table = self.target.function_table(f);
            for (args, &v) in self.source.function_table(f) {
                let args: Vec<usize> = decl.args.iter().zip(args).map(|(s, &a)| var(s, a)).collect();
                let out = var(&decl.result, v);
                fn_cons.push(FnCon { table, args, out });
            }
        }
        let mut rel_buckets: Vec<Vec<RelCon>> = (0..=n).map(|_| Vec::new()).collect();
        for (r, decl) in self.source.signature().relations() {
            let table = self.target.relation_table(r);
            for args in self.source.relation_table(r) {
                let args: Vec<usize> = decl.args.iter().zip(args).map(|(s, &a)| var(s, a)).collect();
                let depth = args.iter().map(|a| a + 1).max().unwrap_or(0);
                rel_buckets[depth].push(RelCon { table, args });
            }
        }
        for c in fn_cons {
            let arg_depth = c.args.iter().map(|a| a + 1).max().unwrap_or(0);
            if arg_depth <= c.out && forced[c.out].is_none() {
                forced[c.out] = Some(fn_buckets[c.out + 1].len());
            }
            let depth = arg_depth.max(c.out + 1);
            fn_buckets[depth].push(c);
        }
        let fixed: Vec<Option<Elem>> = (0..n)
            .map(|k| {
                let s = &sorts[var_sort[k]];
                let e = k - offsets[var_sort[k]];
                self.fixed.get(&(s.clone(), e)).copied()
            })
            .collect();
        let sizes: Vec<usize> = sorts.iter().map(|s| self.target.carrier_size(s)).collect();

        let ctx = Ctx {
            var_sort: &var_sort,
            sizes: &sizes,
            fn_buckets: &fn_buckets,
            rel_buckets: &rel_buckets,
            forced: &forced,
            fixed: &fixed,
            injective: self.injective,
        };
        // Closed constraints: nullary relations and constants.
        let mut assign = vec![0; n];
        if !ctx.bucket_ok(0, &assign) {
            return;
        }
        let mut used: Vec<Vec<bool>> = sizes.iter().map(|&m| vec![false; m]).collect();
        let mut emit = |assign: &[Elem]| {
            let map = ElementMap(
                sorts
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let start = offsets[i];
                        (s.clone(), assign[start..start + self.source.carrier_size(s)].to_vec())
                    })
                    .collect(),
            );
            visit(&map)
        };
        ctx.go(0, &mut assign, &mut used, &mut emit);
    }

    pub fn all(&self) -> Vec<ElementMap> {
        let mut out = Vec::new();
        self.for_each(&mut |m| {
            out.push(m.clone());
            true
        });
        out
    }

    pub fn count(&self) -> usize {
        let mut n = 0;
        self.for_each(&mut |_| {
            n += 1;
            true
        });
        n
    }

    pub fn first(&self) -> Option<ElementMap> {
        let mut out = None;
        self.for_each(&mut |m| {
            out = Some(m.clone());
            false
        });
        out
    }
}

struct Ctx<'c, 'a> {
    var_sort: &'c [usize],
    sizes: &'c [usize],
    fn_buckets: &'c [Vec<FnCon<'a>>],
    rel_buckets: &'c [Vec<RelCon<'a>>],
    forced: &'c [Option<usize>],
    fixed: &'c [Option<Elem>],
    injective: bool,
}

impl Ctx<'_, '_> {
    fn bucket_ok(&self, depth: usize, assign: &[Elem]) -> bool {
        let image = |args: &[usize]| args.iter().map(|&a| assign[a]).collect::<Vec<_>>();
        self.fn_buckets[depth]
            .iter()
            .all(|c| c.table.get(&image(&c.args)) == Some(&assign[c.out]))
            && self.rel_buckets[depth].iter().all(|c| c.table.contains(&image(&c.args)))
    }

    fn go(&self, k: usize, assign: &mut Vec<Elem>, used: &mut [Vec<bool>], emit: &mut dyn FnMut(&[Elem]) -> bool) -> bool {
        if k == assign.len() {
            return emit(assign);
        }
        let sort = self.var_sort[k];
        let size = self.sizes[sort];
        let candidates = if let Some(idx) = self.forced[k] {
            let c = &self.fn_buckets[k + 1][idx];
            let args: Vec<Elem> = c.args.iter().map(|&a| assign[a]).collect();
            match c.table.get(&args) {
                Some(&v) => v..v + 1,
                None => return true,
            }
        } else {
            0..size
        };
        for v in candidates {
            if self.fixed[k].is_some_and(|f| f != v) || (self.injective && used[sort][v]) {
                continue;
            }
            assign[k] = v;
            if !self.bucket_ok(k + 1, assign) {
                continue;
            }
            if self.injective {
                used[sort][v] = true;
            }
            let cont = self.go(k + 1, assign, used, emit);
            if self.injective {
                used[sort][v] = false;
            }
            if !cont {
                return false;
            }
        }
        true
    }
}

/// All homomorphisms `a → b` in lexicographic order.
pub fn enumerate_homs(a: &PartialStructure, b: &PartialStructure) -> Vec<ElementMap> {
    HomSearch::new(a, b).all()
}

pub fn count_homs(a: &PartialStructure, b: &PartialStructure) -> usize {
    HomSearch::new(a, b).count()
}

pub fn find_hom(a: &PartialStructure, b: &PartialStructure) -> Option<ElementMap> {
    HomSearch::new(a, b).first()
}

/// An isomorphism `a → b`: a bijective homomorphism whose inverse is also a
/// homomorphism.
pub fn iso_check(a: &PartialStructure, b: &PartialStructure) -> Option<ElementMap> {
    if a.signature() != b.signature() || a.carriers() != b.carriers() {
        return None;
    }
    let sig = a.signature();
    if sig.functions().any(|(f, _)| a.function_table(f).len() != b.function_table(f).len())
        || sig.relations().any(|(r, _)| a.relation_table(r).len() != b.relation_table(r).len())
    {
        return None;
    }
    let mut found = None;
    HomSearch::new(a, b).injective(true).for_each(&mut |m| {
        let inv = m.inverse(b).expect("injective by construction");
        if check_hom(b, a, &inv).is_ok() {
            found = Some(m.clone());
            false
        } else {
            true
        }
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn monotone_maps_of_two_chain() {
        let c = corpus::chain(2);
        let homs = enumerate_homs(&c, &c);
        let star = Sort::new("*");
        let maps: Vec<_> = homs.iter().map(|m| m.sort_map(&star).to_vec()).collect();
        assert_eq!(maps, vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn functors_of_three() {
        let t = corpus::three();
        assert_eq!(count_homs(&t, &t), 10);
    }

    #[test]
    fn fixing_restricts() {
        let c = corpus::chain(3);
        let star = Sort::new("*");
        assert_eq!(HomSearch::new(&c, &c).fix(&star, 1, 1).count(), 4);
    }

    #[test]
    fn iso_of_relabelled_chain() {
        let a = corpus::poset(3, &[(2, 1), (1, 0)]);
        let b = corpus::chain(3);
        let iso = iso_check(&a, &b).unwrap();
        assert_eq!(iso.sort_map(&Sort::new("*")), &[2, 1, 0]);
        assert!(iso_check(&corpus::antichain(3), &b).is_none());
    }

    #[test]
    fn bijective_hom_need_not_be_iso() {
        let a = corpus::antichain(2);
        let b = corpus::chain(2);
        assert!(HomSearch::new(&a, &b).injective(true).first().is_some());
        assert!(iso_check(&a, &b).is_none());
    }
}
