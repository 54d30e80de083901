use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use phl_core::corpus;
use phl_core::structure::{
    check_hom, check_sequent, closed_submodel_generated, count_homs, enumerate_homs, factorize_dense_closed, image,
    interpret_formula, interpret_term, is_closed_mono, is_dense, is_model, iso_check, product, terminal, ElementMap,
    Homomorphism, ModelCheck, PartialStructure, SequentCheck,
};
use phl_core::syntax::{parse_context, parse_formula_in_context, parse_sequent, parse_term, parse_theory, Signature, Sort, Theory};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn terms_in_three_are_strict() {
    let three = corpus::three();
    let sig = corpus::cat().signature;
    let ctx = parse_context(&sig, "[g:mor, f:mor]").unwrap();
    let comp = parse_term(&sig, &ctx, "g.f").unwrap();
    let dom = parse_term(&sig, &ctx, "d(g.f)").unwrap();
    // g and f of the picture are ids 4 and 3; their composite is 5.
    assert_eq!(interpret_term(&three, &ctx, &comp, &[4, 3]), Some(5));
    assert_eq!(interpret_term(&three, &ctx, &dom, &[4, 3]), Some(0));
    assert_eq!(interpret_term(&three, &ctx, &comp, &[3, 4]), None);
    assert_eq!(interpret_term(&three, &ctx, &dom, &[3, 4]), None);
}

#[test]
fn formula_extents() {
    let pos = corpus::pos();
    let phi = parse_formula_in_context(&pos.signature, "[x:*, y:*] leq(y, x)").unwrap();
    assert_eq!(interpret_formula(&corpus::chain(2), &phi), vec![vec![0, 0], vec![1, 0], vec![1, 1]]);
    let top = parse_formula_in_context(&pos.signature, "[x:*] top").unwrap();
    assert_eq!(interpret_formula(&corpus::antichain(3), &top).len(), 3);

    let cat = corpus::cat();
    let pairs = parse_formula_in_context(&cat.signature, "[g:mor, f:mor] d(g) = c(f)").unwrap();
    assert_eq!(interpret_formula(&corpus::three(), &pairs).len(), 10);
    let defined = parse_formula_in_context(&cat.signature, "[g:mor, f:mor] (g.f)!").unwrap();
    assert_eq!(interpret_formula(&corpus::three(), &defined), interpret_formula(&corpus::three(), &pairs));
}

#[test]
fn sequents_and_models() {
    let pos = corpus::pos();
    let antisym = parse_sequent(&pos.signature, "leq(x, y) & leq(y, x) |- [x:*, y:*] x = y").unwrap();
    assert_eq!(check_sequent(&corpus::two_cycle(), &antisym), SequentCheck::Violated(vec![0, 1]));
    assert!(check_sequent(&corpus::chain(3), &antisym).is_valid());
    assert_eq!(
        is_model(&corpus::two_cycle(), &pos).unwrap(),
        ModelCheck::Fails {
            axiom: 1,
            witness: vec![0, 1]
        }
    );
    assert!(is_model(&corpus::chain(3), &pos).unwrap().is_model());
    assert!(is_model(&corpus::three(), &corpus::cat()).unwrap().is_model());
    assert!(is_model(&corpus::chain(2), &corpus::cat()).is_err());
}

#[test]
fn hom_counts() {
    assert_eq!(count_homs(&corpus::chain(2), &corpus::chain(2)), 3);
    let pos = corpus::pos();
    assert_eq!(count_homs(&corpus::chain(3), &terminal(&pos.signature)), 1);
    assert_eq!(count_homs(&corpus::three(), &corpus::three()), 10);
}

#[test]
fn product_of_two_chains_is_the_diamond() {
    let pos = corpus::pos();
    let c = corpus::chain(2);
    let p = product(&pos.signature, &[&c, &c]);
    assert_eq!(p.structure.relation_table("leq").len(), 9);
    let diamond = corpus::poset(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
    assert!(iso_check(&p.structure, &diamond).is_some());
    assert!(is_model(&p.structure, &pos).unwrap().is_model());
}

#[test]
fn generated_submodel_of_three() {
    let three = Arc::new(corpus::three());
    let mor = Sort::new("mor");
    let seed = [(mor.clone(), [3, 4].into_iter().collect())].into_iter().collect();
    let (sub, inc) = closed_submodel_generated(&three, &seed);
    // d, c and id reach every object and identity, composition reaches g.f.
    assert_eq!(sub.carriers(), three.carriers());
    assert!(inc.is_surjective());
}

// Random structures.

/// One sort, a constant, a unary and a binary function and a binary
/// relation.
fn small_signature() -> Signature {
    parse_theory("theory small\n sorts *\n functions\n c : -> *\n f : * -> *\n g : * * * -> *\n relations\n r : * * *\nend\n")
        .unwrap()
        .theory()
        .signature
}

fn small_theory() -> Theory {
    parse_theory(
        "theory small\n sorts *\n functions\n c : -> *\n f : * -> *\n g : * * * -> *\n relations\n r : * * *\n axioms\n \
         top |- [x:*] r(x, x)\n f(x) = y |- [x:*, y:*] r(x, y)\n r(x, y) |- [x:*, y:*] g(x, y)!\nend\n",
    )
    .unwrap()
    .theory()
}

const SMALL_FORMULAS: [&str; 7] = [
    "[x:*] f(x)!",
    "[] c!",
    "[x:*, y:*] g(x, y) = f(y)",
    "[x:*, y:*] r(x, y) & r(y, x)",
    "[x:*] r(f(x), c)",
    "[x:*, y:*] g(x, x) = y & f(y)!",
    "[x:*, y:*, z:*] r(x, y) & r(y, z) & g(x, z) = c",
];

fn tuples(sorts: &[Sort], m: &PartialStructure) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for s in sorts {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..m.carrier_size(s)).map(move |e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// Carriers of at most `max` elements per sort, each function entry present
/// with probability `p_def`, each relation tuple with probability `p_rel`.
fn random_structure(rng: &mut ChaCha8Rng, sig: &Signature, max: usize, p_def: f64, p_rel: f64) -> PartialStructure {
    let mut m = PartialStructure::empty(sig.clone());
    for s in sig.sorts() {
        m.set_carrier(s, rng.gen_range(0..=max));
    }
    for (f, decl) in sig.functions() {
        let n = m.carrier_size(&decl.result);
        for args in tuples(&decl.args, &m) {
            if n > 0 && rng.gen_bool(p_def) {
                let v = rng.gen_range(0..n);
                m.insert_function(f, args, v);
            }
        }
    }
    for (r, decl) in sig.relations() {
        for args in tuples(&decl.args, &m) {
            if rng.gen_bool(p_rel) {
                m.insert_relation(r, args);
            }
        }
    }
    m
}

/// A poset on at most `max` points, ordered compatibly with the labels.
fn random_poset(rng: &mut ChaCha8Rng, max: usize) -> PartialStructure {
    let n = rng.gen_range(1..=max);
    let le: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|_| rng.gen_bool(0.4)).collect();
    corpus::poset(n, &le)
}

fn random_quiver(rng: &mut ChaCha8Rng, max: usize) -> PartialStructure {
    let sig = corpus::quiv().signature;
    let (e, v) = (Sort::new("e"), Sort::new("v"));
    let mut m = PartialStructure::empty(sig);
    let nv = rng.gen_range(1..=max.min(3));
    let ne = rng.gen_range(0..=max - nv.min(max));
    m.set_carrier(&v, nv);
    m.set_carrier(&e, ne);
    for k in 0..ne {
        m.insert_function("s", vec![k], rng.gen_range(0..nv));
        m.insert_function("t", vec![k], rng.gen_range(0..nv));
    }
    m
}

/// Every map between the carriers, filtered by the homomorphism condition.
fn brute_force_homs(a: &PartialStructure, b: &PartialStructure) -> BTreeSet<ElementMap> {
    let sorts = a.signature().sorts().to_vec();
    let mut maps = vec![BTreeMap::new()];
    for s in &sorts {
        let (n, k) = (a.carrier_size(s), b.carrier_size(s));
        let mut next = Vec::new();
        for m in &maps {
            for code in 0..k.pow(n as u32) {
                if k == 0 && n > 0 {
                    break;
                }
                let v: Vec<usize> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
                let mut m: BTreeMap<Sort, Vec<usize>> = m.clone();
                m.insert(s.clone(), v);
                next.push(m);
            }
        }
        maps = next;
    }
    maps.into_iter().map(ElementMap).filter(|m| check_hom(a, b, m).is_ok()).collect()
}

fn hom(a: &PartialStructure, b: &PartialStructure, map: ElementMap) -> Homomorphism {
    Homomorphism::new(Arc::new(a.clone()), Arc::new(b.clone()), map).unwrap()
}

/// Checks that `fact` is the only dense/closed factorization of `h`, by
/// listing every function-closed subset of the target above the image.
fn check_factorization(h: &Homomorphism) -> Result<(), TestCaseError> {
    let fact = factorize_dense_closed(h);
    let composite = fact.e.then(&fact.m).unwrap();
    prop_assert_eq!(composite.map(), h.map());
    prop_assert!(is_dense(&fact.e));
    prop_assert!(is_closed_mono(&fact.m).unwrap().is_closed());

    let b = h.target();
    let elems: Vec<(Sort, usize)> = b.elements().map(|(s, e)| (s.clone(), e)).collect();
    prop_assert!(elems.len() <= 12);
    let img = image(h);
    let mut middles = Vec::new();
    for mask in 0u32..(1 << elems.len()) {
        let mut subset: BTreeMap<Sort, BTreeSet<usize>> = b.signature().sorts().iter().map(|s| (s.clone(), BTreeSet::new())).collect();
        for (i, (s, e)) in elems.iter().enumerate() {
            if mask & (1 << i) != 0 {
                subset.get_mut(s).unwrap().insert(*e);
            }
        }
        if img.iter().any(|(s, xs)| !xs.is_subset(&subset[s])) {
            continue;
        }
        let (sub, inc) = closed_submodel_generated(b, &subset);
        if image(&inc) != subset {
            continue;
        }
        prop_assert!(is_closed_mono(&inc).unwrap().is_closed());
        let back = inc.map().inverse(b).unwrap();
        let e = Homomorphism::new(h.source().clone(), sub.clone(), h.map().then(&back)).unwrap();
        if is_dense(&e) {
            middles.push((subset, sub));
        }
    }
    prop_assert_eq!(middles.len(), 1);
    prop_assert_eq!(&middles[0].0, &image(&fact.m));
    prop_assert!(iso_check(&middles[0].1, fact.middle()).is_some());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn enumeration_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sig = if rng.gen_bool(0.5) { small_signature() } else { corpus::cat().signature };
        let a = random_structure(&mut rng, &sig, 2, 0.4, 0.3);
        let b = random_structure(&mut rng, &sig, 3, 0.7, 0.6);
        let listed: Vec<ElementMap> = enumerate_homs(&a, &b);
        let set: BTreeSet<ElementMap> = listed.iter().cloned().collect();
        prop_assert_eq!(set.len(), listed.len());
        prop_assert_eq!(&set, &brute_force_homs(&a, &b));
        prop_assert_eq!(count_homs(&a, &b), listed.len());
    }

    #[test]
    fn homomorphisms_preserve_horn_formulas(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sig = small_signature();
        let a = random_structure(&mut rng, &sig, 3, 0.6, 0.4);
        let b = random_structure(&mut rng, &sig, 3, 0.8, 0.7);
        let star = Sort::new("*");
        for src in SMALL_FORMULAS {
            let phi = parse_formula_in_context(&sig, src).unwrap();
            let sorts: Vec<Sort> = phi.context.vars().iter().map(|v| v.sort.clone()).collect();
            let target: BTreeSet<Vec<usize>> = interpret_formula(&b, &phi).into_iter().collect();
            for map in enumerate_homs(&a, &b) {
                for t in interpret_formula(&a, &phi) {
                    prop_assert!(target.contains(&map.apply_tuple(&sorts, &t)), "{} at {:?}", src, t);
                }
            }
        }
        let ctx = parse_context(&sig, "[x:*, y:*]").unwrap();
        let term = parse_term(&sig, &ctx, "g(f(x), g(y, c))").unwrap();
        for map in enumerate_homs(&a, &b) {
            for t in tuples(&[star.clone(), star.clone()], &a) {
                if let Some(v) = interpret_term(&a, &ctx, &term, &t) {
                    let image = map.apply_tuple(&[star.clone(), star.clone()], &t);
                    prop_assert_eq!(interpret_term(&b, &ctx, &term, &image), Some(map.get(&star, v)));
                }
            }
        }
    }

    #[test]
    fn composites_of_homomorphisms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sig = small_signature();
        let a = random_structure(&mut rng, &sig, 2, 0.4, 0.3);
        let b = random_structure(&mut rng, &sig, 3, 0.7, 0.6);
        let c = random_structure(&mut rng, &sig, 3, 0.9, 0.8);
        let (a, b, c) = (Arc::new(a), Arc::new(b), Arc::new(c));
        for u in enumerate_homs(&a, &b).into_iter().take(20) {
            let u = Homomorphism::new(a.clone(), b.clone(), u).unwrap();
            let left = Homomorphism::identity(a.clone()).then(&u).unwrap();
            let right = u.then(&Homomorphism::identity(b.clone())).unwrap();
            prop_assert_eq!(left.map(), u.map());
            prop_assert_eq!(right.map(), u.map());
            for v in enumerate_homs(&b, &c).into_iter().take(20) {
                let v = Homomorphism::new(b.clone(), c.clone(), v).unwrap();
                let vu = u.then(&v).unwrap();
                prop_assert!(check_hom(&a, &c, vu.map()).is_ok());
            }
        }
    }

    #[test]
    fn binary_products_are_products(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sig = small_signature();
        let a = random_structure(&mut rng, &sig, 2, 0.7, 0.6);
        let b = random_structure(&mut rng, &sig, 2, 0.7, 0.6);
        let x = random_structure(&mut rng, &sig, 2, 0.3, 0.3);
        let p = product(&sig, &[&a, &b]);
        prop_assert_eq!(p.projections.len(), 2);
        for (pr, factor) in p.projections.iter().zip([&a, &b]) {
            prop_assert!(check_hom(&p.structure, factor, pr.map()).is_ok());
        }
        prop_assert_eq!(count_homs(&x, &p.structure), count_homs(&x, &a) * count_homs(&x, &b));
        // A map into the product is determined by its two components.
        for u in enumerate_homs(&x, &p.structure) {
            let parts: Vec<ElementMap> = p.projections.iter().map(|pr| u.then(pr.map())).collect();
            prop_assert!(check_hom(&x, &a, &parts[0]).is_ok() && check_hom(&x, &b, &parts[1]).is_ok());
        }
        let t = small_theory();
        if is_model(&a, &t).unwrap().is_model() && is_model(&b, &t).unwrap().is_model() {
            prop_assert!(is_model(&p.structure, &t).unwrap().is_model());
        }
        let one = terminal(&sig);
        prop_assert!(iso_check(&product(&sig, &[&a, &one]).structure, &a).is_some());
    }

    #[test]
    fn products_of_posets_are_posets(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = corpus::pos();
        let a = random_poset(&mut rng, 3);
        let b = random_poset(&mut rng, 3);
        prop_assert!(is_model(&a, &pos).unwrap().is_model());
        prop_assert!(is_model(&product(&pos.signature, &[&a, &b]).structure, &pos).unwrap().is_model());
    }

    #[test]
    fn factorizations_are_unique(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = match rng.gen_range(0..3) {
            0 => (random_poset(&mut rng, 4), random_poset(&mut rng, 4)),
            1 => (random_quiver(&mut rng, 3), random_quiver(&mut rng, 4)),
            _ => {
                let sig = small_signature();
                (random_structure(&mut rng, &sig, 2, 0.3, 0.3), random_structure(&mut rng, &sig, 4, 0.6, 0.5))
            }
        };
        let homs = enumerate_homs(&a, &b);
        if !homs.is_empty() {
            let pick = homs[rng.gen_range(0..homs.len())].clone();
            check_factorization(&hom(&a, &b, pick))?;
        }
    }
}
