use std::collections::BTreeMap;
use std::sync::Arc;

use phl_core::chase::ChaseOutcome;
use phl_core::corpus;
use phl_core::relalg::{
    alg_rho, algebra_coequalizer, check_algebra_hom, check_algebra_of_theory, free_algebra_chain, h_omega, h_omega_map,
    is_relative_algebra, FreeChain, RelAlgError, RelTheoryMorphism, RelativeAlgebra,
};
use phl_core::structure::{count_homs, iso_check, ElementMap, Homomorphism, PartialStructure};
use phl_core::syntax::{parse_term, parse_theory, Context, RelativeTheory, Sort, Variable};

fn star() -> Sort {
    Sort::new("*")
}

fn size(m: &PartialStructure) -> usize {
    m.carrier_size(&star())
}

fn emap(v: Vec<usize>) -> ElementMap {
    ElementMap([(star(), v)].into_iter().collect())
}

fn endo_algebra(base: &PartialStructure, table: &[usize]) -> RelativeAlgebra {
    let ops = table.iter().enumerate().map(|(x, &v)| (vec![x], v)).collect();
    RelativeAlgebra::new(Arc::new(corpus::pos_endo()), base, [("w".to_string(), ops)].into_iter().collect()).unwrap()
}

/// Sets with a marked subset and an operator defined on marked elements.
fn marked() -> Arc<RelativeTheory> {
    let src = "theory marked\n sorts *\n relations\n red : *\n operators\n m : [x:* | red(x)] -> *\nend\n";
    Arc::new(parse_theory(src).unwrap().relative())
}

fn marked_set(n: usize, red: &[usize]) -> PartialStructure {
    let mut m = PartialStructure::empty(marked().base.signature.clone());
    m.set_carrier(&star(), n);
    for &r in red {
        m.insert_relation("red", vec![r]);
    }
    m
}

#[test]
fn h_omega_examples() {
    let c2 = corpus::chain(2);
    let h = h_omega(&corpus::pos_endo(), &c2, 100).unwrap();
    let sat = h.saturated().unwrap();
    assert!(iso_check(&sat.model, &corpus::antichain(2)).is_some());

    let h = h_omega(&RelativeTheory::trivial(corpus::pos()), &c2, 100).unwrap();
    assert_eq!(size(&h.saturated().unwrap().model), 0);

    let h = h_omega(&corpus::possub(), &c2, 100).unwrap();
    let tuples: Vec<_> = h.generators.iter().map(|(_, t)| t.clone()).collect();
    assert_eq!(tuples, vec![vec![0, 0], vec![1, 0], vec![1, 1]]);
    assert!(iso_check(&h.saturated().unwrap().model, &corpus::antichain(3)).is_some());
}

#[test]
fn h_omega_is_functorial() {
    let rt = corpus::possub();
    let c = |n| Arc::new(corpus::chain(n));
    let f = Homomorphism::new(c(1), c(2), emap(vec![1])).unwrap();
    let g = Homomorphism::new(c(2), c(3), emap(vec![0, 2])).unwrap();
    let gf = f.then(&g).unwrap();
    let hs: Vec<_> = [1, 2, 3].iter().map(|&n| h_omega(&rt, &corpus::chain(n), 100).unwrap()).collect();
    let hf = h_omega_map(&rt, &f, &hs[0], &hs[1]).unwrap();
    let hg = h_omega_map(&rt, &g, &hs[1], &hs[2]).unwrap();
    let hgf = h_omega_map(&rt, &gf, &hs[0], &hs[2]).unwrap();
    assert_eq!(hf.then(&hg).unwrap().map(), hgf.map());
    let id = Homomorphism::identity(c(2));
    assert_eq!(h_omega_map(&rt, &id, &hs[1], &hs[1]).unwrap().map(), &ElementMap::identity(&hs[1].saturated().unwrap().model));
}

#[test]
fn empty_signature_of_operators_stabilizes_at_once() {
    let rt = Arc::new(RelativeTheory::trivial(corpus::pos()));
    for x in [corpus::chain(3), corpus::antichain(2)] {
        match free_algebra_chain(&rt, &x, 4, 500).unwrap() {
            FreeChain::Stabilized { algebra, stage, insertion, .. } => {
                assert_eq!(stage, 1);
                assert_eq!(algebra.underlying(), x);
                assert!(insertion.is_injective() && insertion.is_surjective());
            }
            other => panic!("expected stabilization, got {other:?}"),
        }
    }
}

#[test]
fn total_unary_operator_grows_forever() {
    let rt = Arc::new(corpus::pos_endo());
    match free_algebra_chain(&rt, &corpus::chain(1), 4, 500).unwrap() {
        FreeChain::Unstabilized { sizes } => assert_eq!(sizes, vec![1, 2, 3, 4]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn diagonal_arity_grows_forever() {
    let src = "theory diag\n sorts *\n relations\n leq : * * *\n axioms\n top |- [x:*] leq(x, x)\n \
               leq(x, y) & leq(y, x) |- [x:*, y:*] x = y\n leq(x, y) & leq(y, z) |- [x:*, y:*, z:*] leq(x, z)\n \
               operators\n p : [x:*, y:* | leq(x, y) & leq(y, x)] -> *\nend\n";
    let rt = Arc::new(parse_theory(src).unwrap().relative());
    match free_algebra_chain(&rt, &corpus::antichain(2), 4, 500).unwrap() {
        FreeChain::Unstabilized { sizes } => assert_eq!(sizes, vec![2, 4, 6, 8]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn judgments_are_refused() {
    assert_eq!(
        free_algebra_chain(&Arc::new(corpus::possub()), &corpus::chain(1), 3, 100).unwrap_err(),
        RelAlgError::JudgmentsPresent
    );
}

/// Every `marked` algebra with at most `n` elements.
fn marked_algebras(n: usize) -> Vec<RelativeAlgebra> {
    let mut out = Vec::new();
    for size in 1..=n {
        for mask in 0..(1usize << size) {
            let red: Vec<usize> = (0..size).filter(|i| mask & (1 << i) != 0).collect();
            let base = marked_set(size, &red);
            let mut tables = vec![Vec::new()];
            for &r in &red {
                tables = tables
                    .into_iter()
                    .flat_map(|t: Vec<(Vec<usize>, usize)>| {
                        (0..size).map(move |v| {
                            let mut t = t.clone();
                            t.push((vec![r], v));
                            t
                        })
                    })
                    .collect();
            }
            for t in tables {
                out.push(RelativeAlgebra::new(marked(), &base, [("m".to_string(), t)].into_iter().collect()).unwrap());
            }
        }
    }
    out
}

#[test]
fn marked_point_stabilizes_with_the_unit_property() {
    let rt = marked();
    let x = marked_set(1, &[0]);
    let FreeChain::Stabilized {
        algebra,
        insertion,
        stage,
        sizes,
    } = free_algebra_chain(&rt, &x, 5, 500).unwrap()
    else {
        panic!("expected stabilization");
    };
    assert_eq!(stage, 2);
    assert_eq!(sizes, vec![1, 2, 2]);
    assert!(is_relative_algebra(&algebra).is_valid());
    assert_eq!(algebra.op_table("m").len(), 1);
    assert_eq!(insertion.source().as_ref(), &x);

    for b in marked_algebras(3) {
        assert!(is_relative_algebra(&b).is_valid());
        let alg_homs = count_homs(algebra.as_structure(), b.as_structure());
        assert_eq!(alg_homs, count_homs(&x, &b.underlying()));
    }
}

#[test]
fn alg_rho_identity_and_iteration() {
    let rt = Arc::new(corpus::pos_endo());
    let b = endo_algebra(&corpus::chain(3), &[1, 2, 0]);
    let id = RelTheoryMorphism::identity(rt.clone());
    assert_eq!(alg_rho(&id, &b, 100).unwrap(), b);

    let ctx = Context::new(vec![Variable::new("x", "*")]).unwrap();
    let sig = rt.extended_signature().unwrap();
    let twice = parse_term(&sig, &ctx, "w(w(x))").unwrap();
    let rho = RelTheoryMorphism::new(rt.clone(), rt, [("w".to_string(), twice)].into_iter().collect()).unwrap();
    let a = alg_rho(&rho, &b, 100).unwrap();
    let table: Vec<_> = a.op_table("w").values().copied().collect();
    assert_eq!(table, vec![2, 0, 1]);
    assert_eq!(a.underlying(), b.underlying());
}

fn rich_window() -> RelativeAlgebra {
    let (base, sub) = corpus::n_window_subtraction();
    let keep: Vec<_> = (0..4).flat_map(|x| (0..4).map(move |y| (vec![x, y], x))).collect();
    RelativeAlgebra::new(
        Arc::new(corpus::possub_rich()),
        &base,
        [("sub".to_string(), sub), ("keep".to_string(), keep)].into_iter().collect(),
    )
    .unwrap()
}

#[test]
fn alg_rho_through_a_richer_theory() {
    let b = rich_window();
    assert_eq!(check_algebra_of_theory(&b), Ok(()));
    let src = Arc::new(corpus::possub());
    let tgt = b.theory().clone();
    let ctx = src.operators[0].arity.context.clone();
    let term = parse_term(&tgt.extended_signature().unwrap(), &ctx, "keep(sub(x, y), y)").unwrap();
    let rho = RelTheoryMorphism::new(src.clone(), tgt.clone(), [("-".to_string(), term)].into_iter().collect()).unwrap();
    let a = alg_rho(&rho, &b, 300).unwrap();
    let (base, ops) = corpus::n_window_subtraction();
    let direct = RelativeAlgebra::new(src.clone(), &base, [("-".to_string(), ops)].into_iter().collect()).unwrap();
    assert_eq!(a, direct);

    let flipped = parse_term(&tgt.extended_signature().unwrap(), &ctx, "sub(y, x)").unwrap();
    let bad = RelTheoryMorphism::new(src, tgt, [("-".to_string(), flipped)].into_iter().collect()).unwrap();
    assert!(alg_rho(&bad, &b, 300).is_err());
}

#[test]
fn morphism_assignment_is_type_checked() {
    let rt = Arc::new(corpus::pos_endo());
    assert!(RelTheoryMorphism::new(rt.clone(), rt, BTreeMap::new()).is_err());
}

/// `a < b < c` and `d`, with `ω` fixing `a, c, d` and sending `b` to `d`,
/// and the coproduct of the one-point algebra with it.
fn sifted_example() -> (RelativeAlgebra, RelativeAlgebra) {
    let x = endo_algebra(&corpus::poset(4, &[(0, 1), (1, 2)]), &[0, 3, 2, 3]);
    let one_plus_x = endo_algebra(&corpus::poset(5, &[(0, 1), (1, 2)]), &[0, 3, 2, 3, 4]);
    (x, one_plus_x)
}

#[test]
fn coequalizer_in_algebras_differs_from_posets() {
    let (x, src) = sifted_example();
    assert!(is_relative_algebra(&x).is_valid() && is_relative_algebra(&src).is_valid());
    let to_c = emap(vec![0, 1, 2, 3, 2]);
    let to_a = emap(vec![0, 1, 2, 3, 0]);
    check_algebra_hom(&src, &x, &to_c).unwrap();
    check_algebra_hom(&src, &x, &to_a).unwrap();

    let with_ops = algebra_coequalizer(&x, &to_c, &to_a, 200).unwrap();
    assert_eq!(size(&with_ops.saturated().unwrap().model), 1);

    let plain = Arc::new(RelativeTheory::trivial(corpus::pos()));
    let x_pos = RelativeAlgebra::trivial(plain, &x.underlying()).unwrap();
    let without = algebra_coequalizer(&x_pos, &to_c, &to_a, 200).unwrap();
    assert_eq!(size(&without.saturated().unwrap().model), 2);

    let nothing = algebra_coequalizer(&x, &emap(vec![0, 1, 2, 3]), &emap(vec![0, 1, 2, 3]), 200).unwrap();
    match nothing {
        ChaseOutcome::Saturated(s) => assert!(iso_check(&s.model, x.as_structure()).is_some()),
        ChaseOutcome::BudgetExceeded(_) => panic!("diagram of a model saturates"),
    }
}
