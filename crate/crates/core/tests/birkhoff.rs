use std::sync::Arc;

use phl_core::birkhoff::{
    audit, check_chain_colimits, check_closed_subobjects, check_products, check_u_retracts, closed_subobjects,
    orthogonality_check, Annotation, AuditBounds, Construction, Membership, ModelFamily, RetractMode, Verdict,
};
use phl_core::colimit::Diagram;
use phl_core::corpus;
use phl_core::relalg::RelativeAlgebra;
use phl_core::structure::{check_sequent, is_closed_mono, is_model, iso_check, ElementMap, Homomorphism, PartialStructure};
use phl_core::syntax::{parse_sequent, parse_theory, Sequent, Sort, Theory};

fn symmetry() -> Sequent {
    parse_sequent(&corpus::pos().signature, "leq(x, y) |- [x:*, y:*] leq(y, x)").unwrap()
}

/// Every poset on `0..n` for `n ≤ max`, as listed by brute force over
/// reflexive relations.
fn posets(max: usize) -> Vec<PartialStructure> {
    let pos = corpus::pos();
    let mut out = Vec::new();
    for n in 0..=max {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let le: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| *p).collect();
            let mut m = PartialStructure::empty(pos.signature.clone());
            m.set_carrier(&Sort::new("*"), n);
            for a in 0..n {
                m.insert_relation("leq", vec![a, a]);
            }
            for (a, b) in le {
                m.insert_relation("leq", vec![a, b]);
            }
            if is_model(&m, &pos).unwrap().is_model() {
                out.push(m);
            }
        }
    }
    out
}

fn discrete_family() -> ModelFamily {
    let members = (0..=3).map(corpus::antichain).collect();
    ModelFamily::new(Arc::new(corpus::pos()), members, Membership::Intensional(vec![symmetry()])).unwrap()
}

#[test]
fn poset_enumeration_matches_known_counts() {
    let counts: Vec<usize> = (0..=3).map(|n| posets(3).iter().filter(|p| p.total_size() == n).count()).collect();
    // Labelled posets on 0, 1, 2 and 3 points.
    assert_eq!(counts, vec![1, 1, 3, 19]);
}

#[test]
fn discrete_posets_pass_every_audit() {
    let fam = discrete_family();
    let bounds = AuditBounds {
        max_arity: 2,
        max_sub: 3,
        max_chain: 3,
        retract_mode: RetractMode::BaseHom,
    };
    for r in audit(&fam, &posets(3), &bounds) {
        assert!(r.is_closed(), "{:?}", r);
        assert!(r.examined > 0, "{:?}", r.condition);
    }
}

#[test]
fn total_orders_fail_products_with_the_diamond() {
    let members = (1..=3).map(corpus::chain).collect();
    let fam = ModelFamily::new(Arc::new(corpus::pos()), members, Membership::Extensional).unwrap();
    let r = check_products(&fam, 2);
    let w = r.witness().expect("counterexample");
    assert_eq!(w.construction, Construction::Product { factors: vec![1, 1] });
    let diamond = corpus::poset(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
    assert!(iso_check(&w.structure, &diamond).is_some());
    assert!(matches!(
        r.verdict,
        Verdict::Counterexample {
            annotation: Annotation::ClosureFailure,
            ..
        }
    ));
    assert!(r.revalidate(&fam));
}

/// Unit laws only: windows of ℤ are not closed under addition, so the
/// monoid axioms with total multiplication do not hold in them.
fn window_theory(inverse: bool) -> Theory {
    let inv = if inverse {
        "    inv : * -> *\n  axioms\n    inv(x)! |- [x:*] inv(x).x = e & x.inv(x) = e\n    \
         y.x = e & x.y = e |- [x:*, y:*] inv(x) = y\n"
    } else {
        "  axioms\n"
    };
    let src = format!(
        "theory window\n  sorts *\n  functions\n    e : -> *\n    . : * * * -> *\n{inv}    top |- [] e!\n    \
         top |- [x:*] x.e = x & e.x = x\nend\n"
    );
    parse_theory(&src).unwrap().theory()
}

#[test]
fn window_subobjects_depend_on_the_signature() {
    // With the inverse in the signature, the closed subobjects of the window
    // are the inverse-closed ones, so totality of the inverse survives.
    let with_inv = window_theory(true);
    assert_eq!(with_inv.signature, corpus::mon_inv().signature);
    let inv_total = parse_sequent(&with_inv.signature, "top |- [x:*] inv(x)!").unwrap();
    let fam = ModelFamily::new(Arc::new(with_inv), vec![corpus::z_window_inv()], Membership::Intensional(vec![inv_total])).unwrap();
    let r = check_closed_subobjects(&fam, 8);
    assert!(r.is_closed());
    // {0}, {-2, 0, 2}, {-3, 0, 3} and the whole window.
    assert_eq!(r.examined, 4);

    // Without it the non-negative half is a closed submonoid that is not in
    // the family.
    let plain = window_theory(false);
    assert_eq!(plain.signature, corpus::mon().signature);
    let fam = ModelFamily::new(Arc::new(plain), vec![corpus::z_window()], Membership::Extensional).unwrap();
    let r = check_closed_subobjects(&fam, 8);
    assert!(!r.is_closed());
    assert!(r.revalidate(&fam));
    let z = Arc::new(corpus::z_window());
    let n = closed_subobjects(&z, 8)
        .into_iter()
        .find(|inc| iso_check(inc.source(), &corpus::n_window()).is_some())
        .expect("the non-negative half is closed under addition");
    assert!(is_closed_mono(&n).unwrap().is_closed());
    assert!(is_model(n.source(), fam.theory()).unwrap().is_model());
    assert!(!fam.contains(n.source()));
}

#[test]
fn identity_inclusions_are_never_counterexamples() {
    let fam = discrete_family();
    for m in fam.members() {
        let all = closed_subobjects(m, 8);
        assert!(all.iter().any(|inc| inc.map() == &ElementMap::identity(m)));
    }
    let own: Vec<PartialStructure> = fam.members().iter().map(|m| (**m).clone()).collect();
    assert!(check_u_retracts(&fam, &own, RetractMode::Carrier).is_closed());
}

#[test]
fn retracts_depend_on_the_kind_of_section() {
    let fam = discrete_family();
    let candidates = vec![corpus::chain(2)];
    assert!(check_u_retracts(&fam, &candidates, RetractMode::BaseHom).is_closed());
    let r = check_u_retracts(&fam, &candidates, RetractMode::Carrier);
    match &r.witness().unwrap().construction {
        Construction::URetract { member, map, .. } => {
            assert_eq!(*member, 2);
            assert_eq!(map.sort_map(&Sort::new("*")), &[0, 1]);
        }
        other => panic!("{other:?}"),
    }
    assert!(r.revalidate(&fam));
}

#[test]
fn all_posets_are_closed_under_retracts_vacuously() {
    let fam = ModelFamily::new(Arc::new(corpus::pos()), posets(3), Membership::Extensional).unwrap();
    let r = check_u_retracts(&fam, &posets(3), RetractMode::Carrier);
    assert!(r.is_closed());
    assert_eq!(r.examined, 0);
}

#[test]
fn constant_chains_give_members() {
    let fam = ModelFamily::new(Arc::new(corpus::pos()), vec![corpus::chain(1), corpus::chain(2)], Membership::Extensional).unwrap();
    assert!(check_chain_colimits(&fam, &[], 3).is_closed());
    // Without the point, the chain along a constant endomorphism leaves the
    // family.
    let fam = ModelFamily::new(Arc::new(corpus::pos()), vec![corpus::chain(2)], Membership::Extensional).unwrap();
    let r = check_chain_colimits(&fam, &[], 3);
    assert!(matches!(r.witness().unwrap().construction, Construction::Endo { member: 0, .. }));
    assert!(r.revalidate(&fam));
}

#[test]
fn growing_chain_leaves_a_short_list() {
    let members: Vec<_> = (1..=3).map(corpus::chain).collect();
    let fam = ModelFamily::new(Arc::new(corpus::pos()), members, Membership::Extensional).unwrap();
    let star = Sort::new("*");
    let stages: Vec<_> = (1..=4).map(|n| Arc::new(corpus::chain(n))).collect();
    let steps = stages
        .windows(2)
        .map(|w| {
            let image = (0..w[0].carrier_size(&star)).collect();
            Homomorphism::new(w[0].clone(), w[1].clone(), ElementMap([(star.clone(), image)].into_iter().collect())).unwrap()
        })
        .collect();
    let d = Diagram::chain(stages, steps).unwrap();
    let r = check_chain_colimits(&fam, &[d], 2);
    match &r.verdict {
        Verdict::Counterexample { witness, annotation } => {
            assert_eq!(*annotation, Annotation::ListIncompleteness);
            assert!(iso_check(&witness.structure, &corpus::chain(4)).is_some());
        }
        Verdict::Closed => panic!("chain of length 4 is not listed"),
    }
    assert!(r.revalidate(&fam));
}

#[test]
fn definable_algebra_family_is_closed() {
    // Inflationary endomaps of posets with at most two points.
    let rt = corpus::pos_endo();
    let inflationary = parse_sequent(&rt.expand().signature, "top |- [x:*] leq(x, w(x))").unwrap();
    let mut algebras = Vec::new();
    for base in posets(2) {
        let n = base.total_size();
        for code in 0..n.pow(n as u32) {
            let table: Vec<(Vec<usize>, usize)> = (0..n).map(|x| (vec![x], code / n.pow(x as u32) % n)).collect();
            let a = RelativeAlgebra::new(Arc::new(rt.clone()), &base, [("w".to_string(), table)].into_iter().collect()).unwrap();
            if check_sequent(a.as_structure(), &inflationary).is_valid() {
                algebras.push(a);
            }
        }
    }
    let candidates: Vec<PartialStructure> = algebras.iter().map(|a| a.as_structure().clone()).collect();
    let fam = ModelFamily::of_algebras(&rt, &algebras, Membership::Intensional(vec![inflationary])).unwrap();
    for r in audit(&fam, &candidates, &AuditBounds::default()) {
        assert!(r.is_closed(), "{:?}", r);
    }
}

#[test]
fn orthogonality_agrees_with_validity_on_small_cases() {
    let pos = corpus::pos();
    let sequents = [
        "top |- [x:*] leq(x, x)",
        "leq(x, y) |- [x:*, y:*] leq(y, x)",
        "leq(x, y) & leq(y, x) |- [x:*, y:*] x = y",
        "top |- [x:*, y:*] leq(x, y)",
        "leq(x, y) & leq(x, z) |- [x:*, y:*, z:*] leq(y, z)",
        "leq(y, x) & leq(z, x) |- [x:*, y:*, z:*] y = z",
    ];
    for src in sequents {
        let s = parse_sequent(&pos.signature, src).unwrap();
        for m in posets(3) {
            assert_eq!(
                orthogonality_check(&m, &s, &pos, 200).unwrap(),
                check_sequent(&m, &s).is_valid(),
                "{src} on {m:?}"
            );
        }
    }
}
