use std::collections::BTreeMap;
use std::sync::Arc;

use phl_core::chase::{
    chase, chase_with, free_model, is_phl_theorem, morphism_from_terms, representing_model, AgendaOrder, ChaseError,
    ChaseOptions, ChaseOutcome, Derivability, Presentation,
};
use phl_core::corpus;
use phl_core::structure::{count_homs, interpret_formula, is_model, iso_check, ModelCheck};
use phl_core::syntax::{
    parse_formula_in_context, parse_sequent, parse_terms, parse_theory, Signature, Sort, Theory, TheoryMorphismData,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn star() -> Sort {
    Sort::new("*")
}

fn fic(t: &Theory, src: &str) -> phl_core::syntax::FormulaInContext {
    parse_formula_in_context(&t.signature, src).unwrap()
}

#[test]
fn three_from_composable_pair() {
    let cat = corpus::cat();
    let out = representing_model(&fic(&cat, "[g:mor, f:mor] d(g) = c(f)"), &cat, 500).unwrap();
    let sat = out.saturated().expect("saturates");
    assert_eq!(sat.model.carrier_size(&Sort::new("ob")), 3);
    assert_eq!(sat.model.carrier_size(&Sort::new("mor")), 6);
    assert!(iso_check(&sat.model, &corpus::three()).is_some());
    assert_eq!(is_model(&sat.model, &cat).unwrap(), ModelCheck::Model);
}

#[test]
fn point_poset() {
    let pos = corpus::pos();
    let sat = representing_model(&fic(&pos, "[x:*] top"), &pos, 100).unwrap().into_saturated().unwrap();
    assert_eq!(sat.model.carrier_size(&star()), 1);
    assert_eq!(sat.model.relation_table("leq").len(), 1);
    assert_eq!(sat.generators, vec![0]);
}

#[test]
fn pair_without_antisymmetry() {
    let pos = corpus::pos();
    let sat = representing_model(&fic(&pos, "[x:*, y:*] leq(y, x)"), &pos, 100)
        .unwrap()
        .into_saturated()
        .unwrap();
    assert_eq!(sat.model.carrier_size(&star()), 2);
    let (x, y) = (sat.generators[0], sat.generators[1]);
    assert_ne!(x, y);
    assert!(sat.model.holds("leq", &[y, x]));
    assert!(!sat.model.holds("leq", &[x, y]));
    assert_eq!(sat.model.relation_table("leq").len(), 3);
}

#[test]
fn total_successor_never_saturates() {
    let t = parse_theory("theory succ\n sorts *\n functions\n f : * -> *\n axioms\n top |- [x:*] f(x)!\nend\n")
        .unwrap()
        .theory();
    for budget in [1, 10, 100] {
        match representing_model(&fic(&t, "[x:*] top"), &t, budget).unwrap() {
            ChaseOutcome::BudgetExceeded(e) => {
                assert_eq!(e.steps, budget);
                assert_eq!(e.classes, budget + 1);
            }
            ChaseOutcome::Saturated(_) => panic!("free structure is infinite"),
        }
    }
}

#[test]
fn zero_budget_is_rejected() {
    let pos = corpus::pos();
    assert_eq!(
        representing_model(&fic(&pos, "[x:*] top"), &pos, 0).unwrap_err(),
        ChaseError::ZeroBudget
    );
}

#[test]
fn derivability_pair() {
    let cat = corpus::cat();
    let proved = parse_sequent(&cat.signature, "d(g) = c(f) |- [g:mor, f:mor] (g.f)!").unwrap();
    let refuted = parse_sequent(&cat.signature, "top |- [g:mor, f:mor] (g.f)!").unwrap();
    let trivial = parse_sequent(&cat.signature, "d(g) = c(f) |- [g:mor, f:mor] top").unwrap();
    assert_eq!(is_phl_theorem(&proved, &cat, 500).unwrap(), Derivability::Proved);
    assert_eq!(is_phl_theorem(&refuted, &cat, 500).unwrap(), Derivability::Refuted);
    assert_eq!(is_phl_theorem(&trivial, &cat, 500).unwrap(), Derivability::Proved);
}

#[test]
fn monotone_in_budget() {
    let pos = corpus::pos();
    let s = parse_sequent(&pos.signature, "leq(x, y) & leq(y, z) & leq(z, x) |- [x:*, y:*, z:*] x = z").unwrap();
    let verdicts: Vec<_> = (1..12).map(|b| is_phl_theorem(&s, &pos, b).unwrap()).collect();
    let first = verdicts.iter().position(|v| !matches!(v, Derivability::Unknown { .. })).unwrap();
    assert!(verdicts[first..].iter().all(|v| *v == Derivability::Proved));
}

#[test]
fn morphism_collapsing_by_antisymmetry() {
    let pos = corpus::pos();
    let src = fic(&pos, "[x:*, y:*] leq(x, y)");
    let tgt = fic(&pos, "[x:*, y:*] leq(x, y) & leq(y, x)");
    let terms = parse_terms(&pos.signature, &tgt.context, "x, y").unwrap();
    let h = morphism_from_terms(&src, &tgt, &terms, &pos, 100).unwrap().unwrap();
    assert_eq!(h.target().carrier_size(&star()), 1);
    assert_eq!(h.source().carrier_size(&star()), 2);
    assert_eq!(h.map().sort_map(&star()), &[0, 0]);
}

#[test]
fn morphism_picking_the_composite() {
    let cat = corpus::cat();
    let src = fic(&cat, "[h:mor] top");
    let tgt = fic(&cat, "[g:mor, f:mor] d(g) = c(f)");
    let terms = parse_terms(&cat.signature, &tgt.context, "g.f").unwrap();
    let h = morphism_from_terms(&src, &tgt, &terms, &cat, 500).unwrap().unwrap();
    let b = h.target();
    let mor = Sort::new("mor");
    let sat = representing_model(&tgt, &cat, 500).unwrap().into_saturated().unwrap();
    let identities: Vec<_> = b.function_table("id").values().copied().collect();
    let h_gen = representing_model(&src, &cat, 500).unwrap().into_saturated().unwrap().generators[0];
    let image = h.apply(&mor, h_gen);
    assert!(!sat.generators.contains(&image));
    assert!(!identities.contains(&image));
    let others: Vec<_> = (0..b.carrier_size(&mor))
        .filter(|m| !sat.generators.contains(m) && !identities.contains(m))
        .collect();
    assert_eq!(others, vec![image]);
}

#[test]
fn identity_terms_give_identity() {
    let pos = corpus::pos();
    let phi = fic(&pos, "[x:*, y:*, z:*] leq(x, y) & leq(x, z)");
    let terms = parse_terms(&pos.signature, &phi.context, "x, y, z").unwrap();
    let h = morphism_from_terms(&phi, &phi, &terms, &pos, 100).unwrap().unwrap();
    assert_eq!(h.map(), &phl_core::structure::ElementMap::identity(h.source()));
}

#[test]
fn refuted_side_condition() {
    let pos = corpus::pos();
    let src = fic(&pos, "[x:*, y:*] leq(x, y)");
    let tgt = fic(&pos, "[x:*, y:*] top");
    let terms = parse_terms(&pos.signature, &tgt.context, "x, y").unwrap();
    assert!(matches!(
        morphism_from_terms(&src, &tgt, &terms, &pos, 100),
        Err(ChaseError::SideConditionRefuted(_))
    ));
}

#[test]
fn free_model_over_identity_is_reflection() {
    let pos = corpus::pos();
    let a = corpus::chain(2);
    let rho = TheoryMorphismData::identity(&pos.signature);
    let fm = free_model(&rho, &a, &pos, 100).unwrap();
    let sat = fm.outcome.saturated().unwrap();
    assert!(iso_check(&sat.model, &a).is_some());
    let unit = fm.unit.unwrap();
    assert!(unit.is_injective() && unit.is_surjective());
}

#[test]
fn free_category_on_an_object() {
    let cat = corpus::cat();
    let mut bare = Signature::new();
    bare.add_sort(Sort::new("ob")).unwrap();
    bare.add_sort(Sort::new("mor")).unwrap();
    let sorts: BTreeMap<Sort, Sort> = [("ob", "ob"), ("mor", "mor")]
        .into_iter()
        .map(|(a, b)| (Sort::new(a), Sort::new(b)))
        .collect();
    let rho = TheoryMorphismData::sort_only(&bare, &cat.signature, sorts).unwrap();
    let mut a = phl_core::structure::PartialStructure::empty(bare);
    a.set_carrier(&Sort::new("ob"), 1);
    let fm = free_model(&rho, &a, &cat, 500).unwrap();
    let sat = fm.outcome.saturated().unwrap();
    assert_eq!(sat.model.carrier_size(&Sort::new("ob")), 1);
    assert_eq!(sat.model.carrier_size(&Sort::new("mor")), 1);
    assert!(fm.unit.is_some());
}

#[test]
fn free_subtraction_algebra_on_two_chain_is_infinite() {
    let t = corpus::possub().expand();
    let rho = TheoryMorphismData::inclusion(&corpus::pos().signature, &t.signature).unwrap();
    let a = corpus::chain(2);
    let mut last = 0;
    for budget in [20, 40, 80] {
        let fm = free_model(&rho, &a, &t, budget).unwrap();
        match fm.outcome {
            ChaseOutcome::BudgetExceeded(e) => {
                assert!(e.nodes > last);
                last = e.nodes;
            }
            ChaseOutcome::Saturated(_) => panic!("expected unbounded growth"),
        }
        assert!(fm.unit.is_none());
    }
}

#[test]
fn corpus_presentations_saturate_to_models() {
    for (name, p) in corpus::presentations() {
        let sat = chase(&p, 2000)
            .unwrap()
            .into_saturated()
            .unwrap_or_else(|| panic!("{name} should saturate"));
        assert_eq!(is_model(&sat.model, p.theory()).unwrap(), ModelCheck::Model, "{name}");
        let facts = phl_core::syntax::FormulaInContext::new(p.generators().clone(), p.facts().clone());
        assert!(interpret_formula(&sat.model, &facts).contains(&sat.generators), "{name}");
    }
}

#[test]
fn reversed_agenda_agrees() {
    for (name, p) in corpus::presentations() {
        let fwd = chase_with(&p, &ChaseOptions::with_budget(2000)).unwrap().into_saturated().unwrap();
        let rev = chase_with(
            &p,
            &ChaseOptions {
                budget: 2000,
                order: AgendaOrder::Reverse,
            },
        )
        .unwrap()
        .into_saturated()
        .unwrap();
        assert!(iso_check(&fwd.model, &rev.model).is_some(), "{name}");
    }
}

#[test]
fn diagram_presentation_has_one_generator_per_element() {
    let pos = Arc::new(corpus::pos());
    let a = corpus::chain(3);
    let rho = TheoryMorphismData::identity(&pos.signature);
    let (p, index) = Presentation::diagram(pos, &rho, &a).unwrap();
    assert_eq!(p.generators().len(), 3);
    assert_eq!(p.facts().atoms.len(), 6);
    assert_eq!(index[&star()], vec![0, 1, 2]);
}

#[test]
fn representation_on_small_cases() {
    let pos = corpus::pos();
    for src in ["[x:*] top", "[x:*, y:*] leq(x, y)", "[x:*, y:*, z:*] leq(x, y) & leq(z, y)"] {
        let phi = fic(&pos, src);
        let rep = representing_model(&phi, &pos, 200).unwrap().into_saturated().unwrap();
        for m in [corpus::chain(3), corpus::antichain(2), corpus::poset(4, &[(0, 1), (0, 2), (1, 3), (2, 3)])] {
            assert_eq!(count_homs(&rep.model, &m), interpret_formula(&m, &phi).len(), "{src}");
        }
    }
}

const CAT_FACTS: [&str; 9] = [
    "d(a) = c(b)",
    "d(b) = c(e)",
    "d(a) = d(b)",
    "c(a) = c(e)",
    "d(a) = c(a)",
    "a.b = e",
    "a.b = a",
    "a = b",
    "id(d(e)) = e",
];

const POS_FACTS: [&str; 8] = ["leq(x, y)", "leq(y, z)", "leq(z, x)", "leq(z, v)", "leq(v, y)", "leq(y, x)", "x = v", "leq(v, v)"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    /// Saturated states are models containing the facts, whatever order the
    /// facts force merges in; this fails if a scan misses a match.
    #[test]
    fn saturated_states_are_models(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, ctx, pool): (Theory, &str, &[&str]) = if rng.gen_bool(0.5) {
            (corpus::cat(), "a:mor, b:mor, e:mor", &CAT_FACTS)
        } else {
            (corpus::pos(), "x:*, y:*, z:*, v:*", &POS_FACTS)
        };
        let k = rng.gen_range(1..=4);
        let picked: Vec<&str> = pool.choose_multiple(&mut rng, k).copied().collect();
        let phi = fic(&t, &format!("[{ctx}] {}", picked.join(" & ")));
        let p = Presentation::from_formula(Arc::new(t.clone()), &phi).unwrap();
        let run = |order| chase_with(&p, &ChaseOptions { budget: 400, order }).unwrap().into_saturated();
        let (Some(fwd), Some(rev)) = (run(AgendaOrder::Forward), run(AgendaOrder::Reverse)) else {
            return Ok(());
        };
        prop_assert_eq!(is_model(&fwd.model, &t).unwrap(), ModelCheck::Model);
        prop_assert!(interpret_formula(&fwd.model, &phi).contains(&fwd.generators));
        prop_assert!(iso_check(&fwd.model, &rev.model).is_some());
    }
}
