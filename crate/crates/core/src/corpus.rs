//! Bundled example theories and small structures used throughout the tests,
//! the command-line tool and the documentation.
//!
//! The monoid structures are finite windows of ℤ and ℕ: `z_window()` has
//! elements -3..=3 (element id `k + 3` stands for `k`) and `n_window()` has
//! 0..=3. Addition is defined whenever the sum stays inside the window. This
//! keeps every structure finite while preserving the local closedness
//! phenomena of the unbounded versions.

use std::sync::Arc;

use crate::chase::Presentation;
use crate::structure::{Elem, PartialStructure};
use crate::syntax::{parse_context, parse_formula, parse_theory, ParsedTheory, RelativeTheory, Signature, Sort, Theory};

pub const POS: &str = include_str!("../corpus/pos.phl");
pub const CAT: &str = include_str!("../corpus/cat.phl");
pub const MON: &str = include_str!("../corpus/mon.phl");
pub const MON_INV: &str = include_str!("../corpus/mon_inv.phl");
pub const QUIV: &str = include_str!("../corpus/quiv.phl");
pub const QUIVCAT: &str = include_str!("../corpus/quivcat.phl");
pub const POSSUB: &str = include_str!("../corpus/possub.phl");
pub const POS_ENDO: &str = include_str!("../corpus/pos_endo.phl");
pub const POSSUB_RICH: &str = include_str!("../corpus/possub_rich.phl");

/// Every bundled source, by file stem.
pub const ALL: &[(&str, &str)] = &[
    ("pos", POS),
    ("cat", CAT),
    ("mon", MON),
    ("mon_inv", MON_INV),
    ("quiv", QUIV),
    ("quivcat", QUIVCAT),
    ("possub", POSSUB),
    ("pos_endo", POS_ENDO),
    ("possub_rich", POSSUB_RICH),
];

fn plain(src: &str) -> Theory {
    match parse_theory(src).expect("bundled theory parses") {
        ParsedTheory::Plain(t) => t,
        ParsedTheory::Relative(_) => panic!("bundled theory is relative"),
    }
}

fn relative(src: &str) -> RelativeTheory {
    match parse_theory(src).expect("bundled theory parses") {
        ParsedTheory::Relative(rt) => rt,
        ParsedTheory::Plain(_) => panic!("bundled theory is not relative"),
    }
}

pub fn pos() -> Theory {
    plain(POS)
}

pub fn cat() -> Theory {
    plain(CAT)
}

pub fn mon() -> Theory {
    plain(MON)
}

pub fn mon_inv() -> Theory {
    plain(MON_INV)
}

pub fn quiv() -> Theory {
    plain(QUIV)
}

pub fn quivcat() -> RelativeTheory {
    relative(QUIVCAT)
}

pub fn possub() -> RelativeTheory {
    relative(POSSUB)
}

pub fn pos_endo() -> RelativeTheory {
    relative(POS_ENDO)
}

pub fn possub_rich() -> RelativeTheory {
    relative(POSSUB_RICH)
}

fn star() -> Sort {
    Sort::new("*")
}

/// A poset on `n` elements from the pairs `(a, b)` with `a ≤ b`; the
/// reflexive-transitive closure is taken.
pub fn poset(n: usize, le: &[(Elem, Elem)]) -> PartialStructure {
    let mut rel = vec![vec![false; n]; n];
    for i in 0..n {
        rel[i][i] = true;
    }
    for &(a, b) in le {
        rel[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if rel[i][k] && rel[k][j] {
                    rel[i][j] = true;
                }
            }
        }
    }
    let mut m = PartialStructure::empty(pos().signature);
    m.set_carrier(&star(), n);
    for i in 0..n {
        for j in 0..n {
            if rel[i][j] {
                m.insert_relation("leq", vec![i, j]);
            }
        }
    }
    m
}

/// `0 < 1 < … < n-1`
pub fn chain(n: usize) -> PartialStructure {
    let le: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    poset(n, &le)
}

pub fn antichain(n: usize) -> PartialStructure {
    poset(n, &[])
}

/// Two elements related both ways: a preorder, not a poset.
pub fn two_cycle() -> PartialStructure {
    let mut m = PartialStructure::empty(pos().signature);
    m.set_carrier(&star(), 2);
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        m.insert_relation("leq", vec![a, b]);
    }
    m
}

/// The category `· →f · →g ·`.
///
/// Objects 0, 1, 2; morphisms `id0, id1, id2, f, g, g.f` as ids 0..6.
pub fn three() -> PartialStructure {
    let mut m = PartialStructure::empty(cat().signature);
    m.set_carrier(&Sort::new("ob"), 3);
    m.set_carrier(&Sort::new("mor"), 6);
    // (domain, codomain) of each morphism
    let ends = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];
    for (k, &(d, c)) in ends.iter().enumerate() {
        m.insert_function("d", vec![k], d);
        m.insert_function("c", vec![k], c);
    }
    for x in 0..3 {
        m.insert_function("id", vec![x], x);
    }
    for (g, &(dg, cg)) in ends.iter().enumerate() {
        for (f, &(df, cf)) in ends.iter().enumerate() {
            if dg != cf {
                continue;
            }
            let h = if dg == cg {
                f
            } else if df == cf {
                g
            } else {
                5
            };
            m.insert_function(".", vec![g, f], h);
        }
    }
    m
}

fn window(sig: Signature, lo: i64, hi: i64, inverse: bool) -> PartialStructure {
    let n = (hi - lo + 1) as usize;
    let id = |k: i64| (k - lo) as usize;
    let mut m = PartialStructure::empty(sig);
    m.set_carrier(&star(), n);
    m.insert_function("e", vec![], id(0));
    for a in lo..=hi {
        for b in lo..=hi {
            if (lo..=hi).contains(&(a + b)) {
                m.insert_function(".", vec![id(a), id(b)], id(a + b));
            }
        }
        if inverse && (lo..=hi).contains(&-a) {
            m.insert_function("inv", vec![id(a)], id(-a));
        }
    }
    m
}

/// ℤ restricted to -3..=3 over the monoid signature.
pub fn z_window() -> PartialStructure {
    window(mon().signature, -3, 3, false)
}

/// ℕ restricted to 0..=3 over the monoid signature.
pub fn n_window() -> PartialStructure {
    window(mon().signature, 0, 3, false)
}

/// [`z_window`] with the inverse, total on the window.
pub fn z_window_inv() -> PartialStructure {
    window(mon_inv().signature, -3, 3, true)
}

/// [`n_window`] with the inverse, defined only at 0.
pub fn n_window_inv() -> PartialStructure {
    window(mon_inv().signature, 0, 3, true)
}

/// Element id of `k` in the ℤ window.
pub fn z_id(k: i64) -> Elem {
    (k + 3) as usize
}

/// ℕ window of subtraction: `x - y` defined exactly when `y ≤ x`.
pub fn n_window_subtraction() -> (PartialStructure, Vec<(Vec<Elem>, Elem)>) {
    let base = chain(4);
    let mut ops = Vec::new();
    for x in 0..4 {
        for y in 0..=x {
            ops.push((vec![x, y], x - y));
        }
    }
    (base, ops)
}

/// Presentations whose chase saturates, used for confluence checks.
pub fn presentations() -> Vec<(String, Presentation)> {
    let mk = |name: &str, t: Theory, ctx: &str, facts: &str| {
        let ctx = parse_context(&t.signature, ctx).expect("bundled context parses");
        let phi = parse_formula(&t.signature, &ctx, facts).expect("bundled facts parse");
        (name.to_string(), Presentation::new(Arc::new(t), ctx, phi).expect("bundled presentation is well-formed"))
    };
    let endo = pos_endo().expand();
    let quivcat = quivcat().expand();
    vec![
        mk("pos-point", pos(), "x:*", "top"),
        mk("pos-pair", pos(), "x:*, y:*", "leq(y, x)"),
        mk("pos-cycle", pos(), "x:*, y:*", "leq(x, y) & leq(y, x)"),
        mk("pos-chain3", pos(), "x:*, y:*, z:*", "leq(x, y) & leq(y, z)"),
        mk("pos-vee", pos(), "x:*, y:*, z:*", "leq(x, y) & leq(x, z)"),
        mk("pos-collapse", pos(), "x:*, y:*, z:*", "leq(x, y) & leq(y, z) & leq(z, x)"),
        mk("cat-three", cat(), "g:mor, f:mor", "d(g) = c(f)"),
        mk("cat-arrow", cat(), "f:mor", "top"),
        mk("cat-object", cat(), "x:ob", "top"),
        mk("cat-idempotent", cat(), "f:mor", "d(f) = c(f) & f.f = f"),
        mk("cat-four", cat(), "h:mor, g:mor, f:mor", "d(h) = c(g) & d(g) = c(f)"),
        mk("cat-square", cat(), "a:mor, b:mor, u:mor, v:mor", "d(a) = c(u) & d(b) = c(v) & a.u = b.v"),
        mk("mon-unit", mon(), "", "top"),
        mk("mon-idempotent", mon(), "x:*", "x.x = x"),
        mk("mon-inv-unit", mon_inv(), "", "inv(e)!"),
        mk("quiv-edge", quiv(), "f:e", "top"),
        mk("quiv-loop", quiv(), "f:e", "s(f) = t(f)"),
        mk("quivcat-path", quivcat, "g:e, f:e", "s(g) = t(f)"),
        mk("endo-fixed", endo.clone(), "x:*", "w(x) = x"),
        mk("endo-swap", endo, "x:*, y:*", "w(x) = y & w(y) = x"),
    ]
}
