//! A workbench for partial Horn logic.
//!
//! Theories are parsed from a small text format ([`syntax`]), interpreted in
//! finite partial structures ([`structure`]), and turned into term models by a
//! bounded chase ([`chase`]). On top of that sit filtered colimits and
//! formula-level coproducts and coequalizers ([`colimit`]), relative algebras
//! ([`relalg`]) and closure audits for classes of models ([`birkhoff`]).

pub mod syntax;
pub mod structure;
pub mod chase;
pub mod corpus;
pub mod json;
pub mod colimit;
pub mod relalg;
pub mod birkhoff;
