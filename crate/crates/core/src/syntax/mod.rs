//! Signatures, terms, Horn formulas, sequents and theories, with a parser and
//! printer for the text format.

mod ast;
mod error;
mod lexer;
mod morphism;
mod parser;
mod print;
mod relative;
mod subst;

pub use ast::{
    is_infix, Atom, Context, FormulaInContext, FunctionDecl, HornFormula, RelationDecl, Sequent, Signature, Sort, Term,
    Theory, Variable, INFIX_SYMBOLS,
};
pub use error::{ParseError, ParseErrorKind, SyntaxError};
pub use morphism::TheoryMorphismData;
pub use parser::{
    parse_context, parse_formula, parse_formula_in_context, parse_sequent, parse_term, parse_terms, parse_theory,
    ParsedTheory,
};
pub use relative::{expand_relative_theory, Operator, RelativeTheory};
pub use subst::Substitution;
