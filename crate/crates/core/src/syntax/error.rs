use std::fmt;

use thiserror::Error;

use super::ast::Sort;

/// Well-formedness failures for signatures, terms, formulas and morphisms.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("duplicate sort `{0}`")]
    DuplicateSort(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("undeclared sort `{0}`")]
    UndeclaredSort(String),
    #[error("unknown function symbol `{0}`")]
    UnknownFunction(String),
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("`{symbol}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("sort mismatch in {at}: expected `{expected}`, found `{found}`")]
    SortMismatch { at: String, expected: Sort, found: Sort },
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("variable `{0}` occurs twice in a context")]
    DuplicateVariable(String),
    #[error("variable `{0}` clashes with a symbol of the same name")]
    VariableShadowsSymbol(String),
    #[error("`{0}` is not in the domain of the morphism")]
    Unmapped(String),
    #[error("operator `{0}` occurs in the premise of a judgment")]
    OperatorInPremise(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Sort,
    Duplicate,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::Sort => "sort error",
            ParseErrorKind::Duplicate => "duplicate symbol",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    pub fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            kind: ParseErrorKind::Syntax,
            message: message.into(),
        }
    }

    pub fn from_syntax_error(line: usize, column: usize, err: SyntaxError) -> Self {
        let kind = match err {
            SyntaxError::DuplicateSort(_)
            | SyntaxError::DuplicateSymbol(_)
            | SyntaxError::DuplicateVariable(_)
            | SyntaxError::VariableShadowsSymbol(_) => ParseErrorKind::Duplicate,
            _ => ParseErrorKind::Sort,
        };
        ParseError {
            line,
            column,
            kind,
            message: err.to_string(),
        }
    }
}
