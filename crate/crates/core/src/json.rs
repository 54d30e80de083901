//! JSON exchange format for structures and relative algebras.
//!
//! ```text
//! {"carriers":{"*":[0,1]},"functions":{},"relations":{"leq":[[0,0],[0,1],[1,1]]},"signature":"pos"}
//! ```
//!
//! Output is a single line with keys in sorted order, every symbol of the
//! signature present and every array sorted, so equal structures serialize
//! to identical bytes. Element ids must be dense: the carrier of a sort with
//! `n` elements is `[0, …, n-1]`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relalg::{RelAlgError, RelativeAlgebra};
use crate::structure::{Elem, PartialStructure, StructureError};
use crate::syntax::{RelativeTheory, Signature, Sort};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("structure is over `{found}`, expected `{expected}`")]
    WrongSignature { expected: String, found: String },
    #[error("carrier of sort `{0}` must be 0..n in order")]
    NonDense(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("entry of `{symbol}` has length {found}, expected {expected}")]
    EntryLength {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Algebra(#[from] RelAlgError),
}

/// Serialized shape; field order is the output key order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct StructureDoc {
    pub carriers: BTreeMap<String, Vec<Elem>>,
    #[serde(default)]
    pub functions: BTreeMap<String, Vec<Vec<Elem>>>,
    /// Elements named by a presentation's generators; ignored on reading.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub generators: BTreeMap<String, Elem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ops: Option<BTreeMap<String, Vec<Vec<Elem>>>>,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<Vec<Elem>>>,
    pub signature: String,
}

impl StructureDoc {
    pub fn from_structure(m: &PartialStructure, name: &str) -> Self {
        let sig = m.signature();
        StructureDoc {
            carriers: sig
                .sorts()
                .iter()
                .map(|s| (s.name().to_string(), (0..m.carrier_size(s)).collect()))
                .collect(),
            functions: sig
                .functions()
                .map(|(f, _)| {
                    let rows = m
                        .function_table(f)
                        .iter()
                        .map(|(args, &v)| args.iter().copied().chain(std::iter::once(v)).collect())
                        .collect();
                    (f.to_string(), rows)
                })
                .collect(),
            generators: BTreeMap::new(),
            ops: None,
            relations: sig
                .relations()
                .map(|(r, _)| (r.to_string(), m.relation_table(r).iter().cloned().collect()))
                .collect(),
            signature: name.to_string(),
        }
    }

    /// Rebuilds the structure over `sig`, named `name`. Symbols absent from
    /// the document get empty tables.
    pub fn to_structure(&self, sig: &Signature, name: &str) -> Result<PartialStructure, JsonError> {
        if self.signature != name {
            return Err(JsonError::WrongSignature {
                expected: name.to_string(),
                found: self.signature.clone(),
            });
        }
        let mut carriers = BTreeMap::new();
        for (s, ids) in &self.carriers {
            let sort = Sort::new(s.clone());
            if !sig.has_sort(&sort) {
                return Err(JsonError::UnknownSort(s.clone()));
            }
            if ids.iter().enumerate().any(|(i, &e)| i != e) {
                return Err(JsonError::NonDense(s.clone()));
            }
            carriers.insert(sort, ids.len());
        }
        let mut functions = BTreeMap::new();
        for (f, rows) in &self.functions {
            let arity = sig
                .function(f)
                .ok_or_else(|| StructureError::UnknownSymbol(f.clone()))?
                .args
                .len();
            let mut entries = Vec::new();
            for row in rows {
                if row.len() != arity + 1 {
                    return Err(JsonError::EntryLength {
                        symbol: f.clone(),
                        expected: arity + 1,
                        found: row.len(),
                    });
                }
                entries.push((row[..arity].to_vec(), row[arity]));
            }
            functions.insert(f.clone(), entries);
        }
        let relations = self.relations.clone();
        Ok(PartialStructure::new(sig.clone(), carriers, functions, relations)?)
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("documents always serialize");
        s.push('\n');
        s
    }
}

/// Compact, deterministic JSON for `m`, newline-terminated.
pub fn write_structure(m: &PartialStructure, name: &str) -> String {
    StructureDoc::from_structure(m, name).to_line()
}

pub fn read_structure(text: &str, sig: &Signature, name: &str) -> Result<PartialStructure, JsonError> {
    let doc: StructureDoc = serde_json::from_str(text)?;
    doc.to_structure(sig, name)
}

/// The underlying structure with the operator tables under `"ops"`, rows
/// written as arguments followed by the value.
pub fn write_algebra(a: &RelativeAlgebra, name: &str) -> String {
    let mut doc = StructureDoc::from_structure(&a.underlying(), name);
    let ops = a
        .theory()
        .operators
        .iter()
        .map(|o| {
            let rows = a
                .op_table(&o.name)
                .iter()
                .map(|(args, &v)| args.iter().copied().chain(std::iter::once(v)).collect())
                .collect();
            (o.name.clone(), rows)
        })
        .collect();
    doc.ops = Some(ops);
    doc.to_line()
}

pub fn read_algebra(text: &str, theory: &Arc<RelativeTheory>, name: &str) -> Result<RelativeAlgebra, JsonError> {
    let mut doc: StructureDoc = serde_json::from_str(text)?;
    let ops = doc.ops.take().unwrap_or_default();
    let underlying = doc.to_structure(&theory.base.signature, name)?;
    let mut tables = BTreeMap::new();
    for (op, rows) in ops {
        let arity = theory
            .operator(&op)
            .ok_or_else(|| RelAlgError::UnknownOperator(op.clone()))?
            .arg_sorts()
            .len();
        let mut entries = Vec::new();
        for row in rows {
            if row.len() != arity + 1 {
                return Err(JsonError::EntryLength {
                    symbol: op.clone(),
                    expected: arity + 1,
                    found: row.len(),
                });
            }
            entries.push((row[..arity].to_vec(), row[arity]));
        }
        tables.insert(op, entries);
    }
    Ok(RelativeAlgebra::new(theory.clone(), &underlying, tables)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn chain_bytes() {
        let s = write_structure(&corpus::chain(2), "pos");
        assert_eq!(
            s,
            "{\"carriers\":{\"*\":[0,1]},\"functions\":{},\"relations\":{\"leq\":[[0,0],[0,1],[1,1]]},\"signature\":\"pos\"}\n"
        );
    }

    #[test]
    fn round_trip() {
        for m in [corpus::three(), corpus::z_window_inv(), corpus::antichain(3)] {
            let name = "x";
            let back = read_structure(&write_structure(&m, name), m.signature(), name).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn rejects_sparse_ids_and_wrong_signature() {
        let sig = corpus::pos().signature;
        let sparse = r#"{"carriers":{"*":[0,2]},"relations":{},"signature":"pos"}"#;
        assert!(matches!(read_structure(sparse, &sig, "pos"), Err(JsonError::NonDense(_))));
        let other = r#"{"carriers":{"*":[0]},"signature":"cat"}"#;
        assert!(matches!(read_structure(other, &sig, "pos"), Err(JsonError::WrongSignature { .. })));
    }

    #[test]
    fn algebra_round_trip() {
        let rt = Arc::new(corpus::possub());
        let (base, ops) = corpus::n_window_subtraction();
        let a = RelativeAlgebra::new(rt.clone(), &base, [("-".to_string(), ops)].into_iter().collect()).unwrap();
        let text = write_algebra(&a, "possub");
        assert!(text.contains("\"ops\":{\"-\":[[0,0,0],"));
        assert_eq!(read_algebra(&text, &rt, "possub").unwrap(), a);
    }
}
