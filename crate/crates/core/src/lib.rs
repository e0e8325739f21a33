//! Knowledge-base reasoning engine for adhesive selection.
//!
//! A knowledge base is a [`Vocabulary`], a [`Theory`] and a
//! [`PartialStructure`]. The [`solve`] module grounds it and runs
//! propagation, model expansion, optimization and explanation over the
//! result. [`cdmn`] compiles decision tables into theory formulas,
//! [`adhesive`] builds the adhesive-selection KB and [`consultant`] wraps it
//! all in an interactive session.

pub mod adhesive;
pub mod cdmn;
pub mod consultant;
pub mod ground;
pub mod linear;
pub mod model;
pub mod parser;
pub mod rational;
pub mod solve;

pub use model::{
    merge, well_formed, Assignment, Bound, Category, CmpOp, Formula, Interval, Key, LabeledFormula, Origin,
    PartialStructure, Restriction, SymbolDecl, Term, Theory, TypeDecl, TypeKind, ValidationError, ValidationKind,
    Value, Vocabulary,
};
pub use parser::{parse_kb, serialize, KnowledgeBase, ParseDiagnostic, Severity, SourceSpan};
pub use rational::Rat;
