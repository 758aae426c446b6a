//! Surface syntax: source locations, the term AST, module declarations, and
//! the reader/parser/printer/desugarer that move between text and AST.
//!
//! Terms are shared via `Arc` so instrumented rewrites can reuse unchanged
//! subtrees and whole programs can move across worker threads. Every node
//! carries a `NodeId` (unique within its program) that the typechecker and
//! instrumentation passes use as a stable key, plus a `SourceLoc` whose
//! `Origin` records whether the node was written by the user or injected by
//! desugaring.

mod ast;
mod desugar;
mod parser;
mod printer;
mod reader;

pub use ast::{
    Definition, ForAnn, Import, Lang, LambdaClause, ModuleDecl, NodeId, Origin, Param, Program,
    SourceLoc, Term, TermKind,
};
pub use desugar::desugar_module;
pub use parser::{parse_program, parse_type, ParseError};
pub use printer::{print_module, print_program};
pub use reader::{read_all, Sexp, SexpKind};
