//! λ_G: a graph-based typed lambda calculus used as a compiler IR.
//!
//! Functions float in a flat label map without lexical nesting. Scoping is
//! recovered from free variables: [`fv`] maintains them lazily and
//! incrementally, [`nesting`] derives the nesting tree from them, and
//! [`transform`] uses them to copy only what a substitution actually
//! touches.

pub mod bench;
pub mod eval;
pub mod fixtures;
pub mod fv;
pub mod ir;
pub mod nesting;
pub mod oracle;
pub mod random;
pub mod surface;
pub mod transform;

pub use fv::{FvStats, TraceRow};
pub use ir::{Expr, ExprKind, Function, Label, Prim, Program, Type, TypeKind};
pub use lamg_sets::SetHandle;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: String, found: String },
    #[error("not a function type: {0}")]
    NotAFunction(String),
    #[error("not a tuple type: {0}")]
    NotATuple(String),
    #[error("index {index} out of bounds for {ty}")]
    IndexOutOfBounds { index: u32, ty: String },
    #[error("unknown label #{0}")]
    UnknownLabel(u32),
    #[error("function `{0}` has an unset body")]
    UnsetBody(String),
    #[error("expression is not an application of a function")]
    NotAnApplication,
    #[error("program is not well-formed: {0}")]
    IllFormed(String),
    #[error("root `{0}` not found")]
    RootNotFound(String),
}
