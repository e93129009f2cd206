//! Compiler and verification toolkit for narrative biochemical models.
//!
//! Models are written as association / dissociation / transformation
//! sentences, checked against consistency conditions, compiled through a
//! per-state action table into stochastic pi-calculus (SPiM dialect), and
//! cross-checked by simulating both the generated pi program and the
//! sentences themselves.

pub mod codegen;
pub mod compile_map;
pub mod desugar;
pub mod ensemble;
pub mod error;
pub mod interp;
pub mod model;
pub mod parser;
pub mod pi;
pub mod rules;
mod sumtree;
pub mod trace;
pub mod validate;

pub use error::{CompileError, LoadError, ModelError, SimError};
pub use model::{Body, Model, Sentence, SentenceKind, SiteName, SiteRef, SpeciesName, StateSet};
pub use parser::{parse, Diagnostic};
pub use validate::{validate, Violation};
