use thiserror::Error;

use crate::validate::Violation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {kind} name `{name}`")]
    InvalidName { kind: &'static str, name: String },
    #[error("rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("sample time must be positive and finite, got {0}")]
    InvalidSampleTime(f64),
    #[error("species name `Phosph` is reserved for phosphorylation sentences")]
    ReservedSpecies,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("model has {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("species {species} has {sites} sites, more than the supported {max}")]
    TooManySites {
        species: String,
        sites: usize,
        max: usize,
    },
    #[error("state cap exceeded: species {species} brings the total to {total} states (cap {cap})")]
    StateCap {
        species: String,
        total: usize,
        cap: usize,
    },
    #[error("generated name `{0}` is used by two different species states")]
    NameClash(String),
}

/// Errors raised when loading a pi program into the interpreter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("undefined process `{0}`")]
    UndefinedProcess(String),
    #[error("undefined channel `{channel}` in process `{process}`")]
    UndefinedChannel { process: String, channel: String },
    #[error("process `{process}` called with {given} argument(s), expects {expected}")]
    Arity {
        process: String,
        given: usize,
        expected: usize,
    },
    #[error("channel `{channel}` in process `{process}` carries {expected} channel(s), used with {given}")]
    PayloadArity {
        process: String,
        channel: String,
        given: usize,
        expected: usize,
    },
}

/// Errors from running simulations end to end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("traces have different columns: {0}")]
    Columns(String),
    #[error("traces have different sample times")]
    Times,
    #[error("{0}")]
    Config(String),
}
