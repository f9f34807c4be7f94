//! Stream-based runtime monitoring with statically bounded memory.
//!
//! Specifications are parsed ([`parser`]), type checked ([`ast::check_types`]),
//! analyzed for rates and memory ([`analysis`]) and evaluated over event
//! traces ([`engine`]). Sliding windows are aggregated incrementally over
//! panes ([`windows`]).

pub mod analysis;
pub mod ast;
pub mod cli;
pub mod engine;
pub mod parser;
pub mod time;
pub mod value;
pub mod windows;

use thiserror::Error;

use ast::{check_types, TypeError, TypedSpecification};
use parser::{format_diagnostics, parse, ParseError};

/// Errors from turning source text into a typed specification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("{} syntax error(s)", .0.len())]
    Parse(Vec<ParseError>),
    #[error("{} type error(s)", .0.len())]
    Type(Vec<TypeError>),
}

impl SpecError {
    /// Human-readable diagnostics with source excerpts.
    pub fn render(&self, source: &str) -> String {
        match self {
            SpecError::Parse(errors) => format_diagnostics(source, errors),
            SpecError::Type(errors) => format_diagnostics(source, errors),
        }
    }
}

/// Parses and type checks a specification.
pub fn compile(source: &str) -> Result<TypedSpecification, SpecError> {
    let spec = parse(source).map_err(SpecError::Parse)?;
    check_types(&spec).map_err(SpecError::Type)
}
