//! Abstract syntax, parser, validator and pretty-printer for `.tr` sources.

pub mod ast;
pub mod diag;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod validate;

pub use ast::*;
pub use diag::{Diagnostic, DiagnosticKind, ParseError};
pub use parser::{parse, parse_action, parse_expr};
pub use pretty::{pretty, pretty_action, pretty_expr};
pub use validate::validate;
