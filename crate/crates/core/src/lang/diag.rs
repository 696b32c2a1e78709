use std::fmt;

use super::ast::Span;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub enum DiagnosticKind {
    SyntaxError { expected: Vec<String> },
    DuplicateName(String),
    NotSupported(String),
    InvalidTolerance,
    InvalidTree(String),
    UnresolvedName(String),
    ArityMismatch { name: String, expected: usize, found: usize },
    UnboundVariable(String),
    EmptyProgram(String),
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { kind, span, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

/// Parse failure: every diagnostic found before giving up.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{}", render(.0))]
pub struct ParseError(pub Vec<Diagnostic>);

fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}
