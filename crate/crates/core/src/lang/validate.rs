use super::ast::*;
use super::diag::{Diagnostic, DiagnosticKind};

/// Functions every evaluator provides regardless of the host environment.
pub const BUILTINS: &[(&str, usize)] = &[("point", 2)];

/// Name resolution and arity checks. Recursion, direct or mutual, is legal.
pub fn validate(lib: &ProgramLibrary) -> Vec<Diagnostic> {
    let mut v = Validator { lib, diags: Vec::new() };
    for name in &lib.order {
        if let Some(p) = lib.programs.get(name) {
            if p.rules.is_empty() {
                v.push(
                    DiagnosticKind::EmptyProgram(p.name.clone()),
                    Span::default(),
                    format!("program `{}` has no rules", p.name),
                );
            }
            for r in &p.rules {
                v.expr(&r.condition, &p.params, r.span);
                v.action(&r.action, &p.params, r.span);
            }
        } else if let Some(t) = lib.trees.get(name) {
            for n in &t.nodes {
                v.expr(&n.condition, &t.params, n.span);
                if let Some(a) = &n.action {
                    v.action(a, &t.params, n.span);
                }
            }
        }
    }
    v.diags
}

struct Validator<'a> {
    lib: &'a ProgramLibrary,
    diags: Vec<Diagnostic>,
}

impl Validator<'_> {
    fn push(&mut self, kind: DiagnosticKind, span: Span, msg: String) {
        self.diags.push(Diagnostic::new(kind, span, msg));
    }

    fn arity(&mut self, name: &str, expected: usize, found: usize, span: Span) {
        if expected != found {
            self.push(
                DiagnosticKind::ArityMismatch { name: name.to_string(), expected, found },
                span,
                format!("`{name}` takes {expected} argument(s), {found} given"),
            );
        }
    }

    fn expr(&mut self, e: &Expr, params: &[String], span: Span) {
        match e {
            Expr::Var(name) => {
                let known = params.contains(name) || self.lib.env_decls.get(name) == Some(&0);
                if !known {
                    self.push(DiagnosticKind::UnboundVariable(name.clone()), span, format!("unbound variable `{name}`"));
                }
            }
            Expr::Call(name, args) => {
                let builtin = BUILTINS.iter().find(|(b, _)| b == name).map(|(_, a)| *a);
                match builtin.or_else(|| self.lib.env_decls.get(name).copied()) {
                    Some(arity) => self.arity(name, arity, args.len(), span),
                    None => self.push(
                        DiagnosticKind::UnresolvedName(name.clone()),
                        span,
                        format!("unknown function or predicate `{name}`"),
                    ),
                }
                args.iter().for_each(|a| self.expr(a, params, span));
            }
            Expr::Not(inner) => self.expr(inner, params, span),
            Expr::And(ops) | Expr::Or(ops) => ops.iter().for_each(|o| self.expr(o, params, span)),
            Expr::Near { a, b, .. } => {
                self.expr(a, params, span);
                self.expr(b, params, span);
            }
            Expr::True | Expr::Number(_) | Expr::Angle(_) | Expr::Point(..) => {}
        }
    }

    fn action(&mut self, a: &ActionTerm, params: &[String], span: Span) {
        match a {
            ActionTerm::Nil => {}
            ActionTerm::Primitive { name, args } => {
                match self.lib.primitive_decls.get(name) {
                    Some(&arity) => self.arity(name, arity, args.len(), span),
                    None => self.push(
                        DiagnosticKind::UnresolvedName(name.clone()),
                        span,
                        format!("unknown action `{name}`"),
                    ),
                }
                args.iter().for_each(|e| self.expr(e, params, span));
            }
            ActionTerm::ProgramCall { name, args } => {
                match self.lib.callable(name) {
                    Some(c) => self.arity(name, c.params().len(), args.len(), span),
                    None => self.push(
                        DiagnosticKind::UnresolvedName(name.clone()),
                        span,
                        format!("unknown program `{name}`"),
                    ),
                }
                args.iter().for_each(|e| self.expr(e, params, span));
            }
        }
    }
}
