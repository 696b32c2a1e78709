//! Recursive-descent parser for `.tr` sources.
//!
//! ```text
//! file    := decl*
//! decl    := "prog" IDENT "(" params ")" "{" (expr "->" action ";")* "}"
//!          | "tree" IDENT "(" params ")" "{" "root" ":" expr ";" node* "}"
//! node    := "node" IDENT ":" expr "," action "=>" (IDENT | "root") ["," "cost" NUMBER] ";"
//! action  := "nil" | IDENT ["(" args ")"]
//! expr    := and ("or" and)*
//! and     := unary ("and" unary)*
//! unary   := "not" unary | cmp
//! cmp     := primary ["==" primary]
//! primary := "T" | "true" | "false" | NUMBER | ANGLE | IDENT ["(" args ")"] | "(" expr ")"
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::diag::{Diagnostic, DiagnosticKind, ParseError};
use super::lexer::{tokenize, Tok};

pub fn parse(src: &str) -> Result<ProgramLibrary, ParseError> {
    let tokens = tokenize(src).map_err(|d| ParseError(vec![d]))?;
    let mut p = Parser { tokens, pos: 0 };
    let mut diags = Vec::new();
    let mut decls = Vec::new();
    while p.peek() != &Tok::Eof {
        match p.declaration() {
            Ok(d) => decls.push(d),
            Err(d) => {
                diags.push(d);
                p.synchronize();
            }
        }
    }
    if !diags.is_empty() {
        return Err(ParseError(diags));
    }
    assemble(decls)
}

/// Parses a single expression, e.g. an entry argument.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src).map_err(|d| ParseError(vec![d]))?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr().map_err(|d| ParseError(vec![d]))?;
    p.expect(Tok::Eof).map_err(|d| ParseError(vec![d]))?;
    Ok(e)
}

/// Parses an action term such as `goto(point(10, 10))`; names defined in
/// `lib` become program calls, everything else a primitive.
pub fn parse_action(src: &str, lib: &ProgramLibrary) -> Result<ActionTerm, ParseError> {
    let tokens = tokenize(src).map_err(|d| ParseError(vec![d]))?;
    let mut p = Parser { tokens, pos: 0 };
    let a = p.action().map_err(|d| ParseError(vec![d]))?;
    p.expect(Tok::Eof).map_err(|d| ParseError(vec![d]))?;
    let names: BTreeSet<String> = lib.programs.keys().chain(lib.trees.keys()).cloned().collect();
    Ok(classify(a, &names))
}

enum Decl {
    Program(TrProgram, Span),
    Tree(TrTree, Span),
}

struct Parser {
    tokens: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].1
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].1
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.tokens[self.pos].clone();
        if t.0 != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> Diagnostic {
        let found = self.peek().describe();
        Diagnostic::new(
            DiagnosticKind::SyntaxError { expected: expected.iter().map(|s| s.to_string()).collect() },
            self.span(),
            format!("expected {}, found {found}", expected.join(" or ")),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if self.peek() == &tok {
            Ok(self.advance().1)
        } else {
            Err(self.error(&[&format!("`{}`", tok.text())]))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.advance().1;
                Ok((name, span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn synchronize(&mut self) {
        self.advance();
        while !matches!(self.peek(), Tok::Prog | Tok::Tree | Tok::Eof) {
            self.advance();
        }
    }

    fn declaration(&mut self) -> PResult<Decl> {
        match self.peek() {
            Tok::Prog => self.program(),
            Tok::Tree => self.tree(),
            _ => Err(self.error(&["`prog`", "`tree`"])),
        }
    }

    fn header(&mut self) -> PResult<(String, Span, Vec<String>)> {
        self.advance();
        let (name, span) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let (p, pspan) = self.ident()?;
                if params.contains(&p) {
                    return Err(Diagnostic::new(
                        DiagnosticKind::DuplicateName(p.clone()),
                        pspan,
                        format!("parameter `{p}` declared twice"),
                    ));
                }
                params.push(p);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        self.expect(Tok::LBrace)?;
        Ok((name, span, params))
    }

    fn program(&mut self) -> PResult<Decl> {
        let (name, span, params) = self.header()?;
        let mut rules = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let start = self.span();
            let condition = self.expr()?;
            self.expect(Tok::Arrow)?;
            let action = self.action()?;
            self.expect(Tok::Semi)?;
            rules.push(Rule { condition, action, span: start.to(self.prev_span()) });
        }
        Ok(Decl::Program(TrProgram { name, params, rules }, span))
    }

    fn tree(&mut self) -> PResult<Decl> {
        let (name, span, params) = self.header()?;
        let root_span = self.expect(Tok::Root)?;
        self.expect(Tok::Colon)?;
        let condition = self.expr()?;
        self.expect(Tok::Semi)?;
        let mut nodes = vec![TreeNode {
            id: ROOT_ID.to_string(),
            condition,
            parent: None,
            action: None,
            cost: 0.0,
            decl_index: 0,
            span: root_span.to(self.prev_span()),
        }];
        while !self.eat(&Tok::RBrace) {
            if self.peek() == &Tok::Root {
                return Err(Diagnostic::new(
                    DiagnosticKind::InvalidTree("multiple roots".into()),
                    self.span(),
                    format!("tree `{name}` declares more than one root"),
                ));
            }
            let start = self.expect(Tok::Node)?;
            let (id, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let condition = self.expr()?;
            self.expect(Tok::Comma)?;
            let action = self.action()?;
            self.expect(Tok::FatArrow)?;
            let parent = if self.eat(&Tok::Root) { ROOT_ID.to_string() } else { self.ident()?.0 };
            let mut cost = 1.0;
            if self.eat(&Tok::Comma) {
                self.expect(Tok::Cost)?;
                match self.peek().clone() {
                    Tok::Number(c) if c >= 0.0 => {
                        self.advance();
                        cost = c;
                    }
                    Tok::Number(_) => {
                        return Err(Diagnostic::new(
                            DiagnosticKind::InvalidTree("negative cost".into()),
                            self.span(),
                            "arc cost must be non-negative",
                        ))
                    }
                    _ => return Err(self.error(&["number"])),
                }
            }
            self.expect(Tok::Semi)?;
            let decl_index = nodes.len();
            nodes.push(TreeNode {
                id,
                condition,
                parent: Some(parent),
                action: Some(action),
                cost,
                decl_index,
                span: start.to(self.prev_span()),
            });
        }
        Ok(Decl::Tree(TrTree { name, params, nodes }, span))
    }

    fn action(&mut self) -> PResult<ActionTerm> {
        match self.peek().clone() {
            Tok::Nil => {
                self.advance();
                Ok(ActionTerm::Nil)
            }
            Tok::LBrace => Err(Diagnostic::new(
                DiagnosticKind::NotSupported("parallel action sets".into()),
                self.span(),
                "parallel action sets `{a, b}` are not supported",
            )),
            Tok::Ident(name) => {
                self.advance();
                let args = if self.peek() == &Tok::LParen { self.args()? } else { Vec::new() };
                Ok(ActionTerm::Primitive { name, args })
            }
            _ => Err(self.error(&["`nil`", "action"])),
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(&Tok::RParen) {
                return Ok(args);
            }
            self.expect(Tok::Comma)?;
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let first = self.and_expr()?;
        if self.peek() != &Tok::Or {
            return Ok(first);
        }
        let mut ops = vec![first];
        while self.eat(&Tok::Or) {
            ops.push(self.and_expr()?);
        }
        Ok(Expr::Or(ops))
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let first = self.unary()?;
        if self.peek() != &Tok::And {
            return Ok(first);
        }
        let mut ops = vec![first];
        while self.eat(&Tok::And) {
            ops.push(self.unary()?);
        }
        Ok(Expr::And(ops))
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Not) {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        let lhs = self.primary()?;
        if self.eat(&Tok::EqEq) {
            let rhs = self.primary()?;
            return Ok(Expr::equal(lhs, rhs));
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let (tok, span) = self.advance();
        match tok {
            Tok::T | Tok::True => Ok(Expr::True),
            Tok::False => Ok(Expr::Not(Box::new(Expr::True))),
            Tok::Number(n) => Ok(Expr::Number(n)),
            Tok::Angle(a) => Ok(Expr::Angle(a)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek() != &Tok::LParen {
                    return Ok(Expr::Var(name));
                }
                let args = self.args()?;
                special_form(name, args, span.to(self.prev_span()))
            }
            _ => {
                self.pos -= 1;
                Err(self.error(&["expression"]))
            }
        }
    }
}

fn special_form(name: String, args: Vec<Expr>, span: Span) -> PResult<Expr> {
    match (name.as_str(), args.as_slice()) {
        ("point", [Expr::Number(x), Expr::Number(y)]) => Ok(Expr::Point(*x, *y)),
        ("equal", [_, _]) => {
            let mut it = args.into_iter();
            Ok(Expr::equal(it.next().unwrap(), it.next().unwrap()))
        }
        ("near", [_, _, Expr::Number(eps_in) | Expr::Angle(eps_in), Expr::Number(eps_out) | Expr::Angle(eps_out)]) => {
            let (eps_in, eps_out) = (*eps_in, *eps_out);
            if !(eps_in > 0.0 && eps_out >= eps_in) {
                return Err(Diagnostic::new(
                    DiagnosticKind::InvalidTolerance,
                    span,
                    format!("near tolerances need eps_out >= eps_in > 0 (got {eps_in}, {eps_out})"),
                ));
            }
            let mut it = args.into_iter();
            Ok(Expr::near(it.next().unwrap(), it.next().unwrap(), eps_in, eps_out))
        }
        _ => Ok(Expr::Call(name, args)),
    }
}

fn classify(action: ActionTerm, callables: &BTreeSet<String>) -> ActionTerm {
    match action {
        ActionTerm::Primitive { name, args } if callables.contains(&name) => ActionTerm::ProgramCall { name, args },
        other => other,
    }
}

fn assemble(decls: Vec<Decl>) -> Result<ProgramLibrary, ParseError> {
    let mut diags = Vec::new();
    let mut seen = BTreeMap::new();
    for d in &decls {
        let (name, span) = match d {
            Decl::Program(p, s) => (&p.name, *s),
            Decl::Tree(t, s) => (&t.name, *s),
        };
        if seen.insert(name.clone(), span).is_some() {
            diags.push(Diagnostic::new(
                DiagnosticKind::DuplicateName(name.clone()),
                span,
                format!("`{name}` is declared more than once"),
            ));
        }
    }
    let names: BTreeSet<String> = seen.into_keys().collect();
    let mut lib = ProgramLibrary::default();
    for d in decls {
        match d {
            Decl::Program(mut p, _) => {
                for r in &mut p.rules {
                    r.action = classify(std::mem::replace(&mut r.action, ActionTerm::Nil), &names);
                }
                lib.order.push(p.name.clone());
                lib.programs.insert(p.name.clone(), p);
            }
            Decl::Tree(mut t, _) => {
                for n in &mut t.nodes {
                    n.action = n.action.take().map(|a| classify(a, &names));
                }
                if let Err(d) = check_tree_shape(&t) {
                    diags.push(d);
                }
                lib.order.push(t.name.clone());
                lib.trees.insert(t.name.clone(), t);
            }
        }
    }
    if diags.is_empty() {
        Ok(lib)
    } else {
        Err(ParseError(diags))
    }
}

fn check_tree_shape(tree: &TrTree) -> Result<(), Diagnostic> {
    let invalid = |what: String, span: Span| {
        Diagnostic::new(DiagnosticKind::InvalidTree(what.clone()), span, format!("tree `{}`: {what}", tree.name))
    };
    let mut ids = BTreeSet::new();
    for n in &tree.nodes {
        if !ids.insert(n.id.as_str()) {
            return Err(invalid(format!("node id `{}` used twice", n.id), n.span));
        }
    }
    let parents = tree.parent_indices();
    for (i, n) in tree.nodes.iter().enumerate().skip(1) {
        if parents[i].is_none() {
            return Err(invalid(format!("parent `{}` of node `{}` does not exist", n.parent.as_deref().unwrap_or("?"), n.id), n.span));
        }
        let mut at = i;
        for _ in 0..tree.nodes.len() {
            match parents[at] {
                Some(p) => at = p,
                None => break,
            }
        }
        if at != 0 {
            return Err(invalid(format!("node `{}` is on a parent cycle", n.id), n.span));
        }
    }
    Ok(())
}
