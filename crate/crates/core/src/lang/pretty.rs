use std::fmt::Write;

use super::ast::*;

/// Canonical source text for a whole library, declarations in their original order.
pub fn pretty(lib: &ProgramLibrary) -> String {
    let mut out = String::new();
    for (i, name) in lib.order.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if let Some(p) = lib.programs.get(name) {
            out.push_str(&pretty_program(p));
        } else if let Some(t) = lib.trees.get(name) {
            out.push_str(&pretty_tree(t));
        }
    }
    out
}

pub fn pretty_program(p: &TrProgram) -> String {
    let mut out = format!("prog {}({}) {{\n", p.name, p.params.join(", "));
    for r in &p.rules {
        let _ = writeln!(out, "    {} -> {};", pretty_expr(&r.condition), pretty_action(&r.action));
    }
    out.push_str("}\n");
    out
}

pub fn pretty_tree(t: &TrTree) -> String {
    let mut out = format!("tree {}({}) {{\n", t.name, t.params.join(", "));
    for n in &t.nodes {
        match (&n.parent, &n.action) {
            (Some(parent), Some(action)) => {
                let _ = write!(out, "    node {}: {}, {} => {}", n.id, pretty_expr(&n.condition), pretty_action(action), parent);
                if n.cost != 1.0 {
                    let _ = write!(out, ", cost {}", n.cost);
                }
                out.push_str(";\n");
            }
            _ => {
                let _ = writeln!(out, "    root: {};", pretty_expr(&n.condition));
            }
        }
    }
    out.push_str("}\n");
    out
}

pub fn pretty_action(a: &ActionTerm) -> String {
    match a {
        ActionTerm::Nil => "nil".to_string(),
        ActionTerm::Primitive { name, args } if args.is_empty() => name.clone(),
        ActionTerm::Primitive { name, args } | ActionTerm::ProgramCall { name, args } => {
            format!("{name}({})", join_args(args))
        }
    }
}

fn join_args(args: &[Expr]) -> String {
    args.iter().map(pretty_expr).collect::<Vec<_>>().join(", ")
}

pub fn pretty_expr(e: &Expr) -> String {
    match e {
        Expr::True => "T".to_string(),
        Expr::Number(n) => format!("{n}"),
        Expr::Angle(a) => format!("{a}rad"),
        Expr::Point(x, y) => format!("point({x}, {y})"),
        Expr::Var(v) => v.clone(),
        Expr::Call(name, args) => format!("{name}({})", join_args(args)),
        Expr::Not(inner) => match inner.as_ref() {
            Expr::And(_) | Expr::Or(_) => format!("not ({})", pretty_expr(inner)),
            other => format!("not {}", pretty_expr(other)),
        },
        Expr::And(ops) => ops
            .iter()
            .map(|o| match o {
                Expr::And(_) | Expr::Or(_) => format!("({})", pretty_expr(o)),
                _ => pretty_expr(o),
            })
            .collect::<Vec<_>>()
            .join(" and "),
        Expr::Or(ops) => ops
            .iter()
            .map(|o| match o {
                Expr::Or(_) => format!("({})", pretty_expr(o)),
                _ => pretty_expr(o),
            })
            .collect::<Vec<_>>()
            .join(" or "),
        Expr::Near { a, b, tol: Tolerance::ByKind } => format!("equal({}, {})", pretty_expr(a), pretty_expr(b)),
        Expr::Near { a, b, tol: Tolerance::Fixed { eps_in, eps_out } } => {
            format!("near({}, {}, {eps_in}, {eps_out})", pretty_expr(a), pretty_expr(b))
        }
    }
}
