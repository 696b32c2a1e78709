use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use tr_core::lang::{
    parse, pretty, ActionTerm, Expr, ProgramLibrary, Rule, Span, Tolerance, TrProgram, TrTree, TreeNode, ROOT_ID,
};

const RESERVED: &[&str] =
    &["prog", "tree", "node", "root", "cost", "nil", "not", "and", "or", "true", "false", "point", "equal", "near"];

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9]{0,4}(-[a-z0-9]{1,3})?".prop_filter("reserved word", |s| !RESERVED.contains(&s.as_str()))
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![(-1000i32..1000).prop_map(f64::from), (-1.0e4f64..1.0e4)]
}

fn value_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        number().prop_map(Expr::Number),
        (-3.14f64..3.14).prop_map(Expr::Angle),
        (number(), number()).prop_map(|(x, y)| Expr::Point(x, y)),
        ident().prop_map(Expr::Var),
    ];
    leaf.prop_recursive(2, 6, 3, |inner| (ident(), prop::collection::vec(inner, 1..3)).prop_map(|(n, a)| Expr::Call(n, a)))
}

fn condition() -> impl Strategy<Value = Expr> {
    let atom = prop_oneof![
        Just(Expr::True),
        ident().prop_map(Expr::Var),
        (ident(), prop::collection::vec(value_expr(), 1..3)).prop_map(|(n, a)| Expr::Call(n, a)),
        (value_expr(), value_expr()).prop_map(|(a, b)| Expr::Near { a: Box::new(a), b: Box::new(b), tol: Tolerance::ByKind }),
        (value_expr(), value_expr(), 0.001f64..5.0, 0.0f64..5.0).prop_map(|(a, b, i, d)| Expr::Near {
            a: Box::new(a),
            b: Box::new(b),
            tol: Tolerance::Fixed { eps_in: i, eps_out: i + d },
        }),
    ];
    atom.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::And),
            prop::collection::vec(inner, 2..4).prop_map(Expr::Or),
        ]
    })
}

#[derive(Debug, Clone)]
struct ActionSketch {
    name: Option<String>,
    args: Vec<Expr>,
}

fn action() -> impl Strategy<Value = ActionSketch> {
    prop_oneof![
        1 => Just(ActionSketch { name: None, args: vec![] }),
        4 => (ident(), prop::collection::vec(value_expr(), 0..3)).prop_map(|(n, a)| ActionSketch { name: Some(n), args: a }),
    ]
}

#[derive(Debug, Clone)]
enum DeclSketch {
    Prog { name: String, params: Vec<String>, rules: Vec<(Expr, ActionSketch)> },
    Tree { name: String, params: Vec<String>, root: Expr, nodes: Vec<(usize, Expr, ActionSketch, u8)> },
}

fn params() -> impl Strategy<Value = Vec<String>> {
    prop::collection::btree_set(ident(), 0..3).prop_map(|s| s.into_iter().collect())
}

fn decl() -> impl Strategy<Value = DeclSketch> {
    prop_oneof![
        (ident(), params(), prop::collection::vec((condition(), action()), 1..5))
            .prop_map(|(name, params, rules)| DeclSketch::Prog { name, params, rules }),
        (ident(), params(), condition(), prop::collection::vec((any::<usize>(), condition(), action(), 0u8..6), 0..5))
            .prop_map(|(name, params, root, nodes)| DeclSketch::Tree { name, params, root, nodes }),
    ]
}

fn classify(a: &ActionSketch, callables: &BTreeSet<String>) -> ActionTerm {
    match &a.name {
        None => ActionTerm::Nil,
        Some(n) if callables.contains(n) => ActionTerm::ProgramCall { name: n.clone(), args: a.args.clone() },
        Some(n) => ActionTerm::Primitive { name: n.clone(), args: a.args.clone() },
    }
}

fn build(decls: Vec<DeclSketch>) -> ProgramLibrary {
    let mut seen = BTreeSet::new();
    let decls: Vec<DeclSketch> = decls
        .into_iter()
        .filter(|d| {
            let n = match d {
                DeclSketch::Prog { name, .. } | DeclSketch::Tree { name, .. } => name.clone(),
            };
            seen.insert(n)
        })
        .collect();
    let callables = seen;
    let mut lib = ProgramLibrary::default();
    for d in decls {
        match d {
            DeclSketch::Prog { name, params, rules } => {
                let rules = rules
                    .iter()
                    .map(|(c, a)| Rule { condition: c.clone(), action: classify(a, &callables), span: Span::default() })
                    .collect();
                lib.order.push(name.clone());
                lib.programs.insert(name.clone(), TrProgram { name, params, rules });
            }
            DeclSketch::Tree { name, params, root, nodes } => {
                let mut tree_nodes = vec![TreeNode {
                    id: ROOT_ID.to_string(),
                    condition: root,
                    parent: None,
                    action: None,
                    cost: 0.0,
                    decl_index: 0,
                    span: Span::default(),
                }];
                for (i, (p, c, a, cost)) in nodes.into_iter().enumerate() {
                    let parent = tree_nodes[p % tree_nodes.len()].id.clone();
                    tree_nodes.push(TreeNode {
                        id: format!("n{}", i + 1),
                        condition: c,
                        parent: Some(parent),
                        action: Some(classify(&a, &callables)),
                        cost: [1.0, 0.5, 2.0, 3.0, 0.25, 10.0][cost as usize],
                        decl_index: i + 1,
                        span: Span::default(),
                    });
                }
                lib.order.push(name.clone());
                lib.trees.insert(name.clone(), TrTree { name, params, nodes: tree_nodes });
            }
        }
    }
    lib
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pretty_then_parse_is_identity(decls in prop::collection::vec(decl(), 1..4)) {
        let lib = build(decls);
        let text = pretty(&lib);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n---\n{text}")))?;
        prop_assert_eq!(&back, &lib, "source:\n{}", text);
        prop_assert_eq!(pretty(&back), text);
    }

    #[test]
    fn parser_never_panics(src in "[ -~\n]{0,80}") {
        let _ = parse(&src);
    }
}

#[test]
fn diagnostics_for_several_bad_declarations() {
    let err = parse("prog a() { x -> ; }\nprog b() { y -> z; }\nprog c( { }").unwrap_err();
    assert!(err.0.len() >= 2, "{err}");
    let lines: BTreeMap<u32, usize> = err.0.iter().fold(BTreeMap::new(), |mut m, d| {
        *m.entry(d.span.line).or_default() += 1;
        m
    });
    assert!(lines.contains_key(&1) && lines.contains_key(&3), "{lines:?}");
}
