use std::collections::BTreeMap;
use std::fmt;

/// Byte range plus the 1-based line/column of its first byte.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span { start, end, line, col }
    }

    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end.max(self.end), line: self.line, col: self.col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// How the two hysteresis thresholds of a [`Expr::Near`] are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Taken from the runtime tolerance table by the kind of the compared values.
    ByKind,
    Fixed { eps_in: f64, eps_out: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    True,
    Number(f64),
    /// Radians, normalized to (-pi, pi].
    Angle(f64),
    Point(f64, f64),
    Var(String),
    Call(String, Vec<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Near { a: Box<Expr>, b: Box<Expr>, tol: Tolerance },
}

impl Expr {
    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Expr {
        Expr::Call(name.into(), args)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn equal(a: Expr, b: Expr) -> Expr {
        Expr::Near { a: Box::new(a), b: Box::new(b), tol: Tolerance::ByKind }
    }

    pub fn near(a: Expr, b: Expr, eps_in: f64, eps_out: f64) -> Expr {
        Expr::Near { a: Box::new(a), b: Box::new(b), tol: Tolerance::Fixed { eps_in, eps_out } }
    }

    /// Visits every sub-expression in pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Call(_, args) | Expr::And(args) | Expr::Or(args) => {
                args.iter().for_each(|a| a.walk(f));
            }
            Expr::Not(inner) => inner.walk(f),
            Expr::Near { a, b, .. } => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionTerm {
    Nil,
    Primitive { name: String, args: Vec<Expr> },
    ProgramCall { name: String, args: Vec<Expr> },
}

impl ActionTerm {
    pub fn name(&self) -> &str {
        match self {
            ActionTerm::Nil => "nil",
            ActionTerm::Primitive { name, .. } | ActionTerm::ProgramCall { name, .. } => name,
        }
    }

    pub fn args(&self) -> &[Expr] {
        match self {
            ActionTerm::Nil => &[],
            ActionTerm::Primitive { args, .. } | ActionTerm::ProgramCall { args, .. } => args,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub condition: Expr,
    pub action: ActionTerm,
    pub span: Span,
}

// Structural equality: spans are ignored.
impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.condition == other.condition && self.action == other.action
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrProgram {
    pub name: String,
    pub params: Vec<String>,
    pub rules: Vec<Rule>,
}

pub const ROOT_ID: &str = "root";

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: String,
    pub condition: Expr,
    /// `None` only for the root.
    pub parent: Option<String>,
    pub action: Option<ActionTerm>,
    pub cost: f64,
    pub decl_index: usize,
    pub span: Span,
}

impl PartialEq for TreeNode {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.condition == other.condition
            && self.parent == other.parent
            && self.action == other.action
            && self.cost == other.cost
            && self.decl_index == other.decl_index
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrTree {
    pub name: String,
    pub params: Vec<String>,
    /// In declaration order; `nodes[i].decl_index == i`, the root is always first.
    pub nodes: Vec<TreeNode>,
}

impl TrTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Parent index per node (`None` for the root).
    pub fn parent_indices(&self) -> Vec<Option<usize>> {
        self.nodes
            .iter()
            .map(|n| n.parent.as_deref().and_then(|p| self.index_of(p)))
            .collect()
    }

    /// Sum of arc costs from each node up to the root.
    pub fn costs_to_root(&self) -> Vec<f64> {
        let parents = self.parent_indices();
        (0..self.nodes.len())
            .map(|mut i| {
                let mut total = 0.0;
                while let Some(p) = parents[i] {
                    total += self.nodes[i].cost;
                    i = p;
                }
                total
            })
            .collect()
    }
}

/// A program or tree, whichever a name resolves to.
#[derive(Debug, Clone, Copy)]
pub enum Callable<'a> {
    Program(&'a TrProgram),
    Tree(&'a TrTree),
}

impl<'a> Callable<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            Callable::Program(p) => &p.name,
            Callable::Tree(t) => &t.name,
        }
    }

    pub fn params(&self) -> &'a [String] {
        match self {
            Callable::Program(p) => &p.params,
            Callable::Tree(t) => &t.params,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProgramLibrary {
    pub programs: BTreeMap<String, TrProgram>,
    pub trees: BTreeMap<String, TrTree>,
    /// Primitive action name -> arity. Supplied by the host, not by source text.
    pub primitive_decls: BTreeMap<String, usize>,
    /// Environment symbol name -> arity. Supplied by the host.
    pub env_decls: BTreeMap<String, usize>,
    /// Declaration order of programs and trees.
    pub order: Vec<String>,
}

impl ProgramLibrary {
    pub fn callable(&self, name: &str) -> Option<Callable<'_>> {
        self.programs
            .get(name)
            .map(Callable::Program)
            .or_else(|| self.trees.get(name).map(Callable::Tree))
    }

    pub fn declare_primitive(&mut self, name: impl Into<String>, arity: usize) -> &mut Self {
        self.primitive_decls.insert(name.into(), arity);
        self
    }

    pub fn declare_env(&mut self, name: impl Into<String>, arity: usize) -> &mut Self {
        self.env_decls.insert(name.into(), arity);
        self
    }

    pub fn declare_symbols(&mut self, symbols: &crate::runtime::SymbolTable) -> &mut Self {
        for (name, arity) in &symbols.primitives {
            self.primitive_decls.insert(name.clone(), *arity);
        }
        for (name, arity) in &symbols.env {
            self.env_decls.insert(name.clone(), *arity);
        }
        self
    }
}
