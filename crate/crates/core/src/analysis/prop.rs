use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::lang::{pretty_action, pretty_expr, Expr, TrProgram, TrTree};

/// Bitmask representation caps the feature count; completeness checks cap it lower.
pub const MAX_FEATURES: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSet {
    names: Vec<String>,
}

impl FeatureSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, AnalysisError> {
        let mut fs = FeatureSet::default();
        for n in names {
            fs.intern(n.into())?;
        }
        Ok(fs)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn intern(&mut self, name: String) -> Result<usize, AnalysisError> {
        if let Some(i) = self.index(&name) {
            return Ok(i);
        }
        if self.names.len() == MAX_FEATURES {
            return Err(AnalysisError::TooManyFeatures(self.names.len() + 1));
        }
        self.names.push(name);
        Ok(self.names.len() - 1)
    }

    /// Bitmask with every declared feature set.
    pub fn full_mask(&self) -> u32 {
        if self.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.len()) - 1
        }
    }

    pub fn assignment_map(&self, state: u32) -> BTreeMap<String, bool> {
        self.names.iter().enumerate().map(|(i, n)| (n.clone(), state >> i & 1 == 1)).collect()
    }
}

/// A conjunction of literals; the empty conjunction is `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PropCondition {
    pub pos: u32,
    pub neg: u32,
}

impl PropCondition {
    pub const TRUE: PropCondition = PropCondition { pos: 0, neg: 0 };

    pub fn literal(feature: usize, positive: bool) -> Self {
        let bit = 1u32 << feature;
        if positive {
            PropCondition { pos: bit, neg: 0 }
        } else {
            PropCondition { pos: 0, neg: bit }
        }
    }

    pub fn from_literals(lits: &[(usize, bool)]) -> Option<Self> {
        lits.iter().try_fold(PropCondition::TRUE, |acc, &(f, p)| acc.and(&PropCondition::literal(f, p)))
    }

    pub fn is_true(&self) -> bool {
        self.pos == 0 && self.neg == 0
    }

    pub fn holds(&self, state: u32) -> bool {
        state & self.pos == self.pos && state & self.neg == 0
    }

    /// Conjunction; `None` when contradictory.
    pub fn and(&self, other: &PropCondition) -> Option<PropCondition> {
        let c = PropCondition { pos: self.pos | other.pos, neg: self.neg | other.neg };
        (c.pos & c.neg == 0).then_some(c)
    }

    /// Conjunction-subset test: every literal of `other` appears in `self`.
    pub fn entails(&self, other: &PropCondition) -> bool {
        other.pos & !self.pos == 0 && other.neg & !self.neg == 0
    }

    pub fn mask(&self) -> u32 {
        self.pos | self.neg
    }

    pub fn literal_count(&self) -> u32 {
        self.pos.count_ones() + self.neg.count_ones()
    }

    pub fn display<'a>(&'a self, features: &'a FeatureSet) -> impl fmt::Display + 'a {
        DisplayCond { cond: self, features }
    }
}

struct DisplayCond<'a> {
    cond: &'a PropCondition,
    features: &'a FeatureSet,
}

impl fmt::Display for DisplayCond<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cond.is_true() {
            return write!(f, "T");
        }
        let mut first = true;
        for (i, name) in self.features.names().iter().enumerate() {
            let bit = 1u32 << i;
            let lit = if self.cond.pos & bit != 0 {
                name.clone()
            } else if self.cond.neg & bit != 0 {
                format!("not {name}")
            } else {
                continue;
            };
            if !first {
                write!(f, " and ")?;
            }
            first = false;
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

/// STRIPS-style description of an action's normal effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionModel {
    pub name: String,
    pub pre: PropCondition,
    pub add: u32,
    pub del: u32,
}

impl ActionModel {
    pub fn new(name: impl Into<String>, pre: PropCondition, add: u32, del: u32) -> Result<Self, AnalysisError> {
        let name = name.into();
        if add & del != 0 {
            return Err(AnalysisError::InvalidModel(format!("`{name}` both adds and deletes a feature")));
        }
        Ok(ActionModel { name, pre, add, del })
    }

    /// State after a normal execution from `state` (precondition not checked).
    pub fn apply(&self, state: u32) -> u32 {
        (state & !self.del) | self.add
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropRule {
    pub condition: PropCondition,
    pub action: String,
}

/// A T-R sequence whose conditions are conjunctions of propositional features.
#[derive(Debug, Clone, PartialEq)]
pub struct PropSequence {
    pub features: FeatureSet,
    pub rules: Vec<PropRule>,
}

impl PropSequence {
    /// Converts a parsed program. With `features == None` the feature set is
    /// collected from the conditions in order of first appearance.
    pub fn from_program(p: &TrProgram, features: Option<&FeatureSet>) -> Result<Self, AnalysisError> {
        let mut fs = features.cloned().unwrap_or_default();
        let fixed = features.is_some();
        let rules = p
            .rules
            .iter()
            .map(|r| {
                Ok(PropRule { condition: to_conjunction(&r.condition, &mut fs, fixed)?, action: pretty_action(&r.action) })
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?;
        Ok(PropSequence { features: fs, rules })
    }

    pub fn first_true(&self, state: u32) -> Option<usize> {
        self.rules.iter().position(|r| r.condition.holds(state))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropNode {
    pub id: String,
    pub condition: PropCondition,
    pub parent: Option<usize>,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropTree {
    pub features: FeatureSet,
    pub nodes: Vec<PropNode>,
}

impl PropTree {
    pub fn from_tree(t: &TrTree, features: Option<&FeatureSet>) -> Result<Self, AnalysisError> {
        let mut fs = features.cloned().unwrap_or_default();
        let fixed = features.is_some();
        let parents = t.parent_indices();
        let nodes = t
            .nodes
            .iter()
            .zip(parents)
            .map(|(n, parent)| {
                Ok(PropNode {
                    id: n.id.clone(),
                    condition: to_conjunction(&n.condition, &mut fs, fixed)?,
                    parent,
                    action: n.action.as_ref().map(pretty_action).unwrap_or_else(|| "nil".into()),
                })
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?;
        Ok(PropTree { features: fs, nodes })
    }
}

fn to_conjunction(e: &Expr, fs: &mut FeatureSet, fixed: bool) -> Result<PropCondition, AnalysisError> {
    let mut lits = Vec::new();
    collect_literals(e, fs, fixed, &mut lits)?;
    PropCondition::from_literals(&lits).ok_or_else(|| AnalysisError::NonConjunctive(pretty_expr(e)))
}

fn collect_literals(
    e: &Expr,
    fs: &mut FeatureSet,
    fixed: bool,
    out: &mut Vec<(usize, bool)>,
) -> Result<(), AnalysisError> {
    let feature = |atom: &Expr, fs: &mut FeatureSet| -> Result<usize, AnalysisError> {
        let key = pretty_expr(atom);
        match fs.index(&key) {
            Some(i) => Ok(i),
            None if fixed => Err(AnalysisError::UnknownFeature(key)),
            None => fs.intern(key),
        }
    };
    match e {
        Expr::True => Ok(()),
        Expr::Var(_) | Expr::Call(..) => {
            let f = feature(e, fs)?;
            out.push((f, true));
            Ok(())
        }
        Expr::Not(inner) if matches!(inner.as_ref(), Expr::Var(_) | Expr::Call(..)) => {
            let f = feature(inner, fs)?;
            out.push((f, false));
            Ok(())
        }
        Expr::And(ops) => ops.iter().try_for_each(|o| match o {
            Expr::And(_) => Err(AnalysisError::NonConjunctive(pretty_expr(e))),
            _ => collect_literals(o, fs, fixed, out),
        }),
        _ => Err(AnalysisError::NonConjunctive(pretty_expr(e))),
    }
}
