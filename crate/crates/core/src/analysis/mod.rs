//! Static checks of the regression property, completeness and universality of
//! propositional T-R sequences and trees against STRIPS-style action models.
//!
//! Durative actions are analysed through their terminal normal effect only:
//! a model states what holds once the action has done its job, not what holds
//! part-way through.

mod models;
mod prop;

use std::collections::BTreeMap;

use serde::Serialize;

pub use models::{ModelSet, ModelsDoc};
pub use prop::{
    ActionModel, FeatureSet, PropCondition, PropNode, PropRule, PropSequence, PropTree, MAX_FEATURES,
};

/// Exhaustive completeness is limited to this many features.
pub const MAX_COMPLETENESS_FEATURES: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("too many features ({0}); exhaustive checks support at most {MAX_COMPLETENESS_FEATURES}")]
    TooManyFeatures(usize),
    #[error("no model for action `{0}`")]
    MissingModel(String),
    #[error("condition `{0}` is not a conjunction of feature literals")]
    NonConjunctive(String),
    #[error("invalid action model: {0}")]
    InvalidModel(String),
}

/// Regresses `goal` through `action`: the weakest conjunction under which a
/// normal execution of `action` ends in a `goal` state. `None` is bottom.
pub fn regress(goal: &PropCondition, action: &ActionModel) -> Option<PropCondition> {
    if goal.pos & action.del != 0 || goal.neg & action.add != 0 {
        return None;
    }
    let remaining = PropCondition { pos: goal.pos & !action.add, neg: goal.neg & !action.del };
    action.pre.and(&remaining)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleVerdict {
    /// 1-based rule number (tree: declaration index + 1).
    pub rule: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    pub action: String,
    /// 1-based number of the higher condition this one regresses from.
    pub regresses_from: Option<usize>,
    pub detail: String,
}

impl RuleVerdict {
    pub fn passed(&self) -> bool {
        self.rule == 1 || self.regresses_from.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Completeness {
    pub complete: bool,
    /// A feature assignment under which no condition holds.
    pub counterexample: Option<BTreeMap<String, bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub rules: Vec<RuleVerdict>,
    pub complete: bool,
    pub counterexample: Option<BTreeMap<String, bool>>,
    pub universal: bool,
}

impl AnalysisReport {
    fn assemble(rules: Vec<RuleVerdict>, c: Completeness) -> Self {
        let universal = rules.iter().all(RuleVerdict::passed) && c.complete;
        AnalysisReport { rules, complete: c.complete, counterexample: c.counterexample, universal }
    }

    pub fn failing_rules(&self) -> impl Iterator<Item = &RuleVerdict> {
        self.rules.iter().filter(|r| !r.passed())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let label = match &r.node {
                Some(id) => format!("node {id}"),
                None => format!("rule {}", r.rule),
            };
            let status = if r.rule == 1 {
                "goal".to_string()
            } else if let Some(j) = r.regresses_from {
                format!("ok, regresses from {j}")
            } else {
                "FAIL".to_string()
            };
            out.push_str(&format!("{label} ({}): {status}; {}\n", r.action, r.detail));
        }
        match &self.counterexample {
            None => out.push_str("complete: yes\n"),
            Some(cx) => {
                let lits: Vec<String> = cx.iter().map(|(k, v)| format!("{k}={}", u8::from(*v))).collect();
                out.push_str(&format!("complete: no, counterexample {}\n", lits.join(" ")));
            }
        }
        out.push_str(if self.universal { "universal: yes\n" } else { "universal: no\n" });
        out
    }
}

fn verdict_for(
    cond: &PropCondition,
    action: &str,
    candidates: impl Iterator<Item = (usize, PropCondition)>,
    models: &ModelSet,
    features: &FeatureSet,
) -> Result<(Option<usize>, String), AnalysisError> {
    let ms = models.for_action(action)?;
    let candidates: Vec<_> = candidates.collect();
    for (j, goal) in &candidates {
        for (mi, m) in ms.iter().enumerate() {
            if let Some(r) = regress(goal, m) {
                if cond.entails(&r) {
                    let which = if ms.len() > 1 { format!(" (model {})", mi + 1) } else { String::new() };
                    return Ok((Some(*j), format!("entails {}{which}", r.display(features))));
                }
            }
        }
    }
    Ok((None, format!("not the regression of any higher condition through `{action}`")))
}

/// Rule `i` passes when some higher `K_j` regresses through a model of `a_i`
/// to a non-bottom condition that `K_i` entails. Reports the smallest such `j`.
pub fn check_regression_property(seq: &PropSequence, models: &ModelSet) -> Result<Vec<RuleVerdict>, AnalysisError> {
    let mut out = Vec::with_capacity(seq.rules.len());
    for (i, rule) in seq.rules.iter().enumerate() {
        if i == 0 {
            out.push(RuleVerdict {
                rule: 1,
                node: None,
                action: rule.action.clone(),
                regresses_from: None,
                detail: "goal condition".into(),
            });
            continue;
        }
        let higher = seq.rules[..i].iter().enumerate().map(|(j, r)| (j + 1, r.condition));
        let (from, detail) = verdict_for(&rule.condition, &rule.action, higher, models, &seq.features)?;
        out.push(RuleVerdict { rule: i + 1, node: None, action: rule.action.clone(), regresses_from: from, detail });
    }
    Ok(out)
}

fn completeness<'a>(
    features: &FeatureSet,
    conditions: impl Iterator<Item = &'a PropCondition> + Clone,
) -> Result<Completeness, AnalysisError> {
    let n = features.len();
    if n > MAX_COMPLETENESS_FEATURES {
        return Err(AnalysisError::TooManyFeatures(n));
    }
    for state in 0u32..(1u32 << n) {
        if !conditions.clone().any(|c| c.holds(state)) {
            return Ok(Completeness { complete: false, counterexample: Some(features.assignment_map(state)) });
        }
    }
    Ok(Completeness { complete: true, counterexample: None })
}

/// Exhaustive tautology check of the disjunction of all conditions.
pub fn check_completeness(seq: &PropSequence) -> Result<Completeness, AnalysisError> {
    completeness(&seq.features, seq.rules.iter().map(|r| &r.condition))
}

pub fn check_universal(seq: &PropSequence, models: &ModelSet) -> Result<AnalysisReport, AnalysisError> {
    let rules = check_regression_property(seq, models)?;
    let c = check_completeness(seq)?;
    Ok(AnalysisReport::assemble(rules, c))
}

/// Trees check each non-root node against its own parent only.
pub fn check_tree(tree: &PropTree, models: &ModelSet) -> Result<AnalysisReport, AnalysisError> {
    let mut rules = Vec::with_capacity(tree.nodes.len());
    for (i, node) in tree.nodes.iter().enumerate() {
        let Some(p) = node.parent else {
            rules.push(RuleVerdict {
                rule: 1,
                node: Some(node.id.clone()),
                action: node.action.clone(),
                regresses_from: None,
                detail: "root".into(),
            });
            continue;
        };
        let parent = std::iter::once((p + 1, tree.nodes[p].condition));
        let (from, detail) = verdict_for(&node.condition, &node.action, parent, models, &tree.features)?;
        rules.push(RuleVerdict {
            rule: i + 1,
            node: Some(node.id.clone()),
            action: node.action.clone(),
            regresses_from: from,
            detail,
        });
    }
    let c = completeness(&tree.features, tree.nodes.iter().map(|n| &n.condition))?;
    Ok(AnalysisReport::assemble(rules, c))
}
