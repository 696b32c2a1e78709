use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ActionModel, AnalysisError, FeatureSet, PropCondition};

/// Action models indexed by action name. An action may carry several models
/// (one per situation it is used in); `nil` is the identity unless overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    by_name: BTreeMap<String, Vec<ActionModel>>,
}

impl ModelSet {
    pub fn new(models: impl IntoIterator<Item = ActionModel>) -> Self {
        let mut by_name: BTreeMap<String, Vec<ActionModel>> = BTreeMap::new();
        for m in models {
            by_name.entry(m.name.clone()).or_default().push(m);
        }
        by_name
            .entry("nil".into())
            .or_insert_with(|| vec![ActionModel { name: "nil".into(), pre: PropCondition::TRUE, add: 0, del: 0 }]);
        ModelSet { by_name }
    }

    /// Models for an action as written in a rule, e.g. `grab-bar(b)`; falls
    /// back to the bare action name.
    pub fn for_action(&self, action: &str) -> Result<&[ActionModel], AnalysisError> {
        let bare = action.split('(').next().unwrap_or(action).trim();
        self.by_name
            .get(action)
            .or_else(|| self.by_name.get(bare))
            .map(Vec::as_slice)
            .ok_or_else(|| AnalysisError::MissingModel(action.to_string()))
    }

    pub fn action_names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }
}

impl Default for ModelSet {
    fn default() -> Self {
        ModelSet::new([])
    }
}

/// On-disk form of a models file. Literals are feature names, negated with a leading `!`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelsDoc {
    #[serde(default)]
    pub features: Vec<String>,
    pub actions: Vec<ActionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDoc {
    pub name: String,
    #[serde(default)]
    pub pre: Vec<String>,
    #[serde(default)]
    pub add: Vec<String>,
    #[serde(default)]
    pub del: Vec<String>,
}

impl ModelsDoc {
    pub fn from_json(text: &str) -> Result<Self, AnalysisError> {
        serde_json::from_str(text).map_err(|e| AnalysisError::InvalidModel(e.to_string()))
    }

    /// Resolves the document against `features`, which may already hold the
    /// features seen in a program; new names declared here are appended.
    pub fn resolve(&self, features: &FeatureSet) -> Result<(FeatureSet, ModelSet), AnalysisError> {
        let mut names: Vec<String> = features.names().to_vec();
        for f in &self.features {
            if !names.contains(f) {
                names.push(f.clone());
            }
        }
        let fs = FeatureSet::new(names)?;
        let idx = |n: &str| fs.index(n).ok_or_else(|| AnalysisError::UnknownFeature(n.to_string()));
        let mut models = Vec::new();
        for a in &self.actions {
            let mut lits = Vec::new();
            for l in &a.pre {
                lits.push(match l.strip_prefix('!') {
                    Some(n) => (idx(n.trim())?, false),
                    None => (idx(l.trim())?, true),
                });
            }
            let pre = PropCondition::from_literals(&lits)
                .ok_or_else(|| AnalysisError::InvalidModel(format!("`{}` has a contradictory precondition", a.name)))?;
            let mask = |ns: &[String]| ns.iter().try_fold(0u32, |m, n| Ok::<_, AnalysisError>(m | 1 << idx(n)?));
            models.push(ActionModel::new(a.name.clone(), pre, mask(&a.add)?, mask(&a.del)?)?);
        }
        Ok((fs, ModelSet::new(models)))
    }
}
