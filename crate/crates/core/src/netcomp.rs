//! Compilation of propositional T-R sequences into three-layer threshold
//! networks: condition units, mutually inhibiting AND units (only the first
//! true condition survives), and one OR associator per distinct action.

use serde::{Deserialize, Serialize};

use crate::analysis::{PropCondition, PropSequence};

/// Exhaustive equivalence checking is limited to this many inputs.
pub const MAX_VERIFY_INPUTS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("input has {found} components, net expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("exhaustive check over {0} inputs is too large (limit {MAX_VERIFY_INPUTS})")]
    TooLarge(usize),
    #[error("net and sequence disagree on their feature count")]
    ShapeMismatch,
}

/// A threshold element: fires iff the weighted input sum is at least `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl Unit {
    pub fn fires(&self, inputs: &[bool]) -> bool {
        let sum: f64 = self.weights.iter().zip(inputs).filter(|(_, &x)| x).map(|(w, _)| w).sum();
        sum >= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdNet {
    pub n: usize,
    pub layer1: Vec<Unit>,
    pub layer2: Vec<Unit>,
    pub layer3: Vec<Unit>,
    pub action_names: Vec<String>,
}

/// Layer outputs for one input; handy for visualisation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Activations {
    pub layer1: Vec<bool>,
    pub layer2: Vec<bool>,
    pub layer3: Vec<bool>,
    pub action: Option<usize>,
}

fn condition_unit(c: &PropCondition, n: usize) -> Unit {
    let weights = (0..n)
        .map(|i| {
            let bit = 1u32 << i;
            if c.pos & bit != 0 {
                1.0
            } else if c.neg & bit != 0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    Unit { weights, threshold: f64::from(c.pos.count_ones()) }
}

pub fn compile(seq: &PropSequence) -> ThresholdNet {
    let n = seq.features.len();
    let m = seq.rules.len();
    let layer1 = seq.rules.iter().map(|r| condition_unit(&r.condition, n)).collect();
    let layer2 = (0..m)
        .map(|i| Unit {
            weights: (0..m).map(|j| if j == i { 1.0 } else if j < i { -1.0 } else { 0.0 }).collect(),
            threshold: 1.0,
        })
        .collect();
    let mut action_names: Vec<String> = Vec::new();
    for r in &seq.rules {
        if !action_names.contains(&r.action) {
            action_names.push(r.action.clone());
        }
    }
    let layer3 = action_names
        .iter()
        .map(|a| Unit {
            weights: seq.rules.iter().map(|r| if &r.action == a { 1.0 } else { 0.0 }).collect(),
            threshold: 1.0,
        })
        .collect();
    ThresholdNet { n, layer1, layer2, layer3, action_names }
}

impl ThresholdNet {
    pub fn activations(&self, x: &[bool]) -> Result<Activations, NetError> {
        if x.len() != self.n {
            return Err(NetError::DimensionMismatch { expected: self.n, found: x.len() });
        }
        let layer1: Vec<bool> = self.layer1.iter().map(|u| u.fires(x)).collect();
        let layer2: Vec<bool> = self.layer2.iter().map(|u| u.fires(&layer1)).collect();
        let layer3: Vec<bool> = self.layer3.iter().map(|u| u.fires(&layer2)).collect();
        let action = layer3.iter().position(|&b| b);
        Ok(Activations { layer1, layer2, layer3, action })
    }

    /// Index into `action_names` of the firing associator, if any.
    pub fn forward(&self, x: &[bool]) -> Result<Option<usize>, NetError> {
        Ok(self.activations(x)?.action)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("nets always serialise")
    }
}

/// Bits of `state` as an input vector, feature 0 first.
pub fn input_vector(state: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| state >> i & 1 == 1).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equivalence {
    pub equivalent: bool,
    pub counterexample: Option<Vec<bool>>,
    pub inputs_checked: u64,
}

/// Compares the net with first-true-rule interpretation on every input.
pub fn verify_equivalence(net: &ThresholdNet, seq: &PropSequence) -> Result<Equivalence, NetError> {
    let n = seq.features.len();
    if n != net.n {
        return Err(NetError::ShapeMismatch);
    }
    if n > MAX_VERIFY_INPUTS {
        return Err(NetError::TooLarge(n));
    }
    let total = 1u32 << n;
    for state in 0..total {
        let x = input_vector(state, n);
        let a = net.activations(&x)?;
        let expected = seq.first_true(state).map(|i| seq.rules[i].action.as_str());
        let got = a.action.map(|i| net.action_names[i].as_str());
        let and_units = a.layer2.iter().filter(|&&b| b).count();
        let single_assoc = a.layer3.iter().filter(|&&b| b).count() <= 1;
        if expected != got || and_units > 1 || !single_assoc {
            return Ok(Equivalence { equivalent: false, counterexample: Some(x), inputs_checked: u64::from(state) + 1 });
        }
    }
    Ok(Equivalence { equivalent: true, counterexample: None, inputs_checked: u64::from(total) })
}
