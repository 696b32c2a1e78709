use crate::lang::TrTree;

/// Picks the true node with the least cost to the root (shallowest when all
/// arc costs are 1). Ties go to the earliest-declared node.
pub fn select_tree_node(tree: &TrTree, truth: &[bool]) -> Option<usize> {
    select_by_cost(&tree.costs_to_root(), truth)
}

pub(crate) fn select_by_cost(costs: &[f64], truth: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &t) in truth.iter().enumerate() {
        if t && best.is_none_or(|b| costs[i] < costs[b]) {
            best = Some(i);
        }
    }
    best
}
