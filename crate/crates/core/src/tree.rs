//! Binary decision trees: loading, validation, inference and shape metrics.
//!
//! Trees use the `≤`-goes-left convention throughout. Node ids are dense
//! `0..n` with the root at id 0, so `nodes[id].id == id` always holds for a
//! validated [`TreeModel`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class_label: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub kind: NodeKind,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

/// A validated, immutable binary classification tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    nodes: Vec<TreeNode>,
    n_features: usize,
    n_classes: usize,
    metadata: Map<String, Value>,
}

impl TreeModel {
    /// Builds a model from nodes and checks every structural invariant.
    pub fn new(
        nodes: Vec<TreeNode>,
        n_features: usize,
        n_classes: usize,
        metadata: Map<String, Value>,
    ) -> Result<Self> {
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        let model = TreeModel {
            nodes,
            n_features,
            n_classes,
            metadata,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn metadata(&self) -> &Map<String, Value> {
        &self.metadata
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.len() - self.n_leaves()
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::Schema(
                "nodes: must contain at least one node".into(),
            ));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::Structure(format!(
                    "node ids must be dense 0..{n} without duplicates (found id {} at position {i})",
                    node.id
                )));
            }
        }

        let mut parent: Vec<Option<usize>> = vec![None; n];
        for node in &self.nodes {
            match node.kind {
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= self.n_features {
                        return Err(Error::FeatureOutOfRange {
                            node: node.id,
                            feature,
                            n_features: self.n_features,
                        });
                    }
                    if !threshold.is_finite() {
                        return Err(Error::Schema(format!(
                            "nodes[{}].threshold: must be finite",
                            node.id
                        )));
                    }
                    for child in [left, right] {
                        if child >= n {
                            return Err(Error::Structure(format!(
                                "node {} references missing child {child}",
                                node.id
                            )));
                        }
                        if child == 0 {
                            return Err(Error::Structure(format!(
                                "node {} references the root as a child (cycle)",
                                node.id
                            )));
                        }
                        if let Some(p) = parent[child] {
                            return Err(Error::Structure(format!(
                                "node {child} has two parents ({p} and {})",
                                node.id
                            )));
                        }
                        parent[child] = Some(node.id);
                    }
                }
                NodeKind::Leaf { class_label } => {
                    if class_label as usize >= self.n_classes {
                        return Err(Error::Schema(format!(
                            "nodes[{}].class: {class_label} >= n_classes {}",
                            node.id, self.n_classes
                        )));
                    }
                }
            }
        }

        // Every node has one parent; reachability from the root rules out
        // detached cycles.
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if seen[id] {
                return Err(Error::Structure(format!("cycle through node {id}")));
            }
            seen[id] = true;
            if let NodeKind::Split { left, right, .. } = self.nodes[id].kind {
                stack.push(right);
                stack.push(left);
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(Error::Structure(format!(
                "node {orphan} is not reachable from the root"
            )));
        }

        self.for_each_leaf_box(|_, _| Ok(()))
    }

    /// Visits leaves in left-first depth-first order together with the
    /// intersected `(lo, hi]` interval per feature along the path.
    pub(crate) fn for_each_leaf_box<F>(&self, mut visit: F) -> Result<()>
    where
        F: FnMut(&TreeNode, &[(f64, f64)]) -> Result<()>,
    {
        let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); self.n_features];
        self.walk_boxes(0, &mut bounds, &mut visit)
    }

    fn walk_boxes<F>(&self, id: usize, bounds: &mut [(f64, f64)], visit: &mut F) -> Result<()>
    where
        F: FnMut(&TreeNode, &[(f64, f64)]) -> Result<()>,
    {
        let node = &self.nodes[id];
        match node.kind {
            NodeKind::Leaf { .. } => {
                if let Some(feature) = bounds.iter().position(|&(lo, hi)| lo >= hi) {
                    return Err(Error::EmptyInterval { leaf: id, feature });
                }
                visit(node, bounds)
            }
            NodeKind::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let saved = bounds[feature];
                bounds[feature].1 = saved.1.min(threshold);
                self.walk_boxes(left, bounds, visit)?;
                bounds[feature] = (saved.0.max(threshold), saved.1);
                self.walk_boxes(right, bounds, visit)?;
                bounds[feature] = saved;
                Ok(())
            }
        }
    }

    /// Id of the leaf reached by `sample`.
    pub fn leaf_for(&self, sample: &[f64]) -> Result<usize> {
        if sample.len() != self.n_features {
            return Err(Error::LengthMismatch {
                expected: self.n_features,
                actual: sample.len(),
            });
        }
        let mut id = 0;
        loop {
            match self.nodes[id].kind {
                NodeKind::Leaf { .. } => return Ok(id),
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if sample[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn predict(&self, sample: &[f64]) -> Result<u32> {
        let leaf = self.leaf_for(sample)?;
        match self.nodes[leaf].kind {
            NodeKind::Leaf { class_label } => Ok(class_label),
            NodeKind::Split { .. } => unreachable!("leaf_for returns leaves"),
        }
    }

    fn subtree_size(&self, id: usize) -> usize {
        let mut count = 0;
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            count += 1;
            if let NodeKind::Split { left, right, .. } = self.nodes[id].kind {
                stack.push(left);
                stack.push(right);
            }
        }
        count
    }

    /// Absolute node-count difference between the root's two subtrees.
    pub fn balance(&self) -> usize {
        match self.nodes[0].kind {
            NodeKind::Leaf { .. } => 0,
            NodeKind::Split { left, right, .. } => {
                self.subtree_size(left).abs_diff(self.subtree_size(right))
            }
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(doc: &Value) -> Result<Self> {
        let top = doc
            .as_object()
            .ok_or_else(|| Error::Schema("document: expected a JSON object".into()))?;
        let n_features = get_count(top, "n_features", "n_features")?;
        let raw_nodes = top
            .get("nodes")
            .ok_or_else(|| Error::Schema("nodes: missing".into()))?
            .as_array()
            .ok_or_else(|| Error::Schema("nodes: expected an array".into()))?;

        let mut nodes = Vec::with_capacity(raw_nodes.len());
        for (i, raw) in raw_nodes.iter().enumerate() {
            nodes.push(parse_node(raw, i)?);
        }

        let n_classes = match top.get("n_classes") {
            Some(_) => get_count(top, "n_classes", "n_classes")?,
            None => nodes
                .iter()
                .filter_map(|n| match n.kind {
                    NodeKind::Leaf { class_label } => Some(class_label as usize + 1),
                    NodeKind::Split { .. } => None,
                })
                .max()
                .unwrap_or(1),
        };
        let metadata = match top.get("metadata") {
            None | Some(Value::Null) => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(_) => return Err(Error::Schema("metadata: expected an object".into())),
        };
        TreeModel::new(nodes, n_features, n_classes, metadata)
    }

    pub fn to_json_value(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => json!({
                    "id": n.id,
                    "kind": "split",
                    "feature": feature,
                    "threshold": threshold,
                    "left": left,
                    "right": right,
                }),
                NodeKind::Leaf { class_label } => json!({
                    "id": n.id,
                    "kind": "leaf",
                    "class": class_label,
                }),
            })
            .collect();
        json!({
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "nodes": nodes,
            "metadata": self.metadata,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("tree JSON is always valid")
    }
}

fn get_count(obj: &Map<String, Value>, key: &str, path: &str) -> Result<usize> {
    let v = obj
        .get(key)
        .ok_or_else(|| Error::Schema(format!("{path}: missing")))?;
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Schema(format!("{path}: expected a non-negative integer, got {v}")))
}

fn parse_node(raw: &Value, index: usize) -> Result<TreeNode> {
    let obj = raw
        .as_object()
        .ok_or_else(|| Error::Schema(format!("nodes[{index}]: expected an object")))?;
    let field = |key: &str| format!("nodes[{index}].{key}");
    let id = get_count(obj, "id", &field("id"))?;
    let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| {
        Error::Schema(format!("{}: expected \"split\" or \"leaf\"", field("kind")))
    })?;
    let kind = match kind {
        "split" => {
            let threshold = obj
                .get("threshold")
                .and_then(Value::as_f64)
                .ok_or_else(|| {
                    Error::Schema(format!("{}: expected a number", field("threshold")))
                })?;
            NodeKind::Split {
                feature: get_count(obj, "feature", &field("feature"))?,
                threshold,
                left: get_count(obj, "left", &field("left"))?,
                right: get_count(obj, "right", &field("right"))?,
            }
        }
        "leaf" => {
            let class_label = get_count(obj, "class", &field("class"))?;
            NodeKind::Leaf {
                class_label: u32::try_from(class_label)
                    .map_err(|_| Error::Schema(format!("{}: too large", field("class"))))?,
            }
        }
        other => {
            return Err(Error::Schema(format!(
                "{}: unknown kind {other:?}",
                field("kind")
            )))
        }
    };
    Ok(TreeNode { id, kind })
}

/// Generates a random tree over the unit hypercube.
///
/// At every split above `max_depth - 1`, both children are expanded with
/// probability `balance_bias`; otherwise one randomly chosen child is expanded
/// and the other becomes a leaf. Thresholds are drawn uniformly from the
/// feasible interval inherited from the ancestors, so every path is
/// satisfiable. Leaves get a random class out of two.
pub fn random_tree(n_features: usize, max_depth: usize, balance_bias: f64, seed: u64) -> TreeModel {
    assert!(n_features >= 1, "need at least one feature");
    assert!(max_depth >= 1, "max_depth must be at least 1");
    let bias = balance_bias.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::new();
    let mut bounds = vec![(0.0f64, 1.0f64); n_features];
    grow(&mut nodes, &mut rng, &mut bounds, 0, max_depth, bias, true);
    let mut metadata = Map::new();
    metadata.insert("source".into(), json!("random_tree"));
    metadata.insert("seed".into(), json!(seed));
    metadata.insert("balance_bias".into(), json!(bias));
    TreeModel::new(nodes, n_features, 2, metadata).expect("generated trees are valid")
}

const MIN_FEASIBLE_WIDTH: f64 = 1e-9;

fn grow(
    nodes: &mut Vec<TreeNode>,
    rng: &mut ChaCha8Rng,
    bounds: &mut [(f64, f64)],
    depth: usize,
    max_depth: usize,
    bias: f64,
    expand: bool,
) -> usize {
    let id = nodes.len();
    nodes.push(TreeNode {
        id,
        kind: NodeKind::Leaf { class_label: 0 },
    });

    let feature = rng.random_range(0..bounds.len());
    let (lo, hi) = bounds[feature];
    if !expand || depth >= max_depth || hi - lo < MIN_FEASIBLE_WIDTH {
        nodes[id].kind = NodeKind::Leaf {
            class_label: rng.random_range(0..2),
        };
        return id;
    }

    let threshold = rng.random_range(lo..hi);
    let (expand_left, expand_right) = if depth + 1 >= max_depth {
        (false, false)
    } else if rng.random_bool(bias) {
        (true, true)
    } else if rng.random_bool(0.5) {
        (true, false)
    } else {
        (false, true)
    };

    bounds[feature] = (lo, threshold);
    let left = grow(nodes, rng, bounds, depth + 1, max_depth, bias, expand_left);
    bounds[feature] = (threshold, hi);
    let right = grow(nodes, rng, bounds, depth + 1, max_depth, bias, expand_right);
    bounds[feature] = (lo, hi);

    nodes[id].kind = NodeKind::Split {
        feature,
        threshold,
        left,
        right,
    };
    id
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(threshold: f64) -> TreeModel {
        TreeModel::from_json_value(&json!({
            "n_features": 1,
            "n_classes": 2,
            "nodes": [
                {"id": 0, "kind": "split", "feature": 0, "threshold": threshold, "left": 1, "right": 2},
                {"id": 1, "kind": "leaf", "class": 0},
                {"id": 2, "kind": "leaf", "class": 1}
            ]
        }))
        .unwrap()
    }

    #[test]
    fn single_leaf_document() {
        let m = TreeModel::from_json_value(&json!({
            "nodes": [{"id": 0, "kind": "leaf", "class": 1}],
            "n_features": 4
        }))
        .unwrap();
        assert_eq!(m.n_leaves(), 1);
        assert_eq!(m.n_splits(), 0);
        assert_eq!(m.n_classes(), 2);
        assert_eq!(m.predict(&[9.0, -3.0, 0.0, 1.0]).unwrap(), 1);
        assert_eq!(m.balance(), 0);
    }

    #[test]
    fn stump_boundary_goes_left() {
        let m = stump(0.5);
        assert_eq!(m.n_splits(), 1);
        assert_eq!(m.n_leaves(), 2);
        assert_eq!(m.predict(&[0.5]).unwrap(), 0);
        assert_eq!(m.predict(&[0.5000001]).unwrap(), 1);
        assert_eq!(m.balance(), 0);
    }

    #[test]
    fn predict_rejects_wrong_length() {
        assert!(matches!(
            stump(0.5).predict(&[0.1, 0.2]),
            Err(Error::LengthMismatch {
                expected: 1,
                actual: 2
            })
        ));
    }

    #[test]
    fn balance_of_hand_built_tree() {
        // root(0) -> left: split(1) with split(2){3,4} and leaf 5 (5 nodes); right: leaf 6
        let m = TreeModel::from_json_value(&json!({
            "n_features": 2,
            "nodes": [
                {"id": 0, "kind": "split", "feature": 0, "threshold": 0.5, "left": 1, "right": 6},
                {"id": 1, "kind": "split", "feature": 1, "threshold": 0.5, "left": 2, "right": 5},
                {"id": 2, "kind": "split", "feature": 0, "threshold": 0.2, "left": 3, "right": 4},
                {"id": 3, "kind": "leaf", "class": 0},
                {"id": 4, "kind": "leaf", "class": 1},
                {"id": 5, "kind": "leaf", "class": 0},
                {"id": 6, "kind": "leaf", "class": 1}
            ]
        }))
        .unwrap();
        assert_eq!(m.balance(), 4);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let err = TreeModel::from_json_value(&json!({
            "n_features": 1,
            "nodes": [
                {"id": 0, "kind": "split", "feature": 0, "left": 1, "right": 2},
                {"id": 1, "kind": "leaf", "class": 0},
                {"id": 2, "kind": "leaf", "class": 1}
            ]
        }))
        .unwrap_err();
        assert!(err.to_string().contains("nodes[0].threshold"), "{err}");

        let err = TreeModel::from_json_value(&json!({"nodes": []})).unwrap_err();
        assert!(err.to_string().contains("n_features"), "{err}");
    }

    #[test]
    fn structural_errors() {
        let cyc = json!({
            "n_features": 1,
            "nodes": [
                {"id": 0, "kind": "split", "feature": 0, "threshold": 0.5, "left": 1, "right": 2},
                {"id": 1, "kind": "split", "feature": 0, "threshold": 0.2, "left": 2, "right": 1},
                {"id": 2, "kind": "leaf", "class": 0}
            ]
        });
        assert!(matches!(
            TreeModel::from_json_value(&cyc),
            Err(Error::Structure(_))
        ));

        let dangling = json!({
            "n_features": 1,
            "nodes": [
                {"id": 0, "kind": "split", "feature": 0, "threshold": 0.5, "left": 1, "right": 7},
                {"id": 1, "kind": "leaf", "class": 0}
            ]
        });
        assert!(matches!(
            TreeModel::from_json_value(&dangling),
            Err(Error::Structure(_))
        ));

        let orphan = json!({
            "n_features": 1,
            "nodes": [
                {"id": 0, "kind": "leaf", "class": 0},
                {"id": 1, "kind": "leaf", "class": 0}
            ]
        });
        assert!(matches!(
            TreeModel::from_json_value(&orphan),
            Err(Error::Structure(_))
        ));

        let bad_feature = json!({
            "n_features": 1,
            "nodes": [
                {"id": 0, "kind": "split", "feature": 3, "threshold": 0.5, "left": 1, "right": 2},
                {"id": 1, "kind": "leaf", "class": 0},
                {"id": 2, "kind": "leaf", "class": 1}
            ]
        });
        assert!(matches!(
            TreeModel::from_json_value(&bad_feature),
            Err(Error::FeatureOutOfRange { feature: 3, .. })
        ));
    }

    #[test]
    fn inconsistent_path_is_rejected() {
        // x <= 0.3 then x > 0.5 is unsatisfiable
        let doc = json!({
            "n_features": 1,
            "nodes": [
                {"id": 0, "kind": "split", "feature": 0, "threshold": 0.3, "left": 1, "right": 4},
                {"id": 1, "kind": "split", "feature": 0, "threshold": 0.5, "left": 2, "right": 3},
                {"id": 2, "kind": "leaf", "class": 0},
                {"id": 3, "kind": "leaf", "class": 1},
                {"id": 4, "kind": "leaf", "class": 1}
            ]
        });
        assert!(matches!(
            TreeModel::from_json_value(&doc),
            Err(Error::EmptyInterval {
                leaf: 3,
                feature: 0
            })
        ));
    }

    #[test]
    fn complete_random_tree_is_balanced() {
        for seed in 0..5 {
            let m = random_tree(3, 3, 1.0, seed);
            assert_eq!(m.n_leaves(), 8);
            assert_eq!(m.balance(), 0);
        }
    }

    #[test]
    fn zero_bias_grows_a_chain() {
        let m = random_tree(3, 3, 0.0, 11);
        assert_eq!(m.nodes().len(), 7);
        assert_eq!(m.n_leaves(), 4);
        // one side of the root is a single leaf, the other holds the chain
        let chain = m.nodes().len() - 1 - 1;
        assert_eq!(chain, 5);
        assert_eq!(m.balance(), chain - 1);
    }

    #[test]
    fn random_tree_is_deterministic() {
        assert_eq!(random_tree(5, 6, 0.4, 99), random_tree(5, 6, 0.4, 99));
        assert_ne!(random_tree(5, 6, 0.4, 99), random_tree(5, 6, 0.4, 100));
    }
}
