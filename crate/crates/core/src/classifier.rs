//! Deterministic multi-class CART tree over binary features.
//!
//! Splits use Gini impurity. With binary features the candidate split set
//! is exactly the feature set, so every node evaluates each feature once.
//! Ties are broken toward the smallest feature index and the smallest class
//! id, which makes training reproducible byte for byte. No pruning and no
//! class reweighting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::representation::{FeatureVector, LabeledInstance};

/// Gains closer than this are treated as equal, so the lower feature index wins.
const GAIN_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("class counts are empty")]
    EmptyCounts,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("instance {index} has {found} features, expected {expected}")]
    InconsistentFeatureLength { index: usize, expected: usize, found: usize },
    #[error("feature vector has {found} values, model expects {expected}")]
    FeatureLengthMismatch { expected: usize, found: usize },
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_gain: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 25,
            min_samples_split: 2,
            min_gain: 1e-12,
        }
    }
}

impl TreeParams {
    pub fn check(&self) -> Result<(), ClassifierError> {
        if self.max_depth < 1 {
            return Err(ClassifierError::InvalidParams("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(ClassifierError::InvalidParams("min_samples_split must be >= 2".into()));
        }
        if !(self.min_gain > 0.0) {
            return Err(ClassifierError::InvalidParams("min_gain must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// `left` is taken when the feature bit is 0, `right` when it is 1.
    Split {
        feature_index: usize,
        left: usize,
        right: usize,
    },
    Leaf {
        predicted_class: String,
        /// Training counts aligned with `DecisionTreeModel::classes`.
        class_histogram: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    /// Pre-order; the root is node 0.
    pub nodes: Vec<Node>,
    /// Sorted class ids seen in training.
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
}

/// `1 − Σ pᵢ²` over the given counts.
pub fn gini_impurity<'a>(counts: impl IntoIterator<Item = &'a usize>) -> Result<f64, ClassifierError> {
    let counts: Vec<usize> = counts.into_iter().copied().collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(ClassifierError::EmptyCounts);
    }
    Ok(gini_of(&counts, total))
}

fn gini_of(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

/// Training rows as class indices and bit vectors.
struct TrainingSet<'a> {
    labels: Vec<usize>,
    features: Vec<&'a [bool]>,
    n_classes: usize,
}

impl<'a> TrainingSet<'a> {
    fn histogram(&self, rows: &[usize]) -> Vec<usize> {
        let mut h = vec![0; self.n_classes];
        for &r in rows {
            h[self.labels[r]] += 1;
        }
        h
    }

    /// Best `(feature, gain)` over `rows`, or None when nothing clears `min_gain`.
    fn best_split(&self, rows: &[usize], n_features: usize, min_gain: f64) -> Option<(usize, f64)> {
        let n = rows.len();
        let parent = self.histogram(rows);
        let parent_gini = gini_of(&parent, n);
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n_features {
            let mut right = vec![0usize; self.n_classes];
            for &r in rows {
                if self.features[r][k] {
                    right[self.labels[r]] += 1;
                }
            }
            let n_right: usize = right.iter().sum();
            let n_left = n - n_right;
            if n_left == 0 || n_right == 0 {
                continue;
            }
            let left: Vec<usize> = parent.iter().zip(&right).map(|(p, r)| p - r).collect();
            let weighted = (n_left as f64 * gini_of(&left, n_left)
                + n_right as f64 * gini_of(&right, n_right))
                / n as f64;
            let gain = parent_gini - weighted;
            if best.is_none_or(|(_, g)| gain > g + GAIN_TIE_EPS) {
                best = Some((k, gain));
            }
        }
        best.filter(|&(_, g)| g >= min_gain)
    }

    /// Lowest feature splitting `rows` into two non-empty groups.
    fn first_separating(&self, rows: &[usize], n_features: usize) -> Option<usize> {
        (0..n_features).find(|&k| {
            let ones = rows.iter().filter(|&&r| self.features[r][k]).count();
            ones > 0 && ones < rows.len()
        })
    }
}

fn training_set(instances: &[LabeledInstance]) -> Result<(TrainingSet<'_>, Vec<String>, usize), ClassifierError> {
    let first = instances.first().ok_or(ClassifierError::EmptyTrainingSet)?;
    let n_features = first.features.len();
    for (index, inst) in instances.iter().enumerate() {
        if inst.features.len() != n_features {
            return Err(ClassifierError::InconsistentFeatureLength {
                index,
                expected: n_features,
                found: inst.features.len(),
            });
        }
    }
    let mut classes: Vec<String> = instances.iter().map(|i| i.label.clone()).collect();
    classes.sort();
    classes.dedup();
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let set = TrainingSet {
        labels: instances.iter().map(|i| index[i.label.as_str()]).collect(),
        features: instances.iter().map(|i| i.features.0.as_slice()).collect(),
        n_classes: classes.len(),
    };
    Ok((set, classes, n_features))
}

/// Exhaustive best split for a set of instances using default parameters.
/// Returns `None` for pure or unsplittable sets.
pub fn best_split(instances: &[LabeledInstance]) -> Option<(usize, f64)> {
    let (set, _, n_features) = training_set(instances).ok()?;
    let rows: Vec<usize> = (0..instances.len()).collect();
    set.best_split(&rows, n_features, TreeParams::default().min_gain)
}

fn majority(histogram: &[usize]) -> usize {
    // first maximum = smallest class id
    let mut best = 0;
    for (i, &c) in histogram.iter().enumerate() {
        if c > histogram[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a> {
    set: TrainingSet<'a>,
    classes: Vec<String>,
    n_features: usize,
    params: TreeParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let histogram = self.set.histogram(&rows);
        let pure = histogram.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure || depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            None
        } else {
            // An impure node with no informative split (XOR-like data) still
            // splits on its lowest separating feature, as long as one exists.
            self.set
                .best_split(&rows, self.n_features, self.params.min_gain)
                .map(|(k, _)| k)
                .or_else(|| self.set.first_separating(&rows, self.n_features))
        };

        let id = self.nodes.len();
        match split {
            None => {
                let predicted_class = self.classes[majority(&histogram)].clone();
                self.nodes.push(Node::Leaf { predicted_class, class_histogram: histogram });
            }
            Some(feature_index) => {
                self.nodes.push(Node::Split { feature_index, left: 0, right: 0 });
                let (ones, zeros): (Vec<usize>, Vec<usize>) =
                    rows.into_iter().partition(|&r| self.set.features[r][feature_index]);
                let left = self.grow(zeros, depth + 1);
                let right = self.grow(ones, depth + 1);
                self.nodes[id] = Node::Split { feature_index, left, right };
            }
        }
        id
    }
}

/// Fits a tree. `feature_names` labels the columns in rendered output and
/// may be empty, in which case columns are named `f0`, `f1`, ...
pub fn fit(
    instances: &[LabeledInstance],
    feature_names: &[String],
    params: &TreeParams,
) -> Result<DecisionTreeModel, ClassifierError> {
    params.check()?;
    let (set, classes, n_features) = training_set(instances)?;
    let feature_names = if feature_names.len() == n_features {
        feature_names.to_vec()
    } else {
        (0..n_features).map(|k| format!("f{k}")).collect()
    };
    let mut builder = Builder {
        set,
        classes,
        n_features,
        params: params.clone(),
        nodes: Vec::new(),
    };
    builder.grow((0..instances.len()).collect(), 0);
    Ok(DecisionTreeModel {
        nodes: builder.nodes,
        classes: builder.classes,
        feature_names,
    })
}

impl DecisionTreeModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<&str, ClassifierError> {
        if features.len() != self.n_features() {
            return Err(ClassifierError::FeatureLengthMismatch {
                expected: self.n_features(),
                found: features.len(),
            });
        }
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                Node::Split { feature_index, left, right } => {
                    node = if features.bit(*feature_index) { *right } else { *left };
                }
                Node::Leaf { predicted_class, .. } => return Ok(predicted_class),
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

pub fn predict<'m>(model: &'m DecisionTreeModel, features: &FeatureVector) -> Result<&'m str, ClassifierError> {
    model.predict(features)
}

/// Indented text rendering: one line per node.
///
/// ```text
/// Bed|Pressure|Bedroom?
///   0: Door|Magnetic|Kitchen?
///     0: => Idle [Idle: 12, Snack: 1]
///     1: => Snack [Snack: 4]
///   1: => Sleeping [Sleeping: 40]
/// ```
pub fn render_tree(model: &DecisionTreeModel) -> String {
    fn line(model: &DecisionTreeModel, out: &mut String, node: usize, depth: usize, branch: Option<u8>) {
        let indent = "  ".repeat(depth);
        let prefix = branch.map(|b| format!("{b}: ")).unwrap_or_default();
        match &model.nodes[node] {
            Node::Split { feature_index, left, right } => {
                let _ = writeln!(out, "{indent}{prefix}{}?", model.feature_names[*feature_index]);
                line(model, out, *left, depth + 1, Some(0));
                line(model, out, *right, depth + 1, Some(1));
            }
            Node::Leaf { predicted_class, class_histogram } => {
                let hist: Vec<String> = model
                    .classes
                    .iter()
                    .zip(class_histogram)
                    .filter(|(_, &c)| c > 0)
                    .map(|(name, c)| format!("{name}: {c}"))
                    .collect();
                let _ = writeln!(out, "{indent}{prefix}=> {predicted_class} [{}]", hist.join(", "));
            }
        }
    }
    let mut out = String::new();
    line(model, &mut out, 0, 0, None);
    out
}
