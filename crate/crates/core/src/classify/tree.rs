use serde::{Deserialize, Serialize};

use super::{check_data, class_counts, ClassifierModel, ClassifyError, LabeledVector};
use crate::signal_io::EmotionLabel;

/// Minimum examples per present class for tree training.
pub const MIN_EXAMPLES_PER_CLASS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Nodes smaller than this are leaves, and no split may create a child
    /// smaller than this.
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        leaf: f64,
    },
}

/// Least-squares regression tree with axis-aligned splits; `x <= threshold`
/// goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: TreeNode,
}

impl RegressionTree {
    pub fn fit(features: &[&[f64]], targets: &[f64], config: &TreeConfig) -> Self {
        let idx: Vec<usize> = (0..targets.len()).collect();
        Self {
            root: grow(features, targets, idx, 0, config),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { leaf } => return *leaf,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn leaves(&self) -> Vec<f64> {
        fn walk(n: &TreeNode, out: &mut Vec<f64>) {
            match n {
                TreeNode::Leaf { leaf } => out.push(*leaf),
                TreeNode::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn grow(features: &[&[f64]], targets: &[f64], idx: Vec<usize>, depth: usize, cfg: &TreeConfig) -> TreeNode {
    let n = idx.len();
    let sum: f64 = idx.iter().map(|&i| targets[i]).sum();
    let leaf = TreeNode::Leaf { leaf: sum / n as f64 };
    if depth >= cfg.max_depth || n < cfg.min_leaf.max(2) {
        return leaf;
    }
    let Some(best) = best_split(features, targets, &idx, cfg.min_leaf.max(1)) else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| features[i][best.feature] <= best.threshold);
    TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(features, targets, left, depth + 1, cfg)),
        right: Box::new(grow(features, targets, right, depth + 1, cfg)),
    }
}

/// Exhaustive search for the split with the largest reduction in squared
/// error. Ties keep the lowest feature index, then the lowest threshold.
#[allow(clippy::needless_range_loop)]
fn best_split(features: &[&[f64]], targets: &[f64], idx: &[usize], min_child: usize) -> Option<BestSplit> {
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| targets[i]).sum();
    let parent = total * total / n as f64;
    let d = features[idx[0]].len();
    let mut best: Option<BestSplit> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for f in 0..d {
        pairs.clear();
        pairs.extend(idx.iter().map(|&i| (features[i][f], targets[i])));
        // Sorting on (x, y) makes the sums independent of input order.
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += pairs[k].1;
            let n_left = k + 1;
            let n_right = n - n_left;
            if pairs[k].0 == pairs[k + 1].0 || n_left < min_child || n_right < min_child {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64 - parent;
            if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(BestSplit {
                    gain,
                    feature: f,
                    threshold,
                });
            }
        }
    }
    best
}

/// One indicator-regression tree per class seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationViaRegression {
    pub n_features: usize,
    pub config: TreeConfig,
    pub trees: Vec<(EmotionLabel, RegressionTree)>,
}

impl ClassificationViaRegression {
    pub fn predict(&self, x: &[f64]) -> EmotionLabel {
        let mut best = (self.trees[0].0, f64::NEG_INFINITY);
        for (label, tree) in &self.trees {
            let score = tree.predict(x);
            if score > best.1 {
                best = (*label, score);
            }
        }
        best.0
    }

    pub fn tree_for(&self, label: EmotionLabel) -> Option<&RegressionTree> {
        self.trees.iter().find(|(l, _)| *l == label).map(|(_, t)| t)
    }
}

pub fn train_cvr(data: &[LabeledVector], config: &TreeConfig) -> Result<ClassifierModel, ClassifyError> {
    let d = check_data(data)?;
    let counts = class_counts(data);
    let present: Vec<EmotionLabel> = EmotionLabel::ALL
        .into_iter()
        .filter(|l| counts[l.index()] > 0)
        .collect();
    if present.len() < 2 {
        return Err(ClassifyError::SingleClass);
    }
    if let Some(l) = present.iter().find(|l| counts[l.index()] < MIN_EXAMPLES_PER_CLASS) {
        return Err(ClassifyError::TooFewExamples(format!(
            "class {l} has {} examples, {MIN_EXAMPLES_PER_CLASS} required",
            counts[l.index()]
        )));
    }
    let features: Vec<&[f64]> = data.iter().map(|v| v.features.as_slice()).collect();
    let trees = present
        .into_iter()
        .map(|label| {
            let targets: Vec<f64> = data.iter().map(|v| f64::from(u8::from(v.label == label))).collect();
            (label, RegressionTree::fit(&features, &targets, config))
        })
        .collect();
    Ok(ClassifierModel::ClassificationViaRegression(
        ClassificationViaRegression {
            n_features: d,
            config: config.clone(),
            trees,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::super::{classification_accuracy, fixtures::three_blobs, split, SplitSpec};
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn cvr(model: &ClassifierModel) -> &ClassificationViaRegression {
        match model {
            ClassifierModel::ClassificationViaRegression(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_class_rejected() {
        let mut data = three_blobs(10, 1);
        data.iter_mut().for_each(|v| v.label = EmotionLabel::Joy);
        assert_eq!(
            train_cvr(&data, &TreeConfig::default()),
            Err(ClassifyError::SingleClass)
        );
    }

    #[test]
    fn too_few_per_class_rejected() {
        let mut data = three_blobs(10, 1);
        data.truncate(24); // 10 joy, 10 neutral, 4 anger
        assert!(matches!(
            train_cvr(&data, &TreeConfig::default()),
            Err(ClassifyError::TooFewExamples(_))
        ));
    }

    #[test]
    fn blobs_are_learned() {
        let data = three_blobs(100, 5);
        let (train, test) = split(
            &data,
            &SplitSpec {
                train_fraction: 0.66,
                seed: 8,
            },
        );
        let model = train_cvr(&train, &TreeConfig::default()).unwrap();
        assert!(classification_accuracy(&model, &test).unwrap() >= 95.0);
    }

    #[test]
    fn root_split_lands_in_margin_gap() {
        // Joy iff feature 0 < 0, with a gap (-0.5, 0.5) between classes.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut data = Vec::new();
        for i in 0..90 {
            let label = EmotionLabel::ALL[i % 3];
            let x0 = if label == EmotionLabel::Joy {
                rng.gen_range(-3.0..-0.5)
            } else {
                rng.gen_range(0.5..3.0)
            };
            data.push(LabeledVector {
                features: vec![x0, rng.gen_range(-3.0..3.0)],
                label,
                subject_id: "s".into(),
            });
        }
        let model = train_cvr(&data, &TreeConfig::default()).unwrap();
        let joy = cvr(&model).tree_for(EmotionLabel::Joy).unwrap();

        // Brute force over every candidate split: the perfect one on
        // feature 0 must be the unique maximiser.
        let y: Vec<f64> = data
            .iter()
            .map(|v| f64::from(u8::from(v.label == EmotionLabel::Joy)))
            .collect();
        let sse = |ys: &[f64]| {
            if ys.is_empty() {
                return 0.0;
            }
            let m = ys.iter().sum::<f64>() / ys.len() as f64;
            ys.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 9, 0.0);
        for f in 0..2 {
            for v in &data {
                let t = v.features[f];
                let (l, r): (Vec<f64>, Vec<f64>) = data.iter().zip(&y).map(|(d, yy)| (d.features[f] <= t, *yy)).fold(
                    (vec![], vec![]),
                    |(mut l, mut r), (left, yy)| {
                        if left {
                            l.push(yy)
                        } else {
                            r.push(yy)
                        }
                        (l, r)
                    },
                );
                let s = sse(&l) + sse(&r);
                if s < best.0 - 1e-12 {
                    best = (s, f, t);
                }
            }
        }
        assert_eq!(best.1, 0);
        assert!(best.0 < 1e-12);
        match &joy.root {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!(*threshold > -0.5 && *threshold < 0.5, "threshold {threshold}");
            }
            TreeNode::Leaf { .. } => panic!("root should split"),
        }
    }

    #[test]
    fn depth_and_leaf_limits() {
        let data = three_blobs(50, 6);
        let features: Vec<&[f64]> = data.iter().map(|v| v.features.as_slice()).collect();
        let y: Vec<f64> = (0..data.len()).map(|i| (i % 7) as f64).collect();
        let stump = RegressionTree::fit(
            &features,
            &y,
            &TreeConfig {
                max_depth: 0,
                min_leaf: 5,
            },
        );
        assert_eq!(stump.leaves().len(), 1);
        let deep = RegressionTree::fit(
            &features,
            &y,
            &TreeConfig {
                max_depth: 3,
                min_leaf: 5,
            },
        );
        assert!(deep.leaves().len() <= 8);

        fn min_leaf_size(n: &TreeNode, x: &[&[f64]], idx: Vec<usize>) -> usize {
            match n {
                TreeNode::Leaf { .. } => idx.len(),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[i][*feature] <= *threshold);
                    min_leaf_size(left, x, l).min(min_leaf_size(right, x, r))
                }
            }
        }
        let t = RegressionTree::fit(&features, &y, &TreeConfig::default());
        assert!(min_leaf_size(&t.root, &features, (0..features.len()).collect()) >= 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn leaves_are_indicator_means(seed in any::<u64>()) {
            let mut data = three_blobs(20, seed);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for v in &mut data {
                if rng.gen_bool(0.3) {
                    v.label = EmotionLabel::ALL[rng.gen_range(0..3)];
                }
            }
            if let Ok(model) = train_cvr(&data, &TreeConfig::default()) {
                for (_, t) in &cvr(&model).trees {
                    prop_assert!(t.leaves().iter().all(|&l| (0.0..=1.0).contains(&l)));
                }
            }
        }

        #[test]
        fn order_and_scale_do_not_matter(seed in any::<u64>(), c in 0.01f64..100.0) {
            let data = three_blobs(30, seed);
            let model = train_cvr(&data, &TreeConfig::default()).unwrap();

            let mut shuffled = data.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 1));
            let m2 = train_cvr(&shuffled, &TreeConfig::default()).unwrap();

            let scaled: Vec<LabeledVector> = data.iter().map(|v| LabeledVector {
                features: v.features.iter().map(|x| x * c).collect(),
                ..v.clone()
            }).collect();
            let m3 = train_cvr(&scaled, &TreeConfig::default()).unwrap();

            let probes = three_blobs(15, seed.wrapping_add(1));
            for p in &probes {
                let a = model.predict(&p.features).unwrap();
                prop_assert_eq!(a, m2.predict(&p.features).unwrap());
                let px: Vec<f64> = p.features.iter().map(|x| x * c).collect();
                prop_assert_eq!(a, m3.predict(&px).unwrap());
            }
        }
    }
}
