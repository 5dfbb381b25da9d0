//! CART classification tree with Gini impurity and axis-aligned splits.

use super::FeatureMatrix;
use crate::class::{argmax_lowest, PatternClass};

/// Gains at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Leaf(PatternClass),
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    nodes: Vec<TreeNode>,
    features: usize,
}

fn gini(counts: &[usize; 3], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize; 3]) -> PatternClass {
    PatternClass::ALL[argmax_lowest(&counts.map(|c| c as f64))]
}

struct Builder<'a> {
    f: &'a FeatureMatrix,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; 3] {
        let mut c = [0; 3];
        for &i in idx {
            c[self.f.labels()[i].index()] += 1;
        }
        c
    }

    /// Best (gain, feature, threshold) over all features, first found wins ties.
    fn best_split(&self, idx: &[usize], parent: &[usize; 3]) -> Option<(f64, usize, f64)> {
        let n = idx.len();
        let parent_gini = gini(parent, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.to_vec();
        for feat in 0..self.f.features() {
            let value = |i: usize| self.f.coords().get(feat, i);
            order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
            let mut left = [0usize; 3];
            for k in 0..n - 1 {
                left[self.f.labels()[order[k]].index()] += 1;
                let (lo, hi) = (value(order[k]), value(order[k + 1]));
                if lo == hi {
                    continue;
                }
                let nl = k + 1;
                let nr = n - nl;
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let right = [parent[0] - left[0], parent[1] - left[1], parent[2] - left[2]];
                let weighted = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let gain = parent_gini - weighted;
                if gain > MIN_GAIN && best.is_none_or(|b| gain > b.0) {
                    let mid = lo + (hi - lo) / 2.0;
                    // adjacent floats can round the midpoint up to `hi`
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((gain, feat, threshold));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let me = self.nodes.len();
        self.nodes.push(TreeNode::Leaf(majority(&counts)));
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || idx.len() < 2 * self.min_leaf.max(1) {
            return me;
        }
        let Some((_, feature, threshold)) = self.best_split(&idx, &counts) else {
            return me;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.f.coords().get(feature, i) <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }
}

impl TreeModel {
    /// Grows until nodes are pure, `max_depth` is reached, or no split keeps
    /// `min_leaf` samples on both sides. Thresholds are midpoints between
    /// consecutive distinct feature values.
    pub fn fit(f: &FeatureMatrix, max_depth: usize, min_leaf: usize) -> Self {
        let mut b = Builder {
            f,
            max_depth,
            min_leaf: min_leaf.max(1),
            nodes: Vec::new(),
        };
        b.grow((0..f.samples()).collect(), 0);
        TreeModel {
            nodes: b.nodes,
            features: f.features(),
        }
    }

    pub(crate) fn from_nodes(nodes: Vec<TreeNode>, features: usize) -> Option<Self> {
        let ok = !nodes.is_empty()
            && nodes.iter().all(|n| match *n {
                TreeNode::Leaf(_) => true,
                TreeNode::Split { feature, left, right, .. } => {
                    feature < features && left < nodes.len() && right < nodes.len()
                }
            })
            // preorder: children come after their parent, so walks terminate
            && nodes.iter().enumerate().all(|(i, n)| match *n {
                TreeNode::Leaf(_) => true,
                TreeNode::Split { left, right, .. } => left > i && right > i,
            });
        ok.then_some(TreeModel { nodes, features })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf(_) => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, x: &[f64]) -> PatternClass {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf(c) => return c,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use proptest::prelude::*;
    use PatternClass::*;

    fn fm1(xs: &[f64], labels: &[PatternClass]) -> FeatureMatrix {
        FeatureMatrix::new(DenseMatrix::from_col_major(1, xs.len(), xs.to_vec()).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn single_class_is_one_leaf() {
        let t = TreeModel::fit(&fm1(&[1.0, 2.0, 3.0], &[Mixed; 3]), 32, 1);
        assert_eq!(t.nodes(), &[TreeNode::Leaf(Mixed)]);
    }

    #[test]
    fn separable_1d_split() {
        let f = fm1(&[0.0, 1.0, 10.0, 11.0], &[Dots, Dots, Fingers, Fingers]);
        // exhaustive enumeration: only the cut between 1 and 10 is pure
        let t = TreeModel::fit(&f, 32, 1);
        match t.nodes()[0] {
            TreeNode::Split { threshold, .. } => {
                assert!(threshold > 1.0 && threshold < 10.0);
                assert_eq!(threshold, 5.5);
            }
            _ => panic!("expected a split"),
        }
        for j in 0..4 {
            assert_eq!(t.predict(f.sample(j)), f.labels()[j]);
        }
    }

    #[test]
    fn contradictory_duplicates_terminate() {
        let f = fm1(&[2.0, 2.0, 2.0], &[Fingers, Dots, Fingers]);
        let t = TreeModel::fit(&f, 32, 1);
        assert_eq!(t.nodes(), &[TreeNode::Leaf(Fingers)]);
        let tie = TreeModel::fit(&fm1(&[2.0, 2.0], &[Fingers, Dots]), 32, 1);
        assert_eq!(tie.nodes(), &[TreeNode::Leaf(Dots)]);
    }

    #[test]
    fn depth_and_leaf_limits() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let labels: Vec<PatternClass> = (0..12).map(|i| PatternClass::ALL[i % 3]).collect();
        let f = fm1(&xs, &labels);
        assert!(TreeModel::fit(&f, 2, 1).depth() <= 2);
        let t = TreeModel::fit(&f, 32, 3);
        let mut sizes = vec![0usize; t.nodes().len()];
        for j in 0..12 {
            let mut i = 0;
            while let TreeNode::Split { feature, threshold, left, right } = t.nodes()[i] {
                i = if f.sample(j)[feature] <= threshold { left } else { right };
            }
            sizes[i] += 1;
        }
        for (i, n) in t.nodes().iter().enumerate() {
            if matches!(n, TreeNode::Leaf(_)) {
                assert!(sizes[i] >= 3);
            }
        }
    }

    proptest! {
        #[test]
        fn monotone_feature_transform_keeps_training_predictions(
            pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, 0usize..3), 2..40)
        ) {
            let labels: Vec<PatternClass> = pts.iter().map(|p| PatternClass::ALL[p.2]).collect();
            let cols: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0, p.1]).collect();
            let warped: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0.powi(3) + 2.0 * p.0, (p.1 / 10.0).exp()]).collect();
            let a = FeatureMatrix::new(DenseMatrix::from_columns(&cols).unwrap(), labels.clone()).unwrap();
            let b = FeatureMatrix::new(DenseMatrix::from_columns(&warped).unwrap(), labels).unwrap();
            let ta = TreeModel::fit(&a, 32, 1);
            let tb = TreeModel::fit(&b, 32, 1);
            for j in 0..pts.len() {
                prop_assert_eq!(ta.predict(a.sample(j)), tb.predict(b.sample(j)));
            }
        }
    }
}
