use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::loss::GradientPair;
use crate::par::{self, Execution};

/// Below this many (row, feature) cells a node's split search stays on the
/// calling thread.
const PARALLEL_MIN_CELLS: usize = 8192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

/// A binary regression tree stored in preorder; the root is `nodes[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn leaf(weight: f64) -> Self {
        RegressionTree {
            nodes: vec![TreeNode::Leaf { weight }],
        }
    }

    /// Build from a preorder node list, checking child indices.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self, String> {
        if nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut next = 1;
        Self::check_preorder(&nodes, 0, &mut next)?;
        if next != nodes.len() {
            return Err(format!("{} unreachable nodes", nodes.len() - next));
        }
        Ok(RegressionTree { nodes })
    }

    fn check_preorder(nodes: &[TreeNode], at: usize, next: &mut usize) -> Result<(), String> {
        match nodes.get(at) {
            None => Err(format!("child index {at} out of range")),
            Some(TreeNode::Leaf { .. }) => Ok(()),
            Some(TreeNode::Split { left, right, .. }) => {
                if *left != *next {
                    return Err(format!("node {at}: left child {left} is not preorder {next}"));
                }
                *next += 1;
                Self::check_preorder(nodes, *left, next)?;
                if *right != *next {
                    return Err(format!("node {at}: right child {right} is not preorder {next}"));
                }
                *next += 1;
                Self::check_preorder(nodes, *right, next)
            }
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_weights().count()
    }

    pub fn leaf_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { weight } => Some(*weight),
            _ => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// γ·K + ½λ‖w‖²
    pub fn penalty(&self, gamma: f64, lambda: f64) -> f64 {
        let sq: f64 = self.leaf_weights().map(|w| w * w).sum();
        gamma * self.leaf_count() as f64 + 0.5 * lambda * sq
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] < *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// w* = −G/(H+λ)
pub fn leaf_weight(sum: GradientPair, lambda: f64) -> f64 {
    let w = -sum.g / (sum.h + lambda);
    if w.is_finite() {
        w
    } else {
        0.0
    }
}

fn score(sum: GradientPair, lambda: f64) -> f64 {
    let d = sum.h + lambda;
    if d > 0.0 {
        sum.g * sum.g / d
    } else {
        0.0
    }
}

/// ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ
pub fn split_gain(left: GradientPair, right: GradientPair, lambda: f64, gamma: f64) -> f64 {
    0.5 * (score(left, lambda) + score(right, lambda) - score(left + right, lambda)) - gamma
}

/// Midpoint strictly above `lo` so that `lo` goes left and `hi` goes right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}

/// Best threshold on one feature over the rows in `rows`.
///
/// Candidates are midpoints between consecutive distinct sorted values. Ties
/// go to the lowest threshold. `None` when no candidate has positive gain.
pub fn best_split(
    x: &[FeatureVector],
    grads: &[GradientPair],
    rows: &[usize],
    feature: usize,
    lambda: f64,
    gamma: f64,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let mut order: Vec<(f64, GradientPair)> =
        rows.iter().map(|&r| (x[r][feature], grads[r])).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = order.iter().fold(GradientPair::ZERO, |acc, (_, gp)| acc + *gp);

    let mut best: Option<SplitCandidate> = None;
    let mut left = GradientPair::ZERO;
    for i in 0..order.len() - 1 {
        left = left + order[i].1;
        let (lo, hi) = (order[i].0, order[i + 1].0);
        if lo == hi {
            continue;
        }
        let gain = split_gain(left, total - left, lambda, gamma);
        if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitCandidate {
                feature,
                threshold: midpoint(lo, hi),
                gain,
            });
        }
    }
    best
}

/// Greedy depth-limited tree on the given gradients. Every row of `x` is used.
pub fn fit_tree(
    x: &[FeatureVector],
    grads: &[GradientPair],
    params: &TreeParams,
    exec: Execution,
) -> RegressionTree {
    assert_eq!(x.len(), grads.len(), "features/gradients length");
    assert!(!x.is_empty(), "fit_tree needs at least one sample");
    let rows: Vec<usize> = (0..x.len()).collect();
    let mut nodes = Vec::new();
    grow(x, grads, &rows, 0, params, exec, &mut nodes);
    RegressionTree { nodes }
}

fn grow(
    x: &[FeatureVector],
    grads: &[GradientPair],
    rows: &[usize],
    depth: usize,
    params: &TreeParams,
    exec: Execution,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let at = nodes.len();
    let sum = rows
        .iter()
        .fold(GradientPair::ZERO, |acc, &r| acc + grads[r]);
    let split = if depth < params.max_depth {
        find_split(x, grads, rows, params, exec)
    } else {
        None
    };
    let Some(split) = split else {
        nodes.push(TreeNode::Leaf {
            weight: leaf_weight(sum, params.lambda),
        });
        return at;
    };

    let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| x[r][split.feature] < split.threshold);
    nodes.push(TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: 0,
        right: 0,
    });
    let left = grow(x, grads, &l_rows, depth + 1, params, exec, nodes);
    let right = grow(x, grads, &r_rows, depth + 1, params, exec, nodes);
    if let TreeNode::Split {
        left: l, right: r, ..
    } = &mut nodes[at]
    {
        *l = left;
        *r = right;
    }
    at
}

fn find_split(
    x: &[FeatureVector],
    grads: &[GradientPair],
    rows: &[usize],
    params: &TreeParams,
    exec: Execution,
) -> Option<SplitCandidate> {
    let n_features = x[rows[0]].len();
    let exec = if rows.len() * n_features >= PARALLEL_MIN_CELLS {
        exec
    } else {
        Execution::Sequential
    };
    let per_feature = par::map_range(exec, n_features, |f| {
        best_split(x, grads, rows, f, params.lambda, params.gamma)
    });
    // Lowest feature index wins ties.
    per_feature
        .into_iter()
        .flatten()
        .fold(None, |best: Option<SplitCandidate>, c| match best {
            Some(b) if b.gain >= c.gain => Some(b),
            _ => Some(c),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::loss::compute_gradients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col(values: &[f64]) -> Vec<FeatureVector> {
        values
            .iter()
            .map(|&v| FeatureVector::new(vec![v]).unwrap())
            .collect()
    }

    fn all(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn identical_values_have_no_split() {
        let x = col(&[1.0, 1.0, 1.0]);
        let g = compute_gradients(&[0.0, 5.0, 10.0], &[0.0; 3]);
        assert!(best_split(&x, &g, &all(3), 0, 0.0, 0.0).is_none());
    }

    #[test]
    fn two_sample_gain_by_hand() {
        // g = −2y, h = 2 → g₁ = 0, g₂ = −20.
        // ½[0/2 + 400/2 − 400/4] = ½[200 − 100] = 50
        let x = col(&[1.0, 2.0]);
        let g = compute_gradients(&[0.0, 10.0], &[0.0, 0.0]);
        let s = best_split(&x, &g, &all(2), 0, 0.0, 0.0).unwrap();
        assert_eq!(s.gain, 50.0);
        assert_eq!(s.threshold, 1.5);
        assert!(best_split(&x, &g, &all(2), 0, 0.0, 50.0).is_none());
        assert!(best_split(&x, &g, &all(2), 0, 0.0, 49.0).is_some());
    }

    #[test]
    fn single_sample_leaf_weight() {
        let x = col(&[3.0]);
        let g = compute_gradients(&[4.0], &[0.0]);
        let t = fit_tree(
            &x,
            &g,
            &TreeParams { max_depth: 3, lambda: 0.0, gamma: 0.0 },
            Execution::Sequential,
        );
        assert_eq!(t.nodes(), &[TreeNode::Leaf { weight: 4.0 }]);
        assert_eq!(t.leaf_count(), 1);
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let x = col(&[0.0, 1.0, 2.0, 3.0]);
        let g = compute_gradients(&[5.0, -3.0, 8.0, 1.0], &[0.0; 4]);
        let t = fit_tree(
            &x,
            &g,
            &TreeParams { max_depth: 3, lambda: 1e12, gamma: 0.0 },
            Execution::Sequential,
        );
        assert!(t.leaf_weights().all(|w| w.abs() < 1e-9));
    }

    #[test]
    fn separable_pair_recovers_residuals() {
        let x = col(&[0.0, 1.0]);
        let g = compute_gradients(&[3.0, -7.0], &[0.0, 0.0]);
        let t = fit_tree(
            &x,
            &g,
            &TreeParams { max_depth: 1, lambda: 0.0, gamma: 0.0 },
            Execution::Sequential,
        );
        assert_eq!(t.leaf_weights().collect::<Vec<_>>(), vec![3.0, -7.0]);
        assert_eq!(t.predict(&[0.0]), 3.0);
        assert_eq!(t.predict(&[1.0]), -7.0);
    }

    /// Exhaustive oracle: every cut position of the sorted rows, written
    /// against the gain definition without sharing the scan.
    fn brute_force(values: &[f64], grads: &[GradientPair], lambda: f64, gamma: f64) -> Option<(f64, f64)> {
        let mut distinct: Vec<f64> = values.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mut best: Option<(f64, f64)> = None;
        for w in distinct.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for (v, gp) in values.iter().zip(grads) {
                if *v < thr {
                    gl += gp.g;
                    hl += gp.h;
                } else {
                    gr += gp.g;
                    hr += gp.h;
                }
            }
            let (g, h) = (gl + gr, hl + hr);
            let gain = 0.5
                * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
                - gamma;
            if gain > 0.0 && best.is_none_or(|(_, bg)| gain > bg) {
                best = Some((thr, gain));
            }
        }
        best
    }

    #[test]
    fn matches_brute_force_on_small_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..=8);
            // Small integer grid so ties in values occur.
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda = rng.random_range(0.0..2.0);
            let gamma = rng.random_range(0.0..3.0);
            let g = compute_gradients(&y, &p);
            let got = best_split(&col(&values), &g, &all(n), 0, lambda, gamma)
                .map(|s| (s.threshold, s.gain));
            let want = brute_force(&values, &g, lambda, gamma);
            match (got, want) {
                (None, None) => {}
                (Some((t1, g1)), Some((t2, g2))) => {
                    assert_eq!(t1, t2);
                    assert!((g1 - g2).abs() <= 1e-9 * g2.abs().max(1.0));
                }
                other => panic!("mismatch {other:?} on {values:?}"),
            }
        }
    }

    #[test]
    fn depth_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<FeatureVector> = (0..200)
            .map(|_| FeatureVector::new(vec![rng.random(), rng.random()]).unwrap())
            .collect();
        let y: Vec<f64> = x.iter().map(|f| (f[0] * 10.0).sin() + f[1]).collect();
        let g = compute_gradients(&y, &vec![0.0; y.len()]);
        for d in 0..5 {
            let t = fit_tree(
                &x,
                &g,
                &TreeParams { max_depth: d, lambda: 1.0, gamma: 0.0 },
                Execution::Sequential,
            );
            assert!(t.depth() <= d);
            assert!(t.leaf_count() <= 1 << d);
            assert_eq!(RegressionTree::from_nodes(t.nodes().to_vec()).unwrap(), t);
        }
    }

    #[test]
    fn parallel_and_sequential_trees_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<FeatureVector> = (0..3000)
            .map(|_| FeatureVector::new((0..5).map(|_| rng.random()).collect()).unwrap())
            .collect();
        let y: Vec<f64> = x.iter().map(|f| f[0] * 3.0 - f[3] + f[4] * f[1]).collect();
        let g = compute_gradients(&y, &vec![0.0; y.len()]);
        let p = TreeParams { max_depth: 4, lambda: 1.0, gamma: 0.0 };
        assert_eq!(
            fit_tree(&x, &g, &p, Execution::Sequential),
            fit_tree(&x, &g, &p, Execution::Parallel)
        );
    }

    #[test]
    fn from_nodes_rejects_bad_links() {
        let bad = vec![
            TreeNode::Split { feature: 0, threshold: 1.0, left: 2, right: 1 },
            TreeNode::Leaf { weight: 0.0 },
            TreeNode::Leaf { weight: 1.0 },
        ];
        assert!(RegressionTree::from_nodes(bad).is_err());
        assert!(RegressionTree::from_nodes(vec![]).is_err());
    }
}
