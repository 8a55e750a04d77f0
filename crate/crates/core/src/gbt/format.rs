//! Plain-text model format.
//!
//! ```text
//! gbt-model 1
//! window 5
//! base_score 0.4127
//! learning_rate 0.3
//! lambda 1.0
//! gamma 0.0
//! max_depth 4
//! trees 2
//! tree 0 3
//! split 2 0.515
//! leaf -0.0441
//! leaf 0.0873
//! tree 1 1
//! leaf 0.0
//! end
//! ```
//!
//! Header lines are `key value`. Each tree starts with `tree <index> <nodes>`
//! followed by exactly `<nodes>` lines in preorder: `split <feature>
//! <threshold>` (left subtree follows, then right) or `leaf <weight>`. Floats
//! are written in shortest round-trip form so parsing recovers identical bits.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use super::model::BoostedModel;
use super::tree::{RegressionTree, TreeNode};
use super::GbtError;

const MAGIC: &str = "gbt-model";
const VERSION: u32 = 1;

pub fn to_text(model: &BoostedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "window {}", model.window);
    let _ = writeln!(s, "base_score {:?}", model.base_score);
    let _ = writeln!(s, "learning_rate {:?}", model.learning_rate);
    let _ = writeln!(s, "lambda {:?}", model.lambda);
    let _ = writeln!(s, "gamma {:?}", model.gamma);
    let _ = writeln!(s, "max_depth {}", model.max_depth);
    let _ = writeln!(s, "trees {}", model.trees.len());
    for (i, t) in model.trees.iter().enumerate() {
        let _ = writeln!(s, "tree {i} {}", t.nodes().len());
        for n in t.nodes() {
            match n {
                TreeNode::Split {
                    feature, threshold, ..
                } => {
                    let _ = writeln!(s, "split {feature} {threshold:?}");
                }
                TreeNode::Leaf { weight } => {
                    let _ = writeln!(s, "leaf {weight:?}");
                }
            }
        }
    }
    s.push_str("end\n");
    s
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Lines {
            inner: it.peekable(),
        }
    }

    fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>), GbtError> {
        let (n, l) = self.inner.next().ok_or(GbtError::Parse {
            line: 0,
            msg: "unexpected end of input".into(),
        })?;
        Ok((n, l.split_whitespace().collect()))
    }

    fn keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, GbtError> {
        let (n, f) = self.next_fields()?;
        if f.len() != 2 || f[0] != key {
            return Err(err(n, format!("expected `{key} <value>`")));
        }
        parse(n, f[1])
    }
}

fn err(line: usize, msg: String) -> GbtError {
    GbtError::Parse { line, msg }
}

fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, GbtError> {
    s.parse().map_err(|_| err(line, format!("cannot parse `{s}`")))
}

pub fn from_text(text: &str) -> Result<BoostedModel, GbtError> {
    let mut lines = Lines::new(text);
    let (n, head) = lines.next_fields()?;
    if head.len() != 2 || head[0] != MAGIC {
        return Err(err(n, format!("expected `{MAGIC} <version>`")));
    }
    let version: u32 = parse(n, head[1])?;
    if version != VERSION {
        return Err(err(n, format!("unsupported version {version}")));
    }
    let window = lines.keyed("window")?;
    let base_score = lines.keyed("base_score")?;
    let learning_rate = lines.keyed("learning_rate")?;
    let lambda = lines.keyed("lambda")?;
    let gamma = lines.keyed("gamma")?;
    let max_depth = lines.keyed("max_depth")?;
    let count: usize = lines.keyed("trees")?;

    let mut trees = Vec::with_capacity(count);
    for i in 0..count {
        let (n, f) = lines.next_fields()?;
        if f.len() != 3 || f[0] != "tree" || parse::<usize>(n, f[1])? != i {
            return Err(err(n, format!("expected `tree {i} <nodes>`")));
        }
        let len: usize = parse(n, f[2])?;
        let mut flat = Vec::with_capacity(len);
        for _ in 0..len {
            let (n, f) = lines.next_fields()?;
            match f.as_slice() {
                ["split", feat, thr] => flat.push((n, Some((parse(n, feat)?, parse(n, thr)?)), 0.0)),
                ["leaf", w] => flat.push((n, None, parse(n, w)?)),
                _ => return Err(err(n, "expected `split` or `leaf`".into())),
            }
        }
        let nodes = link_preorder(&flat).map_err(|m| err(n, m))?;
        trees.push(RegressionTree::from_nodes(nodes).map_err(|m| err(n, m))?);
    }
    let (n, f) = lines.next_fields()?;
    if f != ["end"] {
        return Err(err(n, "expected `end`".into()));
    }
    Ok(BoostedModel {
        trees,
        base_score,
        gamma,
        lambda,
        learning_rate,
        max_depth,
        window,
    })
}

/// Recover child indices from a preorder listing.
fn link_preorder(flat: &[(usize, Option<(usize, f64)>, f64)]) -> Result<Vec<TreeNode>, String> {
    fn go(
        flat: &[(usize, Option<(usize, f64)>, f64)],
        next: &mut usize,
        out: &mut Vec<TreeNode>,
    ) -> Result<usize, String> {
        let at = *next;
        let Some(&(_, split, w)) = flat.get(at) else {
            return Err("tree ends inside a split".into());
        };
        *next += 1;
        match split {
            None => out[at] = TreeNode::Leaf { weight: w },
            Some((feature, threshold)) => {
                let left = go(flat, next, out)?;
                let right = go(flat, next, out)?;
                out[at] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        Ok(at)
    }
    let mut out = vec![TreeNode::Leaf { weight: 0.0 }; flat.len()];
    let mut next = 0;
    go(flat, &mut next, &mut out)?;
    if next != flat.len() {
        return Err(format!("{} trailing nodes", flat.len() - next));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::{featurize_series, BoostConfig};
    use crate::par::Execution;

    #[test]
    fn round_trip_is_bit_exact() {
        let series: Vec<f64> = (0..150).map(|t| ((t as f64) * 0.7).sin() / 3.0 + 0.5).collect();
        let s = featurize_series(&series, 4).unwrap();
        let m = BoostedModel::fit(
            &s,
            &BoostConfig {
                window: 4,
                rounds: 12,
                execution: Execution::Sequential,
                ..BoostConfig::default()
            },
        )
        .unwrap();
        let text = to_text(&m);
        let back = from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(to_text(&back), text);
        for x in &s {
            let a = m.predict(x.features.values()).unwrap();
            let b = back.predict(x.features.values()).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn parses_documented_example() {
        let text = "gbt-model 1\nwindow 5\nbase_score 0.4127\nlearning_rate 0.3\nlambda 1.0\n\
                    gamma 0.0\nmax_depth 4\ntrees 2\ntree 0 3\nsplit 2 0.515\nleaf -0.0441\n\
                    leaf 0.0873\ntree 1 1\nleaf 0.0\nend\n";
        let m = from_text(text).unwrap();
        assert_eq!(m.trees.len(), 2);
        assert_eq!(m.trees[0].leaf_count(), 2);
        let x = [0.0, 0.0, 0.9, 0.0, 0.0];
        assert!((m.predict(&x).unwrap() - (0.4127 + 0.3 * 0.0873)).abs() < 1e-15);
    }

    #[test]
    fn reports_line_of_error() {
        let text = "gbt-model 1\nwindow 5\nbase_score oops\n";
        match from_text(text) {
            Err(GbtError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let truncated = "gbt-model 1\nwindow 1\nbase_score 0\nlearning_rate 1\nlambda 0\n\
                         gamma 0\nmax_depth 1\ntrees 1\ntree 0 2\nsplit 0 1.0\nleaf 1\nend\n";
        assert!(from_text(truncated).is_err());
    }
}
