//! Breiman random forest of unpruned CART trees with Gini splits.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RfParams {
    pub ntree: usize,
    /// Features tried per split; `None` means `floor(sqrt(d))`.
    pub mtry: Option<usize>,
    pub min_node_size: usize,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            ntree: 500,
            mtry: None,
            min_node_size: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node {
    Leaf(bool),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn vote(&self, x: &[f64]) -> bool {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForestModel {
    trees: Vec<Tree>,
    dim: usize,
    mtry: usize,
    /// Set when training saw a single class; the forest then votes that class unanimously.
    degenerate: Option<bool>,
}

impl RandomForestModel {
    pub fn ntree(&self) -> usize {
        self.trees.len()
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate.is_some()
    }

    /// Number of trees voting class 1.
    pub fn votes(&self, x: &[f64]) -> Result<usize> {
        check_dim(self.dim, x.len())?;
        Ok(self.trees.iter().filter(|t| t.vote(x)).count())
    }

    /// Fraction of trees voting class 1.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(self.votes(x)? as f64 / self.trees.len() as f64)
    }
}

/// Grows `ntree` trees on bootstrap resamples. Each tree draws its own seed from
/// `rng` up front, so the result does not depend on how growth is scheduled.
pub fn fit_rf<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    labels: &[bool],
    params: RfParams,
    rng: &mut R,
) -> Result<RandomForestModel> {
    let (n, d) = x.shape();
    check_dim(n, labels.len())?;
    if n < 2 {
        return Err(invalid("n", "random forest needs at least two training points"));
    }
    if params.ntree == 0 {
        return Err(invalid("ntree", "need at least one tree"));
    }
    let mtry = params
        .mtry
        .unwrap_or(((d as f64).sqrt().floor() as usize).max(1))
        .clamp(1, d);

    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        log::debug!("random forest trained on a single class; returning constant votes");
        let tree = Tree {
            nodes: vec![Node::Leaf(first)],
        };
        return Ok(RandomForestModel {
            trees: vec![tree; params.ntree],
            dim: d,
            mtry,
            degenerate: Some(first),
        });
    }

    let columns: Vec<Vec<f64>> = (0..d).map(|j| x.column(j).iter().copied().collect()).collect();
    let seeds: Vec<u64> = (0..params.ntree).map(|_| rng.random()).collect();
    let grower = Grower {
        columns: &columns,
        labels,
        mtry,
        min_node_size: params.min_node_size.max(1),
    };
    let trees = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let boot: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grower.grow(boot, &mut rng)
        })
        .collect();
    Ok(RandomForestModel {
        trees,
        dim: d,
        mtry,
        degenerate: None,
    })
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [bool],
    mtry: usize,
    min_node_size: usize,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn gini_sum(pos: usize, total: usize) -> f64 {
    // n * gini(node) = n - (p² + q²)/n
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64;
    let q = (total - pos) as f64;
    total as f64 - (p * p + q * q) / total as f64
}

impl Grower<'_> {
    fn grow(&self, root: Vec<usize>, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = vec![Node::Leaf(false)];
        let mut stack = vec![(0usize, root)];
        while let Some((slot, idx)) = stack.pop() {
            let pos = idx.iter().filter(|&&i| self.labels[i]).count();
            if pos == 0 || pos == idx.len() || idx.len() <= self.min_node_size {
                nodes[slot] = Node::Leaf(self.majority(&idx, pos, rng));
                continue;
            }
            match self.best_split(&idx, pos, rng) {
                None => nodes[slot] = Node::Leaf(self.majority(&idx, pos, rng)),
                Some(split) => {
                    let col = &self.columns[split.feature];
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&i| col[i] <= split.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf(false));
                    let right = nodes.len();
                    nodes.push(Node::Leaf(false));
                    nodes[slot] = Node::Split {
                        feature: split.feature,
                        threshold: split.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r));
                    stack.push((left, l));
                }
            }
        }
        Tree { nodes }
    }

    /// Majority class; ties resolved by a coin flip relative to the node's first
    /// sample, which keeps the forest symmetric under label swapping.
    fn majority(&self, idx: &[usize], pos: usize, rng: &mut ChaCha8Rng) -> bool {
        let neg = idx.len() - pos;
        match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                let first = self.labels[idx[0]];
                if rng.random::<bool>() {
                    first
                } else {
                    !first
                }
            }
        }
    }

    /// Best Gini split over `mtry` randomly drawn features; if none of them can
    /// separate the node the remaining features are tried in random order.
    fn best_split(&self, idx: &[usize], pos: usize, rng: &mut ChaCha8Rng) -> Option<SplitChoice> {
        let d = self.columns.len();
        let order = sample(rng, d, d).into_vec();
        let parent = gini_sum(pos, idx.len());
        let mut best: Option<SplitChoice> = None;
        let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(idx.len());
        for (tried, &feature) in order.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            let col = &self.columns[feature];
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (col[i], self.labels[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let total = pairs.len();
            let mut left_pos = 0;
            for k in 0..total - 1 {
                if pairs[k].1 {
                    left_pos += 1;
                }
                if pairs[k].0 == pairs[k + 1].0 {
                    continue;
                }
                let nl = k + 1;
                let score = parent
                    - gini_sum(left_pos, nl)
                    - gini_sum(pos - left_pos, total - nl);
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = 0.5 * (pairs[k].0 + pairs[k + 1].0);
                    // midpoint can round onto the upper value for adjacent floats
                    let threshold = if mid < pairs[k + 1].0 { mid } else { pairs[k].0 };
                    best = Some(SplitChoice {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}
