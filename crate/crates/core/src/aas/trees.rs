//! Axis-aligned decision tree ensembles: softmax gradient boosting and a
//! bagged classification forest.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Node {
    Leaf {
        value: Vec<f64>,
    },
    /// `x[feature] < threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

/// Sorted distinct values of feature `f` over `idx`, with midpoints.
fn thresholds(x: &[Vec<f64>], idx: &[usize], f: usize) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
    let mut out = Vec::new();
    for w in 1..order.len() {
        let (lo, hi) = (x[order[w - 1]][f], x[order[w]][f]);
        if lo < hi {
            let mid = lo + (hi - lo) / 2.0;
            // guard against the midpoint rounding onto the upper value
            out.push((w, if mid < hi { mid } else { hi }));
        }
    }
    out
}

fn sorted_by(x: &[Vec<f64>], idx: &[usize], f: usize) -> Vec<usize> {
    let mut order = idx.to_vec();
    order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, Copy)]
pub struct BoostParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
}

/// Regression tree on gradient statistics (second-order objective).
pub fn fit_boost_tree(x: &[Vec<f64>], g: &[f64], h: &[f64], params: &BoostParams) -> Tree {
    let idx: Vec<usize> = (0..x.len()).collect();
    let mut tree = Tree { nodes: Vec::new() };
    grow_boost(&mut tree, x, g, h, idx, 0, params);
    tree
}

fn grow_boost(
    tree: &mut Tree,
    x: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    idx: Vec<usize>,
    depth: usize,
    p: &BoostParams,
) -> usize {
    let at = tree.nodes.len();
    let gs: f64 = idx.iter().map(|&i| g[i]).sum();
    let hs: f64 = idx.iter().map(|&i| h[i]).sum();
    tree.nodes.push(Node::Leaf {
        value: vec![-gs / (hs + p.lambda)],
    });
    if depth >= p.max_depth || idx.len() < 2 {
        return at;
    }
    let parent = gs * gs / (hs + p.lambda);
    let width = x[0].len();
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..width {
        let order = sorted_by(x, &idx, f);
        let mut gl = 0.0;
        let mut hl = 0.0;
        let mut cut = 0;
        for (w, thr) in thresholds(x, &idx, f) {
            while cut < w {
                gl += g[order[cut]];
                hl += h[order[cut]];
                cut += 1;
            }
            let (gr, hr) = (gs - gl, hs - hl);
            if hl < p.min_child_weight || hr < p.min_child_weight {
                continue;
            }
            let gain = gl * gl / (hl + p.lambda) + gr * gr / (hr + p.lambda) - parent;
            if gain > 1e-12 && best.is_none_or(|(b, _, _)| gain > b) {
                best = Some((gain, f, thr));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return at;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] < threshold);
    let left = grow_boost(tree, x, g, h, l, depth + 1, p);
    let right = grow_boost(tree, x, g, h, r, depth + 1, p);
    tree.nodes[at] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub eta: f64,
    pub n_classes: usize,
    /// `rounds[r][k]` is the tree of class `k` in round `r`.
    pub rounds: Vec<Vec<Tree>>,
}

impl Boosted {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, rounds: usize, eta: f64, params: &BoostParams) -> Self {
        let n = x.len();
        let mut scores = vec![vec![0.0; n_classes]; n];
        let mut model = Boosted {
            eta,
            n_classes,
            rounds: Vec::with_capacity(rounds),
        };
        for _ in 0..rounds {
            let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
            let mut round = Vec::with_capacity(n_classes);
            for k in 0..n_classes {
                let g: Vec<f64> = (0..n)
                    .map(|i| probs[i][k] - if y[i] == k { 1.0 } else { 0.0 })
                    .collect();
                let h: Vec<f64> = (0..n)
                    .map(|i| (2.0 * probs[i][k] * (1.0 - probs[i][k])).max(1e-16))
                    .collect();
                let tree = fit_boost_tree(x, &g, &h, params);
                for i in 0..n {
                    scores[i][k] += eta * tree.leaf_value(&x[i])[0];
                }
                round.push(tree);
            }
            model.rounds.push(round);
        }
        model
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes];
        for round in &self.rounds {
            for (k, tree) in round.iter().enumerate() {
                s[k] += self.eta * tree.leaf_value(x)[0];
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

fn gini(counts: &[f64], total: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>()
}

impl Forest {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        n_trees: usize,
        max_depth: Option<usize>,
        rng: &mut Rng,
    ) -> Self {
        let n = x.len();
        let width = x[0].len();
        let mtry = ((width as f64).sqrt().floor() as usize).max(1);
        let trees = (0..n_trees)
            .map(|_| {
                let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut tree = Tree { nodes: Vec::new() };
                grow_forest(&mut tree, x, y, n_classes, sample, 0, max_depth, mtry, rng);
                tree
            })
            .collect();
        Forest { n_classes, trees }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, b) in s.iter_mut().zip(t.leaf_value(x)) {
                *a += b;
            }
        }
        s.iter().map(|v| v / self.trees.len() as f64).collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn grow_forest(
    tree: &mut Tree,
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    idx: Vec<usize>,
    depth: usize,
    max_depth: Option<usize>,
    mtry: usize,
    rng: &mut Rng,
) -> usize {
    let at = tree.nodes.len();
    let mut counts = vec![0.0; n_classes];
    for &i in &idx {
        counts[y[i]] += 1.0;
    }
    let total = idx.len() as f64;
    tree.nodes.push(Node::Leaf {
        value: counts.iter().map(|c| c / total).collect(),
    });
    let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
    if pure || max_depth.is_some_and(|m| depth >= m) {
        return at;
    }
    let parent = gini(&counts, total);
    let width = x[0].len();
    let features: Vec<usize> = index::sample(rng, width, mtry.min(width)).into_vec();
    let mut best: Option<(f64, usize, f64)> = None;
    for &f in &features {
        let order = sorted_by(x, &idx, f);
        let mut left = vec![0.0; n_classes];
        let mut cut = 0;
        for (w, thr) in thresholds(x, &idx, f) {
            while cut < w {
                left[y[order[cut]]] += 1.0;
                cut += 1;
            }
            let nl = cut as f64;
            let nr = total - nl;
            let right: Vec<f64> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
            let impurity = (nl * gini(&left, nl) + nr * gini(&right, nr)) / total;
            let gain = parent - impurity;
            if gain > 1e-12 && best.is_none_or(|(b, _, _)| gain > b) {
                best = Some((gain, f, thr));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return at;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] < threshold);
    let left = grow_forest(tree, x, y, n_classes, l, depth + 1, max_depth, mtry, rng);
    let right = grow_forest(tree, x, y, n_classes, r, depth + 1, max_depth, mtry, rng);
    tree.nodes[at] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}
