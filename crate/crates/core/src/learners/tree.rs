//! CART growth over presorted feature columns.
//!
//! Each node owns one sorted position list per feature; splitting a node
//! stably partitions those lists into its children, so the whole tree is
//! grown without re-sorting. A "position" indexes the node's sample vector,
//! which may contain repeated rows (bootstrap).

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Added to every leaf class count so no probability is exactly zero.
pub const LEAF_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<L> {
    Leaf(L),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    pub fn leaf_for(&self, row: &[f64]) -> &L {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(l) => return l,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn go<L>(t: &Tree<L>, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

/// Class distribution at a leaf.
pub type ClassTree = Tree<Vec<f64>>;
/// Additive score at a leaf.
pub type RegressionTree = Tree<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSampling {
    All,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    /// Midpoints between consecutive distinct values, best impurity wins.
    Best,
    /// One uniform threshold in (min, max) per candidate feature.
    Random,
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features: FeatureSampling,
    pub thresholds: ThresholdRule,
}

struct Columns<'a> {
    x: ArrayView2<'a, f64>,
    /// row of X for each position
    rows: &'a [usize],
}

impl Columns<'_> {
    #[inline]
    fn value(&self, pos: usize, feature: usize) -> f64 {
        self.x[[self.rows[pos], feature]]
    }

    fn presort(&self) -> Vec<Vec<usize>> {
        (0..self.x.ncols())
            .map(|f| {
                let mut order: Vec<usize> = (0..self.rows.len()).collect();
                order.sort_by(|&a, &b| self.value(a, f).total_cmp(&self.value(b, f)).then(a.cmp(&b)));
                order
            })
            .collect()
    }

    fn partition(&self, sorted: Vec<Vec<usize>>, feature: usize, threshold: f64) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut go_left = vec![false; self.rows.len()];
        for &p in &sorted[feature] {
            go_left[p] = self.value(p, feature) <= threshold;
        }
        sorted
            .into_iter()
            .map(|list| list.into_iter().partition(|&p| go_left[p]))
            .unzip()
    }
}

/// Midpoint that still separates `a < b` after rounding.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b { a } else { m }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Size-weighted Gini impurity of the two children.
    pub impurity: f64,
}

struct GiniSweep {
    left: Vec<usize>,
    right: Vec<usize>,
    left_sq: f64,
    right_sq: f64,
    nl: f64,
    nr: f64,
}

impl GiniSweep {
    fn new(counts: &[usize]) -> Self {
        Self {
            left: vec![0; counts.len()],
            right: counts.to_vec(),
            left_sq: 0.0,
            right_sq: counts.iter().map(|&c| (c * c) as f64).sum(),
            nl: 0.0,
            nr: counts.iter().sum::<usize>() as f64,
        }
    }

    #[inline]
    fn shift(&mut self, class: usize) {
        self.left_sq += (2 * self.left[class] + 1) as f64;
        self.right_sq -= (2 * self.right[class] - 1) as f64;
        self.left[class] += 1;
        self.right[class] -= 1;
        self.nl += 1.0;
        self.nr -= 1.0;
    }

    #[inline]
    fn impurity(&self) -> f64 {
        (self.nl - self.left_sq / self.nl + self.nr - self.right_sq / self.nr) / (self.nl + self.nr)
    }
}

fn class_counts(positions: &[usize], labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &p in positions {
        counts[labels[p]] += 1;
    }
    counts
}

/// Best midpoint split of one presorted feature.
fn best_threshold(cols: &Columns<'_>, labels: &[usize], counts: &[usize], order: &[usize], feature: usize) -> Option<Split> {
    let mut sweep = GiniSweep::new(counts);
    let mut best: Option<Split> = None;
    for w in 0..order.len() - 1 {
        sweep.shift(labels[order[w]]);
        let a = cols.value(order[w], feature);
        let b = cols.value(order[w + 1], feature);
        if a < b {
            let imp = sweep.impurity();
            if best.is_none_or(|s| imp < s.impurity) {
                best = Some(Split {
                    feature,
                    threshold: midpoint(a, b),
                    impurity: imp,
                });
            }
        }
    }
    best
}

fn random_threshold(
    cols: &Columns<'_>,
    labels: &[usize],
    counts: &[usize],
    order: &[usize],
    feature: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Split> {
    let lo = cols.value(order[0], feature);
    let hi = cols.value(order[order.len() - 1], feature);
    if lo >= hi {
        return None;
    }
    let mut threshold = lo + rng.random::<f64>() * (hi - lo);
    if threshold >= hi {
        threshold = lo;
    }
    let mut sweep = GiniSweep::new(counts);
    for &p in order {
        if cols.value(p, feature) > threshold {
            break;
        }
        sweep.shift(labels[p]);
    }
    Some(Split {
        feature,
        threshold,
        impurity: sweep.impurity(),
    })
}

fn is_constant(cols: &Columns<'_>, order: &[usize], feature: usize) -> bool {
    cols.value(order[0], feature) >= cols.value(order[order.len() - 1], feature)
}

fn choose_split(
    cols: &Columns<'_>,
    labels: &[usize],
    counts: &[usize],
    sorted: &[Vec<usize>],
    params: &GrowParams,
    rng: &mut ChaCha8Rng,
) -> Option<Split> {
    let d = sorted.len();
    let mut features: Vec<usize> = (0..d).collect();
    let wanted = match params.features {
        FeatureSampling::All => d,
        FeatureSampling::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
    };
    if params.features == FeatureSampling::Sqrt {
        features.shuffle(rng);
    }
    let mut best: Option<Split> = None;
    let mut visited = 0;
    for &f in &features {
        if visited >= wanted && best.is_some() {
            break;
        }
        let order = &sorted[f];
        if is_constant(cols, order, f) {
            continue;
        }
        visited += 1;
        let candidate = match params.thresholds {
            ThresholdRule::Best => best_threshold(cols, labels, counts, order, f),
            ThresholdRule::Random => random_threshold(cols, labels, counts, order, f, rng),
        };
        if let Some(c) = candidate {
            if best.is_none_or(|b| c.impurity < b.impurity) {
                best = Some(c);
            }
        }
    }
    best
}

fn leaf_distribution(counts: &[usize]) -> Vec<f64> {
    let k = counts.len() as f64;
    let n: usize = counts.iter().sum();
    let denom = n as f64 + k * LEAF_SMOOTHING;
    counts
        .iter()
        .map(|&c| (c as f64 + LEAF_SMOOTHING) / denom)
        .collect()
}

/// Grows a Gini classification tree on `rows` of `x` (repeats allowed).
pub fn grow_class_tree(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    k: usize,
    rows: &[usize],
    params: &GrowParams,
    rng: &mut ChaCha8Rng,
) -> ClassTree {
    let cols = Columns { x, rows };
    let labels: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
    let mut tree = Tree { nodes: Vec::new() };
    // (slot, depth, sorted lists)
    let mut stack = vec![(0usize, 0usize, cols.presort())];
    tree.nodes.push(Node::Leaf(Vec::new()));
    while let Some((slot, depth, sorted)) = stack.pop() {
        let counts = class_counts(&sorted[0], &labels, k);
        let n = sorted[0].len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = params.max_depth.is_some_and(|m| depth >= m);
        let split = if pure || depth_capped || n < params.min_samples_split {
            None
        } else {
            choose_split(&cols, &labels, &counts, &sorted, params, rng)
        };
        match split {
            None => tree.nodes[slot] = Node::Leaf(leaf_distribution(&counts)),
            Some(s) => {
                let (l, r) = cols.partition(sorted, s.feature, s.threshold);
                let left = tree.nodes.len();
                tree.nodes.push(Node::Leaf(Vec::new()));
                tree.nodes.push(Node::Leaf(Vec::new()));
                tree.nodes[slot] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right: left + 1,
                };
                stack.push((left + 1, depth + 1, r));
                stack.push((left, depth + 1, l));
            }
        }
    }
    tree
}

/// Best Gini midpoint split of `rows` over all features (no sampling).
pub fn best_gini_split(x: ArrayView2<'_, f64>, y: &[usize], k: usize, rows: &[usize]) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let cols = Columns { x, rows };
    let labels: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
    let sorted = cols.presort();
    let counts = class_counts(&sorted[0], &labels, k);
    (0..sorted.len())
        .filter(|&f| !is_constant(&cols, &sorted[f], f))
        .filter_map(|f| best_threshold(&cols, &labels, &counts, &sorted[f], f))
        .fold(None, |best: Option<Split>, c| match best {
            Some(b) if b.impurity <= c.impurity => Some(b),
            _ => Some(c),
        })
}

/// Least-squares regression tree on `targets`, with Newton leaf values
/// `scale · Σ target / Σ hessian`.
pub fn grow_regression_tree(
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    hessians: &[f64],
    scale: f64,
    max_depth: Option<usize>,
    min_samples_split: usize,
    presorted: &[Vec<usize>],
) -> RegressionTree {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let cols = Columns { x, rows: &rows };
    let mut tree = Tree { nodes: vec![Node::Leaf(0.0)] };
    let mut stack = vec![(0usize, 0usize, presorted.to_vec())];
    while let Some((slot, depth, sorted)) = stack.pop() {
        let members = &sorted[0];
        let n = members.len();
        let sum: f64 = members.iter().map(|&p| targets[p]).sum();
        let depth_capped = max_depth.is_some_and(|m| depth >= m);
        let mut best: Option<(usize, f64, f64)> = None;
        if !depth_capped && n >= min_samples_split {
            let parent = sum * sum / n as f64;
            for (f, order) in sorted.iter().enumerate() {
                let mut left = 0.0;
                for w in 0..n - 1 {
                    left += targets[order[w]];
                    let a = cols.value(order[w], f);
                    let b = cols.value(order[w + 1], f);
                    if a < b {
                        let nl = (w + 1) as f64;
                        let right = sum - left;
                        let gain = left * left / nl + right * right / (n as f64 - nl) - parent;
                        if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                            best = Some((f, midpoint(a, b), gain));
                        }
                    }
                }
            }
        }
        match best {
            None => {
                let h: f64 = members.iter().map(|&p| hessians[p]).sum();
                let value = if h.abs() < 1e-12 { 0.0 } else { scale * sum / h };
                tree.nodes[slot] = Node::Leaf(value);
            }
            Some((feature, threshold, _)) => {
                let (l, r) = cols.partition(sorted, feature, threshold);
                let left = tree.nodes.len();
                tree.nodes.push(Node::Leaf(0.0));
                tree.nodes.push(Node::Leaf(0.0));
                tree.nodes[slot] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right: left + 1,
                };
                stack.push((left + 1, depth + 1, r));
                stack.push((left, depth + 1, l));
            }
        }
    }
    tree
}

pub(crate) fn presort_all(x: ArrayView2<'_, f64>) -> Vec<Vec<usize>> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    Columns { x, rows: &rows }.presort()
}
