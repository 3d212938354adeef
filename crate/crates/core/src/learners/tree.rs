//! CART regression tree.
//!
//! Splits maximize the reduction in squared error. Every midpoint between
//! consecutive distinct feature values is scanned; equal gains resolve to
//! the lowest feature index, then the lowest threshold.

use ndarray::ArrayView2;
use rand::Rng as _;

use crate::seeds::Rng;

#[derive(Clone, Copy, Debug)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Number of features drawn (without replacement) at each split; `None` uses all.
    pub max_features: Option<usize>,
}

#[derive(Clone, Debug)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Clone, Debug)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    params: TreeParams,
    rng: Option<&'a mut Rng>,
    nodes: Vec<Node>,
    order: Vec<(f64, usize)>,
}

impl Builder<'_> {
    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x.ncols();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(mf), Some(rng)) if mf < p => {
                let mut all: Vec<usize> = (0..p).collect();
                for i in 0..mf {
                    let j = rng.random_range(i..p);
                    all.swap(i, j);
                }
                let mut chosen = all[..mf].to_vec();
                chosen.sort_unstable();
                chosen
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, f64)> {
        let n = rows.len() as f64;
        let total: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let parent = total * total / n;
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in self.candidate_features() {
            self.order.clear();
            self.order.extend(rows.iter().map(|&r| (self.x[[r, feature]], r)));
            self.order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for i in 0..self.order.len() - 1 {
                left_sum += self.y[self.order[i].1];
                let (lo, hi) = (self.order[i].0, self.order[i + 1].0);
                if lo == hi {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = n - nl;
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    let mut threshold = 0.5 * (lo + hi);
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((gain, feature, threshold));
                }
            }
        }
        best.filter(|(g, _, _)| *g > 0.0).map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf(mean));
        let first = self.y[rows[0]];
        if depth >= self.params.max_depth || rows.len() < 2 || rows.iter().all(|&r| self.y[r] == first) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&r| self.x[[r, feature]] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

impl RegressionTree {
    /// Fit on all rows of `x`.
    pub fn fit(x: ArrayView2<f64>, y: &[f64], params: TreeParams, rng: Option<&mut Rng>) -> Self {
        Self::fit_rows(x, y, (0..y.len()).collect(), params, rng)
    }

    /// Fit on the given rows (repeats allowed, as in a bootstrap sample).
    pub fn fit_rows(x: ArrayView2<f64>, y: &[f64], rows: Vec<usize>, params: TreeParams, rng: Option<&mut Rng>) -> Self {
        assert!(!rows.is_empty(), "tree needs at least one row");
        let mut b = Builder { x, y, params, rng, nodes: Vec::new(), order: Vec::with_capacity(rows.len()) };
        b.grow(rows, 0);
        RegressionTree { nodes: b.nodes }
    }

    pub fn predict_row(&self, row: impl Fn(usize) -> f64) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    id = if row(feature) <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict_row(|j| r[j])).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}
