//! Window-level classifiers: k-nearest neighbours, CART decision tree and a
//! linear SVM trained by stochastic subgradient descent.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::rng;

fn check_rows(rows: &[Vec<f64>], labels: &[usize]) -> Result<usize, ClassifyError> {
    if rows.is_empty() {
        return Err(ClassifyError::Empty("training rows"));
    }
    if rows.len() != labels.len() {
        return Err(ClassifyError::Shape(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(ClassifyError::Shape("rows differ in length".into()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(ClassifyError::NonFinite);
    }
    Ok(d)
}

/// Per-feature z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| {
                let v = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                v.sqrt().max(1e-12)
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Knn {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Self, ClassifyError> {
        check_rows(rows, labels)?;
        if k % 2 == 0 {
            return Err(ClassifyError::Config(format!("k must be odd, got {k}")));
        }
        if k > rows.len() {
            return Err(ClassifyError::Config(format!("k = {k} exceeds {} training rows", rows.len())));
        }
        Ok(Self {
            k,
            rows: rows.to_vec(),
            labels: labels.to_vec(),
        })
    }

    /// Majority label of the `k` nearest rows (Euclidean); equal distances
    /// are ordered by training index.
    pub fn predict(&self, query: &[f64]) -> usize {
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = [0usize; 2];
        for &(_, i) in &d[..self.k] {
            votes[self.labels[i]] += 1;
        }
        if votes[0] == votes[1] {
            // only reachable with unequal classes per vote; nearest neighbour decides
            return self.labels[d[0].1];
        }
        usize::from(votes[1] > votes[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf { class: usize },
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub max_depth: usize,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = counts[0] as f64 / n;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn majority(idx: &[usize], labels: &[usize]) -> usize {
    let ones = idx.iter().filter(|&&i| labels[i] == 1).count();
    usize::from(2 * ones > idx.len())
}

fn grow(rows: &[Vec<f64>], labels: &[usize], idx: &[usize], depth: usize, max_depth: usize, min_split: usize) -> TreeNode {
    let mut counts = [0usize; 2];
    for &i in idx {
        counts[labels[i]] += 1;
    }
    if depth >= max_depth || idx.len() < min_split || counts[0] == 0 || counts[1] == 0 {
        return TreeNode::Leaf { class: majority(idx, labels) };
    }
    let n = idx.len() as f64;
    let parent = gini(counts);
    let d = rows[idx[0]].len();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted = idx.to_vec();
    for f in 0..d {
        sorted.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
        let mut left = [0usize; 2];
        for s in 0..sorted.len() - 1 {
            left[labels[sorted[s]]] += 1;
            let (x0, x1) = (rows[sorted[s]][f], rows[sorted[s + 1]][f]);
            if x0 == x1 {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let nl = (s + 1) as f64;
            let impurity = (nl * gini(left) + (n - nl) * gini(right)) / n;
            let gain = parent - impurity;
            if gain > 1e-12 && best.is_none_or(|b| gain > b.0) {
                best = Some((gain, f, 0.5 * (x0 + x1)));
            }
        }
    }
    match best {
        None => TreeNode::Leaf { class: majority(idx, labels) },
        Some((_, feature, threshold)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][feature] <= threshold);
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(grow(rows, labels, &l, depth + 1, max_depth, min_split)),
                right: Box::new(grow(rows, labels, &r, depth + 1, max_depth, min_split)),
            }
        }
    }
}

impl DecisionTree {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], max_depth: usize) -> Result<Self, ClassifyError> {
        check_rows(rows, labels)?;
        let idx: Vec<usize> = (0..rows.len()).collect();
        Ok(Self {
            root: grow(rows, labels, &idx, 0, max_depth, 2),
            max_depth,
        })
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 100,
            seed: 0,
        }
    }
}

/// Linear SVM, decision `w . x + b >= 0` for class 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearSvm {
    /// Regularized hinge loss minimized with Pegasos-style step sizes `1/(lambda t)`.
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], cfg: &SvmConfig) -> Result<Self, ClassifyError> {
        let d = check_rows(rows, labels)?;
        let mut r = rng::stream(cfg.seed, "svm/shuffle");
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut t = 0usize;
        for _ in 0..cfg.epochs {
            order.shuffle(&mut r);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (cfg.lambda * (t as f64 + 1.0 / cfg.lambda));
                let y = if labels[i] == 1 { 1.0 } else { -1.0 };
                let margin = y * (w.iter().zip(&rows[i]).map(|(a, x)| a * x).sum::<f64>() + b);
                w.iter_mut().for_each(|a| *a *= 1.0 - eta * cfg.lambda);
                if margin < 1.0 {
                    w.iter_mut().zip(&rows[i]).for_each(|(a, x)| *a += eta * y * x);
                    b += eta * y;
                }
            }
        }
        Ok(Self { w, b })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>() + self.b
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        usize::from(self.decision(row) >= 0.0)
    }
}
