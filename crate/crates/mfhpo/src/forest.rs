//! Regression random forest over encoded feature vectors.
//!
//! CART-style trees with variance-reduction splits: bootstrap resampling,
//! unlimited depth, a fresh feature subsample at every node. Categorical
//! axes arrive pre-encoded as numerics (level index / (levels−1)), so splits
//! treat them ordinally; the inactive sentinel −1 sorts below all active
//! values and separates cleanly.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Node {
    Leaf { value: f64 },
    Split { feat: usize, thresh: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feat, thresh, left, right } => {
                    i = if x[*feat] <= *thresh { *left as usize } else { *right as usize };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Forest {
    trees: Vec<Tree>,
    n_features: usize,
}

/// Best split of `rows` on feature `feat` by summed squared error.
/// Returns (threshold, sse) or None when the feature is constant.
fn best_split_on(x: &[Vec<f64>], y: &[f64], rows: &[u32], feat: usize) -> Option<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&i| (x[i as usize][feat], y[i as usize])).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = pairs.len();
    if pairs[0].0 == pairs[n - 1].0 {
        return None;
    }
    let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
    let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
    let mut left_sum = 0.0;
    let mut left_sq = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        left_sum += pairs[i].1;
        left_sq += pairs[i].1 * pairs[i].1;
        if pairs[i].0 == pairs[i + 1].0 {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let right_sum = total_sum - left_sum;
        let right_sq = total_sq - left_sq;
        let sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
        if best.map_or(true, |(_, b)| sse < b) {
            best = Some((0.5 * (pairs[i].0 + pairs[i + 1].0), sse));
        }
    }
    best
}

fn build_tree(x: &[Vec<f64>], y: &[f64], boot: Vec<u32>, mtry: usize, rng: &mut ChaCha8Rng) -> Tree {
    let d = x[0].len();
    let mut nodes = Vec::new();
    nodes.push(Node::Leaf { value: 0.0 });
    // (node index, rows) work list; children are appended before being split.
    let mut todo: Vec<(usize, Vec<u32>)> = vec![(0, boot)];
    let mut feats: Vec<usize> = (0..d).collect();
    while let Some((slot, rows)) = todo.pop() {
        let mean = rows.iter().map(|&i| y[i as usize]).sum::<f64>() / rows.len() as f64;
        let pure = rows.iter().all(|&i| y[i as usize] == y[rows[0] as usize]);
        if rows.len() < 2 || pure {
            nodes[slot] = Node::Leaf { value: mean };
            continue;
        }
        // Walk a fresh permutation of the features, charging only informative
        // (non-constant) ones against mtry, so degenerate features never
        // starve a node of split candidates.
        for k in 0..d - 1 {
            let j = k + rng.random_range(0..d - k);
            feats.swap(k, j);
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let mut tried = 0usize;
        for &f in feats.iter() {
            if tried >= mtry {
                break;
            }
            if let Some((thresh, sse)) = best_split_on(x, y, &rows, f) {
                tried += 1;
                if best.map_or(true, |(_, _, b)| sse < b) {
                    best = Some((f, thresh, sse));
                }
            }
        }
        let Some((feat, thresh, _)) = best else {
            // every candidate feature constant on this node
            nodes[slot] = Node::Leaf { value: mean };
            continue;
        };
        let (mut lrows, mut rrows) = (Vec::new(), Vec::new());
        for &i in &rows {
            if x[i as usize][feat] <= thresh {
                lrows.push(i);
            } else {
                rrows.push(i);
            }
        }
        let left = nodes.len() as u32;
        nodes.push(Node::Leaf { value: 0.0 });
        let right = nodes.len() as u32;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[slot] = Node::Split { feat, thresh, left, right };
        todo.push((left as usize, lrows));
        todo.push((right as usize, rrows));
    }
    Tree { nodes }
}

impl Forest {
    /// Fits `n_trees` bootstrap trees with `mtry` features per split.
    pub fn fit(x: &[Vec<f64>], y: &[f64], n_trees: usize, mtry: usize, rng: &mut ChaCha8Rng) -> Forest {
        assert!(!x.is_empty() && x.len() == y.len());
        let n = x.len();
        let trees = (0..n_trees)
            .map(|_| {
                let boot: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
                build_tree(x, y, boot, mtry, rng)
            })
            .collect();
        Forest { trees, n_features: x[0].len() }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean prediction across trees.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// (mean, standard deviation) of per-tree predictions; the spread feeds
    /// confidence-bound acquisition in the meta-tuner.
    pub fn predict_spread(&self, x: &[f64]) -> (f64, f64) {
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let n = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / n;
        let var = preds.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}
