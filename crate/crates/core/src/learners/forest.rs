//! Random forest of CART trees: bootstrap resamples, Gini splits at midpoints
//! between sorted distinct values, and a random feature subset per node.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_data, check_width, Classifier};
use crate::error::{Result, TedError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Fixed(m) => m,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            min_samples_leaf: 5,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(TedError::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(TedError::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u32>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, row: ArrayView1<'_, f64>) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[u32]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts } => Some(counts.as_slice()),
            Node::Split { .. } => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    n_features: usize,
    n_classes: usize,
    trees: Vec<Tree>,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Smallest training-sample count held by any leaf of any tree.
    pub fn min_leaf_size(&self) -> u32 {
        self.trees
            .iter()
            .flat_map(Tree::leaves)
            .map(|c| c.iter().sum::<u32>())
            .min()
            .unwrap_or(0)
    }
}

impl Classifier for Forest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_width(self.n_features, x)?;
        let mut out = Array2::zeros((x.nrows(), self.n_classes));
        for (row, mut scores) in x.rows().into_iter().zip(out.rows_mut()) {
            for tree in &self.trees {
                let counts = tree.leaf_for(row);
                let total = f64::from(counts.iter().sum::<u32>());
                for (s, &c) in scores.iter_mut().zip(counts) {
                    *s += f64::from(c) / total;
                }
            }
            scores /= self.trees.len() as f64;
        }
        Ok(out)
    }
}

pub fn forest_predict(model: &Forest, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    model.predict(x)
}

pub fn forest_fit(x: ArrayView2<'_, f64>, y: &[usize], config: &ForestConfig) -> Result<Forest> {
    config.validate()?;
    let n_classes = check_training_data(x, y)?;
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            grow_tree(x, y, n_classes, config, &mut rng)
        })
        .collect();
    Ok(Forest {
        n_features: x.ncols(),
        n_classes,
        trees,
    })
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    n_classes: usize,
    min_leaf: usize,
    mtry: usize,
    nodes: Vec<Node>,
    // scratch buffers reused across nodes
    sorted: Vec<(f64, usize)>,
    left_counts: Vec<usize>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn grow_tree(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    n_classes: usize,
    config: &ForestConfig,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n = x.nrows();
    let rows: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut grower = Grower {
        x,
        y,
        n_classes,
        min_leaf: config.min_samples_leaf,
        mtry: config.max_features.resolve(x.ncols()),
        nodes: Vec::new(),
        sorted: Vec::with_capacity(n),
        left_counts: vec![0; n_classes],
    };
    grower.grow(rows, rng);
    Tree {
        nodes: grower.nodes,
    }
}

/// `n * gini` for a node with the given class counts.
fn weighted_gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sum_sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sum_sq / n as f64
}

impl Grower<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &r in rows {
            counts[self.y[r]] += 1;
        }
        counts
    }

    fn grow(&mut self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        let counts = self.class_counts(&rows);
        self.nodes.push(Node::Leaf {
            counts: counts.iter().map(|&c| c as u32).collect(),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 * self.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(&rows, &counts, rng) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[[r, best.feature]] <= best.threshold);
        drop(rows);
        let left = self.grow(left_rows, rng);
        let right = self.grow(right_rows, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Visits features in random order until `mtry` non-constant ones have
    /// been scored. Returns the split with the lowest child impurity if it
    /// improves on the parent.
    fn best_split(
        &mut self,
        rows: &[usize],
        counts: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let n = rows.len();
        let parent = weighted_gini(counts, n);
        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        features.shuffle(rng);
        let mut best: Option<Candidate> = None;
        let mut scored = 0;
        for feature in features {
            if scored == self.mtry {
                break;
            }
            self.sorted.clear();
            self.sorted
                .extend(rows.iter().map(|&r| (self.x[[r, feature]], self.y[r])));
            self.sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            if self.sorted[0].0 == self.sorted[n - 1].0 {
                continue;
            }
            scored += 1;
            self.left_counts.iter_mut().for_each(|c| *c = 0);
            let mut right_counts = counts.to_vec();
            for i in 0..n - 1 {
                let (value, class) = self.sorted[i];
                self.left_counts[class] += 1;
                right_counts[class] -= 1;
                let next = self.sorted[i + 1].0;
                let n_left = i + 1;
                if value == next || n_left < self.min_leaf || n - n_left < self.min_leaf {
                    continue;
                }
                let impurity = weighted_gini(&self.left_counts, n_left)
                    + weighted_gini(&right_counts, n - n_left);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mid = value + (next - value) / 2.0;
                    let threshold = if mid < next { mid } else { value };
                    best = Some(Candidate {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best.filter(|b| b.impurity < parent - 1e-12)
    }
}
