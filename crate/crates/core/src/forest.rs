//! CART-style random forest and conditional-inference forest.
//!
//! The CART variant draws a bootstrap sample per tree and grows to purity by
//! best Gini decrease over `mtry` random candidate features. The
//! conditional-inference variant draws a 63.2% subsample without
//! replacement, picks the candidate feature with the smallest
//! Bonferroni-adjusted p-value of a permutation association test
//! (chi-square approximation of the standardized linear statistic), and
//! stops splitting once the smallest adjusted p-value exceeds `cif_alpha`,
//! so noise nodes refuse to split instead of growing to purity.
//!
//! Importances: Gini (mean split-criterion decrease, CART only) and
//! out-of-bag permutation importances based on accuracy or AUC. Permutation
//! streams derive from (forest seed, feature index, tree index), so results
//! are independent of tree-build parallelism.

use crate::dataset::Dataset;
use crate::dist;
use crate::error::{Error, Result};
use crate::seeding::{self, tag};
use crate::stats;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForestAlgo {
    Cart,
    Cif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMeasure {
    Gini,
    PermAccuracy,
    PermAuc,
}

impl ImportanceMeasure {
    pub fn label(&self) -> &'static str {
        match self {
            ImportanceMeasure::Gini => "gini",
            ImportanceMeasure::PermAccuracy => "perm_accuracy",
            ImportanceMeasure::PermAuc => "perm_auc",
        }
    }
}

impl ForestAlgo {
    pub fn label(&self) -> &'static str {
        match self {
            ForestAlgo::Cart => "cart",
            ForestAlgo::Cif => "cif",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per node; `None` means ceil(sqrt(p)).
    pub mtry: Option<usize>,
    pub algo: ForestAlgo,
    /// Smallest admissible child size; `None` means 1 for CART, 7 for CIF.
    pub min_node: Option<usize>,
    /// Split-stop significance for the conditional-inference test.
    pub cif_alpha: f64,
    /// Permutations averaged per (tree, feature); 1 matches the protocol's
    /// outer repeats.
    pub permutation_rounds: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            algo: ForestAlgo::Cart,
            min_node: None,
            cif_alpha: 0.05,
            permutation_rounds: 1,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
            .clamp(1, p.max(1))
    }

    pub fn resolved_min_node(&self) -> usize {
        self.min_node
            .unwrap_or(match self.algo {
                ForestAlgo::Cart => 1,
                ForestAlgo::Cif => 7,
            })
            .max(1)
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    n0: u32,
    n1: u32,
}

impl Node {
    fn leaf(n0: u32, n1: u32) -> Self {
        Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, n0, n1 }
    }

    fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }

    fn prob1(&self) -> f64 {
        let total = self.n0 + self.n1;
        if total == 0 {
            0.5
        } else {
            self.n1 as f64 / total as f64
        }
    }

    fn class(&self) -> u8 {
        (self.n1 > self.n0) as u8
    }
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
    /// Features appearing in any split of this tree.
    used: Vec<u32>,
}

impl Tree {
    /// Walks to the leaf for a row, reading feature values through `get` so
    /// permutation importance can substitute one feature on the fly.
    fn leaf(&self, get: &impl Fn(usize) -> f64) -> &Node {
        let mut idx = 0usize;
        loop {
            let node = &self.nodes[idx];
            if node.is_leaf() {
                return node;
            }
            idx = if get(node.feature as usize) <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    fn depth(&self) -> usize {
        fn rec(nodes: &[Node], idx: usize) -> usize {
            let node = &nodes[idx];
            if node.is_leaf() {
                0
            } else {
                1 + rec(nodes, node.left as usize).max(rec(nodes, node.right as usize))
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            rec(&self.nodes, 0)
        }
    }
}

/// A fitted forest. Immutable and cheap to share across threads.
pub struct ForestModel {
    pub algo: ForestAlgo,
    pub n_features: usize,
    pub n_trees: usize,
    pub seed: u64,
    trees: Vec<Tree>,
    oob: Vec<Vec<u32>>,
    /// Per-feature total Gini decrease over all trees (CART only).
    gini_totals: Vec<f64>,
    permutation_rounds: usize,
}

struct Builder<'a> {
    cols: Vec<&'a [f64]>,
    y: &'a [u8],
    mtry: usize,
    min_node: usize,
    algo: ForestAlgo,
    cif_alpha: f64,
}

struct Scratch {
    pairs: Vec<(f64, u8)>,
    feats: Vec<u32>,
}

struct BuiltTree {
    tree: Tree,
    gini: Vec<f64>,
    oob: Vec<u32>,
}

impl<'a> Builder<'a> {
    fn grow(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) -> BuiltTree {
        let n = self.y.len();
        let mut in_bag: Vec<u32>;
        let mut seen = vec![false; n];
        match self.algo {
            ForestAlgo::Cart => {
                in_bag = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
                for &i in &in_bag {
                    seen[i as usize] = true;
                }
            }
            ForestAlgo::Cif => {
                let take = ((n as f64) * 0.632).ceil() as usize;
                let mut idx: Vec<u32> = (0..n as u32).collect();
                for i in (1..n).rev() {
                    let j = rng.random_range(0..=i);
                    idx.swap(i, j);
                }
                in_bag = idx[..take.min(n)].to_vec();
                for &i in &in_bag {
                    seen[i as usize] = true;
                }
            }
        }
        let oob: Vec<u32> = (0..n as u32).filter(|&i| !seen[i as usize]).collect();

        let mut tree = Tree { nodes: Vec::new(), used: Vec::new() };
        let mut gini = vec![0.0; self.cols.len()];
        let total = in_bag.len();
        tree.nodes.push(Node::leaf(0, 0));
        // (node index, start, end) over the in_bag buffer
        let mut stack = vec![(0usize, 0usize, total)];
        while let Some((node_idx, start, end)) = stack.pop() {
            let rows = &in_bag[start..end];
            let mut n1 = 0u32;
            for &r in rows {
                n1 += self.y[r as usize] as u32;
            }
            let m = rows.len() as u32;
            let n0 = m - n1;
            tree.nodes[node_idx].n0 = n0;
            tree.nodes[node_idx].n1 = n1;
            if n0 == 0 || n1 == 0 || rows.len() < 2 * self.min_node {
                continue;
            }
            let split = match self.algo {
                ForestAlgo::Cart => self.best_cart_split(rows, rng, scratch),
                ForestAlgo::Cif => self.best_cif_split(rows, rng, scratch),
            };
            let Some((feature, threshold, decrease)) = split else {
                continue;
            };
            gini[feature as usize] += decrease;
            if !tree.used.contains(&feature) {
                tree.used.push(feature);
            }
            // in-place partition of the node's rows
            let col = self.cols[feature as usize];
            let slice = &mut in_bag[start..end];
            let mut lo = 0usize;
            let mut hi = slice.len();
            while lo < hi {
                if col[slice[lo] as usize] <= threshold {
                    lo += 1;
                } else {
                    hi -= 1;
                    slice.swap(lo, hi);
                }
            }
            let mid = start + lo;
            let left = tree.nodes.len() as u32;
            tree.nodes.push(Node::leaf(0, 0));
            let right = tree.nodes.len() as u32;
            tree.nodes.push(Node::leaf(0, 0));
            {
                let node = &mut tree.nodes[node_idx];
                node.feature = feature;
                node.threshold = threshold;
                node.left = left;
                node.right = right;
            }
            stack.push((left as usize, start, mid));
            stack.push((right as usize, mid, end));
        }
        BuiltTree { tree, gini, oob }
    }

    fn sample_candidates(&self, rng: &mut ChaCha8Rng, feats: &mut Vec<u32>) {
        let p = self.cols.len();
        feats.clear();
        feats.extend(0..p as u32);
        // partial Fisher-Yates: the first mtry entries are the sample
        for i in 0..self.mtry.min(p) {
            let j = rng.random_range(i..p);
            feats.swap(i, j);
        }
        feats.truncate(self.mtry.min(p));
    }

    /// Best (feature, threshold, weighted Gini decrease) over the sampled
    /// candidates, or None when nothing splits.
    fn best_cart_split(
        &self,
        rows: &[u32],
        rng: &mut ChaCha8Rng,
        scratch: &mut Scratch,
    ) -> Option<(u32, f64, f64)> {
        let mut feats = std::mem::take(&mut scratch.feats);
        self.sample_candidates(rng, &mut feats);
        let m = rows.len() as f64;
        let mut n1_total = 0u32;
        for &r in rows {
            n1_total += self.y[r as usize] as u32;
        }
        let n0_total = rows.len() as u32 - n1_total;
        let parent = (n0_total as f64) * (n1_total as f64) / m;
        let mut best: Option<(u32, f64, f64)> = None;
        let pairs = &mut scratch.pairs;
        for &f in feats.iter() {
            let col = self.cols[f as usize];
            pairs.clear();
            pairs.extend(rows.iter().map(|&r| (col[r as usize], self.y[r as usize])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut l0 = 0u32;
            let mut l1 = 0u32;
            for i in 0..pairs.len() - 1 {
                if pairs[i].1 == 1 {
                    l1 += 1;
                } else {
                    l0 += 1;
                }
                if pairs[i].0 == pairs[i + 1].0 {
                    continue;
                }
                let n_l = l0 + l1;
                let n_r = rows.len() as u32 - n_l;
                if (n_l as usize) < self.min_node || (n_r as usize) < self.min_node {
                    continue;
                }
                let r0 = n0_total - l0;
                let r1 = n1_total - l1;
                let child = (l0 as f64) * (l1 as f64) / (n_l as f64)
                    + (r0 as f64) * (r1 as f64) / (n_r as f64);
                let decrease = 2.0 * (parent - child);
                if decrease > 1e-12 && best.map_or(true, |b| decrease > b.2) {
                    let threshold = 0.5 * (pairs[i].0 + pairs[i + 1].0);
                    best = Some((f, threshold, decrease));
                }
            }
        }
        scratch.feats = feats;
        best
    }

    /// Conditional-inference split: the candidate with the smallest
    /// Bonferroni-adjusted association p-value splits at the point
    /// maximizing the standardized two-sample statistic. Returns None when
    /// the adjusted p-value exceeds `cif_alpha` or no admissible split
    /// point exists.
    fn best_cif_split(
        &self,
        rows: &[u32],
        rng: &mut ChaCha8Rng,
        scratch: &mut Scratch,
    ) -> Option<(u32, f64, f64)> {
        let mut feats = std::mem::take(&mut scratch.feats);
        self.sample_candidates(rng, &mut feats);
        let m = rows.len() as f64;
        let mut n1_total = 0u32;
        for &r in rows {
            n1_total += self.y[r as usize] as u32;
        }
        let ybar = n1_total as f64 / m;
        let sy = n1_total as f64 * (1.0 - ybar);
        let mut tested = 0usize;
        let mut best_feat: Option<(u32, f64)> = None; // (feature, raw p)
        for &f in feats.iter() {
            let col = self.cols[f as usize];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut t = 0.0;
            for &r in rows {
                let v = col[r as usize];
                sum += v;
                sum_sq += v * v;
                if self.y[r as usize] == 1 {
                    t += v;
                }
            }
            let sx = sum_sq - sum * sum / m;
            if sx <= 1e-12 || sy <= 1e-12 {
                continue;
            }
            tested += 1;
            let expected = sum * ybar;
            let var = sx * sy / (m - 1.0);
            let stat = (t - expected) * (t - expected) / var;
            let p = dist::chi2_1_sf(stat);
            if best_feat.map_or(true, |(_, bp)| p < bp) {
                best_feat = Some((f, p));
            }
        }
        scratch.feats = feats;
        let (feature, p_min) = best_feat?;
        let p_adj = (p_min * tested as f64).min(1.0);
        if p_adj > self.cif_alpha {
            return None;
        }
        // Split-point search on the selected feature.
        let col = self.cols[feature as usize];
        let pairs = &mut scratch.pairs;
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (col[r as usize], self.y[r as usize])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut tl = 0.0f64;
        let mut best: Option<(f64, f64)> = None; // (stat, threshold)
        for i in 0..pairs.len() - 1 {
            tl += pairs[i].1 as f64;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let ml = (i + 1) as f64;
            let mr = m - ml;
            if (ml as usize) < self.min_node || (mr as usize) < self.min_node {
                continue;
            }
            let expected = ml * ybar;
            let var = (ml * mr / m) * sy / (m - 1.0);
            if var <= 0.0 {
                continue;
            }
            let stat = (tl - expected) * (tl - expected) / var;
            if best.map_or(true, |b| stat > b.0) {
                best = Some((stat, 0.5 * (pairs[i].0 + pairs[i + 1].0)));
            }
        }
        best.map(|(stat, threshold)| (feature, threshold, stat))
    }
}

/// Fits a forest on the training data.
pub fn fit_forest(train: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    let p = train.n_features();
    if p == 0 {
        return Err(Error::Domain("forest needs at least one feature".into()));
    }
    let (n0, n1) = train.outcome_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClassOutcome);
    }
    if cfg.n_trees == 0 {
        return Err(Error::InvalidSpec("n_trees must be at least 1".into()));
    }
    let builder = Builder {
        cols: train.features.iter().map(|f| f.values.as_slice()).collect(),
        y: &train.outcome,
        mtry: cfg.resolved_mtry(p),
        min_node: cfg.resolved_min_node(),
        algo: cfg.algo,
        cif_alpha: cfg.cif_alpha,
    };
    let built: Vec<BuiltTree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeding::rng(cfg.seed, &[tag::TREE, t as u64]);
            let mut scratch = Scratch { pairs: Vec::new(), feats: Vec::new() };
            builder.grow(&mut rng, &mut scratch)
        })
        .collect();
    let mut gini_totals = vec![0.0; p];
    let mut trees = Vec::with_capacity(built.len());
    let mut oob = Vec::with_capacity(built.len());
    for bt in built {
        for (g, v) in gini_totals.iter_mut().zip(&bt.gini) {
            *g += v;
        }
        trees.push(bt.tree);
        oob.push(bt.oob);
    }
    Ok(ForestModel {
        algo: cfg.algo,
        n_features: p,
        n_trees: cfg.n_trees,
        seed: cfg.seed,
        trees,
        oob,
        gini_totals,
        permutation_rounds: cfg.permutation_rounds.max(1),
    })
}

impl ForestModel {
    /// Majority vote over trees; ties go to class 0.
    pub fn predict_class(&self, row: &[f64]) -> u8 {
        let votes1: usize = self
            .trees
            .iter()
            .map(|t| t.leaf(&|f| row[f]).class() as usize)
            .sum();
        (2 * votes1 > self.trees.len()) as u8
    }

    /// Mean over trees of the leaf class-1 fraction.
    pub fn predict_prob(&self, row: &[f64]) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.leaf(&|f| row[f]).prob1()).sum();
        total / self.trees.len() as f64
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let n = data.n_rows();
        let mut correct = 0usize;
        let mut row = vec![0.0; self.n_features];
        for i in 0..n {
            for (j, f) in data.features.iter().enumerate() {
                row[j] = f.values[i];
            }
            if self.predict_class(&row) == data.outcome[i] {
                correct += 1;
            }
        }
        correct as f64 / n as f64
    }

    pub fn auc(&self, data: &Dataset) -> Result<f64> {
        let n = data.n_rows();
        let mut scores = Vec::with_capacity(n);
        let mut row = vec![0.0; self.n_features];
        for i in 0..n {
            for (j, f) in data.features.iter().enumerate() {
                row[j] = f.values[i];
            }
            scores.push(self.predict_prob(&row));
        }
        stats::auc(&scores, &data.outcome)
    }

    /// Fraction of rows out of bag, averaged over trees.
    pub fn mean_oob_fraction(&self, n_rows: usize) -> f64 {
        let total: usize = self.oob.iter().map(|o| o.len()).sum();
        total as f64 / (self.trees.len() * n_rows) as f64
    }

    pub fn mean_depth(&self) -> f64 {
        let total: usize = self.trees.iter().map(|t| t.depth()).sum();
        total as f64 / self.trees.len() as f64
    }

    /// Newline-delimited per-tree node records for debugging; not a stable
    /// format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (t, tree) in self.trees.iter().enumerate() {
            for (i, node) in tree.nodes.iter().enumerate() {
                if node.is_leaf() {
                    out.push_str(&format!("tree {t} node {i} leaf {} {}\n", node.n0, node.n1));
                } else {
                    out.push_str(&format!(
                        "tree {t} node {i} split f{} <= {} -> {} {} counts {} {}\n",
                        node.feature, node.threshold, node.left, node.right, node.n0, node.n1
                    ));
                }
            }
        }
        out
    }
}

/// Per-feature importance values with ranks (1 = largest) and the
/// rank-above-first-noise detection flags.
#[derive(Debug, Clone, Serialize)]
pub struct ImportanceReport {
    pub measure: ImportanceMeasure,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub ranks: Vec<usize>,
    pub detected: Vec<bool>,
}

/// Ranks descending by value with ties broken by ascending feature index.
fn rank_values(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("NaN importance")
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0usize; values.len()];
    for (pos, &f) in order.iter().enumerate() {
        ranks[f] = pos + 1;
    }
    ranks
}

fn detect(ranks: &[usize], noise: &[bool]) -> Vec<bool> {
    let first_noise_rank = ranks
        .iter()
        .zip(noise)
        .filter(|(_, &is_noise)| is_noise)
        .map(|(&r, _)| r)
        .min()
        .unwrap_or(usize::MAX);
    ranks
        .iter()
        .zip(noise)
        .map(|(&r, &is_noise)| !is_noise && r < first_noise_rank)
        .collect()
}

/// Computes one importance report for a fitted model on its training data.
/// Permutation measures are out-of-bag: per tree, the OOB metric before
/// minus after permuting the feature within the OOB rows.
pub fn importance(
    model: &ForestModel,
    data: &Dataset,
    measure: ImportanceMeasure,
) -> Result<ImportanceReport> {
    if matches!(measure, ImportanceMeasure::Gini) && matches!(model.algo, ForestAlgo::Cif) {
        return Err(Error::Unsupported(
            "Gini importance applies to the CART forest only".into(),
        ));
    }
    let values = match measure {
        ImportanceMeasure::Gini => model
            .gini_totals
            .iter()
            .map(|g| g / model.n_trees as f64)
            .collect::<Vec<f64>>(),
        ImportanceMeasure::PermAccuracy | ImportanceMeasure::PermAuc => {
            permutation_importance(model, data, measure)
        }
    };
    let ranks = rank_values(&values);
    let detected = detect(&ranks, &data.noise_flags());
    Ok(ImportanceReport { measure, names: data.feature_names(), values, ranks, detected })
}

fn permutation_importance(
    model: &ForestModel,
    data: &Dataset,
    measure: ImportanceMeasure,
) -> Vec<f64> {
    let p = model.n_features;
    let per_tree: Vec<(Vec<f64>, bool)> = model
        .trees
        .par_iter()
        .enumerate()
        .map(|(t, tree)| {
            let oob = &model.oob[t];
            let mut deltas = vec![0.0; p];
            if oob.is_empty() {
                return (deltas, false);
            }
            let labels: Vec<u8> = oob.iter().map(|&i| data.outcome[i as usize]).collect();
            let both_classes = labels.contains(&0) && labels.contains(&1);
            if matches!(measure, ImportanceMeasure::PermAuc) && !both_classes {
                // AUC is undefined on single-class OOB: skip the tree.
                return (deltas, false);
            }
            // Positions of each OOB row, so the permuted value lookup is O(1).
            let baseline = tree_metric(tree, oob, &labels, measure, |pos, f| {
                data.features[f].values[oob[pos] as usize]
            });
            let mut perm: Vec<u32> = Vec::new();
            for &f in &tree.used {
                let f = f as usize;
                let mut rng = seeding::rng(model.seed, &[tag::PERMUTATION, f as u64, t as u64]);
                let mut acc = 0.0;
                for _ in 0..model.permutation_rounds {
                    perm.clear();
                    perm.extend(0..oob.len() as u32);
                    for i in (1..perm.len()).rev() {
                        let j = rng.random_range(0..=i);
                        perm.swap(i, j);
                    }
                    let permuted = tree_metric(tree, oob, &labels, measure, |pos, g| {
                        let row = if g == f { oob[perm[pos] as usize] } else { oob[pos] };
                        data.features[g].values[row as usize]
                    });
                    acc += baseline - permuted;
                }
                deltas[f] = acc / model.permutation_rounds as f64;
            }
            (deltas, true)
        })
        .collect();
    let mut totals = vec![0.0; p];
    let mut count = 0u32;
    for (deltas, counted) in per_tree {
        if counted {
            count += 1;
            for f in 0..p {
                totals[f] += deltas[f];
            }
        }
    }
    totals
        .iter()
        .map(|&t| if count == 0 { 0.0 } else { t / count as f64 })
        .collect()
}

fn tree_metric(
    tree: &Tree,
    oob: &[u32],
    labels: &[u8],
    measure: ImportanceMeasure,
    value: impl Fn(usize, usize) -> f64,
) -> f64 {
    match measure {
        ImportanceMeasure::PermAccuracy => {
            let mut correct = 0usize;
            for (pos, &label) in labels.iter().enumerate() {
                let leaf = tree.leaf(&|f| value(pos, f));
                if leaf.class() == label {
                    correct += 1;
                }
            }
            correct as f64 / oob.len() as f64
        }
        ImportanceMeasure::PermAuc => {
            let scores: Vec<f64> = (0..oob.len())
                .map(|pos| tree.leaf(&|f| value(pos, f)).prob1())
                .collect();
            stats::auc(&scores, labels).unwrap_or(0.5)
        }
        ImportanceMeasure::Gini => unreachable!("gini is not a permutation measure"),
    }
}

/// Aggregates repeated importance reports: ranks come from the mean value
/// per feature across repeats, detection compares against the best-ranked
/// noise feature. Noise features are never detected.
pub fn rank_and_detect(reports: &[ImportanceReport], noise_flags: &[bool]) -> ImportanceReport {
    assert!(!reports.is_empty(), "need at least one repeat");
    let p = reports[0].values.len();
    let measure = reports[0].measure;
    let mut means = vec![0.0; p];
    for report in reports {
        debug_assert_eq!(report.measure, measure);
        for (m, v) in means.iter_mut().zip(&report.values) {
            *m += v;
        }
    }
    for m in means.iter_mut() {
        *m /= reports.len() as f64;
    }
    let ranks = rank_values(&means);
    let detected = detect(&ranks, noise_flags);
    ImportanceReport { measure, names: reports[0].names.clone(), values: means, ranks, detected }
}
