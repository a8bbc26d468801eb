//! Synthetic data generation.
//!
//! Binary features are described by a 2x2 contingency table of fractions
//!
//! ```text
//!          x=0     x=1
//!   Y=0   pi_00   pi_01
//!   Y=1   pi_10   pi_11
//! ```
//!
//! parameterized by the feature minority fraction `pi_plus1` (column margin
//! of x=1), the outcome minority fraction `pi_1plus` (row margin of Y=1) and
//! the odds ratio `OR = pi_00 pi_11 / (pi_10 pi_01)`. Given those three the
//! table is unique; [`cell_probabilities`] computes it in closed form.
//! Continuous features are conditional normals: N(0, 1) for Y=0 and
//! N(mu, sigma) for Y=1, so mu controls how much the two classes overlap.
//!
//! Sampling draws the outcome first and then each feature independently from
//! its conditional distribution given the outcome, so every per-feature 2x2
//! table holds in expectation without inducing cross-feature correlation.

use crate::dataset::{Dataset, Feature, FeatureKind};
use crate::error::{Error, Result};
use crate::seeding::{self, tag};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Target marginals and odds ratio for one binary feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContingencySpec {
    /// Fraction of cases with x=1 (feature minority fraction).
    pub pi_plus1: f64,
    /// Fraction of cases with Y=1 (outcome minority fraction).
    pub pi_1plus: f64,
    /// Cross-product ratio of the table; 1 means the feature is noise.
    pub odds_ratio: f64,
}

impl ContingencySpec {
    pub fn new(pi_plus1: f64, pi_1plus: f64, odds_ratio: f64) -> Result<Self> {
        let spec = Self { pi_plus1, pi_1plus, odds_ratio };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi_plus1 > 0.0 && self.pi_plus1 < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "pi_plus1 must lie strictly in (0, 1), got {}",
                self.pi_plus1
            )));
        }
        if !(self.pi_1plus > 0.0 && self.pi_1plus < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "pi_1plus must lie strictly in (0, 1), got {}",
                self.pi_1plus
            )));
        }
        if !(self.odds_ratio > 0.0 && self.odds_ratio.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "odds_ratio must be a positive real, got {}",
                self.odds_ratio
            )));
        }
        Ok(())
    }
}

/// The four cell fractions of a 2x2 table. Cells sum to one and reproduce
/// the generating margins and odds ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProbabilities {
    pub pi_00: f64,
    pub pi_01: f64,
    pub pi_10: f64,
    pub pi_11: f64,
}

impl CellProbabilities {
    /// Cross-product ratio of the cells.
    pub fn odds_ratio(&self) -> f64 {
        (self.pi_00 * self.pi_11) / (self.pi_10 * self.pi_01)
    }

    /// P(x=1 | Y=1) and P(x=1 | Y=0).
    pub fn conditional_rates(&self) -> (f64, f64) {
        let p1 = self.pi_11 / (self.pi_10 + self.pi_11);
        let p0 = self.pi_01 / (self.pi_00 + self.pi_01);
        (p1, p0)
    }
}

/// Solves the 2x2 table for the given margins and odds ratio.
///
/// For OR = 1 the feature and outcome are independent and
/// `pi_11 = pi_plus1 * pi_1plus`. Otherwise `pi_11` is the root of the
/// quadratic `(OR-1) t^2 - S t + OR * pi_plus1 * pi_1plus = 0` with
/// `S = 1 + (pi_plus1 + pi_1plus)(OR - 1)` that lies inside the Frechet
/// bounds, i.e. `t = (S - Q) / (2 (OR - 1))` where
/// `Q = sqrt(S^2 + 4 OR (1 - OR) pi_plus1 pi_1plus)`.
pub fn cell_probabilities(spec: &ContingencySpec) -> Result<CellProbabilities> {
    spec.validate()?;
    let (f, y, or) = (spec.pi_plus1, spec.pi_1plus, spec.odds_ratio);
    let pi_11 = if (or - 1.0).abs() < 1e-12 {
        f * y
    } else {
        let s = 1.0 + (f + y) * (or - 1.0);
        let q = (s * s + 4.0 * or * (1.0 - or) * f * y).sqrt();
        (s - q) / (2.0 * (or - 1.0))
    };
    let pi_10 = y - pi_11;
    let pi_01 = f - pi_11;
    let pi_00 = 1.0 - pi_10 - pi_01 - pi_11;
    let cells = CellProbabilities { pi_00, pi_01, pi_10, pi_11 };
    for (name, v) in [
        ("pi_00", pi_00),
        ("pi_01", pi_01),
        ("pi_10", pi_10),
        ("pi_11", pi_11),
    ] {
        if !(v.is_finite() && v >= 0.0 && v <= 1.0) {
            return Err(Error::InfeasibleCell { cell: name, value: v });
        }
    }
    Ok(cells)
}

/// A continuous feature: N(0, 1) in the Y=0 class, N(mu, sigma) in Y=1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousFeatureSpec {
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    1.0
}

impl ContinuousFeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidSpec("mu must be finite".into()));
        }
        Ok(())
    }
}

/// A binary feature inside a [`DatasetSpec`]; its outcome margin is the
/// dataset-level `pi_1plus`, so only the feature margin and odds ratio are
/// stored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryFeatureSpec {
    pub name: String,
    pub pi_plus1: f64,
    pub odds_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedContinuousSpec {
    pub name: String,
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

/// Full recipe for one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub n: usize,
    pub pi_1plus: f64,
    #[serde(default)]
    pub binary_features: Vec<BinaryFeatureSpec>,
    #[serde(default)]
    pub continuous_features: Vec<NamedContinuousSpec>,
    pub seed: u64,
    /// When set, the outcome gets exactly round(n * pi_1plus) ones in a
    /// shuffled order instead of independent Bernoulli draws.
    #[serde(default)]
    pub exact_outcome_counts: bool,
}

impl DatasetSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: DatasetSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi_1plus > 0.0 && self.pi_1plus < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "pi_1plus must lie strictly in (0, 1), got {}",
                self.pi_1plus
            )));
        }
        let mut names = std::collections::HashSet::new();
        for b in &self.binary_features {
            if !names.insert(b.name.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate feature name {:?}", b.name)));
            }
            self.contingency(b).validate()?;
            cell_probabilities(&self.contingency(b))?;
        }
        for c in &self.continuous_features {
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate feature name {:?}", c.name)));
            }
            ContinuousFeatureSpec { mu: c.mu, sigma: c.sigma }.validate()?;
        }
        Ok(())
    }

    pub fn contingency(&self, b: &BinaryFeatureSpec) -> ContingencySpec {
        ContingencySpec {
            pi_plus1: b.pi_plus1,
            pi_1plus: self.pi_1plus,
            odds_ratio: b.odds_ratio,
        }
    }

    pub fn n_features(&self) -> usize {
        self.binary_features.len() + self.continuous_features.len()
    }
}

/// Draws one dataset from the spec. Deterministic for a fixed spec + seed:
/// the outcome and every column have their own derived RNG stream.
pub fn sample_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.n;
    let mut outcome = vec![0u8; n];
    {
        let mut rng = seeding::rng(spec.seed, &[tag::OUTCOME]);
        if spec.exact_outcome_counts {
            let ones = ((n as f64) * spec.pi_1plus).round() as usize;
            for y in outcome.iter_mut().take(ones.min(n)) {
                *y = 1;
            }
            // Fisher-Yates with the dedicated stream.
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                outcome.swap(i, j);
            }
        } else {
            for y in outcome.iter_mut() {
                *y = (rng.random::<f64>() < spec.pi_1plus) as u8;
            }
        }
    }

    let mut features = Vec::with_capacity(spec.n_features());
    for (j, b) in spec.binary_features.iter().enumerate() {
        let cells = cell_probabilities(&spec.contingency(b))?;
        let (p1, p0) = cells.conditional_rates();
        let mut rng = seeding::rng(spec.seed, &[tag::FEATURE, j as u64]);
        let values: Vec<f64> = outcome
            .iter()
            .map(|&y| {
                let p = if y == 1 { p1 } else { p0 };
                (rng.random::<f64>() < p) as u8 as f64
            })
            .collect();
        features.push(Feature {
            name: b.name.clone(),
            kind: FeatureKind::Binary,
            is_noise: (b.odds_ratio - 1.0).abs() < 1e-12,
            values,
        });
    }
    let offset = spec.binary_features.len() as u64;
    for (j, c) in spec.continuous_features.iter().enumerate() {
        let mut rng = seeding::rng(spec.seed, &[tag::FEATURE, offset + j as u64]);
        let null = Normal::new(0.0, 1.0).expect("unit normal");
        let shifted = Normal::new(c.mu, c.sigma)
            .map_err(|e| Error::InvalidSpec(format!("continuous feature {:?}: {e}", c.name)))?;
        let values: Vec<f64> = outcome
            .iter()
            .map(|&y| {
                if y == 1 {
                    shifted.sample(&mut rng)
                } else {
                    null.sample(&mut rng)
                }
            })
            .collect();
        features.push(Feature {
            name: c.name.clone(),
            kind: FeatureKind::Continuous,
            is_noise: c.mu == 0.0,
            values,
        });
    }

    Ok(Dataset { name: spec.name.clone(), outcome, features })
}

/// Feature imbalances used by the fixed binary design (fraction of x=1).
pub const GRID_FEATURE_FRACTIONS: [f64; 5] = [0.5, 0.4, 0.25, 0.1, 0.05];
/// Odds ratios used by the fixed binary design.
pub const GRID_ODDS_RATIOS: [f64; 3] = [3.0, 1.5, 1.0];
/// Mean shifts of the five continuous features.
pub const GRID_CONTINUOUS_MU: [f64; 5] = [0.75, 0.50, 0.0, 0.0, 0.0];
/// Outcome minority fractions of the grid.
pub const GRID_OUTCOME_FRACTIONS: [f64; 5] = [0.5, 0.4, 0.3, 0.2, 0.1];
/// Sample sizes of the grid.
pub const GRID_SAMPLE_SIZES: [usize; 3] = [100, 1_000, 10_000];

fn imbalance_label(minority: f64) -> String {
    let minor = (minority * 100.0).round() as u32;
    format!("{}_{}", 100 - minor, minor)
}

fn or_label(or: f64) -> String {
    if (or - or.round()).abs() < 1e-12 {
        format!("{}", or.round() as u32)
    } else {
        format!("{or}")
    }
}

/// The fixed 15-binary + 5-continuous feature design shared by every grid
/// cell.
pub fn grid_features() -> (Vec<BinaryFeatureSpec>, Vec<NamedContinuousSpec>) {
    let mut binary = Vec::new();
    for &or in &GRID_ODDS_RATIOS {
        for &f in &GRID_FEATURE_FRACTIONS {
            binary.push(BinaryFeatureSpec {
                name: format!("or{}_{}", or_label(or), imbalance_label(f)),
                pi_plus1: f,
                odds_ratio: or,
            });
        }
    }
    let mut continuous = Vec::new();
    let mut n_noise = 0;
    for &mu in &GRID_CONTINUOUS_MU {
        let name = if mu == 0.0 {
            n_noise += 1;
            format!("cont_noise{n_noise}")
        } else {
            format!("cont_mu{mu:.2}")
        };
        continuous.push(NamedContinuousSpec { name, mu, sigma: 1.0 });
    }
    (binary, continuous)
}

fn grid_spec(n: usize, pi_1plus: f64, root_seed: u64, index: u64) -> DatasetSpec {
    let (binary_features, continuous_features) = grid_features();
    DatasetSpec {
        name: format!("n{}_y{}", n, imbalance_label(pi_1plus)),
        n,
        pi_1plus,
        binary_features,
        continuous_features,
        seed: seeding::derive(root_seed, &[tag::GRID_CELL, index]),
        exact_outcome_counts: false,
    }
}

/// The full 15-dataset grid: three sample sizes crossed with five outcome
/// imbalances, each carrying the fixed 20-feature design.
pub fn paper_grid(root_seed: u64) -> Vec<DatasetSpec> {
    let mut specs = Vec::with_capacity(15);
    let mut index = 0;
    for &n in &GRID_SAMPLE_SIZES {
        for &y in &GRID_OUTCOME_FRACTIONS {
            specs.push(grid_spec(n, y, root_seed, index));
            index += 1;
        }
    }
    specs
}

/// Grid restricted to the desk-scale sample sizes (100 and 1000).
pub fn desk_grid(root_seed: u64) -> Vec<DatasetSpec> {
    paper_grid(root_seed)
        .into_iter()
        .filter(|s| s.n < 10_000)
        .collect()
}

/// Single grid cell by sample size and outcome minority fraction.
pub fn grid_cell(n: usize, pi_1plus: f64, root_seed: u64) -> DatasetSpec {
    let index = GRID_SAMPLE_SIZES
        .iter()
        .position(|&m| m == n)
        .map(|i| {
            let j = GRID_OUTCOME_FRACTIONS
                .iter()
                .position(|&y| (y - pi_1plus).abs() < 1e-12)
                .unwrap_or(0);
            (i * GRID_OUTCOME_FRACTIONS.len() + j) as u64
        })
        .unwrap_or(99);
    grid_spec(n, pi_1plus, root_seed, index)
}
