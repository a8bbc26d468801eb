//! The simulation benchmark: runs the forest, regression and bootstrap
//! protocols over a grid of dataset specs and aggregates ranks, detections,
//! confidence intervals and bootstrap distributions into four CSV tables.
//!
//! One dataset is sampled per grid cell (from the spec's own seed); splits,
//! forests and bootstrap subsamples get fresh seeded streams per repeat.
//! Every task seed derives from (root seed, cell, repeat, ...), so output
//! tables are byte-identical regardless of worker count.

use crate::datagen::{self, DatasetSpec};
use crate::dataset::{stratified_split, Dataset};
use crate::error::{Error, Result};
use crate::forest::{
    fit_forest, importance, rank_and_detect, ForestAlgo, ForestConfig, ImportanceMeasure,
    ImportanceReport,
};
use crate::glm::{self, CiMethod, DesignMatrix, FitResult};
use crate::penalized::{self, LogFConfig, NetConfig};
use crate::seeding::{self, tag};
use crate::stats::{self, BootstrapSummary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Regression flavors the protocols know how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegMethod {
    Ml,
    Firth,
    Logf,
    Lasso,
    Ridge,
    Enet,
}

impl RegMethod {
    pub fn label(&self) -> &'static str {
        match self {
            RegMethod::Ml => "ml",
            RegMethod::Firth => "firth",
            RegMethod::Logf => "logf",
            RegMethod::Lasso => "lasso",
            RegMethod::Ridge => "ridge",
            RegMethod::Enet => "enet",
        }
    }

    pub fn is_explanatory(&self) -> bool {
        matches!(self, RegMethod::Ml | RegMethod::Firth | RegMethod::Logf)
    }

    pub const ALL: [RegMethod; 6] = [
        RegMethod::Ml,
        RegMethod::Firth,
        RegMethod::Logf,
        RegMethod::Lasso,
        RegMethod::Ridge,
        RegMethod::Enet,
    ];
}

/// The four forest/importance pairings the protocol runs. Invalid pairings
/// (Gini on the conditional-inference forest) are unrepresentable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestPair {
    CartGini,
    CartPermAccuracy,
    CifPermAccuracy,
    CifPermAuc,
}

impl ForestPair {
    pub fn algo(&self) -> ForestAlgo {
        match self {
            ForestPair::CartGini | ForestPair::CartPermAccuracy => ForestAlgo::Cart,
            ForestPair::CifPermAccuracy | ForestPair::CifPermAuc => ForestAlgo::Cif,
        }
    }

    pub fn measure(&self) -> ImportanceMeasure {
        match self {
            ForestPair::CartGini => ImportanceMeasure::Gini,
            ForestPair::CartPermAccuracy | ForestPair::CifPermAccuracy => {
                ImportanceMeasure::PermAccuracy
            }
            ForestPair::CifPermAuc => ImportanceMeasure::PermAuc,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ForestPair::CartGini => "cart_gini",
            ForestPair::CartPermAccuracy => "cart_perm_accuracy",
            ForestPair::CifPermAccuracy => "cif_perm_accuracy",
            ForestPair::CifPermAuc => "cif_perm_auc",
        }
    }

    pub const ALL: [ForestPair; 4] = [
        ForestPair::CartGini,
        ForestPair::CartPermAccuracy,
        ForestPair::CifPermAccuracy,
        ForestPair::CifPermAuc,
    ];
}

/// Benchmark configuration, also the schema of the `bench --config` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub grid: Vec<DatasetSpec>,
    pub forest_repeats: usize,
    pub forest_split: f64,
    pub bootstrap_reps: usize,
    pub bootstrap_frac: f64,
    pub regression_methods: Vec<RegMethod>,
    pub forest_pairs: Vec<ForestPair>,
    pub alpha: f64,
    pub holm: bool,
    pub root_seed: u64,
    pub n_trees: usize,
    pub mtry: Option<usize>,
    /// Elastic-net mixing grid for cross-validated tuning.
    pub alpha_grid: Vec<f64>,
    pub lambda_path_len: usize,
    pub cv_folds: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            grid: Vec::new(),
            forest_repeats: 30,
            forest_split: 0.7,
            bootstrap_reps: 10_000,
            bootstrap_frac: 0.8,
            regression_methods: RegMethod::ALL.to_vec(),
            forest_pairs: ForestPair::ALL.to_vec(),
            alpha: 0.05,
            holm: true,
            root_seed: 0,
            n_trees: 500,
            mtry: None,
            alpha_grid: penalized::default_alpha_grid(),
            lambda_path_len: 100,
            cv_folds: 10,
        }
    }
}

impl BenchConfig {
    /// Full grid (three sample sizes) with the published repeat counts.
    pub fn paper(root_seed: u64) -> Self {
        BenchConfig { grid: datagen::paper_grid(root_seed), root_seed, ..Default::default() }
    }

    /// Desk-scale preset: N in {100, 1000} and 200 bootstrap repetitions.
    pub fn desk(root_seed: u64) -> Self {
        BenchConfig {
            grid: datagen::desk_grid(root_seed),
            bootstrap_reps: 200,
            root_seed,
            ..Default::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(s)
            .map_err(|e| Error::InvalidSpec(format!("bench config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.forest_split > 0.0 && self.forest_split < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "forest_split must lie in (0, 1), got {}",
                self.forest_split
            )));
        }
        if !(self.bootstrap_frac > 0.0 && self.bootstrap_frac < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "bootstrap_frac must lie in (0, 1), got {}",
                self.bootstrap_frac
            )));
        }
        if self.forest_repeats < 1 {
            return Err(Error::InvalidSpec("forest_repeats must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        for a in &self.alpha_grid {
            if !(0.0..=1.0).contains(a) {
                return Err(Error::InvalidSpec(format!("alpha_grid entry {a} outside [0, 1]")));
            }
        }
        for spec in &self.grid {
            spec.validate()?;
        }
        Ok(())
    }

    fn forest_config(&self, algo: ForestAlgo, seed: u64) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            mtry: self.mtry,
            algo,
            min_node: None,
            cif_alpha: 0.05,
            permutation_rounds: 1,
            seed,
        }
    }

    fn net_config(&self) -> NetConfig {
        NetConfig {
            lambda: 0.0,
            alpha_mix: 0.0,
            lambda_path_len: self.lambda_path_len,
            cv_folds: self.cv_folds,
        }
    }
}

/// Seed for the (cell, repeat) stratified split stream.
pub fn split_seed(root: u64, cell: u64, repeat: u64) -> u64 {
    seeding::derive(root, &[tag::SPLIT, cell, repeat])
}

/// Seed for the forest fitted at (cell, algorithm, repeat).
pub fn forest_seed(root: u64, cell: u64, algo: ForestAlgo, repeat: u64) -> u64 {
    let a = match algo {
        ForestAlgo::Cart => 0u64,
        ForestAlgo::Cif => 1u64,
    };
    seeding::derive(root, &[tag::FOREST, cell, a, repeat])
}

// ---------------------------------------------------------------------------
// Forest protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PairQuality {
    pub pair: ForestPair,
    pub auc_train: f64,
    pub auc_test: f64,
}

#[derive(Debug, Clone)]
pub struct ForestProtocolOutput {
    pub reports: Vec<(ForestPair, ImportanceReport)>,
    pub quality: Vec<PairQuality>,
}

/// Per repeat: fresh stratified split, one forest per algorithm, OOB
/// importances on the training part, AUC on the held-out part. Ranks and
/// detection come from the mean importance across repeats.
pub fn run_forest_protocol(
    dataset: &Dataset,
    cfg: &BenchConfig,
    cell: u64,
) -> Result<ForestProtocolOutput> {
    let (n0, n1) = dataset.outcome_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClassOutcome);
    }
    let algos: Vec<ForestAlgo> = {
        let mut v = Vec::new();
        for pair in &cfg.forest_pairs {
            if !v.contains(&pair.algo()) {
                v.push(pair.algo());
            }
        }
        v
    };
    if algos.is_empty() {
        return Ok(ForestProtocolOutput { reports: Vec::new(), quality: Vec::new() });
    }
    struct RepeatOut {
        reports: Vec<(ForestPair, ImportanceReport)>,
        auc: Vec<(ForestPair, Option<f64>, Option<f64>)>,
    }
    let repeats: Vec<RepeatOut> = (0..cfg.forest_repeats as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seeding::rng(cfg.root_seed, &[tag::SPLIT, cell, rep]);
            let (train_rows, test_rows) =
                stratified_split(&dataset.outcome, cfg.forest_split, &mut rng);
            let train = dataset.subset(&train_rows);
            let test = dataset.subset(&test_rows);
            let mut reports = Vec::new();
            let mut auc = Vec::new();
            for &algo in &algos {
                let fc = cfg.forest_config(algo, forest_seed(cfg.root_seed, cell, algo, rep));
                let model = fit_forest(&train, &fc)
                    .map_err(|e| e.context(format!("cell {cell} repeat {rep}")))?;
                let auc_train = model.auc(&train).ok();
                let auc_test = model.auc(&test).ok();
                for pair in cfg.forest_pairs.iter().filter(|p| p.algo() == algo) {
                    let report = importance(&model, &train, pair.measure())
                        .map_err(|e| e.context(format!("cell {cell} repeat {rep}")))?;
                    reports.push((*pair, report));
                    auc.push((*pair, auc_train, auc_test));
                }
            }
            Ok(RepeatOut { reports, auc })
        })
        .collect::<Result<Vec<_>>>()?;

    let noise = dataset.noise_flags();
    let mut reports = Vec::new();
    let mut quality = Vec::new();
    for pair in &cfg.forest_pairs {
        let per_repeat: Vec<ImportanceReport> = repeats
            .iter()
            .flat_map(|r| {
                r.reports
                    .iter()
                    .filter(|(p, _)| p == pair)
                    .map(|(_, rep)| rep.clone())
            })
            .collect();
        reports.push((*pair, rank_and_detect(&per_repeat, &noise)));
        let collect_mean = |pick: fn(&(ForestPair, Option<f64>, Option<f64>)) -> Option<f64>| {
            let vals: Vec<f64> = repeats
                .iter()
                .flat_map(|r| r.auc.iter().filter(|(p, _, _)| p == pair).filter_map(pick))
                .collect();
            if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        };
        quality.push(PairQuality {
            pair: *pair,
            auc_train: collect_mean(|t| t.1),
            auc_test: collect_mean(|t| t.2),
        });
    }
    Ok(ForestProtocolOutput { reports, quality })
}

// ---------------------------------------------------------------------------
// Regression protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FeatureInference {
    pub feature: String,
    pub or_hat: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub p_raw: f64,
    pub p_holm: f64,
    pub significant_raw: bool,
    pub significant_holm: bool,
    pub separated: bool,
}

#[derive(Debug, Clone)]
pub struct MethodInference {
    pub method: RegMethod,
    pub features: Vec<FeatureInference>,
    pub auc_train: f64,
    pub mcfadden_r2: f64,
}

/// Full-data explanatory fits (no train/test split) with profile intervals
/// and likelihood-ratio p-values, Holm-adjusted within the dataset.
pub fn run_regression_protocol(dataset: &Dataset, cfg: &BenchConfig) -> Result<Vec<MethodInference>> {
    let (n0, n1) = dataset.outcome_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClassOutcome);
    }
    let design = DesignMatrix::from_dataset(dataset, true);
    let y = &dataset.outcome;
    let ll_null = glm::null_log_likelihood(y, &design.weights);
    let methods: Vec<RegMethod> = cfg
        .regression_methods
        .iter()
        .copied()
        .filter(|m| m.is_explanatory())
        .collect();
    methods
        .par_iter()
        .map(|&method| {
            let logf_cfg = LogFConfig::default();
            let fit: FitResult = match method {
                RegMethod::Ml => glm::fit_ml(&design, y)?,
                RegMethod::Firth => penalized::fit_firth(&design, y)?,
                RegMethod::Logf => penalized::fit_logf(&design, y, logf_cfg)?,
                _ => unreachable!(),
            };
            let ci = match method {
                RegMethod::Ml => {
                    glm::confidence_intervals(&fit, &design, y, CiMethod::Profile, cfg.alpha)
                }
                RegMethod::Firth => {
                    penalized::firth_confidence_intervals(&design, y, &fit, cfg.alpha)?
                }
                RegMethod::Logf => {
                    penalized::logf_confidence_intervals(&design, y, logf_cfg, &fit, cfg.alpha)
                }
                _ => unreachable!(),
            };
            let slope_range = 1..fit.coefficients.len();
            let p_raw: Vec<f64> = slope_range
                .clone()
                .collect::<Vec<usize>>()
                .par_iter()
                .map(|&j| match method {
                    RegMethod::Ml => Ok(glm::profile_lrt_p_value(&fit, &design, y, j)),
                    RegMethod::Firth => penalized::firth_lrt_p_value(&design, y, &fit, j),
                    RegMethod::Logf => {
                        Ok(penalized::logf_lrt_p_value(&design, y, logf_cfg, &fit, j))
                    }
                    _ => unreachable!(),
                })
                .collect::<Result<Vec<f64>>>()?;
            let (p_holm, reject_holm) = stats::holm_bonferroni(&p_raw, cfg.alpha);
            let features = slope_range
                .enumerate()
                .map(|(k, j)| FeatureInference {
                    feature: fit.names[j].clone(),
                    or_hat: fit.odds_ratios[j],
                    ci_lower: ci[j].0,
                    ci_upper: ci[j].1,
                    p_raw: p_raw[k],
                    p_holm: p_holm[k],
                    significant_raw: p_raw[k] < cfg.alpha,
                    significant_holm: reject_holm[k],
                    separated: fit.separated[j],
                })
                .collect();
            let probs = glm::predict_probs(&design, &fit.coefficients);
            let auc_train = stats::auc(&probs, y)?;
            let mcfadden_r2 = stats::mcfadden_r2(fit.log_likelihood.min(0.0), ll_null)?;
            Ok(MethodInference { method, features, auc_train, mcfadden_r2 })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Bootstrap protocol
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MethodBootstrap {
    pub method: RegMethod,
    /// Per-feature summaries in feature order.
    pub summaries: Vec<(String, BootstrapSummary)>,
    pub n_fail: usize,
    /// More than 20% of repetitions failed; treat the summary with caution.
    pub unreliable: bool,
    /// Mean train/test AUC across successful repetitions (predictive
    /// methods only).
    pub auc_train: Option<f64>,
    pub auc_test: Option<f64>,
}

/// Per repetition: a stratified subsample of `bootstrap_frac` of the rows;
/// explanatory methods fit on the subsample, penalized-predictive methods
/// tune (alpha, lambda) by cross-validation on the subsample and score the
/// held-out rows. Odds-ratio estimates feed percentile intervals.
pub fn run_bootstrap_protocol(
    dataset: &Dataset,
    cfg: &BenchConfig,
    cell: u64,
) -> Result<Vec<MethodBootstrap>> {
    if cfg.bootstrap_reps < 2 {
        return Err(Error::InvalidSpec("bootstrap_reps must be at least 2".into()));
    }
    let methods = &cfg.regression_methods;
    if methods.is_empty() {
        return Ok(Vec::new());
    }
    let p = dataset.n_features();

    struct RepOut {
        // per method: Some(or estimates) or None on failure
        ors: Vec<Option<Vec<f64>>>,
        auc: Vec<Option<(f64, f64)>>,
    }
    let reps: Vec<RepOut> = (0..cfg.bootstrap_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seeding::rng(cfg.root_seed, &[tag::BOOTSTRAP, cell, rep]);
            let (sub_rows, hold_rows) =
                stratified_split(&dataset.outcome, cfg.bootstrap_frac, &mut rng);
            let sub = dataset.subset(&sub_rows);
            let hold = dataset.subset(&hold_rows);
            let design = DesignMatrix::from_dataset(&sub, true);
            let hold_design = DesignMatrix::from_dataset(&hold, true);
            let mut ors: Vec<Option<Vec<f64>>> = Vec::with_capacity(methods.len());
            let mut auc: Vec<Option<(f64, f64)>> = Vec::with_capacity(methods.len());
            for (mi, &method) in methods.iter().enumerate() {
                let slopes = |fit: &FitResult| fit.odds_ratios[1..].to_vec();
                match method {
                    RegMethod::Ml => {
                        let out = glm::fit_ml(&design, &sub.outcome).ok().and_then(|fit| {
                            (!fit.separation_detected && fit.converged).then(|| slopes(&fit))
                        });
                        ors.push(out);
                        auc.push(None);
                    }
                    RegMethod::Firth => {
                        let out = penalized::fit_firth(&design, &sub.outcome)
                            .ok()
                            .filter(|fit| fit.converged)
                            .map(|fit| slopes(&fit));
                        ors.push(out);
                        auc.push(None);
                    }
                    RegMethod::Logf => {
                        let out = penalized::fit_logf(&design, &sub.outcome, LogFConfig::default())
                            .ok()
                            .filter(|fit| fit.converged && !fit.separation_detected)
                            .map(|fit| slopes(&fit));
                        ors.push(out);
                        auc.push(None);
                    }
                    RegMethod::Lasso | RegMethod::Ridge | RegMethod::Enet => {
                        let grid: Vec<f64> = match method {
                            RegMethod::Lasso => vec![0.0],
                            RegMethod::Ridge => vec![1.0],
                            _ => cfg.alpha_grid.clone(),
                        };
                        let cv_seed = seeding::derive(
                            cfg.root_seed,
                            &[tag::BOOTSTRAP, cell, rep, mi as u64],
                        );
                        let result = penalized::cv_tune(
                            &design,
                            &sub.outcome,
                            &grid,
                            &cfg.net_config(),
                            cv_seed,
                        )
                        .and_then(|choice| {
                            penalized::fit_net(&design, &sub.outcome, &choice.config)
                        });
                        match result {
                            Ok(fit) => {
                                let train_probs =
                                    glm::predict_probs(&design, &fit.coefficients);
                                let hold_probs =
                                    glm::predict_probs(&hold_design, &fit.coefficients);
                                let a_train = stats::auc(&train_probs, &sub.outcome).ok();
                                let a_test = stats::auc(&hold_probs, &hold.outcome).ok();
                                ors.push(Some(slopes(&fit)));
                                auc.push(a_train.zip(a_test));
                            }
                            Err(_) => {
                                ors.push(None);
                                auc.push(None);
                            }
                        }
                    }
                }
            }
            RepOut { ors, auc }
        })
        .collect();

    let names = dataset.feature_names();
    let mut out = Vec::with_capacity(methods.len());
    for (mi, &method) in methods.iter().enumerate() {
        let good: Vec<&Vec<f64>> = reps.iter().filter_map(|r| r.ors[mi].as_ref()).collect();
        let n_fail = cfg.bootstrap_reps - good.len();
        let mut summaries = Vec::with_capacity(p);
        for f in 0..p {
            let estimates: Vec<f64> = good.iter().map(|ors| ors[f]).collect();
            let summary = stats::percentile_bootstrap(&estimates, cfg.alpha).map_err(|e| {
                e.context(format!(
                    "bootstrap summary for {} under {} ({} successful reps)",
                    names[f],
                    method.label(),
                    good.len()
                ))
            })?;
            summaries.push((names[f].clone(), summary));
        }
        let aucs: Vec<(f64, f64)> = reps.iter().filter_map(|r| r.auc[mi]).collect();
        let (auc_train, auc_test) = if aucs.is_empty() {
            (None, None)
        } else {
            let n = aucs.len() as f64;
            (
                Some(aucs.iter().map(|a| a.0).sum::<f64>() / n),
                Some(aucs.iter().map(|a| a.1).sum::<f64>() / n),
            )
        };
        out.push(MethodBootstrap {
            method,
            summaries,
            n_fail,
            unreliable: n_fail * 5 > cfg.bootstrap_reps,
            auc_train,
            auc_test,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct BenchResult {
    pub rank_rows: Vec<RankRow>,
    pub ci_rows: Vec<CiRow>,
    pub boot_rows: Vec<BootRow>,
    pub quality_rows: Vec<QualityRow>,
}

#[derive(Debug, Clone)]
pub struct RankRow {
    pub dataset: String,
    pub pair: ForestPair,
    pub feature: String,
    pub mean_importance: f64,
    pub rank: usize,
    pub detected: bool,
}

#[derive(Debug, Clone)]
pub struct CiRow {
    pub dataset: String,
    pub method: RegMethod,
    pub feature: String,
    pub or_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p_raw: f64,
    pub p_holm: f64,
    pub significant_raw: bool,
    pub significant_holm: bool,
    pub separation: bool,
}

#[derive(Debug, Clone)]
pub struct BootRow {
    pub dataset: String,
    pub method: RegMethod,
    pub feature: String,
    pub median: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_fail: usize,
}

#[derive(Debug, Clone)]
pub struct QualityRow {
    pub dataset: String,
    pub method: String,
    pub auc_train: Option<f64>,
    pub auc_test: Option<f64>,
    pub mcfadden_r2: Option<f64>,
}

/// Everything one grid cell produced.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub dataset: String,
    pub forest: Option<ForestProtocolOutput>,
    pub regression: Vec<MethodInference>,
    pub bootstrap: Vec<MethodBootstrap>,
}

/// Merges per-cell protocol outputs into the four tables with deterministic
/// (dataset, method, feature) ordering.
pub fn aggregate(cells: &[CellOutput]) -> BenchResult {
    let mut result = BenchResult::default();
    for cell in cells {
        if let Some(forest) = &cell.forest {
            for (pair, report) in &forest.reports {
                for (f, name) in report.names.iter().enumerate() {
                    result.rank_rows.push(RankRow {
                        dataset: cell.dataset.clone(),
                        pair: *pair,
                        feature: name.clone(),
                        mean_importance: report.values[f],
                        rank: report.ranks[f],
                        detected: report.detected[f],
                    });
                }
            }
            for q in &forest.quality {
                result.quality_rows.push(QualityRow {
                    dataset: cell.dataset.clone(),
                    method: q.pair.label().to_string(),
                    auc_train: (!q.auc_train.is_nan()).then_some(q.auc_train),
                    auc_test: (!q.auc_test.is_nan()).then_some(q.auc_test),
                    mcfadden_r2: None,
                });
            }
        }
        for m in &cell.regression {
            for f in &m.features {
                result.ci_rows.push(CiRow {
                    dataset: cell.dataset.clone(),
                    method: m.method,
                    feature: f.feature.clone(),
                    or_hat: f.or_hat,
                    ci_lo: f.ci_lower,
                    ci_hi: f.ci_upper,
                    p_raw: f.p_raw,
                    p_holm: f.p_holm,
                    significant_raw: f.significant_raw,
                    significant_holm: f.significant_holm,
                    separation: f.separated,
                });
            }
            result.quality_rows.push(QualityRow {
                dataset: cell.dataset.clone(),
                method: m.method.label().to_string(),
                auc_train: Some(m.auc_train),
                auc_test: None,
                mcfadden_r2: Some(m.mcfadden_r2),
            });
        }
        for b in &cell.bootstrap {
            for (name, summary) in &b.summaries {
                result.boot_rows.push(BootRow {
                    dataset: cell.dataset.clone(),
                    method: b.method,
                    feature: name.clone(),
                    median: summary.median,
                    ci_lo: summary.ci.0,
                    ci_hi: summary.ci.1,
                    n_fail: b.n_fail,
                });
            }
            if b.auc_train.is_some() || b.auc_test.is_some() {
                result.quality_rows.push(QualityRow {
                    dataset: cell.dataset.clone(),
                    method: b.method.label().to_string(),
                    auc_train: b.auc_train,
                    auc_test: b.auc_test,
                    mcfadden_r2: None,
                });
            }
        }
    }
    result
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BenchResult {
    pub fn rank_table_csv(&self) -> String {
        let mut s = String::from("dataset,pair,feature,mean_importance,rank,detected\n");
        for r in &self.rank_rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.dataset,
                r.pair.label(),
                r.feature,
                r.mean_importance,
                r.rank,
                r.detected
            );
        }
        s
    }

    /// Infinite upper endpoints serialize as the literal `inf`; unbounded
    /// lower endpoints are exactly 0 on the odds-ratio scale.
    pub fn ci_table_csv(&self) -> String {
        let mut s = String::from(
            "dataset,method,feature,or_hat,ci_lo,ci_hi,p_raw,p_holm,significant_raw,significant_holm,separation\n",
        );
        for r in &self.ci_rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.dataset,
                r.method.label(),
                r.feature,
                r.or_hat,
                r.ci_lo,
                r.ci_hi,
                r.p_raw,
                r.p_holm,
                r.significant_raw,
                r.significant_holm,
                r.separation
            );
        }
        s
    }

    pub fn bootstrap_table_csv(&self) -> String {
        let mut s = String::from("dataset,method,feature,median,ci_lo,ci_hi,n_fail\n");
        for r in &self.boot_rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.dataset,
                r.method.label(),
                r.feature,
                r.median,
                r.ci_lo,
                r.ci_hi,
                r.n_fail
            );
        }
        s
    }

    pub fn model_quality_csv(&self) -> String {
        let mut s = String::from("dataset,method,auc_train,auc_test,mcfadden_r2\n");
        for r in &self.quality_rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.dataset,
                r.method,
                fmt_opt(r.auc_train),
                fmt_opt(r.auc_test),
                fmt_opt(r.mcfadden_r2)
            );
        }
        s
    }

    /// Writes the four tables into `dir`, returning the paths.
    pub fn write_tables(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let files = [
            ("rank_table.csv", self.rank_table_csv()),
            ("ci_table.csv", self.ci_table_csv()),
            ("bootstrap_table.csv", self.bootstrap_table_csv()),
            ("model_quality.csv", self.model_quality_csv()),
        ];
        let mut paths = Vec::new();
        for (name, content) in files {
            let path = dir.join(name);
            std::fs::write(&path, content)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Runs every protocol over every grid cell. Cells run sequentially with
/// internal parallelism over repeats; the aggregation order is fixed by the
/// grid, so the result is identical for any worker count.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let mut cells = Vec::with_capacity(cfg.grid.len());
    for (index, spec) in cfg.grid.iter().enumerate() {
        let cell = index as u64;
        let dataset = datagen::sample_dataset(spec)
            .map_err(|e| e.context(format!("sampling grid cell {}", spec.name)))?;
        let forest = if cfg.forest_pairs.is_empty() {
            None
        } else {
            Some(
                run_forest_protocol(&dataset, cfg, cell)
                    .map_err(|e| e.context(format!("forest protocol on {}", spec.name)))?,
            )
        };
        let regression = if cfg.regression_methods.iter().any(|m| m.is_explanatory()) {
            run_regression_protocol(&dataset, cfg)
                .map_err(|e| e.context(format!("regression protocol on {}", spec.name)))?
        } else {
            Vec::new()
        };
        let bootstrap = if cfg.regression_methods.is_empty() || cfg.bootstrap_reps == 0 {
            Vec::new()
        } else {
            run_bootstrap_protocol(&dataset, cfg, cell)
                .map_err(|e| e.context(format!("bootstrap protocol on {}", spec.name)))?
        };
        cells.push(CellOutput { dataset: spec.name.clone(), forest, regression, bootstrap });
    }
    Ok(aggregate(&cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{BinaryFeatureSpec, NamedContinuousSpec};

    fn tiny_spec(seed: u64) -> DatasetSpec {
        DatasetSpec {
            name: format!("tiny{seed}"),
            n: 120,
            pi_1plus: 0.4,
            binary_features: vec![
                BinaryFeatureSpec { name: "b_signal".into(), pi_plus1: 0.5, odds_ratio: 3.0 },
                BinaryFeatureSpec { name: "b_noise".into(), pi_plus1: 0.4, odds_ratio: 1.0 },
            ],
            continuous_features: vec![NamedContinuousSpec {
                name: "c_noise".into(),
                mu: 0.0,
                sigma: 1.0,
            }],
            seed,
            exact_outcome_counts: false,
        }
    }

    fn tiny_config() -> BenchConfig {
        BenchConfig {
            grid: vec![tiny_spec(7), tiny_spec(8)],
            forest_repeats: 3,
            bootstrap_reps: 12,
            regression_methods: vec![RegMethod::Ml, RegMethod::Logf, RegMethod::Lasso],
            forest_pairs: vec![ForestPair::CartGini, ForestPair::CifPermAuc],
            n_trees: 30,
            lambda_path_len: 12,
            cv_folds: 4,
            alpha_grid: vec![0.0, 1.0],
            root_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn aggregate_row_counts_are_exact() {
        let cfg = tiny_config();
        let result = run_bench(&cfg).unwrap();
        let n_datasets = 2;
        let n_features = 3;
        assert_eq!(result.rank_rows.len(), n_datasets * 2 * n_features);
        assert_eq!(result.ci_rows.len(), n_datasets * 2 * n_features);
        assert_eq!(result.boot_rows.len(), n_datasets * 3 * n_features);
        // quality: 2 pairs + 2 explanatory + 1 predictive per dataset
        assert_eq!(result.quality_rows.len(), n_datasets * 5);
        // every feature appears exactly once per (dataset, method)
        for spec_name in ["tiny7", "tiny8"] {
            for m in ["ml", "logf"] {
                let count = result
                    .ci_rows
                    .iter()
                    .filter(|r| r.dataset == spec_name && r.method.label() == m)
                    .count();
                assert_eq!(count, n_features);
            }
        }
    }

    #[test]
    fn empty_grid_gives_headers_only() {
        let cfg = BenchConfig { grid: Vec::new(), ..tiny_config() };
        let result = run_bench(&cfg).unwrap();
        assert_eq!(result.rank_table_csv().lines().count(), 1);
        assert_eq!(result.ci_table_csv().lines().count(), 1);
        assert_eq!(result.bootstrap_table_csv().lines().count(), 1);
        assert_eq!(result.model_quality_csv().lines().count(), 1);
    }

    #[test]
    fn reproducible_across_runs() {
        let cfg = tiny_config();
        let a = run_bench(&cfg).unwrap();
        let b = run_bench(&cfg).unwrap();
        assert_eq!(a.rank_table_csv(), b.rank_table_csv());
        assert_eq!(a.ci_table_csv(), b.ci_table_csv());
        assert_eq!(a.bootstrap_table_csv(), b.bootstrap_table_csv());
        assert_eq!(a.model_quality_csv(), b.model_quality_csv());
    }

    #[test]
    fn holm_detections_are_a_subset_of_raw() {
        let result = run_bench(&tiny_config()).unwrap();
        for row in &result.ci_rows {
            if row.significant_holm {
                assert!(row.significant_raw, "{row:?}");
            }
            assert!(row.p_holm >= row.p_raw - 1e-12);
        }
    }

    #[test]
    fn single_repeat_equals_direct_fit() {
        let spec = tiny_spec(9);
        let dataset = datagen::sample_dataset(&spec).unwrap();
        let cfg = BenchConfig {
            grid: vec![spec],
            forest_repeats: 1,
            forest_pairs: vec![ForestPair::CartPermAccuracy],
            n_trees: 25,
            root_seed: 11,
            ..Default::default()
        };
        let out = run_forest_protocol(&dataset, &cfg, 0).unwrap();
        // Reconstruct the same split and forest by the published derivations.
        let mut rng = seeding::rng(cfg.root_seed, &[tag::SPLIT, 0, 0]);
        let (train_rows, _) = stratified_split(&dataset.outcome, cfg.forest_split, &mut rng);
        let train = dataset.subset(&train_rows);
        let fc = cfg.forest_config(
            ForestAlgo::Cart,
            forest_seed(cfg.root_seed, 0, ForestAlgo::Cart, 0),
        );
        let model = fit_forest(&train, &fc).unwrap();
        let direct = importance(&model, &train, ImportanceMeasure::PermAccuracy).unwrap();
        let (_, aggregated) = &out.reports[0];
        assert_eq!(aggregated.values, direct.values);
        assert_eq!(aggregated.ranks, direct.ranks);
    }

    #[test]
    fn degenerate_reps_with_identical_counts_give_zero_width_ci() {
        // The feature equals the outcome, so every stratified 80% subsample
        // sees the same 2x2 counts (16, 0, 0, 16) and the log-F estimate is
        // identical rep after rep.
        let mut dataset = datagen::sample_dataset(&DatasetSpec {
            name: "degenerate".into(),
            n: 40,
            pi_1plus: 0.5,
            binary_features: vec![BinaryFeatureSpec {
                name: "b".into(),
                pi_plus1: 0.5,
                odds_ratio: 3.0,
            }],
            continuous_features: vec![],
            seed: 3,
            exact_outcome_counts: true,
        })
        .unwrap();
        for (v, &y) in dataset.features[0].values.iter_mut().zip(&dataset.outcome) {
            *v = y as f64;
        }
        let cfg = BenchConfig {
            grid: vec![],
            bootstrap_reps: 2,
            bootstrap_frac: 0.8,
            regression_methods: vec![RegMethod::Logf],
            root_seed: 17,
            ..Default::default()
        };
        let out = run_bootstrap_protocol(&dataset, &cfg, 0).unwrap();
        let (_, summary) = &out[0].summaries[0];
        assert_eq!(out[0].n_fail, 0);
        // Width collapses to summation-order noise; exact zero width for
        // literally identical estimates is pinned in the stats tests.
        let rel_width = (summary.ci.1 - summary.ci.0) / summary.median;
        assert!(rel_width.abs() < 1e-9, "width {rel_width} should be degenerate");
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = tiny_config();
        let text = cfg.to_toml_string();
        let back = BenchConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.forest_repeats, cfg.forest_repeats);
        assert_eq!(back.regression_methods, cfg.regression_methods);
        assert_eq!(back.forest_pairs, cfg.forest_pairs);
        assert_eq!(back.grid.len(), cfg.grid.len());
        assert_eq!(back.grid[0].name, cfg.grid[0].name);

        assert!(BenchConfig::from_toml_str("forest_split = 1.5").is_err());
        assert!(BenchConfig::from_toml_str("no_such_field = 1").is_err());
    }
}
