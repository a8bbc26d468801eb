//! Penalized logistic regression.
//!
//! Three penalties live here:
//!
//! - Firth: adds half the log-determinant of the Fisher information to the
//!   likelihood, removing the leading-order bias of the estimates and
//!   guaranteeing finite coefficients under separation. For a single binary
//!   feature this is exactly "add 0.5 to each cell of the 2x2 table".
//! - log-F(m, m): implemented by data augmentation; each feature gets m
//!   pairs of pseudo-rows (outcomes 1 and 0, that feature set to 1, all
//!   others and the intercept 0) with row weight m/2, after which any
//!   logistic fitter applies.
//! - elastic net: cyclic coordinate descent on the IRLS quadratic
//!   approximation, minimizing `-ll + lambda (alpha ||b||^2 + (1-alpha)
//!   |b|_1)` over the non-intercept coefficients. Note the mixing
//!   convention: `alpha = 0` is the lasso and `alpha = 1` is ridge.
//!
//! Elastic-net fits scale non-0/1 columns to unit variance internally and
//! report coefficients back on the original scale; the intercept is never
//! penalized. A linear-regression mode (squared loss, no intercept, no
//! scaling) exists so the closed-form orthonormal-design solutions can be
//! checked directly; it is not part of any protocol.

use crate::dataset::stratified_folds;
use crate::dist;
use crate::error::{Error, Result};
use crate::glm::{
    self, logistic, profile_endpoint, CiMethod, DesignMatrix, FitResult, PROFILE_LOGIT_LIMIT,
};
use crate::linalg;
use crate::seeding::{self, tag};
use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Strength of the log-F penalty; `m = 0` disables it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFConfig {
    pub m: u32,
}

impl Default for LogFConfig {
    fn default() -> Self {
        LogFConfig { m: 1 }
    }
}

/// Elastic-net settings. `alpha_mix = 0` is pure lasso, `alpha_mix = 1`
/// pure ridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub lambda: f64,
    pub alpha_mix: f64,
    pub lambda_path_len: usize,
    pub cv_folds: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig { lambda: 0.0, alpha_mix: 0.0, lambda_path_len: 100, cv_folds: 10 }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidSpec(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.alpha_mix) {
            return Err(Error::InvalidSpec(format!(
                "alpha_mix must lie in [0, 1], got {}",
                self.alpha_mix
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Firth
// ---------------------------------------------------------------------------

struct FirthState {
    penalized_ll: f64,
    score: Vec<f64>,
    fisher: Array2<f64>,
}

/// Penalized log-likelihood, modified score and Fisher information at beta.
/// Returns `None` when the Fisher matrix is singular.
fn firth_state(design: &DesignMatrix, outcome: &[u8], beta: &[f64]) -> Option<FirthState> {
    let n = design.n_rows();
    let p = design.n_cols();
    let xs = design.x.as_slice().expect("row-major design");
    let mut fisher = Array2::<f64>::zeros((p, p));
    let mut probs = vec![0.0; n];
    for i in 0..n {
        let w = design.weights[i];
        let row = &xs[i * p..(i + 1) * p];
        let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        let pr = logistic(eta);
        probs[i] = pr;
        if w == 0.0 {
            continue;
        }
        let wi = w * pr * (1.0 - pr);
        for a in 0..p {
            for b in a..p {
                fisher[(a, b)] += wi * row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            fisher[(a, b)] = fisher[(b, a)];
        }
    }
    let chol = linalg::cholesky(&fisher)?;
    let inv = linalg::chol_inverse(&chol);
    let log_det = linalg::chol_log_det(&chol);

    let mut score = vec![0.0; p];
    for i in 0..n {
        let w = design.weights[i];
        let row = &xs[i * p..(i + 1) * p];
        let pr = probs[i];
        // hat value of row i in the weighted design
        let mut quad = 0.0;
        for a in 0..p {
            let mut t = 0.0;
            for b in 0..p {
                t += inv[(a, b)] * row[b];
            }
            quad += row[a] * t;
        }
        let h = w * pr * (1.0 - pr) * quad;
        let g = w * (outcome[i] as f64 - pr) + h * (0.5 - pr);
        for (s, x) in score.iter_mut().zip(row) {
            *s += g * x;
        }
    }
    let ll = glm::log_likelihood(design, outcome, beta);
    Some(FirthState { penalized_ll: ll + 0.5 * log_det, score, fisher })
}

/// Firth IRLS. `fixed` pins one coordinate (profile fits); only free
/// coordinates are updated.
fn firth_irls(
    design: &DesignMatrix,
    outcome: &[u8],
    fixed: Option<(usize, f64)>,
    start: Option<&[f64]>,
) -> Result<(Vec<f64>, f64, bool, Array2<f64>)> {
    let p = design.n_cols();
    let mut beta = start.map_or_else(|| vec![0.0; p], |s| s.to_vec());
    if let Some((j, v)) = fixed {
        beta[j] = v;
    }
    let free: Vec<usize> = (0..p).filter(|&j| fixed.map_or(true, |(f, _)| f != j)).collect();
    let mut state = firth_state(design, outcome, &beta)
        .ok_or_else(|| Error::Domain("singular Fisher information at the start".into()))?;
    let mut converged = false;
    for _ in 0..150 {
        let max_score = free.iter().map(|&j| state.score[j].abs()).fold(0.0, f64::max);
        if max_score < 1e-9 {
            converged = true;
            break;
        }
        // Newton direction on the free coordinates.
        let k = free.len();
        let mut sub = Array2::<f64>::zeros((k, k));
        let mut rhs = Array1::<f64>::zeros(k);
        for (a, &ja) in free.iter().enumerate() {
            rhs[a] = state.score[ja];
            for (b, &jb) in free.iter().enumerate() {
                sub[(a, b)] = state.fisher[(ja, jb)];
            }
        }
        let delta = linalg::solve_spd(&sub, &rhs)
            .ok_or_else(|| Error::Domain("singular Fisher information".into()))?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..24 {
            let mut cand = beta.clone();
            for (a, &ja) in free.iter().enumerate() {
                cand[ja] += step * delta[a];
            }
            if let Some(next) = firth_state(design, outcome, &cand) {
                if next.penalized_ll >= state.penalized_ll - 1e-12 {
                    let change = (next.penalized_ll - state.penalized_ll).abs();
                    beta = cand;
                    state = next;
                    accepted = true;
                    if change < 1e-13 && max_score < 1e-6 {
                        converged = true;
                    }
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            converged = free
                .iter()
                .map(|&j| state.score[j].abs())
                .fold(0.0, f64::max)
                < 1e-6;
            break;
        }
        if converged {
            break;
        }
    }
    Ok((beta, state.penalized_ll, converged, state.fisher))
}

/// Firth bias-reduced logistic regression: maximizes the log-likelihood
/// plus half the log-determinant of the Fisher information. Estimates stay
/// finite even under separation.
pub fn fit_firth(design: &DesignMatrix, outcome: &[u8]) -> Result<FitResult> {
    assert_eq!(design.n_rows(), outcome.len());
    design.validate()?;
    let (beta, _pll, converged, fisher) = firth_irls(design, outcome, None, None)?;
    let covariance = linalg::cholesky(&fisher).map(|l| linalg::chol_inverse(&l));
    Ok(FitResult {
        names: design.names.clone(),
        coefficients: beta.clone(),
        odds_ratios: beta.iter().map(|b| b.exp()).collect(),
        covariance,
        ci: None,
        converged,
        separation_detected: false,
        separated: vec![false; beta.len()],
        log_likelihood: glm::log_likelihood(design, outcome, &beta),
        iterations: 0,
    })
}

/// Profile penalized-likelihood intervals for a Firth fit.
pub fn firth_confidence_intervals(
    design: &DesignMatrix,
    outcome: &[u8],
    fit: &FitResult,
    alpha: f64,
) -> Result<Vec<(f64, f64)>> {
    let state = firth_state(design, outcome, &fit.coefficients)
        .ok_or_else(|| Error::Domain("singular Fisher information".into()))?;
    let target = state.penalized_ll - dist::chi2_1_quantile(1.0 - alpha) / 2.0;
    let p = fit.coefficients.len();
    Ok((0..p)
        .into_par_iter()
        .map(|j| {
            let se = fit
                .covariance
                .as_ref()
                .map(|c| c[(j, j)].max(0.0).sqrt())
                .unwrap_or(0.5);
            let center = fit.coefficients[j];
            let endpoint = |dir: f64| {
                let mut warm = fit.coefficients.clone();
                let mut eval = |v: f64| match firth_irls(design, outcome, Some((j, v)), Some(&warm))
                {
                    Ok((beta, pll, _, _)) => {
                        warm = beta;
                        pll
                    }
                    Err(_) => f64::NEG_INFINITY,
                };
                profile_endpoint(&mut eval, center, se, dir, target)
            };
            (endpoint(-1.0).exp(), endpoint(1.0).exp())
        })
        .collect())
}

/// Penalized likelihood-ratio p-value for a Firth coefficient being zero.
pub fn firth_lrt_p_value(
    design: &DesignMatrix,
    outcome: &[u8],
    fit: &FitResult,
    j: usize,
) -> Result<f64> {
    let state = firth_state(design, outcome, &fit.coefficients)
        .ok_or_else(|| Error::Domain("singular Fisher information".into()))?;
    let (_, pll0, _, _) = firth_irls(design, outcome, Some((j, 0.0)), Some(&fit.coefficients))?;
    Ok(dist::chi2_1_sf((2.0 * (state.penalized_ll - pll0)).max(0.0)))
}

// ---------------------------------------------------------------------------
// log-F via data augmentation
// ---------------------------------------------------------------------------

/// Appends `m` pseudo-row pairs per non-intercept feature: outcomes (1, 0),
/// the chosen feature 1, everything else (including the intercept column) 0,
/// row weight m/2. Original rows keep their weights.
pub fn augment_logf(
    design: &DesignMatrix,
    outcome: &[u8],
    cfg: LogFConfig,
) -> (DesignMatrix, Vec<u8>) {
    let m = cfg.m as usize;
    let n = design.n_rows();
    let p = design.n_cols();
    let slope_cols: Vec<usize> = design.slope_columns().collect();
    let extra = 2 * m * slope_cols.len();
    let mut x = Array2::<f64>::zeros((n + extra, p));
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = design.x[(i, j)];
        }
    }
    let mut weights = design.weights.clone();
    let mut y: Vec<u8> = outcome.to_vec();
    let half_m = cfg.m as f64 / 2.0;
    let mut r = n;
    for &col in &slope_cols {
        for _ in 0..m {
            for out in [1u8, 0u8] {
                x[(r, col)] = 1.0;
                weights.push(half_m);
                y.push(out);
                r += 1;
            }
        }
    }
    let aug = DesignMatrix {
        names: design.names.clone(),
        x,
        weights,
        intercept: design.intercept,
    };
    (aug, y)
}

/// log-F(m, m) penalized fit: the MLE on the augmented data. The reported
/// log-likelihood covers the real rows only, so fit statistics ignore the
/// pseudo-rows.
pub fn fit_logf(design: &DesignMatrix, outcome: &[u8], cfg: LogFConfig) -> Result<FitResult> {
    let (aug, ay) = augment_logf(design, outcome, cfg);
    let mut fit = glm::fit_ml(&aug, &ay)?;
    fit.log_likelihood = glm::log_likelihood(design, outcome, &fit.coefficients);
    Ok(fit)
}

/// Profile intervals on the augmented objective.
pub fn logf_confidence_intervals(
    design: &DesignMatrix,
    outcome: &[u8],
    cfg: LogFConfig,
    fit: &FitResult,
    alpha: f64,
) -> Vec<(f64, f64)> {
    let (aug, ay) = augment_logf(design, outcome, cfg);
    let mut aug_fit = fit.clone();
    aug_fit.log_likelihood = glm::log_likelihood(&aug, &ay, &fit.coefficients);
    glm::confidence_intervals(&aug_fit, &aug, &ay, CiMethod::Profile, alpha)
}

/// Likelihood-ratio p-value on the augmented objective.
pub fn logf_lrt_p_value(
    design: &DesignMatrix,
    outcome: &[u8],
    cfg: LogFConfig,
    fit: &FitResult,
    j: usize,
) -> f64 {
    let (aug, ay) = augment_logf(design, outcome, cfg);
    let mut aug_fit = fit.clone();
    aug_fit.log_likelihood = glm::log_likelihood(&aug, &ay, &fit.coefficients);
    glm::profile_lrt_p_value(&aug_fit, &aug, &ay, j)
}

// ---------------------------------------------------------------------------
// Elastic net
// ---------------------------------------------------------------------------

fn soft_threshold(s: f64, t: f64) -> f64 {
    if s > t {
        s - t
    } else if s < -t {
        s + t
    } else {
        0.0
    }
}

/// Standardized working copy of a design for net fits.
struct NetWorkspace {
    x: Array2<f64>,
    scales: Vec<f64>,
    penalized: Vec<bool>,
    weights: Vec<f64>,
    y: Vec<u8>,
}

impl NetWorkspace {
    fn new(design: &DesignMatrix, outcome: &[u8]) -> Self {
        let n = design.n_rows();
        let p = design.n_cols();
        let mut x = design.x.clone();
        let mut scales = vec![1.0; p];
        let mut penalized = vec![true; p];
        if design.intercept {
            penalized[0] = false;
        }
        for j in design.slope_columns() {
            let col = design.x.column(j);
            let zero_one = col.iter().all(|&v| v == 0.0 || v == 1.0);
            if zero_one {
                continue;
            }
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            if sd > 0.0 {
                scales[j] = sd;
                for i in 0..n {
                    x[(i, j)] /= sd;
                }
            }
        }
        NetWorkspace {
            x,
            scales,
            penalized,
            weights: design.weights.clone(),
            y: outcome.to_vec(),
        }
    }

    /// Largest penalty that keeps every slope at zero for the pure lasso:
    /// the max absolute null-model score over penalized columns.
    fn lambda_max(&self) -> f64 {
        let n = self.x.nrows();
        let wsum: f64 = self.weights.iter().sum();
        let ybar: f64 = self
            .y
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * y as f64)
            .sum::<f64>()
            / wsum;
        let mut best = 0.0f64;
        for j in 0..self.x.ncols() {
            if !self.penalized[j] {
                continue;
            }
            let mut s = 0.0;
            for i in 0..n {
                s += self.weights[i] * self.x[(i, j)] * (self.y[i] as f64 - ybar);
            }
            best = best.max(s.abs());
        }
        best
    }

    /// IRLS + cyclic coordinate descent at one (lambda, alpha) point,
    /// starting (and ending) in `beta` on the standardized scale.
    fn solve(&self, lambda: f64, alpha: f64, beta: &mut Vec<f64>) -> (bool, usize) {
        let n = self.x.nrows();
        let p = self.x.ncols();
        let xs = self.x.as_slice().expect("row-major");
        let l1 = lambda * (1.0 - alpha);
        let l2 = lambda * alpha;
        let mut eta = vec![0.0; n];
        let mut converged = false;
        let mut outer_used = 0;
        for outer in 0..100 {
            outer_used = outer + 1;
            for i in 0..n {
                let row = &xs[i * p..(i + 1) * p];
                eta[i] = row.iter().zip(beta.iter()).map(|(x, b)| x * b).sum();
            }
            let mut w = vec![0.0; n];
            let mut r = vec![0.0; n]; // weighted working residual z - eta
            for i in 0..n {
                let pr = logistic(eta[i]);
                let var = (pr * (1.0 - pr)).max(1e-5);
                w[i] = self.weights[i] * var;
                r[i] = (self.y[i] as f64 - pr) / var;
            }
            let mut v = vec![0.0; p];
            for j in 0..p {
                let mut t = 0.0;
                for i in 0..n {
                    let xij = xs[i * p + j];
                    t += w[i] * xij * xij;
                }
                v[j] = t;
            }
            let mut outer_change = 0.0f64;
            for _sweep in 0..1000 {
                let mut sweep_change = 0.0f64;
                for j in 0..p {
                    if v[j] <= 0.0 {
                        continue;
                    }
                    let old = beta[j];
                    let mut s = v[j] * old;
                    for i in 0..n {
                        s += w[i] * xs[i * p + j] * r[i];
                    }
                    let new = if self.penalized[j] {
                        soft_threshold(s, l1) / (v[j] + 2.0 * l2)
                    } else {
                        s / v[j]
                    };
                    if new != old {
                        let d = new - old;
                        for i in 0..n {
                            r[i] -= xs[i * p + j] * d;
                        }
                        beta[j] = new;
                        sweep_change = sweep_change.max(d.abs());
                    }
                }
                outer_change = outer_change.max(sweep_change);
                if sweep_change < 1e-7 {
                    break;
                }
            }
            if outer_change < 1e-7 {
                converged = true;
                break;
            }
        }
        (converged, outer_used)
    }

    fn unscale(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter().zip(&self.scales).map(|(b, s)| b / s).collect()
    }
}

/// Elastic-net logistic fit at a fixed (lambda, alpha_mix). Coefficients are
/// reported on the original scale; no covariance or intervals are produced
/// (bootstrap them instead).
pub fn fit_net(design: &DesignMatrix, outcome: &[u8], cfg: &NetConfig) -> Result<FitResult> {
    cfg.validate()?;
    if design.n_rows() == 0 {
        return Err(Error::Domain("cannot fit an empty dataset".into()));
    }
    let has0 = outcome.iter().any(|&y| y == 0);
    let has1 = outcome.iter().any(|&y| y == 1);
    if !(has0 && has1) {
        return Err(Error::SingleClassOutcome);
    }
    let ws = NetWorkspace::new(design, outcome);
    let mut beta = vec![0.0; design.n_cols()];
    let (converged, iterations) = ws.solve(cfg.lambda, cfg.alpha_mix, &mut beta);
    let coefficients = ws.unscale(&beta);
    Ok(FitResult {
        names: design.names.clone(),
        coefficients: coefficients.clone(),
        odds_ratios: coefficients.iter().map(|b| b.exp()).collect(),
        covariance: None,
        ci: None,
        converged,
        separation_detected: false,
        separated: vec![false; coefficients.len()],
        log_likelihood: glm::log_likelihood(design, outcome, &coefficients),
        iterations,
    })
}

/// Largest useful penalty for the design (pure-lasso kill point).
pub fn lambda_max(design: &DesignMatrix, outcome: &[u8]) -> f64 {
    NetWorkspace::new(design, outcome).lambda_max()
}

/// Linear-regression mode: squared loss `0.5 ||y - X b||^2` plus the same
/// penalty, no intercept, no scaling. Exists to check the closed-form
/// orthonormal-design solutions.
pub fn fit_net_linear(columns: &[Vec<f64>], y: &[f64], cfg: &NetConfig) -> Vec<f64> {
    let p = columns.len();
    let n = y.len();
    let l1 = cfg.lambda * (1.0 - cfg.alpha_mix);
    let l2 = cfg.lambda * cfg.alpha_mix;
    let mut beta = vec![0.0; p];
    let mut r = y.to_vec();
    let v: Vec<f64> = columns.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
    for _ in 0..10_000 {
        let mut change = 0.0f64;
        for j in 0..p {
            if v[j] <= 0.0 {
                continue;
            }
            let old = beta[j];
            let mut s = v[j] * old;
            for i in 0..n {
                s += columns[j][i] * r[i];
            }
            let new = soft_threshold(s, l1) / (v[j] + 2.0 * l2);
            if new != old {
                for i in 0..n {
                    r[i] -= columns[j][i] * (new - old);
                }
                beta[j] = new;
                change = change.max((new - old).abs());
            }
        }
        if change < 1e-12 {
            break;
        }
    }
    beta
}

/// Chosen penalty from cross-validation, plus the path diagnostics.
#[derive(Debug, Clone)]
pub struct CvChoice {
    pub config: NetConfig,
    pub lambda_max: f64,
    /// Total out-of-fold deviance at the chosen point.
    pub deviance: f64,
}

/// Cross-validated (alpha, lambda) selection: a log-spaced lambda path from
/// the kill point down four decades, stratified folds, total out-of-fold
/// deviance as the loss, ties broken toward the larger lambda.
pub fn cv_tune(
    design: &DesignMatrix,
    outcome: &[u8],
    alpha_grid: &[f64],
    cfg: &NetConfig,
    seed: u64,
) -> Result<CvChoice> {
    cfg.validate()?;
    let folds = cfg.cv_folds;
    if folds < 2 {
        return Err(Error::InvalidSpec("cross-validation needs at least 2 folds".into()));
    }
    let n = design.n_rows();
    if n < folds {
        return Err(Error::InvalidSpec(format!("{n} rows cannot form {folds} folds")));
    }
    let n_pos = outcome.iter().filter(|&&y| y == 1).count();
    if n_pos < 2 || n - n_pos < 2 {
        return Err(Error::SingleClassOutcome);
    }
    let alphas: Vec<f64> = if alpha_grid.is_empty() {
        vec![0.0]
    } else {
        alpha_grid.to_vec()
    };
    let full = NetWorkspace::new(design, outcome);
    let lam_max = full.lambda_max().max(1e-10);
    let k = cfg.lambda_path_len.max(2);
    let lambdas: Vec<f64> = (0..k)
        .map(|i| lam_max * 10f64.powf(-4.0 * i as f64 / (k - 1) as f64))
        .collect();

    let mut rng = seeding::rng(seed, &[tag::FOLDS]);
    let assignment = stratified_folds(outcome, folds, &mut rng);

    // One task per (alpha, fold); each returns the held-out deviance along
    // the path. Reduction is index-based, so execution order cannot matter.
    let tasks: Vec<(usize, usize)> = (0..alphas.len())
        .flat_map(|a| (0..folds).map(move |f| (a, f)))
        .collect();
    let results: Vec<(usize, Vec<f64>)> = tasks
        .par_iter()
        .map(|&(a, fold)| {
            let train_rows: Vec<usize> =
                (0..n).filter(|&i| assignment[i] != fold).collect();
            let val_rows: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
            let sub_design = subset_design(design, &train_rows);
            let sub_y: Vec<u8> = train_rows.iter().map(|&i| outcome[i]).collect();
            let ws = NetWorkspace::new(&sub_design, &sub_y);
            let mut beta = vec![0.0; design.n_cols()];
            let mut devs = Vec::with_capacity(lambdas.len());
            for &lam in &lambdas {
                ws.solve(lam, alphas[a], &mut beta);
                let coef = ws.unscale(&beta);
                let mut dev = 0.0;
                for &i in &val_rows {
                    let row: Vec<f64> = (0..design.n_cols()).map(|j| design.x[(i, j)]).collect();
                    let eta: f64 = row.iter().zip(&coef).map(|(x, b)| x * b).sum();
                    let p = logistic(eta).clamp(1e-12, 1.0 - 1e-12);
                    dev -= 2.0
                        * design.weights[i]
                        * if outcome[i] == 1 { p.ln() } else { (1.0 - p).ln() };
                }
                devs.push(dev);
            }
            (a * folds + fold, devs)
        })
        .collect();
    let mut deviance = vec![vec![0.0f64; lambdas.len()]; alphas.len()];
    for (id, devs) in results {
        let a = id / folds;
        for (l, d) in devs.iter().enumerate() {
            deviance[a][l] += d;
        }
    }

    let mut best = (0usize, 0usize, f64::INFINITY);
    for (a, row) in deviance.iter().enumerate() {
        for (l, &d) in row.iter().enumerate() {
            // Strict improvement keeps the earlier (larger) lambda on ties.
            if d < best.2 {
                best = (a, l, d);
            }
        }
    }
    Ok(CvChoice {
        config: NetConfig {
            lambda: lambdas[best.1],
            alpha_mix: alphas[best.0],
            ..cfg.clone()
        },
        lambda_max: lam_max,
        deviance: best.2,
    })
}

fn subset_design(design: &DesignMatrix, rows: &[usize]) -> DesignMatrix {
    let p = design.n_cols();
    let mut x = Array2::<f64>::zeros((rows.len(), p));
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..p {
            x[(r, j)] = design.x[(i, j)];
        }
    }
    DesignMatrix {
        names: design.names.clone(),
        x,
        weights: rows.iter().map(|&i| design.weights[i]).collect(),
        intercept: design.intercept,
    }
}

/// Default mixing grid for elastic-net tuning.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

// Used by bench: ML profile limit re-exported for endpoint serialization.
pub use glm::SEPARATION_LOGIT as _SEPARATION_LOGIT;
const _: f64 = PROFILE_LOGIT_LIMIT;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn counts_design(n00: usize, n01: usize, n10: usize, n11: usize) -> (DesignMatrix, Vec<u8>) {
        // nXY = count of (y = X, x = Y), intercept included
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (count, x, y) in [
            (n00, 0.0, 0u8),
            (n01, 1.0, 0),
            (n10, 0.0, 1),
            (n11, 1.0, 1),
        ] {
            for _ in 0..count {
                xs.push(x);
                ys.push(y);
            }
        }
        (DesignMatrix::new(vec!["x".into()], &[xs], true), ys)
    }

    fn single_param_design(n01: usize, n11: usize, n00: usize, n10: usize) -> (DesignMatrix, Vec<u8>) {
        // no intercept: one binary feature
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (count, x, y) in [
            (n01, 1.0, 0u8),
            (n11, 1.0, 1),
            (n00, 0.0, 0),
            (n10, 0.0, 1),
        ] {
            for _ in 0..count {
                xs.push(x);
                ys.push(y);
            }
        }
        (DesignMatrix::new(vec!["x".into()], &[xs], false), ys)
    }

    fn add_half_cross_ratio(n00: f64, n01: f64, n10: f64, n11: f64) -> f64 {
        (((n11 + 0.5) * (n00 + 0.5)) / ((n01 + 0.5) * (n10 + 0.5))).ln()
    }

    #[test]
    fn firth_separated_single_param_matches_closed_form() {
        // x=1 rows: 10 successes, 0 failures (quasi-separated); x=0 rows 5/5.
        let (design, y) = single_param_design(0, 10, 5, 5);
        let fit = fit_firth(&design, &y).unwrap();
        assert!(fit.converged);
        assert!((fit.coefficients[0] - 21f64.ln()).abs() < 1e-6);
        // Penalized-likelihood grid oracle: no beta on a fine grid does
        // better than the fitted maximum.
        let pll = |b: f64| {
            let ll = glm::log_likelihood(&design, &y, &[b]);
            let p = logistic(b);
            ll + 0.5 * (10.0 * p * (1.0 - p)).ln()
        };
        let fitted = pll(fit.coefficients[0]);
        let mut b = -6.0;
        while b <= 6.0 {
            assert!(pll(b) <= fitted + 1e-9, "grid point {b} beats the fit");
            b += 0.002;
        }
    }

    #[test]
    fn firth_symmetric_counts_give_zero_slope() {
        let (design, y) = counts_design(30, 20, 30, 20);
        let fit = fit_firth(&design, &y).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-9);
    }

    #[test]
    fn firth_with_intercept_matches_add_half_cross_ratio() {
        for (n00, n01, n10, n11) in [(30, 20, 30, 20), (25, 5, 10, 20), (40, 0, 5, 15), (7, 3, 2, 9)] {
            let (design, y) = counts_design(n00, n01, n10, n11);
            let fit = fit_firth(&design, &y).unwrap();
            let want = add_half_cross_ratio(n00 as f64, n01 as f64, n10 as f64, n11 as f64);
            assert!(
                (fit.coefficients[1] - want).abs() < 1e-6,
                "counts ({n00},{n01},{n10},{n11}): got {} want {want}",
                fit.coefficients[1]
            );
        }
    }

    #[test]
    fn firth_stays_finite_under_separation_and_score_vanishes() {
        let (design, y) = counts_design(20, 0, 5, 15);
        let fit = fit_firth(&design, &y).unwrap();
        assert!(fit.coefficients.iter().all(|b| b.is_finite()));
        let state = firth_state(&design, &y, &fit.coefficients).unwrap();
        let score_norm = state.score.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!(score_norm < 1e-6, "penalized score {score_norm}");
    }

    #[test]
    fn augmentation_layout() {
        let (design, y) = counts_design(2, 2, 2, 2);
        let (aug, ay) = augment_logf(&design, &y, LogFConfig { m: 1 });
        assert_eq!(aug.n_rows(), y.len() + 2);
        assert_eq!(ay.len(), y.len() + 2);
        let last = aug.n_rows() - 1;
        assert_eq!(aug.x[(last, 0)], 0.0, "intercept column must be zero on pseudo-rows");
        assert_eq!(aug.x[(last, 1)], 1.0);
        assert_eq!(aug.weights[last], 0.5);
        assert_eq!(ay[last - 1], 1);
        assert_eq!(ay[last], 0);

        // m pairs per feature: 3 features, m = 2 -> 12 rows of weight 1.
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|j| (0..8).map(|i| ((i + j) % 2) as f64).collect())
            .collect();
        let design3 = DesignMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            &cols,
            true,
        );
        let y8: Vec<u8> = (0..8).map(|i| (i % 2) as u8).collect();
        let (aug3, _) = augment_logf(&design3, &y8, LogFConfig { m: 2 });
        assert_eq!(aug3.n_rows(), 8 + 12);
        assert!(aug3.weights[8..].iter().all(|&w| w == 1.0));

        let (aug0, y0) = augment_logf(&design, &y, LogFConfig { m: 0 });
        assert_eq!(aug0.n_rows(), design.n_rows());
        assert_eq!(y0, y);
    }

    #[test]
    fn logf_m1_equals_firth_for_single_param_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n01 = rng.random_range(0..12);
            let n11 = rng.random_range(0..12);
            let n00 = rng.random_range(1..12);
            let n10 = rng.random_range(1..12);
            if n01 + n11 == 0 {
                continue;
            }
            let (design, y) = single_param_design(n01, n11, n00, n10);
            if !y.contains(&0) || !y.contains(&1) {
                continue;
            }
            let firth = fit_firth(&design, &y).unwrap();
            let logf = fit_logf(&design, &y, LogFConfig { m: 1 }).unwrap();
            assert!(
                (firth.coefficients[0] - logf.coefficients[0]).abs() < 1e-6,
                "({n01},{n11},{n00},{n10}): firth {} vs logf {}",
                firth.coefficients[0],
                logf.coefficients[0]
            );
        }
    }

    #[test]
    fn logf_shrinks_monotonically_in_m() {
        let (design, y) = counts_design(25, 5, 10, 20);
        let mut prev = f64::INFINITY;
        for m in [0u32, 1, 4, 16, 64] {
            let fit = fit_logf(&design, &y, LogFConfig { m }).unwrap();
            let mag = fit.coefficients[1].abs();
            assert!(mag <= prev + 1e-9, "m={m}: {mag} should not exceed {prev}");
            prev = mag;
        }
    }

    #[test]
    fn net_with_zero_lambda_matches_ml() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 200;
        let x1: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let x2: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() < 0.3) as u8 as f64).collect();
        let y: Vec<u8> = (0..n)
            .map(|i| (rng.random::<f64>() < logistic(-0.3 + 0.8 * x1[i] - 0.5 * x2[i])) as u8)
            .collect();
        let design = DesignMatrix::new(vec!["x1".into(), "x2".into()], &[x1, x2], true);
        let ml = glm::fit_ml(&design, &y).unwrap();
        for alpha in [0.0, 0.5, 1.0] {
            let net = fit_net(
                &design,
                &y,
                &NetConfig { lambda: 0.0, alpha_mix: alpha, ..Default::default() },
            )
            .unwrap();
            for (a, b) in net.coefficients.iter().zip(&ml.coefficients) {
                assert!((a - b).abs() < 1e-4, "net {a} vs ml {b}");
            }
        }
    }

    #[test]
    fn lasso_kill_point_zeroes_all_slopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 120;
        let x1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let x2: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() < 0.4) as u8 as f64).collect();
        let y: Vec<u8> = (0..n).map(|i| (x1[i] + rng.random::<f64>() > 0.9) as u8).collect();
        let design = DesignMatrix::new(vec!["x1".into(), "x2".into()], &[x1, x2], true);
        let lmax = lambda_max(&design, &y);
        let fit = fit_net(
            &design,
            &y,
            &NetConfig { lambda: lmax * 1.0001, alpha_mix: 0.0, ..Default::default() },
        )
        .unwrap();
        assert_eq!(fit.coefficients[1], 0.0);
        assert_eq!(fit.coefficients[2], 0.0);
        assert!(fit.coefficients[0].is_finite());
    }

    /// Gram-Schmidt orthonormalization of random columns.
    fn orthonormal_columns(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut cols: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        for j in 0..p {
            for k in 0..j {
                let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let prev = cols[k].clone();
                for (v, pv) in cols[j].iter_mut().zip(prev) {
                    *v -= dot * pv;
                }
            }
            let norm: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in cols[j].iter_mut() {
                *v /= norm;
            }
        }
        cols
    }

    #[test]
    fn linear_mode_matches_orthonormal_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let n = 50;
        let cols = orthonormal_columns(n, 5, &mut rng);
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let beta_ols: Vec<f64> = cols
            .iter()
            .map(|c| c.iter().zip(&y).map(|(a, b)| a * b).sum())
            .collect();
        let lambda = 0.07;
        let lasso = fit_net_linear(
            &cols,
            &y,
            &NetConfig { lambda, alpha_mix: 0.0, ..Default::default() },
        );
        let ridge = fit_net_linear(
            &cols,
            &y,
            &NetConfig { lambda, alpha_mix: 1.0, ..Default::default() },
        );
        for j in 0..5 {
            let soft = beta_ols[j].signum() * (beta_ols[j].abs() - lambda).max(0.0);
            assert!((lasso[j] - soft).abs() < 1e-6, "lasso {} vs {soft}", lasso[j]);
            let scaled = beta_ols[j] / (1.0 + 2.0 * lambda);
            assert!((ridge[j] - scaled).abs() < 1e-6, "ridge {} vs {scaled}", ridge[j]);
        }
    }

    #[test]
    fn kkt_holds_at_lasso_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let n = 150;
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let y: Vec<u8> = (0..n)
            .map(|i| (rng.random::<f64>() < logistic(0.9 * cols[0][i])) as u8)
            .collect();
        let design = DesignMatrix::new(
            (0..4).map(|j| format!("x{j}")).collect(),
            &cols,
            true,
        );
        let lambda = 0.4 * lambda_max(&design, &y);
        let fit = fit_net(
            &design,
            &y,
            &NetConfig { lambda, alpha_mix: 0.0, ..Default::default() },
        )
        .unwrap();
        // Score of the unpenalized objective on the standardized scale.
        let ws = NetWorkspace::new(&design, &y);
        for j in 1..design.n_cols() {
            if fit.coefficients[j] != 0.0 {
                continue;
            }
            let mut score = 0.0;
            for i in 0..n {
                let eta: f64 = (0..design.n_cols())
                    .map(|k| design.x[(i, k)] * fit.coefficients[k])
                    .sum();
                score += ws.x[(i, j)] * (y[i] as f64 - logistic(eta));
            }
            assert!(
                score.abs() <= lambda + 1e-5,
                "KKT violated at zeroed column {j}: |{score}| > {lambda}"
            );
        }
    }

    #[test]
    fn path_is_monotone_in_l1_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let n = 200;
        let cols: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let y: Vec<u8> = (0..n)
            .map(|i| (rng.random::<f64>() < logistic(1.2 * cols[0][i] - 0.7 * cols[1][i])) as u8)
            .collect();
        let design = DesignMatrix::new(
            (0..5).map(|j| format!("x{j}")).collect(),
            &cols,
            true,
        );
        let lmax = lambda_max(&design, &y);
        for alpha in [0.0, 0.5] {
            let mut prev = 0.0f64;
            for k in 0..8 {
                let lambda = lmax * 10f64.powf(-3.0 * k as f64 / 7.0);
                let fit = fit_net(
                    &design,
                    &y,
                    &NetConfig { lambda, alpha_mix: alpha, ..Default::default() },
                )
                .unwrap();
                let l1: f64 = fit.coefficients[1..].iter().map(|b| b.abs()).sum();
                assert!(
                    l1 >= prev - 1e-6,
                    "alpha {alpha}: l1 norm should grow as lambda falls ({l1} < {prev})"
                );
                prev = l1;
            }
        }
    }

    #[test]
    fn cv_on_pure_noise_picks_heavy_penalty() {
        let mut hits = 0;
        let seeds = 10;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let n = 150;
            let cols: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                .collect();
            let y: Vec<u8> = (0..n).map(|_| (rng.random::<f64>() < 0.5) as u8).collect();
            let design = DesignMatrix::new(
                (0..6).map(|j| format!("x{j}")).collect(),
                &cols,
                true,
            );
            let choice = cv_tune(
                &design,
                &y,
                &[0.0],
                &NetConfig { lambda_path_len: 40, ..Default::default() },
                seed,
            )
            .unwrap();
            if choice.config.lambda >= 0.5 * choice.lambda_max {
                hits += 1;
            }
        }
        assert!(hits * 10 >= seeds * 8, "heavy penalty chosen in only {hits}/{seeds} runs");
    }

    #[test]
    fn cv_recovers_a_dominant_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let n = 1000;
        let signal: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() < 0.5) as u8 as f64).collect();
        let noise: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() < 0.5) as u8 as f64).collect();
        let beta = 10f64.ln();
        let y: Vec<u8> = (0..n)
            .map(|i| (rng.random::<f64>() < logistic(-1.0 + beta * signal[i])) as u8)
            .collect();
        let design = DesignMatrix::new(vec!["sig".into(), "noise".into()], &[signal, noise], true);
        let choice = cv_tune(
            &design,
            &y,
            &[0.0],
            &NetConfig { lambda_path_len: 50, ..Default::default() },
            3,
        )
        .unwrap();
        let fit = fit_net(&design, &y, &choice.config).unwrap();
        assert!(fit.coefficients[1] > 0.0, "dominant feature should survive the penalty");
    }

    #[test]
    fn cv_rejects_undersized_inputs() {
        let (design, y) = counts_design(2, 2, 2, 2);
        assert!(cv_tune(&design, &y, &[0.0], &NetConfig { cv_folds: 10, ..Default::default() }, 0)
            .is_err());
    }
}
