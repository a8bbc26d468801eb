//! Maximum-likelihood logistic regression.
//!
//! The fitter is iteratively reweighted least squares with step-halving on
//! deviance increases. Confidence intervals come in two flavors: Wald
//! (cheap, used inside bootstrap loops) and profile likelihood (the default,
//! found by monotone bisection on the profiled log-likelihood). Separation
//! is detected, flagged and reported with unbounded interval endpoints
//! rather than clamped.

use crate::dataset::Dataset;
use crate::dist;
use crate::error::{Error, Result};
use crate::linalg;
use ndarray::{Array1, Array2};
use rayon::prelude::*;

/// Absolute logit beyond which a coefficient is treated as separated:
/// exp(20) is far outside any plausible odds ratio.
pub const SEPARATION_LOGIT: f64 = 20.0;
/// Profile endpoints are declared unbounded once the bracket reaches this
/// logit magnitude.
pub const PROFILE_LOGIT_LIMIT: f64 = 30.0;

const MAX_ITER: usize = 100;
const DEVIANCE_TOL: f64 = 1e-8;
const PROB_CLAMP: f64 = 1e-12;

/// Row-major design matrix with per-row weights. When `intercept` is set the
/// leading column is an all-ones intercept (zeroed on pseudo-rows by the
/// log-F augmentation).
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: Array2<f64>,
    pub weights: Vec<f64>,
    pub intercept: bool,
}

impl DesignMatrix {
    /// Builds a design from feature columns, prepending an intercept column
    /// when requested.
    pub fn new(names: Vec<String>, columns: &[Vec<f64>], intercept: bool) -> Self {
        let n = columns.first().map_or(0, |c| c.len());
        let p = columns.len() + intercept as usize;
        let mut x = Array2::<f64>::zeros((n, p));
        let mut all_names = Vec::with_capacity(p);
        if intercept {
            all_names.push("(intercept)".to_string());
            for i in 0..n {
                x[(i, 0)] = 1.0;
            }
        }
        for (j, col) in columns.iter().enumerate() {
            debug_assert_eq!(col.len(), n);
            let jj = j + intercept as usize;
            for i in 0..n {
                x[(i, jj)] = col[i];
            }
        }
        all_names.extend(names);
        DesignMatrix { names: all_names, x, weights: vec![1.0; n], intercept }
    }

    pub fn from_dataset(ds: &Dataset, intercept: bool) -> Self {
        let columns: Vec<Vec<f64>> = ds.features.iter().map(|f| f.values.clone()).collect();
        Self::new(ds.feature_names(), &columns, intercept)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), self.n_rows());
        self.weights = weights;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.x.as_slice().expect("row-major design")[i * p..(i + 1) * p]
    }

    /// Indices of non-intercept columns.
    pub fn slope_columns(&self) -> std::ops::Range<usize> {
        (self.intercept as usize)..self.n_cols()
    }

    /// Rejects negative weights, constant non-intercept columns and exact
    /// collinearity, naming the offending columns.
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Domain("row weights must be nonnegative".into()));
        }
        let mut constant = Vec::new();
        for j in self.slope_columns() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..self.n_rows() {
                if self.weights[i] > 0.0 {
                    let v = self.x[(i, j)];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if self.n_rows() > 0 && lo == hi {
                constant.push(self.names[j].clone());
            }
        }
        if !constant.is_empty() {
            return Err(Error::RankDeficient { columns: constant });
        }
        // Gram Cholesky with a relative pivot tolerance names the first
        // column that is linearly dependent on earlier ones.
        let p = self.n_cols();
        if p == 0 || self.n_rows() == 0 {
            return Ok(());
        }
        let mut gram = Array2::<f64>::zeros((p, p));
        for i in 0..self.n_rows() {
            let w = self.weights[i];
            if w == 0.0 {
                continue;
            }
            let row = self.row(i);
            for a in 0..p {
                for b in a..p {
                    gram[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let mut l = Array2::<f64>::zeros((p, p));
        for j in 0..p {
            let mut d = gram[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 1e-10 * gram[(j, j)].max(1e-300) {
                return Err(Error::RankDeficient { columns: vec![self.names[j].clone()] });
            }
            l[(j, j)] = d.sqrt();
            for i in (j + 1)..p {
                let mut s = gram[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / l[(j, j)];
            }
        }
        Ok(())
    }
}

/// Confidence-interval flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Wald,
    Profile,
}

/// A fitted logistic model. Odds ratios are exp of the coefficients;
/// interval endpoints are on the odds-ratio scale with 0 / +inf for
/// unbounded sides.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub odds_ratios: Vec<f64>,
    pub covariance: Option<Array2<f64>>,
    /// Per-coefficient (lower, upper) on the OR scale, when computed.
    pub ci: Option<Vec<(f64, f64)>>,
    pub converged: bool,
    pub separation_detected: bool,
    /// Per-coefficient separation flags (|beta| beyond the logit ceiling).
    pub separated: Vec<bool>,
    /// Unpenalized log-likelihood of the real (weight-carrying) data at the
    /// estimate.
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl FitResult {
    pub fn slope_range(&self, intercept: bool) -> std::ops::Range<usize> {
        (intercept as usize)..self.coefficients.len()
    }
}

pub(crate) fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Weighted Bernoulli log-likelihood at `beta`, probabilities clamped away
/// from 0 and 1 for evaluation only.
pub fn log_likelihood(design: &DesignMatrix, outcome: &[u8], beta: &[f64]) -> f64 {
    log_likelihood_offset(design, outcome, beta, None)
}

pub(crate) fn log_likelihood_offset(
    design: &DesignMatrix,
    outcome: &[u8],
    beta: &[f64],
    offset: Option<&[f64]>,
) -> f64 {
    debug_assert_eq!(beta.len(), design.n_cols());
    let mut ll = 0.0;
    for i in 0..design.n_rows() {
        let w = design.weights[i];
        if w == 0.0 {
            continue;
        }
        let row = design.row(i);
        let mut eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        if let Some(off) = offset {
            eta += off[i];
        }
        let p = logistic(eta).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        ll += w * if outcome[i] == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    ll
}

/// Intercept-only maximized log-likelihood (closed form): every row gets the
/// weighted outcome mean.
pub fn null_log_likelihood(outcome: &[u8], weights: &[f64]) -> f64 {
    let wsum: f64 = weights.iter().sum();
    let wy: f64 = outcome
        .iter()
        .zip(weights)
        .map(|(&y, &w)| w * y as f64)
        .sum();
    let p = (wy / wsum).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    outcome
        .iter()
        .zip(weights)
        .map(|(&y, &w)| w * if y == 1 { p.ln() } else { (1.0 - p).ln() })
        .sum()
}

pub(crate) struct IrlsFit {
    pub beta: Vec<f64>,
    pub converged: bool,
    pub singular: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub xtwx: Array2<f64>,
}

/// IRLS with an optional linear offset and warm start. `keep` masks the
/// coefficients being optimized; masked-out entries stay at their start
/// value (used by the profile-likelihood fits, which fix one coordinate).
pub(crate) fn irls(
    design: &DesignMatrix,
    outcome: &[u8],
    offset: Option<&[f64]>,
    start: Option<&[f64]>,
) -> IrlsFit {
    let n = design.n_rows();
    let p = design.n_cols();
    let mut beta = start.map_or_else(|| vec![0.0; p], |s| s.to_vec());
    let mut ll = log_likelihood_offset(design, outcome, &beta, offset);
    let mut singular = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut xtwx = Array2::<f64>::zeros((p, p));
    let mut xtwz = Array1::<f64>::zeros(p);
    for iter in 0..MAX_ITER {
        iterations = iter + 1;
        xtwx.fill(0.0);
        xtwz.fill(0.0);
        for i in 0..n {
            let w = design.weights[i];
            if w == 0.0 {
                continue;
            }
            let row = design.row(i);
            let mut eta: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            if let Some(off) = offset {
                eta += off[i];
            }
            let pr = logistic(eta);
            let var = (pr * (1.0 - pr)).max(1e-10);
            let wi = w * var;
            // Working response for the linear part only (offset removed).
            let z = (eta - offset.map_or(0.0, |o| o[i])) + (outcome[i] as f64 - pr) / var;
            for a in 0..p {
                let xa = row[a];
                xtwz[a] += wi * xa * z;
                for b in a..p {
                    xtwx[(a, b)] += wi * xa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[(a, b)] = xtwx[(b, a)];
            }
        }
        let proposal = match linalg::solve_spd(&xtwx, &xtwz) {
            Some(sol) => sol,
            None => {
                singular = true;
                break;
            }
        };
        // Step-halving on deviance increase.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..24 {
            let cand: Vec<f64> = beta
                .iter()
                .zip(proposal.iter())
                .map(|(b, t)| b + step * (t - b))
                .collect();
            let cand_ll = log_likelihood_offset(design, outcome, &cand, offset);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 {
                let rel = (cand_ll - ll).abs() / (cand_ll.abs() + 0.1);
                beta = cand;
                ll = cand_ll;
                accepted = true;
                if rel < DEVIANCE_TOL {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            if !accepted {
                converged = true; // no uphill step exists: at the optimum
            }
            break;
        }
    }
    IrlsFit { beta, converged, singular, iterations, log_likelihood: ll, xtwx }
}

fn check_outcome(design: &DesignMatrix, outcome: &[u8]) -> Result<()> {
    let mut seen = [false, false];
    for (i, &y) in outcome.iter().enumerate() {
        if design.weights[i] > 0.0 {
            seen[(y == 1) as usize] = true;
        }
    }
    if !(seen[0] && seen[1]) {
        return Err(Error::SingleClassOutcome);
    }
    Ok(())
}

/// Fits the logistic MLE. Separation is flagged (never clamped); a
/// rank-deficient design or single-class outcome is an error.
pub fn fit_ml(design: &DesignMatrix, outcome: &[u8]) -> Result<FitResult> {
    assert_eq!(design.n_rows(), outcome.len());
    if design.n_rows() == 0 {
        return Err(Error::Domain("cannot fit an empty dataset".into()));
    }
    design.validate()?;
    check_outcome(design, outcome)?;
    let fit = irls(design, outcome, None, None);
    let mut separated: Vec<bool> = fit.beta.iter().map(|b| b.abs() > SEPARATION_LOGIT).collect();
    // Quasi-separation can stall the deviance with the iterate still inside
    // the logit ceiling while the true MLE sits at infinity. Probe suspect
    // coefficients: if the profiled likelihood has not dropped by the time
    // the coefficient passes the ceiling, the estimate is unbounded.
    for (j, flag) in separated.iter_mut().enumerate() {
        let b = fit.beta[j];
        if !*flag && b.abs() > 8.0 {
            let probe = b.signum() * (SEPARATION_LOGIT + 5.0);
            let mut warm = fit.beta.clone();
            warm.remove(j);
            let (ll, _) = profile_log_likelihood(design, outcome, j, probe, Some(&warm));
            if ll >= fit.log_likelihood - 1e-6 {
                *flag = true;
            }
        }
    }
    let separation_detected = fit.singular || separated.iter().any(|&s| s);
    let covariance = linalg::cholesky(&fit.xtwx).map(|l| linalg::chol_inverse(&l));
    Ok(FitResult {
        names: design.names.clone(),
        coefficients: fit.beta.clone(),
        odds_ratios: fit.beta.iter().map(|b| b.exp()).collect(),
        covariance,
        ci: None,
        converged: fit.converged,
        separation_detected,
        separated,
        log_likelihood: fit.log_likelihood,
        iterations: fit.iterations,
    })
}

/// Wald intervals on the OR scale from the stored covariance.
pub fn wald_intervals(fit: &FitResult, alpha: f64) -> Vec<(f64, f64)> {
    let z = dist::z_critical(alpha);
    match &fit.covariance {
        Some(cov) => fit
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, &b)| {
                let se = cov[(j, j)].max(0.0).sqrt();
                ((b - z * se).exp(), (b + z * se).exp())
            })
            .collect(),
        None => fit.coefficients.iter().map(|_| (0.0, f64::INFINITY)).collect(),
    }
}

/// Maximized log-likelihood with coefficient `j` pinned to `value`:
/// the remaining coefficients are refit against an offset.
pub(crate) fn profile_log_likelihood(
    design: &DesignMatrix,
    outcome: &[u8],
    j: usize,
    value: f64,
    warm: Option<&[f64]>,
) -> (f64, Vec<f64>) {
    let n = design.n_rows();
    let p = design.n_cols();
    let mut names = design.names.clone();
    names.remove(j);
    let mut x = Array2::<f64>::zeros((n, p - 1));
    let mut offset = vec![0.0; n];
    for i in 0..n {
        let row = design.row(i);
        offset[i] = value * row[j];
        let mut c = 0;
        for (a, &v) in row.iter().enumerate() {
            if a != j {
                x[(i, c)] = v;
                c += 1;
            }
        }
    }
    let reduced = DesignMatrix {
        names,
        x,
        weights: design.weights.clone(),
        intercept: design.intercept && j != 0,
    };
    let fit = irls(&reduced, outcome, Some(&offset), warm);
    (fit.log_likelihood, fit.beta)
}

/// Generic monotone bisection used by every profile-style interval: walks
/// outward from `center` in direction `dir` until the profiled objective
/// drops below `target`, then bisects. Returns the endpoint on the logit
/// scale, or +-inf when the bracket hits the logit ceiling first.
pub(crate) fn profile_endpoint(
    mut eval: impl FnMut(f64) -> f64,
    center: f64,
    step0: f64,
    dir: f64,
    target: f64,
) -> f64 {
    let mut inside = center.clamp(-PROFILE_LOGIT_LIMIT, PROFILE_LOGIT_LIMIT);
    let mut step = step0.clamp(0.05, 2.0);
    let mut outside = None;
    for _ in 0..60 {
        let mut cand = inside + dir * step;
        let at_limit = cand.abs() >= PROFILE_LOGIT_LIMIT;
        if at_limit {
            cand = dir * PROFILE_LOGIT_LIMIT;
        }
        if eval(cand) < target {
            outside = Some(cand);
            break;
        }
        if at_limit {
            // Still inside the interval at the ceiling: unbounded side.
            return dir * f64::INFINITY;
        }
        inside = cand;
        step *= 2.0;
    }
    let Some(mut outside) = outside else {
        return dir * f64::INFINITY;
    };
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if (outside - inside).abs() < 1e-7 {
            break;
        }
        if eval(mid) < target {
            outside = mid;
        } else {
            inside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Confidence intervals on the OR scale for every coefficient.
///
/// Wald uses the asymptotic covariance. Profile finds, per coefficient, the
/// points where the profiled log-likelihood drops by half the chi-square(1)
/// critical value; unbounded sides come back as 0 or +inf.
pub fn confidence_intervals(
    fit: &FitResult,
    design: &DesignMatrix,
    outcome: &[u8],
    method: CiMethod,
    alpha: f64,
) -> Vec<(f64, f64)> {
    match method {
        CiMethod::Wald => wald_intervals(fit, alpha),
        CiMethod::Profile => {
            let drop = dist::chi2_1_quantile(1.0 - alpha) / 2.0;
            let ll_max = fit.log_likelihood;
            let target = ll_max - drop;
            let p = fit.coefficients.len();
            (0..p)
                .into_par_iter()
                .map(|j| {
                    let se = fit
                        .covariance
                        .as_ref()
                        .map(|c| c[(j, j)].max(0.0).sqrt())
                        .unwrap_or(0.5);
                    let center = fit.coefficients[j].clamp(-PROFILE_LOGIT_LIMIT, PROFILE_LOGIT_LIMIT);
                    let mut warm: Option<Vec<f64>> = None;
                    let mut eval = |v: f64| {
                        let (ll, beta) =
                            profile_log_likelihood(design, outcome, j, v, warm.as_deref());
                        warm = Some(beta);
                        ll
                    };
                    let lo = profile_endpoint(&mut eval, center, se, -1.0, target);
                    let mut warm2: Option<Vec<f64>> = None;
                    let mut eval2 = |v: f64| {
                        let (ll, beta) =
                            profile_log_likelihood(design, outcome, j, v, warm2.as_deref());
                        warm2 = Some(beta);
                        ll
                    };
                    let hi = profile_endpoint(&mut eval2, center, se, 1.0, target);
                    (lo.exp(), hi.exp())
                })
                .collect()
        }
    }
}

/// Fitted probabilities of a coefficient vector on a design.
pub fn predict_probs(design: &DesignMatrix, beta: &[f64]) -> Vec<f64> {
    (0..design.n_rows())
        .map(|i| {
            let eta: f64 = design.row(i).iter().zip(beta).map(|(x, b)| x * b).sum();
            logistic(eta)
        })
        .collect()
}

/// Profile likelihood-ratio p-value for coefficient `j` being zero. For
/// profile intervals this agrees with "the interval excludes OR = 1".
pub fn profile_lrt_p_value(fit: &FitResult, design: &DesignMatrix, outcome: &[u8], j: usize) -> f64 {
    let (ll0, _) = profile_log_likelihood(design, outcome, j, 0.0, None);
    let stat = (2.0 * (fit.log_likelihood - ll0)).max(0.0);
    dist::chi2_1_sf(stat)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Expands 2x2 counts (x=0: y0/y1, x=1: y0/y1) into a dataset.
    pub(crate) fn design_from_counts(a: usize, c: usize, b: usize, d: usize) -> (DesignMatrix, Vec<u8>) {
        // a = (x=0, y=0), c = (x=0, y=1), b = (x=1, y=0), d = (x=1, y=1)
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (count, x, y) in [(a, 0.0, 0u8), (c, 0.0, 1), (b, 1.0, 0), (d, 1.0, 1)] {
            for _ in 0..count {
                xs.push(x);
                ys.push(y);
            }
        }
        (DesignMatrix::new(vec!["x".into()], &[xs], true), ys)
    }

    #[test]
    fn symmetric_counts_give_zero_slope() {
        let (design, y) = design_from_counts(30, 30, 20, 20);
        let fit = fit_ml(&design, &y).unwrap();
        assert!(fit.converged);
        assert!(fit.coefficients[1].abs() < 1e-8);
        assert!((fit.odds_ratios[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn slope_matches_cross_ratio_and_grid_oracle() {
        let (design, y) = design_from_counts(36, 24, 14, 26);
        let fit = fit_ml(&design, &y).unwrap();
        let or_hat: f64 = (36.0 * 26.0) / (24.0 * 14.0);
        assert!((fit.coefficients[1] - or_hat.ln()).abs() < 1e-6);
        // Grid oracle: no (b0, b1) pair on a fine grid beats the fitted
        // likelihood.
        let mut best = f64::NEG_INFINITY;
        let mut b = [-3.0f64, -3.0];
        while b[0] <= 3.0 {
            b[1] = -3.0;
            while b[1] <= 3.0 {
                best = best.max(log_likelihood(&design, &y, &b));
                b[1] += 0.025;
            }
            b[0] += 0.025;
        }
        assert!(fit.log_likelihood >= best - 1e-9);
    }

    #[test]
    fn quasi_separation_is_flagged_with_unbounded_interval() {
        // x=1 implies y=1.
        let (design, y) = design_from_counts(25, 15, 0, 10);
        let fit = fit_ml(&design, &y).unwrap();
        assert!(fit.separation_detected);
        let ci = confidence_intervals(&fit, &design, &y, CiMethod::Profile, 0.05);
        assert!(ci[1].1.is_infinite(), "upper endpoint should be +inf, got {:?}", ci[1]);
        assert!(ci[1].0.is_finite() && ci[1].0 > 0.0);
    }

    #[test]
    fn single_class_outcome_is_an_error() {
        let (design, _) = design_from_counts(3, 0, 3, 0);
        let y = vec![0u8; 6];
        assert!(matches!(fit_ml(&design, &y), Err(Error::SingleClassOutcome)));
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let xs = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let doubled: Vec<f64> = xs.iter().map(|v| 2.0 * v).collect();
        let y = vec![0, 1, 0, 1, 0, 1];
        let design =
            DesignMatrix::new(vec!["x".into(), "x2".into()], &[xs.clone(), doubled], true);
        match fit_ml(&design, &y) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["x2".to_string()]),
            other => panic!("expected rank error, got {other:?}"),
        }
        let constant = vec![3.5; 6];
        let design = DesignMatrix::new(vec!["x".into(), "k".into()], &[xs, constant], true);
        match fit_ml(&design, &y) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["k".to_string()]),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn log_likelihood_reference_values() {
        let n = 12;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let design = DesignMatrix::new(vec!["x".into()], &[xs], true);
        let ll = log_likelihood(&design, &y, &[0.0, 0.0]);
        assert!((ll - n as f64 * 0.5f64.ln()).abs() < 1e-12);
        assert!(log_likelihood(&design, &y, &[0.3, -1.2]) <= 0.0);
    }

    #[test]
    fn log_likelihood_gradient_matches_finite_differences() {
        let xs = vec![0.2, -1.0, 0.5, 1.5, -0.3, 0.9, -1.2, 0.1];
        let y = vec![0, 1, 1, 0, 1, 1, 0, 0];
        let design = DesignMatrix::new(vec!["x".into()], &[xs.clone()], true);
        let beta = [0.4, -0.7];
        let dir = [0.6, -0.8];
        let eps = 1e-6;
        let plus: Vec<f64> = beta.iter().zip(&dir).map(|(b, d)| b + eps * d).collect();
        let minus: Vec<f64> = beta.iter().zip(&dir).map(|(b, d)| b - eps * d).collect();
        let fd = (log_likelihood(&design, &y, &plus) - log_likelihood(&design, &y, &minus))
            / (2.0 * eps);
        // Analytic directional derivative: sum_i (y - p) x . dir
        let mut grad = [0.0f64; 2];
        for i in 0..xs.len() {
            let eta = beta[0] + beta[1] * xs[i];
            let p = logistic(eta);
            grad[0] += y[i] as f64 - p;
            grad[1] += (y[i] as f64 - p) * xs[i];
        }
        let analytic = grad[0] * dir[0] + grad[1] * dir[1];
        assert!((fd - analytic).abs() < 1e-5, "fd {fd} vs analytic {analytic}");
    }

    #[test]
    fn score_vanishes_at_optimum() {
        let (design, y) = design_from_counts(33, 21, 17, 29);
        let fit = fit_ml(&design, &y).unwrap();
        let mut grad = vec![0.0; 2];
        for i in 0..design.n_rows() {
            let row = design.row(i);
            let eta: f64 = row.iter().zip(&fit.coefficients).map(|(x, b)| x * b).sum();
            let p = logistic(eta);
            for (g, x) in grad.iter_mut().zip(row) {
                *g += (y[i] as f64 - p) * x;
            }
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-6 * design.n_rows() as f64);
    }

    #[test]
    fn wald_closed_form() {
        let fit = FitResult {
            names: vec!["x".into()],
            coefficients: vec![0.0],
            odds_ratios: vec![1.0],
            covariance: Some(ndarray::array![[0.25]]),
            ci: None,
            converged: true,
            separation_detected: false,
            separated: vec![false],
            log_likelihood: -1.0,
            iterations: 1,
        };
        let ci = wald_intervals(&fit, 0.05);
        assert!((ci[0].0 - 0.375).abs() < 1e-3);
        assert!((ci[0].1 - 2.664).abs() < 1e-3);
    }

    #[test]
    fn relabeling_flips_the_slope() {
        let (design, y) = design_from_counts(36, 24, 14, 26);
        let fit = fit_ml(&design, &y).unwrap();
        let flipped: Vec<f64> = design
            .x
            .column(1)
            .iter()
            .map(|v| 1.0 - v)
            .collect();
        let design2 = DesignMatrix::new(vec!["x".into()], &[flipped], true);
        let fit2 = fit_ml(&design2, &y).unwrap();
        assert!((fit.coefficients[1] + fit2.coefficients[1]).abs() < 1e-8);
        assert!((fit.odds_ratios[1] * fit2.odds_ratios[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn narrower_alpha_nests_the_interval() {
        let (design, y) = design_from_counts(36, 24, 14, 26);
        let fit = fit_ml(&design, &y).unwrap();
        for method in [CiMethod::Wald, CiMethod::Profile] {
            let ci05 = confidence_intervals(&fit, &design, &y, method, 0.05);
            let ci01 = confidence_intervals(&fit, &design, &y, method, 0.01);
            for (a, b) in ci05.iter().zip(&ci01) {
                assert!(b.0 <= a.0 + 1e-9 && a.1 <= b.1 + 1e-9);
            }
        }
    }

    #[test]
    fn profile_contains_estimate_and_roughly_matches_wald_when_well_conditioned() {
        // Larger-sample 2x2 where the quadratic approximation is good.
        let (design, y) = design_from_counts(360, 240, 140, 260);
        let fit = fit_ml(&design, &y).unwrap();
        let wald = confidence_intervals(&fit, &design, &y, CiMethod::Wald, 0.05);
        let prof = confidence_intervals(&fit, &design, &y, CiMethod::Profile, 0.05);
        for j in 0..2 {
            assert!(prof[j].0 <= fit.odds_ratios[j] && fit.odds_ratios[j] <= prof[j].1);
            let ww = (wald[j].1 / wald[j].0).ln();
            let pw = (prof[j].1 / prof[j].0).ln();
            assert!(
                ((ww - pw) / pw).abs() < 0.10,
                "profile and Wald widths should agree within 10%: {ww} vs {pw}"
            );
        }
    }
}
