//! Shared statistical utilities: AUC, McFadden pseudo-R2, Holm-Bonferroni
//! adjustment, percentile bootstrap and binned residuals.

use crate::error::{Error, Result};
use serde::Serialize;

/// Area under the ROC curve by rank sum, ties scoring one half. Equals the
/// probability that a random positive outscores a random negative.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("NaN score"));
    // Average ranks over tied groups, then the Mann-Whitney identity.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = ((i + 1 + j + 1) as f64) / 2.0;
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// McFadden pseudo-R2: `1 - ll_model / ll_null`.
pub fn mcfadden_r2(ll_model: f64, ll_null: f64) -> Result<f64> {
    if !(ll_null < 0.0) {
        return Err(Error::Domain(format!(
            "null log-likelihood must be negative, got {ll_null}"
        )));
    }
    if ll_model > 0.0 {
        return Err(Error::Domain(format!(
            "model log-likelihood must be nonpositive, got {ll_model}"
        )));
    }
    Ok(1.0 - ll_model / ll_null)
}

/// Holm-Bonferroni step-down adjustment. Returns adjusted p-values in the
/// input order and the stepwise rejection flags at level `alpha`.
pub fn holm_bonferroni(p: &[f64], alpha: f64) -> (Vec<f64>, Vec<bool>) {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).expect("NaN p-value"));
    let mut adjusted = vec![0.0; m];
    let mut reject = vec![false; m];
    let mut running = 0.0f64;
    let mut still_rejecting = true;
    for (i, &idx) in order.iter().enumerate() {
        running = running.max(((m - i) as f64) * p[idx]).min(1.0);
        adjusted[idx] = running;
        if still_rejecting && running < alpha {
            reject[idx] = true;
        } else {
            still_rejecting = false;
        }
    }
    (adjusted, reject)
}

/// Sorted bootstrap estimates with their percentile interval.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapSummary {
    pub estimates: Vec<f64>,
    pub median: f64,
    pub ci: (f64, f64),
}

/// Linear-interpolation percentile (the type-7 convention): at probability
/// q the value is `x[h] + frac * (x[h+1] - x[h])` with `h = (n-1) q`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = (n as f64 - 1.0) * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Percentile bootstrap interval at level `1 - alpha`.
pub fn percentile_bootstrap(estimates: &[f64], alpha: f64) -> Result<BootstrapSummary> {
    if estimates.len() < 2 {
        return Err(Error::Domain(format!(
            "percentile bootstrap needs at least 2 estimates, got {}",
            estimates.len()
        )));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN estimate"));
    let lower = percentile(&sorted, alpha / 2.0);
    let upper = percentile(&sorted, 1.0 - alpha / 2.0);
    let median = percentile(&sorted, 0.5);
    Ok(BootstrapSummary { estimates: sorted, median, ci: (lower, upper) })
}

/// One bin of a binned-residual diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualBin {
    pub mean_fitted: f64,
    pub mean_residual: f64,
    /// Two standard errors of the bin-mean residual.
    pub band: f64,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BinnedResiduals {
    pub bins: Vec<ResidualBin>,
    /// Fraction of bins whose mean residual falls outside the +-band.
    pub fraction_outside: f64,
}

/// Equal-count binned residuals: rows sorted by fitted probability, split
/// into `n_bins` bins, each summarized by its mean fitted value, mean
/// residual and a 2 * sd / sqrt(size) band.
pub fn binned_residuals(
    fitted: &[f64],
    outcomes: &[u8],
    n_bins: usize,
) -> Result<BinnedResiduals> {
    assert_eq!(fitted.len(), outcomes.len());
    let n = fitted.len();
    if n_bins < 1 {
        return Err(Error::Domain("n_bins must be at least 1".into()));
    }
    if n < n_bins {
        return Err(Error::Domain(format!(
            "need at least {n_bins} rows for {n_bins} bins, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| fitted[a].partial_cmp(&fitted[b]).expect("NaN fitted"));
    let mut bins = Vec::with_capacity(n_bins);
    let mut outside = 0usize;
    for b in 0..n_bins {
        let start = b * n / n_bins;
        let end = (b + 1) * n / n_bins;
        let rows = &order[start..end];
        let m = rows.len() as f64;
        let mean_fitted = rows.iter().map(|&i| fitted[i]).sum::<f64>() / m;
        let residuals: Vec<f64> = rows.iter().map(|&i| outcomes[i] as f64 - fitted[i]).collect();
        let mean_residual = residuals.iter().sum::<f64>() / m;
        let sd = if rows.len() > 1 {
            (residuals.iter().map(|r| (r - mean_residual).powi(2)).sum::<f64>() / (m - 1.0))
                .sqrt()
        } else {
            0.0
        };
        let band = 2.0 * sd / m.sqrt();
        if mean_residual.abs() > band {
            outside += 1;
        }
        bins.push(ResidualBin { mean_fitted, mean_residual, band, size: rows.len() });
    }
    Ok(BinnedResiduals {
        bins,
        fraction_outside: outside as f64 / n_bins as f64,
    })
}

/// Default bin count: ceil(sqrt(n)).
pub fn default_bins(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force pair-counting oracle for AUC.
    fn auc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if labels[i] != 1 {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] != 0 {
                    continue;
                }
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8, 0.3, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5, 0.5, 0.5, 0.5], &[1, 0, 1, 0]).unwrap(), 0.5);
        // Frozen from the pair-counting oracle: only (.8 > .3) wins of 4 pairs.
        let scores = [0.9, 0.8, 0.3, 0.1];
        let labels = [0, 1, 0, 1];
        assert_eq!(auc_pairs(&scores, &labels), 0.25);
        assert_eq!(auc(&scores, &labels).unwrap(), 0.25);
        assert!(matches!(
            auc(&[0.1, 0.2], &[1, 1]),
            Err(Error::UndefinedAuc)
        ));
    }

    #[test]
    fn auc_matches_pair_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let n = rng.random_range(2..30);
            let mut scores: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(0..8) as f64) / 4.0)
                .collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            labels[0] = 0;
            labels[n - 1] = 1;
            scores[0] = 0.5;
            let fast = auc(&scores, &labels).unwrap();
            let slow = auc_pairs(&scores, &labels);
            assert!((fast - slow).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scores: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<u8> = (0..50).map(|i| (i % 3 == 0) as u8).collect();
        let base = auc(&scores, &labels).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s + 1.0).exp()).collect();
        assert!((auc(&transformed, &labels).unwrap() - base).abs() < 1e-12);
        let flipped: Vec<u8> = labels.iter().map(|&y| 1 - y).collect();
        assert!((auc(&scores, &flipped).unwrap() + base - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mcfadden_arithmetic() {
        assert_eq!(mcfadden_r2(-100.0, -100.0).unwrap(), 0.0);
        assert!((mcfadden_r2(-1e-12, -100.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((mcfadden_r2(-80.0, -100.0).unwrap() - 0.2).abs() < 1e-12);
        assert!(mcfadden_r2(1.0, -100.0).is_err());
        assert!(mcfadden_r2(-1.0, 0.0).is_err());
    }

    /// Step-down oracle re-derived from the definition: reject the smallest
    /// p while p_(i) < alpha / (m - i), adjusted value is the running max of
    /// (m - i) p_(i).
    fn holm_oracle(p: &[f64], alpha: f64) -> (Vec<f64>, Vec<bool>) {
        let m = p.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap());
        let mut adjusted = vec![0.0; m];
        let mut reject = vec![false; m];
        let mut prev = 0.0f64;
        let mut blocked = false;
        for (i, &idx) in order.iter().enumerate() {
            let raw = ((m - i) as f64 * p[idx]).min(1.0);
            prev = prev.max(raw);
            adjusted[idx] = prev;
            if !blocked && p[idx] < alpha / ((m - i) as f64) {
                reject[idx] = true;
            } else {
                blocked = true;
            }
        }
        (adjusted, reject)
    }

    #[test]
    fn holm_example() {
        // Frozen by hand from the step-down definition: sorted
        // (.01, .03, .04) -> (3*.01, max(.03, 2*.03), max(.06, 1*.04)).
        let (adj, rej) = holm_bonferroni(&[0.01, 0.04, 0.03], 0.05);
        assert!((adj[0] - 0.03).abs() < 1e-12);
        assert!((adj[1] - 0.06).abs() < 1e-12);
        assert!((adj[2] - 0.06).abs() < 1e-12);
        assert_eq!(rej, vec![true, false, false]);

        let (adj, _) = holm_bonferroni(&[0.2], 0.05);
        assert_eq!(adj, vec![0.2]);

        let (adj, rej) = holm_bonferroni(&[1.0, 1.0, 1.0], 0.05);
        assert_eq!(adj, vec![1.0, 1.0, 1.0]);
        assert_eq!(rej, vec![false, false, false]);
    }

    #[test]
    fn holm_matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let m = rng.random_range(1..12);
            let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let (adj, rej) = holm_bonferroni(&p, 0.05);
            let (adj2, rej2) = holm_oracle(&p, 0.05);
            for (a, b) in adj.iter().zip(&adj2) {
                assert!((a - b).abs() < 1e-12);
            }
            assert_eq!(rej, rej2);
            // Dominance: raw <= holm <= plain Bonferroni.
            for (i, &pi) in p.iter().enumerate() {
                assert!(adj[i] >= pi - 1e-12);
                assert!(adj[i] <= (m as f64 * pi).min(1.0) + 1e-12);
            }
        }
    }

    #[test]
    fn percentile_examples() {
        // Frozen from the interpolation formula: h = 99 * .025 = 2.475 so the
        // lower endpoint is 3 + .475, and h = 99 * .975 = 96.525 gives
        // 97 + .525.
        let estimates: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        let s = percentile_bootstrap(&estimates, 0.05).unwrap();
        assert!((s.ci.0 - 3.475).abs() < 1e-12);
        assert!((s.ci.1 - 97.525).abs() < 1e-12);
        assert!((s.median - 50.5).abs() < 1e-12);

        let constant = vec![2.5; 10];
        let s = percentile_bootstrap(&constant, 0.05).unwrap();
        assert_eq!(s.ci, (2.5, 2.5));

        assert!(percentile_bootstrap(&[], 0.05).is_err());
        assert!(percentile_bootstrap(&[1.0], 0.05).is_err());
    }

    #[test]
    fn percentile_matches_direct_formula_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let n = rng.random_range(2..40);
            let estimates: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            let alpha = rng.random_range(1..40) as f64 / 100.0;
            let s = percentile_bootstrap(&estimates, alpha).unwrap();
            let mut sorted = estimates.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (q, got) in [
                (alpha / 2.0, s.ci.0),
                (1.0 - alpha / 2.0, s.ci.1),
                (0.5, s.median),
            ] {
                let h = (n as f64 - 1.0) * q;
                let lo = h.floor() as usize;
                let want = if lo + 1 >= n {
                    sorted[n - 1]
                } else {
                    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
                };
                assert!((got - want).abs() < 1e-12);
            }
            assert!(s.ci.0 <= s.median && s.median <= s.ci.1);
        }
    }

    #[test]
    fn percentile_interval_widens_as_alpha_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let estimates: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let wide = percentile_bootstrap(&estimates, 0.01).unwrap();
        let narrow = percentile_bootstrap(&estimates, 0.20).unwrap();
        assert!(wide.ci.0 <= narrow.ci.0);
        assert!(wide.ci.1 >= narrow.ci.1);
    }

    #[test]
    fn binned_residuals_constant_fit() {
        let fitted = vec![0.5; 40];
        let outcomes: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let out = binned_residuals(&fitted, &outcomes, 4).unwrap();
        for bin in &out.bins {
            assert!(bin.mean_residual.abs() < 1e-12);
        }
        assert_eq!(out.fraction_outside, 0.0);
    }

    #[test]
    fn binned_residuals_calibration_rate() {
        // Outcomes drawn from the fitted probabilities: about 5% of bins
        // should fall outside the 2-se band.
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut total = 0.0;
        let reps = 20;
        for _ in 0..reps {
            let n = 20_000;
            let fitted: Vec<f64> = (0..n).map(|_| 0.05 + 0.9 * rng.random::<f64>()).collect();
            let outcomes: Vec<u8> = fitted
                .iter()
                .map(|&p| (rng.random::<f64>() < p) as u8)
                .collect();
            let out = binned_residuals(&fitted, &outcomes, default_bins(n)).unwrap();
            total += out.fraction_outside;
        }
        let mean = total / reps as f64;
        assert!(
            (mean - 0.05).abs() < 0.04,
            "mean outside fraction {mean} should be near 0.05"
        );
    }

    #[test]
    fn binned_residuals_errors() {
        assert!(binned_residuals(&[0.5, 0.5], &[0, 1], 0).is_err());
        assert!(binned_residuals(&[0.5], &[0], 2).is_err());
    }
}
