//! Thin wrappers over the standard normal distribution. The chi-square with
//! one degree of freedom is derived from it (X ~ chi2_1 iff sqrt(X) ~ |Z|),
//! which covers every quantile the fitters need.

use statrs::distribution::{ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Two-sided z critical value for confidence level `1 - alpha`.
pub fn z_critical(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

/// Quantile of chi-square with 1 degree of freedom at probability `p`.
pub fn chi2_1_quantile(p: f64) -> f64 {
    let z = normal_quantile(0.5 + p / 2.0);
    z * z
}

/// Upper tail probability of chi-square with 1 df at `x`.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    2.0 * (1.0 - std_normal().cdf(x.sqrt()))
}
