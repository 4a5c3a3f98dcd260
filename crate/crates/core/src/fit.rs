//! Least-squares fits of convergence data.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-log fit.
    pub r2: f64,
}

/// Fits `log e = slope log h + intercept`. Returns `None` with fewer than two
/// usable points or when any value is nonpositive.
pub fn loglog_fit(h: &[f64], e: &[f64]) -> Option<LogLogFit> {
    if h.len() != e.len() || h.len() < 2 || h.iter().chain(e).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LogLogFit { slope, intercept, r2 })
}

/// Largest value of `values[i] / values[0]`; the growth of an empirical constant
/// relative to its coarsest level.
pub fn growth_over_first(values: &[f64]) -> f64 {
    match values.first() {
        Some(&v0) if v0 > 0.0 => values.iter().fold(0.0f64, |m, v| m.max(v / v0)),
        _ => f64::INFINITY,
    }
}
