//! Scaling-law fits: power laws and exponentials by least squares in log
//! space, and the raw log-log slope of one observable against another.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = prefactor · t^(−exponent)`
    PowerLaw,
    /// `y = prefactor · exp(−rate · t)`
    Exponential,
    /// `log y = exponent · log x + log prefactor`
    LogLogSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// `b` for power laws, `C` for exponentials, the slope for log-log fits.
    pub exponent: f64,
    pub exponent_se: f64,
    pub prefactor: f64,
    pub prefactor_se: f64,
    /// Decay rate of an exponential fit.
    pub rate: Option<f64>,
    /// Smallest and largest abscissa actually used.
    pub window: (f64, f64),
    pub n_points: usize,
    pub r2: f64,
}

struct Line {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    intercept_se: f64,
    r2: f64,
}

/// Least squares on `(u, v)` with optional inverse-variance weights.
///
/// Unweighted fits take the parameter covariance from the residual
/// variance; weighted fits treat the weights as known `1/σ²`.
fn regress(pts: &mut [(f64, f64, f64)], weighted: bool) -> Line {
    // sorting makes the sums independent of input order
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let ubar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let vbar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let suu: f64 = pts.iter().map(|p| p.2 * (p.0 - ubar) * (p.0 - ubar)).sum();
    let suv: f64 = pts.iter().map(|p| p.2 * (p.0 - ubar) * (p.1 - vbar)).sum();
    let svv: f64 = pts.iter().map(|p| p.2 * (p.1 - vbar) * (p.1 - vbar)).sum();
    let slope = if suu > 0.0 { suv / suu } else { 0.0 };
    let intercept = vbar - slope * ubar;
    let ssr: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - intercept - slope * p.0;
            p.2 * r * r
        })
        .sum();
    let n = pts.len() as f64;
    let scale = if weighted { 1.0 } else { ssr / (n - 2.0) };
    let slope_se = (scale / suu).sqrt();
    let intercept_se = (scale * (1.0 / sw + ubar * ubar / suu)).sqrt();
    let r2 = if svv > 0.0 { 1.0 - ssr / svv } else { 1.0 };
    Line {
        slope,
        intercept,
        slope_se: if slope_se.is_finite() { slope_se } else { 0.0 },
        intercept_se: if intercept_se.is_finite() { intercept_se } else { 0.0 },
        r2,
    }
}

fn collect(
    x: &[f64],
    y: &[f64],
    se: Option<&[f64]>,
    keep: impl Fn(f64, f64) -> bool,
    log_x: bool,
) -> Result<(Vec<(f64, f64, f64)>, (f64, f64))> {
    if x.len() != y.len() || se.is_some_and(|s| s.len() != x.len()) {
        return Err(crate::error::invalid("y", "x, y and stderr must have equal lengths"));
    }
    let mut pts = Vec::new();
    let mut window = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..x.len() {
        if !keep(x[i], y[i]) {
            continue;
        }
        if !(y[i] > 0.0) {
            return Err(Error::NonPositive { x: x[i], value: y[i] });
        }
        if log_x && !(x[i] > 0.0) {
            return Err(Error::NonPositive { x: x[i], value: x[i] });
        }
        // var(log y) ≈ (σ/y)²
        let w = match se {
            Some(s) if s[i] > 0.0 => (y[i] / s[i]).powi(2),
            Some(_) => return Err(crate::error::invalid("stderr", "weights need positive standard errors")),
            None => 1.0,
        };
        let u = if log_x { x[i].ln() } else { x[i] };
        pts.push((u, y[i].ln(), w));
        window = (window.0.min(x[i]), window.1.max(x[i]));
    }
    if pts.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: pts.len() });
    }
    Ok((pts, window))
}

fn in_window(window: (f64, f64)) -> impl Fn(f64, f64) -> bool {
    move |x, _| x >= window.0 && x <= window.1
}

fn finish(model: FitModel, line: Line, window: (f64, f64), n_points: usize) -> FitResult {
    let prefactor = line.intercept.exp();
    let (exponent, rate) = match model {
        FitModel::PowerLaw => (-line.slope, None),
        FitModel::Exponential => (-line.slope, Some(-line.slope)),
        FitModel::LogLogSlope => (line.slope, None),
    };
    FitResult {
        model,
        exponent,
        exponent_se: line.slope_se,
        prefactor,
        prefactor_se: prefactor * line.intercept_se,
        rate,
        window,
        n_points,
        r2: line.r2,
    }
}

fn fit(
    model: FitModel,
    x: &[f64],
    y: &[f64],
    se: Option<&[f64]>,
    keep: impl Fn(f64, f64) -> bool,
) -> Result<FitResult> {
    let log_x = model != FitModel::Exponential;
    let (mut pts, window) = collect(x, y, se, keep, log_x)?;
    let n = pts.len();
    let line = regress(&mut pts, se.is_some());
    Ok(finish(model, line, window, n))
}

/// Fit `y ∝ t^(−b)` to the points with `t` in the closed `window`.
pub fn power_law_fit(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<FitResult> {
    fit(FitModel::PowerLaw, t, y, None, in_window(window))
}

/// [`power_law_fit`] weighted by the standard errors of `y`.
pub fn power_law_fit_weighted(t: &[f64], y: &[f64], se: &[f64], window: (f64, f64)) -> Result<FitResult> {
    fit(FitModel::PowerLaw, t, y, Some(se), in_window(window))
}

/// Fit `y = C′ exp(−C t)` to the points with `t` in the closed `window`.
pub fn exponential_fit(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<FitResult> {
    fit(FitModel::Exponential, t, y, None, in_window(window))
}

pub fn exponential_fit_weighted(t: &[f64], y: &[f64], se: &[f64], window: (f64, f64)) -> Result<FitResult> {
    fit(FitModel::Exponential, t, y, Some(se), in_window(window))
}

/// Slope of `log y` against `log x` over the points `filter` keeps.
pub fn loglog_slope(x: &[f64], y: &[f64], filter: impl Fn(f64, f64) -> bool) -> Result<FitResult> {
    fit(FitModel::LogLogSlope, x, y, None, filter)
}
