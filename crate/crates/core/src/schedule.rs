//! Annealing schedules `A(s)`, `B(s)` for `H(s) = (B/2) H_0 − (A/2) Σ σ^x`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub trait Schedule: Send + Sync {
    /// Transverse-field coefficient `A(s)`.
    fn a(&self, s: f64) -> f64;
    /// Problem coefficient `B(s)`.
    fn b(&self, s: f64) -> f64;
}

/// `A(s)/2 = 1 − s`, `B(s)/2 = s`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Linear;

impl Schedule for Linear {
    fn a(&self, s: f64) -> f64 {
        2.0 * (1.0 - s)
    }
    fn b(&self, s: f64) -> f64 {
        2.0 * s
    }
}

/// Piecewise-linear tabulated schedule, e.g. a device schedule sampled on a grid of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    s: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Tabulated {
    pub fn new(s: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if s.len() < 2 || a.len() != s.len() || b.len() != s.len() {
            return Err(invalid("schedule", "need >= 2 rows with matching column lengths"));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("schedule", "s must be strictly increasing"));
        }
        Ok(Self { s, a, b })
    }

    fn interp(&self, col: &[f64], s: f64) -> f64 {
        let xs = &self.s;
        if s <= xs[0] {
            return col[0];
        }
        if s >= xs[xs.len() - 1] {
            return col[col.len() - 1];
        }
        let k = xs.partition_point(|&x| x <= s) - 1;
        let t = (s - xs[k]) / (xs[k + 1] - xs[k]);
        col[k] + t * (col[k + 1] - col[k])
    }
}

impl Schedule for Tabulated {
    fn a(&self, s: f64) -> f64 {
        self.interp(&self.a, s)
    }
    fn b(&self, s: f64) -> f64 {
        self.interp(&self.b, s)
    }
}

/// Anneal fraction of Monte Carlo step `t` out of `t_mcs`: `t / (t_mcs − 1)`.
pub fn step_fraction(t: usize, t_mcs: usize) -> f64 {
    if t_mcs <= 1 {
        1.0
    } else {
        t as f64 / (t_mcs - 1) as f64
    }
}
