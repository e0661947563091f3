//! The continuous objective and the grid it is sampled on.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A differentiable objective on the real line.
pub trait Objective: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn gradient(&self, x: f64) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: f64) -> f64 {
        (**self).gradient(x)
    }
}

/// Harmonic well with a cosine ripple,
/// `V(x) = k x²/2 + (h0/2)(1 - cos(2πx/w0))`, restricted to a search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub k: f64,
    pub h0: f64,
    pub w0: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl PotentialSpec {
    pub fn new(k: f64, h0: f64, w0: f64, x_min: f64, x_max: f64) -> Result<Self> {
        let spec = Self {
            k,
            h0,
            w0,
            x_min,
            x_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `k = 0.5`, `w0 = 0.2` on the box `[-3, 3]` with the given barrier height.
    pub fn washboard(h0: f64) -> Self {
        Self {
            k: 0.5,
            h0,
            w0: 0.2,
            x_min: -3.0,
            x_max: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) {
            return Err(invalid("k", format!("must be > 0, got {}", self.k)));
        }
        if !(self.w0 > 0.0) {
            return Err(invalid("w0", format!("must be > 0, got {}", self.w0)));
        }
        if !(self.h0 >= 0.0) {
            return Err(invalid("h0", format!("must be >= 0, got {}", self.h0)));
        }
        if !(self.x_min < self.x_max) {
            return Err(invalid(
                "x_min",
                format!("box [{}, {}] is empty", self.x_min, self.x_max),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        0.5 * self.k * x * x + 0.5 * self.h0 * (1.0 - (2.0 * PI * x / self.w0).cos())
    }

    pub fn gradient(&self, x: f64) -> f64 {
        self.k * x + PI * self.h0 / self.w0 * (2.0 * PI * x / self.w0).sin()
    }

    pub fn curvature(&self, x: f64) -> f64 {
        self.k + 2.0 * PI * PI * self.h0 / (self.w0 * self.w0) * (2.0 * PI * x / self.w0).cos()
    }
}

impl Objective for PotentialSpec {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn gradient(&self, x: f64) -> f64 {
        PotentialSpec::gradient(self, x)
    }
}

pub fn eval_potential(spec: &PotentialSpec, x: f64) -> f64 {
    spec.eval(x)
}

pub fn eval_gradient(spec: &PotentialSpec, x: f64) -> f64 {
    spec.gradient(x)
}

/// The `N - 1` values a domain wall in an `N`-spin chain can represent.
///
/// `points[b]` is the value encoded by a wall on bond `b` (0-based, between
/// sites `b` and `b + 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_spins: usize,
    pub points: Vec<f64>,
    pub delta_x: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_spins: usize) -> Result<Self> {
        if n_spins < 3 {
            return Err(invalid(
                "n_spins",
                format!("need at least 3 spins for an interior point, got {n_spins}"),
            ));
        }
        if !(x_min < x_max) {
            return Err(invalid("x_min", format!("box [{x_min}, {x_max}] is empty")));
        }
        let intervals = (n_spins - 1) as f64;
        let delta_x = (x_max - x_min) / intervals;
        // x_min + b·Δx, written as an interpolation so symmetric boxes hit 0 exactly
        let points = (0..n_spins - 1)
            .map(|b| (x_min * (intervals - b as f64) + x_max * b as f64) / intervals)
            .collect();
        Ok(Self {
            n_spins,
            points,
            delta_x,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.points[0]
    }

    /// Upper edge of the box the grid was built from (one step past the last point).
    pub fn x_max(&self) -> f64 {
        self.points[0] + self.delta_x * (self.n_spins - 1) as f64
    }

    /// Bond whose grid point is nearest to `x`.
    pub fn nearest_bond(&self, x: f64) -> usize {
        let raw = ((x - self.points[0]) / self.delta_x).round();
        (raw.max(0.0) as usize).min(self.points.len() - 1)
    }
}

pub fn make_grid(spec: &PotentialSpec, n_spins: usize) -> Result<Grid> {
    Grid::new(spec.x_min, spec.x_max, n_spins)
}
