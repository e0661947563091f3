//! Classical optimizers acting on the continuous variable directly.
//!
//! Nelder-Mead, Fletcher-Reeves conjugate gradient, basin hopping and
//! differential evolution, plus the multi-start benchmark that turns them
//! into success-probability curves as a function of the iteration budget.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::potential::{Objective, PotentialSpec};
use crate::rng::{self, StreamRng};

/// Step-size stopping threshold shared by the local methods.
pub const X_TOL: f64 = 1e-7;
/// Gradient magnitude treated as stationary.
pub const GRAD_TOL: f64 = 1e-10;

/// What counts as solving the problem: landing within `radius` of `x_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub x_star: f64,
    pub radius: f64,
}

impl Target {
    /// Global minimum at 0 with the grid spacing of an `n_spins` encoding as radius.
    pub fn for_grid(spec: &PotentialSpec, n_spins: usize) -> Result<Self> {
        let grid = crate::potential::make_grid(spec, n_spins)?;
        Ok(Self { x_star: 0.0, radius: grid.delta_x })
    }

    pub fn hit(&self, x: f64) -> bool {
        (x - self.x_star).abs() < self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptRun {
    pub x_final: f64,
    pub f_final: f64,
    pub iterations: usize,
    pub wall_time: f64,
    pub converged: bool,
    pub success: bool,
}

impl OptRun {
    fn finish(x: f64, f: &dyn Objective, iterations: usize, converged: bool, start: Instant, target: &Target) -> Self {
        Self {
            x_final: x,
            f_final: f.value(x),
            iterations,
            wall_time: start.elapsed().as_secs_f64(),
            converged,
            success: target.hit(x),
        }
    }
}

/// One-dimensional Nelder-Mead with reflection 1, expansion 2, contraction
/// 0.5 and shrink 0.5. The second vertex sits 5% away from `x0`
/// (0.00025 when `x0 = 0`). Stops when the simplex is narrower than `tol`.
pub fn nelder_mead(f: &dyn Objective, x0: f64, t_max: usize, tol: f64, target: &Target) -> Result<OptRun> {
    if t_max == 0 {
        return Err(invalid("t_max", "must be >= 1"));
    }
    let start = Instant::now();
    let step = if x0 == 0.0 { 0.00025 } else { 0.05 * x0 };
    let mut pts = [(x0, f.value(x0)), (x0 + step, f.value(x0 + step))];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < t_max {
        iterations += 1;
        if pts[1].1 < pts[0].1 {
            pts.swap(0, 1);
        }
        let (best, worst) = (pts[0], pts[1]);
        let c = best.0;
        let xr = c + (c - worst.0);
        let fr = f.value(xr);
        if fr < best.1 {
            let xe = c + 2.0 * (xr - c);
            let fe = f.value(xe);
            pts[1] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else {
            let (xc, fc, ok) = if fr < worst.1 {
                let xc = c + 0.5 * (xr - c);
                let fc = f.value(xc);
                (xc, fc, fc <= fr)
            } else {
                let xc = c + 0.5 * (worst.0 - c);
                let fc = f.value(xc);
                (xc, fc, fc < worst.1)
            };
            pts[1] = if ok {
                (xc, fc)
            } else {
                let xs = best.0 + 0.5 * (worst.0 - best.0);
                (xs, f.value(xs))
            };
        }
        if (pts[1].0 - pts[0].0).abs() < tol {
            converged = true;
            break;
        }
    }
    let best = if pts[1].1 < pts[0].1 { pts[1] } else { pts[0] };
    Ok(OptRun::finish(best.0, f, iterations, converged, start, target))
}

/// Step along `d` that first walks downhill with doubling steps from a tiny
/// one, then backtracks by halving until the Armijo condition holds.
///
/// Starting small keeps the search inside the current basin of a rugged
/// function instead of leaping over barriers.
fn line_search(f: &dyn Objective, x: f64, fx: f64, d: f64, slope: f64) -> f64 {
    const C1: f64 = 1e-4;
    let mut alpha = 1e-8 / d.abs().max(1e-300);
    let mut f_alpha = f.value(x + alpha * d);
    for _ in 0..200 {
        let next = 2.0 * alpha;
        let f_next = f.value(x + next * d);
        if !(f_next < f_alpha) {
            break;
        }
        alpha = next;
        f_alpha = f_next;
    }
    for _ in 0..200 {
        if f_alpha <= fx + C1 * alpha * slope {
            return alpha;
        }
        alpha *= 0.5;
        f_alpha = f.value(x + alpha * d);
    }
    0.0
}

/// Fletcher-Reeves conjugate gradient, restarting to steepest descent every
/// 10 iterations or whenever the direction stops descending.
pub fn conjugate_gradient(f: &dyn Objective, x0: f64, t_max: usize, target: &Target) -> Result<OptRun> {
    if t_max == 0 {
        return Err(invalid("t_max", "must be >= 1"));
    }
    let start = Instant::now();
    Ok(cgd_inner(f, x0, t_max, start, target))
}

fn cgd_inner(f: &dyn Objective, x0: f64, t_max: usize, start: Instant, target: &Target) -> OptRun {
    const RESTART: usize = 10;
    let mut x = x0;
    let mut fx = f.value(x);
    let mut g = f.gradient(x);
    let mut d = -g;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < t_max {
        if g.abs() < GRAD_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        if d * g >= 0.0 || (iterations - 1) % RESTART == 0 {
            d = -g;
        }
        let alpha = line_search(f, x, fx, d, d * g);
        let x_new = x + alpha * d;
        let step = (x_new - x).abs();
        x = x_new;
        fx = f.value(x);
        let g_new = f.gradient(x);
        let beta = if g == 0.0 { 0.0 } else { g_new * g_new / (g * g) };
        d = -g_new + beta * d;
        g = g_new;
        if step < X_TOL {
            converged = true;
            break;
        }
    }
    OptRun::finish(x, f, iterations, converged, start, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BhParams {
    pub t_max: usize,
    pub temperature: f64,
    pub step_low: f64,
    pub step_high: f64,
    /// Iteration cap of every inner conjugate-gradient minimization.
    pub local_iterations: usize,
}

impl Default for BhParams {
    fn default() -> Self {
        Self {
            t_max: 128,
            temperature: 1.0,
            step_low: -0.5,
            step_high: 0.5,
            local_iterations: 1000,
        }
    }
}

impl BhParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 || self.local_iterations == 0 {
            return Err(invalid("t_max", "iteration budgets must be >= 1"));
        }
        if !(self.step_low < self.step_high) {
            return Err(invalid("step_low", "need step_low < step_high"));
        }
        if !(self.temperature > 0.0) {
            return Err(invalid("temperature", "must be > 0"));
        }
        Ok(())
    }
}

/// Basin hopping: uniform perturbation, local CGD, Metropolis acceptance;
/// returns the best point ever visited.
pub fn basin_hopping(f: &dyn Objective, x0: f64, params: &BhParams, seed: u64, target: &Target) -> Result<OptRun> {
    params.validate()?;
    let start = Instant::now();
    let mut rng = rng::stream(seed, 0);
    let local = |x: f64| cgd_inner(f, x, params.local_iterations, start, target);
    let first = local(x0);
    let (mut x, mut fx) = (first.x_final, first.f_final);
    let (mut best_x, mut best_f) = (x, fx);
    for _ in 0..params.t_max {
        let trial = x + rng.random_range(params.step_low..params.step_high);
        let run = local(trial);
        let accept = run.f_final <= fx || rng.random::<f64>() < (-(run.f_final - fx) / params.temperature).exp();
        if accept {
            x = run.x_final;
            fx = run.f_final;
        }
        if run.f_final < best_f {
            best_x = run.x_final;
            best_f = run.f_final;
        }
    }
    Ok(OptRun::finish(best_x, f, params.t_max, false, start, target))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeParams {
    pub popsize: usize,
    pub g_max: usize,
    pub f: f64,
    pub cr: f64,
    pub strategy: String,
    /// Stop once the population-mean objective drops below this.
    pub tol: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            popsize: 120,
            g_max: 128,
            f: 0.8,
            cr: 0.9,
            strategy: "best2bin".into(),
            tol: 1e-7,
        }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<()> {
        if self.popsize < 5 {
            return Err(invalid("popsize", "best/2/bin needs 4 partners besides the target, so >= 5"));
        }
        if self.g_max == 0 {
            return Err(invalid("g_max", "must be >= 1"));
        }
        if !(self.f >= 0.0) {
            return Err(invalid("f", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(invalid("cr", "must lie in [0, 1]"));
        }
        if self.strategy != "best2bin" {
            return Err(invalid("strategy", format!("only best2bin is implemented, got {}", self.strategy)));
        }
        Ok(())
    }
}

fn distinct_partners(rng: &mut StreamRng, n: usize, exclude: usize) -> [usize; 4] {
    let mut out = [usize::MAX; 4];
    let mut k = 0;
    while k < 4 {
        let r = rng.random_range(0..n);
        if r != exclude && !out[..k].contains(&r) {
            out[k] = r;
            k += 1;
        }
    }
    out
}

/// Differential evolution, best/2/bin with immediate replacement. Trial
/// points outside `bounds` are redrawn uniformly inside.
pub fn differential_evolution(
    f: &dyn Objective,
    bounds: (f64, f64),
    params: &DeParams,
    seed: u64,
    target: &Target,
) -> Result<OptRun> {
    params.validate()?;
    let mut rng = rng::stream(seed, 0);
    let pop: Vec<f64> = (0..params.popsize).map(|_| rng.random_range(bounds.0..=bounds.1)).collect();
    differential_evolution_from(f, bounds, pop, params, &mut rng, target)
}

/// [`differential_evolution`] from an explicit initial population.
pub fn differential_evolution_from(
    f: &dyn Objective,
    bounds: (f64, f64),
    mut pop: Vec<f64>,
    params: &DeParams,
    rng: &mut StreamRng,
    target: &Target,
) -> Result<OptRun> {
    params.validate()?;
    if pop.len() != params.popsize {
        return Err(invalid("popsize", "initial population size differs from popsize"));
    }
    if !(bounds.0 < bounds.1) {
        return Err(invalid("bounds", "need lower < upper"));
    }
    let start = Instant::now();
    let n = pop.len();
    let mut fit: Vec<f64> = pop.iter().map(|&x| f.value(x)).collect();
    let mut best = argmin(&fit);
    let mut generations = 0;
    let mut converged = false;
    while generations < params.g_max {
        if mean(&fit) < params.tol {
            converged = true;
            break;
        }
        generations += 1;
        for i in 0..n {
            let [r1, r2, r3, r4] = distinct_partners(rng, n, i);
            let mutant = pop[best] + params.f * (pop[r1] + pop[r2] - pop[r3] - pop[r4]);
            // with one coordinate the forced crossover index always takes the mutant
            let mut trial = mutant;
            if !(bounds.0..=bounds.1).contains(&trial) {
                trial = rng.random_range(bounds.0..=bounds.1);
            }
            let f_trial = f.value(trial);
            if f_trial <= fit[i] {
                pop[i] = trial;
                fit[i] = f_trial;
                if f_trial < fit[best] {
                    best = i;
                }
            }
        }
    }
    if !converged && mean(&fit) < params.tol {
        converged = true;
    }
    Ok(OptRun::finish(pop[best], f, generations, converged, start, target))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc })
        .0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nm,
    Cgd,
    Bh,
    De,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Nm => "nm",
            Algorithm::Cgd => "cgd",
            Algorithm::Bh => "bh",
            Algorithm::De => "de",
        }
    }
}

/// Algorithm settings used by [`benchmark_sweep`]; the iteration budget comes from the sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub bh: BhParams,
    pub de: DeParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub t_max: usize,
    pub p_gs: f64,
    pub e_abs: f64,
    pub mean_wall_time: f64,
}

/// Run `algorithm` from `n_init` uniform starting points per budget.
///
/// Every budget reuses the same starting points; stochastic algorithms get
/// their own stream per `(budget index, run)`.
pub fn benchmark_sweep(
    spec: &PotentialSpec,
    algorithm: Algorithm,
    n_init: usize,
    t_max_list: &[usize],
    seed: u64,
    target: &Target,
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    if n_init == 0 {
        return Err(invalid("n_init", "must be >= 1"));
    }
    spec.validate()?;
    let mut starts = rng::stream(seed, u64::MAX);
    let x0: Vec<f64> = (0..n_init).map(|_| starts.random_range(spec.x_min..=spec.x_max)).collect();
    t_max_list
        .iter()
        .enumerate()
        .map(|(k, &t_max)| {
            let runs: Vec<OptRun> = x0
                .par_iter()
                .enumerate()
                .map(|(r, &x)| {
                    let run_seed = rng::derive(seed, &[k as u64, r as u64]);
                    match algorithm {
                        Algorithm::Nm => nelder_mead(spec, x, t_max, X_TOL, target),
                        Algorithm::Cgd => conjugate_gradient(spec, x, t_max, target),
                        Algorithm::Bh => {
                            let p = BhParams { t_max, ..settings.bh };
                            basin_hopping(spec, x, &p, run_seed, target)
                        }
                        Algorithm::De => {
                            let p = DeParams { g_max: t_max, ..settings.de.clone() };
                            differential_evolution(spec, (spec.x_min, spec.x_max), &p, run_seed, target)
                        }
                    }
                })
                .collect::<Result<_>>()?;
            let n = runs.len() as f64;
            Ok(SweepRow {
                t_max,
                p_gs: runs.iter().filter(|r| r.success).count() as f64 / n,
                e_abs: (runs.iter().map(|r| r.f_final).sum::<f64>() / n).abs(),
                mean_wall_time: runs.iter().map(|r| r.wall_time).sum::<f64>() / n,
            })
        })
        .collect()
}
