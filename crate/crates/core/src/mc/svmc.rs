use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metropolis, Protocol, RunBatch, ScheduleMeta};
use crate::encoding::{ChainInstance, SpinConfig};
use crate::error::{invalid, Result};
use crate::rng::{self, StreamRng};
use crate::schedule::{step_fraction, Linear, Schedule};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    /// `θ' ~ U[0, π]`.
    Uniform,
    /// `θ' = clamp(θ + ε, 0, π)` with `|ε| ≤ min(1, A/B) π`.
    #[default]
    Tfd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmcParams {
    pub t_mcs: usize,
    pub temperature: f64,
    pub update_rule: UpdateRule,
}

impl Default for SvmcParams {
    fn default() -> Self {
        Self {
            t_mcs: 1000,
            temperature: 1e-5,
            update_rule: UpdateRule::Tfd,
        }
    }
}

impl SvmcParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_mcs < 2 {
            return Err(invalid("t_mcs", "need at least 2 Monte Carlo steps"));
        }
        if !(self.temperature > 0.0) {
            return Err(invalid("temperature", "must be > 0"));
        }
        Ok(())
    }
}

/// Half-width of the TFD proposal window, `min(1, A/B) π`.
pub fn tfd_range(a: f64, b: f64) -> f64 {
    if b <= 0.0 || a >= b {
        PI
    } else {
        (a / b).max(0.0) * PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotorConfig {
    angles: Vec<f64>,
}

impl RotorConfig {
    pub fn uniform(n: usize, theta: f64) -> Self {
        Self { angles: vec![theta.clamp(0.0, PI); n] }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// `sign(cos θ)` per rotor; rotors within `1e-12` of the equator get a fair coin.
    pub fn project(&self, rng: &mut StreamRng) -> SpinConfig {
        let spins = self
            .angles
            .iter()
            .map(|&t| {
                let c = t.cos();
                if c.abs() < 1e-12 {
                    if rng.random::<bool>() {
                        1
                    } else {
                        -1
                    }
                } else if c > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        SpinConfig::from_raw(spins)
    }
}

fn svmc_read(chain: &ChainInstance, fields: &[f64], params: &SvmcParams, seed: u64, read: u64) -> SpinConfig {
    let n = chain.n_spins;
    let j = chain.coupling_j;
    let beta = 1.0 / params.temperature;
    let mut rng = rng::stream(seed, read);
    let mut rotors = RotorConfig::uniform(n, PI / 2.0);
    let mut cos: Vec<f64> = rotors.angles.iter().map(|t| t.cos()).collect();
    let schedule = Linear;
    for t in 0..params.t_mcs {
        let x = step_fraction(t, params.t_mcs);
        let (a, b) = (schedule.a(x), schedule.b(x));
        let width = tfd_range(a, b);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let theta = rotors.angles[i];
            let proposal = match params.update_rule {
                UpdateRule::Uniform => rng.random::<f64>() * PI,
                UpdateRule::Tfd => (theta + (2.0 * rng.random::<f64>() - 1.0) * width).clamp(0.0, PI),
            };
            let c_new = proposal.cos();
            let mut nb = 0.0;
            if i > 0 {
                nb += cos[i - 1];
            }
            if i + 1 < n {
                nb += cos[i + 1];
            }
            let d_problem = (c_new - cos[i]) * (fields[i] - j * nb);
            let d_field = proposal.sin() - theta.sin();
            let delta = 0.5 * b * d_problem - 0.5 * a * d_field;
            if metropolis(delta, beta, &mut rng) {
                rotors.angles[i] = proposal;
                cos[i] = c_new;
            }
        }
    }
    rotors.project(&mut rng)
}

/// Spin-vector Monte Carlo: each read starts from `θ_i = π/2` and makes `N`
/// random-site Metropolis rotor updates per Monte Carlo step.
pub fn svmc_run(chain: &ChainInstance, params: &SvmcParams, n_reads: usize, seed: u64) -> Result<RunBatch> {
    params.validate()?;
    let fields = chain.site_fields();
    let samples = (0..n_reads as u64)
        .into_par_iter()
        .map(|r| svmc_read(chain, &fields, params, seed, r))
        .collect();
    let rule = match params.update_rule {
        UpdateRule::Uniform => "uniform",
        UpdateRule::Tfd => "tfd",
    };
    Ok(RunBatch {
        protocol: Protocol::Svmc,
        seed,
        schedule: ScheduleMeta {
            t_mcs: params.t_mcs,
            description: format!(
                "linear A/2 = 1 - s, B/2 = s; T = {}, {rule} updates",
                params.temperature
            ),
        },
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{build_chain, ChainParams};
    use crate::potential::PotentialSpec;

    #[test]
    fn tfd_window() {
        let lin = Linear;
        for k in 0..=50 {
            let s = k as f64 / 100.0;
            assert_eq!(tfd_range(lin.a(s), lin.b(s)), PI);
        }
        assert!((tfd_range(lin.a(0.8), lin.b(0.8)) - 0.25 * PI).abs() < 1e-12);
        assert_eq!(tfd_range(lin.a(1.0), lin.b(1.0)), 0.0);
    }

    #[test]
    fn equator_projects_to_both_signs() {
        let r = RotorConfig::uniform(2000, PI / 2.0);
        let mut rng = rng::stream(1, 0);
        let c = r.project(&mut rng);
        let ups = c.spins().iter().filter(|&&s| s == 1).count();
        assert!((800..1200).contains(&ups), "{ups}");
        let mut rng = rng::stream(1, 0);
        assert_eq!(RotorConfig::uniform(3, 0.0).project(&mut rng), SpinConfig::all_up(3));
        assert_eq!(RotorConfig::uniform(3, PI).project(&mut rng), SpinConfig::all_down(3));
    }

    #[test]
    fn deterministic() {
        let chain = build_chain(&PotentialSpec::washboard(1.0), &ChainParams::with_n(16)).unwrap();
        for rule in [UpdateRule::Uniform, UpdateRule::Tfd] {
            let p = SvmcParams { t_mcs: 40, update_rule: rule, ..SvmcParams::default() };
            let a = svmc_run(&chain, &p, 6, 9).unwrap();
            assert_eq!(a, svmc_run(&chain, &p, 6, 9).unwrap());
        }
    }

    #[test]
    fn slow_anneal_finds_single_wall() {
        let chain = build_chain(&PotentialSpec::washboard(0.2), &ChainParams::with_n(12)).unwrap();
        let p = SvmcParams { t_mcs: 2000, ..SvmcParams::default() };
        let batch = svmc_run(&chain, &p, 8, 4).unwrap();
        assert!(batch.samples.iter().all(|c| c.wall_position().is_some()));
    }
}
