//! Monte Carlo annealers on the encoded chain.
//!
//! All three protocols follow the linear schedule `A(s)/2 = 1 − s`,
//! `B(s)/2 = s` (SA instead lowers a temperature linearly) with
//! `s = t / (t_MCS − 1)` at Monte Carlo step `t`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{ChainInstance, SpinConfig};
use crate::rng::{self, StreamRng};

mod sa;
mod sqa;
mod svmc;

pub use sa::{sa_run, SaParams};
pub use sqa::{sqa_coupling, sqa_run, SqaParams};
pub use svmc::{svmc_run, tfd_range, RotorConfig, SvmcParams, UpdateRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Sa,
    Sqa,
    Svmc,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Sa => "sa",
            Protocol::Sqa => "sqa",
            Protocol::Svmc => "svmc",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Order in which one sweep visits the sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepOrder {
    /// Every site once, in index order.
    #[default]
    Sequential,
    /// As many proposals as sites, each at a uniformly drawn site.
    Random,
}

impl SweepOrder {
    /// Site of the `k`-th proposal in a sweep over `n` sites.
    #[inline]
    pub(crate) fn site(self, k: usize, n: usize, rng: &mut StreamRng) -> usize {
        match self {
            SweepOrder::Sequential => k,
            SweepOrder::Random => rng.random_range(0..n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMeta {
    pub t_mcs: usize,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunBatch {
    pub protocol: Protocol,
    pub seed: u64,
    pub schedule: ScheduleMeta,
    pub samples: Vec<SpinConfig>,
}

#[inline]
pub(crate) fn metropolis(delta: f64, beta: f64, rng: &mut StreamRng) -> bool {
    delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp()
}

#[inline]
pub(crate) fn flip_cost(fields: &[f64], j: f64, s: &[i8], i: usize) -> f64 {
    let n = s.len();
    let mut nb = 0i32;
    if i > 0 {
        nb += s[i - 1] as i32;
    }
    if i + 1 < n {
        nb += s[i + 1] as i32;
    }
    -2.0 * s[i] as f64 * (fields[i] - j * nb as f64)
}

pub(crate) fn random_spins(n: usize, rng: &mut StreamRng) -> Vec<i8> {
    (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

/// Single-spin Metropolis at a fixed temperature with sequential sweeps.
///
/// Starts from random spins and calls `observe(sweep, spins, energy)` after
/// every sweep.
pub fn metropolis_walk(
    chain: &ChainInstance,
    temperature: f64,
    n_sweeps: usize,
    seed: u64,
    mut observe: impl FnMut(usize, &[i8], f64),
) {
    let fields = chain.site_fields();
    let j = chain.coupling_j;
    let beta = 1.0 / temperature;
    let mut rng = rng::stream(seed, 0);
    let mut s = random_spins(chain.n_spins, &mut rng);
    let mut energy = chain.energy_unchecked(&s);
    for sweep in 0..n_sweeps {
        for i in 0..s.len() {
            let d = flip_cost(&fields, j, &s, i);
            if metropolis(d, beta, &mut rng) {
                s[i] = -s[i];
                energy += d;
            }
        }
        observe(sweep, &s, energy);
    }
}
