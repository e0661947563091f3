use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flip_cost, metropolis, random_spins, Protocol, RunBatch, ScheduleMeta, SweepOrder};
use crate::encoding::{ChainInstance, SpinConfig};
use crate::error::{invalid, Result};
use crate::rng;
use crate::schedule::step_fraction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    pub t_mcs: usize,
    pub t0: f64,
    pub t1: f64,
    pub order: SweepOrder,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            t_mcs: 1000,
            t0: 1.0,
            t1: 1e-5,
            order: SweepOrder::Sequential,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_mcs < 2 {
            return Err(invalid("t_mcs", "need at least 2 sweeps"));
        }
        if !(self.t1 > 0.0 && self.t0 > self.t1) {
            return Err(invalid("t0", "need t0 > t1 > 0"));
        }
        Ok(())
    }

    /// Temperature at sweep `t`, linear from `t0` to `t1`.
    pub fn temperature(&self, t: usize) -> f64 {
        let f = step_fraction(t, self.t_mcs);
        self.t0 * (1.0 - f) + self.t1 * f
    }
}

fn sa_read(chain: &ChainInstance, fields: &[f64], params: &SaParams, seed: u64, read: u64) -> SpinConfig {
    let mut rng = rng::stream(seed, read);
    let mut s = random_spins(chain.n_spins, &mut rng);
    let j = chain.coupling_j;
    for t in 0..params.t_mcs {
        let beta = 1.0 / params.temperature(t);
        for k in 0..s.len() {
            let i = params.order.site(k, s.len(), &mut rng);
            if metropolis(flip_cost(fields, j, &s, i), beta, &mut rng) {
                s[i] = -s[i];
            }
        }
    }
    SpinConfig::from_raw(s)
}

/// Simulated annealing: `n_reads` independent reads, each from random spins.
pub fn sa_run(chain: &ChainInstance, params: &SaParams, n_reads: usize, seed: u64) -> Result<RunBatch> {
    params.validate()?;
    let fields = chain.site_fields();
    let samples = (0..n_reads as u64)
        .into_par_iter()
        .map(|r| sa_read(chain, &fields, params, seed, r))
        .collect();
    Ok(RunBatch {
        protocol: Protocol::Sa,
        seed,
        schedule: ScheduleMeta {
            t_mcs: params.t_mcs,
            description: format!("linear T from {} to {}", params.t0, params.t1),
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
    fn schedule_endpoints() {
        let p = SaParams::default();
        assert_eq!(p.temperature(0), 1.0);
        assert_eq!(p.temperature(p.t_mcs - 1), 1e-5);
    }

    #[test]
    fn rejects_bad_params() {
        let bad = [
            SaParams { t_mcs: 1, ..SaParams::default() },
            SaParams { t0: 1e-6, ..SaParams::default() },
            SaParams { t1: 0.0, ..SaParams::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err());
        }
    }

    #[test]
    fn deterministic() {
        let chain = build_chain(&PotentialSpec::washboard(1.0), &ChainParams::with_n(20)).unwrap();
        let p = SaParams { t_mcs: 50, ..SaParams::default() };
        let a = sa_run(&chain, &p, 8, 42).unwrap();
        let b = sa_run(&chain, &p, 8, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, sa_run(&chain, &p, 8, 43).unwrap().samples);
    }

    #[test]
    fn random_order_is_seeded_and_distinct() {
        let chain = build_chain(&PotentialSpec::washboard(1.0), &ChainParams::with_n(20)).unwrap();
        let seq = SaParams { t_mcs: 30, ..SaParams::default() };
        let rnd = SaParams { order: SweepOrder::Random, ..seq };
        let a = sa_run(&chain, &rnd, 8, 42).unwrap();
        assert_eq!(a, sa_run(&chain, &rnd, 8, 42).unwrap());
        assert_ne!(a.samples, sa_run(&chain, &seq, 8, 42).unwrap().samples);
    }
}
