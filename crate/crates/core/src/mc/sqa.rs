use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{metropolis, random_spins, Protocol, RunBatch, ScheduleMeta, SweepOrder};
use crate::encoding::{ChainInstance, SpinConfig};
use crate::error::{invalid, Result};
use crate::rng::{self, StreamRng};
use crate::schedule::{step_fraction, Linear, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqaParams {
    pub t_mcs: usize,
    pub trotter_m: usize,
    pub beta: f64,
    /// Lower bound on `A(s)` inside the replica coupling, which diverges at `A = 0`.
    pub a_floor: f64,
    pub order: SweepOrder,
}

impl Default for SqaParams {
    fn default() -> Self {
        Self {
            t_mcs: 1000,
            trotter_m: 1000,
            beta: 1000.0,
            a_floor: 1e-12,
            order: SweepOrder::Sequential,
        }
    }
}

impl SqaParams {
    pub fn validate(&self) -> Result<()> {
        if self.t_mcs < 2 {
            return Err(invalid("t_mcs", "need at least 2 Monte Carlo steps"));
        }
        if self.trotter_m < 2 {
            return Err(invalid("trotter_m", "need at least 2 replicas"));
        }
        if !(self.beta > 0.0) {
            return Err(invalid("beta", "must be > 0"));
        }
        if !(self.a_floor > 0.0) {
            return Err(invalid("a_floor", "must be > 0"));
        }
        Ok(())
    }
}

/// Replica coupling `(M/2β) ln tanh(β A / 2M)` with `A` clamped to `a_floor`.
pub fn sqa_coupling(a: f64, params: &SqaParams) -> f64 {
    let m = params.trotter_m as f64;
    let a = a.max(params.a_floor);
    m / (2.0 * params.beta) * (params.beta * a / (2.0 * m)).tanh().ln()
}

/// Path-integral simulated quantum annealing; one run, `M` samples.
///
/// Configurations are weighted by `exp(−(β/M) Σ_k [(B/2) H_0(k) + c Σ_i σ_ik σ_i,k+1])`
/// with `c` from [`sqa_coupling`] and periodic replica index `k`. One Monte
/// Carlo step is `M·N` single-spin Metropolis proposals, replica by replica
/// in the sequential order.
pub fn sqa_run(chain: &ChainInstance, params: &SqaParams, seed: u64) -> Result<RunBatch> {
    params.validate()?;
    let n = chain.n_spins;
    let m = params.trotter_m;
    let fields = chain.site_fields();
    let j = chain.coupling_j;
    let mut rng = rng::stream(seed, 0);
    let mut s = random_spins(n * m, &mut rng);
    let schedule = Linear;
    let beta_slice = params.beta / m as f64;

    for t in 0..params.t_mcs {
        let x = step_fraction(t, params.t_mcs);
        let coupling = sqa_coupling(schedule.a(x), params);
        assert!(coupling <= 0.0, "replica coupling must be ferromagnetic");
        let w_cl = beta_slice * schedule.b(x) / 2.0;
        let w_q = beta_slice * coupling;
        let mut update = |k: usize, i: usize, rng: &mut StreamRng| {
            let up = if k + 1 == m { 0 } else { (k + 1) * n };
            let down = if k == 0 { (m - 1) * n } else { (k - 1) * n };
            let row = k * n;
            let si = s[row + i] as f64;
            let mut nb = 0i32;
            if i > 0 {
                nb += s[row + i - 1] as i32;
            }
            if i + 1 < n {
                nb += s[row + i + 1] as i32;
            }
            let d_cl = -2.0 * si * (fields[i] - j * nb as f64);
            let d_q = -2.0 * si * (s[up + i] + s[down + i]) as f64;
            if metropolis(w_cl * d_cl + w_q * d_q, 1.0, rng) {
                s[row + i] = -s[row + i];
            }
        };
        match params.order {
            SweepOrder::Sequential => {
                for k in 0..m {
                    for i in 0..n {
                        update(k, i, &mut rng);
                    }
                }
            }
            SweepOrder::Random => {
                for _ in 0..n * m {
                    let idx = rng.random_range(0..n * m);
                    update(idx / n, idx % n, &mut rng);
                }
            }
        }
    }

    let samples = s.chunks(n).map(|c| SpinConfig::from_raw(c.to_vec())).collect();
    Ok(RunBatch {
        protocol: Protocol::Sqa,
        seed,
        schedule: ScheduleMeta {
            t_mcs: params.t_mcs,
            description: format!(
                "linear A/2 = 1 - s, B/2 = s; M = {}, beta = {}",
                params.trotter_m, params.beta
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
    fn coupling_at_start() {
        let p = SqaParams { trotter_m: 10, beta: 10.0, ..SqaParams::default() };
        let c = sqa_coupling(2.0, &p);
        assert!((c - 0.5 * 1f64.tanh().ln()).abs() < 1e-15);
        assert!((c + 0.136_170_734_455_915_8).abs() < 1e-12);
    }

    #[test]
    fn coupling_floor_locks_replicas() {
        let p = SqaParams { trotter_m: 10, beta: 10.0, ..SqaParams::default() };
        let c = sqa_coupling(0.0, &p);
        assert!(c.is_finite());
        assert!(c < -10.0);
        for k in 0..=100 {
            let a = 2.0 * (1.0 - k as f64 / 100.0);
            assert!(sqa_coupling(a, &p) <= 0.0);
        }
    }

    #[test]
    fn deterministic_and_sized() {
        let chain = build_chain(&PotentialSpec::washboard(1.0), &ChainParams::with_n(12)).unwrap();
        let p = SqaParams { t_mcs: 20, trotter_m: 8, beta: 8.0, ..SqaParams::default() };
        let a = sqa_run(&chain, &p, 5).unwrap();
        assert_eq!(a.samples.len(), 8);
        assert!(a.samples.iter().all(|c| c.len() == 12));
        assert_eq!(a, sqa_run(&chain, &p, 5).unwrap());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SqaParams { trotter_m: 1, ..SqaParams::default() }.validate().is_err());
        assert!(SqaParams { beta: 0.0, ..SqaParams::default() }.validate().is_err());
        assert!(SqaParams { a_floor: 0.0, ..SqaParams::default() }.validate().is_err());
    }

    #[test]
    fn random_order_is_seeded_and_distinct() {
        let chain = build_chain(&PotentialSpec::washboard(1.0), &ChainParams::with_n(12)).unwrap();
        let seq = SqaParams { t_mcs: 3, trotter_m: 8, beta: 8.0, ..SqaParams::default() };
        let rnd = SqaParams { order: SweepOrder::Random, ..seq };
        let a = sqa_run(&chain, &rnd, 5).unwrap();
        assert_eq!(a, sqa_run(&chain, &rnd, 5).unwrap());
        assert_ne!(a.samples, sqa_run(&chain, &seq, 5).unwrap().samples);
    }
}
