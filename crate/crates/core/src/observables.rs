//! Sample-batch metrics: kink density, constraint satisfaction, residual
//! energy, ground-state hits and decoded objective error, each with a
//! bootstrap standard error.

use std::collections::HashSet;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{kink_count, ChainInstance, SpinConfig};
use crate::error::{invalid, Error, Result};
use crate::potential::Objective;
use crate::exact::DEGENERACY_TOL;
use crate::rng;

/// Default number of bootstrap resamples.
pub const N_RESAMPLES: usize = 1000;

fn nonempty(batch: &[SpinConfig]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("sample batch"));
    }
    Ok(())
}

fn check_lengths(batch: &[SpinConfig], chain: &ChainInstance) -> Result<()> {
    match batch.iter().find(|c| c.len() != chain.n_spins) {
        Some(c) => Err(Error::LengthMismatch {
            expected: chain.n_spins,
            got: c.len(),
        }),
        None => Ok(()),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-sample kink density `(1/2N) Σ (1 − σ_i σ_{i+1})`.
pub fn sample_kink_density(config: &SpinConfig) -> f64 {
    kink_count(config) as f64 / config.len() as f64
}

pub fn kink_density(batch: &[SpinConfig]) -> Result<f64> {
    nonempty(batch)?;
    Ok(mean(&batch.iter().map(sample_kink_density).collect::<Vec<_>>()))
}

/// Fraction of correctly oriented single-wall samples.
pub fn constraint_probability(batch: &[SpinConfig], chain: &ChainInstance) -> Result<f64> {
    nonempty(batch)?;
    check_lengths(batch, chain)?;
    let hits = batch.iter().filter(|c| c.wall_position().is_some()).count();
    Ok(hits as f64 / batch.len() as f64)
}

/// `(mean energy − e0) / N` over every sample, constrained or not.
///
/// Excesses within [`DEGENERACY_TOL`] count as zero so a batch of ground
/// states scores exactly 0 rather than summation noise.
pub fn residual_energy(batch: &[SpinConfig], chain: &ChainInstance, e0: f64) -> Result<f64> {
    nonempty(batch)?;
    check_lengths(batch, chain)?;
    let excess: Vec<f64> = batch.iter().map(|c| energy_excess(chain, c, e0)).collect();
    Ok(mean(&excess) / chain.n_spins as f64)
}

fn energy_excess(chain: &ChainInstance, config: &SpinConfig, e0: f64) -> f64 {
    let d = chain.energy_unchecked(config.spins()) - e0;
    if d.abs() <= DEGENERACY_TOL {
        0.0
    } else {
        d
    }
}

pub fn ground_state_probability(batch: &[SpinConfig], ground_set: &[SpinConfig]) -> Result<f64> {
    nonempty(batch)?;
    if ground_set.is_empty() {
        return Err(Error::Empty("ground set"));
    }
    let set: HashSet<&SpinConfig> = ground_set.iter().collect();
    let hits = batch.iter().filter(|c| set.contains(c)).count();
    Ok(hits as f64 / batch.len() as f64)
}

/// `|mean V(x) − v0|` over the samples that decode; `None` when none do.
pub fn absolute_error_constrained(
    batch: &[SpinConfig],
    chain: &ChainInstance,
    objective: &dyn Objective,
    v0: f64,
) -> Result<Option<f64>> {
    check_lengths(batch, chain)?;
    let values: Vec<f64> = batch
        .iter()
        .filter_map(|c| c.wall_position())
        .map(|b| objective.value(chain.grid.points[b]))
        .collect();
    if values.is_empty() {
        return Ok(None);
    }
    Ok(Some((mean(&values) - v0).abs()))
}

/// Standard deviation of `statistic` over with-replacement resamples.
pub fn bootstrap_stderr(
    values: &[f64],
    statistic: impl Fn(&[f64]) -> f64,
    n_resamples: usize,
    seed: u64,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("bootstrap values"));
    }
    if n_resamples < 100 {
        return Err(invalid("n_resamples", format!("need >= 100, got {n_resamples}")));
    }
    let mut rng = rng::stream(seed, 0);
    let n = values.len();
    let mut buf = vec![0.0; n];
    let stats: Vec<f64> = (0..n_resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = values[rng.random_range(0..n)];
            }
            statistic(&buf)
        })
        .collect();
    let m = mean(&stats);
    let var = stats.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / (n_resamples - 1) as f64;
    Ok(var.sqrt())
}

fn mean_stderr(values: &[f64], n_resamples: usize, seed: u64) -> Result<f64> {
    bootstrap_stderr(values, mean, n_resamples, seed)
}

/// One curve point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub protocol: String,
    pub t_a_or_mcs: f64,
    pub rho: f64,
    pub rho_se: f64,
    pub p_const: f64,
    pub p_const_se: f64,
    pub e_res: f64,
    pub e_res_se: f64,
    pub p_gs: f64,
    pub p_gs_se: f64,
    pub e_abs: Option<f64>,
    pub e_abs_se: Option<f64>,
}

/// Everything needed to score a sample batch.
pub struct Scorer<'a> {
    pub chain: &'a ChainInstance,
    pub objective: &'a dyn Objective,
    pub e0: f64,
    pub ground_set: &'a [SpinConfig],
    pub n_resamples: usize,
}

impl Scorer<'_> {
    /// Record for a pooled batch; bootstrap streams are derived from `seed`.
    pub fn record(&self, protocol: &str, t: f64, batch: &[SpinConfig], seed: u64) -> Result<ObservableRecord> {
        nonempty(batch)?;
        check_lengths(batch, self.chain)?;
        let n = self.chain.n_spins as f64;
        let set: HashSet<&SpinConfig> = self.ground_set.iter().collect();
        let rho: Vec<f64> = batch.iter().map(sample_kink_density).collect();
        let cons: Vec<f64> = batch.iter().map(|c| indicator(c.wall_position().is_some())).collect();
        let eres: Vec<f64> = batch
            .iter()
            .map(|c| energy_excess(self.chain, c, self.e0) / n)
            .collect();
        let gs: Vec<f64> = batch.iter().map(|c| indicator(set.contains(c))).collect();
        let decoded: Vec<f64> = batch
            .iter()
            .filter_map(|c| c.wall_position())
            .map(|b| self.objective.value(self.chain.grid.points[b]))
            .collect();
        let se = |v: &[f64], k: u64| mean_stderr(v, self.n_resamples, rng::derive(seed, &[k]));
        let (e_abs, e_abs_se) = if decoded.is_empty() {
            (None, None)
        } else {
            let s = bootstrap_stderr(&decoded, |v| mean(v).abs(), self.n_resamples, rng::derive(seed, &[4]))?;
            (Some(mean(&decoded).abs()), Some(s))
        };
        Ok(ObservableRecord {
            protocol: protocol.to_string(),
            t_a_or_mcs: t,
            rho: mean(&rho),
            rho_se: se(&rho, 0)?,
            p_const: mean(&cons),
            p_const_se: se(&cons, 1)?,
            e_res: mean(&eres),
            e_res_se: se(&eres, 2)?,
            p_gs: mean(&gs),
            p_gs_se: se(&gs, 3)?,
            e_abs,
            e_abs_se,
        })
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Write records as CSV with a header row.
pub fn write_records<W: Write>(out: W, records: &[ObservableRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(input: R) -> Result<Vec<ObservableRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{build_chain, ChainParams};
    use crate::exact::{ground_state_dp, k_lowest_states};
    use crate::potential::PotentialSpec;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn chain(n: usize) -> ChainInstance {
        build_chain(&PotentialSpec::washboard(1.0), &ChainParams::with_n(n)).unwrap()
    }

    fn alternating(n: usize) -> SpinConfig {
        SpinConfig::new((0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()).unwrap()
    }

    #[test]
    fn kink_density_examples() {
        let n = 12;
        let walls: Vec<_> = (0..n - 1).map(|b| SpinConfig::single_wall(n, b)).collect();
        assert!((kink_density(&walls).unwrap() - 1.0 / n as f64).abs() < 1e-15);
        assert_eq!(kink_density(&[SpinConfig::all_up(n)]).unwrap(), 0.0);
        let alt = kink_density(&[alternating(n)]).unwrap();
        assert!((alt - (n - 1) as f64 / n as f64).abs() < 1e-15);
        assert!(kink_density(&[]).is_err());
    }

    #[test]
    fn constraint_examples() {
        let c = chain(12);
        let walls: Vec<_> = (0..11).map(|b| SpinConfig::single_wall(12, b)).collect();
        assert_eq!(constraint_probability(&walls, &c).unwrap(), 1.0);
        assert_eq!(constraint_probability(&[SpinConfig::all_up(12)], &c).unwrap(), 0.0);
        let mixed = vec![SpinConfig::single_wall(12, 3), SpinConfig::all_up(12)];
        assert_eq!(constraint_probability(&mixed, &c).unwrap(), 0.5);
        // inverted wall: up block then down block
        let flipped = SpinConfig::new(SpinConfig::single_wall(12, 3).spins().iter().map(|s| -s).collect()).unwrap();
        assert_eq!(constraint_probability(&[flipped], &c).unwrap(), 0.0);
    }

    #[test]
    fn residual_energy_examples() {
        let c = chain(12);
        let gs = ground_state_dp(&c);
        assert!(residual_energy(&gs.ground_set, &c, gs.e0).unwrap().abs() < 1e-12);
        let low = k_lowest_states(&c, 2).unwrap();
        let e = residual_energy(&[low[1].1.clone()], &c, gs.e0).unwrap();
        assert!((e - (low[1].0 - gs.e0) / 12.0).abs() < 1e-12);
    }

    #[test]
    fn ground_probability_counts() {
        let gs = vec![SpinConfig::single_wall(8, 3)];
        let mut batch = vec![SpinConfig::all_up(8); 750];
        batch.extend(vec![SpinConfig::single_wall(8, 3); 250]);
        assert_eq!(ground_state_probability(&batch, &gs).unwrap(), 0.25);
        assert_eq!(ground_state_probability(&gs, &gs).unwrap(), 1.0);
        assert!(ground_state_probability(&batch, &[]).is_err());
    }

    #[test]
    fn absolute_error_examples() {
        let spec = PotentialSpec::washboard(1.0);
        let c = build_chain(&spec, &ChainParams::with_n(61)).unwrap();
        let zero = c.encode(0.0).unwrap();
        assert_eq!(absolute_error_constrained(&[zero.clone()], &c, &spec, 0.0).unwrap(), Some(0.0));
        let at_w0 = c.encode(0.2).unwrap();
        let e = absolute_error_constrained(&[at_w0.clone()], &c, &spec, 0.0).unwrap().unwrap();
        assert!((e - 0.01).abs() < 1e-12);
        let mixed = [at_w0, SpinConfig::all_up(61)];
        let e = absolute_error_constrained(&mixed, &c, &spec, 0.0).unwrap().unwrap();
        assert!((e - 0.01).abs() < 1e-12);
        assert_eq!(absolute_error_constrained(&[SpinConfig::all_up(61)], &c, &spec, 0.0).unwrap(), None);
    }

    #[test]
    fn bootstrap_examples() {
        assert_eq!(bootstrap_stderr(&[2.0; 50], mean, 200, 1).unwrap(), 0.0);
        let mut r = rng::stream(9, 0);
        let draws: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut r)).collect();
        let se = bootstrap_stderr(&draws, mean, 1000, 3).unwrap();
        assert!((se - 0.01).abs() < 0.002, "{se}");
        assert_eq!(se, bootstrap_stderr(&draws, mean, 1000, 3).unwrap());
        assert!(bootstrap_stderr(&[], mean, 200, 1).is_err());
        assert!(bootstrap_stderr(&[1.0], mean, 99, 1).is_err());
    }

    #[test]
    fn records_round_trip_csv() {
        let c = chain(10);
        let spec = PotentialSpec::washboard(1.0);
        let gs = ground_state_dp(&c);
        let scorer = Scorer { chain: &c, objective: &spec, e0: gs.e0, ground_set: &gs.ground_set, n_resamples: 100 };
        let batch = vec![SpinConfig::single_wall(10, 4), SpinConfig::all_up(10)];
        let recs = vec![
            scorer.record("sa", 10.0, &batch, 1).unwrap(),
            scorer.record("sa", 20.0, &[SpinConfig::all_up(10)], 1).unwrap(),
        ];
        assert_eq!(recs[1].e_abs, None);
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("protocol,t_a_or_mcs,rho,rho_se,p_const,p_const_se,e_res,e_res_se,p_gs,p_gs_se"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), recs);
    }

    fn arb_batch(n: usize) -> impl Strategy<Value = Vec<SpinConfig>> {
        prop::collection::vec(
            prop::collection::vec(prop::bool::ANY, n)
                .prop_map(|b| SpinConfig::new(b.into_iter().map(|x| if x { 1 } else { -1 }).collect()).unwrap()),
            1..40,
        )
    }

    proptest! {
        #[test]
        fn one_kink_iff_density_one_over_n(batch in arb_batch(8)) {
            let rho = kink_density(&batch).unwrap();
            let all_one = batch.iter().all(|c| kink_count(c) == 1);
            prop_assert_eq!((rho - 1.0 / 8.0).abs() < 1e-15, all_one);
        }

        #[test]
        fn p_gs_bounded_by_p_const(mut batch in arb_batch(8), extra in 0usize..20) {
            let params = ChainParams { lambda: 0.2, ..ChainParams::with_n(8) };
            let c = build_chain(&PotentialSpec::washboard(1.0), &params).unwrap();
            let gs = ground_state_dp(&c);
            assert!(gs.ground_set.iter().all(|g| g.wall_position().is_some()));
            batch.extend(std::iter::repeat_n(gs.ground_set[0].clone(), extra));
            let pg = ground_state_probability(&batch, &gs.ground_set).unwrap();
            prop_assert!(pg <= constraint_probability(&batch, &c).unwrap());
        }

        #[test]
        fn residual_energy_matches_weighted_distinct(batch in arb_batch(10)) {
            let c = chain(10);
            let gs = ground_state_dp(&c);
            let mut counts = std::collections::BTreeMap::new();
            for s in &batch {
                *counts.entry(s.clone()).or_insert(0usize) += 1;
            }
            let total = batch.len() as f64;
            let weighted: f64 = counts.iter().map(|(s, &k)| k as f64 / total * c.energy(s).unwrap()).sum();
            let direct = residual_energy(&batch, &c, gs.e0).unwrap();
            prop_assert!((direct - (weighted - gs.e0) / 10.0).abs() < 1e-12);
            prop_assert!(direct >= -1e-12);
        }
    }
}
