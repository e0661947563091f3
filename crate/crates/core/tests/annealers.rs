mod common;

use common::all_energies;
use dwopt::exact::ground_state_dp;
use dwopt::mc::{metropolis_walk, sa_run, sqa_run, svmc_run, SaParams, SqaParams, SvmcParams};
use dwopt::{build_chain, ChainParams, PotentialSpec};

fn small_chain(n: usize, lambda: f64) -> dwopt::ChainInstance {
    let params = ChainParams { lambda, ..ChainParams::with_n(n) };
    build_chain(&PotentialSpec::washboard(1.0), &params).unwrap()
}

fn bits(s: &[i8]) -> usize {
    s.iter().enumerate().fold(0, |acc, (i, &x)| if x == 1 { acc | 1 << i } else { acc })
}

#[test]
fn metropolis_equilibrates_to_boltzmann() {
    let chain = small_chain(12, 0.3);
    for temperature in [0.7, 1.5] {
        let energies = all_energies(&chain);
        let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = energies.iter().map(|e| (-(e - e0) / temperature).exp()).collect();
        let z: f64 = weights.iter().sum();
        let mut counts = vec![0u64; energies.len()];
        let (burn, sweeps) = (10_000, 2_000_000);
        let mut drift = 0.0f64;
        metropolis_walk(&chain, temperature, burn + sweeps, 5, |sweep, s, e| {
            if sweep >= burn {
                counts[bits(s)] += 1;
                drift = drift.max((e - energies[bits(s)]).abs());
            }
        });
        let tv: f64 = counts
            .iter()
            .zip(&weights)
            .map(|(&c, w)| (c as f64 / sweeps as f64 - w / z).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.02, "T={temperature}: TV {tv}");
        assert!(drift < 1e-9, "running energy drifted by {drift}");
    }
}

#[test]
fn slow_sa_finds_the_ground_state() {
    let params = ChainParams::with_n(24);
    let chain = build_chain(&PotentialSpec::washboard(0.2), &params).unwrap();
    let gs = ground_state_dp(&chain);
    let batch = sa_run(&chain, &SaParams { t_mcs: 5000, t0: 3.0, t1: 0.01, ..SaParams::default() }, 20, 1).unwrap();
    let hits = batch.samples.iter().filter(|s| gs.ground_set.contains(s)).count();
    assert!(hits >= 12, "{hits}/20 reads in the ground state");
}

#[test]
fn quantum_annealers_return_valid_batches() {
    let chain = small_chain(16, 1.0);
    let gs = ground_state_dp(&chain);
    let sqa = sqa_run(&chain, &SqaParams { t_mcs: 2000, trotter_m: 16, ..SqaParams::default() }, 2).unwrap();
    assert_eq!(sqa.samples.len(), 16);
    let svmc = svmc_run(&chain, &SvmcParams { t_mcs: 20_000, ..SvmcParams::default() }, 16, 3).unwrap();
    assert_eq!(svmc.samples.len(), 16);
    for batch in [&sqa, &svmc] {
        for s in &batch.samples {
            assert_eq!(s.len(), 16);
            assert!(chain.energy(s).unwrap() >= gs.e0 - 1e-9);
        }
        // a slow anneal on a short chain should mostly end on a single wall
        let walls = batch.samples.iter().filter(|s| s.wall_position().is_some()).count();
        assert!(walls >= 12, "{}: {walls}/16 single-wall samples", batch.protocol);
    }
}
