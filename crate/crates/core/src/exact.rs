//! Exact classical oracles for an encoded chain.
//!
//! Everything here exploits the open-chain structure: ground states and the
//! k lowest states come from dynamic programming over `(site, spin)`, and
//! thermal averages from a 2×2 transfer-matrix recursion carried out in the
//! log domain so arbitrarily low temperatures stay finite.

use std::cmp::Ordering;

use serde::Serialize;

use crate::encoding::{kink_count_slice, ChainInstance, SpinConfig};
use crate::error::{invalid, Error, Result};
use crate::schedule::Schedule;

/// Energies closer than this to `e0` count as ground states.
pub const DEGENERACY_TOL: f64 = 1e-9;

const SPINS: [i8; 2] = [-1, 1];

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub e0: f64,
    /// All configurations within [`DEGENERACY_TOL`] of `e0`, in lexicographic order.
    pub ground_set: Vec<SpinConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSummary {
    pub e0: f64,
    /// Lowest energy strictly above the ground manifold.
    pub e1: f64,
    pub ground_set: Vec<SpinConfig>,
    pub n_enc: usize,
}

/// The JSON view printed by the `exact` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub e0: f64,
    pub e1: f64,
    pub n_enc: usize,
    pub degeneracy: usize,
}

impl SpectrumSummary {
    pub fn report(&self) -> SpectrumReport {
        SpectrumReport {
            e0: self.e0,
            e1: self.e1,
            n_enc: self.n_enc,
            degeneracy: self.ground_set.len(),
        }
    }
}

/// Minimum prefix energy ending in each spin state, per site.
fn forward_minima(chain: &ChainInstance) -> Vec<[f64; 2]> {
    let f = chain.site_fields();
    let j = chain.coupling_j;
    let mut table = Vec::with_capacity(chain.n_spins);
    table.push([-f[0], f[0]]);
    for i in 1..chain.n_spins {
        let prev = table[i - 1];
        let mut row = [0.0; 2];
        for (k, &s) in SPINS.iter().enumerate() {
            row[k] = SPINS
                .iter()
                .zip(prev)
                .map(|(&sp, e)| e - j * (sp * s) as f64)
                .fold(f64::INFINITY, f64::min)
                + f[i] * s as f64;
        }
        table.push(row);
    }
    table
}

/// Exact ground energy and every degenerate ground configuration.
pub fn ground_state_dp(chain: &ChainInstance) -> GroundState {
    let n = chain.n_spins;
    let f = chain.site_fields();
    let j = chain.coupling_j;
    let table = forward_minima(chain);
    let e0 = table[n - 1][0].min(table[n - 1][1]);
    let limit = e0 + DEGENERACY_TOL;

    // Walk back from the last site keeping every branch that can still reach e0.
    let mut ground_set = Vec::new();
    let mut spins = vec![0i8; n];
    let mut stack: Vec<(usize, usize, f64)> = Vec::new();
    for k in 0..2 {
        if table[n - 1][k] <= limit {
            stack.push((n - 1, k, 0.0));
        }
    }
    while let Some((i, k, suffix)) = stack.pop() {
        spins[i] = SPINS[k];
        if i == 0 {
            ground_set.push(SpinConfig::from_raw(spins.clone()));
            continue;
        }
        let here = suffix + f[i] * SPINS[k] as f64;
        for kp in 0..2 {
            let bond = -j * (SPINS[kp] * SPINS[k]) as f64;
            let suffix_prev = here + bond;
            if table[i - 1][kp] + suffix_prev <= limit {
                stack.push((i - 1, kp, suffix_prev));
            }
        }
    }
    ground_set.sort();
    GroundState { e0, ground_set }
}

#[derive(Debug, Clone, Copy)]
struct Partial {
    energy: f64,
    prev_spin: u8,
    prev_rank: u32,
}

/// Rebuild the prefix ending at `(site, spin, rank)`.
fn prefix(table: &[[Vec<Partial>; 2]], site: usize, spin: usize, rank: usize) -> Vec<i8> {
    let mut out = vec![0i8; site + 1];
    let (mut k, mut r) = (spin, rank);
    for i in (0..=site).rev() {
        out[i] = SPINS[k];
        if i > 0 {
            let p = table[i][k][r];
            k = p.prev_spin as usize;
            r = p.prev_rank as usize;
        }
    }
    out
}

/// Order candidates by energy, breaking exact ties lexicographically.
fn compare_candidates(
    table: &[[Vec<Partial>; 2]],
    site: usize,
    a: (f64, usize, usize),
    b: (f64, usize, usize),
) -> Ordering {
    match a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal) {
        Ordering::Equal if a.1 != b.1 => {
            prefix(table, site, a.1, a.2).cmp(&prefix(table, site, b.1, b.2))
        }
        Ordering::Equal => a.2.cmp(&b.2),
        other => other,
    }
}

/// Merge the two per-spin lists of the previous site into the `m` best
/// candidates `(energy, prev_spin, prev_rank)` with the extra energy `add[k]`.
fn merge_best(
    table: &[[Vec<Partial>; 2]],
    site: usize,
    add: [f64; 2],
    m: usize,
) -> Vec<Partial> {
    let lists = &table[site];
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut out = Vec::with_capacity(m.min(lists[0].len() + lists[1].len()));
    while out.len() < m && (ia < lists[0].len() || ib < lists[1].len()) {
        let take_a = if ia >= lists[0].len() {
            false
        } else if ib >= lists[1].len() {
            true
        } else {
            let a = (lists[0][ia].energy + add[0], 0, ia);
            let b = (lists[1][ib].energy + add[1], 1, ib);
            compare_candidates(table, site, a, b) != Ordering::Greater
        };
        let (k, r) = if take_a { (0, ia) } else { (1, ib) };
        out.push(Partial {
            energy: lists[k][r].energy + add[k],
            prev_spin: k as u8,
            prev_rank: r as u32,
        });
        if take_a {
            ia += 1;
        } else {
            ib += 1;
        }
    }
    out
}

fn check_state_count(n: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(invalid("m", "must request at least one state"));
    }
    if n < 127 && (m as u128) > (1u128 << n) {
        return Err(Error::TooManyStates {
            requested: m as u128,
            available: 1u128 << n,
        });
    }
    Ok(())
}

/// The `m` lowest-energy configurations, nondecreasing in energy; exact
/// ties are ordered lexicographically (down before up, site 0 first).
///
/// Keeps the `m` best partial energies per `(site, spin)`: memory `O(N m)`.
pub fn k_lowest_states(chain: &ChainInstance, m: usize) -> Result<Vec<(f64, SpinConfig)>> {
    let n = chain.n_spins;
    check_state_count(n, m)?;
    let f = chain.site_fields();
    let j = chain.coupling_j;

    let mut table: Vec<[Vec<Partial>; 2]> = Vec::with_capacity(n);
    let seed = |k: usize| {
        vec![Partial {
            energy: f[0] * SPINS[k] as f64,
            prev_spin: 0,
            prev_rank: 0,
        }]
    };
    table.push([seed(0), seed(1)]);
    for i in 1..n {
        let mut row: [Vec<Partial>; 2] = [Vec::new(), Vec::new()];
        for (k, &s) in SPINS.iter().enumerate() {
            let add = [
                -j * (SPINS[0] * s) as f64 + f[i] * s as f64,
                -j * (SPINS[1] * s) as f64 + f[i] * s as f64,
            ];
            row[k] = merge_best(&table, i - 1, add, m);
        }
        table.push(row);
    }

    // Final merge across the two end spins.
    let last = &table[n - 1];
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut states = Vec::with_capacity(m);
    while states.len() < m && (ia < last[0].len() || ib < last[1].len()) {
        let take_a = if ia >= last[0].len() {
            false
        } else if ib >= last[1].len() {
            true
        } else {
            let a = (last[0][ia].energy, 0, ia);
            let b = (last[1][ib].energy, 1, ib);
            compare_candidates(&table, n - 1, a, b) != Ordering::Greater
        };
        let (k, r) = if take_a { (0, ia) } else { (1, ib) };
        states.push((last[k][r].energy, SpinConfig::from_raw(prefix(&table, n - 1, k, r))));
        if take_a {
            ia += 1;
        } else {
            ib += 1;
        }
    }
    Ok(states)
}

/// Index of the lowest level whose configuration does not have exactly one kink.
pub fn compute_n_enc(chain: &ChainInstance) -> usize {
    let n = chain.n_spins;
    // At most 2(N-1) configurations have a single kink.
    let mut m = 2 * (n - 1) + 1;
    if n < 63 {
        m = m.min(1usize << n);
    }
    let states = k_lowest_states(chain, m).expect("state count within bounds");
    states
        .iter()
        .position(|(_, c)| kink_count_slice(c.spins()) != 1)
        .unwrap_or(states.len())
}

pub fn spectrum_summary(chain: &ChainInstance) -> SpectrumSummary {
    let gs = ground_state_dp(chain);
    let n = chain.n_spins;
    let mut m = gs.ground_set.len() + 1;
    if n < 63 {
        m = m.min(1usize << n);
    }
    let states = k_lowest_states(chain, m).expect("state count within bounds");
    let e1 = states
        .iter()
        .map(|(e, _)| *e)
        .find(|&e| e > gs.e0 + DEGENERACY_TOL)
        .unwrap_or(f64::NAN);
    SpectrumSummary {
        e0: gs.e0,
        e1,
        ground_set: gs.ground_set,
        n_enc: compute_n_enc(chain),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalPoint {
    pub temperature: f64,
    pub internal_energy: f64,
    /// Boltzmann weight of the ground manifold.
    pub p_gs: f64,
    /// Boltzmann weight of the correctly oriented single-wall states.
    pub p_const: f64,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Cached pieces for repeated thermal evaluations of one chain.
#[derive(Debug, Clone)]
pub struct ThermalModel<'a> {
    chain: &'a ChainInstance,
    site_fields: Vec<f64>,
    ground_energies: Vec<f64>,
    wall_energies: Vec<f64>,
    pub e0: f64,
}

impl<'a> ThermalModel<'a> {
    pub fn new(chain: &'a ChainInstance) -> Self {
        let gs = ground_state_dp(chain);
        let ground_energies = gs
            .ground_set
            .iter()
            .map(|c| chain.energy_unchecked(c.spins()))
            .collect();
        Self {
            chain,
            site_fields: chain.site_fields(),
            ground_energies,
            wall_energies: chain.single_wall_energies(),
            e0: gs.e0,
        }
    }

    /// `(ln Z, ⟨E⟩)` at inverse temperature `beta`.
    fn log_partition(&self, beta: f64) -> (f64, f64) {
        let f = &self.site_fields;
        let j = self.chain.coupling_j;
        // log weight and conditional mean energy of prefixes ending in each spin
        let mut lw = [beta * f[0], -beta * f[0]];
        let mut mean = [-f[0], f[0]];
        for &fi in &f[1..] {
            let mut next_lw = [0.0; 2];
            let mut next_mean = [0.0; 2];
            for (k, &s) in SPINS.iter().enumerate() {
                let de = [
                    -j * (SPINS[0] * s) as f64 + fi * s as f64,
                    -j * (SPINS[1] * s) as f64 + fi * s as f64,
                ];
                let a = lw[0] - beta * de[0];
                let b = lw[1] - beta * de[1];
                // normalize explicitly so the mean stays an exact convex combination
                let top = a.max(b);
                let (wa, wb) = ((a - top).exp(), (b - top).exp());
                let sum = wa + wb;
                next_lw[k] = top + sum.ln();
                next_mean[k] = (wa * (mean[0] + de[0]) + wb * (mean[1] + de[1])) / sum;
            }
            lw = next_lw;
            mean = next_mean;
        }
        let ln_z = log_sum_exp(lw[0], lw[1]);
        let top = lw[0].max(lw[1]);
        let (wa, wb) = ((lw[0] - top).exp(), (lw[1] - top).exp());
        let energy = (wa * mean[0] + wb * mean[1]) / (wa + wb);
        (ln_z, energy)
    }

    pub fn internal_energy(&self, temperature: f64) -> f64 {
        self.log_partition(1.0 / temperature).1
    }

    pub fn point(&self, temperature: f64) -> Result<ThermalPoint> {
        if !(temperature > 0.0) {
            return Err(invalid("temperature", format!("must be > 0, got {temperature}")));
        }
        let beta = 1.0 / temperature;
        let (ln_z, energy) = self.log_partition(beta);
        let weight = |e: f64| (-beta * e - ln_z).exp();
        let p_gs = self.ground_energies.iter().map(|&e| weight(e)).sum::<f64>();
        let p_const = self.wall_energies.iter().map(|&e| weight(e)).sum::<f64>();
        Ok(ThermalPoint {
            temperature,
            internal_energy: energy,
            p_gs: p_gs.min(1.0),
            p_const: p_const.min(1.0),
        })
    }
}

pub fn thermal_point(chain: &ChainInstance, temperature: f64) -> Result<ThermalPoint> {
    ThermalModel::new(chain).point(temperature)
}

pub const T_BRACKET: (f64, f64) = (1e-6, 1e4);

/// Solve `E(T) = e_measured` for `T` by bisection in `ln T` over [`T_BRACKET`].
pub fn effective_temperature(chain: &ChainInstance, e_measured: f64) -> Result<f64> {
    ThermalModel::new(chain).effective_temperature(e_measured)
}

impl ThermalModel<'_> {
    pub fn effective_temperature(&self, e_measured: f64) -> Result<f64> {
        let (t_lo, t_hi) = T_BRACKET;
        if !(e_measured > self.e0) {
            return Err(Error::Unattainable {
                target: e_measured,
                reason: format!("at or below the ground energy {}", self.e0),
            });
        }
        let e_hi = self.internal_energy(t_hi);
        if !(e_measured < e_hi) {
            return Err(Error::Unattainable {
                target: e_measured,
                reason: format!("at or above the high-temperature mean energy {e_hi} (T = {t_hi})"),
            });
        }
        let e_lo = self.internal_energy(t_lo);
        if e_measured < e_lo {
            return Err(Error::Unattainable {
                target: e_measured,
                reason: format!("below E(T = {t_lo}) = {e_lo}"),
            });
        }
        let tol = 1e-9 * self.chain.n_spins as f64;
        let (mut lo, mut hi) = (t_lo.ln(), t_hi.ln());
        let mut t = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            t = mid.exp();
            let e = self.internal_energy(t);
            if e == e_measured || hi - lo < 1e-15 {
                break;
            }
            if e < e_measured {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let residual = (self.internal_energy(t) - e_measured).abs();
        if residual > tol {
            return Err(Error::Unattainable {
                target: e_measured,
                reason: format!("bisection stalled with |E(T) - E| = {residual}"),
            });
        }
        Ok(t)
    }
}

/// Solve `2 T_phys / B(s) = T_eff` for the freeze-out point `s* ∈ (0, 1]`.
///
/// `B` must be increasing on `[0, 1]`.
pub fn freeze_out(t_eff: f64, schedule: &dyn Schedule, t_phys: f64) -> Result<f64> {
    if !(t_eff > 0.0) || !(t_phys > 0.0) {
        return Err(invalid("t_eff", "temperatures must be positive"));
    }
    let target = 2.0 * t_phys / t_eff;
    let b1 = schedule.b(1.0);
    if !(b1 > 0.0) {
        return Err(Error::NoFreezeOut(format!("B(1) = {b1} is not positive")));
    }
    if target > b1 {
        return Err(Error::NoFreezeOut(format!(
            "T_eff = {t_eff} is below 2 T_phys / B(1) = {}",
            2.0 * t_phys / b1
        )));
    }
    if schedule.b(0.0) >= target {
        return Err(Error::NoFreezeOut(format!(
            "B(0) = {} already reaches 2 T_phys / T_eff = {target}",
            schedule.b(0.0)
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        let b = schedule.b(mid);
        if b == target {
            return Ok(mid);
        }
        if b < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffTempResult {
    pub t_eff: f64,
    pub s_star: f64,
    pub t_phys: f64,
}

/// Effective temperature of a measured mean energy and the matching freeze-out point.
pub fn estimate_freeze_out(
    chain: &ChainInstance,
    e_measured: f64,
    schedule: &dyn Schedule,
    t_phys: f64,
) -> Result<EffTempResult> {
    let t_eff = effective_temperature(chain, e_measured)?;
    let s_star = freeze_out(t_eff, schedule, t_phys)?;
    Ok(EffTempResult { t_eff, s_star, t_phys })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{build_chain, ChainParams, FieldMode};
    use crate::potential::PotentialSpec;
    use crate::schedule::{Linear, Tabulated};

    fn penalty5() -> ChainInstance {
        let params = ChainParams {
            n_spins: 5,
            lambda: 0.0,
            ..ChainParams::default()
        };
        build_chain(&PotentialSpec::washboard(1.0), &params).unwrap()
    }

    fn default_instance(h0: f64) -> ChainInstance {
        build_chain(&PotentialSpec::washboard(h0), &ChainParams::default()).unwrap()
    }

    fn brute(chain: &ChainInstance) -> Vec<(f64, SpinConfig)> {
        let n = chain.n_spins;
        let mut all: Vec<(f64, SpinConfig)> = (0..1u64 << n)
            .map(|b| {
                let c = SpinConfig::from_bits(b, n);
                (chain.energy(&c).unwrap(), c)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
        all
    }

    #[test]
    fn penalty_ground_manifold() {
        let chain = penalty5();
        let gs = ground_state_dp(&chain);
        assert_eq!(gs.e0, -6.0);
        assert_eq!(gs.ground_set.len(), 4);
        assert!(gs.ground_set.iter().all(|c| c.wall_position().is_some()));
    }

    #[test]
    fn penalty_k_lowest() {
        let chain = penalty5();
        let states = k_lowest_states(&chain, 5).unwrap();
        assert!(states[..4].iter().all(|(e, c)| *e == -6.0 && c.wall_position().is_some()));
        assert_eq!(states[4].0, -4.0);
        let bf = brute(&chain);
        for (a, b) in states.iter().zip(&bf) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn first_state_is_a_ground_state() {
        let chain = default_instance(1.0);
        let gs = ground_state_dp(&chain);
        let first = k_lowest_states(&chain, 1).unwrap();
        assert_eq!(first[0].0, gs.e0);
        assert!(gs.ground_set.contains(&first[0].1));
    }

    #[test]
    fn default_ground_set_contains_centre_wall() {
        let chain = default_instance(1.0);
        let gs = ground_state_dp(&chain);
        assert!(gs.ground_set.contains(&SpinConfig::single_wall(211, 105)));
        // the neighbouring wall differs only by the zero-field spin
        assert!(gs.ground_set.contains(&SpinConfig::single_wall(211, 104)));
        assert_eq!(gs.ground_set.len(), 2);
    }

    #[test]
    fn n_enc_penalty_chain() {
        assert_eq!(compute_n_enc(&penalty5()), 4);
    }

    #[test]
    fn n_enc_decreases_with_barrier() {
        let values: Vec<usize> = [0.2, 1.0, 3.0].iter().map(|&h| compute_n_enc(&default_instance(h))).collect();
        assert!(values.windows(2).all(|w| w[0] >= w[1]), "{values:?}");
    }

    #[test]
    fn rejects_too_many_states() {
        assert!(k_lowest_states(&penalty5(), 33).is_err());
        assert!(k_lowest_states(&penalty5(), 0).is_err());
        assert_eq!(k_lowest_states(&penalty5(), 32).unwrap().len(), 32);
    }

    #[test]
    fn thermal_low_temperature_limit() {
        let chain = default_instance(1.0);
        let p = thermal_point(&chain, 1e-5).unwrap();
        let gs = ground_state_dp(&chain);
        assert!((p.internal_energy - gs.e0).abs() < 1e-9, "{} {}", p.internal_energy, gs.e0);
        assert!((p.p_gs - 1.0).abs() < 1e-12);
        assert!((p.p_const - 1.0).abs() < 1e-12);
        assert!(thermal_point(&chain, 0.0).is_err());
        assert!(thermal_point(&chain, -1.0).is_err());
    }

    #[test]
    fn thermal_high_temperature_limit() {
        let params = ChainParams {
            n_spins: 10,
            ..ChainParams::default()
        };
        let chain = build_chain(&PotentialSpec::washboard(1.0), &params).unwrap();
        let mean = brute(&chain).iter().map(|(e, _)| e).sum::<f64>() / 1024.0;
        let hot = thermal_point(&chain, 1e8).unwrap().internal_energy;
        assert!((hot - mean).abs() < 1e-5);
    }

    #[test]
    fn energy_is_monotone_in_temperature() {
        let chain = default_instance(3.0);
        let model = ThermalModel::new(&chain);
        let ladder: Vec<f64> = (0..60).map(|k| 1e-3 * 1.25f64.powi(k)).collect();
        let energies: Vec<f64> = ladder.iter().map(|&t| model.internal_energy(t)).collect();
        assert!(energies.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn effective_temperature_round_trip() {
        let chain = default_instance(1.0);
        let model = ThermalModel::new(&chain);
        let e = model.internal_energy(0.7);
        let t = model.effective_temperature(e).unwrap();
        assert!((t - 0.7).abs() < 1e-6);
        assert!(model.effective_temperature(model.e0).is_err());
        assert!(model.effective_temperature(model.e0 - 1.0).is_err());
        assert!(model.effective_temperature(1e9).is_err());
    }

    #[test]
    fn freeze_out_linear() {
        assert_eq!(freeze_out(4.0, &Linear, 1.0).unwrap(), 0.25);
        assert_eq!(freeze_out(1.0, &Linear, 1.0).unwrap(), 1.0);
        assert!(freeze_out(0.5, &Linear, 1.0).is_err());
    }

    #[test]
    fn freeze_out_tabulated_matches_scan() {
        let s: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let b: Vec<f64> = s.iter().map(|&x| 0.1 + 3.0 * x * x + x).collect();
        let a: Vec<f64> = s.iter().map(|&x| 2.0 * (1.0 - x)).collect();
        let sched = Tabulated::new(s, a, b).unwrap();
        let (t_phys, t_eff) = (0.3, 0.5);
        let got = freeze_out(t_eff, &sched, t_phys).unwrap();
        // dense scan of the interpolated schedule
        let target = 2.0 * t_phys / t_eff;
        let steps = 2_000_000;
        let scan = (0..=steps)
            .map(|k| k as f64 / steps as f64)
            .find(|&x| sched.b(x) >= target)
            .unwrap();
        assert!((got - scan).abs() < 1e-6);
    }

    #[test]
    fn exact_difference_mode_also_works() {
        let params = ChainParams {
            field_mode: FieldMode::ExactDifference,
            ..ChainParams::default()
        };
        let chain = build_chain(&PotentialSpec::washboard(1.0), &params).unwrap();
        let s = spectrum_summary(&chain);
        assert!(s.e1 > s.e0);
        assert!(s.n_enc > 0);
    }
}
