//! Coherent annealing by time-evolving block decimation.
//!
//! The state is a matrix-product state in right-canonical form (`B` tensors
//! plus the Schmidt values on every bond), evolved under
//! `H(s) = s H_0 − (1 − s) Σ σ^x` with a second-order Trotter splitting into
//! even and odd two-site gates. Bond updates use the inverse-free
//! contraction of Hastings, so tiny Schmidt values never get divided by.
//! Time is measured in units of `1/J` with `ħ = 1`; a time of 1 corresponds
//! to roughly 0.026 ns on a device with `J` at its usual scale.

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::encoding::{ChainInstance, SpinConfig};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TebdParams {
    pub dt: f64,
    pub chi_max: usize,
    /// Schmidt values below this fraction of the bond norm are dropped.
    pub svd_cutoff: f64,
    pub t_a: f64,
}

impl Default for TebdParams {
    fn default() -> Self {
        Self {
            dt: 0.025,
            chi_max: 32,
            svd_cutoff: 1e-10,
            t_a: 10.0,
        }
    }
}

impl TebdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be > 0"));
        }
        if self.chi_max == 0 {
            return Err(invalid("chi_max", "must be >= 1"));
        }
        if !(self.svd_cutoff >= 0.0) {
            return Err(invalid("svd_cutoff", "must be >= 0"));
        }
        if !(self.t_a >= self.dt) {
            return Err(invalid("t_a", format!("t_a = {} is shorter than dt = {}", self.t_a, self.dt)));
        }
        Ok(())
    }

    /// Number of Trotter steps; the step is shrunk slightly so they tile `t_a`.
    pub fn n_steps(&self) -> usize {
        ((self.t_a / self.dt).round() as usize).max(1)
    }
}

/// One site tensor `B[a, s, b]` stored row-major, so the same buffer is both
/// the `(a s) × b` and the `a × (s b)` matrix.
#[derive(Debug, Clone, PartialEq)]
struct Site {
    left: usize,
    right: usize,
    data: Vec<c64>,
}

impl Site {
    fn at(&self, a: usize, s: usize, b: usize) -> c64 {
        self.data[(a * 2 + s) * self.right + b]
    }

    /// `B[:, s, :]` as a `left × right` view.
    fn slice(&self, s: usize) -> MatRef<'_, c64> {
        MatRef::from_row_major_slice_with_stride(
            &self.data[s * self.right..],
            self.left,
            self.right,
            2 * self.right,
        )
    }
}

/// Spin index inside a site tensor: 0 is `σ^z = −1`, 1 is `σ^z = +1`.
fn spin_index(s: i8) -> usize {
    usize::from(s > 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    sites: Vec<Site>,
    /// Schmidt values of bond `i` (between sites `i` and `i + 1`).
    schmidt: Vec<Vec<f64>>,
    right_canonical: bool,
    truncation_error: f64,
}

/// `(|↓⟩ + |↑⟩)/√2` on every site, the ground state of `−Σ σ^x`.
pub fn init_plus_state(n_spins: usize) -> Result<MpsState> {
    if n_spins < 2 {
        return Err(invalid("n_spins", "need at least 2 sites"));
    }
    let amp = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(MpsState {
        sites: vec![Site { left: 1, right: 1, data: vec![amp, amp] }; n_spins],
        schmidt: vec![vec![1.0]; n_spins - 1],
        right_canonical: true,
        truncation_error: 0.0,
    })
}

impl MpsState {
    /// Product state equal to a classical configuration.
    pub fn from_config(config: &SpinConfig) -> Result<Self> {
        let n = config.len();
        if n < 2 {
            return Err(invalid("config", "need at least 2 sites"));
        }
        let sites = config
            .spins()
            .iter()
            .map(|&s| {
                let mut data = vec![c64::new(0.0, 0.0); 2];
                data[spin_index(s)] = c64::new(1.0, 0.0);
                Site { left: 1, right: 1, data }
            })
            .collect();
        Ok(Self {
            sites,
            schmidt: vec![vec![1.0]; n - 1],
            right_canonical: true,
            truncation_error: 0.0,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.sites.len()
    }

    pub fn bond_dimensions(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.right).collect()
    }

    pub fn max_bond_dimension(&self) -> usize {
        self.bond_dimensions().into_iter().max().unwrap_or(1)
    }

    pub fn is_right_canonical(&self) -> bool {
        self.right_canonical
    }

    /// Sum of discarded Schmidt weight over all truncations so far.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    pub fn schmidt_values(&self, bond: usize) -> &[f64] {
        &self.schmidt[bond]
    }

    /// `⟨config|ψ⟩`.
    pub fn amplitude(&self, config: &SpinConfig) -> Result<c64> {
        if config.len() != self.n_spins() {
            return Err(Error::LengthMismatch { expected: self.n_spins(), got: config.len() });
        }
        let mut v = vec![c64::new(1.0, 0.0)];
        for (site, &s) in self.sites.iter().zip(config.spins()) {
            v = row_times(&v, site, spin_index(s));
        }
        Ok(v[0])
    }

    pub fn norm_squared(&self) -> f64 {
        let mut env = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
        for site in &self.sites {
            env = transfer_left(&env, site, [1.0, 1.0]);
        }
        env[(0, 0)].re
    }

    /// `L_i`: contraction of sites `0..i` with their conjugates.
    fn left_environments(&self) -> Vec<Mat<c64>> {
        let mut out = Vec::with_capacity(self.n_spins() + 1);
        out.push(Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0)));
        for site in &self.sites {
            let prev = out.last().unwrap();
            out.push(transfer_left(prev, site, [1.0, 1.0]));
        }
        out
    }

    /// `R_i`: contraction of sites `i..N` with their conjugates.
    fn right_environments(&self) -> Vec<Mat<c64>> {
        let n = self.n_spins();
        let mut out = vec![Mat::zeros(0, 0); n + 1];
        out[n] = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
        for i in (0..n).rev() {
            out[i] = transfer_right(&out[i + 1], &self.sites[i], [1.0, 1.0]);
        }
        out
    }

    /// `⟨σ^z_i⟩` for every site and `⟨σ^z_i σ^z_{i+1}⟩` for every bond.
    pub fn z_expectations(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_spins();
        let left = self.left_environments();
        let right = self.right_environments();
        let norm = left[n][(0, 0)].re;
        let z = [-1.0, 1.0];
        let contract = |l: &Mat<c64>, r: &Mat<c64>| -> f64 {
            let mut acc = c64::new(0.0, 0.0);
            for a in 0..l.nrows() {
                for b in 0..l.ncols() {
                    acc += l[(a, b)] * r[(a, b)];
                }
            }
            acc.re
        };
        let singles = (0..n)
            .map(|i| contract(&transfer_left(&left[i], &self.sites[i], z), &right[i + 1]) / norm)
            .collect();
        let pairs = (0..n - 1)
            .map(|i| {
                let l = transfer_left(&transfer_left(&left[i], &self.sites[i], z), &self.sites[i + 1], z);
                (contract(&l, &right[i + 2]) / norm).clamp(-1.0, 1.0)
            })
            .collect();
        (singles, pairs)
    }

    /// Apply one two-site gate on bond `(i, i + 1)` and truncate.
    fn apply_gate(&mut self, i: usize, gate: &[[c64; 4]; 4], params: &TebdParams) {
        let (bi, bj) = (&self.sites[i], &self.sites[i + 1]);
        let (chi_a, chi_c) = (bi.left, bj.right);
        let lhs = MatRef::from_row_major_slice(&bi.data, chi_a * 2, bi.right);
        let rhs = MatRef::from_row_major_slice(&bj.data, bj.left, 2 * chi_c);
        let t = lhs * rhs;
        let lam_prev: Vec<f64> = if i == 0 { vec![1.0] } else { self.schmidt[i - 1].clone() };

        // C = gate · T, and θ = λ_{i−1} C, both as (a s1) × (s2 c)
        let mut c = Mat::<c64>::zeros(chi_a * 2, 2 * chi_c);
        for a in 0..chi_a {
            for k in 0..chi_c {
                let v = [
                    t[(a * 2, k)],
                    t[(a * 2, chi_c + k)],
                    t[(a * 2 + 1, k)],
                    t[(a * 2 + 1, chi_c + k)],
                ];
                for (row, g) in gate.iter().enumerate() {
                    let out = g[0] * v[0] + g[1] * v[1] + g[2] * v[2] + g[3] * v[3];
                    let (s1, s2) = (row >> 1, row & 1);
                    c[(a * 2 + s1, s2 * chi_c + k)] = out;
                }
            }
        }
        let theta = Mat::from_fn(chi_a * 2, 2 * chi_c, |r, col| c[(r, col)] * lam_prev[r / 2]);
        let svd = theta.thin_svd().expect("SVD of a finite two-site tensor");
        let s: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();

        let total: f64 = s.iter().map(|x| x * x).sum();
        let scale = total.sqrt();
        let mut keep = s
            .iter()
            .take_while(|&&x| x > params.svd_cutoff * scale)
            .count()
            .clamp(1, params.chi_max);
        keep = keep.min(s.len());
        let kept: f64 = s[..keep].iter().map(|x| x * x).sum();
        self.truncation_error += (total - kept).max(0.0) / total;
        let kept_norm = kept.sqrt();

        let v = svd.V();
        let v_keep = v.subcols(0, keep);
        let new_i = &c * v_keep;
        let mut data_i = Vec::with_capacity(chi_a * 2 * keep);
        for r in 0..chi_a * 2 {
            for k in 0..keep {
                data_i.push(new_i[(r, k)] / kept_norm);
            }
        }
        let mut data_j = Vec::with_capacity(keep * 2 * chi_c);
        for k in 0..keep {
            for col in 0..2 * chi_c {
                data_j.push(v[(col, k)].conj());
            }
        }
        self.sites[i] = Site { left: chi_a, right: keep, data: data_i };
        self.sites[i + 1] = Site { left: keep, right: chi_c, data: data_j };
        self.schmidt[i] = s[..keep].iter().map(|x| x / kept_norm).collect();
    }

    /// Rescale the first tensor so `⟨ψ|ψ⟩ = 1`.
    fn renormalize(&mut self) {
        let norm = self.norm_squared().sqrt();
        if norm > 0.0 {
            for x in &mut self.sites[0].data {
                *x /= norm;
            }
        }
    }
}

/// `v · B[:, s, :]`.
fn row_times(v: &[c64], site: &Site, s: usize) -> Vec<c64> {
    let mut out = vec![c64::new(0.0, 0.0); site.right];
    for (a, &va) in v.iter().enumerate() {
        if va == c64::new(0.0, 0.0) {
            continue;
        }
        for (b, o) in out.iter_mut().enumerate() {
            *o += va * site.at(a, s, b);
        }
    }
    out
}

/// `B[:, s, :] · v`.
fn times_col(site: &Site, s: usize, v: &[c64]) -> Vec<c64> {
    (0..site.left)
        .map(|a| (0..site.right).map(|b| site.at(a, s, b) * v[b]).sum())
        .collect()
}

/// `Σ_s w_s B_sᵀ L B̄_s`; environments index `(ket, bra)`, `w_s = ±1`.
fn transfer_left(l: &Mat<c64>, site: &Site, w: [f64; 2]) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(site.right, site.right);
    for (s, &ws) in w.iter().enumerate() {
        let b = site.slice(s);
        let term = b.transpose() * l * b.conjugate();
        if ws > 0.0 {
            out += &term;
        } else {
            out -= &term;
        }
    }
    out
}

/// `Σ_s w_s B_s R B_s^†`.
fn transfer_right(r: &Mat<c64>, site: &Site, w: [f64; 2]) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(site.left, site.left);
    for (s, &ws) in w.iter().enumerate() {
        let b = site.slice(s);
        let term = b * r * b.adjoint();
        if ws > 0.0 {
            out += &term;
        } else {
            out -= &term;
        }
    }
    out
}

/// `exp(−iτ h)` for the real symmetric 4×4 bond Hamiltonian `h`, basis `|s1 s2⟩`.
fn bond_gate(h: &[[f64; 4]; 4], tau: f64) -> [[c64; 4]; 4] {
    let m = Mat::from_fn(4, 4, |r, c| h[r][c]);
    let eig = m.self_adjoint_eigen(Side::Lower).expect("eigendecomposition of a 4x4 symmetric matrix");
    let (u, d) = (eig.U(), eig.S().column_vector());
    let mut g = [[c64::new(0.0, 0.0); 4]; 4];
    for (r, row) in g.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            for k in 0..4 {
                let phase = c64::new(0.0, -tau * d[k]).exp();
                *x += phase * (u[(r, k)] * u[(c, k)]);
            }
        }
    }
    g
}

/// Two-site share of `s H_0 − (1 − s) Σ σ^x` on bond `(i, i + 1)`.
///
/// Interior sites split their field and transverse terms between their two
/// bonds; the chain ends keep their full single-site term on their only bond.
fn bond_hamiltonian(fields: &[f64], j: f64, i: usize, s: f64) -> [[f64; 4]; 4] {
    let n = fields.len();
    let w = |k: usize| if k == 0 || k == n - 1 { 1.0 } else { 0.5 };
    let (wi, wj) = (w(i), w(i + 1));
    let z = [-1.0, 1.0];
    let mut h = [[0.0; 4]; 4];
    for s1 in 0..2 {
        for s2 in 0..2 {
            let row = s1 * 2 + s2;
            h[row][row] = s * (-j * z[s1] * z[s2] + wi * fields[i] * z[s1] + wj * fields[i + 1] * z[s2]);
            // σ^x on the first and second spin
            h[row][(1 - s1) * 2 + s2] -= (1.0 - s) * wi;
            h[row][s1 * 2 + (1 - s2)] -= (1.0 - s) * wj;
        }
    }
    h
}

fn gate_product(a: &[[c64; 4]; 4], b: &[[c64; 4]; 4]) -> [[c64; 4]; 4] {
    let mut out = [[c64::new(0.0, 0.0); 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

type Layer = Vec<(usize, [[c64; 4]; 4])>;

/// Gates `exp(−iτ h(s))` on every bond of one parity, optionally followed by
/// a second `(s, τ)` on the same bonds, composed into one gate.
fn layer(fields: &[f64], j: f64, parity: usize, first: (f64, f64), then: Option<(f64, f64)>) -> Layer {
    (parity..fields.len() - 1)
        .step_by(2)
        .map(|i| {
            let g = bond_gate(&bond_hamiltonian(fields, j, i, first.0), first.1);
            let g = match then {
                Some((s, tau)) => gate_product(&bond_gate(&bond_hamiltonian(fields, j, i, s), tau), &g),
                None => g,
            };
            (i, g)
        })
        .collect()
}

fn apply_layer(state: &mut MpsState, gates: &Layer, params: &TebdParams) {
    for (i, g) in gates {
        state.apply_gate(*i, g, params);
    }
}

/// Anneal from the plus state at `s = 0` to `s = 1` over time `t_a`.
///
/// Each step of length `dt` applies half a step on even bonds, a full step
/// on odd bonds and another half step on even bonds, with the schedule
/// evaluated at the middle of the step. The trailing even half step of one
/// step and the leading one of the next act on the same bonds back to back,
/// so they are applied as a single composed gate.
pub fn tebd_anneal(chain: &ChainInstance, params: &TebdParams) -> Result<MpsState> {
    tebd_anneal_with(chain, params, |_, _| {})
}

/// [`tebd_anneal`] calling `observe(step, state)` once per step. Because of
/// the merged half steps, the observed state already includes the leading
/// even half step of the following step; only the final state is exact.
pub fn tebd_anneal_with(
    chain: &ChainInstance,
    params: &TebdParams,
    mut observe: impl FnMut(usize, &MpsState),
) -> Result<MpsState> {
    params.validate()?;
    // Parallelism comes from running independent anneals side by side.
    faer::set_global_parallelism(faer::Par::Seq);
    let fields = chain.site_fields();
    let j = chain.coupling_j;
    let steps = params.n_steps();
    let dt = params.t_a / steps as f64;
    let mid = |k: usize| (k as f64 + 0.5) / steps as f64;
    let mut state = init_plus_state(chain.n_spins)?;
    apply_layer(&mut state, &layer(&fields, j, 0, (mid(0), 0.5 * dt), None), params);
    for k in 0..steps {
        let s = mid(k);
        apply_layer(&mut state, &layer(&fields, j, 1, (s, dt), None), params);
        let next = (k + 1 < steps).then(|| (mid(k + 1), 0.5 * dt));
        apply_layer(&mut state, &layer(&fields, j, 0, (s, 0.5 * dt), next), params);
        state.renormalize();
        observe(k, &state);
    }
    Ok(state)
}

pub fn measure_bond_correlators(state: &MpsState) -> Vec<f64> {
    state.z_expectations().1
}

/// `|⟨config|ψ⟩|²` for a normalized state.
pub fn probability_of_config(state: &MpsState, config: &SpinConfig) -> Result<f64> {
    Ok(state.amplitude(config)?.norm_sqr())
}

/// Total weight of the correctly oriented single-wall configurations.
pub fn single_wall_probability(state: &MpsState) -> f64 {
    let n = state.n_spins();
    let (down, up) = (0, 1);
    // prefix[k] = row vector of sites 0..=k all down
    let mut prefix = Vec::with_capacity(n);
    let mut v = vec![c64::new(1.0, 0.0)];
    for site in &state.sites {
        v = row_times(&v, site, down);
        prefix.push(v.clone());
    }
    // suffix[k] = column vector of sites k.. all up
    let mut suffix = vec![Vec::new(); n + 1];
    suffix[n] = vec![c64::new(1.0, 0.0)];
    for k in (0..n).rev() {
        suffix[k] = times_col(&state.sites[k], up, &suffix[k + 1]);
    }
    (0..n - 1)
        .map(|b| {
            let amp: c64 = prefix[b].iter().zip(&suffix[b + 1]).map(|(x, y)| x * y).sum();
            amp.norm_sqr()
        })
        .sum()
}

pub fn ground_state_probability(state: &MpsState, ground_set: &[SpinConfig]) -> Result<f64> {
    ground_set.iter().map(|c| probability_of_config(state, c)).sum()
}

/// `⟨ψ|H_0|ψ⟩` from single-site and bond `σ^z` expectations.
pub fn energy_expectation(state: &MpsState, chain: &ChainInstance) -> Result<f64> {
    if state.n_spins() != chain.n_spins {
        return Err(Error::LengthMismatch { expected: chain.n_spins, got: state.n_spins() });
    }
    let (z, zz) = state.z_expectations();
    let fields = chain.site_fields();
    let field_part: f64 = fields.iter().zip(&z).map(|(f, z)| f * z).sum();
    let bond_part: f64 = zz.iter().sum();
    Ok(field_part - chain.coupling_j * bond_part)
}

/// Kink density `(1/2N) Σ (1 − ⟨σ^z_i σ^z_{i+1}⟩)`.
pub fn kink_density(state: &MpsState) -> f64 {
    let zz = measure_bond_correlators(state);
    zz.iter().map(|c| 1.0 - c).sum::<f64>() / (2.0 * state.n_spins() as f64)
}

/// The curve observables of one anneal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TebdPoint {
    pub t_a: f64,
    pub rho: f64,
    pub p_const: f64,
    pub e_res: f64,
    pub p_gs: f64,
    pub truncation_error: f64,
    pub max_bond: usize,
}

/// Anneal once and measure every curve observable against the exact ground data.
pub fn tebd_point(chain: &ChainInstance, params: &TebdParams, e0: f64, ground_set: &[SpinConfig]) -> Result<TebdPoint> {
    let state = tebd_anneal(chain, params)?;
    let energy = energy_expectation(&state, chain)?;
    Ok(TebdPoint {
        t_a: params.t_a,
        rho: kink_density(&state),
        p_const: single_wall_probability(&state),
        e_res: ((energy - e0) / chain.n_spins as f64).max(0.0),
        p_gs: ground_state_probability(&state, ground_set)?,
        truncation_error: state.truncation_error(),
        max_bond: state.max_bond_dimension(),
    })
}
