//! Independent oracles shared by the integration tests and the acceptance gate.
//!
//! Everything here recomputes from the raw chain data (`fields`, `lambda`,
//! `J`, `h`) without calling the library's own energy or transfer-matrix code.

#![allow(dead_code)]

use dwopt::encoding::ChainFile;
use dwopt::{ChainInstance, FieldMode, SpinConfig};
use faer::c64;
use rand::Rng;

pub fn spins_of(bits: u64, n: usize) -> Vec<i8> {
    (0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect()
}

/// `λ Σ h_i σ_i − J Σ σ_i σ_{i+1} + h (σ_1 − σ_N)`.
pub fn brute_energy(chain: &ChainInstance, s: &[i8]) -> f64 {
    let n = s.len();
    let mut e = 0.0;
    for i in 0..n {
        e += chain.lambda * chain.fields[i] * s[i] as f64;
    }
    for i in 0..n - 1 {
        e -= chain.coupling_j * (s[i] * s[i + 1]) as f64;
    }
    e + chain.boundary_h * (s[0] as f64 - s[n - 1] as f64)
}

/// Energy of every basis state, indexed by the bit pattern (bit `i` set = site `i` up).
pub fn all_energies(chain: &ChainInstance) -> Vec<f64> {
    let n = chain.n_spins;
    (0..1u64 << n).map(|b| brute_energy(chain, &spins_of(b, n))).collect()
}

/// Down on sites `0..k`, up on the rest, for some `1 ≤ k ≤ N − 1`.
pub fn is_oriented_single_wall(s: &[i8]) -> bool {
    let k = s.iter().take_while(|&&x| x == -1).count();
    k >= 1 && k < s.len() && s[k..].iter().all(|&x| x == 1)
}

pub struct BruteThermal {
    pub internal_energy: f64,
    pub p_gs: f64,
    pub p_const: f64,
}

pub fn brute_thermal(chain: &ChainInstance, temperature: f64, ground_tol: f64) -> BruteThermal {
    let n = chain.n_spins;
    let energies = all_energies(chain);
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let beta = 1.0 / temperature;
    let (mut z, mut ez, mut gs, mut wall) = (0.0, 0.0, 0.0, 0.0);
    for (b, &e) in energies.iter().enumerate() {
        let w = (-beta * (e - e0)).exp();
        z += w;
        ez += w * e;
        if e <= e0 + ground_tol {
            gs += w;
        }
        if is_oriented_single_wall(&spins_of(b as u64, n)) {
            wall += w;
        }
    }
    BruteThermal { internal_energy: ez / z, p_gs: gs / z, p_const: wall / z }
}

/// Random chain with independent fields and couplings satisfying `h > J`.
pub fn random_chain(rng: &mut impl Rng, n: usize) -> ChainInstance {
    let coupling_j = rng.random_range(0.5..1.5);
    ChainFile {
        n,
        lambda: rng.random_range(0.0..2.0),
        coupling_j,
        boundary_h: coupling_j + rng.random_range(0.1..2.0),
        fields: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        x_min: -3.0,
        x_max: 3.0,
        field_mode: FieldMode::Gradient,
    }
    .into_chain()
    .unwrap()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

/// Dense state vector indexed like [`spins_of`].
pub struct Dense {
    pub n: usize,
    pub psi: Vec<c64>,
}

impl Dense {
    pub fn amplitude(&self, config: &SpinConfig) -> c64 {
        let bits = config
            .spins()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &s)| if s == 1 { acc | 1 << i } else { acc });
        self.psi[bits]
    }

    pub fn expectation_diag(&self, diag: &[f64]) -> f64 {
        self.psi.iter().zip(diag).map(|(a, e)| a.norm_sqr() * e).sum()
    }

    pub fn probability(&self, config: &SpinConfig) -> f64 {
        self.amplitude(config).norm_sqr()
    }
}

/// `H(s) ψ` with `H(s) = s H_0 − (1 − s) Σ σ^x_i`.
fn apply_h(diag: &[f64], n: usize, s: f64, psi: &[c64], out: &mut [c64]) {
    for (b, o) in out.iter_mut().enumerate() {
        let mut x = c64::new(0.0, 0.0);
        for i in 0..n {
            x += psi[b ^ (1 << i)];
        }
        *o = psi[b] * (s * diag[b]) - x * (1.0 - s);
    }
}

/// Integrate `i dψ/dt = H(t/t_a) ψ` from the uniform superposition with classical RK4.
pub fn dense_anneal(chain: &ChainInstance, t_a: f64, dt: f64) -> Dense {
    let n = chain.n_spins;
    let dim = 1usize << n;
    let diag = all_energies(chain);
    let mut psi = vec![c64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
    let steps = (t_a / dt).ceil() as usize;
    let h = t_a / steps as f64;
    let minus_i = c64::new(0.0, -1.0);
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![c64::new(0.0, 0.0); dim], vec![c64::new(0.0, 0.0); dim], vec![c64::new(0.0, 0.0); dim], vec![c64::new(0.0, 0.0); dim]);
    let mut tmp = vec![c64::new(0.0, 0.0); dim];
    for k in 0..steps {
        let t = k as f64 * h;
        let s = |t: f64| t / t_a;
        apply_h(&diag, n, s(t), &psi, &mut k1);
        for b in 0..dim {
            tmp[b] = psi[b] + k1[b] * minus_i * (0.5 * h);
        }
        apply_h(&diag, n, s(t + 0.5 * h), &tmp, &mut k2);
        for b in 0..dim {
            tmp[b] = psi[b] + k2[b] * minus_i * (0.5 * h);
        }
        apply_h(&diag, n, s(t + 0.5 * h), &tmp, &mut k3);
        for b in 0..dim {
            tmp[b] = psi[b] + k3[b] * minus_i * h;
        }
        apply_h(&diag, n, s(t + h), &tmp, &mut k4);
        for b in 0..dim {
            psi[b] += (k1[b] + k2[b] * 2.0 + k3[b] * 2.0 + k4[b]) * minus_i * (h / 6.0);
        }
    }
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut psi {
        *a /= norm;
    }
    Dense { n, psi }
}
