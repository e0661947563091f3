//! Domain-wall codec.
//!
//! A value `x_b` of the grid is represented by the chain state whose sites
//! `0..=b` point down and whose sites `b+1..N` point up. The chain energy is
//!
//! ```text
//! E(σ) = λ Σ h_i σ_i − J Σ σ_i σ_{i+1} + h (σ_1 − σ_N)
//! ```
//!
//! where the problem fields `h_i` telescope the potential over the grid and
//! the end fields `±h` pin the wall orientation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::potential::{Grid, Objective, PotentialSpec};

/// How the interior problem fields are derived from the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// `h_i = −(Δx/2) V′(x_i)`: the first-order gradient form.
    #[default]
    Gradient,
    /// `h_i = −(V(x_i) − V(x_{i−1}))/2`: single-wall energies reproduce `V` exactly.
    ExactDifference,
}

/// Chain-level parameters for [`build_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub n_spins: usize,
    pub lambda: f64,
    pub coupling_j: f64,
    pub boundary_h: f64,
    #[serde(default)]
    pub field_mode: FieldMode,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            n_spins: 211,
            lambda: 1.0,
            coupling_j: 1.0,
            boundary_h: 2.0,
            field_mode: FieldMode::Gradient,
        }
    }
}

impl ChainParams {
    pub fn with_n(n_spins: usize) -> Self {
        Self {
            n_spins,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins < 3 {
            return Err(invalid("n_spins", format!("need >= 3, got {}", self.n_spins)));
        }
        if !(self.coupling_j > 0.0) {
            return Err(invalid("coupling_j", format!("must be > 0, got {}", self.coupling_j)));
        }
        if !(self.boundary_h > self.coupling_j) {
            return Err(invalid(
                "boundary_h",
                format!(
                    "end field h = {} must exceed the coupling J = {}",
                    self.boundary_h, self.coupling_j
                ),
            ));
        }
        if !(self.lambda >= 0.0) {
            return Err(invalid("lambda", format!("must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// An Ising chain encoding a one-dimensional objective. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInstance {
    pub n_spins: usize,
    /// Problem fields `h_i`, not yet multiplied by `lambda`.
    pub fields: Vec<f64>,
    pub coupling_j: f64,
    pub boundary_h: f64,
    pub lambda: f64,
    pub grid: Grid,
    pub field_mode: FieldMode,
}

/// A classical spin configuration with entries in `{-1, +1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(invalid("spins", format!("entries must be ±1, found {bad}")));
        }
        Ok(Self(spins))
    }

    pub(crate) fn from_raw(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        Self(spins)
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn all_down(n: usize) -> Self {
        Self(vec![-1; n])
    }

    /// Sites `0..=bond` down, the rest up.
    pub fn single_wall(n: usize, bond: usize) -> Self {
        assert!(bond + 1 < n, "bond {bond} out of range for {n} spins");
        Self((0..n).map(|i| if i <= bond { -1 } else { 1 }).collect())
    }

    /// Bit `i` of `bits` set means site `i` points up.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self((0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    /// `+`/`-` string, one character per site.
    pub fn to_sign_string(&self) -> String {
        self.0.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }

    pub fn parse_sign_string(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(invalid("spins", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()
            .map(Self)
    }

    /// The bond of the wall if this is a correctly oriented single-wall state.
    pub fn wall_position(&self) -> Option<usize> {
        let s = &self.0;
        if s.len() < 2 || s[0] != -1 || s[s.len() - 1] != 1 {
            return None;
        }
        let mut wall = None;
        for b in 0..s.len() - 1 {
            if s[b] != s[b + 1] {
                if wall.is_some() {
                    return None;
                }
                wall = Some(b);
            }
        }
        wall
    }
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpinConfig({})", self.to_sign_string())
    }
}

/// Number of antiparallel nearest-neighbour bonds.
pub fn kink_count(config: &SpinConfig) -> usize {
    kink_count_slice(config.spins())
}

pub(crate) fn kink_count_slice(spins: &[i8]) -> usize {
    spins.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Compile an objective into a chain over the box `[x_min, x_max]`.
pub fn build_chain_with<O: Objective + ?Sized>(
    objective: &O,
    x_min: f64,
    x_max: f64,
    params: &ChainParams,
) -> Result<ChainInstance> {
    params.validate()?;
    let grid = Grid::new(x_min, x_max, params.n_spins)?;
    let n = params.n_spins;
    let pts = &grid.points;
    let mut fields = vec![0.0; n];
    fields[0] = -objective.value(pts[0]) / 2.0;
    fields[n - 1] = objective.value(pts[n - 2]) / 2.0;
    for i in 1..n - 1 {
        fields[i] = match params.field_mode {
            FieldMode::Gradient => -grid.delta_x / 2.0 * objective.gradient(pts[i]),
            FieldMode::ExactDifference => {
                -(objective.value(pts[i]) - objective.value(pts[i - 1])) / 2.0
            }
        };
    }
    Ok(ChainInstance {
        n_spins: n,
        fields,
        coupling_j: params.coupling_j,
        boundary_h: params.boundary_h,
        lambda: params.lambda,
        grid,
        field_mode: params.field_mode,
    })
}

pub fn build_chain(spec: &PotentialSpec, params: &ChainParams) -> Result<ChainInstance> {
    spec.validate()?;
    build_chain_with(spec, spec.x_min, spec.x_max, params)
}

impl ChainInstance {
    pub fn params(&self) -> ChainParams {
        ChainParams {
            n_spins: self.n_spins,
            lambda: self.lambda,
            coupling_j: self.coupling_j,
            boundary_h: self.boundary_h,
            field_mode: self.field_mode,
        }
    }

    /// Total longitudinal field on each site: `λ h_i` plus the end pins.
    pub fn site_fields(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self.fields.iter().map(|h| self.lambda * h).collect();
        f[0] += self.boundary_h;
        f[self.n_spins - 1] -= self.boundary_h;
        f
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_spins {
            return Err(Error::LengthMismatch {
                expected: self.n_spins,
                got: len,
            });
        }
        Ok(())
    }

    pub fn energy(&self, config: &SpinConfig) -> Result<f64> {
        self.check_len(config.len())?;
        Ok(self.energy_unchecked(config.spins()))
    }

    pub(crate) fn energy_unchecked(&self, s: &[i8]) -> f64 {
        let n = self.n_spins;
        let mut field = 0.0;
        for (h, &si) in self.fields.iter().zip(s) {
            field += h * si as f64;
        }
        let mut bonds = 0.0;
        for w in s.windows(2) {
            bonds += (w[0] * w[1]) as f64;
        }
        self.lambda * field - self.coupling_j * bonds
            + self.boundary_h * (s[0] as f64 - s[n - 1] as f64)
    }

    /// Energies of the `N − 1` correctly oriented single-wall states, indexed by bond.
    pub fn single_wall_energies(&self) -> Vec<f64> {
        let n = self.n_spins;
        // wall at bond b: sites 0..=b down, b+1.. up
        let total: f64 = self.fields.iter().sum();
        let mut prefix = 0.0;
        let bonds = -self.coupling_j * (n as f64 - 3.0);
        let pins = -2.0 * self.boundary_h;
        (0..n - 1)
            .map(|b| {
                prefix += self.fields[b];
                self.lambda * (total - 2.0 * prefix) + bonds + pins
            })
            .collect()
    }

    pub fn decode(&self, config: &SpinConfig) -> Result<Option<f64>> {
        self.check_len(config.len())?;
        Ok(config.wall_position().map(|b| self.grid.points[b]))
    }

    pub fn encode(&self, x: f64) -> Result<SpinConfig> {
        let (lo, hi) = (self.grid.x_min(), self.grid.x_max());
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfBox {
                x,
                x_min: lo,
                x_max: hi,
            });
        }
        Ok(SpinConfig::single_wall(
            self.n_spins,
            self.grid.nearest_bond(x),
        ))
    }

    pub fn to_file(&self) -> ChainFile {
        ChainFile {
            n: self.n_spins,
            lambda: self.lambda,
            coupling_j: self.coupling_j,
            boundary_h: self.boundary_h,
            fields: self.fields.clone(),
            x_min: self.grid.x_min(),
            x_max: self.grid.x_max(),
            field_mode: self.field_mode,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChainFile = serde_json::from_str(text)?;
        file.into_chain()
    }
}

pub fn classical_energy(chain: &ChainInstance, config: &SpinConfig) -> Result<f64> {
    chain.energy(config)
}

pub fn decode(chain: &ChainInstance, config: &SpinConfig) -> Result<Option<f64>> {
    chain.decode(config)
}

pub fn encode(chain: &ChainInstance, x: f64) -> Result<SpinConfig> {
    chain.encode(x)
}

/// On-disk JSON form of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub n: usize,
    pub lambda: f64,
    #[serde(rename = "J")]
    pub coupling_j: f64,
    #[serde(rename = "h")]
    pub boundary_h: f64,
    pub fields: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub field_mode: FieldMode,
}

impl ChainFile {
    pub fn into_chain(self) -> Result<ChainInstance> {
        let params = ChainParams {
            n_spins: self.n,
            lambda: self.lambda,
            coupling_j: self.coupling_j,
            boundary_h: self.boundary_h,
            field_mode: self.field_mode,
        };
        params.validate()?;
        if self.fields.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: self.fields.len(),
            });
        }
        Ok(ChainInstance {
            n_spins: self.n,
            fields: self.fields,
            coupling_j: self.coupling_j,
            boundary_h: self.boundary_h,
            lambda: self.lambda,
            grid: Grid::new(self.x_min, self.x_max, self.n)?,
            field_mode: self.field_mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_chain(h0: f64, mode: FieldMode) -> ChainInstance {
        let params = ChainParams {
            field_mode: mode,
            ..ChainParams::default()
        };
        build_chain(&PotentialSpec::washboard(h0), &params).unwrap()
    }

    fn penalty_chain(n: usize) -> ChainInstance {
        let params = ChainParams {
            n_spins: n,
            lambda: 0.0,
            ..ChainParams::default()
        };
        build_chain(&PotentialSpec::washboard(1.0), &params).unwrap()
    }

    fn cfg(s: &[i8]) -> SpinConfig {
        SpinConfig::new(s.to_vec()).unwrap()
    }

    #[test]
    fn default_instance_fields() {
        let chain = default_chain(1.0, FieldMode::Gradient);
        // V(-3) = 0.25 * 9 + 0.5 * (1 - cos(-30π)) = 2.25
        assert!((chain.fields[0] + 1.125).abs() < 1e-12);
        assert_eq!(chain.fields[105], 0.0);
    }

    #[test]
    fn zero_lambda_is_pure_penalty() {
        let chain = penalty_chain(9);
        let total: f64 = chain.site_fields().iter().skip(1).take(7).sum();
        assert_eq!(total, 0.0);
        let wall = chain.single_wall_energies();
        assert!(wall.iter().all(|&e| (e - wall[0]).abs() < 1e-12));
    }

    #[test]
    fn penalty_energies() {
        let chain = penalty_chain(5);
        assert_eq!(chain.energy(&cfg(&[-1, -1, 1, 1, 1])).unwrap(), -6.0);
        assert_eq!(chain.energy(&SpinConfig::all_down(5)).unwrap(), -4.0);
    }

    #[test]
    fn each_extra_kink_costs_two_j() {
        let chain = penalty_chain(7);
        let one = chain.energy(&cfg(&[-1, -1, -1, 1, 1, 1, 1])).unwrap();
        let three = chain.energy(&cfg(&[-1, 1, -1, 1, 1, 1, 1])).unwrap();
        let five = chain.energy(&cfg(&[-1, 1, -1, 1, -1, 1, 1])).unwrap();
        assert_eq!(three - one, 4.0 * chain.coupling_j);
        assert_eq!(five - three, 4.0 * chain.coupling_j);
        // two kinks on top of a uniform chain with equal end spins
        let two = chain.energy(&cfg(&[-1, -1, 1, 1, 1, 1, -1])).unwrap();
        let zero_flip_end = chain.energy(&SpinConfig::all_down(7)).unwrap();
        assert_eq!(two - zero_flip_end, 2.0 * 2.0 * chain.coupling_j);
    }

    #[test]
    fn kink_counts() {
        assert_eq!(kink_count(&cfg(&[-1, -1, 1, 1])), 1);
        assert_eq!(kink_count(&cfg(&[-1, 1, -1, 1])), 3);
        assert_eq!(kink_count(&SpinConfig::all_up(6)), 0);
    }

    #[test]
    fn decode_examples() {
        let params = ChainParams::with_n(4);
        let chain = build_chain(&PotentialSpec::washboard(1.0), &params).unwrap();
        assert_eq!(chain.decode(&cfg(&[-1, -1, 1, 1])).unwrap(), Some(-1.0));
        assert_eq!(chain.decode(&cfg(&[-1, 1, -1, 1])).unwrap(), None);
        assert_eq!(chain.decode(&cfg(&[1, 1, -1, -1])).unwrap(), None);
        assert!(chain.decode(&cfg(&[-1, 1])).is_err());

        let reference = default_chain(1.0, FieldMode::Gradient);
        let at_zero = SpinConfig::single_wall(211, 105);
        assert_eq!(reference.decode(&at_zero).unwrap(), Some(0.0));
    }

    #[test]
    fn encode_examples() {
        let chain = default_chain(1.0, FieldMode::Gradient);
        assert_eq!(chain.encode(-3.0).unwrap().wall_position(), Some(0));
        assert_eq!(chain.encode(0.0).unwrap().wall_position(), Some(105));
        assert!(chain.encode(3.5).is_err());
        assert!(chain.encode(f64::NAN).is_err());
        for (b, &x) in chain.grid.points.iter().enumerate() {
            let c = chain.encode(x).unwrap();
            assert_eq!(c.wall_position(), Some(b));
            assert_eq!(chain.decode(&c).unwrap(), Some(x));
        }
    }

    #[test]
    fn build_rejects_bad_penalties() {
        let spec = PotentialSpec::washboard(1.0);
        let weak_ends = ChainParams {
            boundary_h: 1.0,
            ..ChainParams::default()
        };
        assert!(build_chain(&spec, &weak_ends).is_err());
        let negative = ChainParams {
            lambda: -0.1,
            ..ChainParams::default()
        };
        assert!(build_chain(&spec, &negative).is_err());
    }

    #[test]
    fn single_wall_energies_match_direct_evaluation() {
        let chain = default_chain(3.0, FieldMode::Gradient);
        let fast = chain.single_wall_energies();
        for b in [0, 1, 50, 105, 209] {
            let direct = chain.energy(&SpinConfig::single_wall(211, b)).unwrap();
            assert!((fast[b] - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_difference_reproduces_potential() {
        let spec = PotentialSpec::washboard(1.0);
        let chain = default_chain(1.0, FieldMode::ExactDifference);
        let e = chain.single_wall_energies();
        for b in 0..chain.grid.points.len() {
            let lhs = e[b] - e[0];
            let rhs = chain.lambda * (spec.eval(chain.grid.points[b]) - spec.eval(chain.grid.points[0]));
            assert!((lhs - rhs).abs() <= 1e-10, "bond {b}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn field_modes_agree_to_second_order() {
        let spec = PotentialSpec::washboard(1.0);
        let g = default_chain(1.0, FieldMode::Gradient);
        let d = default_chain(1.0, FieldMode::ExactDifference);
        let dx = g.grid.delta_x;
        // max |V''| of the washboard
        let vpp = spec.k + 2.0 * std::f64::consts::PI.powi(2) * spec.h0 / spec.w0.powi(2);
        let bound = g.lambda * dx * dx * vpp / 2.0;
        for i in 1..g.n_spins - 1 {
            assert!((g.fields[i] - d.fields[i]).abs() <= bound);
        }
    }

    #[test]
    fn json_round_trip() {
        let chain = default_chain(0.2, FieldMode::ExactDifference);
        let text = chain.to_json().unwrap();
        let back = ChainInstance::from_json(&text).unwrap();
        assert_eq!(back.fields, chain.fields);
        assert_eq!(back.grid.points.len(), chain.grid.points.len());
        assert!((back.grid.delta_x - chain.grid.delta_x).abs() < 1e-15);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["n", "lambda", "J", "h", "fields", "x_min", "x_max", "field_mode"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(ChainInstance::from_json(r#"{"n": 3}"#).is_err());
    }

    proptest! {
        #[test]
        fn sign_string_round_trip(bits in any::<u16>()) {
            let c = SpinConfig::from_bits(bits as u64, 16);
            prop_assert_eq!(SpinConfig::parse_sign_string(&c.to_sign_string()).unwrap(), c);
        }
    }
}
