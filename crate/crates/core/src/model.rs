//! Spin and τ configurations, model parameters and the classical Ising
//! equilibrium.
//!
//! Site `i` of a configuration is bit `i` of its integer encoding; bit value 0
//! is σ = +1 (spin up) and bit value 1 is σ = −1. The same encoding labels rows
//! and columns of every dense operator in this crate, and σ^z is the diagonal
//! operator with value +1 on bit 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest chain handled by dense (2^N-sized) operations.
pub const MAX_DENSE_SITES: usize = 24;
/// Largest chain representable by a [`SpinConfig`].
pub const MAX_CONFIG_SITES: usize = 64;

/// σ_i = ±1 of the integer-encoded configuration `bits`.
#[inline]
pub fn spin_of(bits: u64, i: usize) -> f64 {
    if (bits >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn parse_signs(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '+' | '↑' => Ok(false),
            '-' | '−' | '↓' => Ok(true),
            other => Err(Error::Parse(format!("unexpected character {other:?} in configuration"))),
        })
        .collect()
}

fn write_signs(f: &mut fmt::Formatter<'_>, down: impl Iterator<Item = bool>) -> fmt::Result {
    for d in down {
        f.write_str(if d { "-" } else { "+" })?;
    }
    Ok(())
}

/// A configuration of `n_sites` Ising spins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    bits: u64,
    n_sites: usize,
}

impl SpinConfig {
    pub fn new(bits: u64, n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_CONFIG_SITES {
            return Err(Error::InvalidParams(format!(
                "spin configurations need 1..={MAX_CONFIG_SITES} sites, got {n_sites}"
            )));
        }
        if n_sites < 64 && bits >> n_sites != 0 {
            return Err(Error::InvalidParams(format!(
                "bits {bits:#x} set beyond site {n_sites}"
            )));
        }
        Ok(Self { bits, n_sites })
    }

    pub fn all_up(n_sites: usize) -> Result<Self> {
        Self::new(0, n_sites)
    }

    pub fn all_down(n_sites: usize) -> Result<Self> {
        Self::new(full_mask(n_sites), n_sites)
    }

    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => {}
                -1 => bits |= 1 << i,
                _ => return Err(Error::InvalidParams(format!("spin value {s} is not ±1"))),
            }
        }
        Self::new(bits, spins.len())
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// σ_i as ±1.
    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        spin_of(self.bits, i)
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.n_sites).map(|i| self.spin(i) as i8).collect()
    }

    /// D_iσ: the configuration with spin `i` reversed.
    pub fn flip(&self, i: usize) -> Result<Self> {
        if i >= self.n_sites {
            return Err(Error::SiteOutOfRange { site: i, n_sites: self.n_sites });
        }
        Ok(Self { bits: self.bits ^ (1 << i), n_sites: self.n_sites })
    }

    pub fn global_flip(&self) -> Self {
        Self { bits: self.bits ^ full_mask(self.n_sites), n_sites: self.n_sites }
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_signs(f, (0..self.n_sites).map(|i| (self.bits >> i) & 1 == 1))
    }
}

impl FromStr for SpinConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let down = parse_signs(s)?;
        if down.len() > MAX_CONFIG_SITES {
            return Err(Error::TooLarge { n_sites: down.len(), max: MAX_CONFIG_SITES });
        }
        let bits = down.iter().enumerate().fold(0u64, |acc, (i, &d)| acc | ((d as u64) << i));
        Self::new(bits, down.len())
    }
}

/// Flip the `i`-th bit of an integer-encoded configuration.
pub fn flip(config: SpinConfig, i: usize) -> Result<SpinConfig> {
    config.flip(i)
}

#[inline]
pub(crate) fn full_mask(n_sites: usize) -> u64 {
    if n_sites >= 64 {
        u64::MAX
    } else {
        (1u64 << n_sites) - 1
    }
}

/// A configuration τ of the conserved products τ_i = σ_i σ̃_i. Unlike
/// [`SpinConfig`] it has no width limit, since sector Hamiltonians for long
/// open chains are only ever handled as local terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TauSector {
    n_sites: usize,
    down: Vec<bool>,
}

impl TauSector {
    /// All τ_i = +1 (the diagonal sector, "τ = 0").
    pub fn homogeneous(n_sites: usize) -> Self {
        Self { n_sites, down: vec![false; n_sites] }
    }

    /// All τ_i = −1 (the anti-diagonal sector, "τ = 2^N − 1").
    pub fn all_down(n_sites: usize) -> Self {
        Self { n_sites, down: vec![true; n_sites] }
    }

    pub fn from_bits(bits: u64, n_sites: usize) -> Result<Self> {
        let cfg = SpinConfig::new(bits, n_sites)?;
        Ok(Self { n_sites, down: (0..n_sites).map(|i| cfg.spin(i) < 0.0).collect() })
    }

    pub fn from_down(down: Vec<bool>) -> Result<Self> {
        if down.is_empty() {
            return Err(Error::InvalidParams("τ needs at least one site".into()));
        }
        Ok(Self { n_sites: down.len(), down })
    }

    /// Two isolated flipped components, at sites ⌊N/3⌋ and ⌊2N/3⌋.
    pub fn two_flips(n_sites: usize) -> Result<Self> {
        if n_sites < 6 {
            return Err(Error::InvalidParams("two-flips selector needs N >= 6".into()));
        }
        let mut down = vec![false; n_sites];
        down[n_sites / 3] = true;
        down[2 * n_sites / 3] = true;
        Ok(Self { n_sites, down })
    }

    /// τ_i = +1 for i < ⌊N/2⌋ and −1 otherwise; the wall sits at bond ⌊N/2⌋.
    pub fn domain_wall(n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidParams("domain-wall selector needs N >= 2".into()));
        }
        Ok(Self { n_sites, down: (0..n_sites).map(|i| i >= n_sites / 2).collect() })
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Integer label of the sector, available when N ≤ 64.
    pub fn bits(&self) -> Option<u64> {
        if self.n_sites > 64 {
            return None;
        }
        Some(self.down.iter().enumerate().fold(0u64, |acc, (i, &d)| acc | ((d as u64) << i)))
    }

    /// τ_i as ±1.
    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        if self.down[i] {
            -1.0
        } else {
            1.0
        }
    }

    #[inline]
    pub fn is_down(&self, i: usize) -> bool {
        self.down[i]
    }

    pub fn is_homogeneous(&self) -> bool {
        self.down.iter().all(|&d| d == self.down[0])
    }

    pub fn flipped_sites(&self) -> Vec<usize> {
        self.down.iter().enumerate().filter(|(_, &d)| d).map(|(i, _)| i).collect()
    }
}

impl fmt::Display for TauSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_signs(f, self.down.iter().copied())
    }
}

impl FromStr for TauSector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_down(parse_signs(s)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(Error::Parse(format!("unknown boundary {other:?}"))),
        }
    }
}

/// Chain size, boundary and the kinetic-Ising parameters (J, β, Γ, γ, δ).
///
/// β and γ are tied by γ = tanh 2βJ. γ = 1 is zero temperature (β = ∞); all
/// Boltzmann factors are therefore evaluated through γ rather than β.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub coupling: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub rate_scale: f64,
}

/// Tolerance for the γ = tanh 2βJ consistency check.
const GAMMA_BETA_TOL: f64 = 1e-12;

impl ModelParams {
    /// Periodic chain with J = Γ = 1 and β derived from γ.
    pub fn new(n_sites: usize, gamma: f64, delta: f64) -> Result<Self> {
        let p = Self {
            n_sites,
            boundary: Boundary::Periodic,
            coupling: 1.0,
            beta: beta_from_gamma(gamma, 1.0),
            gamma,
            delta,
            rate_scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Periodic chain with γ derived from β and J.
    pub fn from_beta(n_sites: usize, coupling: f64, beta: f64, delta: f64) -> Result<Self> {
        let p = Self {
            n_sites,
            boundary: Boundary::Periodic,
            coupling,
            beta,
            gamma: (2.0 * beta * coupling).tanh(),
            delta,
            rate_scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Full constructor; β and γ must agree.
    pub fn with_all(
        n_sites: usize,
        boundary: Boundary,
        coupling: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        rate_scale: f64,
    ) -> Result<Self> {
        let p = Self { n_sites, boundary, coupling, beta, gamma, delta, rate_scale };
        p.validate()?;
        Ok(p)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_rate_scale(mut self, rate_scale: f64) -> Result<Self> {
        self.rate_scale = rate_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n_sites(mut self, n_sites: usize) -> Result<Self> {
        self.n_sites = n_sites;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.n_sites == 0 {
            return bad("n_sites must be positive".into());
        }
        if !(self.coupling > 0.0 && self.coupling.is_finite()) {
            return bad(format!("J must be positive, got {}", self.coupling));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(-1.0..=1.0).contains(&self.delta) {
            return bad(format!("delta must lie in [-1, 1], got {}", self.delta));
        }
        if !(self.rate_scale > 0.0 && self.rate_scale.is_finite()) {
            return bad(format!("Gamma must be positive, got {}", self.rate_scale));
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        let implied = (2.0 * self.beta * self.coupling).tanh();
        if (implied - self.gamma).abs() > GAMMA_BETA_TOL {
            return bad(format!(
                "gamma {} inconsistent with tanh(2 beta J) = {implied}",
                self.gamma
            ));
        }
        Ok(())
    }

    /// βJ, computed from γ (infinite at γ = 1).
    pub fn beta_j(&self) -> f64 {
        beta_from_gamma(self.gamma, 1.0)
    }

    /// e^{βJ·k}, evaluated as ((1+γ)/(1−γ))^{k/4}. Infinite (or zero) at γ = 1.
    pub fn bond_weight(&self, k: f64) -> f64 {
        if k == 0.0 {
            return 1.0;
        }
        (k * self.beta_j()).exp()
    }

    /// Whether site-index arithmetic wraps around.
    #[inline]
    pub fn periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Neighbor indices (i−1, i+1) mod N for a periodic chain.
    #[inline]
    pub fn neighbors(&self, i: usize) -> (usize, usize) {
        let n = self.n_sites;
        ((i + n - 1) % n, (i + 1) % n)
    }

    pub(crate) fn require_dense(&self, max: usize) -> Result<()> {
        if self.n_sites > max.min(MAX_DENSE_SITES) {
            return Err(Error::TooLarge { n_sites: self.n_sites, max: max.min(MAX_DENSE_SITES) });
        }
        Ok(())
    }

    pub(crate) fn require_periodic(&self, what: &str) -> Result<()> {
        if !self.periodic() {
            return Err(Error::Unsupported(format!("{what} requires a periodic chain")));
        }
        Ok(())
    }

    pub(crate) fn check_config(&self, config: SpinConfig) -> Result<()> {
        if config.n_sites() != self.n_sites {
            return Err(Error::SizeMismatch { expected: self.n_sites, found: config.n_sites() });
        }
        Ok(())
    }

    pub(crate) fn check_tau(&self, tau: &TauSector) -> Result<()> {
        if tau.n_sites() != self.n_sites {
            return Err(Error::SizeMismatch { expected: self.n_sites, found: tau.n_sites() });
        }
        Ok(())
    }
}

/// β = artanh(γ)/(2J); +∞ at γ = 1.
pub fn beta_from_gamma(gamma: f64, coupling: f64) -> f64 {
    if gamma >= 1.0 {
        return f64::INFINITY;
    }
    0.25 * (gamma.ln_1p() - (-gamma).ln_1p()) / coupling
}

/// The Haake–Thol coupling δ = γ/(2−γ).
pub fn haake_thol_delta(gamma: f64) -> f64 {
    gamma / (2.0 - gamma)
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    n_sites: usize,
    boundary: Boundary,
    #[serde(rename = "J")]
    coupling: f64,
    beta: BetaRepr,
    gamma: f64,
    delta: f64,
    #[serde(rename = "Gamma")]
    rate_scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BetaRepr {
    Finite(f64),
    Text(String),
}

impl Serialize for ModelParams {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let beta = if self.beta.is_finite() {
            BetaRepr::Finite(self.beta)
        } else {
            BetaRepr::Text("inf".into())
        };
        ParamsRepr {
            n_sites: self.n_sites,
            boundary: self.boundary,
            coupling: self.coupling,
            beta,
            gamma: self.gamma,
            delta: self.delta,
            rate_scale: self.rate_scale,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = ParamsRepr::deserialize(d)?;
        let beta = match r.beta {
            BetaRepr::Finite(b) => b,
            BetaRepr::Text(t) if t == "inf" => f64::INFINITY,
            BetaRepr::Text(t) => return Err(D::Error::custom(format!("bad beta {t:?}"))),
        };
        ModelParams::with_all(
            r.n_sites,
            r.boundary,
            r.coupling,
            beta,
            r.gamma,
            r.delta,
            r.rate_scale,
        )
        .map_err(D::Error::custom)
    }
}

/// Σ_i σ_i σ_{i+1} over the bonds of the chain.
pub fn bond_sum(bits: u64, n_sites: usize, boundary: Boundary) -> f64 {
    let bonds = match boundary {
        Boundary::Periodic => n_sites,
        Boundary::Open => n_sites - 1,
    };
    (0..bonds).map(|i| spin_of(bits, i) * spin_of(bits, (i + 1) % n_sites)).sum()
}

/// H(σ) = −J Σ_i σ_i σ_{i+1}.
pub fn ising_energy(config: SpinConfig, params: &ModelParams) -> Result<f64> {
    params.check_config(config)?;
    Ok(-params.coupling * bond_sum(config.bits(), params.n_sites, params.boundary))
}

/// Closed-form Z_N: 2^N (cosh^N βJ + sinh^N βJ) for the ring, 2^N cosh^{N−1} βJ
/// for the open chain. Infinite at γ = 1.
pub fn partition_function(params: &ModelParams) -> Result<f64> {
    let n = params.n_sites;
    let k = params.beta_j();
    let two_n = 2f64.powi(n as i32);
    match params.boundary {
        Boundary::Periodic => {
            if n < 2 {
                return Err(Error::InvalidParams("periodic partition function needs N >= 2".into()));
            }
            Ok(two_n * (k.cosh().powi(n as i32) + k.sinh().powi(n as i32)))
        }
        Boundary::Open => Ok(two_n * k.cosh().powi(n as i32 - 1)),
    }
}

/// Boltzmann weights e^{−βH(σ)} for all 2^N configurations, scaled so the
/// largest is 1. Stays finite at γ = 1, where it becomes the indicator of the
/// ground states.
pub fn relative_boltzmann_weights(params: &ModelParams) -> Result<Vec<f64>> {
    params.require_dense(MAX_DENSE_SITES)?;
    let dim = 1u64 << params.n_sites;
    let sums: Vec<f64> =
        (0..dim).map(|b| bond_sum(b, params.n_sites, params.boundary)).collect();
    let max = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let zero_temperature = params.gamma >= 1.0;
    Ok(sums
        .into_iter()
        .map(|s| {
            if zero_temperature {
                if s == max {
                    1.0
                } else {
                    0.0
                }
            } else {
                params.bond_weight(s - max)
            }
        })
        .collect())
}

/// P_eq(σ) for every configuration, indexed by the bit encoding.
pub fn equilibrium_distribution(params: &ModelParams) -> Result<Vec<f64>> {
    let mut w = relative_boltzmann_weights(params)?;
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

/// P_eq(σ) = e^{−βH(σ)}/Z_N.
pub fn equilibrium_prob(config: SpinConfig, params: &ModelParams) -> Result<f64> {
    params.check_config(config)?;
    if params.gamma >= 1.0 || params.n_sites > 40 {
        // Normalize against the ground-state weight to stay finite.
        let s = bond_sum(config.bits(), params.n_sites, params.boundary);
        let s_max = match params.boundary {
            Boundary::Periodic => params.n_sites as f64,
            Boundary::Open => params.n_sites as f64 - 1.0,
        };
        if params.gamma >= 1.0 {
            return Ok(if s == s_max { 0.5 } else { 0.0 });
        }
        let z_rel = partition_function(params)? * params.bond_weight(-s_max);
        return Ok(params.bond_weight(s - s_max) / z_rel);
    }
    let s = bond_sum(config.bits(), params.n_sites, params.boundary);
    Ok(params.bond_weight(s) / partition_function(params)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> SpinConfig {
        s.parse().unwrap()
    }

    #[test]
    fn energy_examples() {
        let p = ModelParams::new(4, 0.0, 0.0).unwrap();
        assert_eq!(ising_energy(cfg("++++"), &p).unwrap(), -4.0);
        assert_eq!(ising_energy(cfg("+-+-"), &p).unwrap(), 4.0);
        let p3 = ModelParams::new(3, 0.0, 0.0).unwrap();
        assert_eq!(ising_energy(cfg("++-"), &p3).unwrap(), 1.0);
        assert!(matches!(ising_energy(cfg("++-"), &p), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn open_energy_drops_wrap_bond() {
        let p = ModelParams::new(4, 0.0, 0.0).unwrap().with_boundary(Boundary::Open);
        assert_eq!(ising_energy(cfg("++++"), &p).unwrap(), -3.0);
        assert_eq!(ising_energy(cfg("+--+"), &p).unwrap(), 1.0);
    }

    fn enumerated_z(p: &ModelParams) -> f64 {
        let k = p.beta * p.coupling;
        (0..1u64 << p.n_sites).map(|b| (k * bond_sum(b, p.n_sites, p.boundary)).exp()).sum()
    }

    #[test]
    fn partition_function_examples() {
        let p = ModelParams::from_beta(3, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(partition_function(&p).unwrap(), 8.0);
        let p = ModelParams::from_beta(3, 1.0, 0.5, 0.0).unwrap();
        assert!((partition_function(&p).unwrap() - enumerated_z(&p)).abs() < 1e-12);
        let p = ModelParams::from_beta(4, 1.0, 1.0, 0.0).unwrap();
        let c = 1f64.cosh().powi(4) + 1f64.sinh().powi(4);
        assert!((partition_function(&p).unwrap() - 16.0 * c).abs() < 1e-12);
    }

    #[test]
    fn partition_function_matches_enumeration_both_boundaries() {
        for n in 2..=12 {
            for &beta in &[0.0, 0.3, 0.8] {
                for b in [Boundary::Periodic, Boundary::Open] {
                    let p = ModelParams::from_beta(n, 1.0, beta, 0.0).unwrap().with_boundary(b);
                    let z = partition_function(&p).unwrap();
                    let e = enumerated_z(&p);
                    assert!((z - e).abs() <= 1e-12 * e, "n={n} beta={beta} {b:?}: {z} vs {e}");
                }
            }
        }
    }

    #[test]
    fn equilibrium_examples() {
        let p = ModelParams::new(5, 0.0, 0.0).unwrap();
        for b in 0..32 {
            let c = SpinConfig::new(b, 5).unwrap();
            assert!((equilibrium_prob(c, &p).unwrap() - 1.0 / 32.0).abs() < 1e-15);
        }
        let p = ModelParams::from_beta(3, 1.0, 0.5, 0.0).unwrap();
        let up = equilibrium_prob(cfg("+++"), &p).unwrap();
        let down = equilibrium_prob(cfg("---"), &p).unwrap();
        assert!((up - down).abs() < 1e-15);
        for n in 2..=12 {
            let p = ModelParams::from_beta(n, 1.0, 1.0, 0.0).unwrap();
            let total: f64 = (0..1u64 << n)
                .map(|b| equilibrium_prob(SpinConfig::new(b, n).unwrap(), &p).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
            let dist = equilibrium_distribution(&p).unwrap();
            for b in 0..1u64 << n {
                let c = SpinConfig::new(b, n).unwrap();
                let direct = equilibrium_prob(c, &p).unwrap();
                assert!((dist[b as usize] - direct).abs() < 1e-12 * direct, "n={n} b={b} {} {direct}", dist[b as usize]);
                let flipped = equilibrium_prob(c.global_flip(), &p).unwrap();
                assert!((direct - flipped).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_temperature_distribution_is_ground_pair() {
        let p = ModelParams::new(5, 1.0, 0.0).unwrap();
        let d = equilibrium_distribution(&p).unwrap();
        assert_eq!(d[0], 0.5);
        assert_eq!(d[31], 0.5);
        assert_eq!(d.iter().filter(|&&x| x > 0.0).count(), 2);
        assert_eq!(equilibrium_prob(cfg("-----"), &p).unwrap(), 0.5);
    }

    #[test]
    fn flip_examples() {
        assert_eq!(flip(cfg("+++"), 1).unwrap(), cfg("+-+"));
        let c = cfg("+-+-+");
        assert_eq!(c.flip(3).unwrap().flip(3).unwrap(), c);
        let mut all = cfg("++++");
        for i in 0..4 {
            all = all.flip(i).unwrap();
        }
        assert_eq!(all, cfg("----"));
        assert!(matches!(c.flip(5), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn config_invariants() {
        assert!(SpinConfig::new(0b1000, 3).is_err());
        assert!(SpinConfig::new(0, 0).is_err());
        assert_eq!(cfg("+-−").bits(), 0b110);
        assert_eq!(cfg("+--").to_string(), "+--");
    }

    #[test]
    fn gamma_beta_consistency() {
        assert!(ModelParams::with_all(4, Boundary::Periodic, 1.0, 0.5, 0.3, 0.0, 1.0).is_err());
        let p = ModelParams::new(4, 0.7, 0.2).unwrap();
        assert!(((2.0 * p.beta).tanh() - 0.7).abs() < 1e-12);
        assert!(ModelParams::new(4, 1.0, 0.0).unwrap().beta.is_infinite());
        assert!(ModelParams::new(4, 1.1, 0.0).is_err());
        assert!(ModelParams::new(4, 0.5, -1.5).is_err());
        assert!(ModelParams::new(4, 0.5, 0.0).unwrap().with_rate_scale(0.0).is_err());
    }

    #[test]
    fn params_json_round_trip() {
        for g in [0.0, 0.37, 1.0] {
            let p = ModelParams::new(6, g, -0.4).unwrap().with_boundary(Boundary::Open);
            let s = serde_json::to_string(&p).unwrap();
            for key in ["n_sites", "boundary", "\"J\"", "beta", "gamma", "delta", "\"Gamma\""] {
                assert!(s.contains(key), "{s}");
            }
            let q: ModelParams = serde_json::from_str(&s).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn tau_selectors() {
        let t = TauSector::two_flips(90).unwrap();
        assert_eq!(t.flipped_sites(), vec![30, 60]);
        let w = TauSector::domain_wall(8).unwrap();
        assert_eq!(w.to_string(), "++++----");
        assert_eq!(w.bits(), Some(0xf0));
        assert!(TauSector::homogeneous(100).bits().is_none());
        assert_eq!("+-+".parse::<TauSector>().unwrap(), TauSector::from_bits(0b010, 3).unwrap());
    }
}
