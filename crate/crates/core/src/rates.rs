//! Single-spin-flip rates w_i(σ) = w(σ → D_iσ), the detailed-balance check,
//! and the flip-symmetric combination v_i(σ).

use crate::error::{Error, Result};
use crate::model::{relative_boltzmann_weights, spin_of, ModelParams, SpinConfig};

/// Rates whose magnitude is below this are treated as rounding noise.
pub const RATE_CLAMP: f64 = 1e-14;

/// Relative violation below which detailed balance is considered to hold.
pub const DBC_TOL: f64 = 1e-10;

/// A flip rate w_i(σ), evaluated on integer-encoded configurations.
pub trait RateFunction: Sync {
    fn rate(&self, bits: u64, site: usize, params: &ModelParams) -> f64;
}

impl<F> RateFunction for F
where
    F: Fn(u64, usize, &ModelParams) -> f64 + Sync,
{
    fn rate(&self, bits: u64, site: usize, params: &ModelParams) -> f64 {
        self(bits, site, params)
    }
}

/// Glauber rates Γ(1 + δσ_{i−1}σ_{i+1})[1 − (γ/2)σ_i(σ_{i−1} + σ_{i+1})].
/// The two end sites of an open chain have a single neighbor and flip with
/// the heat-bath rate Γ[1 − tanh(βJ)σ_iσ_nb].
#[derive(Clone, Copy, Debug, Default)]
pub struct GlauberRates;

/// tanh(βJ) = γ / (1 + √(1−γ²)).
pub fn end_site_bias(gamma: f64) -> f64 {
    gamma / (1.0 + (1.0 - gamma * gamma).max(0.0).sqrt())
}

/// The single neighbor of an open-chain end site, if `i` is one.
#[inline]
pub(crate) fn end_neighbor(p: &ModelParams, i: usize) -> Option<usize> {
    if p.periodic() {
        None
    } else if i == 0 {
        Some(1)
    } else if i + 1 == p.n_sites {
        Some(i - 1)
    } else {
        None
    }
}

impl RateFunction for GlauberRates {
    #[inline]
    fn rate(&self, bits: u64, i: usize, p: &ModelParams) -> f64 {
        if let Some(nb) = end_neighbor(p, i) {
            let x = spin_of(bits, i) * spin_of(bits, nb);
            return p.rate_scale * (1.0 - end_site_bias(p.gamma) * x);
        }
        let (l, r) = p.neighbors(i);
        let (sl, s, sr) = (spin_of(bits, l), spin_of(bits, i), spin_of(bits, r));
        p.rate_scale * (1.0 + p.delta * sl * sr) * (1.0 - 0.5 * p.gamma * s * (sl + sr))
    }
}

pub fn glauber_rate(config: SpinConfig, i: usize, params: &ModelParams) -> Result<f64> {
    params.check_config(config)?;
    if i >= params.n_sites {
        return Err(Error::SiteOutOfRange { site: i, n_sites: params.n_sites });
    }
    Ok(GlauberRates.rate(config.bits(), i, params))
}

/// v_i(σ) = w_i(σ) e^{βJσ_i(σ_{i−1}+σ_{i+1})} for raw bits. A zero rate stays
/// zero at γ = 1, where the exponential alone would be infinite.
#[inline]
pub(crate) fn v_rate_bits<R: RateFunction + ?Sized>(
    rate: &R,
    bits: u64,
    i: usize,
    p: &ModelParams,
) -> f64 {
    let w = rate.rate(bits, i, p);
    if w.abs() < RATE_CLAMP {
        return 0.0;
    }
    let x = match end_neighbor(p, i) {
        Some(nb) => spin_of(bits, i) * spin_of(bits, nb),
        None => {
            let (l, r) = p.neighbors(i);
            spin_of(bits, i) * (spin_of(bits, l) + spin_of(bits, r))
        }
    };
    w * p.bond_weight(x)
}

pub fn v_rate(config: SpinConfig, i: usize, params: &ModelParams) -> Result<f64> {
    glauber_rate(config, i, params)?;
    Ok(v_rate_bits(&GlauberRates, config.bits(), i, params))
}

/// √w with the clamping policy: |w| < [`RATE_CLAMP`] becomes 0, any other
/// negative value is an error.
pub fn sqrt_rate(w: f64, bits: u64, site: usize) -> Result<f64> {
    if w >= 0.0 {
        Ok(w.sqrt())
    } else if w > -RATE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeRate { value: w, config: bits, site })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DbcReport {
    pub holds: bool,
    pub max_violation: f64,
}

/// Check w_i(σ)P_eq(σ) = w_i(D_iσ)P_eq(D_iσ) over all σ and i.
pub fn check_detailed_balance<R: RateFunction + ?Sized>(
    rate: &R,
    params: &ModelParams,
) -> Result<DbcReport> {
    params.require_dense(16)?;
    let weights = relative_boltzmann_weights(params)?;
    let mut max_violation = 0.0f64;
    for bits in 0..1u64 << params.n_sites {
        for i in 0..params.n_sites {
            let flipped = bits ^ (1 << i);
            // Each unordered pair once.
            if flipped < bits {
                continue;
            }
            let fwd = rate.rate(bits, i, params) * weights[bits as usize];
            let bwd = rate.rate(flipped, i, params) * weights[flipped as usize];
            let scale = fwd.abs().max(bwd.abs());
            if scale > 0.0 {
                max_violation = max_violation.max((fwd - bwd).abs() / scale);
            }
        }
    }
    Ok(DbcReport { holds: max_violation <= DBC_TOL, max_violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;

    fn cfg(s: &str) -> SpinConfig {
        s.parse().unwrap()
    }

    #[test]
    fn glauber_rate_examples() {
        for g in [0.0, 0.3, 0.9, 1.0] {
            let p = ModelParams::new(3, g, 0.0).unwrap();
            assert!((glauber_rate(cfg("+++"), 1, &p).unwrap() - (1.0 - g)).abs() < 1e-15);
            assert!((glauber_rate(cfg("++-"), 1, &p).unwrap() - 1.0).abs() < 1e-15);
            assert!((glauber_rate(cfg("---"), 1, &p).unwrap() - (1.0 - g)).abs() < 1e-15);
        }
        let p = ModelParams::new(3, 0.6, -1.0).unwrap();
        assert_eq!(glauber_rate(cfg("+-+"), 1, &p).unwrap(), 0.0);
        assert_eq!(glauber_rate(cfg("---"), 1, &p).unwrap(), 0.0);
    }

    #[test]
    fn glauber_rate_errors() {
        let p = ModelParams::new(3, 0.5, 0.0).unwrap();
        assert!(matches!(glauber_rate(cfg("+++"), 3, &p), Err(Error::SiteOutOfRange { .. })));
        assert!(matches!(glauber_rate(cfg("++++"), 0, &p), Err(Error::SizeMismatch { .. })));
        let open = p.with_boundary(Boundary::Open);
        // end site sees only its right neighbor
        let t = end_site_bias(0.5);
        assert!((glauber_rate(cfg("++-"), 0, &open).unwrap() - (1.0 - t)).abs() < 1e-15);
        assert!((glauber_rate(cfg("-++"), 0, &open).unwrap() - (1.0 + t)).abs() < 1e-15);
        assert!((glauber_rate(cfg("++-"), 1, &open).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rates_nonnegative_on_grid() {
        for n in 3..=10 {
            for gi in 0..=10 {
                for di in 0..=10 {
                    let p = ModelParams::new(n, gi as f64 / 10.0, -1.0 + di as f64 / 5.0).unwrap();
                    for b in 0..1u64 << n {
                        for i in 0..n {
                            assert!(GlauberRates.rate(b, i, &p) >= 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn detailed_balance_examples() {
        for &g in &[0.0, 0.4, 0.8, 0.95, 1.0] {
            for &d in &[-1.0, -0.3, 0.0, 0.6, 1.0] {
                let p = ModelParams::new(6, g, d).unwrap();
                let rep = check_detailed_balance(&GlauberRates, &p).unwrap();
                assert!(rep.holds && rep.max_violation < 1e-12, "g={g} d={d}: {rep:?}");
            }
        }
        let p = ModelParams::new(6, 0.0, 0.0).unwrap();
        assert_eq!(check_detailed_balance(&GlauberRates, &p).unwrap().max_violation, 0.0);
    }

    #[test]
    fn mismatched_gamma_breaks_detailed_balance() {
        // Rates evaluated at γ = 0.5 while the equilibrium is at βJ = 1.
        let eq = ModelParams::from_beta(6, 1.0, 1.0, 0.0).unwrap();
        let wrong = |bits: u64, i: usize, p: &ModelParams| {
            let mut q = *p;
            q.gamma = 0.5;
            GlauberRates.rate(bits, i, &q)
        };
        let rep = check_detailed_balance(&wrong, &eq).unwrap();
        assert!(!rep.holds);
        // The all-up pair alone: fwd = 0.5, bwd = 1.5·e^{-4}.
        let pair = (0.5 - 1.5 * (-4f64).exp()) / 0.5;
        assert!(rep.max_violation >= pair - 1e-12, "{rep:?} vs {pair}");
    }

    #[test]
    fn v_rate_flip_symmetric() {
        for gi in 0..=10 {
            for di in 0..=8 {
                let p = ModelParams::new(6, gi as f64 / 10.0, -1.0 + di as f64 / 4.0).unwrap();
                for b in 0..64u64 {
                    for i in 0..6 {
                        let c = SpinConfig::new(b, 6).unwrap();
                        let v = v_rate(c, i, &p).unwrap();
                        let vf = v_rate(c.flip(i).unwrap(), i, &p).unwrap();
                        assert!((v - vf).abs() < 1e-12, "g={} b={b} i={i}", p.gamma);
                    }
                }
            }
        }
    }

    #[test]
    fn v_rate_examples() {
        let p = ModelParams::new(5, 0.0, 0.4).unwrap();
        for b in 0..32u64 {
            let c = SpinConfig::new(b, 5).unwrap();
            let (l, r) = p.neighbors(2);
            let expect = 1.0 + 0.4 * c.spin(l) * c.spin(r);
            assert!((v_rate(c, 2, &p).unwrap() - expect).abs() < 1e-15);
            assert_eq!(v_rate(c, 2, &p).unwrap(), glauber_rate(c, 2, &p).unwrap());
        }
        // N=4, γ=0.8, δ=0.3, all up, site 0: w = 1.3·0.2, e^{2βJ} = √(1.8/0.2) = 3.
        let p = ModelParams::new(4, 0.8, 0.3).unwrap();
        let v = v_rate(cfg("++++"), 0, &p).unwrap();
        assert!((v - 1.3 * 0.2 * 3.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_rate_clamps_noise_only() {
        assert_eq!(sqrt_rate(-1e-16, 0, 0).unwrap(), 0.0);
        assert_eq!(sqrt_rate(4.0, 0, 0).unwrap(), 2.0);
        assert!(matches!(sqrt_rate(-1e-6, 3, 1), Err(Error::NegativeRate { .. })));
    }
}
