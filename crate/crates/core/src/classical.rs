//! The classical kinetic Ising master equation Ṗ = L·P and its
//! detailed-balance symmetrization H = −S⁻¹ L S with S = diag(√P_eq).
//!
//! Row and column index of every matrix here is the bit encoding of a spin
//! configuration (see [`crate::model`]).

use crate::error::{Error, Result};
use crate::linalg::{eigh, expm, DenseMatrix, Eigh};
use crate::model::{bond_sum, equilibrium_distribution, ModelParams};
use crate::rates::{check_detailed_balance, RateFunction, RATE_CLAMP};

/// Largest chain for the dense classical generator.
pub const MAX_GENERATOR_SITES: usize = 14;
/// Tolerance on the DBC violation for symmetrization.
pub const SYMMETRIZE_DBC_TOL: f64 = 1e-8;
/// Tolerated negativity / normalization drift of propagated distributions.
pub const PROBABILITY_TOL: f64 = 1e-10;

/// L[σ', σ] = rate σ → σ' off the diagonal; columns sum to zero.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    matrix: DenseMatrix,
    equilibrium: Option<Vec<f64>>,
}

impl GeneratorMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Equilibrium distribution, recorded when the rates obey detailed balance.
    pub fn equilibrium(&self) -> Option<&[f64]> {
        self.equilibrium.as_deref()
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(p)
    }

    /// Largest |column sum|.
    pub fn column_sum_defect(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| self.matrix.get(i, j)).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Real symmetric H with H·√P_eq = 0.
#[derive(Clone, Debug)]
pub struct SymmetrizedHamiltonian {
    matrix: DenseMatrix,
}

impl SymmetrizedHamiltonian {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }
}

pub fn build_generator<R: RateFunction + ?Sized>(
    rate: &R,
    params: &ModelParams,
) -> Result<GeneratorMatrix> {
    params.require_dense(MAX_GENERATOR_SITES)?;
    let n = params.n_sites;
    let dim = 1usize << n;
    let mut m = DenseMatrix::zeros(dim, dim);
    for bits in 0..dim as u64 {
        for i in 0..n {
            let w = rate.rate(bits, i, params);
            if w < -RATE_CLAMP {
                return Err(Error::NegativeRate { value: w, config: bits, site: i });
            }
            let w = w.max(0.0);
            let target = (bits ^ (1 << i)) as usize;
            m.add_at(target, bits as usize, w);
            m.add_at(bits as usize, bits as usize, -w);
        }
    }
    let dbc = check_detailed_balance(rate, params)?;
    let equilibrium = if dbc.holds { Some(equilibrium_distribution(params)?) } else { None };
    Ok(GeneratorMatrix { matrix: m, equilibrium })
}

/// H_{σσ'} = δ_{σσ'} Σ_{σ''} w(σ→σ'') − P_eq(σ)^{−1/2} w(σ'→σ) P_eq(σ')^{1/2}.
///
/// The ratio √(P_eq(σ')/P_eq(σ)) is evaluated from bond sums through γ, so the
/// matrix stays finite at γ = 1.
pub fn build_symmetrized_hamiltonian<R: RateFunction + ?Sized>(
    rate: &R,
    params: &ModelParams,
) -> Result<SymmetrizedHamiltonian> {
    params.require_dense(MAX_GENERATOR_SITES)?;
    let dbc = check_detailed_balance(rate, params)?;
    if dbc.max_violation > SYMMETRIZE_DBC_TOL {
        return Err(Error::DetailedBalance { max_violation: dbc.max_violation });
    }
    let n = params.n_sites;
    let dim = 1usize << n;
    let sums: Vec<f64> = (0..dim as u64).map(|b| bond_sum(b, n, params.boundary)).collect();
    let mut m = DenseMatrix::zeros(dim, dim);
    for src in 0..dim as u64 {
        for i in 0..n {
            let w = rate.rate(src, i, params);
            if w.abs() < RATE_CLAMP {
                continue;
            }
            let dst = src ^ (1 << i);
            m.add_at(src as usize, src as usize, w);
            // √(P(src)/P(dst)) = e^{βJ (b(src) − b(dst))/2}
            let ratio = params.bond_weight(0.5 * (sums[src as usize] - sums[dst as usize]));
            m.add_at(dst as usize, src as usize, -w * ratio);
        }
    }
    Ok(SymmetrizedHamiltonian { matrix: m })
}

/// Reusable propagator exp(tL): spectral when the symmetrized form exists,
/// scaling-and-squaring otherwise.
pub struct ClassicalPropagator {
    generator: DenseMatrix,
    spectral: Option<(Vec<f64>, Eigh)>,
}

impl ClassicalPropagator {
    pub fn new(l: &GeneratorMatrix) -> Result<Self> {
        let spectral = match l.equilibrium() {
            Some(peq) if peq.iter().all(|&p| p > 0.0) => {
                let s: Vec<f64> = peq.iter().map(|p| p.sqrt()).collect();
                let dim = l.dim();
                let h = DenseMatrix::from_fn(dim, dim, |i, j| -l.matrix.get(i, j) * s[j] / s[i]);
                Some((s, eigh(&h)?))
            }
            _ => None,
        };
        Ok(Self { generator: l.matrix.clone(), spectral })
    }

    pub fn propagate(&self, p0: &[f64], t: f64) -> Result<Vec<f64>> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        let dim = self.generator.rows();
        if p0.len() != dim {
            return Err(Error::InvalidParams(format!(
                "probability vector has length {}, expected {dim}",
                p0.len()
            )));
        }
        let total: f64 = p0.iter().sum();
        if p0.iter().any(|&p| p < -PROBABILITY_TOL) || (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidParams("initial vector is not a probability distribution".into()));
        }
        if t == 0.0 {
            return Ok(p0.to_vec());
        }
        let out = match &self.spectral {
            Some((s, e)) => {
                let phi0: Vec<f64> = p0.iter().zip(s).map(|(p, s)| p / s).collect();
                let coeffs = e.vectors.transpose().mul_vec(&phi0);
                let decayed: Vec<f64> =
                    coeffs.iter().zip(&e.values).map(|(c, l)| c * (-t * l).exp()).collect();
                let phi = e.vectors.mul_vec(&decayed);
                phi.iter().zip(s).map(|(x, s)| x * s).collect()
            }
            None => expm(&self.generator.scale(t))?.mul_vec(p0),
        };
        let sum: f64 = out.iter().sum();
        let min = out.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -PROBABILITY_TOL || (sum - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::Numerical(format!(
                "propagated distribution left the simplex (min {min:e}, sum {sum})"
            )));
        }
        Ok(out)
    }
}

/// P(t) = exp(tL)·P0.
pub fn propagate_probability(l: &GeneratorMatrix, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    ClassicalPropagator::new(l)?.propagate(p0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvalsh, multiset_max_diff};
    use crate::rates::GlauberRates;

    #[test]
    fn generator_columns_sum_to_zero() {
        let p = ModelParams::new(6, 0.7, 0.2).unwrap();
        let l = build_generator(&GlauberRates, &p).unwrap();
        assert!(l.column_sum_defect() < 1e-14);
        for i in 0..64 {
            for j in 0..64 {
                if i != j {
                    assert!(l.matrix().get(i, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn equilibrium_is_stationary() {
        let p = ModelParams::new(6, 0.7, 0.2).unwrap();
        let l = build_generator(&GlauberRates, &p).unwrap();
        let peq = equilibrium_distribution(&p).unwrap();
        assert!(l.apply(&peq).iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn infinite_temperature_generator() {
        let p = ModelParams::new(3, 0.0, 0.0).unwrap();
        let l = build_generator(&GlauberRates, &p).unwrap();
        for i in 0..8usize {
            for j in 0..8usize {
                let single = (i ^ j).count_ones() == 1;
                let v = l.matrix().get(i, j);
                if single {
                    assert_eq!(v, 1.0);
                } else if i != j {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn symmetrized_hamiltonian_properties() {
        let p = ModelParams::new(6, 0.6, -0.3).unwrap();
        let h = build_symmetrized_hamiltonian(&GlauberRates, &p).unwrap();
        assert!(h.matrix().symmetry_defect() < 1e-12);
        let phi0: Vec<f64> = equilibrium_distribution(&p).unwrap().iter().map(|x| x.sqrt()).collect();
        assert!(h.matrix().mul_vec(&phi0).iter().all(|x| x.abs() < 1e-12));
        // H = −S⁻¹ L S
        let l = build_generator(&GlauberRates, &p).unwrap();
        let sim = DenseMatrix::from_fn(64, 64, |i, j| -l.matrix().get(i, j) * phi0[j] / phi0[i]);
        assert!(sim.max_abs_diff(h.matrix()) < 1e-10);
    }

    #[test]
    fn spectrum_matches_generator() {
        let p = ModelParams::new(5, 0.45, 0.35).unwrap();
        let h = build_symmetrized_hamiltonian(&GlauberRates, &p).unwrap();
        let l = build_generator(&GlauberRates, &p).unwrap();
        // −L is similar to a symmetric matrix; symmetrize it independently via
        // the enumerated equilibrium and compare spectra.
        let peq = equilibrium_distribution(&p).unwrap();
        let s: Vec<f64> = peq.iter().map(|x| x.sqrt()).collect();
        let neg_l_sym = DenseMatrix::from_fn(32, 32, |i, j| -l.matrix().get(i, j) * s[j] / s[i]);
        let sym = neg_l_sym.add(&neg_l_sym.transpose()).scale(0.5);
        let a = eigvalsh(h.matrix()).unwrap();
        let b = eigvalsh(&sym).unwrap();
        assert!(multiset_max_diff(&a, &b).unwrap() < 1e-9);
        assert!(a[0].abs() < 1e-10 && a[1] > 1e-6);
    }

    #[test]
    fn symmetrization_rejects_non_dbc_rates() {
        let eq = ModelParams::from_beta(5, 1.0, 1.0, 0.0).unwrap();
        let wrong = |b: u64, i: usize, p: &ModelParams| {
            let mut q = *p;
            q.gamma = 0.5;
            GlauberRates.rate(b, i, &q)
        };
        assert!(matches!(
            build_symmetrized_hamiltonian(&wrong, &eq),
            Err(Error::DetailedBalance { .. })
        ));
        assert!(build_generator(&wrong, &eq).unwrap().equilibrium().is_none());
    }

    #[test]
    fn propagation_examples() {
        let p = ModelParams::new(5, 0.6, 0.0).unwrap();
        let l = build_generator(&GlauberRates, &p).unwrap();
        let mut p0 = vec![0.0; 32];
        p0[5] = 1.0;
        assert_eq!(propagate_probability(&l, &p0, 0.0).unwrap(), p0);
        let late = propagate_probability(&l, &p0, 50.0).unwrap();
        let peq = equilibrium_distribution(&p).unwrap();
        assert!(late.iter().zip(&peq).all(|(a, b)| (a - b).abs() < 1e-6));
        assert!(matches!(propagate_probability(&l, &p0, -1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn short_step_matches_linearization() {
        let p = ModelParams::new(5, 0.8, 0.4).unwrap();
        let l = build_generator(&GlauberRates, &p).unwrap();
        let p0: Vec<f64> = (0..32).map(|i| (i + 1) as f64 / 528.0).collect();
        let dt = 1e-6;
        let stepped = propagate_probability(&l, &p0, dt).unwrap();
        let lp = l.apply(&p0);
        for k in 0..32 {
            let euler = p0[k] + dt * lp[k];
            assert!((stepped[k] - euler).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn expm_route_agrees_with_spectral_route() {
        let p = ModelParams::new(4, 0.5, 0.1).unwrap();
        let l = build_generator(&GlauberRates, &p).unwrap();
        let raw = GeneratorMatrix { matrix: l.matrix().clone(), equilibrium: None };
        let p0: Vec<f64> = (0..16).map(|i| if i == 3 { 1.0 } else { 0.0 }).collect();
        for t in [0.1, 1.0, 7.0] {
            let a = propagate_probability(&l, &p0, t).unwrap();
            let b = propagate_probability(&raw, &p0, t).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }
}
