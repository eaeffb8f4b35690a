//! Sector Hamiltonians H_τ(γ, δ) of the vectorized quantum master equation
//! and their special-case structure.
//!
//! For Glauber rates every H_τ is a sum of three-site terms
//!
//! ```text
//! h_i = Γ{ 1 − (γ/2)(1+δ) σ_i [f(τ_{i−1}τ_i) σ_{i−1} + f(τ_iτ_{i+1}) σ_{i+1}]
//!          + δ f(τ_{i−1}τ_{i+1}) σ_{i−1}σ_{i+1}
//!          − [Ã_i − B̃_i σ_{i−1}σ_{i+1}] σ^x_i }
//! ```
//!
//! with f(x) = (1+x)/2 and all σ without superscript being σ^z. The
//! coefficients satisfy A + B = 1 − δ, which is what makes the τ = 0 block the
//! symmetrized classical generator.

use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, DenseMatrix};
use crate::model::{spin_of, Boundary, ModelParams, SpinConfig, TauSector};
use crate::rates::{end_site_bias, v_rate_bits, RateFunction};

/// Largest chain for dense sector Hamiltonians.
pub const MAX_SECTOR_SITES: usize = 14;

#[inline]
fn f(x: f64) -> f64 {
    0.5 * (1.0 + x)
}

/// A(γ, δ) and B(γ, δ) for a homogeneous τ; Ã_i, B̃_i per site for the given τ.
#[derive(Clone, Debug, PartialEq)]
pub struct GlauberCoefficients {
    pub a: f64,
    pub b: f64,
    pub a_tilde: Vec<f64>,
    pub b_tilde: Vec<f64>,
}

/// A = (1+δ)(1+√(1−γ²))/2 − δ, the 0/0-free form of
/// (1+δ)γ²/[2(1−√(1−γ²))] − δ; B = 1 − δ − A.
pub fn coefficient_ab(gamma: f64, delta: f64) -> (f64, f64) {
    let s = (1.0 - gamma * gamma).max(0.0).sqrt();
    let a = 0.5 * (1.0 + delta) * (1.0 + s) - delta;
    let b = 0.5 * (1.0 - delta - (1.0 + delta) * s);
    (a, b)
}

/// Ã where τ_{i−1} = −τ_{i+1}: √(1−δ²)·(1−γ²)^{1/4}.
pub fn unequal_flip_amplitude(gamma: f64, delta: f64) -> f64 {
    (1.0 - delta * delta).max(0.0).sqrt() * (1.0 - gamma * gamma).max(0.0).sqrt().sqrt()
}

pub fn glauber_coefficients(tau: &TauSector, params: &ModelParams) -> Result<GlauberCoefficients> {
    params.check_tau(tau)?;
    let (a, b) = coefficient_ab(params.gamma, params.delta);
    let odd = unequal_flip_amplitude(params.gamma, params.delta);
    let n = params.n_sites;
    let mut a_tilde = Vec::with_capacity(n);
    let mut b_tilde = Vec::with_capacity(n);
    for i in 0..n {
        let (l, r) = neighbor_sites(params, i);
        if l.is_none() || r.is_none() {
            // open-chain end: heat-bath flip amplitude sech(βJ), either τ case
            let t = end_site_bias(params.gamma);
            a_tilde.push((1.0 - t * t).max(0.0).sqrt());
            b_tilde.push(0.0);
            continue;
        }
        if tau.spin(l.unwrap()) == tau.spin(r.unwrap()) {
            a_tilde.push(a);
            b_tilde.push(b);
        } else {
            a_tilde.push(odd);
            b_tilde.push(0.0);
        }
    }
    Ok(GlauberCoefficients { a, b, a_tilde, b_tilde })
}

fn neighbor_sites(params: &ModelParams, i: usize) -> (Option<usize>, Option<usize>) {
    let n = params.n_sites;
    match params.boundary {
        Boundary::Periodic => {
            let (l, r) = params.neighbors(i);
            (Some(l), Some(r))
        }
        Boundary::Open => (i.checked_sub(1), (i + 1 < n).then_some(i + 1)),
    }
}

/// One local term of H_τ, written as
/// `c0 + zl·Z_l Z_i + zr·Z_i Z_r + nn·Z_l Z_r + (x + zxz·Z_l Z_r)·X_i`.
/// Coefficients already include Γ. Missing neighbors (open chains) carry
/// zero coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteTerm {
    pub site: usize,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub c0: f64,
    pub zl: f64,
    pub zr: f64,
    pub nn: f64,
    pub x: f64,
    pub zxz: f64,
}

impl SiteTerm {
    /// Sites the term touches, left to right.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.left.into_iter().collect();
        s.push(self.site);
        s.extend(self.right);
        s
    }

    #[inline]
    fn diag(&self, sz: impl Fn(usize) -> f64) -> f64 {
        let si = sz(self.site);
        let sl = self.left.map(&sz).unwrap_or(0.0);
        let sr = self.right.map(&sz).unwrap_or(0.0);
        self.c0 + self.zl * sl * si + self.zr * si * sr + self.nn * sl * sr
    }

    #[inline]
    fn flip_amplitude(&self, sz: impl Fn(usize) -> f64) -> f64 {
        let sl = self.left.map(&sz).unwrap_or(0.0);
        let sr = self.right.map(&sz).unwrap_or(0.0);
        self.x + self.zxz * sl * sr
    }

    /// Smallest and largest site the term acts on nontrivially.
    pub fn interaction_range(&self) -> (usize, usize) {
        let reaches_left = self.zl != 0.0 || self.nn != 0.0 || self.zxz != 0.0;
        let reaches_right = self.zr != 0.0 || self.nn != 0.0 || self.zxz != 0.0;
        let lo = self.left.filter(|_| reaches_left).unwrap_or(self.site);
        let hi = self.right.filter(|_| reaches_right).unwrap_or(self.site);
        (lo, hi)
    }

    /// Matrix of the term on a register whose bit k is global site `sites[k]`.
    pub fn matrix_on(&self, sites: &[usize]) -> Result<DenseMatrix> {
        let pos = |s: usize| sites.iter().position(|&q| q == s);
        for s in self.support() {
            if pos(s).is_none() {
                return Err(Error::InvalidParams(format!("site {s} not in register {sites:?}")));
            }
        }
        let dim = 1usize << sites.len();
        let flip_bit = 1usize << pos(self.site).unwrap();
        let mut m = DenseMatrix::zeros(dim, dim);
        for b in 0..dim {
            let sz = |s: usize| spin_of(b as u64, pos(s).unwrap());
            m.add_at(b, b, self.diag(sz));
            m.add_at(b ^ flip_bit, b, self.flip_amplitude(sz));
        }
        Ok(m)
    }
}

/// The local terms of H_τ(γ, δ) for Glauber rates. On open chains nothing
/// couples across the missing bond between N−1 and 0, and the end sites carry
/// Γ[1 − tanh(βJ) f Z_iZ_nb − sech(βJ) X_i].
pub fn sector_terms(tau: &TauSector, params: &ModelParams) -> Result<Vec<SiteTerm>> {
    params.check_tau(tau)?;
    let n = params.n_sites;
    let min = if params.periodic() { 3 } else { 2 };
    if n < min {
        return Err(Error::InvalidParams(format!("sector Hamiltonians need N >= {min}")));
    }
    let coeffs = glauber_coefficients(tau, params)?;
    let g = params.rate_scale;
    let zz = 0.5 * params.gamma * (1.0 + params.delta);
    let end_zz = end_site_bias(params.gamma);
    let terms = (0..n)
        .map(|i| {
            let (left, right) = neighbor_sites(params, i);
            let zz = if left.is_some() && right.is_some() { zz } else { end_zz };
            let fl = left.map(|l| f(tau.spin(l) * tau.spin(i))).unwrap_or(0.0);
            let fr = right.map(|r| f(tau.spin(i) * tau.spin(r))).unwrap_or(0.0);
            let fnn = match (left, right) {
                (Some(l), Some(r)) => f(tau.spin(l) * tau.spin(r)),
                _ => 0.0,
            };
            let zxz = if left.is_some() && right.is_some() { g * coeffs.b_tilde[i] } else { 0.0 };
            SiteTerm {
                site: i,
                left,
                right,
                c0: g,
                zl: -g * zz * fl,
                zr: -g * zz * fr,
                nn: g * params.delta * fnn,
                x: -g * coeffs.a_tilde[i],
                zxz,
            }
        })
        .collect();
    Ok(terms)
}

/// Dense sum of site terms over the full 2^N configuration space.
pub fn assemble_terms(terms: &[SiteTerm], n_sites: usize) -> DenseMatrix {
    let dim = 1usize << n_sites;
    let mut m = DenseMatrix::zeros(dim, dim);
    for b in 0..dim {
        let sz = |s: usize| spin_of(b as u64, s);
        for t in terms {
            m.add_at(b, b, t.diag(sz));
            let amp = t.flip_amplitude(sz);
            if amp != 0.0 {
                m.add_at(b ^ (1 << t.site), b, amp);
            }
        }
    }
    m
}

/// A dense sector Hamiltonian together with the sector and parameters it was
/// built for.
#[derive(Clone, Debug)]
pub struct TauHamiltonian {
    pub tau: TauSector,
    pub params: ModelParams,
    pub matrix: DenseMatrix,
}

impl TauHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// H_τ(γ, δ) for Glauber rates, assembled from the closed-form local terms.
pub fn build_h_tau(tau: &TauSector, params: &ModelParams) -> Result<TauHamiltonian> {
    params.require_dense(MAX_SECTOR_SITES)?;
    let terms = sector_terms(tau, params)?;
    Ok(TauHamiltonian {
        tau: tau.clone(),
        params: *params,
        matrix: assemble_terms(&terms, params.n_sites),
    })
}

/// H_τ for arbitrary detailed-balance rates:
/// −Σ_i { σ^x_i √(v_i(σ) v_i(τσ)) − ½[w_i(σ) + w_i(τσ)] }.
pub fn build_h_tau_generic<R: RateFunction + ?Sized>(
    rate: &R,
    tau: &TauSector,
    params: &ModelParams,
) -> Result<TauHamiltonian> {
    params.require_dense(MAX_SECTOR_SITES)?;
    params.check_tau(tau)?;
    let n = params.n_sites;
    let tau_bits = tau.bits().expect("dense sizes fit in 64 bits");
    let dim = 1usize << n;
    let mut m = DenseMatrix::zeros(dim, dim);
    for b in 0..dim as u64 {
        let tb = b ^ tau_bits;
        for i in 0..n {
            let diag = 0.5 * (rate.rate(b, i, params) + rate.rate(tb, i, params));
            m.add_at(b as usize, b as usize, diag);
            let v = v_rate_bits(rate, b, i, params) * v_rate_bits(rate, tb, i, params);
            let amp = v.max(0.0).sqrt();
            m.add_at((b ^ (1 << i)) as usize, b as usize, -amp);
        }
    }
    Ok(TauHamiltonian { tau: tau.clone(), params: *params, matrix: m })
}

/// The Hamiltonian associated with the classical Glauber master equation,
/// −Γ Σ_i {[A − Bσ_{i−1}σ_{i+1}]σ^x_i − (1 + δσ_{i−1}σ_{i+1})[1 − (γ/2)σ_i(σ_{i−1}+σ_{i+1})]}.
pub fn build_glauber_hamiltonian(params: &ModelParams) -> Result<DenseMatrix> {
    params.require_dense(MAX_SECTOR_SITES)?;
    params.require_periodic("the Glauber Hamiltonian")?;
    let n = params.n_sites;
    let (a, b) = coefficient_ab(params.gamma, params.delta);
    let (g, gm, d) = (params.rate_scale, params.gamma, params.delta);
    let dim = 1usize << n;
    let mut m = DenseMatrix::zeros(dim, dim);
    for bits in 0..dim as u64 {
        for i in 0..n {
            let (l, r) = params.neighbors(i);
            let (sl, s, sr) = (spin_of(bits, l), spin_of(bits, i), spin_of(bits, r));
            let w = (1.0 + d * sl * sr) * (1.0 - 0.5 * gm * s * (sl + sr));
            m.add_at(bits as usize, bits as usize, g * w);
            m.add_at((bits ^ (1 << i)) as usize, bits as usize, -g * (a - b * sl * sr));
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalCase {
    /// τ_{i−1} = τ_{i+1}
    Equal,
    /// τ_{i−1} = −τ_{i+1}
    Unequal,
}

/// Distinct eigenvalues of one three-site term h_i; each is two-fold
/// degenerate on the 8-dimensional local space.
///
/// Equal case: 0, 2Γ(1−δ), Γ(1+δ)[1 ± √(1−γ² + f(τ_{i−1}τ_i)²γ²)].
/// Unequal case: Γ[1 ± ½√(γ²(1+δ)² + 4√(1−γ²)(1−δ²))].
pub fn local_term_eigenvalues(case: LocalCase, tau_pair_product: f64, params: &ModelParams) -> Vec<f64> {
    let (g, gm, d) = (params.rate_scale, params.gamma, params.delta);
    match case {
        LocalCase::Equal => {
            let ff = f(tau_pair_product);
            let root = (1.0 - gm * gm + ff * ff * gm * gm).max(0.0).sqrt();
            vec![0.0, 2.0 * g * (1.0 - d), g * (1.0 + d) * (1.0 + root), g * (1.0 + d) * (1.0 - root)]
        }
        LocalCase::Unequal => {
            let root = 0.5
                * (gm * gm * (1.0 + d).powi(2)
                    + 4.0 * (1.0 - gm * gm).max(0.0).sqrt() * (1.0 - d * d))
                    .sqrt();
            vec![g * (1.0 + root), g * (1.0 - root)]
        }
    }
}

/// The three-site term h_1 of a ring built around the τ triple
/// (τ_{i−1}, τ_i, τ_{i+1}), as an 8×8 matrix.
pub fn local_term_matrix(triple: [f64; 3], params: &ModelParams) -> Result<DenseMatrix> {
    let down: Vec<bool> = triple.iter().map(|&t| t < 0.0).collect();
    let tau = TauSector::from_down(down)?;
    let p = ModelParams { n_sites: 3, boundary: Boundary::Periodic, ..*params };
    let terms = sector_terms(&tau, &p)?;
    terms[1].matrix_on(&[0, 1, 2])
}

/// Subset sums Γ Σ_k λ_{q_k}, λ_q = 1 − γ cos q, over the momentum grid
/// q ∈ {±π/N, ±3π/N, …} (even N) or {0, ±2π/N, …} (odd N).
///
/// This is the unconstrained multiset; see [`free_fermion_parity_spectrum`]
/// for the one that matches the dense ring spectrum.
pub fn free_fermion_spectrum(params: &ModelParams) -> Result<Vec<f64>> {
    check_free_fermion(params)?;
    let n = params.n_sites;
    let momenta = if n % 2 == 0 { antiperiodic_momenta(n) } else { periodic_momenta(n) };
    let modes = dispersion(&momenta, params);
    Ok(subset_sums(&modes, None))
}

/// The exact spectrum of H_{τ=0}(γ, 0) on a ring as free fermions with
/// mode energies 2Γ(1 − γ cos q): even subsets of the antiperiodic grid
/// (global-flip-even states) together with odd subsets of the periodic grid
/// (global-flip-odd states). With these rates the slowest mode relaxes at
/// 2Γ(1 − γ), twice the lowest sum of [`free_fermion_spectrum`].
pub fn free_fermion_parity_spectrum(params: &ModelParams) -> Result<Vec<f64>> {
    check_free_fermion(params)?;
    let n = params.n_sites;
    let doubled = |m: Vec<f64>| m.into_iter().map(|x| 2.0 * x).collect::<Vec<_>>();
    let even = subset_sums(&doubled(dispersion(&antiperiodic_momenta(n), params)), Some(0));
    let odd = subset_sums(&doubled(dispersion(&periodic_momenta(n), params)), Some(1));
    let mut all = even;
    all.extend(odd);
    all.sort_by(f64::total_cmp);
    Ok(all)
}

fn check_free_fermion(params: &ModelParams) -> Result<()> {
    params.require_periodic("the free-fermion spectrum")?;
    if params.delta != 0.0 {
        return Err(Error::Unsupported("free-fermion spectrum requires delta = 0".into()));
    }
    if params.n_sites > 24 {
        return Err(Error::TooLarge { n_sites: params.n_sites, max: 24 });
    }
    Ok(())
}

/// q = (2k+1)π/N, k = 0..N.
pub fn antiperiodic_momenta(n: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (0..n).map(|k| (2 * k + 1) as f64 * pi / n as f64).collect()
}

/// q = 2πk/N, k = 0..N.
pub fn periodic_momenta(n: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (0..n).map(|k| 2.0 * pi * k as f64 / n as f64).collect()
}

fn dispersion(momenta: &[f64], params: &ModelParams) -> Vec<f64> {
    momenta.iter().map(|q| params.rate_scale * (1.0 - params.gamma * q.cos())).collect()
}

fn subset_sums(modes: &[f64], parity: Option<u32>) -> Vec<f64> {
    let mut out: Vec<f64> = (0..1u64 << modes.len())
        .filter(|m| parity.map_or(true, |p| m.count_ones() % 2 == p))
        .map(|m| modes.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, v)| v).sum())
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Commuting blocks of H_τ(γ, −1): maximal cyclic runs of term indices with
/// f_i = f(τ_{i−1}τ_{i+1}) = 1, separated by indices where f_i = 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub f: Vec<u8>,
    /// Term indices of each block in chain order; a block may wrap past N−1.
    pub blocks: Vec<Vec<usize>>,
    /// Indices with f_i = 0. On these sites σ^z is conserved at δ = −1.
    pub isolated_sites: Vec<usize>,
}

pub fn heisenberg_split(tau: &TauSector) -> Result<BlockDecomposition> {
    let n = tau.n_sites();
    if n < 3 {
        return Err(Error::InvalidParams("heisenberg_split needs N >= 3".into()));
    }
    let fv: Vec<u8> =
        (0..n).map(|i| (tau.spin((i + n - 1) % n) == tau.spin((i + 1) % n)) as u8).collect();
    let isolated_sites: Vec<usize> = (0..n).filter(|&i| fv[i] == 0).collect();
    let blocks = match isolated_sites.first() {
        None => vec![(0..n).collect()],
        Some(&z0) => {
            let mut blocks = Vec::new();
            let mut current = Vec::new();
            for k in 1..=n {
                let i = (z0 + k) % n;
                if fv[i] == 1 {
                    current.push(i);
                } else if !current.is_empty() {
                    blocks.push(std::mem::take(&mut current));
                }
            }
            blocks.sort_by_key(|b: &Vec<usize>| b[0]);
            blocks
        }
    };
    Ok(BlockDecomposition { f: fv, blocks, isolated_sites })
}

/// Spin-space operator Γ Σ_{i∈block} [1 − (1 − σ_{i−1}σ_{i+1})σ^x_i − σ_{i−1}σ_{i+1}]
/// of one δ = −1 block, on all N sites.
pub fn heisenberg_block_operator(block: &[usize], params: &ModelParams) -> Result<DenseMatrix> {
    params.require_dense(MAX_SECTOR_SITES)?;
    let terms = heisenberg_block_terms(block, params);
    Ok(assemble_terms(&terms, params.n_sites))
}

fn heisenberg_block_terms(block: &[usize], params: &ModelParams) -> Vec<SiteTerm> {
    let g = params.rate_scale;
    block
        .iter()
        .map(|&i| {
            let (l, r) = params.neighbors(i);
            SiteTerm {
                site: i,
                left: Some(l),
                right: Some(r),
                c0: g,
                zl: 0.0,
                zr: 0.0,
                nn: -g,
                x: -g,
                zxz: g,
            }
        })
        .collect()
}

/// Spectrum of H_τ(γ, −1) assembled block by block: for every assignment of
/// the conserved σ^z on isolated sites, all sums of one eigenvalue per block
/// (each block diagonalized on its own flipped sites), plus Γ per isolated site.
pub fn heisenberg_combinatorial_spectrum(tau: &TauSector, params: &ModelParams) -> Result<Vec<f64>> {
    params.check_tau(tau)?;
    params.require_dense(MAX_SECTOR_SITES)?;
    params.require_periodic("heisenberg_combinatorial_spectrum")?;
    let split = heisenberg_split(tau)?;
    let n = params.n_sites;
    if split.isolated_sites.is_empty() {
        return eigvalsh(&heisenberg_block_operator(&split.blocks[0], params)?);
    }
    let g = params.rate_scale;
    let frozen = &split.isolated_sites;
    let mut out = Vec::with_capacity(1 << n);
    for assignment in 0..1u64 << frozen.len() {
        let frozen_spin = |site: usize| {
            let k = frozen.iter().position(|&q| q == site).expect("frozen site");
            spin_of(assignment, k)
        };
        let mut sums = vec![g * frozen.len() as f64];
        for block in &split.blocks {
            let spectrum = block_spectrum_with_boundary(block, params, &frozen_spin)?;
            sums = sums.iter().flat_map(|s| spectrum.iter().map(move |e| s + e)).collect();
        }
        out.extend(sums);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn block_spectrum_with_boundary(
    block: &[usize],
    params: &ModelParams,
    frozen_spin: &dyn Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    let k = block.len();
    let local = |site: usize| block.iter().position(|&q| q == site);
    let g = params.rate_scale;
    let dim = 1usize << k;
    let mut m = DenseMatrix::zeros(dim, dim);
    for b in 0..dim {
        let sz = |site: usize| match local(site) {
            Some(p) => spin_of(b as u64, p),
            None => frozen_spin(site),
        };
        for (p, &i) in block.iter().enumerate() {
            let (l, r) = params.neighbors(i);
            let zz = sz(l) * sz(r);
            m.add_at(b, b, g * (1.0 - zz));
            m.add_at(b ^ (1 << p), b, -g * (1.0 - zz));
        }
    }
    eigvalsh(&m)
}

/// All σ with zero energy under the diagonal H_τ(1, 1), i.e. solutions of
/// f(τ_{i−1}τ_i)σ_{i−1}σ_i + f(τ_iτ_{i+1})σ_iσ_{i+1} − f(τ_{i−1}τ_{i+1})σ_{i−1}σ_{i+1} = 1
/// for every i (periodic). Depth-first with each equation checked as soon as
/// its three spins are fixed.
pub fn diagonal_zero_states(tau: &TauSector) -> Result<Vec<SpinConfig>> {
    let n = tau.n_sites();
    if !(3..=24).contains(&n) {
        return Err(Error::InvalidParams(format!("diagonal_zero_states needs 3 <= N <= 24, got {n}")));
    }
    let t: Vec<f64> = (0..n).map(|i| tau.spin(i)).collect();
    let holds = |bits: u64, i: usize| {
        let (l, r) = ((i + n - 1) % n, (i + 1) % n);
        let (sl, s, sr) = (spin_of(bits, l), spin_of(bits, i), spin_of(bits, r));
        let lhs = f(t[l] * t[i]) * sl * s + f(t[i] * t[r]) * s * sr - f(t[l] * t[r]) * sl * sr;
        (lhs - 1.0).abs() < 1e-12
    };
    let mut out = Vec::new();
    let mut stack = vec![(0u64, 0usize)];
    while let Some((bits, assigned)) = stack.pop() {
        if assigned == n {
            if holds(bits, n - 1) && holds(bits, 0) {
                out.push(SpinConfig::new(bits, n)?);
            }
            continue;
        }
        for v in [1u64, 0] {
            let next = bits | (v << assigned);
            // Equation for site assigned−1 now has all three spins.
            if assigned >= 2 && !holds(next, assigned - 1) {
                continue;
            }
            stack.push((next, assigned + 1));
        }
    }
    out.sort();
    Ok(out)
}

/// Per-term coefficients of H_τ in bond variables Z_b = σ_{b−1}σ_b:
/// H = −Γ Σ_i { xx X_iX_{i+1} + yy Y_iY_{i+1} + zz Z_iZ_{i+1} − 1 + field_i Z_i }.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BondTerm {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub field: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BondRepresentation {
    pub rate_scale: f64,
    pub terms: Vec<BondTerm>,
}

pub fn bond_representation(tau: &TauSector, params: &ModelParams) -> Result<BondRepresentation> {
    params.check_tau(tau)?;
    params.require_periodic("bond_representation")?;
    let n = params.n_sites;
    let c = glauber_coefficients(tau, params)?;
    let terms = (0..n)
        .map(|i| {
            let (l, r) = params.neighbors(i);
            BondTerm {
                xx: c.a_tilde[i],
                yy: c.b_tilde[i],
                zz: -params.delta * f(tau.spin(l) * tau.spin(r)),
                field: params.gamma * (1.0 + params.delta) * f(tau.spin(l) * tau.spin(i)),
            }
        })
        .collect();
    Ok(BondRepresentation { rate_scale: params.rate_scale, terms })
}

impl BondRepresentation {
    pub fn n_bonds(&self) -> usize {
        self.terms.len()
    }

    /// The bond-variable operator on all 2^N bond configurations. With
    /// `twisted`, the flip terms of site 0 change sign, which is how the
    /// global-flip-odd spin states appear in bond variables.
    pub fn operator(&self, twisted: bool) -> DenseMatrix {
        let n = self.n_bonds();
        let g = self.rate_scale;
        let dim = 1usize << n;
        let mut m = DenseMatrix::zeros(dim, dim);
        for b in 0..dim {
            let z = |k: usize| spin_of(b as u64, k % n);
            for (i, t) in self.terms.iter().enumerate() {
                let (p, q) = (i, (i + 1) % n);
                let sign = if twisted && i == 0 { -1.0 } else { 1.0 };
                m.add_at(b, b, -g * (t.zz * z(p) * z(q) - 1.0 + t.field * z(p)));
                let flipped = b ^ (1 << p) ^ (1 << q);
                // Y_pY_q|z⟩ = −z_p z_q |flipped⟩
                let amp = t.xx - t.yy * z(p) * z(q);
                m.add_at(flipped, b, -g * sign * amp);
            }
        }
        m
    }

    /// Spectrum of the physical (ΠZ_b = +1) sector, untwisted and twisted,
    /// which together reproduce the 2^N spin-form eigenvalues.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let n = self.n_bonds();
        let even: Vec<usize> = (0..1usize << n).filter(|b| b.count_ones() % 2 == 0).collect();
        let mut all = Vec::with_capacity(1 << n);
        for twisted in [false, true] {
            let full = self.operator(twisted);
            let sub = DenseMatrix::from_fn(even.len(), even.len(), |i, j| full.get(even[i], even[j]));
            all.extend(eigvalsh(&sub)?);
        }
        all.sort_by(f64::total_cmp);
        Ok(all)
    }
}
