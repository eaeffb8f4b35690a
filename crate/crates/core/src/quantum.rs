//! The dissipative quantum master equation
//! ρ̇ = Σ_i [L_i ρ L_i† − ½{L_i†L_i, ρ}], L_i = σ^x_i √w_i(σ^z),
//! its vectorization and the decomposition into τ sectors.
//!
//! A density matrix on N spins is vectorized row-major, |ρ⟩ = Σ ρ(σ,σ̃) |σ⟩|σ̃⟩
//! at index σ·2^N + σ̃. The products τ_i = σ_iσ̃_i are conserved, so the
//! 4^N-dimensional generator splits into 2^N blocks. A block is indexed by σ,
//! with σ̃ = σ XOR τ.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonians::build_h_tau;
use crate::linalg::{eigh, eigvalsh, expm, DenseMatrix};
use crate::model::{bond_sum, equilibrium_distribution, spin_of, ModelParams, SpinConfig, TauSector};
use crate::pool::parallel_map;
use crate::rates::{sqrt_rate, GlauberRates, RateFunction};
use crate::spectra::KERNEL_TOL;

pub type C64 = Complex64;

/// Largest chain for dense density matrices and the full Lindbladian.
pub const MAX_DENSITY_SITES: usize = 7;
/// Tolerance on trace, Hermiticity and negativity of propagated states.
pub const STATE_TOL: f64 = 1e-9;
/// Tolerances applied when constructing a density matrix.
pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    data: Vec<C64>,
}

fn check_size(n_sites: usize) -> Result<()> {
    if n_sites == 0 {
        return Err(Error::InvalidParams("need at least one site".into()));
    }
    if n_sites > MAX_DENSITY_SITES {
        return Err(Error::TooLarge { n_sites, max: MAX_DENSITY_SITES });
    }
    Ok(())
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(n_sites: usize, data: Vec<C64>) -> Result<Self> {
        let rho = Self::unchecked(n_sites, data)?;
        rho.validate(HERMITIAN_TOL, TRACE_TOL, PSD_TOL)?;
        Ok(rho)
    }

    fn unchecked(n_sites: usize, data: Vec<C64>) -> Result<Self> {
        check_size(n_sites)?;
        let dim = 1usize << n_sites;
        if data.len() != dim * dim {
            return Err(Error::InvalidParams(format!(
                "density matrix needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(DensityMatrix { n_sites, data })
    }

    pub fn validate(&self, herm_tol: f64, trace_tol: f64, psd_tol: f64) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > herm_tol {
            return Err(Error::Numerical(format!("density matrix not Hermitian (defect {h:e})")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > trace_tol {
            return Err(Error::Numerical(format!("density matrix trace {tr} differs from 1")));
        }
        let m = self.min_eigenvalue()?;
        if m < -psd_tol {
            return Err(Error::Numerical(format!("density matrix has eigenvalue {m:e}")));
        }
        Ok(())
    }

    /// |ψ⟩⟨ψ| for a normalized state vector.
    pub fn pure(n_sites: usize, psi: &[C64]) -> Result<Self> {
        check_size(n_sites)?;
        let dim = 1usize << n_sites;
        if psi.len() != dim {
            return Err(Error::InvalidParams(format!("state vector needs {dim} entries")));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidParams(format!("state vector has norm² {norm}")));
        }
        let data = (0..dim * dim).map(|k| psi[k / dim] * psi[k % dim].conj()).collect();
        Self::new(n_sites, data)
    }

    /// ⊗_i |φ_i⟩⟨φ_i| with φ_i = (amplitude of σ_i = +1, amplitude of σ_i = −1).
    pub fn product_state(local: &[[C64; 2]]) -> Result<Self> {
        let n = local.len();
        check_size(n)?;
        for (i, v) in local.iter().enumerate() {
            let norm = v[0].norm_sqr() + v[1].norm_sqr();
            if (norm - 1.0).abs() > TRACE_TOL {
                return Err(Error::InvalidParams(format!("local state {i} has norm² {norm}")));
            }
        }
        let psi: Vec<C64> = (0..1usize << n)
            .map(|b| (0..n).map(|i| local[i][(b >> i) & 1]).product())
            .collect();
        Self::pure(n, &psi)
    }

    /// Diagonal P_eq(σ).
    pub fn thermal(params: &ModelParams) -> Result<Self> {
        check_size(params.n_sites)?;
        let p = equilibrium_distribution(params)?;
        Self::diagonal(params.n_sites, &p)
    }

    pub fn diagonal(n_sites: usize, p: &[f64]) -> Result<Self> {
        check_size(n_sites)?;
        let dim = 1usize << n_sites;
        if p.len() != dim {
            return Err(Error::InvalidParams(format!("distribution needs {dim} entries")));
        }
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for (k, &x) in p.iter().enumerate() {
            data[k * dim + k] = C64::new(x, 0.0);
        }
        Self::new(n_sites, data)
    }

    /// (|↑…↑⟩ ± |↓…↓⟩)/√2.
    pub fn ghz(n_sites: usize, plus: bool) -> Result<Self> {
        Self::ghz_mixture(n_sites, if plus { 1.0 } else { 0.0 })
    }

    /// p·GHZ₊ + (1−p)·GHZ₋. The corner coherences equal p − ½.
    pub fn ghz_mixture(n_sites: usize, p: f64) -> Result<Self> {
        check_size(n_sites)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("mixing weight {p} outside [0, 1]")));
        }
        let dim = 1usize << n_sites;
        let last = dim - 1;
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        data[0] = C64::new(0.5, 0.0);
        data[last * dim + last] = C64::new(0.5, 0.0);
        data[last] = C64::new(p - 0.5, 0.0);
        data[last * dim] = C64::new(p - 0.5, 0.0);
        Self::new(n_sites, data)
    }

    /// |→…→⟩⟨→…→|: every entry 2^{−N}.
    pub fn uniform_superposition(n_sites: usize) -> Result<Self> {
        check_size(n_sites)?;
        let dim = 1usize << n_sites;
        Self::new(n_sites, vec![C64::new(1.0 / dim as f64, 0.0); dim * dim])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn get(&self, sigma: usize, sigma_tilde: usize) -> C64 {
        self.data[sigma * self.dim() + sigma_tilde]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|k| self.get(k, k)).sum()
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.get(k, k).re).collect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for i in 0..d {
            for j in i..d {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }

    /// Smallest eigenvalue, from the real symmetric embedding [[Re, −Im], [Im, Re]].
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let d = self.dim();
        let herm = |i: usize, j: usize| 0.5 * (self.get(i, j) + self.get(j, i).conj());
        let big = DenseMatrix::from_fn(2 * d, 2 * d, |r, c| {
            let z = herm(r % d, c % d);
            match (r < d, c < d) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        // every eigenvalue appears twice in the embedding
        Ok(eigvalsh(&big)?.into_iter().step_by(2).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> DensityJson {
        let d = self.dim();
        let entries = self
            .data
            .iter()
            .enumerate()
            .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
            .map(|(k, z)| (k / d, k % d, z.re, z.im))
            .collect();
        DensityJson { n_sites: self.n_sites, entries }
    }

    pub fn from_json(j: &DensityJson) -> Result<Self> {
        check_size(j.n_sites)?;
        let d = 1usize << j.n_sites;
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for &(r, c, re, im) in &j.entries {
            if r >= d || c >= d {
                return Err(Error::Parse(format!("entry ({r}, {c}) outside a {d}×{d} matrix")));
            }
            data[r * d + c] = C64::new(re, im);
        }
        Self::new(j.n_sites, data)
    }
}

/// File form of a density matrix: nonzero entries as [row, col, re, im].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DensityJson {
    pub n_sites: usize,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

/// |ρ⟩ with entry σ·2^N + σ̃ equal to ρ(σ, σ̃).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorizedState {
    pub n_sites: usize,
    pub data: Vec<C64>,
}

impl From<&DensityMatrix> for VectorizedState {
    fn from(rho: &DensityMatrix) -> Self {
        VectorizedState { n_sites: rho.n_sites, data: rho.data.clone() }
    }
}

impl VectorizedState {
    /// Back to matrix form without the physical-state checks.
    pub fn to_matrix_unchecked(&self) -> Result<DensityMatrix> {
        DensityMatrix::unchecked(self.n_sites, self.data.clone())
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.n_sites, self.data.clone())
    }
}

/// The amplitudes ρ(σ, σ XOR τ) of one sector, indexed by σ.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBlock {
    pub tau: TauSector,
    pub amplitudes: Vec<C64>,
}

impl SectorBlock {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn tau_bits(&self) -> usize {
        self.tau.bits().expect("dense sizes") as usize
    }
}

pub fn tau_sector_of(sigma: SpinConfig, sigma_tilde: SpinConfig) -> Result<TauSector> {
    if sigma.n_sites() != sigma_tilde.n_sites() {
        return Err(Error::SizeMismatch { expected: sigma.n_sites(), found: sigma_tilde.n_sites() });
    }
    TauSector::from_bits(sigma.bits() ^ sigma_tilde.bits(), sigma.n_sites())
}

/// All 2^N blocks in order of τ bits.
pub fn decompose(state: &VectorizedState) -> Vec<SectorBlock> {
    let n = state.n_sites;
    let dim = 1usize << n;
    (0..dim)
        .map(|t| SectorBlock {
            tau: TauSector::from_bits(t as u64, n).expect("valid"),
            amplitudes: (0..dim).map(|s| state.data[s * dim + (s ^ t)]).collect(),
        })
        .collect()
}

pub fn reassemble(blocks: &[SectorBlock], n_sites: usize) -> Result<VectorizedState> {
    check_size(n_sites)?;
    let dim = 1usize << n_sites;
    if blocks.len() != dim {
        return Err(Error::InvalidParams(format!("expected {dim} sector blocks, got {}", blocks.len())));
    }
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    let mut seen = vec![false; dim];
    for b in blocks {
        if b.tau.n_sites() != n_sites || b.amplitudes.len() != dim {
            return Err(Error::SizeMismatch { expected: n_sites, found: b.tau.n_sites() });
        }
        let t = b.tau_bits();
        if std::mem::replace(&mut seen[t], true) {
            return Err(Error::InvalidParams(format!("sector {t} given twice")));
        }
        for (s, &z) in b.amplitudes.iter().enumerate() {
            data[s * dim + (s ^ t)] = z;
        }
    }
    Ok(VectorizedState { n_sites, data })
}

/// The full 4^N generator in sparse (row, col, value) form, sorted by row
/// then column, duplicates merged. All entries are real.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    pub n_sites: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Assembled term by term from vec(AρB) = (A ⊗ Bᵀ)|ρ⟩:
/// L_i ρ L_i† → L_i ⊗ L_i, −½L_i†L_iρ → −½ diag(w_i) ⊗ 1, −½ρL_i†L_i → −½ 1 ⊗ diag(w_i).
pub fn build_lindbladian<R: RateFunction + ?Sized>(rate: &R, params: &ModelParams) -> Result<Lindbladian> {
    check_size(params.n_sites)?;
    params.validate()?;
    let n = params.n_sites;
    let dim = 1usize << n;
    let mut sqrt_w = vec![vec![0.0; dim]; n];
    let mut w = vec![vec![0.0; dim]; n];
    for i in 0..n {
        for s in 0..dim {
            let r = rate.rate(s as u64, i, params);
            sqrt_w[i][s] = sqrt_rate(r, s as u64, i)?;
            w[i][s] = r;
        }
    }
    let mut entries = Vec::with_capacity(dim * dim * (n + 1));
    for s in 0..dim {
        for st in 0..dim {
            let col = s * dim + st;
            let mut diag = 0.0;
            for i in 0..n {
                let amp = sqrt_w[i][s] * sqrt_w[i][st];
                if amp != 0.0 {
                    let row = (s ^ (1 << i)) * dim + (st ^ (1 << i));
                    entries.push((row, col, amp));
                }
                diag -= 0.5 * (w[i][s] + w[i][st]);
            }
            entries.push((col, col, diag));
        }
    }
    entries.sort_by_key(|&(r, c, _)| (r, c));
    entries.dedup_by(|b, a| {
        if a.0 == b.0 && a.1 == b.1 {
            a.2 += b.2;
            true
        } else {
            false
        }
    });
    Ok(Lindbladian { n_sites: n, entries })
}

impl Lindbladian {
    pub fn dim(&self) -> usize {
        1 << (2 * self.n_sites)
    }

    pub fn apply(&self, state: &VectorizedState) -> Result<VectorizedState> {
        if state.n_sites != self.n_sites {
            return Err(Error::SizeMismatch { expected: self.n_sites, found: state.n_sites });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for &(r, c, v) in &self.entries {
            out[r] += state.data[c] * v;
        }
        Ok(VectorizedState { n_sites: self.n_sites, data: out })
    }

    /// Dense 4^N × 4^N form, for N ≤ 5.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        if self.n_sites > 5 {
            return Err(Error::TooLarge { n_sites: self.n_sites, max: 5 });
        }
        let mut m = DenseMatrix::zeros(self.dim(), self.dim());
        for &(r, c, v) in &self.entries {
            m.add_at(r, c, v);
        }
        Ok(m)
    }

    /// Nonzero entries connecting different τ sectors.
    pub fn cross_sector_entries(&self) -> usize {
        let d = 1usize << self.n_sites;
        let tau = |k: usize| (k / d) ^ (k % d);
        self.entries.iter().filter(|&&(r, c, v)| v != 0.0 && tau(r) != tau(c)).count()
    }

    /// The block acting on sector τ, in block coordinates.
    pub fn sector_block(&self, tau: &TauSector) -> Result<DenseMatrix> {
        let d = 1usize << self.n_sites;
        let t = tau.bits().ok_or_else(|| Error::InvalidParams("tau too long".into()))? as usize;
        let mut m = DenseMatrix::zeros(d, d);
        for &(r, c, v) in &self.entries {
            let (rs, rt) = (r / d, r % d);
            let (cs, ct) = (c / d, c % d);
            if rs ^ rt == t && cs ^ ct == t {
                m.add_at(rs, cs, v);
            }
        }
        Ok(m)
    }
}

/// dρ/dt evaluated with explicit 2^N × 2^N jump-operator matrices.
pub fn lindblad_rhs<R: RateFunction + ?Sized>(
    rho: &DensityMatrix,
    rate: &R,
    params: &ModelParams,
) -> Result<DensityMatrix> {
    if rho.n_sites != params.n_sites {
        return Err(Error::SizeMismatch { expected: params.n_sites, found: rho.n_sites });
    }
    let n = params.n_sites;
    let d = 1usize << n;
    let re = DenseMatrix::from_fn(d, d, |i, j| rho.get(i, j).re);
    let im = DenseMatrix::from_fn(d, d, |i, j| rho.get(i, j).im);
    let mut out_re = DenseMatrix::zeros(d, d);
    let mut out_im = DenseMatrix::zeros(d, d);
    for i in 0..n {
        let mut jump = DenseMatrix::zeros(d, d);
        let mut ww = DenseMatrix::zeros(d, d);
        for s in 0..d {
            let r = rate.rate(s as u64, i, params);
            jump.set(s ^ (1 << i), s, sqrt_rate(r, s as u64, i)?);
            ww.set(s, s, r);
        }
        let jt = jump.transpose();
        for (x, out) in [(&re, &mut out_re), (&im, &mut out_im)] {
            let sandwich = jump.matmul(x).matmul(&jt);
            let anti = ww.matmul(x).add(&x.matmul(&ww)).scale(0.5);
            *out = out.add(&sandwich.sub(&anti));
        }
    }
    let data = (0..d * d).map(|k| C64::new(out_re.as_slice()[k], out_im.as_slice()[k])).collect();
    DensityMatrix::unchecked(n, data)
}

/// The sector generator M_τ in ρ coordinates, ρ̇_τ = M_τ ρ_τ:
/// M[D_iσ, σ] = √(w_i(σ) w_i(σ⊕τ)), M[σ, σ] = −½Σ_i [w_i(σ) + w_i(σ⊕τ)].
pub fn sector_generator<R: RateFunction + ?Sized>(
    rate: &R,
    tau: &TauSector,
    params: &ModelParams,
) -> Result<DenseMatrix> {
    params.check_tau(tau)?;
    let n = params.n_sites;
    let d = 1usize << n;
    let t = tau.bits().expect("checked") as usize;
    let mut m = DenseMatrix::zeros(d, d);
    for s in 0..d {
        let st = s ^ t;
        for i in 0..n {
            let (w, wt) = (rate.rate(s as u64, i, params), rate.rate(st as u64, i, params));
            let amp = sqrt_rate(w, s as u64, i)? * sqrt_rate(wt, st as u64, i)?;
            m.add_at(s ^ (1 << i), s, amp);
            m.add_at(s, s, -0.5 * (w + wt));
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// ρ → ψ, multiply by exp{+(β/4)[H(σ) + H(σ̃)]}.
    Forward,
    /// ψ → ρ.
    Inverse,
}

/// Componentwise factors exp{+(β/4)[H(σ) + H(σ̃)]} for one sector.
fn transform_factors(tau_bits: u64, params: &ModelParams) -> Result<Vec<f64>> {
    if params.gamma >= 1.0 {
        return Err(Error::Unsupported(
            "the similarity transform is singular at gamma = 1; propagate with the sector generator".into(),
        ));
    }
    let n = params.n_sites;
    Ok((0..1u64 << n)
        .map(|s| {
            let b = bond_sum(s, n, params.boundary) + bond_sum(s ^ tau_bits, n, params.boundary);
            // βH = −βJ·(bond sum)
            params.bond_weight(-0.25 * b)
        })
        .collect())
}

pub fn similarity_transform(block: &SectorBlock, params: &ModelParams, direction: Direction) -> Result<SectorBlock> {
    params.check_tau(&block.tau)?;
    let f = transform_factors(block.tau.bits().expect("checked"), params)?;
    let amplitudes = block
        .amplitudes
        .iter()
        .zip(&f)
        .map(|(z, &x)| match direction {
            Direction::Forward => z * x,
            Direction::Inverse => z / x,
        })
        .collect();
    Ok(SectorBlock { tau: block.tau.clone(), amplitudes })
}

/// Time evolution of one sector. For γ < 1 this is
/// ρ_τ(t) = S⁻¹ V e^{−tΛ} Vᵀ S ρ_τ(0) with H_τ = VΛVᵀ; at γ = 1 it falls back
/// to exponentiating the sector generator directly.
#[derive(Clone, Debug)]
pub struct SectorPropagator {
    pub tau: TauSector,
    route: Route,
}

#[derive(Clone, Debug)]
enum Route {
    Spectral { values: Vec<f64>, vectors: DenseMatrix, factors: Vec<f64>, tolerance: f64 },
    Generator(DenseMatrix),
}

impl SectorPropagator {
    pub fn new(tau: &TauSector, params: &ModelParams) -> Result<Self> {
        params.check_tau(tau)?;
        let route = if params.gamma < 1.0 {
            let h = build_h_tau(tau, params)?;
            let e = eigh(&h.matrix)?;
            let norm = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Route::Spectral {
                values: e.values,
                vectors: e.vectors,
                factors: transform_factors(tau.bits().expect("checked"), params)?,
                tolerance: KERNEL_TOL * norm.max(1.0),
            }
        } else {
            Route::Generator(sector_generator(&GlauberRates, tau, params)?)
        };
        Ok(SectorPropagator { tau: tau.clone(), route })
    }

    /// Smallest eigenvalue of H_τ (γ < 1) or minus the largest real part
    /// among the generator's diagonal-dominant modes (γ = 1, via H_τ itself).
    pub fn min_eigenvalue(&self) -> Option<f64> {
        match &self.route {
            Route::Spectral { values, .. } => values.first().copied(),
            Route::Generator(_) => None,
        }
    }

    /// Real propagator matrix acting on ρ_τ. `t = f64::INFINITY` gives the
    /// projector onto the stationary part.
    pub fn matrix(&self, t: f64) -> Result<DenseMatrix> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        match &self.route {
            Route::Spectral { values, vectors, factors, tolerance } => {
                let d = values.len();
                let decay: Vec<f64> = values
                    .iter()
                    .map(|&l| if t.is_infinite() { if l.abs() <= *tolerance { 1.0 } else { 0.0 } } else { (-t * l).exp() })
                    .collect();
                let mut scaled = vectors.clone();
                for r in 0..d {
                    for c in 0..d {
                        scaled.set(r, c, vectors.get(r, c) * decay[c]);
                    }
                }
                let core = scaled.matmul(&vectors.transpose());
                Ok(DenseMatrix::from_fn(d, d, |r, c| core.get(r, c) * factors[c] / factors[r]))
            }
            Route::Generator(m) => {
                if t.is_infinite() {
                    return Err(Error::Unsupported("stationary projector at gamma = 1".into()));
                }
                expm(&m.scale(t))
            }
        }
    }

    pub fn apply(&self, block: &SectorBlock, t: f64) -> Result<SectorBlock> {
        if block.tau != self.tau {
            return Err(Error::InvalidParams("block belongs to a different sector".into()));
        }
        let p = self.matrix(t)?;
        Ok(SectorBlock { tau: block.tau.clone(), amplitudes: apply_real(&p, &block.amplitudes) })
    }
}

fn apply_real(m: &DenseMatrix, v: &[C64]) -> Vec<C64> {
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    m.mul_vec(&re).into_iter().zip(m.mul_vec(&im)).map(|(a, b)| C64::new(a, b)).collect()
}

/// Propagators for every sector of a chain, built once and reused for any t.
#[derive(Clone, Debug)]
pub struct LindbladPropagator {
    pub params: ModelParams,
    sectors: Vec<SectorPropagator>,
}

impl LindbladPropagator {
    pub fn new(params: &ModelParams, jobs: usize) -> Result<Self> {
        check_size(params.n_sites)?;
        params.require_periodic("Lindblad propagation")?;
        let n = params.n_sites;
        let taus: Vec<TauSector> =
            (0..1u64 << n).map(|b| TauSector::from_bits(b, n)).collect::<Result<_>>()?;
        let sectors = parallel_map(&taus, jobs, |t| SectorPropagator::new(t, params))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(LindbladPropagator { params: *params, sectors })
    }

    pub fn sector(&self, tau_bits: usize) -> &SectorPropagator {
        &self.sectors[tau_bits]
    }

    /// ρ(t) without the output checks.
    pub fn evolve_unchecked(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho0.n_sites != self.params.n_sites {
            return Err(Error::SizeMismatch { expected: self.params.n_sites, found: rho0.n_sites });
        }
        let blocks = decompose(&VectorizedState::from(rho0));
        let out = blocks
            .iter()
            .zip(&self.sectors)
            .map(|(b, p)| p.apply(b, t))
            .collect::<Result<Vec<_>>>()?;
        reassemble(&out, rho0.n_sites)?.to_matrix_unchecked()
    }

    /// ρ(t), checked to be Hermitian, trace one and positive within [`STATE_TOL`].
    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        let rho = self.evolve_unchecked(rho0, t)?;
        rho.validate(STATE_TOL, STATE_TOL, STATE_TOL)?;
        Ok(rho)
    }

    /// The t → ∞ limit (γ < 1).
    pub fn stationary_limit(&self, rho0: &DensityMatrix) -> Result<DensityMatrix> {
        self.evolve(rho0, f64::INFINITY)
    }
}

pub fn propagate_density(rho0: &DensityMatrix, params: &ModelParams, t: f64) -> Result<DensityMatrix> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if rho0.n_sites != params.n_sites {
        return Err(Error::SizeMismatch { expected: params.n_sites, found: rho0.n_sites });
    }
    LindbladPropagator::new(params, 1)?.evolve(rho0, t)
}

/// Smallest eigenvalue of H_τ: the asymptotic decay rate of the sector's
/// coherences (zero when the sector carries a stationary part).
pub fn coherence_decay_rate(tau: &TauSector, params: &ModelParams) -> Result<f64> {
    params.require_dense(12)?;
    Ok(eigvalsh(&build_h_tau(tau, params)?.matrix)?[0])
}

/// Norms of every sector block of ρ, in τ order.
pub fn sector_norms(rho: &DensityMatrix) -> Vec<f64> {
    decompose(&VectorizedState::from(rho)).iter().map(SectorBlock::norm).collect()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SectorRow {
    pub tau_bits: u64,
    pub min_eigenvalue: f64,
    pub sector_norm_initial: f64,
    pub sector_norm_final: f64,
}

pub fn sector_report(prop: &LindbladPropagator, rho0: &DensityMatrix, t: f64) -> Result<Vec<SectorRow>> {
    let rho_t = prop.evolve(rho0, t)?;
    let (n0, nt) = (sector_norms(rho0), sector_norms(&rho_t));
    let n = prop.params.n_sites;
    (0..1usize << n)
        .map(|k| {
            let min_eigenvalue = match prop.sector(k).min_eigenvalue() {
                Some(v) => v,
                None => coherence_decay_rate(&TauSector::from_bits(k as u64, n)?, &prop.params)?,
            };
            Ok(SectorRow { tau_bits: k as u64, min_eigenvalue, sector_norm_initial: n0[k], sector_norm_final: nt[k] })
        })
        .collect()
}

pub fn write_sector_csv<W: std::io::Write>(rows: &[SectorRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Value of σ_i^z on basis index `k`, re-exported for tests and callers that
/// build observables.
pub fn basis_spin(k: usize, i: usize) -> f64 {
    spin_of(k as u64, i)
}
