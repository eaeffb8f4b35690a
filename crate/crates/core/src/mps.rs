//! Real matrix-product states on open chains and imaginary-time TEBD with
//! three-site gates, used for sector ground states of long chains and their
//! bipartite entropy profiles.
//!
//! Site tensors are stored (left bond, physical, right bond) row-major. The
//! physical index follows the configuration encoding: 0 is σ^z = +1. Gates on
//! consecutive sites j, j+1, … use the local index Σ_k s_{j+k} 2^k, the same
//! convention as [`SiteTerm::matrix_on`].

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::hamiltonians::{sector_terms, SiteTerm};
use crate::linalg::{expm, svd, DenseMatrix};
use crate::model::{Boundary, ModelParams, TauSector};

/// Default truncation: weights below this are discarded.
pub const DEFAULT_CUTOFF: f64 = 1e-12;
pub const DEFAULT_CHI: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub dl: usize,
    pub dr: usize,
    /// (dl, 2, dr) row-major.
    pub data: Vec<f64>,
}

impl SiteTensor {
    pub fn get(&self, a: usize, s: usize, b: usize) -> f64 {
        self.data[(a * 2 + s) * self.dr + b]
    }

    fn from_matrix(dl: usize, m: DenseMatrix) -> Self {
        let dr = m.cols() * m.rows() / (2 * dl);
        SiteTensor { dl, dr, data: m.into_vec() }
    }

    fn grouped_left(&self) -> DenseMatrix {
        DenseMatrix::from_row_major(self.dl * 2, self.dr, self.data.clone()).expect("shape")
    }

    fn grouped_right(&self) -> DenseMatrix {
        DenseMatrix::from_row_major(self.dl, 2 * self.dr, self.data.clone()).expect("shape")
    }
}

/// Mixed-canonical MPS: sites left of `center` are left-orthonormal, sites to
/// its right right-orthonormal.
#[derive(Clone, Debug)]
pub struct MpsState {
    tensors: Vec<SiteTensor>,
    /// Normalized squared Schmidt coefficients at bond L (between sites L−1
    /// and L), stored at index L−1.
    schmidt: Vec<Vec<f64>>,
    center: usize,
    pub chi_max: usize,
    /// Total weight discarded by truncations so far.
    pub discarded_weight: f64,
}

/// Splitting policy for one SVD.
#[derive(Clone, Copy, Debug)]
struct Truncation {
    chi: usize,
    cutoff: f64,
}

const NO_TRUNCATION: Truncation = Truncation { chi: usize::MAX, cutoff: 0.0 };

/// Keep the leading singular values allowed by `t`, renormalized so the kept
/// squares sum to one. Returns (kept count, normalized s, discarded weight).
fn truncate(s: &[f64], t: Truncation) -> Result<(usize, Vec<f64>, f64)> {
    let total: f64 = s.iter().map(|x| x * x).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numerical(format!("state norm {total} in SVD split")));
    }
    let mut keep = s.iter().take_while(|&&x| x * x / total >= t.cutoff && x > 0.0).count();
    keep = keep.clamp(1, t.chi.max(1)).min(s.len());
    let kept: f64 = s[..keep].iter().map(|x| x * x).sum();
    let scale = 1.0 / kept.sqrt();
    Ok((keep, s[..keep].iter().map(|x| x * scale).collect(), 1.0 - kept / total))
}

fn weights(s: &[f64]) -> Vec<f64> {
    let total: f64 = s.iter().map(|x| x * x).sum();
    s.iter().map(|x| x * x / total).collect()
}

fn reverse_bits(x: usize, width: usize) -> usize {
    (0..width).fold(0, |acc, k| acc | (((x >> k) & 1) << (width - 1 - k)))
}

impl MpsState {
    /// Product state ⊗_i φ_i with φ_i = (amplitude of +1, amplitude of −1).
    pub fn from_product_state(local: &[[f64; 2]]) -> Result<Self> {
        if local.is_empty() {
            return Err(Error::InvalidParams("empty chain".into()));
        }
        for (i, v) in local.iter().enumerate() {
            let norm = v[0] * v[0] + v[1] * v[1];
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParams(format!("local state {i} has norm² {norm}")));
            }
        }
        let n = local.len();
        Ok(MpsState {
            tensors: local.iter().map(|v| SiteTensor { dl: 1, dr: 1, data: v.to_vec() }).collect(),
            schmidt: vec![vec![1.0]; n - 1],
            center: 0,
            chi_max: DEFAULT_CHI,
            discarded_weight: 0.0,
        })
    }

    /// MPS from a dense vector (index Σ_k s_k 2^k), by successive SVDs.
    pub fn from_dense(psi: &[f64], n_sites: usize) -> Result<Self> {
        if n_sites == 0 || psi.len() != 1 << n_sites {
            return Err(Error::InvalidParams(format!("vector length {} is not 2^{n_sites}", psi.len())));
        }
        // big-endian order so that site 0 is the slowest index
        let mut rest: Vec<f64> = (0..psi.len()).map(|c| psi[reverse_bits(c, n_sites)]).collect();
        let norm = rest.iter().map(|x| x * x).sum::<f64>().sqrt();
        rest.iter_mut().for_each(|x| *x /= norm);
        let mut tensors = Vec::with_capacity(n_sites);
        let mut schmidt = Vec::new();
        let mut dl = 1;
        for _ in 0..n_sites - 1 {
            let cols = rest.len() / (dl * 2);
            let m = DenseMatrix::from_row_major(dl * 2, cols, rest)?;
            let d = svd(&m)?;
            let (keep, s, _) = truncate(&d.s, Truncation { chi: usize::MAX, cutoff: 1e-30 })?;
            let u = DenseMatrix::from_fn(dl * 2, keep, |i, j| d.u.get(i, j));
            tensors.push(SiteTensor::from_matrix(dl, u));
            schmidt.push(weights(&s));
            rest = (0..keep).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| s[i] * d.vt.get(i, j)).collect();
            dl = keep;
        }
        tensors.push(SiteTensor { dl, dr: 1, data: rest });
        Ok(MpsState { tensors, schmidt, center: n_sites - 1, chi_max: DEFAULT_CHI, discarded_weight: 0.0 })
    }

    /// The state ∝ exp{(βJ/2) Σ_i σ_iσ_{i+1}} on an open chain, i.e. √P_eq, as a
    /// bond-dimension-2 MPS. Requires γ < 1.
    pub fn open_thermal_root(params: &ModelParams) -> Result<Self> {
        let n = params.n_sites;
        Self::bond_weighted(&vec![0.5 * params.beta_j(); n.saturating_sub(1)])
    }

    /// ∝ exp{Σ_b k_b σ_bσ_{b+1}} for finite bond couplings k_b, b = 0..N−2.
    pub fn bond_weighted(couplings: &[f64]) -> Result<Self> {
        let n = couplings.len() + 1;
        if n < 2 {
            return Err(Error::InvalidParams("need at least two sites".into()));
        }
        if couplings.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidParams("bond couplings must be finite".into()));
        }
        let sign = |s: usize| if s == 0 { 1.0 } else { -1.0 };
        let mut tensors = Vec::with_capacity(n);
        // bond index carries the previous spin
        let mut first = SiteTensor { dl: 1, dr: 2, data: vec![0.0; 4] };
        for s in 0..2 {
            first.data[s * 2 + s] = 1.0;
        }
        tensors.push(first);
        for i in 1..n {
            let k = couplings[i - 1];
            let dr = if i + 1 == n { 1 } else { 2 };
            let mut t = SiteTensor { dl: 2, dr, data: vec![0.0; 4 * dr] };
            for a in 0..2 {
                for s in 0..2 {
                    let b = if dr == 1 { 0 } else { s };
                    t.data[(a * 2 + s) * dr + b] = (k * sign(a) * sign(s)).exp();
                }
            }
            tensors.push(t);
        }
        let mut st = MpsState {
            tensors,
            schmidt: vec![vec![1.0]; n - 1],
            center: 0,
            chi_max: DEFAULT_CHI,
            discarded_weight: 0.0,
        };
        st.canonicalize()?;
        Ok(st)
    }

    /// Starting point for imaginary time in sector τ: √P_eq with every bond cut
    /// that no term of H_τ crosses, so the start factorizes wherever the
    /// Hamiltonian does. |→…→⟩ at γ = 1.
    pub fn sector_start(tau: &TauSector, params: &ModelParams) -> Result<Self> {
        let n = params.n_sites;
        if tau.n_sites() != n {
            return Err(Error::SizeMismatch { expected: n, found: tau.n_sites() });
        }
        if params.boundary != Boundary::Open {
            return Err(Error::Unsupported("MPS start states are built for open chains".into()));
        }
        if params.gamma >= 1.0 || n < 2 {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            return Self::from_product_state(&vec![[r, r]; n]);
        }
        let mut crossed = vec![false; n - 1];
        for t in sector_terms(tau, params)? {
            let (lo, hi) = t.interaction_range();
            crossed[lo..hi].iter_mut().for_each(|c| *c = true);
        }
        let k = 0.5 * params.beta_j();
        Self::bond_weighted(&crossed.iter().map(|&c| if c { k } else { 0.0 }).collect::<Vec<_>>())
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n_sites() - 1].iter().map(|t| t.dr).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Squared Schmidt coefficients at bond L (1 ≤ L < N).
    pub fn schmidt_weights(&self, bond: usize) -> &[f64] {
        &self.schmidt[bond - 1]
    }

    pub fn norm(&self) -> f64 {
        self.tensors[self.center].data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn step_right(&mut self, t: Truncation) -> Result<f64> {
        let c = self.center;
        let a = &self.tensors[c];
        let d = svd(&a.grouped_left())?;
        let (keep, s, lost) = truncate(&d.s, t)?;
        let dl = a.dl;
        let u = DenseMatrix::from_fn(dl * 2, keep, |i, j| d.u.get(i, j));
        let sv = DenseMatrix::from_fn(keep, d.vt.cols(), |i, j| s[i] * d.vt.get(i, j));
        let next = &self.tensors[c + 1];
        let merged = sv.matmul(&next.grouped_right());
        self.tensors[c + 1] = SiteTensor::from_matrix(keep, merged);
        self.tensors[c] = SiteTensor::from_matrix(dl, u);
        self.schmidt[c] = weights(&s);
        self.center = c + 1;
        Ok(lost)
    }

    fn step_left(&mut self, t: Truncation) -> Result<f64> {
        let c = self.center;
        let a = &self.tensors[c];
        let d = svd(&a.grouped_right())?;
        let (keep, s, lost) = truncate(&d.s, t)?;
        let vt = DenseMatrix::from_fn(keep, d.vt.cols(), |i, j| d.vt.get(i, j));
        let us = DenseMatrix::from_fn(d.u.rows(), keep, |i, j| d.u.get(i, j) * s[j]);
        let prev = &self.tensors[c - 1];
        let prev_dl = prev.dl;
        let merged = prev.grouped_left().matmul(&us);
        self.tensors[c - 1] = SiteTensor::from_matrix(prev_dl, merged);
        self.tensors[c] = SiteTensor::from_matrix(keep, vt);
        self.schmidt[c - 1] = weights(&s);
        self.center = c - 1;
        Ok(lost)
    }

    /// Move the orthogonality center without truncation.
    pub fn move_center(&mut self, to: usize) -> Result<()> {
        if to >= self.n_sites() {
            return Err(Error::SiteOutOfRange { site: to, n_sites: self.n_sites() });
        }
        while self.center < to {
            self.step_right(NO_TRUNCATION)?;
        }
        while self.center > to {
            self.step_left(NO_TRUNCATION)?;
        }
        Ok(())
    }

    /// Full right-then-left sweep; afterwards every stored Schmidt vector is
    /// exact and the center is at site 0.
    pub fn canonicalize(&mut self) -> Result<()> {
        let n = self.n_sites();
        self.move_center(0)?;
        self.move_center(n - 1)?;
        self.move_center(0)?;
        let norm = self.norm();
        self.tensors[0].data.iter_mut().for_each(|x| *x /= norm);
        Ok(())
    }

    /// Largest deviation from left (right) orthonormality of the sites left
    /// (right) of the center.
    pub fn canonical_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, t) in self.tensors.iter().enumerate() {
            if k == self.center {
                continue;
            }
            let gram = if k < self.center {
                let m = t.grouped_left();
                m.transpose().matmul(&m)
            } else {
                let m = t.grouped_right();
                m.matmul(&m.transpose())
            };
            worst = worst.max(gram.max_abs_diff(&DenseMatrix::identity(gram.rows())));
        }
        worst
    }

    /// Contract sites j..j+w into θ of shape (dl, 2^w, dr) with the physical
    /// composite index big-endian in site order.
    fn theta(&self, j: usize, w: usize) -> (usize, usize, Vec<f64>) {
        let first = &self.tensors[j];
        let dl = first.dl;
        let mut m = first.grouped_left();
        for k in 1..w {
            let next = &self.tensors[j + k];
            let rows = m.rows();
            m = m.matmul(&next.grouped_right());
            m = DenseMatrix::from_row_major(rows * 2, next.dr, m.into_vec()).expect("shape");
        }
        let dr = self.tensors[j + w - 1].dr;
        (dl, dr, m.into_vec())
    }

    /// Apply a 2^w × 2^w gate on sites j..j+w to θ, in place.
    fn gate_theta(theta: &mut [f64], dl: usize, dr: usize, w: usize, gate: &DenseMatrix) {
        let p = 1usize << w;
        let mut out = vec![0.0; theta.len()];
        for a in 0..dl {
            for c_out in 0..p {
                let g_row = reverse_bits(c_out, w);
                for c_in in 0..p {
                    let g = gate.get(g_row, reverse_bits(c_in, w));
                    if g == 0.0 {
                        continue;
                    }
                    let src = (a * p + c_in) * dr;
                    let dst = (a * p + c_out) * dr;
                    for b in 0..dr {
                        out[dst + b] += g * theta[src + b];
                    }
                }
            }
        }
        theta.copy_from_slice(&out);
    }

    /// Apply a gate on w ≤ 3 consecutive sites starting at j, re-splitting
    /// with truncation. The center ends on the last window site when
    /// `center_right`, otherwise on the first.
    pub fn apply_gate(
        &mut self,
        j: usize,
        gate: &DenseMatrix,
        chi_max: usize,
        cutoff: f64,
        center_right: bool,
    ) -> Result<()> {
        let w = gate.rows().trailing_zeros() as usize;
        if gate.rows() != 1 << w || gate.cols() != gate.rows() || !(1..=3).contains(&w) {
            return Err(Error::InvalidParams(format!("gate of size {}x{}", gate.rows(), gate.cols())));
        }
        if j + w > self.n_sites() {
            return Err(Error::SiteOutOfRange { site: j + w - 1, n_sites: self.n_sites() });
        }
        if self.center < j {
            self.move_center(j)?;
        } else if self.center >= j + w {
            self.move_center(j + w - 1)?;
        }
        let (dl, dr, mut th) = self.theta(j, w);
        Self::gate_theta(&mut th, dl, dr, w, gate);
        let t = Truncation { chi: chi_max, cutoff };
        if center_right {
            let mut left_dim = dl;
            for k in 0..w - 1 {
                let cols = th.len() / (left_dim * 2);
                let d = svd(&DenseMatrix::from_row_major(left_dim * 2, cols, th)?)?;
                let (keep, s, lost) = truncate(&d.s, t)?;
                self.discarded_weight += lost;
                let u = DenseMatrix::from_fn(left_dim * 2, keep, |r, c| d.u.get(r, c));
                self.tensors[j + k] = SiteTensor::from_matrix(left_dim, u);
                self.schmidt[j + k] = weights(&s);
                th = (0..keep * cols).map(|x| s[x / cols] * d.vt.get(x / cols, x % cols)).collect();
                left_dim = keep;
            }
            self.tensors[j + w - 1] = SiteTensor { dl: left_dim, dr, data: th };
            self.center = j + w - 1;
        } else {
            let mut right_dim = dr;
            for k in (1..w).rev() {
                let rows = th.len() / (right_dim * 2);
                let d = svd(&DenseMatrix::from_row_major(rows, 2 * right_dim, th)?)?;
                let (keep, s, lost) = truncate(&d.s, t)?;
                self.discarded_weight += lost;
                let vt = DenseMatrix::from_fn(keep, 2 * right_dim, |r, c| d.vt.get(r, c));
                self.tensors[j + k] = SiteTensor::from_matrix(keep, vt);
                self.schmidt[j + k - 1] = weights(&s);
                th = (0..rows * keep).map(|x| d.u.get(x / keep, x % keep) * s[x % keep]).collect();
                right_dim = keep;
            }
            self.tensors[j] = SiteTensor { dl, dr: right_dim, data: th };
            self.center = j;
        }
        // keep the state normalized
        let norm = self.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical(format!("state norm {norm} after gate")));
        }
        let c = self.center;
        self.tensors[c].data.iter_mut().for_each(|x| *x /= norm);
        Ok(())
    }

    /// Two-site gate on (i, i+1).
    pub fn apply_two_site_gate(&mut self, i: usize, gate: &DenseMatrix, chi_max: usize, cutoff: f64) -> Result<()> {
        if gate.rows() != 4 {
            return Err(Error::InvalidParams("two-site gate must be 4x4".into()));
        }
        self.apply_gate(i, gate, chi_max, cutoff, true)
    }

    /// Gate on (i, i+2), applied as swap(i+1,i+2) ∘ gate(i,i+1) ∘ swap(i+1,i+2).
    pub fn apply_nnn_term(&mut self, i: usize, gate: &DenseMatrix, chi_max: usize, cutoff: f64) -> Result<()> {
        if i + 2 >= self.n_sites() {
            return Err(Error::SiteOutOfRange { site: i + 2, n_sites: self.n_sites() });
        }
        let swap = swap_gate();
        self.apply_two_site_gate(i + 1, &swap, chi_max, cutoff)?;
        self.apply_two_site_gate(i, gate, chi_max, cutoff)?;
        self.apply_two_site_gate(i + 1, &swap, chi_max, cutoff)
    }

    /// Dense state vector, index Σ_k s_k 2^k. Up to 20 sites.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if n > 20 {
            return Err(Error::TooLarge { n_sites: n, max: 20 });
        }
        let (_, _, th) = self.theta(0, n);
        Ok((0..th.len()).map(|p| th[reverse_bits(p, n)]).collect())
    }

    /// Left environments E_j = contraction of sites 0..j with their conjugates.
    fn left_environments(&self, upto: usize) -> Vec<DenseMatrix> {
        let mut envs = vec![DenseMatrix::identity(1)];
        for j in 0..upto {
            let t = &self.tensors[j];
            let e = &envs[j];
            // (E·A[s]) for each s, then A[s]ᵀ(E·A[s])
            let mut next = DenseMatrix::zeros(t.dr, t.dr);
            for s in 0..2 {
                let a = DenseMatrix::from_fn(t.dl, t.dr, |x, y| t.get(x, s, y));
                next = next.add(&a.transpose().matmul(&e.matmul(&a)));
            }
            envs.push(next);
        }
        envs
    }

    /// Σ_k ⟨O_k⟩ for operators on windows (start_k, width_k), normalized by ⟨ψ|ψ⟩.
    /// Moves the center to site 0.
    pub fn expectation_sum(&mut self, ops: &[(usize, DenseMatrix)]) -> Result<f64> {
        self.move_center(0)?;
        let last = ops.iter().map(|(j, _)| *j).max().unwrap_or(0);
        let envs = self.left_environments(last);
        let norm2 = self.norm().powi(2);
        let mut total = 0.0;
        for (j, op) in ops {
            let w = op.rows().trailing_zeros() as usize;
            let (dl, dr, th) = self.theta(*j, w);
            let mut hth = th.clone();
            Self::gate_theta(&mut hth, dl, dr, w, op);
            let inner = (1 << w) * dr;
            let e = &envs[*j];
            let mut v = 0.0;
            for a in 0..dl {
                for a2 in 0..dl {
                    let ev = e.get(a, a2);
                    if ev == 0.0 {
                        continue;
                    }
                    let x: f64 = (0..inner).map(|k| th[a * inner + k] * hth[a2 * inner + k]).sum();
                    v += ev * x;
                }
            }
            total += v;
        }
        Ok(total / norm2)
    }

    pub fn expectation_z(&mut self, i: usize) -> Result<f64> {
        let z = DenseMatrix::diagonal(&[1.0, -1.0]);
        self.expectation_sum(&[(i, z)])
    }
}

pub fn swap_gate() -> DenseMatrix {
    let mut m = DenseMatrix::zeros(4, 4);
    for (a, b) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        m.set(a, b, 1.0);
    }
    m
}

/// Base-2 von Neumann entropy of a weight vector.
pub fn entropy_of_weights(w: &[f64]) -> f64 {
    (-w.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()).max(0.0)
}

/// S(L) = −Σ λ log₂ λ at every bond L = 1..N−1. Canonicalizes first so the
/// Schmidt weights are exact.
pub fn entropy_profile(state: &mut MpsState) -> Result<Vec<f64>> {
    state.canonicalize()?;
    Ok((1..state.n_sites()).map(|l| entropy_of_weights(state.schmidt_weights(l))).collect())
}

/// Three-site windows covering an open chain, each term assigned to exactly
/// one window: (j, j+1, j+2) for j = 0..N−3, with the end terms folded into the
/// first and last windows.
#[derive(Clone, Debug)]
pub struct GateSchedule {
    pub dt: f64,
    /// (first site, gate exp(−dt·H_w/2), term sites assigned to the window)
    pub gates: Vec<(usize, DenseMatrix, Vec<usize>)>,
}

/// Window operators H_w = Σ of the assigned site terms, as 8×8 matrices.
pub fn window_hamiltonians(terms: &[SiteTerm], n_sites: usize) -> Result<Vec<(usize, DenseMatrix, Vec<usize>)>> {
    if n_sites < 3 {
        return Err(Error::InvalidParams("TEBD windows need N >= 3".into()));
    }
    let n_windows = n_sites - 2;
    let mut out: Vec<(usize, DenseMatrix, Vec<usize>)> =
        (0..n_windows).map(|j| (j, DenseMatrix::zeros(8, 8), Vec::new())).collect();
    for t in terms {
        let j = t.site.saturating_sub(1).min(n_windows - 1);
        let m = t.matrix_on(&[j, j + 1, j + 2])?;
        out[j].1 = out[j].1.add(&m);
        out[j].2.push(t.site);
    }
    Ok(out)
}

impl GateSchedule {
    pub fn new(terms: &[SiteTerm], n_sites: usize, dt: f64) -> Result<Self> {
        let gates = window_hamiltonians(terms, n_sites)?
            .into_iter()
            .map(|(j, h, sites)| Ok((j, expm(&h.scale(-0.5 * dt))?, sites)))
            .collect::<Result<_>>()?;
        Ok(GateSchedule { dt, gates })
    }

    /// One symmetric step of length dt: left-to-right then right-to-left,
    /// each window with half the step.
    pub fn sweep(&self, state: &mut MpsState, chi_max: usize, cutoff: f64) -> Result<()> {
        for (j, g, _) in &self.gates {
            state.apply_gate(*j, g, chi_max, cutoff, true)?;
        }
        for (j, g, _) in self.gates.iter().rev() {
            state.apply_gate(*j, g, chi_max, cutoff, false)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TebdSchedule {
    pub dts: Vec<f64>,
    pub max_sweeps: usize,
    pub chi_max: usize,
    pub cutoff: f64,
    /// Stage stops once the energy moves less than this per unit imaginary time.
    pub energy_tol: f64,
}

impl Default for TebdSchedule {
    fn default() -> Self {
        TebdSchedule {
            dts: vec![0.1, 0.03, 0.01, 0.003, 0.001],
            max_sweeps: 2000,
            chi_max: DEFAULT_CHI,
            cutoff: DEFAULT_CUTOFF,
            energy_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct StageReport {
    pub dt: f64,
    pub sweeps: usize,
    pub energy: f64,
    pub last_change: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub state: MpsState,
    pub energy: f64,
    pub stages: Vec<StageReport>,
    /// Whether the final stage met the energy tolerance.
    pub converged: bool,
}

/// Open-chain local terms of H_τ as (window start, 8×8 matrix) pairs for
/// energy evaluation.
pub fn energy_operators(tau: &TauSector, params: &ModelParams) -> Result<Vec<(usize, DenseMatrix)>> {
    let terms = sector_terms(tau, params)?;
    Ok(window_hamiltonians(&terms, params.n_sites)?.into_iter().map(|(j, h, _)| (j, h)).collect())
}

/// Imaginary-time TEBD for the ground state of the open-chain H_τ, starting
/// from [`MpsState::sector_start`].
pub fn imaginary_time_ground_state(
    tau: &TauSector,
    params: &ModelParams,
    schedule: &TebdSchedule,
) -> Result<GroundState> {
    let start = MpsState::sector_start(tau, params)?;
    imaginary_time_from(start, tau, params, schedule)
}

pub fn imaginary_time_from(
    mut state: MpsState,
    tau: &TauSector,
    params: &ModelParams,
    schedule: &TebdSchedule,
) -> Result<GroundState> {
    if params.boundary != Boundary::Open {
        return Err(Error::Unsupported("TEBD runs on open chains; set boundary = open".into()));
    }
    if state.n_sites() != params.n_sites {
        return Err(Error::SizeMismatch { expected: params.n_sites, found: state.n_sites() });
    }
    if schedule.dts.is_empty() || schedule.dts.iter().any(|&dt| !(dt > 0.0)) {
        return Err(Error::InvalidParams("dt ladder must be nonempty and positive".into()));
    }
    let terms = sector_terms(tau, params)?;
    let ops: Vec<(usize, DenseMatrix)> =
        window_hamiltonians(&terms, params.n_sites)?.into_iter().map(|(j, h, _)| (j, h)).collect();
    state.chi_max = schedule.chi_max;
    let mut energy = state.expectation_sum(&ops)?;
    let mut stages = Vec::new();
    for &dt in &schedule.dts {
        let gates = GateSchedule::new(&terms, params.n_sites, dt)?;
        let mut report = StageReport { dt, sweeps: 0, energy, last_change: f64::INFINITY, converged: false };
        for sweep in 1..=schedule.max_sweeps {
            gates.sweep(&mut state, schedule.chi_max, schedule.cutoff)?;
            let e = state.expectation_sum(&ops)?;
            let change = (e - energy).abs();
            energy = e;
            report = StageReport { dt, sweeps: sweep, energy, last_change: change, converged: change < schedule.energy_tol * dt };
            if report.converged {
                break;
            }
        }
        stages.push(report);
    }
    state.canonicalize()?;
    let converged = stages.last().map_or(false, |s| s.converged);
    Ok(GroundState { state, energy, stages, converged })
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"QKIMMPS1";

/// Checkpoint: magic, N and center as u64, then per site (dl, 2, dr) as u64
/// followed by the tensor as little-endian f64, row-major.
pub fn write_checkpoint<W: Write>(state: &MpsState, mut out: W) -> Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&(state.n_sites() as u64).to_le_bytes())?;
    out.write_all(&(state.center as u64).to_le_bytes())?;
    for t in &state.tensors {
        for d in [t.dl, 2, t.dr] {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for x in &t.data {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<MpsState> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Parse("not an MPS checkpoint".into()));
    }
    let mut word = || -> Result<u64> {
        let mut b = [0u8; 8];
        input.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    };
    let n = word()? as usize;
    let center = word()? as usize;
    if n == 0 || center >= n || n > 1 << 20 {
        return Err(Error::Parse(format!("bad checkpoint header (N = {n}, center = {center})")));
    }
    let mut shapes = Vec::with_capacity(n);
    let mut tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let (dl, p, dr) = (word()? as usize, word()? as usize, word()? as usize);
        if p != 2 || dl == 0 || dr == 0 || dl > 1 << 16 || dr > 1 << 16 {
            return Err(Error::Parse(format!("bad tensor shape ({dl}, {p}, {dr})")));
        }
        let mut data = Vec::with_capacity(dl * 2 * dr);
        for _ in 0..dl * 2 * dr {
            data.push(f64::from_bits(word()?));
        }
        shapes.push((dl, dr));
        tensors.push(SiteTensor { dl, dr, data });
    }
    for k in 1..n {
        if shapes[k - 1].1 != shapes[k].0 {
            return Err(Error::Parse(format!("bond mismatch between sites {} and {k}", k - 1)));
        }
    }
    let mut st = MpsState { tensors, schmidt: vec![vec![1.0]; n - 1], center, chi_max: DEFAULT_CHI, discarded_weight: 0.0 };
    st.canonicalize()?;
    Ok(st)
}
