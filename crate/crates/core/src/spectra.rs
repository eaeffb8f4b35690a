//! Spectral analysis of sector Hamiltonians: kernels, gaps and positivity
//! sweeps over (γ, δ, τ).

use crate::error::{Error, Result};
use crate::hamiltonians::{build_h_tau, TauHamiltonian};
use crate::model::{ModelParams, TauSector};
use crate::pool::parallel_map;

pub use crate::linalg::{eigh, eigvalsh, Eigh};

/// Default kernel tolerance, relative to max(1, ‖H‖).
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues at or below `tolerance`.
    pub kernel_dim: usize,
    /// Smallest eigenvalue above `tolerance`, if any.
    pub gap: Option<f64>,
    /// Absolute threshold actually used.
    pub tolerance: f64,
}

impl SpectralReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, rel_tol: f64) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let norm = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tolerance = rel_tol * norm.max(1.0);
        let kernel_dim = eigenvalues.iter().take_while(|&&x| x <= tolerance).count();
        let gap = eigenvalues.get(kernel_dim).copied();
        SpectralReport { eigenvalues, kernel_dim, gap, tolerance }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Difference between the lowest two levels, which does not depend on a
    /// constant shift of H.
    pub fn lowest_splitting(&self) -> Option<f64> {
        self.eigenvalues.get(1).map(|e1| e1 - self.eigenvalues[0])
    }
}

pub fn spectral_report(h: &TauHamiltonian, rel_tol: f64) -> Result<SpectralReport> {
    Ok(SpectralReport::from_eigenvalues(eigvalsh(&h.matrix)?, rel_tol))
}

/// Which τ sectors a sweep visits.
#[derive(Clone, Debug, PartialEq)]
pub enum TauSelection {
    All,
    List(Vec<TauSector>),
}

impl TauSelection {
    pub fn sectors(&self, n_sites: usize) -> Result<Vec<TauSector>> {
        match self {
            TauSelection::All => {
                if n_sites > 10 {
                    return Err(Error::TooLarge { n_sites, max: 10 });
                }
                (0..1u64 << n_sites).map(|b| TauSector::from_bits(b, n_sites)).collect()
            }
            TauSelection::List(v) => {
                if let Some(t) = v.iter().find(|t| t.n_sites() != n_sites) {
                    return Err(Error::SizeMismatch { expected: n_sites, found: t.n_sites() });
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PositivityRow {
    pub gamma: f64,
    pub delta: f64,
    pub tau_bits: u64,
    pub min_eig: f64,
    pub kernel_dim: usize,
    pub gap: Option<f64>,
}

/// Spectra of H_τ(γ, δ) over a parameter grid. Rows come out in
/// (γ, δ, τ) lexicographic order.
pub fn positivity_sweep(
    gammas: &[f64],
    deltas: &[f64],
    n_sites: usize,
    taus: &TauSelection,
    jobs: usize,
) -> Result<Vec<PositivityRow>> {
    let sectors = taus.sectors(n_sites)?;
    let mut tasks = Vec::new();
    for &g in gammas {
        for &d in deltas {
            let p = ModelParams::new(n_sites, g, d)?;
            for t in &sectors {
                tasks.push((p, t.clone()));
            }
        }
    }
    let rows = parallel_map(&tasks, jobs, |(p, t)| -> Result<PositivityRow> {
        let rep = spectral_report(&build_h_tau(t, p)?, KERNEL_TOL)?;
        Ok(PositivityRow {
            gamma: p.gamma,
            delta: p.delta,
            tau_bits: t.bits().expect("dense sizes"),
            min_eig: rep.min_eigenvalue(),
            kernel_dim: rep.kernel_dim,
            gap: rep.gap,
        })
    });
    rows.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub enum PositivityViolation {
    /// An eigenvalue below −tol.
    Negative(PositivityRow),
    /// A zero mode in a sector other than τ = 0, 2^N−1 away from (0,0), (1,1).
    UnexpectedKernel(PositivityRow),
}

/// Check a sweep against H_τ ≥ 0 everywhere and strict positivity for
/// τ ∉ {0, 2^N−1} away from (γ, δ) ∈ {(0,0), (1,1)}.
pub fn positivity_violations(rows: &[PositivityRow], n_sites: usize, tol: f64) -> Vec<PositivityViolation> {
    let full = (1u64 << n_sites) - 1;
    let special = |r: &PositivityRow| {
        (r.gamma == 0.0 && r.delta == 0.0) || (r.gamma == 1.0 && r.delta == 1.0)
    };
    let mut out = Vec::new();
    for r in rows {
        if r.min_eig < -tol {
            out.push(PositivityViolation::Negative(r.clone()));
        } else if r.kernel_dim > 0 && r.tau_bits != 0 && r.tau_bits != full && !special(r) {
            out.push(PositivityViolation::UnexpectedKernel(r.clone()));
        }
    }
    out
}

/// Write sweep rows as CSV (gamma, delta, tau_bits, min_eig, kernel_dim, gap).
pub fn write_sweep_csv<W: std::io::Write>(rows: &[PositivityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::diagonal_zero_states;
    use crate::linalg::DenseMatrix;

    fn report(tau: &TauSector, p: &ModelParams) -> SpectralReport {
        spectral_report(&build_h_tau(tau, p).unwrap(), KERNEL_TOL).unwrap()
    }

    #[test]
    fn trivial_reports() {
        let r = SpectralReport::from_eigenvalues(vec![3.0, 1.0, 2.0], KERNEL_TOL);
        assert_eq!(r.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_eq!((r.kernel_dim, r.gap), (0, Some(1.0)));
        let z = SpectralReport::from_eigenvalues(vec![0.0, 1e-14], KERNEL_TOL);
        assert_eq!((z.kernel_dim, z.gap), (2, None));
    }

    #[test]
    fn infinite_temperature_every_sector() {
        let p = ModelParams::new(5, 0.0, 0.0).unwrap();
        for b in [0u64, 3, 17, 31] {
            let r = report(&TauSector::from_bits(b, 5).unwrap(), &p);
            assert_eq!(r.kernel_dim, 1);
            assert!((r.gap.unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_shift_consistency() {
        let p = ModelParams::new(5, 0.6, 0.1).unwrap();
        let h = build_h_tau(&TauSector::from_bits(6, 5).unwrap(), &p).unwrap();
        let base = spectral_report(&h, KERNEL_TOL).unwrap();
        let c = 0.75;
        let mut shifted = h.clone();
        shifted.matrix = h.matrix.add(&DenseMatrix::identity(32).scale(c));
        let s = spectral_report(&shifted, KERNEL_TOL).unwrap();
        assert!((s.min_eigenvalue() - c - base.min_eigenvalue()).abs() < 1e-12);
        assert!((s.lowest_splitting().unwrap() - base.lowest_splitting().unwrap()).abs() < 1e-12);
        assert!((s.gap.unwrap() - c - base.gap.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tau_zero_gap_falls_with_gamma() {
        let mut last = f64::INFINITY;
        for g in [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95] {
            let p = ModelParams::new(7, g, 0.0).unwrap();
            let gap = report(&TauSector::homogeneous(7), &p).gap.unwrap();
            assert!((gap - 2.0 * (1.0 - g)).abs() < 1e-9);
            assert!(gap < last);
            last = gap;
        }
    }

    #[test]
    fn kernel_counts_match_zero_states() {
        let p = ModelParams::new(8, 1.0, 1.0).unwrap();
        let tau: TauSector = "++--++--".parse().unwrap();
        let r = report(&tau, &p);
        assert!(r.kernel_dim >= 1);
        assert_eq!(r.kernel_dim, diagonal_zero_states(&tau).unwrap().len());
    }

    #[test]
    fn sweep_generic_point() {
        let rows = positivity_sweep(&[0.5], &[0.3], 5, &TauSelection::All, 2).unwrap();
        assert_eq!(rows.len(), 32);
        let with_kernel: Vec<u64> = rows.iter().filter(|r| r.kernel_dim > 0).map(|r| r.tau_bits).collect();
        assert_eq!(with_kernel, vec![0, 31]);
        assert!(positivity_violations(&rows, 5, 1e-10).is_empty());
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("gamma,delta,tau_bits,min_eig,kernel_dim,gap\n"));
        assert_eq!(text.lines().count(), 33);
    }
}
