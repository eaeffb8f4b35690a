//! Dense oracles shared by integration tests.
#![allow(dead_code)]

use qkim::linalg::{eigh, svd, DenseMatrix};

/// S(L) for L = 1..N−1 from the singular values of ψ reshaped across each
/// cut; sites 0..L are the low bits of the basis index.
pub fn dense_entropy_profile(psi: &[f64], n: usize) -> Vec<f64> {
    (1..n)
        .map(|l| {
            let left = 1usize << l;
            let m = DenseMatrix::from_fn(psi.len() / left, left, |r, c| psi[(r << l) | c]);
            let s = svd(&m).unwrap().s;
            let total: f64 = s.iter().map(|x| x * x).sum();
            -s.iter()
                .map(|x| x * x / total)
                .filter(|&w| w > 1e-300)
                .map(|w| w * w.log2())
                .sum::<f64>()
        })
        .collect()
}

/// Lowest eigenpair of a dense symmetric matrix.
pub fn dense_ground(h: &DenseMatrix) -> (f64, Vec<f64>) {
    let e = eigh(h).unwrap();
    (e.values[0], e.vector(0))
}

pub fn fidelity(a: &[f64], b: &[f64]) -> f64 {
    let o: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    o * o / (na * nb)
}
