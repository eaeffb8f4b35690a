//! File formats: indexed CSV for vectors and spectra, dense binary and COO CSV
//! for sector Hamiltonians, and (L, S) entropy tables.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::hamiltonians::TauHamiltonian;
use crate::linalg::DenseMatrix;

/// CSV with header `index,value`.
pub fn write_indexed_csv<W: Write>(values: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.serialize((i, v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_indexed_csv<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (k, rec) in r.deserialize::<(usize, f64)>().enumerate() {
        let (i, v) = rec?;
        if i != k {
            return Err(Error::Parse(format!("row {k} has index {i}")));
        }
        out.push(v);
    }
    Ok(out)
}

/// Dense binary: u64 N and u64 τ bits (little-endian), then the 2^N × 2^N
/// matrix as row-major little-endian f64.
pub fn write_hamiltonian_binary<W: Write>(h: &TauHamiltonian, mut out: W) -> Result<()> {
    let bits = h.tau.bits().ok_or_else(|| Error::Unsupported("τ label needs N <= 64".into()))?;
    out.write_all(&(h.params.n_sites as u64).to_le_bytes())?;
    out.write_all(&bits.to_le_bytes())?;
    for x in h.matrix.as_slice() {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Returns (N, τ bits, matrix).
pub fn read_hamiltonian_binary<R: Read>(mut input: R) -> Result<(usize, u64, DenseMatrix)> {
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let bits = u64::from_le_bytes(word);
    if n == 0 || n > 16 || (n < 64 && bits >> n != 0) {
        return Err(Error::Parse(format!("bad header (N = {n}, tau = {bits})")));
    }
    let dim = 1usize << n;
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        input.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    Ok((n, bits, DenseMatrix::from_row_major(dim, dim, data)?))
}

/// Nonzero entries as CSV `row,col,value`, row-major order.
pub fn write_coo_csv<W: Write>(m: &DenseMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "value"])?;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if v != 0.0 {
                w.serialize((i, j, v))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuild a square matrix of dimension `dim` from COO CSV.
pub fn read_coo_csv<R: Read>(input: R, dim: usize) -> Result<DenseMatrix> {
    let mut m = DenseMatrix::zeros(dim, dim);
    let mut r = csv::Reader::from_reader(input);
    for rec in r.deserialize::<(usize, usize, f64)>() {
        let (i, j, v) = rec?;
        if i >= dim || j >= dim {
            return Err(Error::Parse(format!("entry ({i}, {j}) outside {dim}x{dim}")));
        }
        m.add_at(i, j, v);
    }
    Ok(m)
}

/// CSV `L,S` for bonds L = 1..N−1.
pub fn write_entropy_csv<W: Write>(profile: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["L", "S"])?;
    for (k, s) in profile.iter().enumerate() {
        w.serialize((k + 1, s))?;
    }
    w.flush()?;
    Ok(())
}
