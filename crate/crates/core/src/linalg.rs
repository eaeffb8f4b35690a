//! Dense real matrices plus the eigensolver, SVD and matrix-exponential
//! facade. The heavy lifting is delegated to `faer`; callers only see
//! [`DenseMatrix`] and plain vectors.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Symmetry defect (relative to max(1, ‖A‖_max)) tolerated by [`eigh`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParams(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        from_faer((self.to_faer().as_ref() * other.to_faer().as_ref()).as_ref())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// max |A − B| elementwise.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// max |A_ij − A_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut d = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                d = d.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        d
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Number of entries with |x| > `tol`.
    pub fn count_nonzero(&self, tol: f64) -> usize {
        self.data.iter().filter(|x| x.abs() > tol).count()
    }

    pub fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }
}

pub fn from_faer(m: MatRef<'_, f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigendecomposition of a real symmetric matrix: ascending eigenvalues and
/// the orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

fn checked_symmetric(a: &DenseMatrix) -> Result<Mat<f64>> {
    if a.rows != a.cols {
        return Err(Error::InvalidParams(format!("{}x{} matrix is not square", a.rows, a.cols)));
    }
    let defect = a.symmetry_defect();
    if defect > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { defect });
    }
    Ok(Mat::from_fn(a.rows, a.cols, |i, j| 0.5 * (a.get(i, j) + a.get(j, i))))
}

/// Symmetric eigensolver. Input is symmetrized before solving; a defect above
/// [`SYMMETRY_TOL`] is rejected.
pub fn eigh(a: &DenseMatrix) -> Result<Eigh> {
    let m = checked_symmetric(a)?;
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok(Eigh { values, vectors: from_faer(evd.U()) })
}

/// Ascending eigenvalues only.
pub fn eigvalsh(a: &DenseMatrix) -> Result<Vec<f64>> {
    let m = checked_symmetric(a)?;
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))
}

/// Thin SVD A = U diag(s) Vᵀ with s nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub vt: DenseMatrix,
}

pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    let m = a.to_faer();
    let d = m.thin_svd().map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))?;
    Ok(Svd {
        u: from_faer(d.U()),
        s: d.S().column_vector().iter().copied().collect(),
        vt: from_faer(d.V().transpose()),
    })
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// exp(A) by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != a.cols {
        return Err(Error::InvalidParams("expm needs a square matrix".into()));
    }
    let n = a.rows;
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(Error::Numerical("expm of a non-finite matrix".into()));
    }
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    let a1 = Mat::<f64>::from_fn(n, n, |i, j| a.get(i, j) * scale);
    let ident = Mat::<f64>::identity(n, n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let comb = |c6: f64, c4: f64, c2: f64, c0: f64| {
        Mat::<f64>::from_fn(n, n, |i, j| {
            c6 * a6[(i, j)] + c4 * a4[(i, j)] + c2 * a2[(i, j)] + c0 * ident[(i, j)]
        })
    };
    let u_inner = &a6 * comb(b[13], b[11], b[9], 0.0) + comb(b[7], b[5], b[3], b[1]);
    let u = &a1 * &u_inner;
    let v = &a6 * comb(b[12], b[10], b[8], 0.0) + comb(b[6], b[4], b[2], b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..squarings {
        r = &r * &r;
    }
    let out = from_faer(r.as_ref());
    if out.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("expm produced non-finite entries".into()));
    }
    Ok(out)
}

/// Sort a multiset of reals and compare elementwise.
pub fn multiset_max_diff(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Some(a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
