//! Dense matrices and the thin SVD every other module builds on.
//!
//! The numerical backend is `nalgebra`; nothing outside this module touches
//! it directly except through [`DenseMatrix::as_nalgebra`].

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{check_same_shape, Error, Result};
use crate::penalty::Spectrum;

/// A finite, real, dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix{:?}{}", self.shape(), self.0)
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, entries))
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} entries, expected {cols}",
                r.len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(rows.len(), cols, &flat)
    }

    /// A square matrix with `diag` on its diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        Self::from_nalgebra(m)
    }

    /// Wraps a backend matrix, rejecting non-finite entries.
    pub fn from_nalgebra(m: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = m.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry {v}")));
        }
        Ok(Self(m))
    }

    /// Wraps a backend matrix produced by an operation that preserves finiteness.
    pub(crate) fn from_nalgebra_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(m.iter().all(|v| v.is_finite()));
        Self(m)
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.0.row(row).iter().copied().collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    pub fn inner(&self, other: &DenseMatrix) -> Result<f64> {
        check_same_shape(self.shape(), other.shape())?;
        Ok(self.0.dot(&other.0))
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
        check_same_shape(self.shape(), other.shape())?;
        DenseMatrix::from_nalgebra(&self.0 * alpha + &other.0 * beta)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn scale(&self, alpha: f64) -> Result<DenseMatrix> {
        DenseMatrix::from_nalgebra(&self.0 * alpha)
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_same_shape(self.shape(), other.shape())?;
        Ok(DenseMatrix(self.0.component_mul(&other.0)))
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix(self.0.transpose())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        DenseMatrix::from_nalgebra(&self.0 * &other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }
}

/// Thin singular value decomposition `x = u · diag(spectrum) · vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub spectrum: Spectrum,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn compose(&self) -> Result<DenseMatrix> {
        compose(&self.u, &self.spectrum, &self.v)
    }
}

/// Reduces a strongly rectangular matrix to its square triangular factor.
///
/// A QR step first makes the bidiagonalization run on a `k × k` problem, which
/// is several times cheaper for shapes such as 32 × 512.
enum Reduced {
    Direct(DMatrix<f64>),
    /// `x = r · qᵀ`.
    Wide {
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    },
    /// `x = q · r`.
    Tall {
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    },
}

fn reduce(x: &DMatrix<f64>) -> Reduced {
    let (rows, cols) = x.shape();
    if 2 * rows <= cols {
        let qr = x.transpose().qr();
        Reduced::Wide {
            q: qr.q(),
            r: qr.r().transpose(),
        }
    } else if 2 * cols <= rows {
        let qr = x.clone().qr();
        Reduced::Tall {
            q: qr.q(),
            r: qr.r(),
        }
    } else {
        Reduced::Direct(x.clone())
    }
}

fn check_finite(x: &DenseMatrix) -> Result<()> {
    match x.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::InvalidInput(format!("non-finite entry {v}"))),
        None => Ok(()),
    }
}

/// Thin SVD with `k = min(rows, cols)` singular values sorted non-increasing.
///
/// Column signs of `u` and `v` are whatever the backend produces.
pub fn svd(x: &DenseMatrix) -> Result<SvdFactors> {
    check_finite(x)?;
    let k = x.rows().min(x.cols());
    let (core, left, right) = match reduce(&x.0) {
        Reduced::Direct(m) => (m, None, None),
        Reduced::Wide { q, r } => (r, None, Some(q)),
        Reduced::Tall { q, r } => (r, Some(q), None),
    };
    let dec = core.svd(true, true);
    let (u, v) = match (dec.u, dec.v_t) {
        (Some(u), Some(vt)) => (u, vt.transpose()),
        _ => return Err(Error::InvalidInput("SVD failed to produce factors".into())),
    };
    let u = match left {
        Some(q) => q * u,
        None => u,
    };
    let v = match right {
        Some(q) => q * v,
        None => v,
    };
    let sigma = dec.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u_sorted = DMatrix::zeros(x.rows(), k);
    let mut v_sorted = DMatrix::zeros(x.cols(), k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v.column(src));
        values.push(sigma[src].max(0.0));
    }
    Ok(SvdFactors {
        u: DenseMatrix(u_sorted),
        spectrum: Spectrum::new(values)?,
        v: DenseMatrix(v_sorted),
    })
}

/// Singular values only.
pub fn singular_values(x: &DenseMatrix) -> Result<Spectrum> {
    check_finite(x)?;
    let core = match reduce(&x.0) {
        Reduced::Direct(m) => m,
        Reduced::Wide { r, .. } | Reduced::Tall { r, .. } => r,
    };
    let mut values: Vec<f64> = core.singular_values().iter().map(|s| s.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Spectrum::new(values)
}

/// `u · diag(values) · vᵀ` for arbitrary non-negative weights on the columns.
///
/// Unlike [`compose`] the values need not be ordered.
pub fn compose_values(u: &DenseMatrix, values: &[f64], v: &DenseMatrix) -> Result<DenseMatrix> {
    let k = values.len();
    if u.cols() != k || v.cols() != k {
        return Err(Error::InvalidInput(format!(
            "cannot compose u {:?}, {k} values, v {:?}",
            u.shape(),
            v.shape()
        )));
    }
    let mut scaled = u.0.clone();
    for (j, &s) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(s);
    }
    DenseMatrix::from_nalgebra(scaled * v.0.transpose())
}

/// `u · diag(spectrum) · vᵀ`.
pub fn compose(u: &DenseMatrix, spectrum: &Spectrum, v: &DenseMatrix) -> Result<DenseMatrix> {
    compose_values(u, spectrum.values(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram_residual(q: &DenseMatrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        g.sub(&DenseMatrix::identity(q.cols()))
            .unwrap()
            .frobenius_norm()
    }

    fn pseudo_random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        // Small LCG keeps these unit tests free of RNG dependencies.
        let mut state = seed;
        let entries: Vec<f64> = (0..rows * cols)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        DenseMatrix::from_row_major(rows, cols, &entries).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let f = svd(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(f.spectrum.values().len(), 2);
        for s in f.spectrum.values() {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_factors_up_to_sign() {
        let x = DenseMatrix::from_diagonal(&[1.0, 3.0]).unwrap();
        let f = svd(&x).unwrap();
        assert!((f.spectrum.values()[0] - 3.0).abs() < 1e-14);
        assert!((f.spectrum.values()[1] - 1.0).abs() < 1e-14);
        // Sorting puts the second axis first.
        assert!((f.u.get(1, 0).abs() - 1.0).abs() < 1e-12);
        assert!((f.v.get(1, 0).abs() - 1.0).abs() < 1e-12);
        assert!(f.u.get(0, 0).abs() < 1e-12);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for (rows, cols, seed) in [
            (3, 5, 1),
            (5, 3, 2),
            (4, 4, 3),
            (32, 512, 4),
            (40, 6, 5),
            (1, 7, 6),
            (9, 1, 7),
        ] {
            let x = pseudo_random(rows, cols, seed);
            let f = svd(&x).unwrap();
            assert_eq!(f.spectrum.values().len(), rows.min(cols));
            assert!(gram_residual(&f.u) < 1e-10);
            assert!(gram_residual(&f.v) < 1e-10);
            let err = f.compose().unwrap().sub(&x).unwrap().frobenius_norm();
            assert!(err <= 1e-8 * (1.0 + f.spectrum.max()), "err {err}");
            let ss: f64 = f.spectrum.values().iter().map(|s| s * s).sum();
            assert!((ss - x.frobenius_norm_sq()).abs() <= 1e-8 * x.frobenius_norm_sq());
            let only = singular_values(&x).unwrap();
            for (p, q) in only.values().iter().zip(f.spectrum.values()) {
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rank_deficient_wide_matrix() {
        let col = pseudo_random(3, 1, 8);
        let row = pseudo_random(1, 10, 9);
        let x = col.matmul(&row).unwrap();
        let f = svd(&x).unwrap();
        assert!(f.spectrum.values()[1] < 1e-12);
        assert!(gram_residual(&f.v) < 1e-10);
        assert!(f.compose().unwrap().sub(&x).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn compose_diagonal_and_zero() {
        let i = DenseMatrix::identity(2);
        let d = compose(&i, &Spectrum::new(vec![2.0, 1.0]).unwrap(), &i).unwrap();
        assert_eq!(d, DenseMatrix::from_diagonal(&[2.0, 1.0]).unwrap());
        let z = compose(&i, &Spectrum::new(vec![0.0, 0.0]).unwrap(), &i).unwrap();
        assert_eq!(z.frobenius_norm(), 0.0);
    }

    #[test]
    fn compose_then_svd_roundtrip() {
        // Orthonormal factors from the SVD of an unrelated matrix.
        let basis = svd(&pseudo_random(4, 3, 9)).unwrap();
        let spectrum = Spectrum::new(vec![5.0, 2.5, 0.25]).unwrap();
        let x = compose(&basis.u, &spectrum, &basis.v).unwrap();
        let back = svd(&x).unwrap();
        for (a, b) in back.spectrum.values().iter().zip(spectrum.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn compose_shape_mismatch() {
        let i2 = DenseMatrix::identity(2);
        let i3 = DenseMatrix::identity(3);
        let s = Spectrum::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(compose(&i2, &s, &i3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(DenseMatrix::from_nalgebra(m).is_err());
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn svd_is_deterministic() {
        let x = pseudo_random(6, 9, 11);
        let a = svd(&x).unwrap();
        let b = svd(&x).unwrap();
        assert_eq!(a.spectrum, b.spectrum);
        assert_eq!(a.u, b.u);
        assert_eq!(a.v, b.v);
    }
}
