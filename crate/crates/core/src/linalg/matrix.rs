use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real_rows<const D: usize>(rows: [[f64; D]; D]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self { dim: D, data }
    }

    pub fn from_rows<const D: usize>(rows: [[Complex64; D]; D]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { dim: D, data }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// `|v⟩⟨v|` for an arbitrary (not necessarily normalized) vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in v {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_same_dim(rhs)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&self, s: Complex64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn scale_real_in_place(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn add_assign(&mut self, rhs: &Matrix) -> Result<()> {
        self.check_same_dim(rhs)?;
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn add_scaled(&mut self, rhs: &Matrix, s: Complex64) -> Result<()> {
        self.check_same_dim(rhs)?;
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b * s;
        }
        Ok(())
    }

    /// Kronecker product `self ⊗ rhs`; `self` occupies the most significant index bits.
    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let (m, n) = (self.dim, rhs.dim);
        let dim = m * n;
        let mut out = Self::zeros(dim);
        for i in 0..m {
            for j in 0..m {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        out[(i * n + k, j * n + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest elementwise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        if self.dim != rhs.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_distance(&self, rhs: &Matrix) -> f64 {
        if self.dim != rhs.dim {
            return f64::INFINITY;
        }
        libm::sqrt(
            self.data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum(),
        )
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Max deviation of `self† self` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self
            .adjoint()
            .matmul(self)
            .expect("adjoint has the same dimension");
        prod.max_abs_diff(&Matrix::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// `(self + self†) / 2`.
    pub fn hermitian_part(&self) -> Matrix {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }

    fn check_same_dim(&self, rhs: &Matrix) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        Ok(())
    }

    /// `self ← U self` with `u` embedded on `targets` of an `n`-qubit register.
    pub(crate) fn apply_left(&mut self, u: &Matrix, layout: &TargetLayout) {
        let dim = self.dim;
        let k = layout.offsets.len();
        let mut buf = vec![ZERO; k];
        for col in 0..dim {
            for &base in &layout.bases {
                for (l, off) in layout.offsets.iter().enumerate() {
                    buf[l] = self.data[(base + off) * dim + col];
                }
                for (j, off) in layout.offsets.iter().enumerate() {
                    let acc: Complex64 = u.row(j).iter().zip(&buf).map(|(a, b)| a * b).sum();
                    self.data[(base + off) * dim + col] = acc;
                }
            }
        }
    }

    /// `self ← self U†` with `u` embedded on `targets`.
    pub(crate) fn apply_right_adjoint(&mut self, u: &Matrix, layout: &TargetLayout) {
        let dim = self.dim;
        let k = layout.offsets.len();
        let mut buf = vec![ZERO; k];
        for row in 0..dim {
            let r = &mut self.data[row * dim..(row + 1) * dim];
            for &base in &layout.bases {
                for (l, off) in layout.offsets.iter().enumerate() {
                    buf[l] = r[base + off];
                }
                for (j, off) in layout.offsets.iter().enumerate() {
                    let acc: Complex64 = u.row(j).iter().zip(&buf).map(|(a, b)| b * a.conj()).sum();
                    r[base + off] = acc;
                }
            }
        }
    }

    /// `U self U†` with `u` embedded on the layout's targets.
    pub(crate) fn conjugate_by(&mut self, u: &Matrix, layout: &TargetLayout) {
        self.apply_left(u, layout);
        self.apply_right_adjoint(u, layout);
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Returns `log2(dim)` when `dim` is a positive power of two.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Bit mask of qubit `q` in an `n`-qubit big-endian basis index.
#[inline]
pub(crate) fn qubit_bit(q: usize, n: usize) -> usize {
    1 << (n - 1 - q)
}

/// Precomputed index bookkeeping for embedding a k-qubit operator in an n-qubit register.
#[derive(Debug, Clone)]
pub(crate) struct TargetLayout {
    /// Offset of each local basis state; `targets[0]` is the most significant local bit.
    offsets: Vec<usize>,
    /// Full-register indices with every target bit cleared.
    bases: Vec<usize>,
}

impl TargetLayout {
    pub(crate) fn new(targets: &[usize], n: usize) -> Result<Self> {
        validate_targets(targets, n)?;
        let k = targets.len();
        let offsets = (0..1usize << k)
            .map(|l| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (l >> (k - 1 - j)) & 1 == 1)
                    .map(|(_, &t)| qubit_bit(t, n))
                    .sum()
            })
            .collect();
        let mask: usize = targets.iter().map(|&t| qubit_bit(t, n)).sum();
        let bases = (0..1usize << n).filter(|i| i & mask == 0).collect();
        Ok(Self { offsets, bases })
    }

    /// `v ← U v` with `u` embedded on the layout's targets.
    pub(crate) fn apply_to_vector(&self, u: &Matrix, v: &mut [Complex64]) {
        let mut buf = vec![ZERO; self.offsets.len()];
        for &base in &self.bases {
            for (l, off) in self.offsets.iter().enumerate() {
                buf[l] = v[base + off];
            }
            for (j, off) in self.offsets.iter().enumerate() {
                v[base + off] = u.row(j).iter().zip(&buf).map(|(a, b)| a * b).sum();
            }
        }
    }
}

pub(crate) fn validate_targets(targets: &[usize], n: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::EmptyQubitSet);
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(Error::InvalidQubit { qubit: t, n });
        }
        if targets[..i].contains(&t) {
            return Err(Error::DuplicateQubit(t));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = Matrix::identity(2);
        assert_eq!(i2.kron(&i2), Matrix::identity(4));
    }

    #[test]
    fn matmul_and_adjoint() {
        let a = Matrix::from_rows([[c(1.0, 1.0), c(0.0, 2.0)], [c(3.0, 0.0), c(0.0, -1.0)]]);
        let aa = a.adjoint().matmul(&a).unwrap();
        assert!(aa.is_hermitian(1e-14));
        assert_eq!(aa[(0, 0)], c(11.0, 0.0));
    }

    #[test]
    fn embedded_application_matches_kron() {
        // X on qubit 1 of a 2-qubit register equals I ⊗ X.
        let x = Matrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]);
        let full = Matrix::identity(2).kron(&x);
        let mut m = Matrix::identity(4);
        m[(0, 1)] = c(0.5, 0.25);
        let expected = full.matmul(&m).unwrap().matmul(&full.adjoint()).unwrap();
        let layout = TargetLayout::new(&[1], 2).unwrap();
        m.conjugate_by(&x, &layout);
        assert!(m.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn reversed_targets_swap_roles() {
        // CNOT with targets [1, 0] has control on qubit 1.
        let cnot = Matrix::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]);
        let mut m = Matrix::zeros(4);
        m[(1, 1)] = ONE; // |01⟩⟨01|
        let layout = TargetLayout::new(&[1, 0], 2).unwrap();
        m.conjugate_by(&cnot, &layout);
        assert_eq!(m[(3, 3)], ONE); // |11⟩⟨11|
    }

    #[test]
    fn target_validation() {
        assert_eq!(validate_targets(&[], 2), Err(Error::EmptyQubitSet));
        assert_eq!(
            validate_targets(&[2], 2),
            Err(Error::InvalidQubit { qubit: 2, n: 2 })
        );
        assert_eq!(validate_targets(&[1, 1], 2), Err(Error::DuplicateQubit(1)));
    }

    #[test]
    fn qubit_count_from_dimension() {
        assert_eq!(qubits_for_dim(8), Ok(3));
        assert_eq!(qubits_for_dim(6), Err(Error::NotPowerOfTwo(6)));
        assert_eq!(qubits_for_dim(0), Err(Error::NotPowerOfTwo(0)));
    }
}
