//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! Dimensions here never exceed a few dozen, where Jacobi is accurate to
//! machine precision and simple enough to audit.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::matrix::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order with the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Eigh {
    /// Rebuilds `V diag(w) V†` from (possibly modified) eigenvalues.
    pub fn reconstruct_with(&self, values: &[f64]) -> Matrix {
        let n = self.vectors.dim();
        let mut out = Matrix::zeros(n);
        for (k, &w) in values.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Hermitian tolerance accepted by [`eigh`].
pub const HERMITIAN_TOL: f64 = 1e-8;

pub fn eigh(m: &Matrix) -> Result<Eigh> {
    let deviation = m.hermiticity_error();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = Matrix::identity(n);

    let scale = a
        .as_slice()
        .iter()
        .map(|x| x.norm_sqr())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= 1e-30 * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = Matrix::zeros(n);
    for (k, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, k)] = v[(i, src)];
        }
    }
    Ok(Eigh { values, vectors })
}

/// Annihilates `a[p][q]` with the unitary `G = diag(1, e^{-iφ}) R(θ)` on the (p, q) plane.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r < 1e-300 {
        return;
    }
    let phase = apq / r; // e^{iφ}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = 0.5 * libm::atan2(2.0 * r, aqq - app);
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let n = a.dim();

    // Columns: A ← A G
    let g10 = -phase.conj() * s;
    let g11 = phase.conj() * c;
    for i in 0..n {
        let (aip, aiq) = (a[(i, p)], a[(i, q)]);
        a[(i, p)] = aip * c + aiq * g10;
        a[(i, q)] = aip * s + aiq * g11;
        let (vip, viq) = (v[(i, p)], v[(i, q)]);
        v[(i, p)] = vip * c + viq * g10;
        v[(i, q)] = vip * s + viq * g11;
    }
    // Rows: A ← G† A
    let h10 = -phase * s;
    let h11 = phase * c;
    for j in 0..n {
        let (apj, aqj) = (a[(p, j)], a[(q, j)]);
        a[(p, j)] = apj * c + aqj * h10;
        a[(q, j)] = apj * s + aqj * h11;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
}
