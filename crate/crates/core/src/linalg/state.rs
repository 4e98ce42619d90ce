use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::eigh::eigh;
use super::matrix::{qubit_bit, qubits_for_dim, validate_targets, Matrix, TargetLayout};
use super::{ALGEBRAIC_TOL, PSD_TOL};
use crate::error::{Error, Result};

/// Kronecker product under the crate's big-endian qubit ordering.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

/// Normalized pure state of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = qubits_for_dim(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if libm::fabs(norm_sqr - 1.0) > ALGEBRAIC_TOL {
            return Err(Error::NotUnitNorm { norm_sqr });
        }
        Ok(Self { n, amplitudes })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = libm::sqrt(amplitudes.iter().map(|a| a.norm_sqr()).sum());
        if norm == 0.0 {
            return Err(Error::NotUnitNorm { norm_sqr: 0.0 });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(amplitudes)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0).expect("index 0 always exists")
    }

    /// Haar-random state: normalized vector of complex Gaussian amplitudes.
    pub fn haar_random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut gaussian = || {
            let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let v: f64 = rng.gen();
            let r = libm::sqrt(-2.0 * libm::log(u));
            let phase = 2.0 * core::f64::consts::PI * v;
            (r * libm::cos(phase), r * libm::sin(phase))
        };
        let amplitudes = (0..1usize << n)
            .map(|_| {
                let (re, im) = gaussian();
                Complex64::new(re, im)
            })
            .collect();
        Self::normalized(amplitudes).expect("nonzero with probability one")
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Applies a unitary embedded on `targets`.
    pub fn apply(&self, u: &Operator, targets: &[usize]) -> Result<StateVector> {
        check_operator_targets(u, targets)?;
        let layout = TargetLayout::new(targets, self.n)?;
        let mut out = self.amplitudes.clone();
        layout.apply_to_vector(u.matrix(), &mut out);
        Ok(StateVector {
            n: self.n,
            amplitudes: out,
        })
    }

    /// Max elementwise distance, for amplitude-wise comparisons.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            n: self.n,
            m: Matrix::outer(&self.amplitudes),
        }
    }
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        StateVector {
            n: self.n + other.n,
            amplitudes,
        }
    }
}

/// Square operator acting on `k` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    k: usize,
    m: Matrix,
}

impl Operator {
    pub fn new(m: Matrix) -> Result<Self> {
        let k = qubits_for_dim(m.dim())?;
        Ok(Self { k, m })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            k,
            m: Matrix::identity(1 << k),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            k: self.k,
            m: self.m.adjoint(),
        }
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        Ok(Operator {
            k: self.k,
            m: self.m.matmul(&rhs.m)?,
        })
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.m.is_unitary(tol)
    }

    /// Embeds the operator on `targets` of an `n`-qubit register.
    pub fn embed(&self, targets: &[usize], n: usize) -> Result<Operator> {
        check_operator_targets(self, targets)?;
        let layout = TargetLayout::new(targets, n)?;
        let mut full = Matrix::identity(1 << n);
        full.apply_left(&self.m, &layout);
        Ok(Operator { k: n, m: full })
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Self {
        Operator {
            k: self.k + other.k,
            m: self.m.kron(&other.m),
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    m: Matrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Matrix) -> Result<Self> {
        let n = qubits_for_dim(m.dim())?;
        let deviation = m.hermiticity_error();
        if deviation > ALGEBRAIC_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = m.trace().re;
        if libm::fabs(trace - 1.0) > ALGEBRAIC_TOL {
            return Err(Error::NotNormalized { trace });
        }
        let min_eigenvalue = eigh(&m)?.values[0];
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { n, m })
    }

    /// Wraps a matrix that is a density matrix by construction.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        let n = qubits_for_dim(m.dim()).expect("register dimension");
        Self { n, m }
    }

    /// Divides a positive, Hermitian matrix by its trace.
    pub(crate) fn from_unnormalized(mut m: Matrix) -> Self {
        let t = m.trace().re;
        m.scale_real_in_place(1.0 / t);
        Self::from_matrix_unchecked(m)
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.projector()
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        let mut m = Matrix::identity(d);
        m.scale_real_in_place(1.0 / d as f64);
        Self { n, m }
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        Ok(StateVector::basis(n, index)?.projector())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Probability of basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.m[(index, index)].re
    }

    /// Population of `|1⟩` on one qubit.
    pub fn excited_population(&self, qubit: usize) -> f64 {
        let bit = qubit_bit(qubit, self.n);
        (0..self.dim())
            .filter(|i| i & bit != 0)
            .map(|i| self.population(i))
            .sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(&self.m)?.values[0])
    }

    /// `Tr[self · op]`.
    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        if op.matrix().dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.matrix().dim(),
            });
        }
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.m[(i, j)] * op.matrix()[(j, i)];
            }
        }
        Ok(acc)
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        DensityMatrix {
            n: self.n + other.n,
            m: self.m.kron(&other.m),
        }
    }
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<Operator>,
}

impl KrausChannel {
    /// Rejects operator sets whose `Σ K†K` deviates from the identity by more than 1e-10.
    pub fn new(operators: Vec<Operator>) -> Result<Self> {
        let first = operators.first().ok_or(Error::EmptyChannel)?;
        let dim = first.matrix().dim();
        let mut sum = Matrix::zeros(dim);
        for k in &operators {
            if k.matrix().dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.matrix().dim(),
                });
            }
            sum.add_assign(&k.matrix().adjoint().matmul(k.matrix())?)?;
        }
        let deviation = sum.max_abs_diff(&Matrix::identity(dim));
        if deviation > ALGEBRAIC_TOL {
            return Err(Error::IncompleteChannel { deviation });
        }
        Ok(Self { operators })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            operators: vec![Operator::identity(k)],
        }
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn num_qubits(&self) -> usize {
        self.operators[0].num_qubits()
    }

    pub fn completeness_error(&self) -> f64 {
        let dim = self.operators[0].matrix().dim();
        let mut sum = Matrix::zeros(dim);
        for k in &self.operators {
            let kk = k.matrix().adjoint().matmul(k.matrix()).expect("same dim");
            sum.add_assign(&kk).expect("same dim");
        }
        sum.max_abs_diff(&Matrix::identity(dim))
    }

    /// Sequential composition: `other` after `self`.
    pub fn then(&self, other: &KrausChannel) -> Result<KrausChannel> {
        let mut ops = Vec::with_capacity(self.operators.len() * other.operators.len());
        for b in &other.operators {
            for a in &self.operators {
                ops.push(b.compose(a)?);
            }
        }
        KrausChannel::new(ops)
    }
}

fn check_operator_targets(u: &Operator, targets: &[usize]) -> Result<()> {
    if u.num_qubits() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: u.num_qubits(),
            found: targets.len(),
        });
    }
    Ok(())
}

/// `U ρ U†` with `u` acting on `targets`.
pub fn apply_unitary(
    rho: &DensityMatrix,
    u: &Operator,
    targets: &[usize],
) -> Result<DensityMatrix> {
    check_operator_targets(u, targets)?;
    let layout = TargetLayout::new(targets, rho.n)?;
    let mut m = rho.m.clone();
    m.conjugate_by(u.matrix(), &layout);
    Ok(DensityMatrix { n: rho.n, m })
}

/// `Σ_m K_m ρ K_m†` with the channel acting on `targets`.
pub fn apply_channel(
    rho: &DensityMatrix,
    ch: &KrausChannel,
    targets: &[usize],
) -> Result<DensityMatrix> {
    let m = apply_channel_raw(&rho.m, rho.n, ch, targets)?;
    Ok(DensityMatrix { n: rho.n, m })
}

/// Channel application on an arbitrary (e.g. unnormalized branch) matrix.
pub(crate) fn apply_channel_raw(
    m: &Matrix,
    n: usize,
    ch: &KrausChannel,
    targets: &[usize],
) -> Result<Matrix> {
    check_operator_targets(&ch.operators[0], targets)?;
    let layout = TargetLayout::new(targets, n)?;
    if let [only] = ch.operators() {
        let mut out = m.clone();
        out.conjugate_by(only.matrix(), &layout);
        return Ok(out);
    }
    let mut out = Matrix::zeros(m.dim());
    for k in ch.operators() {
        let mut term = m.clone();
        term.conjugate_by(k.matrix(), &layout);
        out.add_assign(&term)?;
    }
    Ok(out)
}

/// `U m U†` on an arbitrary (e.g. unnormalized branch) matrix.
pub(crate) fn conjugate_raw(
    m: &mut Matrix,
    n: usize,
    u: &Operator,
    targets: &[usize],
) -> Result<()> {
    check_operator_targets(u, targets)?;
    let layout = TargetLayout::new(targets, n)?;
    m.conjugate_by(u.matrix(), &layout);
    Ok(())
}

/// Reduced state on `keep` (sorted ascending in the output).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let mut keep = keep.to_vec();
    validate_targets(&keep, rho.n)?;
    keep.sort_unstable();
    let m = partial_trace_raw(&rho.m, rho.n, &keep);
    Ok(DensityMatrix { n: keep.len(), m })
}

/// Assumes `keep` is validated and sorted.
pub(crate) fn partial_trace_raw(m: &Matrix, n: usize, keep: &[usize]) -> Matrix {
    let k = keep.len();
    let keep_mask: usize = keep.iter().map(|&q| qubit_bit(q, n)).sum();
    let reduce = |i: usize| -> usize {
        keep.iter()
            .enumerate()
            .filter(|(_, &q)| i & qubit_bit(q, n) != 0)
            .map(|(j, _)| 1usize << (k - 1 - j))
            .sum()
    };
    let dim = 1usize << n;
    let local: Vec<usize> = (0..dim).map(reduce).collect();
    let mut out = Matrix::zeros(1 << k);
    for i in 0..dim {
        for j in 0..dim {
            if (i & !keep_mask) == (j & !keep_mask) {
                out[(local[i], local[j])] += m[(i, j)];
            }
        }
    }
    out
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: psi.dim(),
        });
    }
    let rho_psi = rho.m.mul_vec(psi.amplitudes())?;
    let f: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(&rho_psi)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(f.re)
}
