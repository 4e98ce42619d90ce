//! Gate catalog, circuits, the ideal linear cluster state and the
//! SWAP-elimination identity that lets two qubits emulate a long chain.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    conjugate_raw, partial_trace_raw, qubit_bit, validate_targets, DensityMatrix, Matrix, Operator,
    StateVector, Tensor,
};

/// Largest chain handled by [`ideal_lcs`].
pub const MAX_LCS_QUBITS: usize = 10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Measurement basis, named by the Pauli operator whose eigenbasis is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn as_char(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }

    pub fn from_char(ch: char) -> Option<Basis> {
        match ch.to_ascii_uppercase() {
            'X' => Some(Basis::X),
            'Y' => Some(Basis::Y),
            'Z' => Some(Basis::Z),
            _ => None,
        }
    }

    /// Parses a word such as `"XZX"`.
    pub fn parse_word(s: &str) -> Result<Vec<Basis>> {
        s.chars()
            .map(|ch| {
                Basis::from_char(ch).ok_or_else(|| Error::Parse {
                    what: "measurement basis",
                    input: s.into(),
                })
            })
            .collect()
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Basis> {
        let mut chars = s.chars();
        match (chars.next().and_then(Basis::from_char), chars.next()) {
            (Some(b), None) => Ok(b),
            _ => Err(Error::Parse {
                what: "measurement basis",
                input: s.into(),
            }),
        }
    }
}

/// Renders a basis list as a word, e.g. `XZX`.
pub fn basis_word(bases: &[Basis]) -> alloc::string::String {
    bases.iter().map(|b| b.as_char()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    /// Hadamard.
    H,
    /// π rotation about x, `exp(-iπσx/2)`.
    X,
    /// π/2 rotation about x, `exp(-iπσx/4)`.
    SX,
    /// `Z(θ) = exp(-iθσz/2)`.
    Z(f64),
    CZ,
    /// Control is the first target, target the second.
    CNOT,
    SWAP,
    PauliX,
    PauliY,
    PauliZ,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::CZ | GateKind::CNOT | GateKind::SWAP => 2,
            _ => 1,
        }
    }

    /// Phase-frame gates cost no pulse time.
    pub fn is_virtual(self) -> bool {
        matches!(self, GateKind::Z(_) | GateKind::PauliZ)
    }

    pub fn matrix(self) -> Operator {
        let h = FRAC_1_SQRT_2;
        let m = match self {
            GateKind::H => Matrix::from_real_rows([[h, h], [h, -h]]),
            GateKind::X => {
                Matrix::from_rows([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, -1.0), c(0.0, 0.0)]])
            }
            GateKind::SX => Matrix::from_rows([[c(h, 0.0), c(0.0, -h)], [c(0.0, -h), c(h, 0.0)]]),
            GateKind::Z(theta) => Matrix::diagonal(&[
                Complex64::from_polar(1.0, -theta / 2.0),
                Complex64::from_polar(1.0, theta / 2.0),
            ]),
            GateKind::PauliX => Matrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]),
            GateKind::PauliY => {
                Matrix::from_rows([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
            }
            GateKind::PauliZ => Matrix::from_real_rows([[1.0, 0.0], [0.0, -1.0]]),
            GateKind::CZ => Matrix::from_real_rows([
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
            ]),
            GateKind::CNOT => Matrix::from_real_rows([
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ]),
            GateKind::SWAP => Matrix::from_real_rows([
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]),
        };
        Operator::new(m).expect("gate matrices have power-of-two dimension")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: &[usize]) -> Result<Gate> {
        if targets.len() != kind.arity() {
            return Err(Error::DimensionMismatch {
                expected: kind.arity(),
                found: targets.len(),
            });
        }
        Ok(Gate {
            kind,
            targets: targets.to_vec(),
        })
    }

    pub fn single(kind: GateKind, q: usize) -> Gate {
        Gate::new(kind, &[q]).expect("single-qubit gate kind")
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Gate {
        Gate::new(kind, &[a, b]).expect("two-qubit gate kind")
    }

    pub fn matrix(&self) -> Operator {
        self.kind.matrix()
    }
}

/// Pre-measurement rotation that maps the eigenbasis of `basis` onto Z, in application order.
pub fn basis_rotation(basis: Basis) -> Vec<GateKind> {
    match basis {
        Basis::Z => vec![],
        Basis::X => vec![GateKind::H],
        Basis::Y => vec![GateKind::Z(-FRAC_PI_2), GateKind::H],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CircuitOp {
    Gate(Gate),
    Measure { qubit: usize, basis: Basis },
    Reset { qubit: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n: usize,
    ops: Vec<CircuitOp>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self { n, ops: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn push(&mut self, op: CircuitOp) -> Result<&mut Self> {
        match &op {
            CircuitOp::Gate(g) => validate_targets(&g.targets, self.n)?,
            CircuitOp::Measure { qubit, .. } | CircuitOp::Reset { qubit } => {
                validate_targets(&[*qubit], self.n)?
            }
        }
        self.ops.push(op);
        Ok(self)
    }

    pub fn gate(&mut self, kind: GateKind, targets: &[usize]) -> Result<&mut Self> {
        self.push(CircuitOp::Gate(Gate::new(kind, targets)?))
    }

    /// Applies the gate operations to `input`, skipping measurements and resets.
    pub fn unitary_action(&self, input: &StateVector) -> Result<StateVector> {
        let mut psi = input.clone();
        for op in &self.ops {
            if let CircuitOp::Gate(g) = op {
                psi = psi.apply(&g.matrix(), &g.targets)?;
            }
        }
        Ok(psi)
    }

    /// Exact distribution over measurement records from `|0…0⟩`, by branch enumeration.
    ///
    /// Record bit `k` is the outcome of the `k`-th `Measure` op, stored in
    /// the most significant position first. Measurements are ideal and
    /// projective.
    pub fn outcome_distribution(&self) -> Result<Vec<f64>> {
        let measured = self
            .ops
            .iter()
            .filter(|op| matches!(op, CircuitOp::Measure { .. }))
            .count();
        let n = self.n;
        let mut branches: BTreeMap<usize, Matrix> = BTreeMap::new();
        branches.insert(0, DensityMatrix::basis(n, 0)?.into_matrix());
        let mut recorded = 0;
        for op in &self.ops {
            match op {
                CircuitOp::Gate(g) => {
                    let u = g.matrix();
                    for m in branches.values_mut() {
                        conjugate_raw(m, n, &u, &g.targets)?;
                    }
                }
                CircuitOp::Measure { qubit, basis } => {
                    let bit = qubit_bit(*qubit, n);
                    let shift = measured - 1 - recorded;
                    let mut next = BTreeMap::new();
                    for (record, mut m) in branches {
                        for kind in basis_rotation(*basis) {
                            conjugate_raw(&mut m, n, &kind.matrix(), &[*qubit])?;
                        }
                        for outcome in 0..2usize {
                            let mut proj = m.clone();
                            let dim = proj.dim();
                            for i in 0..dim {
                                for j in 0..dim {
                                    let keep = ((i & bit != 0) as usize == outcome)
                                        && ((j & bit != 0) as usize == outcome);
                                    if !keep {
                                        proj[(i, j)] = Complex64::new(0.0, 0.0);
                                    }
                                }
                            }
                            if proj.trace().re > 0.0 {
                                next.insert(record | (outcome << shift), proj);
                            }
                        }
                    }
                    branches = next;
                    recorded += 1;
                }
                CircuitOp::Reset { qubit } => {
                    let keep: Vec<usize> = (0..n).filter(|q| q != qubit).collect();
                    for m in branches.values_mut() {
                        let reduced = partial_trace_raw(m, n, &keep);
                        let ground = Matrix::from_real_rows([[1.0, 0.0], [0.0, 0.0]]);
                        *m = insert_qubit(&reduced, &ground, *qubit, n);
                    }
                }
            }
        }
        let mut dist = vec![0.0; 1 << measured];
        for (record, m) in branches {
            dist[record] += m.trace().re;
        }
        Ok(dist)
    }
}

/// Places a one-qubit state `q_state` at position `qubit` of an `n`-qubit register whose other qubits are `rest`.
fn insert_qubit(rest: &Matrix, q_state: &Matrix, qubit: usize, n: usize) -> Matrix {
    // Build rest ⊗ q_state (new qubit last), then permute it into place.
    let mut m = rest.kron(q_state);
    let swap = GateKind::SWAP.matrix();
    for pos in (qubit + 1..n).rev() {
        conjugate_raw(&mut m, n, &swap, &[pos - 1, pos]).expect("adjacent qubits are valid");
    }
    m
}

pub(crate) fn check_chain_length(n: usize) -> Result<()> {
    if !(2..=MAX_LCS_QUBITS).contains(&n) {
        return Err(Error::QubitCountOutOfRange {
            n,
            min: 2,
            max: MAX_LCS_QUBITS,
        });
    }
    Ok(())
}

/// `∏ CZ(i, i+1) H^⊗N |0⟩^⊗N` over adjacent pairs `i = 0 … N-2`.
pub fn ideal_lcs(n: usize) -> Result<StateVector> {
    check_chain_length(n)?;
    let mut psi = StateVector::zero(n);
    let h = GateKind::H.matrix();
    for q in 0..n {
        psi = psi.apply(&h, &[q])?;
    }
    let cz = GateKind::CZ.matrix();
    for q in 0..n - 1 {
        psi = psi.apply(&cz, &[q, q + 1])?;
    }
    Ok(psi)
}

/// Sequential spatial-domain preparation: all Hadamards, then each CZ
/// followed by the measurement of the qubit it completes.
pub fn spatial_lcs_circuit(n: usize, bases: &[Basis]) -> Result<Circuit> {
    check_chain_length(n)?;
    if bases.len() != n {
        return Err(Error::BasisCountMismatch {
            expected: n,
            found: bases.len(),
        });
    }
    let mut circuit = Circuit::new(n);
    for q in 0..n {
        circuit.gate(GateKind::H, &[q])?;
    }
    for (q, &basis) in bases.iter().enumerate() {
        if q + 1 < n {
            circuit.gate(GateKind::CZ, &[q, q + 1])?;
        }
        circuit.push(CircuitOp::Measure { qubit: q, basis })?;
    }
    Ok(circuit)
}

/// Max amplitude deviation between the two sides of
/// `CZ (I⊗H)|ψ⟩|0⟩ = SWAP (H⊗I) CNOT |ψ⟩|0⟩` using the supplied CNOT matrix.
pub fn swap_elimination_deviation_with(psi: &StateVector, cnot: &Operator) -> Result<f64> {
    if psi.num_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: psi.dim(),
        });
    }
    let input = psi.tensor(&StateVector::zero(1));
    let lhs = input
        .apply(&GateKind::H.matrix(), &[1])?
        .apply(&GateKind::CZ.matrix(), &[0, 1])?;
    let rhs = input
        .apply(cnot, &[0, 1])?
        .apply(&GateKind::H.matrix(), &[0])?
        .apply(&GateKind::SWAP.matrix(), &[0, 1])?;
    Ok(lhs.max_abs_diff(&rhs))
}

pub fn swap_elimination_deviation(psi: &StateVector) -> Result<f64> {
    swap_elimination_deviation_with(psi, &GateKind::CNOT.matrix())
}

/// Whether the SWAP-elimination identity holds for `psi` within 1e-12.
pub fn verify_swap_elimination(psi: &StateVector) -> bool {
    matches!(swap_elimination_deviation(psi), Ok(d) if d <= 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const ALL_KINDS: [GateKind; 10] = [
        GateKind::H,
        GateKind::X,
        GateKind::SX,
        GateKind::Z(0.37),
        GateKind::CZ,
        GateKind::CNOT,
        GateKind::SWAP,
        GateKind::PauliX,
        GateKind::PauliY,
        GateKind::PauliZ,
    ];

    #[test]
    fn every_gate_is_unitary() {
        for kind in ALL_KINDS {
            assert!(kind.matrix().is_unitary(1e-12), "{kind:?}");
        }
    }

    #[test]
    fn swap_squared_is_exactly_identity() {
        let s = GateKind::SWAP.matrix();
        assert_eq!(s.compose(&s).unwrap(), Operator::identity(2));
    }

    #[test]
    fn lcs2_amplitudes() {
        let psi = ideal_lcs(2).unwrap();
        let expected = [0.5, 0.5, 0.5, -0.5];
        for (a, e) in psi.amplitudes().iter().zip(expected) {
            assert_abs_diff_eq!(a.re, e, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn lcs3_amplitudes_and_signs() {
        let psi = ideal_lcs(3).unwrap();
        let m = 1.0 / libm::sqrt(8.0);
        for (i, a) in psi.amplitudes().iter().enumerate() {
            // Sign is (-1)^(x0 x1 + x1 x2).
            let (x0, x1, x2) = ((i >> 2) & 1, (i >> 1) & 1, i & 1);
            let sign = if (x0 * x1 + x1 * x2) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            assert_abs_diff_eq!(a.re, sign * m, epsilon = 1e-15);
        }
    }

    #[test]
    fn lcs_density_elements_are_real_with_modulus_one_over_d() {
        for n in 2..=5 {
            let rho = ideal_lcs(n).unwrap().projector();
            let d = (1usize << n) as f64;
            for x in rho.matrix().as_slice() {
                assert_abs_diff_eq!(x.im, 0.0, epsilon = 1e-14);
                assert_abs_diff_eq!(libm::fabs(x.re), 1.0 / d, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn ideal_lcs_rejects_out_of_range() {
        assert!(ideal_lcs(1).is_err());
        assert!(ideal_lcs(11).is_err());
    }

    #[test]
    fn spatial_circuit_unitary_part_prepares_lcs() {
        for n in 2..=6 {
            let circuit = spatial_lcs_circuit(n, &vec![Basis::Z; n]).unwrap();
            let psi = circuit.unitary_action(&StateVector::zero(n)).unwrap();
            assert!(psi.max_abs_diff(&ideal_lcs(n).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn spatial_lcs2_z_basis_is_uniform() {
        let dist = spatial_lcs_circuit(2, &[Basis::Z, Basis::Z])
            .unwrap()
            .outcome_distribution()
            .unwrap();
        for p in dist {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
        }
    }

    fn parity_expectation(dist: &[f64], mask: usize) -> f64 {
        dist.iter()
            .enumerate()
            .map(|(x, p)| {
                if (x & mask).count_ones().is_multiple_of(2) {
                    *p
                } else {
                    -p
                }
            })
            .sum()
    }

    #[test]
    fn spatial_lcs3_stabilizer_xix() {
        // g0 g2 = X I X; the middle Z factors cancel.
        let dist = spatial_lcs_circuit(3, &[Basis::X, Basis::Z, Basis::X])
            .unwrap()
            .outcome_distribution()
            .unwrap();
        assert_abs_diff_eq!(parity_expectation(&dist, 0b101), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(parity_expectation(&dist, 0b111), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spatial_lcs2_zz_vanishes() {
        let dist = spatial_lcs_circuit(2, &[Basis::Z, Basis::Z])
            .unwrap()
            .outcome_distribution()
            .unwrap();
        assert_abs_diff_eq!(parity_expectation(&dist, 0b11), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn swap_elimination_basis_states() {
        assert!(verify_swap_elimination(&StateVector::basis(1, 0).unwrap()));
        assert!(verify_swap_elimination(&StateVector::basis(1, 1).unwrap()));
        // |0⟩ → |0⟩|+⟩, |1⟩ → |1⟩|−⟩
        let h = FRAC_1_SQRT_2;
        let lhs0 = StateVector::basis(2, 0)
            .unwrap()
            .apply(&GateKind::H.matrix(), &[1])
            .unwrap();
        assert_abs_diff_eq!(lhs0.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(lhs0.amplitudes()[1].re, h, epsilon = 1e-15);
    }

    #[test]
    fn swap_elimination_detects_corrupted_cnot() {
        let mut bad = GateKind::CNOT.matrix().into_matrix();
        bad[(3, 2)] = c(-1.0, 0.0);
        let bad = Operator::new(bad).unwrap();
        let psi = StateVector::basis(1, 1).unwrap();
        assert!(swap_elimination_deviation_with(&psi, &bad).unwrap() > 0.5);
    }

    #[test]
    fn basis_rotations_map_eigenstates_to_zero() {
        let h = FRAC_1_SQRT_2;
        let cases = [
            (Basis::X, vec![c(h, 0.0), c(h, 0.0)], 0),
            (Basis::Y, vec![c(h, 0.0), c(0.0, h)], 0),
            (Basis::Y, vec![c(h, 0.0), c(0.0, -h)], 1),
            (Basis::Z, vec![c(0.0, 0.0), c(1.0, 0.0)], 1),
        ];
        for (basis, amps, outcome) in cases {
            let mut psi = StateVector::new(amps).unwrap();
            for kind in basis_rotation(basis) {
                psi = psi.apply(&kind.matrix(), &[0]).unwrap();
            }
            assert_abs_diff_eq!(psi.amplitudes()[outcome].norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reset_in_circuit() {
        let mut circuit = Circuit::new(2);
        circuit.gate(GateKind::PauliX, &[0]).unwrap();
        circuit.gate(GateKind::PauliX, &[1]).unwrap();
        circuit.push(CircuitOp::Reset { qubit: 0 }).unwrap();
        circuit
            .push(CircuitOp::Measure {
                qubit: 0,
                basis: Basis::Z,
            })
            .unwrap();
        circuit
            .push(CircuitOp::Measure {
                qubit: 1,
                basis: Basis::Z,
            })
            .unwrap();
        let dist = circuit.outcome_distribution().unwrap();
        assert_abs_diff_eq!(dist[0b01], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn circuit_rejects_out_of_range_ops() {
        let mut circuit = Circuit::new(2);
        assert!(circuit.gate(GateKind::CZ, &[1, 2]).is_err());
        assert!(circuit.push(CircuitOp::Reset { qubit: 5 }).is_err());
        assert!(Gate::new(GateKind::H, &[0, 1]).is_err());
    }

    #[test]
    fn basis_parsing() {
        assert_eq!(
            Basis::parse_word("xZy").unwrap(),
            [Basis::X, Basis::Z, Basis::Y]
        );
        assert!(Basis::parse_word("XQ").is_err());
        assert_eq!("Y".parse::<Basis>().unwrap(), Basis::Y);
        assert_eq!(basis_word(&[Basis::Z, Basis::X]), "ZX");
    }
}
