//! Error channels: amplitude-and-phase damping for gates and idles, noisy
//! readout as a two-outcome POVM, stochastic reset error and a thermal
//! initial state.
//!
//! Times are in seconds throughout.

use alloc::vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    partial_trace_raw, qubit_bit, validate_targets, DensityMatrix, KrausChannel, Matrix, Operator,
    Tensor,
};

/// Coherence and control parameters of one physical qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitParams {
    pub t1: f64,
    pub t2_star: f64,
    /// π/2 pulse time; H and SX cost one.
    pub t_pi2: f64,
    /// π pulse time; X and the Pauli X/Y flips cost one.
    pub t_pi: f64,
    /// Symmetric readout assignment error.
    pub p_err_m: f64,
}

/// Where the damping accumulated over a CNOT is applied relative to the ideal gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CnotDamping {
    Before,
    #[default]
    After,
    /// Half the duration before the gate, half after.
    Split,
}

impl CnotDamping {
    pub fn as_str(self) -> &'static str {
        match self {
            CnotDamping::Before => "before",
            CnotDamping::After => "after",
            CnotDamping::Split => "split",
        }
    }

    pub fn parse(s: &str) -> Option<CnotDamping> {
        match s {
            "before" => Some(CnotDamping::Before),
            "after" => Some(CnotDamping::After),
            "split" => Some(CnotDamping::Split),
            _ => None,
        }
    }
}

/// Full parameter set of the noisy two-qubit recycling device.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    /// Qubit A: persistent, carries the chain forward.
    pub a: QubitParams,
    /// Qubit B: measured and reset every cycle.
    pub b: QubitParams,
    pub t_cnot: f64,
    pub t_buffer: f64,
    pub t_meas_a: f64,
    pub t_meas_b: f64,
    pub t_reset: f64,
    /// Idle of qubit A while B is read out and reset.
    pub t_a_wait: f64,
    pub t_m_wait: f64,
    pub t_r_wait: f64,
    pub p_err_ini: f64,
    /// Residual excited-state population of both qubits before heralding.
    pub p_thermal: f64,
    pub cnot_damping: CnotDamping,
    /// When false, readout pre-rotations are applied instantaneously right before the measurement.
    pub damp_basis_rotations: bool,
}

const US: f64 = 1e-6;
const NS: f64 = 1e-9;

impl NoiseParams {
    /// Parameters of the reference two-transmon device.
    pub fn reference_device() -> Self {
        Self {
            a: QubitParams {
                t1: 20.0 * US,
                t2_star: 29.0 * US,
                t_pi2: 20.0 * NS,
                t_pi: 40.0 * NS,
                p_err_m: 0.050,
            },
            b: QubitParams {
                t1: 20.0 * US,
                t2_star: 27.0 * US,
                t_pi2: 20.0 * NS,
                t_pi: 40.0 * NS,
                p_err_m: 0.053,
            },
            t_cnot: 296.0 * NS,
            t_buffer: 6.0 * NS,
            t_meas_a: 750.0 * NS,
            t_meas_b: 750.0 * NS,
            t_reset: 300.0 * NS,
            t_a_wait: 1.45 * US,
            t_m_wait: 0.2 * US,
            t_r_wait: 0.2 * US,
            p_err_ini: 0.03,
            p_thermal: 0.03,
            cnot_damping: CnotDamping::After,
            damp_basis_rotations: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (q, name_t1, name_t2) in [
            (&self.a, "a.t1", "a.t2_star"),
            (&self.b, "b.t1", "b.t2_star"),
        ] {
            check_positive(name_t1, q.t1)?;
            check_positive(name_t2, q.t2_star)?;
            if q.t2_star > 2.0 * q.t1 {
                return Err(Error::DephasingExceedsRelaxation {
                    t1: q.t1,
                    t2_star: q.t2_star,
                });
            }
        }
        for (name, t) in [
            ("a.t_pi2", self.a.t_pi2),
            ("a.t_pi", self.a.t_pi),
            ("b.t_pi2", self.b.t_pi2),
            ("b.t_pi", self.b.t_pi),
            ("t_cnot", self.t_cnot),
            ("t_buffer", self.t_buffer),
            ("t_meas_a", self.t_meas_a),
            ("t_meas_b", self.t_meas_b),
            ("t_reset", self.t_reset),
            ("t_a_wait", self.t_a_wait),
            ("t_m_wait", self.t_m_wait),
            ("t_r_wait", self.t_r_wait),
        ] {
            check_duration(name, t)?;
        }
        for (name, p) in [
            ("a.p_err_m", self.a.p_err_m),
            ("b.p_err_m", self.b.p_err_m),
            ("p_err_ini", self.p_err_ini),
            ("p_thermal", self.p_thermal),
        ] {
            check_probability(name, p)?;
        }
        Ok(())
    }

    pub fn qubit(&self, q: usize) -> &QubitParams {
        if q == 0 {
            &self.a
        } else {
            &self.b
        }
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        });
    }
    Ok(())
}

fn check_duration(name: &'static str, value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be a non-negative duration",
        });
    }
    Ok(())
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidProbability { name, value });
    }
    Ok(())
}

/// Damping strengths for one gate or idle of length `t_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApdRates {
    pub gamma: f64,
    pub lambda: f64,
    /// `1 - γ - λ`, evaluated without cancellation.
    pub keep: f64,
    /// Pure-dephasing time; infinite when `T2* = 2 T1`.
    pub t_phi: f64,
}

pub fn apd_rates(t_g: f64, t1: f64, t2_star: f64) -> Result<ApdRates> {
    check_duration("t_g", t_g)?;
    check_positive("T1", t1)?;
    check_positive("T2*", t2_star)?;
    if t2_star > 2.0 * t1 {
        return Err(Error::DephasingExceedsRelaxation { t1, t2_star });
    }
    let denom = 2.0 * t1 - t2_star;
    let t_phi = if denom == 0.0 {
        f64::INFINITY
    } else {
        2.0 * t1 * t2_star / denom
    };
    let decay = libm::exp(-t_g / t1);
    let gamma = 1.0 - decay;
    let dephase = libm::exp(-2.0 * t_g / t_phi);
    let lambda = decay * (1.0 - dephase);
    Ok(ApdRates {
        gamma,
        lambda,
        keep: decay * dephase,
        t_phi,
    })
}

impl ApdRates {
    /// Kraus operators `K1 = diag(1, √(1-γ-λ))`, `K2 = √γ |0⟩⟨1|`, `K3 = √λ |1⟩⟨1|`.
    pub fn channel(&self) -> Result<KrausChannel> {
        channel_from_rates(self.gamma, self.lambda, self.keep)
    }
}

fn channel_from_rates(gamma: f64, lambda: f64, keep: f64) -> Result<KrausChannel> {
    let ops = vec![
        Operator::new(Matrix::from_real_rows([
            [1.0, 0.0],
            [0.0, libm::sqrt(keep)],
        ]))?,
        Operator::new(Matrix::from_real_rows([
            [0.0, libm::sqrt(gamma)],
            [0.0, 0.0],
        ]))?,
        Operator::new(Matrix::from_real_rows([
            [0.0, 0.0],
            [0.0, libm::sqrt(lambda)],
        ]))?,
    ];
    KrausChannel::new(ops)
}

/// Amplitude-and-phase damping over a duration `t_g`.
pub fn apd_channel(t_g: f64, t1: f64, t2_star: f64) -> Result<KrausChannel> {
    apd_rates(t_g, t1, t2_star)?.channel()
}

/// Direct construction from damping strengths, e.g. full decay `γ = 1`.
pub fn apd_channel_from_rates(gamma: f64, lambda: f64) -> Result<KrausChannel> {
    check_probability("gamma", gamma)?;
    check_probability("lambda", lambda)?;
    if gamma + lambda > 1.0 + 1e-15 {
        return Err(Error::InvalidParameter {
            name: "gamma + lambda",
            value: gamma + lambda,
            reason: "must not exceed 1",
        });
    }
    channel_from_rates(gamma, lambda, (1.0 - gamma - lambda).max(0.0))
}

/// Symmetric-error readout: POVM `F_i` and back-action `M_i = √F_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub povm: [Operator; 2],
    pub update: [Operator; 2],
    pub p_err_m: f64,
}

impl MeasurementModel {
    pub fn new(p_err_m: f64) -> Result<Self> {
        check_probability("p_err_m", p_err_m)?;
        let (p, q) = (p_err_m, 1.0 - p_err_m);
        let diag = |a: f64, b: f64| {
            Operator::new(Matrix::diagonal(&[
                Complex64::new(a, 0.0),
                Complex64::new(b, 0.0),
            ]))
            .expect("2x2")
        };
        Ok(Self {
            povm: [diag(q, p), diag(p, q)],
            update: [
                diag(libm::sqrt(q), libm::sqrt(p)),
                diag(libm::sqrt(p), libm::sqrt(q)),
            ],
            p_err_m,
        })
    }

    pub fn ideal() -> Self {
        Self::new(0.0).expect("0 is a probability")
    }

    /// Unnormalized post-measurement matrix `M_i ρ M_i†`; its trace is `Tr[ρ F_i]`.
    pub(crate) fn branch(&self, m: &Matrix, n: usize, qubit: usize, outcome: usize) -> Matrix {
        // M_i is diagonal, so the update only rescales entries.
        let bit = qubit_bit(qubit, n);
        let d = self.update[outcome].matrix();
        let (m0, m1) = (d[(0, 0)].re, d[(1, 1)].re);
        let factor = |i: usize| if i & bit == 0 { m0 } else { m1 };
        let dim = m.dim();
        let mut out = m.clone();
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] *= factor(i) * factor(j);
            }
        }
        out
    }

    /// `Tr[ρ F_0]` on `qubit`.
    pub(crate) fn prob_zero(&self, m: &Matrix, n: usize, qubit: usize) -> f64 {
        let bit = qubit_bit(qubit, n);
        let (f0_0, f0_1) = (1.0 - self.p_err_m, self.p_err_m);
        (0..m.dim())
            .map(|i| m[(i, i)].re * if i & bit == 0 { f0_0 } else { f0_1 })
            .sum()
    }
}

pub fn measurement_model(p_err_m: f64) -> Result<MeasurementModel> {
    MeasurementModel::new(p_err_m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: u8,
    pub state: DensityMatrix,
    /// Probability of the observed outcome.
    pub probability: f64,
}

/// Samples a readout of `qubit` using the uniform draw `u ∈ [0, 1)`: outcome 0 iff `u < Tr[ρF_0]`.
pub fn measure(
    rho: &DensityMatrix,
    qubit: usize,
    model: &MeasurementModel,
    u: f64,
) -> Result<Measurement> {
    let n = rho.num_qubits();
    validate_targets(&[qubit], n)?;
    let p0 = model.prob_zero(rho.matrix(), n, qubit).clamp(0.0, 1.0);
    let outcome = if u < p0 { 0 } else { 1 };
    let probability = if outcome == 0 { p0 } else { 1.0 - p0 };
    let post = model.branch(rho.matrix(), n, qubit, outcome);
    Ok(Measurement {
        outcome: outcome as u8,
        state: DensityMatrix::from_unnormalized(post),
        probability,
    })
}

/// Both readout branches with their probabilities; zero-probability branches are omitted.
pub fn measurement_branches(
    rho: &DensityMatrix,
    qubit: usize,
    model: &MeasurementModel,
) -> Result<alloc::vec::Vec<Measurement>> {
    let n = rho.num_qubits();
    validate_targets(&[qubit], n)?;
    let mut out = alloc::vec::Vec::with_capacity(2);
    for outcome in 0..2 {
        let post = model.branch(rho.matrix(), n, qubit, outcome);
        let probability = post.trace().re;
        if probability > 0.0 {
            out.push(Measurement {
                outcome: outcome as u8,
                state: DensityMatrix::from_unnormalized(post),
                probability,
            });
        }
    }
    Ok(out)
}

/// `(1-p)|0⟩⟨0| + p|1⟩⟨1|`.
pub(crate) fn fresh_qubit(p_one: f64) -> Matrix {
    Matrix::from_real_rows([[1.0 - p_one, 0.0], [0.0, p_one]])
}

/// Traces out `qubit` and replaces it by `(1-p)|0⟩⟨0| + p|1⟩⟨1|`; works on unnormalized matrices.
pub(crate) fn reset_raw(m: &Matrix, n: usize, qubit: usize, p_err_ini: f64) -> Matrix {
    let keep: alloc::vec::Vec<usize> = (0..n).filter(|&q| q != qubit).collect();
    let reduced = partial_trace_raw(m, n, &keep);
    let fresh = fresh_qubit(p_err_ini);
    // Only the last qubit is ever reset here; other positions go through a permutation.
    debug_assert_eq!(qubit, n - 1);
    reduced.kron(&fresh)
}

/// Resets qubit B (index 1) of a two-qubit state with a stochastic bit-flip error.
pub fn reset_channel(rho: &DensityMatrix, p_err_ini: f64) -> Result<DensityMatrix> {
    if rho.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    check_probability("p_err_ini", p_err_ini)?;
    Ok(DensityMatrix::from_matrix_unchecked(reset_raw(
        rho.matrix(),
        2,
        1,
        p_err_ini,
    )))
}

/// `[(1-p)|0⟩⟨0| + p|1⟩⟨1|]^⊗n`.
pub fn thermal_initial_state(p_thermal: f64, n: usize) -> Result<DensityMatrix> {
    check_probability("p_thermal", p_thermal)?;
    if n == 0 {
        return Err(Error::EmptyQubitSet);
    }
    let one = DensityMatrix::from_matrix_unchecked(fresh_qubit(p_thermal));
    let mut rho = one.clone();
    for _ in 1..n {
        rho = rho.tensor(&one);
    }
    Ok(rho)
}

/// Readout error viewed as a channel before an ideal measurement: every
/// Pauli expectation on the qubit shrinks by `1 - 2p`.
pub fn readout_shrink_channel(p_err_m: f64) -> Result<KrausChannel> {
    check_probability("p_err_m", p_err_m)?;
    if p_err_m > 2.0 / 3.0 {
        return Err(Error::InvalidParameter {
            name: "p_err_m",
            value: p_err_m,
            reason: "shrink channel needs p <= 2/3",
        });
    }
    let w = libm::sqrt(p_err_m / 2.0);
    let id = libm::sqrt(1.0 - 1.5 * p_err_m);
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let ops = vec![
        Operator::new(Matrix::from_real_rows([[id, 0.0], [0.0, id]]))?,
        Operator::new(Matrix::from_real_rows([[0.0, w], [w, 0.0]]))?,
        Operator::new(Matrix::from_rows([
            [c(0.0, 0.0), c(0.0, -w)],
            [c(0.0, w), c(0.0, 0.0)],
        ]))?,
        Operator::new(Matrix::from_real_rows([[w, 0.0], [0.0, -w]]))?,
    ];
    KrausChannel::new(ops)
}
