//! The two-qubit recycling cycle that grows a linear cluster state in time.
//!
//! Qubit A (register index 0) carries the chain; qubit B (index 1) is
//! entangled with it by a CNOT, rotated into its measurement basis, read out
//! and reset. After `N - 1` cycles the final cycle also reads out A, giving
//! the string `(x_0, …, x_{N-1})` with cycle-`k` B results in slot `k` and
//! the final A result in slot `N - 1`.
//!
//! Timing model: every gate layer applies its ideal unitaries and is then
//! followed by amplitude-and-phase damping on both qubits for the longest
//! gate in the layer plus the buffer time. The AC-Stark phase correction of
//! the hardware has no counterpart here because the model has no such phase
//! error.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gates::{basis_rotation, check_chain_length, Basis, GateKind};
use crate::linalg::{
    apply_channel_raw, conjugate_raw, DensityMatrix, KrausChannel, Matrix, Operator,
};
use crate::noise::{
    apd_channel, fresh_qubit, readout_shrink_channel, reset_raw, thermal_initial_state,
    CnotDamping, MeasurementModel, NoiseParams, QubitParams,
};

/// Largest chain handled by exact branch enumeration.
pub const MAX_ENUMERATED_QUBITS: usize = 8;
/// Shots per independently seeded random stream.
pub const SHOT_BLOCK: usize = 1024;

const A: usize = 0;
const B: usize = 1;

/// How `run_protocol_shots` draws records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingEngine {
    /// Per-shot density-matrix trajectories with sampled measurement outcomes.
    #[default]
    Trajectory,
    /// Draws from the exact joint herald/outcome distribution.
    Distribution,
}

impl SamplingEngine {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplingEngine::Trajectory => "trajectory",
            SamplingEngine::Distribution => "distribution",
        }
    }

    pub fn parse(s: &str) -> Option<SamplingEngine> {
        match s {
            "trajectory" => Some(SamplingEngine::Trajectory),
            "distribution" => Some(SamplingEngine::Distribution),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// Logical qubits; the protocol runs `n - 1` cycles.
    pub n: usize,
    /// Measurement basis of each logical qubit.
    pub bases: Vec<Basis>,
    /// `None` runs the ideal protocol.
    pub noise: Option<NoiseParams>,
    /// Measure both qubits before the protocol and accept only `00`.
    pub heralding: bool,
    pub shots: usize,
    pub seed: u64,
    pub engine: SamplingEngine,
}

impl ProtocolConfig {
    /// Noiseless configuration with heralding enabled, 2000 shots and seed 0.
    pub fn new(n: usize, bases: Vec<Basis>) -> Result<Self> {
        let cfg = Self {
            n,
            bases,
            noise: None,
            heralding: true,
            shots: 2000,
            seed: 0,
            engine: SamplingEngine::Trajectory,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_noise(mut self, noise: Option<NoiseParams>) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_heralding(mut self, heralding: bool) -> Self {
        self.heralding = heralding;
        self
    }

    pub fn with_shots(mut self, shots: usize) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_engine(mut self, engine: SamplingEngine) -> Self {
        self.engine = engine;
        self
    }

    /// Same template with different measurement bases.
    pub fn with_bases(mut self, bases: Vec<Basis>) -> Result<Self> {
        self.bases = bases;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_chain_length(self.n)?;
        if self.bases.len() != self.n {
            return Err(Error::BasisCountMismatch {
                expected: self.n,
                found: self.bases.len(),
            });
        }
        if self.shots == 0 {
            return Err(Error::NoShots);
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }
}

/// One single-shot run of the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShotRecord {
    pub shot: u64,
    /// Heralding outcomes of (A, B); `[0, 0]` when heralding is off.
    pub herald: [u8; 2],
    /// `x_0 … x_{N-1}`.
    pub outcomes: Vec<u8>,
    pub accepted: bool,
}

impl ShotRecord {
    /// Big-endian index of the outcome string (`x_0` most significant).
    pub fn outcome_index(&self) -> usize {
        bits_to_index(&self.outcomes)
    }
}

/// Two-qubit state just before the final readout, for one history of earlier B outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalCycleState {
    /// `x_0 … x_{N-3}` as a big-endian index.
    pub prefix: usize,
    /// Probability of the prefix among accepted runs.
    pub probability: f64,
    pub state: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub n: usize,
    /// Probability of each outcome string among accepted runs, indexed big-endian.
    pub probabilities: Vec<f64>,
    /// Probability that the herald reads `00` (1 without heralding).
    pub acceptance: f64,
    /// Unconditional joint table indexed by `herald_index * 2^n + outcome_index`
    /// with `herald_index = 2 h_A + h_B`.
    pub joint: Vec<f64>,
    pub final_cycle_states: Vec<FinalCycleState>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Expectation of the parity `Π_{k ∈ mask} (1 - 2 x_k)`, with `mask` big-endian.
    pub fn parity_expectation(&self, mask: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(x, p)| {
                if (x & mask).count_ones().is_multiple_of(2) {
                    *p
                } else {
                    -*p
                }
            })
            .sum()
    }

    pub fn total_variation(&self, other: &[f64]) -> f64 {
        0.5 * self
            .probabilities
            .iter()
            .zip(other)
            .map(|(p, q)| libm::fabs(p - q))
            .sum::<f64>()
    }
}

/// The device that executes cycles: precomputed gates and noise models.
#[derive(Debug, Clone)]
pub struct Device {
    noise: Option<NoiseParams>,
    cnot: Operator,
    hadamard: Operator,
    swap: Operator,
    rotations: [Option<(Operator, f64, f64)>; 3],
    meas: [MeasurementModel; 2],
    p_err_ini: f64,
    p_thermal: f64,
}

fn rotation_operator(basis: Basis) -> Option<Operator> {
    basis_rotation(basis)
        .into_iter()
        .map(|g| g.matrix())
        .reduce(|acc, g| g.compose(&acc).expect("single-qubit"))
}

/// Duration of a single-qubit gate on a qubit with parameters `q`.
pub fn gate_time(kind: GateKind, q: &QubitParams) -> f64 {
    match kind {
        GateKind::H | GateKind::SX => q.t_pi2,
        GateKind::X | GateKind::PauliX | GateKind::PauliY => q.t_pi,
        GateKind::Z(_) | GateKind::PauliZ => 0.0,
        GateKind::CZ | GateKind::CNOT | GateKind::SWAP => 0.0,
    }
}

fn rotation_time(basis: Basis, q: &QubitParams) -> f64 {
    basis_rotation(basis)
        .into_iter()
        .map(|g| gate_time(g, q))
        .sum()
}

fn basis_slot(basis: Basis) -> usize {
    match basis {
        Basis::X => 0,
        Basis::Y => 1,
        Basis::Z => 2,
    }
}

impl Device {
    pub fn new(noise: Option<&NoiseParams>) -> Result<Self> {
        if let Some(p) = noise {
            p.validate()?;
        }
        let (meas_a, meas_b) = match noise {
            Some(p) => (
                MeasurementModel::new(p.a.p_err_m)?,
                MeasurementModel::new(p.b.p_err_m)?,
            ),
            None => (MeasurementModel::ideal(), MeasurementModel::ideal()),
        };
        let rotations = Basis::ALL.map(|basis| {
            rotation_operator(basis).map(|op| {
                let (ta, tb) = noise
                    .map(|p| (rotation_time(basis, &p.a), rotation_time(basis, &p.b)))
                    .unwrap_or((0.0, 0.0));
                (op, ta, tb)
            })
        });
        Ok(Self {
            noise: noise.cloned(),
            cnot: GateKind::CNOT.matrix(),
            hadamard: GateKind::H.matrix(),
            swap: GateKind::SWAP.matrix(),
            rotations,
            meas: [meas_a, meas_b],
            p_err_ini: noise.map_or(0.0, |p| p.p_err_ini),
            p_thermal: noise.map_or(0.0, |p| p.p_thermal),
        })
    }

    pub fn noiseless() -> Self {
        Self::new(None).expect("noiseless device")
    }

    pub fn noise(&self) -> Option<&NoiseParams> {
        self.noise.as_ref()
    }

    pub fn measurement(&self, qubit: usize) -> &MeasurementModel {
        &self.meas[qubit]
    }

    fn damp_rotations(&self) -> bool {
        self.noise.as_ref().is_none_or(|p| p.damp_basis_rotations)
    }

    /// Thermal product state of both qubits.
    pub fn initial_state(&self) -> DensityMatrix {
        thermal_initial_state(self.p_thermal, 2).expect("validated probability")
    }

    fn idle_channel(&self, qubit: &QubitParams, t: f64) -> KrausChannel {
        apd_channel(t, qubit.t1, qubit.t2_star).expect("validated parameters")
    }

    /// Damping on `a` and `b` of an `n`-qubit register for a duration `t`.
    fn damp(&self, m: &Matrix, n: usize, a: usize, b: usize, t: f64) -> Matrix {
        let Some(p) = &self.noise else {
            return m.clone();
        };
        if t <= 0.0 {
            return m.clone();
        }
        let m = apply_channel_raw(m, n, &self.idle_channel(&p.a, t), &[a]).expect("target");
        apply_channel_raw(&m, n, &self.idle_channel(&p.b, t), &[b]).expect("target")
    }

    fn damp_one(
        &self,
        m: &Matrix,
        n: usize,
        q: usize,
        params: fn(&NoiseParams) -> &QubitParams,
        t: f64,
    ) -> Matrix {
        let Some(p) = &self.noise else {
            return m.clone();
        };
        apply_channel_raw(m, n, &self.idle_channel(params(p), t), &[q]).expect("target")
    }

    fn conj(m: &mut Matrix, n: usize, u: &Operator, targets: &[usize]) {
        conjugate_raw(m, n, u, targets).expect("validated targets");
    }

    fn cnot_step(&self, m: &Matrix, n: usize, a: usize, b: usize) -> Matrix {
        let Some(p) = &self.noise else {
            let mut out = m.clone();
            Self::conj(&mut out, n, &self.cnot, &[a, b]);
            return out;
        };
        let t = p.t_cnot + p.t_buffer;
        let (before, after) = match p.cnot_damping {
            CnotDamping::Before => (t, 0.0),
            CnotDamping::After => (0.0, t),
            CnotDamping::Split => (t / 2.0, t / 2.0),
        };
        let mut out = self.damp(m, n, a, b, before);
        Self::conj(&mut out, n, &self.cnot, &[a, b]);
        self.damp(&out, n, a, b, after)
    }

    fn rotate(&self, m: &mut Matrix, n: usize, q: usize, basis: Basis) {
        if let Some((u, _, _)) = &self.rotations[basis_slot(basis)] {
            Self::conj(m, n, u, &[q]);
        }
    }

    fn rotation_times(&self, basis: Basis) -> (f64, f64) {
        self.rotations[basis_slot(basis)]
            .as_ref()
            .map_or((0.0, 0.0), |(_, ta, tb)| (*ta, *tb))
    }

    /// Gate layer followed by damping for the longest gate plus the buffer.
    fn layer_damp(
        &self,
        m: &Matrix,
        n: usize,
        a: usize,
        b: usize,
        busy_a: f64,
        busy_b: f64,
    ) -> Matrix {
        match &self.noise {
            Some(p) if busy_a > 0.0 || busy_b > 0.0 => {
                self.damp(m, n, a, b, busy_a.max(busy_b) + p.t_buffer)
            }
            _ => m.clone(),
        }
    }

    /// Preparation of A in `|+⟩`.
    fn prepare(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        Self::conj(&mut out, 2, &self.hadamard, &[A]);
        let t = self.noise.as_ref().map_or(0.0, |p| p.a.t_pi2);
        self.layer_damp(&out, 2, A, B, t, 0.0)
    }

    /// Everything in a cycle up to the readout. With `rotate == false` the
    /// basis rotations are left out, which requires undamped rotations.
    #[allow(clippy::too_many_arguments)]
    fn pre_measure(
        &self,
        m: &Matrix,
        n: usize,
        a: usize,
        b: usize,
        basis_b: Basis,
        final_a: Option<Basis>,
        rotate: bool,
    ) -> Matrix {
        let mut out = self.cnot_step(m, n, a, b);
        Self::conj(&mut out, n, &self.hadamard, &[a]);
        let damped = self.damp_rotations();
        let t_h = self.noise.as_ref().map_or(0.0, |p| p.a.t_pi2);
        if damped && rotate {
            self.rotate(&mut out, n, b, basis_b);
            let (_, t_rot_b) = self.rotation_times(basis_b);
            out = self.layer_damp(&out, n, a, b, t_h, t_rot_b);
            if let Some(basis_a) = final_a {
                self.rotate(&mut out, n, a, basis_a);
                let (t_rot_a, _) = self.rotation_times(basis_a);
                out = self.layer_damp(&out, n, a, b, t_rot_a, 0.0);
            }
        } else {
            out = self.layer_damp(&out, n, a, b, t_h, 0.0);
            if rotate {
                self.rotate(&mut out, n, b, basis_b);
                if let Some(basis_a) = final_a {
                    self.rotate(&mut out, n, a, basis_a);
                }
            }
        }
        out
    }

    /// A idles while B is read out and reset; B is then replaced by a fresh qubit.
    fn recycle(&self, m: &Matrix) -> Matrix {
        let m = match &self.noise {
            Some(p) => self.damp_one(m, 2, A, |p| &p.a, p.t_a_wait),
            None => m.clone(),
        };
        reset_raw(&m, 2, B, self.p_err_ini)
    }
}

/// Result of one cycle on a sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutcome {
    /// B's result, followed by A's in the final cycle.
    pub outcomes: Vec<u8>,
    /// Normalized state after the cycle.
    pub state: DensityMatrix,
}

/// One measurement branch of a cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleBranch {
    pub outcomes: Vec<u8>,
    pub probability: f64,
    /// Normalized state after the cycle.
    pub state: DensityMatrix,
}

fn check_two_qubits(state: &DensityMatrix) -> Result<()> {
    if state.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: state.dim(),
        });
    }
    Ok(())
}

fn sample_outcome(
    model: &MeasurementModel,
    m: &Matrix,
    n: usize,
    q: usize,
    u: f64,
) -> (u8, Matrix) {
    let p0 = model.prob_zero(m, n, q);
    let total = m.trace().re;
    let outcome = if u * total < p0 { 0 } else { 1 };
    let mut post = model.branch(m, n, q, outcome);
    let p = post.trace().re;
    if p > 0.0 {
        post.scale_real_in_place(1.0 / p);
    }
    (outcome as u8, post)
}

/// Runs one cycle on a two-qubit state, sampling readouts from `rng`.
/// `final_a` carries A's basis in the final cycle and is `None` otherwise.
pub fn run_cycle<R: Rng + ?Sized>(
    state: &DensityMatrix,
    device: &Device,
    basis_b: Basis,
    final_a: Option<Basis>,
    rng: &mut R,
) -> Result<CycleOutcome> {
    check_two_qubits(state)?;
    let (outcomes, m) = cycle_trajectory(device, state.matrix(), basis_b, final_a, rng);
    Ok(CycleOutcome {
        outcomes,
        state: DensityMatrix::from_unnormalized(m),
    })
}

fn cycle_trajectory<R: Rng + ?Sized>(
    device: &Device,
    m: &Matrix,
    basis_b: Basis,
    final_a: Option<Basis>,
    rng: &mut R,
) -> (Vec<u8>, Matrix) {
    let pm = device.pre_measure(m, 2, A, B, basis_b, final_a, true);
    let (xb, post) = sample_outcome(&device.meas[B], &pm, 2, B, rng.gen::<f64>());
    if final_a.is_some() {
        let (xa, post) = sample_outcome(&device.meas[A], &post, 2, A, rng.gen::<f64>());
        (vec![xb, xa], post)
    } else {
        (vec![xb], device.recycle(&post))
    }
}

/// Every measurement branch of one cycle with its probability.
pub fn cycle_branches(
    state: &DensityMatrix,
    device: &Device,
    basis_b: Basis,
    final_a: Option<Basis>,
) -> Result<Vec<CycleBranch>> {
    check_two_qubits(state)?;
    let pm = device.pre_measure(state.matrix(), 2, A, B, basis_b, final_a, true);
    let mut out = Vec::new();
    for xb in 0..2u8 {
        let mb = device.meas[B].branch(&pm, 2, B, xb as usize);
        if final_a.is_some() {
            for xa in 0..2u8 {
                let mab = device.meas[A].branch(&mb, 2, A, xa as usize);
                push_branch(&mut out, vec![xb, xa], mab);
            }
        } else {
            push_branch(&mut out, vec![xb], device.recycle(&mb));
        }
    }
    Ok(out)
}

fn push_branch(out: &mut Vec<CycleBranch>, outcomes: Vec<u8>, m: Matrix) {
    let probability = m.trace().re;
    if probability > 0.0 {
        out.push(CycleBranch {
            outcomes,
            probability,
            state: DensityMatrix::from_unnormalized(m),
        });
    }
}

/// Unnormalized post-herald states keyed by herald index `2 h_A + h_B`.
fn herald_branches(device: &Device, heralding: bool) -> Vec<(usize, Matrix)> {
    let init = device.initial_state().into_matrix();
    if !heralding {
        return vec![(0, init)];
    }
    let mut out = Vec::with_capacity(4);
    for ha in 0..2 {
        let ma = device.meas[A].branch(&init, 2, A, ha);
        for hb in 0..2 {
            let mab = device.meas[B].branch(&ma, 2, B, hb);
            if mab.trace().re > 0.0 {
                out.push((2 * ha + hb, mab));
            }
        }
    }
    out
}

/// Exact joint distribution of heralds and outcome strings by following
/// every measurement branch with unnormalized states.
pub fn run_protocol_enumerated(cfg: &ProtocolConfig) -> Result<OutcomeDistribution> {
    cfg.validate()?;
    let device = Device::new(cfg.noise.as_ref())?;
    enumerate_with(&device, cfg)
}

pub(crate) fn enumerate_with(device: &Device, cfg: &ProtocolConfig) -> Result<OutcomeDistribution> {
    let n = cfg.n;
    if n > MAX_ENUMERATED_QUBITS {
        return Err(Error::QubitCountOutOfRange {
            n,
            min: 2,
            max: MAX_ENUMERATED_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut joint = vec![0.0; 4 * dim];
    let mut final_cycle_states = Vec::new();
    for (herald, start) in herald_branches(device, cfg.heralding) {
        let mut branches = vec![(0usize, device.prepare(&start))];
        for k in 0..n - 1 {
            let is_final = k == n - 2;
            let mut next = Vec::with_capacity(branches.len() * 2);
            for (prefix, m) in branches {
                let final_a = is_final.then(|| cfg.bases[n - 1]);
                let pm = device.pre_measure(&m, 2, A, B, cfg.bases[k], final_a, true);
                if is_final {
                    if herald == 0 {
                        let weight = pm.trace().re;
                        if weight > 0.0 {
                            final_cycle_states.push(FinalCycleState {
                                prefix,
                                probability: weight,
                                state: DensityMatrix::from_unnormalized(pm.clone()),
                            });
                        }
                    }
                    for xb in 0..2 {
                        for xa in 0..2 {
                            let p = readout_probability(device, &pm, xb, xa);
                            joint[herald * dim + (prefix << 2 | xb << 1 | xa)] += p;
                        }
                    }
                } else {
                    for xb in 0..2 {
                        let mb = device.meas[B].branch(&pm, 2, B, xb);
                        if mb.trace().re > 0.0 {
                            next.push((prefix << 1 | xb, device.recycle(&mb)));
                        }
                    }
                }
            }
            branches = next;
        }
    }
    let acceptance: f64 = joint[..dim].iter().sum();
    if acceptance <= 0.0 {
        return Err(Error::NoAcceptedRecords);
    }
    let probabilities = joint[..dim].iter().map(|p| p / acceptance).collect();
    for s in &mut final_cycle_states {
        s.probability /= acceptance;
    }
    Ok(OutcomeDistribution {
        n,
        probabilities,
        acceptance,
        joint,
        final_cycle_states,
    })
}

/// `Tr[(F_A ⊗ F_B) ρ]` for outcomes `xa`, `xb` on the diagonal of `m`.
fn readout_probability(device: &Device, m: &Matrix, xb: usize, xa: usize) -> f64 {
    let fa = |bit: usize| povm_weight(&device.meas[A], xa, bit);
    let fb = |bit: usize| povm_weight(&device.meas[B], xb, bit);
    (0..4)
        .map(|i| m[(i, i)].re * fa((i >> 1) & 1) * fb(i & 1))
        .sum()
}

fn povm_weight(model: &MeasurementModel, outcome: usize, bit: usize) -> f64 {
    if outcome == bit {
        1.0 - model.p_err_m
    } else {
        model.p_err_m
    }
}

/// Stream of independent generators: block `i` of seed `s` always yields the same draws.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Mixes a seed with an index into an unrelated seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws shot records block by block; blocks are independent and can be
/// produced in any order or concurrently.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    cfg: ProtocolConfig,
    device: Device,
    cumulative: Option<Vec<f64>>,
}

impl ShotSampler {
    pub fn new(cfg: &ProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        let device = Device::new(cfg.noise.as_ref())?;
        let cumulative = match cfg.engine {
            SamplingEngine::Trajectory => None,
            SamplingEngine::Distribution => Some(cumulative(&enumerate_with(&device, cfg)?.joint)),
        };
        Ok(Self {
            cfg: cfg.clone(),
            device,
            cumulative,
        })
    }

    /// Sampler over a precomputed joint table.
    pub fn from_distribution(cfg: &ProtocolConfig, dist: &OutcomeDistribution) -> Result<Self> {
        cfg.validate()?;
        if dist.n != cfg.n {
            return Err(Error::DimensionMismatch {
                expected: cfg.n,
                found: dist.n,
            });
        }
        Ok(Self {
            cfg: cfg.clone().with_engine(SamplingEngine::Distribution),
            device: Device::new(cfg.noise.as_ref())?,
            cumulative: Some(cumulative(&dist.joint)),
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn block_count(&self) -> usize {
        self.cfg.shots.div_ceil(SHOT_BLOCK)
    }

    pub fn sample_block(&self, block: usize) -> Vec<ShotRecord> {
        let start = block * SHOT_BLOCK;
        let end = (start + SHOT_BLOCK).min(self.cfg.shots);
        let mut rng = block_rng(self.cfg.seed, block as u64);
        (start..end)
            .map(|shot| match &self.cumulative {
                Some(c) => self.draw_from_table(c, shot as u64, &mut rng),
                None => self.draw_trajectory(shot as u64, &mut rng),
            })
            .collect()
    }

    pub fn sample_all(&self) -> Vec<ShotRecord> {
        (0..self.block_count())
            .flat_map(|b| self.sample_block(b))
            .collect()
    }

    fn draw_from_table(&self, cumulative: &[f64], shot: u64, rng: &mut ChaCha8Rng) -> ShotRecord {
        let n = self.cfg.n;
        let index = sample_index(cumulative, rng.gen::<f64>());
        let herald_index = index >> n;
        let herald = [(herald_index >> 1) as u8, (herald_index & 1) as u8];
        ShotRecord {
            shot,
            herald,
            outcomes: index_to_bits(index & ((1 << n) - 1), n),
            accepted: herald == [0, 0],
        }
    }

    fn draw_trajectory(&self, shot: u64, rng: &mut ChaCha8Rng) -> ShotRecord {
        let cfg = &self.cfg;
        let dev = &self.device;
        let mut m = dev.initial_state().into_matrix();
        let mut herald = [0u8; 2];
        if cfg.heralding {
            let (ha, post) = sample_outcome(&dev.meas[A], &m, 2, A, rng.gen::<f64>());
            let (hb, post) = sample_outcome(&dev.meas[B], &post, 2, B, rng.gen::<f64>());
            herald = [ha, hb];
            m = post;
        }
        m = dev.prepare(&m);
        let mut outcomes = Vec::with_capacity(cfg.n);
        for k in 0..cfg.n - 1 {
            let final_a = (k == cfg.n - 2).then(|| cfg.bases[cfg.n - 1]);
            let (bits, next) = cycle_trajectory(dev, &m, cfg.bases[k], final_a, rng);
            outcomes.extend_from_slice(&bits);
            m = next;
        }
        ShotRecord {
            shot,
            herald,
            outcomes,
            accepted: herald == [0, 0],
        }
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Inverse-CDF lookup of `u ∈ [0, 1)` scaled to the table's total weight.
fn sample_index(cumulative: &[f64], u: f64) -> usize {
    let total = cumulative.last().copied().unwrap_or(0.0);
    let target = u * total;
    let i = cumulative.partition_point(|&c| c <= target);
    if i < cumulative.len() {
        return i;
    }
    // Rounding at the top end: take the last entry with positive weight.
    let mut j = cumulative.len() - 1;
    while j > 0 && cumulative[j] == cumulative[j - 1] {
        j -= 1;
    }
    j
}

/// Seeded Monte Carlo records of the protocol.
pub fn run_protocol_shots(cfg: &ProtocolConfig) -> Result<Vec<ShotRecord>> {
    Ok(ShotSampler::new(cfg)?.sample_all())
}

pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| acc << 1 | b as usize)
}

pub fn index_to_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|k| ((index >> (n - 1 - k)) & 1) as u8).collect()
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter()
        .map(|&b| if b == 0 { '0' } else { '1' })
        .collect()
}

/// Places per-cycle results into spatial order: cycle `k`'s B result is
/// `x_k` and the final cycle's second (A) result is `x_{N-1}`.
pub fn cycles_to_outcomes(cycles: &[Vec<u8>]) -> Vec<u8> {
    cycles.iter().flatten().copied().collect()
}

/// The `(x_0 … x_{N-1})` string of every record.
pub fn time_to_space_mapping(records: &[ShotRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| bits_to_string(&r.outcomes))
        .collect()
}

/// Counts of accepted outcome strings, indexed big-endian.
pub fn accepted_histogram(records: &[ShotRecord], n: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << n];
    for r in records.iter().filter(|r| r.accepted) {
        counts[r.outcome_index()] += 1;
    }
    counts
}

pub fn acceptance_fraction(records: &[ShotRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.accepted).count() as f64 / records.len() as f64
}

/// Spatial `N`-qubit state whose Pauli statistics equal those of the
/// accepted time-domain records.
///
/// Measurements are deferred: each B qubit is swapped into a fresh register
/// slot instead of being read out, and readout errors become a channel that
/// shrinks each qubit's Bloch vector by `1 - 2p`. Valid only when basis
/// rotations are undamped, so that every setting sees the same state.
pub fn effective_spatial_state(
    n: usize,
    noise: Option<&NoiseParams>,
    heralding: bool,
) -> Result<DensityMatrix> {
    check_chain_length(n)?;
    if n > MAX_ENUMERATED_QUBITS {
        return Err(Error::QubitCountOutOfRange {
            n,
            min: 2,
            max: MAX_ENUMERATED_QUBITS,
        });
    }
    if noise.is_some_and(|p| p.damp_basis_rotations) {
        return Err(Error::InvalidParameter {
            name: "damp_basis_rotations",
            value: 1.0,
            reason: "deferred measurement needs undamped basis rotations",
        });
    }
    let device = Device::new(noise)?;
    let start = device.initial_state().into_matrix();
    let start = if heralding {
        let m = device.meas[A].branch(&start, 2, A, 0);
        DensityMatrix::from_unnormalized(device.meas[B].branch(&m, 2, B, 0)).into_matrix()
    } else {
        start
    };
    let mut m = device.prepare(&start);
    // Register layout: [x_0 … x_{k-1}, A, B].
    for k in 0..n - 1 {
        let width = k + 2;
        let (a, b) = (k, k + 1);
        m = device.pre_measure(&m, width, a, b, Basis::Z, None, false);
        if k == n - 2 {
            conjugate_raw(&mut m, width, &device.swap, &[a, b])?;
            break;
        }
        if let Some(p) = device.noise() {
            m = device.damp_one(&m, width, a, |p| &p.a, p.t_a_wait);
        }
        conjugate_raw(&mut m, width, &device.swap, &[a, b])?;
        m = m.kron(&fresh_qubit(device.p_err_ini));
    }
    if let Some(p) = device.noise() {
        let shrink_b = readout_shrink_channel(p.b.p_err_m)?;
        let shrink_a = readout_shrink_channel(p.a.p_err_m)?;
        for q in 0..n - 1 {
            m = apply_channel_raw(&m, n, &shrink_b, &[q])?;
        }
        m = apply_channel_raw(&m, n, &shrink_a, &[n - 1])?;
    }
    Ok(DensityMatrix::from_unnormalized(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{ideal_lcs, spatial_lcs_circuit};
    use crate::linalg::{Complex64, StateVector, Tensor};
    use approx::assert_abs_diff_eq;

    fn plus_zero() -> DensityMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        StateVector::new(vec![Complex64::new(h, 0.0), z, Complex64::new(h, 0.0), z])
            .unwrap()
            .projector()
    }

    fn ket(re: [f64; 2]) -> DensityMatrix {
        StateVector::new(re.iter().map(|&r| Complex64::new(r, 0.0)).collect())
            .unwrap()
            .projector()
    }

    fn all_bases(n: usize) -> Vec<Vec<Basis>> {
        (0..3usize.pow(n as u32))
            .map(|mut i| {
                let mut word = vec![Basis::Z; n];
                for slot in word.iter_mut().rev() {
                    *slot = Basis::ALL[i % 3];
                    i /= 3;
                }
                word
            })
            .collect()
    }

    #[test]
    fn bell_pair_cycle_teleports_plus_and_minus() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let branches = cycle_branches(&plus_zero(), &Device::noiseless(), Basis::Z, None).unwrap();
        assert_eq!(branches.len(), 2);
        let zero_b = DensityMatrix::basis(1, 0).unwrap();
        for (branch, a) in branches.iter().zip([ket([h, h]), ket([h, -h])]) {
            assert_abs_diff_eq!(branch.probability, 0.5, epsilon = 1e-12);
            let expected = a.tensor(&zero_b);
            assert!(branch.state.matrix().max_abs_diff(expected.matrix()) < 1e-12);
        }
    }

    #[test]
    fn ground_state_cycle_is_deterministic() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        let branches = cycle_branches(&rho, &Device::noiseless(), Basis::Z, None).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].outcomes, vec![0]);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let expected = ket([h, h]).tensor(&DensityMatrix::basis(1, 0).unwrap());
        assert!(branches[0].state.matrix().max_abs_diff(expected.matrix()) < 1e-12);
    }

    #[test]
    fn reset_error_sets_b_population() {
        let device = Device::new(Some(&NoiseParams::reference_device())).unwrap();
        for branch in cycle_branches(&plus_zero(), &device, Basis::X, None).unwrap() {
            assert_abs_diff_eq!(branch.state.excited_population(1), 0.03, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_cycle_matches_a_branch() {
        let device = Device::noiseless();
        let mut rng = block_rng(7, 0);
        let out = run_cycle(&plus_zero(), &device, Basis::Z, Some(Basis::X), &mut rng).unwrap();
        assert_eq!(out.outcomes.len(), 2);
        assert_abs_diff_eq!(out.state.trace(), 1.0, epsilon = 1e-12);
        assert!(run_cycle(
            &DensityMatrix::basis(1, 0).unwrap(),
            &device,
            Basis::Z,
            None,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn noiseless_two_qubit_z_distribution_is_uniform() {
        let cfg = ProtocolConfig::new(2, vec![Basis::Z, Basis::Z]).unwrap();
        let dist = run_protocol_enumerated(&cfg).unwrap();
        for (p, amp) in dist
            .probabilities
            .iter()
            .zip(ideal_lcs(2).unwrap().amplitudes())
        {
            assert_abs_diff_eq!(*p, amp.norm_sqr(), epsilon = 1e-12);
            assert_abs_diff_eq!(*p, 0.25, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(dist.acceptance, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn noiseless_three_qubits_match_spatial_circuit_for_every_setting() {
        for bases in all_bases(3) {
            let cfg = ProtocolConfig::new(3, bases.clone()).unwrap();
            let time = run_protocol_enumerated(&cfg).unwrap();
            let space = spatial_lcs_circuit(3, &bases)
                .unwrap()
                .outcome_distribution()
                .unwrap();
            assert!(time.total_variation(&space) < 1e-10, "bases {:?}", bases);
        }
    }

    #[test]
    fn fully_damped_device_gives_uniform_x_outcomes() {
        let mut noise = NoiseParams::reference_device();
        for q in [&mut noise.a, &mut noise.b] {
            q.t1 = 1e-15;
            q.t2_star = 1e-15;
            q.p_err_m = 0.0;
        }
        noise.p_thermal = 0.0;
        noise.p_err_ini = 0.0;
        noise.damp_basis_rotations = false;
        let cfg = ProtocolConfig::new(3, vec![Basis::X; 3])
            .unwrap()
            .with_noise(Some(noise.clone()))
            .with_heralding(false);
        let dist = run_protocol_enumerated(&cfg).unwrap();
        for p in &dist.probabilities {
            assert_abs_diff_eq!(*p, 0.125, epsilon = 1e-9);
        }
        let cfg = cfg.with_bases(vec![Basis::Z; 3]).unwrap();
        let dist = run_protocol_enumerated(&cfg).unwrap();
        assert_abs_diff_eq!(dist.probabilities[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn noisy_enumeration_preserves_trace() {
        let noise = NoiseParams::reference_device();
        for heralding in [true, false] {
            for bases in [
                vec![Basis::X, Basis::Y, Basis::Z, Basis::X],
                vec![Basis::Z; 4],
            ] {
                let cfg = ProtocolConfig::new(4, bases)
                    .unwrap()
                    .with_noise(Some(noise.clone()))
                    .with_heralding(heralding);
                let dist = run_protocol_enumerated(&cfg).unwrap();
                assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-9);
                assert_abs_diff_eq!(dist.joint.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
                let weights: f64 = dist.final_cycle_states.iter().map(|s| s.probability).sum();
                assert_abs_diff_eq!(weights, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn herald_acceptance_matches_product_formula() {
        let cfg = ProtocolConfig::new(2, vec![Basis::Z; 2])
            .unwrap()
            .with_noise(Some(NoiseParams::reference_device()));
        let dist = run_protocol_enumerated(&cfg).unwrap();
        let expected = (0.97 * 0.95 + 0.03 * 0.05) * (0.97 * 0.947 + 0.03 * 0.053);
        assert_abs_diff_eq!(dist.acceptance, expected, epsilon = 1e-12);
    }

    #[test]
    fn enumeration_limit() {
        let cfg = ProtocolConfig::new(9, vec![Basis::Z; 9]).unwrap();
        assert!(matches!(
            run_protocol_enumerated(&cfg),
            Err(Error::QubitCountOutOfRange { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::new(1, vec![Basis::Z]).is_err());
        assert!(matches!(
            ProtocolConfig::new(3, vec![Basis::Z; 2]),
            Err(Error::BasisCountMismatch { .. })
        ));
        let cfg = ProtocolConfig::new(2, vec![Basis::Z; 2])
            .unwrap()
            .with_shots(0);
        assert!(matches!(run_protocol_shots(&cfg), Err(Error::NoShots)));
    }

    #[test]
    fn noiseless_xz_records_have_even_parity() {
        let cfg = ProtocolConfig::new(2, vec![Basis::X, Basis::Z])
            .unwrap()
            .with_heralding(false)
            .with_shots(500)
            .with_seed(3);
        let records = run_protocol_shots(&cfg).unwrap();
        assert_eq!(records.len(), 500);
        assert!(records
            .iter()
            .all(|r| r.accepted && r.outcomes[0] == r.outcomes[1]));
    }

    #[test]
    fn records_are_deterministic_per_seed() {
        for engine in [SamplingEngine::Trajectory, SamplingEngine::Distribution] {
            let cfg = ProtocolConfig::new(3, vec![Basis::X, Basis::Y, Basis::Z])
                .unwrap()
                .with_noise(Some(NoiseParams::reference_device()))
                .with_shots(1500)
                .with_seed(11)
                .with_engine(engine);
            let first = run_protocol_shots(&cfg).unwrap();
            assert_eq!(first, run_protocol_shots(&cfg).unwrap());
            assert_ne!(
                first,
                run_protocol_shots(&cfg.clone().with_seed(12)).unwrap()
            );
            let sampler = ShotSampler::new(&cfg).unwrap();
            assert_eq!(sampler.block_count(), 2);
            let mut merged = sampler.sample_block(1);
            merged.extend(sampler.sample_block(0));
            merged.sort_by_key(|r| r.shot);
            assert_eq!(merged, first);
        }
    }

    #[test]
    fn time_to_space_examples() {
        assert_eq!(cycles_to_outcomes(&[vec![0], vec![1, 1]]), vec![0, 1, 1]);
        let record = ShotRecord {
            shot: 0,
            herald: [0, 0],
            outcomes: cycles_to_outcomes(&[vec![0], vec![1, 1]]),
            accepted: true,
        };
        assert_eq!(
            time_to_space_mapping(core::slice::from_ref(&record)),
            vec![String::from("011")]
        );
        assert_eq!(record.outcome_index(), 0b011);
        assert_eq!(index_to_bits(0b011, 3), vec![0, 1, 1]);
        // One cycle for N = 2: B first, then A.
        assert_eq!(cycles_to_outcomes(&[vec![1, 0]]), vec![1, 0]);
    }

    #[test]
    fn inverse_cdf_lookup() {
        let c = cumulative(&[0.25, 0.0, 0.75, 0.0]);
        assert_eq!(sample_index(&c, 0.0), 0);
        assert_eq!(sample_index(&c, 0.2499), 0);
        assert_eq!(sample_index(&c, 0.25), 2);
        assert_eq!(sample_index(&c, 0.999_999), 2);
        assert_eq!(sample_index(&c, 1.0), 2);
    }

    #[test]
    fn noiseless_effective_state_is_the_cluster_state() {
        for n in 2..=5 {
            let rho = effective_spatial_state(n, None, true).unwrap();
            let target = ideal_lcs(n).unwrap().projector();
            assert!(
                rho.matrix().max_abs_diff(target.matrix()) < 1e-12,
                "n = {n}"
            );
        }
        let noise = NoiseParams::reference_device();
        assert!(effective_spatial_state(3, Some(&noise), true).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }
}
