//! Full state tomography of the time-domain cluster state.
//!
//! Every one of the `3^N` settings `{X, Y, Z}^N` is measured; a setting's
//! outcome histogram yields all `2^N` parity correlators at once through a
//! Walsh–Hadamard transform, and each correlator is the expectation of the
//! Pauli string that keeps the setting's letters on the parity mask and `I`
//! elsewhere. Strings covered by several settings are averaged.
//!
//! Reconstruction is linear inversion `ρ = (I + Σ p_P σ_P) / d` followed by
//! the nearest-density-matrix projection in Frobenius norm.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gates::{check_chain_length, ideal_lcs, Basis};
use crate::linalg::{eigh, fidelity_pure, DensityMatrix, Matrix, Operator, Tensor};
use crate::protocol::{
    accepted_histogram, block_rng, derive_seed, enumerate_with, run_protocol_shots, Device,
    OutcomeDistribution, ProtocolConfig, SamplingEngine, ShotRecord, ShotSampler,
};

/// Largest register handled by tomography (`4^N` expectations).
pub const MAX_TOMOGRAPHY_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn code(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(ch: char) -> Option<Pauli> {
        match ch.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn matrix(self) -> Operator {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let m = match self {
            Pauli::I => Matrix::identity(2),
            Pauli::X => Matrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]),
            Pauli::Y => {
                Matrix::from_rows([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
            }
            Pauli::Z => Matrix::from_real_rows([[1.0, 0.0], [0.0, -1.0]]),
        };
        Operator::new(m).expect("2x2")
    }
}

impl From<Basis> for Pauli {
    fn from(b: Basis) -> Pauli {
        match b {
            Basis::X => Pauli::X,
            Basis::Y => Pauli::Y,
            Basis::Z => Pauli::Z,
        }
    }
}

/// Tensor product of Paulis; qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self(letters)
    }

    /// Base-4 digits `I=0, X=1, Y=2, Z=3`, qubit 0 most significant.
    pub fn from_index(n: usize, index: usize) -> Self {
        Self(
            (0..n)
                .map(|k| Pauli::ALL[(index >> (2 * (n - 1 - k))) & 3])
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, p| acc << 2 | p.code())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Big-endian mask of the non-identity positions.
    pub fn support_mask(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, &p| acc << 1 | usize::from(p != Pauli::I))
    }

    /// Whether `setting` measures every non-identity letter of the string.
    pub fn is_measured_by(&self, setting: &[Basis]) -> bool {
        self.0.len() == setting.len()
            && self
                .0
                .iter()
                .zip(setting)
                .all(|(&p, &b)| p == Pauli::I || p == Pauli::from(b))
    }

    pub fn operator(&self) -> Operator {
        self.0
            .iter()
            .map(|p| p.matrix())
            .reduce(|acc, m| acc.tensor(&m))
            .unwrap_or_else(|| Operator::identity(0))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(Pauli::from_char)
            .collect::<Option<Vec<_>>>()
            .filter(|l| !l.is_empty())
            .ok_or_else(|| Error::Parse {
                what: "Pauli string",
                input: String::from(s),
            })?;
        Ok(Self(letters))
    }
}

/// All `3^N` settings in lexicographic `X < Y < Z` order, qubit 0 slowest.
pub fn tomography_settings(n: usize) -> Result<Vec<Vec<Basis>>> {
    check_tomography_size(n)?;
    Ok((0..3usize.pow(n as u32))
        .map(|i| setting_from_index(n, i))
        .collect())
}

fn setting_from_index(n: usize, mut i: usize) -> Vec<Basis> {
    let mut word = vec![Basis::Z; n];
    for slot in word.iter_mut().rev() {
        *slot = Basis::ALL[i % 3];
        i /= 3;
    }
    word
}

fn check_tomography_size(n: usize) -> Result<()> {
    check_chain_length(n)?;
    if n > MAX_TOMOGRAPHY_QUBITS {
        return Err(Error::QubitCountOutOfRange {
            n,
            min: 2,
            max: MAX_TOMOGRAPHY_QUBITS,
        });
    }
    Ok(())
}

/// Histogram of accepted outcome strings for one setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingCounts {
    pub setting: Vec<Basis>,
    /// Indexed big-endian by outcome string.
    pub counts: Vec<u64>,
}

impl SettingCounts {
    pub fn from_records(setting: Vec<Basis>, records: &[ShotRecord]) -> Self {
        let counts = accepted_histogram(records, setting.len());
        Self { setting, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `E[(-1)^{popcount(x & mask)}]` for every mask.
    pub fn correlators(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if total == 0 {
            return Err(Error::NoAcceptedRecords);
        }
        let mut w: Vec<f64> = self
            .counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect();
        walsh_hadamard(&mut w);
        Ok(w)
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
pub(crate) fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for chunk in v.chunks_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    /// In `[-1, 1]`.
    pub estimate: f64,
    /// Accepted shots over all contributing settings; 0 for exact values.
    pub shots: u64,
}

/// Pauli expectation values keyed by string.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationTable {
    n: usize,
    entries: Vec<Option<Expectation>>,
}

impl ExpectationTable {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: vec![None; 1 << (2 * n)],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, pauli: &PauliString, estimate: f64, shots: u64) -> Result<()> {
        if pauli.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: pauli.len(),
            });
        }
        self.entries[pauli.index()] = Some(Expectation {
            estimate: estimate.clamp(-1.0, 1.0),
            shots,
        });
        Ok(())
    }

    pub fn get(&self, pauli: &PauliString) -> Option<Expectation> {
        self.entries.get(pauli.index()).copied().flatten()
    }

    /// Non-identity strings without an entry.
    pub fn missing(&self) -> Vec<PauliString> {
        (1..self.entries.len())
            .filter(|&i| self.entries[i].is_none())
            .map(|i| PauliString::from_index(self.n, i))
            .collect()
    }

    /// Entries in index order, identity excluded.
    pub fn iter(&self) -> impl Iterator<Item = (PauliString, Expectation)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .skip(1)
            .filter_map(move |(i, e)| e.map(|e| (PauliString::from_index(self.n, i), e)))
    }

    /// Averages every setting's correlators over the settings that measure each string.
    pub fn from_setting_counts(n: usize, counts: &[SettingCounts]) -> Result<Self> {
        let mut acc = Accumulator::new(n);
        for c in counts {
            acc.add(&c.setting, &c.correlators()?, c.total())?;
        }
        Ok(acc.finish())
    }

    /// Exact values from per-setting outcome distributions.
    pub fn from_distributions(
        n: usize,
        settings: &[Vec<Basis>],
        distributions: &[Vec<f64>],
    ) -> Result<Self> {
        let mut acc = Accumulator::new(n);
        for (setting, dist) in settings.iter().zip(distributions) {
            let mut w = dist.clone();
            walsh_hadamard(&mut w);
            acc.add(setting, &w, 0)?;
        }
        Ok(acc.finish())
    }

    /// `Tr[σ_P ρ]` for every non-identity string.
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let n = rho.num_qubits();
        let mut table = Self::new(n);
        for i in 1..table.entries.len() {
            let value = pauli_expectation(rho.matrix(), n, i);
            table.entries[i] = Some(Expectation {
                estimate: value,
                shots: 0,
            });
        }
        table
    }
}

struct Accumulator {
    n: usize,
    sums: Vec<f64>,
    hits: Vec<u32>,
    shots: Vec<u64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        let len = 1 << (2 * n);
        Self {
            n,
            sums: vec![0.0; len],
            hits: vec![0; len],
            shots: vec![0; len],
        }
    }

    fn add(&mut self, setting: &[Basis], correlators: &[f64], shots: u64) -> Result<()> {
        let n = self.n;
        if setting.len() != n || correlators.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: setting.len(),
            });
        }
        let codes: Vec<usize> = setting.iter().map(|&b| Pauli::from(b).code()).collect();
        for (mask, &c) in correlators.iter().enumerate().skip(1) {
            let index = (0..n)
                .filter(|k| mask >> (n - 1 - k) & 1 == 1)
                .fold(0, |acc, k| acc | codes[k] << (2 * (n - 1 - k)));
            self.sums[index] += c;
            self.hits[index] += 1;
            self.shots[index] += shots;
        }
        Ok(())
    }

    fn finish(self) -> ExpectationTable {
        let entries = self
            .sums
            .iter()
            .zip(&self.hits)
            .zip(&self.shots)
            .enumerate()
            .map(|(i, ((s, &h), &shots))| {
                (i > 0 && h > 0).then(|| Expectation {
                    estimate: (s / h as f64).clamp(-1.0, 1.0),
                    shots,
                })
            })
            .collect();
        ExpectationTable { n: self.n, entries }
    }
}

/// Nonzero pattern of `σ_P`: row `i` has its single entry in column
/// `i ^ flip`, with phase `i^(2·|i ∧ y| - |y|) (-1)^{|i ∧ z|}`.
struct PauliPattern {
    flip: usize,
    y_mask: usize,
    z_mask: usize,
    y_count: u32,
}

impl PauliPattern {
    fn new(n: usize, index: usize) -> Self {
        let (mut flip, mut y_mask, mut z_mask) = (0, 0, 0);
        for k in 0..n {
            let bit = 1 << (n - 1 - k);
            match (index >> (2 * (n - 1 - k))) & 3 {
                1 => flip |= bit,
                2 => {
                    flip |= bit;
                    y_mask |= bit;
                }
                3 => z_mask |= bit,
                _ => {}
            }
        }
        Self {
            flip,
            y_mask,
            z_mask,
            y_count: y_mask.count_ones(),
        }
    }

    fn entry(&self, row: usize) -> Complex64 {
        let ones = (row & self.y_mask).count_ones();
        let power = (2 * ones + 4 - self.y_count % 4) % 4;
        let phase = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ][power as usize];
        if (row & self.z_mask).count_ones() % 2 == 1 {
            -phase
        } else {
            phase
        }
    }
}

fn pauli_expectation(m: &Matrix, n: usize, index: usize) -> f64 {
    // Tr[σ ρ] = Σ_i σ[i, i^f] ρ[i^f, i]
    let pattern = PauliPattern::new(n, index);
    (0..m.dim())
        .map(|i| (pattern.entry(i) * m[(i ^ pattern.flip, i)]).re)
        .sum()
}

/// Mean over accepted records of `Π_{k: P_k ≠ I} (1 - 2 x_k)`.
pub fn expectation_from_records(
    records: &[ShotRecord],
    setting: &[Basis],
    pauli: &PauliString,
) -> Result<f64> {
    if !pauli.is_measured_by(setting) {
        return Err(Error::IncompatibleSetting {
            pauli: pauli.to_string(),
            setting: crate::gates::basis_word(setting),
        });
    }
    let mask = pauli.support_mask();
    let (mut sum, mut count) = (0i64, 0u64);
    for r in records.iter().filter(|r| r.accepted) {
        let parity = (r.outcome_index() & mask).count_ones() % 2;
        sum += if parity == 0 { 1 } else { -1 };
        count += 1;
    }
    if count == 0 {
        return Err(Error::NoAcceptedRecords);
    }
    Ok(sum as f64 / count as f64)
}

/// `ρ = (I + Σ_P p_P σ_P) / d`; requires every non-identity string.
pub fn linear_inversion(table: &ExpectationTable) -> Result<Matrix> {
    let missing = table.missing();
    if !missing.is_empty() {
        return Err(Error::MissingExpectations {
            missing: missing.iter().map(|p| p.to_string()).collect(),
        });
    }
    let n = table.n;
    let d = 1usize << n;
    let mut m = Matrix::identity(d);
    for (i, entry) in table.entries.iter().enumerate().skip(1) {
        let value = entry.expect("checked").estimate;
        if value == 0.0 {
            continue;
        }
        let pattern = PauliPattern::new(n, i);
        for row in 0..d {
            m[(row, row ^ pattern.flip)] += pattern.entry(row) * value;
        }
    }
    m.scale_real_in_place(1.0 / d as f64);
    Ok(m)
}

/// Closest density matrix in Frobenius norm: eigenvalues are shifted
/// uniformly and the most negative ones clipped to zero until the remainder
/// is non-negative with unit sum.
pub fn project_to_density_matrix(m: &Matrix) -> Result<DensityMatrix> {
    let herm = m.hermitian_part();
    let decomposition = eigh(&herm)?;
    let mut values = decomposition.values.clone();
    let trace: f64 = values.iter().sum();
    if trace > 0.0 {
        for v in &mut values {
            *v /= trace;
        }
    }
    water_fill(&mut values);
    let rho = decomposition.reconstruct_with(&values).hermitian_part();
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

/// Projects ascending `values` onto the probability simplex.
fn water_fill(values: &mut [f64]) {
    let d = values.len();
    let total: f64 = values.iter().sum();
    let mut deficit = 1.0 - total;
    let mut first = 0;
    // Clip from the bottom while spreading the clipped mass would leave the entry negative.
    while first < d {
        let share = deficit / (d - first) as f64;
        if values[first] + share >= 0.0 {
            break;
        }
        deficit += values[first];
        values[first] = 0.0;
        first += 1;
    }
    if first == d {
        values.iter_mut().for_each(|v| *v = 1.0 / d as f64);
        return;
    }
    let share = deficit / (d - first) as f64;
    for v in &mut values[first..] {
        *v += share;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub rho_hat: DensityMatrix,
    pub fidelity: f64,
    pub witness: f64,
    /// Linear-inversion estimate before projection.
    pub raw_linear_inversion: Matrix,
}

pub fn reconstruct(table: &ExpectationTable, n: usize) -> Result<ReconstructionResult> {
    if table.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: table.n,
        });
    }
    check_tomography_size(n)?;
    let raw = linear_inversion(table)?;
    let rho_hat = project_to_density_matrix(&raw)?;
    let fidelity = fidelity_pure(&rho_hat, &ideal_lcs(n)?)?;
    Ok(ReconstructionResult {
        rho_hat,
        fidelity,
        witness: 0.5 - fidelity,
        raw_linear_inversion: raw,
    })
}

/// `Tr[(I/2 - |LCS⟩⟨LCS|) ρ]`; negative values certify genuine multipartite entanglement.
pub fn witness_value(rho: &DensityMatrix, n: usize) -> Result<f64> {
    if rho.num_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: rho.dim(),
        });
    }
    Ok(0.5 - fidelity_pure(rho, &ideal_lcs(n)?)?)
}

/// Exact per-setting distributions of one protocol configuration, reusable
/// for any number of sampled tomography repetitions.
#[derive(Debug, Clone)]
pub struct TomographyPlan {
    template: ProtocolConfig,
    settings: Vec<Vec<Basis>>,
    distributions: Vec<OutcomeDistribution>,
}

impl TomographyPlan {
    pub fn new(template: &ProtocolConfig) -> Result<Self> {
        let settings = tomography_settings(template.n)?;
        let device = Device::new(template.noise.as_ref())?;
        let distributions = settings
            .iter()
            .map(|s| enumerate_with(&device, &template.clone().with_bases(s.clone())?))
            .collect::<Result<Vec<_>>>()?;
        Self::from_distributions(template, distributions)
    }

    /// Assembles a plan from distributions computed elsewhere, in setting order.
    pub fn from_distributions(
        template: &ProtocolConfig,
        distributions: Vec<OutcomeDistribution>,
    ) -> Result<Self> {
        let settings = tomography_settings(template.n)?;
        if distributions.len() != settings.len() {
            return Err(Error::DimensionMismatch {
                expected: settings.len(),
                found: distributions.len(),
            });
        }
        Ok(Self {
            template: template.clone(),
            settings,
            distributions,
        })
    }

    /// Protocol configuration of setting `i`.
    pub fn setting_config(template: &ProtocolConfig, i: usize) -> Result<ProtocolConfig> {
        template
            .clone()
            .with_bases(setting_from_index(template.n, i))
    }

    pub fn n(&self) -> usize {
        self.template.n
    }

    pub fn settings(&self) -> &[Vec<Basis>] {
        &self.settings
    }

    pub fn distributions(&self) -> &[OutcomeDistribution] {
        &self.distributions
    }

    /// Draws `shots` records of setting `i`, keeping only the accepted ones.
    pub fn sample_setting(&self, i: usize, shots: usize, seed: u64) -> Result<SettingCounts> {
        let cfg = self.settings_cfg(i, shots, seed)?;
        let records = ShotSampler::from_distribution(&cfg, &self.distributions[i])?.sample_all();
        Ok(SettingCounts::from_records(
            self.settings[i].clone(),
            &records,
        ))
    }

    fn settings_cfg(&self, i: usize, shots: usize, seed: u64) -> Result<ProtocolConfig> {
        Ok(self
            .template
            .clone()
            .with_bases(self.settings[i].clone())?
            .with_shots(shots)
            .with_seed(derive_seed(seed, i as u64)))
    }

    pub fn sample(&self, shots: usize, seed: u64) -> Result<Vec<SettingCounts>> {
        (0..self.settings.len())
            .map(|i| self.sample_setting(i, shots, seed))
            .collect()
    }

    /// Infinite-shot expectation table.
    pub fn exact_table(&self) -> Result<ExpectationTable> {
        let probs: Vec<Vec<f64>> = self
            .distributions
            .iter()
            .map(|d| d.probabilities.clone())
            .collect();
        ExpectationTable::from_distributions(self.n(), &self.settings, &probs)
    }
}

/// Counts, expectations and reconstruction of one tomography run.
#[derive(Debug, Clone)]
pub struct TomographyRun {
    pub counts: Vec<SettingCounts>,
    pub table: ExpectationTable,
    pub result: ReconstructionResult,
}

/// Measures every setting with `shots_per_setting` shots of the template
/// (using the template's engine and seed) and reconstructs the state.
pub fn run_tomography(
    template: &ProtocolConfig,
    shots_per_setting: usize,
) -> Result<TomographyRun> {
    let n = template.n;
    let counts = match template.engine {
        SamplingEngine::Distribution => {
            TomographyPlan::new(template)?.sample(shots_per_setting, template.seed)?
        }
        SamplingEngine::Trajectory => tomography_settings(n)?
            .into_iter()
            .enumerate()
            .map(|(i, setting)| {
                let cfg = template
                    .clone()
                    .with_bases(setting.clone())?
                    .with_shots(shots_per_setting)
                    .with_seed(derive_seed(template.seed, i as u64));
                Ok(SettingCounts::from_records(
                    setting,
                    &run_protocol_shots(&cfg)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let table = ExpectationTable::from_setting_counts(n, &counts)?;
    let result = reconstruct(&table, n)?;
    Ok(TomographyRun {
        counts,
        table,
        result,
    })
}

pub fn run_full_tomography(
    template: &ProtocolConfig,
    shots_per_setting: usize,
) -> Result<ReconstructionResult> {
    Ok(run_tomography(template, shots_per_setting)?.result)
}

/// Tomography with exact expectations (the infinite-shot limit).
pub fn run_exact_tomography(template: &ProtocolConfig) -> Result<ReconstructionResult> {
    let plan = TomographyPlan::new(template)?;
    reconstruct(&plan.exact_table()?, template.n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapInterval {
    pub fidelity_low: f64,
    pub fidelity_high: f64,
    pub witness_low: f64,
    pub witness_high: f64,
}

/// Fidelity of one multinomial resample of every setting's histogram;
/// resample `index` of `seed` is always the same.
pub fn bootstrap_fidelity(
    counts: &[SettingCounts],
    n: usize,
    seed: u64,
    index: u64,
) -> Result<f64> {
    let mut rng = block_rng(seed, index);
    let resampled = counts
        .iter()
        .map(|c| {
            let mut acc = 0;
            let cumulative: Vec<u64> = c
                .counts
                .iter()
                .map(|&x| {
                    acc += x;
                    acc
                })
                .collect();
            let total = c.total();
            let mut fresh = vec![0u64; c.counts.len()];
            for _ in 0..total {
                let u = rng.gen_range(0..total);
                fresh[cumulative.partition_point(|&x| x <= u)] += 1;
            }
            SettingCounts {
                setting: c.setting.clone(),
                counts: fresh,
            }
        })
        .collect::<Vec<_>>();
    let table = ExpectationTable::from_setting_counts(n, &resampled)?;
    Ok(reconstruct(&table, n)?.fidelity)
}

/// Central percentile interval of bootstrap fidelities.
pub fn percentile_interval(fidelities: &[f64], confidence: f64) -> Result<BootstrapInterval> {
    if fidelities.is_empty() {
        return Err(Error::NoShots);
    }
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::InvalidProbability {
            name: "confidence",
            value: confidence,
        });
    }
    let mut sorted = fidelities.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let low = quantile(&sorted, tail);
    let high = quantile(&sorted, 1.0 - tail);
    Ok(BootstrapInterval {
        fidelity_low: low,
        fidelity_high: high,
        witness_low: 0.5 - high,
        witness_high: 0.5 - low,
    })
}

/// Percentile interval of the fidelity from `resamples` multinomial resamples.
pub fn bootstrap_interval(
    counts: &[SettingCounts],
    n: usize,
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    let fidelities = (0..resamples as u64)
        .map(|r| bootstrap_fidelity(counts, n, seed, r))
        .collect::<Result<Vec<_>>>()?;
    percentile_interval(&fidelities, confidence)
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let pos = q.clamp(0.0, 1.0) * (len - 1) as f64;
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(len - 1);
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile(&sorted, 0.5)
}
