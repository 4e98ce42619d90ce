use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("qubit index {qubit} out of range for {n} qubits")]
    InvalidQubit { qubit: usize, n: usize },

    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),

    #[error("qubit set is empty")]
    EmptyQubitSet,

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    NotNormalized { trace: f64 },

    #[error("state vector has squared norm {norm_sqr}, expected 1")]
    NotUnitNorm { norm_sqr: f64 },

    #[error("matrix has negative eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("Kraus operators are not complete (max deviation {deviation:e})")]
    IncompleteChannel { deviation: f64 },

    #[error("channel has no Kraus operators")]
    EmptyChannel,

    #[error("{name} = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("{name} = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("T2* = {t2_star} exceeds 2*T1 = {}", 2.0 * t1)]
    DephasingExceedsRelaxation { t1: f64, t2_star: f64 },

    #[error("qubit count {n} outside supported range {min}..={max}")]
    QubitCountOutOfRange { n: usize, min: usize, max: usize },

    #[error("expected {expected} measurement bases, found {found}")]
    BasisCountMismatch { expected: usize, found: usize },

    #[error("shot count must be at least 1")]
    NoShots,

    #[error("no accepted records to estimate from")]
    NoAcceptedRecords,

    #[error("Pauli string {pauli} is not measurable in setting {setting}")]
    IncompatibleSetting { pauli: String, setting: String },

    #[error("missing {} expectation value(s), first: {}", missing.len(), missing.first().map(String::as_str).unwrap_or("-"))]
    MissingExpectations { missing: Vec<String> },

    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },

    #[error("operation requires basis rotations to be modelled as instantaneous")]
    TimedRotationsUnsupported,

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}
