use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),
    #[error("N must be at least 3, got {0}")]
    CompositeTooSmall(u64),
    #[error("base a={a} must satisfy 1 < a < N={n}")]
    BaseOutOfRange { a: u64, n: u64 },
    #[error("gcd({a}, {n}) != 1: multiplicative order undefined")]
    NotCoprime { a: u64, n: u64 },
    #[error("N={0} is a power of two; no auxiliary size satisfies 2^(L'-1) < N < 2^L'")]
    PowerOfTwo(u64),
    #[error("work register size L={0} outside 1..=62")]
    RegisterSize(u32),
    #[error("{qubits} qubits exceeds the {limit}-qubit limit")]
    TooManyQubits { qubits: u32, limit: u32 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("delay must be finite and non-negative, got {0}")]
    InvalidDelay(f64),
    #[error("energy splitting must be finite, got {0}")]
    InvalidSplitting(f64),
    #[error("splitting width must be finite and non-negative, got {0}")]
    InvalidSigma(f64),
    #[error("residue s={s} outside [0, r={r})")]
    ResidueOutOfRange { s: u64, r: u64 },
    #[error("auxiliary outcome for s={s} has zero probability")]
    ZeroProbabilityOutcome { s: u64 },
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("outcome k={k} outside [0, {q})")]
    OutcomeOutOfRange { k: u64, q: u64 },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("invalid parameter range: {0}")]
    InvalidRange(String),
}
