use thiserror::Error;

/// External bus number as it appears in the case file.
pub type BusId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed row {row} of `{matrix}`: {message}")]
    MalformedRow {
        matrix: String,
        row: usize,
        message: String,
    },

    #[error("missing `{0}` in case text")]
    MissingField(String),

    #[error("duplicate bus id {0}")]
    DuplicateBus(BusId),

    #[error("unknown bus id {0}")]
    UnknownBus(BusId),

    #[error("no slack bus")]
    NoSlack,

    #[error("more than one slack bus ({0} and {1}); only a single island is supported")]
    MultipleSlack(BusId, BusId),

    #[error("bus {0} is not connected to the slack bus")]
    Disconnected(BusId),

    #[error("PV bus {bus} has conflicting voltage setpoints {first} and {second}")]
    ConflictingSetpoint { bus: BusId, first: f64, second: f64 },

    #[error("bus {0} requires a positive voltage setpoint")]
    MissingSetpoint(BusId),

    #[error("branch {from}-{to} has zero series impedance")]
    ZeroImpedance { from: BusId, to: BusId },

    #[error("invalid case JSON: {0}")]
    Json(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix{}", context_suffix(.0))]
    Singular(String),

    #[error("defective Padé table for order [{l}/{m}]")]
    DefectivePade { l: usize, m: usize },

    #[error("evaluation point {alpha} is at a pole of the approximant")]
    PoleProximity { alpha: f64 },

    #[error("bus {0} is not a PQ bus")]
    NotPq(BusId),

    #[error("increment at bus {0} is not allowed by the embedding")]
    InvalidDirection(BusId),

    #[error("base case did not converge: {0}")]
    BaseCaseUnsolvable(String),

    #[error("eigenvalue iteration failed to converge")]
    EigenNoConvergence,

    #[error("reduced Jacobian has a complex eigenvalue {re} + {im}i")]
    ComplexEigenvalue { re: f64, im: f64 },

    #[error("bus {bus}: {source}")]
    BusEvaluation { bus: BusId, source: Box<Error> },

    #[error("bisection precondition violated: {0}")]
    Bracket(String),
}

fn context_suffix(ctx: &str) -> String {
    if ctx.is_empty() {
        String::new()
    } else {
        format!(" ({ctx})")
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
