use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Model,
    Numeric,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pomdp-core: observation {observation} is impossible after action {action} from the given belief")]
    ImpossibleObservation { action: usize, observation: usize },
    #[error("pomdp-core: index mismatch: {0}")]
    IndexMismatch(String),
    #[error("pomdp-core: infinite horizon requires discount < 1 (got {0})")]
    NonContractive(f64),
    #[error("pomdp-core: controller node {node} has no edge for observation {observation} at a reachable state")]
    UndefinedEdge { node: String, observation: String },
    #[error("pomdp-core: invalid model: {0}")]
    InvalidModel(String),

    #[error("model-io: syntax error at line {line}, column {col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },
    #[error("model-io: line {line}: {message}")]
    Semantic { line: usize, message: String },
    #[error("model-io: line {line}: unknown action `{name}`")]
    UnknownAction { line: usize, name: String },
    #[error("model-io: line {line}: unknown observation `{name}`")]
    UnknownObservation { line: usize, name: String },
    #[error("model-io: line {line}: duplicate edge for node `{node}` on `{observation}`")]
    DuplicateEdge { line: usize, node: String, observation: String },
    #[error("model-io: unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("model-io: malformed result document: {0}")]
    MalformedResult(String),

    #[error("chain-builder: empty interval: {0}")]
    EmptyInterval(String),
    #[error("robust-eval: infeasible interval row {row}: lower mass {lower_sum}, upper mass {upper_sum}")]
    InfeasibleRow { row: usize, lower_sum: f64, upper_sum: f64 },
    #[error("param-lifting: instantiation yields an invalid distribution in row {row}")]
    InvalidDistribution { row: usize },
    #[error("param-lifting: unsupported polynomial structure: {0}")]
    UnsupportedPolynomial(String),
    #[error("param-lifting: region budget of {budget} exhausted (lower bound {lower}, incumbent {upper})")]
    Inconclusive { budget: usize, lower: f64, upper: f64 },

    #[error("ris-search: precondition violated: f({a0}) = {value} > 0")]
    PreconditionViolated { a0: f64, value: f64 },
    #[error("ris-search: invalid query: {0}")]
    InvalidQuery(String),

    #[error("bench-validate: nominal value is zero; relative degradation undefined")]
    DivisionByZero,
    #[error("bench-validate: instance too large for enumeration ({0})")]
    TooLarge(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidQuery(_) | Error::UnknownBenchmark(_) => ErrorClass::Usage,
            Error::NonContractive(_)
            | Error::EmptyInterval(_)
            | Error::InfeasibleRow { .. }
            | Error::InvalidDistribution { .. }
            | Error::Inconclusive { .. }
            | Error::PreconditionViolated { .. }
            | Error::DivisionByZero
            | Error::TooLarge(_) => ErrorClass::Numeric,
            _ => ErrorClass::Model,
        }
    }
}
