use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {t} lies outside the working interval [{start}, {end}]")]
    Domain { t: f64, start: f64, end: f64 },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integrator failure near t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("quadrature on [{a}, {b}] did not converge (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("homogeneous solutions are linearly dependent (Wronskian {omega:e})")]
    DependentSolutions { omega: f64 },

    #[error("u vanishes at the anchor time t_a = {t_a}")]
    Anchor { t_a: f64 },

    #[error("caustic: v_s vanishes at t_b = {t_b} (conjugate point near t = {conjugate_time})")]
    Caustic { t_b: f64, conjugate_time: f64 },

    #[error("degenerate basis: rho vanishes near t = {t}")]
    DegenerateBasis { t: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Hermite evaluation overflows f64 for n = {n}, y = {y}")]
    Overflow { n: usize, y: f64 },

    #[error("grid does not resolve the kernel chirp: {0}")]
    UnderResolved(String),

    #[error("singular linear system at step {step}")]
    LinearSolve { step: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
