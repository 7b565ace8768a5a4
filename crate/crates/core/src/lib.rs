//! Exact-arithmetic kernel for noncommutative calculus on differential
//! graded categories presented by graded quivers.
//!
//! The crate is organized around a handful of symbolic carriers: graded
//! quiver presentations ([`dgcat`]), semi-free DG bimodules and their duals
//! ([`bimodule`]), the Y/Υ mixed complexes ([`mixed`]), Calabi-Yau
//! completions ([`cycompletion`]), necklace Lie brackets ([`necklace`]),
//! disk collections ([`polyhoch`]) and the representation / Van den Bergh
//! functors ([`repfunctor`]). All coefficients are arbitrary-precision
//! rationals; every identity is checked exactly, never approximately.

pub mod linalg;
pub mod dgcat;
pub mod bimodule;
pub mod mixed;
pub mod cycompletion;
pub mod necklace;
pub mod polyhoch;
pub mod repfunctor;
pub mod report;
pub mod cli;

use thiserror::Error;

/// Arbitrary-precision rational scalar. All algebra in this crate is over ℚ.
pub type Q = num::BigRational;

/// Shorthand for an integer rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// Shorthand for the rational `n/d`.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown arrow `{0}`")]
    UnknownArrow(String),
    #[error("endpoint mismatch: {0}")]
    EndpointMismatch(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("inhomogeneous input: {0}")]
    InhomogeneousInput(String),
    #[error("d^2 != 0: {0}")]
    D2Violation(String),
    #[error("bimodule has infinite basis")]
    InfiniteBasis,
    #[error("word is not an endomorphism: {0}")]
    NotEndomorphism(String),
    #[error("degree window too small: {0}")]
    WindowTooSmall(String),
    #[error("shift mismatch: expected m = {expected}, got m = {got}")]
    ShiftMismatch { expected: i64, got: i64 },
    #[error("extended letters present: {0}")]
    ExtendedLettersPresent(String),
    #[error("negative-degree arrow `{0}` not allowed here")]
    NegativeDegree(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("presentation is not finitely cellular: {0}")]
    NotFinitelyCellular(String),
    #[error("arity or length cap exceeded: {0}")]
    CapExceeded(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
