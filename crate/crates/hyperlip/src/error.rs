//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not on the hyperboloid sheet: relative defect {defect:.3e} exceeds {limit:.1e}")]
    OffSheet { defect: f64, limit: f64 },

    #[error("point has nonpositive time coordinate {x0}")]
    WrongSheet { x0: f64 },

    #[error("vector is not tangent at its base point: relative defect {defect:.3e}")]
    NotTangent { defect: f64 },

    #[error("tangent vector based at a different point than expected")]
    BaseMismatch,

    #[error("angle is undefined: a leg of the vertex has zero length")]
    DegenerateAngle,

    #[error("{name} = {value} is outside its domain: {reason}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("map has no points")]
    EmptyMap,

    #[error("sources {i} and {j} coincide (distance {dist:.3e})")]
    DuplicateSource { i: usize, j: usize, dist: f64 },

    #[error(
        "pair ({i}, {j}) violates the declared constant: ratio {ratio:.12} > {declared:.12} + tolerance"
    )]
    LipschitzViolation {
        i: usize,
        j: usize,
        ratio: f64,
        declared: f64,
    },

    #[error("challenge point coincides with source {index} (distance {dist:.3e}); the ratio is undefined there")]
    ChallengeAtSource { index: usize, dist: f64 },

    #[error("need at least two points with distinct sources, got {got}")]
    TooFewPoints { got: usize },

    #[error("map tables have different domains: {reason}")]
    DomainMismatch { reason: String },

    #[error("no maps to average")]
    NoMaps,

    #[error("ball sample point {index} lies at distance {dist:.6} from the center, outside radius {radius:.6}")]
    OutsideBall {
        index: usize,
        dist: f64,
        radius: f64,
    },

    #[error("centers are {dist:.6} apart but the configured separation requires at least {required:.6}")]
    CentersTooClose { dist: f64, required: f64 },

    #[error("patch certificate failed: empirical constant {constant:.12} exceeds bound {bound:.12}")]
    PatchCertificate { constant: f64, bound: f64 },

    #[error("extension certificate failed in bin {bin}: constant {constant:.12} exceeds bound {bound:.12}")]
    BinCertificate {
        bin: usize,
        constant: f64,
        bound: f64,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
