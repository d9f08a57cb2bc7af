use thiserror::Error;

/// Errors raised by the interferometer engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("module count must be at least 1")]
    NoModules,

    #[error("expected {expected} {what} entries, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("the first achromatic phase is pinned to zero, got {0}")]
    FirstPhaseNotZero(f64),

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("module index {index} out of range 1..={k}")]
    ModuleIndex { index: usize, k: usize },

    #[error("no closed form coded for k = {0} (supported: 1..=4)")]
    NoClosedForm(usize),

    #[error("k = {k} exceeds the term-expansion limit of {limit}")]
    TooManyModules { k: usize, limit: usize },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(&'static str),

    #[error("imaginary residue {0:.3e} in a rate that must be real")]
    ImaginaryResidue(f64),

    #[error("quadrature needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("invalid coarse-graining window: {0}")]
    InvalidWindow(&'static str),

    #[error(
        "pathological phase family: sin(theta2)*sin(theta4) = {0:.3e}; settings such as \
         (theta2, theta4) = (0, pi/2) vanish along rays like (1,0,-1,0)"
    )]
    PathologicalPhases(f64),

    #[error("no real theta3: |cot(theta2) cot(theta4)| = {0} > 1")]
    NoRealSolution(f64),

    #[error("invalid scan grid: {0}")]
    InvalidGrid(&'static str),

    #[error("expected {expected} extrema in the {profile} profile, found {found}")]
    TooFewExtrema {
        profile: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{profile} profile is asymmetric: extremum depths {first:.4} and {second:.4}")]
    AsymmetricProfile {
        profile: &'static str,
        first: f64,
        second: f64,
    },

    #[error("profile has {x} abscissae but {y} values")]
    ProfileShape { x: usize, y: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
