//! Transfer matrices, coincidence rates and zero-coincidence analysis for a
//! cascade of `k` Hong-Ou-Mandel modules.
//!
//! Each module applies opposite frequency-dependent phases `±φ_ℓ(ω)`, with
//! `φ_ℓ(ω) = ωτ_ℓ + θ_ℓ/2`, to the two arms and then a balanced beam splitter.
//! Frequencies are measured in units of the biphoton width `ΔΩ₋` and delays in
//! units of `1/ΔΩ₋`.
//!
//! * [`cascade`]: module and cascade matrices, the mixed-frequency permanent.
//! * [`signsum`]: the same quantities as finite sums of plane waves.
//! * [`rate`]: coincidence rates, quadrature oracle, coarse graining.
//! * [`zeropoint`]: phase conditions, zero-locus scans, delay calibration.

pub mod cascade;
pub mod error;
pub mod figures;
pub mod rate;
pub mod signsum;
pub mod zeropoint;

/// Version of the engine crate, echoed in output records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use cascade::{cascade_matrix, det_mixed, module_matrix, perm, perm_closed_form, Complex2x2, PhaseConfig};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rate::{
    rate_analytic, rate_coarse_analytic, rate_coarse_numeric, rate_quadrature, BiphotonSpectrum, CoarseAverage,
    CoarseGrainWindow, CoincidenceResult, Method, RateKernel,
};
pub use signsum::{
    decompose_entries, diag_frequency_spectrum, modsquare_split, perm_termsum, split_fk, EntryDecomposition,
    FrequencyComponent, FrequencyKey, SignVector, Term, TermSum,
};
pub use zeropoint::{
    calibrate_from_scans, origin_perm, scan_zero_manifold, solve_theta3_k4, verify_k4_exclusive, CalibrationEstimate,
    Geometry, K4Certificate, Profile, ScanSpec, ZeroVerdict,
};
