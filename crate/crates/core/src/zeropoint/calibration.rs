//! Recovery of fixed path-length offsets from two one-dimensional scans of the
//! coarse-grained three-module rate.
//!
//! With the delays `τ_j = g·(Δℓ_j⁰ + x_j)` and `x₂` pushed far out, `R̄` as a
//! function of `x₃` shows two dips at `τ₃ = ±τ₁`; with `x₁` pushed far out it
//! shows two peaks at `τ₃ = ±τ₂`. Hence
//!
//! ```text
//! |Δℓ₁⁰| = (x_r - x_l) / 2    Δℓ₃⁰ = -(x_r + x_l) / 2
//! ```
//!
//! and likewise `|Δℓ₂⁰|` from the peaks. `R̄` is even in `τ₁` and `τ₂`, so their
//! signs are not observable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rate::rbar_k3;

/// Conversion between path-length differences and delays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Geometry {
    /// `τ = length_to_delay · Δℓ`; 1 when lengths are measured in units of `2c/ΔΩ₋`.
    pub length_to_delay: f64,
    pub d_omega_minus: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            length_to_delay: 1.0,
            d_omega_minus: 1.0,
        }
    }
}

impl Geometry {
    fn delays(&self, dl0: [f64; 3], x: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|j| self.length_to_delay * (dl0[j] + x[j]))
    }
}

/// Sampled rate as a function of the controllable offset `x₃`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Profile {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::ProfileShape { x: x.len(), y: y.len() });
        }
        if x.len() < 5 {
            return Err(Error::InvalidGrid("a profile needs at least 5 samples"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("profile sample"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("profile abscissae must increase"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * factor).collect(),
        }
    }

    fn max_spacing(&self) -> f64 {
        self.x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Sampling of the two calibration scans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPlan {
    pub x_min: f64,
    pub x_max: f64,
    pub step: f64,
    /// Offset applied to the delay that is pushed out of the way.
    pub far_offset: f64,
}

impl Default for ScanPlan {
    fn default() -> Self {
        Self {
            x_min: -20.0,
            x_max: 20.0,
            step: 0.02,
            far_offset: 80.0,
        }
    }
}

impl ScanPlan {
    pub fn abscissae(&self) -> Vec<f64> {
        let n = ((self.x_max - self.x_min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.x_min + self.step * i as f64).collect()
    }
}

fn synthetic(dl0: [f64; 3], geometry: &Geometry, plan: &ScanPlan, x1: f64, x2: f64) -> Profile {
    let x = plan.abscissae();
    let y = x
        .iter()
        .map(|&x3| rbar_k3(geometry.delays(dl0, [x1, x2, x3]), geometry.d_omega_minus))
        .collect();
    Profile { x, y }
}

/// Scan of `x₃` with `x₁ = 0` and `x₂` far out: two dips.
pub fn synthetic_dip_profile(dl0: [f64; 3], geometry: &Geometry, plan: &ScanPlan) -> Profile {
    synthetic(dl0, geometry, plan, 0.0, plan.far_offset)
}

/// Scan of `x₃` with `x₂ = 0` and `x₁` far out: two peaks.
pub fn synthetic_peak_profile(dl0: [f64; 3], geometry: &Geometry, plan: &ScanPlan) -> Profile {
    synthetic(dl0, geometry, plan, plan.far_offset, 0.0)
}

/// The two symmetric extrema of a scan, or a single merged one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremumPair {
    pub left: f64,
    pub right: f64,
    /// The two extrema have merged into one; `left == right` is its location.
    pub degenerate: bool,
    /// Height of the second extremum relative to the first (0 when degenerate).
    pub depth_ratio: f64,
    /// Largest excursion from the plateau divided by the plateau.
    pub visibility: f64,
}

impl ExtremumPair {
    pub fn centre(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    pub fn half_separation(&self) -> f64 {
        0.5 * (self.right - self.left)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationEstimate {
    pub dl1: f64,
    pub dl2: f64,
    pub dl3: f64,
    /// Second estimate of `Δℓ₃⁰` from the peak scan.
    pub dl3_from_peaks: f64,
    pub dips: ExtremumPair,
    pub peaks: ExtremumPair,
    /// Grid-resolution bound on each recovered value.
    pub uncertainty: f64,
}

impl CalibrationEstimate {
    /// Absolute errors against a known `(Δℓ₁⁰, Δℓ₂⁰, Δℓ₃⁰)`, comparing magnitudes for the first two.
    pub fn errors(&self, truth: [f64; 3]) -> [f64; 3] {
        [
            (self.dl1 - truth[0].abs()).abs(),
            (self.dl2 - truth[1].abs()).abs(),
            (self.dl3 - truth[2]).abs(),
        ]
    }

    pub fn round_trip_ok(&self, truth: [f64; 3]) -> bool {
        self.errors(truth).iter().all(|&e| e <= self.uncertainty)
    }
}

const DEGENERATE_RATIO: f64 = 0.5;
const SYMMETRIC_RATIO: f64 = 0.8;

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Vertex of the parabola through three points.
fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d2 - d1) / (x[2] - x[0]);
    if curvature == 0.0 {
        return x[1];
    }
    let v = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curvature);
    v.clamp(x[0], x[2])
}

/// Locates the two largest excursions of `sign·(y - plateau)`.
fn locate(profile: &Profile, sign: f64, name: &'static str) -> Result<(ExtremumPair, f64)> {
    let plateau = median(&profile.y);
    let h: Vec<f64> = profile.y.iter().map(|v| sign * (v - plateau)).collect();
    let tallest = h.iter().copied().fold(0.0, f64::max);
    if tallest <= 0.0 {
        return Err(Error::TooFewExtrema {
            profile: name,
            expected: 2,
            found: 0,
        });
    }
    let mut candidates: Vec<usize> = (1..h.len() - 1)
        .filter(|&i| h[i] >= h[i - 1] && h[i] > h[i + 1] && h[i] > 0.05 * tallest)
        .collect();
    candidates.sort_by(|&a, &b| h[b].total_cmp(&h[a]).then(a.cmp(&b)));
    let refine = |i: usize| {
        parabolic_vertex(
            [profile.x[i - 1], profile.x[i], profile.x[i + 1]],
            [h[i - 1], h[i], h[i + 1]],
        )
    };
    let visibility = tallest / plateau.abs();
    let pair = match candidates.as_slice() {
        [] => {
            return Err(Error::TooFewExtrema {
                profile: name,
                expected: 2,
                found: 0,
            })
        }
        [only] => (*only, None),
        [first, second, ..] => (*first, Some(*second)),
    };
    let (first, second) = pair;
    let ratio = second.map_or(0.0, |s| h[s] / h[first]);
    if ratio < DEGENERATE_RATIO {
        let at = refine(first);
        return Ok((
            ExtremumPair {
                left: at,
                right: at,
                degenerate: true,
                depth_ratio: ratio,
                visibility,
            },
            plateau,
        ));
    }
    if ratio < SYMMETRIC_RATIO {
        return Err(Error::AsymmetricProfile {
            profile: name,
            first: h[first],
            second: h[second.expect("ratio above zero")],
        });
    }
    let (a, b) = (refine(first), refine(second.expect("ratio above zero")));
    Ok((
        ExtremumPair {
            left: a.min(b),
            right: a.max(b),
            degenerate: false,
            depth_ratio: ratio,
            visibility,
        },
        plateau,
    ))
}

/// Delay `τ` from a merged extremum of visibility `v = amplitude · e^{-2τ²ΔΩ₋²}`.
fn invert_visibility(v: f64, amplitude: f64, d_omega_minus: f64) -> f64 {
    let ratio = (v / amplitude).clamp(f64::MIN_POSITIVE, 1.0);
    (-ratio.ln() / 2.0).sqrt() / d_omega_minus
}

/// Recovers `(|Δℓ₁⁰|, |Δℓ₂⁰|, Δℓ₃⁰)` from a dip scan and a peak scan.
///
/// When the two dips (or peaks) have merged, the offset is read from the
/// depth of the merged extremum instead and the pair is flagged degenerate.
pub fn calibrate_from_scans(dip: &Profile, peak: &Profile, geometry: &Geometry) -> Result<CalibrationEstimate> {
    let (dips, _) = locate(dip, -1.0, "dip")?;
    let (peaks, _) = locate(peak, 1.0, "peak")?;
    let g = geometry.length_to_delay;
    // Merged dip depth is (1/2)e^{-2τ₁²} of the plateau, merged peak height (1/4)e^{-2τ₂²}.
    let dl1 = if dips.degenerate {
        invert_visibility(dips.visibility, 0.5, geometry.d_omega_minus) / g
    } else {
        dips.half_separation()
    };
    let dl2 = if peaks.degenerate {
        invert_visibility(peaks.visibility, 0.25, geometry.d_omega_minus) / g
    } else {
        peaks.half_separation()
    };
    Ok(CalibrationEstimate {
        dl1,
        dl2,
        dl3: -dips.centre(),
        dl3_from_peaks: -peaks.centre(),
        dips,
        peaks,
        uncertainty: dip.max_spacing().max(peak.max_spacing()),
    })
}
