//! Coincidence rates under a Gaussian biphoton spectrum.
//!
//! The joint spectral density factorizes as `P₊(ω+ω') P₋(ω-ω')`, with `ω+ω'`
//! normally distributed around `2ω₀` with standard deviation `2ΔΩ₊` and `ω-ω'`
//! around zero with standard deviation `ΔΩ₋`. The rate is the average of
//! `|Perm_k(ω, ω')|²` over that density.

mod closed_form;
mod kernel;

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::hermite::GaussHermite;
use serde::Serialize;

use crate::cascade::{perm, PhaseConfig};
use crate::error::{Error, Result};
use crate::signsum::{modsquare_split, perm_termsum, TermSum};

pub use closed_form::{delta_r_k3, rate_k1, rbar_k2, rbar_k3};
pub use kernel::{RateKernel, RateSplit};

/// Largest imaginary part tolerated in an analytic rate before it is rejected.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Smallest quadrature order accepted by [`rate_quadrature`].
pub const MIN_NODES: usize = 16;

/// Default tolerance on the change of the quadrature result when the order doubles.
pub const DEFAULT_QUADRATURE_TOLERANCE: f64 = 1e-9;

/// Delay, in units of `1/ΔΩ₋`, beyond which every Gaussian envelope of `R̄` is below `1e-55`.
pub const PLATEAU_DELAY: f64 = 8.0;

/// Gaussian biphoton spectrum in units of `ΔΩ₋`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiphotonSpectrum {
    omega0: f64,
    d_omega_plus: f64,
    d_omega_minus: f64,
}

impl Default for BiphotonSpectrum {
    fn default() -> Self {
        Self {
            omega0: 20.0,
            d_omega_plus: 0.25,
            d_omega_minus: 1.0,
        }
    }
}

impl BiphotonSpectrum {
    /// Widths must be positive; the carrier `ω₀` may be zero (baseband).
    pub fn new(omega0: f64, d_omega_plus: f64, d_omega_minus: f64) -> Result<Self> {
        if !(omega0.is_finite() && d_omega_plus.is_finite() && d_omega_minus.is_finite()) {
            return Err(Error::NonFinite("spectrum parameter"));
        }
        if omega0 < 0.0 {
            return Err(Error::InvalidSpectrum("omega0 must be non-negative"));
        }
        if d_omega_plus <= 0.0 || d_omega_minus <= 0.0 {
            return Err(Error::InvalidSpectrum("spectral widths must be positive"));
        }
        Ok(Self {
            omega0,
            d_omega_plus,
            d_omega_minus,
        })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn d_omega_plus(&self) -> f64 {
        self.d_omega_plus
    }

    pub fn d_omega_minus(&self) -> f64 {
        self.d_omega_minus
    }

    /// Pump frequency `2ω₀`.
    pub fn pump_frequency(&self) -> f64 {
        2.0 * self.omega0
    }

    /// Local spread `Δω = √(ΔΩ₋² + 4ΔΩ₊²) / 2`.
    pub fn local_spread(&self) -> f64 {
        (self.d_omega_minus.powi(2) + 4.0 * self.d_omega_plus.powi(2)).sqrt() / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Quadrature,
}

/// Coincidence probability split into the coarse-grained and fast parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoincidenceResult {
    pub total: f64,
    pub rbar: f64,
    pub delta: f64,
    pub method: Method,
    /// Plane-wave terms summed (analytic) or quadrature order per axis (quadrature).
    pub count: usize,
    /// Discarded imaginary residue (analytic) or change under doubling the order (quadrature).
    pub error_estimate: f64,
    pub converged: bool,
}

/// Exact rate by Gaussian integration of every plane wave of `|Perm_k|²`.
pub fn rate_analytic(cfg: &PhaseConfig, spec: &BiphotonSpectrum) -> Result<CoincidenceResult> {
    let kern = RateKernel::shared(cfg.k())?;
    rate_with_kernel(&kern, cfg, spec)
}

/// [`rate_analytic`] with an explicit kernel.
pub fn rate_with_kernel(
    kern: &RateKernel,
    cfg: &PhaseConfig,
    spec: &BiphotonSpectrum,
) -> Result<CoincidenceResult> {
    if kern.k() != cfg.k() {
        return Err(Error::LengthMismatch {
            what: "kernel module",
            expected: kern.k(),
            got: cfg.k(),
        });
    }
    let s = kern.split(cfg.tau(), cfg.theta(), spec);
    let total = s.rbar + s.delta;
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::NonFinite("rate"));
    }
    let residue = s.rbar.im.abs().max(s.delta.im.abs());
    if residue > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidue(residue));
    }
    Ok(CoincidenceResult {
        total: s.rbar.re + s.delta.re,
        rbar: s.rbar.re,
        delta: s.delta.re,
        method: Method::Analytic,
        count: kern.term_count(),
        error_estimate: residue,
        converged: true,
    })
}

fn hermite_rule(n: usize) -> Arc<Vec<(f64, f64)>> {
    type Rule = Arc<Vec<(f64, f64)>>;
    static RULES: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let rules = RULES.get_or_init(Default::default);
    let mut guard = rules.lock().expect("quadrature cache poisoned");
    Arc::clone(guard.entry(n).or_insert_with(|| {
        let deg = NonZeroUsize::new(n).expect("order checked by caller");
        Arc::new(GaussHermite::new(deg).as_node_weight_pairs().to_vec())
    }))
}

fn slow_termsum(k: usize) -> Result<Arc<TermSum>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<TermSum>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("term cache poisoned").get(&k) {
        return Ok(Arc::clone(hit));
    }
    let (pbar, _) = modsquare_split(&perm_termsum(k)?)?;
    let pbar = Arc::new(pbar);
    cache.lock().expect("term cache poisoned").insert(k, Arc::clone(&pbar));
    Ok(pbar)
}

fn quadrature_pass(
    cfg: &PhaseConfig,
    spec: &BiphotonSpectrum,
    slow: Option<&TermSum>,
    n: usize,
) -> (f64, f64) {
    let rule = hermite_rule(n);
    let sx = std::f64::consts::SQRT_2 * 2.0 * spec.d_omega_plus();
    let sy = std::f64::consts::SQRT_2 * spec.d_omega_minus();
    let norm = std::f64::consts::PI;
    let (mut total, mut rbar) = (0.0, 0.0);
    for &(x, wx) in rule.iter() {
        let xi = spec.pump_frequency() + sx * x;
        for &(y, wy) in rule.iter() {
            let nu = sy * y;
            let (w, wp) = (0.5 * (xi + nu), 0.5 * (xi - nu));
            let weight = wx * wy / norm;
            total += weight * perm(cfg, w, wp).norm_sqr();
            if let Some(slow) = slow {
                rbar += weight * slow.evaluate(cfg, w, wp).re;
            }
        }
    }
    (total, rbar)
}

/// Tensor-product Gauss-Hermite evaluation of the rate in `(ω+ω', ω-ω')`.
///
/// Reports the result at `nodes` per axis and repeats the total at twice that
/// order; the result is flagged as not converged when the two differ by more
/// than [`DEFAULT_QUADRATURE_TOLERANCE`].
pub fn rate_quadrature(cfg: &PhaseConfig, spec: &BiphotonSpectrum, nodes: usize) -> Result<CoincidenceResult> {
    rate_quadrature_with_tolerance(cfg, spec, nodes, DEFAULT_QUADRATURE_TOLERANCE)
}

pub fn rate_quadrature_with_tolerance(
    cfg: &PhaseConfig,
    spec: &BiphotonSpectrum,
    nodes: usize,
    tolerance: f64,
) -> Result<CoincidenceResult> {
    if nodes < MIN_NODES {
        return Err(Error::TooFewNodes {
            min: MIN_NODES,
            got: nodes,
        });
    }
    let slow = slow_termsum(cfg.k())?;
    let (total, rbar) = quadrature_pass(cfg, spec, Some(&slow), nodes);
    let (refined, _) = quadrature_pass(cfg, spec, None, 2 * nodes);
    if !total.is_finite() || !rbar.is_finite() {
        return Err(Error::NonFinite("quadrature sum"));
    }
    let change = (refined - total).abs();
    Ok(CoincidenceResult {
        total,
        rbar,
        delta: total - rbar,
        method: Method::Quadrature,
        count: nodes,
        error_estimate: change,
        converged: change <= tolerance,
    })
}

/// Coarse-grained rate `R̄(τ)`: the slow part of [`rate_analytic`].
pub fn rate_coarse_analytic(cfg: &PhaseConfig, spec: &BiphotonSpectrum) -> Result<f64> {
    Ok(RateKernel::shared(cfg.k())?.rbar(cfg.tau(), spec.d_omega_minus()))
}

/// Box window for numerical coarse graining.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoarseGrainWindow {
    width: f64,
    samples_per_axis: usize,
}

impl CoarseGrainWindow {
    pub const DEFAULT_SAMPLES: usize = 41;

    pub fn new(width: f64, samples_per_axis: usize) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::InvalidWindow("width must be positive and finite"));
        }
        if samples_per_axis < 3 {
            return Err(Error::InvalidWindow("at least 3 samples per axis"));
        }
        Ok(Self {
            width,
            samples_per_axis,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples_per_axis
    }

    /// Checks `1/ω₀ ≪ T ≪ 1/Δω` with a factor of ten on both sides.
    pub fn regime(&self, spec: &BiphotonSpectrum) -> RegimeCheck {
        let carrier_cycles = spec.omega0() * self.width;
        let spread_fraction = self.width * spec.local_spread();
        RegimeCheck {
            carrier_cycles,
            spread_fraction,
            valid: carrier_cycles >= 10.0 && spread_fraction <= 0.1,
            // The fastest carrier in |Perm_k|² advances by 4ω₀ per unit delay.
            undersampled: 4.0 * spec.omega0() * self.width / self.samples_per_axis as f64
                >= std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeCheck {
    /// `ω₀ T`; should be at least 10.
    pub carrier_cycles: f64,
    /// `T Δω`; should be at most 0.1.
    pub spread_fraction: f64,
    pub valid: bool,
    /// The midpoint grid steps the fastest carrier by at least π per sample.
    pub undersampled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoarseAverage {
    pub value: f64,
    pub regime: RegimeCheck,
    pub evaluations: usize,
}

/// Midpoint-rule box average of the full rate over `[τ_ℓ - T/2, τ_ℓ + T/2]` per axis.
///
/// Leaving the coarse-graining regime only sets flags in the returned
/// [`RegimeCheck`]; the average is still computed.
pub fn rate_coarse_numeric(
    cfg: &PhaseConfig,
    spec: &BiphotonSpectrum,
    win: &CoarseGrainWindow,
) -> Result<CoarseAverage> {
    let kern = RateKernel::shared(cfg.k())?;
    let k = cfg.k();
    let s = win.samples_per_axis;
    let offsets: Vec<f64> = (0..s)
        .map(|j| win.width * ((j as f64 + 0.5) / s as f64 - 0.5))
        .collect();
    let evaluations = s
        .checked_pow(k as u32)
        .ok_or(Error::InvalidWindow("sample count overflows"))?;
    let mut idx = vec![0usize; k];
    let mut tau = cfg.tau().to_vec();
    let mut sum = 0.0;
    for _ in 0..evaluations {
        for l in 0..k {
            tau[l] = cfg.tau()[l] + offsets[idx[l]];
        }
        sum += kern.total(&tau, cfg.theta(), spec);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < s {
                break;
            }
            *slot = 0;
        }
    }
    let value = sum / evaluations as f64;
    if !value.is_finite() {
        return Err(Error::NonFinite("box average"));
    }
    Ok(CoarseAverage {
        value,
        regime: win.regime(spec),
        evaluations,
    })
}
