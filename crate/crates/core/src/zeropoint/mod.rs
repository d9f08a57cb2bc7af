//! Zero-coincidence analysis: phase conditions at the origin, lattice scans
//! for the zero locus of the rate, and delay calibration from `R̄` profiles.

mod calibration;
mod lattice;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cascade::{perm, PhaseConfig};
use crate::error::{Error, Result};
use crate::rate::{BiphotonSpectrum, RateKernel};
use lattice::LatticeEvaluator;

pub use calibration::{
    calibrate_from_scans, synthetic_dip_profile, synthetic_peak_profile, CalibrationEstimate, ExtremumPair,
    Geometry, Profile, ScanPlan,
};

/// Rates at or below this value count as zero coincidences.
pub const ZERO_THRESHOLD: f64 = 1e-10;

/// Singular-value ratio below which a set of zero points is accepted as a ray.
pub const COLLINEARITY_RATIO: f64 = 1e-3;

/// Cap on the number of zero points retained for ray fitting.
const MAX_ZERO_POINTS: usize = 200_000;

/// `Perm_k` at vanishing delays, from the free phases `θ₂..θ_k`.
pub fn origin_perm(free_thetas: &[f64], k: usize) -> Result<f64> {
    if !(1..=4).contains(&k) {
        return Err(Error::NoClosedForm(k));
    }
    if free_thetas.len() != k - 1 {
        return Err(Error::LengthMismatch {
            what: "free phase",
            expected: k - 1,
            got: free_thetas.len(),
        });
    }
    if free_thetas.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("phase"));
    }
    Ok(match *free_thetas {
        [] => 0.0,
        [t2] => t2.cos(),
        [t2, t3] => -t2.sin() * t3.sin(),
        [t2, t3, t4] => t2.cos() * t4.cos() - t2.sin() * t4.sin() * t3.cos(),
        _ => unreachable!(),
    })
}

/// The `θ₃ ∈ [0, π]` that cancels the four-module permanent at the origin
/// for given `θ₂`, `θ₄`: `θ₃ = arccos(cot θ₂ cot θ₄)`.
pub fn solve_theta3_k4(theta2: f64, theta4: f64) -> Result<f64> {
    if !theta2.is_finite() || !theta4.is_finite() {
        return Err(Error::NonFinite("phase"));
    }
    let sines = theta2.sin() * theta4.sin();
    if sines.abs() < 1e-9 {
        return Err(Error::PathologicalPhases(sines));
    }
    let product = theta2.cos() * theta4.cos() / sines;
    if product.abs() > 1.0 + 1e-12 {
        return Err(Error::NoRealSolution(product.abs()));
    }
    Ok(product.clamp(-1.0, 1.0).acos())
}

/// Symmetric box `|τ_ℓ| ≤ half_width` sampled with spacing `step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanSpec {
    pub half_width: f64,
    pub step: f64,
    pub spectrum: BiphotonSpectrum,
    pub zero_threshold: f64,
}

impl ScanSpec {
    /// Box scan with the reference spectrum `ω₀ = 20`, `ΔΩ₊ = 0.25`, `ΔΩ₋ = 1`.
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        let spec = Self {
            half_width,
            step,
            spectrum: BiphotonSpectrum::default(),
            zero_threshold: ZERO_THRESHOLD,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_spectrum(mut self, spectrum: BiphotonSpectrum) -> Self {
        self.spectrum = spectrum;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidGrid("step must be positive"));
        }
        if !(self.half_width.is_finite() && self.half_width >= self.step) {
            return Err(Error::InvalidGrid("box must contain at least one step"));
        }
        if self.half_steps() > 10_000 {
            return Err(Error::InvalidGrid("more than 20001 points per axis"));
        }
        Ok(())
    }

    /// `N` such that the lattice is `step · [-N, N]`.
    pub fn half_steps(&self) -> i32 {
        (self.half_width / self.step + 1e-9).floor() as i32
    }

    pub fn points_per_axis(&self) -> usize {
        2 * self.half_steps() as usize + 1
    }
}

impl fmt::Display for ScanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "box |tau| <= {}, step {}, {} points per axis",
            self.half_width,
            self.step,
            self.points_per_axis()
        )
    }
}

/// A line through the origin on which the rate vanishes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessRay {
    /// Scaled so that the largest component is 1 in magnitude and the first nonzero one is positive.
    pub direction: Vec<f64>,
    pub points: usize,
    /// Largest `|τ|` (Euclidean) among the zero points on the ray.
    pub extent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroVerdict {
    /// The rate vanishes at the origin and nowhere else on the grid.
    pub exclusive: bool,
    pub origin_rate: f64,
    pub witness_rays: Vec<WitnessRay>,
    /// Minimum rate over the grid outside the ball of radius one step around the origin.
    pub scan_floor: f64,
    pub floor_location: Vec<f64>,
    /// Off-origin grid points at or below the zero threshold.
    pub zero_points: usize,
    /// Zero points not explained by any fitted ray.
    pub unexplained_zero_points: usize,
    pub grid_spec: String,
    pub zero_threshold: f64,
}

fn canonical_direction(v: &[f64]) -> Vec<f64> {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let first = v.iter().copied().find(|x| x.abs() > 1e-9 * max).unwrap_or(1.0);
    let scale = first.signum() / max;
    v.iter()
        .map(|x| {
            // Snap to 1e-9 so that exact lattice rays print as exact vectors.
            let y = (x * scale * 1e9).round() / 1e9;
            if y == 0.0 {
                0.0
            } else {
                y
            }
        })
        .collect()
}

fn fit_ray(points: &[Vec<f64>]) -> Option<WitnessRay> {
    let k = points.first()?.len();
    let m = DMatrix::from_fn(points.len(), k, |i, j| points[i][j]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let (mut best, mut second) = ((0.0, 0usize), 0.0);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > best.0 {
            second = best.0;
            best = (s, i);
        } else if s > second {
            second = s;
        }
    }
    if best.0 == 0.0 || second / best.0 >= COLLINEARITY_RATIO {
        return None;
    }
    let dir: Vec<f64> = v_t.row(best.1).iter().copied().collect();
    let extent = points
        .iter()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Some(WitnessRay {
        direction: canonical_direction(&dir),
        points: points.len(),
        extent,
    })
}

/// Groups zero points by direction and fits one ray per group.
fn fit_rays(points: &[Vec<f64>]) -> (Vec<WitnessRay>, usize) {
    if points.is_empty() {
        return (Vec::new(), 0);
    }
    if let Some(ray) = fit_ray(points) {
        return (vec![ray], 0);
    }
    let mut groups: BTreeMap<Vec<i64>, Vec<Vec<f64>>> = BTreeMap::new();
    for p in points {
        let key = canonical_direction(p).iter().map(|x| (x * 1e6).round() as i64).collect();
        groups.entry(key).or_default().push(p.clone());
    }
    let mut rays = Vec::new();
    let mut unexplained = 0;
    for members in groups.values() {
        match fit_ray(members) {
            Some(ray) => rays.push(ray),
            None => unexplained += members.len(),
        }
    }
    rays.sort_by(|a, b| b.points.cmp(&a.points).then(a.direction.partial_cmp(&b.direction).unwrap()));
    (rays, unexplained)
}

/// Scans the rate over the lattice of `grid` and classifies its zero locus.
///
/// The rate is evaluated with the grid's reference spectrum; with a Gaussian
/// spectrum it vanishes exactly when `Perm_k` does on the whole spectral plane.
pub fn scan_zero_manifold(k: usize, free_thetas: &[f64], grid: &ScanSpec) -> Result<ZeroVerdict> {
    grid.validate()?;
    let cfg = PhaseConfig::with_free_phases(vec![0.0; k.max(1)], free_thetas)?;
    if cfg.k() != k {
        return Err(Error::LengthMismatch {
            what: "free phase",
            expected: k.saturating_sub(1),
            got: free_thetas.len(),
        });
    }
    let kern = RateKernel::shared(k)?;
    let half = grid.half_steps();
    let lat = LatticeEvaluator::new(&kern, cfg.theta(), &grid.spectrum, grid.step, half)?;

    let mut floor = f64::INFINITY;
    let mut floor_at = vec![0i32; k];
    let mut zero_points = 0usize;
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut non_finite = false;
    let mut origin_rate = f64::NAN;
    lat.sweep(|n, r| {
        non_finite |= !r.is_finite();
        let norm2: i32 = n.iter().map(|x| x * x).sum();
        if norm2 == 0 {
            origin_rate = r;
        }
        if norm2 <= 1 {
            return;
        }
        if r < floor {
            floor = r;
            floor_at.copy_from_slice(n);
        }
        if r <= grid.zero_threshold {
            zero_points += 1;
            if kept.len() < MAX_ZERO_POINTS {
                kept.push(n.iter().map(|&x| grid.step * f64::from(x)).collect());
            }
        }
    });
    if non_finite {
        return Err(Error::NonFinite("scan rate"));
    }
    if !floor.is_finite() {
        return Err(Error::InvalidGrid("no grid points outside the origin ball"));
    }
    let (witness_rays, unexplained) = fit_rays(&kept);
    let unexplained_zero_points = unexplained + (zero_points - kept.len());
    Ok(ZeroVerdict {
        exclusive: origin_rate <= grid.zero_threshold && zero_points == 0 && floor > grid.zero_threshold,
        origin_rate,
        witness_rays,
        scan_floor: floor,
        floor_location: floor_at.iter().map(|&x| grid.step * f64::from(x)).collect(),
        zero_points,
        unexplained_zero_points,
        grid_spec: grid.to_string(),
        zero_threshold: grid.zero_threshold,
    })
}

/// Rate (reference spectrum) at `t · direction` for each `t`.
pub fn rate_along_ray(
    free_thetas: &[f64],
    direction: &[f64],
    ts: &[f64],
    spectrum: &BiphotonSpectrum,
) -> Result<Vec<f64>> {
    let base = PhaseConfig::with_free_phases(direction.to_vec(), free_thetas)?;
    let kern = RateKernel::shared(base.k())?;
    ts.iter()
        .map(|&t| {
            let tau: Vec<f64> = direction.iter().map(|d| d * t).collect();
            let cfg = base.with_tau(tau)?;
            Ok(crate::rate::rate_with_kernel(&kern, &cfg, spectrum)?.total)
        })
        .collect()
}

/// Outcome of one of the two analytic sub-arguments checked numerically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubCheck {
    pub passed: bool,
    /// The statistic compared against the threshold.
    pub statistic: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct K4Certificate {
    pub theta: [f64; 4],
    pub verdict: ZeroVerdict,
    /// With `τ₂ = τ₄ = 0` and `τ₃ ≠ 0`, `Re Perm_4(ω, ω)` is not identically zero:
    /// the statistic is the smallest, over sampled `τ₃`, of the largest `|Re Perm_4|` on the probe grid.
    pub family_a: SubCheck,
    /// With `τ₂ = τ₃ = τ₄ = 0`, `Perm_4 = i sin((ω - ω')τ₁)`: the statistic is the largest deviation.
    pub family_b: SubCheck,
}

/// `n × n` probe points spanning `±4ΔΩ₋` around `(ω₀, ω₀)`.
fn probe_grid(spec: &BiphotonSpectrum, n: usize) -> Vec<f64> {
    let span = 4.0 * spec.d_omega_minus();
    (0..n)
        .map(|i| spec.omega0() - span + 2.0 * span * i as f64 / (n - 1) as f64)
        .collect()
}

const PROBE_POINTS: usize = 21;

/// Solves `θ₃`, scans the four-module rate and checks both analytic sub-arguments.
pub fn verify_k4_exclusive(theta2: f64, theta4: f64, grid: &ScanSpec) -> Result<K4Certificate> {
    let theta3 = solve_theta3_k4(theta2, theta4)?;
    let free = [theta2, theta3, theta4];
    let verdict = scan_zero_manifold(4, &free, grid)?;
    let probes = probe_grid(&grid.spectrum, PROBE_POINTS);
    let samples: Vec<f64> = (1..=grid.half_steps())
        .flat_map(|n| {
            let t = grid.step * f64::from(n);
            [t, -t]
        })
        .collect();

    let mut weakest = f64::INFINITY;
    for &t3 in &samples {
        let cfg = PhaseConfig::with_free_phases(vec![0.7, 0.0, t3, 0.0], &free)?;
        let largest = probes
            .iter()
            .map(|&w| perm(&cfg, w, w).re.abs())
            .fold(0.0, f64::max);
        weakest = weakest.min(largest);
    }
    let a_threshold = 1e-6;

    let mut worst: f64 = 0.0;
    for &t1 in samples.iter().chain(&[0.0]) {
        let cfg = PhaseConfig::with_free_phases(vec![t1, 0.0, 0.0, 0.0], &free)?;
        for &w in &probes {
            for &wp in &probes {
                let want = num_complex::Complex64::new(0.0, ((w - wp) * t1).sin());
                worst = worst.max((perm(&cfg, w, wp) - want).norm());
            }
        }
    }
    let b_threshold = 1e-12;

    let reduced = PhaseConfig::with_free_phases(vec![0.0; 4], &free)?;
    let theta = reduced.theta();
    Ok(K4Certificate {
        theta: [theta[0], theta[1], theta[2], theta[3]],
        verdict,
        family_a: SubCheck {
            passed: weakest > a_threshold,
            statistic: weakest,
            threshold: a_threshold,
        },
        family_b: SubCheck {
            passed: worst <= b_threshold,
            statistic: worst,
            threshold: b_threshold,
        },
    })
}
