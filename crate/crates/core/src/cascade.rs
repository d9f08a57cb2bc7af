//! Per-module and cascaded transfer matrices of the k-module interferometer.
//!
//! Module `ℓ` applies opposite phase shifts `±φ_ℓ(ω)` to its two paths, with
//! `φ_ℓ(ω) = ω τ_ℓ + θ_ℓ / 2`, followed by a balanced beam splitter:
//!
//! ```text
//! M_ℓ(ω) = 1/√2 [ e^{iφ}   e^{iφ} ]
//!               [ e^{-iφ} -e^{-iφ} ]
//! ```
//!
//! The cascade is the ordered product `N_k = M_1 M_2 … M_k`. Frequencies are
//! measured in units of the biphoton difference bandwidth and delays in units of
//! its inverse, so every quantity here is dimensionless.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Delays and achromatic phases of a k-module interferometer.
///
/// The first phase is pinned to zero (it only contributes a global phase) and
/// all phases are stored reduced to `[0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseConfig {
    tau: Vec<f64>,
    theta: Vec<f64>,
}

fn reduce_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl PhaseConfig {
    /// Builds a configuration from `k` delays and `k` phases (`theta[0]` must be 0 mod 2π).
    pub fn new(tau: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::NoModules);
        }
        if theta.len() != tau.len() {
            return Err(Error::LengthMismatch {
                what: "theta",
                expected: tau.len(),
                got: theta.len(),
            });
        }
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("delay"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("phase"));
        }
        let first = reduce_phase(theta[0]);
        if first.min(TAU - first) > 1e-12 {
            return Err(Error::FirstPhaseNotZero(theta[0]));
        }
        let mut theta: Vec<f64> = theta.into_iter().map(reduce_phase).collect();
        theta[0] = 0.0;
        Ok(Self { tau, theta })
    }

    /// Builds a configuration from `k` delays and the `k - 1` free phases `θ_2 … θ_k`.
    pub fn with_free_phases(tau: Vec<f64>, free: &[f64]) -> Result<Self> {
        let mut theta = Vec::with_capacity(free.len() + 1);
        theta.push(0.0);
        theta.extend_from_slice(free);
        Self::new(tau, theta)
    }

    /// All delays zero, phases given in full (`theta[0] = 0`).
    pub fn at_origin(theta: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0; theta.len()], theta)
    }

    /// Same phases, new delays.
    pub fn with_tau(&self, tau: Vec<f64>) -> Result<Self> {
        Self::new(tau, self.theta.clone())
    }

    /// Same delays, new phases.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.tau.clone(), theta)
    }

    pub fn k(&self) -> usize {
        self.tau.len()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `φ_ℓ(ω)` for the zero-based module index `idx`.
    #[inline]
    pub fn phase(&self, idx: usize, omega: f64) -> f64 {
        omega * self.tau[idx] + 0.5 * self.theta[idx]
    }
}

/// A 2x2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex2x2 {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a21: Complex64,
    pub a22: Complex64,
}

impl Complex2x2 {
    pub const IDENTITY: Self = Self {
        a11: Complex64::new(1.0, 0.0),
        a12: Complex64::new(0.0, 0.0),
        a21: Complex64::new(0.0, 0.0),
        a22: Complex64::new(1.0, 0.0),
    };

    pub fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.a11.conj(), self.a21.conj(), self.a12.conj(), self.a22.conj())
    }

    pub fn det(&self) -> Complex64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.is_finite())
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for Complex2x2 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.a11 * rhs.a11 + self.a12 * rhs.a21,
            self.a11 * rhs.a12 + self.a12 * rhs.a22,
            self.a21 * rhs.a11 + self.a22 * rhs.a21,
            self.a21 * rhs.a12 + self.a22 * rhs.a22,
        )
    }
}

impl fmt::Display for Complex2x2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a11, self.a12, self.a21, self.a22)
    }
}

fn module_matrix_at(phi: f64) -> Complex2x2 {
    let up = Complex64::from_polar(FRAC_1_SQRT_2, phi);
    let down = up.conj();
    Complex2x2::new(up, up, down, -down)
}

/// `M_ℓ(ω)` for the one-based module index `ell`.
pub fn module_matrix(cfg: &PhaseConfig, ell: usize, omega: f64) -> Result<Complex2x2> {
    if ell == 0 || ell > cfg.k() {
        return Err(Error::ModuleIndex {
            index: ell,
            k: cfg.k(),
        });
    }
    Ok(module_matrix_at(cfg.phase(ell - 1, omega)))
}

/// `N_k(ω) = M_1(ω) M_2(ω) … M_k(ω)`.
pub fn cascade_matrix(cfg: &PhaseConfig, omega: f64) -> Complex2x2 {
    (0..cfg.k()).fold(Complex2x2::IDENTITY, |acc, idx| {
        acc * module_matrix_at(cfg.phase(idx, omega))
    })
}

/// `Perm_k(ω, ω') = A_k(ω) D_k(ω') + B_k(ω') C_k(ω)`.
pub fn perm(cfg: &PhaseConfig, omega: f64, omega_p: f64) -> Complex64 {
    let n = cascade_matrix(cfg, omega);
    let np = cascade_matrix(cfg, omega_p);
    n.a11 * np.a22 + np.a12 * n.a21
}

/// `Det_k(ω, ω') = A_k(ω) D_k(ω') - B_k(ω') C_k(ω)`.
pub fn det_mixed(cfg: &PhaseConfig, omega: f64, omega_p: f64) -> Complex64 {
    let n = cascade_matrix(cfg, omega);
    let np = cascade_matrix(cfg, omega_p);
    n.a11 * np.a22 - np.a12 * n.a21
}

/// Hand-expanded trigonometric form of `Perm_k` for `k ≤ 4`.
///
/// Kept independent of the matrix product so the two can check each other.
pub fn perm_closed_form(cfg: &PhaseConfig, omega: f64, omega_p: f64) -> Result<Complex64> {
    let k = cfg.k();
    if !(1..=4).contains(&k) {
        return Err(Error::NoClosedForm(k));
    }
    let tau = cfg.tau();
    let theta = cfg.theta();
    let nu = omega - omega_p;
    let xi = omega + omega_p;
    // φ_ℓ - φ_ℓ' and φ_ℓ + φ_ℓ'
    let dm = |l: usize| nu * tau[l];
    let dp = |l: usize| xi * tau[l] + theta[l];

    let value = match k {
        1 => -I * (nu * tau[0]).sin(),
        2 => {
            let re = dm(0).cos() * dp(1).cos();
            let im = dm(0).sin() * dm(1).cos();
            Complex64::new(re, im)
        }
        3 => {
            let re = -dm(0).cos() * dp(1).sin() * dp(2).sin()
                + dm(0).sin() * dm(1).sin() * dp(2).cos();
            let im = -(dm(0).cos() * dp(1).cos() * dm(2).sin()
                + dm(0).sin() * dm(1).cos() * dm(2).cos());
            Complex64::new(re, im)
        }
        _ => {
            let (c1m, s1m) = (dm(0).cos(), dm(0).sin());
            let (c2m, s2m, c2p, s2p) = (dm(1).cos(), dm(1).sin(), dp(1).cos(), dp(1).sin());
            let (c3m, s3m, c3p, s3p) = (dm(2).cos(), dm(2).sin(), dp(2).cos(), dp(2).sin());
            let (c4m, s4m, c4p, s4p) = (dm(3).cos(), dm(3).sin(), dp(3).cos(), dp(3).sin());
            let re = c1m * (c2p * c3m * c4p - s2p * c3p * s4p)
                - s1m * (c2m * s3m * c4p + s2m * s3p * s4p);
            let im = c1m * (c2p * s3m * c4m + s2p * s3p * s4m)
                + s1m * (c2m * c3m * c4m - s2m * c3p * s4m);
            Complex64::new(re, im)
        }
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn config_validation() {
        assert_eq!(PhaseConfig::new(vec![], vec![]), Err(Error::NoModules));
        assert!(matches!(
            PhaseConfig::new(vec![0.0, 1.0], vec![0.0]),
            Err(Error::LengthMismatch { expected: 2, got: 1, .. })
        ));
        assert!(matches!(
            PhaseConfig::new(vec![0.0, 1.0], vec![0.3, 1.0]),
            Err(Error::FirstPhaseNotZero(_))
        ));
        assert!(matches!(
            PhaseConfig::new(vec![f64::NAN], vec![0.0]),
            Err(Error::NonFinite(_))
        ));
        // 2π on the first module is the same as 0
        let cfg = PhaseConfig::new(vec![0.0, 0.0], vec![TAU, -FRAC_PI_2]).unwrap();
        assert_eq!(cfg.theta()[0], 0.0);
        assert_abs_diff_eq!(cfg.theta()[1], 1.5 * PI, epsilon = 1e-15);
    }

    #[test]
    fn module_matrix_examples() {
        let h = FRAC_1_SQRT_2;
        let cfg = PhaseConfig::new(vec![0.0], vec![0.0]).unwrap();
        let m = module_matrix(&cfg, 1, 3.7).unwrap();
        let bs = Complex2x2::new(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0));
        assert!(m.max_abs_diff(&bs) < 1e-15);

        let want = Complex2x2::new(c(0.0, h), c(0.0, h), c(0.0, -h), c(0.0, h));
        let cfg = PhaseConfig::with_free_phases(vec![0.4, 0.0], &[PI]).unwrap();
        assert!(module_matrix(&cfg, 2, -2.5).unwrap().max_abs_diff(&want) < 1e-15);

        let cfg = PhaseConfig::new(vec![1.0], vec![0.0]).unwrap();
        assert!(module_matrix(&cfg, 1, FRAC_PI_2).unwrap().max_abs_diff(&want) < 1e-15);

        assert_eq!(
            module_matrix(&cfg, 2, 0.0),
            Err(Error::ModuleIndex { index: 2, k: 1 })
        );
        assert!(module_matrix(&cfg, 0, 0.0).is_err());
    }

    #[test]
    fn single_module_cascade_is_the_module() {
        let cfg = PhaseConfig::new(vec![0.83], vec![0.0]).unwrap();
        let w = 1.9;
        assert_eq!(cascade_matrix(&cfg, w), module_matrix(&cfg, 1, w).unwrap());
    }

    #[test]
    fn two_module_cascade_matches_displayed_form() {
        let (t1, t2, th2) = (0.7, -1.3, 2.1);
        let cfg = PhaseConfig::with_free_phases(vec![t1, t2], &[th2]).unwrap();
        for &w in &[-3.0, 0.2, 5.5] {
            let e = Complex64::from_polar(1.0, w * t1);
            let arg = w * t2 + th2 / 2.0;
            let want = Complex2x2::new(
                e * arg.cos(),
                I * e * arg.sin(),
                I * e.conj() * arg.sin(),
                e.conj() * arg.cos(),
            );
            assert!(cascade_matrix(&cfg, w).max_abs_diff(&want) < 1e-14);
        }
    }

    #[test]
    fn three_module_cascade_matches_displayed_form() {
        let cfg = PhaseConfig::with_free_phases(vec![0.4, -2.2, 1.7], &[0.9, 5.1]).unwrap();
        for &w in &[-1.1, 0.0, 2.6] {
            let (p1, p2, p3) = (cfg.phase(0, w), cfg.phase(1, w), cfg.phase(2, w));
            let e = Complex64::from_polar(1.0, p1);
            let want = Complex2x2::new(
                e * c((p2 - p3).cos(), (p2 + p3).sin()),
                e * c((p2 + p3).cos(), -(p2 - p3).sin()),
                e.conj() * c((p2 + p3).cos(), (p2 - p3).sin()),
                e.conj() * c(-(p2 - p3).cos(), (p2 + p3).sin()),
            );
            let got = cascade_matrix(&cfg, w);
            let scaled = Complex2x2::new(
                want.a11 * FRAC_1_SQRT_2,
                want.a12 * FRAC_1_SQRT_2,
                want.a21 * FRAC_1_SQRT_2,
                want.a22 * FRAC_1_SQRT_2,
            );
            assert!(got.max_abs_diff(&scaled) < 1e-14, "{got} vs {scaled}");
        }
    }

    #[test]
    fn perm_reference_values() {
        let cfg = PhaseConfig::new(vec![1.3], vec![0.0]).unwrap();
        let (w, wp): (f64, f64) = (2.0, -0.7);
        let want = c(0.0, -((w - wp) * 1.3).sin());
        assert!((perm(&cfg, w, wp) - want).norm() < 1e-14);

        let (th2, th3) = (0.8, 2.9);
        let cfg = PhaseConfig::at_origin(vec![0.0, th2, th3]).unwrap();
        let want = -th2.sin() * th3.sin();
        assert!((perm(&cfg, 4.0, 1.0) - want).norm() < 1e-14);

        let (th2, th3, th4) = (1.1, 0.3, 4.4);
        let cfg = PhaseConfig::at_origin(vec![0.0, th2, th3, th4]).unwrap();
        let want = th2.cos() * th4.cos() - th2.sin() * th4.sin() * th3.cos();
        assert!((perm(&cfg, -2.0, 7.0) - want).norm() < 1e-14);
    }

    #[test]
    fn det_mixed_examples() {
        let cfg = PhaseConfig::with_free_phases(vec![0.2, 1.4], &[2.2]).unwrap();
        let (w, wp) = (0.35, -1.8);
        let n = cascade_matrix(&cfg, w);
        let np = cascade_matrix(&cfg, wp);
        let want = n.a11 * np.a22 - np.a12 * n.a21;
        assert!((det_mixed(&cfg, w, wp) - want).norm() < 1e-15);

        let cfg = PhaseConfig::new(vec![0.6], vec![0.0]).unwrap();
        assert_abs_diff_eq!(det_mixed(&cfg, 1.2, 1.2).norm(), 1.0, epsilon = 1e-14);
        // k = 1: Det_1 = -cos((ω-ω')τ_1)
        let want = -((1.2 - 0.1) * 0.6_f64).cos();
        assert!((det_mixed(&cfg, 1.2, 0.1) - want).norm() < 1e-14);
    }

    #[test]
    fn closed_form_special_settings() {
        // θ_2 = π/2 for k = 2
        let (t1, t2) = (0.9, -0.4);
        let cfg = PhaseConfig::with_free_phases(vec![t1, t2], &[FRAC_PI_2]).unwrap();
        let (w, wp) = (1.7, 0.2);
        let (nu, xi) = (w - wp, w + wp);
        let want = c(
            -(nu * t1).cos() * (xi * t2).sin(),
            (nu * t1).sin() * (nu * t2).cos(),
        );
        assert!((perm_closed_form(&cfg, w, wp).unwrap() - want).norm() < 1e-14);

        let cfg = PhaseConfig::at_origin(vec![0.0, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2]).unwrap();
        assert!(perm_closed_form(&cfg, 3.0, -1.0).unwrap().norm() < 1e-15);

        let cfg = PhaseConfig::at_origin(vec![0.0; 5]).unwrap();
        assert_eq!(perm_closed_form(&cfg, 0.0, 0.0), Err(Error::NoClosedForm(5)));
    }

    fn config_strategy(k: usize) -> impl Strategy<Value = PhaseConfig> {
        (
            prop::collection::vec(-10.0..10.0f64, k),
            prop::collection::vec(-10.0..10.0f64, k - 1),
        )
            .prop_map(|(tau, free)| PhaseConfig::with_free_phases(tau, &free).unwrap())
    }

    proptest! {
        #[test]
        fn cascade_is_unitary_with_det_sign(cfg in (1usize..7).prop_flat_map(config_strategy), w in -10.0..10.0f64) {
            let k = cfg.k();
            let n = cascade_matrix(&cfg, w);
            prop_assert!((n.adjoint() * n).max_abs_diff(&Complex2x2::IDENTITY) < 1e-12);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((n.det() - sign).norm() < 1e-12);
        }

        #[test]
        fn closed_form_agrees_with_product(
            k in 1usize..=4,
            tau in prop::collection::vec(-10.0..10.0f64, 4),
            free in prop::collection::vec(-10.0..10.0f64, 3),
            w in -10.0..10.0f64,
            wp in -10.0..10.0f64,
        ) {
            let cfg = PhaseConfig::with_free_phases(tau[..k].to_vec(), &free[..k - 1]).unwrap();
            let diff = (perm(&cfg, w, wp) - perm_closed_form(&cfg, w, wp).unwrap()).norm();
            prop_assert!(diff < 1e-12, "k={} diff={}", k, diff);
        }

        #[test]
        fn det_is_unimodular_on_the_diagonal(cfg in config_strategy(3), w in -10.0..10.0f64) {
            prop_assert!((det_mixed(&cfg, w, w).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn diagonal_real_part_k4(cfg in config_strategy(4), w in -10.0..10.0f64) {
            let t = cfg.tau();
            let th = cfg.theta();
            let a2 = 2.0 * w * t[1] + th[1];
            let a3 = 2.0 * w * t[2] + th[2];
            let a4 = 2.0 * w * t[3] + th[3];
            let want = a2.cos() * a4.cos() - a2.sin() * a4.sin() * a3.cos();
            prop_assert!((perm(&cfg, w, w).re - want).abs() < 1e-12);
        }
    }
}
