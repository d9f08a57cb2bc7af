//! Closed-form coincidence rates for small cascades, used as oracles.

use super::BiphotonSpectrum;

fn g(x: f64, dm: f64) -> f64 {
    (-2.0 * x * x * dm * dm).exp()
}

/// Single module: `R = R̄ = (1 - e^{-2τ₁²ΔΩ₋²}) / 2`.
pub fn rate_k1(tau1: f64, d_omega_minus: f64) -> f64 {
    0.5 * (1.0 - g(tau1, d_omega_minus))
}

/// Two modules, coarse-grained.
pub fn rbar_k2(tau1: f64, tau2: f64, d_omega_minus: f64) -> f64 {
    let dm = d_omega_minus;
    0.5 + (2.0 * g(tau2, dm) - g(tau1 + tau2, dm) - g(tau1 - tau2, dm)) / 8.0
}

/// Three modules, coarse-grained.
pub fn rbar_k3(tau: [f64; 3], d_omega_minus: f64) -> f64 {
    let [t1, t2, t3] = tau;
    let dm = d_omega_minus;
    0.5 + (2.0 * g(t2 - t3, dm) + 2.0 * g(t2 + t3, dm)
        - 4.0 * g(t1 - t3, dm)
        - 4.0 * g(t1 + t3, dm)
        - g(t1 + t2 - t3, dm)
        - g(t1 - t2 + t3, dm)
        - g(t1 - t2 - t3, dm)
        - g(t1 + t2 + t3, dm))
        / 32.0
}

/// Fast part `ΔR` of the three-module rate at `θ₂ = π/2`, `θ₃ = 0`, written
/// out as five envelope functions times carriers at multiples of `ω₀`.
pub fn delta_r_k3(tau: [f64; 3], spec: &BiphotonSpectrum) -> f64 {
    let [t1, t2, t3] = tau;
    let p = spec.d_omega_plus().powi(2);
    let m = spec.d_omega_minus().powi(2);
    let w0 = spec.omega0();
    let e = f64::exp;

    let f1 = 2.0
        * e(-8.0 * t2 * t2 * p - 2.0 * (t1 + t3).powi(2) * m)
        * (1.0 + e(8.0 * t1 * t3 * m) + 2.0 * e((2.0 * t1 * t1 + 4.0 * t1 * t3) * m));
    let f2 = -4.0
        * e(-2.0 * t2 * (t1 + t3) * m - 2.0 * (t1 + t3).powi(2) * m - 0.5 * t2 * t2 * (4.0 * p + m))
        * (e(4.0 * t3 * (2.0 * t1 + t2) * m) - e(4.0 * t2 * (t1 + t3) * m)
            + e(4.0 * t1 * (t2 + 2.0 * t3) * m)
            - 1.0);
    let f3 = 2.0
        * e(-8.0 * t3 * t3 * p - 2.0 * (t1 + t2).powi(2) * m)
        * (e(8.0 * t1 * t2 * m) - 4.0 * e(2.0 * t2 * (2.0 * t1 + t2) * m)
            - 2.0 * e(2.0 * t1 * (t1 + 2.0 * t2) * m)
            + 1.0);
    // The ΔΩ₊ in the first exponent is the spectral width squared, like in f₁, f₃, f₅.
    let f4 = -2.0
        * e(-2.0 * (4.0 * t2 * t2 * p + 4.0 * t3 * t3 * p + t1 * t1 * m))
        * (1.0 + e(2.0 * t1 * t1 * m));
    let f5 = 4.0
        * e(-2.0 * (t2 * t2 + 4.0 * t3 * t3) * p - 0.5 * (2.0 * t1 + t2).powi(2) * m)
        * (e(4.0 * t1 * t2 * m) - 1.0);

    (f1 * (4.0 * w0 * t2).cos()
        + f2 * (2.0 * w0 * t2).sin()
        + f3 * (4.0 * w0 * t3).cos()
        + f4 * (e(-16.0 * t2 * t3 * p) * (4.0 * w0 * (t2 + t3)).cos()
            + e(16.0 * t2 * t3 * p) * (4.0 * w0 * (t2 - t3)).cos())
        + f5 * (e(8.0 * t2 * t3 * p) * (2.0 * w0 * (t2 - 2.0 * t3)).sin()
            - e(-8.0 * t2 * t3 * p) * (2.0 * w0 * (t2 + 2.0 * t3)).sin()))
        / 32.0
}
