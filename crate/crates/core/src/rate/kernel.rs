use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::BiphotonSpectrum;
use crate::error::{Error, Result};
use crate::signsum::{modsquare_split, perm_termsum, Term, TermSum, MAX_EXPANSION_MODULES};

/// One Gaussian-integrated plane wave of `|Perm_k|²`, with `K±` stored as halves.
#[derive(Clone, Debug)]
struct KernelTerm {
    coeff: Complex64,
    kp: Vec<f64>,
    km: Vec<f64>,
}

/// A conjugate pair `c·e^{iα} + c̄·e^{-iα}` collapsed to `weight·cos(α + arg c)`.
#[derive(Clone, Debug)]
struct FoldedTerm {
    weight: f64,
    arg: f64,
    kp: Vec<f64>,
    km: Vec<f64>,
}

impl KernelTerm {
    fn from_term(t: &Term) -> Self {
        let half = |v: &[i8]| v.iter().map(|&x| 0.5 * f64::from(x)).collect();
        Self {
            coeff: t.coeff,
            kp: half(&t.key.plus),
            km: half(&t.key.minus),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fold(terms: &[Term]) -> Vec<FoldedTerm> {
    let mut out = Vec::new();
    for t in terms {
        let first = t
            .key
            .plus
            .iter()
            .chain(&t.key.minus)
            .find(|&&x| x != 0)
            .copied()
            .unwrap_or(0);
        let k = KernelTerm::from_term(t);
        match first.signum() {
            1 => out.push(FoldedTerm {
                weight: 2.0 * k.coeff.norm(),
                arg: k.coeff.arg(),
                kp: k.kp,
                km: k.km,
            }),
            0 => out.push(FoldedTerm {
                weight: k.coeff.re,
                arg: 0.0,
                kp: k.kp,
                km: k.km,
            }),
            _ => {}
        }
    }
    out
}

/// Precompiled term list for the coincidence rate of a `k`-module cascade.
///
/// Holds the slow (`K₊ = 0`) and fast parts of `|Perm_k|²` in both a complex
/// form, used to check that the imaginary parts cancel, and a folded real form
/// used in grids and box averages.
#[derive(Clone, Debug)]
pub struct RateKernel {
    k: usize,
    slow: Vec<KernelTerm>,
    fast: Vec<KernelTerm>,
    slow_folded: Vec<FoldedTerm>,
    fast_folded: Vec<FoldedTerm>,
}

/// Rate split produced by [`RateKernel::split`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateSplit {
    pub rbar: Complex64,
    pub delta: Complex64,
}

impl RateKernel {
    pub fn new(k: usize) -> Result<Self> {
        if k > MAX_EXPANSION_MODULES {
            return Err(Error::TooManyModules {
                k,
                limit: MAX_EXPANSION_MODULES,
            });
        }
        let (pbar, dpk) = modsquare_split(&perm_termsum(k)?)?;
        Ok(Self::from_parts(&pbar, &dpk))
    }

    fn from_parts(pbar: &TermSum, dpk: &TermSum) -> Self {
        Self {
            k: pbar.k(),
            slow: pbar.terms().iter().map(KernelTerm::from_term).collect(),
            fast: dpk.terms().iter().map(KernelTerm::from_term).collect(),
            slow_folded: fold(pbar.terms()),
            fast_folded: fold(dpk.terms()),
        }
    }

    /// Process-wide cached kernel for `k` modules.
    pub fn shared(k: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<RateKernel>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(hit) = cache.lock().expect("kernel cache poisoned").get(&k) {
            return Ok(Arc::clone(hit));
        }
        let built = Arc::new(Self::new(k)?);
        let mut guard = cache.lock().expect("kernel cache poisoned");
        Ok(Arc::clone(guard.entry(k).or_insert(built)))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of distinct plane waves in `|Perm_k|²`.
    pub fn term_count(&self) -> usize {
        self.slow.len() + self.fast.len()
    }

    pub fn slow_term_count(&self) -> usize {
        self.slow.len()
    }

    fn check(&self, tau: &[f64], theta: &[f64]) {
        assert_eq!(tau.len(), self.k, "delay vector length");
        assert_eq!(theta.len(), self.k, "phase vector length");
    }

    /// Complex term-by-term sums of the slow and fast parts.
    pub fn split(&self, tau: &[f64], theta: &[f64], spec: &BiphotonSpectrum) -> RateSplit {
        self.check(tau, theta);
        let dp2 = spec.d_omega_plus().powi(2);
        let dm2 = spec.d_omega_minus().powi(2);
        let w0 = spec.omega0();
        let eval = |t: &KernelTerm| {
            let tp = dot(tau, &t.kp);
            let tq = dot(tau, &t.km);
            let phase = 2.0 * w0 * tp + dot(theta, &t.kp);
            t.coeff * Complex64::from_polar((-2.0 * tp * tp * dp2 - 0.5 * tq * tq * dm2).exp(), phase)
        };
        RateSplit {
            rbar: self.slow.iter().map(eval).sum(),
            delta: self.fast.iter().map(eval).sum(),
        }
    }

    fn folded_sum(terms: &[FoldedTerm], tau: &[f64], theta: &[f64], spec: &BiphotonSpectrum) -> f64 {
        let dp2 = spec.d_omega_plus().powi(2);
        let dm2 = spec.d_omega_minus().powi(2);
        let w0 = spec.omega0();
        terms
            .iter()
            .map(|t| {
                let tp = dot(tau, &t.kp);
                let tq = dot(tau, &t.km);
                let phase = 2.0 * w0 * tp + dot(theta, &t.kp) + t.arg;
                t.weight * phase.cos() * (-2.0 * tp * tp * dp2 - 0.5 * tq * tq * dm2).exp()
            })
            .sum()
    }

    /// Coarse-grained rate `R̄(τ)`; depends only on `ΔΩ₋`.
    pub fn rbar(&self, tau: &[f64], d_omega_minus: f64) -> f64 {
        assert_eq!(tau.len(), self.k, "delay vector length");
        let dm2 = d_omega_minus * d_omega_minus;
        self.slow_folded
            .iter()
            .map(|t| {
                let tq = dot(tau, &t.km);
                t.weight * t.arg.cos() * (-0.5 * tq * tq * dm2).exp()
            })
            .sum()
    }

    /// Fast part `ΔR` as a real number.
    pub fn delta(&self, tau: &[f64], theta: &[f64], spec: &BiphotonSpectrum) -> f64 {
        self.check(tau, theta);
        Self::folded_sum(&self.fast_folded, tau, theta, spec)
    }

    /// Full rate `R = R̄ + ΔR` as a real number.
    pub fn total(&self, tau: &[f64], theta: &[f64], spec: &BiphotonSpectrum) -> f64 {
        self.rbar(tau, spec.d_omega_minus()) + self.delta(tau, theta, spec)
    }

    /// Distinct `(K₊, K₋)` vectors of the folded list, doubled to integers,
    /// with their weights and argument offsets; used by lattice evaluators.
    pub(crate) fn folded_terms(&self) -> impl Iterator<Item = (f64, f64, Vec<i32>, Vec<i32>)> + '_ {
        let dbl = |v: &[f64]| v.iter().map(|x| (2.0 * x).round() as i32).collect();
        self.slow_folded
            .iter()
            .chain(&self.fast_folded)
            .map(move |t| (t.weight, t.arg, dbl(&t.kp), dbl(&t.km)))
    }
}
