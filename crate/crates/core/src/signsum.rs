//! Plane-wave expansion of the cascade over sign vectors.
//!
//! Every entry of `N_k(ω)` is a sum over `s ∈ {±1}^k` of a pure-number
//! coefficient times `exp(i s·φ(ω))`. Substituting into the permanent turns it
//! into a finite sum of terms
//!
//! ```text
//! c · exp(i [(ω+ω') τ + θ]·Δ₊) · exp(i (ω-ω') τ·Δ₋),    Δ± = (s ± s') / 2
//! ```
//!
//! and squaring the modulus gives the same shape again with difference vectors.
//! Terms whose `Δ₊` part vanishes survive coarse graining; the rest oscillate at
//! the carrier frequency.
//!
//! `Δ` vectors are half-integers, so they are stored doubled as `i8` to merge
//! terms on exact keys.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::cascade::{Complex2x2, PhaseConfig};
use crate::error::{Error, Result};

/// Merged coefficients below this modulus are dropped.
pub const ZERO_COEFF: f64 = 1e-15;

/// Largest `k` for which the squared expansion is attempted.
pub const MAX_EXPANSION_MODULES: usize = 8;

/// A length-k sequence of `±1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Option<Self> {
        signs
            .iter()
            .all(|&s| s == 1 || s == -1)
            .then_some(Self(signs))
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `s · φ(ω)`.
    pub fn dot_phase(&self, cfg: &PhaseConfig, omega: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(l, &s)| f64::from(s) * cfg.phase(l, omega))
            .sum()
    }

    fn pushed(&self, s: i8) -> Self {
        let mut v = self.0.clone();
        v.push(s);
        Self(v)
    }
}

pub type EntryTerms = Vec<(Complex64, SignVector)>;

/// Sign-vector expansion of the four entries of `N_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryDecomposition {
    pub k: usize,
    pub a: EntryTerms,
    pub b: EntryTerms,
    pub c: EntryTerms,
    pub d: EntryTerms,
}

fn eval_entry(terms: &EntryTerms, cfg: &PhaseConfig, omega: f64) -> Complex64 {
    terms
        .iter()
        .map(|(coeff, s)| coeff * Complex64::from_polar(1.0, s.dot_phase(cfg, omega)))
        .sum()
}

impl EntryDecomposition {
    /// Sums the expansion back into a matrix at `omega`.
    pub fn reconstruct(&self, cfg: &PhaseConfig, omega: f64) -> Complex2x2 {
        Complex2x2::new(
            eval_entry(&self.a, cfg, omega),
            eval_entry(&self.b, cfg, omega),
            eval_entry(&self.c, cfg, omega),
            eval_entry(&self.d, cfg, omega),
        )
    }

    pub fn entries(&self) -> [&EntryTerms; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }
}

/// Expands `N_k = N_{k-1} M_k` entry by entry; coefficients depend only on `k`.
pub fn decompose_entries(k: usize) -> Result<EntryDecomposition> {
    if k == 0 {
        return Err(Error::NoModules);
    }
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let first = |s: i8, sign: f64| vec![(h * sign, SignVector(vec![s]))];
    let mut dec = EntryDecomposition {
        k: 1,
        a: first(1, 1.0),
        b: first(1, 1.0),
        c: first(-1, 1.0),
        d: first(-1, -1.0),
    };
    for _ in 1..k {
        // Row 1 of M_k carries e^{+iφ} with (1, 1); row 2 carries e^{-iφ} with (1, -1).
        let extend = |left: &EntryTerms, right: &EntryTerms, col_sign: f64| -> EntryTerms {
            left.iter()
                .map(|(c, s)| (c * h, s.pushed(1)))
                .chain(right.iter().map(|(c, s)| (c * h * col_sign, s.pushed(-1))))
                .collect()
        };
        dec = EntryDecomposition {
            k: dec.k + 1,
            a: extend(&dec.a, &dec.b, 1.0),
            b: extend(&dec.a, &dec.b, -1.0),
            c: extend(&dec.c, &dec.d, 1.0),
            d: extend(&dec.c, &dec.d, -1.0),
        };
    }
    Ok(dec)
}

/// Doubled `(Δ₊, Δ₋)` pair identifying a plane wave.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrequencyKey {
    pub plus: Vec<i8>,
    pub minus: Vec<i8>,
}

impl FrequencyKey {
    pub fn has_zero_plus(&self) -> bool {
        self.plus.iter().all(|&p| p == 0)
    }

    fn difference(&self, other: &Self) -> Self {
        let sub = |a: &[i8], b: &[i8]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Self {
            plus: sub(&self.plus, &other.plus),
            minus: sub(&self.minus, &other.minus),
        }
    }

    /// Phase of the plane wave at `(ω, ω')`.
    pub fn phase(&self, cfg: &PhaseConfig, omega: f64, omega_p: f64) -> f64 {
        let xi = omega + omega_p;
        let nu = omega - omega_p;
        let tau = cfg.tau();
        let theta = cfg.theta();
        let mut acc = 0.0;
        for l in 0..self.plus.len() {
            acc += 0.5 * f64::from(self.plus[l]) * (xi * tau[l] + theta[l]);
            acc += 0.5 * f64::from(self.minus[l]) * nu * tau[l];
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub key: FrequencyKey,
}

/// Canonical finite sum of plane-wave terms: sorted by key, merged, no zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TermSum {
    k: usize,
    terms: Vec<Term>,
}

impl TermSum {
    pub fn from_terms(k: usize, terms: impl IntoIterator<Item = Term>) -> Self {
        let mut merged: BTreeMap<FrequencyKey, Complex64> = BTreeMap::new();
        for t in terms {
            debug_assert_eq!(t.key.plus.len(), k);
            *merged.entry(t.key).or_default() += t.coeff;
        }
        Self::from_map(k, merged)
    }

    fn from_map(k: usize, merged: BTreeMap<FrequencyKey, Complex64>) -> Self {
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.norm() > ZERO_COEFF)
            .map(|(key, coeff)| Term { coeff, key })
            .collect();
        Self { k, terms }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Value at `(ω, ω')` using the delays and phases of `cfg`.
    pub fn evaluate(&self, cfg: &PhaseConfig, omega: f64, omega_p: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeff * Complex64::from_polar(1.0, t.key.phase(cfg, omega, omega_p)))
            .sum()
    }

    /// Sum of two term sums, re-canonicalized.
    pub fn plus(&self, other: &Self) -> Self {
        Self::from_terms(self.k, self.terms.iter().chain(other.terms.iter()).cloned())
    }

    fn partition(&self, pred: impl Fn(&Term) -> bool) -> (Self, Self) {
        let (yes, no): (Vec<_>, Vec<_>) = self.terms.iter().cloned().partition(|t| pred(t));
        (
            Self { k: self.k, terms: yes },
            Self { k: self.k, terms: no },
        )
    }
}

/// Number of product terms produced before merging by [`perm_termsum`].
pub fn perm_raw_term_count(k: usize) -> usize {
    2 * 4usize.pow(k as u32 - 1)
}

/// Expansion of `Perm_k(ω, ω')` as a canonical term sum.
pub fn perm_termsum(k: usize) -> Result<TermSum> {
    let dec = decompose_entries(k)?;
    let pair = |(c1, s): &(Complex64, SignVector), (c2, sp): &(Complex64, SignVector)| Term {
        coeff: c1 * c2,
        key: FrequencyKey {
            plus: s.0.iter().zip(&sp.0).map(|(a, b)| a + b).collect(),
            minus: s.0.iter().zip(&sp.0).map(|(a, b)| a - b).collect(),
        },
    };
    // A(ω) D(ω'): s from A, s' from D. B(ω') C(ω): s from C, s' from B.
    let ad = dec.a.iter().flat_map(|a| dec.d.iter().map(move |d| pair(a, d)));
    let bc = dec.c.iter().flat_map(|c| dec.b.iter().map(move |b| pair(c, b)));
    Ok(TermSum::from_terms(k, ad.chain(bc).collect::<Vec<_>>()))
}

/// Splits off `F_k(ω - ω')`: the terms with `Δ₊ = 0`.
pub fn split_fk(ts: &TermSum) -> (TermSum, TermSum) {
    ts.partition(|t| t.key.has_zero_plus())
}

/// `|ts|² = P̄ + ΔP`, where `P̄` has no `ω + ω'` or `θ` dependence.
pub fn modsquare_split(ts: &TermSum) -> Result<(TermSum, TermSum)> {
    if ts.k > MAX_EXPANSION_MODULES {
        return Err(Error::TooManyModules {
            k: ts.k,
            limit: MAX_EXPANSION_MODULES,
        });
    }
    let mut merged: BTreeMap<FrequencyKey, Complex64> = BTreeMap::new();
    for a in &ts.terms {
        for b in &ts.terms {
            *merged.entry(a.key.difference(&b.key)).or_default() += a.coeff * b.coeff.conj();
        }
    }
    let square = TermSum::from_map(ts.k, merged);
    Ok(square.partition(|t| t.key.has_zero_plus()))
}

/// One cosine component `amplitude · cos(frequency · ω + phase)` of `Re Perm_k(ω, ω)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyComponent {
    pub frequency: f64,
    pub phase: f64,
    pub amplitude: f64,
    /// Doubled `Δ₊` of the component, sign-normalized so its first nonzero entry is positive.
    pub plus: Vec<i8>,
}

impl FrequencyComponent {
    pub fn value(&self, omega: f64) -> f64 {
        self.amplitude * (self.frequency * omega + self.phase).cos()
    }
}

fn canonical_sign(v: &[i8]) -> i8 {
    v.iter().find(|&&x| x != 0).map_or(1, |&x| x.signum())
}

/// Cosine decomposition of `Re Perm_k(ω, ω)` as a function of `ω`.
///
/// One component per `±Δ₊` pair; components sharing a frequency are not merged
/// (see [`merge_components`]).
pub fn diag_frequency_spectrum(cfg: &PhaseConfig) -> Result<Vec<FrequencyComponent>> {
    let ts = perm_termsum(cfg.k())?;
    // At ω = ω' only Δ₊ matters.
    let mut by_plus: BTreeMap<Vec<i8>, Complex64> = BTreeMap::new();
    for t in ts.terms() {
        *by_plus.entry(t.key.plus.clone()).or_default() += t.coeff;
    }
    let tau = cfg.tau();
    let theta = cfg.theta();
    let mut out = Vec::new();
    for (plus, coeff) in &by_plus {
        if canonical_sign(plus) < 0 {
            continue;
        }
        let is_zero = plus.iter().all(|&p| p == 0);
        let amp = if is_zero {
            Complex64::new(coeff.re, 0.0)
        } else {
            let mirror: Vec<i8> = plus.iter().map(|p| -p).collect();
            coeff + by_plus.get(&mirror).copied().unwrap_or_default().conj()
        };
        if amp.norm() < 1e-12 {
            continue;
        }
        let frequency: f64 = plus.iter().zip(tau).map(|(&p, t)| f64::from(p) * t).sum();
        let base: f64 = plus.iter().zip(theta).map(|(&p, t)| 0.5 * f64::from(p) * t).sum();
        let (amplitude, phase) = if amp.im.abs() <= 1e-12 {
            (amp.re, base)
        } else {
            (amp.norm(), base + amp.arg())
        };
        out.push(FrequencyComponent {
            frequency,
            phase,
            amplitude,
            plus: plus.clone(),
        });
    }
    Ok(out)
}

/// Splits the `k = 4` spectrum into `g₁` (no `τ₃` dependence) and `g₂`, with
/// `Re Perm_4(ω, ω) = g₁(ω) - g₂(ω)`; the returned `g₂` amplitudes carry that sign.
pub fn g_parts_k4(
    components: &[FrequencyComponent],
) -> Result<(Vec<FrequencyComponent>, Vec<FrequencyComponent>)> {
    if let Some(c) = components.iter().find(|c| c.plus.len() != 4) {
        return Err(Error::LengthMismatch {
            what: "component",
            expected: 4,
            got: c.plus.len(),
        });
    }
    let (g1, g2): (Vec<_>, Vec<_>) = components.iter().cloned().partition(|c| c.plus[2] == 0);
    let g2 = g2
        .into_iter()
        .map(|mut c| {
            c.amplitude = -c.amplitude;
            c
        })
        .collect();
    Ok((g1, g2))
}

/// Distinct frequency values, ascending, deduplicated within `tol`.
pub fn distinct_frequencies(components: &[FrequencyComponent], tol: f64) -> Vec<f64> {
    let mut f: Vec<f64> = components.iter().map(|c| c.frequency).collect();
    f.sort_by(f64::total_cmp);
    f.dedup_by(|a, b| (*a - *b).abs() <= tol);
    f
}

/// Adds components of equal frequency as phasors. A zero-frequency result is
/// reported with phase 0 and its (signed) constant value as amplitude.
pub fn merge_components(components: &[FrequencyComponent], tol: f64) -> Vec<FrequencyComponent> {
    let mut out: Vec<(f64, Complex64, Vec<i8>)> = Vec::new();
    for c in components {
        let phasor = Complex64::from_polar(c.amplitude, c.phase);
        match out.iter_mut().find(|(f, _, _)| (f - c.frequency).abs() <= tol) {
            Some(slot) => slot.1 += phasor,
            None => out.push((c.frequency, phasor, c.plus.clone())),
        }
    }
    out.into_iter()
        .filter(|(_, z, _)| z.norm() > 1e-12)
        .map(|(frequency, z, plus)| {
            if frequency.abs() <= tol {
                FrequencyComponent { frequency: 0.0, phase: 0.0, amplitude: z.re, plus }
            } else {
                FrequencyComponent { frequency, phase: z.arg(), amplitude: z.norm(), plus }
            }
        })
        .collect()
}
