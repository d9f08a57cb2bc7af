use crate::error::{Error, Result};
use crate::rate::{BiphotonSpectrum, RateKernel};

struct LatticeTerm {
    wc: f64,
    ws: f64,
    p: Vec<i32>,
    q: Vec<i32>,
}

/// Evaluates the full rate on the lattice `τ = h·n`, `n ∈ [-N, N]^k`.
///
/// Every plane wave depends on `τ` only through the integers `n·(2K₊)` and
/// `n·(2K₋)`, so carriers and envelopes come from shared lookup tables and the
/// innermost axis is swept as a row.
pub(crate) struct LatticeEvaluator {
    k: usize,
    half: i32,
    terms: Vec<LatticeTerm>,
    cos_env: Vec<f64>,
    sin_env: Vec<f64>,
    a_offset: i32,
    minus_env: Vec<f64>,
    b_offset: i32,
}

impl LatticeEvaluator {
    pub(crate) fn new(
        kern: &RateKernel,
        theta: &[f64],
        spec: &BiphotonSpectrum,
        step: f64,
        half: i32,
    ) -> Result<Self> {
        if theta.len() != kern.k() {
            return Err(Error::LengthMismatch {
                what: "theta",
                expected: kern.k(),
                got: theta.len(),
            });
        }
        let terms: Vec<LatticeTerm> = kern
            .folded_terms()
            .map(|(weight, arg, p, q)| {
                let offset: f64 = arg + p.iter().zip(theta).map(|(&x, t)| 0.5 * f64::from(x) * t).sum::<f64>();
                LatticeTerm {
                    wc: weight * offset.cos(),
                    ws: weight * offset.sin(),
                    p,
                    q,
                }
            })
            .collect();
        let reach = |f: &dyn Fn(&LatticeTerm) -> &Vec<i32>| {
            terms
                .iter()
                .map(|t| f(t).iter().map(|x| x.abs()).sum::<i32>())
                .max()
                .unwrap_or(0)
                * half
        };
        let a_max = reach(&|t| &t.p);
        let b_max = reach(&|t| &t.q);
        let (w0, dp, dm) = (spec.omega0(), spec.d_omega_plus(), spec.d_omega_minus());
        let mut cos_env = Vec::with_capacity((2 * a_max + 1) as usize);
        let mut sin_env = Vec::with_capacity((2 * a_max + 1) as usize);
        for a in -a_max..=a_max {
            // τ·K₊ = h·a/2
            let ha = step * f64::from(a);
            let env = (-0.5 * ha * ha * dp * dp).exp();
            let (s, c) = (w0 * ha).sin_cos();
            cos_env.push(c * env);
            sin_env.push(s * env);
        }
        let minus_env = (-b_max..=b_max)
            .map(|b| {
                let hb = step * f64::from(b);
                (-0.125 * hb * hb * dm * dm).exp()
            })
            .collect();
        Ok(Self {
            k: kern.k(),
            half,
            terms,
            cos_env,
            sin_env,
            a_offset: a_max,
            minus_env,
            b_offset: b_max,
        })
    }

    /// Rate at an arbitrary lattice point.
    #[cfg(test)]
    pub(crate) fn at(&self, n: &[i32]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let a: i32 = n.iter().zip(&t.p).map(|(x, y)| x * y).sum();
                let b: i32 = n.iter().zip(&t.q).map(|(x, y)| x * y).sum();
                let ia = (a + self.a_offset) as usize;
                (t.wc * self.cos_env[ia] - t.ws * self.sin_env[ia]) * self.minus_env[(b + self.b_offset) as usize]
            })
            .sum()
    }

    /// Calls `visit(n, rate)` for every lattice point in lexicographic order.
    pub(crate) fn sweep(&self, mut visit: impl FnMut(&[i32], f64)) {
        let k = self.k;
        let width = (2 * self.half + 1) as usize;
        let last = k - 1;
        let mut prefix = vec![-self.half; last];
        let mut n = vec![0i32; k];
        let mut row = vec![0.0; width];
        let prefixes = width.pow(last as u32);
        for _ in 0..prefixes {
            row.iter_mut().for_each(|r| *r = 0.0);
            for t in &self.terms {
                let a0: i32 = prefix.iter().zip(&t.p).map(|(x, y)| x * y).sum();
                let b0: i32 = prefix.iter().zip(&t.q).map(|(x, y)| x * y).sum();
                let (pl, ql) = (t.p[last], t.q[last]);
                let mut ia = (a0 - pl * self.half + self.a_offset) as isize;
                let mut ib = (b0 - ql * self.half + self.b_offset) as isize;
                for r in row.iter_mut() {
                    let (ua, ub) = (ia as usize, ib as usize);
                    *r += (t.wc * self.cos_env[ua] - t.ws * self.sin_env[ua]) * self.minus_env[ub];
                    ia += pl as isize;
                    ib += ql as isize;
                }
            }
            n[..last].copy_from_slice(&prefix);
            for (j, &r) in row.iter().enumerate() {
                n[last] = j as i32 - self.half;
                visit(&n, r);
            }
            for slot in prefix.iter_mut().rev() {
                *slot += 1;
                if *slot <= self.half {
                    break;
                }
                *slot = -self.half;
            }
        }
    }
}
