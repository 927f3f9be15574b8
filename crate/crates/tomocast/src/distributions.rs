//! Prior distributions on the integer lattice and their characteristic
//! functions.
//!
//! The prior encodes the user's beliefs about how fast the hidden dynamics
//! may be; only the squared modulus of its characteristic function enters
//! the predicted evolution map. All built-in families are symmetric and
//! unimodal around `k = 0`, spanning the range from the point mass at zero
//! (characteristic function identically 1, hence unitary prediction) towards
//! the uniform limit (characteristic function collapsing onto the lattice).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A probability distribution on the integers.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorDistribution {
    /// Point mass at `k = 0`.
    Delta,
    /// `P(k) ~ exp(-a |k|)`.
    Exponential { a: f64 },
    /// Uniform on `{-m, ..., m}`.
    TruncatedUniform { m: u32 },
    /// `P(k) ~ sqrt((m+1)^2 - k^2)` on `{-m, ..., m}`.
    Semicircular { m: u32 },
    /// `P(k) ~ a / (a^2 + k^2)`.
    CauchyLorentz { a: f64 },
    /// `P(k) = 2^{-2m} C(2m, k+m)` on `{-m, ..., m}`.
    Binomial { m: u32 },
    /// `P(k) ~ exp(-a k^2)`.
    Normal { a: f64 },
    /// Arbitrary finite nonnegative weight table, normalized on
    /// construction; `weights[i]` is the probability of `support_min + i`.
    Custom { support_min: i64, weights: Vec<f64> },
}

impl PriorDistribution {
    pub fn delta() -> Self {
        PriorDistribution::Delta
    }

    pub fn exponential(a: f64) -> Result<Self> {
        check_scale(a)?;
        Ok(PriorDistribution::Exponential { a })
    }

    pub fn truncated_uniform(m: u32) -> Self {
        PriorDistribution::TruncatedUniform { m }
    }

    pub fn semicircular(m: u32) -> Self {
        PriorDistribution::Semicircular { m }
    }

    pub fn cauchy_lorentz(a: f64) -> Result<Self> {
        check_scale(a)?;
        Ok(PriorDistribution::CauchyLorentz { a })
    }

    pub fn binomial(m: u32) -> Self {
        PriorDistribution::Binomial { m }
    }

    pub fn normal(a: f64) -> Result<Self> {
        check_scale(a)?;
        Ok(PriorDistribution::Normal { a })
    }

    /// Custom prior from a finite weight table; weights must be nonnegative,
    /// finite, and not all zero. They are normalized here so brute-force
    /// enumerations downstream are exact.
    pub fn custom(support_min: i64, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Distribution("empty weight table".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::Distribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Distribution("weights sum to zero".into()));
        }
        Ok(PriorDistribution::Custom {
            support_min,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Probability mass at `k`.
    pub fn pmf(&self, k: i64) -> f64 {
        match self {
            PriorDistribution::Delta => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            PriorDistribution::Exponential { a } => {
                // (cosh a - 1)/sinh a = tanh(a/2) normalizes sum exp(-a|k|).
                (a / 2.0).tanh() * (-a * k.abs() as f64).exp()
            }
            PriorDistribution::TruncatedUniform { m } => {
                if k.unsigned_abs() <= *m as u64 {
                    1.0 / (2.0 * *m as f64 + 1.0)
                } else {
                    0.0
                }
            }
            PriorDistribution::Semicircular { m } => {
                if k.unsigned_abs() <= *m as u64 {
                    let r = (*m as f64 + 1.0).powi(2);
                    (r - (k * k) as f64).sqrt() / semicircular_norm(*m)
                } else {
                    0.0
                }
            }
            PriorDistribution::CauchyLorentz { a } => {
                (a * PI).tanh() / PI * a / (a * a + (k * k) as f64)
            }
            PriorDistribution::Binomial { m } => {
                let m = *m as i64;
                if k.abs() > m {
                    return 0.0;
                }
                // 2^{-2m} C(2m, k+m) in log space to stay finite at large m.
                let l = k + m;
                let mut ln = -2.0 * m as f64 * std::f64::consts::LN_2;
                for i in 1..=l.min(2 * m - l) {
                    ln += ((2 * m - l.min(2 * m - l) + i) as f64).ln() - (i as f64).ln();
                }
                ln.exp()
            }
            PriorDistribution::Normal { a } => {
                (-a * (k * k) as f64).exp() / theta_norm(*a)
            }
            PriorDistribution::Custom { support_min, weights } => {
                let idx = k - support_min;
                if idx < 0 || idx as usize >= weights.len() {
                    0.0
                } else {
                    weights[idx as usize]
                }
            }
        }
    }

    /// Characteristic function `phi(t) = sum_k P(k) exp(i t k)`.
    ///
    /// Closed forms are used where the family has one; the normal family is
    /// summed until the superexponential tail is exhausted. All results are
    /// exactly 2-pi-periodic and satisfy `phi(0) = 1`, `|phi| <= 1`.
    pub fn char_fn(&self, t: f64) -> Complex64 {
        match self {
            PriorDistribution::Delta => Complex64::new(1.0, 0.0),
            PriorDistribution::Exponential { a } => {
                Complex64::new((a.cosh() - 1.0) / (a.cosh() - t.cos()), 0.0)
            }
            PriorDistribution::TruncatedUniform { m } => {
                let n = 2.0 * *m as f64 + 1.0;
                let half = (t / 2.0).rem_euclid(PI);
                let s = half.sin();
                if s.abs() < 1e-7 {
                    // Removable singularity of the Dirichlet kernel: use the
                    // (exact, finite) cosine sum instead of the ratio.
                    let sum = 1.0
                        + 2.0 * (1..=*m as i64).map(|k| (k as f64 * t).cos()).sum::<f64>();
                    Complex64::new(sum / n, 0.0)
                } else {
                    Complex64::new((n * t / 2.0).sin() / (n * (t / 2.0).sin()), 0.0)
                }
            }
            PriorDistribution::Semicircular { m } => {
                let norm = semicircular_norm(*m);
                let r = (*m as f64 + 1.0).powi(2);
                let mut acc = *m as f64 + 1.0; // k = 0 term
                for k in 1..=*m as i64 {
                    acc += 2.0 * (r - (k * k) as f64).sqrt() * (k as f64 * t).cos();
                }
                Complex64::new(acc / norm, 0.0)
            }
            PriorDistribution::CauchyLorentz { a } => {
                // Exact closed form of the series: the Fourier series
                // sum_k exp(ikt)/(a^2+k^2) = (pi/a) cosh(a(pi-t))/sinh(a pi)
                // on [0, 2pi] gives phi(t) = cosh(a(pi-t))/cosh(a pi),
                // evaluated in exp form to stay stable for large a.
                let x = (PI - t.rem_euclid(2.0 * PI)).abs();
                let v = (a * (x - PI)).exp() * (1.0 + (-2.0 * a * x).exp())
                    / (1.0 + (-2.0 * a * PI).exp());
                Complex64::new(v, 0.0)
            }
            PriorDistribution::Binomial { m } => {
                Complex64::new(
                    (0.5 * (1.0 + t.cos())).powi(*m as i32),
                    0.0,
                )
            }
            PriorDistribution::Normal { a } => {
                let norm = theta_norm(*a);
                let mut acc = 1.0;
                let mut k = 1.0f64;
                loop {
                    let term = (-a * k * k).exp();
                    if term < 1e-18 {
                        break;
                    }
                    acc += 2.0 * term * (k * t).cos();
                    k += 1.0;
                }
                Complex64::new(acc / norm, 0.0)
            }
            PriorDistribution::Custom { support_min, weights } => weights
                .iter()
                .enumerate()
                .map(|(i, &w)| {
                    let k = (support_min + i as i64) as f64;
                    Complex64::from_polar(w, k * t)
                })
                .sum(),
        }
    }

    /// Smallest `K` with tail mass `sum_{|k| > K} P(k) <= eps`, computed
    /// from analytic tail bounds (never by summing heavy tails).
    pub fn tail_truncation(&self, eps: f64) -> u64 {
        assert!(eps > 0.0, "eps must be positive");
        match self {
            PriorDistribution::Delta => 0,
            PriorDistribution::TruncatedUniform { m }
            | PriorDistribution::Semicircular { m }
            | PriorDistribution::Binomial { m } => *m as u64,
            PriorDistribution::Custom { support_min, weights } => {
                let lo = support_min.unsigned_abs();
                let hi = (support_min + weights.len() as i64 - 1).unsigned_abs();
                lo.max(hi)
            }
            PriorDistribution::Exponential { a } => {
                // Geometric bound: tail(K) <= 2 tanh(a/2) e^{-aK}/(1-e^{-a}).
                let c = 2.0 * (a / 2.0).tanh() / (1.0 - (-a).exp());
                if c <= eps {
                    return 0;
                }
                let k = ((c / eps).ln() / a).ceil();
                if k >= u64::MAX as f64 {
                    u64::MAX
                } else {
                    k.max(0.0) as u64
                }
            }
            PriorDistribution::CauchyLorentz { a } => {
                // tail(K) <= tanh(a pi) (2/pi) (pi/2 - atan(K/a)).
                let c = (a * PI).tanh();
                let theta = PI * eps / (2.0 * c);
                if theta >= PI / 2.0 {
                    return 0;
                }
                let k = a / theta.tan();
                if k >= u64::MAX as f64 {
                    u64::MAX
                } else {
                    k.ceil() as u64
                }
            }
            PriorDistribution::Normal { a } => {
                // Ratio bound: sum_{k>K} e^{-ak^2} <= e^{-a(K+1)^2} /
                // (1 - e^{-a(2K+3)}).
                let norm = theta_norm(*a);
                let mut k = 0u64;
                loop {
                    let head = (-a * ((k + 1) * (k + 1)) as f64).exp();
                    let ratio = 1.0 - (-a * (2 * k + 3) as f64).exp();
                    if 2.0 * head / (ratio * norm) <= eps {
                        return k;
                    }
                    k += 1;
                }
            }
        }
    }

    /// `n` i.i.d. draws, deterministic per seed (inverse-CDF walk outward
    /// from zero for the symmetric families).
    pub fn sample(&self, n: usize, seed: u64) -> Vec<i64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    /// `n` i.i.d. draws from a caller-provided generator.
    pub fn sample_with(&self, n: usize, rng: &mut impl Rng) -> Vec<i64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    fn draw(&self, rng: &mut impl Rng) -> i64 {
        if let PriorDistribution::Delta = self {
            return 0;
        }
        let u: f64 = rng.random();
        if let PriorDistribution::Custom { support_min, weights } = self {
            let mut cum = 0.0;
            for (i, w) in weights.iter().enumerate() {
                cum += w;
                if u < cum {
                    return support_min + i as i64;
                }
            }
            return support_min + weights.len() as i64 - 1;
        }
        // Symmetric families: walk 0, 1, -1, 2, -2, ... The cap only
        // matters for the heavy Cauchy-Lorentz tail, where reaching it has
        // probability below 1e-8 per draw.
        let mut cum = self.pmf(0);
        if u < cum {
            return 0;
        }
        let mut k = 1i64;
        while k < 1 << 27 {
            cum += self.pmf(k);
            if u < cum {
                return k;
            }
            cum += self.pmf(-k);
            if u < cum {
                return -k;
            }
            k += 1;
        }
        k
    }

    /// Support half-width for finitely supported families, `None` otherwise.
    pub fn finite_support(&self) -> Option<u64> {
        match self {
            PriorDistribution::Delta
            | PriorDistribution::TruncatedUniform { .. }
            | PriorDistribution::Semicircular { .. }
            | PriorDistribution::Binomial { .. }
            | PriorDistribution::Custom { .. } => Some(self.tail_truncation(f64::MIN_POSITIVE)),
            _ => None,
        }
    }
}

fn check_scale(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Distribution(format!(
            "scale parameter must be positive and finite, got {a}"
        )));
    }
    Ok(())
}

/// Normalizer `sum_{l=-m}^{m} sqrt((m+1)^2 - l^2)`, cached per `m`.
fn semicircular_norm(m: u32) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u32, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().unwrap().get(&m) {
        return v;
    }
    let r = (m as f64 + 1.0).powi(2);
    let v = (m as f64 + 1.0)
        + 2.0 * (1..=m as i64).map(|l| (r - (l * l) as f64).sqrt()).sum::<f64>();
    cache.lock().unwrap().insert(m, v);
    v
}

/// Theta-function normalizer `sum_k exp(-a k^2)`.
fn theta_norm(a: f64) -> f64 {
    let mut acc = 1.0;
    let mut k = 1.0f64;
    loop {
        let term = (-a * k * k).exp();
        if term < 1e-18 {
            return acc;
        }
        acc += 2.0 * term;
        k += 1.0;
    }
}
