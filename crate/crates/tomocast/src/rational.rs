//! Rational structure of the measurement-time grid.
//!
//! The admissible-Hamiltonian family is a lattice exactly when all time
//! ratios `t_j / t_1` are rational. Finite-precision times can never prove
//! irrationality, so the verdict here is a modeling choice controlled by two
//! knobs: the largest denominator we are willing to accept (`q_max`) and the
//! relative error tolerance of the rationalization (`tol`).

use crate::error::{Error, Result};

/// Default denominator bound. Experimental clocks justify small
/// denominators; a huge `q_max` makes `gamma` enormous and the predicted map
/// oscillate unphysically fast.
pub const DEFAULT_Q_MAX: u64 = 64;

/// Default relative tolerance for accepting a convergent.
pub const DEFAULT_RATIONAL_TOL: f64 = 1e-9;

/// Largest LCM of denominators the branch search downstream will accept.
pub const MAX_LCM: u64 = 1_000_000;

/// Outcome of rationalizing a time grid.
#[derive(Debug, Clone, PartialEq)]
pub enum RationalStructure {
    /// All ratios `t_j / t_1` accepted as `p_j / q_j` within tolerance.
    Rational {
        /// Coprime `(p_j, q_j)` per time, with `(p_1, q_1) = (1, 1)`.
        ratios: Vec<(u64, u64)>,
        /// `q = LCM{q_j}`.
        lcm_q: u64,
        /// Lattice frequency `gamma = q / t_1` (1/seconds).
        gamma: f64,
    },
    /// At least one ratio had no acceptable convergent: the admissible
    /// family is treated as the singleton of the extracted Hamiltonian.
    Irrational,
}

impl RationalStructure {
    pub fn is_rational(&self) -> bool {
        matches!(self, RationalStructure::Rational { .. })
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            RationalStructure::Rational { gamma, .. } => Some(*gamma),
            RationalStructure::Irrational => None,
        }
    }

    pub fn lcm_q(&self) -> Option<u64> {
        match self {
            RationalStructure::Rational { lcm_q, .. } => Some(*lcm_q),
            RationalStructure::Irrational => None,
        }
    }

    pub fn ratios(&self) -> Option<&[(u64, u64)]> {
        match self {
            RationalStructure::Rational { ratios, .. } => Some(ratios),
            RationalStructure::Irrational => None,
        }
    }
}

/// Best continued-fraction convergent `p/q` of `x > 0` with `q <= q_max`.
///
/// Convergents are produced by the standard recurrence and are coprime by
/// construction; the last one whose denominator fits the bound is returned.
/// `None` is reserved and never produced for valid input, since `q = 1` is
/// always admissible.
pub fn continued_fraction(x: f64, q_max: u64) -> Option<(u64, u64)> {
    if !(x > 0.0) || !x.is_finite() || q_max == 0 {
        return None;
    }
    let (mut h_prev, mut h): (u64, u64) = (1, x.floor() as u64);
    let (mut k_prev, mut k): (u64, u64) = (0, 1);
    let mut frac = x - x.floor();
    loop {
        if frac <= 1e-14 * x.max(1.0) {
            break;
        }
        let next = 1.0 / frac;
        let a = next.floor();
        if a >= u64::MAX as f64 {
            break;
        }
        let a_int = a as u64;
        let (h_new, k_new) = match (
            a_int.checked_mul(h).and_then(|v| v.checked_add(h_prev)),
            a_int.checked_mul(k).and_then(|v| v.checked_add(k_prev)),
        ) {
            (Some(hn), Some(kn)) => (hn, kn),
            _ => break,
        };
        if k_new > q_max {
            break;
        }
        (h_prev, k_prev) = (h, k);
        (h, k) = (h_new, k_new);
        frac = next - a;
    }
    Some((h, k))
}

/// Rationalize a strictly increasing positive time grid.
///
/// Accepts the grid as rational when every ratio `t_j / t_1` has a
/// convergent `p_j / q_j` with `q_j <= q_max` and relative error at most
/// `tol`. The accepted ratios must be strictly increasing; near-duplicate
/// times that collapse onto the same convergent yield `Irrational`.
pub fn rationalize(times: &[f64], q_max: u64, tol: f64) -> Result<RationalStructure> {
    if times.is_empty() {
        return Err(Error::Config("empty time grid".into()));
    }
    if q_max == 0 || !(tol > 0.0) {
        return Err(Error::Config("q_max and tol must be positive".into()));
    }
    if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::TimeOrder);
    }
    let t1 = times[0];
    let mut ratios = Vec::with_capacity(times.len());
    ratios.push((1u64, 1u64));
    for &t in &times[1..] {
        let s = t / t1;
        let Some((p, q)) = continued_fraction(s, q_max) else {
            return Ok(RationalStructure::Irrational);
        };
        if (s - p as f64 / q as f64).abs() > tol * s {
            return Ok(RationalStructure::Irrational);
        }
        ratios.push((p, q));
    }
    for w in ratios.windows(2) {
        let (p0, q0) = w[0];
        let (p1, q1) = w[1];
        // p0/q0 < p1/q1 as integers, avoiding float comparison.
        if (p0 as u128) * (q1 as u128) >= (p1 as u128) * (q0 as u128) {
            return Ok(RationalStructure::Irrational);
        }
    }
    let mut lcm_q: u64 = 1;
    for &(_, q) in &ratios {
        lcm_q = lcm(lcm_q, q).ok_or(Error::Overflow)?;
    }
    Ok(RationalStructure::Rational {
        ratios,
        lcm_q,
        gamma: lcm_q as f64 / t1,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}
