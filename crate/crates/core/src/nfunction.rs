//! The exponential N-function `Φ(s) = e^{s²} − 1` and its Taylor truncations
//! `Φ_k(s) = Σ_{i=1}^{k} s^{2i}/i!`.
//!
//! Everything here is written in terms of `t = s²`: each law is a power series
//! in `t`. Derivatives use Horner's scheme; `Φ_k` itself is summed forward over
//! its nonnegative terms and clamped at `e^t − 1`, which keeps
//! `Φ_k ≤ Φ_{k+1} ≤ Φ` exact in floating point. The flux
//! `φ(|g|) g/|g|` is computed in its removable-singularity form
//! `(φ(s)/s)·g`, which is finite at `g = 0` for every law.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on the exponent argument `s²` for the untruncated law.
pub const DEFAULT_EXP_CAP: f64 = 700.0;

/// Largest `t` such that `e^t` is finite in f64.
const MAX_EXP_ARG: f64 = 709.78;

/// Truncation order of an energy law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(k) => write!(f, "{k}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Finite(k) => serializer.serialize_u32(*k),
            Order::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(0) => Err(serde::de::Error::custom("truncation order must be >= 1")),
            Raw::Int(k) => Ok(Order::Finite(k)),
            Raw::Str(s) if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinite") => Ok(Order::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a positive integer or \"inf\", got {s:?}"))),
        }
    }
}

/// An N-function from the family `{Φ_k} ∪ {Φ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLaw {
    pub order: Order,
    pub exp_cap: f64,
}

impl EnergyLaw {
    pub fn new(order: Order, exp_cap: f64) -> Result<Self> {
        if let Order::Finite(0) = order {
            return Err(Error::Domain("truncation order must be >= 1".into()));
        }
        if !(exp_cap > 0.0 && exp_cap <= MAX_EXP_ARG) {
            return Err(Error::Domain(format!("exp_cap must lie in (0, {MAX_EXP_ARG}], got {exp_cap}")));
        }
        Ok(Self { order, exp_cap })
    }

    /// `Φ_k`, the degree-2k truncation.
    pub fn truncated(k: u32) -> Self {
        assert!(k >= 1, "truncation order must be >= 1");
        Self { order: Order::Finite(k), exp_cap: DEFAULT_EXP_CAP }
    }

    /// The untruncated law `Φ(s) = e^{s²} − 1`.
    pub fn exponential() -> Self {
        Self { order: Order::Infinite, exp_cap: DEFAULT_EXP_CAP }
    }

    pub fn with_order(self, order: Order) -> Self {
        Self { order, ..self }
    }

    fn check_cap(&self, t: f64) -> Result<()> {
        if self.order == Order::Infinite && t > self.exp_cap {
            return Err(Error::Overflow { arg: t, cap: self.exp_cap });
        }
        Ok(())
    }

    /// `Φ(s)` or `Φ_k(s)`.
    pub fn value(&self, s: f64) -> Result<f64> {
        let t = s * s;
        self.value_sq(t)
    }

    /// The law as a function of `t = s²`.
    pub fn value_sq(&self, t: f64) -> Result<f64> {
        self.check_cap(t)?;
        Ok(match self.order {
            Order::Infinite => t.exp_m1(),
            Order::Finite(k) => truncated_sum(k, t).min(t.exp_m1()),
        })
    }

    /// `φ(s) = Φ'(s)`.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        Ok(s * self.flux_scale(s * s)?)
    }

    /// `φ(s)/s` as a function of `t = s²`; finite at zero.
    pub fn flux_scale(&self, t: f64) -> Result<f64> {
        self.check_cap(t)?;
        Ok(match self.order {
            Order::Infinite => 2.0 * t.exp(),
            Order::Finite(k) => 2.0 * exp_partial(k as i64 - 1, t),
        })
    }

    /// `φ'(s) = Φ''(s)`.
    pub fn second_derivative(&self, s: f64) -> Result<f64> {
        let t = s * s;
        self.check_cap(t)?;
        Ok(match self.order {
            Order::Infinite => 2.0 * t.exp() * (1.0 + 2.0 * t),
            Order::Finite(k) => 2.0 * exp_partial(k as i64 - 1, t) + 4.0 * t * exp_partial(k as i64 - 2, t),
        })
    }

    /// `φ(|g|)·g/|g|`, with value `0` at `g = 0`.
    pub fn flux<const D: usize>(&self, g: [f64; D]) -> Result<[f64; D]> {
        let t: f64 = g.iter().map(|c| c * c).sum();
        let scale = self.flux_scale(t)?;
        Ok(g.map(|c| scale * c))
    }

    /// Returns `(s·φ'(s)/φ(s), s·φ(s)/Φ(s))` for `s > 0`.
    pub fn ellipticity_ratios(&self, s: f64) -> Result<(f64, f64)> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("ellipticity ratios need s > 0, got {s}")));
        }
        let t = s * s;
        self.check_cap(t)?;
        Ok(match self.order {
            Order::Infinite => {
                let r1 = 1.0 + 2.0 * t;
                // Φ/t = expm1(t)/t, kept in that form for small t.
                let r2 = 2.0 * t.exp() * t / t.exp_m1();
                (r1, r2)
            }
            Order::Finite(k) => {
                let k = k as i64;
                let e1 = exp_partial(k - 1, t);
                let r1 = 1.0 + 2.0 * t * exp_partial(k - 2, t) / e1;
                let r2 = 2.0 * e1 / value_over_t(k as u32, t);
                (r1, r2)
            }
        })
    }

    /// `(flux(x) − flux(y))·(x − y)`; strictly positive for `x ≠ y`.
    pub fn monotonicity_gap<const D: usize>(&self, x: [f64; D], y: [f64; D]) -> Result<f64> {
        if x == y {
            return Ok(0.0);
        }
        let fx = self.flux(x)?;
        let fy = self.flux(y)?;
        Ok((0..D).map(|i| (fx[i] - fy[i]) * (x[i] - y[i])).sum())
    }
}

impl Default for EnergyLaw {
    fn default() -> Self {
        Self::exponential()
    }
}

/// `Σ_{j=0}^{m} t^j / j!`, zero for `m < 0`.
fn exp_partial(m: i64, t: f64) -> f64 {
    if m < 0 {
        return 0.0;
    }
    let mut acc = 1.0;
    for j in (1..=m).rev() {
        acc = 1.0 + t * acc / j as f64;
    }
    acc
}

/// `Σ_{i=1}^{k} t^i/i!` in increasing `i`; each partial sum rounds to at least
/// the previous one.
fn truncated_sum(k: u32, t: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for i in 1..=k {
        term *= t / i as f64;
        sum += term;
    }
    sum
}

/// `Φ_k(t)/t = Σ_{i=1}^{k} t^{i−1}/i!`.
fn value_over_t(k: u32, t: f64) -> f64 {
    let mut acc = 1.0;
    for i in (2..=k).rev() {
        acc = 1.0 + t * acc / i as f64;
    }
    acc
}
