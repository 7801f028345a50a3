//! The displaced Gaussian lattice sum
//!
//! ```text
//! y_a(s) = Σ_k exp(-(k + a)² / s²)
//! ```
//!
//! evaluated through one of two series. The direct series converges fast for
//! small `s`; its Poisson dual
//!
//! ```text
//! y_a(s) = √π·s·[1 + 2 Σ_{k≥1} exp(-π²s²k²)·cos(2πka)]
//! ```
//!
//! converges fast for large `s`. The two decay rates meet at `s = 1/√π`,
//! which is where [`eval_auto`] switches between them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

pub const SQRT_PI: f64 = 1.772_453_850_905_516;

/// `1/√π`, the fixed point of `s ↦ 1/(πs)`.
pub const SELF_DUAL_SCALE: f64 = 0.564_189_583_547_756_3;

/// Upper limit on the one-sided truncation index of either series.
pub const MAX_TERMS: usize = 1_000_000;

/// Smallest tolerance accepted by [`DisplacedSumInput`].
pub const MIN_TOL: f64 = 4.0 * f64::EPSILON;

/// `√π·s`, the integral of `exp(-x²/s²)` over the real line.
pub fn poisson_integral(s: f64) -> Result<f64> {
    check_scale(s)?;
    Ok(SQRT_PI * s)
}

/// Maps any finite displacement onto `[0, 0.5]` without changing the sum.
///
/// The sum is even and has period 1 in `a`, so `a` reduces to
/// `min(frac, 1 - frac)` with `frac = |a| mod 1`.
pub fn canonicalize_displacement(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::domain(format!(
            "displacement must be finite, got {a}"
        )));
    }
    let frac = a.abs() % 1.0;
    Ok(frac.min(1.0 - frac))
}

fn check_scale(s: f64) -> Result<()> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::domain(format!("scale must be >= 0, got {s}")));
    }
    if s.is_infinite() {
        return Err(Error::domain("scale must be finite"));
    }
    Ok(())
}

fn check_positive_scale(s: f64) -> Result<()> {
    check_scale(s)?;
    if s == 0.0 {
        return Err(Error::domain("scale must be > 0"));
    }
    Ok(())
}

/// Validated `(a, s, tol)` triple. The displacement is stored canonicalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacedSumInput {
    a: f64,
    s: f64,
    tol: f64,
}

impl DisplacedSumInput {
    pub fn new(a: f64, s: f64, tol: f64) -> Result<Self> {
        let a = canonicalize_displacement(a)?;
        check_scale(s)?;
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::domain(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        if tol < MIN_TOL {
            return Err(Error::ToleranceTooSmall {
                tol,
                floor: MIN_TOL,
            });
        }
        Ok(Self { a, s, tol })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Sum over `exp(-(k + a)²/s²)`.
    Direct,
    /// Poisson-dual sum over `exp(-π²s²k²)·cos(2πka)`.
    Transformed,
}

impl Method {
    /// The representation [`eval_auto`] picks at scale `s`.
    pub fn for_scale(s: f64) -> Self {
        if s <= SELF_DUAL_SCALE {
            Method::Direct
        } else {
            Method::Transformed
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Transformed => "transformed",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub value: f64,
    pub method: Method,
    /// One-sided truncation index `K`.
    pub terms: usize,
    /// Certified bound on the discarded tail.
    pub truncation_bound: f64,
}

/// Bound on `Σ_{j≥0} exp(-(x + j)²/c)` for `x ≥ 0`, using
/// `(x + j)² ≥ x² + j(2x + 1)` to dominate the tail by a geometric series.
fn gaussian_tail(x: f64, c: f64) -> f64 {
    let head = (-x * x / c).exp();
    if head == 0.0 {
        return 0.0;
    }
    head / -(-(2.0 * x + 1.0) / c).exp_m1()
}

fn direct_tail(a: f64, s: f64, k: usize) -> f64 {
    let c = s * s;
    let x = (k + 1) as f64;
    gaussian_tail(x + a, c) + gaussian_tail(x - a, c)
}

fn transformed_tail(s: f64, k: usize) -> f64 {
    let ps = PI * s;
    2.0 * SQRT_PI * s * gaussian_tail((k + 1) as f64, 1.0 / (ps * ps))
}

/// Certified bound on what truncating `method` at `k` discards for displacement `a`.
pub fn tail_bound(method: Method, a: f64, s: f64, k: usize) -> f64 {
    match method {
        Method::Direct => direct_tail(a, s, k),
        Method::Transformed => transformed_tail(s, k),
    }
}

/// One-sided truncation index for `method` at scale `s`.
///
/// Starts from the closed form `ceil(c·sqrt(ln(3/tol))) + 1`, with decay scale
/// `c = s` (direct) or `c = 1/(πs)` (transformed), then steps up while the
/// geometric tail bound (worst case over `a ∈ [0, 0.5]`) still exceeds `tol`.
pub fn truncation_terms(method: Method, s: f64, tol: f64) -> Result<usize> {
    check_positive_scale(s)?;
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let budget = (3.0 / tol).ln().max(0.0).sqrt();
    let decay = match method {
        Method::Direct => s,
        Method::Transformed => 1.0 / (PI * s),
    };
    let start = (decay * budget).ceil() + 1.0;
    let cap_error = |k: f64| Error::TruncationCap {
        s,
        tol,
        k,
        cap: MAX_TERMS,
    };
    if start.is_nan() || start > MAX_TERMS as f64 {
        return Err(cap_error(start));
    }
    let mut k = start as usize;
    while tail_bound(method, 0.5, s, k) > tol {
        k += 1;
        if k > MAX_TERMS {
            return Err(cap_error(k as f64));
        }
    }
    Ok(k)
}

fn limit_at_zero(a: f64) -> EvalReport {
    EvalReport {
        value: if a == 0.0 { 1.0 } else { 0.0 },
        method: Method::Direct,
        terms: 0,
        truncation_bound: 0.0,
    }
}

/// Sums `exp(-(k + a)²/s²)` for `|k| ≤ K` in the order `k = 0, 1, -1, 2, -2, …`.
pub fn eval_direct(input: &DisplacedSumInput) -> Result<EvalReport> {
    let (a, s) = (input.a, input.s);
    if s == 0.0 {
        return Ok(limit_at_zero(a));
    }
    let k = truncation_terms(Method::Direct, s, input.tol)?;
    let term = |x: f64| {
        let z = x / s;
        (-z * z).exp()
    };
    let mut acc = CompensatedSum::new();
    acc += term(a);
    for j in 1..=k {
        let j = j as f64;
        acc += term(j + a);
        acc += term(a - j);
    }
    Ok(EvalReport {
        value: acc.value(),
        method: Method::Direct,
        terms: k,
        truncation_bound: direct_tail(a, s, k),
    })
}

/// `1 + 2 Σ_{j=1}^{K} exp(-(πsj)²)·cos(2πja)`, the bracket of the dual series.
fn dual_bracket(a: f64, s: f64, k: usize) -> f64 {
    let ps = PI * s;
    let mut acc = CompensatedSum::new();
    acc += 1.0;
    for j in 1..=k {
        let jf = j as f64;
        let z = ps * jf;
        let weight = (-z * z).exp();
        if weight == 0.0 {
            break;
        }
        let phase = (jf * a).fract();
        acc += 2.0 * weight * (2.0 * PI * phase).cos();
    }
    acc.value()
}

/// Evaluates the Poisson-dual series. Requires `s > 0`.
pub fn eval_transformed(input: &DisplacedSumInput) -> Result<EvalReport> {
    let (a, s) = (input.a, input.s);
    if s == 0.0 {
        return Err(Error::domain("transformed series needs s > 0"));
    }
    let k = truncation_terms(Method::Transformed, s, input.tol)?;
    // The exact value is positive; cancellation for a near 1/2 at small s
    // can leave a rounding-level negative residue.
    let value = (SQRT_PI * s * dual_bracket(a, s, k)).max(0.0);
    Ok(EvalReport {
        value,
        method: Method::Transformed,
        terms: k,
        truncation_bound: transformed_tail(s, k),
    })
}

/// Picks the cheaper representation: direct for `s ≤ 1/√π`, transformed above.
pub fn eval_auto(input: &DisplacedSumInput) -> Result<EvalReport> {
    match Method::for_scale(input.s) {
        Method::Direct => eval_direct(input),
        Method::Transformed => eval_transformed(input),
    }
}

pub fn eval_with(method: Method, input: &DisplacedSumInput) -> Result<EvalReport> {
    match method {
        Method::Direct => eval_direct(input),
        Method::Transformed => eval_transformed(input),
    }
}

/// `y_0(s)` through [`eval_auto`].
pub fn y0(s: f64, tol: f64) -> Result<f64> {
    Ok(eval_auto(&DisplacedSumInput::new(0.0, s, tol)?)?.value)
}

/// `y_a(s)` through [`eval_auto`].
pub fn y(a: f64, s: f64, tol: f64) -> Result<f64> {
    Ok(eval_auto(&DisplacedSumInput::new(a, s, tol)?)?.value)
}

/// The deficit `e(s) = √π·s + 1 - y_0(s)`.
pub fn e_of_s(s: f64, tol: f64) -> Result<f64> {
    check_scale(s)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(SQRT_PI * s + 1.0 - y0(s, tol)?)
}

/// `ln(y_0(s) - √π·s)`, i.e. `ln(1 - e(s))`.
///
/// For large `s` the excess drops below one ulp of `y_0` and eventually below
/// the smallest subnormal, so above the self-dual point it is assembled in
/// log space from the dual series instead of by subtraction.
pub fn ln_excess_over_integral(s: f64, tol: f64) -> Result<f64> {
    check_positive_scale(s)?;
    if s <= SELF_DUAL_SCALE {
        let input = DisplacedSumInput::new(0.0, s, tol)?;
        return Ok((eval_direct(&input)?.value - SQRT_PI * s).ln());
    }
    let k = truncation_terms(Method::Transformed, s, tol)?;
    let ps = PI * s;
    let q = ps * ps;
    let mut acc = CompensatedSum::new();
    for j in 1..=k {
        let jf = j as f64;
        let w = (-q * (jf * jf - 1.0)).exp();
        if w == 0.0 {
            break;
        }
        acc += w;
    }
    Ok((2.0 * SQRT_PI * s).ln() - q + acc.value().ln())
}

/// `y_0(s) - y_{1/2}(s)`.
///
/// Above the self-dual point the dual series of the difference keeps only odd
/// `k`, `4√π·s·Σ_{k odd} exp(-π²s²k²)`, which avoids cancelling two nearly
/// equal sums.
pub fn diff0_half(s: f64, tol: f64) -> Result<f64> {
    check_scale(s)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    if s <= SELF_DUAL_SCALE {
        let full = eval_direct(&DisplacedSumInput::new(0.0, s, tol)?)?.value;
        let half = eval_direct(&DisplacedSumInput::new(0.5, s, tol)?)?.value;
        return Ok((full - half).clamp(0.0, 1.0));
    }
    let k = truncation_terms(Method::Transformed, s, tol / 2.0)?;
    let ps = PI * s;
    let mut acc = CompensatedSum::new();
    for j in (1..=k).step_by(2) {
        let z = ps * j as f64;
        acc += (-z * z).exp();
    }
    Ok((4.0 * SQRT_PI * s * acc.value()).clamp(0.0, 1.0))
}

/// `(I(s), I(s) + 2)`, the open interval that contains `y_0(s)`.
pub fn bounds(s: f64) -> Result<(f64, f64)> {
    check_positive_scale(s)?;
    let lower = SQRT_PI * s;
    Ok((lower, lower + 2.0))
}
