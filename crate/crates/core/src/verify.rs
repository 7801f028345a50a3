//! Reference oracle and the numerical checks that certify [`crate::theta`].
//!
//! The oracle deliberately shares nothing with the production evaluators but
//! the compensated accumulator: fixed, generous truncation, terms summed in
//! ascending magnitude, and a second representation cross-check at large `s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::sum::CompensatedSum;
use crate::theta::{
    self, diff0_half, e_of_s, eval_direct, eval_transformed, ln_excess_over_integral,
    DisplacedSumInput, Method, SQRT_PI,
};

/// Tolerance handed to the evaluators inside checks.
pub const EVAL_TOL: f64 = 1e-15;

/// Relative floating-point slack allowed on top of certified truncation bounds.
pub const ROUNDING_SLACK: f64 = 1e-13;

pub const ORACLE_MIN_TERMS: usize = 64;
pub const ORACLE_TERMS_PER_SCALE: f64 = 40.0;
pub const ORACLE_DUAL_TERMS: usize = 64;
/// Above this scale the oracle also sums the dual series and returns it.
pub const ORACLE_CROSS_CHECK_SCALE: f64 = 2.0;
pub const ORACLE_AGREEMENT: f64 = 1e-13;

pub const SMALL_SCALE_RATIO_THRESHOLD: f64 = 0.01;
pub const LARGE_SCALE_THRESHOLD: f64 = 0.006;
pub const SMALL_SCALE_LIMIT_POINT: f64 = 0.05;

fn oracle_direct(a: f64, s: f64) -> f64 {
    let k = (ORACLE_TERMS_PER_SCALE * s)
        .ceil()
        .max(ORACLE_MIN_TERMS as f64) as i64;
    let mut terms: Vec<f64> = (-k..=k)
        .map(|j| {
            let x = (j as f64 + a) / s;
            (-x * x).exp()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.into_iter().collect::<CompensatedSum>().value()
}

fn oracle_dual(a: f64, s: f64) -> f64 {
    let mut terms: Vec<f64> = (1..=ORACLE_DUAL_TERMS)
        .map(|k| {
            let k = k as f64;
            2.0 * (-PI * PI * s * s * k * k).exp() * (2.0 * PI * k * a).cos()
        })
        .collect();
    terms.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    terms.push(1.0);
    SQRT_PI * s * terms.into_iter().collect::<CompensatedSum>().value()
}

/// Brute-force `y_a(s)` for ground truth in checks and tests.
///
/// `a` is canonicalized first. For `s > 2` both representations are summed
/// and must agree to `1e-13` relative; the dual value is returned.
pub fn oracle_eval(a: f64, s: f64) -> Result<f64> {
    let a = theta::canonicalize_displacement(a)?;
    if s.is_nan() || s < 0.0 || s.is_infinite() {
        return Err(Error::Domain(format!(
            "scale must be finite and >= 0, got {s}"
        )));
    }
    if s == 0.0 {
        return Ok(if a == 0.0 { 1.0 } else { 0.0 });
    }
    let direct = oracle_direct(a, s);
    if s <= ORACLE_CROSS_CHECK_SCALE {
        return Ok(direct);
    }
    let dual = oracle_dual(a, s);
    if (direct - dual).abs() > ORACLE_AGREEMENT * dual.abs() {
        return Err(Error::OracleMismatch {
            a,
            s,
            direct,
            transformed: dual,
        });
    }
    Ok(dual)
}

/// How a [`CheckReport`]'s `worst_residual` is compared to its `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Passes iff `worst_residual <= threshold`.
    AtMost,
    /// Passes iff `worst_residual < threshold`.
    Below,
    /// `worst_residual` is the natural log of the smallest margin, which may
    /// be far below the smallest representable double. Passes iff it is
    /// above `threshold` (negative infinity), i.e. every margin is positive.
    LogMarginPositive,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::AtMost => "at_most",
            Criterion::Below => "below",
            Criterion::LogMarginPositive => "log_margin_positive",
        }
    }

    fn passes(self, residual: f64, threshold: f64) -> bool {
        match self {
            Criterion::AtMost => residual <= threshold,
            Criterion::Below => residual < threshold,
            Criterion::LogMarginPositive => residual > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_residual: f64,
    /// Scale `s` at which `worst_residual` occurred.
    pub worst_point: f64,
    /// Displacement, for checks that sweep a fixed `a`.
    pub displacement: Option<f64>,
    pub threshold: f64,
    pub criterion: Criterion,
}

/// Folds per-point residuals into a report, keeping the largest one.
struct Worst {
    residual: f64,
    point: f64,
}

impl Worst {
    fn new() -> Self {
        Self {
            residual: f64::NEG_INFINITY,
            point: f64::NAN,
        }
    }

    fn smallest() -> Self {
        Self {
            residual: f64::INFINITY,
            point: f64::NAN,
        }
    }

    fn max(&mut self, residual: f64, point: f64) {
        // NaN residuals must surface as the worst.
        if residual.is_nan() || residual > self.residual {
            self.residual = residual;
            self.point = point;
        }
    }

    fn min(&mut self, residual: f64, point: f64) {
        if residual.is_nan() || residual < self.residual {
            self.residual = residual;
            self.point = point;
        }
    }

    fn report(self, name: &str, criterion: Criterion, threshold: f64) -> CheckReport {
        CheckReport {
            name: name.to_string(),
            passed: criterion.passes(self.residual, threshold),
            worst_residual: self.residual,
            worst_point: self.point,
            displacement: None,
            threshold,
            criterion,
        }
    }
}

fn positive_points(grid: &GridSpec) -> Result<Vec<f64>> {
    if grid.start() <= 0.0 {
        return Err(Error::InvalidGrid(format!(
            "check grids must be strictly positive, got start {}",
            grid.start()
        )));
    }
    Ok(grid.points())
}

fn input(a: f64, s: f64) -> Result<DisplacedSumInput> {
    DisplacedSumInput::new(a, s, EVAL_TOL)
}

/// Worst `|y_0(s) - √π·s·y_0(1/(πs))| / (1 + y_0(s))` over `grid`, both
/// sides summed directly.
pub fn check_functional_equation(grid: &GridSpec, tol: f64) -> Result<CheckReport> {
    let mut worst = Worst::new();
    for s in positive_points(grid)? {
        let lhs = eval_direct(&input(0.0, s)?)?.value;
        let dual = eval_direct(&input(0.0, 1.0 / (PI * s))?)?.value;
        let rhs = SQRT_PI * s * dual;
        worst.max((lhs - rhs).abs() / (1.0 + lhs), s);
    }
    Ok(worst.report("functional_equation", Criterion::AtMost, tol))
}

/// Worst excess of `|direct - transformed|` over the two truncation bounds.
pub fn check_poisson_identity(a: f64, grid: &GridSpec, tol: f64) -> Result<CheckReport> {
    let mut worst = Worst::new();
    for s in positive_points(grid)? {
        let i = input(a, s)?;
        let d = eval_direct(&i)?;
        let t = eval_transformed(&i)?;
        let excess = (d.value - t.value).abs() - (d.truncation_bound + t.truncation_bound);
        worst.max(excess.max(0.0), s);
    }
    let mut report = worst.report("poisson_identity", Criterion::AtMost, tol);
    report.displacement = Some(theta::canonicalize_displacement(a)?);
    Ok(report)
}

/// Lower and upper margins of `y_0(s)` inside `(√π·s, √π·s + 2)`; the lower
/// one as a logarithm.
pub fn bound_margins(s: f64) -> Result<(f64, f64)> {
    let ln_lower = ln_excess_over_integral(s, EVAL_TOL)?;
    // y_0 - √π·s < 1 always, so the upper margin is 2 minus it
    let upper = 2.0 - ln_lower.exp();
    Ok((ln_lower, upper))
}

/// Strict `√π·s < y_0(s) < √π·s + 2` at every grid point. `worst_residual`
/// is the log of the smallest margin.
pub fn check_bounds(grid: &GridSpec) -> Result<CheckReport> {
    let mut worst = Worst::smallest();
    for s in positive_points(grid)? {
        let (ln_lower, upper) = bound_margins(s)?;
        worst.min(ln_lower.min(upper.ln()), s);
    }
    Ok(worst.report("bounds", Criterion::LogMarginPositive, f64::NEG_INFINITY))
}

/// `0 < e(s) < 1` at every grid point, as a log margin.
pub fn check_deficit_range(grid: &GridSpec) -> Result<CheckReport> {
    let mut worst = Worst::smallest();
    for s in positive_points(grid)? {
        let e = e_of_s(s, EVAL_TOL)?;
        let ln_upper = ln_excess_over_integral(s, EVAL_TOL)?;
        worst.min(e.ln().min(ln_upper), s);
    }
    Ok(worst.report(
        "deficit_range",
        Criterion::LogMarginPositive,
        f64::NEG_INFINITY,
    ))
}

/// `|e(s)/(√π·s) - 1|` over `grid`.
pub fn check_small_scale_regime(grid: &GridSpec, threshold: f64) -> Result<CheckReport> {
    let mut worst = Worst::new();
    for s in positive_points(grid)? {
        let e = e_of_s(s, EVAL_TOL)?;
        worst.max((e / (SQRT_PI * s) - 1.0).abs(), s);
    }
    Ok(worst.report("small_scale_regime", Criterion::AtMost, threshold))
}

/// `|e(s) - 1|` over `grid`, which must also shrink strictly from point to
/// point. A non-monotone approach reports an infinite residual.
pub fn check_large_scale_regime(grid: &GridSpec, threshold: f64) -> Result<CheckReport> {
    let mut worst = Worst::new();
    let mut previous = f64::INFINITY;
    let mut monotone_break = None;
    for s in positive_points(grid)? {
        // |e - 1| = y_0 - √π·s
        let ln_gap = ln_excess_over_integral(s, EVAL_TOL)?;
        if ln_gap >= previous && monotone_break.is_none() {
            monotone_break = Some(s);
        }
        previous = ln_gap;
        worst.max(ln_gap.exp(), s);
    }
    if let Some(s) = monotone_break {
        worst = Worst {
            residual: f64::INFINITY,
            point: s,
        };
    }
    Ok(worst.report("large_scale_regime", Criterion::AtMost, threshold))
}

/// Limit behaviour at finite proxy points:
///
/// * `|y_0(0.05) - 1| <= tol_small`
/// * `|e(s)/(√π·s) - 1| <= 0.01` on `(0, 0.4]`
/// * `|e(s) - 1| <= tol_large` on `[0.8, 20]`, approached monotonically
pub fn check_limits(tol_small: f64, tol_large: f64) -> Result<Vec<CheckReport>> {
    let y = theta::y0(SMALL_SCALE_LIMIT_POINT, EVAL_TOL)?;
    let mut at_zero = Worst::new();
    at_zero.max((y - 1.0).abs(), SMALL_SCALE_LIMIT_POINT);
    Ok(vec![
        at_zero.report("small_scale_limit", Criterion::AtMost, tol_small),
        check_small_scale_regime(&default_grids::small_scale(), SMALL_SCALE_RATIO_THRESHOLD)?,
        check_large_scale_regime(&default_grids::large_scale(), tol_large)?,
    ])
}

/// Largest forward difference of `y_0 - y_{1/2}` over `grid`; must be negative.
pub fn check_diff_decreasing(grid: &GridSpec) -> Result<CheckReport> {
    let mut worst = Worst::new();
    let points = grid.points();
    let values = points
        .iter()
        .map(|&s| diff0_half(s, EVAL_TOL))
        .collect::<Result<Vec<_>>>()?;
    for (w, s) in values.windows(2).zip(&points[1..]) {
        worst.max(w[1] - w[0], *s);
    }
    Ok(worst.report("diff_decreasing", Criterion::Below, 0.0))
}

/// `max(0, |oracle - eval| - truncation_bound) / (1 + value)` for `method`
/// at tolerance `eval_tol`; the threshold is the rounding slack.
pub fn check_truncation_honesty(
    method: Method,
    a: f64,
    grid: &GridSpec,
    eval_tol: f64,
) -> Result<CheckReport> {
    let mut worst = Worst::new();
    for s in positive_points(grid)? {
        let r = theta::eval_with(method, &DisplacedSumInput::new(a, s, eval_tol)?)?;
        let truth = oracle_eval(a, s)?;
        let excess = ((truth - r.value).abs() - r.truncation_bound).max(0.0);
        worst.max(excess / (1.0 + r.value), s);
    }
    let mut report = worst.report(
        &format!("truncation_honesty_{method}"),
        Criterion::AtMost,
        ROUNDING_SLACK,
    );
    report.displacement = Some(theta::canonicalize_displacement(a)?);
    Ok(report)
}

/// Default check grids.
pub mod default_grids {
    use crate::grid::GridSpec;

    /// 60-point logarithmic grid over `[0.05, 20]`.
    pub fn identity() -> GridSpec {
        GridSpec::logarithmic(0.05, 20.0, 60).expect("valid grid")
    }

    /// `[0.01, 10]` in steps of 0.01.
    pub fn bounds() -> GridSpec {
        GridSpec::linear_step(0.01, 10.0, 0.01).expect("valid grid")
    }

    /// `[0.005, 0.4]` in steps of 0.005.
    pub fn small_scale() -> GridSpec {
        GridSpec::linear_step(0.005, 0.4, 0.005).expect("valid grid")
    }

    /// `[0.8, 20]` in steps of 0.01.
    pub fn large_scale() -> GridSpec {
        GridSpec::linear_step(0.8, 20.0, 0.01).expect("valid grid")
    }

    /// `[0.1, 1.5]` in steps of 0.005.
    pub fn diff_monotone() -> GridSpec {
        GridSpec::linear_step(0.1, 1.5, 0.005).expect("valid grid")
    }
}

pub const SUITE_DISPLACEMENTS: [f64; 4] = [0.0, 0.1, 0.25, 0.5];

/// Every check with default grids. `tol` is the threshold for the identity
/// checks and the small-scale limit.
pub fn run_suite(tol: f64) -> Result<Vec<CheckReport>> {
    let identity = default_grids::identity();
    let mut reports = vec![check_functional_equation(&identity, tol)?];
    for a in SUITE_DISPLACEMENTS {
        reports.push(check_poisson_identity(a, &identity, tol)?);
    }
    reports.push(check_bounds(&default_grids::bounds())?);
    reports.extend(check_limits(tol, LARGE_SCALE_THRESHOLD)?);
    reports.push(check_deficit_range(&default_grids::bounds())?);
    reports.push(check_diff_decreasing(&default_grids::diff_monotone())?);
    for method in [Method::Direct, Method::Transformed] {
        for a in SUITE_DISPLACEMENTS {
            reports.push(check_truncation_honesty(method, a, &identity, EVAL_TOL)?);
        }
    }
    Ok(reports)
}
