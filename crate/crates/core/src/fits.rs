//! Empirical fit formulas for `e(s)` and `y_0 - y_{1/2}`, plus a
//! least-squares refitter for the Boltzmann sigmoid.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// `plateau - amplitude / (1 + exp((s - center) / width))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidParams {
    pub plateau: f64,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl SigmoidParams {
    /// Published constants of the Boltzmann fit to `e(s)`.
    pub const PUBLISHED: Self = Self {
        plateau: 1.00582,
        amplitude: 0.71664,
        center: 0.36712,
        width: 0.10290,
    };

    /// Default starting point for refitting.
    pub const DEFAULT_INIT: Self = Self {
        plateau: 1.0,
        amplitude: 0.7,
        center: 0.4,
        width: 0.1,
    };

    fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.plateau, self.amplitude, self.center, self.width)
    }

    fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            plateau: v[0],
            amplitude: v[1],
            center: v[2],
            width: v[3],
        }
    }
}

/// `1 / (1 + exp(sgn(s - center)·|(s - center)/width|^exponent))` with `sgn(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchedLogisticParams {
    pub center: f64,
    pub width: f64,
    pub exponent: f64,
}

impl StretchedLogisticParams {
    /// Published constants of the fit to `y_0(s) - y_{1/2}(s)`.
    pub const PUBLISHED: Self = Self {
        center: 0.45,
        width: 0.088,
        exponent: 1.29,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub sup_abs: f64,
    pub rms: f64,
    /// Grid point where `sup_abs` is attained (first one on ties).
    pub argmax: f64,
    pub n_points: usize,
}

impl ResidualStats {
    /// Statistics of `residuals[i]` observed at `points[i]`.
    pub fn from_residuals(points: &[f64], residuals: &[f64]) -> Self {
        debug_assert_eq!(points.len(), residuals.len());
        let mut sup_abs = 0.0;
        let mut argmax = points.first().copied().unwrap_or(f64::NAN);
        let mut sq = 0.0;
        for (&s, &r) in points.iter().zip(residuals) {
            if r.abs() > sup_abs {
                sup_abs = r.abs();
                argmax = s;
            }
            sq += r * r;
        }
        let n = points.len();
        let rms = if n == 0 { 0.0 } else { (sq / n as f64).sqrt() };
        Self {
            sup_abs,
            // sqrt rounding can push the mean above the max by an ulp
            rms: rms.min(sup_abs),
            argmax,
            n_points: n,
        }
    }
}

/// `1 / (1 + exp(z))`, saturating to 0 or 1 instead of producing NaN.
fn logistic_complement(z: f64) -> f64 {
    if z > 0.0 {
        let t = (-z).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

pub fn efit(s: f64, p: &SigmoidParams) -> f64 {
    p.plateau - p.amplitude * logistic_complement((s - p.center) / p.width)
}

pub fn diffit(s: f64, p: &StretchedLogisticParams) -> f64 {
    let d = s - p.center;
    if d == 0.0 {
        return 0.5;
    }
    let z = d.signum() * (d / p.width).abs().powf(p.exponent);
    logistic_complement(z)
}

/// Residuals `candidate(s) - truth(s)` over `grid`.
pub fn residual_report<C, T>(candidate: C, truth: T, grid: &GridSpec) -> Result<ResidualStats>
where
    C: Fn(f64) -> Result<f64>,
    T: Fn(f64) -> Result<f64>,
{
    let points = grid.points();
    let residuals = points
        .iter()
        .map(|&s| {
            let c = candidate(s)?;
            let t = truth(s)?;
            if !(c.is_finite() && t.is_finite()) {
                return Err(Error::NonFinite(s));
            }
            Ok(c - t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualStats::from_residuals(&points, &residuals))
}

pub const MIN_SAMPLES: usize = 5;
pub const MAX_ITERATIONS: usize = 10_000;
/// Relative threshold for both the parameter step and the objective decrease.
pub const CONVERGENCE_RTOL: f64 = 1e-10;

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub params: SigmoidParams,
    pub stats: ResidualStats,
    pub iterations: usize,
    /// Objective `Σ r²` after each accepted step, starting with the initial guess.
    pub objective_trace: Vec<f64>,
}

fn residuals(samples: &[(f64, f64)], p: &SigmoidParams) -> Vec<f64> {
    samples.iter().map(|&(s, y)| efit(s, p) - y).collect()
}

fn objective(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Partial derivatives of `efit` with respect to (plateau, amplitude, center, width).
pub fn efit_gradient(s: f64, p: &SigmoidParams) -> [f64; 4] {
    let z = (s - p.center) / p.width;
    let l = logistic_complement(z);
    let slope = p.amplitude * l * (1.0 - l) / p.width;
    [1.0, -l, -slope, -slope * z]
}

fn stats_for(samples: &[(f64, f64)], p: &SigmoidParams) -> ResidualStats {
    let points: Vec<f64> = samples.iter().map(|&(s, _)| s).collect();
    ResidualStats::from_residuals(&points, &residuals(samples, p))
}

fn validate_samples(samples: &[(f64, f64)]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let mut xs: Vec<f64> = samples.iter().map(|&(s, _)| s).collect();
    if let Some(bad) = samples
        .iter()
        .find(|(s, y)| !(s.is_finite() && y.is_finite()))
    {
        return Err(Error::NonFinite(bad.0));
    }
    xs.sort_by(f64::total_cmp);
    if let Some(w) = xs.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateSample(w[0]));
    }
    Ok(())
}

/// Least-squares fit of [`efit`] to `samples` by Levenberg-Marquardt,
/// starting from `init`.
///
/// Converges once an accepted step moves the parameters by at most
/// `1e-10` relative and lowers the objective by at most `1e-10` relative, or
/// once no step can lower the objective any further.
pub fn fit_sigmoid(samples: &[(f64, f64)], init: SigmoidParams) -> Result<FitOutcome> {
    validate_samples(samples)?;
    if init.width.is_nan() || init.width <= 0.0 {
        return Err(Error::domain(format!(
            "initial width must be > 0, got {}",
            init.width
        )));
    }

    let mut p = init.to_vector();
    let mut r = residuals(samples, &init);
    let mut f = objective(&r);
    let mut trace = vec![f];
    let mut lambda = LAMBDA_INIT;

    for iteration in 1..=MAX_ITERATIONS {
        let current = SigmoidParams::from_vector(&p);
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&(s, _), &ri) in samples.iter().zip(&r) {
            let g = Vector4::from(efit_gradient(s, &current));
            jtj += g * g.transpose();
            jtr += g * ri;
        }

        // Search for an acceptable damping level.
        let accepted = loop {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(f64::MIN_POSITIVE);
            }
            let step = damped.cholesky().map(|c| c.solve(&(-jtr)));
            if let Some(step) = step.filter(|d| d.iter().all(|x| x.is_finite())) {
                let trial = p + step;
                if trial[3] > 0.0 {
                    let trial_params = SigmoidParams::from_vector(&trial);
                    let trial_r = residuals(samples, &trial_params);
                    let trial_f = objective(&trial_r);
                    if trial_f < f {
                        lambda = (lambda / 10.0).max(1e-12);
                        break Some((trial, trial_r, trial_f, step));
                    }
                }
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                break None;
            }
        };

        let Some((trial, trial_r, trial_f, step)) = accepted else {
            // No descent direction left: stationary to working precision.
            return Ok(finish(samples, p, iteration, trace));
        };

        let decrease = f - trial_f;
        let step_small = step.norm() <= CONVERGENCE_RTOL * (trial.norm() + CONVERGENCE_RTOL);
        let decrease_small = decrease <= CONVERGENCE_RTOL * f;
        p = trial;
        r = trial_r;
        f = trial_f;
        trace.push(f);
        if (step_small && decrease_small) || f == 0.0 {
            return Ok(finish(samples, p, iteration, trace));
        }
    }

    let best = SigmoidParams::from_vector(&p);
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        best,
        best_objective: f,
        stats: stats_for(samples, &best),
    })
}

fn finish(
    samples: &[(f64, f64)],
    p: Vector4<f64>,
    iterations: usize,
    objective_trace: Vec<f64>,
) -> FitOutcome {
    let params = SigmoidParams::from_vector(&p);
    FitOutcome {
        params,
        stats: stats_for(samples, &params),
        iterations,
        objective_trace,
    }
}

/// Centers tried, in order, when the default start does not converge.
pub const FALLBACK_CENTERS: [f64; 3] = [0.3, 0.4, 0.5];

/// [`fit_sigmoid`] from [`SigmoidParams::DEFAULT_INIT`], retrying with the
/// fallback centers on non-convergence. Returns the last error if every start fails.
pub fn refit_sigmoid(samples: &[(f64, f64)]) -> Result<FitOutcome> {
    let mut last = match fit_sigmoid(samples, SigmoidParams::DEFAULT_INIT) {
        Ok(outcome) => return Ok(outcome),
        Err(e @ Error::NoConvergence { .. }) => e,
        Err(e) => return Err(e),
    };
    for center in FALLBACK_CENTERS {
        let init = SigmoidParams {
            center,
            ..SigmoidParams::DEFAULT_INIT
        };
        match fit_sigmoid(samples, init) {
            Ok(outcome) => return Ok(outcome),
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const PAPER: SigmoidParams = SigmoidParams::PUBLISHED;
    const DIFF: StretchedLogisticParams = StretchedLogisticParams::PUBLISHED;

    fn synthetic() -> Vec<(f64, f64)> {
        GridSpec::linear_step(0.3, 0.9, 0.02)
            .unwrap()
            .points()
            .into_iter()
            .map(|s| (s, efit(s, &PAPER)))
            .collect()
    }

    #[test]
    fn efit_examples() {
        assert_abs_diff_eq!(
            efit(0.36712, &PAPER),
            1.00582 - 0.71664 / 2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(efit(0.36712, &PAPER), 0.64750, epsilon = 1e-12);
        assert_eq!(efit(f64::MAX, &PAPER), 1.00582);
        assert_eq!(efit(1e6, &PAPER), 1.00582);
        assert_abs_diff_eq!(efit(-1e6, &PAPER), 1.00582 - 0.71664, epsilon = 1e-15);
        assert_abs_diff_eq!(efit(0.5, &PAPER), 0.85130, epsilon = 1e-4);
    }

    #[test]
    fn diffit_examples() {
        assert_eq!(diffit(0.45, &DIFF), 0.5);
        assert!(diffit(1e-9, &DIFF) > 0.99);
        assert_eq!(diffit(1e6, &DIFF), 0.0);
        assert_eq!(diffit(-1e6, &DIFF), 1.0);
        assert_abs_diff_eq!(diffit(0.5, &DIFF), 0.38167, epsilon = 1e-4);
    }

    #[test]
    fn diffit_is_continuous_at_center() {
        for s in [0.45 - 1e-9, 0.45 + 1e-9] {
            assert!((diffit(s, &DIFF) - 0.5).abs() <= 1e-6);
        }
    }

    #[test]
    fn monotone_on_grids() {
        let pts = GridSpec::linear_step(-1.0, 2.0, 0.005).unwrap().points();
        let e: Vec<f64> = pts.iter().map(|&s| efit(s, &PAPER)).collect();
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
        let pts = GridSpec::linear_step(0.0, 1.5, 0.005).unwrap().points();
        let d: Vec<f64> = pts.iter().map(|&s| diffit(s, &DIFF)).collect();
        assert!(d.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = SigmoidParams {
            plateau: 1.01,
            amplitude: 0.65,
            center: 0.38,
            width: 0.097,
        };
        let h = 1e-6;
        for s in [0.2, 0.38, 0.55, 0.9] {
            let g = efit_gradient(s, &p);
            let mut v = p.to_vector();
            for i in 0..4 {
                let orig = v[i];
                v[i] = orig + h;
                let up = efit(s, &SigmoidParams::from_vector(&v));
                v[i] = orig - h;
                let down = efit(s, &SigmoidParams::from_vector(&v));
                v[i] = orig;
                assert_abs_diff_eq!(g[i], (up - down) / (2.0 * h), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn recovers_exact_model() {
        let out = fit_sigmoid(&synthetic(), SigmoidParams::DEFAULT_INIT).unwrap();
        assert_abs_diff_eq!(out.params.plateau, PAPER.plateau, epsilon = 1e-6);
        assert_abs_diff_eq!(out.params.amplitude, PAPER.amplitude, epsilon = 1e-6);
        assert_abs_diff_eq!(out.params.center, PAPER.center, epsilon = 1e-6);
        assert_abs_diff_eq!(out.params.width, PAPER.width, epsilon = 1e-6);
        assert!(out.stats.sup_abs < 1e-10);
    }

    #[test]
    fn refit_from_truth_is_idempotent() {
        let out = fit_sigmoid(&synthetic(), PAPER).unwrap();
        assert_abs_diff_eq!(out.params.plateau, PAPER.plateau, epsilon = 1e-6);
        assert_abs_diff_eq!(out.params.amplitude, PAPER.amplitude, epsilon = 1e-6);
        assert_abs_diff_eq!(out.params.center, PAPER.center, epsilon = 1e-6);
        assert_abs_diff_eq!(out.params.width, PAPER.width, epsilon = 1e-6);
    }

    #[test]
    fn objective_never_increases() {
        let noisy: Vec<(f64, f64)> = synthetic()
            .into_iter()
            .enumerate()
            .map(|(i, (s, y))| (s, y + if i % 2 == 0 { 1e-3 } else { -1e-3 }))
            .collect();
        let out = fit_sigmoid(
            &noisy,
            SigmoidParams {
                center: 0.6,
                ..SigmoidParams::DEFAULT_INIT
            },
        )
        .unwrap();
        assert!(out.objective_trace.len() > 1);
        assert!(out.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_bad_inputs() {
        let three = &synthetic()[..3];
        assert!(matches!(
            fit_sigmoid(three, SigmoidParams::DEFAULT_INIT),
            Err(Error::TooFewSamples { needed: 5, got: 3 })
        ));
        let mut dup = synthetic();
        dup[1].0 = dup[0].0;
        assert!(matches!(
            fit_sigmoid(&dup, SigmoidParams::DEFAULT_INIT),
            Err(Error::DuplicateSample(_))
        ));
        let bad_init = SigmoidParams {
            width: 0.0,
            ..SigmoidParams::DEFAULT_INIT
        };
        assert!(fit_sigmoid(&synthetic(), bad_init).is_err());
    }

    #[test]
    fn residual_report_identity_is_zero() {
        let g = GridSpec::linear_step(0.0, 1.0, 0.1).unwrap();
        let f = |s: f64| Ok(efit(s, &PAPER));
        let stats = residual_report(f, f, &g).unwrap();
        assert_eq!(stats.sup_abs, 0.0);
        assert_eq!(stats.rms, 0.0);
        assert_eq!(stats.n_points, 11);
    }

    #[test]
    fn residual_report_names_non_finite_point() {
        let g = GridSpec::linear_step(0.0, 1.0, 0.25).unwrap();
        let err = residual_report(|s| Ok(if s == 0.5 { f64::NAN } else { s }), Ok, &g).unwrap_err();
        assert_eq!(err, Error::NonFinite(0.5));
    }

    #[test]
    fn residual_stats_argmax_and_rms() {
        let stats = ResidualStats::from_residuals(&[1.0, 2.0, 3.0], &[0.1, -0.4, 0.2]);
        assert_eq!(stats.argmax, 2.0);
        assert_eq!(stats.sup_abs, 0.4);
        assert!(stats.rms <= stats.sup_abs);
        assert_abs_diff_eq!(stats.rms, (0.21f64 / 3.0).sqrt(), epsilon = 1e-15);
    }
}
