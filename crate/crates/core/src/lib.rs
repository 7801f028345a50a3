//! Displaced Gaussian lattice sums `y_a(s) = Σ_k exp(-(k + a)²/s²)`.
//!
//! [`theta`] evaluates the sum through the direct series or its Poisson dual
//! with certified truncation, [`fits`] holds the sigmoid fits of the deficit
//! `e(s)` and of `y_0 - y_{1/2}`, and [`verify`] checks identities, bounds and
//! limits against a brute-force oracle.

pub mod error;
pub mod fits;
pub mod grid;
pub mod sum;
pub mod theta;
pub mod verify;

pub use error::{Error, Result};
pub use fits::{
    diffit, efit, fit_sigmoid, refit_sigmoid, residual_report, FitOutcome, ResidualStats,
    SigmoidParams, StretchedLogisticParams,
};
pub use grid::{GridSpec, Spacing};
pub use theta::{
    bounds, canonicalize_displacement, diff0_half, e_of_s, eval_auto, eval_direct,
    eval_transformed, poisson_integral, truncation_terms, DisplacedSumInput, EvalReport, Method,
    SELF_DUAL_SCALE, SQRT_PI,
};
pub use verify::{oracle_eval, CheckReport, Criterion};
