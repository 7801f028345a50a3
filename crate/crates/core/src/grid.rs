//! Sample grids over the scale axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Step(f64),
    Count(usize),
}

/// A strictly increasing set of sample points from `start` up to `stop`.
///
/// Linear grids take either a step or a point count; logarithmic grids are
/// always specified by a count and require `start > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    start: f64,
    stop: f64,
    resolution: Resolution,
    spacing: Spacing,
}

// Absorbs the rounding in (stop - start) / step for decimal steps such as 0.01.
const STEP_COUNT_SLACK: f64 = 1e-9;

impl GridSpec {
    pub fn linear_step(start: f64, stop: f64, step: f64) -> Result<Self> {
        check_endpoints(start, stop)?;
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        Ok(Self {
            start,
            stop,
            resolution: Resolution::Step(step),
            spacing: Spacing::Linear,
        })
    }

    pub fn linear_count(start: f64, stop: f64, count: usize) -> Result<Self> {
        check_endpoints(start, stop)?;
        check_count(count)?;
        Ok(Self {
            start,
            stop,
            resolution: Resolution::Count(count),
            spacing: Spacing::Linear,
        })
    }

    pub fn logarithmic(start: f64, stop: f64, count: usize) -> Result<Self> {
        check_endpoints(start, stop)?;
        check_count(count)?;
        if start <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "logarithmic grid needs start > 0, got {start}"
            )));
        }
        Ok(Self {
            start,
            stop,
            resolution: Resolution::Count(count),
            spacing: Spacing::Logarithmic,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        match self.resolution {
            Resolution::Count(n) => n,
            Resolution::Step(step) => {
                ((self.stop - self.start) / step + STEP_COUNT_SLACK).floor() as usize + 1
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.len();
        match (self.spacing, self.resolution) {
            (Spacing::Linear, Resolution::Step(step)) => (0..n)
                .map(|i| (self.start + i as f64 * step).min(self.stop))
                .collect(),
            (Spacing::Linear, Resolution::Count(_)) => {
                let h = (self.stop - self.start) / (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            self.stop
                        } else {
                            self.start + i as f64 * h
                        }
                    })
                    .collect()
            }
            (Spacing::Logarithmic, _) => {
                let (lo, hi) = (self.start.ln(), self.stop.ln());
                let h = (hi - lo) / (n - 1) as f64;
                (0..n)
                    .map(|i| match i {
                        0 => self.start,
                        i if i == n - 1 => self.stop,
                        i => (lo + i as f64 * h).exp(),
                    })
                    .collect()
            }
        }
    }
}

fn check_endpoints(start: f64, stop: f64) -> Result<()> {
    if !(start.is_finite() && stop.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "endpoints must be finite, got [{start}, {stop}]"
        )));
    }
    if start >= stop {
        return Err(Error::InvalidGrid(format!(
            "start must be below stop, got [{start}, {stop}]"
        )));
    }
    Ok(())
}

fn check_count(count: usize) -> Result<()> {
    if count < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 points, got {count}"
        )));
    }
    Ok(())
}
