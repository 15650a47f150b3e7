//! Time-level history and per-step bookkeeping shared by the 1D and 2D steppers.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::limiter::LimiterEntry;

/// Entries in `[-ROUNDING_CLAMP * scale, 0)` are rounding noise and are set to zero.
pub const ROUNDING_CLAMP: f64 = 1e-13;

/// `rho^n` and, after the first step, `rho^{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub rho_curr: Field,
    pub rho_prev: Option<Field>,
    pub time: f64,
    pub step_index: usize,
    pub log: Vec<StepRecord>,
}

impl SolverState {
    pub fn new(rho0: Field) -> Self {
        Self {
            rho_curr: rho0,
            rho_prev: None,
            time: 0.0,
            step_index: 0,
            log: Vec::new(),
        }
    }

    /// Two-level state for resuming a second-order run.
    pub fn resume(rho_curr: Field, rho_prev: Field, time: f64, step_index: usize) -> Result<Self> {
        rho_prev.expect_len(rho_curr.len())?;
        Ok(Self {
            rho_curr,
            rho_prev: Some(rho_prev),
            time,
            step_index,
            log: Vec::new(),
        })
    }

    pub(crate) fn advance(&mut self, next: Vec<f64>, tau: f64, record: StepRecord) -> Result<()> {
        let next = Field::new(next)?;
        let prev = std::mem::replace(&mut self.rho_curr, next);
        self.rho_prev = Some(prev);
        self.time += tau;
        self.step_index += 1;
        self.log.push(record);
        Ok(())
    }
}

/// What happened to positivity during one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Rounding-level negatives set to zero.
    pub clamped: usize,
    /// Neighbourhoods repaired by the scaling limiter, in processing order.
    pub limiter: Vec<LimiterEntry>,
    /// Negative cells left in place because the limiter was off.
    pub negatives_left: usize,
    /// Smallest value before clamping and limiting.
    pub raw_min: f64,
}

impl StepRecord {
    pub fn limiter_activated(&self) -> bool {
        !self.limiter.is_empty()
    }
}

/// Result of one step besides the state update.
#[derive(Debug, Clone)]
pub struct StepOutcome<M> {
    /// Mobility frozen for this step (`M^n`, or `M^*` for second order).
    pub mobility: M,
    pub mass_before: f64,
    pub mass_after: f64,
    pub record: StepRecord,
    /// `rho^*` of a predictor–corrector step.
    pub predictor: Option<Vec<f64>>,
}

/// Time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Implicit–explicit, mobility frozen at `rho^n`.
    FirstOrder,
    /// Predictor–corrector with extrapolated mobility.
    SecondOrder,
    /// Forward Euler reference.
    ExplicitEuler,
}

/// Implicit stepper settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Apply the scaling limiter when an implicit step leaves true negatives
    /// (second order at large steps, or either order under a sink term).
    pub limiter: bool,
    /// Warn when a limiter neighbourhood grows beyond this many cells.
    pub neighbourhood_cap: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            limiter: true,
            neighbourhood_cap: 16,
        }
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTimeStep(tau))
    }
}

/// Zeroes rounding-level negatives; returns how many were touched.
pub(crate) fn clamp_rounding(values: &mut [f64]) -> usize {
    let scale = values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()));
    let floor = -ROUNDING_CLAMP * scale;
    let mut count = 0;
    for v in values.iter_mut() {
        if *v < 0.0 && *v >= floor {
            *v = 0.0;
            count += 1;
        }
    }
    count
}

pub(crate) fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}
