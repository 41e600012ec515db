//! Scalar numerical kernels used by the epidemic model: the principal
//! branch of Lambert W, a golden-section maximizer and a fixed-step RK4
//! integrator with step-halving verification.

mod lambert;
mod ode;
mod optimize;

pub use lambert::{lambert_w0, BRANCH_CLAMP, BRANCH_POINT};
pub use ode::{integrate_fixed, integrate_ode, rk4_step, Sample};
pub use optimize::{maximize_scalar, Maximum};

use crate::error::{invalid, Result};

/// Closed search interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketedInterval {
    lo: f64,
    hi: f64,
}

impl BracketedInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("interval", format!("bounds must be finite, got [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(invalid("interval", format!("require lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Absolute tolerance plus an iteration budget.
///
/// For the maximizer `max_iterations` bounds golden-section reductions; for
/// the integrator it bounds the number of step halvings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    tolerance: f64,
    max_iterations: usize,
}

impl SolverSettings {
    pub fn new(tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(tolerance > 0.0) || !tolerance.is_finite() {
            return Err(invalid(
                "tolerance",
                format!("must be positive and finite, got {tolerance}"),
            ));
        }
        if max_iterations == 0 {
            return Err(invalid("max_iterations", "must be at least 1"));
        }
        Ok(Self {
            tolerance,
            max_iterations,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}
