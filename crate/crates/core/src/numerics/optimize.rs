use super::{BracketedInterval, SolverSettings};
use crate::error::{Error, Result};

/// 1/φ, the golden-section shrink factor.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `interval`.
///
/// Iterates until the bracket is narrower than `settings.tolerance`, so the
/// returned abscissa is within tolerance of the maximizer. The endpoints are
/// compared against the final interior estimate so that a maximum sitting on
/// the boundary is reported exactly.
pub fn maximize_scalar<F>(mut f: F, interval: BracketedInterval, settings: SolverSettings) -> Result<Maximum>
where
    F: FnMut(f64) -> f64,
{
    let tol = settings.tolerance();
    let (mut lo, mut hi) = (interval.lo(), interval.hi());

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evaluations = 2;
    let mut iterations = 0;

    while hi - lo > tol {
        if iterations == settings.max_iterations() {
            return Err(Error::NonConvergence {
                iterations,
                detail: format!("golden-section bracket [{lo}, {hi}] still wider than {tol:e}"),
            });
        }
        if f1.is_nan() || f2.is_nan() {
            return Err(Error::NonConvergence {
                iterations,
                detail: "objective returned NaN".into(),
            });
        }
        iterations += 1;
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        evaluations += 1;
    }

    let mid = 0.5 * (lo + hi);
    let mut best = (mid, f(mid));
    evaluations += 1;
    for edge in [interval.lo(), interval.hi()] {
        if (edge - mid).abs() <= tol {
            let fe = f(edge);
            evaluations += 1;
            if fe > best.1 {
                best = (edge, fe);
            }
        }
    }

    Ok(Maximum {
        x: best.0,
        value: best.1,
        evaluations,
        iterations,
    })
}
