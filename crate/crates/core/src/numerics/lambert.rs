use std::f64::consts::E;

use crate::error::{Error, Result};

/// Branch point of W₀, `-1/e`.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Arguments down to this far below `-1/e` are treated as rounding noise and
/// clamped onto the branch point.
pub const BRANCH_CLAMP: f64 = 1e-12;

const MAX_HALLEY_STEPS: usize = 64;

/// Principal branch of the Lambert W function, the inverse of `w ↦ w·eʷ`
/// restricted to `w ≥ -1`.
///
/// Uses Halley's iteration from a piecewise initial guess: the branch-point
/// series in `p = sqrt(2(ez + 1))` near `-1/e`, the asymptotic
/// `ln z - ln ln z` expansion for large `z`, and `ln(1 + z)` in between.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain {
            function: "lambert_w0",
            detail: format!("argument must be finite, got {z}"),
        });
    }
    if z < BRANCH_POINT - BRANCH_CLAMP {
        return Err(Error::Domain {
            function: "lambert_w0",
            detail: format!("argument {z:e} is below the branch point -1/e"),
        });
    }
    if z == 0.0 {
        return Ok(0.0);
    }

    let q = (E * z + 1.0).max(0.0);
    if q == 0.0 || z <= BRANCH_POINT {
        return Ok(-1.0);
    }

    let p = (2.0 * q).sqrt();
    if p < 1e-3 {
        // Truncation error of the series is O(p⁶), below double precision here.
        return Ok(branch_series(p));
    }

    let mut w = if z < -0.25 {
        branch_series(p)
    } else if z > 3.0 {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    } else {
        z.ln_1p()
    };

    for _ in 0..MAX_HALLEY_STEPS {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            return Ok(w);
        }
    }
    Ok(w)
}

fn branch_series(p: f64) -> f64 {
    // W₀ = -1 + p - p²/3 + 11p³/72 - 43p⁴/540 + 769p⁵/17280 + ...
    -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0)))))
}
