use super::SolverSettings;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
}

/// One classical fourth-order Runge–Kutta step of an autonomous system.
pub fn rk4_step<const D: usize, F>(rhs: &F, y: &[f64; D], h: f64) -> [f64; D]
where
    F: Fn(&[f64; D]) -> [f64; D],
{
    let k1 = rhs(y);
    let k2 = rhs(&axpy(y, 0.5 * h, &k1));
    let k3 = rhs(&axpy(y, 0.5 * h, &k2));
    let k4 = rhs(&axpy(y, h, &k3));
    let mut out = *y;
    for d in 0..D {
        out[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    }
    out
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, k: &[f64; D]) -> [f64; D] {
    let mut out = *y;
    for d in 0..D {
        out[d] += h * k[d];
    }
    out
}

/// Fixed-step RK4 on `[0, t_end]`, sampling at `t_k = k·dt` and at `t_end`
/// itself (the last step is shortened to land on it).
///
/// Integration stops early after the first sample for which `stop` returns
/// true. Pass `|_| false` to always reach `t_end`.
pub fn integrate_fixed<const D: usize, F, S>(rhs: F, y0: [f64; D], t_end: f64, dt: f64, mut stop: S) -> Vec<Sample<D>>
where
    F: Fn(&[f64; D]) -> [f64; D],
    S: FnMut(&[f64; D]) -> bool,
{
    let mut samples = vec![Sample { t: 0.0, y: y0 }];
    if stop(&y0) {
        return samples;
    }
    // A remainder below 1e-9·dt is absorbed into the final step.
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut y = y0;
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { k as f64 * dt };
        y = rk4_step(&rhs, &y, t_next - t);
        t = t_next;
        samples.push(Sample { t, y });
        if stop(&y) {
            break;
        }
    }
    samples
}

/// Integrates `rhs` from `y0` over `[0, t_end]` with fixed-step RK4.
///
/// The step `dt` is accepted once a run with `dt/2` moves every endpoint
/// component by less than `settings.tolerance`; otherwise `dt` is halved, at
/// most `settings.max_iterations` times. The samples of the accepted `dt`
/// are returned.
pub fn integrate_ode<const D: usize, F>(
    rhs: F,
    y0: [f64; D],
    t_end: f64,
    dt: f64,
    settings: SolverSettings,
) -> Result<Vec<Sample<D>>>
where
    F: Fn(&[f64; D]) -> [f64; D],
{
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(invalid("t_end", format!("must be positive and finite, got {t_end}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive and finite, got {dt}")));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("y0", "initial state must be finite"));
    }

    let mut dt = dt.min(t_end);
    let mut coarse = integrate_fixed(&rhs, y0, t_end, dt, |_| false);
    for _ in 0..settings.max_iterations() {
        let fine = integrate_fixed(&rhs, y0, t_end, 0.5 * dt, |_| false);
        let a = &coarse.last().expect("at least one sample").y;
        let b = &fine.last().expect("at least one sample").y;
        let change = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if change < settings.tolerance() {
            return Ok(coarse);
        }
        coarse = fine;
        dt *= 0.5;
    }
    Err(Error::StepUnderflow {
        dt,
        tolerance: settings.tolerance(),
    })
}
