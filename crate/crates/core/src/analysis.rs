//! Closed-form long-run quantities and the attendance optimization built on
//! them.
//!
//! The final recovered fraction solves `1 - r = s₀·exp(-aR₀(r - r₀))`, which
//! has the explicit solution
//!
//! ```text
//! r∞ = 1 + W₀(-s₀·aR₀·exp(-aR₀(1 - r₀))) / (aR₀)
//! ```
//!
//! and the long-run child-days at home are `T_h(∞) = (1 - a)·N·(r∞ - r₀) / γ`,
//! since every child infected after `t = 0` spends on average `1/γ` days
//! infected. With no initial immunity this is `(1 - a)·N·r∞ / γ`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{check_attendance, DiseaseParams, ScenarioConfig, FRACTION_SUM_TOLERANCE};
use crate::numerics::{lambert_w0, maximize_scalar, BracketedInterval, SolverSettings, BRANCH_POINT};

/// Lower end of the attendance search interval; the closed form is
/// singular at `a = 0`.
pub const MIN_ATTENDANCE: f64 = 1e-4;

/// Residual above which the Lambert W route is replaced by bisection.
const FINAL_SIZE_RESIDUAL: f64 = 1e-12;

/// Within this distance of the branch point (measured as `1 + e·z`) the
/// Lambert W route is skipped entirely.
const NEAR_BRANCH: f64 = 1e-10;

/// Group size and initial composition shared by every closed-form call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub population: f64,
    pub s0: f64,
    pub r0_frac: f64,
}

impl Default for Cohort {
    fn default() -> Self {
        Self {
            population: ScenarioConfig::DEFAULT_POPULATION,
            s0: ScenarioConfig::DEFAULT_S0,
            r0_frac: 0.0,
        }
    }
}

impl Cohort {
    pub fn new(population: f64, s0: f64, r0_frac: f64) -> Result<Self> {
        if !(population > 0.0) || !population.is_finite() {
            return Err(invalid(
                "population",
                format!("must be positive and finite, got {population}"),
            ));
        }
        check_fractions(s0, r0_frac)?;
        Ok(Self {
            population,
            s0,
            r0_frac,
        })
    }

    pub fn from_scenario(config: &ScenarioConfig) -> Self {
        Self {
            population: config.population(),
            s0: config.s0(),
            r0_frac: config.r0_frac(),
        }
    }

    pub fn i0(&self) -> f64 {
        (1.0 - self.s0 - self.r0_frac).max(0.0)
    }
}

fn check_fractions(s0: f64, r0_frac: f64) -> Result<()> {
    for (name, v) in [("s0", s0), ("r0_frac", r0_frac)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
        }
    }
    if s0 + r0_frac > 1.0 + FRACTION_SUM_TOLERANCE {
        return Err(invalid(
            "s0",
            format!("s0 + r0_frac must not exceed 1, got {}", s0 + r0_frac),
        ));
    }
    Ok(())
}

/// Long-run recovered fraction `r∞` for attendance `a` and basic
/// reproduction number `r0_basic`.
///
/// At `a = 0` nothing is transmitted and only the initially infected
/// recover, giving `1 - s0`. With no initial infections the population never
/// changes and `r0_frac` is returned.
pub fn final_size(a: f64, r0_basic: f64, s0: f64, r0_frac: f64) -> Result<f64> {
    check_attendance(a)?;
    if !(r0_basic > 0.0) || !r0_basic.is_finite() {
        return Err(invalid("r0", format!("must be positive and finite, got {r0_basic}")));
    }
    check_fractions(s0, r0_frac)?;

    if a == 0.0 {
        return Ok(1.0 - s0);
    }
    let i0 = 1.0 - s0 - r0_frac;
    if i0 <= 0.0 || s0 == 0.0 {
        return Ok(r0_frac.max(1.0 - s0).min(1.0));
    }

    let x = a * r0_basic;
    let z = -s0 * x * (-x * (1.0 - r0_frac)).exp();
    let w = lambert_w0(z).map_err(|e| Error::Domain {
        function: "final_size",
        detail: format!("a={a}, R0={r0_basic}, s0={s0}: {e}"),
    })?;

    if 1.0 + std::f64::consts::E * z > NEAR_BRANCH && z > BRANCH_POINT {
        let r = (1.0 + w / x).clamp(r0_frac, 1.0);
        if final_size_residual(r, x, s0, r0_frac).abs() <= FINAL_SIZE_RESIDUAL {
            return Ok(r);
        }
    }
    Ok(bisect_final_size(x, s0, r0_frac))
}

fn final_size_residual(r: f64, x: f64, s0: f64, r0_frac: f64) -> f64 {
    1.0 - r - s0 * (-x * (r - r0_frac)).exp()
}

/// The residual is concave in `r`, positive at `r0_frac` (it equals `i0`)
/// and negative at 1, so `[r0_frac, 1]` brackets exactly one root.
fn bisect_final_size(x: f64, s0: f64, r0_frac: f64) -> f64 {
    let (mut lo, mut hi) = (r0_frac, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if final_size_residual(mid, x, s0, r0_frac) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = (
        final_size_residual(lo, x, s0, r0_frac).abs(),
        final_size_residual(hi, x, s0, r0_frac).abs(),
    );
    if rl <= rh {
        lo
    } else {
        hi
    }
}

/// Long-run child-days at home, `(1 - a)·N·(r∞ - r₀)/γ`.
pub fn th_infinity(a: f64, params: &DiseaseParams, cohort: &Cohort) -> Result<f64> {
    let r_inf = final_size(a, params.r0_basic(), cohort.s0, cohort.r0_frac)?;
    if a == 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - a) * cohort.population * (r_inf - cohort.r0_frac) / params.gamma())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub a_star: f64,
    pub th_star: f64,
    pub evaluations: usize,
    pub tolerance_used: f64,
}

/// Attendance in `[1e-4, 1]` that maximizes [`th_infinity`].
pub fn optimize_attendance(
    params: &DiseaseParams,
    cohort: &Cohort,
    settings: SolverSettings,
) -> Result<OptimizationResult> {
    let interval = BracketedInterval::new(MIN_ATTENDANCE, 1.0)?;
    optimize_attendance_within(params, cohort, interval, settings)
}

/// As [`optimize_attendance`] on a caller-chosen sub-interval of `(0, 1]`.
pub fn optimize_attendance_within(
    params: &DiseaseParams,
    cohort: &Cohort,
    interval: BracketedInterval,
    settings: SolverSettings,
) -> Result<OptimizationResult> {
    if interval.lo() <= 0.0 || interval.hi() > 1.0 {
        return Err(invalid(
            "interval",
            format!(
                "attendance search must lie in (0, 1], got [{}, {}]",
                interval.lo(),
                interval.hi()
            ),
        ));
    }
    let mut failure = None;
    let best = maximize_scalar(
        |a| match th_infinity(a, params, cohort) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        interval,
        settings,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let best = best?;
    Ok(OptimizationResult {
        a_star: best.x,
        th_star: best.value,
        evaluations: best.evaluations,
        tolerance_used: settings.tolerance(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaffingParams {
    children_per_teacher: f64,
    open_days_fraction: f64,
}

impl Default for StaffingParams {
    /// One teacher per six children, open five days in seven.
    fn default() -> Self {
        Self {
            children_per_teacher: 6.0,
            open_days_fraction: 5.0 / 7.0,
        }
    }
}

impl StaffingParams {
    pub fn new(children_per_teacher: f64, open_days_fraction: f64) -> Result<Self> {
        if !(children_per_teacher >= 1.0) || !children_per_teacher.is_finite() {
            return Err(invalid(
                "children_per_teacher",
                format!("must be at least 1, got {children_per_teacher}"),
            ));
        }
        if !(open_days_fraction > 0.0 && open_days_fraction <= 1.0) {
            return Err(invalid(
                "open_days_fraction",
                format!("must lie in (0, 1], got {open_days_fraction}"),
            ));
        }
        Ok(Self {
            children_per_teacher,
            open_days_fraction,
        })
    }

    pub fn children_per_teacher(&self) -> f64 {
        self.children_per_teacher
    }

    pub fn open_days_fraction(&self) -> f64 {
        self.open_days_fraction
    }
}

/// Teacher working days avoided when children spend `th_inf` child-days at
/// home.
pub fn staff_savings(th_inf: f64, staffing: &StaffingParams) -> f64 {
    th_inf / staffing.children_per_teacher * staffing.open_days_fraction
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    pub r0: f64,
    pub a_star: f64,
    pub th_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub a_values: Vec<f64>,
    pub r0_values: Vec<f64>,
    /// `th_matrix[i][j]` is `T_h(∞)` at `a_values[i]`, `r0_values[j]`.
    pub th_matrix: Vec<Vec<f64>>,
    pub ridge: Vec<RidgePoint>,
}

/// Evaluates `T_h(∞)` on the `a × R₀` lattice and locates the optimal
/// attendance for each `R₀`.
///
/// The ridge search is restricted to `[min a, max a]` so that every ridge
/// point lies on the sampled attendance range.
pub fn sweep(
    a_values: &[f64],
    r0_values: &[f64],
    gamma: f64,
    cohort: &Cohort,
    settings: SolverSettings,
) -> Result<SweepGrid> {
    check_axis("a_values", a_values)?;
    check_axis("r0_values", r0_values)?;
    if a_values[0] <= 0.0 || a_values[a_values.len() - 1] > 1.0 {
        return Err(invalid("a_values", "attendance values must lie in (0, 1]"));
    }
    if r0_values[0] <= 0.0 {
        return Err(invalid("r0_values", "R0 values must be positive"));
    }

    let a_min = a_values[0];
    let a_max = a_values[a_values.len() - 1];
    let mut th_matrix = vec![vec![0.0; r0_values.len()]; a_values.len()];
    let mut ridge = Vec::with_capacity(r0_values.len());

    for (j, &r0) in r0_values.iter().enumerate() {
        let cell_err = |a: f64, e: Error| Error::SweepCell {
            a,
            r0,
            source: Box::new(e),
        };
        let params = DiseaseParams::from_r0(r0, gamma).map_err(|e| cell_err(f64::NAN, e))?;
        for (i, &a) in a_values.iter().enumerate() {
            th_matrix[i][j] = th_infinity(a, &params, cohort).map_err(|e| cell_err(a, e))?;
        }
        let point = if a_min < a_max {
            let interval = BracketedInterval::new(a_min.max(MIN_ATTENDANCE), a_max).map_err(|e| cell_err(a_min, e))?;
            let best =
                optimize_attendance_within(&params, cohort, interval, settings).map_err(|e| cell_err(f64::NAN, e))?;
            RidgePoint {
                r0,
                a_star: best.a_star,
                th_star: best.th_star,
            }
        } else {
            RidgePoint {
                r0,
                a_star: a_min,
                th_star: th_matrix[0][j],
            }
        };
        ridge.push(point);
    }

    Ok(SweepGrid {
        a_values: a_values.to_vec(),
        r0_values: r0_values.to_vec(),
        th_matrix,
        ridge,
    })
}

fn check_axis(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(name, "must not be empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid(name, "values must be finite"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(name, "values must be strictly ascending"));
    }
    Ok(())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive; `[lo]` when `n == 1`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { hi } else { lo + k as f64 * step })
                .collect()
        }
    }
}

/// One disease of the savings table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiseaseEntry {
    pub name: String,
    pub r0_low: f64,
    pub r0_high: f64,
    pub r0_used: f64,
    pub gamma: f64,
}

impl DiseaseEntry {
    /// `r0_used` defaults to the midpoint of the reported range.
    pub fn new(name: impl Into<String>, r0_low: f64, r0_high: f64, r0_used: Option<f64>, gamma: f64) -> Result<Self> {
        let entry = Self {
            name: name.into(),
            r0_low,
            r0_high,
            r0_used: r0_used.unwrap_or(0.5 * (r0_low + r0_high)),
            gamma,
        };
        entry.validate()?;
        Ok(entry)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if !(self.r0_low > 0.0) || !self.r0_high.is_finite() {
            return Err(invalid("r0_low", format!("require 0 < r0_low, got {}", self.r0_low)));
        }
        if self.r0_low > self.r0_high {
            return Err(invalid(
                "r0_low",
                format!("require r0_low <= r0_high, got {} > {}", self.r0_low, self.r0_high),
            ));
        }
        if !(self.r0_low <= self.r0_used && self.r0_used <= self.r0_high) {
            return Err(invalid(
                "r0_used",
                format!(
                    "require r0_low <= r0_used <= r0_high, got {} outside [{}, {}]",
                    self.r0_used, self.r0_low, self.r0_high
                ),
            ));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(invalid(
                "gamma",
                format!("must be positive and finite, got {}", self.gamma),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiseaseRow {
    pub name: String,
    pub r0_used: f64,
    pub a_star: f64,
    pub th_star: f64,
    pub savings: f64,
}

pub fn disease_table(
    entries: &[DiseaseEntry],
    cohort: &Cohort,
    staffing: &StaffingParams,
    settings: SolverSettings,
) -> Result<Vec<DiseaseRow>> {
    entries
        .iter()
        .map(|entry| {
            let row = || -> Result<DiseaseRow> {
                entry.validate()?;
                let params = DiseaseParams::from_r0(entry.r0_used, entry.gamma)?;
                let best = optimize_attendance(&params, cohort, settings)?;
                Ok(DiseaseRow {
                    name: entry.name.clone(),
                    r0_used: entry.r0_used,
                    a_star: best.a_star,
                    th_star: best.th_star,
                    savings: staff_savings(best.th_star, staffing),
                })
            };
            row().map_err(|e| Error::DiseaseRow {
                name: entry.name.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}
