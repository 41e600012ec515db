//! SIR dynamics with an attendance split of the infected compartment.
//!
//! A fraction `a` of infected children attend and transmit; the remaining
//! `1 - a` stay home. Only attending children contribute to the force of
//! infection, so `a` multiplies the infection rate β. The cumulative
//! child-days spent at home, `T_h(t) = (1 - a)∫₀ᵗ I(u) du`, is carried as a
//! fourth state variable.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{integrate_fixed, integrate_ode, SolverSettings};

/// Sum tolerance for the initial fractions `s0 + i0 + r0_frac = 1`.
pub const FRACTION_SUM_TOLERANCE: f64 = 1e-12;

/// An outbreak is over once `I < EXTINCTION_FRACTION · N`.
pub const EXTINCTION_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiseaseParams")]
pub struct DiseaseParams {
    beta: f64,
    gamma: f64,
}

#[derive(Deserialize)]
struct RawDiseaseParams {
    beta: f64,
    gamma: f64,
}

impl TryFrom<RawDiseaseParams> for DiseaseParams {
    type Error = Error;

    fn try_from(raw: RawDiseaseParams) -> Result<Self> {
        Self::new(raw.beta, raw.gamma)
    }
}

impl DiseaseParams {
    /// Infection rate `beta` and recovery rate `gamma`, both per day.
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        positive("beta", beta)?;
        positive("gamma", gamma)?;
        if !(beta / gamma).is_finite() {
            return Err(invalid("beta", "beta/gamma must be finite"));
        }
        Ok(Self { beta, gamma })
    }

    /// Builds the parameters from the basic reproduction number `R₀ = β/γ`.
    pub fn from_r0(r0_basic: f64, gamma: f64) -> Result<Self> {
        positive("r0", r0_basic)?;
        positive("gamma", gamma)?;
        Self::new(r0_basic * gamma, gamma)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r0_basic(&self) -> f64 {
        self.beta / self.gamma
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {value}")))
    }
}

/// Population size, initial compartment fractions and attendance rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenarioConfig")]
pub struct ScenarioConfig {
    population: f64,
    s0: f64,
    i0: f64,
    r0_frac: f64,
    attendance: f64,
}

#[derive(Deserialize)]
struct RawScenarioConfig {
    population: f64,
    s0: f64,
    i0: f64,
    r0_frac: f64,
    attendance: f64,
}

impl TryFrom<RawScenarioConfig> for ScenarioConfig {
    type Error = Error;

    fn try_from(raw: RawScenarioConfig) -> Result<Self> {
        Self::new(raw.population, raw.s0, raw.i0, raw.r0_frac, raw.attendance)
    }
}

impl ScenarioConfig {
    pub const DEFAULT_POPULATION: f64 = 100.0;
    pub const DEFAULT_S0: f64 = 0.99;
    pub const DEFAULT_I0: f64 = 0.01;

    pub fn new(population: f64, s0: f64, i0: f64, r0_frac: f64, attendance: f64) -> Result<Self> {
        positive("population", population)?;
        for (name, v) in [("s0", s0), ("i0", i0), ("r0_frac", r0_frac)] {
            if !(v >= 0.0) || v > 1.0 {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        let sum = s0 + i0 + r0_frac;
        if (sum - 1.0).abs() > FRACTION_SUM_TOLERANCE {
            return Err(invalid("s0", format!("s0 + i0 + r0_frac must equal 1, got {sum}")));
        }
        check_attendance(attendance)?;
        Ok(Self {
            population,
            s0,
            i0,
            r0_frac,
            attendance,
        })
    }

    /// 100 children, 1% initially infected, nobody immune.
    pub fn with_attendance(attendance: f64) -> Result<Self> {
        Self::new(
            Self::DEFAULT_POPULATION,
            Self::DEFAULT_S0,
            Self::DEFAULT_I0,
            0.0,
            attendance,
        )
    }

    pub fn population(&self) -> f64 {
        self.population
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn i0(&self) -> f64 {
        self.i0
    }

    pub fn r0_frac(&self) -> f64 {
        self.r0_frac
    }

    pub fn attendance(&self) -> f64 {
        self.attendance
    }
}

pub(crate) fn check_attendance(a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(invalid("attendance", format!("must lie in [0, 1], got {a}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
    /// Cumulative child-days at home since `t = 0`.
    pub th_cum: f64,
}

impl PopulationState {
    /// Infected children attending, `a·I`.
    pub fn attending(&self, attendance: f64) -> f64 {
        attendance * self.i
    }

    /// Infected children kept home, `(1 - a)·I`.
    pub fn home(&self, attendance: f64) -> f64 {
        (1.0 - attendance) * self.i
    }

    fn from_vector(t: f64, y: [f64; 4]) -> Self {
        Self {
            t,
            s: y[0],
            i: y[1],
            r: y[2],
            th_cum: y[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<PopulationState>,
    pub params: DiseaseParams,
    pub config: ScenarioConfig,
}

impl Trajectory {
    pub fn last(&self) -> Option<&PopulationState> {
        self.samples.last()
    }
}

/// Right-hand side `(dS/dt, dI/dt, dR/dt)`.
pub fn sir_rhs(state: &PopulationState, params: &DiseaseParams, config: &ScenarioConfig) -> (f64, f64, f64) {
    let [ds, di, dr, _] = augmented_rhs(params, config)(&[state.s, state.i, state.r, state.th_cum]);
    (ds, di, dr)
}

fn augmented_rhs(params: &DiseaseParams, config: &ScenarioConfig) -> impl Fn(&[f64; 4]) -> [f64; 4] {
    let a = config.attendance;
    let contact = a * params.beta / config.population;
    let gamma = params.gamma;
    let home = 1.0 - a;
    move |y: &[f64; 4]| {
        let [s, i, _, _] = *y;
        let incidence = contact * i * s;
        let recovery = gamma * i;
        [-incidence, incidence - recovery, recovery, home * i]
    }
}

/// Integration controls for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSettings {
    /// End time in days; `None` stops once the outbreak has died out.
    pub t_end: Option<f64>,
    /// Base RK4 step in days.
    pub dt: f64,
    /// Step-halving acceptance tolerance (absolute, in children) and
    /// maximum number of halvings.
    pub solver: SolverSettings,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            t_end: None,
            dt: 0.01,
            solver: SolverSettings::new(1e-6, 8).expect("valid default settings"),
        }
    }
}

impl SimulationSettings {
    pub fn until(t_end: f64) -> Self {
        Self {
            t_end: Some(t_end),
            ..Self::default()
        }
    }
}

/// Hard cap on the automatic horizon, `10/γ · ln(N / 1e-6)` days.
pub fn horizon_cap(params: &DiseaseParams, config: &ScenarioConfig) -> f64 {
    10.0 / params.gamma * (config.population / EXTINCTION_FRACTION).ln().max(1.0)
}

/// Integrates the model from the scenario's initial condition.
///
/// With `settings.t_end = None` the horizon is the first step time at which
/// `I < 1e-6·N`, or [`horizon_cap`] if that comes first.
pub fn simulate(params: &DiseaseParams, config: &ScenarioConfig, settings: &SimulationSettings) -> Result<Trajectory> {
    let n = config.population;
    let y0 = [config.s0 * n, config.i0 * n, config.r0_frac * n, 0.0];
    let rhs = augmented_rhs(params, config);

    let t_end = match settings.t_end {
        Some(t) => t,
        None => {
            if !(settings.dt > 0.0) || !settings.dt.is_finite() {
                return Err(invalid(
                    "dt",
                    format!("must be positive and finite, got {}", settings.dt),
                ));
            }
            let threshold = EXTINCTION_FRACTION * n;
            let cap = horizon_cap(params, config);
            let probe = integrate_fixed(&rhs, y0, cap, settings.dt, |y| y[1] < threshold);
            probe.last().map_or(cap, |s| s.t).max(settings.dt.min(cap))
        }
    };

    let samples = integrate_ode(&rhs, y0, t_end, settings.dt, settings.solver)?
        .into_iter()
        .map(|s| PopulationState::from_vector(s.t, s.y))
        .collect();

    Ok(Trajectory {
        samples,
        params: *params,
        config: *config,
    })
}

/// Fraction of the population ever infected, read off the terminal `R/N`.
pub fn attack_rate(traj: &Trajectory) -> Result<f64> {
    let last = traj.last().ok_or(Error::EmptyTrajectory)?;
    let n = traj.config.population;
    let threshold = EXTINCTION_FRACTION * n;
    if last.i >= threshold {
        return Err(Error::NotConverged {
            t: last.t,
            infected: last.i,
            threshold,
        });
    }
    Ok((last.r / n).clamp(0.0, 1.0))
}
