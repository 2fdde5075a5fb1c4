//! Fixed-step RK4 integration of the full time-dependent equation, used as
//! an independent oracle for the harmonic solver.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, CMatrix, DensityHarmonics, HamiltonianDecomposition, SystemSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Uniformly sampled density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<CMatrix>,
}

impl Trajectory {
    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    /// Largest `|tr ρ - 1|` along the trajectory.
    pub fn max_trace_defect(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.trace() - Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `ρ - ρ†` along the trajectory.
    pub fn max_hermiticity_defect(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s - s.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

/// Right-hand side `-i(H(t)ρ - ρH(t)†) + ρs(t)`.
struct Dynamics {
    h: HamiltonianDecomposition,
    sources: Vec<(usize, usize, f64)>,
    beat: f64,
}

impl Dynamics {
    fn new(spec: &SystemSpec) -> Result<Self> {
        Ok(Dynamics {
            h: build_hamiltonian(spec)?,
            sources: spec.sources.iter().map(|s| (s.from, s.to, s.rate)).collect(),
            beat: spec.beat_frequency,
        })
    }

    fn eval(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let phase = (I * (self.beat * t)).exp();
        let h = &self.h.h0 + &self.h.h_plus * phase + &self.h.h_minus * phase.conj();
        let mut out = (&h * rho - rho * h.adjoint()) * (-I);
        for &(from, to, rate) in &self.sources {
            out[(to, to)] += rho[(from, from)] * rate;
        }
        out
    }

    fn step(&self, t: f64, dt: f64, rho: &CMatrix) -> CMatrix {
        let r = |x: f64| Complex64::new(x, 0.0);
        let k1 = self.eval(t, rho);
        let k2 = self.eval(t + 0.5 * dt, &(rho + &k1 * r(0.5 * dt)));
        let k3 = self.eval(t + 0.5 * dt, &(rho + &k2 * r(0.5 * dt)));
        let k4 = self.eval(t + dt, &(rho + &k3 * r(dt)));
        rho + (k1 + k2 * r(2.0) + k3 * r(2.0) + k4) * r(dt / 6.0)
    }
}

fn check_finite(rho: &CMatrix, t: f64) -> Result<()> {
    if rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Unstable { time: t })
    }
}

/// All population in level 0.
pub fn ground_state(n_levels: usize) -> CMatrix {
    let mut rho = CMatrix::zeros(n_levels, n_levels);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    rho
}

/// Integrates from `t = 0` for `steps` steps of size `dt`, keeping every state.
pub fn integrate(spec: &SystemSpec, initial: &CMatrix, dt: f64, steps: usize) -> Result<Trajectory> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if initial.nrows() != spec.n_levels || initial.ncols() != spec.n_levels {
        return Err(Error::DimensionMismatch { expected: spec.n_levels, found: initial.nrows() });
    }
    let dynamics = Dynamics::new(spec)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    for s in 0..steps {
        let t = s as f64 * dt;
        let next = dynamics.step(t, dt, &states[s]);
        check_finite(&next, t + dt)?;
        states.push(next);
    }
    Ok(Trajectory { t0: 0.0, dt, states })
}

/// Projects the last period of a settled trajectory onto harmonics
/// `-K..=K` with the rectangle rule, which is exact for trigonometric
/// polynomials of degree below the number of samples per period.
///
/// The trajectory must hold at least two periods at an integer number of
/// samples per period. Fails with [`Error::NotSettled`] if the last two
/// periods differ by more than `tolerance`.
pub fn extract_harmonics(
    trajectory: &Trajectory,
    beat_frequency: f64,
    order: usize,
    tolerance: f64,
) -> Result<DensityHarmonics> {
    if beat_frequency == 0.0 || !beat_frequency.is_finite() {
        return Err(Error::InvalidInput("harmonic extraction needs a nonzero beat frequency".into()));
    }
    let period = 2.0 * PI / beat_frequency.abs();
    let per_period = (period / trajectory.dt).round() as usize;
    if per_period == 0 || ((per_period as f64 * trajectory.dt) / period - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("time step does not divide the beat period".into()));
    }
    let len = trajectory.states.len();
    if len < 2 * per_period + 1 {
        return Err(Error::InvalidInput("trajectory is shorter than two beat periods".into()));
    }
    let start = len - 1 - per_period;
    let drift = period_drift(&trajectory.states[start - per_period..]);
    if drift > tolerance {
        return Err(Error::NotSettled { drift, duration: trajectory.time(len - 1) - trajectory.t0 });
    }
    Ok(project(&trajectory.states[start..len - 1], trajectory.t0 + start as f64 * trajectory.dt, trajectory.dt, beat_frequency, order))
}

/// Largest entry difference between samples one period apart; `states`
/// spans exactly two periods plus the closing sample.
fn period_drift(states: &[CMatrix]) -> f64 {
    let per_period = (states.len() - 1) / 2;
    (0..=per_period)
        .map(|s| {
            (&states[s + per_period] - &states[s]).iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn project(samples: &[CMatrix], t0: f64, dt: f64, beat: f64, order: usize) -> DensityHarmonics {
    let n = samples[0].nrows();
    let mut out = DensityHarmonics::zeros(n, order);
    let count = samples.len() as f64;
    let kmax = order as i32;
    for k in -kmax..=kmax {
        let target = out.get_mut(k).expect("harmonic within order");
        for (s, rho) in samples.iter().enumerate() {
            let t = t0 + s as f64 * dt;
            *target += rho * (-I * (k as f64 * beat * t)).exp();
        }
        *target /= Complex64::new(count, 0.0);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Step size as a fraction of the shortest time scale.
    pub resolution: f64,
    /// Bound on the extrapolated distance to the periodic steady state.
    pub settle_tolerance: f64,
    /// Give up after this many beat periods.
    pub max_periods: usize,
    /// Give up if one period needs more steps than this.
    pub max_steps_per_period: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            resolution: 0.01,
            settle_tolerance: 1e-6,
            max_periods: 20_000,
            max_steps_per_period: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub harmonics: DensityHarmonics,
    /// Period-to-period change in the final period.
    pub drift: f64,
    /// Integrated time when the trajectory was declared settled.
    pub duration: f64,
    pub steps_per_period: usize,
}

/// Integrates from the ground state until the trajectory repeats with period
/// `2π/δ`, then projects the final period onto harmonics.
///
/// Relaxation can be slow compared to the beat period, so the period-to-period
/// change `d` alone understates the distance to the limit cycle. With the
/// observed contraction ratio `r` the remaining distance is bounded by
/// `d r / (1 - r)`, and both must fall below the tolerance.
pub fn periodic_steady_state(spec: &SystemSpec, order: usize, config: &OracleConfig) -> Result<OracleResult> {
    let beat = spec.beat_frequency;
    if beat == 0.0 {
        return Err(Error::InvalidInput("the time-domain oracle needs a nonzero beat frequency".into()));
    }
    let dynamics = Dynamics::new(spec)?;
    let period = 2.0 * PI / beat.abs();
    let fastest = spec.rate_scale().max(f64::MIN_POSITIVE);
    let dt_max = config.resolution * period.min(2.0 * PI / fastest);
    let per_period = (period / dt_max).ceil() as usize;
    if per_period > config.max_steps_per_period {
        return Err(Error::InvalidInput(format!(
            "oracle would need {per_period} steps per beat period (limit {})",
            config.max_steps_per_period
        )));
    }
    let per_period = per_period.max(2 * order + 2);
    let dt = period / per_period as f64;

    let mut rho = ground_state(spec.n_levels);
    let mut samples = Vec::with_capacity(per_period);
    let mut drifts: Vec<f64> = Vec::new();
    let noise_floor = 64.0 * f64::EPSILON;
    for p in 0..config.max_periods {
        let start = rho.clone();
        samples.clear();
        for s in 0..per_period {
            samples.push(rho.clone());
            let t = (p * per_period + s) as f64 * dt;
            rho = dynamics.step(t, dt, &rho);
        }
        let t_end = ((p + 1) * per_period) as f64 * dt;
        check_finite(&rho, t_end)?;
        let drift = (&rho - &start).iter().map(|z| z.norm()).fold(0.0, f64::max);
        drifts.push(drift);
        if drifts.len() < 4 {
            continue;
        }
        let settled = if drift <= noise_floor {
            true
        } else {
            let ratio = drifts[drifts.len() - 3..]
                .windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 1.0 })
                .fold(0.0, f64::max);
            ratio < 1.0 && drift <= config.settle_tolerance && drift * ratio / (1.0 - ratio) <= config.settle_tolerance
        };
        if settled {
            let t0 = (p * per_period) as f64 * dt;
            return Ok(OracleResult {
                harmonics: project(&samples, t0, dt, beat, order),
                drift,
                duration: t_end,
                steps_per_period: per_period,
            });
        }
    }
    Err(Error::NotSettled {
        drift: drifts.last().copied().unwrap_or(f64::INFINITY),
        duration: (config.max_periods * per_period) as f64 * dt,
    })
}
