//! Probe susceptibility, detuning sweeps, Doppler averaging and
//! truncation-order studies.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DensityHarmonics, HarmonicTag, SystemSpec};
use crate::parallel::Execution;
use crate::solver::{solve_with, SolveOptions};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Vapor properties entering the susceptibility prefactor and the Doppler
/// distribution. SI units, angular frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Number density (m⁻³).
    pub number_density: f64,
    /// Saturation intensity (W/m²).
    pub saturation_intensity: f64,
    /// Natural linewidth (rad/s).
    pub linewidth: f64,
    pub speed_of_light: f64,
    /// Optical wavevector (rad/m).
    pub wavevector: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Temperature (K).
    pub temperature: f64,
}

impl MediumParams {
    /// Rb vapor at 100 °C on the D1 line with the given linewidth.
    pub fn rubidium_d1(linewidth: f64) -> Self {
        MediumParams {
            number_density: 3e18,
            saturation_intensity: 120.0,
            linewidth,
            speed_of_light: SPEED_OF_LIGHT,
            wavevector: 2.0 * PI / 795e-9,
            mass: 86.909 * ATOMIC_MASS_UNIT,
            temperature: 373.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("number_density", self.number_density),
            ("saturation_intensity", self.saturation_intensity),
            ("linewidth", self.linewidth),
            ("speed_of_light", self.speed_of_light),
            ("wavevector", self.wavevector),
            ("mass", self.mass),
            ("temperature", self.temperature),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!("medium {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Most probable speed `√(2kT/m)` (m/s).
    pub fn thermal_speed(&self) -> f64 {
        (2.0 * BOLTZMANN * self.temperature / self.mass).sqrt()
    }

    /// Full width at half maximum of the Doppler profile (Hz).
    pub fn doppler_fwhm_hz(&self) -> f64 {
        2.0 * (2f64.ln()).sqrt() * self.thermal_speed() * self.wavevector / (2.0 * PI)
    }

    /// `ħ c0 n0 (Γ/2)² / I_sat`.
    pub fn chi_prefactor(&self) -> f64 {
        HBAR * self.speed_of_light * self.number_density * (0.5 * self.linewidth).powi(2)
            / self.saturation_intensity
    }
}

/// One probe-driven coherence `ρ^{-1}_{row,col}` (excited row, ground
/// column) with its relative dipole weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeCoherence {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

/// How the probe field reads out the medium response.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResponse {
    /// Reference probe Rabi frequency `Ω_s` (rad/s).
    pub rabi: f64,
    pub coherences: Vec<ProbeCoherence>,
}

impl ProbeResponse {
    /// One coherence per beat coupling, weighted by its Rabi frequency
    /// relative to `rabi`.
    pub fn from_beat_couplings(spec: &SystemSpec, rabi: f64) -> Result<Self> {
        if rabi.is_nan() || rabi <= 0.0 {
            return Err(Error::InvalidInput(format!("probe Rabi frequency must be positive, got {rabi}")));
        }
        let coherences: Vec<_> = spec
            .couplings
            .iter()
            .filter(|c| c.tag == HarmonicTag::Beat)
            .map(|c| ProbeCoherence { row: c.col, col: c.row, weight: c.rabi / rabi })
            .collect();
        if coherences.is_empty() {
            return Err(Error::InvalidInput("system has no probe (beat) couplings".into()));
        }
        Ok(ProbeResponse { rabi, coherences })
    }
}

/// Linear susceptibility seen by the probe:
/// `χ = -(ħ c0 n0 / (I_sat Ω_s)) (Γ/2)² Σ w ρ^{-1}_{e,g}`.
///
/// The overall sign makes an absorbing medium have `Im χ > 0`, so the gain
/// `-Im χ` is negative for absorption.
pub fn susceptibility(rho: &DensityHarmonics, medium: &MediumParams, probe: &ProbeResponse) -> Result<Complex64> {
    if probe.coherences.is_empty() {
        return Err(Error::InvalidInput("probe coherence list is empty".into()));
    }
    if probe.rabi.is_nan() || probe.rabi <= 0.0 {
        return Err(Error::InvalidInput(format!("probe Rabi frequency must be positive, got {}", probe.rabi)));
    }
    let rho_m = rho.get(-1)?;
    let n = rho.n_levels();
    let mut sum = Complex64::new(0.0, 0.0);
    for c in &probe.coherences {
        if c.row >= n || c.col >= n {
            return Err(Error::LevelOutOfRange {
                what: "probe coherence".into(),
                level: c.row.max(c.col),
                n_levels: n,
            });
        }
        sum += rho_m[(c.row, c.col)] * c.weight;
    }
    Ok(-sum * (medium.chi_prefactor() / probe.rabi))
}

/// Produces the system for a given probe detuning and Doppler shift `k·v`.
pub trait SpecBuilder: Sync {
    fn build(&self, detuning: f64, doppler_shift: f64) -> Result<SystemSpec>;
}

impl<F> SpecBuilder for F
where
    F: Fn(f64, f64) -> Result<SystemSpec> + Sync,
{
    fn build(&self, detuning: f64, doppler_shift: f64) -> Result<SystemSpec> {
        self(detuning, doppler_shift)
    }
}

/// Scans the beat frequency `δ = detuning + beat_offset` over a fixed base
/// system. The Doppler shift moves the listed levels: their detuning grows
/// by `k·v`, as seen by an atom moving along the beams.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningScan {
    pub base: SystemSpec,
    pub beat_offset: f64,
    pub moving_levels: Vec<usize>,
}

impl SpecBuilder for DetuningScan {
    fn build(&self, detuning: f64, doppler_shift: f64) -> Result<SystemSpec> {
        let mut spec = self.base.clone();
        spec.beat_frequency = detuning + self.beat_offset;
        for &l in &self.moving_levels {
            let d = spec.diagonal.get_mut(l).ok_or_else(|| Error::LevelOutOfRange {
                what: "moving level".into(),
                level: l,
                n_levels: self.base.n_levels,
            })?;
            *d -= Complex64::new(2.0 * doppler_shift, 0.0);
        }
        Ok(spec)
    }
}

/// Velocity classes and their normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    /// Velocities along the beams (m/s).
    pub velocities: Vec<f64>,
    pub weights: Vec<f64>,
}

impl VelocityGrid {
    /// All atoms at rest.
    pub fn stationary() -> Self {
        VelocityGrid { velocities: vec![0.0], weights: vec![1.0] }
    }

    /// `groups` uniformly spaced classes over `±span_sigmas·σ`, weights
    /// `∝ exp(-v²/σ²)` with `σ = √(2kT/m)`, normalized on the grid.
    pub fn maxwell(medium: &MediumParams, groups: usize, span_sigmas: f64) -> Result<Self> {
        medium.validate()?;
        if groups == 0 {
            return Err(Error::InvalidInput("at least one velocity group is required".into()));
        }
        if groups == 1 {
            return Ok(Self::stationary());
        }
        if span_sigmas.is_nan() || span_sigmas <= 0.0 {
            return Err(Error::InvalidInput(format!("velocity span must be positive, got {span_sigmas}")));
        }
        let sigma = medium.thermal_speed();
        let vmax = span_sigmas * sigma;
        let velocities: Vec<f64> = (0..groups)
            .map(|i| -vmax + 2.0 * vmax * i as f64 / (groups - 1) as f64)
            .collect();
        let raw: Vec<f64> = velocities.iter().map(|v| (-(v / sigma).powi(2)).exp()).collect();
        let total: f64 = raw.iter().sum();
        Ok(VelocityGrid { velocities, weights: raw.iter().map(|w| w / total).collect() })
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("a sweep needs at least 2 points, got {n}")));
    }
    if !start.is_finite() || !stop.is_finite() || start >= stop {
        return Err(Error::InvalidInput(format!("invalid sweep range [{start}, {stop}]")));
    }
    Ok((0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Probe detunings (rad/s), passed to the builder.
    pub detunings: Vec<f64>,
    pub order: usize,
    pub velocity: VelocityGrid,
    pub solve: SolveOptions,
    pub execution: Execution,
    /// Fraction of failed points tolerated before the sweep fails.
    pub max_failure_fraction: f64,
}

impl SweepConfig {
    pub fn new(detunings: Vec<f64>, order: usize) -> Self {
        SweepConfig {
            detunings,
            order,
            velocity: VelocityGrid::stationary(),
            solve: SolveOptions::default(),
            execution: Execution::default(),
            max_failure_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    /// Probe detuning (rad/s).
    pub detuning: f64,
    /// Velocity-averaged susceptibility; NaN if the point failed.
    pub chi: Complex64,
    /// Velocity-averaged `Re ρ^0_ll`.
    pub populations: Vec<f64>,
    /// Worst residual over the velocity classes.
    pub residual: f64,
    /// Worst condition estimate over the velocity classes.
    pub condition: f64,
    pub error: Option<String>,
}

impl SpectrumPoint {
    /// `-Im χ`.
    pub fn gain(&self) -> f64 {
        -self.chi.im
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub order: usize,
    pub n_levels: usize,
    pub points: Vec<SpectrumPoint>,
}

impl SpectrumResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// CSV with a header row: `detuning_hz, chi_real, chi_imag, gain,
    /// rho0_11, ..., rho0_NN`. Floats use the shortest representation that
    /// round-trips, so identical inputs give identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_with(out, |v| format!("{v:?}"))
    }

    /// As [`write_csv`](Self::write_csv) with every value rounded to
    /// `digits` significant digits.
    pub fn write_csv_rounded<W: Write>(&self, out: W, digits: usize) -> Result<()> {
        let p = digits.saturating_sub(1);
        self.write_csv_with(out, move |v| format!("{v:.p$e}"))
    }

    fn write_csv_with<W: Write>(&self, out: W, fmt: impl Fn(f64) -> String) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["detuning_hz".to_string(), "chi_real".into(), "chi_imag".into(), "gain".into()];
        header.extend((1..=self.n_levels).map(|l| format!("rho0_{l}{l}")));
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![fmt(p.detuning / (2.0 * PI)), fmt(p.chi.re), fmt(p.chi.im), fmt(p.gain())];
            row.extend(p.populations.iter().map(|v| fmt(*v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct ClassResult {
    chi: Complex64,
    populations: Vec<f64>,
    residual: f64,
    condition: f64,
}

fn solve_class(
    builder: &dyn SpecBuilder,
    probe: &ProbeResponse,
    medium: &MediumParams,
    config: &SweepConfig,
    detuning: f64,
    velocity: f64,
) -> Result<ClassResult> {
    let spec = builder.build(detuning, medium.wavevector * velocity)?;
    let sol = solve_with(&spec, config.order, &config.solve)?;
    Ok(ClassResult {
        chi: susceptibility(&sol.harmonics, medium, probe)?,
        populations: sol.harmonics.populations(),
        residual: sol.residual,
        condition: sol.condition,
    })
}

/// Solves every (detuning, velocity class) pair and averages each point
/// over the velocity classes with the grid weights.
///
/// Work is distributed over the flattened grid; the reduction for each
/// point always runs in velocity order, so results do not depend on the
/// execution mode or worker count. A failing class fails its point; the
/// sweep fails with [`Error::SweepFailed`] if more than
/// `max_failure_fraction` of the points fail.
pub fn sweep(
    builder: &dyn SpecBuilder,
    probe: &ProbeResponse,
    medium: &MediumParams,
    config: &SweepConfig,
) -> Result<SpectrumResult> {
    medium.validate()?;
    if config.detunings.is_empty() {
        return Err(Error::InvalidInput("sweep has no detuning points".into()));
    }
    let grid = &config.velocity;
    if grid.is_empty() || grid.weights.len() != grid.velocities.len() {
        return Err(Error::InvalidInput("velocity grid is empty or inconsistent".into()));
    }
    let n_levels = builder.build(config.detunings[0], 0.0)?.n_levels;
    let groups = grid.len();
    let total = config.detunings.len() * groups;
    let classes = config.execution.map(total, |idx| {
        let (p, g) = (idx / groups, idx % groups);
        solve_class(builder, probe, medium, config, config.detunings[p], grid.velocities[g])
    });

    let mut points = Vec::with_capacity(config.detunings.len());
    for (p, chunk) in classes.chunks(groups).enumerate() {
        let detuning = config.detunings[p];
        let mut chi = Complex64::new(0.0, 0.0);
        let mut populations = vec![0.0; n_levels];
        let (mut residual, mut condition) = (0.0f64, 0.0f64);
        let mut error = None;
        for (class, w) in chunk.iter().zip(&grid.weights) {
            match class {
                Ok(c) => {
                    chi += c.chi * *w;
                    for (acc, v) in populations.iter_mut().zip(&c.populations) {
                        *acc += w * v;
                    }
                    residual = residual.max(c.residual);
                    condition = condition.max(c.condition);
                }
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        if error.is_some() {
            chi = Complex64::new(f64::NAN, f64::NAN);
            populations.iter_mut().for_each(|v| *v = f64::NAN);
        }
        points.push(SpectrumPoint { detuning, chi, populations, residual, condition, error });
    }
    let result = SpectrumResult { order: config.order, n_levels, points };
    let failed = result.failures();
    if failed as f64 > config.max_failure_fraction * result.points.len() as f64 {
        let first = result.points.iter().find_map(|p| p.error.clone()).unwrap_or_default();
        return Err(Error::SweepFailed { failed, total: result.points.len(), first });
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Spectra for `K = 1..=K_max`.
    pub spectra: Vec<SpectrumResult>,
    /// `max |χ_{K+1} - χ_K|` over the detunings, for `K = 1..K_max`.
    pub deviations: Vec<f64>,
}

impl ConvergenceReport {
    /// `max |χ_K - χ_1|` and the detuning (rad/s) where it occurs.
    pub fn max_deviation_from_first(&self, k: usize) -> (f64, f64) {
        let first = &self.spectra[0];
        let other = &self.spectra[k - 1];
        first
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| ((a.chi - b.chi).norm(), a.detuning))
            .fold((0.0, f64::NAN), |best, cur| if cur.0 > best.0 { cur } else { best })
    }
}

/// Runs the same sweep at every order `1..=max_order`.
pub fn k_convergence(
    builder: &dyn SpecBuilder,
    probe: &ProbeResponse,
    medium: &MediumParams,
    config: &SweepConfig,
    max_order: usize,
) -> Result<ConvergenceReport> {
    if max_order < 1 {
        return Err(Error::InvalidInput("maximum order must be at least 1".into()));
    }
    let mut spectra = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        let mut cfg = config.clone();
        cfg.order = order;
        spectra.push(sweep(builder, probe, medium, &cfg)?);
    }
    let deviations = spectra
        .windows(2)
        .map(|w| {
            w[0].points
                .iter()
                .zip(&w[1].points)
                .map(|(a, b)| (a.chi - b.chi).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ConvergenceReport { spectra, deviations })
}
