//! Ready-made systems: two-level, three-level Lambda, four-level and the
//! 16-sublevel 87Rb D1 Raman system.
//!
//! All frequencies and rates are angular (rad/s). Level numbering in the
//! docs is 1-based to match the usual notation; the returned specs use
//! 0-based indices.

use crate::error::{Error, Result};
use crate::model::{HarmonicTag, SystemSpec};

pub mod rb87;

fn check_rates(rates: &[(&str, f64)]) -> Result<()> {
    for (name, value) in rates {
        if !value.is_finite() || *value < 0.0 {
            return Err(Error::InvalidInput(format!("{name} must be a non-negative rate, got {value}")));
        }
    }
    Ok(())
}

/// Ground level 1 and excited level 2 with decay `Γ` and incoherent
/// repumping `Γ_op` from 1 to 2. The pump has detuning `Δ`; the probe sits
/// at `δ` from the pump.
pub fn two_level(
    gamma: f64,
    gamma_op: f64,
    pump_rabi: f64,
    probe_rabi: f64,
    detuning: f64,
    beat: f64,
) -> Result<SystemSpec> {
    check_rates(&[("gamma", gamma), ("gamma_op", gamma_op)])?;
    let spec = SystemSpec::new(2)
        .with_level(0, 0.0, gamma_op)
        .with_level(1, detuning, gamma)
        .with_coupling(0, 1, pump_rabi, HarmonicTag::Static)
        .with_coupling(0, 1, probe_rabi, HarmonicTag::Beat)
        .with_source(1, 0, gamma)
        .with_source(0, 1, gamma_op)
        .with_beat_frequency(beat);
    spec.validate()?;
    Ok(spec)
}

/// Lambda system: ground levels 1 and 2 (level 1 lies `Δ` below level 2),
/// excited level 3. The pump drives both legs with detuning `δ_p` on the
/// 2-3 leg; the probe drives the 2-3 leg only. Level 3 decays with `Γ/2`
/// into each ground level and the ground levels exchange population at `Γ_g`.
pub fn lambda_three_level(
    gamma: f64,
    gamma_g: f64,
    pump_rabi: f64,
    probe_rabi: f64,
    hyperfine: f64,
    pump_detuning: f64,
    beat: f64,
) -> Result<SystemSpec> {
    check_rates(&[("gamma", gamma), ("gamma_g", gamma_g)])?;
    let spec = SystemSpec::new(3)
        .with_level(0, hyperfine, gamma_g)
        .with_level(1, 0.0, gamma_g)
        .with_level(2, pump_detuning, gamma)
        .with_coupling(0, 2, pump_rabi, HarmonicTag::Static)
        .with_coupling(1, 2, pump_rabi, HarmonicTag::Static)
        .with_coupling(1, 2, probe_rabi, HarmonicTag::Beat)
        .with_source(1, 0, gamma_g)
        .with_source(0, 1, gamma_g)
        .with_source(2, 0, 0.5 * gamma)
        .with_source(2, 1, 0.5 * gamma)
        .with_beat_frequency(beat);
    spec.validate()?;
    Ok(spec)
}

/// The Lambda system with a second excited level 4 lying `Δ_23` above
/// level 3. The pump drives all four optical transitions; the probe drives
/// 2-3 and 2-4.
#[allow(clippy::too_many_arguments)]
pub fn four_level(
    gamma: f64,
    gamma_g: f64,
    pump_rabi: f64,
    probe_rabi: f64,
    hyperfine: f64,
    excited_splitting: f64,
    pump_detuning: f64,
    beat: f64,
) -> Result<SystemSpec> {
    check_rates(&[("gamma", gamma), ("gamma_g", gamma_g)])?;
    let mut spec = SystemSpec::new(4)
        .with_level(0, hyperfine, gamma_g)
        .with_level(1, 0.0, gamma_g)
        .with_level(2, pump_detuning, gamma)
        .with_level(3, pump_detuning - excited_splitting, gamma)
        .with_source(1, 0, gamma_g)
        .with_source(0, 1, gamma_g)
        .with_beat_frequency(beat);
    for excited in [2, 3] {
        spec = spec
            .with_coupling(0, excited, pump_rabi, HarmonicTag::Static)
            .with_coupling(1, excited, pump_rabi, HarmonicTag::Static)
            .with_coupling(1, excited, probe_rabi, HarmonicTag::Beat)
            .with_source(excited, 0, 0.5 * gamma)
            .with_source(excited, 1, 0.5 * gamma);
    }
    spec.validate()?;
    Ok(spec)
}
