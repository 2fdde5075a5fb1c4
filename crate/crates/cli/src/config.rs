//! Run configuration files.
//!
//! Every physical quantity carries its unit in the key name. Frequencies
//! accept either `*_hz` (cycles per second, multiplied by 2π on load) or
//! `*_rad_per_s`; giving both is an error. Level indices are 1-based.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pumpprobe::models::rb87::{self, CrossRelaxation, DipoleTable, Rb87Params};
use pumpprobe::spectroscopy::{MediumParams, ProbeCoherence, ProbeResponse, ATOMIC_MASS_UNIT};
use pumpprobe::{HarmonicTag, SourceChannel, SystemSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rb87: Option<Rb87Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumSection>,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n_levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beat_frequency_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beat_frequency_rad_per_s: Option<f64>,
    pub levels: Vec<LevelEntry>,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
    #[serde(default)]
    pub sources: Vec<SourceEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelEntry {
    pub level: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linewidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linewidth_rad_per_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Pump,
    Probe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub lower: usize,
    pub upper: usize,
    pub field: Field,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_rad_per_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceEntry {
    pub from: usize,
    pub to: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_rad_per_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossRelaxationKind {
    AllPairs,
    MatchedPairs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rb87Section {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_detuning_linewidths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_rabi_scale_linewidths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_rabi_scale_linewidths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_relaxation_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_relaxation: Option<CrossRelaxationKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_photon_detuning_hz: Option<f64>,
    /// Dipole table file, relative to the config file. Defaults to the bundled table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dipole_table: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_rad_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coherences: Vec<CoherenceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceEntry {
    pub upper: usize,
    pub lower: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linewidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linewidth_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub number_density_per_m3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation_intensity_w_per_m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavevector_rad_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_amu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
    pub order: usize,
    /// Added to the scanned detuning to form the beat frequency.
    pub beat_offset_hz: f64,
    /// Levels whose detuning follows the Doppler shift.
    pub moving_levels: Vec<usize>,
    pub velocity_groups: usize,
    pub velocity_span_sigmas: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            start_hz: -150e6,
            stop_hz: 150e6,
            points: 301,
            order: 1,
            beat_offset_hz: 0.0,
            moving_levels: Vec::new(),
            velocity_groups: 1,
            velocity_span_sigmas: 5.0,
        }
    }
}

/// A configuration with every default applied and the system built.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub spec: SystemSpec,
    pub probe: ProbeResponse,
    pub medium: MediumParams,
    pub sweep: SweepSection,
}

fn angular(what: &str, hz: Option<f64>, rad: Option<f64>) -> Result<Option<f64>> {
    match (hz, rad) {
        (Some(_), Some(_)) => bail!("{what}: give either {what}_hz or {what}_rad_per_s, not both"),
        (Some(f), None) => Ok(Some(2.0 * PI * f)),
        (None, r) => Ok(r),
    }
}

fn required(what: &str, context: &str, hz: Option<f64>, rad: Option<f64>) -> Result<f64> {
    angular(what, hz, rad)?.ok_or_else(|| anyhow!("{context}: missing {what}_hz or {what}_rad_per_s"))
}

fn index(what: &str, level: usize, n: usize) -> Result<usize> {
    if level == 0 || level > n {
        bail!("{what}: level {level} is outside 1..={n}");
    }
    Ok(level - 1)
}

pub fn load(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse(text: &str) -> Result<ConfigFile> {
    Ok(toml::from_str(text)?)
}

impl SystemSection {
    fn build(&self) -> Result<SystemSpec> {
        let n = self.n_levels;
        let mut spec = SystemSpec::new(n);
        let mut seen = vec![false; n];
        for (i, l) in self.levels.iter().enumerate() {
            let ctx = format!("system.levels[{i}]");
            let at = index(&ctx, l.level, n)?;
            if std::mem::replace(&mut seen[at], true) {
                bail!("{ctx}: level {} listed twice", l.level);
            }
            let detuning = angular("detuning", l.detuning_hz, l.detuning_rad_per_s)?.unwrap_or(0.0);
            let linewidth = angular("linewidth", l.linewidth_hz, l.linewidth_rad_per_s)?.unwrap_or(0.0);
            spec = spec.with_level(at, detuning, linewidth);
        }
        for (i, c) in self.couplings.iter().enumerate() {
            let ctx = format!("system.couplings[{i}]");
            let tag = match c.field {
                Field::Pump => HarmonicTag::Static,
                Field::Probe => HarmonicTag::Beat,
            };
            let rabi = required("rabi", &ctx, c.rabi_hz, c.rabi_rad_per_s)?;
            spec = spec.with_coupling(index(&ctx, c.lower, n)?, index(&ctx, c.upper, n)?, rabi, tag);
        }
        for (i, s) in self.sources.iter().enumerate() {
            let ctx = format!("system.sources[{i}]");
            let rate = required("rate", &ctx, s.rate_hz, s.rate_rad_per_s)?;
            spec = spec.with_source(index(&ctx, s.from, n)?, index(&ctx, s.to, n)?, rate);
        }
        let beat = angular("beat_frequency", self.beat_frequency_hz, self.beat_frequency_rad_per_s)?.unwrap_or(0.0);
        let spec = spec.with_beat_frequency(beat);
        spec.validate()?;
        Ok(spec)
    }

    /// Explicit form of `spec`, in rad/s so that it re-parses bit for bit.
    pub fn from_spec(spec: &SystemSpec) -> Self {
        SystemSection {
            n_levels: spec.n_levels,
            beat_frequency_hz: None,
            beat_frequency_rad_per_s: Some(spec.beat_frequency),
            levels: (0..spec.n_levels)
                .map(|l| LevelEntry {
                    level: l + 1,
                    detuning_rad_per_s: Some(spec.detuning(l)),
                    linewidth_rad_per_s: Some(spec.linewidth(l)),
                    ..LevelEntry::default()
                })
                .collect(),
            couplings: spec
                .couplings
                .iter()
                .map(|c| CouplingEntry {
                    lower: c.row + 1,
                    upper: c.col + 1,
                    field: match c.tag {
                        HarmonicTag::Static => Field::Pump,
                        HarmonicTag::Beat => Field::Probe,
                    },
                    rabi_hz: None,
                    rabi_rad_per_s: Some(c.rabi),
                })
                .collect(),
            sources: spec
                .sources
                .iter()
                .map(|s: &SourceChannel| SourceEntry {
                    from: s.from + 1,
                    to: s.to + 1,
                    rate_hz: None,
                    rate_rad_per_s: Some(s.rate),
                })
                .collect(),
        }
    }
}

struct Built {
    spec: SystemSpec,
    probe: Option<ProbeResponse>,
    linewidth: f64,
    wavelength: Option<f64>,
    beat_offset: Option<f64>,
    moving_levels: Option<Vec<usize>>,
}

impl Rb87Section {
    fn build(&self, base_dir: &Path) -> Result<Built> {
        let defaults = Rb87Params::default();
        let g = defaults.linewidth;
        let params = Rb87Params {
            pump_detuning: self.pump_detuning_linewidths.map_or(defaults.pump_detuning, |x| x * g),
            pump_rabi_scale: self.pump_rabi_scale_linewidths.map_or(defaults.pump_rabi_scale, |x| x * g),
            probe_rabi_scale: self.probe_rabi_scale_linewidths.map_or(defaults.probe_rabi_scale, |x| x * g),
            cross_relaxation_rate: self.cross_relaxation_rad_per_s.unwrap_or(defaults.cross_relaxation_rate),
            cross_relaxation: match self.cross_relaxation {
                Some(CrossRelaxationKind::MatchedPairs) => CrossRelaxation::MatchedPairs,
                Some(CrossRelaxationKind::AllPairs) | None => CrossRelaxation::AllPairs,
            },
            two_photon_detuning: self.two_photon_detuning_hz.map_or(defaults.two_photon_detuning, |f| 2.0 * PI * f),
            ..defaults
        };
        let table = match &self.dipole_table {
            Some(file) => {
                let path = base_dir.join(file);
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                DipoleTable::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => DipoleTable::bundled(),
        };
        let system = rb87::rb87_d1_sixteen_level(&params, &table)?;
        let moving = system.excited_levels();
        Ok(Built {
            probe: Some(system.probe.clone()),
            linewidth: params.linewidth,
            wavelength: Some(rb87::WAVELENGTH),
            beat_offset: Some(system.beat_offset),
            moving_levels: Some(moving),
            spec: system.spec,
        })
    }
}

impl ConfigFile {
    /// Applies defaults and builds the system. `base_dir` anchors relative
    /// paths inside the file.
    pub fn resolve(&self, base_dir: &Path) -> Result<Resolved> {
        let built = match (&self.system, &self.rb87) {
            (Some(_), Some(_)) => bail!("give either a [system] or an [rb87] section, not both"),
            (None, None) => bail!("missing [system] section"),
            (Some(system), None) => {
                let spec = system.build().context("in [system]")?;
                let linewidth = (0..spec.n_levels).map(|l| spec.linewidth(l)).fold(0.0, f64::max);
                Built { spec, probe: None, linewidth, wavelength: None, beat_offset: None, moving_levels: None }
            }
            (None, Some(rb)) => rb.build(base_dir).context("in [rb87]")?,
        };
        let spec = built.spec;

        let mut sweep = self.sweep.clone();
        if let Some(offset) = built.beat_offset {
            sweep.beat_offset_hz += offset / (2.0 * PI);
        }
        if let Some(moving) = built.moving_levels {
            if sweep.moving_levels.is_empty() {
                sweep.moving_levels = moving.iter().map(|l| l + 1).collect();
            }
        }
        for &l in &sweep.moving_levels {
            index("sweep.moving_levels", l, spec.n_levels)?;
        }

        let probe = resolve_probe(self.probe.as_ref(), &spec, built.probe).context("in [probe]")?;

        let m = self.medium.clone().unwrap_or_default();
        let linewidth = angular("linewidth", m.linewidth_hz, m.linewidth_rad_per_s)?.unwrap_or(built.linewidth);
        let mut medium = MediumParams::rubidium_d1(linewidth);
        match (m.wavelength_m, m.wavevector_rad_per_m) {
            (Some(_), Some(_)) => bail!("[medium]: give either wavelength_m or wavevector_rad_per_m, not both"),
            (None, Some(k)) => medium.wavevector = k,
            (w, None) => {
                if let Some(w) = w.or(built.wavelength) {
                    medium.wavevector = 2.0 * PI / w;
                }
            }
        }
        if let Some(v) = m.number_density_per_m3 {
            medium.number_density = v;
        }
        if let Some(v) = m.saturation_intensity_w_per_m2 {
            medium.saturation_intensity = v;
        }
        match (m.mass_amu, m.mass_kg) {
            (Some(_), Some(_)) => bail!("[medium]: give either mass_amu or mass_kg, not both"),
            (Some(v), None) => medium.mass = v * ATOMIC_MASS_UNIT,
            (None, Some(v)) => medium.mass = v,
            (None, None) => {}
        }
        if let Some(v) = m.temperature_k {
            medium.temperature = v;
        }
        medium.validate().context("in [medium]")?;
        Ok(Resolved { spec, probe, medium, sweep })
    }
}

fn resolve_probe(section: Option<&ProbeSection>, spec: &SystemSpec, preset: Option<ProbeResponse>) -> Result<ProbeResponse> {
    let largest = spec
        .couplings
        .iter()
        .filter(|c| c.tag == HarmonicTag::Beat)
        .map(|c| c.rabi)
        .fold(0.0, f64::max);
    let section = section.cloned().unwrap_or_default();
    let rabi = angular("rabi", section.rabi_hz, section.rabi_rad_per_s)?;
    if section.coherences.is_empty() {
        if let Some(p) = preset {
            if rabi.is_none() {
                return Ok(p);
            }
        }
        let rabi = rabi.unwrap_or(largest);
        if rabi.is_nan() || rabi <= 0.0 {
            bail!("no probe couplings; set rabi_hz or rabi_rad_per_s and list coherences");
        }
        return Ok(ProbeResponse::from_beat_couplings(spec, rabi)?);
    }
    let rabi = rabi.unwrap_or(largest);
    let n = spec.n_levels;
    let coherences = section
        .coherences
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let ctx = format!("probe.coherences[{i}]");
            Ok(ProbeCoherence { row: index(&ctx, c.upper, n)?, col: index(&ctx, c.lower, n)?, weight: c.weight })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeResponse { rabi, coherences })
}

impl Resolved {
    /// A self-contained config describing exactly this run.
    pub fn to_config(&self) -> ConfigFile {
        let m = &self.medium;
        ConfigFile {
            system: Some(SystemSection::from_spec(&self.spec)),
            rb87: None,
            probe: Some(ProbeSection {
                rabi_hz: None,
                rabi_rad_per_s: Some(self.probe.rabi),
                coherences: self
                    .probe
                    .coherences
                    .iter()
                    .map(|c| CoherenceEntry { upper: c.row + 1, lower: c.col + 1, weight: c.weight })
                    .collect(),
            }),
            medium: Some(MediumSection {
                linewidth_hz: None,
                linewidth_rad_per_s: Some(m.linewidth),
                number_density_per_m3: Some(m.number_density),
                saturation_intensity_w_per_m2: Some(m.saturation_intensity),
                wavelength_m: None,
                wavevector_rad_per_m: Some(m.wavevector),
                mass_amu: None,
                mass_kg: Some(m.mass),
                temperature_k: Some(m.temperature),
            }),
            sweep: self.sweep.clone(),
        }
    }

    pub fn moving_levels(&self) -> Vec<usize> {
        self.sweep.moving_levels.iter().map(|l| l - 1).collect()
    }
}

pub fn dump(config: &ConfigFile) -> Result<String> {
    Ok(toml::to_string_pretty(config)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LEVEL: &str = r#"
[system]
n_levels = 2
beat_frequency_hz = 5e6
levels = [
  { level = 1 },
  { level = 2, linewidth_hz = 1e7 },
]
couplings = [
  { lower = 1, upper = 2, field = "pump", rabi_hz = 36e6 },
  { lower = 1, upper = 2, field = "probe", rabi_hz = 6e6 },
]
sources = [{ from = 2, to = 1, rate_hz = 1e7 }]
"#;

    #[test]
    fn hz_keys_are_converted() {
        let r = parse(TWO_LEVEL).unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(r.spec.linewidth(1), 2.0 * PI * 1e7);
        assert_eq!(r.spec.beat_frequency, 2.0 * PI * 5e6);
        assert_eq!(r.probe.rabi, 2.0 * PI * 6e6);
        assert_eq!(r.probe.coherences, vec![ProbeCoherence { row: 1, col: 0, weight: 1.0 }]);
        assert_eq!(r.medium.linewidth, 2.0 * PI * 1e7);
    }

    #[test]
    fn both_units_rejected() {
        let text = TWO_LEVEL.replace("linewidth_hz = 1e7", "linewidth_hz = 1e7, linewidth_rad_per_s = 1.0");
        let err = parse(&text).unwrap().resolve(Path::new(".")).unwrap_err();
        assert!(format!("{err:#}").contains("not both"), "{err:#}");
    }

    #[test]
    fn unknown_key_reports_location() {
        let text = TWO_LEVEL.replace("n_levels = 2", "n_levels = 2\nlinewidth = 3");
        let err = parse(&text).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("line 4") && msg.contains("linewidth"), "{msg}");
    }

    #[test]
    fn level_indices_are_one_based() {
        let text = TWO_LEVEL.replace("{ from = 2, to = 1", "{ from = 3, to = 1");
        let err = parse(&text).unwrap().resolve(Path::new(".")).unwrap_err();
        assert!(format!("{err:#}").contains("system.sources[0]: level 3 is outside 1..=2"));
    }

    #[test]
    fn dump_round_trips() {
        let r = parse(TWO_LEVEL).unwrap().resolve(Path::new(".")).unwrap();
        let text = dump(&r.to_config()).unwrap();
        let again = parse(&text).unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn rb87_preset_round_trips() {
        let r = parse("[rb87]\npump_detuning_linewidths = 30.0\n").unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(r.spec.n_levels, 16);
        assert_eq!(r.sweep.moving_levels, (9..=16).collect::<Vec<_>>());
        let again = parse(&dump(&r.to_config()).unwrap()).unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(again.spec, r.spec);
        assert_eq!(again.probe, r.probe);
        assert_eq!(again.sweep, r.sweep);
    }
}
