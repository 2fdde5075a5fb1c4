//! All 16 Zeeman sublevels of the 87Rb D1 line with a strong pump and a weak
//! probe of crossed linear polarization.
//!
//! Levels, in order: `5S1/2 F=1` (mF = -1..1), `5S1/2 F=2` (mF = -2..2),
//! `5P1/2 F'=1` (mF = -1..1), `5P1/2 F'=2` (mF = -2..2).
//!
//! The frame rotates with the pump. The pump is detuned by
//! `pump_detuning` from `F=2 → F'=2`, so on the `F=1` transitions it sits
//! about 6.835 GHz below resonance. The probe only couples `F=2` to the
//! excited manifold; the Raman resonance, where the pump/probe difference
//! matches the ground splitting, is at beat frequency `-ground_splitting`.
//!
//! Polarization: both beams propagate along the quantization axis. The pump
//! is polarized along x, `x̂ = (ê₋₁ - ê₊₁)/√2`, giving weights `-1/√2` on
//! `ΔmF = +1` and `+1/√2` on `ΔmF = -1`. The probe is polarized along y,
//! `ŷ = i(ê₋₁ + ê₊₁)/√2`; the common factor `i` is a global probe phase and
//! is dropped, leaving `+1/√2` on both. π transitions are not driven.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{HarmonicTag, SystemSpec};
use crate::spectroscopy::{DetuningScan, ProbeCoherence, ProbeResponse};

/// 5S1/2 hyperfine splitting (rad/s).
pub const GROUND_SPLITTING: f64 = 2.0 * PI * 6.834_682_610_904e9;
/// 5P1/2 hyperfine splitting (rad/s).
pub const EXCITED_SPLITTING: f64 = 2.0 * PI * 816.656e6;
/// D1 natural linewidth (rad/s).
pub const LINEWIDTH: f64 = 2.0 * PI * 5.7500e6;
/// D1 vacuum wavelength (m).
pub const WAVELENGTH: f64 = 794.978_851e-9;
/// Atomic mass (kg).
pub const MASS: f64 = 86.909_180_527 * 1.660_539_066_60e-27;

const BUNDLED_TABLE: &str = include_str!("../../data/rb87_d1_dipoles.txt");
const TABLE_HEADER: &str = "# pumpprobe dipole table v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Manifold {
    /// 5S1/2
    Ground,
    /// 5P1/2
    Excited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sublevel {
    pub manifold: Manifold,
    pub f: u8,
    pub m: i8,
}

impl Sublevel {
    pub fn ground(f: u8, m: i8) -> Self {
        Sublevel { manifold: Manifold::Ground, f, m }
    }

    pub fn excited(f: u8, m: i8) -> Self {
        Sublevel { manifold: Manifold::Excited, f, m }
    }

    /// The 16 sublevels in level order.
    pub fn all() -> Vec<Sublevel> {
        let mut out = Vec::with_capacity(16);
        for manifold in [Manifold::Ground, Manifold::Excited] {
            for f in 1..=2u8 {
                for m in -(f as i8)..=(f as i8) {
                    out.push(Sublevel { manifold, f, m });
                }
            }
        }
        out
    }
}

impl fmt::Display for Sublevel {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.manifold {
            Manifold::Ground => 'S',
            Manifold::Excited => 'P',
        };
        if self.m == 0 {
            write!(out, "{prefix}{}:0", self.f)
        } else {
            write!(out, "{prefix}{}:{:+}", self.f, self.m)
        }
    }
}

impl FromStr for Sublevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("malformed sublevel label {s:?} (expected e.g. S2:-1 or P1:0)");
        let (head, m) = s.split_once(':').ok_or_else(bad)?;
        let mut chars = head.chars();
        let manifold = match chars.next() {
            Some('S') => Manifold::Ground,
            Some('P') => Manifold::Excited,
            _ => return Err(bad()),
        };
        let f: u8 = chars.as_str().parse().map_err(|_| bad())?;
        let m: i8 = m.parse().map_err(|_| bad())?;
        if !(1..=2).contains(&f) || m.unsigned_abs() > f {
            return Err(bad());
        }
        Ok(Sublevel { manifold, f, m })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleEntry {
    pub ground: Sublevel,
    pub excited: Sublevel,
    /// `<F mF|e r_q|F' mF'>` relative to the reduced element.
    pub element: f64,
    /// Fraction of the decay of `excited` that ends in `ground`.
    pub branching: f64,
}

/// Relative dipole elements and branching ratios, one row per transition.
///
/// Plain text, whitespace separated, `#` comments. The first line must be
/// `# pumpprobe dipole table v1`. Each data row reads
/// `ground excited relative_element branching_ratio`, e.g.
/// `S2:-2  P1:-1  0.7071067811865476  0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleTable {
    entries: Vec<DipoleEntry>,
}

impl DipoleTable {
    /// The table shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLE).expect("bundled dipole table is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim() == TABLE_HEADER => {}
            _ => {
                return Err(Error::DipoleTableParse {
                    line: 1,
                    message: format!("missing version header {TABLE_HEADER:?}"),
                })
            }
        }
        let mut entries: Vec<DipoleEntry> = Vec::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::DipoleTableParse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let ground: Sublevel = fields[0].parse().map_err(err)?;
            let excited: Sublevel = fields[1].parse().map_err(err)?;
            if ground.manifold != Manifold::Ground || excited.manifold != Manifold::Excited {
                return Err(err("first label must be a ground sublevel, second an excited one".into()));
            }
            let number = |s: &str, what: &str| -> Result<f64> {
                let v: f64 = s.parse().map_err(|_| err(format!("{what} {s:?} is not a number")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err(format!("{what} is not finite")))
                }
            };
            let element = number(fields[2], "relative element")?;
            let branching = number(fields[3], "branching ratio")?;
            if !(0.0..=1.0).contains(&branching) {
                return Err(err(format!("branching ratio {branching} outside [0, 1]")));
            }
            if entries.iter().any(|e| e.ground == ground && e.excited == excited) {
                return Err(err(format!("duplicate transition {ground} -> {excited}")));
            }
            entries.push(DipoleEntry { ground, excited, element, branching });
        }
        Ok(DipoleTable { entries })
    }

    pub fn entries(&self) -> &[DipoleEntry] {
        &self.entries
    }

    pub fn get(&self, ground: Sublevel, excited: Sublevel) -> Option<&DipoleEntry> {
        self.entries.iter().find(|e| e.ground == ground && e.excited == excited)
    }

    /// Branching ratios of every excited sublevel normalized to sum to one.
    /// Fails if a sum deviates from one by more than `1e-6`.
    pub fn normalized_branching(&self, excited: Sublevel) -> Result<Vec<(Sublevel, f64)>> {
        let rows: Vec<_> = self.entries.iter().filter(|e| e.excited == excited).collect();
        let total: f64 = rows.iter().map(|e| e.branching).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::DipoleTable(format!(
                "branching ratios from {excited} sum to {total}, expected 1"
            )));
        }
        Ok(rows.iter().map(|e| (e.ground, e.branching / total)).collect())
    }
}

/// Whether `ground ↔ excited` is an electric-dipole transition with a
/// nonzero element (`|ΔmF| ≤ 1`, excluding `mF = 0 → mF' = 0` at `F = F'`).
pub fn is_allowed(ground: Sublevel, excited: Sublevel) -> bool {
    let dm = excited.m - ground.m;
    dm.abs() <= 1 && !(dm == 0 && ground.m == 0 && ground.f == excited.f)
}

/// Ground-state population exchange between the hyperfine manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossRelaxation {
    /// Every `F=1` sublevel exchanges with every `F=2` sublevel.
    #[default]
    AllPairs,
    /// Only sublevels with equal `mF` exchange.
    MatchedPairs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rb87Params {
    /// Natural linewidth `Γ` (rad/s).
    pub linewidth: f64,
    /// Pump frequency minus the `F=2 → F'=2` resonance (rad/s).
    pub pump_detuning: f64,
    /// Pump Rabi frequency per unit relative dipole element (rad/s).
    pub pump_rabi_scale: f64,
    /// Probe Rabi frequency per unit relative dipole element (rad/s).
    pub probe_rabi_scale: f64,
    pub ground_splitting: f64,
    pub excited_splitting: f64,
    /// Rate per connected sublevel pair (rad/s).
    pub cross_relaxation_rate: f64,
    pub cross_relaxation: CrossRelaxation,
    /// Probe/pump difference minus the Raman resonance (rad/s).
    pub two_photon_detuning: f64,
}

impl Default for Rb87Params {
    /// Pump 30Γ above the `F=2 → F'=2` line, pump Rabi scale 10Γ, weak probe
    /// (Rabi scale Γ/100), cross-relaxation at 1e6 s⁻¹ between all pairs.
    fn default() -> Self {
        Rb87Params {
            linewidth: LINEWIDTH,
            pump_detuning: 30.0 * LINEWIDTH,
            pump_rabi_scale: 10.0 * LINEWIDTH,
            probe_rabi_scale: 0.01 * LINEWIDTH,
            ground_splitting: GROUND_SPLITTING,
            excited_splitting: EXCITED_SPLITTING,
            cross_relaxation_rate: 1e6,
            cross_relaxation: CrossRelaxation::AllPairs,
            two_photon_detuning: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rb87System {
    pub spec: SystemSpec,
    pub probe: ProbeResponse,
    pub levels: Vec<Sublevel>,
    /// Beat frequency at zero two-photon detuning.
    pub beat_offset: f64,
}

impl Rb87System {
    pub fn excited_levels(&self) -> Vec<usize> {
        (0..self.levels.len()).filter(|&l| self.levels[l].manifold == Manifold::Excited).collect()
    }

    /// Scan over two-photon detuning with Doppler shifts on the excited manifold.
    pub fn scan(&self) -> DetuningScan {
        DetuningScan {
            base: self.spec.clone(),
            beat_offset: self.beat_offset,
            moving_levels: self.excited_levels(),
        }
    }
}

fn pump_weight(dm: i8) -> f64 {
    match dm {
        1 => -FRAC_1_SQRT_2,
        -1 => FRAC_1_SQRT_2,
        _ => 0.0,
    }
}

fn probe_weight(dm: i8) -> f64 {
    if dm.abs() == 1 {
        FRAC_1_SQRT_2
    } else {
        0.0
    }
}

pub fn rb87_d1_sixteen_level(params: &Rb87Params, table: &DipoleTable) -> Result<Rb87System> {
    let levels = Sublevel::all();
    let n = levels.len();
    let index = |s: Sublevel| levels.iter().position(|l| *l == s).expect("sublevel in list");
    let p = params;
    for (name, v) in [
        ("linewidth", p.linewidth),
        ("cross_relaxation_rate", p.cross_relaxation_rate),
        ("ground_splitting", p.ground_splitting),
        ("excited_splitting", p.excited_splitting),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
        }
    }

    let mut spec = SystemSpec::new(n);
    spec.beat_frequency = -p.ground_splitting + p.two_photon_detuning;

    // Optical couplings and spontaneous decay.
    let mut coherences = Vec::new();
    for (e_idx, &excited) in levels.iter().enumerate().filter(|(_, l)| l.manifold == Manifold::Excited) {
        for (g_idx, &ground) in levels.iter().enumerate().filter(|(_, l)| l.manifold == Manifold::Ground) {
            if !is_allowed(ground, excited) {
                continue;
            }
            let entry = table.get(ground, excited).ok_or_else(|| Error::MissingDipole {
                transition: format!("{ground} -> {excited}"),
            })?;
            let dm = excited.m - ground.m;
            let pump = p.pump_rabi_scale * entry.element * pump_weight(dm);
            if pump != 0.0 {
                spec.couplings.push(crate::model::Coupling {
                    row: g_idx,
                    col: e_idx,
                    rabi: pump,
                    tag: HarmonicTag::Static,
                });
            }
            let probe_w = entry.element * probe_weight(dm);
            if ground.f == 2 && probe_w != 0.0 {
                spec.couplings.push(crate::model::Coupling {
                    row: g_idx,
                    col: e_idx,
                    rabi: p.probe_rabi_scale * probe_w,
                    tag: HarmonicTag::Beat,
                });
                coherences.push(ProbeCoherence { row: e_idx, col: g_idx, weight: probe_w });
            }
        }
        for (ground, ratio) in table.normalized_branching(excited)? {
            if ratio > 0.0 {
                spec.sources.push(crate::model::SourceChannel {
                    from: e_idx,
                    to: index(ground),
                    rate: p.linewidth * ratio,
                });
            }
        }
    }

    // Ground-state cross-relaxation, in both directions.
    for (a, &la) in levels.iter().enumerate() {
        for (b, &lb) in levels.iter().enumerate() {
            let pair = la.manifold == Manifold::Ground
                && lb.manifold == Manifold::Ground
                && la.f != lb.f
                && match p.cross_relaxation {
                    CrossRelaxation::AllPairs => true,
                    CrossRelaxation::MatchedPairs => la.m == lb.m,
                };
            if pair && p.cross_relaxation_rate > 0.0 {
                spec.sources.push(crate::model::SourceChannel { from: a, to: b, rate: p.cross_relaxation_rate });
            }
        }
    }

    // Energies in the pump frame and total outflow rates.
    let outflow = |l: usize| spec.sources.iter().filter(|s| s.from == l).map(|s| s.rate).sum::<f64>();
    let diagonal: Vec<_> = (0..n)
        .map(|l| {
            let s = levels[l];
            let detuning = match (s.manifold, s.f) {
                (Manifold::Ground, 1) => p.ground_splitting,
                (Manifold::Ground, _) => 0.0,
                (Manifold::Excited, 2) => p.pump_detuning,
                (Manifold::Excited, _) => p.pump_detuning + p.excited_splitting,
            };
            crate::model::level_term(detuning, outflow(l))
        })
        .collect();
    spec.diagonal = diagonal;
    spec.validate()?;

    Ok(Rb87System {
        spec,
        probe: ProbeResponse { rabi: p.probe_rabi_scale, coherences },
        levels,
        beat_offset: -p.ground_splitting,
    })
}
