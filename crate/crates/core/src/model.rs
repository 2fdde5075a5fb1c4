//! System description, Hamiltonian decomposition and harmonic bookkeeping.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which field a coupling belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HarmonicTag {
    /// Pump: time independent in the pump frame.
    Static,
    /// Probe: oscillates as `e^{iδt}` at `(row, col)` and `e^{-iδt}` at `(col, row)`.
    Beat,
}

/// A field coupling between two levels with Rabi frequency `rabi` (rad/s).
///
/// A static coupling places `rabi/2` at `(row, col)` and `(col, row)` of `H0`.
/// A beat coupling places `rabi/2` at `(row, col)` of `H+`; `H-` holds the
/// mirror entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub row: usize,
    pub col: usize,
    pub rabi: f64,
    pub tag: HarmonicTag,
}

/// Population transfer from `from` to `to` at `rate` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceChannel {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// Complete description of a driven N-level system. Levels are 0-based.
///
/// `diagonal[l]` is `-2·detuning_l - i·linewidth_l`, where `linewidth_l` is
/// the total rate at which population leaves level `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub n_levels: usize,
    pub diagonal: Vec<Complex64>,
    pub couplings: Vec<Coupling>,
    pub sources: Vec<SourceChannel>,
    /// Probe minus pump frequency (rad/s).
    pub beat_frequency: f64,
}

/// Diagonal term for a level with the given detuning and outflow rate (rad/s).
pub fn level_term(detuning: f64, linewidth: f64) -> Complex64 {
    Complex64::new(-2.0 * detuning, -linewidth)
}

impl SystemSpec {
    /// An undriven system with all levels at zero detuning and linewidth.
    pub fn new(n_levels: usize) -> Self {
        SystemSpec {
            n_levels,
            diagonal: vec![Complex64::new(0.0, 0.0); n_levels],
            couplings: Vec::new(),
            sources: Vec::new(),
            beat_frequency: 0.0,
        }
    }

    pub fn with_level(mut self, level: usize, detuning: f64, linewidth: f64) -> Self {
        self.diagonal[level] = level_term(detuning, linewidth);
        self
    }

    pub fn with_coupling(mut self, row: usize, col: usize, rabi: f64, tag: HarmonicTag) -> Self {
        self.couplings.push(Coupling { row, col, rabi, tag });
        self
    }

    pub fn with_source(mut self, from: usize, to: usize, rate: f64) -> Self {
        self.sources.push(SourceChannel { from, to, rate });
        self
    }

    pub fn with_beat_frequency(mut self, beat_frequency: f64) -> Self {
        self.beat_frequency = beat_frequency;
        self
    }

    pub fn detuning(&self, level: usize) -> f64 {
        -0.5 * self.diagonal[level].re
    }

    pub fn linewidth(&self, level: usize) -> f64 {
        -self.diagonal[level].im
    }

    /// Structural validation: index ranges, finiteness and signs.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_levels;
        if n < 2 {
            return Err(Error::InvalidSystem(format!(
                "at least two levels are required, got {n}"
            )));
        }
        if self.diagonal.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.diagonal.len(),
            });
        }
        let check = |what: &str, level: usize| {
            if level >= n {
                Err(Error::LevelOutOfRange {
                    what: what.to_string(),
                    level,
                    n_levels: n,
                })
            } else {
                Ok(())
            }
        };
        for (l, d) in self.diagonal.iter().enumerate() {
            if !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::InvalidSystem(format!("level {l} has a non-finite diagonal term")));
            }
            if d.im > 0.0 {
                return Err(Error::InvalidSystem(format!("level {l} has a negative linewidth")));
            }
        }
        for c in &self.couplings {
            check("coupling", c.row)?;
            check("coupling", c.col)?;
            if c.row == c.col {
                return Err(Error::InvalidSystem(format!(
                    "coupling connects level {} to itself",
                    c.row
                )));
            }
            if !c.rabi.is_finite() {
                return Err(Error::InvalidSystem(format!(
                    "coupling ({}, {}) has a non-finite Rabi frequency",
                    c.row, c.col
                )));
            }
        }
        for s in &self.sources {
            check("source channel", s.from)?;
            check("source channel", s.to)?;
            if s.from == s.to {
                return Err(Error::InvalidSystem(format!(
                    "source channel feeds level {} into itself",
                    s.from
                )));
            }
            if !s.rate.is_finite() || s.rate < 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "source channel {} -> {} has rate {}",
                    s.from, s.to, s.rate
                )));
            }
        }
        if !self.beat_frequency.is_finite() {
            return Err(Error::InvalidSystem("beat frequency is not finite".into()));
        }
        Ok(())
    }

    /// For every level, linewidth minus the total rate of source channels
    /// leaving it. All zero for a closed system.
    pub fn closure_defects(&self) -> Vec<f64> {
        let mut defects: Vec<f64> = (0..self.n_levels).map(|l| self.linewidth(l)).collect();
        for s in &self.sources {
            defects[s.from] -= s.rate;
        }
        defects
    }

    /// Fails with [`Error::OpenSystem`] on the worst level if any defect
    /// exceeds `rel_tol` times the largest rate in the system.
    pub fn check_closed(&self, rel_tol: f64) -> Result<()> {
        let scale = (0..self.n_levels)
            .map(|l| self.linewidth(l).abs())
            .chain(self.sources.iter().map(|s| s.rate))
            .fold(0.0, f64::max);
        let (level, defect) = self
            .closure_defects()
            .into_iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (l, d)| if d.abs() > best.1.abs() { (l, d) } else { best });
        if defect.abs() > rel_tol * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::OpenSystem { level, defect });
        }
        Ok(())
    }

    /// Largest rate scale in the system, used to size integration steps.
    pub fn rate_scale(&self) -> f64 {
        let h = build_hamiltonian_unchecked(self);
        let h_norm = inf_norm(&h.h0) + inf_norm(&h.h_plus) + inf_norm(&h.h_minus);
        let source_norm = self.sources.iter().map(|s| s.rate).fold(0.0, f64::max);
        h_norm.max(source_norm)
    }
}

/// `H(t) = H0 + H+ e^{iδt} + H- e^{-iδt}`, with `H+† = H-`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianDecomposition {
    pub h0: CMatrix,
    pub h_plus: CMatrix,
    pub h_minus: CMatrix,
}

pub fn build_hamiltonian(spec: &SystemSpec) -> Result<HamiltonianDecomposition> {
    spec.validate()?;
    Ok(build_hamiltonian_unchecked(spec))
}

fn build_hamiltonian_unchecked(spec: &SystemSpec) -> HamiltonianDecomposition {
    let n = spec.n_levels;
    let mut h0 = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        spec.diagonal.iter().map(|d| d * 0.5),
    ));
    let mut h_plus = CMatrix::zeros(n, n);
    let mut h_minus = CMatrix::zeros(n, n);
    for c in &spec.couplings {
        let half = Complex64::new(0.5 * c.rabi, 0.0);
        match c.tag {
            HarmonicTag::Static => {
                h0[(c.row, c.col)] += half;
                h0[(c.col, c.row)] += half;
            }
            HarmonicTag::Beat => {
                h_plus[(c.row, c.col)] += half;
                h_minus[(c.col, c.row)] += half;
            }
        }
    }
    HamiltonianDecomposition { h0, h_plus, h_minus }
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maps `(row, col, k)` to a position in the unknown vector.
///
/// Positions run row-major over `(row, col)`; each element owns a contiguous
/// block of `2K+1` slots holding harmonics in the order `0, +1, -1, +2, -2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicLayout {
    pub n_levels: usize,
    pub order: usize,
}

impl HarmonicLayout {
    pub fn new(n_levels: usize, order: usize) -> Self {
        HarmonicLayout { n_levels, order }
    }

    pub fn block_len(&self) -> usize {
        2 * self.order + 1
    }

    pub fn len(&self) -> usize {
        self.n_levels * self.n_levels * self.block_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slot of harmonic `k` inside a block.
    pub fn slot(&self, k: i32) -> Result<usize> {
        if k.unsigned_abs() as usize > self.order {
            return Err(Error::HarmonicOutOfRange { harmonic: k, order: self.order });
        }
        Ok(slot_of(k))
    }

    /// Harmonics in slot order.
    pub fn harmonics(&self) -> impl Iterator<Item = i32> {
        (0..self.block_len()).map(harmonic_of)
    }

    pub fn position(&self, row: usize, col: usize, k: i32) -> Result<usize> {
        for level in [row, col] {
            if level >= self.n_levels {
                return Err(Error::LevelOutOfRange {
                    what: "layout index".into(),
                    level,
                    n_levels: self.n_levels,
                });
            }
        }
        let slot = self.slot(k)?;
        Ok((row * self.n_levels + col) * self.block_len() + slot)
    }

    pub fn element(&self, position: usize) -> Result<(usize, usize, i32)> {
        if position >= self.len() {
            return Err(Error::PositionOutOfRange { position, len: self.len() });
        }
        let block = position / self.block_len();
        let slot = position % self.block_len();
        Ok((block / self.n_levels, block % self.n_levels, harmonic_of(slot)))
    }
}

fn slot_of(k: i32) -> usize {
    match k {
        0 => 0,
        k if k > 0 => 2 * k as usize - 1,
        k => 2 * k.unsigned_abs() as usize,
    }
}

fn harmonic_of(slot: usize) -> i32 {
    if slot == 0 {
        0
    } else if slot % 2 == 1 {
        slot.div_ceil(2) as i32
    } else {
        -((slot / 2) as i32)
    }
}

/// The harmonics `ρ^k`, `k = -K..=K`, of a periodic density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityHarmonics {
    layout: HarmonicLayout,
    // Index k + K.
    matrices: Vec<CMatrix>,
}

impl DensityHarmonics {
    pub fn zeros(n_levels: usize, order: usize) -> Self {
        DensityHarmonics {
            layout: HarmonicLayout::new(n_levels, order),
            matrices: vec![CMatrix::zeros(n_levels, n_levels); 2 * order + 1],
        }
    }

    pub fn layout(&self) -> HarmonicLayout {
        self.layout
    }

    pub fn n_levels(&self) -> usize {
        self.layout.n_levels
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn get(&self, k: i32) -> Result<&CMatrix> {
        self.layout.slot(k)?;
        Ok(&self.matrices[(k + self.layout.order as i32) as usize])
    }

    pub fn get_mut(&mut self, k: i32) -> Result<&mut CMatrix> {
        self.layout.slot(k)?;
        Ok(&mut self.matrices[(k + self.layout.order as i32) as usize])
    }

    pub fn flatten(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.layout.len()];
        let block = self.layout.block_len();
        let n = self.layout.n_levels;
        for (pos, value) in out.iter_mut().enumerate() {
            let b = pos / block;
            let k = harmonic_of(pos % block);
            *value = self.matrices[(k + self.layout.order as i32) as usize][(b / n, b % n)];
        }
        out
    }

    pub fn unflatten(values: &[Complex64], n_levels: usize, order: usize) -> Result<Self> {
        let mut out = Self::zeros(n_levels, order);
        if values.len() != out.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: out.layout.len(),
                found: values.len(),
            });
        }
        let block = out.layout.block_len();
        for (pos, value) in values.iter().enumerate() {
            let b = pos / block;
            let k = harmonic_of(pos % block);
            out.matrices[(k + order as i32) as usize][(b / n_levels, b % n_levels)] = *value;
        }
        Ok(out)
    }

    pub fn trace(&self, k: i32) -> Result<Complex64> {
        Ok(self.get(k)?.trace())
    }

    /// Populations `Re ρ^0_ll`.
    pub fn populations(&self) -> Vec<f64> {
        let rho0 = &self.matrices[self.layout.order];
        (0..self.layout.n_levels).map(|l| rho0[(l, l)].re).collect()
    }

    /// Largest entry of `ρ^{-k} - (ρ^k)†` over all `k`.
    pub fn hermiticity_defect(&self) -> f64 {
        let order = self.layout.order as i32;
        (-order..=order)
            .map(|k| {
                let a = &self.matrices[(k + order) as usize];
                let b = &self.matrices[(-k + order) as usize];
                (a - b.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the traces from `δ_k0`.
    pub fn trace_defect(&self) -> f64 {
        let order = self.layout.order as i32;
        (-order..=order)
            .map(|k| {
                let target = if k == 0 { 1.0 } else { 0.0 };
                (self.matrices[(k + order) as usize].trace() - target).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry difference against another set of harmonics of the same shape.
    pub fn max_abs_diff(&self, other: &DensityHarmonics) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.len(),
                found: other.layout.len(),
            });
        }
        Ok(self
            .matrices
            .iter()
            .zip(&other.matrices)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max))
    }

    /// `ρ(t) = Σ_k ρ^k e^{ikδt}` for the given beat frequency.
    pub fn evaluate(&self, beat_frequency: f64, t: f64) -> CMatrix {
        let order = self.layout.order as i32;
        let n = self.layout.n_levels;
        let mut out = CMatrix::zeros(n, n);
        for k in -order..=order {
            let phase = (I * (k as f64 * beat_frequency * t)).exp();
            out += &self.matrices[(k + order) as usize] * phase;
        }
        out
    }
}
