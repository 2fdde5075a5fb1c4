//! Symbolic construction of the harmonic equations.
//!
//! The density matrix is written as `ρ̃ = Σ_k ρ^k m(k)` with formal
//! monomials `m(k) = Y^k` for `k > 0`, `Z^{|k|}` for `k < 0`, and `YZ = 1`.
//! The Hamiltonian entries become polynomials in `Y` and `Z`, the products in
//! `-i(H̃ρ̃ - ρ̃H̃†)` are expanded term by term, and coefficients are collected
//! by monomial. This path shares no code with [`crate::solver::assemble_m`]
//! and is used to cross-check it.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CMatrix, HarmonicLayout, HarmonicTag, SystemSpec};
use crate::solver::LinearSystem;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Symbolic unknown `ρ^k_{row,col}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Unknown {
    pub row: usize,
    pub col: usize,
    pub harmonic: i32,
}

/// `Σ c_u u + constant` with zero coefficients pruned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearExpr {
    terms: BTreeMap<Unknown, Complex64>,
    pub constant: Complex64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unknown(u: Unknown) -> Self {
        let mut e = Self::new();
        e.add_term(u, Complex64::new(1.0, 0.0));
        e
    }

    pub fn add_term(&mut self, u: Unknown, coefficient: Complex64) {
        if coefficient == ZERO {
            return;
        }
        let entry = self.terms.entry(u).or_insert(ZERO);
        *entry += coefficient;
        if *entry == ZERO {
            self.terms.remove(&u);
        }
    }

    pub fn add_scaled(&mut self, other: &LinearExpr, scale: Complex64) {
        for (u, c) in &other.terms {
            self.add_term(*u, c * scale);
        }
        self.constant += other.constant * scale;
    }

    pub fn coefficient(&self, u: &Unknown) -> Complex64 {
        self.terms.get(u).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Unknown, &Complex64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant == ZERO
    }
}

/// `Y^y Z^z`, kept normalized so that at most one exponent is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub y: u32,
    pub z: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { y: 0, z: 0 };

    pub fn new(y: u32, z: u32) -> Self {
        let common = y.min(z);
        Monomial { y: y - common, z: z - common }
    }

    /// The monomial carrying harmonic `k`.
    pub fn of_harmonic(k: i32) -> Self {
        if k >= 0 {
            Monomial { y: k as u32, z: 0 }
        } else {
            Monomial { y: 0, z: k.unsigned_abs() }
        }
    }

    pub fn times(self, other: Monomial) -> Self {
        Monomial::new(self.y + other.y, self.z + other.z)
    }

    pub fn harmonic(self) -> i32 {
        self.y as i32 - self.z as i32
    }

    pub fn is_normalized(self) -> bool {
        self.y == 0 || self.z == 0
    }
}

/// Polynomial in `Y`, `Z` whose coefficients are linear expressions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HarmonicPoly {
    groups: BTreeMap<Monomial, LinearExpr>,
}

impl HarmonicPoly {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coefficient · expr · mono`, normalizing the monomial first.
    pub fn add(&mut self, mono: Monomial, expr: &LinearExpr, coefficient: Complex64) {
        let mono = Monomial::new(mono.y, mono.z);
        let group = self.groups.entry(mono).or_default();
        group.add_scaled(expr, coefficient);
        if group.is_zero() {
            self.groups.remove(&mono);
        }
    }

    pub fn group(&self, mono: Monomial) -> Option<&LinearExpr> {
        self.groups.get(&Monomial::new(mono.y, mono.z))
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.groups.keys()
    }

    /// Drops every monomial whose harmonic exceeds `order` in magnitude.
    pub fn truncate(&mut self, order: usize) {
        self.groups.retain(|m, _| m.harmonic().unsigned_abs() as usize <= order);
    }
}

/// Coefficient polynomial: `Σ c m`.
type Laurent = Vec<(Monomial, Complex64)>;

/// `H̃` entries as polynomials: beat couplings carry `Y` at `(row, col)` and
/// `Z` at the mirrored entry.
fn hamiltonian_polys(spec: &SystemSpec) -> Vec<Vec<Laurent>> {
    let n = spec.n_levels;
    let mut h = vec![vec![Laurent::new(); n]; n];
    for (l, d) in spec.diagonal.iter().enumerate() {
        h[l][l].push((Monomial::ONE, d * 0.5));
    }
    for c in &spec.couplings {
        let half = Complex64::new(0.5 * c.rabi, 0.0);
        match c.tag {
            HarmonicTag::Static => {
                h[c.row][c.col].push((Monomial::ONE, half));
                h[c.col][c.row].push((Monomial::ONE, half));
            }
            HarmonicTag::Beat => {
                h[c.row][c.col].push((Monomial::new(1, 0), half));
                h[c.col][c.row].push((Monomial::new(0, 1), half));
            }
        }
    }
    h
}

/// Conjugate transpose in the formal sense: coefficients conjugated and
/// `Y ↔ Z` swapped, since `Y` stands for `e^{iδt}`.
fn adjoint_polys(h: &[Vec<Laurent>]) -> Vec<Vec<Laurent>> {
    let n = h.len();
    let mut out = vec![vec![Laurent::new(); n]; n];
    for (x, row) in h.iter().enumerate() {
        for (y, entry) in row.iter().enumerate() {
            out[y][x] = entry
                .iter()
                .map(|(m, c)| (Monomial::new(m.z, m.y), c.conj()))
                .collect();
        }
    }
    out
}

fn rho_entry(row: usize, col: usize, order: usize) -> Vec<(Monomial, LinearExpr)> {
    let k = order as i32;
    (-k..=k)
        .map(|h| {
            (
                Monomial::of_harmonic(h),
                LinearExpr::unknown(Unknown { row, col, harmonic: h }),
            )
        })
        .collect()
}

/// Right-hand side `R = -i(H̃ρ̃ - ρ̃H̃†) + ρs`, entry by entry (row-major),
/// truncated at `order`.
pub fn symbolic_rhs(spec: &SystemSpec, order: usize) -> Result<Vec<HarmonicPoly>> {
    spec.validate()?;
    let n = spec.n_levels;
    let h = hamiltonian_polys(spec);
    let hd = adjoint_polys(&h);
    let rho: Vec<Vec<_>> = (0..n)
        .map(|r| (0..n).map(|c| rho_entry(r, c, order)).collect())
        .collect();
    let mut out = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            let mut poly = HarmonicPoly::new();
            for m in 0..n {
                for (hm, hc) in &h[x][m] {
                    for (rm, re) in &rho[m][y] {
                        poly.add(hm.times(*rm), re, -I * hc);
                    }
                }
                for (rm, re) in &rho[x][m] {
                    for (hm, hc) in &hd[m][y] {
                        poly.add(rm.times(*hm), re, I * hc);
                    }
                }
            }
            if x == y {
                for s in spec.sources.iter().filter(|s| s.to == x) {
                    for (rm, re) in &rho[s.from][s.from] {
                        poly.add(*rm, re, Complex64::new(s.rate, 0.0));
                    }
                }
            }
            poly.truncate(order);
            out.push(poly);
        }
    }
    Ok(out)
}

/// Subtracts the time-derivative terms `ikδ ρ^k m(k)` and groups each entry
/// by monomial, giving one equation per unknown in layout order.
pub fn extract_equations(
    rhs: &[HarmonicPoly],
    spec: &SystemSpec,
    order: usize,
) -> Result<Vec<LinearExpr>> {
    let n = spec.n_levels;
    if rhs.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: rhs.len() });
    }
    let layout = HarmonicLayout::new(n, order);
    let mut equations = Vec::with_capacity(layout.len());
    for (idx, poly) in rhs.iter().enumerate() {
        let (x, y) = (idx / n, idx % n);
        let mut poly = poly.clone();
        for (mono, expr) in rho_entry(x, y, order) {
            let k = mono.harmonic();
            poly.add(mono, &expr, -I * (k as f64 * spec.beat_frequency));
        }
        for k in layout.harmonics() {
            equations.push(poly.group(Monomial::of_harmonic(k)).cloned().unwrap_or_default());
        }
    }
    Ok(equations)
}

/// Dense matrix form `M A = B` of a set of equations, with `B = -constants`.
pub fn equations_to_matrix(
    equations: &[LinearExpr],
    n_levels: usize,
    order: usize,
) -> Result<(LinearSystem, Vec<Complex64>)> {
    let layout = HarmonicLayout::new(n_levels, order);
    let dim = layout.len();
    if equations.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: equations.len() });
    }
    let mut m = CMatrix::zeros(dim, dim);
    let mut b = vec![ZERO; dim];
    for (row, eq) in equations.iter().enumerate() {
        for (u, c) in eq.terms() {
            let col = layout.position(u.row, u.col, u.harmonic)?;
            m[(row, col)] = *c;
        }
        b[row] = -eq.constant;
    }
    Ok((LinearSystem { layout, m }, b))
}

/// Full symbolic pipeline producing `M`.
pub fn assemble_m(spec: &SystemSpec, order: usize) -> Result<LinearSystem> {
    let rhs = symbolic_rhs(spec, order)?;
    let equations = extract_equations(&rhs, spec, order)?;
    let (system, b) = equations_to_matrix(&equations, spec.n_levels, order)?;
    if b.iter().any(|v| *v != ZERO) {
        return Err(Error::InvalidSystem("harmonic equations acquired a constant term".into()));
    }
    Ok(system)
}
