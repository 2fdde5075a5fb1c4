//! Assembly of the harmonic system by unit probing, trace reduction and solve.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{mat_vec, vec_inf_norm, DenseLu};
use crate::model::{
    build_hamiltonian, inf_norm, CMatrix, DensityHarmonics, HamiltonianDecomposition, HarmonicLayout,
    SystemSpec,
};
use crate::terms;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `M A = 0` over the flattened unknown vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub layout: HarmonicLayout,
    pub m: CMatrix,
}

/// The system left after eliminating the last diagonal element with the
/// trace condition: `M' A' = B'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub layout: HarmonicLayout,
    pub m: CMatrix,
    pub b: Vec<Complex64>,
}

/// Images of the unit matrix `e_ij` under the three commutator blocks:
/// `Q0 = H0 e - e H0†`, `Q± = H± e - e H±`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeMatrices {
    pub q0: CMatrix,
    pub q_plus: CMatrix,
    pub q_minus: CMatrix,
}

pub fn probe_matrices(h: &HamiltonianDecomposition, i: usize, j: usize) -> ProbeMatrices {
    let n = h.h0.nrows();
    // H e_ij keeps column i of H in column j; e_ij G keeps row j of G in row i.
    let apply = |left: &CMatrix, right: &CMatrix| {
        let mut q = CMatrix::zeros(n, n);
        for x in 0..n {
            q[(x, j)] += left[(x, i)];
        }
        for y in 0..n {
            q[(i, y)] -= right[(j, y)];
        }
        q
    };
    ProbeMatrices {
        q0: apply(&h.h0, &h.h0.adjoint()),
        q_plus: apply(&h.h_plus, &h.h_plus),
        q_minus: apply(&h.h_minus, &h.h_minus),
    }
}

/// Builds `M` column by column: each unknown is set to one, the others to
/// zero, and the resulting equation residuals form the column.
pub fn assemble_m(spec: &SystemSpec, order: usize) -> Result<LinearSystem> {
    let h = build_hamiltonian(spec)?;
    let n = spec.n_levels;
    let layout = HarmonicLayout::new(n, order);
    let dim = layout.len();
    let kmax = order as i32;
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let q = probe_matrices(&h, i, j);
            for kp in layout.harmonics() {
                let col = layout.position(i, j, kp)?;
                let blocks = [(0, &q.q0), (1, &q.q_plus), (-1, &q.q_minus)];
                for (shift, block) in blocks {
                    let k = kp + shift;
                    if k.abs() > kmax {
                        continue;
                    }
                    for x in 0..n {
                        for y in 0..n {
                            let v = block[(x, y)];
                            if v != ZERO {
                                m[(layout.position(x, y, k)?, col)] += -I * v;
                            }
                        }
                    }
                }
                m[(col, col)] += -I * (kp as f64 * spec.beat_frequency);
                if i == j {
                    for s in spec.sources.iter().filter(|s| s.from == i) {
                        m[(layout.position(s.to, s.to, kp)?, col)] += Complex64::new(s.rate, 0.0);
                    }
                }
            }
        }
    }
    Ok(LinearSystem { layout, m })
}

/// Drops the equations for the last diagonal element and substitutes
/// `ρ^k_NN = δ_k0 - Σ_{i<N} ρ^k_ii`.
pub fn reduce(system: &LinearSystem) -> ReducedSystem {
    let layout = system.layout;
    let n = layout.n_levels;
    let block = layout.block_len();
    let dim = layout.len() - block;
    let last = dim;
    let mut m = system.m.view((0, 0), (dim, dim)).into_owned();
    for i in 0..n - 1 {
        for s in 0..block {
            let c = (i * n + i) * block + s;
            for r in 0..dim {
                let v = system.m[(r, last + s)];
                m[(r, c)] -= v;
            }
        }
    }
    let b = (0..dim).map(|r| -system.m[(r, last)]).collect();
    ReducedSystem { layout, m, b }
}

/// Rebuilds the full unknown vector from the reduced solution.
pub fn expand(layout: HarmonicLayout, reduced: &[Complex64]) -> Vec<Complex64> {
    let n = layout.n_levels;
    let block = layout.block_len();
    let mut full = reduced.to_vec();
    for s in 0..block {
        let mut v = if s == 0 { Complex64::new(1.0, 0.0) } else { ZERO };
        for i in 0..n - 1 {
            v -= reduced[(i * n + i) * block + s];
        }
        full.push(v);
    }
    full
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixBuilder {
    /// Unit probing of the commutator operator.
    #[default]
    Numeric,
    /// Symbolic expansion through [`crate::terms`].
    TermAlgebra,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Fail when the estimated condition number of `M'` exceeds this.
    pub condition_threshold: f64,
    pub builder: MatrixBuilder,
    /// Steps of iterative refinement after the direct solve.
    pub refinement_steps: usize,
    /// Relative tolerance on linewidth/source balance; `None` skips the check.
    pub closure_tolerance: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            condition_threshold: 1e12,
            builder: MatrixBuilder::Numeric,
            refinement_steps: 1,
            closure_tolerance: Some(1e-9),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub harmonics: DensityHarmonics,
    /// `‖M A‖∞ / (‖M‖∞ ‖A‖∞)` on the unreduced system.
    pub residual: f64,
    /// Estimated 1-norm condition number of `M'`.
    pub condition: f64,
}

pub fn build_system(spec: &SystemSpec, order: usize, builder: MatrixBuilder) -> Result<LinearSystem> {
    match builder {
        MatrixBuilder::Numeric => assemble_m(spec, order),
        MatrixBuilder::TermAlgebra => terms::assemble_m(spec, order),
    }
}

pub fn solve(spec: &SystemSpec, order: usize) -> Result<Solution> {
    solve_with(spec, order, &SolveOptions::default())
}

pub fn solve_with(spec: &SystemSpec, order: usize, options: &SolveOptions) -> Result<Solution> {
    spec.validate()?;
    if let Some(tol) = options.closure_tolerance {
        spec.check_closed(tol)?;
    }
    let system = build_system(spec, order, options.builder)?;
    solve_system(&system, options)
}

pub fn solve_system(system: &LinearSystem, options: &SolveOptions) -> Result<Solution> {
    let reduced = reduce(system);
    let lu = DenseLu::factor(&reduced.m)?;
    let condition = lu.condition_estimate();
    if condition.is_nan() || condition > options.condition_threshold {
        return Err(Error::IllConditioned { condition, threshold: options.condition_threshold });
    }
    let mut x = lu.solve(&reduced.b);
    for _ in 0..options.refinement_steps {
        let mx = mat_vec(&reduced.m, &x);
        let r: Vec<Complex64> = reduced.b.iter().zip(&mx).map(|(b, v)| b - v).collect();
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    let full = expand(system.layout, &x);
    let residual = relative_residual(&system.m, &full);
    let harmonics =
        DensityHarmonics::unflatten(&full, system.layout.n_levels, system.layout.order)?;
    Ok(Solution { harmonics, residual, condition })
}

/// `‖M A‖∞ / (‖M‖∞ ‖A‖∞)`.
pub fn relative_residual(m: &CMatrix, a: &[Complex64]) -> f64 {
    let scale = inf_norm(m) * vec_inf_norm(a);
    if scale == 0.0 {
        return 0.0;
    }
    vec_inf_norm(&mat_vec(m, a)) / scale
}
