//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{mhz, random_spec, without_probe};
use pumpprobe::models::{self, rb87};
use pumpprobe::solver::{self, build_system, solve_with};
use pumpprobe::spectroscopy::{
    k_convergence, linspace, susceptibility, sweep, DetuningScan, MediumParams, ProbeCoherence,
    ProbeResponse, SpecBuilder, SpectrumResult, SweepConfig, VelocityGrid,
};
use pumpprobe::timedomain::{periodic_steady_state, OracleConfig};
use pumpprobe::model::inf_norm;
use pumpprobe::{MatrixBuilder, Solution, SolveOptions, SystemSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const M_TOL: f64 = 1e-12;
const SOLUTION_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-4;
const TRACE_TOL: f64 = 1e-10;
const HERMITICITY_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-9;
const SECTOR_TOL: f64 = 1e-12;
const CLOSED_FORM_TOL: f64 = 1e-10;
const WEIGHT_SUM_TOL: f64 = 1e-12;
const ORACLE_ORDER: usize = 8;
const FOUR_LEVEL_ASYMMETRY: f64 = 0.01;

// Two-level set: Γ = 2π·10 MHz, strong pump, moderate probe.
fn gamma() -> f64 {
    2.0 * PI * 1e7
}
fn pump() -> f64 {
    mhz(36.0)
}
fn probe() -> f64 {
    mhz(6.0)
}

#[derive(Default)]
struct Invariants {
    solves: usize,
    trace: f64,
    hermiticity: f64,
    residual: f64,
}

impl Invariants {
    fn record(&mut self, s: &Solution) {
        self.solves += 1;
        self.trace = self.trace.max(s.harmonics.trace_defect());
        self.hermiticity = self.hermiticity.max(s.harmonics.hermiticity_defect());
        self.residual = self.residual.max(s.residual);
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: u32, name: &str, results: &mut Vec<bool>, f: impl FnOnce() -> Result<Outcome, String>) {
    let start = Instant::now();
    let (pass, detail) = match f() {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let status = if pass { "PASS" } else { "FAIL" };
    println!("{status} {id:>2} {name}: {detail} [{:.1?}]", start.elapsed());
    results.push(pass);
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn two_level_scan(pump_rabi: f64, probe_rabi: f64) -> Result<DetuningScan, String> {
    let base = models::two_level(gamma(), 0.0, pump_rabi, probe_rabi, 0.0, 0.0).map_err(err)?;
    Ok(DetuningScan { base, beat_offset: 0.0, moving_levels: vec![1] })
}

fn two_level_probe() -> ProbeResponse {
    ProbeResponse { rabi: probe(), coherences: vec![ProbeCoherence { row: 1, col: 0, weight: 1.0 }] }
}

fn to_mhz(w: f64) -> f64 {
    w / (2.0 * PI * 1e6)
}

/// Interior local maxima of `values`, as indices.
fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len() - 1).filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1]).collect()
}

fn golden_max(f: impl Fn(f64) -> Result<f64, String>, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64), String> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

fn builder_equivalence(inv: &mut Invariants) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let (mut worst_m, mut worst_a) = (0.0f64, 0.0f64);
    for case in 0..200 {
        let n = 2 + case % 3;
        let order = 1 + (case / 3) % 3;
        let spec = random_spec(&mut rng, n);
        let numeric = build_system(&spec, order, MatrixBuilder::Numeric).map_err(err)?;
        let symbolic = build_system(&spec, order, MatrixBuilder::TermAlgebra).map_err(err)?;
        let scale = inf_norm(&numeric.m);
        let diff = (&numeric.m - &symbolic.m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst_m = worst_m.max(diff / scale);
        let opts = SolveOptions::default();
        let a = solver::solve_system(&numeric, &opts).map_err(err)?;
        let b = solver::solve_system(&symbolic, &opts).map_err(err)?;
        inv.record(&a);
        inv.record(&b);
        let norm = a.harmonics.flatten().iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst_a = worst_a.max(a.harmonics.max_abs_diff(&b.harmonics).map_err(err)? / norm);
    }
    Ok(outcome(
        worst_m <= M_TOL && worst_a <= SOLUTION_TOL,
        format!("200 specs, max M diff {worst_m:.1e} (tol {M_TOL:e}), max solution diff {worst_a:.1e} (tol {SOLUTION_TOL:e})"),
    ))
}

fn oracle_agreement(inv: &mut Invariants) -> Result<Outcome, String> {
    let mut detunings: Vec<f64> = linspace(-150.0, 150.0, 11).map_err(err)?;
    detunings[5] = 3.0;
    let cfg = OracleConfig { settle_tolerance: 1e-10, ..OracleConfig::default() };
    let (mut worst, mut worst_k1) = (0.0f64, 0.0f64);
    for f in detunings {
        let spec = models::two_level(gamma(), 0.0, pump(), probe(), 0.0, mhz(f)).map_err(err)?;
        let oracle = periodic_steady_state(&spec, 1, &cfg).map_err(err)?;
        let reference = oracle.harmonics.get(-1).map_err(err)?[(1, 0)];
        for (order, slot) in [(ORACLE_ORDER, &mut worst), (1, &mut worst_k1)] {
            let s = solve_with(&spec, order, &SolveOptions::default()).map_err(err)?;
            inv.record(&s);
            let value = s.harmonics.get(-1).map_err(err)?[(1, 0)];
            *slot = slot.max((value - reference).norm() / reference.norm());
        }
    }
    Ok(outcome(
        worst <= ORACLE_TOL,
        format!("11 detunings, K={ORACLE_ORDER} max rel diff {worst:.1e} (tol {ORACLE_TOL:e}); K=1 truncation gap {worst_k1:.1e}"),
    ))
}

fn sector_decoupling(inv: &mut Invariants) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut worst = 0.0f64;
    for case in 0..60 {
        let spec = without_probe(&random_spec(&mut rng, 2 + case % 3));
        let s = solve_with(&spec, 1 + case % 3, &SolveOptions::default()).map_err(err)?;
        inv.record(&s);
        for k in s.harmonics.layout().harmonics().filter(|&k| k != 0) {
            let m = s.harmonics.get(k).map_err(err)?;
            worst = worst.max(m.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    Ok(worst)
}

fn closed_form(inv: &mut Invariants) -> Result<Outcome, String> {
    let g = gamma();
    let mut worst = 0.0f64;
    for (wp, order) in [(pump(), 1), (0.3 * g, 2), (3.0 * g, 3)] {
        let spec = models::two_level(g, 0.0, wp, 0.0, 0.0, mhz(7.0)).map_err(err)?;
        let s = solve_with(&spec, order, &SolveOptions::default()).map_err(err)?;
        inv.record(&s);
        let expect = (wp * wp / 4.0) / (g * g / 4.0 + wp * wp / 2.0);
        worst = worst.max((s.harmonics.get(0).map_err(err)?[(1, 1)].re - expect).abs());
    }
    Ok(outcome(worst <= CLOSED_FORM_TOL, format!("max |ρ22 - closed form| {worst:.1e} (tol {CLOSED_FORM_TOL:e})")))
}

fn csv_bytes(result: &SpectrumResult) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    result.write_csv_rounded(&mut out, 12).map_err(err)?;
    Ok(out)
}

fn mollow_shape() -> Result<Outcome, String> {
    let scan = two_level_scan(pump(), probe())?;
    let medium = MediumParams::rubidium_d1(gamma());
    let mut cfg = SweepConfig::new(linspace(mhz(-150.0), mhz(150.0), 301).map_err(err)?, 1);
    let numeric = sweep(&scan, &two_level_probe(), &medium, &cfg).map_err(err)?;
    cfg.solve.builder = MatrixBuilder::TermAlgebra;
    let symbolic = sweep(&scan, &two_level_probe(), &medium, &cfg).map_err(err)?;
    let identical = csv_bytes(&numeric)? == csv_bytes(&symbolic)?;

    let x: Vec<f64> = numeric.points.iter().map(|p| to_mhz(p.detuning)).collect();
    let gain: Vec<f64> = numeric.points.iter().map(|p| p.gain()).collect();
    let argmin = |range: std::ops::Range<usize>| range.min_by(|&a, &b| gain[a].total_cmp(&gain[b])).unwrap();
    let (left, right) = (argmin(0..150), argmin(151..301));
    let scale = to_mhz(pump());
    let near = |d: f64| (0.5 * scale..=1.5 * scale).contains(&d.abs());
    let central_gain = x.iter().zip(&gain).filter(|(d, _)| d.abs() < 0.5 * scale).map(|(_, g)| *g).fold(f64::MIN, f64::max);
    let pass = identical && near(x[left]) && near(x[right]) && x[left] < 0.0 && x[right] > 0.0 && central_gain > 0.0;
    Ok(outcome(
        pass,
        format!(
            "absorption maxima at {:+.0} / {:+.0} MHz (expected |x| in [{:.0}, {:.0}]), central gain {central_gain:+.2e}, CSV identical at 12 digits: {identical}",
            x[left], x[right], 0.5 * scale, 1.5 * scale
        ),
    ))
}

fn k_convergence_check() -> Result<Outcome, String> {
    let scan = two_level_scan(pump(), probe())?;
    let medium = MediumParams::rubidium_d1(gamma());
    let cfg = SweepConfig::new(linspace(mhz(-150.0), mhz(150.0), 121).map_err(err)?, 1);
    let report = k_convergence(&scan, &two_level_probe(), &medium, &cfg, 3).map_err(err)?;
    let (d12, d23) = (report.deviations[0], report.deviations[1]);
    let (_, at) = report.max_deviation_from_first(3);
    let at = to_mhz(at);
    let pass = d23 < d12 && d23 > 0.0 && (at.abs() - 18.0).abs() <= 25.0;
    Ok(outcome(pass, format!("dev K1→K2 {d12:.2e}, K2→K3 {d23:.2e}, max |K3-K1| at {at:+.1} MHz")))
}

struct RamanSetup {
    gamma: f64,
    gamma_g: f64,
    pump: f64,
    probe: f64,
    hyperfine: f64,
}

fn raman_setup() -> RamanSetup {
    let gamma = 2.0 * PI * 5.75e6;
    RamanSetup { gamma, gamma_g: mhz(0.1), pump: mhz(20.0), probe: 1e-3 * gamma, hyperfine: 2.0 * PI * 6.834e9 }
}

fn scan_of(base: SystemSpec, hyperfine: f64) -> DetuningScan {
    DetuningScan { base, beat_offset: -hyperfine, moving_levels: vec![] }
}

fn autler_townes(inv: &mut Invariants) -> Result<Outcome, String> {
    let p = raman_setup();
    let base = models::lambda_three_level(p.gamma, p.gamma_g, p.pump, p.probe, p.hyperfine, 0.0, 0.0).map_err(err)?;
    let probe = ProbeResponse::from_beat_couplings(&base, p.probe).map_err(err)?;
    let medium = MediumParams::rubidium_d1(p.gamma);
    let scan = scan_of(base, p.hyperfine);
    let result = sweep(&scan, &probe, &medium, &SweepConfig::new(linspace(mhz(-60.0), mhz(60.0), 241).map_err(err)?, 1)).map_err(err)?;
    let gain: Vec<f64> = result.points.iter().map(|p| p.gain()).collect();
    let mut maxima = local_maxima(&gain);
    maxima.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]));
    if maxima.len() < 2 {
        return Ok(outcome(false, format!("found {} gain maxima", maxima.len())));
    }
    let (a, b) = (maxima[0].min(maxima[1]), maxima[0].max(maxima[1]));
    let dip = (a..=b).min_by(|&i, &j| gain[i].total_cmp(&gain[j])).unwrap();
    let two_peaks = dip > a && dip < b && gain[dip] < gain[a].min(gain[b]) && gain[a] > 0.0 && gain[b] > 0.0;

    let s = solve_with(&scan.build(0.0, 0.0).map_err(err)?, 1, &SolveOptions::default()).map_err(err)?;
    inv.record(&s);
    let pops = s.harmonics.populations();
    let inverted = pops[0] > pops[1];
    Ok(outcome(
        two_peaks && inverted,
        format!(
            "gain maxima at {:+.1} / {:+.1} MHz, dip at {:+.1} MHz; ground populations {:.4} (level 1) vs {:.4} (level 2)",
            to_mhz(result.points[a].detuning),
            to_mhz(result.points[b].detuning),
            to_mhz(result.points[dip].detuning),
            pops[0],
            pops[1]
        ),
    ))
}

fn four_level_asymmetry() -> Result<Outcome, String> {
    let p = raman_setup();
    let splitting = 2.0 * PI * 816.656e6;
    let base = models::four_level(p.gamma, p.gamma_g, p.pump, p.probe, p.hyperfine, splitting, 0.0, 0.0).map_err(err)?;
    let probe = ProbeResponse::from_beat_couplings(&base, p.probe).map_err(err)?;
    let medium = MediumParams::rubidium_d1(p.gamma);
    let scan = scan_of(base, p.hyperfine);
    let result = sweep(&scan, &probe, &medium, &SweepConfig::new(linspace(mhz(-60.0), mhz(60.0), 241).map_err(err)?, 1)).map_err(err)?;
    let gain: Vec<f64> = result.points.iter().map(|p| p.gain()).collect();
    let mut maxima = local_maxima(&gain);
    maxima.sort_by(|&a, &b| gain[b].total_cmp(&gain[a]));
    if maxima.len() < 2 {
        return Ok(outcome(false, format!("found {} gain maxima", maxima.len())));
    }
    let gain_at = |x: f64| -> Result<f64, String> {
        let spec = scan.build(x, 0.0).map_err(err)?;
        let s = solve_with(&spec, 1, &SolveOptions::default()).map_err(err)?;
        Ok(-susceptibility(&s.harmonics, &medium, &probe).map_err(err)?.im)
    };
    let step = result.points[1].detuning - result.points[0].detuning;
    let mut peaks = Vec::new();
    for &i in &maxima[..2] {
        let x = result.points[i].detuning;
        peaks.push(golden_max(gain_at, x - step, x + step, 40)?);
    }
    peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (h1, h2) = (peaks[0].1, peaks[1].1);
    let asymmetry = (h1 - h2).abs() / h1.max(h2);
    Ok(outcome(
        asymmetry > FOUR_LEVEL_ASYMMETRY,
        format!(
            "peaks {:.3e} at {:+.2} MHz and {:.3e} at {:+.2} MHz, relative difference {asymmetry:.3} (threshold {FOUR_LEVEL_ASYMMETRY})",
            h1,
            to_mhz(peaks[0].0),
            h2,
            to_mhz(peaks[1].0)
        ),
    ))
}

/// Width of the region where |Im χ| is at least half its maximum.
fn half_max_width(result: &SpectrumResult) -> (f64, f64) {
    let im: Vec<f64> = result.points.iter().map(|p| p.chi.im.abs()).collect();
    let peak = im.iter().cloned().fold(0.0, f64::max);
    let step = to_mhz(result.points[1].detuning - result.points[0].detuning);
    let width = im.iter().filter(|&&v| v >= 0.5 * peak).count() as f64 * step;
    (peak, width)
}

fn doppler_averaging() -> Result<Outcome, String> {
    let scan = two_level_scan(pump(), probe())?;
    let medium = MediumParams::rubidium_d1(gamma());
    let grid = VelocityGrid::maxwell(&medium, 201, 5.0).map_err(err)?;
    let weight_sum: f64 = grid.weights.iter().sum();
    let mut cfg = SweepConfig::new(linspace(mhz(-800.0), mhz(800.0), 201).map_err(err)?, 1);
    let still = sweep(&scan, &two_level_probe(), &medium, &cfg).map_err(err)?;
    cfg.velocity = grid;
    let averaged = sweep(&scan, &two_level_probe(), &medium, &cfg).map_err(err)?;
    let (p0, w0) = half_max_width(&still);
    let (p1, w1) = half_max_width(&averaged);
    let pass = p1 < p0 && w1 > w0 && (weight_sum - 1.0).abs() <= WEIGHT_SUM_TOL;
    Ok(outcome(
        pass,
        format!(
            "201x201, Doppler FWHM {:.0} MHz; peak |Im χ| {p0:.3e} → {p1:.3e}, half-max width {w0:.0} → {w1:.0} MHz, |Σw - 1| {:.1e}",
            medium.doppler_fwhm_hz() / 1e6,
            (weight_sum - 1.0).abs()
        ),
    ))
}

fn rubidium(inv: &mut Invariants) -> Result<Outcome, String> {
    let params = rb87::Rb87Params::default();
    let system = rb87::rb87_d1_sixteen_level(&params, &rb87::DipoleTable::bundled()).map_err(err)?;
    let start = Instant::now();
    let s = solve_with(&system.spec, 1, &SolveOptions::default()).map_err(err)?;
    let per_point = start.elapsed();
    inv.record(&s);

    let mut medium = MediumParams::rubidium_d1(params.linewidth);
    medium.wavevector = 2.0 * PI / rb87::WAVELENGTH;
    let mut cfg = SweepConfig::new(linspace(mhz(-20.0), mhz(20.0), 21).map_err(err)?, 1);
    cfg.velocity = VelocityGrid::maxwell(&medium, 61, 0.9).map_err(err)?;
    let result = sweep(&system.scan(), &system.probe, &medium, &cfg).map_err(err)?;
    let gain: Vec<f64> = result.points.iter().map(|p| p.gain()).collect();
    let best = (0..gain.len()).max_by(|&a, &b| gain[a].total_cmp(&gain[b])).unwrap();
    let at = to_mhz(result.points[best].detuning);
    let edge = 0.5 * (gain[0] + gain[gain.len() - 1]);
    let prominence = (gain[best] - edge) / edge.abs();
    let pass = per_point < Duration::from_secs(1) && at.abs() <= 5.0 && prominence > 0.5;
    Ok(outcome(
        pass,
        format!(
            "768 unknowns solved in {per_point:.0?}; averaged gain peak {:+.2e} at {at:+.1} MHz, edge gain {edge:+.2e}, prominence {prominence:.2} (need > 0.5 within ±5 MHz)",
            gain[best]
        ),
    ))
}

fn main() {
    let mut results = Vec::new();
    let mut inv = Invariants::default();
    run(1, "builder equivalence", &mut results, || builder_equivalence(&mut inv));
    run(2, "oracle agreement", &mut results, || oracle_agreement(&mut inv));
    run(4, "closed-form saturation", &mut results, || closed_form(&mut inv));
    run(5, "Mollow shape and CSV identity", &mut results, mollow_shape);
    run(6, "K-convergence", &mut results, k_convergence_check);
    run(7, "Autler-Townes and inversion", &mut results, || autler_townes(&mut inv));
    run(8, "four-level asymmetry", &mut results, four_level_asymmetry);
    run(9, "Doppler averaging", &mut results, doppler_averaging);
    run(10, "16-level Raman gain", &mut results, || rubidium(&mut inv));
    run(3, "physical invariants", &mut results, || {
        let sector = sector_decoupling(&mut inv)?;
        let pass = inv.trace <= TRACE_TOL
            && inv.hermiticity <= HERMITICITY_TOL
            && inv.residual <= RESIDUAL_TOL
            && sector <= SECTOR_TOL;
        Ok(outcome(
            pass,
            format!(
                "{} solves: trace {:.1e}, hermiticity {:.1e}, residual {:.1e}, probe-off sidebands {sector:.1e}",
                inv.solves, inv.trace, inv.hermiticity, inv.residual
            ),
        ))
    });
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
