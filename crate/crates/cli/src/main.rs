use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pumpprobe::solver::{build_system, solve_system};
use pumpprobe::spectroscopy::{
    k_convergence, linspace, sweep, DetuningScan, SpectrumResult, SweepConfig, VelocityGrid,
};
use pumpprobe::timedomain::{periodic_steady_state, OracleConfig};
use pumpprobe::{Execution, MatrixBuilder, SolveOptions};

mod config;
mod plot;

use config::Resolved;

#[derive(Parser)]
#[command(name = "pumpprobe", version, about = "Pump-probe density-matrix harmonics and probe spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve at the configured beat frequency and print every harmonic.
    Solve(RunArgs),
    /// Probe susceptibility spectrum over the configured detuning range.
    Sweep(RunArgs),
    /// Cross-check both matrix builders and the time-domain integrator.
    Validate(RunArgs),
    /// Repeat the sweep at orders 1..=K and report the differences.
    Convergence(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    config: PathBuf,
    /// Harmonic order K (maximum order for `convergence`; `validate` defaults to at least 6).
    #[arg(short = 'k', long = "orders")]
    orders: Option<usize>,
    /// Number of detuning points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    velocity_groups: Option<usize>,
    #[arg(long)]
    temperature_k: Option<f64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, env = "PUMPPROBE_JOBS")]
    jobs: Option<usize>,
    /// Output file (CSV); standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot of the spectrum (`sweep` only).
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Write the fully resolved configuration here ('-' for stdout) and exit.
    #[arg(long)]
    dump_config: Option<PathBuf>,
    /// Tolerance for the time-domain comparison in `validate`.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Skip the time-domain integration in `validate`.
    #[arg(long)]
    no_oracle: bool,
    /// Cell length (m) for the single-pass intensity gain reported by `sweep`.
    #[arg(long)]
    cell_length_m: Option<f64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<Resolved> {
        let file = config::load(&self.config)?;
        let base = self.config.parent().unwrap_or(Path::new("."));
        let mut r = file.resolve(base)?;
        if let Some(k) = self.orders {
            r.sweep.order = k;
        }
        if let Some(n) = self.points {
            r.sweep.points = n;
        }
        if let Some(g) = self.velocity_groups {
            r.sweep.velocity_groups = g;
        }
        if let Some(t) = self.temperature_k {
            r.medium.temperature = t;
        }
        r.medium.validate()?;
        Ok(r)
    }

    fn execution(&self) -> Execution {
        match self.jobs {
            Some(j) => Execution::with_jobs(j),
            None => Execution::default(),
        }
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn sweep_config(r: &Resolved, args: &RunArgs) -> Result<SweepConfig> {
    let s = &r.sweep;
    let detunings = linspace(2.0 * PI * s.start_hz, 2.0 * PI * s.stop_hz, s.points)?;
    let mut cfg = SweepConfig::new(detunings, s.order);
    cfg.velocity = VelocityGrid::maxwell(&r.medium, s.velocity_groups, s.velocity_span_sigmas)?;
    cfg.execution = args.execution();
    Ok(cfg)
}

fn scan(r: &Resolved) -> DetuningScan {
    DetuningScan {
        base: r.spec.clone(),
        beat_offset: 2.0 * PI * r.sweep.beat_offset_hz,
        moving_levels: r.moving_levels(),
    }
}

/// Closure check with the 1-based level numbering of the config file.
fn check_closed(r: &Resolved) -> Result<()> {
    match r.spec.check_closed(1e-9) {
        Err(pumpprobe::Error::OpenSystem { level, defect }) => {
            anyhow::bail!("system is not closed: level {} loses {defect:e} rad/s more than its sources return", level + 1)
        }
        other => Ok(other?),
    }
}

fn cmd_solve(args: &RunArgs, r: &Resolved) -> Result<()> {
    check_closed(r)?;
    let system = build_system(&r.spec, r.sweep.order, MatrixBuilder::Numeric)?;
    let solution = solve_system(&system, &SolveOptions::default())?;
    let mut out = csv::Writer::from_writer(args.output()?);
    out.write_record(["row", "col", "harmonic", "re", "im"])?;
    let h = &solution.harmonics;
    let layout = h.layout();
    for (pos, value) in h.flatten().iter().enumerate() {
        let (i, j, k) = layout.element(pos)?;
        out.write_record([
            (i + 1).to_string(),
            (j + 1).to_string(),
            k.to_string(),
            format!("{:?}", value.re),
            format!("{:?}", value.im),
        ])?;
    }
    out.flush()?;
    eprintln!("unknowns            {}", layout.len());
    eprintln!("trace defect        {:.3e}", h.trace_defect());
    eprintln!("hermiticity defect  {:.3e}", h.hermiticity_defect());
    eprintln!("relative residual   {:.3e}", solution.residual);
    eprintln!("condition estimate  {:.3e}", solution.condition);
    Ok(())
}

fn write_spectrum(args: &RunArgs, result: &SpectrumResult) -> Result<()> {
    let mut out = args.output()?;
    result.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_sweep(args: &RunArgs, r: &Resolved) -> Result<()> {
    let cfg = sweep_config(r, args)?;
    let result = sweep(&scan(r), &r.probe, &r.medium, &cfg)?;
    write_spectrum(args, &result)?;
    if let Some(path) = &args.plot {
        plot::spectrum(path, &result).with_context(|| format!("cannot write {}", path.display()))?;
    }
    if result.failures() > 0 {
        eprintln!("{} of {} points failed and are written as NaN", result.failures(), result.points.len());
    }
    if let Some(length) = args.cell_length_m {
        let best = result.points.iter().filter(|p| p.error.is_none()).max_by(|a, b| a.gain().total_cmp(&b.gain()));
        if let Some(p) = best {
            let g = (r.medium.wavevector * p.gain() * length).exp();
            eprintln!("peak single-pass intensity gain {g:.6} at {:.3} MHz over {length} m", p.detuning / (2.0 * PI * 1e6));
        }
    }
    Ok(())
}

fn cmd_convergence(args: &RunArgs, r: &Resolved) -> Result<()> {
    let max_order = args.orders.unwrap_or(3).max(1);
    let mut cfg = sweep_config(r, args)?;
    cfg.order = 1;
    let report = k_convergence(&scan(r), &r.probe, &r.medium, &cfg, max_order)?;
    let mut out = csv::Writer::from_writer(args.output()?);
    out.write_record(["from_order", "to_order", "max_abs_chi_difference"])?;
    for (i, d) in report.deviations.iter().enumerate() {
        out.write_record([(i + 1).to_string(), (i + 2).to_string(), format!("{d:?}")])?;
    }
    out.flush()?;
    if max_order > 1 {
        let (dev, at) = report.max_deviation_from_first(max_order);
        eprintln!("max |chi(K={max_order}) - chi(K=1)| = {dev:.3e} at {:.3} MHz", at / (2.0 * PI * 1e6));
    }
    Ok(())
}

const DEFAULT_VALIDATE_ORDER: usize = 6;

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

fn cmd_validate(args: &RunArgs, r: &Resolved) -> Result<bool> {
    check_closed(r)?;
    let order = args.orders.unwrap_or(r.sweep.order.max(DEFAULT_VALIDATE_ORDER));
    let numeric = build_system(&r.spec, order, MatrixBuilder::Numeric)?;
    let symbolic = build_system(&r.spec, order, MatrixBuilder::TermAlgebra)?;
    let scale = pumpprobe::model::inf_norm(&numeric.m);
    let m_dev = (&numeric.m - &symbolic.m).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
    let options = SolveOptions::default();
    let a = solve_system(&numeric, &options)?;
    let b = solve_system(&symbolic, &options)?;
    let norm = a.harmonics.flatten().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut checks = vec![
        Check { name: "M elementwise (relative)", value: m_dev, tolerance: 1e-12 },
        Check { name: "solution (relative)", value: a.harmonics.max_abs_diff(&b.harmonics)? / norm, tolerance: 1e-10 },
        Check { name: "trace", value: a.harmonics.trace_defect(), tolerance: 1e-10 },
        Check { name: "hermiticity", value: a.harmonics.hermiticity_defect(), tolerance: 1e-10 },
        Check { name: "residual (relative)", value: a.residual, tolerance: 1e-9 },
    ];
    if !args.no_oracle {
        if r.spec.beat_frequency == 0.0 {
            anyhow::bail!("the time-domain check needs a nonzero beat frequency; set beat_frequency_hz or pass --no-oracle");
        }
        let oracle_order = order.min(2);
        let cfg = OracleConfig { settle_tolerance: 1e-10, ..OracleConfig::default() };
        let oracle = periodic_steady_state(&r.spec, oracle_order, &cfg)?;
        let mut dev = 0.0f64;
        for k in -(oracle_order as i32)..=oracle_order as i32 {
            let d = (a.harmonics.get(k)? - oracle.harmonics.get(k)?).iter().map(|z| z.norm()).fold(0.0, f64::max);
            dev = dev.max(d);
        }
        checks.push(Check { name: "time domain (absolute)", value: dev, tolerance: args.tolerance });
    }
    let mut ok = true;
    println!("order K = {order}, {} unknowns", numeric.layout.len());
    for c in &checks {
        let pass = c.value <= c.tolerance;
        ok &= pass;
        println!("{} {:<26} {:.3e} (tolerance {:.0e})", if pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let (Command::Solve(args) | Command::Sweep(args) | Command::Validate(args) | Command::Convergence(args)) = &cli.command;
    let resolved = args.resolve()?;
    if let Some(path) = &args.dump_config {
        let text = config::dump(&resolved.to_config())?;
        if path.as_os_str() == "-" {
            print!("{text}");
        } else {
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
        }
        return Ok(true);
    }
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, &resolved).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a, &resolved).map(|_| true),
        Command::Convergence(a) => cmd_convergence(a, &resolved).map(|_| true),
        Command::Validate(a) => cmd_validate(a, &resolved),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
