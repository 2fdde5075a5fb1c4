use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;
use pumpprobe::spectroscopy::SpectrumResult;

/// Gain (`-Im χ`) and `Re χ` against detuning in MHz.
pub fn spectrum(path: &Path, result: &SpectrumResult) -> Result<()> {
    let mhz = |w: f64| w / (2.0 * std::f64::consts::PI * 1e6);
    let points: Vec<_> = result.points.iter().filter(|p| p.error.is_none()).collect();
    if points.len() < 2 {
        return Err(anyhow!("fewer than two valid points to plot"));
    }
    let gain: Vec<(f64, f64)> = points.iter().map(|p| (mhz(p.detuning), p.gain())).collect();
    let real: Vec<(f64, f64)> = points.iter().map(|p| (mhz(p.detuning), p.chi.re)).collect();
    let (x0, x1) = (gain[0].0, gain[gain.len() - 1].0);
    let (mut y0, mut y1) = gain.iter().chain(&real).fold((f64::MAX, f64::MIN), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    let pad = 0.05 * (y1 - y0).max(f64::MIN_POSITIVE);
    y0 -= pad;
    y1 += pad;

    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(80)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart
        .configure_mesh()
        .x_desc("Detuning (MHz)")
        .y_desc("Susceptibility")
        .y_label_formatter(&|v| format!("{v:.1e}"))
        .draw()?;
    chart.draw_series(LineSeries::new(gain, &RED))?.label("-Im χ (gain)").legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], RED));
    chart.draw_series(LineSeries::new(real, &BLUE))?.label("Re χ").legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], BLUE));
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
    root.present()?;
    Ok(())
}
