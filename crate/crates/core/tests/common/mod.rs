#![allow(dead_code)]

use pumpprobe::{HarmonicTag, SystemSpec};
use rand::Rng;

/// A closed system with random detunings, drives and decay channels. Every
/// level has at least one outgoing channel so the steady state is unique.
pub fn random_spec<R: Rng>(rng: &mut R, n: usize) -> SystemSpec {
    let mut spec = SystemSpec::new(n);
    for from in 0..n {
        let mut to = rng.random_range(0..n - 1);
        if to >= from {
            to += 1;
        }
        spec = spec.with_source(from, to, rng.random_range(0.2..2.0));
        for other in (0..n).filter(|&o| o != from && o != to) {
            if rng.random_bool(0.3) {
                spec = spec.with_source(from, other, rng.random_range(0.05..1.0));
            }
        }
    }
    let mut driven = false;
    for r in 0..n {
        for c in r + 1..n {
            if rng.random_bool(0.6) || (!driven && r == n - 2) {
                spec = spec.with_coupling(r, c, rng.random_range(0.1..3.0), HarmonicTag::Static);
                driven = true;
            }
            if rng.random_bool(0.5) {
                spec = spec.with_coupling(r, c, rng.random_range(0.05..1.5), HarmonicTag::Beat);
            }
        }
    }
    for l in 0..n {
        let outflow: f64 = spec.sources.iter().filter(|s| s.from == l).map(|s| s.rate).sum();
        spec = spec.with_level(l, rng.random_range(-3.0..3.0), outflow);
    }
    let beat = rng.random_range(0.3..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    spec.with_beat_frequency(beat)
}

/// Same system with every probe coupling switched off.
pub fn without_probe(spec: &SystemSpec) -> SystemSpec {
    let mut out = spec.clone();
    for c in &mut out.couplings {
        if c.tag == HarmonicTag::Beat {
            c.rabi = 0.0;
        }
    }
    out
}

pub fn mhz(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f * 1e6
}
