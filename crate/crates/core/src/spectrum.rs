//! Dominant-frequency estimate for sampled signals.

use crate::error::{Error, Result};

/// Hann-windowed power `|Σ w_i (y_i − ȳ) e^{−iωt_i}|²`; samples need not
/// be evenly spaced.
pub fn power(t: &[f64], y: &[f64], omega: f64) -> f64 {
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let span = (t1 - t0).max(f64::MIN_POSITIVE);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (ti - t0) / span).cos();
        let (s, c) = (omega * ti).sin_cos();
        re += w * (yi - mean) * c;
        im -= w * (yi - mean) * s;
    }
    re * re + im * im
}

/// Frequency of the strongest peak in `[omega_lo, omega_hi]`.
///
/// Scans a grid fine enough to resolve the window's main lobe, then refines
/// the best cell by golden-section search.
pub fn dominant_frequency(t: &[f64], y: &[f64], omega_lo: f64, omega_hi: f64) -> Result<f64> {
    if t.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), actual: y.len() });
    }
    if t.len() < 8 {
        return Err(Error::InvalidParams("need at least 8 samples for a spectrum".into()));
    }
    if !(omega_lo > 0.0 && omega_hi > omega_lo) {
        return Err(Error::InvalidParams(format!("bad frequency band [{omega_lo}, {omega_hi}]")));
    }
    let span = t[t.len() - 1] - t[0];
    // Main-lobe width of the Hann window is ~4·2π/span; sample it 8 times.
    let d = std::f64::consts::PI / span;
    let n = (((omega_hi - omega_lo) / d).ceil() as usize).max(16);
    let step = (omega_hi - omega_lo) / n as f64;
    let mut best = (omega_lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let w = omega_lo + i as f64 * step;
        let p = power(t, y, w);
        if p > best.1 {
            best = (w, p);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(omega_lo), (best.0 + step).min(omega_hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut e) = (b - g * (b - a), a + g * (b - a));
    let (mut pc, mut pe) = (power(t, y, c), power(t, y, e));
    for _ in 0..60 {
        if pc > pe {
            b = e;
            e = c;
            pe = pc;
            c = b - g * (b - a);
            pc = power(t, y, c);
        } else {
            a = c;
            c = e;
            pc = pe;
            e = a + g * (b - a);
            pe = power(t, y, e);
        }
    }
    Ok(0.5 * (a + b))
}

/// Mean angular frequency from upward zero crossings (linearly
/// interpolated) of an already centred signal.
pub fn crossing_frequency(t: &[f64], y: &[f64]) -> Result<f64> {
    if t.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), actual: y.len() });
    }
    let mut first = None;
    let mut last = 0.0;
    let mut count = 0usize;
    for i in 0..y.len().saturating_sub(1) {
        if y[i] < 0.0 && y[i + 1] >= 0.0 {
            let tc = t[i] + (t[i + 1] - t[i]) * (-y[i] / (y[i + 1] - y[i]));
            first.get_or_insert(tc);
            last = tc;
            count += 1;
        }
    }
    match first {
        Some(t0) if count >= 2 => Ok(2.0 * std::f64::consts::PI * (count - 1) as f64 / (last - t0)),
        _ => Err(Error::Extraction("fewer than two upward zero crossings".into())),
    }
}
