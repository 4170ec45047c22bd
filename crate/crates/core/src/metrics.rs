//! Pulse descriptors used as design constraints.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{BANDWIDTH_ENERGY_FRACTION, DEFAULT_DECISION_RADIUS};
use crate::darboux::synthesize_spectrum;
use crate::error::{Error, Result};
use crate::fourier;
use crate::pulse::{SampledPulse, TimeGrid};
use crate::spectrum::{propagate_spectrum, DiscreteSpectrum, Eigenvalue};

/// Smallest interval outside which `|q(t)|/√E < ε` on the grid.
///
/// Endpoints are placed at the linearly interpolated ε-crossing between the
/// outermost sample at or above threshold and its neighbor outside.
pub fn pulse_duration(pulse: &SampledPulse, epsilon: f64) -> Result<(f64, f64)> {
    if pulse.is_zero() {
        return Err(Error::domain("duration of an all-zero pulse is undefined"));
    }
    let thr = epsilon * pulse.energy().sqrt();
    let mags: Vec<f64> = pulse.samples().iter().map(|s| s.norm()).collect();
    let grid = pulse.grid();
    let first = mags.iter().position(|&m| m >= thr).expect("nonzero pulse");
    let last = mags.iter().rposition(|&m| m >= thr).expect("nonzero pulse");
    let crossing = |inside: usize, outside: usize| {
        let (mi, mo) = (mags[inside], mags[outside]);
        let frac = if mi > mo { (mi - thr) / (mi - mo) } else { 0.0 };
        grid.time(inside) + frac * (grid.time(outside) - grid.time(inside))
    };
    let lo = if first == 0 { grid.time(0) } else { crossing(first, first - 1) };
    let hi = if last + 1 == mags.len() { grid.time(last) } else { crossing(last, last + 1) };
    Ok((lo, hi))
}

/// `t_hi − t_lo` of [`pulse_duration`].
pub fn duration_width(pulse: &SampledPulse, epsilon: f64) -> Result<f64> {
    let (lo, hi) = pulse_duration(pulse, epsilon)?;
    Ok(hi - lo)
}

const SPECTRAL_PADDING: usize = 4;

/// Width (in normalized frequency, cycles per time unit) of the interval
/// centered on the spectral centroid that holds 99% of `|Q(f)|²`.
pub fn bandwidth99(pulse: &SampledPulse) -> Result<f64> {
    bandwidth_fraction(pulse, BANDWIDTH_ENERGY_FRACTION)
}

/// As [`bandwidth99`] for an arbitrary energy fraction in `(0, 1)`.
///
/// The power spectrum is treated as a histogram (constant over each bin), so
/// the enclosed energy grows continuously with the half-width and the
/// fraction is met exactly.
pub fn bandwidth_fraction(pulse: &SampledPulse, fraction: f64) -> Result<f64> {
    if pulse.is_zero() {
        return Err(Error::domain("bandwidth of an all-zero pulse is undefined"));
    }
    // zero padding refines the frequency bins so the histogram model is accurate
    let n = (pulse.len() * SPECTRAL_PADDING).next_power_of_two();
    let mut buf: Vec<Complex64> = pulse.samples().to_vec();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fourier::forward(&mut buf);
    let df = 1.0 / (n as f64 * pulse.dt());
    // shifted order: bin index i ↔ frequency (i − n/2)·df
    let half = n / 2;
    let power: Vec<f64> = (0..n).map(|i| buf[(i + n - half) % n].norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    let centroid = power
        .iter()
        .enumerate()
        .map(|(i, p)| (i as f64 - half as f64) * df * p)
        .sum::<f64>()
        / total;
    let target = fraction * total;
    // Bin i covers [f_i − df/2, f_i + df/2]; enclosed(w) is piecewise linear in w.
    // Collect the breakpoints (distances from centroid to bin edges) and walk them.
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for (i, &p) in power.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let f = (i as f64 - half as f64) * df;
        let lo = f - 0.5 * df - centroid;
        let hi = f + 0.5 * df - centroid;
        let density = p / df;
        if lo >= 0.0 {
            events.push((lo, density));
            events.push((hi, -density));
        } else if hi <= 0.0 {
            events.push((-hi, density));
            events.push((-lo, -density));
        } else {
            // centroid inside this bin: both sides start filling at w = 0
            events.push((0.0, 2.0 * density));
            events.push((hi.min(-lo), -density));
            events.push((hi.max(-lo), -density));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut enclosed = 0.0;
    let mut rate = 0.0;
    let mut w = 0.0;
    for (pos, delta) in events {
        let gain = rate * (pos - w);
        if enclosed + gain >= target && rate > 0.0 {
            return Ok(2.0 * (w + (target - enclosed) / rate));
        }
        enclosed += gain;
        w = pos;
        rate += delta;
    }
    Ok(2.0 * w)
}

/// Bandwidth as a function of distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandwidthProfile {
    pub distances: Vec<f64>,
    pub bw: Vec<f64>,
}

impl BandwidthProfile {
    pub fn max(&self) -> f64 {
        self.bw.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,bw\n");
        for (z, b) in self.distances.iter().zip(&self.bw) {
            let _ = writeln!(out, "{z},{b}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Lossless surrogate: propagate the spectrum analytically to each `z`,
/// synthesize, and measure [`bandwidth99`].
pub fn bandwidth_profile(
    spec: &DiscreteSpectrum,
    z_samples: &[f64],
    grid: TimeGrid,
) -> Result<BandwidthProfile> {
    let bw = z_samples
        .iter()
        .map(|&z| bandwidth99(&synthesize_spectrum(&propagate_spectrum(spec, z), grid)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(BandwidthProfile {
        distances: z_samples.to_vec(),
        bw,
    })
}

/// Worst-case eigenvalue displacement with the default decision radius.
pub fn eigenvalue_deviation(detected: &[Eigenvalue], nominal: &[Eigenvalue]) -> f64 {
    eigenvalue_deviation_with_radius(detected, nominal, DEFAULT_DECISION_RADIUS)
}

/// Greedy nearest matching (pairs within `radius`, closest first); returns the
/// largest matched distance, with every unmatched nominal counting as `radius`.
pub fn eigenvalue_deviation_with_radius(
    detected: &[Eigenvalue],
    nominal: &[Eigenvalue],
    radius: f64,
) -> f64 {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, n) in nominal.iter().enumerate() {
        for (k, d) in detected.iter().enumerate() {
            let dist = n.distance(d);
            if dist <= radius {
                pairs.push((dist, i, k));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut nominal_done = vec![false; nominal.len()];
    let mut detected_done = vec![false; detected.len()];
    let mut worst: f64 = 0.0;
    for (dist, i, k) in pairs {
        if !nominal_done[i] && !detected_done[k] {
            nominal_done[i] = true;
            detected_done[k] = true;
            worst = worst.max(dist);
        }
    }
    if nominal_done.iter().any(|d| !d) {
        worst = worst.max(radius);
    }
    worst
}

/// Largest `|Im λ_det − Im λ_nom|` over greedily matched pairs (unmatched
/// nominals count as `radius`).
pub fn imaginary_deviation(detected: &[Eigenvalue], nominal: &[Eigenvalue], radius: f64) -> f64 {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, n) in nominal.iter().enumerate() {
        for (k, d) in detected.iter().enumerate() {
            let dist = n.distance(d);
            if dist <= radius {
                pairs.push((dist, i, k));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut nominal_done = vec![false; nominal.len()];
    let mut detected_done = vec![false; detected.len()];
    let mut worst: f64 = 0.0;
    for (_, i, k) in pairs {
        if !nominal_done[i] && !detected_done[k] {
            nominal_done[i] = true;
            detected_done[k] = true;
            worst = worst.max((nominal[i].sigma() - detected[k].sigma()).abs());
        }
    }
    if nominal_done.iter().any(|d| !d) {
        worst = worst.max(radius);
    }
    worst
}
