//! Discrete nonlinear Fourier spectrum: eigenvalues, spectral amplitudes,
//! the analytic in-fiber evolution law, and physical-unit normalization.
//!
//! Conventions used throughout the crate:
//!
//! * Zakharov–Shabat system `v_t = [[-jλ, q], [-q*, jλ]] v`, so a soliton with
//!   eigenvalue `ω + jσ` has peak `2σ` and carrier `exp(-2jωt)`.
//! * Normalized distance is `z = z_phys / Z0` with `Z0 = T0²/|β2|`. In that unit
//!   the lossless channel is `j q_z = ½ q_tt + |q|² q`, i.e. the standard form
//!   `j q_ζ = q_tt + 2|q|² q` with `ζ = z/2`.
//! * Spectral amplitudes evolve as `q_d(z) = q_d(0) exp(c·j·λ²·z)` with `c` given
//!   by [`EVOLUTION_CONSTANT`], fixed by the SSFM calibration in
//!   [`crate::calibration`].

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::EVOLUTION_CONSTANT;
use crate::error::{Error, Result};
use crate::pulse::SampledPulse;

/// A point `λ = ω + jσ` in the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    omega: f64,
    sigma: f64,
}

impl Eigenvalue {
    pub fn new(omega: f64, sigma: f64) -> Result<Self> {
        if !omega.is_finite() || !sigma.is_finite() {
            return Err(Error::domain(format!(
                "eigenvalue must be finite, got {omega}+{sigma}j"
            )));
        }
        if sigma <= 0.0 {
            return Err(Error::domain(format!(
                "eigenvalue must lie in the upper half plane, got sigma = {sigma}"
            )));
        }
        Ok(Self { omega, sigma })
    }

    /// Builds an eigenvalue from a complex number, rejecting `Im λ ≤ 0`.
    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.omega, self.sigma)
    }

    pub fn distance(&self, other: &Eigenvalue) -> f64 {
        (self.value() - other.value()).norm()
    }

    /// Canonical order: ω ascending, then σ ascending.
    pub fn canonical_cmp(&self, other: &Eigenvalue) -> Ordering {
        self.omega
            .total_cmp(&other.omega)
            .then(self.sigma.total_cmp(&other.sigma))
    }
}

impl fmt::Display for Eigenvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+.4}{:+.4}j", self.omega, self.sigma)
    }
}

/// The complex constant `q_d(λ)` attached to an eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralAmplitude(Complex64);

impl SpectralAmplitude {
    pub fn new(value: Complex64) -> Result<Self> {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::domain("spectral amplitude must be finite"));
        }
        if value.norm() == 0.0 {
            return Err(Error::domain("spectral amplitude must be nonzero"));
        }
        Ok(Self(value))
    }

    pub fn from_polar(magnitude: f64, phase: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(magnitude, phase))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    pub fn phase(&self) -> f64 {
        self.0.arg()
    }
}

/// Ordered set of `(eigenvalue, amplitude)` pairs, kept in canonical order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DiscreteSpectrum {
    entries: Vec<(Eigenvalue, SpectralAmplitude)>,
}

impl DiscreteSpectrum {
    /// Sorts the entries canonically and rejects coincident eigenvalues.
    pub fn new(mut entries: Vec<(Eigenvalue, SpectralAmplitude)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.canonical_cmp(&b.0));
        for (i, a) in entries.iter().enumerate() {
            for b in &entries[i + 1..] {
                if a.0.distance(&b.0) == 0.0 {
                    return Err(Error::domain(format!("duplicate eigenvalue {}", a.0)));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_parts(eigenvalues: &[Eigenvalue], amplitudes: &[Complex64]) -> Result<Self> {
        if eigenvalues.len() != amplitudes.len() {
            return Err(Error::domain(format!(
                "{} eigenvalues but {} amplitudes",
                eigenvalues.len(),
                amplitudes.len()
            )));
        }
        let entries = eigenvalues
            .iter()
            .zip(amplitudes)
            .map(|(&l, &a)| Ok((l, SpectralAmplitude::new(a)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(Eigenvalue, SpectralAmplitude)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<Eigenvalue> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.1.value()).collect()
    }

    /// Union of two spectra with disjoint eigenvalue sets.
    pub fn union(&self, other: &DiscreteSpectrum) -> Result<Self> {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Self::new(entries)
    }

    /// Smallest pairwise eigenvalue distance, `None` for fewer than two entries.
    pub fn min_separation(&self) -> Option<f64> {
        min_pairwise_distance(&self.eigenvalues())
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    eigenvalues: Vec<[f64; 2]>,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for DiscreteSpectrum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpectrumJson {
            eigenvalues: self.entries.iter().map(|e| [e.0.omega, e.0.sigma]).collect(),
            amplitudes: self
                .entries
                .iter()
                .map(|e| [e.1.value().re, e.1.value().im])
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiscreteSpectrum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SpectrumJson::deserialize(deserializer)?;
        let eigs = raw
            .eigenvalues
            .iter()
            .map(|&[w, s]| Eigenvalue::new(w, s))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        let amps: Vec<Complex64> = raw
            .amplitudes
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        DiscreteSpectrum::from_parts(&eigs, &amps).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Eigenvalue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.omega, self.sigma].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Eigenvalue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [w, s] = <[f64; 2]>::deserialize(deserializer)?;
        Eigenvalue::new(w, s).map_err(serde::de::Error::custom)
    }
}

/// Cartesian product `ω × σ` in canonical order.
pub fn make_grid(omegas: &[f64], sigmas: &[f64]) -> Result<Vec<Eigenvalue>> {
    if let Some(bad) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::domain(format!("grid sigma must be > 0, got {bad}")));
    }
    let mut grid = Vec::with_capacity(omegas.len() * sigmas.len());
    for &w in omegas {
        for &s in sigmas {
            grid.push(Eigenvalue::new(w, s)?);
        }
    }
    grid.sort_by(|a, b| a.canonical_cmp(b));
    grid.dedup_by(|a, b| a.distance(b) == 0.0);
    Ok(grid)
}

/// The ten-point grid ω ∈ {±2, ±1, 0}, σ ∈ {1, 2}.
pub fn default_grid() -> Vec<Eigenvalue> {
    make_grid(&[-2.0, -1.0, 0.0, 1.0, 2.0], &[1.0, 2.0]).expect("static grid is valid")
}

pub fn min_pairwise_distance(eigs: &[Eigenvalue]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in eigs.iter().enumerate() {
        for b in &eigs[i + 1..] {
            let d = a.distance(b);
            best = Some(best.map_or(d, |x: f64| x.min(d)));
        }
    }
    best
}

/// Energy `4·Σ Im λ` carried by the solitonic part.
pub fn soliton_energy(spec: &DiscreteSpectrum) -> f64 {
    4.0 * spec.entries.iter().map(|e| e.0.sigma).sum::<f64>()
}

/// Phase factor `exp(c·j·λ²·z)` applied to an amplitude over distance `z`.
pub fn evolution_factor(lambda: Eigenvalue, z: f64) -> Complex64 {
    let l = lambda.value();
    (Complex64::i() * EVOLUTION_CONSTANT * l * l * z).exp()
}

/// Moves a spectrum a normalized distance `z` along the ideal lossless
/// fiber. Eigenvalues are untouched; negative `z` back-propagates.
pub fn propagate_spectrum(spec: &DiscreteSpectrum, z: f64) -> DiscreteSpectrum {
    let entries = spec
        .entries
        .iter()
        .map(|&(l, a)| (l, SpectralAmplitude(a.value() * evolution_factor(l, z))))
        .collect();
    DiscreteSpectrum { entries }
}

/// Bridge between physical units (SI) and normalized NLSE units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationMap {
    pub t0_s: f64,
    pub p0_w: f64,
    pub z0_m: f64,
    pub beta2_s2_per_m: f64,
    pub gamma_per_w_m: f64,
}

impl NormalizationMap {
    /// Derives `P0 = |β2|/(γ T0²)` and `Z0 = T0²/|β2|` from the time scale.
    pub fn new(t0_s: f64, beta2_s2_per_m: f64, gamma_per_w_m: f64) -> Result<Self> {
        if !(t0_s > 0.0) || !t0_s.is_finite() {
            return Err(Error::domain(format!("T0 must be positive, got {t0_s}")));
        }
        if !(beta2_s2_per_m < 0.0) {
            return Err(Error::domain(format!(
                "beta2 must be negative (anomalous dispersion), got {beta2_s2_per_m}"
            )));
        }
        if !(gamma_per_w_m > 0.0) {
            return Err(Error::domain(format!(
                "gamma must be positive, got {gamma_per_w_m}"
            )));
        }
        let b = beta2_s2_per_m.abs();
        Ok(Self {
            t0_s,
            p0_w: b / (gamma_per_w_m * t0_s * t0_s),
            z0_m: t0_s * t0_s / b,
            beta2_s2_per_m,
            gamma_per_w_m,
        })
    }

    /// Same as [`NormalizationMap::new`] with fiber-datasheet units.
    pub fn from_fiber_units(t0_s: f64, beta2_ps2_per_km: f64, gamma_per_w_km: f64) -> Result<Self> {
        Self::new(t0_s, beta2_ps2_per_km * 1e-27, gamma_per_w_km * 1e-3)
    }

    /// NZ-DSF (β2 = −5.75 ps²/km, γ = 1.6 /W/km) with a 2 ns slot holding
    /// twelve normalized time units.
    pub fn nz_dsf_default() -> Self {
        Self::from_fiber_units(2e-9 / 12.0, -5.75, 1.6).expect("static map is valid")
    }

    pub fn z_to_normalized(&self, z_m: f64) -> f64 {
        z_m / self.z0_m
    }

    pub fn z_to_physical(&self, z: f64) -> f64 {
        z * self.z0_m
    }
}

/// Complex baseband envelope in physical units: samples in √W, grid in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalSignal {
    pub samples: Vec<Complex64>,
    pub t_start_s: f64,
    pub dt_s: f64,
}

pub fn normalize(signal: &PhysicalSignal, map: &NormalizationMap) -> Result<SampledPulse> {
    if !(map.t0_s > 0.0) || !(map.p0_w > 0.0) {
        return Err(Error::domain("normalization needs positive T0 and P0"));
    }
    let scale = 1.0 / map.p0_w.sqrt();
    SampledPulse::new(
        signal.samples.iter().map(|s| s * scale).collect(),
        signal.t_start_s / map.t0_s,
        signal.dt_s / map.t0_s,
    )
}

pub fn denormalize(pulse: &SampledPulse, map: &NormalizationMap) -> Result<PhysicalSignal> {
    if !(map.t0_s > 0.0) || !(map.p0_w > 0.0) {
        return Err(Error::domain("normalization needs positive T0 and P0"));
    }
    let scale = map.p0_w.sqrt();
    Ok(PhysicalSignal {
        samples: pulse.samples().iter().map(|s| s * scale).collect(),
        t_start_s: pulse.t_start() * map.t0_s,
        dt_s: pulse.dt() * map.t0_s,
    })
}
