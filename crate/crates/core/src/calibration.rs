//! Measures the spectral evolution constant of the simulated channel.
//!
//! A two-soliton is launched into lossless fiber, propagated by split-step,
//! and its discrete spectrum is measured before and after. With
//! `q_d(z) = q_d(0)·exp(c·j·λ²·z)` and `λ = ω + jσ`, the magnitude changes as
//! `exp(−2cωσz)`, which gives `c` without phase unwrapping; the phase is then
//! checked against the fitted value.

use num_complex::Complex64;
use serde::Serialize;

use crate::darboux::synthesize_spectrum;
use crate::error::{Error, Result};
use crate::nft::spectral_amplitude;
use crate::pulse::TimeGrid;
use crate::spectrum::{DiscreteSpectrum, Eigenvalue, NormalizationMap};
use crate::ssfm::{propagate_distance, FiberSpan};

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationReport {
    /// Fitted constant, averaged over eigenvalues.
    pub evolution_constant: f64,
    /// Per-eigenvalue fits.
    pub per_eigenvalue: Vec<f64>,
    /// Largest phase mismatch (radians, wrapped) of the fitted model.
    pub phase_residual: f64,
    pub distance: f64,
}

#[derive(Clone, Debug)]
pub struct CalibrationSetup {
    pub eigenvalues: Vec<Eigenvalue>,
    pub amplitudes: Vec<Complex64>,
    /// Propagation distance in km.
    pub length_km: f64,
    pub dz_km: f64,
    pub grid: TimeGrid,
    pub map: NormalizationMap,
}

impl Default for CalibrationSetup {
    fn default() -> Self {
        Self {
            eigenvalues: vec![
                Eigenvalue::new(-0.25, 0.7).expect("static"),
                Eigenvalue::new(0.25, 0.5).expect("static"),
            ],
            amplitudes: vec![Complex64::new(1.0, 0.5), Complex64::new(-0.8, 1.0)],
            length_km: 2000.0,
            dz_km: 1.0,
            grid: TimeGrid::symmetric(32.0, 4096).expect("static"),
            map: NormalizationMap::nz_dsf_default(),
        }
    }
}

/// Wraps an angle into `[−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    x - two_pi * (x / two_pi).round()
}

pub fn calibrate_evolution_constant(setup: &CalibrationSetup) -> Result<CalibrationReport> {
    if setup.eigenvalues.iter().any(|l| l.omega() == 0.0) {
        return Err(Error::domain("calibration eigenvalues need nonzero real parts"));
    }
    let spec = DiscreteSpectrum::from_parts(&setup.eigenvalues, &setup.amplitudes)?;
    let launch = synthesize_spectrum(&spec, setup.grid)?;
    let m = setup.map;
    // fiber with exactly the normalizing dispersion and nonlinearity
    let fiber = FiberSpan::new(setup.length_km, m.beta2_s2_per_m * 1e27, m.gamma_per_w_m * 1e3, 0.0)?;
    let out = propagate_distance(&launch, &fiber, &m, setup.length_km, setup.dz_km, true)?;
    let z = m.z_to_normalized(setup.length_km * 1e3);

    let mut fits = Vec::new();
    let mut ratios = Vec::new();
    for (l, _) in spec.entries() {
        let before = spectral_amplitude(&launch, *l)?.value();
        let after = spectral_amplitude(&out, *l)?.value();
        let ratio = after / before;
        fits.push(-ratio.norm().ln() / (2.0 * l.omega() * l.sigma() * z));
        ratios.push((*l, ratio));
    }
    let c = fits.iter().sum::<f64>() / fits.len() as f64;
    let phase_residual = ratios
        .iter()
        .map(|(l, r)| {
            let l2 = l.value() * l.value();
            wrap_phase(r.arg() - c * l2.re * z).abs()
        })
        .fold(0.0, f64::max);
    Ok(CalibrationReport { evolution_constant: c, per_eigenvalue: fits, phase_residual, distance: z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::EVOLUTION_CONSTANT;

    #[test]
    fn calibration_reproduces_frozen_constant() {
        let r = calibrate_evolution_constant(&CalibrationSetup::default()).unwrap();
        println!("{r:?}");
        assert!((r.evolution_constant - EVOLUTION_CONSTANT).abs() < 0.02, "{r:?}");
        assert!(r.phase_residual < 0.05, "{r:?}");
    }
}
