//! Fourier-collocation detection: the Satsuma-Yajima pulses and a synthesized
//! multi-soliton with its spectral amplitudes.

use nfdm::darboux::synthesize_spectrum;
use nfdm::nft::{detect_eigenvalues, discrete_spectrum, FcParams};
use nfdm::pulse::{SampledPulse, TimeGrid};
use nfdm::spectrum::{DiscreteSpectrum, Eigenvalue};
use num_complex::Complex64;

fn main() -> nfdm::Result<()> {
    let grid = TimeGrid::symmetric(16.0, 4096)?;
    for amp in [1.0, 2.2] {
        let q = SampledPulse::from_fn(grid, |t| Complex64::new(amp / t.cosh(), 0.0))?;
        let eigs = detect_eigenvalues(&q, &FcParams::default())?;
        println!("{amp}·sech(t): {}", eigs.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "));
    }

    let eigs = [Eigenvalue::new(-1.0, 1.0)?, Eigenvalue::new(0.0, 2.0)?, Eigenvalue::new(1.0, 1.0)?];
    let amps = [Complex64::new(0.0, -3.0), Complex64::from_polar(40.0, 0.7), Complex64::new(2.0, 1.0)];
    let spec = DiscreteSpectrum::from_parts(&eigs, &amps)?;
    let q = synthesize_spectrum(&spec, grid)?;
    let found = discrete_spectrum(&q, &FcParams::with_harmonics(128))?;
    println!("prescribed vs measured:");
    for ((l, a), (m, b)) in spec.entries().iter().zip(found.entries()) {
        println!("  {l} {:>24} | {m} {:>24}", format!("{:.4}", a.value()), format!("{:.4}", b.value()));
    }
    Ok(())
}
