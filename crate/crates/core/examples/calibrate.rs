//! Measures the spectral evolution constant with the split-step channel and
//! compares it with the value the library assumes.

use nfdm::calibration::{calibrate_evolution_constant, CalibrationSetup};
use nfdm::constants::EVOLUTION_CONSTANT;

fn main() -> nfdm::Result<()> {
    let report = calibrate_evolution_constant(&CalibrationSetup::default())?;
    println!("propagated z = {:.4} (normalized)", report.distance);
    for (i, c) in report.per_eigenvalue.iter().enumerate() {
        println!("  eigenvalue {i}: c = {c:.6}");
    }
    println!("fitted c = {:.6}, frozen c = {EVOLUTION_CONSTANT}", report.evolution_constant);
    println!("phase residual = {:.2e} rad", report.phase_residual);
    Ok(())
}
