//! Darboux synthesis of the 10-eigenvalue grid with unit seeds, plus the
//! duration, bandwidth and energy of the result.

use nfdm::darboux::{synthesize, DarbouxConstants};
use nfdm::metrics::{bandwidth99, pulse_duration};
use nfdm::pulse::TimeGrid;
use nfdm::spectrum::default_grid;

fn main() -> nfdm::Result<()> {
    let grid = default_grid();
    let q = synthesize(&grid, &DarbouxConstants::unit(grid.len()), TimeGrid::symmetric(32.0, 8192)?)?;
    let (lo, hi) = pulse_duration(&q, 0.01)?;
    println!("eigenvalues: {}", grid.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "));
    println!("peak |q| = {:.3}", q.peak());
    println!("energy = {:.4} (trace identity 4·Σσ = 60)", q.energy());
    println!("duration (ε = 0.01) = [{lo:.3}, {hi:.3}], width {:.3}", hi - lo);
    println!("99% bandwidth = {:.3} cycles per time unit", bandwidth99(&q)?);

    let out = std::env::temp_dir().join("nfdm_all_on.bin");
    q.save(&out)?;
    println!("samples written to {}", out.display());
    Ok(())
}
