//! Sends one designed pulse over the lossy, amplified link and tracks its
//! eigenvalues span by span.

use nfdm::darboux::synthesize_spectrum;
use nfdm::design::{midlink_reference, to_transmit_spectrum, DesignRules};
use nfdm::metrics::eigenvalue_deviation;
use nfdm::nft::{detect_eigenvalues, FcParams};
use nfdm::pulse::TimeGrid;
use nfdm::spectrum::default_grid;
use nfdm::ssfm::{noise_rng, run_link, LinkProfile};

fn main() -> nfdm::Result<()> {
    let grid = default_grid();
    let subset = vec![grid[1], grid[4], grid[7]];
    let rules = DesignRules::reference_default();
    let tx = to_transmit_spectrum(&midlink_reference(&subset, &[0.0; 3])?, rules.z_link);

    let mut link = LinkProfile::reference_loop();
    link.loops = 4;
    let scale = link.launch_scale();
    println!("path-average launch factor F = {:.4}", scale * scale);
    let launch = synthesize_spectrum(&tx, TimeGrid::symmetric(32.0, 4096)?)?.scaled(scale.into());
    let (_, record) = run_link(&launch, &link, &mut noise_rng(7, 0), true)?;

    for (snap, km) in record.snapshots.iter().zip(&record.distances_km) {
        let q = snap.scaled((1.0 / scale).into());
        let found = detect_eigenvalues(&q, &FcParams::with_harmonics(128))?;
        println!("{km:7.1} km  deviation {:.4}  {}", eigenvalue_deviation(&found, &subset), found.len());
    }
    Ok(())
}
