//! Designs a small codebook: phase search for a few patterns, then the JSON
//! codebook file. Pass a config path to use its grid and rules instead.

use nfdm::config::ExperimentConfig;
use nfdm::design::{build_codebook, phase_search, BitPattern, SearchStrategy};

fn main() -> nfdm::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::from_json(include_str!("configs/quick.json"))?,
    };
    let grid = cfg.eigenvalue_grid()?;
    let rules = cfg.design_rules()?;
    println!("z_L = {:.4}, {} bandwidth samples, {} phase levels", rules.z_link, rules.z_sampling.len(), rules.levels()?);

    let subset = &grid[..3];
    for strategy in [SearchStrategy::Exhaustive, SearchStrategy::Coordinate] {
        let r = phase_search(subset, &rules, strategy)?;
        println!("{strategy:>10}: levels {:?}, max bandwidth {:.4}, {} evaluations", r.levels, r.max_bw, r.evaluations);
    }

    let patterns: Vec<BitPattern> = ["0000000000", "1000000001", "0110011000", "1111111111"]
        .iter()
        .map(|p| p.parse())
        .collect::<nfdm::Result<_>>()?;
    let book = build_codebook(&grid, &patterns, &rules, cfg.rules.strategy, cfg.seeds.patterns)?;
    for e in &book.entries {
        println!("{}  duration {:.3}  max bandwidth {:.3}", e.pattern, e.duration, e.max_bandwidth);
    }
    let out = std::env::temp_dir().join("nfdm_codebook.json");
    book.save(&out)?;
    println!("codebook written to {}", out.display());
    Ok(())
}
