//! End-to-end OOK experiment from a config file (default: a short run).
//!
//!     cargo run --release --example ber_experiment -- examples/configs/ber.json

use nfdm::config::ExperimentConfig;
use nfdm::design::{build_codebook, Codebook};
use nfdm::pipeline::run_experiment;

fn main() -> nfdm::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::from_json(include_str!("configs/quick.json"))?,
    };
    let book = match cfg.codebook_path() {
        Some(p) => Codebook::load(p)?,
        None => build_codebook(&cfg.eigenvalue_grid()?, &cfg.patterns()?, &cfg.design_rules()?, cfg.rules.strategy, cfg.seeds.patterns)?,
    };
    let setup = cfg.experiment_setup()?;
    println!(
        "{} symbols over {:.1} km, launch factor {:.4}",
        setup.frames() * setup.symbols_per_frame,
        setup.link.total_length_km(),
        setup.launch_scale()
    );
    let out = run_experiment(&book, &setup)?;
    let r = &out.report;
    println!("BER = {:.3e} ({} errors in {} bits)", r.ber, r.bit_errors, r.total_bits);
    println!("per eigenvalue: {:?}", r.per_eigenvalue_errors);
    println!("OSNR analytic {:?} dB, from guard slots {:?} dB", r.osnr_analytic_db, r.osnr_empirical_db);
    println!("detector failures {}, spurious detections {}", r.detector_failures, r.spurious_detections);
    Ok(())
}
