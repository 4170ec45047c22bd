//! In-link bandwidth of a two-soliton under lossless propagation, for the
//! best and worst quantized relative phase.

use nfdm::design::{midlink_reference, phase_search_with_goal, to_transmit_spectrum, DesignRules, SearchGoal, SearchStrategy};
use nfdm::metrics::bandwidth_profile;
use nfdm::pulse::TimeGrid;
use nfdm::spectrum::Eigenvalue;

fn main() -> nfdm::Result<()> {
    let subset = [Eigenvalue::new(-1.0, 1.0)?, Eigenvalue::new(1.0, 2.0)?];
    let rules = DesignRules::reference_default().with_uniform_sampling(21);
    let z: Vec<f64> = rules.z_sampling.clone();
    for goal in [SearchGoal::MinimizeBandwidth, SearchGoal::MaximizeBandwidth] {
        let r = phase_search_with_goal(&subset, &rules, SearchStrategy::Exhaustive, goal)?;
        let tx = to_transmit_spectrum(&midlink_reference(&subset, &r.phases)?, rules.z_link);
        let profile = bandwidth_profile(&tx, &z, TimeGrid::symmetric(16.0, 2048)?)?;
        println!("{goal:?}: levels {:?}, max {:.4}", r.levels, profile.max());
        print!("{}", profile.to_csv());
    }
    Ok(())
}
