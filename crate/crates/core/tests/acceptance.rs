//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `NFDM_ACCEPTANCE=1,4,7` selects criteria. The process exits nonzero only
//! on an internal error, or on any FAIL when `NFDM_ACCEPTANCE_STRICT=1`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nfdm::calibration::wrap_phase;
use nfdm::config::ExperimentConfig;
use nfdm::constants::EVOLUTION_CONSTANT;
use nfdm::darboux::{constants_from_spectrum, synthesize, synthesize_spectrum, DarbouxConstants};
use nfdm::design::{
    build_codebook, midlink_reference, phase_search, phase_search_with_goal, surrogate_pulse, to_transmit_spectrum,
    DesignRules, SearchGoal, SearchStrategy,
};
use nfdm::metrics::{duration_width, eigenvalue_deviation};
use nfdm::nft::{detect_eigenvalues, discrete_spectrum, spectral_amplitude, FcParams};
use nfdm::pipeline::run_experiment;
use nfdm::pulse::{SampledPulse, TimeGrid};
use nfdm::spectrum::{default_grid, propagate_spectrum, DiscreteSpectrum, Eigenvalue};
use nfdm::ssfm::{noise_rng, propagate_distance, run_link, FiberSpan, LinkProfile};
use nfdm::Result;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Window of `2·half` samples centered on the energy centroid.
fn centered(p: &SampledPulse, half: usize) -> Result<SampledPulse> {
    let s = p.samples();
    let total: f64 = s.iter().map(|x| x.norm_sqr()).sum();
    let c = s.iter().enumerate().map(|(i, x)| i as f64 * x.norm_sqr()).sum::<f64>() / total;
    let start = (c.round() as usize).saturating_sub(half).min(s.len() - 2 * half);
    p.slice(start, 2 * half)
}

fn satsuma_yajima() -> Result<Outcome> {
    let t = Instant::now();
    let grid = TimeGrid::symmetric(16.0, 4096)?;
    let cases = [(1.0, vec![0.5]), (2.2, vec![0.7, 1.7])];
    let mut worst: f64 = 0.0;
    let mut counts_ok = true;
    for (amp, expected) in &cases {
        let q = SampledPulse::from_fn(grid, |t| Complex64::new(amp / t.cosh(), 0.0))?;
        let found = detect_eigenvalues(&q, &FcParams::with_harmonics(64))?;
        counts_ok &= found.len() == expected.len();
        let nominal: Vec<Eigenvalue> = expected.iter().map(|&s| Eigenvalue::new(0.0, s)).collect::<Result<_>>()?;
        worst = worst.max(eigenvalue_deviation(&found, &nominal));
    }
    let el = t.elapsed();
    outcome(
        counts_ok && worst < 1e-3 && within(el, 10.0),
        format!("max eigenvalue error {worst:.2e} (limit 1e-3), {:.1} s", el.as_secs_f64()),
    )
}

fn round_trip() -> Result<Outcome> {
    let t = Instant::now();
    let grid = default_grid();
    let window = TimeGrid::symmetric(16.0, 4096)?;
    let z_link = DesignRules::reference_default().z_link;
    let tx = to_transmit_spectrum(&midlink_reference(&grid, &vec![0.0; grid.len()])?, z_link);
    let q = synthesize_spectrum(&tx, window)?;
    let found = detect_eigenvalues(&q, &FcParams::with_harmonics(128))?;
    let eig_err = eigenvalue_deviation(&found, &grid);
    let count_ok = found.len() == grid.len();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut phase_err: f64 = 0.0;
    for _ in 0..8 {
        let pair: Vec<Eigenvalue> = grid.choose_multiple(&mut rng, 2).copied().collect();
        let phases: Vec<f64> = (0..2).map(|_| rng.gen_range(-PI..PI)).collect();
        let q = synthesize(&pair, &DarbouxConstants::unit_with_phases(&phases), window)?;
        let amps = pair
            .iter()
            .map(|l| spectral_amplitude(&q, *l).map(|a| a.value()))
            .collect::<Result<Vec<_>>>()?;
        let seeds = constants_from_spectrum(&DiscreteSpectrum::from_parts(&pair, &amps)?)?;
        let spec_order = DiscreteSpectrum::from_parts(&pair, &amps)?.eigenvalues();
        for (l, r) in spec_order.iter().zip(seeds.ratios()) {
            let k = pair.iter().position(|p| p == l).expect("same eigenvalues");
            phase_err = phase_err.max(wrap_phase(r.arg() - phases[k]).abs());
        }
    }
    let el = t.elapsed();
    outcome(
        count_ok && eig_err < 1e-2 && phase_err < 1e-3 && within(el, 60.0),
        format!(
            "{} of 10 eigenvalues, max error {eig_err:.2e} (limit 1e-2); two-soliton phase error {phase_err:.2e} (limit 1e-3); {:.1} s",
            found.len(),
            el.as_secs_f64()
        ),
    )
}

fn pulse_width() -> Result<Outcome> {
    let t = Instant::now();
    let grid = default_grid();
    let rules = DesignRules::reference_default();
    let window = TimeGrid::symmetric(32.0, 8192)?;
    let zeros = vec![0.0; grid.len()];
    let mid = duration_width(&synthesize(&grid, &DarbouxConstants::unit(grid.len()), window)?, 0.01)?;
    let launch = duration_width(&surrogate_pulse(&grid, &zeros, rules.z_link, 0.0, window)?, 0.01)?;
    let el = t.elapsed();
    let err = (mid - 12.0).abs() / 12.0;
    outcome(
        err <= 0.05 && within(el, 10.0),
        format!(
            "all-on unit-seed duration {mid:.3} at mid-link ({:.1}% from 12, limit 5%); {launch:.3} at launch; {:.1} s",
            100.0 * err,
            el.as_secs_f64()
        ),
    )
}

fn energy_identity() -> Result<Outcome> {
    let t = Instant::now();
    let cfg = ExperimentConfig::from_json(
        r#"{"rules": {"z_samples": 3, "synthesis_samples": 512, "coordinate_starts": 1,
            "coordinate_passes": 1, "pattern_count": 256}}"#,
    )?;
    let book = build_codebook(&cfg.eigenvalue_grid()?, &cfg.patterns()?, &cfg.design_rules()?, cfg.rules.strategy, 1)?;
    let window = TimeGrid::symmetric(16.0, 2048)?;
    let mut worst: f64 = 0.0;
    let mut all_on = None;
    for e in &book.entries {
        let expected = 4.0 * e.spectrum.eigenvalues().iter().map(Eigenvalue::sigma).sum::<f64>();
        let energy = synthesize_spectrum(&e.spectrum, window)?.energy();
        if e.pattern.ones() == 10 {
            all_on = Some(energy);
        }
        if expected > 0.0 {
            worst = worst.max((energy - expected).abs() / expected);
        }
    }
    let el = t.elapsed();
    let all_on = all_on.map(|e| format!(", all-on {e:.4}")).unwrap_or_default();
    outcome(
        book.entries.len() == 256 && worst < 5e-3 && within(el, 30.0),
        format!(
            "{} entries, max relative energy error {worst:.2e} (limit 5e-3){all_on}; {:.1} s",
            book.entries.len(),
            el.as_secs_f64()
        ),
    )
}

fn ideal_channel() -> Result<Outcome> {
    let t = Instant::now();
    let grid = default_grid();
    let rules = DesignRules::reference_default();
    let link = LinkProfile::reference_loop();
    let map = link.normalization;
    let tx = to_transmit_spectrum(&midlink_reference(&grid, &vec![0.0; grid.len()])?, rules.z_link);
    let launch = synthesize_spectrum(&tx, TimeGrid::symmetric(32.0, 4096)?)?;
    let fiber = FiberSpan::nz_dsf().lossless();
    let out = propagate_distance(&launch, &fiber, &map, 2000.0, 0.1, true)?;
    let z = map.z_to_normalized(2000.0e3);

    let params = FcParams::with_harmonics(128);
    let before = discrete_spectrum(&centered(&launch, 1024)?, &params)?;
    let after = discrete_spectrum(&centered(&out, 1024)?, &params)?;
    let eig_err = eigenvalue_deviation(&before.eigenvalues(), &grid).max(eigenvalue_deviation(&after.eigenvalues(), &grid));
    let count_ok = before.len() == grid.len() && after.len() == grid.len();

    let mut phase_err: f64 = 0.0;
    for l in &grid {
        let a0 = spectral_amplitude(&launch, *l)?.value();
        let a1 = spectral_amplitude(&out, *l)?.value();
        let predicted = EVOLUTION_CONSTANT * (l.value() * l.value()).re * z;
        phase_err = phase_err.max(wrap_phase((a1 / a0).arg() - predicted).abs());
    }
    let el = t.elapsed();
    outcome(
        count_ok && eig_err < 5e-2 && phase_err < 2e-2 && within(el, 300.0),
        format!(
            "z = {z:.4}: max eigenvalue error {eig_err:.2e} (limit 5e-2), phase error {phase_err:.2e} rad (limit 2e-2); {:.1} s",
            el.as_secs_f64()
        ),
    )
}

fn bandwidth_fluctuation() -> Result<Outcome> {
    let t = Instant::now();
    let subset: Vec<Eigenvalue> = default_grid().into_iter().filter(|l| l.omega() != 0.0).collect();
    let mut rules = DesignRules::reference_default().with_uniform_sampling(33);
    rules.grid = TimeGrid::symmetric(16.0, 1024)?;
    let best = phase_search_with_goal(&subset, &rules, SearchStrategy::Coordinate, SearchGoal::MinimizeBandwidth)?;
    let worst = phase_search_with_goal(&subset, &rules, SearchStrategy::Coordinate, SearchGoal::MaximizeBandwidth)?;

    let mut link = LinkProfile::reference_loop();
    link.amplifier = link.amplifier.noiseless();
    let scale = link.launch_scale();
    let window = TimeGrid::symmetric(48.0, 6144)?;
    let mut devs = Vec::new();
    for r in [&best, &worst] {
        let tx = to_transmit_spectrum(&midlink_reference(&subset, &r.phases)?, rules.z_link);
        let q = synthesize_spectrum(&tx, window)?.scaled(scale.into());
        let (_, rec) = run_link(&q, &link, &mut noise_rng(0, 0), true)?;
        let mut dev: f64 = 0.0;
        for s in &rec.snapshots {
            let w = centered(&s.scaled((1.0 / scale).into()), 2048)?;
            dev = dev.max(eigenvalue_deviation(&detect_eigenvalues(&w, &FcParams::with_harmonics(128))?, &subset));
        }
        devs.push(dev);
    }
    let ratio = devs[1] / devs[0];
    let el = t.elapsed();
    outcome(
        devs[0] < devs[1] && ratio >= 2.0 && within(el, 900.0),
        format!(
            "max bandwidth {:.3} vs {:.3}; in-link deviation {:.4} vs {:.4}, ratio {ratio:.2} (limit 2); {:.0} s",
            best.max_bw,
            worst.max_bw,
            devs[0],
            devs[1],
            el.as_secs_f64()
        ),
    )
}

fn midlink_contraction() -> Result<Outcome> {
    let t = Instant::now();
    let grid = default_grid();
    let rules = DesignRules::reference_default();
    let window = TimeGrid::symmetric(24.0, 4096)?;
    let zs: Vec<f64> = (0..=32).map(|i| rules.z_link * i as f64 / 32.0).collect();

    // designed phases from a reduced search, as the codebook would use
    let mut search = rules.clone().with_uniform_sampling(17);
    search.grid = TimeGrid::symmetric(16.0, 1024)?;
    search.coordinate_starts = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = vec![(grid.clone(), vec![0.0; grid.len()])];
    for _ in 0..8 {
        let k = rng.gen_range(2..=grid.len());
        let mut subset: Vec<Eigenvalue> = grid.choose_multiple(&mut rng, k).copied().collect();
        subset.sort_by(Eigenvalue::canonical_cmp);
        let phases = phase_search(&subset, &search, SearchStrategy::Coordinate)?.phases;
        cases.push((subset, phases));
    }

    let mut failures = 0;
    let mut minimal = 0;
    let mut symmetric = 0;
    let mut worst_sym: f64 = 0.0;
    let mut worst_excess: f64 = 0.0;
    for (subset, phases) in &cases {
        let tx = to_transmit_spectrum(&midlink_reference(subset, phases)?, rules.z_link);
        let widths = zs
            .iter()
            .map(|&z| duration_width(&synthesize_spectrum(&propagate_spectrum(&tx, z), window)?, 0.01))
            .collect::<Result<Vec<_>>>()?;
        let mid = widths[16];
        let min = widths.iter().copied().fold(f64::INFINITY, f64::min);
        let sym = (widths[0] - widths[32]).abs() / widths[0];
        worst_sym = worst_sym.max(sym);
        worst_excess = worst_excess.max(mid - min);
        minimal += (mid <= min + 1e-9) as usize;
        symmetric += (sym <= 0.02) as usize;
        if mid > min + 1e-9 || sym > 0.02 {
            failures += 1;
        }
    }
    let el = t.elapsed();
    let n = cases.len();
    outcome(
        failures == 0 && within(el, 300.0),
        format!(
            "{} of {n} designs pass: {minimal} minimal at z_L/2 (worst excess {worst_excess:.3}), {symmetric} with end widths within 2% (worst {:.2e}); {:.1} s",
            n - failures,
            worst_sym,
            el.as_secs_f64()
        ),
    )
}

fn search_validation() -> Result<Outcome> {
    let t = Instant::now();
    let grid = default_grid();
    let mut rules = DesignRules::reference_default().with_uniform_sampling(17);
    rules.grid = TimeGrid::symmetric(16.0, 1024)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_gap: f64 = 0.0;
    let mut tested = 0;
    for k in 2..=4 {
        for _ in 0..3 {
            let subset: Vec<Eigenvalue> = grid.choose_multiple(&mut rng, k).copied().collect();
            let ex = phase_search(&subset, &rules, SearchStrategy::Exhaustive)?;
            let co = phase_search(&subset, &rules, SearchStrategy::Coordinate)?;
            worst_gap = worst_gap.max(co.max_bw - ex.max_bw);
            tested += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        worst_gap <= 1e-6 && within(el, 600.0),
        format!("{tested} subsets with k = 2, 3, 4: largest objective gap {worst_gap:.2e} (limit 1e-6); {:.0} s", el.as_secs_f64()),
    )
}

fn end_to_end_ber() -> Result<Outcome> {
    let t = Instant::now();
    let cfg = ExperimentConfig::from_json(include_str!("../examples/configs/ber.json"))?;
    let book = build_codebook(&cfg.eigenvalue_grid()?, &cfg.patterns()?, &cfg.design_rules()?, cfg.rules.strategy, cfg.seeds.patterns)?;
    let design_s = t.elapsed().as_secs_f64();

    let mut reports = Vec::new();
    for nf in [5.0, 3.0] {
        let mut c = cfg.clone();
        c.link.nf_db = Some(nf);
        reports.push(run_experiment(&book, &c.experiment_setup()?)?.report);
    }
    let (nf5, nf3) = (&reports[0], &reports[1]);

    // a fresh run of the first frame must reproduce it bit for bit
    let mut c = cfg.clone();
    c.frame.total_symbols = c.frame.symbols_per_frame;
    let prefix = run_experiment(&book, &c.experiment_setup()?)?.report;
    let deterministic = prefix.symbols[..] == nf5.symbols[..prefix.symbols.len()];

    let in_range = (1e-3..=5e-2).contains(&nf5.ber);
    let monotone = nf3.ber <= nf5.ber;
    let el = t.elapsed();
    outcome(
        nf5.total_bits >= 20_000 && in_range && monotone && deterministic && within(el, 3600.0),
        format!(
            "NF 5 dB: BER {:.2e} ({} / {} bits, OSNR {:.1} dB), limit [1e-3, 5e-2]; NF 3 dB: BER {:.2e}; monotone {monotone}; deterministic {deterministic}; design {design_s:.0} s, total {:.0} s",
            nf5.ber,
            nf5.bit_errors,
            nf5.total_bits,
            nf5.osnr_analytic_db.unwrap_or(f64::NAN),
            nf3.ber,
            el.as_secs_f64()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Result<Outcome>);

const CRITERIA: [Criterion; 9] = [
    (1, "Satsuma-Yajima spectra", satsuma_yajima),
    (2, "synthesis / detection round trip", round_trip),
    (3, "all-on pulse width", pulse_width),
    (4, "codebook energy identity", energy_identity),
    (5, "ideal-channel invariance", ideal_channel),
    (6, "bandwidth vs eigenvalue fluctuation", bandwidth_fluctuation),
    (7, "mid-link contraction", midlink_contraction),
    (8, "coordinate vs exhaustive search", search_validation),
    (9, "end-to-end BER", end_to_end_ber),
];

fn main() {
    let selected: Option<Vec<u32>> = std::env::var("NFDM_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let strict = std::env::var("NFDM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let mut passed = 0;
    let mut ran = 0;
    let mut broken = false;
    for (id, name, run) in CRITERIA {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        ran += 1;
        match run() {
            Ok(o) => {
                passed += o.pass as usize;
                println!("criterion {id} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            }
            Err(e) => {
                broken = true;
                println!("criterion {id} FAIL {name}: error: {e}");
            }
        }
    }
    println!("acceptance: {passed} of {ran} criteria passed");
    if broken || (strict && passed < ran) {
        std::process::exit(1);
    }
}
