//! On-off-keying experiment: framing, link simulation, per-slot detection and
//! BER accounting.
//!
//! A frame is a run of symbol slots of width `symbol_interval` with empty
//! guard slots at both ends. Each slot holds one codebook pulse truncated to
//! the slot. The receiver is ideally synchronized: it windows each slot,
//! detects eigenvalues by Fourier collocation and decides each bit by
//! proximity to the nominal grid.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::darboux::synthesize_spectrum;
use crate::design::{BitPattern, Codebook};
use crate::error::{Error, Result};
use crate::metrics::{bandwidth99, BandwidthProfile};
use crate::nft::{detect_eigenvalues, ook_decide, FcParams};
use crate::pulse::{SampledPulse, TimeGrid};
use crate::spectrum::Eigenvalue;
use crate::ssfm::{analytic_osnr_db, noise_rng, run_link, LinkProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    /// Slot width in normalized time.
    pub symbol_interval: f64,
    pub samples_per_symbol: usize,
    /// Empty slots before and after the data slots.
    pub guard_slots: usize,
    pub pattern_sequence: Vec<BitPattern>,
    pub seed: u64,
}

impl FrameSpec {
    pub fn symbols_per_frame(&self) -> usize {
        self.pattern_sequence.len()
    }

    pub fn dt(&self) -> f64 {
        self.symbol_interval / self.samples_per_symbol as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_interval > 0.0) {
            return Err(Error::config("frame.symbol_interval", "must be > 0"));
        }
        if self.samples_per_symbol < 2 {
            return Err(Error::config("frame.samples_per_symbol", "must be >= 2"));
        }
        if self.pattern_sequence.is_empty() {
            return Err(Error::Frame("a frame needs at least one symbol".into()));
        }
        Ok(())
    }

    /// Sample index where data slot `k` begins.
    pub fn slot_start(&self, k: usize) -> usize {
        (self.guard_slots + k) * self.samples_per_symbol
    }

    pub fn total_samples(&self) -> usize {
        (self.symbols_per_frame() + 2 * self.guard_slots) * self.samples_per_symbol
    }

    /// Grid of one slot, centered on zero.
    pub fn slot_grid(&self) -> TimeGrid {
        TimeGrid {
            t_start: -0.5 * self.symbol_interval,
            dt: self.dt(),
            count: self.samples_per_symbol,
        }
    }
}

/// Concatenates the slot syntheses of `spec.pattern_sequence`.
pub fn build_frame(codebook: &Codebook, spec: &FrameSpec) -> Result<SampledPulse> {
    spec.validate()?;
    let slot = spec.slot_grid();
    let mut samples = vec![Complex64::new(0.0, 0.0); spec.total_samples()];
    for (k, pattern) in spec.pattern_sequence.iter().enumerate() {
        let entry = codebook
            .find(pattern)
            .ok_or_else(|| Error::Frame(format!("pattern {pattern} is not in the codebook")))?;
        if entry.duration > spec.symbol_interval {
            return Err(Error::Frame(format!(
                "symbol interval {} is shorter than the designed duration {:.3} of pattern {pattern}",
                spec.symbol_interval, entry.duration
            )));
        }
        if entry.spectrum.is_empty() {
            continue;
        }
        let pulse = synthesize_spectrum(&entry.spectrum, slot)?;
        let start = spec.slot_start(k);
        samples[start..start + spec.samples_per_symbol].copy_from_slice(pulse.samples());
    }
    let t_start = -(spec.guard_slots as f64 + 0.5) * spec.symbol_interval;
    SampledPulse::new(samples, t_start, spec.dt())
}

/// Outcome for one received symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub index: usize,
    pub reference: BitPattern,
    pub decided: BitPattern,
    pub detected: Vec<Eigenvalue>,
    /// Detections that matched no nominal eigenvalue (diagnostic only).
    pub unmatched: usize,
    /// Detector failure; every bit of the symbol then counts as an error.
    pub failure: Option<String>,
}

impl SymbolRecord {
    pub fn bit_errors(&self) -> usize {
        self.reference.0.iter().zip(&self.decided.0).filter(|(a, b)| a != b).count()
    }
}

/// Receiver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReceiverParams {
    pub fc: FcParams,
    pub radius: f64,
}

impl Default for ReceiverParams {
    fn default() -> Self {
        // slots are cut by design, so the edge-magnitude guard does not apply
        Self {
            fc: FcParams { edge_limit: f64::INFINITY, ..FcParams::default() },
            radius: crate::constants::DEFAULT_DECISION_RADIUS,
        }
    }
}

/// Detects and decides every data slot of a received frame.
///
/// `first_index` offsets the symbol indices in the returned records.
pub fn receive_frame(
    frame: &SampledPulse,
    spec: &FrameSpec,
    nominal: &[Eigenvalue],
    params: &ReceiverParams,
    first_index: usize,
) -> Result<Vec<SymbolRecord>> {
    spec.validate()?;
    if frame.len() != spec.total_samples() {
        return Err(Error::Frame(format!(
            "frame has {} samples, layout expects {}",
            frame.len(),
            spec.total_samples()
        )));
    }
    spec.pattern_sequence
        .par_iter()
        .enumerate()
        .map(|(k, reference)| {
            let window = frame.slice(spec.slot_start(k), spec.samples_per_symbol)?;
            let record = match detect_eigenvalues(&window, &params.fc) {
                Ok(detected) => {
                    let d = ook_decide(&detected, nominal, params.radius);
                    SymbolRecord {
                        index: first_index + k,
                        reference: reference.clone(),
                        decided: BitPattern(d.bits),
                        detected,
                        unmatched: d.unmatched,
                        failure: None,
                    }
                }
                Err(e) => SymbolRecord {
                    index: first_index + k,
                    reference: reference.clone(),
                    decided: BitPattern(reference.0.iter().map(|b| !b).collect()),
                    detected: Vec::new(),
                    unmatched: 0,
                    failure: Some(e.to_string()),
                },
            };
            Ok(record)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub total_length_km: f64,
    pub spans: usize,
    /// `None` for noiseless amplifiers.
    pub nf_db: Option<f64>,
    pub gain_db: f64,
    pub filter_bandwidth_hz: f64,
    pub launch_scale: f64,
    pub noise: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub link: LinkSummary,
    pub symbols: Vec<SymbolRecord>,
    pub total_bits: usize,
    pub bit_errors: usize,
    pub ber: f64,
    /// Errors per nominal eigenvalue (grid order).
    pub per_eigenvalue_errors: Vec<usize>,
    pub detector_failures: usize,
    pub spurious_detections: usize,
    /// OSNR in a 12.5 GHz band from the noise model, when noise is on.
    pub osnr_analytic_db: Option<f64>,
    /// OSNR estimated from the received guard slots, when noise is on.
    pub osnr_empirical_db: Option<f64>,
}

impl RunReport {
    /// Aggregates symbol records; counts are order independent.
    pub fn from_records(
        link: LinkSummary,
        mut symbols: Vec<SymbolRecord>,
        grid_size: usize,
        osnr_analytic_db: Option<f64>,
        osnr_empirical_db: Option<f64>,
    ) -> Self {
        symbols.sort_by_key(|s| s.index);
        let mut per = vec![0usize; grid_size];
        for s in &symbols {
            for (i, (a, b)) in s.reference.0.iter().zip(&s.decided.0).enumerate() {
                if a != b {
                    per[i] += 1;
                }
            }
        }
        let bit_errors: usize = per.iter().sum();
        let total_bits = grid_size * symbols.len();
        Self {
            link,
            detector_failures: symbols.iter().filter(|s| s.failure.is_some()).count(),
            spurious_detections: symbols.iter().map(|s| s.unmatched).sum(),
            ber: if total_bits == 0 { 0.0 } else { bit_errors as f64 / total_bits as f64 },
            symbols,
            total_bits,
            bit_errors,
            per_eigenvalue_errors: per,
            osnr_analytic_db,
            osnr_empirical_db,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    /// `symbol_index,re_lambda,im_lambda` for every detection.
    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("symbol_index,re_lambda,im_lambda\n");
        for s in &self.symbols {
            for l in &s.detected {
                let _ = writeln!(out, "{},{},{}", s.index, l.omega(), l.sigma());
            }
        }
        out
    }

    pub fn write_scatter_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.scatter_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Settings of a full experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSetup {
    pub link: LinkProfile,
    pub noise: bool,
    /// Extra launch amplitude factor on top of the path-average scaling.
    pub launch_gain: f64,
    pub symbol_interval: f64,
    pub samples_per_symbol: usize,
    pub symbols_per_frame: usize,
    pub guard_slots: usize,
    /// Total symbols sent (rounded up to whole frames).
    pub total_symbols: usize,
    pub receiver: ReceiverParams,
    pub sequence_seed: u64,
    pub noise_seed: u64,
    /// Record per-span bandwidth of the first data slot of frame 0.
    pub snapshots: bool,
}

impl ExperimentSetup {
    pub fn frames(&self) -> usize {
        self.total_symbols.div_ceil(self.symbols_per_frame)
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if self.symbols_per_frame == 0 {
            return Err(Error::config("frame.symbols_per_frame", "must be >= 1"));
        }
        if self.total_symbols == 0 {
            return Err(Error::config("frame.total_symbols", "must be >= 1"));
        }
        if !(self.launch_gain > 0.0) {
            return Err(Error::config("link.launch_gain", "must be > 0"));
        }
        Ok(())
    }

    fn link_summary(&self) -> LinkSummary {
        let amp = self.link.matched_amplifier();
        LinkSummary {
            total_length_km: self.link.total_length_km(),
            spans: self.link.span_count(),
            nf_db: self.noise.then_some(amp.nf_db),
            gain_db: amp.gain_db,
            filter_bandwidth_hz: amp.filter_bandwidth_hz,
            launch_scale: self.launch_scale(),
            noise: self.noise,
        }
    }

    /// Total field factor applied at launch.
    pub fn launch_scale(&self) -> f64 {
        self.link.launch_scale() * self.launch_gain
    }
}

/// Symbol sequence drawn from the codebook: whole shuffled passes over all
/// entries, truncated to `count`.
pub fn symbol_sequence(codebook: &Codebook, count: usize, seed: u64) -> Vec<BitPattern> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut pass: Vec<BitPattern> = codebook.entries.iter().map(|e| e.pattern.clone()).collect();
        pass.shuffle(&mut rng);
        out.extend(pass);
    }
    out.truncate(count);
    out
}

/// Frame layouts of an experiment, in transmission order.
pub fn frame_specs(codebook: &Codebook, setup: &ExperimentSetup) -> Vec<FrameSpec> {
    let total = setup.frames() * setup.symbols_per_frame;
    let seq = symbol_sequence(codebook, total, setup.sequence_seed);
    seq.chunks(setup.symbols_per_frame)
        .enumerate()
        .map(|(i, chunk)| FrameSpec {
            symbol_interval: setup.symbol_interval,
            samples_per_symbol: setup.samples_per_symbol,
            guard_slots: setup.guard_slots,
            pattern_sequence: chunk.to_vec(),
            seed: setup.noise_seed.wrapping_add(i as u64),
        })
        .collect()
}

/// Output of one simulated frame.
#[derive(Clone, Debug)]
pub struct TransmittedFrame {
    pub spec: FrameSpec,
    /// Received field, scaled back by the launch factor.
    pub received: SampledPulse,
    /// Noise power (normalized, at amplifier output level) in the guard slots.
    pub guard_noise_power: Option<f64>,
    /// Mean signal power of the launch field over data slots (normalized).
    pub launch_power: f64,
    pub bandwidth: Option<BandwidthProfile>,
}

/// Launches one frame through the link.
pub fn transmit_frame(codebook: &Codebook, spec: &FrameSpec, setup: &ExperimentSetup, index: usize) -> Result<TransmittedFrame> {
    let frame = build_frame(codebook, spec)?;
    let scale = setup.launch_scale();
    let launch = frame.scaled(Complex64::new(scale, 0.0));
    let mut link = setup.link;
    if !setup.noise {
        link.amplifier = link.amplifier.noiseless();
    }
    let record = setup.snapshots && index == 0;
    let mut rng = noise_rng(setup.noise_seed, index as u64);
    let (out, rec) = run_link(&launch, &link, &mut rng, record)?;

    let data = spec.symbols_per_frame() * spec.samples_per_symbol;
    let data_start = spec.slot_start(0);
    let launch_power = launch.samples()[data_start..data_start + data].iter().map(|s| s.norm_sqr()).sum::<f64>() / data as f64;
    let guard_noise_power = (setup.noise && spec.guard_slots > 0).then(|| {
        let g = spec.guard_slots * spec.samples_per_symbol;
        let s = out.samples();
        let sum: f64 = s[..g].iter().chain(&s[s.len() - g..]).map(|x| x.norm_sqr()).sum();
        sum / (2 * g) as f64
    });
    let bandwidth = if record {
        let mut distances = vec![0.0];
        let mut bw = vec![slot_bandwidth(&launch, spec)?];
        for (snap, d) in rec.snapshots.iter().zip(&rec.distances_km) {
            distances.push(*d);
            bw.push(slot_bandwidth(snap, spec)?);
        }
        Some(BandwidthProfile { distances, bw })
    } else {
        None
    };
    Ok(TransmittedFrame {
        spec: spec.clone(),
        received: out.scaled(Complex64::new(1.0 / scale, 0.0)),
        guard_noise_power,
        launch_power,
        bandwidth,
    })
}

fn slot_bandwidth(field: &SampledPulse, spec: &FrameSpec) -> Result<f64> {
    let w = field.slice(spec.slot_start(0), spec.samples_per_symbol)?;
    if w.is_zero() {
        return Ok(0.0);
    }
    bandwidth99(&w)
}

#[derive(Serialize, Deserialize)]
struct FrameManifestEntry {
    file: String,
    spec: FrameSpec,
    guard_noise_power: Option<f64>,
    launch_power: f64,
}

/// Writes `frame_XXXX.bin` (+ sidecars) and `frames.json` into `dir`.
pub fn save_frames(dir: impl AsRef<Path>, frames: &[TransmittedFrame]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let file = format!("frame_{i:04}.bin");
        f.received.save(dir.join(&file))?;
        manifest.push(FrameManifestEntry {
            file,
            spec: f.spec.clone(),
            guard_noise_power: f.guard_noise_power,
            launch_power: f.launch_power,
        });
    }
    let path = dir.join("frames.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(path, e))
}

/// Reads frames written by [`save_frames`].
pub fn load_frames(dir: impl AsRef<Path>) -> Result<Vec<TransmittedFrame>> {
    let dir = dir.as_ref();
    let path = dir.join("frames.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Vec<FrameManifestEntry> = serde_json::from_str(&text)?;
    manifest
        .into_iter()
        .map(|m| {
            Ok(TransmittedFrame {
                received: SampledPulse::load(dir.join(&m.file))?,
                spec: m.spec,
                guard_noise_power: m.guard_noise_power,
                launch_power: m.launch_power,
                bandwidth: None,
            })
        })
        .collect()
}

/// Transmitter half of [`run_experiment`].
pub fn transmit_all(codebook: &Codebook, setup: &ExperimentSetup) -> Result<Vec<TransmittedFrame>> {
    setup.validate()?;
    frame_specs(codebook, setup)
        .par_iter()
        .enumerate()
        .map(|(i, spec)| transmit_frame(codebook, spec, setup, i))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub report: RunReport,
    /// Per-span bandwidth of the first slot, when snapshots were requested.
    pub bandwidth: Option<BandwidthProfile>,
}

/// Simulates all frames (in parallel) and aggregates the report.
pub fn run_experiment(codebook: &Codebook, setup: &ExperimentSetup) -> Result<ExperimentOutput> {
    let frames = transmit_all(codebook, setup)?;
    detect_frames(codebook, setup, &frames)
}

/// Receiver half of [`run_experiment`], also used on stored frames.
pub fn detect_frames(codebook: &Codebook, setup: &ExperimentSetup, frames: &[TransmittedFrame]) -> Result<ExperimentOutput> {
    if frames.is_empty() {
        return Err(Error::Frame("no frames to detect".into()));
    }
    let nominal = codebook.grid();
    let mut records = Vec::new();
    let mut offset = 0;
    for f in frames {
        records.extend(receive_frame(&f.received, &f.spec, nominal, &setup.receiver, offset)?);
        offset += f.spec.symbols_per_frame();
    }
    let map = setup.link.normalization;
    let launch_power = frames.iter().map(|f| f.launch_power).sum::<f64>() / frames.len().max(1) as f64;
    let signal_w = launch_power * map.p0_w;
    let osnr_analytic = setup.noise.then(|| analytic_osnr_db(&setup.link, signal_w));
    let noise: Vec<f64> = frames.iter().filter_map(|f| f.guard_noise_power).collect();
    let osnr_empirical = (!noise.is_empty()).then(|| {
        let p_noise = noise.iter().sum::<f64>() / noise.len() as f64 * map.p0_w;
        let in_ref_band = p_noise / setup.link.amplifier.filter_bandwidth_hz * 12.5e9;
        10.0 * (signal_w / in_ref_band).log10()
    });
    let report = RunReport::from_records(setup.link_summary(), records, nominal.len(), osnr_analytic, osnr_empirical);
    Ok(ExperimentOutput {
        report,
        bandwidth: frames.first().and_then(|f| f.bandwidth.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_codebook, BitPattern, DesignRules, SearchStrategy};
    use crate::spectrum::default_grid;

    fn small_codebook(patterns: &[&str]) -> Codebook {
        let mut rules = DesignRules::reference_default().with_uniform_sampling(3);
        rules.grid = TimeGrid::symmetric(16.0, 1024).unwrap();
        rules.coordinate_starts = 1;
        rules.coordinate_passes = 1;
        let pats: Vec<BitPattern> = patterns.iter().map(|p| p.parse().unwrap()).collect();
        build_codebook(&default_grid(), &pats, &rules, SearchStrategy::Coordinate, 0).unwrap()
    }

    fn spec(seq: &[&str]) -> FrameSpec {
        FrameSpec {
            symbol_interval: 12.0,
            samples_per_symbol: 384,
            guard_slots: 1,
            pattern_sequence: seq.iter().map(|p| p.parse().unwrap()).collect(),
            seed: 0,
        }
    }

    #[test]
    fn empty_symbol_gives_zero_frame() {
        let book = small_codebook(&["0000000000"]);
        let f = build_frame(&book, &spec(&["0000000000"])).unwrap();
        assert!(f.is_zero());
        assert_eq!(f.len(), 3 * 384);
    }

    #[test]
    fn single_symbol_equals_centered_synthesis() {
        let book = small_codebook(&["1111111111"]);
        let s = spec(&["1111111111"]);
        let f = build_frame(&book, &s).unwrap();
        let direct = synthesize_spectrum(&book.entries[0].spectrum, s.slot_grid()).unwrap();
        assert_eq!(&f.samples()[384..768], direct.samples());
        // slot center sits at t = 0
        assert!((f.grid().time(384 + 192)).abs() < 1e-12);
    }

    #[test]
    fn missing_pattern_and_short_interval_are_frame_errors() {
        let book = small_codebook(&["1111111111"]);
        assert!(matches!(build_frame(&book, &spec(&["1000000000"])), Err(Error::Frame(_))));
        let mut s = spec(&["1111111111"]);
        s.symbol_interval = 8.0;
        assert!(matches!(build_frame(&book, &s), Err(Error::Frame(_))));
    }

    #[test]
    fn back_to_back_has_no_errors() {
        let pats = ["1111111111", "1010101010", "0000000000", "0100110001"];
        let book = small_codebook(&pats);
        let s = spec(&pats);
        let f = build_frame(&book, &s).unwrap();
        let recs = receive_frame(&f, &s, book.grid(), &ReceiverParams::default(), 0).unwrap();
        for r in &recs {
            assert_eq!(r.bit_errors(), 0, "{r:?}");
        }
    }

    #[test]
    fn perturbed_eigenvalue_beyond_radius_is_one_error() {
        let nominal = default_grid();
        let mut det = nominal.clone();
        det[4] = Eigenvalue::new(det[4].omega(), det[4].sigma() + 0.7).unwrap();
        let d = ook_decide(&det, &nominal, 0.5);
        let reference = BitPattern(vec![true; 10]);
        let rec = SymbolRecord {
            index: 0,
            reference: reference.clone(),
            decided: BitPattern(d.bits),
            detected: det,
            unmatched: d.unmatched,
            failure: None,
        };
        assert_eq!(rec.bit_errors(), 1);
    }

    #[test]
    fn report_accounting() {
        let link = LinkSummary {
            total_length_km: 0.0,
            spans: 0,
            nf_db: Some(5.0),
            gain_db: 0.0,
            filter_bandwidth_hz: 5e10,
            launch_scale: 1.0,
            noise: false,
        };
        let mk = |i: usize, r: &str, d: &str| SymbolRecord {
            index: i,
            reference: r.parse().unwrap(),
            decided: d.parse().unwrap(),
            detected: vec![],
            unmatched: 0,
            failure: None,
        };
        let recs = vec![mk(1, "1100", "1000"), mk(0, "0011", "1011")];
        let rep = RunReport::from_records(link, recs, 4, Some(30.0), None);
        assert_eq!(rep.total_bits, 8);
        assert_eq!(rep.bit_errors, 2);
        assert_eq!(rep.per_eigenvalue_errors, vec![1, 1, 0, 0]);
        assert_eq!(rep.ber, 0.25);
        assert_eq!(rep.symbols[0].index, 0);
        assert!(rep.scatter_csv().starts_with("symbol_index,re_lambda,im_lambda\n"));
    }

    #[test]
    fn sequence_is_balanced_per_pass() {
        let book = small_codebook(&["1000000000", "0100000000", "0010000000"]);
        let seq = symbol_sequence(&book, 6, 3);
        assert_eq!(seq.len(), 6);
        for p in &book.entries {
            assert_eq!(seq.iter().filter(|s| **s == p.pattern).count(), 2);
        }
        assert_eq!(seq, symbol_sequence(&book, 6, 3));
    }
}
