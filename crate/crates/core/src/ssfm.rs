//! Split-step Fourier simulation of the lossy, lumped-amplified link.
//!
//! Everything runs in normalized units (see [`crate::spectrum`]): with
//! `z = z_phys/Z0` a span obeys `j q_z = ½ q_tt + |q|² q − (j/2)·α Z0·q`.
//! Each step is half dispersion, full nonlinearity with loss, half dispersion.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::PLANCK;
use crate::error::{Error, Result};
use crate::fourier;
use crate::pulse::SampledPulse;
use crate::spectrum::NormalizationMap;

/// One fiber span in datasheet units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberSpan {
    pub length_km: f64,
    pub beta2_ps2_per_km: f64,
    pub gamma_per_w_km: f64,
    pub alpha_db_per_km: f64,
}

impl FiberSpan {
    pub fn new(length_km: f64, beta2_ps2_per_km: f64, gamma_per_w_km: f64, alpha_db_per_km: f64) -> Result<Self> {
        let span = Self { length_km, beta2_ps2_per_km, gamma_per_w_km, alpha_db_per_km };
        span.validate()?;
        Ok(span)
    }

    /// 24.2 km of NZ-DSF at 0.2 dB/km.
    pub fn nz_dsf() -> Self {
        Self {
            length_km: 24.2,
            beta2_ps2_per_km: -5.75,
            gamma_per_w_km: 1.6,
            alpha_db_per_km: 0.2,
        }
    }

    pub fn lossless(mut self) -> Self {
        self.alpha_db_per_km = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0) {
            return Err(Error::config("span.length_km", "must be > 0"));
        }
        if !(self.beta2_ps2_per_km < 0.0) {
            return Err(Error::config("span.beta2_ps2_per_km", "must be < 0 (anomalous)"));
        }
        if !(self.gamma_per_w_km >= 0.0) {
            return Err(Error::config("span.gamma_per_w_km", "must be >= 0"));
        }
        if !(self.alpha_db_per_km >= 0.0) {
            return Err(Error::config("span.alpha_db_per_km", "must be >= 0"));
        }
        Ok(())
    }

    pub fn loss_db(&self) -> f64 {
        self.alpha_db_per_km * self.length_km
    }

    /// Power attenuation coefficient in 1/km.
    pub fn alpha_per_km(&self) -> f64 {
        self.alpha_db_per_km * std::f64::consts::LN_10 / 10.0
    }

    /// Launch-power factor `αL/(1 − e^{−αL})` equating the span-averaged
    /// power with the lossless design power (1 for a lossless span).
    pub fn path_average_factor(&self) -> f64 {
        let al = self.alpha_per_km() * self.length_km;
        if al < 1e-12 {
            1.0
        } else {
            al / (1.0 - (-al).exp())
        }
    }
}

/// Lumped EDFA with ASE and a brick-wall noise filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifierModel {
    pub gain_db: f64,
    /// `f64::NEG_INFINITY` selects the noiseless mode.
    pub nf_db: f64,
    pub center_frequency_hz: f64,
    pub filter_bandwidth_hz: f64,
    pub noise_seed: u64,
    /// Also pass the signal through the brick-wall filter (an in-line
    /// optical band-pass); by default only the ASE is band-limited.
    #[serde(default)]
    pub filter_signal: bool,
}

impl AmplifierModel {
    /// Gain matched to the span loss, NF 5 dB, 50 GHz filter at 193.4 THz.
    pub fn for_span(span: &FiberSpan) -> Self {
        Self {
            gain_db: span.loss_db(),
            nf_db: 5.0,
            center_frequency_hz: 193.4e12,
            filter_bandwidth_hz: 50e9,
            noise_seed: 1,
            filter_signal: false,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.nf_db = f64::NEG_INFINITY;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_db >= 0.0) {
            return Err(Error::config("amplifier.gain_db", "must be >= 0"));
        }
        if !(self.filter_bandwidth_hz > 0.0) {
            return Err(Error::config("amplifier.filter_bandwidth_hz", "must be > 0"));
        }
        if self.nf_db.is_nan() || self.nf_db == f64::INFINITY {
            return Err(Error::config("amplifier.nf_db", "must be finite or -inf"));
        }
        Ok(())
    }

    pub fn gain_linear(&self) -> f64 {
        10f64.powf(self.gain_db / 10.0)
    }

    /// One-sided ASE density `(G − 1)·(NF/2)·hν` in W/Hz.
    pub fn noise_psd(&self) -> f64 {
        let nf = 10f64.powf(self.nf_db / 10.0);
        (self.gain_linear() - 1.0) * 0.5 * nf * PLANCK * self.center_frequency_hz
    }

    /// ASE power inside the filter, W.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_psd() * self.filter_bandwidth_hz
    }
}

/// A recirculating link: `loops` passes over `spans_per_loop` identical spans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub span: FiberSpan,
    pub spans_per_loop: usize,
    pub loops: usize,
    pub amplifier: AmplifierModel,
    pub normalization: NormalizationMap,
    /// Split-step length in km.
    pub dz_km: f64,
}

impl LinkProfile {
    /// 3 × 24.2 km NZ-DSF loop, 28 loops, amplifier matched to span loss.
    pub fn reference_loop() -> Self {
        let span = FiberSpan::nz_dsf();
        Self {
            span,
            spans_per_loop: 3,
            loops: 28,
            amplifier: AmplifierModel::for_span(&span),
            normalization: NormalizationMap::nz_dsf_default(),
            dz_km: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.span.validate()?;
        self.amplifier.validate()?;
        if self.spans_per_loop < 1 {
            return Err(Error::config("link.spans_per_loop", "must be >= 1"));
        }
        if !(self.dz_km > 0.0) || self.dz_km > self.span.length_km {
            return Err(Error::config("link.dz_km", "must be in (0, span length]"));
        }
        Ok(())
    }

    pub fn span_count(&self) -> usize {
        self.spans_per_loop * self.loops
    }

    pub fn total_length_km(&self) -> f64 {
        self.span.length_km * self.span_count() as f64
    }

    /// Field factor `√F` applied at launch for the path-averaged design.
    pub fn launch_scale(&self) -> f64 {
        self.span.path_average_factor().sqrt()
    }

    /// Amplifier with gain set to exactly cancel the span loss.
    pub fn matched_amplifier(&self) -> AmplifierModel {
        AmplifierModel { gain_db: self.span.loss_db(), ..self.amplifier }
    }
}

/// Snapshots at each amplifier output.
#[derive(Clone, Debug, Default)]
pub struct PropagationRecord {
    pub snapshots: Vec<SampledPulse>,
    pub distances_km: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotIndex {
    files: Vec<String>,
    distances_km: Vec<f64>,
}

impl PropagationRecord {
    /// Writes `span_XXXX.bin` (+ sidecars) and `index.json` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::with_capacity(self.snapshots.len());
        for (i, s) in self.snapshots.iter().enumerate() {
            let name = format!("span_{i:04}.bin");
            s.save(dir.join(&name))?;
            files.push(name);
        }
        let idx = SnapshotIndex { files, distances_km: self.distances_km.clone() };
        let path = dir.join("index.json");
        std::fs::write(&path, serde_json::to_string_pretty(&idx)?).map_err(|e| Error::io(path, e))
    }
}

fn dispersion_half_step(freqs: &[f64], h: f64) -> Vec<Complex64> {
    // Q_z = (j/2) Ω² Q, applied over h/2
    freqs
        .iter()
        .map(|w| Complex64::from_polar(1.0, 0.25 * w * w * h))
        .collect()
}

/// Fraction of energy in the outer 1/64 of the window at each edge, used to
/// detect cyclic wrap-around.
pub fn edge_energy_fraction(samples: &[Complex64]) -> f64 {
    let n = samples.len();
    let guard = (n / 64).max(1);
    let total: f64 = samples.iter().map(|s| s.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = samples[..guard]
        .iter()
        .chain(&samples[n - guard..])
        .map(|s| s.norm_sqr())
        .sum();
    edge / total
}

/// Wrap-around tolerance on the edge energy fraction.
pub const WRAP_LIMIT: f64 = 1e-6;

/// Propagates one span by symmetric split-step with step `dz_km`.
pub fn propagate_span(
    pulse: &SampledPulse,
    span: &FiberSpan,
    map: &NormalizationMap,
    dz_km: f64,
) -> Result<SampledPulse> {
    if dz_km > span.length_km {
        return Err(Error::domain(format!(
            "step {dz_km} km exceeds span length {} km",
            span.length_km
        )));
    }
    propagate_distance(pulse, span, map, span.length_km, dz_km, true)
}

/// Propagates `length_km` of fiber with the parameters of `span`.
///
/// `check_wrap` rejects inputs whose energy already sits at the window edges.
pub fn propagate_distance(
    pulse: &SampledPulse,
    span: &FiberSpan,
    map: &NormalizationMap,
    length_km: f64,
    dz_km: f64,
    check_wrap: bool,
) -> Result<SampledPulse> {
    span.validate()?;
    if !(dz_km > 0.0) || !(length_km >= 0.0) {
        return Err(Error::domain(format!("invalid step dz = {dz_km} km")));
    }
    if check_wrap {
        let frac = edge_energy_fraction(pulse.samples());
        if frac > WRAP_LIMIT {
            return Err(Error::Windowing { fraction: frac, limit: WRAP_LIMIT });
        }
    }
    let steps = (length_km / dz_km).ceil().max(1.0) as usize;
    let h = map.z_to_normalized(length_km * 1e3) / steps as f64;
    // dispersion and nonlinearity relative to the normalizing fiber
    let beta_ratio = span.beta2_ps2_per_km * 1e-27 / map.beta2_s2_per_m;
    let gamma_ratio = span.gamma_per_w_km * 1e-3 / map.gamma_per_w_m;
    let alpha = span.alpha_per_km() * 1e-3 * map.z0_m;
    let freqs = fourier::angular_frequencies(pulse.len(), pulse.dt());
    let half = dispersion_half_step(&freqs, h * beta_ratio);
    let (decay, eff_len) = if alpha > 0.0 {
        ((-0.5 * alpha * h).exp(), (1.0 - (-alpha * h).exp()) / alpha)
    } else {
        (1.0, h)
    };

    let mut u: Vec<Complex64> = pulse.samples().to_vec();
    fourier::forward(&mut u);
    for _ in 0..steps {
        for (x, d) in u.iter_mut().zip(&half) {
            *x *= d;
        }
        fourier::inverse(&mut u);
        for x in u.iter_mut() {
            let phase = -gamma_ratio * x.norm_sqr() * eff_len;
            *x *= Complex64::from_polar(decay, phase);
        }
        fourier::forward(&mut u);
        for (x, d) in u.iter_mut().zip(&half) {
            *x *= d;
        }
    }
    fourier::inverse(&mut u);
    SampledPulse::on_grid(u, pulse.grid())
}

/// Generates one ASE realization in normalized units on the pulse grid.
pub fn ase_noise(
    len: usize,
    dt: f64,
    amp: &AmplifierModel,
    map: &NormalizationMap,
    rng: &mut ChaCha20Rng,
) -> Vec<Complex64> {
    let psd = amp.noise_psd();
    if !(psd > 0.0) {
        return vec![Complex64::new(0.0, 0.0); len];
    }
    // white noise of density ρ over the sampling bandwidth 1/(dt·T0)
    let var = psd / (dt * map.t0_s * map.p0_w);
    let sd = (0.5 * var).sqrt();
    let mut noise: Vec<Complex64> = (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * sd, im * sd)
        })
        .collect();
    brick_wall(&mut noise, dt, amp.filter_bandwidth_hz * map.t0_s);
    noise
}

/// Zeroes every frequency outside `±bandwidth/2` (normalized bandwidth).
fn brick_wall(field: &mut [Complex64], dt: f64, bandwidth: f64) {
    let cutoff = std::f64::consts::PI * bandwidth;
    let freqs = fourier::angular_frequencies(field.len(), dt);
    fourier::forward(field);
    for (x, w) in field.iter_mut().zip(&freqs) {
        if w.abs() > cutoff {
            *x = Complex64::new(0.0, 0.0);
        }
    }
    fourier::inverse(field);
}

/// Scales by `√G` and adds filtered ASE.
pub fn amplify(
    pulse: &SampledPulse,
    amp: &AmplifierModel,
    map: &NormalizationMap,
    rng: &mut ChaCha20Rng,
) -> Result<SampledPulse> {
    amp.validate()?;
    let g = amp.gain_linear().sqrt();
    let noise = ase_noise(pulse.len(), pulse.dt(), amp, map, rng);
    let mut out: Vec<Complex64> = pulse
        .samples()
        .iter()
        .zip(&noise)
        .map(|(s, n)| s * g + n)
        .collect();
    if amp.filter_signal {
        brick_wall(&mut out, pulse.dt(), amp.filter_bandwidth_hz * map.t0_s);
    }
    SampledPulse::on_grid(out, pulse.grid())
}

/// Fresh amplifier RNG for a given seed and stream (e.g. frame index).
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs every span of the link followed by its amplifier.
///
/// The launch field is taken as given; callers apply
/// [`LinkProfile::launch_scale`] themselves when emulating path-averaged
/// solitons.
pub fn run_link(
    pulse: &SampledPulse,
    link: &LinkProfile,
    rng: &mut ChaCha20Rng,
    record: bool,
) -> Result<(SampledPulse, PropagationRecord)> {
    link.validate()?;
    let amp = link.matched_amplifier();
    let mut field = pulse.clone();
    let mut rec = PropagationRecord::default();
    for i in 0..link.span_count() {
        field = propagate_distance(&field, &link.span, &link.normalization, link.span.length_km, link.dz_km, i == 0)?;
        field = amplify(&field, &amp, &link.normalization, rng)?;
        if record {
            rec.snapshots.push(field.clone());
            rec.distances_km.push(link.span.length_km * (i + 1) as f64);
        }
    }
    Ok((field, rec))
}

/// Analytic OSNR (dB) after the whole link in a 12.5 GHz reference band.
pub fn analytic_osnr_db(link: &LinkProfile, mean_signal_power_w: f64) -> f64 {
    let amp = link.matched_amplifier();
    let noise = amp.noise_psd() * 12.5e9 * link.span_count() as f64;
    10.0 * (mean_signal_power_w / noise).log10()
}
