//! Experiment configuration file.
//!
//! One JSON object with the sections `grid`, `rules`, `link`, `frame` and
//! `seeds`. Every field has a default, physical quantities carry their unit
//! in the name, and unknown fields are rejected. Errors name the offending
//! field path.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::{balanced_patterns, all_patterns, BitPattern, DesignRules, SearchStrategy};
use crate::error::{Error, Result};
use crate::nft::FcParams;
use crate::pipeline::{ExperimentSetup, ReceiverParams};
use crate::pulse::TimeGrid;
use crate::spectrum::{make_grid, Eigenvalue, NormalizationMap};
use crate::ssfm::{AmplifierModel, FiberSpan, LinkProfile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub omegas: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { omegas: vec![-2.0, -1.0, 0.0, 1.0, 2.0], sigmas: vec![1.0, 2.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternSet {
    /// Distinct patterns with every bit on in half of them.
    Balanced,
    /// All `2^n` patterns.
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesSection {
    /// Design length `z_L`.
    pub link_length_km: f64,
    pub phase_step_rad: f64,
    pub epsilon_duration: f64,
    pub energy_fraction: f64,
    /// Uniform bandwidth samples over the link; `null` samples every span
    /// boundary and midpoint.
    pub z_samples: Option<usize>,
    pub synthesis_half_width: f64,
    pub synthesis_samples: usize,
    pub coordinate_passes: usize,
    pub coordinate_starts: usize,
    pub strategy: SearchStrategy,
    pub patterns: PatternSet,
    pub pattern_count: usize,
}

impl Default for RulesSection {
    fn default() -> Self {
        Self {
            link_length_km: 2000.0,
            phase_step_rad: PI / 4.0,
            epsilon_duration: crate::constants::DEFAULT_DURATION_EPSILON,
            energy_fraction: crate::constants::BANDWIDTH_ENERGY_FRACTION,
            z_samples: None,
            synthesis_half_width: 16.0,
            synthesis_samples: 2048,
            coordinate_passes: 3,
            coordinate_starts: 16,
            strategy: SearchStrategy::Coordinate,
            patterns: PatternSet::Balanced,
            pattern_count: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub span_length_km: f64,
    pub beta2_ps2_per_km: f64,
    pub gamma_per_w_km: f64,
    pub alpha_db_per_km: f64,
    pub spans_per_loop: usize,
    pub loops: usize,
    /// `null` selects noiseless amplifiers.
    pub nf_db: Option<f64>,
    pub center_frequency_hz: f64,
    pub filter_bandwidth_hz: f64,
    pub filter_signal: bool,
    pub dz_km: f64,
    /// Physical duration of one symbol slot; sets the time unit.
    pub symbol_duration_s: f64,
    /// Extra launch amplitude factor on top of the path-average scaling.
    pub launch_gain: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            span_length_km: 24.2,
            beta2_ps2_per_km: -5.75,
            gamma_per_w_km: 1.6,
            alpha_db_per_km: 0.2,
            spans_per_loop: 3,
            loops: 28,
            nf_db: Some(5.0),
            center_frequency_hz: 193.4e12,
            filter_bandwidth_hz: 50e9,
            filter_signal: false,
            dz_km: 0.1,
            symbol_duration_s: 2e-9,
            launch_gain: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSection {
    pub symbol_interval: f64,
    pub samples_per_symbol: usize,
    pub symbols_per_frame: usize,
    pub guard_slots: usize,
    pub total_symbols: usize,
    pub harmonics: usize,
    pub im_threshold: f64,
    pub decision_radius: f64,
    pub snapshots: bool,
    /// Codebook to load instead of designing one (relative to the config).
    pub codebook_path: Option<PathBuf>,
}

impl Default for FrameSection {
    fn default() -> Self {
        Self {
            symbol_interval: 12.0,
            samples_per_symbol: 384,
            symbols_per_frame: 64,
            guard_slots: 1,
            total_symbols: 2000,
            harmonics: crate::constants::DEFAULT_HARMONICS,
            im_threshold: crate::constants::DEFAULT_IM_THRESHOLD,
            decision_radius: crate::constants::DEFAULT_DECISION_RADIUS,
            snapshots: false,
            codebook_path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    pub patterns: u64,
    pub sequence: u64,
    pub noise: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self { patterns: 1, sequence: 1, noise: 2 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub rules: RulesSection,
    pub link: LinkSection,
    pub frame: FrameSection,
    pub seeds: SeedSection,
    /// Directory of the file this was loaded from, for relative paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be a positive number, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.omegas.is_empty() {
            return Err(Error::config("grid.omegas", "must not be empty"));
        }
        for (i, s) in self.grid.sigmas.iter().enumerate() {
            if !(*s > 0.0) {
                return Err(Error::config(format!("grid.sigmas[{i}]"), "must be > 0"));
            }
        }
        if self.grid.sigmas.is_empty() {
            return Err(Error::config("grid.sigmas", "must not be empty"));
        }
        let r = &self.rules;
        positive("rules.link_length_km", r.link_length_km)?;
        positive("rules.phase_step_rad", r.phase_step_rad)?;
        positive("rules.synthesis_half_width", r.synthesis_half_width)?;
        if r.z_samples == Some(0) || r.z_samples == Some(1) {
            return Err(Error::config("rules.z_samples", "must be >= 2 or null"));
        }
        if r.synthesis_samples < 16 {
            return Err(Error::config("rules.synthesis_samples", "must be >= 16"));
        }
        if r.pattern_count == 0 {
            return Err(Error::config("rules.pattern_count", "must be >= 1"));
        }
        let l = &self.link;
        positive("link.span_length_km", l.span_length_km)?;
        positive("link.gamma_per_w_km", l.gamma_per_w_km)?;
        positive("link.center_frequency_hz", l.center_frequency_hz)?;
        positive("link.filter_bandwidth_hz", l.filter_bandwidth_hz)?;
        positive("link.dz_km", l.dz_km)?;
        positive("link.symbol_duration_s", l.symbol_duration_s)?;
        positive("link.launch_gain", l.launch_gain)?;
        if l.beta2_ps2_per_km == 0.0 || !l.beta2_ps2_per_km.is_finite() {
            return Err(Error::config("link.beta2_ps2_per_km", "must be finite and nonzero"));
        }
        if !(l.alpha_db_per_km >= 0.0) {
            return Err(Error::config("link.alpha_db_per_km", "must be >= 0"));
        }
        if l.dz_km > l.span_length_km {
            return Err(Error::config("link.dz_km", "must not exceed the span length"));
        }
        if let Some(nf) = l.nf_db {
            if !nf.is_finite() {
                return Err(Error::config("link.nf_db", "must be finite or null"));
            }
        }
        if l.spans_per_loop == 0 {
            return Err(Error::config("link.spans_per_loop", "must be >= 1"));
        }
        let f = &self.frame;
        positive("frame.symbol_interval", f.symbol_interval)?;
        if f.symbols_per_frame == 0 {
            return Err(Error::config("frame.symbols_per_frame", "must be >= 1"));
        }
        if f.total_symbols == 0 {
            return Err(Error::config("frame.total_symbols", "must be >= 1"));
        }
        if f.harmonics < 16 || 4 * f.harmonics + 1 > f.samples_per_symbol {
            return Err(Error::config(
                "frame.harmonics",
                format!("need 16 <= M and 4M+1 <= samples_per_symbol ({})", f.samples_per_symbol),
            ));
        }
        positive("frame.decision_radius", f.decision_radius)?;
        if !(f.im_threshold >= 0.0) {
            return Err(Error::config("frame.im_threshold", "must be >= 0"));
        }
        Ok(())
    }

    pub fn eigenvalue_grid(&self) -> Result<Vec<Eigenvalue>> {
        make_grid(&self.grid.omegas, &self.grid.sigmas)
    }

    /// Time unit `T0 = symbol_duration / symbol_interval`.
    pub fn normalization(&self) -> Result<NormalizationMap> {
        let t0 = self.link.symbol_duration_s / self.frame.symbol_interval;
        NormalizationMap::from_fiber_units(t0, self.link.beta2_ps2_per_km, self.link.gamma_per_w_km)
    }

    pub fn link_profile(&self) -> Result<LinkProfile> {
        let l = &self.link;
        let span = FiberSpan::new(l.span_length_km, l.beta2_ps2_per_km, l.gamma_per_w_km, l.alpha_db_per_km)?;
        let amplifier = AmplifierModel {
            gain_db: span.loss_db(),
            nf_db: l.nf_db.unwrap_or(f64::NEG_INFINITY),
            center_frequency_hz: l.center_frequency_hz,
            filter_bandwidth_hz: l.filter_bandwidth_hz,
            noise_seed: self.seeds.noise,
            filter_signal: l.filter_signal,
        };
        let link = LinkProfile {
            span,
            spans_per_loop: l.spans_per_loop,
            loops: l.loops,
            amplifier,
            normalization: self.normalization()?,
            dz_km: l.dz_km,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn design_rules(&self) -> Result<DesignRules> {
        let r = &self.rules;
        let map = self.normalization()?;
        let mut rules = DesignRules::for_link(r.link_length_km, self.link.span_length_km, &map)?;
        if let Some(n) = r.z_samples {
            rules = rules.with_uniform_sampling(n);
        }
        rules.phase_step = r.phase_step_rad;
        rules.epsilon_duration = r.epsilon_duration;
        rules.energy_fraction = r.energy_fraction;
        rules.grid = TimeGrid::symmetric(r.synthesis_half_width, r.synthesis_samples)?;
        rules.coordinate_passes = r.coordinate_passes;
        rules.coordinate_starts = r.coordinate_starts;
        rules.validate()?;
        Ok(rules)
    }

    pub fn patterns(&self) -> Result<Vec<BitPattern>> {
        let bits = self.grid.omegas.len() * self.grid.sigmas.len();
        match self.rules.patterns {
            PatternSet::Balanced => balanced_patterns(bits, self.rules.pattern_count, self.seeds.patterns)
                .map_err(|e| Error::config("rules.pattern_count", e.to_string())),
            PatternSet::All => Ok(all_patterns(bits)),
        }
    }

    pub fn codebook_path(&self) -> Option<PathBuf> {
        self.frame.codebook_path.as_ref().map(|p| match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        })
    }

    pub fn experiment_setup(&self) -> Result<ExperimentSetup> {
        let f = &self.frame;
        Ok(ExperimentSetup {
            link: self.link_profile()?,
            noise: self.link.nf_db.is_some(),
            launch_gain: self.link.launch_gain,
            symbol_interval: f.symbol_interval,
            samples_per_symbol: f.samples_per_symbol,
            symbols_per_frame: f.symbols_per_frame,
            guard_slots: f.guard_slots,
            total_symbols: f.total_symbols,
            receiver: ReceiverParams {
                fc: FcParams {
                    harmonics: f.harmonics,
                    im_threshold: f.im_threshold,
                    ..ReceiverParams::default().fc
                },
                radius: f.decision_radius,
            },
            sequence_seed: self.seeds.sequence,
            noise_seed: self.seeds.noise,
            snapshots: f.snapshots,
        })
    }
}
