//! Spectrum design: unit-constant mid-link reference, back-propagation to the
//! transmitter, quantized phase search, and codebook construction.
//!
//! A pattern selects a subset of the eigenvalue grid. Its mid-link spectrum
//! uses the unit-magnitude Darboux seeds `B_i/A_i = e^{jθ_i}` (the narrowest
//! pulses), and the transmitted spectrum is that spectrum moved back by half
//! the link, so the pulse contracts towards mid-link and regains its launch
//! width at the receiver. The phases `θ_i` are chosen on a `2π/levels` grid to
//! minimize the largest 99% bandwidth seen along the (lossless) link.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::{BANDWIDTH_ENERGY_FRACTION, DEFAULT_DURATION_EPSILON, EVOLUTION_CONSTANT};
use crate::darboux::{reference_amplitudes, synthesize, synthesize_spectrum, DarbouxConstants};
use crate::error::{Error, Result};
use crate::metrics::{bandwidth99, duration_width};
use crate::pulse::{SampledPulse, TimeGrid};
use crate::spectrum::{evolution_factor, propagate_spectrum, DiscreteSpectrum, Eigenvalue, NormalizationMap};

/// Largest subset size the exhaustive search accepts.
pub const MAX_EXHAUSTIVE_K: usize = 6;

const START_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignRules {
    /// Link length `z_L` in normalized units.
    pub z_link: f64,
    /// Phase quantization step in radians; must divide 2π.
    pub phase_step: f64,
    pub epsilon_duration: f64,
    pub energy_fraction: f64,
    /// Distances (normalized, from the transmitter) where bandwidth is evaluated.
    pub z_sampling: Vec<f64>,
    /// Time grid for the surrogate syntheses.
    pub grid: TimeGrid,
    /// Pass budget of the coordinate search.
    pub coordinate_passes: usize,
    /// Independent coordinate descents (the first from all-zero phases, the
    /// rest from seeded random starts); the best result wins.
    pub coordinate_starts: usize,
}

impl DesignRules {
    /// Rules for a link of `length_km` made of `span_km` spans: π/4 phases and
    /// bandwidth sampled at every span boundary and midpoint.
    pub fn for_link(length_km: f64, span_km: f64, map: &NormalizationMap) -> Result<Self> {
        if !(length_km > 0.0) || !(span_km > 0.0) {
            return Err(Error::domain("link and span lengths must be positive"));
        }
        let half = 0.5 * span_km;
        let count = (length_km / half).floor() as usize;
        let mut z: Vec<f64> = (0..=count).map(|i| map.z_to_normalized(i as f64 * half * 1e3)).collect();
        let end = map.z_to_normalized(length_km * 1e3);
        if (z.last().copied().unwrap_or(0.0) - end).abs() > 1e-12 {
            z.push(end);
        }
        let rules = Self {
            z_link: end,
            phase_step: PI / 4.0,
            epsilon_duration: DEFAULT_DURATION_EPSILON,
            energy_fraction: BANDWIDTH_ENERGY_FRACTION,
            z_sampling: z,
            grid: TimeGrid::symmetric(16.0, 1 << 11)?,
            coordinate_passes: 3,
            coordinate_starts: 16,
        };
        rules.validate()?;
        Ok(rules)
    }

    /// 2000 km of 24.2 km NZ-DSF spans.
    pub fn reference_default() -> Self {
        Self::for_link(2000.0, 24.2, &NormalizationMap::nz_dsf_default()).expect("static rules")
    }

    /// Replaces the sampling with `n ≥ 2` evenly spaced points over `[0, z_L]`.
    pub fn with_uniform_sampling(mut self, n: usize) -> Self {
        let n = n.max(2);
        self.z_sampling = (0..n).map(|i| self.z_link * i as f64 / (n - 1) as f64).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z_link > 0.0) {
            return Err(Error::config("rules.z_link", "must be > 0"));
        }
        self.levels()?;
        if self.coordinate_starts == 0 {
            return Err(Error::config("rules.coordinate_starts", "must be >= 1"));
        }
        if self.z_sampling.is_empty() {
            return Err(Error::config("rules.z_sampling", "must not be empty"));
        }
        if !(self.energy_fraction > 0.0 && self.energy_fraction < 1.0) {
            return Err(Error::config("rules.energy_fraction", "must be in (0, 1)"));
        }
        Ok(())
    }

    /// Number of phase levels `2π/phase_step`.
    pub fn levels(&self) -> Result<usize> {
        let levels = 2.0 * PI / self.phase_step;
        let rounded = levels.round();
        if !(self.phase_step > 0.0) || (levels - rounded).abs() > 1e-9 || rounded < 1.0 {
            return Err(Error::config("rules.phase_step", "must divide 2π evenly"));
        }
        Ok(rounded as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    Exhaustive,
    Coordinate,
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchStrategy::Exhaustive => f.write_str("exhaustive"),
            SearchStrategy::Coordinate => f.write_str("coordinate"),
        }
    }
}

impl std::str::FromStr for SearchStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "coordinate" => Ok(Self::Coordinate),
            other => Err(Error::config("strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

/// Whether the search minimizes (design) or maximizes (worst case) bandwidth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchGoal {
    MinimizeBandwidth,
    MaximizeBandwidth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSearchResult {
    /// Phase levels (multiples of the step), first entry fixed to 0.
    pub levels: Vec<usize>,
    pub phases: Vec<f64>,
    /// Objective at the returned vector.
    pub max_bw: f64,
    pub evaluations: usize,
}

/// Mid-link spectrum of the unit-magnitude seeds `B_i/A_i = e^{jθ_i}`.
pub fn midlink_reference(eigen_subset: &[Eigenvalue], phases: &[f64]) -> Result<DiscreteSpectrum> {
    if phases.len() != eigen_subset.len() {
        return Err(Error::domain(format!(
            "{} phases for {} eigenvalues",
            phases.len(),
            eigen_subset.len()
        )));
    }
    let refs = reference_amplitudes(eigen_subset);
    let amps: Vec<Complex64> = refs
        .iter()
        .zip(phases)
        .map(|(r, &p)| r * Complex64::from_polar(1.0, p))
        .collect();
    DiscreteSpectrum::from_parts(eigen_subset, &amps)
}

/// Moves the mid-link design back to the transmitter (`−z_L/2`).
pub fn to_transmit_spectrum(midlink: &DiscreteSpectrum, z_link: f64) -> DiscreteSpectrum {
    propagate_spectrum(midlink, -0.5 * z_link)
}

/// Lossless surrogate pulse at distance `z` from the transmitter.
pub fn surrogate_pulse(
    eigen_subset: &[Eigenvalue],
    phases: &[f64],
    z_link: f64,
    z: f64,
    grid: TimeGrid,
) -> Result<SampledPulse> {
    let ratios: Vec<Complex64> = eigen_subset
        .iter()
        .zip(phases)
        .map(|(l, &p)| Complex64::from_polar(1.0, p) * evolution_factor(*l, z - 0.5 * z_link))
        .collect();
    synthesize(eigen_subset, &DarbouxConstants::from_ratios(&ratios)?, grid)
}

/// Largest bandwidth over `rules.z_sampling` for the given phases.
pub fn max_bandwidth(eigen_subset: &[Eigenvalue], phases: &[f64], rules: &DesignRules) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &z in &rules.z_sampling {
        let p = surrogate_pulse(eigen_subset, phases, rules.z_link, z, rules.grid)?;
        worst = worst.max(crate::metrics::bandwidth_fraction(&p, rules.energy_fraction)?);
    }
    Ok(worst)
}

fn better(goal: SearchGoal, candidate: f64, incumbent: f64) -> bool {
    match goal {
        SearchGoal::MinimizeBandwidth => candidate < incumbent,
        SearchGoal::MaximizeBandwidth => candidate > incumbent,
    }
}

fn level_phases(levels: &[usize], step: f64) -> Vec<f64> {
    levels.iter().map(|&l| l as f64 * step).collect()
}

/// Minimizes the largest in-link bandwidth over quantized phase vectors.
pub fn phase_search(
    eigen_subset: &[Eigenvalue],
    rules: &DesignRules,
    strategy: SearchStrategy,
) -> Result<PhaseSearchResult> {
    phase_search_with_goal(eigen_subset, rules, strategy, SearchGoal::MinimizeBandwidth)
}

pub fn phase_search_with_goal(
    eigen_subset: &[Eigenvalue],
    rules: &DesignRules,
    strategy: SearchStrategy,
    goal: SearchGoal,
) -> Result<PhaseSearchResult> {
    let k = eigen_subset.len();
    if k == 0 {
        return Err(Error::domain("phase search needs a non-empty subset"));
    }
    rules.validate()?;
    let levels = rules.levels()?;
    let step = rules.phase_step;
    let objective = |lv: &[usize]| max_bandwidth(eigen_subset, &level_phases(lv, step), rules);

    match strategy {
        SearchStrategy::Exhaustive => {
            if k > MAX_EXHAUSTIVE_K {
                let cost = (levels as f64).powi(k as i32 - 1);
                return Err(Error::SearchRefused(format!(
                    "exhaustive search over {k} phases needs {cost:.0} objective evaluations \
                     ({levels}^{}); limit is k <= {MAX_EXHAUSTIVE_K}, use the coordinate strategy",
                    k - 1
                )));
            }
            let total = levels.pow(k as u32 - 1);
            // candidates in lexicographic order; index → digits (most significant first)
            let decode = |mut idx: usize| {
                let mut lv = vec![0usize; k];
                for slot in lv[1..].iter_mut().rev() {
                    *slot = idx % levels;
                    idx /= levels;
                }
                lv
            };
            let scores = (0..total)
                .into_par_iter()
                .map(|i| objective(&decode(i)))
                .collect::<Result<Vec<f64>>>()?;
            let mut best = 0;
            for (i, &s) in scores.iter().enumerate() {
                if better(goal, s, scores[best]) {
                    best = i;
                }
            }
            let lv = decode(best);
            Ok(PhaseSearchResult {
                phases: level_phases(&lv, step),
                levels: lv,
                max_bw: scores[best],
                evaluations: total,
            })
        }
        SearchStrategy::Coordinate => {
            // deterministic starts: all-zero, then a stream seeded by k
            let mut rng = ChaCha20Rng::seed_from_u64(START_SEED ^ k as u64);
            let mut best: Option<PhaseSearchResult> = None;
            let mut evaluations = 0;
            for s in 0..rules.coordinate_starts {
                let start: Vec<usize> = if s == 0 {
                    vec![0; k]
                } else {
                    (0..k).map(|i| if i == 0 { 0 } else { rng.gen_range(0..levels) }).collect()
                };
                let r = coordinate_search(k, levels, step, rules.coordinate_passes, goal, start, objective)?;
                evaluations += r.evaluations;
                let replace = match &best {
                    None => true,
                    Some(b) => better(goal, r.max_bw, b.max_bw) || (r.max_bw == b.max_bw && r.levels < b.levels),
                };
                if replace {
                    best = Some(r);
                }
            }
            let mut best = best.expect("at least one start");
            best.evaluations = evaluations;
            Ok(best)
        }
    }
}

/// Round-robin single-coordinate descent from `start` (first level kept).
pub fn coordinate_search_from(
    eigen_subset: &[Eigenvalue],
    rules: &DesignRules,
    goal: SearchGoal,
    start: Vec<usize>,
) -> Result<PhaseSearchResult> {
    let levels = rules.levels()?;
    if start.len() != eigen_subset.len() || start.iter().any(|&l| l >= levels) {
        return Err(Error::domain("start vector does not match subset or levels"));
    }
    let step = rules.phase_step;
    // quotient by global phase: rotate so the first level is 0
    let first = start[0];
    let start: Vec<usize> = start.iter().map(|&l| (l + levels - first) % levels).collect();
    let objective = |lv: &[usize]| max_bandwidth(eigen_subset, &level_phases(lv, step), rules);
    coordinate_search(eigen_subset.len(), levels, step, rules.coordinate_passes, goal, start, objective)
}

fn coordinate_search(
    k: usize,
    levels: usize,
    step: f64,
    passes: usize,
    goal: SearchGoal,
    start: Vec<usize>,
    objective: impl Fn(&[usize]) -> Result<f64> + Sync,
) -> Result<PhaseSearchResult> {
    let mut current = start;
    let mut value = objective(&current)?;
    let mut evaluations = 1;
    for _ in 0..passes {
        let mut improved = false;
        for i in 1..k {
            let trials: Vec<(usize, f64)> = (0..levels)
                .into_par_iter()
                .filter(|&l| l != current[i])
                .map(|l| {
                    let mut lv = current.clone();
                    lv[i] = l;
                    objective(&lv).map(|v| (l, v))
                })
                .collect::<Result<Vec<_>>>()?;
            evaluations += trials.len();
            let mut best = (current[i], value);
            for (l, v) in trials {
                // equal objective: prefer the smaller level
                if better(goal, v, best.1) || (v == best.1 && l < best.0) {
                    best = (l, v);
                }
            }
            if best.0 != current[i] {
                if better(goal, best.1, value) {
                    improved = true;
                }
                current[i] = best.0;
                value = best.1;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(PhaseSearchResult {
        phases: level_phases(&current, step),
        levels: current,
        max_bw: value,
        evaluations,
    })
}

/// On/off bits over the canonical grid, serialized as a `"0110…"` string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitPattern(pub Vec<bool>);

impl BitPattern {
    pub fn ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn select(&self, grid: &[Eigenvalue]) -> Vec<Eigenvalue> {
        grid.iter().zip(&self.0).filter(|(_, b)| **b).map(|(l, _)| *l).collect()
    }
}

impl fmt::Display for BitPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::domain(format!("bad bit `{other}` in pattern"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitPattern)
    }
}

impl Serialize for BitPattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitPattern {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `count` distinct patterns of `bits` bits where every bit is on in exactly
/// half of them.
///
/// Columns start as shuffled balanced vectors; duplicate rows are repaired by
/// swapping a column entry with a row holding the opposite bit, which keeps
/// every column balanced.
pub fn balanced_patterns(bits: usize, count: usize, seed: u64) -> Result<Vec<BitPattern>> {
    if !count.is_multiple_of(2) || count == 0 {
        return Err(Error::domain("balanced pattern count must be even and positive"));
    }
    if bits < 64 && count as u128 > (1u128 << bits) {
        return Err(Error::domain(format!("cannot draw {count} distinct {bits}-bit patterns")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows = vec![vec![false; bits]; count];
    for c in 0..bits {
        let mut col: Vec<bool> = (0..count).map(|i| i < count / 2).collect();
        col.shuffle(&mut rng);
        for (row, v) in rows.iter_mut().zip(col) {
            row[c] = v;
        }
    }
    for _ in 0..100_000 {
        let mut sorted: Vec<(Vec<bool>, usize)> = rows.iter().cloned().zip(0..).collect();
        sorted.sort();
        let dup = sorted.windows(2).find(|w| w[0].0 == w[1].0).map(|w| w[1].1);
        let Some(r) = dup else {
            return Ok(rows.into_iter().map(BitPattern).collect());
        };
        let c = rng.gen_range(0..bits);
        let partners: Vec<usize> = (0..count).filter(|&o| rows[o][c] != rows[r][c]).collect();
        let o = partners[rng.gen_range(0..partners.len())];
        rows[r][c] = !rows[r][c];
        rows[o][c] = !rows[o][c];
    }
    Err(Error::Numeric("balanced pattern repair did not converge".into()))
}

/// All `2^bits` patterns in counting order (bit 0 is the first grid point).
pub fn all_patterns(bits: usize) -> Vec<BitPattern> {
    (0..1usize << bits)
        .map(|v| BitPattern((0..bits).map(|i| v >> (bits - 1 - i) & 1 == 1).collect()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookEntry {
    pub pattern: BitPattern,
    pub phases: Vec<f64>,
    /// Spectrum to launch (normalized, transmitter side).
    pub spectrum: DiscreteSpectrum,
    pub max_bandwidth: f64,
    /// Width of the launch pulse at the duration threshold.
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookHeader {
    pub schema_version: u32,
    pub grid: Vec<Eigenvalue>,
    pub rules: DesignRules,
    pub strategy: SearchStrategy,
    pub seed: u64,
    pub evolution_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub header: CodebookHeader,
    pub entries: Vec<CodebookEntry>,
}

pub const CODEBOOK_SCHEMA_VERSION: u32 = 1;

impl Codebook {
    pub fn grid(&self) -> &[Eigenvalue] {
        &self.header.grid
    }

    pub fn find(&self, pattern: &BitPattern) -> Option<&CodebookEntry> {
        self.entries.iter().find(|e| &e.pattern == pattern)
    }

    pub fn max_duration(&self) -> f64 {
        self.entries.iter().map(|e| e.duration).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let book: Codebook = serde_json::from_str(&text)?;
        if book.header.schema_version != CODEBOOK_SCHEMA_VERSION {
            return Err(Error::config(
                "header.schema_version",
                format!("unsupported version {}", book.header.schema_version),
            ));
        }
        Ok(book)
    }
}

/// Designs one codebook entry.
pub fn design_entry(
    grid: &[Eigenvalue],
    pattern: &BitPattern,
    rules: &DesignRules,
    strategy: SearchStrategy,
) -> Result<CodebookEntry> {
    if pattern.0.len() != grid.len() {
        return Err(Error::domain(format!(
            "pattern {pattern} has {} bits for a {}-point grid",
            pattern.0.len(),
            grid.len()
        )));
    }
    let subset = pattern.select(grid);
    if subset.is_empty() {
        return Ok(CodebookEntry {
            pattern: pattern.clone(),
            phases: Vec::new(),
            spectrum: DiscreteSpectrum::empty(),
            max_bandwidth: 0.0,
            duration: 0.0,
        });
    }
    let search = phase_search(&subset, rules, strategy)?;
    let spectrum = to_transmit_spectrum(&midlink_reference(&subset, &search.phases)?, rules.z_link);
    let launch = synthesize_spectrum(&spectrum, rules.grid)?;
    Ok(CodebookEntry {
        pattern: pattern.clone(),
        phases: search.phases,
        spectrum,
        max_bandwidth: search.max_bw,
        duration: duration_width(&launch, rules.epsilon_duration)?,
    })
}

/// Designs an entry per pattern. Entries keep the order of `patterns`.
pub fn build_codebook(
    grid: &[Eigenvalue],
    patterns: &[BitPattern],
    rules: &DesignRules,
    strategy: SearchStrategy,
    seed: u64,
) -> Result<Codebook> {
    rules.validate()?;
    let mut seen = std::collections::BTreeSet::new();
    for p in patterns {
        if !seen.insert(p.clone()) {
            return Err(Error::domain(format!("duplicate pattern {p}")));
        }
    }
    let entries = patterns
        .par_iter()
        .map(|p| design_entry(grid, p, rules, strategy))
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook {
        header: CodebookHeader {
            schema_version: CODEBOOK_SCHEMA_VERSION,
            grid: grid.to_vec(),
            rules: rules.clone(),
            strategy,
            seed,
            evolution_constant: EVOLUTION_CONSTANT,
        },
        entries,
    })
}

/// Launch pulse bandwidth helper used by reports.
pub fn launch_bandwidth(entry: &CodebookEntry, grid: TimeGrid) -> Result<f64> {
    if entry.spectrum.is_empty() {
        return Ok(0.0);
    }
    bandwidth99(&synthesize_spectrum(&entry.spectrum, grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::default_grid;

    fn quick_rules() -> DesignRules {
        let mut r = DesignRules::reference_default().with_uniform_sampling(5);
        r.grid = TimeGrid::symmetric(16.0, 1024).unwrap();
        r
    }

    #[test]
    fn default_rules_sample_span_points() {
        let r = DesignRules::reference_default();
        assert!((r.z_link - 0.414).abs() < 1e-3);
        assert_eq!(r.levels().unwrap(), 8);
        // 2000 km / 12.1 km = 165.3 → 166 samples plus the end point
        assert_eq!(r.z_sampling.len(), 167);
        assert_eq!(r.z_sampling[0], 0.0);
        assert!((r.z_sampling.last().unwrap() - r.z_link).abs() < 1e-15);
    }

    #[test]
    fn phase_step_must_divide_circle() {
        let mut r = quick_rules();
        r.phase_step = 1.0;
        assert!(r.validate().is_err());
    }

    #[test]
    fn transmit_of_imaginary_eigenvalues_keeps_magnitude() {
        let subset = vec![Eigenvalue::new(0.0, 1.0).unwrap(), Eigenvalue::new(0.0, 2.0).unwrap()];
        let mid = midlink_reference(&subset, &[0.0, PI / 4.0]).unwrap();
        let tx = to_transmit_spectrum(&mid, 0.414);
        for (a, b) in mid.amplitudes().iter().zip(tx.amplitudes()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12 * a.norm());
        }
    }

    #[test]
    fn transmit_magnitude_rule() {
        let l = Eigenvalue::new(1.0, 1.0).unwrap();
        let z_link = 0.414;
        let mid = midlink_reference(&[l], &[0.0]).unwrap();
        let tx = to_transmit_spectrum(&mid, z_link);
        // |exp(c·j·λ²·(−z_L/2))| with λ² = 2j → exp(c·z_L)
        let expected = mid.amplitudes()[0].norm() * (EVOLUTION_CONSTANT * z_link).exp();
        assert!((tx.amplitudes()[0].norm() - expected).abs() < 1e-12 * expected);
        let back = propagate_spectrum(&tx, 0.5 * z_link);
        assert!((back.amplitudes()[0] - mid.amplitudes()[0]).norm() < 1e-12);
    }

    #[test]
    fn single_eigenvalue_search_returns_zero_phase() {
        let r = phase_search(&[Eigenvalue::new(1.0, 1.0).unwrap()], &quick_rules(), SearchStrategy::Exhaustive).unwrap();
        assert_eq!(r.phases, vec![0.0]);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn exhaustive_refuses_large_subsets() {
        let g = default_grid();
        let err = phase_search(&g[..7], &quick_rules(), SearchStrategy::Exhaustive).unwrap_err();
        match err {
            Error::SearchRefused(msg) => assert!(msg.contains("262144"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn search_space_is_quotiented() {
        let g = make_two();
        let r = phase_search(&g, &quick_rules(), SearchStrategy::Exhaustive).unwrap();
        assert_eq!(r.evaluations, 8);
        assert_eq!(r.levels[0], 0);
    }

    fn make_two() -> Vec<Eigenvalue> {
        vec![Eigenvalue::new(0.0, 1.0).unwrap(), Eigenvalue::new(0.0, 2.0).unwrap()]
    }

    #[test]
    fn objective_invariant_under_global_phase() {
        let g = default_grid();
        let subset = &g[2..6];
        let rules = quick_rules();
        let phases = [0.0, PI / 4.0, PI, 3.0 * PI / 2.0];
        let base = max_bandwidth(subset, &phases, &rules).unwrap();
        let shifted: Vec<f64> = phases.iter().map(|p| p + 3.0 * PI / 4.0).collect();
        let other = max_bandwidth(subset, &shifted, &rules).unwrap();
        assert!((base - other).abs() < 1e-9 * base, "{base} vs {other}");
    }

    #[test]
    fn bit_pattern_text() {
        let p: BitPattern = "1001".parse().unwrap();
        assert_eq!(p.0, vec![true, false, false, true]);
        assert_eq!(p.to_string(), "1001");
        assert!("10x".parse::<BitPattern>().is_err());
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"1001\"");
    }

    #[test]
    fn balanced_generator() {
        let pats = balanced_patterns(10, 256, 7).unwrap();
        assert_eq!(pats.len(), 256);
        let set: std::collections::BTreeSet<_> = pats.iter().cloned().collect();
        assert_eq!(set.len(), 256);
        for c in 0..10 {
            assert_eq!(pats.iter().filter(|p| p.0[c]).count(), 128);
        }
        assert_eq!(pats, balanced_patterns(10, 256, 7).unwrap());
        assert_ne!(pats, balanced_patterns(10, 256, 8).unwrap());
    }

    #[test]
    fn all_patterns_counts() {
        let all = all_patterns(3);
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].to_string(), "000");
        assert_eq!(all[5].to_string(), "101");
    }

    #[test]
    fn empty_and_single_bit_entries() {
        let g = default_grid();
        let rules = quick_rules();
        let mut pats = vec![BitPattern(vec![false; 10])];
        for i in 0..10 {
            let mut b = vec![false; 10];
            b[i] = true;
            pats.push(BitPattern(b));
        }
        let book = build_codebook(&g, &pats, &rules, SearchStrategy::Coordinate, 0).unwrap();
        assert!(book.entries[0].spectrum.is_empty());
        assert_eq!(crate::spectrum::soliton_energy(&book.entries[0].spectrum), 0.0);
        for (i, e) in book.entries[1..].iter().enumerate() {
            assert_eq!(e.spectrum.len(), 1);
            assert_eq!(e.spectrum.eigenvalues()[0], g[i]);
            assert_eq!(crate::spectrum::soliton_energy(&e.spectrum), 4.0 * g[i].sigma());
        }
    }

    #[test]
    fn duplicate_patterns_rejected() {
        let g = default_grid();
        let p = BitPattern(vec![true; 10]);
        assert!(build_codebook(&g, &[p.clone(), p], &quick_rules(), SearchStrategy::Coordinate, 0).is_err());
    }
}
