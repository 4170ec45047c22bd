//! Uniformly sampled complex envelopes and their on-disk format.
//!
//! A pulse file is a raw little-endian array of `f64` pairs `(re, im)` with a
//! JSON sidecar `{t_start, dt, count}` next to it (same stem, `.json`).

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `t_k = t_start + k·dt`, `k = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, count: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t_start.is_finite() {
            return Err(Error::domain(format!("invalid grid step dt = {dt}")));
        }
        if count < 2 {
            return Err(Error::domain(format!("grid needs at least 2 samples, got {count}")));
        }
        Ok(Self { t_start, dt, count })
    }

    /// `count` samples covering `[lo, hi)` (periodic-window convention).
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        Self::new(-half_width, 2.0 * half_width / count as f64, count)
    }

    /// The default synthesis window: `[-16, 16)` with 2¹² samples.
    pub fn default_synthesis() -> Self {
        Self::symmetric(16.0, 1 << 12).expect("static grid")
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.time(k))
    }

    /// Window length `count·dt` (the period seen by FFT-based operators).
    pub fn span(&self) -> f64 {
        self.count as f64 * self.dt
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledPulse {
    samples: Vec<Complex64>,
    grid: TimeGrid,
}

impl SampledPulse {
    pub fn new(samples: Vec<Complex64>, t_start: f64, dt: f64) -> Result<Self> {
        let grid = TimeGrid::new(t_start, dt, samples.len())?;
        Self::on_grid(samples, grid)
    }

    pub fn on_grid(samples: Vec<Complex64>, grid: TimeGrid) -> Result<Self> {
        if samples.len() != grid.count {
            return Err(Error::domain(format!(
                "grid has {} points but {} samples given",
                grid.count,
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::domain("pulse samples must be finite"));
        }
        Ok(Self { samples, grid })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); grid.count],
            grid,
        }
    }

    /// Samples `f(t)` on the grid.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::on_grid(grid.times().map(f).collect(), grid)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn t_start(&self) -> f64 {
        self.grid.t_start
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Trapezoid-rule energy `∫|q|² dt`.
    pub fn energy(&self) -> f64 {
        let n = self.samples.len();
        let inner: f64 = self.samples.iter().map(|s| s.norm_sqr()).sum();
        let ends = 0.5 * (self.samples[0].norm_sqr() + self.samples[n - 1].norm_sqr());
        (inner - ends) * self.grid.dt
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|s| s.norm_sqr() == 0.0)
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            grid: self.grid,
        }
    }

    /// Copies samples `[start, start + len)` into a new pulse.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.samples.len() {
            return Err(Error::domain(format!(
                "slice {start}..{} exceeds {} samples",
                start + len,
                self.samples.len()
            )));
        }
        Self::new(
            self.samples[start..start + len].to_vec(),
            self.grid.time(start),
            self.grid.dt,
        )
    }

    /// Writes the binary sample file at `path` and the sidecar next to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(self.samples.len() * 16);
        for s in &self.samples {
            bytes.extend_from_slice(&s.re.to_le_bytes());
            bytes.extend_from_slice(&s.im.to_le_bytes());
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let sidecar = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.grid)?;
        fs::write(&sidecar, json).map_err(|e| Error::io(sidecar, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let sidecar = sidecar_path(path);
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let grid: TimeGrid = serde_json::from_str(&text)?;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != grid.count * 16 {
            return Err(Error::Precondition(format!(
                "{} holds {} bytes, sidecar expects {} samples",
                path.display(),
                bytes.len(),
                grid.count
            )));
        }
        let samples = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Self::on_grid(samples, TimeGrid::new(grid.t_start, grid.dt, grid.count)?)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}
