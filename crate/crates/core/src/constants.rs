//! Frozen numerical constants.

/// `c` in the amplitude evolution law `q_d(z) = q_d(0)·exp(c·j·λ²·z)` for
/// normalized distance `z = z_phys/Z0`.
///
/// Calibrated by [`crate::calibration::calibrate_evolution_constant`]: a
/// two-soliton is propagated by the lossless split-step solver and its
/// amplitudes are re-measured by the forward transform. Re-run with
/// `cargo run --example calibrate` or `nfdm calibrate`; the
/// `calibration_reproduces_frozen_constant` test fails if it drifts.
pub const EVOLUTION_CONSTANT: f64 = -2.0;

/// Fourier collocation harmonics used unless a caller overrides them.
pub const DEFAULT_HARMONICS: usize = 64;

/// Eigenvalues with `Im λ` at or below this are treated as continuous-spectrum clutter.
pub const DEFAULT_IM_THRESHOLD: f64 = 0.15;

/// FC eigenvalues closer than this are merged.
pub const DEDUP_TOLERANCE: f64 = 1e-3;

/// OOK decision radius around each nominal eigenvalue.
pub const DEFAULT_DECISION_RADIUS: f64 = 0.5;

/// Step in λ for the central-difference estimate of `a'(λ)`.
pub const DERIVATIVE_STEP: f64 = 1e-4;

/// Amplitude truncation level defining pulse duration.
pub const DEFAULT_DURATION_EPSILON: f64 = 0.01;

/// Energy fraction defining bandwidth.
pub const BANDWIDTH_ENERGY_FRACTION: f64 = 0.99;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
