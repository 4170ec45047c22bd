//! Forward nonlinear Fourier transform for the discrete spectrum.
//!
//! Eigenvalues come from Fourier collocation: writing the Zakharov–Shabat
//! problem as `λv = [[j∂t, −jq], [−jq*, −j∂t]] v` and expanding both
//! components in `e^{jkω₀t}`, `|k| ≤ M`, on the pulse window gives the dense
//! matrix
//!
//! ```text
//! [[ −diag(kω₀)   −j·C  ]
//!  [ −j·Cᴴ     diag(kω₀) ]],    C_{km} = c_{k−m}
//! ```
//!
//! where `c_n` are the Fourier coefficients of `q` over the window.
//!
//! Scattering data come from a piecewise-constant transfer-matrix sweep with
//! the exact 2×2 exponential per sample.

use std::sync::Arc;

use faer::complex_native::c64;
use faer::Mat;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::constants::{DEDUP_TOLERANCE, DERIVATIVE_STEP};
use crate::error::{Error, Result};
use crate::pulse::SampledPulse;
use crate::spectrum::{DiscreteSpectrum, Eigenvalue, SpectralAmplitude};

/// Jost coefficients `a(λ)`, `b(λ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringPair {
    pub a: Complex64,
    pub b: Complex64,
}

/// Largest move accepted from the Newton polish of a collocation eigenvalue.
const REFINE_RADIUS: f64 = 0.1;

/// Parameters of the collocation eigen-solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FcParams {
    pub harmonics: usize,
    pub im_threshold: f64,
    /// Reject windows whose edge magnitude exceeds this fraction of `√E`.
    pub edge_limit: f64,
    /// Newton steps on `a(λ)` applied to each collocation eigenvalue (0 = off).
    pub refine_iterations: usize,
}

impl Default for FcParams {
    fn default() -> Self {
        Self {
            harmonics: crate::constants::DEFAULT_HARMONICS,
            im_threshold: crate::constants::DEFAULT_IM_THRESHOLD,
            edge_limit: 0.05,
            refine_iterations: 4,
        }
    }
}

impl FcParams {
    pub fn with_harmonics(harmonics: usize) -> Self {
        Self { harmonics, ..Self::default() }
    }
}

/// Fourier coefficients `c_n`, `n ∈ [−2M, 2M]`, of `q` over its window.
fn window_coefficients(pulse: &SampledPulse, m: usize, fft: &Arc<dyn Fft<f64>>) -> Vec<Complex64> {
    let n = pulse.len();
    let mut buf = pulse.samples().to_vec();
    fft.process(&mut buf);
    let omega0 = 2.0 * std::f64::consts::PI / pulse.grid().span();
    let t0 = pulse.t_start();
    let mm = 2 * m as i64;
    (-mm..=mm)
        .map(|k| {
            let idx = k.rem_euclid(n as i64) as usize;
            buf[idx] * Complex64::from_polar(1.0 / n as f64, -(k as f64) * omega0 * t0)
        })
        .collect()
}

/// Complete (unfiltered) collocation spectrum, for diagnostics and tests.
pub fn collocation_spectrum(pulse: &SampledPulse, harmonics: usize) -> Result<Vec<Complex64>> {
    let m = harmonics;
    let n = pulse.len();
    if 4 * m + 1 > n {
        return Err(Error::Precondition(format!(
            "{} harmonics need at least {} samples, pulse has {n}",
            m,
            4 * m + 1
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let coeffs = window_coefficients(pulse, m, &fft);
    let omega0 = 2.0 * std::f64::consts::PI / pulse.grid().span();
    let size = 2 * m + 1;
    let dim = 2 * size;
    let offset = 2 * m as i64;
    let neg_j = c64::new(0.0, -1.0);
    let mat = Mat::<c64>::from_fn(dim, dim, |r, col| {
        let (br, i) = (r / size, r % size);
        let (bc, l) = (col / size, col % size);
        let ki = i as i64 - m as i64;
        let kl = l as i64 - m as i64;
        match (br, bc) {
            (0, 0) if i == l => c64::new(-(ki as f64) * omega0, 0.0),
            (1, 1) if i == l => c64::new(ki as f64 * omega0, 0.0),
            (0, 1) => {
                let c = coeffs[(ki - kl + offset) as usize];
                neg_j * c64::new(c.re, c.im)
            }
            (1, 0) => {
                let c = coeffs[(kl - ki + offset) as usize].conj();
                neg_j * c64::new(c.re, c.im)
            }
            _ => c64::new(0.0, 0.0),
        }
    });
    let eigs = mat.eigenvalues::<c64>();
    if eigs.len() != dim || eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("collocation eigensolver failed".into()));
    }
    Ok(eigs.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Detects discrete eigenvalues by Fourier collocation.
///
/// Returns eigenvalues with `Im λ > im_threshold`, merged within
/// `DEDUP_TOLERANCE` and in canonical order.
pub fn detect_eigenvalues(pulse: &SampledPulse, params: &FcParams) -> Result<Vec<Eigenvalue>> {
    if params.harmonics < 16 {
        return Err(Error::Precondition(format!(
            "collocation needs M >= 16 harmonics, got {}",
            params.harmonics
        )));
    }
    if pulse.is_zero() {
        return Ok(Vec::new());
    }
    let energy = pulse.energy();
    let s = pulse.samples();
    let edge = s[0].norm().max(s[s.len() - 1].norm());
    if edge > params.edge_limit * energy.sqrt() {
        return Err(Error::Precondition(format!(
            "window too short: edge magnitude {edge:.3e} > {} sqrt(E) = {:.3e}",
            params.edge_limit,
            params.edge_limit * energy.sqrt()
        )));
    }
    let spectrum = collocation_spectrum(pulse, params.harmonics)?;
    let mut found: Vec<Complex64> = Vec::new();
    let mut candidates: Vec<Complex64> = spectrum
        .into_iter()
        .filter(|z| z.im > params.im_threshold)
        .collect();
    candidates.sort_by(|a, b| b.im.total_cmp(&a.im));
    if params.refine_iterations > 0 {
        for z in candidates.iter_mut() {
            // keep the collocation value when Newton wanders off
            if let Ok(r) = refine_zero(pulse, *z, params.refine_iterations) {
                if (r - *z).norm() < REFINE_RADIUS && r.im > params.im_threshold {
                    *z = r;
                }
            }
        }
    }
    for z in candidates {
        if found.iter().all(|f| (f - z).norm() > DEDUP_TOLERANCE) {
            found.push(z);
        }
    }
    let mut eigs = found
        .into_iter()
        .map(Eigenvalue::from_complex)
        .collect::<Result<Vec<_>>>()?;
    eigs.sort_by(|a, b| a.canonical_cmp(b));
    Ok(eigs)
}

/// Left-to-right transfer-matrix sweep over `samples` spaced by `dt`, the
/// first cell starting at `t_left`.
///
/// Each sample is treated as constant over its cell and the left Jost
/// solution `(e^{−jλt}, 0)` is propagated to the right edge.
fn transfer<'a>(
    samples: impl Iterator<Item = &'a Complex64>,
    t_left: f64,
    dt: f64,
    lambda: Complex64,
) -> (Complex64, Complex64) {
    let j = Complex64::i();
    // Track v·e^{jλ t_left} so the start vector is (1, 0).
    let mut v1 = Complex64::new(1.0, 0.0);
    let mut v2 = Complex64::new(0.0, 0.0);
    let mut log_scale = 0.0f64;
    let mut cells = 0usize;
    for &q in samples {
        let k = (lambda * lambda + q.norm_sqr()).sqrt();
        let kd = k * dt;
        let cos = kd.cos();
        // sin(k·dt)/k → dt as k → 0
        let sinc = if k.norm() < 1e-8 { Complex64::new(dt, 0.0) } else { kd.sin() / k };
        let p11 = -j * lambda;
        let n1 = cos * v1 + sinc * (p11 * v1 + q * v2);
        let n2 = cos * v2 + sinc * (-q.conj() * v1 - p11 * v2);
        v1 = n1;
        v2 = n2;
        cells += 1;
        let m = v1.norm().max(v2.norm());
        if m > 1e100 {
            v1 /= m;
            v2 /= m;
            log_scale += m.ln();
        }
    }
    let t_right = t_left + cells as f64 * dt;
    // v(t_right) = a e^{−jλt_right}, b e^{jλt_right} relative to e^{−jλt_left}
    let a = v1 * (j * lambda * (t_right - t_left) + log_scale).exp();
    let b = v2 * (-j * lambda * (t_right + t_left) + log_scale).exp();
    (a, b)
}

/// Scattering coefficients `a(λ)`, `b(λ)` of the sampled pulse.
///
/// The exponential midpoint sweep has an error series in even powers of `dt`;
/// combining the full sweep with one over every other sample at `2·dt`
/// cancels the leading term.
pub fn scattering(pulse: &SampledPulse, lambda: Complex64) -> Result<ScatteringPair> {
    let dt = pulse.dt();
    let samples = pulse.samples();
    let (a_fine, b_fine) = transfer(samples.iter(), pulse.t_start() - 0.5 * dt, dt, lambda);
    let (a, b) = if samples.len() >= 4 {
        let (a_coarse, b_coarse) = transfer(samples.iter().skip(1).step_by(2), pulse.t_start(), 2.0 * dt, lambda);
        ((4.0 * a_fine - a_coarse) / 3.0, (4.0 * b_fine - b_coarse) / 3.0)
    } else {
        (a_fine, b_fine)
    };
    if !a.re.is_finite() || !a.im.is_finite() || !b.re.is_finite() || !b.im.is_finite() {
        return Err(Error::Numeric(format!(
            "scattering overflow at λ = {lambda} over a window of {}",
            pulse.grid().span()
        )));
    }
    Ok(ScatteringPair { a, b })
}

/// `b(λ)` at a bound state, from `φ = b·ψ` where the left and right Jost
/// solutions meet at the energy median of the pulse.
///
/// At an eigenvalue the `b` component of the left-to-right sweep decays while
/// the error in the other component grows, so reading `b` at the right edge
/// is unreliable once `σ·T` is large; matching in the interior is not.
pub fn bound_state_b(pulse: &SampledPulse, lambda: Complex64) -> Result<Complex64> {
    let dt = pulse.dt();
    let samples = pulse.samples();
    let t_left = pulse.t_start() - 0.5 * dt;
    let t_right = t_left + pulse.grid().span();
    let j = Complex64::i();
    let total: f64 = samples.iter().map(|q| q.norm_sqr()).sum();
    let split = if total == 0.0 {
        samples.len() / 2
    } else {
        let mut acc = 0.0;
        samples
            .iter()
            .position(|q| {
                acc += q.norm_sqr();
                acc >= 0.5 * total
            })
            .unwrap_or(samples.len() / 2)
    };
    // sign = +1 steps forward by dt, −1 steps backward
    let sweep = |range: &mut dyn Iterator<Item = &Complex64>, mut v: [Complex64; 2], sign: f64| {
        let mut log_scale = 0.0f64;
        for &q in range {
            let k = (lambda * lambda + q.norm_sqr()).sqrt();
            let kd = k * dt;
            let cos = kd.cos();
            let sinc = if k.norm() < 1e-8 { Complex64::new(dt, 0.0) } else { kd.sin() / k } * sign;
            let p11 = -j * lambda;
            let n1 = cos * v[0] + sinc * (p11 * v[0] + q * v[1]);
            let n2 = cos * v[1] + sinc * (-q.conj() * v[0] - p11 * v[1]);
            v = [n1, n2];
            let m = v[0].norm().max(v[1].norm());
            if m > 1e100 {
                v = [v[0] / m, v[1] / m];
                log_scale += m.ln();
            }
        }
        (v, log_scale)
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (phi, log_phi) = sweep(&mut samples[..split].iter(), [one, zero], 1.0);
    let (psi, log_psi) = sweep(&mut samples[split..].iter().rev(), [zero, one], -1.0);
    // least-squares ratio of the two vectors
    let den = psi[0].norm_sqr() + psi[1].norm_sqr();
    let ratio = (phi[0] * psi[0].conj() + phi[1] * psi[1].conj()) / den;
    let b = ratio * (-j * lambda * (t_left + t_right) + log_phi - log_psi).exp();
    if !b.re.is_finite() || !b.im.is_finite() {
        return Err(Error::Numeric(format!("bound-state coefficient overflow at λ = {lambda}")));
    }
    Ok(b)
}

/// `q_d(λ) = b(λ)/a'(λ)` with `a'` from a central difference of step `h`.
pub fn spectral_amplitude(pulse: &SampledPulse, lambda: Eigenvalue) -> Result<SpectralAmplitude> {
    let l = lambda.value();
    let h = DERIVATIVE_STEP;
    let plus = scattering(pulse, l + h)?;
    let minus = scattering(pulse, l - h)?;
    let deriv = (plus.a - minus.a) / (2.0 * h);
    if deriv.norm() < 1e-8 {
        return Err(Error::DegenerateEigenvalue {
            re: l.re,
            im: l.im,
            deriv_abs: deriv.norm(),
        });
    }
    let b = bound_state_b(pulse, l)?;
    SpectralAmplitude::new(b / deriv)
}

/// Discrete spectrum of a pulse: detected eigenvalues with their amplitudes.
pub fn discrete_spectrum(pulse: &SampledPulse, params: &FcParams) -> Result<DiscreteSpectrum> {
    let eigs = detect_eigenvalues(pulse, params)?;
    let entries = eigs
        .iter()
        .map(|&l| Ok((l, spectral_amplitude(pulse, l)?)))
        .collect::<Result<Vec<_>>>()?;
    DiscreteSpectrum::new(entries)
}

/// Refines a zero of `a(λ)` by Newton iteration from `start`.
pub fn refine_zero(pulse: &SampledPulse, start: Complex64, iterations: usize) -> Result<Complex64> {
    let h = DERIVATIVE_STEP;
    let mut l = start;
    for _ in 0..iterations {
        let a = scattering(pulse, l)?.a;
        let d = (scattering(pulse, l + h)?.a - scattering(pulse, l - h)?.a) / (2.0 * h);
        if d.norm() == 0.0 {
            break;
        }
        let step = a / d;
        l -= step;
        if step.norm() < 1e-12 {
            break;
        }
    }
    Ok(l)
}

/// Outcome of matching detections against a nominal eigenvalue set.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub bits: Vec<bool>,
    /// Detections that matched no nominal eigenvalue.
    pub unmatched: usize,
}

/// On-off decisions: bit `i` is set when a detection lies within `radius` of
/// nominal `λ_i`. Pairs are matched greedily by increasing distance and each
/// detection is used at most once.
pub fn ook_decide(detected: &[Eigenvalue], nominal: &[Eigenvalue], radius: f64) -> Decision {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, n) in nominal.iter().enumerate() {
        for (d_idx, d) in detected.iter().enumerate() {
            let dist = n.distance(d);
            if dist <= radius {
                pairs.push((dist, i, d_idx));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut bits = vec![false; nominal.len()];
    let mut used = vec![false; detected.len()];
    for (_, i, d_idx) in pairs {
        if !bits[i] && !used[d_idx] {
            bits[i] = true;
            used[d_idx] = true;
        }
    }
    Decision {
        bits,
        unmatched: used.iter().filter(|u| !**u).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::TimeGrid;
    use crate::spectrum::default_grid;

    fn sech_pulse(amp: f64) -> SampledPulse {
        SampledPulse::from_fn(TimeGrid::default_synthesis(), |t| Complex64::new(amp / t.cosh(), 0.0)).unwrap()
    }

    #[test]
    fn zero_pulse_has_no_eigenvalues() {
        let p = SampledPulse::zeros(TimeGrid::default_synthesis());
        assert!(detect_eigenvalues(&p, &FcParams::default()).unwrap().is_empty());
    }

    #[test]
    fn satsuma_yajima_unit_sech() {
        let eigs = detect_eigenvalues(&sech_pulse(1.0), &FcParams::with_harmonics(64)).unwrap();
        assert_eq!(eigs.len(), 1);
        assert!((eigs[0].value() - Complex64::new(0.0, 0.5)).norm() < 1e-3, "{:?}", eigs);
    }

    #[test]
    fn satsuma_yajima_two_eigenvalues() {
        let eigs = detect_eigenvalues(&sech_pulse(2.2), &FcParams::with_harmonics(64)).unwrap();
        assert_eq!(eigs.len(), 2, "{:?}", eigs);
        let mut ims: Vec<f64> = eigs.iter().map(|e| e.sigma()).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] - 0.7).abs() < 1e-3 && (ims[1] - 1.7).abs() < 1e-3, "{ims:?}");
        assert!(eigs.iter().all(|e| e.omega().abs() < 1e-3));
    }

    #[test]
    fn harmonics_floor_enforced() {
        assert!(matches!(
            detect_eigenvalues(&sech_pulse(1.0), &FcParams::with_harmonics(8)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn short_window_rejected() {
        let p = SampledPulse::from_fn(TimeGrid::symmetric(1.0, 256).unwrap(), |t| Complex64::new(1.0 / t.cosh(), 0.0)).unwrap();
        assert!(matches!(detect_eigenvalues(&p, &FcParams::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn scattering_of_zero_pulse() {
        let p = SampledPulse::zeros(TimeGrid::default_synthesis());
        for l in [Complex64::new(0.3, 0.0), Complex64::new(-1.0, 0.5), Complex64::new(2.0, 2.0)] {
            let s = scattering(&p, l).unwrap();
            assert!((s.a - 1.0).norm() < 1e-12, "{l}: {:?}", s);
            assert!(s.b.norm() < 1e-12);
        }
    }

    #[test]
    fn sech_is_reflectionless() {
        let p = sech_pulse(1.0);
        for x in [-3.0, -1.0, -0.2, 0.0, 0.5, 2.0] {
            let s = scattering(&p, Complex64::new(x, 0.0)).unwrap();
            assert!((s.a.norm() - 1.0).abs() < 1e-4, "λ={x} |a|={}", s.a.norm());
            assert!(s.b.norm() < 1e-4);
        }
        let at_eig = scattering(&p, Complex64::new(0.0, 0.5)).unwrap();
        assert!(at_eig.a.norm() <= 1e-4, "|a(j/2)| = {}", at_eig.a.norm());
    }

    #[test]
    fn ook_examples() {
        let g = default_grid();
        assert!(ook_decide(&g, &g, 0.5).bits.iter().all(|b| *b));
        assert!(ook_decide(&[], &g, 0.5).bits.iter().all(|b| !*b));
        let d = Eigenvalue::new(1.04, 0.97).unwrap();
        // brute-force distance table: only 1+j is within 0.5
        let close: Vec<usize> = (0..g.len()).filter(|&i| g[i].distance(&d) <= 0.5).collect();
        assert_eq!(close.len(), 1);
        let dec = ook_decide(&[d], &g, 0.5);
        for (i, b) in dec.bits.iter().enumerate() {
            assert_eq!(*b, g[i] == Eigenvalue::new(1.0, 1.0).unwrap());
        }
        assert_eq!(dec.unmatched, 0);
    }

    #[test]
    fn ook_consumes_each_detection_once() {
        let nominal = vec![Eigenvalue::new(0.0, 1.0).unwrap(), Eigenvalue::new(0.0, 1.6).unwrap()];
        let det = vec![Eigenvalue::new(0.0, 1.25).unwrap()];
        let d = ook_decide(&det, &nominal, 0.5);
        assert_eq!(d.bits, vec![true, false]);
        let far = vec![Eigenvalue::new(5.0, 5.0).unwrap()];
        assert_eq!(ook_decide(&far, &nominal, 0.5).unmatched, 1);
    }

    proptest::proptest! {
        #[test]
        fn ook_permutation_invariant(perm in proptest::sample::subsequence((0..10usize).collect::<Vec<_>>(), 0..=10),
                                     offs in proptest::collection::vec((-0.2f64..0.2, -0.2f64..0.2), 10),
                                     seed in 0u64..1000) {
            let g = default_grid();
            let mut det: Vec<Eigenvalue> = perm.iter().map(|&i| Eigenvalue::new(g[i].omega() + offs[i].0, g[i].sigma() + offs[i].1).unwrap()).collect();
            let a = ook_decide(&det, &g, 0.25);
            let k = det.len();
            if k > 1 { det.rotate_left((seed as usize) % k); det.reverse(); }
            let b = ook_decide(&det, &g, 0.25);
            proptest::prop_assert_eq!(a, b);
        }
    }
}
