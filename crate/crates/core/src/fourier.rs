//! Thin FFT helpers over `rustfft` with a per-thread plan cache.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT (`e^{−2πikn/N}`), in place.
pub fn forward(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// Inverse DFT including the `1/N` factor, in place.
pub fn inverse(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for x in buf.iter_mut() {
        *x *= scale;
    }
}

/// Angular frequency of each DFT bin, in natural (unshifted) order.
pub fn angular_frequencies(n: usize, dt: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * dt);
    (0..n)
        .map(|k| {
            let signed = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
            signed * base
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let orig: Vec<Complex64> = (0..64).map(|k| Complex64::new(k as f64, -(k as f64) * 0.5)).collect();
        let mut buf = orig.clone();
        forward(&mut buf);
        inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn frequency_layout() {
        let w = angular_frequencies(4, 0.5);
        assert_eq!(w, vec![0.0, PI, -2.0 * PI, -PI]);
    }
}
