//! Welch power spectrum and FFT-based autocorrelation.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Welch window length in seconds.
pub const WELCH_WINDOW_S: f64 = 4.0;

/// Reusable FFT plans for one epoch length and sampling rate.
pub struct SpectralPlan {
    pub fs: f64,
    seg_len: usize,
    window: Vec<f64>,
    window_power: f64,
    seg_fft: Arc<dyn Fft<f64>>,
    acf_len: usize,
    acf_fwd: Arc<dyn Fft<f64>>,
    acf_inv: Arc<dyn Fft<f64>>,
}

impl SpectralPlan {
    pub fn new(fs: f64, epoch_samples: usize) -> Self {
        let seg_len = ((WELCH_WINDOW_S * fs).round() as usize).min(epoch_samples).max(2);
        // symmetric Hann so that time reversal leaves the estimate unchanged
        let window: Vec<f64> = (0..seg_len)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (seg_len - 1) as f64).cos())
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let acf_len = (2 * epoch_samples).next_power_of_two();
        let mut planner = FftPlanner::new();
        SpectralPlan {
            fs,
            seg_len,
            window,
            window_power,
            seg_fft: planner.plan_fft_forward(seg_len),
            acf_len,
            acf_fwd: planner.plan_fft_forward(acf_len),
            acf_inv: planner.plan_fft_inverse(acf_len),
        }
    }

    pub fn bin_width(&self) -> f64 {
        self.fs / self.seg_len as f64
    }

    /// One-sided Welch PSD (units^2/Hz) with 50% overlap and per-segment
    /// mean removal. Bin `k` sits at `k * bin_width()`.
    pub fn welch(&self, x: &[f64]) -> Vec<f64> {
        let n = self.seg_len;
        let hop = n / 2;
        let bins = n / 2 + 1;
        let mut psd = vec![0.0; bins];
        if x.len() < n {
            return psd;
        }
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut segments = 0usize;
        let mut start = 0;
        while start + n <= x.len() {
            let seg = &x[start..start + n];
            let mean = seg.iter().sum::<f64>() / n as f64;
            for ((b, &v), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex::new((v - mean) * w, 0.0);
            }
            self.seg_fft.process(&mut buf);
            for (p, c) in psd.iter_mut().zip(&buf) {
                *p += c.norm_sqr();
            }
            segments += 1;
            start += hop;
        }
        let scale = 1.0 / (self.fs * self.window_power * segments as f64);
        for (k, p) in psd.iter_mut().enumerate() {
            *p *= scale;
            if k != 0 && !(n % 2 == 0 && k == n / 2) {
                *p *= 2.0;
            }
        }
        psd
    }

    /// Normalized autocorrelation of the mean-removed signal for lags
    /// `0..=max_lag`. All zeros for a constant input.
    pub fn autocorrelation(&self, x: &[f64], max_lag: usize) -> Vec<f64> {
        let n = x.len();
        let max_lag = max_lag.min(n.saturating_sub(1));
        let mean = x.iter().sum::<f64>() / n.max(1) as f64;
        let mut buf = vec![Complex::new(0.0, 0.0); self.acf_len];
        for (b, &v) in buf.iter_mut().zip(x) {
            *b = Complex::new(v - mean, 0.0);
        }
        self.acf_fwd.process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        self.acf_inv.process(&mut buf);
        let r0 = buf[0].re;
        if !(r0 > 0.0) {
            return vec![0.0; max_lag + 1];
        }
        buf[..=max_lag].iter().map(|c| c.re / r0).collect()
    }
}
