use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use super::ensemble::EnsembleResult;
use crate::{Error, Result, C64};

/// Noise spectrum `V(ω)` in shot-noise units (vacuum is 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub omega_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error over trajectories.
    pub stderr: Vec<f64>,
}

impl SpectrumEstimate {
    pub fn to_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| 10.0 * v.log10()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    /// Records with `t < t_transient` are discarded.
    pub t_transient: f64,
    /// Welch segment duration (Hann window, 50% overlap). `None` uses the
    /// whole post-transient record as a single segment.
    pub segment: Option<f64>,
    /// FFT length multiplier applied on top of the next power of two.
    pub zero_pad: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            t_transient: 10.0,
            segment: None,
            zero_pad: 4,
        }
    }
}

const MIN_SEGMENT_SAMPLES: usize = 8;

fn first_index(result: &EnsembleResult, t_transient: f64) -> usize {
    result
        .time_grid
        .iter()
        .position(|&t| t >= t_transient - 1e-9)
        .unwrap_or(result.time_grid.len())
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Estimates `V(ω) = 1 + 2γ_m ∫dτ C(τ) e^{−iωτ}` for the recorded observable
/// `quad`, where `C` is the stationary two-time correlation of its
/// fluctuation around the ensemble mean.
///
/// Positive-P stochastic averages equal normally (and time-) ordered quantum
/// averages, so `C` is taken without conjugation. The correlation is
/// obtained through the Wiener-Khinchin route: Hann-windowed segments are
/// Fourier transformed and `Re[X(ω) X(−ω)]` is averaged. Values at the
/// requested frequencies are linearly interpolated between FFT bins.
pub fn noise_spectrum(
    result: &EnsembleResult,
    quad: usize,
    gamma_m: f64,
    omega_grid: &[f64],
    opts: &SpectrumOptions,
) -> Result<SpectrumEstimate> {
    let dt = result.record_dt();
    let i0 = first_index(result, opts.t_transient);
    let available = result.time_grid.len().saturating_sub(i0);
    let seg_len = match opts.segment {
        Some(t) => (t / dt).round() as usize,
        None => available,
    };
    let required = seg_len.max(MIN_SEGMENT_SAMPLES);
    if dt <= 0.0 || available < required || seg_len < MIN_SEGMENT_SAMPLES {
        return Err(Error::SeriesTooShort {
            available,
            required,
        });
    }
    let nyquist = PI / dt;
    if let Some(w) = omega_grid.iter().find(|w| w.abs() > nyquist) {
        return Err(Error::InvalidParameter(format!(
            "omega {w} exceeds the Nyquist frequency {nyquist}"
        )));
    }

    let hop = if seg_len < available {
        (seg_len / 2).max(1)
    } else {
        seg_len
    };
    let starts: Vec<usize> = (0..)
        .map(|j| i0 + j * hop)
        .take_while(|s| s + seg_len <= result.time_grid.len())
        .collect();
    let nfft = seg_len.next_power_of_two() * opts.zero_pad.max(1);
    let window = hann(seg_len);
    let wnorm: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let mean = result.mean(quad);

    let bin_w = 2.0 * PI / (nfft as f64 * dt);
    let mut per_traj = vec![Vec::with_capacity(result.n_traj); omega_grid.len()];
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let mut psd = vec![0.0; nfft / 2 + 1];
    for traj in 0..result.n_traj {
        let series: Vec<C64> = result.series(traj, quad).collect();
        psd.iter_mut().for_each(|p| *p = 0.0);
        for &s in &starts {
            buf.iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
            for n in 0..seg_len {
                buf[n] = (series[s + n] - mean[s + n]) * window[n];
            }
            fft.process(&mut buf);
            for (k, p) in psd.iter_mut().enumerate() {
                let prod = buf[k] * buf[(nfft - k) % nfft];
                *p += prod.re;
            }
        }
        let scale = dt / (wnorm * starts.len() as f64);
        for (j, &w) in omega_grid.iter().enumerate() {
            let x = w.abs() / bin_w;
            let k = (x.floor() as usize).min(nfft / 2);
            let frac = x - k as f64;
            let p = if k + 1 <= nfft / 2 {
                psd[k] * (1.0 - frac) + psd[k + 1] * frac
            } else {
                psd[k]
            };
            per_traj[j].push(1.0 + 2.0 * gamma_m * p * scale);
        }
    }

    let (values, stderr) = per_traj.iter().map(|s| mean_and_stderr(s)).unzip();
    Ok(SpectrumEstimate {
        omega_grid: omega_grid.to_vec(),
        values,
        stderr,
    })
}

/// Finite-detection-time spectrum `1 + (2γ_m/T) Re⟨X_T(ω) X_T(−ω)⟩` of a
/// single rectangular window `[t_start, t_start + T]` per trajectory, with
/// `X_T(ω) = ∫ δX(t) e^{−iωt} dt`.
///
/// This is the statistic measured with a local oscillator that is set at
/// `t_start` and held fixed for the whole detection time.
pub fn detection_window_spectrum(
    result: &EnsembleResult,
    quad: usize,
    gamma_m: f64,
    omega_grid: &[f64],
    t_start: f64,
    window: f64,
) -> Result<SpectrumEstimate> {
    let dt = result.record_dt();
    let i0 = first_index(result, t_start);
    let n = (window / dt).round() as usize;
    let available = result.time_grid.len().saturating_sub(i0);
    if dt <= 0.0 || n > available {
        return Err(Error::WindowTooLong {
            window,
            span: available as f64 * dt,
        });
    }
    if n < MIN_SEGMENT_SAMPLES {
        return Err(Error::SeriesTooShort {
            available: n,
            required: MIN_SEGMENT_SAMPLES,
        });
    }
    let mean = result.mean(quad);
    let t_win = n as f64 * dt;
    let mut per_traj = vec![Vec::with_capacity(result.n_traj); omega_grid.len()];
    for traj in 0..result.n_traj {
        let series: Vec<C64> = result.series(traj, quad).skip(i0).take(n).collect();
        for (j, &w) in omega_grid.iter().enumerate() {
            let mut plus = C64::new(0.0, 0.0);
            let mut minus = C64::new(0.0, 0.0);
            for (m, x) in series.iter().enumerate() {
                let d = (x - mean[i0 + m]) * dt;
                let ph = C64::from_polar(1.0, -w * m as f64 * dt);
                plus += d * ph;
                minus += d * ph.conj();
            }
            per_traj[j].push(1.0 + 2.0 * gamma_m * (plus * minus).re / t_win);
        }
    }
    let (values, stderr) = per_traj.iter().map(|s| mean_and_stderr(s)).unzip();
    Ok(SpectrumEstimate {
        omega_grid: omega_grid.to_vec(),
        values,
        stderr,
    })
}

/// Mean within-window variance of observable `quad` over consecutive
/// windows of duration `window` after `t_transient`.
///
/// Each window's record is centred on its own mean, so a slowly drifting
/// reference only contributes within the window. Complex positive-P
/// samples give the real part of `⟨δX²⟩`.
pub fn windowed_variance(
    result: &EnsembleResult,
    quad: usize,
    window: f64,
    t_transient: f64,
) -> Result<f64> {
    let dt = result.record_dt();
    let i0 = first_index(result, t_transient);
    let available = result.time_grid.len().saturating_sub(i0);
    let span = available.saturating_sub(1) as f64 * dt;
    if dt <= 0.0 || window > span + 1e-9 {
        return Err(Error::WindowTooLong { window, span });
    }
    let n = ((window / dt).round() as usize + 1).min(available);
    if n < 2 {
        return Err(Error::SeriesTooShort {
            available: n,
            required: 2,
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for traj in 0..result.n_traj {
        let series: Vec<C64> = result.series(traj, quad).skip(i0).collect();
        for chunk in series.chunks_exact(n) {
            let m = chunk.iter().sum::<C64>() / n as f64;
            let v: C64 = chunk.iter().map(|x| (x - m) * (x - m)).sum::<C64>() / n as f64;
            total += v.re;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Least-squares line through `(x, y)`: `(slope, intercept, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{
        run_ensemble, FnObserver, ObservableFn, OrnsteinUhlenbeck, SdeModel, TrajectoryConfig,
    };

    struct Frozen;
    impl SdeModel for Frozen {
        fn name(&self) -> &str {
            "frozen-vacuum"
        }
        fn dim(&self) -> usize {
            1
        }
        fn n_noises(&self) -> usize {
            1
        }
        fn drift(&self, _s: &[C64], _t: f64, out: &mut [C64]) {
            out[0] = C64::new(0.0, 0.0);
        }
        fn noise_increment(&self, _s: &[C64], _t: f64, _dw: &[f64], out: &mut [C64]) {
            out[0] = C64::new(0.0, 0.0);
        }
    }

    fn quadrature() -> Vec<ObservableFn> {
        vec![Box::new(|s: &[C64]| s[0] + s[0].conj())]
    }

    #[test]
    fn frozen_vacuum_is_exactly_shot_noise() {
        let cfg = TrajectoryConfig::new(0.05, 30.0, 1, 5);
        let obs = quadrature();
        let res = run_ensemble(&Frozen, &cfg, 8, &[C64::new(0.0, 0.0)], |_| {
            FnObserver(&obs)
        })
        .unwrap();
        let s = noise_spectrum(
            &res,
            0,
            1.0,
            &[0.0, 0.5, 1.0, 3.0],
            &SpectrumOptions::default(),
        )
        .unwrap();
        assert!(s.values.iter().all(|&v| v == 1.0));
        assert!(s.stderr.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn short_series_is_rejected_with_required_length() {
        let cfg = TrajectoryConfig::new(0.5, 12.0, 1, 5);
        let obs = quadrature();
        let res = run_ensemble(&Frozen, &cfg, 2, &[C64::new(0.0, 0.0)], |_| {
            FnObserver(&obs)
        })
        .unwrap();
        let err = noise_spectrum(&res, 0, 1.0, &[0.0], &SpectrumOptions::default()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::SeriesTooShort {
                    available: 5,
                    required: 8
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn ou_spectrum_is_lorentzian() {
        // Re X of dX = -X dt + dW: C(τ) = e^{-|τ|}/2, ∫C e^{-iωτ} = 1/(1+ω²).
        let ou = OrnsteinUhlenbeck { gamma: 1.0, q: 1.0 };
        let cfg = TrajectoryConfig::new(0.02, 410.0, 5, 11);
        let obs: Vec<ObservableFn> = vec![Box::new(|s: &[C64]| C64::new(s[0].re, 0.0))];
        let res =
            run_ensemble(&ou, &cfg, 200, &[C64::new(0.0, 0.0)], |_| FnObserver(&obs)).unwrap();
        let omegas = [0.0, 1.0, 2.0];
        let opts = SpectrumOptions {
            segment: Some(40.0),
            ..Default::default()
        };
        let s = noise_spectrum(&res, 0, 0.5, &omegas, &opts).unwrap();
        for (j, &w) in omegas.iter().enumerate() {
            let expected = 1.0 + 1.0 / (1.0 + w * w);
            assert!(
                (s.values[j] - expected).abs() < 4.0 * s.stderr[j] + 0.03,
                "ω={w}: {} vs {expected}",
                s.values[j]
            );
        }
    }

    #[test]
    fn windowed_variance_limits() {
        let cfg = TrajectoryConfig::new(0.05, 30.0, 1, 5);
        let obs = quadrature();
        let frozen = run_ensemble(&Frozen, &cfg, 4, &[C64::new(0.3, 0.0)], |_| {
            FnObserver(&obs)
        })
        .unwrap();
        assert!(windowed_variance(&frozen, 0, 5.0, 10.0).unwrap().abs() < 1e-25);
        assert!(matches!(
            windowed_variance(&frozen, 0, 25.0, 10.0),
            Err(Error::WindowTooLong { .. })
        ));

        let ou = OrnsteinUhlenbeck { gamma: 1.0, q: 1.0 };
        let obs: Vec<ObservableFn> = vec![Box::new(|s: &[C64]| C64::new(s[0].re, 0.0))];
        let cfg = TrajectoryConfig::new(0.02, 410.0, 5, 3);
        let res =
            run_ensemble(&ou, &cfg, 100, &[C64::new(0.0, 0.0)], |_| FnObserver(&obs)).unwrap();
        let v = windowed_variance(&res, 0, 400.0, 10.0).unwrap();
        // Window mean removal biases by ≈ 2·τ_c/T = 0.5%.
        assert!((v - 0.5).abs() < 0.03, "{v}");
        let short = windowed_variance(&res, 0, 2.0, 10.0).unwrap();
        assert!(short < v);
    }
}
