//! Spike and burst statistics of a sampled membrane potential.

use crate::error::{HrError, Result};

/// Interspike intervals longer than this multiple of the median start a new
/// burst.
pub const BURST_GAP_FACTOR: f64 = 3.0;

/// ISI statistics are NaN when fewer than two spikes were found.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeMetrics {
    pub spike_times: Vec<f64>,
    pub intervals: Vec<f64>,
    pub isi_mean: f64,
    /// Population standard deviation.
    pub isi_std: f64,
    pub isi_cv: f64,
    pub bursts: usize,
}

impl SpikeMetrics {
    pub fn spike_count(&self) -> usize {
        self.spike_times.len()
    }
}

/// Upward crossings `u[i-1] <= threshold < u[i]`, located by linear
/// interpolation.
pub fn spike_train_metrics(series: &[(f64, f64)], threshold: f64) -> Result<SpikeMetrics> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if let Some(w) = series.windows(2).find(|w| !(w[1].0 > w[0].0)) {
        return Err(HrError::InvalidParameter(format!(
            "sample times must increase ({} then {})",
            w[0].0, w[1].0
        )));
    }
    let spike_times: Vec<f64> = series
        .windows(2)
        .filter(|w| w[0].1 <= threshold && threshold < w[1].1)
        .map(|w| {
            let ((t0, u0), (t1, u1)) = (w[0], w[1]);
            t0 + (threshold - u0) / (u1 - u0) * (t1 - t0)
        })
        .collect();
    let intervals: Vec<f64> = spike_times.windows(2).map(|w| w[1] - w[0]).collect();

    let (mut isi_mean, mut isi_std, mut isi_cv) = (f64::NAN, f64::NAN, f64::NAN);
    let mut bursts = usize::from(!spike_times.is_empty());
    if !intervals.is_empty() {
        let n = intervals.len() as f64;
        isi_mean = intervals.iter().sum::<f64>() / n;
        isi_std = (intervals.iter().map(|x| (x - isi_mean).powi(2)).sum::<f64>() / n).sqrt();
        isi_cv = isi_std / isi_mean;
        let median = median(&intervals);
        bursts += intervals.iter().filter(|&&x| x > BURST_GAP_FACTOR * median).count();
    }
    Ok(SpikeMetrics {
        spike_times,
        intervals,
        isi_mean,
        isi_std,
        isi_cv,
        bursts,
    })
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|i| {
                let t = t_end * i as f64 / n as f64;
                (t, f(t))
            })
            .collect()
    }

    #[test]
    fn constant_has_no_spikes() {
        let m = spike_train_metrics(&sampled(|_| 1.0, 10.0, 100), 0.5).unwrap();
        assert_eq!(m.spike_count(), 0);
        assert_eq!(m.bursts, 0);
        assert!(m.isi_cv.is_nan());
    }

    #[test]
    fn sine_crossings() {
        let s = sampled(|t| (2.0 * std::f64::consts::PI * t).sin(), 3.0, 3000);
        let m = spike_train_metrics(&s, 0.0).unwrap();
        assert_eq!(m.spike_count(), 3);
        for isi in &m.intervals {
            assert!((isi - 1.0).abs() < 1e-9, "{isi}");
        }
        assert!(m.isi_cv < 1e-9);
        assert_eq!(m.bursts, 1);
    }

    #[test]
    fn interpolates_crossing() {
        let m = spike_train_metrics(&[(0.0, 0.0), (1.0, 2.0)], 0.5).unwrap();
        assert_eq!(m.spike_times, vec![0.25]);
    }

    #[test]
    fn counts_bursts_from_gaps() {
        // three bursts of four spikes, unit spacing inside, gap 20 between
        let mut times = Vec::new();
        for b in 0..3 {
            for k in 0..4 {
                times.push(b as f64 * 23.0 + k as f64);
            }
        }
        let mut series = Vec::new();
        for &t in &times {
            series.push((t - 0.1, 0.0));
            series.push((t + 0.1, 1.0));
        }
        let m = spike_train_metrics(&series, 0.5).unwrap();
        assert_eq!(m.spike_count(), 12);
        assert_eq!(m.bursts, 3);
        assert!(m.isi_cv > 0.1);
    }

    #[test]
    fn rejects_unordered_times() {
        assert!(spike_train_metrics(&[(0.0, 0.0), (0.0, 1.0)], 0.5).is_err());
        assert!(spike_train_metrics(&[(1.0, 0.0), (0.5, 1.0)], 0.5).is_err());
    }
}
