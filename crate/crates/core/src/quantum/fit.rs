use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half the revival period 2π·1.51/Ω at Ω = 1.
pub const DEFAULT_MIN_SEPARATION: f64 = 4.7;
pub const MIN_PEAKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    RydbergDensity,
    Entropy,
    Echo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub kind: ObservableKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    ExpEnvelope,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub stderr: f64,
    pub n_points: usize,
}

/// Slope and its standard error by ordinary least squares.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, se)
}

/// Indices of strict local maxima above the median, thinned greedily from
/// the tallest so that accepted peaks are at least `min_sep` apart in time.
pub fn find_peaks(times: &[f64], values: &[f64], min_sep: f64) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut cand: Vec<usize> = (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > median)
        .collect();
    cand.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut kept: Vec<usize> = Vec::new();
    for i in cand {
        if kept.iter().all(|&k| (times[k] - times[i]).abs() >= min_sep) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

pub fn fit_decay_rate(series: &ObservableSeries, kind: FitKind) -> Result<DecayFit> {
    fit_decay_rate_with(series, kind, DEFAULT_MIN_SEPARATION)
}

/// `ExpEnvelope` regresses log(peak) on time; `Linear` regresses the raw
/// series. The rate is the magnitude of the slope.
pub fn fit_decay_rate_with(series: &ObservableSeries, kind: FitKind, min_sep: f64) -> Result<DecayFit> {
    let (t, v) = (&series.times, &series.values);
    if t.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), got: v.len() });
    }
    match kind {
        FitKind::Linear => {
            if t.len() < 3 {
                return Err(Error::InvalidParameter("linear fit needs at least 3 points".into()));
            }
            let (slope, se) = ols(t, v);
            Ok(DecayFit { rate: slope.abs(), stderr: se, n_points: t.len() })
        }
        FitKind::ExpEnvelope => {
            let peaks: Vec<usize> = find_peaks(t, v, min_sep).into_iter().filter(|&i| v[i] > 0.0).collect();
            if peaks.len() < MIN_PEAKS {
                return Err(Error::InsufficientPeaks { needed: MIN_PEAKS, found: peaks.len() });
            }
            let x: Vec<f64> = peaks.iter().map(|&i| t[i]).collect();
            let y: Vec<f64> = peaks.iter().map(|&i| v[i].ln()).collect();
            let (slope, se) = ols(&x, &y);
            Ok(DecayFit { rate: slope.abs(), stderr: se, n_points: peaks.len() })
        }
    }
}

/// Fit used for each observable: density revivals are centred on the
/// series mean before the envelope fit, echo peaks are fitted as they are,
/// and entropy growth is linear.
pub fn fit_observable(series: &ObservableSeries) -> Result<DecayFit> {
    match series.kind {
        ObservableKind::RydbergDensity => {
            let mean = series.values.iter().sum::<f64>() / series.values.len() as f64;
            let centred = ObservableSeries {
                kind: series.kind,
                times: series.times.clone(),
                values: series.values.iter().map(|v| v - mean).collect(),
            };
            fit_decay_rate(&centred, FitKind::ExpEnvelope)
        }
        ObservableKind::Echo => fit_decay_rate(series, FitKind::ExpEnvelope),
        ObservableKind::Entropy => fit_decay_rate(series, FitKind::Linear),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, t_end: f64, dt: f64) -> ObservableSeries {
        let times: Vec<f64> = (0..=((t_end / dt) as usize)).map(|k| k as f64 * dt).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        ObservableSeries { kind: ObservableKind::Echo, times, values }
    }

    #[test]
    fn synthetic_envelope() {
        let w = 1.0 / 1.51;
        let s = series(|t| (-0.02 * t).exp() * (w * t).cos().powi(2), 100.0, 0.01);
        let f = fit_decay_rate(&s, FitKind::ExpEnvelope).unwrap();
        assert!((f.rate - 0.02).abs() < 0.05 * 0.02, "{f:?}");
    }

    #[test]
    fn constant_linear() {
        let s = series(|_| 0.3, 10.0, 0.1);
        let f = fit_decay_rate(&s, FitKind::Linear).unwrap();
        assert!(f.rate.abs() < 1e-14 && f.stderr < 1e-14);
    }

    #[test]
    fn too_few_peaks() {
        let s = series(|t| (t * 0.5).sin(), 20.0, 0.1);
        assert!(matches!(fit_decay_rate(&s, FitKind::ExpEnvelope), Err(Error::InsufficientPeaks { .. })));
    }
}
