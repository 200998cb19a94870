use serde::{Deserialize, Serialize};

use crate::io::TraceRecord;

/// Fixed-width histogram; `edges` has one more entry than `counts`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub const MIN_BINS: usize = 10;
const MAX_BINS: usize = 1000;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Freedman-Diaconis binning over `[min, max]` with at least
/// [`MIN_BINS`] bins. Identical values get unit-width bins around them.
pub fn histogram(values: &[f64]) -> Histogram {
    if values.is_empty() {
        return Histogram {
            edges: Vec::new(),
            counts: Vec::new(),
        };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut lo, mut hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    let bins = if width > 0.0 {
        (((hi - lo) / width).ceil() as usize).clamp(MIN_BINS, MAX_BINS)
    } else {
        MIN_BINS
    };
    let step = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|k| lo + step * k as f64).collect();
    edges[bins] = hi;
    let mut counts = vec![0; bins];
    for &v in values {
        let k = (((v - lo) / step).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { edges, counts }
}

/// Time-to-target over a set of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtsSummary {
    /// Mean over the runs that reached the target.
    pub mean_s: Option<f64>,
    pub reached: usize,
    pub runs: usize,
}

impl TtsSummary {
    pub fn not_reached(&self) -> usize {
        self.runs - self.reached
    }
}

impl std::fmt::Display for TtsSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.mean_s {
            Some(t) if self.not_reached() == 0 => write!(f, "{t:.6} s"),
            Some(t) => write!(f, "{t:.6} s (not reached {}/{})", self.not_reached(), self.runs),
            None => write!(f, "not reached ({}/{})", self.not_reached(), self.runs),
        }
    }
}

/// First elapsed time at which `quality(best_energy) >= target`.
pub fn first_hit(trace: &[TraceRecord], target: f64, quality: impl Fn(f64) -> f64) -> Option<f64> {
    trace
        .iter()
        .find(|r| quality(r.best_energy) >= target)
        .map(|r| r.elapsed_s)
}

/// Averages [`first_hit`] over runs; runs that never hit are counted but
/// not averaged.
pub fn avg_tts<'a>(
    traces: impl IntoIterator<Item = &'a [TraceRecord]>,
    target: f64,
    quality: impl Fn(f64) -> f64 + Copy,
) -> TtsSummary {
    let mut hits = Vec::new();
    let mut runs = 0;
    for t in traces {
        runs += 1;
        if let Some(h) = first_hit(t, target, quality) {
            hits.push(h);
        }
    }
    let mean_s = if hits.is_empty() {
        None
    } else {
        Some(hits.iter().sum::<f64>() / hits.len() as f64)
    };
    TtsSummary {
        mean_s,
        reached: hits.len(),
        runs,
    }
}
