//! Sample statistics used by the traffic analyzer.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("lag {lag} too large for series of length {len}")]
    LagTooLarge { lag: usize, len: usize },
    #[error("byte index {0} out of range")]
    ByteIndex(usize),
}

fn need(got: usize, needed: usize) -> Result<(), StatsError> {
    if got < needed {
        Err(StatsError::InsufficientData { needed, got })
    } else {
        Ok(())
    }
}

/// Mean, standard deviation (n-1), extremes and nearest-rank p99.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub p99: f64,
}

pub fn summarize(samples: &[f64]) -> Result<Summary, StatsError> {
    need(samples.len(), 1)?;
    // Welford: exact on constant input.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (i, &x) in samples.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
        min = min.min(x);
        max = max.max(x);
    }
    let n = samples.len();
    let std = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (n * 99).div_ceil(100).max(1);
    Ok(Summary {
        count: n,
        mean: mean.clamp(min, max),
        std,
        min,
        max,
        p99: sorted[rank - 1],
    })
}

/// Pearson correlation. `None` when either series has zero variance.
///
/// Integer-valued input (byte columns, counters) is accumulated exactly in
/// 128-bit integers, so affine pairs give exactly ±1. Other input uses the
/// corrected two-pass algorithm.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    need(x.len(), 2)?;
    let constant = |s: &[f64]| s.iter().all(|&v| v == s[0]);
    if constant(x) || constant(y) {
        return Ok(None);
    }
    let (cov, vx, vy) = match integer_moments(x, y) {
        Some(m) => m,
        None => float_moments(x, y),
    };
    if vx <= 0.0 || vy <= 0.0 {
        return Ok(None);
    }
    Ok(Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0)))
}

const EXACT_LIMIT: f64 = (1u64 << 24) as f64;

/// `(n·Σxy − Σx·Σy, n·Σx² − (Σx)², n·Σy² − (Σy)²)` in exact arithmetic, or
/// `None` if any value is non-integral or too large.
fn integer_moments(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    if x.len() as f64 > EXACT_LIMIT {
        return None;
    }
    let exact = |v: f64| v.fract() == 0.0 && v.abs() <= EXACT_LIMIT;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&a, &b) in x.iter().zip(y) {
        if !exact(a) || !exact(b) {
            return None;
        }
        let (a, b) = (a as i128, b as i128);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let n = x.len() as i128;
    Some((
        (n * sxy - sx * sy) as f64,
        (n * sxx - sx * sx) as f64,
        (n * syy - sy * sy) as f64,
    ))
}

fn float_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut dx, mut dy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a - mx, b - my);
        dx += a;
        dy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    // dx, dy are the rounding residue of the means.
    (sxy - dx * dy / n, sxx - dx * dx / n, syy - dy * dy / n)
}

/// Pearson r between `series[..n-lag]` and `series[lag..]`.
pub fn autocorrelation(series: &[f64], lag: usize) -> Result<Option<f64>, StatsError> {
    if lag == 0 || series.len() <= lag + 1 {
        return Err(StatsError::LagTooLarge {
            lag,
            len: series.len(),
        });
    }
    pearson(&series[..series.len() - lag], &series[lag..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLengths {
    pub max_ascending_run: usize,
    pub max_descending_run: usize,
    /// Mean length of maximal strictly monotonic segments (either direction)
    /// of at least two values; 1.0 when there are none.
    pub mean_run: f64,
}

impl RunLengths {
    pub fn max_run(&self) -> usize {
        self.max_ascending_run.max(self.max_descending_run)
    }
}

/// Lengths, in values, of strictly increasing / decreasing stretches.
pub fn monotonic_run_lengths(series: &[f64]) -> Result<RunLengths, StatsError> {
    need(series.len(), 2)?;
    let mut max_up = 1;
    let mut max_down = 1;
    let mut up = 1;
    let mut down = 1;
    let mut runs: Vec<usize> = Vec::new();
    for w in series.windows(2) {
        if w[1] > w[0] {
            if down > 1 {
                runs.push(down);
            }
            down = 1;
            up += 1;
        } else if w[1] < w[0] {
            if up > 1 {
                runs.push(up);
            }
            up = 1;
            down += 1;
        } else {
            runs.extend([up, down].into_iter().filter(|&r| r > 1));
            up = 1;
            down = 1;
        }
        max_up = max_up.max(up);
        max_down = max_down.max(down);
    }
    runs.extend([up, down].into_iter().filter(|&r| r > 1));
    let mean_run = if runs.is_empty() {
        1.0
    } else {
        runs.iter().sum::<usize>() as f64 / runs.len() as f64
    };
    Ok(RunLengths {
        max_ascending_run: max_up,
        max_descending_run: max_down,
        mean_run,
    })
}

/// Shannon entropy of a byte histogram, in bits.
pub fn byte_entropy_bits(bytes: &[u8]) -> f64 {
    if bytes.is_empty() {
        return 0.0;
    }
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[usize::from(b)] += 1;
    }
    let n = bytes.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

pub const KDE_GRID_POINTS: usize = 512;
/// Grid half-margin beyond the sample extremes, in bandwidths.
pub const KDE_MARGIN_BANDWIDTHS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub enum DensityEstimate {
    Smooth {
        /// `(value, density)` pairs on an evenly spaced grid.
        grid: Vec<(f64, f64)>,
        bandwidth: f64,
    },
    /// All samples share one value; no smooth density exists.
    Spike { value: f64 },
}

impl DensityEstimate {
    /// Trapezoidal integral over the grid; a spike counts as unit mass.
    pub fn integral(&self) -> f64 {
        match self {
            DensityEstimate::Spike { .. } => 1.0,
            DensityEstimate::Smooth { grid, .. } => grid
                .windows(2)
                .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
                .sum(),
        }
    }

    /// Grid value closest to `x`.
    pub fn density_near(&self, x: f64) -> f64 {
        match self {
            DensityEstimate::Spike { value } => {
                if *value == x {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            DensityEstimate::Smooth { grid, .. } => grid
                .iter()
                .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
                .map_or(0.0, |p| p.1),
        }
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    // Linear interpolation between closest ranks.
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb: `0.9 · min(σ, IQR/1.34) · n^(-1/5)`. Falls
/// back to σ when the IQR is zero.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64, StatsError> {
    let s = summarize(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { s.std.min(iqr / 1.34) } else { s.std };
    Ok(0.9 * spread * (samples.len() as f64).powf(-0.2))
}

/// Gaussian KDE on a 512-point grid over `[min − 4h, max + 4h]`.
pub fn density_estimate(
    samples: &[f64],
    bandwidth: Option<f64>,
) -> Result<DensityEstimate, StatsError> {
    need(samples.len(), 1)?;
    let s = summarize(samples)?;
    if s.max == s.min {
        return Ok(DensityEstimate::Spike { value: s.min });
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 => h,
        _ => silverman_bandwidth(samples)?,
    };
    let lo = s.min - KDE_MARGIN_BANDWIDTHS * h;
    let hi = s.max + KDE_MARGIN_BANDWIDTHS * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    let grid = (0..KDE_GRID_POINTS)
        .map(|i| {
            let x = lo + step * i as f64;
            let d: f64 = samples
                .iter()
                .map(|&xi| {
                    let u = (x - xi) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            (x, d * norm)
        })
        .collect();
    Ok(DensityEstimate::Smooth { grid, bandwidth: h })
}
