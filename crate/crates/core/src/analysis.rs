//! Statistics over simulation output: Hurst exponent, histograms with
//! Gaussian fits, per-profile aggregates.

use serde::{Deserialize, Serialize};

use crate::decision::Profile;
use crate::error::{Error, Result};

/// Minimum number of index values accepted by [`hurst_rs`].
pub const HURST_MIN_LEN: usize = 256;
/// Smallest R/S window.
pub const HURST_MIN_WINDOW: usize = 16;
/// Minimum number of samples for [`return_histogram`].
pub const HISTOGRAM_MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
/// `None` with fewer than two points or zero spread in `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let slope_stderr = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        r2,
        slope_stderr,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of already sorted data, `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Distance between the 10th and 90th percentiles.
pub fn interdecile_range(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.9) - quantile_sorted(&v, 0.1)
}

/// Streaming mean / variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Sample standard deviation.
    pub fn sd(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sd() / (self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstEstimate {
    pub h: f64,
    pub stderr: f64,
    pub min_window: usize,
    pub max_window: usize,
    pub r2: f64,
    /// Difference between the slopes of the lower and upper halves of the
    /// window ladder. Large values flag a bent log-log curve.
    pub slope_break: f64,
}

/// Average rescaled range over disjoint windows of length `w`.
fn mean_rescaled_range(x: &[f64], w: usize) -> Option<f64> {
    let mut total = 0.0;
    let mut used = 0usize;
    for chunk in x.chunks_exact(w) {
        let m = chunk.iter().sum::<f64>() / w as f64;
        let mut cum = 0.0;
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        let mut ss = 0.0;
        for &v in chunk {
            let d = v - m;
            cum += d;
            lo = lo.min(cum);
            hi = hi.max(cum);
            ss += d * d;
        }
        let s = (ss / w as f64).sqrt();
        if s > 0.0 {
            total += (hi - lo) / s;
            used += 1;
        }
    }
    (used > 0).then(|| total / used as f64)
}

/// Anis–Lloyd expected R/S of white noise for window `w`, with the Peters
/// `(w - 1/2) / w` factor.
pub fn expected_rs_white_noise(w: usize) -> f64 {
    let n = w as f64;
    let sum: f64 = (1..w).map(|i| ((n - i as f64) / i as f64).sqrt()).sum();
    let gamma_ratio = if w <= 340 {
        // Gamma((n-1)/2) / (sqrt(pi) Gamma(n/2)) via log-gamma of half-integers
        (ln_gamma_half((w - 1) as u64) - ln_gamma_half(w as u64)).exp()
            / std::f64::consts::PI.sqrt()
    } else {
        1.0 / (n * std::f64::consts::FRAC_PI_2).sqrt()
    };
    (n - 0.5) / n * gamma_ratio * sum
}

/// ln Gamma(k / 2) for integer k >= 1.
fn ln_gamma_half(k: u64) -> f64 {
    // Gamma(1/2) = sqrt(pi), Gamma(1) = 1, Gamma(x + 1) = x Gamma(x)
    let (mut acc, mut x) = if k % 2 == 0 {
        (0.0, 1.0)
    } else {
        (0.5 * std::f64::consts::PI.ln(), 0.5)
    };
    let target = k as f64 / 2.0;
    while x < target - 1e-9 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Hurst exponent of an index series by rescaled-range analysis of its
/// log-returns.
pub fn hurst_rs(index: &[f64]) -> Result<HurstEstimate> {
    if index.len() < HURST_MIN_LEN {
        return Err(Error::InsufficientData {
            needed: HURST_MIN_LEN,
            got: index.len(),
        });
    }
    if index.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter(
            "index values must be finite and positive".into(),
        ));
    }
    let returns: Vec<f64> = index.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    hurst_rs_increments(&returns)
}

/// Hurst exponent of an increment series (already differenced).
///
/// Windows are powers of two from 16 to `len / 4`. Each window's mean R/S is
/// normalised by the Anis–Lloyd white-noise expectation, so uncorrelated
/// increments give 0.5 without the small-window bias of raw R/S.
pub fn hurst_rs_increments(x: &[f64]) -> Result<HurstEstimate> {
    let needed = HURST_MIN_LEN - 1;
    if x.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: x.len(),
        });
    }
    let max_window = x.len() / 4;
    let mut points = Vec::new();
    let mut w = HURST_MIN_WINDOW;
    let mut used_max = w;
    while w <= max_window {
        if let Some(rs) = mean_rescaled_range(x, w) {
            let adjusted = rs / expected_rs_white_noise(w) * (w as f64).sqrt();
            points.push(((w as f64).ln(), adjusted.ln()));
            used_max = w;
        }
        w *= 2;
    }
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed,
            got: x.len(),
        });
    }
    // adjusted = (R/S) / E[R/S] * sqrt(w): slope 0.5 for white noise
    let fit = linear_fit(&points).ok_or_else(|| Error::InsufficientData {
        needed,
        got: x.len(),
    })?;
    let half = points.len() / 2;
    let slope_break = if half >= 2 && points.len() - half >= 2 {
        let lo = linear_fit(&points[..half]).map_or(0.0, |f| f.slope);
        let hi = linear_fit(&points[half..]).map_or(0.0, |f| f.slope);
        hi - lo
    } else {
        0.0
    };
    Ok(HurstEstimate {
        h: fit.slope,
        stderr: fit.slope_stderr,
        min_window: HURST_MIN_WINDOW,
        max_window: used_max,
        r2: fit.r2,
        slope_break,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileStats {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

/// Per-profile aggregates indexed by [`Profile::index`]. A profile with no
/// members is `None`.
pub fn profile_wealth_stats(
    items: impl IntoIterator<Item = (Profile, f64)>,
) -> [Option<ProfileStats>; 3] {
    let mut buckets: [Vec<f64>; 3] = Default::default();
    for (profile, w) in items {
        buckets[profile.index()].push(w);
    }
    buckets.map(|b| {
        (!b.is_empty()).then(|| ProfileStats {
            mean: mean(&b),
            sd: std_dev(&b),
            count: b.len(),
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub gaussian: GaussianFit,
}

impl HistogramSummary {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

/// Sturges bin count `ceil(log2 n) + 1`.
pub fn sturges_bins(n: usize) -> usize {
    ((n as f64).log2().ceil() as usize + 1).max(1)
}

/// Fixed-width histogram over the data range with a least-squares Gaussian
/// fit to the bin counts.
pub fn return_histogram(samples: &[f64]) -> Result<HistogramSummary> {
    if samples.len() < HISTOGRAM_MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: HISTOGRAM_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let bins = sturges_bins(samples.len());
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
    edges[bins] = hi;
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let m = mean(samples);
    let sd = std_dev(samples);
    let centers: Vec<f64> = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let gaussian = fit_gaussian(&centers, &ys, m, sd.max(width / 2.0));
    Ok(HistogramSummary {
        edges,
        counts,
        n: samples.len(),
        mean: m,
        sd,
        gaussian,
    })
}

fn gaussian_at(a: f64, mu: f64, sigma: f64, x: f64) -> f64 {
    a * (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp()
}

fn sse(xs: &[f64], ys: &[f64], p: [f64; 3]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (y - gaussian_at(p[0], p[1], p[2], x)).powi(2))
        .sum()
}

/// Levenberg–Marquardt fit of `a exp(-(x - mu)^2 / (2 sigma^2))`.
pub fn fit_gaussian(xs: &[f64], ys: &[f64], mu0: f64, sigma0: f64) -> GaussianFit {
    let peak = ys.iter().copied().fold(0.0, f64::max);
    let mut p = [peak, mu0, sigma0.abs().max(f64::MIN_POSITIVE)];
    let mut cost = sse(xs, ys, p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // J^T J and J^T r
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for (&x, &y) in xs.iter().zip(ys) {
            let [a, mu, s] = p;
            let e = (-(x - mu).powi(2) / (2.0 * s * s)).exp();
            let g = [e, a * e * (x - mu) / (s * s), a * e * (x - mu).powi(2) / (s * s * s)];
            let r = y - a * e;
            for i in 0..3 {
                jtr[i] += g[i] * r;
                for j in 0..3 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut m = jtj;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(step) = solve3(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let cand = [p[0] + step[0], p[1] + step[1], (p[2] + step[2]).abs()];
            let c = sse(xs, ys, cand);
            if c.is_finite() && c < cost && cand[2] > 0.0 {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                p = cand;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-12;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let my = mean(ys);
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - cost / ss_tot } else { 1.0 };
    GaussianFit {
        amplitude: p[0],
        center: p[1],
        width: p[2],
        r2,
    }
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if !d.is_finite() || d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = b[i];
        }
        *slot = det(&mk) / d;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn linear_fit_exact_line() {
        let pts: Vec<_> = (0..10).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let f = linear_fit(&pts).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!((f.intercept - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
    }

    #[test]
    fn anis_lloyd_matches_brute_force_gamma() {
        // w = 16: Gamma(7.5) / (sqrt(pi) Gamma(8)) computed directly
        let g75 = 1871.254305797788_f64; // Gamma(7.5)
        let g8 = 5040.0;
        let ratio = g75 / (std::f64::consts::PI.sqrt() * g8);
        let sum: f64 = (1..16).map(|i| ((16.0 - i as f64) / i as f64).sqrt()).sum();
        let expect = 15.5 / 16.0 * ratio * sum;
        assert!((expected_rs_white_noise(16) - expect).abs() < 1e-9);
        // continuity of the large-window branch
        let a = expected_rs_white_noise(340);
        let b = expected_rs_white_noise(341);
        assert!((b / a - 1.0).abs() < 0.01);
    }

    #[test]
    fn white_noise_hurst_is_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut level = 0.0f64;
        let index: Vec<f64> = (0..(1 << 14))
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                level += 0.01 * z;
                100.0 * level.exp()
            })
            .collect();
        let h = hurst_rs(&index).unwrap();
        assert!((h.h - 0.5).abs() < 0.05, "{h:?}");
        assert_eq!(h.min_window, 16);
        assert_eq!(h.max_window, 2048);
    }

    #[test]
    fn trend_is_persistent() {
        let index: Vec<f64> = (1..=4096).map(|t| t as f64).collect();
        let h = hurst_rs(&index).unwrap();
        assert!(h.h > 0.9, "{h:?}");
    }

    #[test]
    fn hurst_rejects_short_series() {
        assert!(matches!(
            hurst_rs(&vec![100.0; 100]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn single_member_profiles() {
        let stats = profile_wealth_stats([
            (Profile::Imitator, 10.0),
            (Profile::AntiImitator, 20.0),
        ]);
        let imit = stats[Profile::Imitator.index()].unwrap();
        assert_eq!((imit.mean, imit.sd, imit.count), (10.0, 0.0, 1));
        assert!(stats[Profile::RandomTrader.index()].is_none());
    }

    #[test]
    fn histogram_of_gaussian_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.3 + 2.0 * z
            })
            .collect();
        let h = return_histogram(&xs).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>() as usize, xs.len());
        assert_eq!(h.counts.len(), sturges_bins(xs.len()));
        assert!(h.gaussian.r2 > 0.98, "{:?}", h.gaussian);
        assert!((h.gaussian.center - 0.3).abs() < 0.15);
        assert!((h.gaussian.width - 2.0).abs() < 0.2);
        assert!(h.edges[0] <= xs.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn symmetric_data_has_small_mean() {
        let xs: Vec<f64> = (0..1000).flat_map(|i| [i as f64, -(i as f64)]).collect();
        let h = return_histogram(&xs).unwrap();
        assert!(h.mean.abs() < 2.0 * h.sd / (xs.len() as f64).sqrt());
    }

    #[test]
    fn histogram_needs_samples() {
        assert!(return_histogram(&[1.0; 50]).is_err());
        // constant data still produces one occupied bin
        let h = return_histogram(&[2.0; 200]).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 200);
    }

    #[test]
    fn running_stats_match_batch() {
        let xs = [1.0, 4.0, 2.5, -3.0, 8.0];
        let mut rs = RunningStats::default();
        xs.iter().for_each(|&x| rs.push(x));
        assert!((rs.mean - mean(&xs)).abs() < 1e-12);
        assert!((rs.sd() - std_dev(&xs)).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let v: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.5), 5.0);
        assert!((interdecile_range(&v) - 8.0).abs() < 1e-12);
    }
}
