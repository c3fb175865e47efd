//! Empirical semivariogram estimation and the nugget + spherical model that
//! supplies the covariance function to kriging and the search radius to the
//! growth engine.

use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VariogramError {
    #[error("no point pairs within max_lag {0}")]
    EmptyVariogram(f64),
    #[error("need at least {needed} populated bins to fit, got {got}")]
    TooFewBins { needed: usize, got: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalVariogram {
    /// Lag bin centers, strictly increasing.
    pub lags: Vec<f64>,
    /// Semivariance per bin.
    pub gamma: Vec<f64>,
    /// Pair count per bin.
    pub pairs: Vec<usize>,
}

/// Nugget + spherical structure. The nugget is assigned to C(0), so
/// C(0) = c0 + c while C(0+) = c: a conditioning point at zero distance
/// reproduces its value exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalModel {
    pub nugget: f64,
    pub sill: f64,
    pub range: f64,
}

impl SphericalModel {
    pub fn new(nugget: f64, sill: f64, range: f64) -> Self {
        assert!(nugget >= 0.0 && sill >= 0.0 && range > 0.0);
        assert!(nugget + sill > 0.0);
        SphericalModel { nugget, sill, range }
    }

    /// Semivariance gamma(h). gamma(0) = 0 by definition.
    pub fn gamma(&self, h: f64) -> f64 {
        debug_assert!(h >= 0.0);
        if h == 0.0 {
            0.0
        } else if h >= self.range {
            self.nugget + self.sill
        } else {
            let r = h / self.range;
            self.nugget + self.sill * (1.5 * r - 0.5 * r * r * r)
        }
    }

    /// Covariance counterpart: C(h) = sill_total - gamma(h), C(0) = sill_total.
    pub fn covariance(&self, h: f64) -> f64 {
        self.nugget + self.sill - self.gamma(h)
    }

    /// Total sill C(0).
    pub fn total_sill(&self) -> f64 {
        self.nugget + self.sill
    }
}

/// Omnidirectional empirical semivariogram over (location, value) samples.
pub fn empirical_variogram(
    points: &[(Point, f64)],
    bin_width: f64,
    max_lag: f64,
) -> Result<EmpiricalVariogram, VariogramError> {
    if points.len() < 2 {
        return Err(VariogramError::TooFewPoints(points.len()));
    }
    assert!(bin_width > 0.0 && max_lag > 0.0);
    let nbins = (max_lag / bin_width).ceil() as usize;
    let mut acc = vec![0.0f64; nbins];
    let mut cnt = vec![0usize; nbins];
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let h = points[i].0.dist(&points[j].0);
            if h > max_lag {
                continue;
            }
            let k = ((h / bin_width) as usize).min(nbins - 1);
            let d = points[i].1 - points[j].1;
            acc[k] += d * d;
            cnt[k] += 1;
        }
    }
    let mut lags = Vec::new();
    let mut gamma = Vec::new();
    let mut pairs = Vec::new();
    for k in 0..nbins {
        if cnt[k] > 0 {
            lags.push((k as f64 + 0.5) * bin_width);
            gamma.push(acc[k] / (2.0 * cnt[k] as f64));
            pairs.push(cnt[k]);
        }
    }
    if lags.is_empty() {
        return Err(VariogramError::EmptyVariogram(max_lag));
    }
    Ok(EmpiricalVariogram { lags, gamma, pairs })
}

/// Weighted least-squares fit of (nugget, sill, range), weights n_k / h_k^2.
///
/// The range enters nonlinearly, so it is scanned on a grid and refined by
/// golden-section search; nugget and sill are solved linearly (clamped to be
/// nonnegative) for each candidate range.
pub fn fit_spherical(ev: &EmpiricalVariogram) -> Result<SphericalModel, VariogramError> {
    if ev.lags.len() < 3 {
        return Err(VariogramError::TooFewBins { needed: 3, got: ev.lags.len() });
    }
    let max_lag = *ev.lags.last().unwrap();
    let min_lag = ev.lags[0];

    let sse = |a: f64| -> (f64, f64, f64) {
        // WLS for gamma_hat ~ c0 + c * base(h; a), in centered form to avoid
        // cancellation when base(h; a) is nearly constant over the lags.
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for k in 0..ev.lags.len() {
            let h = ev.lags[k];
            let w = ev.pairs[k] as f64 / (h * h);
            sw += w;
            sx += w * spherical_base(h, a);
            sy += w * ev.gamma[k];
        }
        let (xbar, ybar) = (sx / sw, sy / sw);
        let (mut vxx, mut vxy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..ev.lags.len() {
            let h = ev.lags[k];
            let w = ev.pairs[k] as f64 / (h * h);
            let x = spherical_base(h, a);
            let y = ev.gamma[k];
            vxx += w * (x - xbar) * (x - xbar);
            vxy += w * (x - xbar) * (y - ybar);
            sxx += w * x * x;
            sxy += w * x * y;
        }
        let (mut c0, mut c) = if vxx > 1e-12 * sw {
            (ybar - (vxy / vxx) * xbar, vxy / vxx)
        } else {
            (ybar, 0.0)
        };
        if c < 0.0 {
            c = 0.0;
            c0 = ybar;
        }
        if c0 < 0.0 {
            c0 = 0.0;
            c = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
        }
        let mut err = 0.0;
        for k in 0..ev.lags.len() {
            let h = ev.lags[k];
            let w = ev.pairs[k] as f64 / (h * h);
            let r = c0 + c * spherical_base(h, a) - ev.gamma[k];
            err += w * r * r;
        }
        (err, c0, c)
    };

    // Coarse scan, then golden-section refinement around the best candidate.
    let mut best_a = min_lag;
    let mut best_err = f64::INFINITY;
    let steps = 400;
    for i in 0..=steps {
        let a = min_lag + (max_lag - min_lag) * i as f64 / steps as f64;
        if a <= 0.0 {
            continue;
        }
        let (err, _, _) = sse(a);
        if err < best_err {
            best_err = err;
            best_a = a;
        }
    }
    let span = (max_lag - min_lag) / steps as f64;
    let (mut lo, mut hi) = ((best_a - span).max(min_lag * 0.5), (best_a + span).min(max_lag));
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if sse(m1).0 < sse(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let a = 0.5 * (lo + hi);
    let (_, c0, c) = sse(a);
    if c0 + c <= 0.0 {
        return Err(VariogramError::TooFewBins { needed: 3, got: ev.lags.len() });
    }
    Ok(SphericalModel { nugget: c0, sill: c, range: a })
}

fn spherical_base(h: f64, a: f64) -> f64 {
    if h >= a {
        1.0
    } else {
        let r = h / a;
        1.5 * r - 0.5 * r * r * r
    }
}
