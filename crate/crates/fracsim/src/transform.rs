//! Normal-score transform between the empirical folded-azimuth distribution
//! and the standard normal, plus circular-angle utilities.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("need at least 2 distinct finite values, got {0}")]
    DegenerateData(usize),
    #[error("empty input")]
    Empty,
}

/// Rank-based quantile mapping to N(0,1). Knots pair sorted original values
/// with Hazen plotting-position scores y_k = Phi^-1((k - 0.5)/n); tied values
/// collapse to one knot with the average of their rank scores.
#[derive(Debug, Clone)]
pub struct NormalScoreTable {
    z: Vec<f64>,
    y: Vec<f64>,
}

impl NormalScoreTable {
    pub fn build(values: &[f64]) -> Result<Self, TransformError> {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.len() < 2 {
            return Err(TransformError::DegenerateData(sorted.len()));
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        let std_normal = Normal::standard();
        let mut z = Vec::new();
        let mut y = Vec::new();
        let mut k = 0usize;
        while k < sorted.len() {
            let mut j = k;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[k] {
                j += 1;
            }
            // Average the rank scores of the tied group.
            let mut acc = 0.0;
            for r in k..=j {
                acc += std_normal.inverse_cdf((r as f64 + 0.5) / n);
            }
            z.push(sorted[k]);
            y.push(acc / (j - k + 1) as f64);
            k = j + 1;
        }
        if z.len() < 2 {
            return Err(TransformError::DegenerateData(1));
        }
        Ok(NormalScoreTable { z, y })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.z.iter().copied().zip(self.y.iter().copied())
    }

    /// Forward transform: piecewise-linear through knots, linear extrapolation
    /// from the boundary knots outside.
    pub fn to_normal(&self, z: f64) -> f64 {
        interp(&self.z, &self.y, z)
    }

    /// Back transform, clamped to the folded-angle domain [0, 180).
    pub fn from_normal(&self, y: f64) -> f64 {
        let z = interp(&self.y, &self.z, y);
        z.clamp(0.0, 180.0 - f64::EPSILON * 180.0)
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let (i0, i1) = if x <= xs[0] {
        (0, 1)
    } else if x >= xs[n - 1] {
        (n - 2, n - 1)
    } else {
        let i = xs.partition_point(|v| *v < x);
        (i - 1, i)
    };
    let t = (x - xs[i0]) / (xs[i1] - xs[i0]);
    ys[i0] + t * (ys[i1] - ys[i0])
}

/// Fold an azimuth to the orientation domain [0, 180).
pub fn fold_azimuth(a: f64) -> f64 {
    let f = a.rem_euclid(180.0);
    if f == 180.0 {
        0.0
    } else {
        f
    }
}

/// Directional mean and dispersion by the resultant-vector method.
///
/// `period` is 180 for axial (folded) data (angles are doubled before
/// averaging) or 360 for directed data.
pub fn circular_stats(angles: &[f64], period: f64) -> Result<(f64, f64), TransformError> {
    if angles.is_empty() {
        return Err(TransformError::Empty);
    }
    let k = 360.0 / period;
    let (mut s, mut c) = (0.0, 0.0);
    for a in angles {
        let r = (k * a).to_radians();
        s += r.sin();
        c += r.cos();
    }
    let n = angles.len() as f64;
    let mean = (s.atan2(c).to_degrees() / k).rem_euclid(period);
    let resultant = (s * s + c * c).sqrt() / n;
    let std = if resultant >= 1.0 {
        0.0
    } else if resultant <= 0.0 {
        f64::INFINITY
    } else {
        (-2.0 * resultant.ln()).sqrt().to_degrees() / k
    };
    Ok((mean, std))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent inverse normal CDF oracle: bisection on Phi computed from
    /// an erf series, deliberately not using statrs.
    fn phi_oracle(x: f64) -> f64 {
        // erf via Abramowitz-Stegun-free Taylor/continued approach: use the
        // Maclaurin series, valid and convergent for the |x| <= 6 we test.
        let z = x / std::f64::consts::SQRT_2;
        let mut term = z;
        let mut sum = z;
        for n in 1..200 {
            term *= -z * z / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        let erf = 2.0 / std::f64::consts::PI.sqrt() * sum;
        0.5 * (1.0 + erf)
    }

    fn inv_phi_oracle(p: f64) -> f64 {
        let (mut lo, mut hi) = (-8.0, 8.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_oracle(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn build_table_three_values() {
        let t = NormalScoreTable::build(&[10.0, 20.0, 30.0]).unwrap();
        let knots: Vec<_> = t.knots().collect();
        let expected = [inv_phi_oracle(1.0 / 6.0), 0.0, inv_phi_oracle(5.0 / 6.0)];
        for (i, (z, y)) in knots.iter().enumerate() {
            assert_eq!(*z, [10.0, 20.0, 30.0][i]);
            assert!((y - expected[i]).abs() < 1e-9, "knot {i}: {y} vs {}", expected[i]);
        }
        let mean: f64 = knots.iter().map(|(_, y)| y).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn build_table_symmetric_pair() {
        let t = NormalScoreTable::build(&[-3.0, 3.0]).unwrap();
        let knots: Vec<_> = t.knots().collect();
        assert!(knots[0].1 < 0.0 && knots[1].1 > 0.0);
        assert!((knots[0].1 + knots[1].1).abs() < 1e-12);
    }

    #[test]
    fn build_table_constant_is_error() {
        assert!(NormalScoreTable::build(&[5.0, 5.0, 5.0]).is_err());
        assert!(NormalScoreTable::build(&[5.0]).is_err());
    }

    #[test]
    fn round_trip_at_knots() {
        let vals = [3.0, 17.0, 42.0, 91.0, 150.0];
        let t = NormalScoreTable::build(&vals).unwrap();
        for v in vals {
            assert!((t.from_normal(t.to_normal(v)) - v).abs() < 1e-12);
        }
        // Median maps to the center of the score scale.
        assert!(t.to_normal(42.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_random_draws() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let vals: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..180.0)).collect();
        let t = NormalScoreTable::build(&vals).unwrap();
        for _ in 0..500 {
            let z = rng.random_range(1.0..179.0);
            let back = t.from_normal(t.to_normal(z));
            assert!((back - z).abs() < 1e-9, "{z} -> {back}");
        }
    }

    #[test]
    fn scores_match_hazen_order_statistics() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..180.0)).collect();
        let t = NormalScoreTable::build(&vals).unwrap();
        let mut scores: Vec<f64> = vals.iter().map(|v| t.to_normal(*v)).collect();
        scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = vals.len() as f64;
        let mean: f64 = scores.iter().sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        for (k, s) in scores.iter().enumerate() {
            let want = inv_phi_oracle((k as f64 + 0.5) / n);
            assert!((s - want).abs() < 1e-9);
        }
    }

    #[test]
    fn fold_examples() {
        assert_eq!(fold_azimuth(300.0), 120.0);
        assert_eq!(fold_azimuth(120.0), 120.0);
        assert_eq!(fold_azimuth(359.5), 179.5);
        assert_eq!(fold_azimuth(-10.0), 170.0);
    }

    #[test]
    fn circular_stats_examples() {
        let (m, s) = circular_stats(&[10.0, 10.0], 360.0).unwrap();
        assert!((m - 10.0).abs() < 1e-9 && s.abs() < 1e-6);
        // 0 and 180 are the same orientation family under period 180.
        let (m, s) = circular_stats(&[0.0, 180.0], 180.0).unwrap();
        assert!(m.abs() < 1e-9 || (m - 180.0).abs() < 1e-9);
        assert!(s.abs() < 1e-6);
        // Hand computation for {60, 80}, period 360: resultant bisects.
        let (m, _) = circular_stats(&[60.0, 80.0], 360.0).unwrap();
        assert!((m - 70.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn fold_idempotent(a in -720.0..720.0f64) {
            prop_assert_eq!(fold_azimuth(fold_azimuth(a)), fold_azimuth(a));
            prop_assert!((0.0..180.0).contains(&fold_azimuth(a)));
        }

        #[test]
        fn to_normal_monotone(seed in 0u64..50) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..180.0)).collect();
            let t = NormalScoreTable::build(&vals).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=180 {
                let y = t.to_normal(i as f64);
                prop_assert!(y >= prev);
                prev = y;
            }
        }
    }
}
