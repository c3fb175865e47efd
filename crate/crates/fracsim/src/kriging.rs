//! Simple / ordinary kriging solves that parameterize the local Gaussian in
//! sequential simulation.

use crate::geometry::Point;
use crate::variogram::SphericalModel;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KrigingError {
    #[error("no conditioning points")]
    NoData,
    #[error("singular kriging system (n = {0})")]
    SingularSystem(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KrigingMethod {
    /// Solve exactly the written equations: weights from C lambda = c0, mean
    /// supplied by the caller.
    #[default]
    Simple,
    /// Lagrange-augmented unbiased system.
    Ordinary,
}

#[derive(Debug, Clone)]
pub struct KrigingResult {
    pub estimate: f64,
    pub variance: f64,
    pub weights: Vec<f64>,
    /// True when the variance had to be clamped into [0, C(0)].
    pub clamped: bool,
}

/// Solve the kriging system at `target` given conditioning `points`.
///
/// `mean` is the prior mean used by simple kriging (0 in score space, the
/// sample mean in raw mode); ordinary kriging ignores it.
///
/// Near-duplicate points (closer than 1e-6 * range to each other) are
/// collapsed to the one nearest the target before solving, and a diagonal
/// jitter of 1e-10 * C(0) stabilizes the factorization. Weights are then
/// polished by iterative refinement against the unjittered matrix.
pub fn solve(
    points: &[(Point, f64)],
    target: Point,
    model: &SphericalModel,
    method: KrigingMethod,
    mean: f64,
) -> Result<KrigingResult, KrigingError> {
    if points.is_empty() {
        return Err(KrigingError::NoData);
    }
    let pts = dedupe(points, &target, model.range);
    let n = pts.len();
    let c0 = model.total_sill();

    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = model.covariance(pts[i].0.dist(&pts[j].0));
        }
    }
    let rhs = DVector::from_iterator(n, pts.iter().map(|(p, _)| model.covariance(p.dist(&target))));

    let weights = match method {
        KrigingMethod::Simple => {
            let mut jittered = cov.clone();
            for i in 0..n {
                jittered[(i, i)] += 1e-10 * c0;
            }
            let chol = match jittered.clone().cholesky() {
                Some(c) => c,
                None => return Err(KrigingError::SingularSystem(n)),
            };
            let mut lambda = chol.solve(&rhs);
            // Iterative refinement against the unjittered system.
            for _ in 0..2 {
                let resid = &rhs - &cov * &lambda;
                lambda += chol.solve(&resid);
            }
            lambda
        }
        KrigingMethod::Ordinary => {
            let mut aug = DMatrix::zeros(n + 1, n + 1);
            aug.view_mut((0, 0), (n, n)).copy_from(&cov);
            for i in 0..n {
                aug[(i, i)] += 1e-10 * c0;
                aug[(i, n)] = 1.0;
                aug[(n, i)] = 1.0;
            }
            let mut b = DVector::zeros(n + 1);
            b.rows_mut(0, n).copy_from(&rhs);
            b[n] = 1.0;
            let lu = aug.lu();
            match lu.solve(&b) {
                Some(sol) => sol,
                None => return Err(KrigingError::SingularSystem(n)),
            }
        }
    };

    let (estimate, raw_variance) = match method {
        KrigingMethod::Simple => {
            let mut est = mean;
            let mut var = c0;
            for i in 0..n {
                est += weights[i] * (pts[i].1 - mean);
                var -= weights[i] * rhs[i];
            }
            (est, var)
        }
        KrigingMethod::Ordinary => {
            let mu = weights[n];
            let mut est = 0.0;
            let mut var = c0 - mu;
            for i in 0..n {
                est += weights[i] * pts[i].1;
                var -= weights[i] * rhs[i];
            }
            (est, var)
        }
    };

    if !estimate.is_finite() || !raw_variance.is_finite() {
        return Err(KrigingError::SingularSystem(n));
    }
    let variance = raw_variance.clamp(0.0, c0);
    Ok(KrigingResult {
        estimate,
        variance,
        weights: weights.iter().take(n).copied().collect(),
        clamped: variance != raw_variance,
    })
}

/// Collapse clusters of near-coincident points, keeping the member nearest to
/// the target.
fn dedupe(points: &[(Point, f64)], target: &Point, range: f64) -> Vec<(Point, f64)> {
    let tol = 1e-6 * range;
    let mut kept: Vec<(Point, f64)> = Vec::with_capacity(points.len());
    for &(p, v) in points {
        match kept.iter_mut().find(|(q, _)| q.dist(&p) < tol) {
            Some(existing) => {
                if p.dist(target) < existing.0.dist(target) {
                    *existing = (p, v);
                }
            }
            None => kept.push((p, v)),
        }
    }
    kept
}

/// One sample from N(estimate, variance) on the provided stream.
pub fn local_gaussian_draw<R: Rng>(result: &KrigingResult, rng: &mut R) -> f64 {
    if result.variance <= 0.0 {
        return result.estimate;
    }
    Normal::new(result.estimate, result.variance.sqrt())
        .expect("finite parameters")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    #[test]
    fn exact_interpolation_at_conditioning_point() {
        let m = SphericalModel::new(1.0, 2.0, 50.0);
        let r = solve(&[(pt(3.0, 4.0), 1.7)], pt(3.0, 4.0), &m, KrigingMethod::Simple, 0.0)
            .unwrap();
        assert!((r.estimate - 1.7).abs() < 1e-10);
        assert!(r.variance.abs() < 1e-9);
    }

    #[test]
    fn uncorrelated_point_returns_prior() {
        let m = SphericalModel::new(1.0, 2.0, 50.0);
        let r = solve(&[(pt(100.0, 0.0), 5.0)], pt(0.0, 0.0), &m, KrigingMethod::Simple, 0.0)
            .unwrap();
        assert!(r.weights[0].abs() < 1e-12);
        assert!(r.estimate.abs() < 1e-12);
        assert!((r.variance - m.total_sill()).abs() < 1e-10);
    }

    #[test]
    fn two_point_weights_match_hand_solve() {
        let m = SphericalModel::new(0.0, 1.0, 50.0);
        let pts = [(pt(0.0, 0.0), 1.0), (pt(20.0, 0.0), 2.0)];
        let target = pt(10.0, 0.0);
        let r = solve(&pts, target, &m, KrigingMethod::Simple, 0.0).unwrap();
        // Direct 2x2 oracle: [c11 c12; c12 c22] lambda = [c10; c20].
        let c11 = m.covariance(0.0);
        let c12 = m.covariance(20.0);
        let c10 = m.covariance(10.0);
        let det = c11 * c11 - c12 * c12;
        let l1 = (c11 * c10 - c12 * c10) / det;
        assert!((r.weights[0] - l1).abs() < 1e-10);
        assert!((r.weights[1] - l1).abs() < 1e-10, "symmetric by construction");
        let est = l1 * 1.0 + l1 * 2.0;
        assert!((r.estimate - est).abs() < 1e-10);
    }

    #[test]
    fn residual_bound_and_order_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = SphericalModel::new(0.3, 1.2, 40.0);
        for _ in 0..100 {
            let n = rng.random_range(1..=16);
            let pts: Vec<(Point, f64)> = (0..n)
                .map(|_| {
                    (
                        pt(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)),
                        rng.random_range(-2.0..2.0),
                    )
                })
                .collect();
            let target = pt(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            let r = solve(&pts, target, &m, KrigingMethod::Simple, 0.0).unwrap();
            // Residual against the exact (unjittered) system.
            let kept = super::dedupe(&pts, &target, m.range);
            let mut max_resid = 0.0f64;
            for i in 0..kept.len() {
                let mut lhs = 0.0;
                for j in 0..kept.len() {
                    lhs += r.weights[j] * m.covariance(kept[i].0.dist(&kept[j].0));
                }
                max_resid = max_resid.max((lhs - m.covariance(kept[i].0.dist(&target))).abs());
            }
            assert!(max_resid <= 1e-10 * m.total_sill(), "residual {max_resid}");
            assert!(r.variance >= 0.0 && r.variance <= m.total_sill());

            // Permuting the conditioning points permutes the weights.
            let mut perm: Vec<usize> = (0..pts.len()).collect();
            perm.reverse();
            let pts2: Vec<_> = perm.iter().map(|&i| pts[i]).collect();
            let r2 = solve(&pts2, target, &m, KrigingMethod::Simple, 0.0).unwrap();
            assert!((r.estimate - r2.estimate).abs() < 1e-9);
            assert!((r.variance - r2.variance).abs() < 1e-9);
        }
    }

    #[test]
    fn ordinary_weights_sum_to_one() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let m = SphericalModel::new(0.5, 1.0, 30.0);
        for _ in 0..20 {
            let n = rng.random_range(2..=10);
            let pts: Vec<(Point, f64)> = (0..n)
                .map(|_| {
                    (
                        pt(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)),
                        rng.random_range(0.0..180.0),
                    )
                })
                .collect();
            let target = pt(25.0, 25.0);
            let r = solve(&pts, target, &m, KrigingMethod::Ordinary, 0.0).unwrap();
            let sum: f64 = r.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-8, "sum {sum}");
        }
    }

    #[test]
    fn near_duplicates_do_not_blow_up() {
        let m = SphericalModel::new(0.0, 1.0, 50.0);
        let pts = [
            (pt(5.0, 5.0), 1.0),
            (pt(5.0 + 1e-9, 5.0), 2.0),
            (pt(30.0, 5.0), 3.0),
        ];
        let r = solve(&pts, pt(10.0, 5.0), &m, KrigingMethod::Simple, 0.0).unwrap();
        assert!(r.estimate.is_finite());
        assert_eq!(r.weights.len(), 2);
    }

    #[test]
    fn draw_determinism_and_degenerate_variance() {
        let res = KrigingResult { estimate: 1.5, variance: 0.0, weights: vec![], clamped: false };
        let mut rng = substream(1, &[0]);
        assert_eq!(local_gaussian_draw(&res, &mut rng), 1.5);

        let res = KrigingResult { estimate: 0.3, variance: 0.8, weights: vec![], clamped: false };
        let a = local_gaussian_draw(&res, &mut substream(7, &[1, 2]));
        let b = local_gaussian_draw(&res, &mut substream(7, &[1, 2]));
        assert_eq!(a, b);
    }

    #[test]
    fn draw_moments_match() {
        let res = KrigingResult { estimate: 0.0, variance: 1.0, weights: vec![], clamped: false };
        let mut rng = substream(123, &[9]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| local_gaussian_draw(&res, &mut rng)).collect();
        let mean: f64 = draws.iter().sum::<f64>() / n as f64;
        let var: f64 = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
