//! Quantification of a trace set: length statistics, azimuth histograms, peak
//! detection, and the histogram comparison used for verification.

use crate::geometry::Trace;
use crate::transform::{circular_stats, fold_azimuth};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("cannot analyze an empty trace set")]
    EmptyInput,
}

/// Fixed-width angle histogram over [0, period). Raw azimuths use period 360,
/// folded azimuths period 180; the default bin width is 10 degrees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleHistogram {
    pub period: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl AngleHistogram {
    pub fn new(period: f64, bin_width: f64) -> Self {
        assert!(period > 0.0 && bin_width > 0.0);
        let n = (period / bin_width).round() as usize;
        assert!(n >= 2, "need at least 2 bins");
        AngleHistogram { period, bin_width, counts: vec![0; n] }
    }

    pub fn add(&mut self, angle: f64) {
        let a = angle.rem_euclid(self.period);
        let i = ((a / self.bin_width) as usize).min(self.counts.len() - 1);
        self.counts[i] += 1;
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Merge bins (theta, theta + 180) of a 360-degree histogram.
    pub fn folded(&self) -> AngleHistogram {
        assert_eq!(self.period, 360.0);
        let half = self.counts.len() / 2;
        let counts = (0..half)
            .map(|i| self.counts[i] + self.counts[i + half])
            .collect();
        AngleHistogram { period: 180.0, bin_width: self.bin_width, counts }
    }
}

pub fn angle_histogram(angles: &[f64], period: f64, bin_width: f64) -> AngleHistogram {
    let mut h = AngleHistogram::new(period, bin_width);
    for &a in angles {
        h.add(a);
    }
    h
}

/// Equal-width length histogram with the bin count from Sturges' rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub min: f64,
    pub max: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

pub fn length_histogram(values: &[f64]) -> LengthHistogram {
    assert!(!values.is_empty());
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bins = ((values.len() as f64).log2().ceil() as usize + 1).max(1);
    let width = if max > min { (max - min) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for &v in values {
        let i = (((v - min) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    LengthHistogram { min, max, bin_width: width, counts }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStats {
    pub n_traces: usize,
    pub n_segments: usize,
    pub segment_length_mean: f64,
    pub segment_length_min: f64,
    pub segment_length_max: f64,
    pub trace_length_mean: f64,
    pub trace_length_min: f64,
    pub trace_length_max: f64,
    pub folded_mean: f64,
    pub folded_std: f64,
    pub raw_histogram: AngleHistogram,
    pub folded_histogram: AngleHistogram,
    pub segment_length_histogram: LengthHistogram,
}

pub fn compute_stats(traces: &[Trace]) -> Result<TraceStats, AnalyzeError> {
    if traces.is_empty() || traces.iter().all(|t| t.segment_count() == 0) {
        return Err(AnalyzeError::EmptyInput);
    }
    let mut seg_lengths = Vec::new();
    let mut raw = AngleHistogram::new(360.0, 10.0);
    let mut folded_angles = Vec::new();
    let mut trace_lengths = Vec::new();
    for t in traces {
        if t.segment_count() == 0 {
            continue;
        }
        trace_lengths.push(t.length());
        for s in t.segments() {
            seg_lengths.push(s.length);
            raw.add(s.azimuth);
            folded_angles.push(fold_azimuth(s.azimuth));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (fm, fs) = circular_stats(&folded_angles, 180.0).expect("nonempty");
    Ok(TraceStats {
        n_traces: trace_lengths.len(),
        n_segments: seg_lengths.len(),
        segment_length_mean: mean(&seg_lengths),
        segment_length_min: seg_lengths.iter().cloned().fold(f64::INFINITY, f64::min),
        segment_length_max: seg_lengths.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        trace_length_mean: mean(&trace_lengths),
        trace_length_min: trace_lengths.iter().cloned().fold(f64::INFINITY, f64::min),
        trace_length_max: trace_lengths.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        folded_mean: fm,
        folded_std: fs,
        folded_histogram: raw.folded(),
        raw_histogram: raw,
        segment_length_histogram: length_histogram(&seg_lengths),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Peak {
    pub angle: f64,
    pub prominence: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

/// Circular local maxima with topographic prominence at least
/// `min_prominence` (default: 10% of the max bin count). The reported angle is
/// the count-weighted centroid of the bins above half the peak height.
pub fn find_peaks(hist: &AngleHistogram, min_prominence: Option<f64>) -> PeakSet {
    let counts = &hist.counts;
    let n = counts.len();
    let max = counts.iter().cloned().max().unwrap_or(0);
    let threshold = min_prominence.unwrap_or(0.1 * max as f64).max(f64::MIN_POSITIVE);
    let mut peaks = Vec::new();
    // Start the circular run scan at a run boundary so plateaus that wrap the
    // 0/period seam are seen as a single run. All-equal means no peaks.
    let Some(start) = (0..n).find(|&i| counts[(i + n - 1) % n] != counts[i]) else {
        return PeakSet { peaks };
    };
    let mut offset = 0;
    while offset < n {
        let i = (start + offset) % n;
        let c = counts[i];
        // A plateau runs from i through i + run - 1 (circularly).
        let mut run = 1;
        while run < n - offset && counts[(i + run) % n] == c {
            run += 1;
        }
        let prev = counts[(i + n - 1) % n];
        let next = counts[(i + run) % n];
        if prev < c && next < c {
            let rep = (i + run / 2) % n;
            let prominence = prominence_of(counts, rep);
            if prominence >= threshold {
                peaks.push(Peak {
                    angle: centroid_angle(hist, i as i64, (i + run - 1) as i64),
                    prominence,
                    count: c,
                });
            }
        }
        offset += run;
    }
    peaks.sort_by(|a, b| a.angle.partial_cmp(&b.angle).unwrap());
    PeakSet { peaks }
}

/// Height above the key saddle: in each direction, walk until a strictly
/// higher bin and record the minimum along the way; the saddle is the larger
/// of the two minima. The global maximum uses the histogram minimum.
fn prominence_of(counts: &[u64], peak: usize) -> f64 {
    let n = counts.len();
    let h = counts[peak];
    let walk = |step: i64| -> Option<u64> {
        let mut low = h;
        let mut k = peak as i64;
        for _ in 0..n {
            k = (k + step).rem_euclid(n as i64);
            let c = counts[k as usize];
            if c > h {
                return Some(low);
            }
            low = low.min(c);
        }
        None // never met a higher bin: global max
    };
    match (walk(-1), walk(1)) {
        (Some(a), Some(b)) => (h - a.max(b)) as f64,
        _ => (h - counts.iter().cloned().min().unwrap_or(0)) as f64,
    }
}

/// Weighted circular centroid of the plateau [i, j] extended outward while
/// bins stay above half the peak's height. Heights and weights are measured
/// above the histogram minimum so a uniform offset leaves the angle unchanged.
fn centroid_angle(hist: &AngleHistogram, i: i64, j: i64) -> f64 {
    let counts = &hist.counts;
    let n = counts.len();
    let base = counts.iter().cloned().min().unwrap_or(0) as f64;
    let h = counts[i.rem_euclid(n as i64) as usize] as f64 - base;
    let half = h / 2.0;
    let mut members: Vec<i64> = (i..=j).collect();
    for (start, step) in [(i, -1i64), (j, 1i64)] {
        let mut prev = h;
        let mut k = start;
        for _ in 0..n / 2 {
            k += step;
            let c = counts[k.rem_euclid(n as i64) as usize] as f64 - base;
            if c < half || c > prev {
                break;
            }
            members.push(k);
            prev = c;
        }
    }
    // Offsets are small relative to the period, so a plain weighted mean of
    // (possibly out-of-range) bin centers is safe; wrap at the end.
    let mut num = 0.0;
    let mut den = 0.0;
    for &k in &members {
        let c = counts[k.rem_euclid(n as i64) as usize] as f64 - base;
        num += c * (k as f64 + 0.5) * hist.bin_width;
        den += c;
    }
    (num / den).rem_euclid(hist.period)
}

/// Shortest angular distance on a circle of the given period.
pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakPair {
    pub angle_a: f64,
    pub angle_b: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakMatch {
    pub pairs: Vec<PeakPair>,
    pub unmatched_a: Vec<f64>,
    pub unmatched_b: Vec<f64>,
}

/// Greedy nearest-angle pairing: repeatedly match the globally closest
/// remaining (a, b) peak pair. Pairs come back in a's angle order.
pub fn match_peaks(a: &PeakSet, b: &PeakSet, period: f64) -> PeakMatch {
    let mut free_a: Vec<usize> = (0..a.peaks.len()).collect();
    let mut free_b: Vec<usize> = (0..b.peaks.len()).collect();
    let mut pairs = Vec::new();
    while !free_a.is_empty() && !free_b.is_empty() {
        let mut best = (f64::INFINITY, 0usize, 0usize);
        for (ia, &pa) in free_a.iter().enumerate() {
            for (ib, &pb) in free_b.iter().enumerate() {
                let d = circular_distance(a.peaks[pa].angle, b.peaks[pb].angle, period);
                if d < best.0 {
                    best = (d, ia, ib);
                }
            }
        }
        let pa = free_a.remove(best.1);
        let pb = free_b.remove(best.2);
        pairs.push(PeakPair {
            angle_a: a.peaks[pa].angle,
            angle_b: b.peaks[pb].angle,
            deviation: best.0,
        });
    }
    pairs.sort_by(|x, y| x.angle_a.partial_cmp(&y.angle_a).unwrap());
    PeakMatch {
        pairs,
        unmatched_a: free_a.iter().map(|&i| a.peaks[i].angle).collect(),
        unmatched_b: free_b.iter().map(|&i| b.peaks[i].angle).collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub stats_a: TraceStats,
    pub stats_b: TraceStats,
    pub peaks_a: PeakSet,
    pub peaks_b: PeakSet,
    pub matching: PeakMatch,
    pub folded_mean_delta: f64,
    pub folded_std_delta: f64,
}

pub fn compare_networks(a: &[Trace], b: &[Trace]) -> Result<ComparisonReport, AnalyzeError> {
    let stats_a = compute_stats(a)?;
    let stats_b = compute_stats(b)?;
    let peaks_a = find_peaks(&stats_a.raw_histogram, None);
    let peaks_b = find_peaks(&stats_b.raw_histogram, None);
    let matching = match_peaks(&peaks_a, &peaks_b, 360.0);
    Ok(ComparisonReport {
        folded_mean_delta: circular_distance(stats_a.folded_mean, stats_b.folded_mean, 180.0),
        folded_std_delta: (stats_a.folded_std - stats_b.folded_std).abs(),
        stats_a,
        stats_b,
        peaks_a,
        peaks_b,
        matching,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{direction, Point, TraceKind};
    use proptest::prelude::*;

    fn trace_at(x: f64, y: f64, azimuth: f64, len: f64) -> Trace {
        let (dx, dy) = direction(azimuth);
        let a = Point::new(x, y).unwrap();
        let b = Point::new(x + dx * len, y + dy * len).unwrap();
        Trace::from_polyline(&[a, b], TraceKind::Known).unwrap()
    }

    #[test]
    fn horizontal_unit_segment() {
        let t = trace_at(0.0, 0.0, 90.0, 1.0);
        let s = compute_stats(&[t]).unwrap();
        assert_eq!(s.n_segments, 1);
        assert!((s.segment_length_mean - 1.0).abs() < 1e-12);
        assert_eq!(s.raw_histogram.counts[9], 1); // [90, 100) bin
        assert!((s.folded_mean - 90.0).abs() < 1e-9);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(compute_stats(&[]), Err(AnalyzeError::EmptyInput)));
    }

    #[test]
    fn counts_sum_to_segment_count() {
        let traces: Vec<Trace> = (0..37)
            .map(|i| trace_at(i as f64 * 3.0, 0.0, (i * 17) as f64 % 360.0, 5.0))
            .collect();
        let s = compute_stats(&traces).unwrap();
        assert_eq!(s.raw_histogram.total() as usize, s.n_segments);
        assert_eq!(s.folded_histogram.total() as usize, s.n_segments);
        assert_eq!(
            s.segment_length_histogram.counts.iter().sum::<u64>() as usize,
            s.n_segments
        );
        assert!(s.segment_length_min <= s.segment_length_mean);
        assert!(s.segment_length_mean <= s.segment_length_max);
    }

    #[test]
    fn unimodal_normal_sample_has_single_peak_near_70() {
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let dist = rand_distr::Normal::new(70.0f64, 12.0).unwrap();
        let angles: Vec<f64> = (0..10_000)
            .map(|_| dist.sample(&mut rng).rem_euclid(180.0))
            .collect();
        let hist = angle_histogram(&angles, 180.0, 10.0);
        let peaks = find_peaks(&hist, None);
        assert_eq!(peaks.peaks.len(), 1, "peaks: {:?}", peaks.peaks);
        assert!(
            (peaks.peaks[0].angle - 70.0).abs() <= 5.0,
            "peak at {}",
            peaks.peaks[0].angle
        );
    }

    #[test]
    fn flat_histogram_has_no_peaks() {
        let hist = AngleHistogram { period: 360.0, bin_width: 10.0, counts: vec![7; 36] };
        assert!(find_peaks(&hist, None).peaks.is_empty());
    }

    #[test]
    fn four_mode_matching_example() {
        let mk = |angles: &[f64]| {
            let peaks = angles
                .iter()
                .map(|&a| Peak { angle: a, prominence: 10.0, count: 10 })
                .collect();
            PeakSet { peaks }
        };
        let a = mk(&[20.0, 110.0, 185.0, 290.0]);
        let b = mk(&[18.0, 85.0, 190.0, 275.0]);
        let m = match_peaks(&a, &b, 360.0);
        let devs: Vec<f64> = m.pairs.iter().map(|p| p.deviation).collect();
        assert_eq!(devs, vec![2.0, 25.0, 5.0, 15.0]);
        assert!(m.unmatched_a.is_empty() && m.unmatched_b.is_empty());
    }

    #[test]
    fn circular_wraparound_distance() {
        assert!((circular_distance(10.0, 170.0, 180.0) - 20.0).abs() < 1e-12);
        assert!((circular_distance(350.0, 5.0, 360.0) - 15.0).abs() < 1e-12);
        let a = PeakSet { peaks: vec![Peak { angle: 10.0, prominence: 1.0, count: 1 }] };
        let b = PeakSet { peaks: vec![Peak { angle: 170.0, prominence: 1.0, count: 1 }] };
        let m = match_peaks(&a, &b, 180.0);
        assert!((m.pairs[0].deviation - 20.0).abs() < 1e-12);
    }

    #[test]
    fn self_comparison_all_zero() {
        let traces: Vec<Trace> = [20.0, 20.0, 24.0, 110.0, 112.0, 185.0, 290.0, 288.0]
            .iter()
            .enumerate()
            .map(|(i, &a)| trace_at(i as f64 * 10.0, 0.0, a, 4.0))
            .collect();
        let rep = compare_networks(&traces, &traces).unwrap();
        assert!(rep.matching.pairs.iter().all(|p| p.deviation == 0.0));
        assert_eq!(rep.folded_mean_delta, 0.0);
        assert_eq!(rep.folded_std_delta, 0.0);
    }

    #[test]
    fn folded_equals_raw_with_opposite_bins_merged() {
        let angles = [5.0, 185.0, 95.0, 275.0, 275.0, 42.0];
        let raw = angle_histogram(&angles, 360.0, 10.0);
        let folded = raw.folded();
        for i in 0..18 {
            assert_eq!(folded.counts[i], raw.counts[i] + raw.counts[i + 18]);
        }
        let direct =
            angle_histogram(&angles.map(fold_azimuth), 180.0, 10.0);
        assert_eq!(folded.counts, direct.counts);
    }

    #[test]
    fn uniform_offset_preserves_peak_angles() {
        let mut counts = vec![3u64; 36];
        counts[7] = 30;
        counts[8] = 24;
        counts[20] = 28;
        let base = AngleHistogram { period: 360.0, bin_width: 10.0, counts: counts.clone() };
        let lifted = AngleHistogram {
            period: 360.0,
            bin_width: 10.0,
            counts: counts.iter().map(|c| c + 11).collect(),
        };
        let pa = find_peaks(&base, Some(5.0));
        let pb = find_peaks(&lifted, Some(5.0));
        assert_eq!(pa.peaks.len(), pb.peaks.len());
        for (x, y) in pa.peaks.iter().zip(&pb.peaks) {
            assert!((x.angle - y.angle).abs() < 1e-9);
            assert!((x.prominence - y.prominence).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn histogram_is_permutation_invariant(
            mut angles in proptest::collection::vec(0.0f64..360.0, 1..80),
            seed in 0u64..1000,
        ) {
            let h1 = angle_histogram(&angles, 360.0, 10.0);
            // Deterministic shuffle.
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            angles.shuffle(&mut rng);
            let h2 = angle_histogram(&angles, 360.0, 10.0);
            prop_assert_eq!(h1.counts, h2.counts);
        }

        #[test]
        fn peaks_sorted_and_prominent(
            counts in proptest::collection::vec(0u64..100, 36)
        ) {
            let hist = AngleHistogram { period: 360.0, bin_width: 10.0, counts };
            let peaks = find_peaks(&hist, None);
            let max = hist.counts.iter().cloned().max().unwrap_or(0) as f64;
            for w in peaks.peaks.windows(2) {
                prop_assert!(w[0].angle < w[1].angle);
            }
            for p in &peaks.peaks {
                prop_assert!(p.prominence >= 0.1 * max);
                prop_assert!((0.0..360.0).contains(&p.angle));
            }
        }
    }
}
