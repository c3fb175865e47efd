//! Synthetic stand-in datasets with the published summary statistics, used as
//! fixtures for tests, examples, and the committed data files.

use crate::geometry::{direction, Point, Trace, TraceKind};
use crate::region::Rect;
use crate::rng::substream;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Build one trace: `n_segments` steps of `seg_len` from `start`, segment
/// azimuths jittered around `azimuth`.
fn wiggly_trace<R: Rng>(
    rng: &mut R,
    start: Point,
    azimuth: f64,
    n_segments: usize,
    seg_len: f64,
    wiggle_std: f64,
) -> Trace {
    let wiggle = Normal::new(0.0, wiggle_std).unwrap();
    let mut verts = vec![start];
    let mut pos = start;
    for _ in 0..n_segments {
        let az = azimuth + wiggle.sample(rng);
        let (dx, dy) = direction(az);
        pos = Point { x: pos.x + dx * seg_len, y: pos.y + dy * seg_len };
        verts.push(pos);
    }
    Trace::from_polyline(&verts, TraceKind::Known).unwrap()
}

fn uniform_point<R: Rng>(rng: &mut R, r: &Rect) -> Point {
    Point {
        x: rng.random_range(r.xmin..r.xmax),
        y: rng.random_range(r.ymin..r.ymax),
    }
}

/// Unimodal set: folded azimuths around 70 with std about 12, segment
/// length 10, in a 1000 x 1000 domain.
pub fn example1_traces(seed: u64) -> (Vec<Trace>, Rect) {
    let domain = Rect::new(0.0, 0.0, 1000.0, 1000.0);
    let mut rng = substream(seed, &[0xe1]);
    let margin = Rect::new(60.0, 60.0, 940.0, 940.0);
    let base = Normal::new(70.0, 11.0).unwrap();
    let traces = (0..80)
        .map(|_| {
            let start = uniform_point(&mut rng, &margin);
            let folded = base.sample(&mut rng);
            // Random travel direction along the same orientation.
            let az = if rng.random::<bool>() { folded } else { folded + 180.0 };
            wiggly_trace(&mut rng, start, az, 4, 10.0, 4.0)
        })
        .collect();
    (traces, domain)
}

/// Large-scale set: dominant folded orientation 120 degrees and mean segment
/// length exactly 2289.27 (lengths are rescaled to pin the mean).
pub fn example2_traces(seed: u64) -> (Vec<Trace>, Rect) {
    const MEAN_LEN: f64 = 2289.27;
    let domain = Rect::new(0.0, 0.0, 100_000.0, 100_000.0);
    let mut rng = substream(seed, &[0xe2]);
    let start_area = Rect::new(20_000.0, 20_000.0, 70_000.0, 70_000.0);
    let az_dist = Normal::new(120.0, 10.0).unwrap();
    // Draw per-segment lengths first so they can be rescaled exactly.
    let mut plans: Vec<(Point, f64, Vec<f64>)> = Vec::new();
    let mut lengths = Vec::new();
    for _ in 0..120 {
        let start = uniform_point(&mut rng, &start_area);
        let folded = az_dist.sample(&mut rng);
        let az = if rng.random::<bool>() { folded } else { folded + 180.0 };
        let n = rng.random_range(1..=3usize);
        let ls: Vec<f64> = (0..n)
            .map(|_| {
                let l: f64 = rng.random_range(500.0..5000.0);
                lengths.push(l);
                l
            })
            .collect();
        plans.push((start, az, ls));
    }
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let scale = MEAN_LEN / mean;
    let wiggle = Normal::new(0.0, 4.0).unwrap();
    let traces = plans
        .into_iter()
        .map(|(start, az, ls)| {
            let mut verts = vec![start];
            let mut pos = start;
            for l in ls {
                let (dx, dy) = direction(az + wiggle.sample(&mut rng));
                pos = Point { x: pos.x + dx * l * scale, y: pos.y + dy * l * scale };
                verts.push(pos);
            }
            Trace::from_polyline(&verts, TraceKind::Known).unwrap()
        })
        .collect();
    (traces, domain)
}

#[derive(Debug, Clone)]
pub struct Example3 {
    pub traces: Vec<Trace>,
    pub domain: Rect,
    /// Center region hidden for the verification protocol.
    pub hidden: Rect,
}

/// Four-mode set with raw-azimuth peaks {20, 110, 185, 290} spread uniformly
/// over a 1380 x 1140 domain; the center rectangle is the hidden region.
pub fn example3_traces(seed: u64) -> Example3 {
    let domain = Rect::new(0.0, 0.0, 1380.0, 1140.0);
    let hidden = Rect::new(345.0, 285.0, 1035.0, 855.0);
    let mut rng = substream(seed, &[0xe3]);
    const MODES: [f64; 4] = [20.0, 110.0, 185.0, 290.0];
    let margin = Rect::new(85.0, 85.0, 1295.0, 1055.0);
    let mode_jitter = Normal::new(0.0, 6.0).unwrap();
    let traces = (0..280)
        .map(|i| {
            let start = uniform_point(&mut rng, &margin);
            let az = MODES[i % 4] + mode_jitter.sample(&mut rng);
            wiggly_trace(&mut rng, start, az, 5, 15.0, 2.5)
        })
        .collect();
    Example3 { traces, domain, hidden }
}
