//! The growth-based sequential Gaussian simulation engine: seed initial
//! fracture segments, then sweep over all active tips, building sector
//! neighborhoods (plus one virtual point toward the nearest foreign segment),
//! kriging a local Gaussian for the next azimuth, and terminating traces on
//! intersection, domain boundary, or length limits.

use crate::config::{SeedMode, SimConfig, TransformMode};
use crate::geometry::{
    angular_diff, direction, wrap_360, Point, Sector, Segment, Side, Trace, TraceKind,
};
use crate::kriging::{self, KrigingMethod};
use crate::network::FractureNetwork;
use crate::rng::substream;
use crate::transform::{circular_stats, fold_azimuth, NormalScoreTable, TransformError};
use crate::variogram::{empirical_variogram, fit_spherical, SphericalModel, VariogramError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("no known traces to derive {0} from; set it explicitly in the config")]
    MissingParameter(&'static str),
    #[error("empty seeding region")]
    EmptyRegion,
    #[error("normal-score transform: {0}")]
    Transform(#[from] TransformError),
    #[error("variogram fit: {0}")]
    Variogram(#[from] VariogramError),
    #[error("hidden-midpoint seeding requested but no known traces fall in the unknown region")]
    NoHiddenTraces,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Intersection,
    LengthLimit,
    Boundary,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TerminationRecord {
    pub trace: usize,
    pub side: Side,
    pub reason: TerminationReason,
}

/// Resolved parameters actually used by the run, for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub segment_length: f64,
    pub angle_mean: f64,
    pub angle_std: f64,
    pub sector_radius: f64,
    pub variogram: SphericalModel,
    pub max_neighbors: usize,
    pub transform: TransformMode,
    pub kriging: KrigingMethod,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub iterations: u64,
    pub seed_count: usize,
    pub hidden_trace_count: usize,
    pub terminations: Vec<TerminationRecord>,
    /// Variance clamps observed in kriging results.
    pub clamp_count: u64,
    /// Singular-system fallbacks to unconditional draws.
    pub fallback_count: u64,
    pub effective: EffectiveParams,
}

pub struct SimOutput {
    pub network: FractureNetwork,
    pub report: RunReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TipState {
    Active,
    Terminated(TerminationReason),
}

#[derive(Debug, Clone)]
struct GrowthTip {
    trace: usize,
    side: Side,
    position: Point,
    azimuth: f64,
    accumulated: f64,
    state: TipState,
}

/// Value space the kriging runs in: raw folded degrees or normal scores.
enum ValueSpace {
    Raw { mean: f64, std: f64 },
    Nscore { table: NormalScoreTable },
}

impl ValueSpace {
    fn encode(&self, folded: f64) -> f64 {
        match self {
            ValueSpace::Raw { .. } => folded,
            ValueSpace::Nscore { table } => table.to_normal(folded),
        }
    }

    fn decode(&self, score: f64) -> f64 {
        match self {
            ValueSpace::Raw { .. } => fold_azimuth(score),
            ValueSpace::Nscore { table } => fold_azimuth(table.from_normal(score)),
        }
    }

    fn prior_mean(&self) -> f64 {
        match self {
            ValueSpace::Raw { mean, .. } => *mean,
            ValueSpace::Nscore { .. } => 0.0,
        }
    }

    fn unconditional_draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let score = match self {
            ValueSpace::Raw { mean, std } => {
                Normal::new(*mean, *std).expect("validated").sample(rng)
            }
            ValueSpace::Nscore { .. } => rng.sample(rand_distr::StandardNormal),
        };
        self.decode(score)
    }
}

struct Engine {
    net: FractureNetwork,
    tips: Vec<GrowthTip>,
    space: ValueSpace,
    model: SphericalModel,
    method: KrigingMethod,
    segment_length: f64,
    angle_std: f64,
    sector_radius: f64,
    max_neighbors: usize,
    max_trace_length: Option<f64>,
    clamp_count: u64,
    fallback_count: u64,
    terminations: Vec<TerminationRecord>,
}

pub fn run_simulation(cfg: &SimConfig, known: &[Trace]) -> Result<SimOutput, GrowthError> {
    let domain = cfg.domain_rect();
    let unknown = cfg.unknown_polygon();

    // Hidden-region protocol: known traces with arc midpoint inside the
    // unknown region are removed from conditioning. Traces whose midpoint is
    // outside are kept; if they poke into the region they are kept only when
    // long (at or above the configured length quantile).
    let hide_active = cfg.unknown_region.is_some();
    let long_threshold = length_quantile(known, cfg.long_fracture_quantile);
    let mut conditioning: Vec<Trace> = Vec::new();
    let mut hidden: Vec<Trace> = Vec::new();
    for t in known {
        if !hide_active {
            conditioning.push(t.clone());
            continue;
        }
        let mid = t.arc_midpoint();
        if unknown.contains(&mid) {
            hidden.push(t.clone());
        } else if t.segments().any(|s| unknown.contains(&s.midpoint()))
            && t.length() < long_threshold
        {
            // Short trace crossing the hidden square: not conditioning data.
            hidden.push(t.clone());
        } else {
            conditioning.push(t.clone());
        }
    }

    // Conditioning statistics of the folded azimuths.
    let folded: Vec<f64> = conditioning
        .iter()
        .flat_map(|t| t.segments().map(|s| s.folded_azimuth()))
        .collect();
    let (data_mean, data_std) = if folded.is_empty() {
        (None, None)
    } else {
        let (m, s) = circular_stats(&folded, 180.0).expect("nonempty");
        (Some(m), Some(s.clamp(1e-3, 89.0)))
    };
    let angle_mean = cfg
        .angle_mean
        .or(data_mean)
        .ok_or(GrowthError::MissingParameter("angle_mean"))?;
    let angle_std = cfg
        .angle_std
        .or(data_std)
        .ok_or(GrowthError::MissingParameter("angle_std"))?;
    let segment_length = match cfg.segment_length {
        Some(l) => l,
        None => {
            let (sum, n) = conditioning
                .iter()
                .flat_map(|t| t.segments())
                .fold((0.0, 0usize), |(s, n), seg| (s + seg.length, n + 1));
            if n == 0 {
                return Err(GrowthError::MissingParameter("segment_length"));
            }
            sum / n as f64
        }
    };

    let space = match cfg.transform {
        TransformMode::Raw => ValueSpace::Raw { mean: angle_mean, std: angle_std },
        TransformMode::Nscore => {
            ValueSpace::Nscore { table: NormalScoreTable::build(&folded)? }
        }
    };

    // Variogram: explicit model or fitted to the conditioning cloud values in
    // the same space that kriging interpolates.
    let model = match cfg.explicit_variogram() {
        Some(m) => m,
        None => {
            let samples: Vec<(Point, f64)> = conditioning
                .iter()
                .flat_map(|t| t.segments())
                .map(|s| (s.midpoint(), space.encode(s.folded_azimuth())))
                .collect();
            let max_lag = domain.diagonal() / 2.0;
            let ev = empirical_variogram(&samples, max_lag / 20.0, max_lag)?;
            fit_spherical(&ev)?
        }
    };
    let sector_radius = cfg.sector_radius.unwrap_or(model.range);

    let mut net = FractureNetwork::new(domain, sector_radius);
    for t in &conditioning {
        net.add_trace(t.clone());
    }

    let mut engine = Engine {
        net,
        tips: Vec::new(),
        space,
        model,
        method: cfg.kriging,
        segment_length,
        angle_std,
        sector_radius,
        max_neighbors: cfg.max_neighbors,
        max_trace_length: cfg.max_trace_length,
        clamp_count: 0,
        fallback_count: 0,
        terminations: Vec::new(),
    };

    let seed_count;
    if cfg.replay_known {
        // Re-emit every known trace verbatim from its midpoint.
        seed_count = known.len();
        for t in known {
            engine.replay_trace(t);
        }
    } else {
        let seeds = generate_seeds(cfg, &unknown, &hidden, &engine.space)?;
        seed_count = seeds.len();
        for (pos, az) in seeds {
            engine.plant_seed(pos, az);
        }
    }

    // Round-robin sweeps: every active tip grows one segment per iteration.
    let mut iterations = 0;
    for iter in 1..=cfg.max_iterations {
        let mut any_active = false;
        for i in 0..engine.tips.len() {
            if engine.tips[i].state == TipState::Active {
                engine.grow_step(i, cfg.rng_seed, iter);
                if engine.tips[i].state == TipState::Active {
                    any_active = true;
                }
            }
        }
        iterations = iter;
        if !any_active {
            break;
        }
    }
    for i in 0..engine.tips.len() {
        if engine.tips[i].state == TipState::Active {
            engine.terminate(i, TerminationReason::MaxIterations);
        }
    }

    let report = RunReport {
        iterations,
        seed_count,
        hidden_trace_count: hidden.len(),
        terminations: engine.terminations,
        clamp_count: engine.clamp_count,
        fallback_count: engine.fallback_count,
        effective: EffectiveParams {
            segment_length,
            angle_mean,
            angle_std,
            sector_radius,
            variogram: engine.model,
            max_neighbors: cfg.max_neighbors,
            transform: cfg.transform,
            kriging: cfg.kriging,
            rng_seed: cfg.rng_seed,
        },
    };
    Ok(SimOutput { network: engine.net, report })
}

/// Seed placement without growth, for protocol inspection.
pub fn preview_seeds(cfg: &SimConfig, known: &[Trace]) -> Result<Vec<(Point, f64)>, GrowthError> {
    let unknown = cfg.unknown_polygon();
    let long_threshold = length_quantile(known, cfg.long_fracture_quantile);
    let hide_active = cfg.unknown_region.is_some();
    let mut conditioning = Vec::new();
    let mut hidden = Vec::new();
    for t in known {
        if hide_active
            && (unknown.contains(&t.arc_midpoint())
                || (t.segments().any(|s| unknown.contains(&s.midpoint()))
                    && t.length() < long_threshold))
        {
            hidden.push(t.clone());
        } else {
            conditioning.push(t.clone());
        }
    }
    let folded: Vec<f64> = conditioning
        .iter()
        .flat_map(|t| t.segments().map(|s| s.folded_azimuth()))
        .collect();
    let mean = cfg.angle_mean.or_else(|| circular_stats(&folded, 180.0).ok().map(|x| x.0));
    let std = cfg.angle_std.or_else(|| circular_stats(&folded, 180.0).ok().map(|x| x.1));
    let space = ValueSpace::Raw {
        mean: mean.ok_or(GrowthError::MissingParameter("angle_mean"))?,
        std: std.ok_or(GrowthError::MissingParameter("angle_std"))?.clamp(1e-3, 89.0),
    };
    generate_seeds(cfg, &unknown, &hidden, &space)
}

fn length_quantile(traces: &[Trace], q: f64) -> f64 {
    let mut lens: Vec<f64> = traces.iter().map(|t| t.length()).collect();
    if lens.is_empty() {
        return f64::INFINITY;
    }
    lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((lens.len() as f64 - 1.0) * q).round() as usize;
    lens[idx.min(lens.len() - 1)]
}

fn generate_seeds(
    cfg: &SimConfig,
    unknown: &crate::region::Polygon,
    hidden: &[Trace],
    space: &ValueSpace,
) -> Result<Vec<(Point, f64)>, GrowthError> {
    let mut rng = substream(cfg.rng_seed, &[0x5eed]);
    let draw_direction = |rng: &mut ChaCha8Rng, space: &ValueSpace| {
        let folded = fold_azimuth(space.unconditional_draw(rng));
        if rng.random::<bool>() {
            folded
        } else {
            wrap_360(folded + 180.0)
        }
    };
    let n_uniform = match &cfg.seeds {
        SeedMode::Poisson { intensity } => {
            let area = unknown.area();
            if area <= 0.0 {
                return Err(GrowthError::EmptyRegion);
            }
            let lambda = intensity * area;
            if lambda <= 0.0 {
                0
            } else {
                Poisson::new(lambda).expect("positive lambda").sample(&mut rng) as usize
            }
        }
        SeedMode::FixedCount { count } => {
            if unknown.area() <= 0.0 {
                return Err(GrowthError::EmptyRegion);
            }
            *count
        }
        SeedMode::UserPoints { points } => {
            return Ok(points
                .iter()
                .map(|(x, y, az)| (Point { x: *x, y: *y }, wrap_360(*az)))
                .collect());
        }
        SeedMode::HiddenMidpoints => {
            if hidden.is_empty() {
                return Err(GrowthError::NoHiddenTraces);
            }
            return Ok(hidden
                .iter()
                .map(|t| (t.arc_midpoint(), t.midpoint_azimuth()))
                .collect());
        }
    };
    let mut seeds = Vec::with_capacity(n_uniform);
    for _ in 0..n_uniform {
        let p = unknown.sample_uniform(&mut rng);
        let az = draw_direction(&mut rng, space);
        seeds.push((p, az));
    }
    Ok(seeds)
}

impl Engine {
    /// Create a simulated trace for the seed and extend both sides by half a
    /// segment length, honoring intersection and boundary rules.
    fn plant_seed(&mut self, pos: Point, azimuth: f64) {
        let trace = self.net.add_trace(Trace {
            origin: pos,
            kind: TraceKind::Simulated,
            side_a: Vec::new(),
            side_b: Vec::new(),
        });
        for (side, az) in [(Side::A, azimuth), (Side::B, wrap_360(azimuth + 180.0))] {
            let tip_idx = self.tips.len();
            self.tips.push(GrowthTip {
                trace,
                side,
                position: pos,
                azimuth: az,
                accumulated: 0.0,
                state: TipState::Active,
            });
            self.extend_tip(tip_idx, az, self.segment_length / 2.0);
        }
    }

    /// Split a known trace at its arc midpoint into two replayed chains.
    fn replay_trace(&mut self, original: &Trace) {
        let verts = original.polyline();
        let total: f64 = original.length();
        let mid = original.arc_midpoint();
        // Find the vertex index after which the midpoint falls.
        let mut acc = 0.0;
        let mut split = 0;
        for i in 0..verts.len() - 1 {
            let step = verts[i].dist(&verts[i + 1]);
            if acc + step >= total / 2.0 - 1e-12 {
                split = i;
                break;
            }
            acc += step;
        }
        let mut side_b: Vec<Segment> = Vec::new();
        let mut side_a: Vec<Segment> = Vec::new();
        // Side B walks back toward the first vertex.
        let mut prev = mid;
        for i in (0..=split).rev() {
            if prev.dist(&verts[i]) > 1e-12 {
                side_b.push(Segment::new(prev, verts[i]).expect("nonzero"));
                prev = verts[i];
            }
        }
        // Stored side-B chains run outward; push order already matches.
        let mut prev = mid;
        for v in verts.iter().skip(split + 1) {
            if prev.dist(v) > 1e-12 {
                side_a.push(Segment::new(prev, *v).expect("nonzero"));
                prev = *v;
            }
        }
        self.net.add_trace(Trace {
            origin: mid,
            kind: TraceKind::Simulated,
            side_a,
            side_b,
        });
    }

    fn terminate(&mut self, tip_idx: usize, reason: TerminationReason) {
        let tip = &mut self.tips[tip_idx];
        tip.state = TipState::Terminated(reason);
        self.terminations.push(TerminationRecord {
            trace: tip.trace,
            side: tip.side,
            reason,
        });
    }

    /// Sector neighborhood plus the virtual halfway point toward the nearest
    /// foreign segment, truncated to the closest `max_neighbors` entries.
    fn gather_neighbors(&self, tip: &GrowthTip) -> Vec<(Point, f64)> {
        let sector = Sector::new(tip.position, tip.azimuth, self.angle_std, self.sector_radius);
        let own_len = self.net.traces[tip.trace].side(tip.side).len();
        let mut neighbors: Vec<(Point, f64)> = self
            .net
            .cloud_in_sector(&sector)
            .into_iter()
            .filter(|&id| {
                let src = self.net.cloud[id].source;
                // Skip the tip's own two most recent segments.
                !(src.trace == tip.trace && src.side == tip.side && src.index + 2 >= own_len)
            })
            .map(|id| (self.net.cloud[id].pos, self.net.cloud[id].folded_azimuth))
            .collect();
        if !neighbors.is_empty() {
            if let Some((seg_ref, _)) = self.net.nearest_segment(&tip.position, Some(tip.trace)) {
                let seg = self.net.segment(&seg_ref);
                let (closest, _) = seg.closest_point(&tip.position);
                neighbors.push((tip.position.midpoint(&closest), seg.folded_azimuth()));
            }
        }
        neighbors.sort_by(|a, b| {
            tip.position
                .dist(&a.0)
                .partial_cmp(&tip.position.dist(&b.0))
                .unwrap()
        });
        neighbors.truncate(self.max_neighbors);
        neighbors
    }

    fn grow_step(&mut self, tip_idx: usize, run_seed: u64, iteration: u64) {
        let tip = self.tips[tip_idx].clone();
        let mut rng = substream(
            run_seed,
            &[tip.trace as u64, tip.side as u64, iteration],
        );

        let neighbors = self.gather_neighbors(&tip);
        let folded = if neighbors.len() <= 1 {
            self.space.unconditional_draw(&mut rng)
        } else {
            let points: Vec<(Point, f64)> = neighbors
                .iter()
                .map(|(p, az)| (*p, self.space.encode(*az)))
                .collect();
            match kriging::solve(
                &points,
                tip.position,
                &self.model,
                self.method,
                self.space.prior_mean(),
            ) {
                Ok(res) => {
                    if res.clamped {
                        self.clamp_count += 1;
                    }
                    let score = kriging::local_gaussian_draw(&res, &mut rng);
                    self.space.decode(score)
                }
                Err(_) => {
                    self.fallback_count += 1;
                    self.space.unconditional_draw(&mut rng)
                }
            }
        };

        // Momentum unfold: stay within 90 degrees of the travel direction.
        let candidate_a = folded;
        let candidate_b = wrap_360(folded + 180.0);
        let azimuth = if angular_diff(candidate_a, tip.azimuth)
            <= angular_diff(candidate_b, tip.azimuth)
        {
            candidate_a
        } else {
            candidate_b
        };

        self.extend_tip(tip_idx, azimuth, self.segment_length);
    }

    /// Extend a tip by one candidate segment, applying boundary clipping,
    /// intersection truncation, and the length limit.
    fn extend_tip(&mut self, tip_idx: usize, azimuth: f64, length: f64) {
        let tip = self.tips[tip_idx].clone();
        let eps = self.net.eps;
        let (dx, dy) = direction(azimuth);
        let raw_end = Point {
            x: tip.position.x + dx * length,
            y: tip.position.y + dy * length,
        };
        let (end, clipped) = self.net.domain.clip_from_inside(&tip.position, &raw_end);
        if end.dist(&tip.position) <= eps {
            self.terminate(tip_idx, TerminationReason::Boundary);
            return;
        }
        let candidate = Segment::new(tip.position, end).expect("nonzero by eps check");

        // First crossing with any existing segment. Contacts of the tip's own
        // trace at the hinge (the tip position itself) are not crossings.
        let mid = candidate.midpoint();
        let mut hit: Option<(f64, Point)> = None;
        for r in self.net.candidates_near(&mid, candidate.length / 2.0 + eps) {
            if let Some(p) = crate::geometry::segment_intersect(&candidate, self.net.segment(&r), eps)
            {
                let d = tip.position.dist(&p);
                if r.trace == tip.trace && d <= eps {
                    continue;
                }
                if hit.is_none_or(|(hd, _)| d < hd) {
                    hit = Some((d, p));
                }
            }
        }

        if let Some((d, p)) = hit {
            if d > eps {
                let seg = Segment::new(tip.position, p).expect("d > eps");
                self.net.push_segment(tip.trace, tip.side, seg);
                self.tips[tip_idx].accumulated += d;
            }
            self.tips[tip_idx].position = p;
            self.terminate(tip_idx, TerminationReason::Intersection);
            return;
        }

        if let Some(limit) = self.max_trace_length {
            if tip.accumulated + length > limit {
                self.terminate(tip_idx, TerminationReason::LengthLimit);
                return;
            }
        }

        self.net.push_segment(tip.trace, tip.side, candidate);
        let t = &mut self.tips[tip_idx];
        t.position = end;
        t.azimuth = azimuth;
        t.accumulated += candidate.length;
        if clipped {
            self.terminate(tip_idx, TerminationReason::Boundary);
        }
    }
}
