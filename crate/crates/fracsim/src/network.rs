//! The fracture network: traces, spatial index, and the conditioning cloud of
//! per-segment midpoints with folded azimuths.

use crate::geometry::{
    point_in_sector, Point, Sector, Segment, SegmentRef, Side, SpatialIndex, Trace,
};
use crate::region::Rect;
use std::collections::HashMap;

/// One conditioning datum: a segment midpoint carrying its folded azimuth.
#[derive(Debug, Clone, Copy)]
pub struct CloudPoint {
    pub pos: Point,
    pub folded_azimuth: f64,
    pub source: SegmentRef,
}

#[derive(Debug, Clone)]
pub struct FractureNetwork {
    pub domain: Rect,
    pub traces: Vec<Trace>,
    pub cloud: Vec<CloudPoint>,
    seg_index: SpatialIndex,
    cloud_cells: HashMap<(i64, i64), Vec<usize>>,
    cell_size: f64,
    /// Intersection tolerance: 1e-9 of the domain diagonal.
    pub eps: f64,
}

impl FractureNetwork {
    pub fn new(domain: Rect, cell_size: f64) -> Self {
        let cell = if cell_size.is_finite() && cell_size > 0.0 {
            cell_size
        } else {
            domain.diagonal() / 16.0
        };
        FractureNetwork {
            domain,
            traces: Vec::new(),
            cloud: Vec::new(),
            seg_index: SpatialIndex::new(cell),
            cloud_cells: HashMap::new(),
            cell_size: cell,
            eps: 1e-9 * domain.diagonal(),
        }
    }

    pub fn add_trace(&mut self, trace: Trace) -> usize {
        let id = self.traces.len();
        self.traces.push(trace);
        let trace = &self.traces[id];
        let mut pending = Vec::new();
        for side in [Side::A, Side::B] {
            for (index, seg) in trace.side(side).iter().enumerate() {
                pending.push((SegmentRef { trace: id, side, index }, *seg));
            }
        }
        for (r, seg) in pending {
            self.index_segment(&seg, r);
        }
        id
    }

    /// Append a freshly grown segment to a trace side.
    pub fn push_segment(&mut self, trace: usize, side: Side, seg: Segment) -> SegmentRef {
        let chain = match side {
            Side::A => &mut self.traces[trace].side_a,
            Side::B => &mut self.traces[trace].side_b,
        };
        let index = chain.len();
        chain.push(seg);
        let r = SegmentRef { trace, side, index };
        self.index_segment(&seg, r);
        r
    }

    fn index_segment(&mut self, seg: &Segment, r: SegmentRef) {
        self.seg_index.insert(seg, r);
        let id = self.cloud.len();
        let pos = seg.midpoint();
        self.cloud.push(CloudPoint { pos, folded_azimuth: seg.folded_azimuth(), source: r });
        let cell = (
            (pos.x / self.cell_size).floor() as i64,
            (pos.y / self.cell_size).floor() as i64,
        );
        self.cloud_cells.entry(cell).or_default().push(id);
    }

    pub fn segment(&self, r: &SegmentRef) -> &Segment {
        &self.traces[r.trace].side(r.side)[r.index]
    }

    pub fn total_segments(&self) -> usize {
        self.traces.iter().map(|t| t.segment_count()).sum()
    }

    pub fn segment_refs(&self) -> impl Iterator<Item = SegmentRef> + '_ {
        self.traces.iter().enumerate().flat_map(|(trace, t)| {
            [Side::A, Side::B].into_iter().flat_map(move |side| {
                (0..t.side(side).len()).map(move |index| SegmentRef { trace, side, index })
            })
        })
    }

    /// Candidate segments near a disk, exact filtering left to the caller.
    pub fn candidates_near(&self, p: &Point, radius: f64) -> Vec<SegmentRef> {
        self.seg_index.query_radius(p, radius)
    }

    /// Conditioning-cloud points inside the sector, sorted by distance to the
    /// apex (ties by cloud insertion order).
    pub fn cloud_in_sector(&self, sector: &Sector) -> Vec<usize> {
        let r = sector.radius;
        let cx0 = ((sector.apex.x - r) / self.cell_size).floor() as i64;
        let cy0 = ((sector.apex.y - r) / self.cell_size).floor() as i64;
        let cx1 = ((sector.apex.x + r) / self.cell_size).floor() as i64;
        let cy1 = ((sector.apex.y + r) / self.cell_size).floor() as i64;
        let mut hits = Vec::new();
        for cx in cx0..=cx1 {
            for cy in cy0..=cy1 {
                if let Some(ids) = self.cloud_cells.get(&(cx, cy)) {
                    for &id in ids {
                        if point_in_sector(&self.cloud[id].pos, sector) {
                            hits.push(id);
                        }
                    }
                }
            }
        }
        hits.sort_unstable_by(|a, b| {
            let da = self.cloud[*a].pos.dist(&sector.apex);
            let db = self.cloud[*b].pos.dist(&sector.apex);
            da.partial_cmp(&db).unwrap().then(a.cmp(b))
        });
        hits
    }

    /// Segment minimizing point-to-segment distance over all segments not in
    /// `exclude`, ties broken by lowest (trace, side, index). Expanding ring
    /// search over the index with a brute-force guarantee at the last ring.
    pub fn nearest_segment(
        &self,
        p: &Point,
        exclude: Option<usize>,
    ) -> Option<(SegmentRef, f64)> {
        let max_r = self.domain.diagonal() + self.cell_size;
        let mut radius = self.cell_size;
        loop {
            let candidates = self.seg_index.query_radius(p, radius);
            let mut best: Option<(SegmentRef, f64)> = None;
            for r in candidates {
                if Some(r.trace) == exclude {
                    continue;
                }
                let d = self.segment(&r).closest_point(p).1;
                best = match best {
                    Some((br, bd)) if (bd, br) <= (d, r) => Some((br, bd)),
                    _ => Some((r, d)),
                };
            }
            if let Some((r, d)) = best {
                // Accept only when no closer segment can hide outside the ring.
                if d <= radius || radius >= max_r {
                    return Some((r, d));
                }
            } else if radius >= max_r {
                return None;
            }
            radius *= 2.0;
        }
    }
}
