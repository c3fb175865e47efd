//! 2-D primitives: points, directed segments, polyline traces, sectors and a
//! uniform-grid spatial index.
//!
//! Azimuths are degrees clockwise from north (map convention), stored in
//! `[0, 360)`. The conversion to math angles is `theta = 90 - azimuth`, so a
//! unit step along azimuth `a` is `(sin a, cos a)`.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("degenerate zero-length segment at ({0}, {1})")]
    ZeroLength(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(GeometryError::NonFinite(x, y));
        }
        Ok(Point { x, y })
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        Point {
            x: 0.5 * (self.x + other.x),
            y: 0.5 * (self.y + other.y),
        }
    }
}

/// Azimuth of the direction from `start` to `end`, degrees CW from north in [0, 360).
pub fn azimuth_of(start: &Point, end: &Point) -> f64 {
    let az = (end.x - start.x).atan2(end.y - start.y).to_degrees();
    wrap_360(az)
}

/// Unit direction vector for an azimuth.
pub fn direction(azimuth_deg: f64) -> (f64, f64) {
    let r = azimuth_deg.to_radians();
    (r.sin(), r.cos())
}

pub fn wrap_360(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w == 360.0 {
        0.0
    } else {
        w
    }
}

/// Smallest angular difference between two azimuths on the circle, in [0, 180].
pub fn angular_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    pub azimuth: f64,
    pub length: f64,
}

impl Segment {
    pub fn new(start: Point, end: Point) -> Result<Self, GeometryError> {
        let length = start.dist(&end);
        if length <= 0.0 {
            return Err(GeometryError::ZeroLength(start.x, start.y));
        }
        Ok(Segment {
            start,
            end,
            azimuth: azimuth_of(&start, &end),
            length,
        })
    }

    pub fn midpoint(&self) -> Point {
        self.start.midpoint(&self.end)
    }

    /// Orientation of the segment folded to [0, 180).
    pub fn folded_azimuth(&self) -> f64 {
        self.azimuth.rem_euclid(180.0)
    }

    /// Closest point on the segment to `p` and its distance.
    pub fn closest_point(&self, p: &Point) -> (Point, f64) {
        let dx = self.end.x - self.start.x;
        let dy = self.end.y - self.start.y;
        let len2 = dx * dx + dy * dy;
        let t = (((p.x - self.start.x) * dx + (p.y - self.start.y) * dy) / len2).clamp(0.0, 1.0);
        let c = Point {
            x: self.start.x + t * dx,
            y: self.start.y + t * dy,
        };
        let d = c.dist(p);
        (c, d)
    }

    pub fn bbox(&self) -> (Point, Point) {
        (
            Point {
                x: self.start.x.min(self.end.x),
                y: self.start.y.min(self.end.y),
            },
            Point {
                x: self.start.x.max(self.end.x),
                y: self.start.y.max(self.end.y),
            },
        )
    }
}

/// Which growth chain of a trace a segment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Known,
    Simulated,
}

/// A fracture trace: two chained segment lists growing away from `origin`.
///
/// Known traces loaded from files hold their whole polyline on side A with
/// `origin` at the first vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trace {
    pub origin: Point,
    pub kind: TraceKind,
    pub side_a: Vec<Segment>,
    pub side_b: Vec<Segment>,
}

impl Trace {
    pub fn from_polyline(vertices: &[Point], kind: TraceKind) -> Result<Self, GeometryError> {
        assert!(vertices.len() >= 2, "polyline needs at least 2 vertices");
        let mut side_a = Vec::with_capacity(vertices.len() - 1);
        for w in vertices.windows(2) {
            side_a.push(Segment::new(w[0], w[1])?);
        }
        Ok(Trace {
            origin: vertices[0],
            kind,
            side_a,
            side_b: Vec::new(),
        })
    }

    pub fn side(&self, side: Side) -> &[Segment] {
        match side {
            Side::A => &self.side_a,
            Side::B => &self.side_b,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.side_a.iter().chain(self.side_b.iter())
    }

    pub fn segment_count(&self) -> usize {
        self.side_a.len() + self.side_b.len()
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|s| s.length).sum()
    }

    /// Point at half the total arc length, walking side B end -> origin -> side A end.
    pub fn arc_midpoint(&self) -> Point {
        let total = self.length();
        if total == 0.0 {
            return self.origin;
        }
        let mut remaining = total / 2.0;
        // Walk from the side-B tip towards the side-A tip.
        for seg in self.side_b.iter().rev() {
            if remaining <= seg.length {
                let t = 1.0 - remaining / seg.length;
                return Point {
                    x: seg.start.x + t * (seg.end.x - seg.start.x),
                    y: seg.start.y + t * (seg.end.y - seg.start.y),
                };
            }
            remaining -= seg.length;
        }
        for seg in &self.side_a {
            if remaining <= seg.length {
                let t = remaining / seg.length;
                return Point {
                    x: seg.start.x + t * (seg.end.x - seg.start.x),
                    y: seg.start.y + t * (seg.end.y - seg.start.y),
                };
            }
            remaining -= seg.length;
        }
        self.side_a
            .last()
            .map(|s| s.end)
            .unwrap_or(self.origin)
    }

    /// Folded azimuth of the segment containing the arc midpoint.
    pub fn midpoint_azimuth(&self) -> f64 {
        let total = self.length();
        let mut remaining = total / 2.0;
        for seg in self.side_b.iter().rev() {
            if remaining <= seg.length {
                return seg.folded_azimuth();
            }
            remaining -= seg.length;
        }
        for seg in &self.side_a {
            if remaining <= seg.length {
                return seg.folded_azimuth();
            }
            remaining -= seg.length;
        }
        self.side_a
            .last()
            .map(|s| s.folded_azimuth())
            .unwrap_or(0.0)
    }

    /// Vertices of the full polyline, side-B tip first.
    pub fn polyline(&self) -> Vec<Point> {
        let mut verts = Vec::with_capacity(self.segment_count() + 1);
        for seg in self.side_b.iter().rev() {
            verts.push(seg.end);
        }
        verts.push(self.origin);
        for seg in &self.side_a {
            verts.push(seg.end);
        }
        verts
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sector {
    pub apex: Point,
    pub center_azimuth: f64,
    pub half_angle: f64,
    pub radius: f64,
}

impl Sector {
    pub fn new(apex: Point, center_azimuth: f64, half_angle: f64, radius: f64) -> Self {
        debug_assert!(half_angle > 0.0 && half_angle < 90.0);
        debug_assert!(radius > 0.0);
        Sector {
            apex,
            center_azimuth,
            half_angle,
            radius,
        }
    }
}

/// True iff `p` lies within the sector's radius and angular span. The apex
/// itself is outside (its direction is undefined).
pub fn point_in_sector(p: &Point, s: &Sector) -> bool {
    let d = s.apex.dist(p);
    if d == 0.0 || d > s.radius {
        return false;
    }
    angular_diff(azimuth_of(&s.apex, p), s.center_azimuth) <= s.half_angle
}

/// Intersection of two segments, including endpoint contacts.
///
/// Collinear overlaps report the overlap point nearest to `a.start`. Callers
/// that must ignore the chained predecessor of the same trace exclude that
/// segment before calling.
pub fn segment_intersect(a: &Segment, b: &Segment, eps: f64) -> Option<Point> {
    let r = (a.end.x - a.start.x, a.end.y - a.start.y);
    let s = (b.end.x - b.start.x, b.end.y - b.start.y);
    let qp = (b.start.x - a.start.x, b.start.y - a.start.y);
    let rxs = r.0 * s.1 - r.1 * s.0;
    let qpxr = qp.0 * r.1 - qp.1 * r.0;
    let scale = a.length.max(b.length);
    if rxs.abs() <= eps * scale * scale {
        // Parallel. Check collinearity.
        if qpxr.abs() > eps * scale * scale {
            return None;
        }
        // Collinear: project b's endpoints on a's direction.
        let rlen2 = r.0 * r.0 + r.1 * r.1;
        let t0 = (qp.0 * r.0 + qp.1 * r.1) / rlen2;
        let t1 = t0 + (s.0 * r.0 + s.1 * r.1) / rlen2;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let tol = eps / a.length;
        if hi < -tol || lo > 1.0 + tol {
            return None;
        }
        let t = lo.clamp(0.0, 1.0);
        return Some(Point {
            x: a.start.x + t * r.0,
            y: a.start.y + t * r.1,
        });
    }
    let t = (qp.0 * s.1 - qp.1 * s.0) / rxs;
    let u = qpxr / rxs;
    let tol_t = eps / a.length;
    let tol_u = eps / b.length;
    if t < -tol_t || t > 1.0 + tol_t || u < -tol_u || u > 1.0 + tol_u {
        return None;
    }
    Some(Point {
        x: a.start.x + t.clamp(0.0, 1.0) * r.0,
        y: a.start.y + t.clamp(0.0, 1.0) * r.1,
    })
}

/// Identifies one segment of one trace within a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentRef {
    pub trace: usize,
    pub side: Side,
    pub index: usize,
}

/// Uniform-grid spatial index over segment bounding boxes.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell_size: f64,
    cells: HashMap<(i64, i64), Vec<SegmentRef>>,
}

impl SpatialIndex {
    pub fn new(cell_size: f64) -> Self {
        assert!(cell_size > 0.0 && cell_size.is_finite());
        SpatialIndex {
            cell_size,
            cells: HashMap::new(),
        }
    }

    fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            (x / self.cell_size).floor() as i64,
            (y / self.cell_size).floor() as i64,
        )
    }

    pub fn insert(&mut self, seg: &Segment, id: SegmentRef) {
        let (lo, hi) = seg.bbox();
        let (cx0, cy0) = self.cell_of(lo.x, lo.y);
        let (cx1, cy1) = self.cell_of(hi.x, hi.y);
        for cx in cx0..=cx1 {
            for cy in cy0..=cy1 {
                self.cells.entry((cx, cy)).or_default().push(id);
            }
        }
    }

    /// Candidate segments whose cell range overlaps the disk of radius `r`
    /// around `p`. Superset of the exact answer; sorted and deduplicated so
    /// results are deterministic.
    pub fn query_radius(&self, p: &Point, r: f64) -> Vec<SegmentRef> {
        let (cx0, cy0) = self.cell_of(p.x - r, p.y - r);
        let (cx1, cy1) = self.cell_of(p.x + r, p.y + r);
        let mut out = Vec::new();
        for cx in cx0..=cx1 {
            for cy in cy0..=cy1 {
                if let Some(v) = self.cells.get(&(cx, cy)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Candidates for a sector query: the disk superset around the apex.
    pub fn query_sector(&self, s: &Sector) -> Vec<SegmentRef> {
        self.query_radius(&s.apex, s.radius)
    }
}
