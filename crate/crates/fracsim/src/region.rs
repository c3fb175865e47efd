//! Domain rectangle and polygon regions (unknown-region masks, seeding areas).

use crate::geometry::Point;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        assert!(xmax > xmin && ymax > ymin, "empty rectangle");
        Rect { xmin, ymin, xmax, ymax }
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn diagonal(&self) -> f64 {
        (self.xmax - self.xmin).hypot(self.ymax - self.ymin)
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon::new(vec![
            Point { x: self.xmin, y: self.ymin },
            Point { x: self.xmax, y: self.ymin },
            Point { x: self.xmax, y: self.ymax },
            Point { x: self.xmin, y: self.ymax },
        ])
    }

    /// Clip the segment p0 -> p1 (p0 inside) to the rectangle. Returns the
    /// clipped far endpoint and whether clipping occurred.
    pub fn clip_from_inside(&self, p0: &Point, p1: &Point) -> (Point, bool) {
        debug_assert!(self.contains(p0));
        let dx = p1.x - p0.x;
        let dy = p1.y - p0.y;
        let mut t = 1.0f64;
        if dx > 0.0 {
            t = t.min((self.xmax - p0.x) / dx);
        } else if dx < 0.0 {
            t = t.min((self.xmin - p0.x) / dx);
        }
        if dy > 0.0 {
            t = t.min((self.ymax - p0.y) / dy);
        } else if dy < 0.0 {
            t = t.min((self.ymin - p0.y) / dy);
        }
        if t >= 1.0 {
            (*p1, false)
        } else {
            (Point { x: p0.x + t.max(0.0) * dx, y: p0.y + t.max(0.0) * dy }, true)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        assert!(vertices.len() >= 3, "polygon needs at least 3 vertices");
        Polygon { vertices }
    }

    pub fn bbox(&self) -> Rect {
        let mut xmin = f64::INFINITY;
        let mut ymin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for v in &self.vertices {
            xmin = xmin.min(v.x);
            ymin = ymin.min(v.y);
            xmax = xmax.max(v.x);
            ymax = ymax.max(v.y);
        }
        Rect::new(xmin, ymin, xmax, ymax)
    }

    /// Shoelace area (absolute value).
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        acc.abs() / 2.0
    }

    /// Ray-casting point-in-polygon test. Boundary points count as inside.
    pub fn contains(&self, p: &Point) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            // On-edge check.
            let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            if cross.abs() < 1e-12 * (self.bbox().diagonal().max(1.0))
                && p.x >= a.x.min(b.x) - 1e-12
                && p.x <= a.x.max(b.x) + 1e-12
                && p.y >= a.y.min(b.y) - 1e-12
                && p.y <= a.y.max(b.y) + 1e-12
            {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_int = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_int {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Uniform sample by rejection from the bounding box.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Point {
        let bb = self.bbox();
        loop {
            let p = Point {
                x: rng.random_range(bb.xmin..bb.xmax),
                y: rng.random_range(bb.ymin..bb.ymax),
            };
            if self.contains(&p) {
                return p;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_clip() {
        let r = Rect::new(0.0, 0.0, 10.0, 10.0);
        let p0 = Point { x: 5.0, y: 5.0 };
        let (q, clipped) = r.clip_from_inside(&p0, &Point { x: 15.0, y: 5.0 });
        assert!(clipped && (q.x - 10.0).abs() < 1e-12);
        let (q, clipped) = r.clip_from_inside(&p0, &Point { x: 7.0, y: 7.0 });
        assert!(!clipped && q.x == 7.0);
    }

    #[test]
    fn polygon_contains_and_area() {
        let poly = Rect::new(0.0, 0.0, 4.0, 2.0).to_polygon();
        assert!((poly.area() - 8.0).abs() < 1e-12);
        assert!(poly.contains(&Point { x: 1.0, y: 1.0 }));
        assert!(!poly.contains(&Point { x: 5.0, y: 1.0 }));
        assert!(poly.contains(&Point { x: 0.0, y: 0.0 })); // boundary
    }

    #[test]
    fn sampling_stays_inside() {
        use rand::SeedableRng;
        let poly = Polygon::new(vec![
            Point { x: 0.0, y: 0.0 },
            Point { x: 10.0, y: 0.0 },
            Point { x: 5.0, y: 8.0 },
        ]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert!(poly.contains(&poly.sample_uniform(&mut rng)));
        }
    }
}
