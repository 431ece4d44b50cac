//! Planar convex polygons: half-plane clipping, convex hull, containment.

use serde::{Deserialize, Serialize};

const MERGE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn close(a: Point, b: Point) -> bool {
    (a.x - b.x).abs() <= MERGE_EPS && (a.y - b.y).abs() <= MERGE_EPS
}

/// `{ p : nx·p.x + ny·p.y ≤ c }`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub nx: f64,
    pub ny: f64,
    pub c: f64,
}

impl HalfPlane {
    pub fn new(nx: f64, ny: f64, c: f64) -> Self {
        HalfPlane { nx, ny, c }
    }

    fn excess(&self, p: Point) -> f64 {
        self.nx * p.x + self.ny * p.y - self.c
    }
}

/// Clip a convex polygon (counterclockwise) by one half-plane.
pub fn clip(poly: &[Point], h: &HalfPlane) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (ec, en) = (h.excess(cur), h.excess(next));
        if ec <= 0.0 {
            out.push(cur);
        }
        if (ec < 0.0 && en > 0.0) || (ec > 0.0 && en < 0.0) {
            let t = ec / (ec - en);
            out.push(Point::new(cur.x + t * (next.x - cur.x), cur.y + t * (next.y - cur.y)));
        }
    }
    dedup(out)
}

fn dedup(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|q| !close(*q, p)) {
            out.push(p);
        }
    }
    while out.len() > 1 && close(out[0], *out.last().unwrap()) {
        out.pop();
    }
    out
}

/// Intersect half-planes inside the box `[lo, hi]²`.
pub fn intersect_half_planes(planes: &[HalfPlane], lo: f64, hi: f64) -> Vec<Point> {
    let mut poly = vec![
        Point::new(lo, lo),
        Point::new(hi, lo),
        Point::new(hi, hi),
        Point::new(lo, hi),
    ];
    for h in planes {
        poly = clip(&poly, h);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Counterclockwise convex hull starting from the lowest-leftmost point.
/// Collinear points are dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let mut uniq: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        if uniq.last().is_none_or(|q| !close(*q, p)) {
            uniq.push(p);
        }
    }
    if uniq.len() <= 2 {
        return uniq;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &uniq {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in uniq.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.x + t * dx, a.y + t * dy);
    ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()
}

/// Point inside a convex counterclockwise polygon inflated by `slack`.
pub fn polygon_contains(poly: &[Point], p: Point, slack: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => segment_distance(p, poly[0], poly[0]) <= slack,
        2 => segment_distance(p, poly[0], poly[1]) <= slack,
        n => (0..n).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
            cross(a, b, p) / len >= -slack
        }),
    }
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pentagon_from_half_planes() {
        let planes = [
            HalfPlane::new(1.0, 0.0, 1.0),
            HalfPlane::new(0.0, 1.0, 1.0),
            HalfPlane::new(1.0, 1.0, 1.5),
        ];
        let poly = intersect_half_planes(&planes, 0.0, 3.0);
        assert_eq!(poly.len(), 5);
        assert!((polygon_area(&poly) - 0.875).abs() < 1e-12);
        assert!(polygon_contains(&poly, Point::new(1.0, 0.5), 1e-9));
        assert!(!polygon_contains(&poly, Point::new(1.0, 0.6), 1e-9));
    }

    #[test]
    fn degenerate_box() {
        let planes = [HalfPlane::new(1.0, 0.0, 0.0), HalfPlane::new(0.0, 1.0, 0.0)];
        let poly = intersect_half_planes(&planes, 0.0, 1.0);
        assert_eq!(poly, vec![Point::new(0.0, 0.0)]);
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 2.0),
            Point::new(0.5, 0.5),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(
            hull,
            vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 2.0)]
        );
        assert!(polygon_area(&hull) > 0.0);
    }
}
