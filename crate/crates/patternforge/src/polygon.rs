//! 2D polygon primitives: signed area, ear-clipping triangulation, and
//! intersection-over-union via exact clipping with a guarded rasterization
//! fallback.

use crate::error::{Error, Result};
use crate::geom::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplePolygon {
    /// Closed boundary; the first point is not repeated at the end.
    pub boundary: Vec<Vec2>,
}

impl SimplePolygon {
    pub fn new(boundary: Vec<Vec2>) -> Result<Self> {
        if boundary.len() < 3 {
            return Err(Error::Geometry("polygon needs >= 3 points".into()));
        }
        if boundary.iter().any(|p| !p.is_finite()) {
            return Err(Error::Geometry("non-finite polygon coordinate".into()));
        }
        let poly = SimplePolygon { boundary };
        if polygon_area(&poly) == 0.0 {
            return Err(Error::Geometry("polygon has zero area".into()));
        }
        Ok(poly)
    }

    /// CCW-oriented copy (reverses the boundary when the signed area is negative).
    pub fn ccw(&self) -> SimplePolygon {
        if polygon_area(self) < 0.0 {
            let mut b = self.boundary.clone();
            b.reverse();
            SimplePolygon { boundary: b }
        } else {
            self.clone()
        }
    }
}

/// Shoelace formula; CCW positive.
pub fn polygon_area(poly: &SimplePolygon) -> f64 {
    signed_area(&poly.boundary)
}

pub fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += a.cross(b);
    }
    acc * 0.5
}

// ---------------------------------------------------------------------------
// Ear clipping

fn tri_area2(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// Closed containment: points on the triangle boundary count as inside.
fn point_in_tri(p: Vec2, a: Vec2, b: Vec2, c: Vec2, orient: f64, eps: f64) -> bool {
    let d1 = tri_area2(a, b, p) * orient;
    let d2 = tri_area2(b, c, p) * orient;
    let d3 = tri_area2(c, a, p) * orient;
    d1 >= -eps && d2 >= -eps && d3 >= -eps
}

/// Ear-clipping triangulation of a simple polygon. Triangles index into the
/// input boundary and all have strictly positive area; their areas sum to the
/// polygon area. Collinear boundary runs are supported; a zero-area leftover
/// chain (possible once the region is fully covered) is dropped, so the
/// triangle count can fall below |points| - 2 in that case.
pub fn triangulate_polygon(poly: &SimplePolygon) -> Result<Vec<[usize; 3]>> {
    let pts = &poly.boundary;
    let n = pts.len();
    let total = polygon_area(poly);
    if total == 0.0 {
        return Err(Error::Geometry("degenerate polygon".into()));
    }
    let orient = total.signum();
    let area_floor = 1e-12 * total.abs();

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut triangles = Vec::with_capacity(n - 2);

    while remaining.len() > 3 {
        let m = remaining.len();
        // Only reflex vertices can invalidate an ear; testing them with
        // closed containment catches notch corners that sit exactly on the
        // ear's diagonal, while collinear boundary runs stay clippable.
        let reflex: Vec<bool> = (0..m)
            .map(|i| {
                let a = pts[remaining[(i + m - 1) % m]];
                let b = pts[remaining[i]];
                let c = pts[remaining[(i + 1) % m]];
                tri_area2(a, b, c) * orient < -area_floor
            })
            .collect();
        let mut clipped = false;
        for i in 0..m {
            let ia = remaining[(i + m - 1) % m];
            let ib = remaining[i];
            let ic = remaining[(i + 1) % m];
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            let area2 = tri_area2(a, b, c) * orient;
            if area2 <= 2.0 * area_floor {
                continue; // reflex or degenerate corner
            }
            let blocked = (0..m).any(|jp| {
                let j = remaining[jp];
                reflex[jp]
                    && j != ia
                    && j != ib
                    && j != ic
                    && point_in_tri(pts[j], a, b, c, orient, area_floor)
            });
            if blocked {
                continue;
            }
            triangles.push([ia, ib, ic]);
            remaining.remove(i);
            clipped = true;
            break;
        }
        if !clipped {
            let leftover: Vec<Vec2> = remaining.iter().map(|&i| pts[i]).collect();
            if signed_area(&leftover).abs() <= 1e-9 * total.abs() {
                return Ok(triangles); // collinear remainder, region already covered
            }
            return Err(Error::Geometry(
                "no ear found; boundary is likely self-intersecting".into(),
            ));
        }
    }
    let [ia, ib, ic] = [remaining[0], remaining[1], remaining[2]];
    if tri_area2(pts[ia], pts[ib], pts[ic]) * orient > 2.0 * area_floor {
        triangles.push([ia, ib, ic]);
    }
    Ok(triangles)
}

// ---------------------------------------------------------------------------
// Intersection over union

/// Clip a (possibly concave) subject polygon against a convex clip polygon
/// (Sutherland-Hodgman). Both CCW. Returns the clipped vertex ring.
fn clip_against_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut output = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let input = std::mem::take(&mut output);
        let inside = |p: Vec2| tri_area2(a, b, p) >= 0.0;
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let next = input[(j + 1) % k];
            let cur_in = inside(cur);
            let next_in = inside(next);
            if cur_in {
                output.push(cur);
            }
            if cur_in != next_in {
                // Intersection of segment (cur, next) with line (a, b).
                let d = next.sub(cur);
                let denom = d.cross(b.sub(a));
                let t = a.sub(cur).cross(b.sub(a)) / denom;
                output.push(cur.add(d.scale(t)));
            }
        }
    }
    output
}

/// Area of intersection of two simple polygons: triangulate `a` and sum the
/// clipped area of `b` against each (convex) triangle.
pub fn intersection_area(a: &SimplePolygon, b: &SimplePolygon) -> Result<f64> {
    let a = a.ccw();
    let b = b.ccw();
    let tris = triangulate_polygon(&a)?;
    let mut acc = 0.0;
    for t in tris {
        let tri = [a.boundary[t[0]], a.boundary[t[1]], a.boundary[t[2]]];
        let clipped = clip_against_convex(&b.boundary, &tri);
        if clipped.len() >= 3 {
            acc += signed_area(&clipped);
        }
    }
    Ok(acc)
}

/// Intersection over union by exact polygon clipping; falls back to 2048^2
/// rasterization when the clipped result is numerically degenerate.
pub fn polygon_iou(a: &SimplePolygon, b: &SimplePolygon) -> Result<f64> {
    let area_a = polygon_area(a).abs();
    let area_b = polygon_area(b).abs();
    let inter = match intersection_area(a, b) {
        Ok(v) => v,
        Err(_) => {
            eprintln!("warning: exact polygon clip failed; using rasterization fallback");
            return raster_iou(a, b, 2048);
        }
    };
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    let iou = inter / union;
    if !iou.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&iou) {
        eprintln!("warning: degenerate polygon clip (iou={iou}); using rasterization fallback");
        return raster_iou(a, b, 2048);
    }
    Ok(iou.clamp(0.0, 1.0))
}

/// Rasterized IoU on a res x res grid over the joint bounding box, sampling
/// pixel centers with even-odd crossing counts per scanline. Serves both as
/// the guarded fallback and as the independent oracle for the clipping path.
pub fn raster_iou(a: &SimplePolygon, b: &SimplePolygon, res: usize) -> Result<f64> {
    let all = a.boundary.iter().chain(b.boundary.iter());
    let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
    for p in all {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-30);
    let step = span / res as f64;
    let mut inter = 0u64;
    let mut union = 0u64;
    let mut xs_a = Vec::new();
    let mut xs_b = Vec::new();
    for iy in 0..res {
        let y = lo.y + (iy as f64 + 0.5) * step;
        scanline_crossings(&a.boundary, y, &mut xs_a);
        scanline_crossings(&b.boundary, y, &mut xs_b);
        if xs_a.is_empty() && xs_b.is_empty() {
            continue;
        }
        for ix in 0..res {
            let x = lo.x + (ix as f64 + 0.5) * step;
            let in_a = parity(&xs_a, x);
            let in_b = parity(&xs_b, x);
            inter += (in_a && in_b) as u64;
            union += (in_a || in_b) as u64;
        }
    }
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

fn scanline_crossings(pts: &[Vec2], y: f64, xs: &mut Vec<f64>) {
    xs.clear();
    let n = pts.len();
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        if (p.y <= y) != (q.y <= y) {
            xs.push(p.x + (y - p.y) / (q.y - p.y) * (q.x - p.x));
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
}

fn parity(xs: &[f64], x: f64) -> bool {
    xs.iter().filter(|&&c| c > x).count() % 2 == 1
}
